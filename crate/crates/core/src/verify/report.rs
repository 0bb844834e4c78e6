use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

/// How a failed check affects the overall verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// Failure makes the run fail.
    Hard,
    /// Pass/fail at a stated tolerance; reported without failing the run.
    Tolerance,
    /// Magnitude reported only; `pass` is informational.
    Reported,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Hard => "hard",
            Severity::Tolerance => "tolerance",
            Severity::Reported => "reported",
        }
    }
}

/// One verified relation. `pass` holds iff `statistic <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// The relation under test, in words.
    pub relation: String,
    pub severity: Severity,
    pub statistic: f64,
    /// Standard error of the statistic, or the deterministic tolerance.
    pub standard_error: f64,
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

impl CheckResult {
    pub fn new(
        name: impl Into<String>,
        relation: impl Into<String>,
        severity: Severity,
        statistic: f64,
        standard_error: f64,
        threshold: f64,
    ) -> Self {
        CheckResult {
            name: name.into(),
            relation: relation.into(),
            severity,
            statistic,
            standard_error,
            threshold,
            pass: statistic <= threshold,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn is_hard_failure(&self) -> bool {
        self.severity == Severity::Hard && !self.pass
    }
}

/// Collected checks plus run metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DualityReport {
    pub checks: Vec<CheckResult>,
    pub metadata: BTreeMap<String, String>,
}

impl DualityReport {
    pub fn push(&mut self, check: CheckResult) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = CheckResult>) {
        self.checks.extend(checks);
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.is_hard_failure())
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    /// `key = value` lines: metadata in key order, then checks in insertion
    /// order with fields in a fixed order.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "meta.{k} = {v}")?;
        }
        for c in &self.checks {
            let key = format!("check.{}", c.name);
            writeln!(out, "{key}.relation = {}", c.relation)?;
            writeln!(out, "{key}.severity = {}", c.severity.as_str())?;
            writeln!(out, "{key}.statistic = {}", c.statistic)?;
            writeln!(out, "{key}.standard_error = {}", c.standard_error)?;
            writeln!(out, "{key}.threshold = {}", c.threshold)?;
            writeln!(out, "{key}.pass = {}", c.pass)?;
            if !c.note.is_empty() {
                writeln!(out, "{key}.note = {}", c.note)?;
            }
        }
        writeln!(out, "summary.hard_pass = {}", self.all_hard_pass())
    }

    /// `name,severity,statistic,standard_error,threshold,pass`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "name,severity,statistic,standard_error,threshold,pass")?;
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.name,
                c.severity.as_str(),
                c.statistic,
                c.standard_error,
                c.threshold,
                c.pass
            )?;
        }
        Ok(())
    }
}

/// 64-bit FNV-1a digest as 16 hex digits.
pub fn fingerprint(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_within_threshold() {
        assert!(CheckResult::new("a", "r", Severity::Hard, 1.0, 0.0, 1.0).pass);
        assert!(!CheckResult::new("a", "r", Severity::Hard, 1.0 + 1e-12, 0.0, 1.0).pass);
        assert!(!CheckResult::new("a", "r", Severity::Hard, f64::NAN, 0.0, 1.0).pass);
    }

    #[test]
    fn only_hard_failures_fail_the_report() {
        let mut r = DualityReport::default();
        r.push(CheckResult::new(
            "soft",
            "r",
            Severity::Tolerance,
            2.0,
            0.1,
            1.0,
        ));
        assert!(r.all_hard_pass());
        r.push(CheckResult::new("hard", "r", Severity::Hard, 2.0, 0.0, 1.0));
        assert!(!r.all_hard_pass());
        assert_eq!(r.hard_failures().count(), 1);
    }

    #[test]
    fn text_is_stable() {
        let mut r = DualityReport::default();
        r.set_meta("seed", 42);
        r.set_meta("alpha", "x");
        r.push(CheckResult::new("c", "u <= v", Severity::Hard, 0.5, 0.0, 1.0).with_note("n"));
        let mut a = Vec::new();
        r.write_text(&mut a).unwrap();
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("meta.alpha = x\nmeta.seed = 42\ncheck.c.relation = u <= v\n"));
        assert!(text.ends_with("check.c.note = n\nsummary.hard_pass = true\n"));
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "name,severity,statistic,standard_error,threshold,pass\nc,hard,0.5,0,1,true\n"
        );
    }

    #[test]
    fn fingerprint_known_values() {
        assert_eq!(fingerprint(""), "cbf29ce484222325");
        assert_eq!(fingerprint("a"), "af63dc4c8601ec8c");
    }
}
