use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::ValueEnum;

use tidual_core::hjb::write_solution_csv;
use tidual_core::{
    extract_feedback, merton_feedback, merton_value, perpetual_value, run_report,
    simulate_ensemble, solve_hjb, sweep_sensitivity, ControlSpec, DeflatorSpec, FeedbackPolicy,
    IncomeShift, SensitivityTable, ValueSolution,
};

use crate::artifacts::ArtifactWriter;
use crate::config::RunConfig;
use crate::svg::{self, Plot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Value function and feedback policy on the wealth grid.
    Solve,
    /// Monte Carlo ensemble under the solved policy.
    Simulate,
    /// Full duality report.
    Verify,
    /// `u1(0)` and `c1(0)` over the `(a, eta)` table.
    Sweep,
    /// Figure data for the value function, sensitivity and feedback controls.
    Figures,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Figures => "figures",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<String>,
    /// Names of failed hard checks (`verify` only).
    pub hard_failures: Vec<String>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.hard_failures.is_empty()
    }
}

struct Stages<'a> {
    out: &'a mut ArtifactWriter,
    current: &'static str,
}

impl Stages<'_> {
    fn enter(&mut self, stage: &'static str) {
        log::info!("stage {stage}");
        self.current = stage;
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        self.out
            .write(name, bytes)
            .with_context(|| format!("writing {name}"))
    }
}

/// Runs `cmd` and writes its artifacts and MANIFEST into `cfg.output_dir`.
///
/// Errors and hard-check failures leave the files written so far in place,
/// with the MANIFEST status naming the stage that failed.
pub fn run(cmd: Command, cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let mut out = ArtifactWriter::create(&cfg.output_dir, cmd.name())
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let mut st = Stages {
        out: &mut out,
        current: "setup",
    };
    let result = match cmd {
        Command::Solve => solve(cfg, &mut st).map(|_| Vec::new()),
        Command::Simulate => simulate(cfg, &mut st).map(|_| Vec::new()),
        Command::Verify => verify(cfg, &mut st),
        Command::Sweep => sweep(cfg, &mut st).map(|_| Vec::new()),
        Command::Figures => figures(cfg, &mut st).map(|_| Vec::new()),
    };
    let stage = st.current;
    match result {
        Ok(hard_failures) => {
            if hard_failures.is_empty() {
                out.finish()?;
            } else {
                out.fail(
                    stage,
                    &format!("hard checks failed: {}", hard_failures.join(", ")),
                )?;
            }
            Ok(Outcome {
                files: out.files().map(str::to_string).collect(),
                hard_failures,
            })
        }
        Err(e) => {
            out.fail(stage, &format!("{e:#}"))?;
            Err(e.context(format!("{} failed at {stage}", cmd.name())))
        }
    }
}

fn solved(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<(ValueSolution, FeedbackPolicy)> {
    st.enter("solve");
    let sol = solve_hjb(&cfg.params, &cfg.grid.build()?)?;
    let policy = extract_feedback(&sol, &cfg.params)?;
    Ok((sol, policy))
}

fn solve(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<()> {
    let (sol, policy) = solved(cfg, st)?;
    st.enter("emit");
    sol.check_invariants()?;
    let mut csv = Vec::new();
    write_solution_csv(&mut csv, &sol, &policy)?;
    st.emit("solution.csv", &csv)
}

fn simulate(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<()> {
    let (sol, policy) = solved(cfg, st)?;
    st.enter("simulate");
    let x = cfg.verify.x;
    let deflator = DeflatorSpec::new(0.0, sol.marginal_at(x)?)?;
    let control = ControlSpec::RegimeSwitch {
        pre: Arc::new(policy),
    };
    let ens = simulate_ensemble(x, control, deflator, &cfg.params, &cfg.sim)?;
    let every = ((1.0 / cfg.sim.dt).round() as usize).max(1);
    let nodes: Vec<usize> = (0..=ens.n_steps()).step_by(every).collect();
    let stats = ens.moments(4 * nodes.len(), |path, out| {
        for (k, &j) in nodes.iter().enumerate() {
            let y = ens.deflator_at(path, j, &deflator);
            out[4 * k] = path.wealth[j];
            out[4 * k + 1] = y * path.wealth[j];
            out[4 * k + 2] = path.income_indicator(ens.time(j));
            out[4 * k + 3] = if path.is_absorbed(j) { 1.0 } else { 0.0 };
        }
    });
    st.enter("emit");
    let mut csv = String::from(
        "t,wealth_mean,wealth_se,deflated_wealth_mean,deflated_wealth_se,income_fraction,absorbed_fraction\n",
    );
    for (k, &j) in nodes.iter().enumerate() {
        let m = &stats[4 * k..4 * k + 4];
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            ens.time(j),
            m[0].mean,
            m[0].std_error(),
            m[1].mean,
            m[1].std_error(),
            m[2].mean,
            m[3].mean
        ));
    }
    st.emit("ensemble.csv", csv.as_bytes())
}

fn verify(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<Vec<String>> {
    let (sol, policy) = solved(cfg, st)?;
    st.enter("verify");
    let report = run_report(&sol, &policy, &cfg.sim, &cfg.verify)?;
    st.enter("emit");
    let mut text = Vec::new();
    report.write_text(&mut text)?;
    st.emit("report.txt", &text)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    st.emit("report.csv", &csv)?;
    st.enter("verify");
    Ok(report.hard_failures().map(|c| c.name.clone()).collect())
}

fn sweep(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<()> {
    st.enter("sweep");
    let s = cfg.sweep_or_default();
    let table = sweep_sensitivity(&cfg.params, &s.a_values, &s.eta_values, &cfg.grid.build()?)?;
    st.enter("emit");
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    st.emit("sensitivity.csv", &csv)
}

fn sensitivity_csv(table: &SensitivityTable, by_a: bool) -> String {
    let mut csv = String::from(if by_a {
        "a,u1_0,c1_0\n"
    } else {
        "eta,u1_0,c1_0\n"
    });
    let cells: Vec<(f64, f64, f64)> = if by_a {
        (0..table.a_values.len())
            .map(|i| (table.a_values[i], table.u1_0[i][0], table.c1_0[i][0]))
            .collect()
    } else {
        (0..table.eta_values.len())
            .map(|j| (table.eta_values[j], table.u1_0[0][j], table.c1_0[0][j]))
            .collect()
    };
    for (v, u, c) in cells {
        csv.push_str(&format!("{v},{u},{c}\n"));
    }
    csv
}

fn figures(cfg: &RunConfig, st: &mut Stages) -> anyhow::Result<()> {
    let (sol, policy) = solved(cfg, st)?;
    let p = &cfg.params;
    st.enter("figures");
    let mut value = String::from("x,u1,u0,u_inf\n");
    let mut consumption = String::from("x,c1,c0,c_inf\n");
    let mut portfolio = String::from("x,pi1,pi0,pi_inf\n");
    for i in (0..sol.len()).rev() {
        let x = sol.grid.node(i);
        let none = merton_feedback(x, p, IncomeShift::None)?;
        let perp = merton_feedback(x, p, IncomeShift::Perpetual)?;
        value.push_str(&format!(
            "{x},{},{},{}\n",
            sol.u1[i],
            merton_value(x, p)?,
            perpetual_value(x, p)?
        ));
        consumption.push_str(&format!("{x},{},{},{}\n", policy.c1[i], none.c, perp.c));
        portfolio.push_str(&format!("{x},{},{},{}\n", policy.pi1[i], none.pi, perp.pi));
    }
    let s = cfg.sweep_or_default();
    let grid = cfg.grid.build()?;
    let by_a = sweep_sensitivity(p, &s.a_values, &[p.eta], &grid)?;
    let by_eta = sweep_sensitivity(p, &[p.a], &s.eta_values, &grid)?;

    st.enter("emit");
    let panels = [
        (
            "fig1a_value",
            value,
            "Value function",
            "x",
            vec!["u1", "u0", "u_inf"],
            Some((0.0, 3.0)),
        ),
        (
            "fig1b_vs_a",
            sensitivity_csv(&by_a, true),
            "u1(0) against a",
            "a",
            vec!["u1_0"],
            None,
        ),
        (
            "fig1b_vs_eta",
            sensitivity_csv(&by_eta, false),
            "u1(0) against eta",
            "eta",
            vec!["u1_0"],
            None,
        ),
        (
            "fig2a_consumption",
            consumption,
            "Feedback consumption",
            "x",
            vec!["c1", "c0", "c_inf"],
            Some((0.0, 0.5)),
        ),
        (
            "fig2b_portfolio",
            portfolio,
            "Feedback investment",
            "x",
            vec!["pi1", "pi0", "pi_inf"],
            Some((0.0, 0.5)),
        ),
    ];
    for (name, csv, _, _, _, _) in &panels {
        st.emit(&format!("{name}.csv"), csv.as_bytes())?;
    }
    if cfg.emit_svg {
        st.enter("svg");
        for (name, csv, title, x_label, cols, range) in &panels {
            let table = svg::parse_csv(csv).map_err(|e| anyhow!("{name}.csv: {e}"))?;
            let x_col = table.header[0].clone();
            let doc = svg::render(
                &table,
                &Plot {
                    title,
                    x_label,
                    x_col: &x_col,
                    y_cols: cols,
                    x_range: *range,
                },
            )
            .map_err(|e| anyhow!("{name}.svg: {e}"))?;
            st.emit(&format!("{name}.svg"), doc.as_bytes())?;
        }
    }
    Ok(())
}
