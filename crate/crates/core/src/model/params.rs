use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar coefficients of the one-asset market with a terminating income.
///
/// `lambda` is the market price of risk, `eta` the intensity of the
/// exponential income-termination time, `a` the income rate paid until
/// termination and `p` the power-utility exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketParams {
    pub r: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub delta: f64,
    pub eta: f64,
    pub a: f64,
    pub p: f64,
}

/// Constants derived from [`MarketParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Conjugate exponent `-p / (1 - p)`.
    pub q: f64,
    /// Merton consumption-to-wealth ratio.
    pub k: f64,
    /// Discount rate of the transformed pre-termination problem, `eta + delta`.
    pub alpha: f64,
}

impl Default for MarketParams {
    /// Reference data set: `lambda = 1`, `delta = 0.6`, `eta = 0.1`, `a = 0.2`, `p = 0.5`, `r = 0.05`.
    fn default() -> Self {
        MarketParams {
            r: 0.05,
            sigma: 0.1,
            lambda: 1.0,
            delta: 0.6,
            eta: 0.1,
            a: 0.2,
            p: 0.5,
        }
    }
}

fn require(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

impl MarketParams {
    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Field-level constraints only (no well-posedness).
    pub fn check_fields(&self) -> Result<()> {
        require(self.r > 0.0, "r", self.r, "must be > 0")?;
        require(self.sigma > 0.0, "sigma", self.sigma, "must be > 0")?;
        require(true, "lambda", self.lambda, "must be finite")?;
        require(self.delta > 0.0, "delta", self.delta, "must be > 0")?;
        require(self.eta >= 0.0, "eta", self.eta, "must be >= 0")?;
        require(self.a >= 0.0, "a", self.a, "must be >= 0")?;
        require(
            self.p > 0.0 && self.p < 1.0,
            "p",
            self.p,
            "must lie in (0, 1)",
        )?;
        Ok(())
    }

    /// `q`, `K` and `alpha`; fails unless `K > 0`.
    pub fn derive_constants(&self) -> Result<DerivedConstants> {
        self.check_fields()?;
        let p = self.p;
        let q = -p / (1.0 - p);
        let k = (self.delta - self.r * p + 0.5 * q * self.lambda * self.lambda) / (1.0 - p);
        if !(k > 0.0) {
            return Err(Error::WellPosedness { k });
        }
        Ok(DerivedConstants {
            q,
            k,
            alpha: self.eta + self.delta,
        })
    }

    /// Merton risky fraction `lambda / (sigma (1 - p))`.
    pub fn merton_fraction(&self) -> f64 {
        self.lambda / (self.sigma * (1.0 - self.p))
    }

    /// Present value of perpetual income, `a / r`.
    pub fn perpetual_income_value(&self) -> f64 {
        self.a / self.r
    }

    /// Present value of income up to the exponential termination, `a / (r + eta)`.
    pub fn terminating_income_value(&self) -> f64 {
        self.a / (self.r + self.eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_constants() {
        let d = MarketParams::default().derive_constants().unwrap();
        assert!((d.q + 1.0).abs() < 1e-15);
        assert!((d.k - 0.15).abs() < 1e-14);
        assert!((d.alpha - 0.7).abs() < 1e-15);
    }

    #[test]
    fn zero_price_of_risk() {
        let d = MarketParams::default()
            .with_lambda(0.0)
            .derive_constants()
            .unwrap();
        assert!((d.q + 1.0).abs() < 1e-15);
        assert!((d.k - 1.15).abs() < 1e-14);
    }

    #[test]
    fn k_zero_is_rejected() {
        let mut params = MarketParams::default().with_lambda(0.0);
        params.delta = 0.025;
        assert!(matches!(
            params.derive_constants(),
            Err(Error::WellPosedness { .. })
        ));
    }

    #[test]
    fn negative_k_from_small_impatience() {
        let params = MarketParams {
            delta: 0.02,
            ..MarketParams::default()
        };
        match params.derive_constants() {
            Err(Error::WellPosedness { k }) => {
                assert!((k - 2.0 * (0.02 - 0.025 - 0.5)).abs() < 1e-12)
            }
            other => panic!("expected WellPosedness, got {other:?}"),
        }
    }

    #[test]
    fn field_violations() {
        let params = MarketParams {
            p: 1.5,
            ..MarketParams::default()
        };
        assert!(matches!(
            params.derive_constants(),
            Err(Error::InvalidParameter { name: "p", .. })
        ));
        let params = MarketParams::default().with_r(0.0);
        assert!(matches!(
            params.derive_constants(),
            Err(Error::InvalidParameter { name: "r", .. })
        ));
    }
}
