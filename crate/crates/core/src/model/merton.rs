//! Closed forms for the no-income and perpetual-income Merton problems.

use crate::error::{Error, Result};
use crate::model::{MarketParams, PowerUtility};

/// Income shift applied to wealth in the Merton feedback maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncomeShift {
    /// No income: the `a -> 0` limit.
    None,
    /// Perpetual income worth `a / r`.
    Perpetual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertonPolicy {
    /// Consumption rate.
    pub c: f64,
    /// Wealth held in the stock.
    pub pi: f64,
}

/// `u0(x) = K^{-(1-p)} x^p / p`.
pub fn merton_value(x: f64, params: &MarketParams) -> Result<f64> {
    let k = params.derive_constants()?.k;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("Merton value needs x >= 0, got {x}")));
    }
    Ok(k.powf(-(1.0 - params.p)) * PowerUtility::new(params.p).value(x))
}

/// `u0'(x) = K^{-(1-p)} x^{p-1}`.
pub fn merton_marginal(x: f64, params: &MarketParams) -> Result<f64> {
    let k = params.derive_constants()?.k;
    if !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "Merton marginal needs x >= 0, got {x}"
        )));
    }
    Ok(k.powf(-(1.0 - params.p)) * x.powf(params.p - 1.0))
}

/// `u_inf(x) = u0(x + a/r)`, defined for `x > -a/r`.
pub fn perpetual_value(x: f64, params: &MarketParams) -> Result<f64> {
    let shifted = x + params.perpetual_income_value();
    if shifted < 0.0 || (params.a > 0.0 && shifted <= 0.0) {
        return Err(Error::Domain(format!(
            "perpetual-income value needs x > -a/r = {}, got {x}",
            -params.perpetual_income_value()
        )));
    }
    merton_value(shifted, params)
}

/// Linear Merton feedback `c = K (x + s)`, `pi = lambda/(sigma(1-p)) (x + s)`.
pub fn merton_feedback(x: f64, params: &MarketParams, shift: IncomeShift) -> Result<MertonPolicy> {
    let k = params.derive_constants()?.k;
    let s = match shift {
        IncomeShift::None => 0.0,
        IncomeShift::Perpetual => params.perpetual_income_value(),
    };
    let z = x + s;
    if !(z >= 0.0) {
        return Err(Error::Domain(format!(
            "Merton feedback needs x + shift >= 0, got {z}"
        )));
    }
    Ok(MertonPolicy {
        c: k * z,
        pi: params.merton_fraction() * z,
    })
}

/// Optimal perpetual-income wealth at `t` given the Black-Scholes deflator
/// value `Z_t`:
/// `X_t + a/r = (x + a/r) e^{(r-delta)(1-q) t} Z_t^{-(1-q)}`.
pub fn merton_wealth_closed_form(
    t: f64,
    bs_deflator: f64,
    x: f64,
    params: &MarketParams,
) -> Result<f64> {
    let q = params.derive_constants()?.q;
    if !(bs_deflator > 0.0) {
        return Err(Error::Domain(format!(
            "deflator must be positive, got {bs_deflator}"
        )));
    }
    let s = params.perpetual_income_value();
    if !(x + s > 0.0) {
        return Err(Error::Domain(format!("need x + a/r > 0, got {}", x + s)));
    }
    let growth = ((params.r - params.delta) * (1.0 - q) * t).exp();
    Ok((x + s) * growth * bs_deflator.powf(-(1.0 - q)) - s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base() -> MarketParams {
        MarketParams::default()
    }

    #[test]
    fn merton_value_examples() {
        let p = base();
        assert_eq!(merton_value(0.0, &p).unwrap(), 0.0);
        let one = merton_value(1.0, &p).unwrap();
        assert!((one - 2.0 / 0.15f64.sqrt()).abs() < 1e-12);
        assert!((one - 5.16398).abs() < 1e-5);
        assert!((merton_value(4.0, &p).unwrap() - 10.32796).abs() < 1e-5);
        assert!(merton_value(-1.0, &p).is_err());
    }

    #[test]
    fn perpetual_value_examples() {
        let p = base();
        assert!((perpetual_value(0.0, &p).unwrap() - merton_value(4.0, &p).unwrap()).abs() < 1e-14);
        let no_income = p.with_a(0.0);
        for x in [0.0, 0.3, 2.0, 17.0] {
            assert_eq!(
                perpetual_value(x, &no_income).unwrap(),
                merton_value(x, &no_income).unwrap()
            );
        }
        let near = perpetual_value(-4.0 + 1e-12, &p).unwrap();
        assert!(near > 0.0 && near < 1e-5);
        assert!(perpetual_value(-4.0, &p).is_err());
        assert!(perpetual_value(-5.0, &p).is_err());
    }

    #[test]
    fn feedback_examples() {
        let p = base();
        let pol = merton_feedback(1.0, &p, IncomeShift::None).unwrap();
        assert!((pol.c - 0.15).abs() < 1e-14);
        assert!((pol.pi - 20.0).abs() < 1e-12);
        let zero = merton_feedback(0.0, &p, IncomeShift::None).unwrap();
        assert_eq!((zero.c, zero.pi), (0.0, 0.0));
        let perp = merton_feedback(0.0, &p, IncomeShift::Perpetual).unwrap();
        assert!((perp.c - 0.6).abs() < 1e-14);
        assert!(merton_feedback(-0.1, &p, IncomeShift::None).is_err());
    }

    #[test]
    fn wealth_closed_form_examples() {
        let p = base();
        assert!((merton_wealth_closed_form(0.0, 1.0, 1.3, &p).unwrap() - 1.3).abs() < 1e-14);
        let no_income = p.with_a(0.0);
        let x1 = merton_wealth_closed_form(1.0, 1.0, 1.0, &no_income).unwrap();
        assert!((x1 - (2.0f64 * (0.05 - 0.6)).exp()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn merton_value_is_homogeneous(x in 1e-3f64..1e3, s in 1e-2f64..1e2) {
            let p = base();
            let lhs = merton_value(s * x, &p).unwrap();
            let rhs = s.powf(p.p) * merton_value(x, &p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
        }
    }
}
