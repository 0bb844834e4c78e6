use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::hjb::{extract_feedback, solve_hjb, WealthGrid};
use crate::model::MarketParams;

/// `u1(0)` and `c1(0)` over an `a` by `eta` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityTable {
    pub a_values: Vec<f64>,
    pub eta_values: Vec<f64>,
    /// `u1_0[i][j]` at `a_values[i]`, `eta_values[j]`.
    pub u1_0: Vec<Vec<f64>>,
    pub c1_0: Vec<Vec<f64>>,
}

/// Solves every cell concurrently on the same grid. Cell errors propagate.
pub fn sweep_sensitivity(
    params: &MarketParams,
    a_values: &[f64],
    eta_values: &[f64],
    grid: &WealthGrid,
) -> Result<SensitivityTable> {
    let cells: Vec<(usize, usize)> = (0..a_values.len())
        .flat_map(|i| (0..eta_values.len()).map(move |j| (i, j)))
        .collect();
    for &a in a_values {
        for &eta in eta_values {
            params.with_a(a).with_eta(eta).derive_constants()?;
        }
    }
    let solved: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let p = params.with_a(a_values[i]).with_eta(eta_values[j]);
            let sol = solve_hjb(&p, grid)?;
            let policy = extract_feedback(&sol, &p)?;
            Ok((sol.u_at_zero(), policy.c_at_zero()))
        })
        .collect::<Result<_>>()?;
    let mut u1_0 = vec![vec![0.0; eta_values.len()]; a_values.len()];
    let mut c1_0 = u1_0.clone();
    for (&(i, j), &(u, c)) in cells.iter().zip(&solved) {
        u1_0[i][j] = u;
        c1_0[i][j] = c;
    }
    Ok(SensitivityTable {
        a_values: a_values.to_vec(),
        eta_values: eta_values.to_vec(),
        u1_0,
        c1_0,
    })
}

fn strictly_increasing(xs: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = xs.collect();
    v.windows(2).all(|w| w[1] > w[0])
}

impl SensitivityTable {
    /// `u1(0)` strictly increasing in `a` at the `eta` column `j`.
    pub fn increasing_in_a(&self, j: usize) -> bool {
        strictly_increasing(self.u1_0.iter().map(|row| row[j]))
    }

    /// `u1(0)` strictly decreasing in `eta` at the `a` row `i`.
    pub fn decreasing_in_eta(&self, i: usize) -> bool {
        strictly_increasing(self.u1_0[i].iter().rev().copied())
    }

    /// `c1(0)` strictly increasing in `a` at the `eta` column `j`.
    pub fn consumption_increasing_in_a(&self, j: usize) -> bool {
        strictly_increasing(self.c1_0.iter().map(|row| row[j]))
    }

    /// `a,eta,u1_0,c1_0`, one row per cell, `a` outermost.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "a,eta,u1_0,c1_0")?;
        for (i, a) in self.a_values.iter().enumerate() {
            for (j, eta) in self.eta_values.iter().enumerate() {
                writeln!(out, "{a},{eta},{},{}", self.u1_0[i][j], self.c1_0[i][j])?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_income_row_is_zero() {
        let grid = WealthGrid::new(20.0, 801).unwrap();
        let t =
            sweep_sensitivity(&MarketParams::default(), &[0.0, 0.2], &[0.1, 0.5], &grid).unwrap();
        assert_eq!(t.u1_0[0], vec![0.0, 0.0]);
        assert!(t.u1_0[1].iter().all(|&u| u > 0.0));
        assert!(t.increasing_in_a(0) && t.decreasing_in_eta(1));
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 5);
    }

    #[test]
    fn rejects_ill_posed_cells_before_solving() {
        let grid = WealthGrid::new(20.0, 101).unwrap();
        let p = MarketParams {
            delta: 0.01,
            ..MarketParams::default()
        };
        assert!(sweep_sensitivity(&p, &[0.1], &[0.1], &grid).is_err());
    }
}
