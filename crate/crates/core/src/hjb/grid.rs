use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform wealth grid ordered from `x_max` down to exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WealthGrid {
    x_max: f64,
    nodes: Vec<f64>,
}

impl WealthGrid {
    pub fn new(x_max: f64, n: usize) -> Result<Self> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Config(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        if n < 3 {
            return Err(Error::Config(format!(
                "grid needs at least 3 nodes, got {n}"
            )));
        }
        let last = (n - 1) as f64;
        let nodes = (0..n)
            .map(|i| x_max * ((n - 1 - i) as f64 / last))
            .collect();
        Ok(WealthGrid { x_max, nodes })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Uniform spacing.
    pub fn h(&self) -> f64 {
        self.x_max / (self.nodes.len() - 1) as f64
    }

    /// Nodes, strictly decreasing, last one `0.0`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node equal to `x` (within a tenth of a cell).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let pos = (self.x_max - x) / self.h();
        let i = pos.round();
        if i >= 0.0 && (i as usize) < self.len() && (pos - i).abs() < 0.1 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Grid with the spacing halved; shares every node of `self`.
    pub fn refined(&self) -> WealthGrid {
        WealthGrid::new(self.x_max, 2 * self.len() - 1).expect("refinement of a valid grid")
    }

    /// Locate `x` in `[0, x_max]`: returns `(i, w)` with `x = (1-w) x_i + w x_{i+1}`.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let pos = ((self.x_max - x) / self.h()).clamp(0.0, (self.len() - 1) as f64);
        let i = (pos.floor() as usize).min(self.len() - 2);
        (i, pos - i as f64)
    }
}
