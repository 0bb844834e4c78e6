/// `U(x) = x^p / p` together with its inverse marginal and convex conjugate
/// `V(y) = sup_x [U(x) - x y] = -y^q / q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerUtility {
    p: f64,
    q: f64,
}

impl PowerUtility {
    pub fn new(p: f64) -> Self {
        debug_assert!(p > 0.0 && p < 1.0);
        PowerUtility {
            p,
            q: -p / (1.0 - p),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn value(&self, x: f64) -> f64 {
        x.powf(self.p) / self.p
    }

    pub fn marginal(&self, x: f64) -> f64 {
        x.powf(self.p - 1.0)
    }

    /// `I = (U')^{-1}`.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        y.powf(-1.0 / (1.0 - self.p))
    }

    pub fn conjugate(&self, y: f64) -> f64 {
        -y.powf(self.q) / self.q
    }

    /// `V'(y) = -y^{q-1} = -I(y)`.
    pub fn conjugate_derivative(&self, y: f64) -> f64 {
        -y.powf(self.q - 1.0)
    }
}
