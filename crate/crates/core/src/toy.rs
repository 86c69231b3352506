//! Two-dimensional test landscape: a quadratic bowl with two Gaussian wells
//! near `(1, 0)` and `(-1, 0)`, the left one deeper.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyPoint {
    pub x: f64,
    pub y: f64,
}

impl ToyPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &ToyPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for ToyPoint {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

fn wells(p: ToyPoint) -> (f64, f64) {
    let right = (-((p.x - 1.0).powi(2) + p.y * p.y) / 2.0).exp();
    let left = (-((p.x + 1.0).powi(2) + p.y * p.y) / 2.0).exp();
    (right, left)
}

/// `f(x, y) = -2 exp(-((x-1)^2 + y^2)/2) - 3 exp(-((x+1)^2 + y^2)/2) + x^2 + y^2`
pub fn toy_objective(p: ToyPoint) -> f64 {
    let (right, left) = wells(p);
    -2.0 * right - 3.0 * left + p.x * p.x + p.y * p.y
}

/// Analytic gradient of [`toy_objective`].
pub fn toy_gradient(p: ToyPoint) -> (f64, f64) {
    let (right, left) = wells(p);
    let dx = 2.0 * (p.x - 1.0) * right + 3.0 * (p.x + 1.0) * left + 2.0 * p.x;
    let dy = 2.0 * p.y * right + 3.0 * p.y * left + 2.0 * p.y;
    (dx, dy)
}
