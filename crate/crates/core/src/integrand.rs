//! Integrands `f` paired against Young measures, with their recession
//! functions `f∞(θ) = lim f(dilation(s, θ)) / (1 + s^p)`.

use crate::growth::GrowthStructure;

/// An integrand with controlled growth.
///
/// Convexity is not enforced by the trait; the Jensen-defect functional and
/// the selector assume it, and [`Integrand::strictly_convex`] is consulted
/// by diagnostics that depend on strict convexity.
pub trait Integrand: Send + Sync {
    fn growth(&self) -> GrowthStructure;

    fn eval(&self, z: &[f64]) -> f64;

    /// Recession function on the growth structure's recession surface.
    fn recession(&self, theta: &[f64]) -> f64;

    fn gradient(&self, z: &[f64], out: &mut [f64]);

    fn strictly_convex(&self) -> bool {
        false
    }

    /// `Some(c)` when `f(z) = c|z|² + affine(z)`. Enables exact line search.
    fn quadratic_coefficient(&self) -> Option<f64> {
        None
    }

    /// Phase dimension the integrand requires, if fixed.
    fn phase_dim(&self) -> Option<usize> {
        None
    }
}

/// `f(z) = c·|z|²` with quadratic growth; `f∞ ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredNorm {
    pub coefficient: f64,
}

impl SquaredNorm {
    pub fn new(coefficient: f64) -> Self {
        Self { coefficient }
    }

    /// `|z|²`, whose Jensen defect is the variance.
    pub fn variance() -> Self {
        Self::new(1.0)
    }

    /// Incompressible kinetic energy `½|v|²`.
    pub fn kinetic_energy() -> Self {
        Self::new(0.5)
    }
}

impl Integrand for SquaredNorm {
    fn growth(&self) -> GrowthStructure {
        GrowthStructure::Quadratic
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.coefficient * z.iter().map(|v| v * v).sum::<f64>()
    }

    fn recession(&self, _theta: &[f64]) -> f64 {
        self.coefficient
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(z) {
            *o = 2.0 * self.coefficient * v;
        }
    }

    fn strictly_convex(&self) -> bool {
        self.coefficient > 0.0
    }

    fn quadratic_coefficient(&self) -> Option<f64> {
        Some(self.coefficient)
    }
}

/// Isentropic energy `½|α′|² + α₁^γ/(γ−1)` in `(ρ, √ρ u)` variables, with
/// recession function `½|β′|² + β₁^γ/(γ−1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsentropicEnergy {
    pub gamma: f64,
}

impl IsentropicEnergy {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    fn internal(&self, a1: f64) -> f64 {
        a1.abs().powf(self.gamma) / (self.gamma - 1.0)
    }
}

impl Integrand for IsentropicEnergy {
    fn growth(&self) -> GrowthStructure {
        GrowthStructure::Isentropic { gamma: self.gamma }
    }

    fn eval(&self, z: &[f64]) -> f64 {
        0.5 * z[1..].iter().map(|v| v * v).sum::<f64>() + self.internal(z[0])
    }

    fn recession(&self, theta: &[f64]) -> f64 {
        self.eval(theta)
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        let g = self.gamma;
        out[0] = g / (g - 1.0) * z[0].abs().powf(g - 1.0) * z[0].signum();
        out[1..].copy_from_slice(&z[1..]);
    }

    fn strictly_convex(&self) -> bool {
        true
    }
}

/// `f(z) = offset + slope·z`. Convex but not strictly; `f∞ ≡ 0` for every
/// growth with exponent above one.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineIntegrand {
    pub growth: GrowthStructure,
    pub offset: f64,
    pub slope: Vec<f64>,
}

impl Integrand for AffineIntegrand {
    fn growth(&self) -> GrowthStructure {
        self.growth
    }

    fn eval(&self, z: &[f64]) -> f64 {
        self.offset + self.slope.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()
    }

    fn recession(&self, _theta: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _z: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.slope);
    }

    fn quadratic_coefficient(&self) -> Option<f64> {
        Some(0.0)
    }

    fn phase_dim(&self) -> Option<usize> {
        Some(self.slope.len())
    }
}
