//! Check configuration and the reports produced by the Euler checkers.

use crate::grid::{SpaceTimeGrid, TimeSlot};
use crate::integrand::Integrand;
use crate::measure::DiscreteYoungMeasure;
use crate::sum::{compensated_sum, NeumaierSum};
use serde::Serialize;

/// Largest `residual / h²` observed for the steady shear flow `(sin x₂, 0)`
/// with the default dictionary on grids from 8³ to 32³, `h` the mesh width.
pub const RESIDUAL_CONSTANT: f64 = 3.5e-3;
/// Safety factor applied to [`RESIDUAL_CONSTANT`].
pub const RESIDUAL_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckConfig {
    /// Threshold on normalized residuals; `None` selects the mesh-dependent default.
    pub residual_tol: Option<f64>,
    /// Energy margins must exceed `−energy_tol_rel · (1 + E₀)`.
    pub energy_tol_rel: f64,
    /// Largest wavenumber (max-norm) in the test dictionary.
    pub dict_k: u32,
    /// Number of time profiles in the test dictionary.
    pub dict_profiles: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { residual_tol: None, energy_tol_rel: 1e-10, dict_k: 3, dict_profiles: 4 }
    }
}

impl CheckConfig {
    pub fn residual_threshold(&self, grid: &SpaceTimeGrid) -> f64 {
        self.residual_tol
            .unwrap_or_else(|| RESIDUAL_SCALE * RESIDUAL_CONSTANT * grid.mesh_width().powi(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Mass,
    Momentum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResidual {
    pub equation: Equation,
    pub label: String,
    /// Value of the discrete weak form.
    pub raw: f64,
    /// `|raw| / (sup of the test function and its first derivatives · mass of Y)`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub initial_energy: f64,
    /// Oscillation plus concentration energy of each time slice.
    pub slice_energy: Vec<f64>,
    /// `initial_energy − slice_energy` per slice.
    pub margins: Vec<f64>,
    /// `λ_t(T^d)` per slice.
    pub slice_lambda: Vec<f64>,
    /// λ-mass on the final layer; it has no density in time.
    pub boundary_mass: f64,
    pub worst_slice: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub admissible: bool,
}

impl AdmissibilityReport {
    /// `Σ λ_t(T^d)·Δt + boundary_mass`, which equals `λ(Ω̄)`.
    pub fn disintegrated_mass(&self, dt: f64) -> f64 {
        let mut s = NeumaierSum::new();
        for &l in &self.slice_lambda {
            s.add(l * dt);
        }
        s.add(self.boundary_mass);
        s.value()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub model: &'static str,
    pub residual_threshold: f64,
    pub mass: Vec<TestResidual>,
    pub momentum: Vec<TestResidual>,
    pub worst_test: Option<TestResidual>,
    pub residuals_ok: bool,
    pub admissibility: AdmissibilityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bound: Option<LambdaBound>,
    pub passed: bool,
}

impl ResidualReport {
    pub(crate) fn assemble(
        model: &'static str,
        residual_threshold: f64,
        mass: Vec<TestResidual>,
        momentum: Vec<TestResidual>,
        admissibility: AdmissibilityReport,
        lambda_bound: Option<LambdaBound>,
    ) -> Self {
        let worst_test = mass
            .iter()
            .chain(&momentum)
            .fold(None::<&TestResidual>, |best, r| match best {
                Some(b) if b.normalized >= r.normalized => Some(b),
                _ => Some(r),
            })
            .cloned();
        let residuals_ok = worst_test.as_ref().is_none_or(|r| r.normalized <= residual_threshold);
        let passed = residuals_ok && admissibility.admissible;
        Self { model, residual_threshold, mass, momentum, worst_test, residuals_ok, admissibility, lambda_bound, passed }
    }

    /// Largest normalized residual over both equations.
    pub fn max_normalized(&self) -> f64 {
        self.worst_test.as_ref().map_or(0.0, |r| r.normalized)
    }
}

/// `|raw| / (sup · mass)`; plain `|raw|` when the denominator vanishes.
pub(crate) fn normalize(raw: f64, sup: f64, mass: f64) -> f64 {
    let denom = sup * mass;
    if denom > 0.0 {
        raw.abs() / denom
    } else {
        raw.abs()
    }
}

/// Per-slice energy `Σ h^d ⟨ν, f⟩ + Σ (λ_cell/Δt) ⟨ν∞, f∞⟩` compared with `e0`.
pub(crate) fn slice_admissibility(
    y: &DiscreteYoungMeasure,
    f: &dyn Integrand,
    e0: f64,
    energy_tol_rel: f64,
) -> AdmissibilityReport {
    let grid = y.grid();
    let sc = grid.spatial_cells();
    let hd = grid.spatial_volume();
    let dt = grid.dt();
    let mut slice_energy = Vec::with_capacity(grid.nt());
    let mut slice_lambda = Vec::with_capacity(grid.nt());
    for it in 0..grid.nt() {
        let cells = &y.cells()[grid.index(TimeSlot::Slice(it), 0)..][..sc];
        let osc = compensated_sum(cells.iter().map(|c| hd * c.expect(|z| f.eval(z))));
        let conc = compensated_sum(cells.iter().map(|c| c.concentration_energy(f) / dt));
        slice_energy.push(osc + conc);
        slice_lambda.push(compensated_sum(cells.iter().map(|c| c.lambda_mass / dt)));
    }
    let boundary_mass = compensated_sum(y.final_layer().iter().map(|c| c.lambda_mass));
    let margins: Vec<f64> = slice_energy.iter().map(|e| e0 - e).collect();
    let (worst_slice, worst_margin) = margins
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bm), (i, m)| if m < bm { (i, m) } else { (bi, bm) });
    let tolerance = energy_tol_rel * (1.0 + e0.abs());
    let admissible = worst_margin >= -tolerance && boundary_mass == 0.0;
    AdmissibilityReport {
        initial_energy: e0,
        slice_energy,
        margins,
        slice_lambda,
        boundary_mass,
        worst_slice,
        worst_margin,
        tolerance,
        admissible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(eq: Equation, n: f64) -> TestResidual {
        TestResidual { equation: eq, label: format!("{n}"), raw: n, normalized: n }
    }

    fn admissible() -> AdmissibilityReport {
        AdmissibilityReport {
            initial_energy: 1.0,
            slice_energy: vec![1.0],
            margins: vec![0.0],
            slice_lambda: vec![0.0],
            boundary_mass: 0.0,
            worst_slice: 0,
            worst_margin: 0.0,
            tolerance: 1e-10,
            admissible: true,
        }
    }

    #[test]
    fn worst_test_spans_both_equations() {
        let r = ResidualReport::assemble(
            "incompressible",
            0.5,
            vec![residual(Equation::Mass, 0.1)],
            vec![residual(Equation::Momentum, 0.7), residual(Equation::Momentum, 0.2)],
            admissible(),
            None,
        );
        assert_eq!(r.max_normalized(), 0.7);
        assert_eq!(r.worst_test.unwrap().equation, Equation::Momentum);
        assert!(!r.residuals_ok);
        assert!(!r.passed);
    }

    #[test]
    fn default_threshold_scales_with_mesh() {
        let c = CheckConfig::default();
        let g8 = SpaceTimeGrid::new(1.0, 2, 8, 8, false).unwrap();
        let g16 = SpaceTimeGrid::new(1.0, 2, 16, 16, false).unwrap();
        let ratio = c.residual_threshold(&g8) / c.residual_threshold(&g16);
        assert!((ratio - 4.0).abs() < 1e-12);
        let fixed = CheckConfig { residual_tol: Some(1e-3), ..c };
        assert_eq!(fixed.residual_threshold(&g8), 1e-3);
    }
}
