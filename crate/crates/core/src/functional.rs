//! The Jensen-defect functional
//!
//! `V_f[ν, λ, ν∞] = ∫ [⟨ν, f⟩ − f(⟨ν, ·⟩)] dx + ∫ ⟨ν∞, f∞⟩ dλ`
//!
//! together with the total energy `∫⟨ν, f⟩ dx + ∫⟨ν∞, f∞⟩ dλ` and the
//! concavity gap of `V_f` along a convex combination.

use crate::integrand::{Integrand, SquaredNorm};
use crate::measure::{convex_combine, DiscreteYoungMeasure};
use crate::sum::compensated_sum;
use crate::Result;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    /// `V_f`.
    pub value: f64,
    /// `∫ [⟨ν, f⟩ − f(⟨ν, ·⟩)] dx`.
    pub oscillation_part: f64,
    /// `∫ ⟨ν∞, f∞⟩ dλ`.
    pub concentration_part: f64,
    /// `∫ ⟨ν, f⟩ dx + ∫ ⟨ν∞, f∞⟩ dλ`.
    pub total_energy: f64,
    /// Per interior cell `⟨ν, f⟩ − f(⟨ν, ·⟩)` (a density, not multiplied by volume).
    pub defect_density: Vec<f64>,
}

impl FunctionalReport {
    /// `1 + |oscillation_part| + |concentration_part|`, the reference
    /// magnitude for floating-point tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self.oscillation_part.abs() + self.concentration_part.abs()
    }
}

pub fn jensen_defect(y: &DiscreteYoungMeasure, f: &dyn Integrand) -> Result<FunctionalReport> {
    y.ensure_compatible(f)?;
    let m = y.phase_dim();
    let per_cell: Vec<(f64, f64)> = y
        .interior()
        .par_iter()
        .with_min_len(128)
        .map(|c| {
            let expected = c.expect(|z| f.eval(z));
            let mean = c.mean(m);
            (expected, expected - f.eval(&mean))
        })
        .collect();
    let vol = y.grid().cell_volume();
    let oscillation_part = compensated_sum(per_cell.iter().map(|&(_, d)| vol * d));
    let concentration_part = compensated_sum(y.cells().iter().map(|c| c.concentration_energy(f)));
    let oscillation_energy = compensated_sum(per_cell.iter().map(|&(e, _)| vol * e));
    Ok(FunctionalReport {
        value: oscillation_part + concentration_part,
        oscillation_part,
        concentration_part,
        total_energy: oscillation_energy + concentration_part,
        defect_density: per_cell.into_iter().map(|(_, d)| d).collect(),
    })
}

/// `V_f` for `f = |·|²`: `∫ Var[ν_x] dx + λ(Ω̄)`.
pub fn variance_functional(y: &DiscreteYoungMeasure) -> Result<f64> {
    Ok(jensen_defect(y, &SquaredNorm::variance())?.value)
}

pub fn total_energy(y: &DiscreteYoungMeasure, f: &dyn Integrand) -> Result<f64> {
    Ok(jensen_defect(y, f)?.total_energy)
}

/// `V_f(τY1 + (1−τ)Y2) − τV_f(Y1) − (1−τ)V_f(Y2)`; nonnegative for convex `f`.
pub fn concavity_gap(y1: &DiscreteYoungMeasure, y2: &DiscreteYoungMeasure, tau: f64, f: &dyn Integrand) -> Result<f64> {
    let mixed = convex_combine(y1, y2, tau)?;
    let v = jensen_defect(&mixed, f)?.value;
    let v1 = jensen_defect(y1, f)?.value;
    let v2 = jensen_defect(y2, f)?.value;
    Ok(v - tau * v1 - (1.0 - tau) * v2)
}
