//! Measure-valued solutions of the incompressible Euler equations on the
//! torus: weak-form residuals against a test dictionary and the per-slice
//! energy inequality.
//!
//! For a Young measure with phase variable `v ∈ R^d` the discrete weak forms
//! are
//!
//! ```text
//! mass:      Σ vol ⟨ν, v⟩·∇ψ
//! momentum:  Σ vol [⟨ν, v⟩·∂ₜφ + ⟨ν, v⊗v⟩ : ∇φ] + Σ λ ⟨ν∞, θ⊗θ⟩ : ∇φ + Σ h^d v₀·φ(0)
//! ```
//!
//! with divergence-free `φ`, so the pressure never appears.

use crate::grid::{Field, SpaceTimeGrid};
use crate::growth::GrowthStructure;
use crate::integrand::SquaredNorm;
use crate::measure::DiscreteYoungMeasure;
use crate::report::{normalize, slice_admissibility, AdmissibilityReport, CheckConfig, Equation, ResidualReport, TestResidual};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::testfn::{Centers, TestFunctionDictionary};
use crate::{Error, Result};
use rayon::prelude::*;

/// Largest divergence accepted for a momentum test function.
pub const DIVERGENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct IncompressibleData {
    dim: usize,
    nx: usize,
    v0: Field,
    initial_energy: f64,
}

impl IncompressibleData {
    /// `v0` sampled at the spatial cell centers of `grid`.
    pub fn new(grid: &SpaceTimeGrid, v0: Field) -> Result<Self> {
        let d = grid.dim();
        if v0.components() != d || v0.points() != grid.spatial_cells() {
            return Err(Error::FieldShape { expected: grid.spatial_cells() * d, found: v0.values().len() });
        }
        if let Some(p) = v0.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell: p / d, what: "initial velocity" });
        }
        let hd = grid.spatial_volume();
        let initial_energy =
            compensated_sum((0..v0.points()).map(|s| hd * 0.5 * v0.at(s).iter().map(|v| v * v).sum::<f64>()));
        Ok(Self { dim: d, nx: grid.nx(), v0, initial_energy })
    }

    pub fn from_fn<F>(grid: &SpaceTimeGrid, v0: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        Self::new(grid, Field::from_spatial_fn(grid, grid.dim(), v0))
    }

    pub fn v0(&self) -> &Field {
        &self.v0
    }

    /// `∫ ½|v₀|² dx` by the midpoint rule.
    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    fn ensure_matches(&self, y: &DiscreteYoungMeasure) -> Result<()> {
        let g = y.grid();
        if g.dim() != self.dim || g.nx() != self.nx {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

fn ensure_velocity_measure(y: &DiscreteYoungMeasure) -> Result<()> {
    if y.growth() != GrowthStructure::Quadratic {
        return Err(Error::GrowthMismatch { left: y.growth().to_string(), right: GrowthStructure::Quadratic.to_string() });
    }
    if y.phase_dim() != y.grid().dim() {
        return Err(Error::PhaseDimension { expected: y.grid().dim(), found: y.phase_dim() });
    }
    Ok(())
}

/// `⟨ν, v⟩` and `⟨ν, v⊗v⟩` on interior cells, `λ⟨ν∞, θ⊗θ⟩` on all cells.
struct Moments {
    mean: Vec<f64>,
    second: Vec<f64>,
    conc: Vec<f64>,
}

fn moments(y: &DiscreteYoungMeasure) -> Moments {
    let d = y.phase_dim();
    let n = y.grid().interior_cells();
    let per_cell: Vec<(Vec<f64>, Vec<f64>)> = y
        .interior()
        .par_iter()
        .with_min_len(128)
        .map(|c| {
            let mean = c.mean(d);
            let mut second = vec![0.0; d * d];
            for i in 0..d {
                for j in i..d {
                    let m = c.expect(|z| z[i] * z[j]);
                    second[i * d + j] = m;
                    second[j * d + i] = m;
                }
            }
            (mean, second)
        })
        .collect();
    let mut mean = Vec::with_capacity(n * d);
    let mut second = Vec::with_capacity(n * d * d);
    for (m, s) in per_cell {
        mean.extend(m);
        second.extend(s);
    }
    let mut conc = vec![0.0; y.cells().len() * d * d];
    for (idx, c) in y.cells().iter().enumerate() {
        if c.lambda_mass > 0.0 {
            for i in 0..d {
                for j in 0..d {
                    conc[(idx * d + i) * d + j] = c.lambda_mass * c.expect_angle(|th| th[i] * th[j]);
                }
            }
        }
    }
    Moments { mean, second, conc }
}

/// Mass residuals `Σ vol ⟨ν, v⟩·∇ψ`, one per scalar test.
pub fn residual_mass(y: &DiscreteYoungMeasure, dict: &TestFunctionDictionary) -> Result<Vec<TestResidual>> {
    ensure_velocity_measure(y)?;
    let grid = y.grid();
    let d = grid.dim();
    let centers = Centers::new(grid);
    let mean = moments(y).mean;
    let vol = grid.cell_volume();
    let mass = y.mass();
    Ok(dict
        .scalars
        .par_iter()
        .map(|psi| {
            let mut g = vec![0.0; d];
            let mut sum = NeumaierSum::new();
            for idx in 0..grid.interior_cells() {
                let (t, x) = centers.of(idx);
                psi.gradient(t, x, &mut g);
                let m = &mean[idx * d..][..d];
                sum.add(vol * m.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>());
            }
            let raw = sum.value();
            TestResidual {
                equation: Equation::Mass,
                label: psi.label(),
                raw,
                normalized: normalize(raw, psi.sup(&centers), mass),
            }
        })
        .collect())
}

/// Momentum residuals, one per (divergence-free) vector test.
pub fn residual_momentum(
    y: &DiscreteYoungMeasure,
    data: &IncompressibleData,
    dict: &TestFunctionDictionary,
) -> Result<Vec<TestResidual>> {
    ensure_velocity_measure(y)?;
    data.ensure_matches(y)?;
    let grid = y.grid();
    let d = grid.dim();
    let centers = Centers::new(grid);
    {
        let mut scratch = vec![0.0; d];
        for phi in &dict.vectors {
            let mut worst = 0.0f64;
            for idx in 0..grid.interior_cells() {
                let (t, x) = centers.of(idx);
                worst = worst.max(phi.divergence(t, x, &mut scratch).abs());
            }
            if worst > DIVERGENCE_TOL {
                return Err(Error::NotDivergenceFree { label: phi.label(), divergence: worst });
            }
        }
    }
    let mo = moments(y);
    let vol = grid.cell_volume();
    let hd = grid.spatial_volume();
    let mass = y.mass();
    let concentrated: Vec<usize> = (0..y.cells().len()).filter(|&i| y.cell(i).lambda_mass > 0.0).collect();
    Ok(dict
        .vectors
        .par_iter()
        .map(|phi| {
            let mut v = vec![0.0; d];
            let mut scratch = vec![0.0; d];
            let mut jac = vec![0.0; d * d];
            let mut sum = NeumaierSum::new();
            for idx in 0..grid.interior_cells() {
                let (t, x) = centers.of(idx);
                phi.dt(t, x, &mut v);
                phi.jacobian(t, x, &mut scratch, &mut jac);
                let m = &mo.mean[idx * d..][..d];
                let s = &mo.second[idx * d * d..][..d * d];
                let transport: f64 = m.iter().zip(&v).map(|(a, b)| a * b).sum();
                let flux: f64 = s.iter().zip(&jac).map(|(a, b)| a * b).sum();
                sum.add(vol * (transport + flux));
            }
            for &idx in &concentrated {
                let (t, x) = centers.of(idx);
                phi.jacobian(t, x, &mut scratch, &mut jac);
                let c = &mo.conc[idx * d * d..][..d * d];
                sum.add(c.iter().zip(&jac).map(|(a, b)| a * b).sum::<f64>());
            }
            for s in 0..grid.spatial_cells() {
                phi.value(0.0, centers.x(s), &mut v);
                sum.add(hd * data.v0.at(s).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>());
            }
            let raw = sum.value();
            TestResidual {
                equation: Equation::Momentum,
                label: phi.label(),
                raw,
                normalized: normalize(raw, phi.sup(&centers), mass),
            }
        })
        .collect())
}

/// Per-slice energy inequality `∫½⟨ν, |v|²⟩ dx + ½λ_t(T^d) ≤ ∫½|v₀|² dx`.
pub fn check_admissibility(
    y: &DiscreteYoungMeasure,
    data: &IncompressibleData,
    energy_tol_rel: f64,
) -> Result<AdmissibilityReport> {
    ensure_velocity_measure(y)?;
    data.ensure_matches(y)?;
    Ok(slice_admissibility(y, &SquaredNorm::kinetic_energy(), data.initial_energy, energy_tol_rel))
}

/// Residuals against the dictionary configured in `cfg` plus admissibility.
pub fn check(y: &DiscreteYoungMeasure, data: &IncompressibleData, cfg: &CheckConfig) -> Result<ResidualReport> {
    let dict = TestFunctionDictionary::incompressible(y.grid(), cfg.dict_k, cfg.dict_profiles);
    check_with(y, data, &dict, cfg)
}

pub fn check_with(
    y: &DiscreteYoungMeasure,
    data: &IncompressibleData,
    dict: &TestFunctionDictionary,
    cfg: &CheckConfig,
) -> Result<ResidualReport> {
    let mass = residual_mass(y, dict)?;
    let momentum = residual_momentum(y, data, dict)?;
    let adm = check_admissibility(y, data, cfg.energy_tol_rel)?;
    Ok(ResidualReport::assemble("incompressible", cfg.residual_threshold(y.grid()), mass, momentum, adm, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{convex_combine, AngleAtom, CellMeasure, PhaseAtom};
    use std::f64::consts::TAU;

    fn grid(n: usize) -> SpaceTimeGrid {
        SpaceTimeGrid::new(1.0, 2, n, n, false).unwrap()
    }

    fn shear(g: SpaceTimeGrid) -> (DiscreteYoungMeasure, IncompressibleData) {
        let y = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, x| vec![x[1].sin(), 0.0]).unwrap();
        let data = IncompressibleData::from_fn(&g, |x| vec![x[1].sin(), 0.0]).unwrap();
        (y, data)
    }

    fn worst(r: &[TestResidual]) -> f64 {
        r.iter().map(|t| t.normalized).fold(0.0, f64::max)
    }

    fn threshold(g: &SpaceTimeGrid) -> f64 {
        CheckConfig::default().residual_threshold(g)
    }

    #[test]
    fn constant_dirac_has_zero_residual() {
        let g = grid(8);
        let c = [0.4, -1.3];
        let y = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, _| c.to_vec()).unwrap();
        let data = IncompressibleData::from_fn(&g, |_| c.to_vec()).unwrap();
        let dict = TestFunctionDictionary::incompressible(&g, 3, 4);
        assert!(worst(&residual_mass(&y, &dict).unwrap()) < 1e-14);
        assert!(worst(&residual_momentum(&y, &data, &dict).unwrap()) < threshold(&g));
    }

    #[test]
    fn constant_mixture_with_matching_mean() {
        let g = grid(8);
        let y = DiscreteYoungMeasure::uniform(
            g,
            GrowthStructure::Quadratic,
            vec![PhaseAtom { z: vec![1.0, 0.5], w: 0.5 }, PhaseAtom { z: vec![-0.2, 0.1], w: 0.5 }],
        )
        .unwrap();
        let data = IncompressibleData::from_fn(&g, |_| vec![0.4, 0.3]).unwrap();
        let dict = TestFunctionDictionary::incompressible(&g, 3, 4);
        assert!(worst(&residual_momentum(&y, &data, &dict).unwrap()) < threshold(&g));
    }

    #[test]
    fn shear_flow_residual_is_second_order() {
        let dict_for = |g: &SpaceTimeGrid| TestFunctionDictionary::incompressible(g, 3, 4);
        let mut errs = Vec::new();
        for n in [8, 16] {
            let (y, data) = shear(grid(n));
            let dict = dict_for(y.grid());
            let m = worst(&residual_mass(&y, &dict).unwrap()).max(worst(&residual_momentum(&y, &data, &dict).unwrap()));
            errs.push(m);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.9, "{errs:?}");
    }

    #[test]
    fn wrong_initial_condition_is_detected() {
        let g = grid(8);
        let (y, _) = shear(g);
        let data = IncompressibleData::from_fn(&g, |x| vec![0.0, x[0].cos()]).unwrap();
        let dict = TestFunctionDictionary::incompressible(&g, 3, 4);
        assert!(worst(&residual_momentum(&y, &data, &dict).unwrap()) > threshold(&g));
    }

    #[test]
    fn rejects_compressive_tests() {
        let g = grid(4);
        let (y, data) = shear(g);
        let dict = TestFunctionDictionary::compressible(&g, 1, 1);
        assert!(matches!(residual_momentum(&y, &data, &dict), Err(Error::NotDivergenceFree { .. })));
    }

    #[test]
    fn admissibility_examples() {
        let g = grid(4);
        let (y, data) = shear(g);
        let r = check_admissibility(&y, &data, 1e-10).unwrap();
        assert!(r.admissible);
        assert!(r.margins.iter().all(|m| m.abs() < 1e-12));

        let a = [0.6, -0.8];
        let zero = IncompressibleData::from_fn(&g, |_| vec![0.0, 0.0]).unwrap();
        let mix = DiscreteYoungMeasure::uniform(
            g,
            GrowthStructure::Quadratic,
            vec![PhaseAtom { z: a.to_vec(), w: 0.5 }, PhaseAtom { z: vec![-a[0], -a[1]], w: 0.5 }],
        )
        .unwrap();
        let r = check_admissibility(&mix, &zero, 1e-10).unwrap();
        assert!(!r.admissible);
        let expected = -0.5 * (a[0] * a[0] + a[1] * a[1]) * TAU * TAU;
        assert!(r.margins.iter().all(|m| (m - expected).abs() < 1e-10));

        let half = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, x| vec![0.5 * x[1].sin(), 0.0]).unwrap();
        let r = check_admissibility(&half, &data, 1e-10).unwrap();
        let l2: f64 = 2.0 * data.initial_energy();
        assert!(r.admissible);
        assert!(r.margins.iter().all(|m| (m - 0.375 * l2).abs() < 1e-12));
    }

    #[test]
    fn concentration_enters_the_energy_with_one_half() {
        let g = grid(4);
        let (y, data) = shear(g);
        let idx = g.spatial_cells() + 3;
        let cell = y.cell(idx).clone().with_concentration(0.2, vec![AngleAtom { theta: vec![1.0, 0.0], w: 1.0 }]);
        let y2 = y.with_cell(idx, cell).unwrap();
        let r = check_admissibility(&y2, &data, 1e-10).unwrap();
        assert!((r.margins[1] + 0.5 * 0.2 / g.dt()).abs() < 1e-12);
        assert!((r.disintegrated_mass(g.dt()) - y2.lambda_total()).abs() < 1e-15);
    }

    #[test]
    fn final_layer_mass_is_not_admissible() {
        let g = SpaceTimeGrid::new(1.0, 2, 4, 4, true).unwrap();
        let y = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, _| vec![0.0, 0.0]).unwrap();
        let idx = g.interior_cells();
        let y = y
            .with_cell(idx, CellMeasure::default().with_concentration(0.1, vec![AngleAtom { theta: vec![0.0, 1.0], w: 1.0 }]))
            .unwrap();
        let data = IncompressibleData::from_fn(&g, |_| vec![1.0, 0.0]).unwrap();
        let r = check_admissibility(&y, &data, 1e-10).unwrap();
        assert!(r.worst_margin > 0.0);
        assert_eq!(r.boundary_mass, 0.1);
        assert!(!r.admissible);
        assert!((r.disintegrated_mass(g.dt()) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn admissibility_survives_combination() {
        let g = grid(4);
        let (y1, data) = shear(g);
        let y2 = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, x| vec![0.3 * x[1].sin(), 0.1]).unwrap();
        assert!(check_admissibility(&y2, &data, 1e-10).unwrap().admissible);
        for tau in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let y = convex_combine(&y1, &y2, tau).unwrap();
            assert!(check_admissibility(&y, &data, 1e-10).unwrap().admissible);
        }
    }
}
