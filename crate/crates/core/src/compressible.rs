//! Isentropic compressible Euler in `(α₁, α′) = (ρ, √ρ u)` phase variables.

use crate::grid::{Field, SpaceTimeGrid};
use crate::growth::GrowthStructure;
use crate::integrand::IsentropicEnergy;
use crate::measure::{DiscreteYoungMeasure, VACUUM_FLOOR};
use crate::report::{
    normalize, slice_admissibility, AdmissibilityReport, CheckConfig, Equation, LambdaBound, ResidualReport,
    TestResidual,
};
use crate::sum::{compensated_sum, NeumaierSum};
use crate::testfn::{Centers, TestFunctionDictionary};
use crate::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct CompressibleData {
    gamma: f64,
    dim: usize,
    nx: usize,
    rho0: Field,
    u0: Field,
    initial_energy: f64,
}

impl CompressibleData {
    pub fn new(grid: &SpaceTimeGrid, gamma: f64, rho0: Field, u0: Field) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::OutOfRange(format!("gamma must exceed 1, got {gamma}")));
        }
        let d = grid.dim();
        let n = grid.spatial_cells();
        if rho0.components() != 1 || rho0.points() != n {
            return Err(Error::FieldShape { expected: n, found: rho0.values().len() });
        }
        if u0.components() != d || u0.points() != n {
            return Err(Error::FieldShape { expected: n * d, found: u0.values().len() });
        }
        for (s, &r) in rho0.values().iter().enumerate() {
            if !r.is_finite() {
                return Err(Error::NonFinite { cell: s, what: "initial density" });
            }
            if r <= VACUUM_FLOOR {
                return Err(Error::Vacuum { cell: s, density: r });
            }
        }
        if let Some(p) = u0.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell: p / d, what: "initial velocity" });
        }
        let hd = grid.spatial_volume();
        let initial_energy = compensated_sum((0..n).map(|s| {
            let r = rho0.at(s)[0];
            let u2: f64 = u0.at(s).iter().map(|v| v * v).sum();
            hd * (0.5 * r * u2 + r.powf(gamma) / (gamma - 1.0))
        }));
        Ok(Self { gamma, dim: d, nx: grid.nx(), rho0, u0, initial_energy })
    }

    /// `ρ₀` and `u₀` from one function returning `(ρ, u)` at a spatial point.
    pub fn from_fn<F>(grid: &SpaceTimeGrid, gamma: f64, mut state: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> (f64, Vec<f64>),
    {
        let d = grid.dim();
        let mut rho = Vec::with_capacity(grid.spatial_cells());
        let mut u = Vec::with_capacity(grid.spatial_cells() * d);
        let mut x = vec![0.0; d];
        for s in 0..grid.spatial_cells() {
            grid.spatial_center(s, &mut x);
            let (r, v) = state(&x);
            if v.len() != d {
                return Err(Error::PhaseDimension { expected: d, found: v.len() });
            }
            rho.push(r);
            u.extend(v);
        }
        Self::new(grid, gamma, Field::new(1, rho)?, Field::new(d, u)?)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho0(&self) -> &Field {
        &self.rho0
    }

    pub fn u0(&self) -> &Field {
        &self.u0
    }

    /// `∫ [½ρ₀|u₀|² + ρ₀^γ/(γ−1)] dx` by the midpoint rule.
    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    fn ensure_matches(&self, y: &DiscreteYoungMeasure) -> Result<()> {
        let g = y.grid();
        if g.dim() != self.dim || g.nx() != self.nx {
            return Err(Error::GridMismatch);
        }
        let expected = GrowthStructure::Isentropic { gamma: self.gamma };
        if y.growth() != expected {
            return Err(Error::GrowthMismatch { left: y.growth().to_string(), right: expected.to_string() });
        }
        Ok(())
    }
}

/// Terms of the momentum weak form; switching one off is an ablation probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumTerms {
    pub transport: bool,
    pub convection: bool,
    pub pressure: bool,
    pub concentration: bool,
    pub initial: bool,
}

impl MomentumTerms {
    pub const ALL: Self = Self { transport: true, convection: true, pressure: true, concentration: true, initial: true };
}

impl Default for MomentumTerms {
    fn default() -> Self {
        Self::ALL
    }
}

/// Per-cell moments. Interior: `⟨α₁⟩`, `⟨√α₁ α′⟩`, `⟨α′⊗α′⟩`, `⟨α₁^γ⟩`.
/// All cells: `λ⟨β′⊗β′⟩`, `λ⟨β₁^γ⟩`.
struct Moments {
    rho: Vec<f64>,
    flux: Vec<f64>,
    second: Vec<f64>,
    pressure: Vec<f64>,
    conc_second: Vec<f64>,
    conc_pressure: Vec<f64>,
}

fn moments(y: &DiscreteYoungMeasure, gamma: f64) -> Moments {
    let d = y.grid().dim();
    type CellMoments = (f64, Vec<f64>, Vec<f64>, f64);
    let per_cell: Vec<CellMoments> = y
        .interior()
        .par_iter()
        .with_min_len(128)
        .map(|c| {
            let rho = c.expect(|z| z[0]);
            let flux = (0..d).map(|i| c.expect(|z| z[0].sqrt() * z[1 + i])).collect();
            let mut second = vec![0.0; d * d];
            for i in 0..d {
                for j in i..d {
                    let m = c.expect(|z| z[1 + i] * z[1 + j]);
                    second[i * d + j] = m;
                    second[j * d + i] = m;
                }
            }
            (rho, flux, second, c.expect(|z| z[0].powf(gamma)))
        })
        .collect();
    let n = per_cell.len();
    let mut m = Moments {
        rho: Vec::with_capacity(n),
        flux: Vec::with_capacity(n * d),
        second: Vec::with_capacity(n * d * d),
        pressure: Vec::with_capacity(n),
        conc_second: vec![0.0; y.cells().len() * d * d],
        conc_pressure: vec![0.0; y.cells().len()],
    };
    for (r, f, s, p) in per_cell {
        m.rho.push(r);
        m.flux.extend(f);
        m.second.extend(s);
        m.pressure.push(p);
    }
    for (idx, c) in y.cells().iter().enumerate() {
        if c.lambda_mass > 0.0 {
            for i in 0..d {
                for j in 0..d {
                    m.conc_second[(idx * d + i) * d + j] = c.lambda_mass * c.expect_angle(|th| th[1 + i] * th[1 + j]);
                }
            }
            m.conc_pressure[idx] = c.lambda_mass * c.expect_angle(|th| th[0].max(0.0).powf(gamma));
        }
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mass residuals `Σ vol [⟨α₁⟩∂ₜψ + ⟨√α₁ α′⟩·∇ψ] + Σ h^d ρ₀ψ(0)`.
pub fn residual_mass_c(
    y: &DiscreteYoungMeasure,
    data: &CompressibleData,
    dict: &TestFunctionDictionary,
) -> Result<Vec<TestResidual>> {
    data.ensure_matches(y)?;
    let grid = y.grid();
    let d = grid.dim();
    let centers = Centers::new(grid);
    let mo = moments(y, data.gamma);
    let vol = grid.cell_volume();
    let hd = grid.spatial_volume();
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
                let flux = &mo.flux[idx * d..][..d];
                sum.add(vol * (mo.rho[idx] * psi.dt(t, x) + dot(flux, &g)));
            }
            for s in 0..grid.spatial_cells() {
                sum.add(hd * data.rho0.at(s)[0] * psi.value(0.0, centers.x(s)));
            }
            let raw = sum.value();
            TestResidual { equation: Equation::Mass, label: psi.label(), raw, normalized: normalize(raw, psi.sup(&centers), mass) }
        })
        .collect())
}

pub fn residual_momentum_c(
    y: &DiscreteYoungMeasure,
    data: &CompressibleData,
    dict: &TestFunctionDictionary,
) -> Result<Vec<TestResidual>> {
    residual_momentum_c_with(y, data, dict, MomentumTerms::ALL)
}

/// Momentum residuals
/// `Σ vol [⟨√α₁ α′⟩·∂ₜφ + ⟨α′⊗α′⟩ : ∇φ + ⟨α₁^γ⟩ ∇·φ] + Σ λ [⟨β′⊗β′⟩ : ∇φ + ⟨β₁^γ⟩ ∇·φ] + Σ h^d ρ₀u₀·φ(0)`
/// restricted to the selected terms.
pub fn residual_momentum_c_with(
    y: &DiscreteYoungMeasure,
    data: &CompressibleData,
    dict: &TestFunctionDictionary,
    terms: MomentumTerms,
) -> Result<Vec<TestResidual>> {
    data.ensure_matches(y)?;
    let grid = y.grid();
    let d = grid.dim();
    let centers = Centers::new(grid);
    let mo = moments(y, data.gamma);
    let vol = grid.cell_volume();
    let hd = grid.spatial_volume();
    let mass = y.mass();
    let concentrated: Vec<usize> = (0..y.cells().len()).filter(|&i| y.cell(i).lambda_mass > 0.0).collect();
    let trace = |jac: &[f64]| (0..d).map(|i| jac[i * d + i]).sum::<f64>();
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
                phi.jacobian(t, x, &mut scratch, &mut jac);
                let mut acc = 0.0;
                if terms.transport {
                    phi.dt(t, x, &mut v);
                    acc += dot(&mo.flux[idx * d..][..d], &v);
                }
                if terms.convection {
                    acc += dot(&mo.second[idx * d * d..][..d * d], &jac);
                }
                if terms.pressure {
                    acc += mo.pressure[idx] * trace(&jac);
                }
                sum.add(vol * acc);
            }
            if terms.concentration {
                for &idx in &concentrated {
                    let (t, x) = centers.of(idx);
                    phi.jacobian(t, x, &mut scratch, &mut jac);
                    sum.add(dot(&mo.conc_second[idx * d * d..][..d * d], &jac) + mo.conc_pressure[idx] * trace(&jac));
                }
            }
            if terms.initial {
                for s in 0..grid.spatial_cells() {
                    phi.value(0.0, centers.x(s), &mut v);
                    sum.add(hd * data.rho0.at(s)[0] * dot(data.u0.at(s), &v));
                }
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

/// Per-slice energy inequality with the full concentration integrand
/// `½|β′|² + β₁^γ/(γ−1)`.
pub fn check_admissibility_c(
    y: &DiscreteYoungMeasure,
    data: &CompressibleData,
    energy_tol_rel: f64,
) -> Result<AdmissibilityReport> {
    data.ensure_matches(y)?;
    Ok(slice_admissibility(y, &IsentropicEnergy::new(data.gamma), data.initial_energy, energy_tol_rel))
}

/// `λ(Ω̄) ≤ max{2, γ−1} · T · E₀`.
pub fn lambda_mass_bound(y: &DiscreteYoungMeasure, data: &CompressibleData) -> LambdaBound {
    let lhs = y.lambda_total();
    let rhs = lambda_bound_constant(data.gamma) * y.grid().t_final() * data.initial_energy;
    LambdaBound { lhs, rhs, holds: lhs <= rhs }
}

/// `max{2, γ−1}`.
pub fn lambda_bound_constant(gamma: f64) -> f64 {
    2.0f64.max(gamma - 1.0)
}

pub fn check_c(y: &DiscreteYoungMeasure, data: &CompressibleData, cfg: &CheckConfig) -> Result<ResidualReport> {
    let dict = TestFunctionDictionary::compressible(y.grid(), cfg.dict_k, cfg.dict_profiles);
    check_c_with(y, data, &dict, cfg)
}

pub fn check_c_with(
    y: &DiscreteYoungMeasure,
    data: &CompressibleData,
    dict: &TestFunctionDictionary,
    cfg: &CheckConfig,
) -> Result<ResidualReport> {
    let mass = residual_mass_c(y, data, dict)?;
    let momentum = residual_momentum_c(y, data, dict)?;
    let adm = check_admissibility_c(y, data, cfg.energy_tol_rel)?;
    let bound = lambda_mass_bound(y, data);
    Ok(ResidualReport::assemble("compressible", cfg.residual_threshold(y.grid()), mass, momentum, adm, Some(bound)))
}
