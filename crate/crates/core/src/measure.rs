//! Finite-atomic generalized Young measures and their algebra.
//!
//! Each interior cell carries an oscillation measure `ν` (probability atoms
//! in phase space), a concentration mass `λ` (measure mass, not density)
//! and, when that mass is positive, angle atoms `ν∞` on the recession
//! surface. Final-layer cells carry only concentration.

use crate::grid::{Field, SpaceTimeGrid};
use crate::growth::GrowthStructure;
use crate::integrand::Integrand;
use crate::simplex::SimplexWeights;
use crate::sum::{compensated_sum, NeumaierSum};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-cell probability weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Angle atoms must lie within this residual of the recession surface.
pub const SURFACE_TOL: f64 = 1e-10;
/// Isentropic phase atoms need density strictly above this floor.
pub const VACUUM_FLOOR: f64 = 1e-14;

const PAR_MIN_LEN: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAtom {
    pub z: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleAtom {
    pub theta: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CellMeasure {
    pub atoms: Vec<PhaseAtom>,
    pub lambda_mass: f64,
    pub angle_atoms: Vec<AngleAtom>,
}

impl CellMeasure {
    pub fn dirac(z: Vec<f64>) -> Self {
        Self { atoms: vec![PhaseAtom { z, w: 1.0 }], ..Default::default() }
    }

    pub fn from_atoms(atoms: Vec<PhaseAtom>) -> Self {
        Self { atoms, ..Default::default() }
    }

    /// Replaces the concentration part.
    pub fn with_concentration(mut self, lambda_mass: f64, angle_atoms: Vec<AngleAtom>) -> Self {
        self.lambda_mass = lambda_mass;
        self.angle_atoms = angle_atoms;
        self
    }

    /// `⟨ν, g⟩`.
    pub fn expect<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.w * g(&a.z)))
    }

    /// `⟨ν∞, g⟩`; zero when there are no angle atoms.
    pub fn expect_angle<G: Fn(&[f64]) -> f64>(&self, g: G) -> f64 {
        compensated_sum(self.angle_atoms.iter().map(|a| a.w * g(&a.theta)))
    }

    /// Writes `⟨ν, ·⟩` into `out`.
    pub fn mean_into(&self, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = compensated_sum(self.atoms.iter().map(|a| a.w * a.z[k]));
        }
    }

    pub fn mean(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.mean_into(&mut out);
        out
    }

    /// Concentration pairing `λ·⟨ν∞, f∞⟩` of this cell.
    pub fn concentration_energy(&self, f: &dyn Integrand) -> f64 {
        if self.lambda_mass == 0.0 {
            0.0
        } else {
            self.lambda_mass * self.expect_angle(|th| f.recession(th))
        }
    }
}

/// A generalized Young measure with finitely many atoms per cell.
///
/// Immutable after construction; every constructor validates weights,
/// dimensions, the recession-surface constraint and (for the isentropic
/// structure) the vacuum floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteYoungMeasure {
    grid: SpaceTimeGrid,
    growth: GrowthStructure,
    phase_dim: usize,
    cells: Vec<CellMeasure>,
}

fn validate_cell(
    idx: usize,
    cell: &CellMeasure,
    interior: bool,
    phase_dim: usize,
    growth: &GrowthStructure,
) -> Result<()> {
    if interior {
        if cell.atoms.is_empty() {
            return Err(Error::EmptyCell { cell: idx });
        }
        let mut sum = NeumaierSum::new();
        for a in &cell.atoms {
            if a.z.len() != phase_dim {
                return Err(Error::PhaseDimension { expected: phase_dim, found: a.z.len() });
            }
            if !a.w.is_finite() || a.z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { cell: idx, what: "phase atom" });
            }
            if a.w < 0.0 {
                return Err(Error::NegativeWeight { cell: idx, weight: a.w });
            }
            if growth.is_isentropic() && a.z[0] <= VACUUM_FLOOR {
                return Err(Error::Vacuum { cell: idx, density: a.z[0] });
            }
            sum.add(a.w);
        }
        if (sum.value() - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { cell: idx, what: "phase", sum: sum.value() });
        }
    } else if !cell.atoms.is_empty() {
        return Err(Error::AtomsInFinalLayer { cell: idx });
    }

    if !cell.lambda_mass.is_finite() {
        return Err(Error::NonFinite { cell: idx, what: "concentration mass" });
    }
    if cell.lambda_mass < 0.0 {
        return Err(Error::NegativeMass { cell: idx, mass: cell.lambda_mass });
    }
    if (cell.lambda_mass > 0.0) != !cell.angle_atoms.is_empty() {
        return Err(Error::AngleAtomsMismatch { cell: idx });
    }
    if !cell.angle_atoms.is_empty() {
        let mut sum = NeumaierSum::new();
        for a in &cell.angle_atoms {
            if a.theta.len() != phase_dim {
                return Err(Error::PhaseDimension { expected: phase_dim, found: a.theta.len() });
            }
            if !a.w.is_finite() || a.theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { cell: idx, what: "angle atom" });
            }
            if a.w < 0.0 {
                return Err(Error::NegativeWeight { cell: idx, weight: a.w });
            }
            let residual = growth.surface_residual(&a.theta);
            if residual > SURFACE_TOL {
                return Err(Error::OffSurface { cell: idx, residual });
            }
            sum.add(a.w);
        }
        if (sum.value() - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSum { cell: idx, what: "angle", sum: sum.value() });
        }
    }
    Ok(())
}

impl DiscreteYoungMeasure {
    pub fn new(
        grid: SpaceTimeGrid,
        growth: GrowthStructure,
        phase_dim: usize,
        cells: Vec<CellMeasure>,
    ) -> Result<Self> {
        if phase_dim == 0 {
            return Err(Error::PhaseDimension { expected: 1, found: 0 });
        }
        if let Some(m) = growth.phase_dim_for(grid.dim()) {
            if m != phase_dim {
                return Err(Error::PhaseDimension { expected: m, found: phase_dim });
            }
        }
        if cells.len() != grid.total_cells() {
            return Err(Error::CellCount { expected: grid.total_cells(), found: cells.len() });
        }
        let interior = grid.interior_cells();
        cells
            .par_iter()
            .enumerate()
            .with_min_len(PAR_MIN_LEN)
            .try_for_each(|(idx, c)| validate_cell(idx, c, idx < interior, phase_dim, &growth))?;
        let y = Self { grid, growth, phase_dim, cells };
        if !y.mass().is_finite() {
            return Err(Error::NonFinite { cell: 0, what: "total mass" });
        }
        Ok(y)
    }

    /// Dirac measure `δ_{v(cell center)}` per interior cell, no concentration.
    pub fn from_field(grid: SpaceTimeGrid, growth: GrowthStructure, field: &Field) -> Result<Self> {
        if field.points() != grid.interior_cells() {
            return Err(Error::FieldShape {
                expected: grid.interior_cells() * field.components(),
                found: field.values().len(),
            });
        }
        let mut cells: Vec<CellMeasure> =
            (0..field.points()).map(|p| CellMeasure::dirac(field.at(p).to_vec())).collect();
        cells.resize(grid.total_cells(), CellMeasure::default());
        Self::new(grid, growth, field.components(), cells)
    }

    /// Samples `v(t, x)` at interior cell centers; see [`Self::from_field`].
    pub fn from_fn<F>(grid: SpaceTimeGrid, growth: GrowthStructure, phase_dim: usize, v: F) -> Result<Self>
    where
        F: FnMut(f64, &[f64]) -> Vec<f64>,
    {
        let field = Field::from_cell_fn(&grid, phase_dim, v);
        Self::from_field(grid, growth, &field)
    }

    /// Atoms `ν(t, x)` sampled at interior cell centers, no concentration.
    pub fn from_fn_atoms<F>(grid: SpaceTimeGrid, growth: GrowthStructure, phase_dim: usize, mut nu: F) -> Result<Self>
    where
        F: FnMut(f64, &[f64]) -> Vec<PhaseAtom>,
    {
        let mut cells = Vec::with_capacity(grid.total_cells());
        for idx in 0..grid.interior_cells() {
            let (t, x) = grid.center(idx);
            cells.push(CellMeasure::from_atoms(nu(t, &x)));
        }
        cells.resize(grid.total_cells(), CellMeasure::default());
        Self::new(grid, growth, phase_dim, cells)
    }

    /// Same oscillation measure in every interior cell, no concentration.
    pub fn uniform(grid: SpaceTimeGrid, growth: GrowthStructure, atoms: Vec<PhaseAtom>) -> Result<Self> {
        let phase_dim = atoms.first().map(|a| a.z.len()).unwrap_or(0);
        let mut cells = vec![CellMeasure::from_atoms(atoms); grid.interior_cells()];
        cells.resize(grid.total_cells(), CellMeasure::default());
        Self::new(grid, growth, phase_dim, cells)
    }

    /// Copy with cell `index` replaced; validated like [`Self::new`].
    pub fn with_cell(&self, index: usize, cell: CellMeasure) -> Result<Self> {
        if index >= self.cells.len() {
            return Err(Error::OutOfRange(format!("cell index {index}")));
        }
        validate_cell(index, &cell, index < self.grid.interior_cells(), self.phase_dim, &self.growth)?;
        let mut cells = self.cells.clone();
        cells[index] = cell;
        Ok(Self { cells, ..self.clone_header() })
    }

    /// Copy whose cells are transformed by `f` and revalidated.
    pub fn map_cells<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &CellMeasure) -> CellMeasure,
    {
        let cells = self.cells.iter().enumerate().map(|(i, c)| f(i, c)).collect();
        Self::new(self.grid, self.growth, self.phase_dim, cells)
    }

    fn clone_header(&self) -> Self {
        Self { grid: self.grid, growth: self.growth, phase_dim: self.phase_dim, cells: Vec::new() }
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn growth(&self) -> GrowthStructure {
        self.growth
    }

    pub fn phase_dim(&self) -> usize {
        self.phase_dim
    }

    pub fn cells(&self) -> &[CellMeasure] {
        &self.cells
    }

    pub fn cell(&self, index: usize) -> &CellMeasure {
        &self.cells[index]
    }

    pub fn interior(&self) -> &[CellMeasure] {
        &self.cells[..self.grid.interior_cells()]
    }

    pub fn final_layer(&self) -> &[CellMeasure] {
        &self.cells[self.grid.interior_cells()..]
    }

    /// `λ(Ω̄)`.
    pub fn lambda_total(&self) -> f64 {
        compensated_sum(self.cells.iter().map(|c| c.lambda_mass))
    }

    /// `∫⟨ν, weight⟩ dx + λ(Ω̄)`, the quantity bounded for every generalized
    /// Young measure.
    pub fn mass(&self) -> f64 {
        let vol = self.grid.cell_volume();
        let g = self.growth;
        let osc = compensated_sum(self.interior().iter().map(|c| vol * c.expect(|z| g.weight(z))));
        osc + self.lambda_total()
    }

    /// Merges atoms whose points lie within `eps` (max-norm) of an earlier
    /// atom in the same cell. Off by default everywhere in the crate.
    pub fn coalesce(&self, eps: f64) -> Result<Self> {
        fn merge_phase(atoms: &[PhaseAtom], eps: f64) -> Vec<PhaseAtom> {
            let mut out: Vec<PhaseAtom> = Vec::with_capacity(atoms.len());
            for a in atoms {
                match out.iter_mut().find(|b| close(&b.z, &a.z, eps)) {
                    Some(b) => b.w += a.w,
                    None => out.push(a.clone()),
                }
            }
            out
        }
        fn merge_angle(atoms: &[AngleAtom], eps: f64) -> Vec<AngleAtom> {
            let mut out: Vec<AngleAtom> = Vec::with_capacity(atoms.len());
            for a in atoms {
                match out.iter_mut().find(|b| close(&b.theta, &a.theta, eps)) {
                    Some(b) => b.w += a.w,
                    None => out.push(a.clone()),
                }
            }
            out
        }
        fn close(a: &[f64], b: &[f64], eps: f64) -> bool {
            a.iter().zip(b).all(|(x, y)| (x - y).abs() <= eps)
        }
        self.map_cells(|_, c| CellMeasure {
            atoms: merge_phase(&c.atoms, eps),
            lambda_mass: c.lambda_mass,
            angle_atoms: merge_angle(&c.angle_atoms, eps),
        })
    }

    pub(crate) fn ensure_compatible(&self, f: &dyn Integrand) -> Result<()> {
        if self.growth != f.growth() {
            return Err(Error::GrowthMismatch { left: self.growth.to_string(), right: f.growth().to_string() });
        }
        if let Some(m) = f.phase_dim() {
            if m != self.phase_dim {
                return Err(Error::PhaseDimension { expected: self.phase_dim, found: m });
            }
        }
        Ok(())
    }
}

/// Barycenter field `⟨ν_x, ·⟩` at interior cells.
pub fn barycenter(y: &DiscreteYoungMeasure) -> Field {
    let m = y.phase_dim();
    let mut field = Field::zeros(y.grid().interior_cells(), m);
    for (p, c) in y.interior().iter().enumerate() {
        c.mean_into(field.at_mut(p));
    }
    field
}

/// `∫φ⟨ν, f⟩ dx + ∫φ⟨ν∞, f∞⟩ dλ` by midpoint quadrature, `φ` evaluated at
/// cell centers (the final layer at `t = T`).
pub fn pairing<P>(y: &DiscreteYoungMeasure, f: &dyn Integrand, phi: P) -> Result<f64>
where
    P: Fn(f64, &[f64]) -> f64 + Sync,
{
    y.ensure_compatible(f)?;
    let grid = *y.grid();
    let contributions: Vec<f64> = y
        .cells()
        .par_iter()
        .enumerate()
        .with_min_len(PAR_MIN_LEN)
        .map(|(idx, c)| {
            let (t, x) = grid.center(idx);
            let weight = phi(t, &x);
            let vol = grid.volume(idx);
            let osc = if vol > 0.0 { vol * c.expect(|z| f.eval(z)) } else { 0.0 };
            weight * (osc + c.concentration_energy(f))
        })
        .collect();
    let value = compensated_sum(contributions);
    if !value.is_finite() {
        return Err(Error::NonFinite { cell: 0, what: "pairing value" });
    }
    Ok(value)
}

fn push_phase(atoms: &mut Vec<PhaseAtom>, z: &[f64], w: f64) {
    if w == 0.0 {
        return;
    }
    match atoms.iter_mut().find(|a| a.z.iter().zip(z).all(|(p, q)| p.to_bits() == q.to_bits())) {
        Some(a) => a.w += w,
        None => atoms.push(PhaseAtom { z: z.to_vec(), w }),
    }
}

fn push_angle(atoms: &mut Vec<AngleAtom>, theta: &[f64], w: f64) {
    if w == 0.0 {
        return;
    }
    match atoms.iter_mut().find(|a| a.theta.iter().zip(theta).all(|(p, q)| p.to_bits() == q.to_bits())) {
        Some(a) => a.w += w,
        None => atoms.push(AngleAtom { theta: theta.to_vec(), w }),
    }
}

fn combine_cells(cells: &[&CellMeasure], weights: &[f64]) -> CellMeasure {
    let mut atoms = Vec::new();
    for (c, &w) in cells.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for a in &c.atoms {
            push_phase(&mut atoms, &a.z, w * a.w);
        }
    }
    let lambda_mass = compensated_sum(cells.iter().zip(weights).map(|(c, &w)| w * c.lambda_mass));
    let mut angle_atoms = Vec::new();
    if lambda_mass > 0.0 {
        for (c, &w) in cells.iter().zip(weights) {
            let share = w * c.lambda_mass / lambda_mass;
            if share == 0.0 {
                continue;
            }
            for a in &c.angle_atoms {
                push_angle(&mut angle_atoms, &a.theta, share * a.w);
            }
        }
    }
    CellMeasure { atoms, lambda_mass, angle_atoms }
}

/// Convex combination `Σ θ_i Y_i`: per cell `ν̂ = Σθ_iν_i`, `λ̂ = Σθ_iλ_i`
/// and `ν̂∞ = Σ (θ_iλ_i/λ̂) ν∞_i`. Only bitwise-equal points are merged;
/// zero-weight contributions are dropped.
pub fn convex_combine_weighted(measures: &[DiscreteYoungMeasure], theta: &SimplexWeights) -> Result<DiscreteYoungMeasure> {
    let first = measures.first().ok_or(Error::EmptyCandidateSet)?;
    if theta.len() != measures.len() {
        return Err(Error::Simplex(format!("{} weights for {} measures", theta.len(), measures.len())));
    }
    for y in &measures[1..] {
        first.grid().ensure_same(y.grid())?;
        if y.growth() != first.growth() {
            return Err(Error::GrowthMismatch { left: first.growth().to_string(), right: y.growth().to_string() });
        }
        if y.phase_dim() != first.phase_dim() {
            return Err(Error::PhaseDimension { expected: first.phase_dim(), found: y.phase_dim() });
        }
    }
    let w = theta.as_slice();
    let cells: Vec<CellMeasure> = (0..first.cells().len())
        .into_par_iter()
        .with_min_len(PAR_MIN_LEN)
        .map(|idx| {
            let cs: Vec<&CellMeasure> = measures.iter().map(|y| y.cell(idx)).collect();
            combine_cells(&cs, w)
        })
        .collect();
    DiscreteYoungMeasure::new(*first.grid(), first.growth(), first.phase_dim(), cells)
}

/// `τ·Y1 + (1−τ)·Y2`.
pub fn convex_combine(y1: &DiscreteYoungMeasure, y2: &DiscreteYoungMeasure, tau: f64) -> Result<DiscreteYoungMeasure> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::OutOfRange(format!("tau must lie in [0,1], got {tau}")));
    }
    let theta = SimplexWeights::new(vec![tau, 1.0 - tau])?;
    convex_combine_weighted(&[y1.clone(), y2.clone()], &theta)
}
