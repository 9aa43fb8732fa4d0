//! Seeded random measures shared by the integration and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use turbmax::compressible::CompressibleData;
use turbmax::{
    AngleAtom, CellMeasure, DiscreteYoungMeasure, GrowthStructure, Integrand, IsentropicEnergy, PhaseAtom, SpaceTimeGrid,
};

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A grid with at most 4² cells per slice; a final layer with probability `final_prob`.
pub fn small_grid(rng: &mut ChaCha8Rng, final_prob: f64) -> SpaceTimeGrid {
    let final_layer = rng.gen_bool(final_prob);
    let d = rng.gen_range(1..=2);
    let nt = rng.gen_range(1..=3);
    let nx = rng.gen_range(2..=4);
    SpaceTimeGrid::new(rng.gen_range(0.5..2.0), d, nt, nx, final_layer).unwrap()
}

pub fn phase_dim(grid: &SpaceTimeGrid, growth: GrowthStructure) -> usize {
    growth.phase_dim_for(grid.dim()).unwrap_or(grid.dim())
}

/// Random probability weights with `n` entries, none zero.
pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / s).collect()
}

/// A phase point; densities are kept away from vacuum.
pub fn phase_point(rng: &mut ChaCha8Rng, growth: GrowthStructure, m: usize) -> Vec<f64> {
    let mut z: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
    if growth.is_isentropic() {
        z[0] = rng.gen_range(0.1..3.0);
    }
    z
}

pub fn surface_point(rng: &mut ChaCha8Rng, growth: GrowthStructure, m: usize) -> Vec<f64> {
    loop {
        let mut z: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if growth.is_isentropic() {
            z[0] = z[0].abs();
        }
        if let Ok((_, theta)) = growth.project(&z) {
            return theta;
        }
    }
}

pub fn angle_atoms(rng: &mut ChaCha8Rng, growth: GrowthStructure, m: usize) -> Vec<AngleAtom> {
    let k = rng.gen_range(1..=2);
    weights(rng, k).into_iter().map(|w| AngleAtom { theta: surface_point(rng, growth, m), w }).collect()
}

pub fn random_cell(rng: &mut ChaCha8Rng, growth: GrowthStructure, m: usize, conc_prob: f64) -> CellMeasure {
    let k = rng.gen_range(1..=3);
    let atoms = weights(rng, k).into_iter().map(|w| PhaseAtom { z: phase_point(rng, growth, m), w }).collect();
    let cell = CellMeasure::from_atoms(atoms);
    if rng.gen_bool(conc_prob) {
        let mass = rng.gen_range(0.01..0.5);
        let angles = angle_atoms(rng, growth, m);
        cell.with_concentration(mass, angles)
    } else {
        cell
    }
}

/// Random measure; final-layer cells, when present, carry concentration only.
pub fn random_measure(rng: &mut ChaCha8Rng, grid: SpaceTimeGrid, growth: GrowthStructure) -> DiscreteYoungMeasure {
    let m = phase_dim(&grid, growth);
    let mut cells: Vec<CellMeasure> = (0..grid.interior_cells()).map(|_| random_cell(rng, growth, m, 0.3)).collect();
    for _ in grid.interior_cells()..grid.total_cells() {
        let cell = if rng.gen_bool(0.3) {
            let mass = rng.gen_range(0.01..0.5);
            let angles = angle_atoms(rng, growth, m);
            CellMeasure::default().with_concentration(mass, angles)
        } else {
            CellMeasure::default()
        };
        cells.push(cell);
    }
    DiscreteYoungMeasure::new(grid, growth, m, cells).unwrap()
}

/// A measure with the same barycenter as `y` in every cell, built from
/// symmetric perturbations of the mean; concentration is drawn afresh.
pub fn same_barycenter(rng: &mut ChaCha8Rng, y: &DiscreteYoungMeasure) -> DiscreteYoungMeasure {
    let growth = y.growth();
    let m = y.phase_dim();
    let interior = y.grid().interior_cells();
    let cells = y
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i >= interior {
                return c.clone();
            }
            let mean = c.mean(m);
            let amp = if growth.is_isentropic() { 0.9 * mean[0] } else { 1.0 };
            let dz: Vec<f64> = (0..m).map(|_| rng.gen_range(-amp..amp)).collect();
            let plus: Vec<f64> = mean.iter().zip(&dz).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = mean.iter().zip(&dz).map(|(a, b)| a - b).collect();
            let cell = CellMeasure::from_atoms(vec![PhaseAtom { z: plus, w: 0.5 }, PhaseAtom { z: minus, w: 0.5 }]);
            if rng.gen_bool(0.3) {
                let mass = rng.gen_range(0.01..0.5);
                let angles = angle_atoms(rng, growth, m);
                cell.with_concentration(mass, angles)
            } else {
                cell
            }
        })
        .collect();
    DiscreteYoungMeasure::new(*y.grid(), growth, m, cells).unwrap()
}

pub fn random_growth(rng: &mut ChaCha8Rng) -> GrowthStructure {
    if rng.gen_bool(0.5) {
        GrowthStructure::Quadratic
    } else {
        GrowthStructure::Isentropic { gamma: [1.4, 2.0, 3.0][rng.gen_range(0..3)] }
    }
}

/// Largest `1 + |oscillation| + |concentration|` among the reports.
pub fn scale_of(reports: &[&turbmax::FunctionalReport]) -> f64 {
    reports.iter().map(|r| r.scale()).fold(1.0, f64::max)
}

/// Random positive density and velocity on `grid`.
pub fn compressible_data(rng: &mut ChaCha8Rng, grid: &SpaceTimeGrid, gamma: f64) -> CompressibleData {
    let amp = rng.gen_range(0.0..0.5);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let u: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    CompressibleData::from_fn(grid, gamma, |x| {
        let rho = 1.0 + amp * (x[0] + phase).sin();
        (rho, u.iter().map(|c| c * x[grid.dim() - 1].cos()).collect())
    })
    .unwrap()
}

/// Angle minimizing `f∞` on the isentropic recession surface.
pub fn cheapest_angle(gamma: f64, m: usize) -> Vec<f64> {
    let mut theta = vec![0.0; m];
    if gamma - 1.0 > 2.0 {
        theta[0] = 1.0;
    } else {
        theta[1] = 1.0;
    }
    theta
}

/// A measure whose energy stays below `E₀` on every slice: oscillation atoms
/// are scaled copies `c·z₀` with `c ≤ 1`, and a fraction `u < 1` of each
/// slice's remaining budget is spent on concentration.
pub fn admissible_compressible(rng: &mut ChaCha8Rng, grid: SpaceTimeGrid, data: &CompressibleData) -> DiscreteYoungMeasure {
    let gamma = data.gamma();
    let growth = GrowthStructure::Isentropic { gamma };
    let f = IsentropicEnergy::new(gamma);
    let m = grid.dim() + 1;
    let sc = grid.spatial_cells();
    let hd = grid.spatial_volume();
    let e0 = data.initial_energy();
    let z0: Vec<Vec<f64>> = (0..sc)
        .map(|s| {
            let r = data.rho0().at(s)[0];
            std::iter::once(r).chain(data.u0().at(s).iter().map(|u| r.sqrt() * u)).collect()
        })
        .collect();
    let mut cells = Vec::with_capacity(grid.total_cells());
    for _ in 0..grid.nt() {
        let mut slice = Vec::with_capacity(sc);
        let mut osc = 0.0;
        for z in &z0 {
            let (c1, c2) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
            let w = rng.gen_range(0.1..0.9);
            let cell = CellMeasure::from_atoms(vec![
                PhaseAtom { z: z.iter().map(|v| c1 * v).collect(), w },
                PhaseAtom { z: z.iter().map(|v| c2 * v).collect(), w: 1.0 - w },
            ]);
            osc += hd * cell.expect(|z| f.eval(z));
            slice.push(cell);
        }
        let budget = (e0 - osc).max(0.0) * rng.gen_range(0.3..0.999);
        let hits: Vec<usize> = (0..sc).filter(|_| rng.gen_bool(0.5)).collect();
        if !hits.is_empty() {
            let shares = weights(rng, hits.len());
            for (&s, share) in hits.iter().zip(shares) {
                let theta =
                    if rng.gen_bool(0.5) { cheapest_angle(gamma, m) } else { surface_point(rng, growth, m) };
                let lambda = budget * grid.dt() * share / f.recession(&theta);
                let cell = std::mem::take(&mut slice[s]);
                slice[s] = cell.with_concentration(lambda, vec![AngleAtom { theta, w: 1.0 }]);
            }
        }
        cells.extend(slice);
    }
    cells.resize(grid.total_cells(), CellMeasure::default());
    DiscreteYoungMeasure::new(grid, growth, m, cells).unwrap()
}
