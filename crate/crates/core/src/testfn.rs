//! Test functions on `[0,T) × T^d`: polynomial time profiles vanishing at
//! `t = T` times real Fourier modes, with analytic derivatives.

use crate::grid::SpaceTimeGrid;
use serde::Serialize;

/// `η_j(t) = (1 − t/T)(t/T)^j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeProfile {
    pub power: u32,
    pub t_final: f64,
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        let s = t / self.t_final;
        (1.0 - s) * s.powi(self.power as i32)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let s = t / self.t_final;
        let j = self.power as i32;
        let d = if j == 0 { -1.0 } else { j as f64 * s.powi(j - 1) - (j + 1) as f64 * s.powi(j) };
        d / self.t_final
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Wave {
    Cos,
    Sin,
}

/// `cos(k·x)` or `sin(k·x)`; `k = 0` with `Cos` is the constant mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierMode {
    pub k: Vec<i32>,
    pub wave: Wave,
}

impl FourierMode {
    fn phase(&self, x: &[f64]) -> f64 {
        self.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let p = self.phase(x);
        match self.wave {
            Wave::Cos => p.cos(),
            Wave::Sin => p.sin(),
        }
    }

    /// Writes `∇χ(x)` into `out`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let p = self.phase(x);
        let d = match self.wave {
            Wave::Cos => -p.sin(),
            Wave::Sin => p.cos(),
        };
        for (o, &k) in out.iter_mut().zip(&self.k) {
            *o = k as f64 * d;
        }
    }

    pub fn is_constant(&self) -> bool {
        self.k.iter().all(|&k| k == 0)
    }

    fn label(&self) -> String {
        let w = match self.wave {
            Wave::Cos => "cos",
            Wave::Sin => "sin",
        };
        format!("{w}{:?}", self.k)
    }
}

/// Scalar test `ψ(t, x) = η(t) χ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarTest {
    pub profile: TimeProfile,
    pub mode: FourierMode,
}

impl ScalarTest {
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.profile.value(t) * self.mode.value(x)
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> f64 {
        self.profile.derivative(t) * self.mode.value(x)
    }

    pub fn gradient(&self, t: f64, x: &[f64], out: &mut [f64]) {
        self.mode.gradient(x, out);
        let e = self.profile.value(t);
        for o in out.iter_mut() {
            *o *= e;
        }
    }

    pub fn label(&self) -> String {
        format!("psi[j={},{}]", self.profile.power, self.mode.label())
    }
}

/// Vector test `φ(t, x) = η(t) χ(x) a` with a fixed direction `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorTest {
    pub profile: TimeProfile,
    pub mode: FourierMode,
    pub direction: Vec<f64>,
}

impl VectorTest {
    pub fn value(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let s = self.profile.value(t) * self.mode.value(x);
        for (o, a) in out.iter_mut().zip(&self.direction) {
            *o = s * a;
        }
    }

    pub fn dt(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let s = self.profile.derivative(t) * self.mode.value(x);
        for (o, a) in out.iter_mut().zip(&self.direction) {
            *o = s * a;
        }
    }

    /// Writes `∇φ` row-major: `out[i·d + j] = ∂_j φ_i`.
    pub fn jacobian(&self, t: f64, x: &[f64], grad_scratch: &mut [f64], out: &mut [f64]) {
        let d = self.direction.len();
        self.mode.gradient(x, grad_scratch);
        let e = self.profile.value(t);
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = e * self.direction[i] * grad_scratch[j];
            }
        }
    }

    pub fn divergence(&self, t: f64, x: &[f64], grad_scratch: &mut [f64]) -> f64 {
        self.mode.gradient(x, grad_scratch);
        self.profile.value(t) * self.direction.iter().zip(grad_scratch.iter()).map(|(a, g)| a * g).sum::<f64>()
    }

    pub fn label(&self) -> String {
        format!("phi[j={},{},a={:?}]", self.profile.power, self.mode.label(), self.direction)
    }
}

/// Finite family of scalar tests `ψ` and vector tests `φ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctionDictionary {
    pub scalars: Vec<ScalarTest>,
    pub vectors: Vec<VectorTest>,
}

/// Wavevectors with `|k|_∞ ≤ k_max`, one representative of each `±k` pair,
/// the zero vector first.
fn half_space_wavevectors(d: usize, k_max: i32) -> Vec<Vec<i32>> {
    let side = (2 * k_max + 1) as usize;
    let mut out = vec![vec![0; d]];
    for n in 0..side.pow(d as u32) {
        let mut rest = n;
        let mut k = vec![0i32; d];
        for slot in k.iter_mut().rev() {
            *slot = (rest % side) as i32 - k_max;
            rest /= side;
        }
        if let Some(&first) = k.iter().find(|&&c| c != 0) {
            if first > 0 {
                out.push(k);
            }
        }
    }
    out
}

fn spatial_modes(d: usize, k_max: i32) -> Vec<FourierMode> {
    let mut modes = Vec::new();
    for k in half_space_wavevectors(d, k_max) {
        let constant = k.iter().all(|&c| c == 0);
        modes.push(FourierMode { k: k.clone(), wave: Wave::Cos });
        if !constant {
            modes.push(FourierMode { k, wave: Wave::Sin });
        }
    }
    modes
}

fn profiles(t_final: f64, n_profiles: usize) -> Vec<TimeProfile> {
    (0..n_profiles as u32).map(|power| TimeProfile { power, t_final }).collect()
}

/// Unit vectors spanning `k⊥`: `(I − kkᵀ/|k|²) e_j` for every axis `j`
/// except the first axis of largest `|k_j|`.
fn solenoidal_directions(k: &[i32]) -> Vec<Vec<f64>> {
    let d = k.len();
    let k2: f64 = k.iter().map(|&c| (c * c) as f64).sum();
    let pivot = (0..d).fold(0, |best, j| if k[j].abs() > k[best].abs() { j } else { best });
    let mut out = Vec::new();
    for j in (0..d).filter(|&j| j != pivot) {
        let mut a: Vec<f64> = (0..d).map(|i| -(k[i] * k[j]) as f64 / k2).collect();
        a[j] += 1.0;
        // exact orthogonality after normalization
        let dot: f64 = a.iter().zip(k).map(|(ai, &ki)| ai * ki as f64).sum();
        for (ai, &ki) in a.iter_mut().zip(k) {
            *ai -= dot * ki as f64 / k2;
        }
        let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        out.push(a.into_iter().map(|v| v / n).collect());
    }
    out
}

fn unit(d: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[j] = 1.0;
    e
}

impl TestFunctionDictionary {
    /// Scalar tests for all modes; divergence-free vector tests (projected
    /// Fourier modes and constant vectors).
    pub fn incompressible(grid: &SpaceTimeGrid, k_max: u32, n_profiles: usize) -> Self {
        let d = grid.dim();
        let modes = spatial_modes(d, k_max as i32);
        let profiles = profiles(grid.t_final(), n_profiles);
        let mut scalars = Vec::new();
        let mut vectors = Vec::new();
        for &profile in &profiles {
            for mode in &modes {
                scalars.push(ScalarTest { profile, mode: mode.clone() });
                let directions = if mode.is_constant() {
                    (0..d).map(|j| unit(d, j)).collect()
                } else {
                    solenoidal_directions(&mode.k)
                };
                for direction in directions {
                    vectors.push(VectorTest { profile, mode: mode.clone(), direction });
                }
            }
        }
        Self { scalars, vectors }
    }

    /// Scalar tests for all modes; vector tests along every axis for all modes.
    pub fn compressible(grid: &SpaceTimeGrid, k_max: u32, n_profiles: usize) -> Self {
        let d = grid.dim();
        let modes = spatial_modes(d, k_max as i32);
        let profiles = profiles(grid.t_final(), n_profiles);
        let mut scalars = Vec::new();
        let mut vectors = Vec::new();
        for &profile in &profiles {
            for mode in &modes {
                scalars.push(ScalarTest { profile, mode: mode.clone() });
                for j in 0..d {
                    vectors.push(VectorTest { profile, mode: mode.clone(), direction: unit(d, j) });
                }
            }
        }
        Self { scalars, vectors }
    }

    /// Largest `|∇·φ|` over all vector tests and interior cell centers.
    pub fn max_divergence(&self, grid: &SpaceTimeGrid) -> f64 {
        let mut scratch = vec![0.0; grid.dim()];
        let mut worst = 0.0f64;
        for idx in 0..grid.interior_cells() {
            let (t, x) = grid.center(idx);
            for v in &self.vectors {
                worst = worst.max(v.divergence(t, &x, &mut scratch).abs());
            }
        }
        worst
    }
}

/// Cached cell centers of a grid.
pub(crate) struct Centers {
    times: Vec<f64>,
    xs: Vec<f64>,
    dim: usize,
    spatial: usize,
}

impl Centers {
    pub(crate) fn new(grid: &SpaceTimeGrid) -> Self {
        let dim = grid.dim();
        let spatial = grid.spatial_cells();
        let mut xs = vec![0.0; spatial * dim];
        for (s, chunk) in xs.chunks_mut(dim).enumerate() {
            grid.spatial_center(s, chunk);
        }
        let mut times: Vec<f64> = (0..grid.nt()).map(|it| grid.time_center(crate::grid::TimeSlot::Slice(it))).collect();
        times.push(grid.t_final());
        Self { times, xs, dim, spatial }
    }

    /// Center of cell `index` (final-layer cells sit at `t = T`).
    pub(crate) fn of(&self, index: usize) -> (f64, &[f64]) {
        let s = index % self.spatial;
        (self.times[index / self.spatial], &self.xs[s * self.dim..][..self.dim])
    }

    pub(crate) fn x(&self, spatial: usize) -> &[f64] {
        &self.xs[spatial * self.dim..][..self.dim]
    }

    pub(crate) fn interior(&self) -> usize {
        (self.times.len() - 1) * self.spatial
    }
}

impl ScalarTest {
    /// Max over interior cell centers of `|ψ|`, `|∂ₜψ|` and `|∇ψ|`.
    pub(crate) fn sup(&self, centers: &Centers) -> f64 {
        let mut g = vec![0.0; centers.dim];
        let mut worst = 0.0f64;
        for idx in 0..centers.interior() {
            let (t, x) = centers.of(idx);
            self.gradient(t, x, &mut g);
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(self.value(t, x).abs()).max(self.dt(t, x).abs()).max(gn);
        }
        worst
    }
}

impl VectorTest {
    /// Max over interior cell centers of `|φ|`, `|∂ₜφ|` and `|∇φ|` (Frobenius).
    pub(crate) fn sup(&self, centers: &Centers) -> f64 {
        let d = centers.dim;
        let mut v = vec![0.0; d];
        let mut scratch = vec![0.0; d];
        let mut jac = vec![0.0; d * d];
        let norm = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut worst = 0.0f64;
        for idx in 0..centers.interior() {
            let (t, x) = centers.of(idx);
            self.value(t, x, &mut v);
            worst = worst.max(norm(&v));
            self.dt(t, x, &mut v);
            worst = worst.max(norm(&v));
            self.jacobian(t, x, &mut scratch, &mut jac);
            worst = worst.max(norm(&jac));
        }
        worst
    }
}
