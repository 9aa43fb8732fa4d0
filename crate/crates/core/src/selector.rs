//! Maximization of `V_f` over the convex hull of a finite candidate family.
//!
//! On the hull, `V_f(Σθ_i Y_i) = Σθ_i c_i − ∫ f(Σθ_i b_i) dx` where `c_i` is
//! the total `f`-energy of candidate `i` and `b_i` its barycenter field. This
//! is concave in `θ`; it is maximized by Frank–Wolfe with away steps and
//! exact line search, and the Frank–Wolfe gap certifies optimality.

use crate::compressible::{check_c, CompressibleData};
use crate::functional::{jensen_defect, total_energy};
use crate::grid::Field;
use crate::incompressible::{check, IncompressibleData};
use crate::integrand::Integrand;
use crate::measure::{barycenter, convex_combine_weighted, DiscreteYoungMeasure};
use crate::report::CheckConfig;
use crate::simplex::SimplexWeights;
use crate::sum::{compensated_sum, NeumaierSum};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Largest family accepted by [`brute_force_simplex`].
pub const BRUTE_FORCE_MAX: usize = 4;

const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Abstract,
    Incompressible(IncompressibleData),
    Compressible(CompressibleData),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Abstract => "abstract",
            Model::Incompressible(_) => "incompressible",
            Model::Compressible(_) => "compressible",
        }
    }
}

/// Nonempty ordered family of measures on one grid with one growth structure.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    candidates: Vec<DiscreteYoungMeasure>,
    model: Model,
}

impl CandidateSet {
    /// Structural validation only.
    pub fn new_unchecked(candidates: Vec<DiscreteYoungMeasure>, model: Model) -> Result<Self> {
        let first = candidates.first().ok_or(Error::EmptyCandidateSet)?;
        for (i, y) in candidates.iter().enumerate().skip(1) {
            if y.grid() != first.grid() {
                return Err(Error::CandidateRejected { index: i, reason: "grid differs from candidate 0".into() });
            }
            if y.growth() != first.growth() || y.phase_dim() != first.phase_dim() {
                return Err(Error::CandidateRejected { index: i, reason: "growth or phase dimension differs from candidate 0".into() });
            }
        }
        Ok(Self { candidates, model })
    }

    pub fn abstract_set(candidates: Vec<DiscreteYoungMeasure>) -> Result<Self> {
        Self::new_unchecked(candidates, Model::Abstract)
    }

    /// Structural validation plus, for a physical model, the residual and
    /// admissibility check of every candidate.
    pub fn new(candidates: Vec<DiscreteYoungMeasure>, model: Model, cfg: &CheckConfig) -> Result<Self> {
        let set = Self::new_unchecked(candidates, model)?;
        for (i, y) in set.candidates.iter().enumerate() {
            let report = match &set.model {
                Model::Abstract => continue,
                Model::Incompressible(data) => check(y, data, cfg),
                Model::Compressible(data) => check_c(y, data, cfg),
            }
            .map_err(|e| Error::CandidateRejected { index: i, reason: e.to_string() })?;
            if !report.passed {
                let reason = if report.residuals_ok {
                    format!("energy margin {:e} at slice {}", report.admissibility.worst_margin, report.admissibility.worst_slice)
                } else {
                    format!("residual {:e} exceeds {:e}", report.max_normalized(), report.residual_threshold)
                };
                return Err(Error::CandidateRejected { index: i, reason });
            }
        }
        Ok(set)
    }

    pub fn candidates(&self) -> &[DiscreteYoungMeasure] {
        &self.candidates
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Precomputed energies and barycenters of a candidate family.
struct Objective<'a> {
    f: &'a dyn Integrand,
    energies: Vec<f64>,
    bary: Vec<Field>,
    vol: f64,
    cells: usize,
    m: usize,
}

impl<'a> Objective<'a> {
    fn new(set: &CandidateSet, f: &'a dyn Integrand) -> Result<Self> {
        let energies = set.candidates.iter().map(|y| total_energy(y, f)).collect::<Result<Vec<_>>>()?;
        let bary: Vec<Field> = set.candidates.iter().map(barycenter).collect();
        let y0 = &set.candidates[0];
        Ok(Self { f, energies, bary, vol: y0.grid().cell_volume(), cells: y0.grid().interior_cells(), m: y0.phase_dim() })
    }

    fn n(&self) -> usize {
        self.energies.len()
    }

    fn scale(&self) -> f64 {
        1.0 + self.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()))
    }

    fn combine_at(&self, p: usize, weights: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (b, &w) in self.bary.iter().zip(weights) {
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(b.at(p)) {
                    *o += w * v;
                }
            }
        }
    }

    /// `(g(θ), ∇g(θ))`.
    fn value_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n();
        let m = self.m;
        let partials: Vec<(f64, Vec<f64>)> = (0..self.cells.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut z = vec![0.0; m];
                let mut g = vec![0.0; m];
                let mut fsum = NeumaierSum::new();
                let mut gsum = vec![NeumaierSum::new(); n];
                for p in chunk * CHUNK..((chunk + 1) * CHUNK).min(self.cells) {
                    self.combine_at(p, theta, &mut z);
                    fsum.add(self.f.eval(&z));
                    self.f.gradient(&z, &mut g);
                    for (i, b) in self.bary.iter().enumerate() {
                        gsum[i].add(g.iter().zip(b.at(p)).map(|(a, c)| a * c).sum::<f64>());
                    }
                }
                (fsum.value(), gsum.into_iter().map(|s| s.value()).collect())
            })
            .collect();
        let integral = self.vol * compensated_sum(partials.iter().map(|(v, _)| *v));
        let linear = compensated_sum(theta.iter().zip(&self.energies).map(|(t, c)| t * c));
        let grad = (0..n)
            .map(|i| self.energies[i] - self.vol * compensated_sum(partials.iter().map(|(_, g)| g[i])))
            .collect();
        (linear - integral, grad)
    }

    /// `∫ |Σ d_i b_i|² dx`.
    fn curvature(&self, d: &[f64]) -> f64 {
        let m = self.m;
        let parts: Vec<f64> = (0..self.cells.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut z = vec![0.0; m];
                let mut s = NeumaierSum::new();
                for p in chunk * CHUNK..((chunk + 1) * CHUNK).min(self.cells) {
                    self.combine_at(p, d, &mut z);
                    s.add(z.iter().map(|v| v * v).sum::<f64>());
                }
                s.value()
            })
            .collect();
        self.vol * compensated_sum(parts)
    }

    /// `d/dt g(θ + t·d)`.
    fn directional(&self, theta: &[f64], d: &[f64], t: f64) -> f64 {
        let point: Vec<f64> = theta.iter().zip(d).map(|(a, b)| a + t * b).collect();
        let (_, grad) = self.value_grad(&point);
        compensated_sum(grad.iter().zip(d).map(|(g, v)| g * v))
    }

    /// Maximizer of `g(θ + t·d)` over `t ∈ [0, t_max]` given `slope = ∇g·d > 0`.
    fn line_search(&self, theta: &[f64], d: &[f64], slope: f64, t_max: f64) -> f64 {
        if let Some(c) = self.f.quadratic_coefficient() {
            let denom = 2.0 * c * self.curvature(d);
            return if denom > 0.0 { (slope / denom).clamp(0.0, t_max) } else { t_max };
        }
        if self.directional(theta, d, t_max) >= 0.0 {
            return t_max;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.directional(theta, d, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// `(g(θ), ∇g(θ))` with `g(θ) = V_f(Σθ_i Y_i)`.
pub fn objective(theta: &SimplexWeights, set: &CandidateSet, f: &dyn Integrand) -> Result<(f64, Vec<f64>)> {
    if theta.len() != set.len() {
        return Err(Error::Simplex(format!("{} weights for {} candidates", theta.len(), set.len())));
    }
    set.candidates[0].ensure_compatible(f)?;
    Ok(Objective::new(set, f)?.value_grad(theta.as_slice()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeOptions {
    /// Gap tolerance; `None` means `1e-10 · (1 + max_i |c_i|)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// Starting point; `None` starts at the best vertex (lowest index on ties).
    pub start: Option<SimplexWeights>,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: 10_000, start: None }
    }
}

/// Relative gap tolerance used when [`MaximizeOptions::tol`] is `None`.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub theta: SimplexWeights,
    pub value: f64,
    /// Frank–Wolfe gap: `g(θ) ≥ max g − gap` over the hull.
    pub gap: f64,
    pub tol: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `g` after each iterate, starting point first.
    pub trace: Vec<f64>,
    pub maximizer: DiscreteYoungMeasure,
    pub barycenter: Field,
    pub total_energy: f64,
}

fn argmax_lowest(v: &[f64], mask: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if mask(i) && best.is_none_or(|b| x > v[b]) {
            best = Some(i);
        }
    }
    best
}

fn argmin_lowest(v: &[f64], mask: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if mask(i) && best.is_none_or(|b| x < v[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn maximize(set: &CandidateSet, f: &dyn Integrand, opts: &MaximizeOptions) -> Result<SelectionResult> {
    set.candidates[0].ensure_compatible(f)?;
    let obj = Objective::new(set, f)?;
    let n = obj.n();
    let tol = opts.tol.unwrap_or(DEFAULT_REL_TOL * obj.scale());
    let mut theta: Vec<f64> = match &opts.start {
        Some(s) if s.len() != n => return Err(Error::Simplex(format!("{} start weights for {n} candidates", s.len()))),
        Some(s) => s.as_slice().to_vec(),
        None => {
            let values: Vec<f64> = (0..n).map(|k| obj.value_grad(SimplexWeights::vertex(n, k).as_slice()).0).collect();
            SimplexWeights::vertex(n, argmax_lowest(&values, |_| true).unwrap_or(0)).into_vec()
        }
    };

    let (mut value, mut grad) = obj.value_grad(&theta);
    let mut trace = vec![value];
    let mut iterations = 0;
    let mut gap;
    loop {
        let dot = compensated_sum(grad.iter().zip(&theta).map(|(g, t)| g * t));
        let s = argmax_lowest(&grad, |_| true).unwrap_or(0);
        gap = (grad[s] - dot).max(0.0);
        if gap <= tol || iterations >= opts.max_iter {
            break;
        }
        let a = argmin_lowest(&grad, |i| theta[i] > 0.0).unwrap_or(s);
        let away_gap = dot - grad[a];
        let mut d = vec![0.0; n];
        let (t_max, away) = if gap >= away_gap || theta[a] >= 1.0 {
            for (di, ti) in d.iter_mut().zip(&theta) {
                *di = -ti;
            }
            d[s] += 1.0;
            (1.0, false)
        } else {
            d.copy_from_slice(&theta);
            d[a] -= 1.0;
            (theta[a] / (1.0 - theta[a]), true)
        };
        let slope = compensated_sum(grad.iter().zip(&d).map(|(g, v)| g * v));
        let t = obj.line_search(&theta, &d, slope, t_max);
        iterations += 1;
        if t <= 0.0 {
            break;
        }
        let mut next: Vec<f64> = theta.iter().zip(&d).map(|(ti, di)| ti + t * di).collect();
        if away && t == t_max {
            next[a] = 0.0;
        }
        let next = SimplexWeights::renormalized(next).into_vec();
        let (v, g) = obj.value_grad(&next);
        if v < value - 1e-14 * obj.scale() {
            break;
        }
        theta = next;
        value = v;
        grad = g;
        trace.push(value);
    }
    let converged = gap <= tol;
    let theta = SimplexWeights::renormalized(theta);
    let maximizer = convex_combine_weighted(&set.candidates, &theta)?;
    let total_energy = total_energy(&maximizer, f)?;
    let barycenter = barycenter(&maximizer);
    Ok(SelectionResult { theta, value, gap, tol, converged, iterations, trace, maximizer, barycenter, total_energy })
}

/// Exhaustive search over the simplex lattice `{k / resolution}`, evaluating
/// `V_f` of each assembled combination directly.
pub fn brute_force_simplex(set: &CandidateSet, f: &dyn Integrand, resolution: usize) -> Result<(SimplexWeights, f64)> {
    let n = set.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooManyCandidates { max: BRUTE_FORCE_MAX, found: n });
    }
    if resolution == 0 {
        return Err(Error::OutOfRange("resolution must be positive".into()));
    }
    let mut points = Vec::new();
    let mut counts = vec![0usize; n];
    lattice(&mut points, &mut counts, 0, resolution);
    let values: Vec<Result<f64>> = points
        .par_iter()
        .map(|k| {
            let theta = SimplexWeights::renormalized(k.iter().map(|&c| c as f64 / resolution as f64).collect());
            Ok(jensen_defect(&convex_combine_weighted(&set.candidates, &theta)?, f)?.value)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let (i, v) = best.expect("lattice is nonempty");
    let theta = SimplexWeights::renormalized(points[i].iter().map(|&c| c as f64 / resolution as f64).collect());
    Ok((theta, v))
}

fn lattice(out: &mut Vec<Vec<usize>>, counts: &mut Vec<usize>, k: usize, remaining: usize) {
    if k + 1 == counts.len() {
        counts[k] = remaining;
        out.push(counts.clone());
        return;
    }
    for c in (0..=remaining).rev() {
        counts[k] = c;
        lattice(out, counts, k + 1, remaining - c);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub runs: usize,
    /// Largest per-cell Euclidean barycenter difference over all pairs.
    pub max_barycenter_diff: f64,
    /// Largest `|E_i − E_j| / max(|E_i|, |E_j|, 1)` over all pairs.
    pub max_energy_rel_diff: f64,
    pub barycenter_tol: f64,
    pub energy_tol_rel: f64,
    pub consistent: bool,
}

/// Compares converged maximizers pairwise. For strictly convex `f` every
/// maximizer shares one barycenter field and one total energy, so an
/// inconsistency signals insufficient convergence or a defect.
pub fn uniqueness_diagnostic(results: &[SelectionResult], barycenter_tol: f64, energy_tol_rel: f64) -> Result<UniquenessReport> {
    for (i, r) in results.iter().enumerate() {
        if !r.converged {
            return Err(Error::NotConverged { index: i, gap: r.gap, tol: r.tol });
        }
    }
    let mut bary = 0.0f64;
    let mut energy = 0.0f64;
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            bary = bary.max(results[i].barycenter.max_distance(&results[j].barycenter));
            let (a, b) = (results[i].total_energy, results[j].total_energy);
            energy = energy.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    Ok(UniquenessReport {
        runs: results.len(),
        max_barycenter_diff: bary,
        max_energy_rel_diff: energy,
        barycenter_tol,
        energy_tol_rel,
        consistent: bary <= barycenter_tol && energy <= energy_tol_rel,
    })
}
