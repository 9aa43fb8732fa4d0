//! Uniform space–time grid over `(0,T) × T^d` and sampled grid fields.
//!
//! The torus has side length `2π` per axis. Interior cells are indexed
//! time-major: `index = it · nx^d + s`, where the spatial index `s` is
//! row-major with the first axis slowest. When the grid carries a final
//! layer, its `nx^d` zero-volume cells at `t = T` follow the interior cells.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    t_final: f64,
    dim: usize,
    nt: usize,
    nx: usize,
    final_layer: bool,
}

/// Time position of a cell: an interior slab or the final layer at `t = T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSlot {
    Slice(usize),
    Final,
}

impl SpaceTimeGrid {
    pub fn new(t_final: f64, dim: usize, nt: usize, nx: usize, final_layer: bool) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidGrid(format!("final time must be positive, got {t_final}")));
        }
        if dim == 0 || nt == 0 || nx == 0 {
            return Err(Error::InvalidGrid(format!(
                "dimension and cell counts must be positive (d={dim}, nt={nt}, nx={nx})"
            )));
        }
        if nx.checked_pow(dim as u32).and_then(|s| s.checked_mul(nt + 1)).is_none() {
            return Err(Error::InvalidGrid("grid too large".into()));
        }
        Ok(Self { t_final, dim, nt, nx, final_layer })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn has_final_layer(&self) -> bool {
        self.final_layer
    }

    /// Same grid with or without the final layer.
    pub fn with_final_layer(mut self, final_layer: bool) -> Self {
        self.final_layer = final_layer;
        self
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.nt as f64
    }

    pub fn hx(&self) -> f64 {
        TAU / self.nx as f64
    }

    pub fn spatial_cells(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn interior_cells(&self) -> usize {
        self.nt * self.spatial_cells()
    }

    pub fn total_cells(&self) -> usize {
        self.interior_cells() + if self.final_layer { self.spatial_cells() } else { 0 }
    }

    /// Volume of one spatial cell of the torus, `(2π/nx)^d`.
    pub fn spatial_volume(&self) -> f64 {
        self.hx().powi(self.dim as i32)
    }

    /// Volume of one interior space–time cell.
    pub fn cell_volume(&self) -> f64 {
        self.dt() * self.spatial_volume()
    }

    /// `T · (2π)^d`.
    pub fn domain_volume(&self) -> f64 {
        self.t_final * TAU.powi(self.dim as i32)
    }

    /// Volume of cell `index`; zero on the final layer.
    pub fn volume(&self, index: usize) -> f64 {
        if index < self.interior_cells() {
            self.cell_volume()
        } else {
            0.0
        }
    }

    pub fn slot(&self, index: usize) -> (TimeSlot, usize) {
        let sc = self.spatial_cells();
        let it = index / sc;
        let s = index % sc;
        if it < self.nt {
            (TimeSlot::Slice(it), s)
        } else {
            (TimeSlot::Final, s)
        }
    }

    pub fn index(&self, slot: TimeSlot, spatial: usize) -> usize {
        let sc = self.spatial_cells();
        match slot {
            TimeSlot::Slice(it) => it * sc + spatial,
            TimeSlot::Final => self.nt * sc + spatial,
        }
    }

    pub fn time_center(&self, slot: TimeSlot) -> f64 {
        match slot {
            TimeSlot::Slice(it) => (it as f64 + 0.5) * self.dt(),
            TimeSlot::Final => self.t_final,
        }
    }

    /// Writes the center of spatial cell `spatial` into `out` (length `d`).
    pub fn spatial_center(&self, spatial: usize, out: &mut [f64]) {
        let h = self.hx();
        let mut rest = spatial;
        for k in (0..self.dim).rev() {
            let i = rest % self.nx;
            rest /= self.nx;
            out[k] = (i as f64 + 0.5) * h;
        }
    }

    /// Center `(t, x)` of cell `index`.
    pub fn center(&self, index: usize) -> (f64, Vec<f64>) {
        let (slot, s) = self.slot(index);
        let mut x = vec![0.0; self.dim];
        self.spatial_center(s, &mut x);
        (self.time_center(slot), x)
    }

    /// Representative mesh width, `max(Δt, 2π/nx)`.
    pub fn mesh_width(&self) -> f64 {
        self.dt().max(self.hx())
    }

    pub(crate) fn ensure_same(&self, other: &SpaceTimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// A vector-valued field sampled at grid points (cells or spatial cells),
/// stored point-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 || !values.len().is_multiple_of(components) {
            return Err(Error::OutOfRange(format!(
                "{} values do not split into points of {} components",
                values.len(),
                components
            )));
        }
        Ok(Self { components, values })
    }

    pub fn zeros(points: usize, components: usize) -> Self {
        Self { components, values: vec![0.0; points * components] }
    }

    /// Samples `f` at every spatial cell center of `grid`.
    pub fn from_spatial_fn<F>(grid: &SpaceTimeGrid, components: usize, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut x = vec![0.0; grid.dim()];
        let mut values = Vec::with_capacity(grid.spatial_cells() * components);
        for s in 0..grid.spatial_cells() {
            grid.spatial_center(s, &mut x);
            let v = f(&x);
            assert_eq!(v.len(), components, "field sample has wrong length");
            values.extend_from_slice(&v);
        }
        Self { components, values }
    }

    /// Samples `f(t, x)` at every interior cell center of `grid`.
    pub fn from_cell_fn<F>(grid: &SpaceTimeGrid, components: usize, mut f: F) -> Self
    where
        F: FnMut(f64, &[f64]) -> Vec<f64>,
    {
        let mut x = vec![0.0; grid.dim()];
        let mut values = Vec::with_capacity(grid.interior_cells() * components);
        for idx in 0..grid.interior_cells() {
            let (slot, s) = grid.slot(idx);
            grid.spatial_center(s, &mut x);
            let v = f(grid.time_center(slot), &x);
            assert_eq!(v.len(), components, "field sample has wrong length");
            values.extend_from_slice(&v);
        }
        Self { components, values }
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn points(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, point: usize) -> &[f64] {
        &self.values[point * self.components..(point + 1) * self.components]
    }

    pub fn at_mut(&mut self, point: usize) -> &mut [f64] {
        &mut self.values[point * self.components..(point + 1) * self.components]
    }

    /// Largest Euclidean distance between corresponding points.
    pub fn max_distance(&self, other: &Field) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        (0..self.points())
            .map(|p| {
                self.at(p)
                    .iter()
                    .zip(other.at(p))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}
