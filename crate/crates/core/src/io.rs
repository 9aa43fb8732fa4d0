//! JSON files for measures and initial data.
//!
//! Measure file:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "grid": { "T": 1.0, "d": 2, "nt": 8, "nx": 8, "final_layer": false },
//!   "growth": { "kind": "quadratic" },
//!   "phase_dim": 2,
//!   "background": [ { "z": [0.0, 0.0], "w": 1.0 } ],
//!   "cells": [ { "index": 3, "atoms": [ { "z": [1.0, 0.0], "w": 1.0 } ],
//!                "lambda_mass": 0.5, "angle_atoms": [ { "theta": [1.0, 0.0], "w": 1.0 } ] } ]
//! }
//! ```
//!
//! Interior cells absent from `cells` carry the `background` atoms and no
//! concentration; absent final-layer cells are empty. Floats are written in
//! shortest round-trip form, so write-then-read is bit-exact.

use crate::grid::{Field, SpaceTimeGrid};
use crate::growth::GrowthStructure;
use crate::measure::{AngleAtom, CellMeasure, DiscreteYoungMeasure, PhaseAtom};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub d: usize,
    pub nt: usize,
    pub nx: usize,
    #[serde(default)]
    pub final_layer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GrowthBlock {
    Quadratic,
    Power { p: f64 },
    Isentropic { gamma: f64 },
}

impl From<GrowthStructure> for GrowthBlock {
    fn from(g: GrowthStructure) -> Self {
        match g {
            GrowthStructure::Quadratic => GrowthBlock::Quadratic,
            GrowthStructure::PowerP(p) => GrowthBlock::Power { p },
            GrowthStructure::Isentropic { gamma } => GrowthBlock::Isentropic { gamma },
        }
    }
}

impl GrowthBlock {
    fn build(self) -> Result<GrowthStructure> {
        match self {
            GrowthBlock::Quadratic => Ok(GrowthStructure::Quadratic),
            GrowthBlock::Power { p } => GrowthStructure::power(p),
            GrowthBlock::Isentropic { gamma } => GrowthStructure::isentropic(gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub index: usize,
    #[serde(default)]
    pub atoms: Vec<PhaseAtom>,
    #[serde(default)]
    pub lambda_mass: f64,
    #[serde(default)]
    pub angle_atoms: Vec<AngleAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub schema_version: u32,
    pub grid: GridBlock,
    pub growth: GrowthBlock,
    pub phase_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<Vec<PhaseAtom>>,
    pub cells: Vec<CellEntry>,
}

fn schema(position: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { position: position.into(), message: message.into() }
}

fn json_error(e: serde_json::Error) -> Error {
    schema(format!("line {}, column {}", e.line(), e.column()), e.to_string())
}

fn cell_of(e: &Error) -> Option<usize> {
    match e {
        Error::NonFinite { cell, .. }
        | Error::NegativeWeight { cell, .. }
        | Error::WeightSum { cell, .. }
        | Error::EmptyCell { cell }
        | Error::AtomsInFinalLayer { cell }
        | Error::Vacuum { cell, .. }
        | Error::NegativeMass { cell, .. }
        | Error::AngleAtomsMismatch { cell }
        | Error::OffSurface { cell, .. } => Some(*cell),
        _ => None,
    }
}

impl MeasureFile {
    pub fn from_measure(y: &DiscreteYoungMeasure) -> Self {
        let g = y.grid();
        let interior = g.interior_cells();
        let background = y.interior().first().map(|c| c.atoms.clone());
        let cells = y
            .cells()
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                let differs = *i >= interior || Some(&c.atoms) != background.as_ref();
                c.lambda_mass > 0.0 || (differs && !c.atoms.is_empty())
            })
            .map(|(index, c)| CellEntry {
                index,
                atoms: c.atoms.clone(),
                lambda_mass: c.lambda_mass,
                angle_atoms: c.angle_atoms.clone(),
            })
            .collect();
        MeasureFile {
            schema_version: SCHEMA_VERSION,
            grid: GridBlock { t_final: g.t_final(), d: g.dim(), nt: g.nt(), nx: g.nx(), final_layer: g.has_final_layer() },
            growth: y.growth().into(),
            phase_dim: y.phase_dim(),
            background,
            cells,
        }
    }

    pub fn into_measure(self) -> Result<DiscreteYoungMeasure> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("unsupported version {}", self.schema_version)));
        }
        let gb = self.grid;
        let grid = SpaceTimeGrid::new(gb.t_final, gb.d, gb.nt, gb.nx, gb.final_layer).map_err(|e| schema("grid", e.to_string()))?;
        let growth = self.growth.build().map_err(|e| schema("growth", e.to_string()))?;
        let interior = grid.interior_cells();
        let total = grid.total_cells();
        let mut cells: Vec<Option<CellMeasure>> = vec![None; total];
        let mut origin: Vec<Option<usize>> = vec![None; total];
        for (k, entry) in self.cells.into_iter().enumerate() {
            if entry.index >= total {
                return Err(schema(format!("cells[{k}].index"), format!("{} is out of range (grid has {total} cells)", entry.index)));
            }
            if origin[entry.index].is_some() {
                return Err(schema(format!("cells[{k}].index"), format!("cell {} listed twice", entry.index)));
            }
            let (idx, atoms) = match (entry.atoms.is_empty(), entry.index < interior, &self.background) {
                (true, true, Some(bg)) => (entry.index, bg.clone()),
                _ => (entry.index, entry.atoms),
            };
            origin[idx] = Some(k);
            cells[idx] = Some(CellMeasure { atoms, lambda_mass: entry.lambda_mass, angle_atoms: entry.angle_atoms });
        }
        let mut dense = Vec::with_capacity(total);
        for (i, c) in cells.into_iter().enumerate() {
            dense.push(match c {
                Some(c) => c,
                None if i >= interior => CellMeasure::default(),
                None => match &self.background {
                    Some(bg) => CellMeasure::from_atoms(bg.clone()),
                    None => return Err(schema("cells", format!("interior cell {i} missing and no background given"))),
                },
            });
        }
        DiscreteYoungMeasure::new(grid, growth, self.phase_dim, dense).map_err(|e| {
            let position = match cell_of(&e) {
                Some(c) => match origin[c] {
                    Some(k) => format!("cells[{k}] (cell {c})"),
                    None => format!("background (cell {c})"),
                },
                None => "measure".to_string(),
            };
            schema(position, e.to_string())
        })
    }
}

pub fn measure_to_json(y: &DiscreteYoungMeasure) -> Result<String> {
    Ok(serde_json::to_string_pretty(&MeasureFile::from_measure(y))?)
}

pub fn measure_from_json(text: &str) -> Result<DiscreteYoungMeasure> {
    let file: MeasureFile = serde_json::from_str(text).map_err(json_error)?;
    file.into_measure()
}

pub fn read_measure(path: &Path) -> Result<DiscreteYoungMeasure> {
    measure_from_json(&std::fs::read_to_string(path)?)
}

pub fn write_measure(path: &Path, y: &DiscreteYoungMeasure) -> Result<()> {
    std::fs::write(path, measure_to_json(y)?)?;
    Ok(())
}

/// Initial data on the spatial cells of the measure's grid, first axis slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataFile {
    Abstract {
        schema_version: u32,
    },
    Incompressible {
        schema_version: u32,
        v0: Vec<Vec<f64>>,
    },
    Compressible {
        schema_version: u32,
        gamma: f64,
        rho0: Vec<f64>,
        u0: Vec<Vec<f64>>,
    },
}

fn rows_to_field(rows: Vec<Vec<f64>>, d: usize, what: &str) -> Result<Field> {
    let mut values = Vec::with_capacity(rows.len() * d);
    for (i, r) in rows.into_iter().enumerate() {
        if r.len() != d {
            return Err(schema(format!("{what}[{i}]"), format!("expected {d} components, found {}", r.len())));
        }
        values.extend(r);
    }
    Field::new(d, values)
}

fn field_to_rows(f: &Field) -> Vec<Vec<f64>> {
    (0..f.points()).map(|p| f.at(p).to_vec()).collect()
}

impl DataFile {
    pub fn from_model(model: &crate::selector::Model) -> Self {
        use crate::selector::Model;
        match model {
            Model::Abstract => DataFile::Abstract { schema_version: SCHEMA_VERSION },
            Model::Incompressible(d) => DataFile::Incompressible { schema_version: SCHEMA_VERSION, v0: field_to_rows(d.v0()) },
            Model::Compressible(d) => DataFile::Compressible {
                schema_version: SCHEMA_VERSION,
                gamma: d.gamma(),
                rho0: d.rho0().values().to_vec(),
                u0: field_to_rows(d.u0()),
            },
        }
    }

    pub fn into_model(self, grid: &SpaceTimeGrid) -> Result<crate::selector::Model> {
        use crate::compressible::CompressibleData;
        use crate::incompressible::IncompressibleData;
        use crate::selector::Model;
        let version = match &self {
            DataFile::Abstract { schema_version }
            | DataFile::Incompressible { schema_version, .. }
            | DataFile::Compressible { schema_version, .. } => *schema_version,
        };
        if version != SCHEMA_VERSION {
            return Err(schema("schema_version", format!("unsupported version {version}")));
        }
        let n = grid.spatial_cells();
        let d = grid.dim();
        let check_len = |what: &str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(schema(what.to_string(), format!("expected {n} spatial cells, found {len}")))
            }
        };
        match self {
            DataFile::Abstract { .. } => Ok(Model::Abstract),
            DataFile::Incompressible { v0, .. } => {
                check_len("v0", v0.len())?;
                let field = rows_to_field(v0, d, "v0")?;
                Ok(Model::Incompressible(IncompressibleData::new(grid, field).map_err(|e| schema("v0", e.to_string()))?))
            }
            DataFile::Compressible { gamma, rho0, u0, .. } => {
                check_len("rho0", rho0.len())?;
                check_len("u0", u0.len())?;
                let u = rows_to_field(u0, d, "u0")?;
                let data = CompressibleData::new(grid, gamma, Field::new(1, rho0)?, u).map_err(|e| schema("data", e.to_string()))?;
                Ok(Model::Compressible(data))
            }
        }
    }
}

pub fn read_data(path: &Path, grid: &SpaceTimeGrid) -> Result<crate::selector::Model> {
    let file: DataFile = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(json_error)?;
    file.into_model(grid)
}

pub fn write_data(path: &Path, model: &crate::selector::Model) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&DataFile::from_model(model))?)?;
    Ok(())
}
