//! Discrete generalized Young measures and maximally turbulent selection.
//!
//! A generalized Young measure is a triple `(ν, λ, ν∞)`: an oscillation
//! measure (a probability measure on phase space per space–time point), a
//! nonnegative concentration measure on the closed domain and a
//! concentration-angle measure on a recession surface. This crate stores all
//! three as finite atomic data on a uniform grid over `(0,T) × T^d` and
//! provides:
//!
//! - the measure algebra ([`measure`]): pairing, convex combination,
//!   barycenter;
//! - growth and recession geometry ([`growth`], [`integrand`]);
//! - the Jensen-defect functional `V_f` ([`functional`]);
//! - weak-form residuals and energy admissibility for the incompressible
//!   ([`incompressible`]) and isentropic compressible ([`compressible`])
//!   Euler equations;
//! - maximization of `V_f` over the convex hull of a finite candidate family
//!   with a Frank–Wolfe certificate ([`selector`]);
//! - a JSON file format for measures and initial data ([`io`]).

pub mod compressible;
pub mod error;
pub mod functional;
pub mod grid;
pub mod growth;
pub mod incompressible;
pub mod integrand;
pub mod io;
pub mod measure;
pub mod report;
pub mod selector;
pub mod simplex;
pub mod sum;
pub mod testfn;

pub use error::{Error, Result};
pub use functional::{concavity_gap, jensen_defect, total_energy, variance_functional, FunctionalReport};
pub use grid::{Field, SpaceTimeGrid, TimeSlot};
pub use growth::GrowthStructure;
pub use integrand::{AffineIntegrand, Integrand, IsentropicEnergy, SquaredNorm};
pub use measure::{
    barycenter, convex_combine, convex_combine_weighted, pairing, AngleAtom, CellMeasure,
    DiscreteYoungMeasure, PhaseAtom,
};
pub use report::{CheckConfig, ResidualReport};
pub use selector::{
    brute_force_simplex, maximize, objective, uniqueness_diagnostic, CandidateSet, MaximizeOptions,
    Model, SelectionResult, UniquenessReport,
};
pub use simplex::SimplexWeights;
