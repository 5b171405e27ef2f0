//! Stability analysis of J*-homomorphisms between finite-dimensional matrix
//! J*-algebras: algebra models, perturbed maps, control functions, the
//! direct-method extractor and the checks that certify its output.

pub mod algebra;
pub mod config;
pub mod controls;
pub mod error;
pub mod maps;
pub mod matrix;
pub mod report;
pub mod rng;
pub mod runner;
pub mod scalars;
pub mod stability;
pub mod suite;
pub mod witness;

pub use algebra::{AlgebraDescriptor, AlgebraKind, Sampling};
pub use config::ScenarioConfig;
pub use controls::ControlDescriptor;
pub use error::{Error, Result};
pub use maps::{MapDescriptor, MapVariant, MatrixMap};
pub use matrix::{CMatrix, Complex};
pub use runner::{run, ExitStatus, RunOptions, RunReport};
pub use suite::{builtin_suite, SuiteOptions, SuiteReport};
pub use witness::Witness;
