//! Finite-scale laboratory for semi-supervised adversarially robust PAC
//! learning over explicit hypothesis tables.
//!
//! Instance spaces are dense indices, hypothesis classes are boolean
//! tables and distributions are atom lists, so every dimension, risk and
//! learner output is computed exactly.

pub mod bench;
pub mod compress;
pub mod constructions;
pub mod dims;
pub mod error;
pub mod instance;
pub mod io;
pub mod loss;
pub mod partial;
pub mod robust;
pub mod rowset;
pub mod sample;

pub use error::{Error, Result};
pub use instance::{
    Atom, Distribution, Example, HypothesisTable, InstanceSpace, LabeledSample, PacParams, Perturbation, Predictor,
    ProblemInstance, Provenance, UnlabeledSample,
};
pub use partial::{PartialTable, Ternary};
