//! Two-stage prediction of metal-binding residues and their metal types over
//! co-evolved CHED residue networks, with all learning machinery (mean-
//! aggregation graph layers, batch norm, Adam, M-fold ensembles) built in.

pub mod cli;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod io;
pub mod netbuild;
pub mod numcore;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
