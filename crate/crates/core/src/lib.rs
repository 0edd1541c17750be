//! One-shot entanglement manipulation under non-entangling maps.
//!
//! The crate computes the min/max relative entropies of entanglement, the
//! (global) robustness of entanglement and their smoothed variants by convex
//! optimisation, builds the explicit distillation and dilution channels whose
//! rates these quantities bound, and machine-checks that those channels do not
//! generate entanglement.
//!
//! Optimisations over the separable set are carried out through the positive
//! partial transpose (PPT) relaxation together with explicitly separable inner
//! points, so every such quantity is returned as a [`measures::BracketedValue`]:
//! a certified `[lower, upper]` pair that collapses to a point where PPT is
//! exact (2⊗2, 2⊗3) or where symmetry makes it exact.
//!
//! Modules:
//!
//! - [`quantum`]: density matrices, partial operations, fidelity, twirling.
//! - [`sdp`]: a dense homogeneous self-dual interior-point SDP solver and a
//!   small modelling layer for Hermitian matrix variables.
//! - [`separability`]: PPT checks, linear optimisation over separable states,
//!   see-saw inner bounds.
//! - [`measures`]: the entanglement quantities themselves.
//! - [`protocols`]: measure-and-prepare channels and their SEPP verification.
//! - [`experiments`]: state battery, sandwich checks and the regularisation
//!   series.
//! - [`io`]: JSON/CSV file formats and run configuration.
//!
//! All logarithms are base 2.

#![forbid(unsafe_code)]

pub mod error;
pub mod experiments;
pub mod io;
pub mod measures;
pub mod protocols;
pub mod quantum;
pub mod sdp;
pub mod separability;

pub use error::{Error, Result};
pub use measures::BracketedValue;
pub use quantum::{Bipartition, DensityMatrix, Effect};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// Numerical knobs shared by every routine that solves SDPs or runs see-saw.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    pub solver: sdp::SolverSettings,
    /// Random restarts of the see-saw inner bound.
    pub restarts: usize,
    pub seed: u64,
    /// When set, every SDP is written here in the text format of
    /// [`sdp::dump`] before it is solved.
    #[serde(skip)]
    pub dump_dir: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            solver: sdp::SolverSettings::default(),
            restarts: 32,
            seed: 0x5eed_0001,
            dump_dir: None,
        }
    }
}
