//! Exact low-rank plus sparse decomposition by Principal Component Pursuit.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`], [`rng`], [`svd`] and [`io`]: dense matrices, support masks,
//!   reproducible random generation, full and partial SVD, and text file formats.
//! * [`prox`]: shrinkage, singular value thresholding and the projections
//!   `P_Omega`, `P_T`, `P_T^perp`.
//! * [`solver`]: the alternating-directions augmented Lagrangian solver for
//!   `min ||L||_* + lambda ||S||_1  s.t.  L + S = M`, plus robust and plain
//!   matrix completion variants.
//! * [`certify`]: incoherence, concentration diagnostics and the golfing /
//!   least-squares dual certificate.
//! * [`synth`] and [`harness`]: random problem instances and the experiment
//!   engine behind the `pcp` command-line tool.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod prox;
pub mod rng;
pub mod solver;
pub mod svd;
pub mod synth;

pub use certify::{CertificateReport, IncoherenceReport};
pub use error::{PcpError, Result};
pub use matrix::{DenseMatrix, MatrixNorms, SupportMask};
pub use prox::TangentSpace;
pub use rng::RngState;
pub use solver::{PcpSolution, SolverConfig};
pub use svd::SvdFactors;
pub use synth::{ProblemInstance, ProblemSpec, SignModel, SupportModel};
