//! Vector-valued mathematical morphology for color images built on
//! reduced orderings, with consensus orderings learned from a family of
//! candidate orderings.
//!
//! The pieces, bottom up:
//!
//! - [`color`]: vector values in `[0, 1]^d` and rectangular images.
//! - [`ordering`]: reduced mappings (lexicographic, learned, custom), the
//!   pre-orders they induce, and rank look-up tables.
//! - [`morphology`]: flat erosion, dilation, opening, and closing computed
//!   on rank images, so outputs never contain colors missing from the
//!   input.
//! - [`vote`]: margin matrices, the Kemeny disagreement objective, an
//!   exhaustive exact consensus solver for small candidate counts, and the
//!   Borda rule.
//! - [`sco`]: the soft (logistic) relaxation of the consensus problem,
//!   direct score optimization, and training of the learned mapping.
//! - [`irregularity`]: the transport-based global irregularity index.
//! - [`stats`]: pairwise Wilcoxon signed-rank tests and Hasse diagrams.
//! - [`dataset`] / [`image_io`]: CIFAR-10 batches, PPM, and PNG.
//!
//! Data-parallel inner loops (morphology kernels, pairwise loss sweeps)
//! run on rayon when the default `parallel` feature is enabled and fall
//! back to sequential code otherwise; results are bit-identical either
//! way.

pub mod color;
pub mod dataset;
pub mod error;
pub mod image_io;
pub mod irregularity;
pub mod method;
pub mod mlp;
pub mod morphology;
pub mod ordering;
pub mod sco;
pub mod stats;
pub mod vote;

pub use color::{ColorImage, ColorValue};
pub use error::{Error, ErrorCategory, Result};
pub use method::OrderingMethod;
pub use mlp::{MlpParams, ModelFile};
pub use morphology::{MorphOp, StructuringElement};
pub use ordering::{RankImage, RankLut, ReducedMapping};
pub use sco::{SoftConfig, TrainResult};
pub use vote::{BordaScores, MarginMatrix, TotalOrderMatrix, VoteProfile};
