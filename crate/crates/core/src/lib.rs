//! Streaming diffusion-based recommendation for dynamic bipartite networks.
//!
//! The crate maintains item-to-item propagation state incrementally as
//! user-item edges arrive:
//!
//! * [`graph`] — the dynamic bipartite network itself;
//! * [`diffusion`] — one-step mass-diffusion / heat-conduction kernels,
//!   scoring and top-K ranking;
//! * [`oracle`] — exact incremental maintenance of the dense propagation
//!   matrix (desk-scale ground truth);
//! * [`adaptive`] — the compressed production engines AAF and AAS with
//!   per-event local updates;
//! * [`eval`] — AUC / precision / recall and the streaming checkpoint
//!   harness;
//! * [`io`] — rating-log ingestion, CSV reports, engine snapshots;
//! * [`datagen`] — deterministic synthetic datasets for experiments.

pub mod adaptive;
pub mod datagen;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod oracle;

pub use error::{CoreError, Result};
