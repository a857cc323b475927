//! Core of the `tomcg` toolkit.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (an allocator is required). Reading and writing files,
//! talking to inference endpoints and the command line live in the `tomcg`
//! crate.
//!
//! The pipeline, in order:
//!
//! * [`corpus`]: annotated dialogs, per-event annotation timelines and their
//!   validation.
//! * [`cogstate`]: common ground inferred from belief pairs, and detection of
//!   the turns at which an event is introduced or its annotation changes.
//! * [`querygen`]: yes/no belief questions up to third order for every such
//!   turn, with seeded down-sampling of the uninteresting majority case.
//! * [`answers`]: deterministic gold answers from the annotation state.
//! * [`eval`]: accuracy, consistency, cross-order correlation and baselines.
//! * [`prompt`]: zero-shot prompt rendering and answer parsing for model runs.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod answers;
pub mod cogstate;
pub mod corpus;
pub mod eval;
pub mod labels;
pub mod prompt;
pub mod querygen;

pub use answers::{resolve, AnnotationState, Answer};
pub use cogstate::{detect_points, infer_cg, CgInference, PointKind, PointOfInterest};
pub use corpus::{Dialog, EventRow, EventTimeline, Split, Turn};
pub use labels::{BeliefLabel, Certainty, CgLabel, Speaker};
pub use querygen::{build_benchmark, Query, QuerySet};
