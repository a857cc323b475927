//! File formats, the model client and the command line for the
//! belief/common-ground benchmark built on `tomcg-core`.

pub mod cli;
pub mod client;
pub mod io;
pub mod mock;
pub mod provenance;
