//! Exact simulation of closed bipartite quantum systems and numerical checks
//! of equilibration and decoherence bounds for a weakly coupled subsystem.

pub mod bipartite;
pub mod bounds;
pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod pointer;

pub use error::{Error, Result};
