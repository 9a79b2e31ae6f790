//! Simulation and analysis of ramp quantum secret sharing over prime-dimension
//! qudits, including advance distribution of forbidden share sets.

pub mod advance;
pub mod cli;
pub mod error;
pub mod gfp;
pub mod limits;
pub mod lincode;
pub mod qstate;
pub mod ramp;
pub mod share_set;
pub mod stab;

pub use error::{Error, Result};
