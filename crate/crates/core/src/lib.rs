//! Fault-tolerant shipboard power scheduling with Benders-type decomposition.

pub mod benders;
pub mod convex;
pub mod error;
pub mod fault;
pub mod fixtures;
pub mod lnbd;
pub mod master;
pub mod model;
pub mod oracle;
pub mod par;
pub mod problem;
pub mod schedule;
pub mod verify;

pub use error::{Result, SpsError};
