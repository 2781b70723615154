//! Energy-efficiency optimization for a full-duplex small cell whose base
//! station recycles its own self-interference as harvested energy.
//!
//! The crate contains the system model ([`model`]), channel generation
//! ([`channels`]), a conic interior-point backend ([`conic`]), the convex
//! inner approximations used by successive convex approximation
//! ([`reformulation`], [`sca`]), brute-force and Monte Carlo references
//! ([`oracle`]) and the simulation campaigns ([`experiments`]).

pub mod channels;
pub mod config;
pub mod conic;
pub mod error;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod par;
pub mod reformulation;
pub mod sca;

pub use config::SystemConfig;
pub use error::{Error, Result};
