//! Dynamic targeting: a flyover simulator where a forward-looking sensor and
//! coarse geostationary data guide an agile primary sensor's observations.
//!
//! The crate covers the environment model ([`geogrid`]), the flight and slew
//! constraints ([`flight`], [`slew`]), utility models ([`utility`]), the
//! planners ([`planners`]), episode scoring and verification ([`harness`]) and
//! the command-line driver ([`cli`]).

pub mod cli;
pub mod error;
pub mod flight;
pub mod geogrid;
pub mod harness;
pub mod planners;
pub mod slew;
pub mod utility;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
