//! Thermal Green functions of finite quantum systems and their
//! reconstruction from imaginary time.
//!
//! The crate computes real- and imaginary-time Green functions of
//! finite-dimensional systems in thermal equilibrium exactly, verifies the
//! structural properties that characterize them (KMS condition, translation
//! invariance, reflection positivity, tube bounds), and rebuilds the full
//! real-time theory — Hilbert space, Liouvillian, modular conjugation and
//! left/right representations — from temperature-ordered Green functions
//! alone, so that the Wick rotation can be checked as a round trip against
//! the exact computation.
//!
//! Start with [`system::ThermalSystem`] for exact thermal quantum
//! mechanics, [`oracle::TogfOracle`] for the Green-function abstraction
//! that reconstruction consumes, and [`reconstruct::reconstruct`] for the
//! pipeline itself. The `thermal-wick` binary drives batch experiments from
//! JSON configurations.

pub mod error;
pub mod green;
pub mod linalg;
pub mod modular;
pub mod oracle;
pub mod reconstruct;
pub mod system;

pub mod config;
pub mod report;
pub mod runner;

mod book;

pub use error::{Error, Result};
