//! Analog circuit simulation with a memristor device model, plus Bessel
//! low-pass synthesis.
//!
//! The crate is organised bottom-up:
//!
//! - [`netlist`] parses and formats the SPICE-like netlist dialect.
//! - [`devices`] holds the constitutive laws, including the linear
//!   ion-drift memristor with a Joglekar window.
//! - [`mna`] assembles and solves modified-nodal-analysis systems.
//! - [`analyses`] runs operating-point, AC sweep and transient analyses.
//! - [`filter`] computes Bessel prototypes and converts between
//!   zero-pole-gain and state-space forms.
//! - [`report`] writes and compares CSV traces.
//!
//! With the default `parallel` feature, AC sweep points are solved on the
//! rayon thread pool. Disabling it gives a purely sequential build with the
//! same results.

pub mod analyses;
pub mod devices;
pub mod error;
pub mod filter;
pub mod mna;
pub mod netlist;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64;
