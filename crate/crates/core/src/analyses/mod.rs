//! Operating-point, AC sweep and transient analyses, plus the metrics
//! derived from their traces.

mod ac;
mod metrics;
mod transient;

use num_complex::Complex64;

use crate::devices::Sine;
use crate::error::{Error, Result};

pub use ac::{ac_sweep, ac_sweep_with, Execution};
pub use metrics::{hysteresis_metrics, numeric_group_delay, HysteresisMetrics};
pub use transient::{transient, transient_with, InitialConditions, MAX_STATE_ITERATIONS};

pub use crate::mna::{dc_operating_point, OperatingPoint};

/// Frequency response at one output node.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    pub frequencies: Vec<f64>,
    pub response: Vec<Complex64>,
    pub magnitude_db: Vec<f64>,
    /// Unwrapped, starting from the principal value at the first point.
    pub phase_deg: Vec<f64>,
}

impl SweepTrace {
    /// Build a trace from complex samples; frequencies must be strictly
    /// increasing.
    pub fn new(frequencies: Vec<f64>, response: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != response.len() {
            return Err(Error::Analysis(format!(
                "{} frequencies but {} response samples",
                frequencies.len(),
                response.len()
            )));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Analysis("frequencies must be strictly increasing".into()));
        }
        let magnitude_db = response.iter().map(|h| 20.0 * h.norm().log10()).collect();
        let principal: Vec<f64> = response.iter().map(|h| h.arg().to_degrees()).collect();
        Ok(SweepTrace {
            frequencies,
            response,
            magnitude_db,
            phase_deg: unwrap_phase_deg(&principal),
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Remove 360-degree jumps so adjacent samples differ by at most 180.
pub fn unwrap_phase_deg(principal: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(principal.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for &p in principal {
        if let Some(q) = prev {
            let mut d = p + offset - q;
            while d > 180.0 {
                offset -= 360.0;
                d -= 360.0;
            }
            while d < -180.0 {
                offset += 360.0;
                d += 360.0;
            }
        }
        let v = p + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Time-domain waveforms of a transient run.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientTrace {
    pub times: Vec<f64>,
    /// Non-ground nodes, in node-table order.
    pub node_names: Vec<String>,
    /// `[node][step]`, aligned with `node_names`.
    pub node_voltages: Vec<Vec<f64>>,
    pub element_names: Vec<String>,
    /// Positive and negative terminal node indices (0 is ground).
    pub element_terminals: Vec<(usize, usize)>,
    /// `[element][step]`, aligned with `element_names`.
    pub element_currents: Vec<Vec<f64>>,
    pub memristor_names: Vec<String>,
    /// `[memristor][step]`.
    pub memristor_states: Vec<Vec<f64>>,
    /// First sinusoidal source, which sets the excitation period.
    pub excitation: Option<Sine>,
}

impl TransientTrace {
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    /// Voltage of node index `node` at `step`.
    pub fn node_voltage(&self, node: usize, step: usize) -> f64 {
        if node == 0 {
            0.0
        } else {
            self.node_voltages[node - 1][step]
        }
    }

    /// Voltage series of a named node.
    pub fn voltage(&self, node: &str) -> Option<&[f64]> {
        self.node_names
            .iter()
            .position(|n| n == node)
            .map(|i| self.node_voltages[i].as_slice())
    }

    /// Current series of a named element.
    pub fn current(&self, element: &str) -> Option<&[f64]> {
        self.element_index(element)
            .map(|i| self.element_currents[i].as_slice())
    }

    /// Terminal voltage series of a named element.
    pub fn element_voltage(&self, element: &str) -> Option<Vec<f64>> {
        let i = self.element_index(element)?;
        let (a, b) = self.element_terminals[i];
        Some(
            (0..self.steps())
                .map(|k| self.node_voltage(a, k) - self.node_voltage(b, k))
                .collect(),
        )
    }

    pub fn state(&self, memristor: &str) -> Option<&[f64]> {
        self.memristor_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(memristor))
            .map(|i| self.memristor_states[i].as_slice())
    }

    fn element_index(&self, element: &str) -> Option<usize> {
        self.element_names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(element))
    }
}
