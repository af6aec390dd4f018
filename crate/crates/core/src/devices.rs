//! Device records and their constitutive laws.
//!
//! The memristor follows the linear ion-drift model: the doped fraction
//! `x = w/D` mixes the two limiting resistances,
//! `M(x) = r_on * x + r_off * (1 - x)`, and drifts with the terminal current
//! as `dx/dt = (mu_v * r_on / D^2) * i * f(x)` where `f` is the Joglekar
//! window `1 - (2x - 1)^(2p)`.

use crate::error::{Error, Result};

/// Parameters of a linear ion-drift memristor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemristorParams {
    /// Fully doped resistance, Ohms.
    pub r_on: f64,
    /// Undoped resistance, Ohms.
    pub r_off: f64,
    /// Device thickness, meters.
    pub d: f64,
    /// Dopant mobility, m^2 s^-1 V^-1.
    pub mu_v: f64,
    /// Initial doped fraction.
    pub x0: f64,
    /// Window exponent.
    pub p: u32,
}

impl Default for MemristorParams {
    fn default() -> Self {
        MemristorParams {
            r_on: 100.0,
            r_off: 16e3,
            d: 10e-9,
            mu_v: 1e-14,
            x0: 0.5,
            p: 1,
        }
    }
}

impl MemristorParams {
    /// Parameter problems, one message each. Empty when admissible.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.r_on > 0.0) {
            out.push(format!("RON must be positive (got {})", self.r_on));
        }
        if !(self.r_on < self.r_off) {
            out.push(format!(
                "RON must be below ROFF (got RON={} ROFF={})",
                self.r_on, self.r_off
            ));
        }
        if !(self.d > 0.0) {
            out.push(format!("D must be positive (got {})", self.d));
        }
        if !(self.mu_v > 0.0) {
            out.push(format!("UV must be positive (got {})", self.mu_v));
        }
        if !(0.0..=1.0).contains(&self.x0) {
            out.push(format!("X0 must lie in [0, 1] (got {})", self.x0));
        }
        if self.p < 1 {
            out.push("P must be at least 1".to_string());
        }
        out
    }

    /// Drift coefficient `mu_v * r_on / d^2`, in 1/(A s).
    pub fn drift_coefficient(&self) -> f64 {
        self.mu_v * self.r_on / (self.d * self.d)
    }

    /// State at which the memristance equals `target` Ohms.
    pub fn state_for_resistance(&self, target: f64) -> Result<MemristorState> {
        let x = (self.r_off - target) / (self.r_off - self.r_on);
        MemristorState::new(x)
    }
}

/// Normalized doped-region width, kept in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MemristorState(f64);

impl MemristorState {
    pub fn new(x: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x) {
            Ok(MemristorState(x))
        } else {
            Err(Error::Domain(format!("memristor state {x} outside [0, 1]")))
        }
    }

    /// Clamp an integrated value back into the admissible range.
    pub fn clamped(x: f64) -> Self {
        MemristorState(x.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// The physical kind and parameters of a netlist element.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor { r: f64 },
    Capacitor { c: f64 },
    Inductor { l: f64 },
    VSource(VSource),
    /// Voltage-controlled voltage source. Nodes: out+, out-, in+, in-.
    Vcvs { gain: f64 },
    /// Op-amp as a finite-gain amplifier. Nodes: in+, in-, out.
    OpAmp { gain: f64 },
    Memristor(MemristorParams),
}

/// Independent voltage source with DC, AC and optional sinusoidal parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VSource {
    pub dc: f64,
    pub ac_mag: f64,
    pub ac_phase_deg: f64,
    pub sin: Option<Sine>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine {
    pub offset: f64,
    pub amplitude: f64,
    pub freq_hz: f64,
}

impl VSource {
    /// Time-domain value. A sinusoidal specification replaces the DC value.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.sin {
            Some(s) => s.offset + s.amplitude * (2.0 * std::f64::consts::PI * s.freq_hz * t).sin(),
            None => self.dc,
        }
    }
}

pub const DEFAULT_OPAMP_GAIN: f64 = 1e6;

/// A named device with its node connections (dense indices, ground = 0).
#[derive(Debug, Clone)]
pub struct Element {
    pub name: String,
    pub nodes: Vec<usize>,
    pub kind: ElementKind,
    /// Netlist line the element came from, if parsed.
    pub line: Option<usize>,
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.nodes == other.nodes && self.kind == other.kind
    }
}

impl Element {
    pub fn new(name: impl Into<String>, nodes: Vec<usize>, kind: ElementKind) -> Self {
        Element {
            name: name.into(),
            nodes,
            kind,
            line: None,
        }
    }

    /// Positive and negative terminal for two-terminal devices. For the
    /// controlled sources this is the output port.
    pub fn terminals(&self) -> (usize, usize) {
        match self.kind {
            ElementKind::OpAmp { .. } => (self.nodes[2], 0),
            _ => (self.nodes[0], self.nodes[1]),
        }
    }

    /// Controlling input port of a VCVS or op-amp.
    pub fn control(&self) -> Option<(usize, usize)> {
        match self.kind {
            ElementKind::Vcvs { .. } => Some((self.nodes[2], self.nodes[3])),
            ElementKind::OpAmp { .. } => Some((self.nodes[0], self.nodes[1])),
            _ => None,
        }
    }

    /// Whether the element carries an auxiliary branch current in MNA.
    pub fn has_branch(&self) -> bool {
        matches!(
            self.kind,
            ElementKind::VSource(_)
                | ElementKind::Vcvs { .. }
                | ElementKind::OpAmp { .. }
                | ElementKind::Inductor { .. }
        )
    }
}

/// Memristance `M(x) = r_on x + r_off (1 - x)`.
pub fn memristance(x: f64, params: &MemristorParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("memristor state {x} outside [0, 1]")));
    }
    Ok(params.r_on * x + params.r_off * (1.0 - x))
}

pub(crate) fn memristance_of(state: MemristorState, params: &MemristorParams) -> f64 {
    params.r_on * state.0 + params.r_off * (1.0 - state.0)
}

/// Joglekar window `1 - (2x - 1)^(2p)`.
pub fn window(x: f64, p: u32) -> f64 {
    1.0 - (2.0 * x - 1.0).powi(2 * p as i32)
}

/// Rate of change of the doped fraction for terminal current `i` (Amperes).
pub fn state_derivative(x: f64, i: f64, params: &MemristorParams) -> f64 {
    params.drift_coefficient() * i * window(x, params.p)
}

/// Resistance seen by the AC analysis. A memristor is linearized at its
/// operating-point state; `state` falls back to the element's `x0`.
pub fn small_signal_resistance(element: &Element, state: Option<MemristorState>) -> Result<f64> {
    match &element.kind {
        ElementKind::Resistor { r } => Ok(*r),
        ElementKind::Memristor(params) => {
            let x = match state {
                Some(s) => s,
                None => MemristorState::new(params.x0)?,
            };
            Ok(memristance_of(x, params))
        }
        _ => Err(Error::Unsupported(format!(
            "{}: small-signal resistance is defined for resistors and memristors only",
            element.name
        ))),
    }
}
