use num_complex::Complex64;

use super::zpk::ZpkFilter;
use crate::devices::{ElementKind, VSource, DEFAULT_OPAMP_GAIN};
use crate::error::{Error, Result};
use crate::netlist::Circuit;

/// Component values of the multiple-feedback low-pass stage.
///
/// R1 runs from the input to node `a`, R2 from `a` to the output, R3 from
/// `a` to the inverting input `b`; C1 shunts `a` to ground and C2 bridges
/// `b` to the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfbComponents {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub c1: f64,
    pub c2: f64,
}

impl MfbComponents {
    /// Ideal-op-amp transfer function
    /// `-(1/(R1 R3 C1 C2)) / (s^2 + s/C1 (1/R1 + 1/R2 + 1/R3) + 1/(R2 R3 C1 C2))`.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        let MfbComponents { r1, r2, r3, c1, c2 } = *self;
        let num = -1.0 / (r1 * r3 * c1 * c2);
        let den = s * s + s * (1.0 / r1 + 1.0 / r2 + 1.0 / r3) / c1 + 1.0 / (r2 * r3 * c1 * c2);
        num / den
    }
}

struct Section {
    omega0: f64,
    q: f64,
    dc_gain: f64,
}

fn section(filter: &ZpkFilter) -> Result<Section> {
    if filter.order() != 2 {
        return Err(Error::Domain(format!(
            "MFB synthesis needs an order-2 filter (got order {})",
            filter.order()
        )));
    }
    if !filter.zeros.is_empty() {
        return Err(Error::Domain("MFB low-pass stage cannot realize finite zeros".into()));
    }
    if let Some(p) = filter.problems().into_iter().next() {
        return Err(Error::Domain(p));
    }
    let (p1, p2) = (filter.poles[0], filter.poles[1]);
    let omega0 = (p1 * p2).re.sqrt();
    let q = omega0 / -(p1.re + p2.re);
    let dc_gain = filter.dc_gain().abs();
    if !(dc_gain > 0.0) {
        return Err(Error::Domain("filter has zero DC gain".into()));
    }
    Ok(Section { omega0, q, dc_gain })
}

/// Smallest C1 for which the stage is realizable, `4 Q^2 (1 + |G|) C2`.
pub fn mfb_min_c1(filter: &ZpkFilter, c2: f64) -> Result<f64> {
    let s = section(filter)?;
    Ok(4.0 * s.q * s.q * (1.0 + s.dc_gain) * c2)
}

/// Component values for given capacitors. The DC gain magnitude is
/// R2/R1 = |H(0)|, which makes R1 = R2 for a unity-gain filter.
pub fn mfb_components(filter: &ZpkFilter, c1: f64, c2: f64) -> Result<MfbComponents> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Domain("capacitances must be positive".into()));
    }
    let Section { omega0, q, dc_gain } = section(filter)?;
    let min_c1 = 4.0 * q * q * (1.0 + dc_gain) * c2;
    if c1 < min_c1 * (1.0 - 1e-12) {
        return Err(Error::Infeasible(format!(
            "C1 = {c1:e} F is below the realizable minimum {min_c1:e} F for C2 = {c2:e} F"
        )));
    }
    // u = 1/R2, v = 1/R3: (1 + G) u + v = C1 w0 / Q and u v = w0^2 C1 C2.
    let k = 1.0 + dc_gain;
    let b = c1 * omega0 / q;
    let disc = (b * b - 4.0 * k * omega0 * omega0 * c1 * c2).max(0.0);
    let u = (b + disc.sqrt()) / (2.0 * k);
    let v = omega0 * omega0 * c1 * c2 / u;
    let r2 = 1.0 / u;
    Ok(MfbComponents {
        r1: r2 / dc_gain,
        r2,
        r3: 1.0 / v,
        c1,
        c2,
    })
}

/// MFB netlist for an order-2 low-pass with C1 at 9/8 of its realizable
/// minimum. For a unity-gain filter that is C1 = 9 Q^2 C2, where all three
/// resistors come out equal.
pub fn synthesize_mfb_order2(filter: &ZpkFilter, c2: f64) -> Result<Circuit> {
    let s = section(filter)?;
    synthesize_mfb_order2_with(filter, 9.0 * s.q * s.q * c2 * (1.0 + s.dc_gain) / 2.0, c2)
}

pub fn synthesize_mfb_order2_with(filter: &ZpkFilter, c1: f64, c2: f64) -> Result<Circuit> {
    Ok(mfb_circuit(&mfb_components(filter, c1, c2)?))
}

/// Netlist of the stage driven by a unit AC source at node `in`, output
/// at node `out`.
pub fn mfb_circuit(parts: &MfbComponents) -> Circuit {
    let mut c = Circuit::new("MFB Bessel low-pass");
    let source = VSource {
        ac_mag: 1.0,
        ..VSource::default()
    };
    let elements = [
        ("Vin", ["in", "0", ""], ElementKind::VSource(source)),
        ("R1", ["in", "a", ""], ElementKind::Resistor { r: parts.r1 }),
        ("R2", ["a", "out", ""], ElementKind::Resistor { r: parts.r2 }),
        ("R3", ["a", "b", ""], ElementKind::Resistor { r: parts.r3 }),
        ("C1", ["a", "0", ""], ElementKind::Capacitor { c: parts.c1 }),
        ("C2", ["b", "out", ""], ElementKind::Capacitor { c: parts.c2 }),
        ("X1", ["0", "b", "out"], ElementKind::OpAmp { gain: DEFAULT_OPAMP_GAIN }),
    ];
    for (name, nodes, kind) in elements {
        let nodes: Vec<&str> = nodes.into_iter().filter(|n| !n.is_empty()).collect();
        c.add(name, &nodes, kind).expect("element names are distinct");
    }
    c
}
