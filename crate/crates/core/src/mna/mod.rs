//! Modified nodal analysis.
//!
//! Unknowns are the non-ground node voltages followed by one branch current
//! per voltage source, controlled source and inductor, in element order.
//! Branch currents flow from the element's positive terminal through the
//! element to its negative terminal.

pub mod lu;

use num_complex::Complex64;

use crate::devices::{memristance_of, ElementKind, MemristorState};
use crate::error::Result;
use crate::netlist::Circuit;

pub use lu::{DenseMatrix, Scalar};

/// An assembled linear system with labelled unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct MnaSystem<T> {
    pub matrix: DenseMatrix<T>,
    pub rhs: Vec<T>,
    pub unknowns: Vec<String>,
}

impl<T: Scalar> MnaSystem<T> {
    pub fn dimension(&self) -> usize {
        self.rhs.len()
    }

    fn conductance(&mut self, a: Option<usize>, b: Option<usize>, g: T) {
        if let Some(a) = a {
            self.matrix.add_at(a, a, g);
        }
        if let Some(b) = b {
            self.matrix.add_at(b, b, g);
        }
        if let (Some(a), Some(b)) = (a, b) {
            self.matrix.add_at(a, b, -g);
            self.matrix.add_at(b, a, -g);
        }
    }

    /// Current `i` injected into node `a` and drawn from node `b`.
    fn inject(&mut self, a: Option<usize>, b: Option<usize>, i: T) {
        if let Some(a) = a {
            self.rhs[a] = self.rhs[a] + i;
        }
        if let Some(b) = b {
            self.rhs[b] = self.rhs[b] - i;
        }
    }

    /// KCL incidence of branch current `k` leaving `a` and entering `b`.
    fn incidence(&mut self, a: Option<usize>, b: Option<usize>, k: usize) {
        let one = T::from_real(1.0);
        if let Some(a) = a {
            self.matrix.add_at(a, k, one);
        }
        if let Some(b) = b {
            self.matrix.add_at(b, k, -one);
        }
    }

    /// Incidence plus branch row `v(a) - v(b) = ...`.
    fn branch(&mut self, a: Option<usize>, b: Option<usize>, k: usize) {
        self.incidence(a, b, k);
        let one = T::from_real(1.0);
        if let Some(a) = a {
            self.matrix.add_at(k, a, one);
        }
        if let Some(b) = b {
            self.matrix.add_at(k, b, -one);
        }
    }
}

/// Row/column assignment for a circuit.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    node_rows: usize,
    /// Branch row per element, if it has one.
    branch: Vec<Option<usize>>,
    labels: Vec<String>,
}

impl Layout {
    pub(crate) fn new(circuit: &Circuit) -> Self {
        let node_rows = circuit.nodes.len().saturating_sub(1);
        let mut labels: Vec<String> = circuit.nodes.names()[1..]
            .iter()
            .map(|n| format!("v({n})"))
            .collect();
        let branch = circuit
            .elements
            .iter()
            .map(|e| {
                e.has_branch().then(|| {
                    labels.push(format!("i({})", e.name));
                    labels.len() - 1
                })
            })
            .collect();
        Layout {
            node_rows,
            branch,
            labels,
        }
    }

    pub(crate) fn dimension(&self) -> usize {
        self.labels.len()
    }

    /// Matrix row of a node; `None` for ground.
    pub(crate) fn row(&self, node: usize) -> Option<usize> {
        node.checked_sub(1)
    }

    pub(crate) fn branch_row(&self, element: usize) -> Option<usize> {
        self.branch[element]
    }

    pub(crate) fn node_rows(&self) -> usize {
        self.node_rows
    }

    fn system<T: Scalar>(&self, extra: &[String]) -> MnaSystem<T> {
        let mut unknowns = self.labels.clone();
        unknowns.extend_from_slice(extra);
        let n = unknowns.len();
        MnaSystem {
            matrix: DenseMatrix::zeros(n),
            rhs: vec![T::zero(); n],
            unknowns,
        }
    }

    /// Voltage of `node` in a solution vector.
    pub(crate) fn voltage(&self, x: &[f64], node: usize) -> f64 {
        self.row(node).map_or(0.0, |r| x[r])
    }
}

/// Per-element integration history for the trapezoidal companions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct BranchHistory {
    pub voltage: f64,
    pub current: f64,
}

/// How reactive elements and sources enter a real-valued system.
#[derive(Debug, Clone, Copy)]
pub(crate) enum RealMode<'a> {
    /// Capacitors open, inductors shorted. Sources at their DC value, or at
    /// their transient value at time `t` when given.
    Dc { time: Option<f64> },
    /// Trapezoidal companion step of length `h` ending at time `t`.
    Step {
        h: f64,
        t: f64,
        history: &'a [BranchHistory],
    },
    /// Capacitors forced to the history voltage and inductors to the history
    /// current; yields consistent capacitor currents at time `t`.
    Initial {
        t: f64,
        history: &'a [BranchHistory],
    },
}

pub(crate) fn assemble_real(
    circuit: &Circuit,
    layout: &Layout,
    states: &[MemristorState],
    mode: RealMode<'_>,
) -> MnaSystem<f64> {
    let caps: Vec<usize> = match mode {
        RealMode::Initial { .. } => circuit
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| matches!(e.kind, ElementKind::Capacitor { .. }))
            .map(|(i, _)| i)
            .collect(),
        _ => Vec::new(),
    };
    let extra: Vec<String> = caps
        .iter()
        .map(|&i| format!("i({})", circuit.elements[i].name))
        .collect();
    let mut sys = layout.system::<f64>(&extra);
    let mut mem = states.iter();
    let mut cap_row = layout.dimension();

    for (idx, e) in circuit.elements.iter().enumerate() {
        let (a, b) = e.terminals();
        let (ra, rb) = (layout.row(a), layout.row(b));
        match &e.kind {
            ElementKind::Resistor { r } => sys.conductance(ra, rb, 1.0 / r),
            ElementKind::Memristor(p) => {
                let x = *mem.next().expect("one state per memristor");
                sys.conductance(ra, rb, 1.0 / memristance_of(x, p));
            }
            ElementKind::Capacitor { c } => match mode {
                RealMode::Dc { .. } => {}
                RealMode::Step { h, history, .. } => {
                    let geq = 2.0 * c / h;
                    let hist = history[idx];
                    sys.conductance(ra, rb, geq);
                    sys.inject(ra, rb, geq * hist.voltage + hist.current);
                }
                RealMode::Initial { history, .. } => {
                    sys.branch(ra, rb, cap_row);
                    sys.rhs[cap_row] = history[idx].voltage;
                    cap_row += 1;
                }
            },
            ElementKind::Inductor { l } => {
                let k = layout.branch_row(idx).unwrap();
                match mode {
                    RealMode::Dc { .. } => sys.branch(ra, rb, k),
                    RealMode::Step { h, history, .. } => {
                        let req = 2.0 * l / h;
                        let hist = history[idx];
                        sys.branch(ra, rb, k);
                        sys.matrix.add_at(k, k, -req);
                        sys.rhs[k] = -req * hist.current - hist.voltage;
                    }
                    RealMode::Initial { history, .. } => {
                        sys.incidence(ra, rb, k);
                        sys.matrix.add_at(k, k, 1.0);
                        sys.rhs[k] = history[idx].current;
                    }
                }
            }
            ElementKind::VSource(s) => {
                let k = layout.branch_row(idx).unwrap();
                sys.branch(ra, rb, k);
                sys.rhs[k] = match mode {
                    RealMode::Dc { time: None } => s.dc,
                    RealMode::Dc { time: Some(t) } | RealMode::Step { t, .. } | RealMode::Initial { t, .. } => {
                        s.value_at(t)
                    }
                };
            }
            ElementKind::Vcvs { gain } | ElementKind::OpAmp { gain } => {
                let k = layout.branch_row(idx).unwrap();
                stamp_controlled(&mut sys, layout, e.control().unwrap(), (ra, rb), k, *gain);
            }
        }
    }
    sys
}

fn stamp_controlled<T: Scalar>(
    sys: &mut MnaSystem<T>,
    layout: &Layout,
    (cp, cn): (usize, usize),
    (ra, rb): (Option<usize>, Option<usize>),
    k: usize,
    gain: f64,
) {
    sys.branch(ra, rb, k);
    if let Some(c) = layout.row(cp) {
        sys.matrix.add_at(k, c, T::from_real(-gain));
    }
    if let Some(c) = layout.row(cn) {
        sys.matrix.add_at(k, c, T::from_real(gain));
    }
}

/// DC system with memristors frozen at `states` (one per memristor, in
/// element order).
pub fn assemble_dc(circuit: &Circuit, states: &[MemristorState]) -> MnaSystem<f64> {
    let layout = Layout::new(circuit);
    assemble_real(circuit, &layout, states, RealMode::Dc { time: None })
}

/// Complex small-signal system at angular frequency `omega`.
pub fn assemble_ac(circuit: &Circuit, op: &OperatingPoint, omega: f64) -> MnaSystem<Complex64> {
    let layout = Layout::new(circuit);
    let mut sys = layout.system::<Complex64>(&[]);
    let j = Complex64::new(0.0, 1.0);
    let mut mem = op.memristor_states.iter();
    for (idx, e) in circuit.elements.iter().enumerate() {
        let (a, b) = e.terminals();
        let (ra, rb) = (layout.row(a), layout.row(b));
        match &e.kind {
            ElementKind::Resistor { r } => sys.conductance(ra, rb, Complex64::from(1.0 / r)),
            ElementKind::Memristor(p) => {
                let x = *mem.next().expect("one state per memristor");
                sys.conductance(ra, rb, Complex64::from(1.0 / memristance_of(x, p)));
            }
            ElementKind::Capacitor { c } => sys.conductance(ra, rb, j * omega * c),
            ElementKind::Inductor { l } => {
                let k = layout.branch_row(idx).unwrap();
                sys.branch(ra, rb, k);
                sys.matrix.add_at(k, k, -j * omega * l);
            }
            ElementKind::VSource(s) => {
                let k = layout.branch_row(idx).unwrap();
                sys.branch(ra, rb, k);
                sys.rhs[k] = Complex64::from_polar(s.ac_mag, s.ac_phase_deg.to_radians());
            }
            ElementKind::Vcvs { gain } | ElementKind::OpAmp { gain } => {
                let k = layout.branch_row(idx).unwrap();
                stamp_controlled(&mut sys, &layout, e.control().unwrap(), (ra, rb), k, *gain);
            }
        }
    }
    sys
}

/// Solve an assembled system by LU with partial pivoting.
pub fn solve_linear<T: Scalar>(system: &MnaSystem<T>) -> Result<Vec<T>> {
    lu::solve_dense(&system.matrix, &system.rhs, &system.unknowns)
}

/// DC solution of a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Indexed by node; entry 0 is ground.
    pub node_voltages: Vec<f64>,
    /// One per auxiliary branch, labelled by element name.
    pub branch_currents: Vec<(String, f64)>,
    /// One per memristor, in element order.
    pub memristor_states: Vec<MemristorState>,
}

impl OperatingPoint {
    pub fn voltage(&self, circuit: &Circuit, node: &str) -> Option<f64> {
        circuit.nodes.get(node).map(|i| self.node_voltages[i])
    }

    pub fn branch_current(&self, element: &str) -> Option<f64> {
        self.branch_currents
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(element))
            .map(|(_, i)| *i)
    }

    pub(crate) fn from_solution(
        circuit: &Circuit,
        layout: &Layout,
        x: &[f64],
        states: Vec<MemristorState>,
    ) -> Self {
        let node_voltages = (0..circuit.nodes.len())
            .map(|n| layout.voltage(x, n))
            .collect();
        let branch_currents = circuit
            .elements
            .iter()
            .enumerate()
            .filter_map(|(i, e)| layout.branch_row(i).map(|k| (e.name.clone(), x[k])))
            .collect();
        OperatingPoint {
            node_voltages,
            branch_currents,
            memristor_states: states,
        }
    }
}

/// Memristor states at their `x0` values, in element order.
pub fn initial_states(circuit: &Circuit) -> Result<Vec<MemristorState>> {
    circuit
        .elements
        .iter()
        .filter_map(|e| match &e.kind {
            ElementKind::Memristor(p) => Some(MemristorState::new(p.x0)),
            _ => None,
        })
        .collect()
}

/// Operating point with memristors frozen at `x0` and sources at DC.
pub fn dc_operating_point(circuit: &Circuit) -> Result<OperatingPoint> {
    operating_point_at(circuit, None)
}

pub(crate) fn operating_point_at(circuit: &Circuit, time: Option<f64>) -> Result<OperatingPoint> {
    let states = initial_states(circuit)?;
    let layout = Layout::new(circuit);
    let sys = assemble_real(circuit, &layout, &states, RealMode::Dc { time });
    let x = solve_linear(&sys).map_err(|e| e.with_context("DC operating point"))?;
    Ok(OperatingPoint::from_solution(circuit, &layout, &x, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::netlist::parse_netlist;

    fn residual(sys: &MnaSystem<f64>, x: &[f64]) -> f64 {
        sys.matrix
            .mul_vec(x)
            .iter()
            .zip(&sys.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn resistor_with_source() {
        let c = parse_netlist("t\nV1 1 0 DC 1\nR1 1 0 1k\n").unwrap();
        let sys = assemble_dc(&c, &[]);
        assert_eq!(sys.dimension(), 2);
        assert_eq!(sys.unknowns, vec!["v(1)", "i(V1)"]);
        let x = solve_linear(&sys).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] + 1e-3).abs() < 1e-15);
    }

    #[test]
    fn series_midpoint() {
        let c = parse_netlist("t\nV1 top 0 DC 10\nR1 top mid 1k\nR2 mid 0 1k\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        assert!((op.voltage(&c, "mid").unwrap() - 5.0).abs() < 1e-12);
        assert!((op.branch_current("V1").unwrap() + 5e-3).abs() < 1e-15);
    }

    #[test]
    fn memristor_stamps_like_resistor() {
        let m = parse_netlist("t\nV1 1 0 DC 1\nM1 1 0 RON=100 ROFF=16k D=10n UV=1e-14 X0=0.5\n").unwrap();
        let r = parse_netlist("t\nV1 1 0 DC 1\nR1 1 0 8050\n").unwrap();
        let sm = assemble_dc(&m, &initial_states(&m).unwrap());
        let sr = assemble_dc(&r, &[]);
        assert_eq!(sm.matrix, sr.matrix);
        assert_eq!(sm.rhs, sr.rhs);
    }

    #[test]
    fn ac_only_sources_give_zero_op() {
        let c = parse_netlist("t\nV1 in 0 AC 1\nR1 in out 1k\nC1 out 0 1u\nR2 out 0 1k\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        assert!(op.node_voltages.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn memristor_current_at_frozen_state() {
        let c = parse_netlist("t\nV1 1 0 DC 1\nM1 1 0 RON=100 ROFF=16k D=10n UV=1e-14\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        let i = -op.branch_current("V1").unwrap();
        assert!((i - 1.0 / 8050.0).abs() < 1e-15, "{i}");
        assert!((i - 124.22e-6).abs() < 0.01e-6);
    }

    #[test]
    fn follower_finite_gain() {
        let c = parse_netlist("t\nV1 p 0 DC 1\nX1 p out out OPAMP\nRL out 0 1k\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        let v = op.voltage(&c, "out").unwrap();
        let a = 1e6;
        assert!((v - a / (1.0 + a)).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn vcvs_and_inductor_dc() {
        let c = parse_netlist("t\nV1 a 0 DC 2\nR1 a b 1k\nL1 b 0 1m\nE1 o 0 a 0 3\nR2 o 0 1k\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        assert!(op.voltage(&c, "b").unwrap().abs() < 1e-15);
        assert!((op.branch_current("L1").unwrap() - 2e-3).abs() < 1e-15);
        assert!((op.voltage(&c, "o").unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn floating_capacitor_node_is_singular() {
        let c = parse_netlist("t\nV1 a 0 DC 1\nC1 a b 1u\nC2 b 0 1u\n").unwrap();
        match dc_operating_point(&c) {
            Err(Error::Singular { unknown, context }) => {
                assert_eq!(unknown, "v(b)");
                assert_eq!(context.as_deref(), Some("DC operating point"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rc_ac_at_corner() {
        let c = parse_netlist("t\nV1 in 0 AC 1\nR1 in out 1k\nC1 out 0 1u\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        let sys = assemble_ac(&c, &op, 1.0 / (1e3 * 1e-6));
        let x = solve_linear(&sys).unwrap();
        let out = x[c.nodes.get("out").unwrap() - 1];
        assert!((out.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.arg().to_degrees() + 45.0).abs() < 1e-9);

        let sys = assemble_ac(&c, &op, 2.0 * std::f64::consts::PI * 1e-6);
        let x = solve_linear(&sys).unwrap();
        assert!((x[1].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conjugate_system_gives_conjugate_solution() {
        let c = parse_netlist("t\nV1 in 0 AC 1\nR1 in a 1k\nL1 a out 10m\nC1 out 0 1u\nE1 o2 0 out 0 2\nR2 o2 0 5k\n").unwrap();
        let op = dc_operating_point(&c).unwrap();
        let w = 2.0 * std::f64::consts::PI * 3e3;
        let pos = assemble_ac(&c, &op, w);
        let neg = assemble_ac(&c, &op, -w);
        let conj = MnaSystem {
            matrix: pos.matrix.map(|v| v.conj()),
            rhs: pos.rhs.iter().map(|v| v.conj()).collect(),
            unknowns: pos.unknowns.clone(),
        };
        assert_eq!(conj, neg);
        let xp = solve_linear(&pos).unwrap();
        let xn = solve_linear(&neg).unwrap();
        for (p, n) in xp.iter().zip(&xn) {
            assert!((p.conj() - n).norm() <= 1e-12 * p.norm().max(1e-12));
        }
    }

    #[test]
    fn rlc_node_block_symmetric() {
        let c = parse_netlist("t\nR1 1 2 1k\nC1 2 3 1u\nL1 3 0 1m\nR2 1 3 2k\nR3 2 0 470\nC2 1 0 2n\n").unwrap();
        let op = OperatingPoint {
            node_voltages: vec![0.0; c.nodes.len()],
            branch_currents: vec![],
            memristor_states: vec![],
        };
        let sys = assemble_ac(&c, &op, 1e4);
        let n = sys.dimension();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(sys.matrix.get(i, j), sys.matrix.get(j, i));
            }
        }
        let dc = assemble_dc(&c, &[]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dc.matrix.get(i, j), dc.matrix.get(j, i));
            }
        }
    }

    #[test]
    fn kcl_residual_small() {
        let c = parse_netlist("t\nV1 a 0 DC 5\nR1 a b 3.3k\nR2 b c 1k\nR3 c 0 2.2k\nR4 b 0 10k\nE1 d 0 c b 10\nR5 d a 4.7k\n").unwrap();
        let sys = assemble_dc(&c, &[]);
        let x = solve_linear(&sys).unwrap();
        let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(residual(&sys, &x) <= 1e-9 * (sys.matrix.norm_inf() * xn + 5.0));
    }
}
