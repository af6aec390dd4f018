use super::TransientTrace;
use crate::devices::{memristance_of, state_derivative, ElementKind, MemristorParams, MemristorState};
use crate::error::{Error, Result};
use crate::mna::lu::solve_dense;
use crate::mna::{assemble_real, initial_states, solve_linear, BranchHistory, DenseMatrix, Layout, RealMode};
use crate::netlist::{Circuit, TransientSpec};

/// Cap on the per-step Newton iteration for memristor states.
pub const MAX_STATE_ITERATIONS: usize = 50;
const STATE_TOLERANCE: f64 = 1e-9;

/// Overrides for the state at `t = 0`. Anything not listed starts from the
/// DC operating point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialConditions {
    pub capacitor_voltages: Vec<(String, f64)>,
    pub inductor_currents: Vec<(String, f64)>,
}

impl InitialConditions {
    fn is_empty(&self) -> bool {
        self.capacitor_voltages.is_empty() && self.inductor_currents.is_empty()
    }
}

/// Fixed-step trapezoidal transient starting from the DC operating point.
pub fn transient(circuit: &Circuit, spec: &TransientSpec) -> Result<TransientTrace> {
    transient_with(circuit, spec, &InitialConditions::default())
}

struct Stepper<'a> {
    circuit: &'a Circuit,
    layout: Layout,
    mem_params: Vec<MemristorParams>,
    /// Element index of each memristor.
    mem_elements: Vec<usize>,
}

impl Stepper<'_> {
    fn branch_voltage(&self, x: &[f64], element: usize) -> f64 {
        let (a, b) = self.circuit.elements[element].terminals();
        self.layout.voltage(x, a) - self.layout.voltage(x, b)
    }

    fn memristor_currents(&self, x: &[f64], states: &[MemristorState]) -> Vec<f64> {
        self.mem_elements
            .iter()
            .zip(states)
            .zip(&self.mem_params)
            .map(|((&e, &s), p)| self.branch_voltage(x, e) / memristance_of(s, p))
            .collect()
    }

    /// Current through every element for solution `x`.
    fn element_currents(
        &self,
        x: &[f64],
        states: &[MemristorState],
        step: Option<(f64, &[BranchHistory])>,
    ) -> Vec<f64> {
        let mut mem = states.iter().zip(&self.mem_params);
        self.circuit
            .elements
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let v = self.branch_voltage(x, i);
                match &e.kind {
                    ElementKind::Resistor { r } => v / r,
                    ElementKind::Memristor(_) => {
                        let (s, p) = mem.next().unwrap();
                        v / memristance_of(*s, p)
                    }
                    ElementKind::Capacitor { c } => match step {
                        Some((h, history)) => {
                            let geq = 2.0 * c / h;
                            geq * v - (geq * history[i].voltage + history[i].current)
                        }
                        None => 0.0,
                    },
                    _ => x[self.layout.branch_row(i).unwrap()],
                }
            })
            .collect()
    }
}

struct Recorder {
    trace: TransientTrace,
}

impl Recorder {
    fn push(&mut self, layout: &Layout, t: f64, x: &[f64], currents: &[f64], states: &[MemristorState]) {
        self.trace.times.push(t);
        for (k, series) in self.trace.node_voltages.iter_mut().enumerate() {
            series.push(layout.voltage(x, k + 1));
        }
        for (series, &i) in self.trace.element_currents.iter_mut().zip(currents) {
            series.push(i);
        }
        for (series, s) in self.trace.memristor_states.iter_mut().zip(states) {
            series.push(s.value());
        }
    }
}

/// Transient with explicit initial capacitor voltages and inductor currents.
pub fn transient_with(
    circuit: &Circuit,
    spec: &TransientSpec,
    ic: &InitialConditions,
) -> Result<TransientTrace> {
    if !(spec.t_step > 0.0) || !(spec.t_stop >= spec.t_step) {
        return Err(Error::Domain("transient needs 0 < t_step <= t_stop".into()));
    }
    let layout = Layout::new(circuit);
    let mem_elements = circuit.memristor_indices();
    let mem_params = mem_elements
        .iter()
        .map(|&i| match &circuit.elements[i].kind {
            ElementKind::Memristor(p) => *p,
            _ => unreachable!(),
        })
        .collect();
    let stepper = Stepper {
        circuit,
        layout,
        mem_params,
        mem_elements,
    };
    let layout = &stepper.layout;
    let mut states = initial_states(circuit)?;

    // Start from the operating point with sources at their t = 0 values.
    let sys = assemble_real(circuit, layout, &states, RealMode::Dc { time: Some(0.0) });
    let mut x = solve_linear(&sys).map_err(|e| e.with_context("t=0"))?;
    let mut history: Vec<BranchHistory> = circuit
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| match e.kind {
            ElementKind::Capacitor { .. } => BranchHistory {
                voltage: stepper.branch_voltage(&x, i),
                current: 0.0,
            },
            ElementKind::Inductor { .. } => BranchHistory {
                voltage: 0.0,
                current: x[layout.branch_row(i).unwrap()],
            },
            _ => BranchHistory::default(),
        })
        .collect();

    let mut currents = stepper.element_currents(&x, &states, None);
    if !ic.is_empty() {
        for (name, v) in &ic.capacitor_voltages {
            let i = element_of_kind(circuit, name, |k| matches!(k, ElementKind::Capacitor { .. }))?;
            history[i].voltage = *v;
        }
        for (name, cur) in &ic.inductor_currents {
            let i = element_of_kind(circuit, name, |k| matches!(k, ElementKind::Inductor { .. }))?;
            history[i].current = *cur;
        }
        let sys = assemble_real(circuit, layout, &states, RealMode::Initial { t: 0.0, history: &history });
        let full = solve_linear(&sys).map_err(|e| e.with_context("t=0 initial conditions"))?;
        let mut extra = layout.dimension();
        for (i, e) in circuit.elements.iter().enumerate() {
            match e.kind {
                ElementKind::Capacitor { .. } => {
                    history[i].current = full[extra];
                    extra += 1;
                }
                ElementKind::Inductor { .. } => history[i].voltage = stepper.branch_voltage(&full, i),
                _ => {}
            }
        }
        x = full[..layout.dimension()].to_vec();
        currents = stepper.element_currents(&x, &states, None);
        for (i, e) in circuit.elements.iter().enumerate() {
            if matches!(e.kind, ElementKind::Capacitor { .. }) {
                currents[i] = history[i].current;
            }
        }
    }

    let steps = spec.steps();
    let mut rec = Recorder {
        trace: TransientTrace {
            times: Vec::with_capacity(steps + 1),
            node_names: circuit.nodes.names()[1..].to_vec(),
            node_voltages: vec![Vec::with_capacity(steps + 1); layout.node_rows()],
            element_names: circuit.elements.iter().map(|e| e.name.clone()).collect(),
            element_terminals: circuit.elements.iter().map(|e| e.terminals()).collect(),
            element_currents: vec![Vec::with_capacity(steps + 1); circuit.elements.len()],
            memristor_names: stepper
                .mem_elements
                .iter()
                .map(|&i| circuit.elements[i].name.clone())
                .collect(),
            memristor_states: vec![Vec::with_capacity(steps + 1); stepper.mem_elements.len()],
            excitation: circuit.elements.iter().find_map(|e| match &e.kind {
                ElementKind::VSource(s) => s.sin,
                _ => None,
            }),
        },
    };
    rec.push(layout, 0.0, &x, &currents, &states);

    let h = spec.t_step;
    let mut mem_currents = stepper.memristor_currents(&x, &states);
    for n in 1..=steps {
        let t = n as f64 * h;
        let step = StateStep {
            stepper: &stepper,
            history: &history,
            h,
            t,
            prev: &states,
            prev_currents: &mem_currents,
        };
        let (guess, x_new, new_currents) = step.solve()?;
        x = x_new;
        let currents = stepper.element_currents(&x, &guess, Some((h, &history)));
        for (i, e) in circuit.elements.iter().enumerate() {
            match e.kind {
                ElementKind::Capacitor { .. } | ElementKind::Inductor { .. } => {
                    history[i] = BranchHistory {
                        voltage: stepper.branch_voltage(&x, i),
                        current: currents[i],
                    }
                }
                _ => {}
            }
        }
        states = guess;
        mem_currents = new_currents;
        rec.push(layout, t, &x, &currents, &states);
    }
    Ok(rec.trace)
}

/// One trapezoidal step of the memristor states, solved by Newton's method
/// on `g(x) = x - x_prev - h/2 (f(x_prev, i_prev) + f(x, i(x)))`, where each
/// evaluation of `i(x)` is a circuit solve with the memristors frozen at `x`.
struct StateStep<'a> {
    stepper: &'a Stepper<'a>,
    history: &'a [BranchHistory],
    h: f64,
    t: f64,
    prev: &'a [MemristorState],
    prev_currents: &'a [f64],
}

/// Forward-difference increment for the state Jacobian.
const JACOBIAN_STEP: f64 = 1e-7;

impl StateStep<'_> {
    fn circuit_solve(&self, states: &[MemristorState]) -> Result<Vec<f64>> {
        let s = self.stepper;
        let sys = assemble_real(
            s.circuit,
            &s.layout,
            states,
            RealMode::Step {
                h: self.h,
                t: self.t,
                history: self.history,
            },
        );
        solve_linear(&sys).map_err(|e| e.with_context(format!("t={:e} s", self.t)))
    }

    fn residual(&self, states: &[MemristorState]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let x = self.circuit_solve(states)?;
        let currents = self.stepper.memristor_currents(&x, states);
        let r = (0..states.len())
            .map(|k| {
                let p = &self.stepper.mem_params[k];
                let x_prev = self.prev[k].value();
                let rate = state_derivative(x_prev, self.prev_currents[k], p)
                    + state_derivative(states[k].value(), currents[k], p);
                states[k].value() - x_prev - 0.5 * self.h * rate
            })
            .collect();
        Ok((x, currents, r))
    }

    fn solve(&self) -> Result<(Vec<MemristorState>, Vec<f64>, Vec<f64>)> {
        let m = self.prev.len();
        if m == 0 {
            return Ok((Vec::new(), self.circuit_solve(&[])?, Vec::new()));
        }
        let fail = || Error::NonConvergence {
            time: self.t,
            iterations: MAX_STATE_ITERATIONS,
        };
        // Explicit predictor.
        let mut guess: Vec<MemristorState> = (0..m)
            .map(|k| {
                let p = &self.stepper.mem_params[k];
                let x = self.prev[k].value();
                MemristorState::clamped(x + self.h * state_derivative(x, self.prev_currents[k], p))
            })
            .collect();
        for _ in 0..MAX_STATE_ITERATIONS {
            let (x, currents, r) = self.residual(&guess)?;
            let settled = (0..m).all(|k| {
                let g = guess[k].value();
                // Pinned at a bound with the update pointing outward.
                let pinned = (g == 1.0 && r[k] <= 0.0) || (g == 0.0 && r[k] >= 0.0);
                pinned || r[k].abs() <= STATE_TOLERANCE * g.abs().max(1e-6)
            });
            if settled {
                return Ok((guess, x, currents));
            }
            let mut jac = DenseMatrix::zeros(m);
            for j in 0..m {
                let g = guess[j].value();
                let d = if g + JACOBIAN_STEP <= 1.0 { JACOBIAN_STEP } else { -JACOBIAN_STEP };
                let mut probe = guess.clone();
                probe[j] = MemristorState::clamped(g + d);
                let (_, _, rp) = self.residual(&probe)?;
                for i in 0..m {
                    jac.set(i, j, (rp[i] - r[i]) / d);
                }
            }
            let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
            let labels: Vec<String> = self.stepper.mem_elements.iter().map(|&e| format!("x({})", self.stepper.circuit.elements[e].name)).collect();
            let delta = solve_dense(&jac, &rhs, &labels).map_err(|_| fail())?;
            for (g, d) in guess.iter_mut().zip(&delta) {
                *g = MemristorState::clamped(g.value() + d);
            }
        }
        Err(fail())
    }
}

fn element_of_kind(circuit: &Circuit, name: &str, pred: impl Fn(&ElementKind) -> bool) -> Result<usize> {
    circuit
        .elements
        .iter()
        .position(|e| e.name.eq_ignore_ascii_case(name) && pred(&e.kind))
        .ok_or_else(|| Error::Analysis(format!("initial condition names unknown element {name}")))
}
