use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::SweepTrace;
use crate::devices::ElementKind;
use crate::error::{Error, Result};
use crate::mna::{assemble_ac, dc_operating_point, solve_linear, OperatingPoint};
use crate::netlist::{AcSweep, Circuit};

/// How independent sweep points are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

/// Small-signal sweep of `output_node` over a decade grid.
pub fn ac_sweep(circuit: &Circuit, directive: &AcSweep, output_node: &str) -> Result<SweepTrace> {
    ac_sweep_with(circuit, directive, output_node, Execution::default())
}

pub fn ac_sweep_with(
    circuit: &Circuit,
    directive: &AcSweep,
    output_node: &str,
    execution: Execution,
) -> Result<SweepTrace> {
    let has_ac_source = circuit
        .elements
        .iter()
        .any(|e| matches!(&e.kind, ElementKind::VSource(s) if s.ac_mag != 0.0));
    if !has_ac_source {
        return Err(Error::Analysis("AC sweep needs a source with nonzero AC magnitude".into()));
    }
    let node = circuit
        .nodes
        .get(output_node)
        .ok_or_else(|| Error::Analysis(format!("unknown output node '{output_node}'")))?;
    if node == 0 {
        return Err(Error::Analysis("output node must not be ground".into()));
    }
    let op = dc_operating_point(circuit)?;
    let freqs = directive.frequencies();
    let point = |&f: &f64| solve_point(circuit, &op, node, f);
    let response: Result<Vec<Complex64>> = match execution {
        Execution::Sequential => freqs.iter().map(point).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => freqs.par_iter().map(point).collect(),
    };
    SweepTrace::new(freqs, response?)
}

fn solve_point(circuit: &Circuit, op: &OperatingPoint, node: usize, f: f64) -> Result<Complex64> {
    let sys = assemble_ac(circuit, op, 2.0 * std::f64::consts::PI * f);
    let x = solve_linear(&sys).map_err(|e| e.with_context(format!("f={f:e} Hz")))?;
    Ok(x[node - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn sweep(ppd: usize, f_start: f64, f_stop: f64) -> AcSweep {
        AcSweep {
            points_per_decade: ppd,
            f_start,
            f_stop,
        }
    }

    #[test]
    fn rc_corner_is_minus_three_db() {
        let c = parse_netlist("rc\nV1 in 0 AC 1\nR1 in out 1.59155k\nC1 out 0 0.1u\n").unwrap();
        let t = ac_sweep(&c, &sweep(10, 100.0, 1e6), "out").unwrap();
        assert_eq!(t.len(), 41);
        let k = t.frequencies.iter().position(|&f| (f - 1000.0).abs() < 1e-6).unwrap();
        assert!((t.magnitude_db[k] + 3.0103).abs() < 0.01, "{}", t.magnitude_db[k]);
        assert!(t.magnitude_db[0].abs() < 0.05);
        assert!(t.phase_deg[0].abs() < 6.0 && t.phase_deg[0] < 0.0);
    }

    #[test]
    fn sequential_matches_default() {
        let c = parse_netlist("rc\nV1 in 0 AC 1\nR1 in out 1k\nC1 out 0 0.1u\nL1 out o2 1m\nR2 o2 0 50\n").unwrap();
        let d = sweep(25, 10.0, 1e7);
        let a = ac_sweep_with(&c, &d, "o2", Execution::Sequential).unwrap();
        let b = ac_sweep(&c, &d, "o2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn needs_ac_source_and_known_node() {
        let c = parse_netlist("t\nV1 in 0 DC 1\nR1 in 0 1k\n").unwrap();
        assert!(matches!(ac_sweep(&c, &sweep(1, 1.0, 10.0), "in"), Err(Error::Analysis(_))));
        let c = parse_netlist("t\nV1 in 0 AC 1\nR1 in 0 1k\n").unwrap();
        assert!(ac_sweep(&c, &sweep(1, 1.0, 10.0), "nope").is_err());
        assert!(ac_sweep(&c, &sweep(1, 1.0, 10.0), "0").is_err());
    }

    #[test]
    fn singular_reports_frequency() {
        let c = parse_netlist("t\nV1 in 0 AC 1\nR1 in 0 1k\nV2 a 0 DC 0\nV3 a 0 DC 0\n").unwrap();
        let err = ac_sweep(&c, &sweep(1, 1.0, 10.0), "in").unwrap_err();
        assert!(err.is_numerical());
    }
}
