use super::{SweepTrace, TransientTrace};
use crate::error::{Error, Result};

/// Pinched-hysteresis fingerprint of a memristor run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisMetrics {
    /// Sum of the absolute lobe areas of the I-V loop over the last period, V*A.
    pub loop_area: f64,
    /// Largest |i| among samples with |v| < 1e-6 * amplitude, A.
    pub pinch_residual: f64,
}

/// Loop area and pinch residual of `memristor` in a trace driven by a
/// sinusoidal source.
///
/// The I-V locus of a bipolar drive is a figure eight whose two lobes have
/// opposite orientation, so the closed integral of `i dv` over a period
/// nearly cancels. The loop is therefore split at the zero crossings of `v`
/// (located by linear interpolation) and the absolute lobe integrals are
/// summed.
pub fn hysteresis_metrics(trace: &TransientTrace, memristor: &str) -> Result<HysteresisMetrics> {
    let sine = trace
        .excitation
        .ok_or_else(|| Error::Analysis("no SIN source: excitation period unknown".into()))?;
    if trace.state(memristor).is_none() {
        return Err(Error::Analysis(format!("{memristor} is not a memristor in this trace")));
    }
    let v = trace.element_voltage(memristor).unwrap();
    let i = trace.current(memristor).unwrap();
    if trace.steps() < 2 || !(sine.freq_hz > 0.0) {
        return Err(Error::Analysis("excitation period not inferable".into()));
    }
    let h = trace.times[1] - trace.times[0];
    let per_period = (1.0 / (sine.freq_hz * h)).round() as usize;
    if per_period < 2 || per_period >= trace.steps() {
        return Err(Error::Analysis(format!(
            "trace of {} samples does not cover one {} Hz period",
            trace.steps(),
            sine.freq_hz
        )));
    }

    let threshold = 1e-6 * sine.amplitude.abs();
    let pinch_residual = v
        .iter()
        .zip(i)
        .filter(|(v, _)| v.abs() < threshold)
        .map(|(_, i)| i.abs())
        .fold(0.0, f64::max);

    let end = trace.steps() - 1;
    let start = end - per_period;
    let points: Vec<(f64, f64)> = (start..=end).map(|k| (v[k], i[k])).collect();
    Ok(HysteresisMetrics {
        loop_area: lobe_area_sum(&points),
        pinch_residual,
    })
}

/// Sum of |integral of i dv| over the lobes of a closed polyline, splitting
/// wherever `v` changes sign.
fn lobe_area_sum(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    let mut lobes: Vec<f64> = Vec::new();
    let mut current = 0.0;
    let seg = |(va, ia): (f64, f64), (vb, ib): (f64, f64)| 0.5 * (ia + ib) * (vb - va);
    for k in 0..n {
        let a = points[k];
        let b = points[(k + 1) % n];
        if a.0 == 0.0 {
            lobes.push(current);
            current = 0.0;
        }
        if a.0 * b.0 < 0.0 {
            let t = a.0 / (a.0 - b.0);
            let z = (0.0, a.1 + t * (b.1 - a.1));
            current += seg(a, z);
            lobes.push(current);
            current = seg(z, b);
        } else {
            current += seg(a, b);
        }
    }
    // The final partial lobe closes the first one.
    match lobes.first_mut() {
        Some(first) => *first += current,
        None => lobes.push(current),
    }
    lobes.iter().map(|a| a.abs()).sum()
}

/// Group delay `-d(phase)/d(omega)` in seconds at every sweep point, by
/// three-point differences on the (non-uniform) angular-frequency grid.
pub fn numeric_group_delay(trace: &SweepTrace) -> Result<Vec<f64>> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::Analysis("group delay needs at least 3 sweep points".into()));
    }
    let w: Vec<f64> = trace
        .frequencies
        .iter()
        .map(|f| 2.0 * std::f64::consts::PI * f)
        .collect();
    let phi: Vec<f64> = trace.phase_deg.iter().map(|p| p.to_radians()).collect();
    let derivative = |k: usize| -> f64 {
        let (i0, i1, i2) = match k {
            0 => (0, 1, 2),
            k if k == n - 1 => (n - 3, n - 2, n - 1),
            k => (k - 1, k, k + 1),
        };
        // Derivative of the quadratic through three points, evaluated at w[k].
        let (x0, x1, x2) = (w[i0], w[i1], w[i2]);
        let x = w[k];
        let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        l0 * phi[i0] + l1 * phi[i1] + l2 * phi[i2]
    };
    Ok((0..n).map(|k| -derivative(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyses::transient;
    use crate::netlist::{parse_netlist, TransientSpec};
    use num_complex::Complex64;

    #[test]
    fn delay_line_surrogate() {
        let tau = 2.5e-4;
        let f: Vec<f64> = (0..30).map(|k| 10.0 * 1.2f64.powi(k)).collect();
        let h: Vec<Complex64> = f
            .iter()
            .map(|f| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * tau))
            .collect();
        let tr = SweepTrace::new(f, h).unwrap();
        for d in numeric_group_delay(&tr).unwrap() {
            assert!((d - tau).abs() < 1e-12 * tau.max(1.0), "{d}");
        }
    }

    #[test]
    fn rc_delay_at_dc() {
        let rc = 1e-3;
        let f: Vec<f64> = (0..30).map(|k| 1e-3 * 1.1f64.powi(k)).collect();
        let h: Vec<Complex64> = f
            .iter()
            .map(|f| 1.0 / Complex64::new(1.0, 2.0 * std::f64::consts::PI * f * rc))
            .collect();
        let tr = SweepTrace::new(f, h).unwrap();
        let d = numeric_group_delay(&tr).unwrap();
        assert!((d[0] - rc).abs() < 1e-6, "{}", d[0]);
        assert!(numeric_group_delay(&SweepTrace::new(vec![1.0, 2.0], vec![h_one(); 2]).unwrap()).is_err());
    }

    fn h_one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn resistor_has_no_loop() {
        let c = parse_netlist("r\nV1 1 0 SIN(0 1 1)\nR1 1 0 8.05k\nM1 1 0 RON=100 ROFF=16k D=10n UV=1e-14\n").unwrap();
        let tr = transient(&c, &TransientSpec { t_step: 1e-3, t_stop: 2.0 }).unwrap();
        let v = tr.element_voltage("R1").unwrap();
        let i = tr.current("R1").unwrap();
        let pts: Vec<(f64, f64)> = v[1000..].iter().copied().zip(i[1000..].iter().copied()).collect();
        assert!(lobe_area_sum(&pts) < 1e-12);
        let m = hysteresis_metrics(&tr, "M1").unwrap();
        assert!(m.loop_area > 1e-12, "{}", m.loop_area);
        assert!(m.pinch_residual <= 1e-9 / 100.0);
        assert!(hysteresis_metrics(&tr, "R1").is_err());
    }

    #[test]
    fn needs_sine_source() {
        let c = parse_netlist("m\nV1 1 0 DC 1\nM1 1 0 RON=100 ROFF=16k D=10n UV=1e-14\n").unwrap();
        let tr = transient(&c, &TransientSpec { t_step: 1e-3, t_stop: 1e-2 }).unwrap();
        assert!(matches!(hysteresis_metrics(&tr, "M1"), Err(Error::Analysis(_))));
    }

    #[test]
    fn short_trace_rejected() {
        let c = parse_netlist("m\nV1 1 0 SIN(0 1 1)\nM1 1 0 RON=100 ROFF=16k D=10n UV=1e-14\n").unwrap();
        let tr = transient(&c, &TransientSpec { t_step: 1e-3, t_stop: 0.5 }).unwrap();
        assert!(hysteresis_metrics(&tr, "M1").is_err());
    }

    #[test]
    fn lobes_of_figure_eight() {
        // Two unit-area lobes with opposite orientation.
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (0.0, 0.0), (-1.0, -2.0), (-1.0, 0.0)];
        assert!((lobe_area_sum(&pts) - 2.0).abs() < 1e-15);
    }
}
