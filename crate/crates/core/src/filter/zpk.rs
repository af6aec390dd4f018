use num_complex::Complex64;

use nalgebra::DMatrix;

use super::poly::{bessel_poly, pair_conjugates, sort_roots};
use super::ss::eigenvalues;
use crate::error::{Error, Result};
use crate::filter::MAX_ORDER;

/// Zero-pole-gain transfer function `k * prod(s - z) / prod(s - p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZpkFilter {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    pub gain: f64,
}

impl ZpkFilter {
    pub fn order(&self) -> usize {
        self.poles.len()
    }

    /// Invariant violations: poles outside the open left half-plane,
    /// unpaired complex poles or zeros, an improper transfer function.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.poles.is_empty() {
            out.push("filter has no poles".to_string());
        }
        if self.zeros.len() > self.poles.len() {
            out.push("more zeros than poles".to_string());
        }
        if let Some(p) = self.poles.iter().find(|p| !(p.re < 0.0)) {
            out.push(format!("pole {p} is not in the open left half-plane"));
        }
        for (what, roots) in [("pole", &self.poles), ("zero", &self.zeros)] {
            if !conjugate_closed(roots) {
                out.push(format!("complex {what}s are not in conjugate pairs"));
            }
        }
        if !self.gain.is_finite() {
            out.push("gain is not finite".to_string());
        }
        out
    }

    /// DC value `H(0)`.
    pub fn dc_gain(&self) -> f64 {
        freq_response(self, 0.0).re
    }
}

fn conjugate_closed(roots: &[Complex64]) -> bool {
    let mut unmatched: Vec<Complex64> = roots.iter().filter(|r| r.im != 0.0).copied().collect();
    while let Some(r) = unmatched.pop() {
        let tol = 1e-9 * r.norm();
        match unmatched.iter().position(|q| (*q - r.conj()).norm() <= tol) {
            Some(i) => {
                unmatched.swap_remove(i);
            }
            None => return false,
        }
    }
    true
}

/// Roots of the reversed Bessel polynomial of order `n`.
///
/// With `y_k(x) = x^k theta_k(1/x)`, the recurrence reads
/// `x y_k = (y_{k+1} - y_{k-1}) / (2k + 1)` and `x y_0 = y_1 - y_0`, so the
/// zeros of `y_n` are the eigenvalues of a tridiagonal matrix. That
/// eigenproblem is far better conditioned than the expanded coefficients,
/// whose magnitudes pass 1e27 at n = 25.
fn bessel_roots(n: usize) -> Vec<Complex64> {
    let mut t = DMatrix::<f64>::zeros(n, n);
    t[(0, 0)] = -1.0;
    if n > 1 {
        t[(0, 1)] = 1.0;
    }
    for k in 1..n {
        let a = 1.0 / (2 * k + 1) as f64;
        t[(k, k - 1)] = -a;
        if k + 1 < n {
            t[(k, k + 1)] = a;
        }
    }
    eigenvalues(&t).into_iter().map(|x| 1.0 / x).collect()
}

/// Bessel low-pass prototype of order `n` (1..=25), normalized so the poles
/// approach those of the Butterworth prototype asymptotically and the DC
/// gain is one.
pub fn besselap(n: usize) -> Result<ZpkFilter> {
    let theta = bessel_poly(n)?;
    let b0 = theta.coeffs()[0];
    let scale = (b0.ln() / n as f64).exp();
    let mut poles = pair_conjugates(bessel_roots(n).iter().map(|r| r / scale).collect(), 1e-10);
    sort_roots(&mut poles);

    // Residual of the rescaled polynomial theta(scale * s) / b0 at each pole.
    let scaled: Vec<f64> = theta
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, &c)| (c.ln() + k as f64 * scale.ln() - b0.ln()).exp())
        .collect();
    let norm = scaled.iter().fold(0.0f64, |m, &c| m.max(c));
    for p in &poles {
        let value = scaled
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * p + c);
        if value.norm() > 1e-10 * norm * p.norm().max(1.0).powi(n as i32) || !(p.re < 0.0) {
            return Err(Error::RootFinding { degree: n });
        }
    }
    Ok(ZpkFilter {
        zeros: Vec::new(),
        poles,
        gain: 1.0,
    })
}

/// `H(j omega)`.
pub fn freq_response(filter: &ZpkFilter, omega: f64) -> Complex64 {
    evaluate(filter, Complex64::new(0.0, omega))
}

/// `H(s)` at an arbitrary complex frequency.
pub fn evaluate(filter: &ZpkFilter, s: Complex64) -> Complex64 {
    let num: Complex64 = filter.zeros.iter().map(|z| s - z).product();
    let den: Complex64 = filter.poles.iter().map(|p| s - p).product();
    num * filter.gain / den
}

/// Normalized DC group delay `((2n)! / (2^n n!))^(1/n)` of the order-`n`
/// prototype, in units of 1/omega_c.
pub fn group_delay_dc(n: usize) -> Result<f64> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(Error::Domain(format!(
            "Bessel order must be between 1 and {MAX_ORDER} (got {n})"
        )));
    }
    // ln((2n)!/n!) = sum of ln k for k in n+1..=2n
    let ln_ratio: f64 = ((n + 1)..=(2 * n)).map(|k| (k as f64).ln()).sum();
    Ok(((ln_ratio - n as f64 * std::f64::consts::LN_2) / n as f64).exp())
}
