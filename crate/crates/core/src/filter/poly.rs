//! Real polynomials, the reversed Bessel polynomials, and a simultaneous
//! (Aberth-Ehrlich) root finder.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::filter::MAX_ORDER;

/// Real polynomial with coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Trailing (highest-power) zeros are dropped; the zero polynomial is
    /// rejected.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::Domain("zero polynomial".into()));
        }
        Ok(Polynomial { coeffs })
    }

    /// Real polynomial with the given roots and leading coefficient 1. Roots
    /// must be closed under conjugation.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let c = expand_roots(roots);
        Polynomial {
            coeffs: c.iter().map(|v| v.re).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }
}

/// Monic complex coefficients (ascending) of prod (s - r).
pub(crate) fn expand_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= r * ck;
        }
        c = next;
    }
    c
}

fn check_order(n: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&n) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Bessel order must be between 1 and {MAX_ORDER} (got {n})"
        )))
    }
}

/// Exact integer coefficients of the reversed Bessel polynomial, via
/// `theta_n = (2n - 1) theta_{n-1} + s^2 theta_{n-2}`.
pub fn bessel_poly_exact(n: usize) -> Result<Vec<u128>> {
    check_order(n)?;
    let mut prev: Vec<u128> = vec![1];
    let mut cur: Vec<u128> = vec![1, 1];
    for k in 2..=n {
        let mut next = vec![0u128; k + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j] += (2 * k as u128 - 1) * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j + 2] += c;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

/// Reversed Bessel polynomial of order `n` (1..=25).
pub fn bessel_poly(n: usize) -> Result<Polynomial> {
    let exact = bessel_poly_exact(n)?;
    Polynomial::new(exact.into_iter().map(|c| c as f64).collect())
}

const MAX_ITERATIONS: usize = 500;

/// All complex roots of `poly`.
///
/// The variable is rescaled so the constant and leading coefficients have
/// equal magnitude, which keeps high-degree Bessel polynomials (coefficients
/// beyond 1e30) well scaled. Roots of real polynomials come back in exact
/// conjugate pairs, sorted by descending real part.
pub fn poly_roots(poly: &Polynomial) -> Result<Vec<Complex64>> {
    let degree = poly.degree();
    if degree == 0 {
        return Err(Error::Domain("constant polynomial has no roots".into()));
    }
    let a = poly.coeffs();
    let zero_roots = a.iter().take_while(|&&c| c == 0.0).count();
    let reduced = &a[zero_roots..];
    let d = reduced.len() - 1;

    let mut roots = vec![Complex64::new(0.0, 0.0); zero_roots];
    if d == 1 {
        roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0));
    } else if d > 1 {
        let ln_lambda = (reduced[0].abs().ln() - reduced[d].abs().ln()) / d as f64;
        let ln_norm = reduced[0].abs().ln();
        let scaled: Vec<f64> = reduced
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if c == 0.0 {
                    0.0
                } else {
                    c.signum() * (c.abs().ln() + k as f64 * ln_lambda - ln_norm).exp()
                }
            })
            .collect();
        let lambda = ln_lambda.exp();
        let found = aberth(unit_circle(d), |z| horner(&scaled, z)).ok_or(Error::RootFinding { degree })?;
        roots.extend(found.into_iter().map(|z| z * lambda));
    }

    let mut roots = pair_conjugates(roots, 1e-8);
    sort_roots(&mut roots);

    let norm = a.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for r in &roots {
        let bound = 1e-10 * norm * r.norm().max(1.0).powi(degree as i32);
        if poly.eval(*r).norm() > bound {
            return Err(Error::RootFinding { degree });
        }
    }
    Ok(roots)
}

fn horner(c: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    let r = z.norm();
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
        bound = bound * r + ck.abs();
    }
    (p, dp, bound)
}

/// Simultaneous Aberth-Ehrlich iteration from `z`. `eval` returns the value,
/// the derivative and a rounding-error bound for the value (0 when
/// unknown). A root is frozen once its residual is at the rounding level or
/// its correction stops shrinking at the limit of working precision.
fn aberth(
    mut z: Vec<Complex64>,
    eval: impl Fn(Complex64) -> (Complex64, Complex64, f64),
) -> Option<Vec<Complex64>> {
    let d = z.len();
    let mut done = vec![false; d];
    let mut last_step = vec![f64::INFINITY; d];
    for _ in 0..MAX_ITERATIONS {
        for k in 0..d {
            if done[k] {
                continue;
            }
            let (p, dp, bound) = eval(z[k]);
            if p.norm() == 0.0 || p.norm() <= 16.0 * f64::EPSILON * bound {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..d)
                .filter(|&j| j != k)
                .map(|j| 1.0 / (z[k] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            let size = step.norm();
            let scale = z[k].norm();
            if size <= 4.0 * f64::EPSILON * scale
                || (size >= last_step[k] && last_step[k] <= 1e-9 * scale)
            {
                done[k] = true;
                if size < last_step[k] {
                    z[k] -= step;
                }
                continue;
            }
            z[k] -= step;
            last_step[k] = size;
        }
        if done.iter().all(|&d| d) {
            return Some(z);
        }
    }
    None
}

/// Initial guesses on the unit circle, rotated off the real axis.
fn unit_circle(d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4))
        .collect()
}

/// Snap nearly-real roots onto the real axis and average each complex root
/// with its closest conjugate partner.
pub(crate) fn pair_conjugates(roots: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(roots.len());
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for r in roots {
        if r.im.abs() <= tol * r.norm() {
            out.push(Complex64::new(r.re, 0.0));
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    for u in upper {
        let best = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (u - a.conj()).norm().total_cmp(&(u - b.conj()).norm()))
            .map(|(i, _)| i);
        match best {
            Some(i) => {
                let l = lower.swap_remove(i);
                let m = (u + l.conj()) * 0.5;
                out.push(m);
                out.push(m.conj());
            }
            None => out.push(Complex64::new(u.re, 0.0)),
        }
    }
    out.extend(lower.into_iter().map(|l| Complex64::new(l.re, 0.0)));
    out
}

/// Descending real part; within a conjugate pair the upper root first.
pub(crate) fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn factorial(n: u32) -> BigUint {
        (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
    }

    /// Closed-form coefficient (2n - k)! / (2^(n-k) k! (n-k)!).
    fn bessel_coeff_oracle(n: u32, k: u32) -> BigUint {
        factorial(2 * n - k) / (BigUint::from(2u32).pow(n - k) * factorial(k) * factorial(n - k))
    }

    #[test]
    fn low_orders() {
        assert_eq!(bessel_poly(1).unwrap().coeffs(), &[1.0, 1.0]);
        assert_eq!(bessel_poly(2).unwrap().coeffs(), &[3.0, 3.0, 1.0]);
        assert_eq!(bessel_poly(3).unwrap().coeffs(), &[15.0, 15.0, 6.0, 1.0]);
        assert!(matches!(bessel_poly(0), Err(Error::Domain(_))));
        assert!(matches!(bessel_poly(26), Err(Error::Domain(_))));
    }

    #[test]
    fn recurrence_matches_closed_form() {
        for n in 1..=25u32 {
            let exact = bessel_poly_exact(n as usize).unwrap();
            let float = bessel_poly(n as usize).unwrap();
            for k in 0..=n {
                let oracle = bessel_coeff_oracle(n, k);
                assert_eq!(BigUint::from(exact[k as usize]), oracle, "n={n} k={k}");
                let o: f64 = oracle.to_string().parse().unwrap();
                let f = float.coeffs()[k as usize];
                assert!((f - o).abs() <= 1e-15 * o, "n={n} k={k}");
            }
            let b0 = factorial(2 * n) / (BigUint::from(2u32).pow(n) * factorial(n));
            assert_eq!(BigUint::from(exact[0]), b0);
        }
    }

    #[test]
    fn quadratic_and_linear() {
        let r = poly_roots(&bessel_poly(2).unwrap()).unwrap();
        let im = 3f64.sqrt() / 2.0;
        assert!((r[0] - Complex64::new(-1.5, im)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(-1.5, -im)).norm() < 1e-14);
        let r = poly_roots(&Polynomial::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(r, vec![Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn constructed_cubic() {
        let p = Polynomial::new(vec![6.0, 11.0, 6.0, 1.0]).unwrap();
        let r = poly_roots(&p).unwrap();
        for (got, want) in r.iter().zip([-1.0, -2.0, -3.0]) {
            assert!((got.re - want).abs() < 1e-10 && got.im == 0.0, "{got}");
        }
    }

    #[test]
    fn zero_roots_and_degenerate() {
        let p = Polynomial::new(vec![0.0, 0.0, -4.0, 0.0, 1.0]).unwrap();
        let mut r = poly_roots(&p).unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0].re + 2.0).abs() < 1e-12);
        assert!(r[1].norm() == 0.0 && r[2].norm() == 0.0);
        assert!((r[3].re - 2.0).abs() < 1e-12);
        assert!(poly_roots(&Polynomial::new(vec![3.0]).unwrap()).is_err());
        assert!(Polynomial::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn all_bessel_orders_meet_residual_bound() {
        for n in 1..=25 {
            let p = bessel_poly(n).unwrap();
            let r = poly_roots(&p).unwrap();
            assert_eq!(r.len(), n);
            assert!(r.iter().all(|z| z.re < 0.0));
            let unpaired = r.iter().filter(|z| z.im != 0.0).count();
            assert_eq!(unpaired % 2, 0);
            assert_eq!(r.iter().filter(|z| z.im == 0.0).count(), n % 2);
        }
    }

    proptest! {
        #[test]
        fn recovers_constructed_real_roots(roots in proptest::collection::vec(-10.0f64..-0.1, 1..7)) {
            let mut sorted = roots.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            sorted.dedup_by(|a, b| (*a - *b).abs() < 0.2);
            let z: Vec<Complex64> = sorted.iter().map(|&r| Complex64::new(r, 0.0)).collect();
            let p = Polynomial::from_roots(&z);
            let got = poly_roots(&p).unwrap();
            for (g, w) in got.iter().zip(&sorted) {
                prop_assert!((g.re - w).abs() < 1e-8 * w.abs().max(1.0), "{} vs {}", g, w);
            }
        }
    }
}
