use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::poly::{expand_roots, pair_conjugates, sort_roots};
use super::zpk::ZpkFilter;
use crate::error::{Error, Result};
use crate::mna::lu::solve_dense;
use crate::mna::DenseMatrix;

/// Largest order realized directly from the expanded denominator; above it
/// the realization is a cascade of first- and second-order sections.
pub const DIRECT_REALIZATION_MAX: usize = 10;

/// Single-input single-output realization `x' = A x + b u`, `y = c.x + d u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl StateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// `c (sI - A)^-1 b + d`, solved by row-scaled LU with iterative
    /// refinement so small solution components keep their relative accuracy.
    pub fn transfer(&self, s: Complex64) -> Complex64 {
        let n = self.order();
        let rows: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let a = Complex64::new(-self.a[(i, j)], 0.0);
                        if i == j {
                            a + s
                        } else {
                            a
                        }
                    })
                    .collect()
            })
            .collect();
        let m = DenseMatrix::from_rows(&rows);
        let rhs: Vec<Complex64> = self.b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let labels: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
        match solve_dense(&m, &rhs, &labels) {
            Ok(x) => {
                x.iter()
                    .zip(self.c.iter())
                    .map(|(x, &c)| x * c)
                    .sum::<Complex64>()
                    + self.d
            }
            Err(_) => Complex64::new(f64::INFINITY, 0.0),
        }
    }

    fn series(first: &StateSpace, second: &StateSpace) -> StateSpace {
        let (n1, n2) = (first.order(), second.order());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&first.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&second.a);
        a.view_mut((n1, 0), (n2, n1))
            .copy_from(&(&second.b * first.c.transpose()));
        let mut b = DVector::zeros(n1 + n2);
        b.rows_mut(0, n1).copy_from(&first.b);
        b.rows_mut(n1, n2).copy_from(&(&second.b * first.d));
        let mut c = DVector::zeros(n1 + n2);
        c.rows_mut(0, n1).copy_from(&(&first.c * second.d));
        c.rows_mut(n1, n2).copy_from(&second.c);
        StateSpace {
            a,
            b,
            c,
            d: first.d * second.d,
        }
    }
}

/// Controllable canonical form of `num / den` (ascending real coefficients,
/// `den` monic, `num` no longer than `den`).
fn canonical(num: &[f64], den: &[f64]) -> StateSpace {
    let n = den.len() - 1;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        a[(n - 1, j)] = -den[j];
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let d = if num.len() == den.len() { num[n] } else { 0.0 };
    let c = DVector::from_fn(n, |i, _| num.get(i).copied().unwrap_or(0.0) - den[i] * d);
    StateSpace { a, b, c, d }
}

fn real_coeffs(roots: &[Complex64], scale: f64) -> Vec<f64> {
    expand_roots(roots).iter().map(|c| c.re * scale).collect()
}

/// Split roots into real singles and conjugate pairs (upper root kept).
fn sections(roots: &[Complex64]) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = Vec::new();
    let mut reals = Vec::new();
    for r in roots {
        if r.im == 0.0 {
            reals.push(*r);
        } else if r.im > 0.0 {
            out.push(vec![*r, r.conj()]);
        }
    }
    out.extend(reals.into_iter().map(|r| vec![r]));
    out
}

/// State-space realization of a ZPK filter.
pub fn zpk_to_ss(filter: &ZpkFilter) -> Result<StateSpace> {
    if let Some(p) = filter.problems().first() {
        if filter.poles.is_empty() || filter.zeros.len() > filter.poles.len() {
            return Err(Error::Domain(p.clone()));
        }
    }
    let n = filter.order();
    if n <= DIRECT_REALIZATION_MAX {
        let den = real_coeffs(&filter.poles, 1.0);
        let num = real_coeffs(&filter.zeros, filter.gain);
        return Ok(canonical(&num, &den));
    }

    // Cascade: zeros are attached to pole sections in order, the gain to the
    // last section.
    let pole_sections = sections(&filter.poles);
    let mut zero_pool = sections(&filter.zeros);
    let count = pole_sections.len();
    let mut system: Option<StateSpace> = None;
    for (k, poles) in pole_sections.into_iter().enumerate() {
        let zeros = match zero_pool.iter().position(|z| z.len() <= poles.len()) {
            Some(i) => zero_pool.remove(i),
            None => Vec::new(),
        };
        let gain = if k + 1 == count { filter.gain } else { 1.0 };
        let stage = canonical(&real_coeffs(&zeros, gain), &real_coeffs(&poles, 1.0));
        system = Some(match system {
            None => stage,
            Some(prev) => StateSpace::series(&prev, &stage),
        });
    }
    if !zero_pool.is_empty() {
        return Err(Error::Domain("zeros could not be assigned to pole sections".into()));
    }
    Ok(system.expect("at least one section"))
}

/// Low-pass to low-pass frequency scaling to cutoff `omega_c` rad/s.
pub fn lp2lp(ss: &StateSpace, omega_c: f64) -> Result<StateSpace> {
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::Domain(format!("cutoff must be positive (got {omega_c})")));
    }
    Ok(StateSpace {
        a: &ss.a * omega_c,
        b: &ss.b * omega_c,
        c: ss.c.clone(),
        d: ss.d,
    })
}

/// Eigenvalues of a real matrix, conjugate-paired and sorted.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    let raw: Vec<Complex64> = m.complex_eigenvalues().iter().copied().collect();
    let mut out = pair_conjugates(raw, 1e-12);
    sort_roots(&mut out);
    out
}

/// Zeros, poles and gain of a state-space system.
pub fn ss_to_zpk(ss: &StateSpace) -> Result<ZpkFilter> {
    let n = ss.order();
    if n == 0 || ss.a.ncols() != n || ss.b.len() != n || ss.c.len() != n {
        return Err(Error::Domain("state-space dimensions are inconsistent".into()));
    }
    let poles = eigenvalues(&ss.a);
    if ss.d != 0.0 {
        let m = &ss.a - &ss.b * ss.c.transpose() / ss.d;
        return Ok(ZpkFilter {
            zeros: eigenvalues(&m),
            poles,
            gain: ss.d,
        });
    }

    // Relative degree r: first nonvanishing Markov parameter c A^(r-1) b.
    let b_norm = ss.b.norm();
    let mut row = ss.c.transpose();
    for r in 1..=n {
        let markov = (&row * &ss.b)[(0, 0)];
        let terms: f64 = row.iter().zip(ss.b.iter()).map(|(x, y)| (x * y).abs()).sum();
        if markov.abs() > 1e-10 * terms.max(1e-300 * row.norm() * b_norm) {
            if r == n {
                return Ok(ZpkFilter {
                    zeros: Vec::new(),
                    poles,
                    gain: markov,
                });
            }
            // Zero dynamics: the eigenvalues of (I - b row / markov) A that
            // are not the r structural zeros at the origin.
            let projector = DMatrix::identity(n, n) - &ss.b * &row / markov;
            let mut eig = eigenvalues(&(projector * &ss.a));
            eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
            let mut zeros = pair_conjugates(eig.split_off(r), 1e-12);
            sort_roots(&mut zeros);
            return Ok(ZpkFilter {
                zeros,
                poles,
                gain: markov,
            });
        }
        row = &row * &ss.a;
    }
    Ok(ZpkFilter {
        zeros: Vec::new(),
        poles,
        gain: 0.0,
    })
}
