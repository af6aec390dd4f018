//! Dense LU factorization with partial pivoting over real or complex
//! scalars.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field operations needed by the elimination.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: T) {
        let k = i * self.n + j;
        self.data[k] = self.data[k] + v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.magnitude()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Pivots smaller than this fraction of their row's scale are singular.
const PIVOT_TOLERANCE: f64 = 1e-13;

/// LU factors of a nonsingular matrix.
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

/// Factor `a`. On singularity the error names `labels[k]` for the column
/// with the smallest relative pivot.
pub fn factor<T: Scalar>(a: &DenseMatrix<T>, labels: &[String]) -> Result<LuFactors<T>> {
    let n = a.dim();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale: Vec<f64> = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.magnitude()).fold(0.0, f64::max))
        .collect();

    let mut worst: Option<(f64, usize)> = None;
    for k in 0..n {
        let (p, mag) = (k..n)
            .map(|i| (i, lu.get(i, k).magnitude()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p != k {
            for j in 0..n {
                let tmp = lu.get(k, j);
                lu.set(k, j, lu.get(p, j));
                lu.set(p, j, tmp);
            }
            perm.swap(k, p);
        }
        let row_scale = scale[perm[k]];
        let rel = if row_scale > 0.0 { mag / row_scale } else { 0.0 };
        if rel < PIVOT_TOLERANCE && worst.is_none_or(|(w, _)| rel < w) {
            worst = Some((rel, k));
        }
        if mag == 0.0 {
            continue;
        }
        let pivot = lu.get(k, k);
        for i in k + 1..n {
            let f = lu.get(i, k) / pivot;
            lu.set(i, k, f);
            if f.magnitude() == 0.0 {
                continue;
            }
            for j in k + 1..n {
                let v = lu.get(i, j) - f * lu.get(k, j);
                lu.set(i, j, v);
            }
        }
    }
    if let Some((_, k)) = worst {
        let unknown = labels
            .get(k)
            .cloned()
            .unwrap_or_else(|| format!("#{k}"));
        return Err(Error::Singular {
            unknown,
            context: None,
        });
    }
    Ok(LuFactors { lu, perm })
}

impl<T: Scalar> LuFactors<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.dim();
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc = acc - self.lu.get(i, j) * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc = acc - self.lu.get(i, j) * y[j];
            }
            y[i] = acc / self.lu.get(i, i);
        }
        y
    }
}

/// Solve `a x = b` with one step of iterative refinement.
pub fn solve_dense<T: Scalar>(a: &DenseMatrix<T>, b: &[T], labels: &[String]) -> Result<Vec<T>> {
    let f = factor(a, labels)?;
    let mut x = f.solve(b);
    let ax = a.mul_vec(&x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let dx = f.solve(&r);
    for (xi, di) in x.iter_mut().zip(dx) {
        *xi = *xi + di;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    /// Gauss-Jordan inverse with full pivoting, kept separate from the
    /// factorization under test.
    fn inverse_oracle(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
                .unwrap();
            m.swap(c, p);
            let d = m[c][c];
            for v in m[c].iter_mut() {
                *v /= d;
            }
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    let pivot_row = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        m.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    #[test]
    fn identity() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let b = [3.0, -2.0, 7.5];
        assert_eq!(solve_dense(&a, &b, &labels(3)).unwrap(), b.to_vec());
    }

    #[test]
    fn divider_system() {
        let a = DenseMatrix::from_rows(&[vec![2e-3, 0.0], vec![-1e-3, 1.0]]);
        let x = solve_dense(&a, &[1e-2, -1e-2], &labels(2)).unwrap();
        assert!((x[0] - 5.0).abs() < 1e-12);
        assert!((x[1] + 0.005).abs() < 1e-15);
    }

    #[test]
    fn random_dominant_against_inverse() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let n = 8;
            let mut rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            for (i, row) in rows.iter_mut().enumerate() {
                let s: f64 = row.iter().map(|v: &f64| v.abs()).sum();
                row[i] = s + 1.0;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let inv = inverse_oracle(&rows);
            let expect: Vec<f64> = inv
                .iter()
                .map(|r| r.iter().zip(&b).map(|(a, b)| a * b).sum())
                .collect();
            let a = DenseMatrix::from_rows(&rows);
            let x = solve_dense(&a, &b, &labels(n)).unwrap();
            for (xi, ei) in x.iter().zip(&expect) {
                assert!((xi - ei).abs() <= 1e-9 * ei.abs().max(1.0), "{xi} vs {ei}");
            }
            let r: f64 = a
                .mul_vec(&x)
                .iter()
                .zip(&b)
                .map(|(ax, b)| (ax - b).abs())
                .fold(0.0, f64::max);
            let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
            assert!(r <= 1e-9 * (a.norm_inf() * xn + bn));
        }
    }

    #[test]
    fn singular_names_unknown() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        let err = solve_dense(&a, &[1.0, 2.0], &["v(a)".into(), "v(b)".into()]).unwrap_err();
        assert_eq!(
            err,
            Error::Singular {
                unknown: "v(b)".into(),
                context: None
            }
        );
        let zero_row = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!(solve_dense(&zero_row, &[1.0, 0.0], &labels(2)).is_err());
    }

    #[test]
    fn complex_solve() {
        let j = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let a = DenseMatrix::from_rows(&[vec![one, j], vec![-j, 2.0 * one]]);
        let b = [one + j, one];
        let x = solve_dense(&a, &b, &labels(2)).unwrap();
        let ax = a.mul_vec(&x);
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).norm() < 1e-14);
        }
    }
}
