//! Small dense complex matrices and an LU solver with condition estimation.
//!
//! The graph systems are at most a few hundred unknowns, so everything here is
//! row-major and allocation-happy.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn diagonal(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> impl Iterator<Item = &C64> {
        self.data.iter()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    lu: CMatrix,
    perm: Vec<usize>,
    singular: bool,
}

impl DenseLu {
    pub fn factor(a: &CMatrix) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Self {
            n,
            lu,
            perm,
            singular,
        }
    }

    /// True when a pivot was exactly zero; solves are then meaningless.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        // A^H = U^H L^H P, so solve U^H y = b, L^H z = y, x = P^T z.
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s / self.lu[(i, i)].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)].conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

/// Result of [`solve_refined`].
#[derive(Clone, Debug)]
pub struct DenseSolve {
    /// One solution column per right-hand side.
    pub solution: CMatrix,
    /// Estimate of `sigma_min / sigma_max`; zero for an exactly singular factorization.
    pub rcond: f64,
}

/// Solves `A X = B` by partial-pivot LU plus one step of iterative refinement
/// and estimates the reciprocal 2-norm condition number.
pub fn solve_refined(a: &CMatrix, b: &CMatrix) -> DenseSolve {
    assert_eq!(a.nrows(), b.nrows());
    let lu = DenseLu::factor(a);
    let n = a.nrows();
    if n == 0 {
        return DenseSolve {
            solution: CMatrix::zeros(0, b.ncols()),
            rcond: 1.0,
        };
    }
    if lu.is_singular() {
        return DenseSolve {
            solution: CMatrix::from_fn(n, b.ncols(), |_, _| C64::new(f64::NAN, f64::NAN)),
            rcond: 0.0,
        };
    }
    let mut x = CMatrix::zeros(n, b.ncols());
    for c in 0..b.ncols() {
        let rhs = b.column(c);
        let mut sol = lu.solve(&rhs);
        let ax = a.mul_vec(&sol);
        let r: Vec<C64> = rhs.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = lu.solve(&r);
        for (s, d) in sol.iter_mut().zip(&dx) {
            *s += d;
        }
        x.set_column(c, &sol);
    }
    DenseSolve {
        solution: x,
        rcond: rcond_estimate(a, &lu),
    }
}

const POWER_ITERATIONS: usize = 60;

/// Power iteration on `A^H A` for the largest singular value and on
/// `(A^H A)^{-1}` (through the LU factors) for the smallest.
pub fn rcond_estimate(a: &CMatrix, lu: &DenseLu) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 1.0;
    }
    if lu.is_singular() {
        return 0.0;
    }
    let ah = a.adjoint();
    let sigma_max = power_norm(n, |v| ah.mul_vec(&a.mul_vec(v)));
    let inv_sigma_min = power_norm(n, |v| lu.solve(&lu.solve_adjoint(v)));
    if !inv_sigma_min.is_finite() || sigma_max == 0.0 {
        return 0.0;
    }
    let r = 1.0 / (sigma_max * inv_sigma_min);
    if r.is_finite() {
        r.min(1.0)
    } else {
        0.0
    }
}

/// Square root of the dominant eigenvalue of a Hermitian positive operator.
fn power_norm(n: usize, apply: impl Fn(&[C64]) -> Vec<C64>) -> f64 {
    // Deterministic start vector with all directions represented.
    let mut v: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * i as f64, 0.11 * (i as f64 + 1.0).sqrt()))
        .collect();
    normalize(&mut v);
    let mut est = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut w = apply(&v);
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if norm == 0.0 {
            return 0.0;
        }
        for x in &mut w {
            *x /= norm;
        }
        v = w;
        let converged = (norm - est).abs() <= 1e-9 * norm;
        est = norm;
        if converged {
            break;
        }
    }
    est.sqrt()
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lu_solves_and_adjoint_solves() {
        let a = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)],
            vec![c(1.0, -1.0), c(0.5, 0.0), c(0.0, 3.0)],
            vec![c(4.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)],
        ]);
        let b = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0)];
        let lu = DenseLu::factor(&a);
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).norm() < 1e-13);
        }
        let y = lu.solve_adjoint(&b);
        let r = a.adjoint().mul_vec(&y);
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).norm() < 1e-13);
        }
    }

    #[test]
    fn rcond_of_diagonal_is_ratio_of_extremes() {
        let a = CMatrix::diagonal(&[c(4.0, 0.0), c(0.0, -2.0), c(1e-3, 0.0)]);
        let s = solve_refined(&a, &CMatrix::identity(3));
        assert!((s.rcond - 1e-3 / 4.0).abs() < 1e-9);
    }

    #[test]
    fn exactly_singular_matrix_reports_zero() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(2.0, 0.0), c(4.0, 0.0)]]);
        assert_eq!(solve_refined(&a, &CMatrix::identity(2)).rcond, 0.0);
    }
}
