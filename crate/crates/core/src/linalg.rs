//! Dense complex linear algebra: Gram–Schmidt orthonormalization under a
//! Hermitian metric, Cholesky factorization and a cyclic Jacobi eigensolver
//! for Hermitian matrices.
//!
//! Matrices here are small (at most a few hundred rows), so everything is
//! dense, row-major and single-threaded.

use num_complex::Complex64;
use serde::Serialize;
use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self { rows, cols, data: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A†|`.
    pub fn hermitian_defect(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        d
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    /// `P A Pᵀ` for the permutation sending position `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert!(self.is_square() && perm.len() == self.rows);
        let mut out = Self::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(perm[i], perm[j])] = self[(i, j)];
            }
        }
        out
    }

    /// `max |A - B|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// `x† y`.
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Gram matrix `S_{jk} = ⟨ξ_j, ξ_k⟩` of the primitive basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapMatrix {
    matrix: CMatrix,
    /// Ratio of extreme eigenvalues.
    condition: f64,
    min_eigenvalue: f64,
}

impl OverlapMatrix {
    /// Wraps a Gram matrix after checking it is Hermitian and positive definite.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Dimension("overlap must be square".into()));
        }
        let scale = matrix.max_abs().max(f64::MIN_POSITIVE);
        let defect = matrix.hermitian_defect();
        if defect > 1e-12 * scale {
            return Err(Error::NotHermitian { defect, limit: 1e-12 * scale });
        }
        let eig = solve_self_adjoint(&matrix)?;
        let lo = eig.values[0];
        let hi = *eig.values.last().expect("nonempty");
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        Ok(Self { matrix, condition, min_eigenvalue: lo })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Orthonormal functions `φ_j = Σ_k conj(T_{jk}) ξ_k` built by Gram–Schmidt.
///
/// `T` is lower triangular with a real positive diagonal and satisfies
/// `T S T† = I`. Equivalently the columns of `C = T†` are the ξ-coefficient
/// vectors of the `φ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthonormalBasis {
    t: CMatrix,
    residual: f64,
}

impl OrthonormalBasis {
    /// Lower-triangular transformation `T`.
    pub fn t(&self) -> &CMatrix {
        &self.t
    }

    /// `C = T†`: column `j` holds the ξ-coefficients of `φ_j`.
    pub fn coefficients(&self) -> CMatrix {
        self.t.adjoint()
    }

    /// `max |T S T† - I|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn dim(&self) -> usize {
        self.t.rows()
    }

    /// `T A T†`: a ξ-basis operator expressed over the φ basis.
    pub fn transform(&self, a: &CMatrix) -> CMatrix {
        &(&self.t * a) * &self.t.adjoint()
    }

    /// ξ-coefficients of states given by φ-coefficient columns.
    pub fn to_xi(&self, phi: &CMatrix) -> CMatrix {
        &self.t.adjoint() * phi
    }
}

/// Largest acceptable overlap condition number.
pub const MAX_CONDITION: f64 = 1e10;

/// Modified Gram–Schmidt under the metric `S`, with one full
/// reorthogonalization pass.
pub fn gram_schmidt(s: &OverlapMatrix) -> Result<OrthonormalBasis> {
    let sm = s.matrix();
    let n = sm.rows();
    // Column-major coefficient vectors of the orthonormal set.
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut sq: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut worst = (f64::INFINITY, 0usize);
    for j in 0..n {
        let mut v = vec![ZERO; n];
        v[j] = ONE;
        for _pass in 0..2 {
            for i in 0..j {
                // ⟨q_i, v⟩_S with v updated in place (modified GS).
                let r = dot(&sq[i], &v);
                for (vk, qk) in v.iter_mut().zip(&q[i]) {
                    *vk -= r * qk;
                }
            }
        }
        let sv = sm.mul_vec(&v);
        let nrm2 = dot(&v, &sv).re;
        let ratio = nrm2 / sm[(j, j)].re;
        if ratio < worst.0 {
            worst = (ratio, j + 1);
        }
        if nrm2.is_nan() || nrm2 <= 0.0 || ratio < 1.0 / MAX_CONDITION {
            return Err(Error::IllConditioned { condition: s.condition_number(), index: j + 1 });
        }
        let inv = 1.0 / nrm2.sqrt();
        for vk in v.iter_mut() {
            *vk *= inv;
        }
        let sv: Vec<Complex64> = sv.iter().map(|x| x * inv).collect();
        q.push(v);
        sq.push(sv);
    }
    if s.condition_number() >= MAX_CONDITION {
        return Err(Error::IllConditioned { condition: s.condition_number(), index: worst.1 });
    }
    let mut c = CMatrix::zeros(n, n);
    for (j, col) in q.iter().enumerate() {
        c.set_column(j, col);
    }
    let t = c.adjoint();
    let residual = orthonormality_residual(&t, sm);
    Ok(OrthonormalBasis { t, residual })
}

/// `max |T S T† - I|`.
pub fn orthonormality_residual(t: &CMatrix, s: &CMatrix) -> f64 {
    let g = &(t * s) * &t.adjoint();
    g.max_abs_diff(&CMatrix::identity(g.rows()))
}

/// Lower-triangular `L` with `A = L L†` and real positive diagonal.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut x = a[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = x / d;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn invert_lower(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut inv = CMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut x = if i == col { ONE } else { ZERO };
            for k in col..i {
                x -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = x / l[(i, i)];
        }
    }
    inv
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfAdjointEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: CMatrix,
    /// `‖H v_k − ε_k v_k‖₂`.
    pub residuals: Vec<f64>,
    /// `max |H − H†|` of the input before symmetrization.
    pub asymmetry: f64,
}

/// Maximum sweeps of the cyclic Jacobi method.
const MAX_SWEEPS: usize = 100;

/// Full spectrum of a Hermitian matrix by the cyclic complex Jacobi method.
///
/// The input is symmetrized as `(H + H†)/2`; an asymmetry above
/// `1e-8·max|H|` is rejected.
pub fn solve_self_adjoint(h: &CMatrix) -> Result<SelfAdjointEigen> {
    if !h.is_square() {
        return Err(Error::Dimension("eigensolver needs a square matrix".into()));
    }
    let n = h.rows();
    let scale = h.max_abs();
    let asymmetry = h.hermitian_defect();
    let limit = 1e-8 * scale;
    if asymmetry > limit {
        return Err(Error::NotHermitian { defect: asymmetry, limit });
    }
    let mut a = h.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    let total: f64 = a.as_slice().iter().map(|x| x.norm_sqr()).sum();

    let mut converged = n <= 1;
    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off <= (f64::EPSILON * f64::EPSILON) * total * 1e-6 || off == 0.0 {
            converged = true;
            break;
        }
        let mut rotated = 0usize;
        for p in 0..n {
            for q in p + 1..n {
                if rotate(&mut a, &mut v, p, q) {
                    rotated += 1;
                }
            }
        }
        if rotated == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    let sym = h.hermitian_part();
    let residuals = (0..n)
        .map(|k| {
            let x = vectors.column(k);
            let hx = sym.mul_vec(&x);
            hx.iter().zip(&x).map(|(a, b)| (a - values[k] * b).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    Ok(SelfAdjointEigen { values, vectors, residuals, asymmetry })
}

/// Rotates so the largest-modulus component is real positive (ties go to the lowest index).
pub fn fix_phase(x: &mut [Complex64]) {
    let mut best = 0;
    let mut big = -1.0;
    for (i, c) in x.iter().enumerate() {
        let m = c.norm();
        if m > big * (1.0 + 1e-9) {
            big = m;
            best = i;
        }
    }
    if big > 0.0 {
        let ph = x[best].conj() / big;
        for c in x.iter_mut() {
            *c *= ph;
        }
    }
}

/// One Jacobi rotation annihilating `a[p][q]`; false if the entry was negligible.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) -> bool {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return false;
    }
    let n = a.rows();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Skip rotations that are below rounding relative to the diagonal.
    if r < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return false;
    }
    let phase = apq / r; // e^{iφ}
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // W = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
    let wpp = Complex64::new(c, 0.0);
    let wpq = Complex64::new(s, 0.0);
    let wqp = -s * phase.conj();
    let wqq = c * phase.conj();

    // A ← A W (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * wpp + akq * wqp;
        a[(k, q)] = akp * wpq + akq * wqq;
    }
    // A ← W† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = wpp.conj() * apk + wqp.conj() * aqk;
        a[(q, k)] = wpq.conj() * apk + wqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * wpp + vkq * wqp;
        v[(k, q)] = vkp * wpq + vkq * wqq;
    }
    true
}

/// Spectrum of a Hamiltonian over an orthonormalized basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralResult {
    /// Ascending, meV.
    pub eigenvalues: Vec<f64>,
    /// Columns over the φ basis.
    pub eigenvectors: CMatrix,
    /// The same states over the primitive ξ basis.
    pub xi_coefficients: CMatrix,
    /// `‖H v − ε v‖` per state.
    pub residuals: Vec<f64>,
    /// Hermiticity defect of the φ-basis matrix that was diagonalized.
    pub asymmetry: f64,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// ξ-coefficients of state `k`.
    pub fn state(&self, k: usize) -> Result<Vec<Complex64>> {
        if k >= self.len() {
            return Err(Error::StateOutOfRange { index: k, len: self.len() });
        }
        Ok(self.xi_coefficients.column(k))
    }
}

/// Diagonalizes `H_φ` and maps eigenvectors back to ξ-coefficients.
pub fn solve_in_basis(h_phi: &CMatrix, basis: &OrthonormalBasis) -> Result<SpectralResult> {
    let eig = solve_self_adjoint(h_phi)?;
    let xi = basis.to_xi(&eig.vectors);
    Ok(SpectralResult {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        xi_coefficients: xi,
        residuals: eig.residuals,
        asymmetry: eig.asymmetry,
    })
}

/// Generalized problem `H c = ε S c` by Cholesky reduction
/// `L⁻¹ H L⁻† y = ε y`, `c = L⁻† y`. Eigenvalues ascending; columns of the
/// returned matrix are S-normalized ξ-coefficients.
pub fn solve_generalized(h: &CMatrix, s: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let l = cholesky(s)?;
    let li = invert_lower(&l);
    let reduced = &(&li * &h.hermitian_part()) * &li.adjoint();
    let eig = solve_self_adjoint(&reduced.hermitian_part())?;
    let c = &li.adjoint() * &eig.vectors;
    Ok((eig.values, c))
}
