//! Dense complex linear algebra for operators on at most four qubits.
//!
//! Qubit 0 is always the leftmost tensor factor, i.e. the most significant
//! bit of a basis index. Eigen-, singular value and polar decompositions use
//! cyclic Jacobi rotations; at these sizes that is both simple and accurate.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Numerical tolerances shared across the crate.
pub mod tol {
    pub const HERMITIAN: f64 = 1e-10;
    pub const PSD_EIG: f64 = 1e-9;
    pub const TRACE: f64 = 1e-10;
    pub const NORM: f64 = 1e-10;
    pub const UNITARY: f64 = 1e-10;
    pub const JACOBI: f64 = 1e-13;
    pub const JACOBI_MAX_SWEEPS: usize = 100;
    /// Singular values below this are treated as zero by the polar decomposition.
    pub const RANK: f64 = 1e-9;
    /// Syndrome branches lighter than this carry no state.
    pub const BRANCH_PROB: f64 = 1e-12;
    pub const MAX_DIM: usize = 16;
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = r(1.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries. Panics on a length mismatch.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| r(x)).collect())
            .expect("real matrix literal")
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn column_vector(v: &[C64]) -> Self {
        Self::from_vec(v.len(), 1, v.to_vec()).expect("column vector")
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                m[(i, j)] = x * y.conj();
            }
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(r(k))
    }

    pub fn try_matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `K ρ K†`
    pub fn sandwich(&self, rho: &CMatrix) -> CMatrix {
        &(self * rho) * &self.adjoint()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry-wise deviation; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `M†M = I` within `tol` (columns orthonormal).
    pub fn is_isometry(&self, tol: f64) -> bool {
        (&self.adjoint() * self).max_abs_diff(&CMatrix::identity(self.cols)) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square() && self.is_isometry(tol)
    }

    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Multiplies `self` by the unit phase that makes its largest entry real
    /// positive. Used to compare operators up to a global phase.
    pub fn phase_aligned(&self) -> CMatrix {
        match largest_entry(&self.data) {
            Some(z) if z.norm() > 0.0 => self.scale(z.conj() / z.norm()),
            _ => self.clone(),
        }
    }

    /// Normalizes each column so that its largest-magnitude entry is real positive.
    pub fn column_phases_normalized(&self) -> CMatrix {
        let mut out = self.clone();
        for j in 0..self.cols {
            let col = self.column(j);
            if let Some(z) = largest_entry(&col) {
                if z.norm() > 0.0 {
                    let ph = z.conj() / z.norm();
                    let col: Vec<C64> = col.iter().map(|x| x * ph).collect();
                    out.set_column(j, &col);
                }
            }
        }
        out
    }
}

/// Largest-magnitude entry; ties (within 1e-12) resolve to the first index.
fn largest_entry(v: &[C64]) -> Option<C64> {
    let mut best: Option<C64> = None;
    for &z in v {
        match best {
            Some(b) if z.norm() <= b.norm() + 1e-12 => {}
            _ => best = Some(z),
        }
    }
    best
}

/// Distance between two operators after quotienting out a global phase.
pub fn phase_insensitive_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.phase_aligned().max_abs_diff(&b.phase_aligned())
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.try_matmul(rhs).expect("matrix product dimensions")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum dimensions");
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
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference dimensions");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kron(b)
}

// Jacobi rotation zeroing the (p, q) entry of a Hermitian 2x2 block
// [[app, apq], [conj(apq), aqq]]. Returns (c, s, phase) for
// J = [[c, s·phase], [−s·conj(phase), c]] acting on columns p, q.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for k in 0..m.rows {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = mp * c - mq * phase.conj() * s;
        m[(k, q)] = mp * phase * s + mq * c;
    }
}

fn rotate_rows_adjoint(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for k in 0..m.cols {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = mp * c - mq * phase * s;
        m[(q, k)] = mp * phase.conj() * s + mq * c;
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
/// Eigenvalues ascend; eigenvectors are the columns of the returned matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension("eigendecomposition of a non-square matrix".into()));
    }
    let scale = m.max_abs().max(1.0);
    let dev = m.hermitian_deviation();
    if dev > tol::HERMITIAN * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol::JACOBI * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                rotate_columns(&mut a, p, q, c, s, phase);
                rotate_rows_adjoint(&mut a, p, q, c, s, phase);
                a[(p, q)] = r(0.0);
                a[(q, p)] = r(0.0);
                a[(p, p)] = r(a[(p, p)].re);
                a[(q, q)] = r(a[(q, q)].re);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok((values, vectors))
}

/// Thin singular value decomposition `t = u · diag(sigma) · w†` of a tall
/// matrix. Singular values descend. Left vectors of (numerically) zero
/// singular values are completed by Gram–Schmidt over the standard basis and
/// the matching right vectors are phase-normalized, so the result is
/// deterministic even when `t` is rank deficient.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub w: CMatrix,
}

pub fn svd_thin(t: &CMatrix) -> Result<Svd> {
    let (m, n) = (t.rows, t.cols);
    if m < n {
        return Err(Error::Dimension(format!("thin SVD needs rows >= cols, got {m}x{n}")));
    }
    // One-sided (Hestenes) Jacobi: rotate columns of t until mutually orthogonal.
    let mut work = t.clone();
    let mut w = CMatrix::identity(n);
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let cp = work.column(p);
                let cq = work.column(q);
                let alpha: f64 = cp.iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cq.iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cp.iter().zip(&cq).map(|(x, y)| x.conj() * y).sum();
                if gamma.norm() <= tol::JACOBI * (alpha * beta).sqrt()
                    || gamma.norm() <= f64::MIN_POSITIVE
                {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut work, p, q, c, s, phase);
                rotate_columns(&mut w, p, q, c, s, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| work.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let mut u = CMatrix::zeros(m, n);
    let mut w_sorted = CMatrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut null_slots = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        let mut wcol = w.column(src);
        if s > tol::RANK {
            let col: Vec<C64> = work.column(src).iter().map(|z| z / s).collect();
            u.set_column(dst, &col);
            basis.push(col);
            sigma.push(s);
        } else {
            if let Some(z) = largest_entry(&wcol) {
                let ph = z.conj() / z.norm();
                wcol.iter_mut().for_each(|x| *x *= ph);
            }
            null_slots.push(dst);
            sigma.push(0.0);
        }
        w_sorted.set_column(dst, &wcol);
    }
    for dst in null_slots {
        let col = complete_basis(&basis, m);
        u.set_column(dst, &col);
        basis.push(col);
    }
    Ok(Svd { u, sigma, w: w_sorted })
}

// Next standard basis vector, orthogonalized against `basis` (two passes).
fn complete_basis(basis: &[Vec<C64>], dim: usize) -> Vec<C64> {
    for i in 0..dim {
        let mut v = vec![r(0.0); dim];
        v[i] = r(1.0);
        for _ in 0..2 {
            for b in basis {
                let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
    unreachable!("basis already spans the space")
}

/// Polar factors `t = v · p` with `v` an isometry and `p = √(t†t)`.
#[derive(Clone, Debug)]
pub struct Polar {
    pub v: CMatrix,
    pub p: CMatrix,
}

pub fn polar_decompose(t: &CMatrix) -> Result<Polar> {
    let svd = svd_thin(t)?;
    let wh = svd.w.adjoint();
    let v = &svd.u * &wh;
    let sig: Vec<C64> = svd.sigma.iter().map(|&s| r(s)).collect();
    let p = (&(&svd.w * &CMatrix::from_diag(&sig)) * &wh).hermitian_part();
    Ok(Polar { v, p })
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn matrix_sqrt_psd(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let scale = m.max_abs().max(1.0);
    if let Some(&min) = vals.first() {
        if min < -tol::PSD_EIG * scale {
            return Err(Error::NotPsd(min));
        }
    }
    let roots: Vec<C64> = vals.iter().map(|&l| r(l.max(0.0).sqrt())).collect();
    Ok((&(&vecs * &CMatrix::from_diag(&roots)) * &vecs.adjoint()).hermitian_part())
}

/// Builds the full `2^width` operator that applies `op` to `targets`
/// (listed in the order of `op`'s own tensor factors) and the identity elsewhere.
pub fn embed(op: &CMatrix, width: usize, targets: &[usize]) -> Result<CMatrix> {
    let k = targets.len();
    if op.rows != 1 << k || op.cols != 1 << k {
        return Err(Error::Dimension(format!(
            "{}x{} operator on {k} target qubits",
            op.rows, op.cols
        )));
    }
    check_qubits(width, targets)?;
    let dim = 1usize << width;
    let shift = |q: usize| width - 1 - q;
    let target_mask: usize = targets.iter().map(|&q| 1 << shift(q)).sum();
    let sub = |idx: usize| -> usize {
        targets
            .iter()
            .fold(0, |acc, &q| (acc << 1) | ((idx >> shift(q)) & 1))
    };
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            if row & !target_mask != col & !target_mask {
                continue;
            }
            out[(row, col)] = op[(sub(row), sub(col))];
        }
    }
    Ok(out)
}

pub(crate) fn check_qubits(width: usize, qubits: &[usize]) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= width {
            return Err(Error::QubitIndex(format!("qubit {q} outside width {width}")));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::QubitIndex(format!("qubit {q} repeated")));
        }
    }
    Ok(())
}

fn qubits_of(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() || dim > tol::MAX_DIM {
        return Err(Error::Dimension(format!("dimension {dim} is not 2^n with n <= 4")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Traces out every qubit not in `keep`. Kept qubits stay in ascending order.
/// An empty `keep` yields the 1x1 matrix holding the trace.
pub fn partial_trace(m: &CMatrix, keep: &[usize]) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("partial trace of a non-square matrix".into()));
    }
    let n = qubits_of(m.rows)?;
    check_qubits(n, keep)?;
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let compose = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut idx = 0;
        for (pos, &q) in keep.iter().enumerate() {
            let bit = (kept_bits >> (keep.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (traced_bits >> (traced.len() - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        idx
    };
    let dk = 1 << keep.len();
    let dt = 1 << traced.len();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            out[(i, j)] = (0..dt).map(|t| m[(compose(i, t), compose(j, t))]).sum();
        }
    }
    Ok(out)
}

/// Normalized pure state vector on one or more qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<C64>,
}

impl PureState {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        qubits_of(amps.len())?;
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps` first; fails only on the zero vector.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Self::new(amps.into_iter().map(|z| z / norm).collect())
    }

    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta])
    }

    pub fn zero() -> Self {
        Self { amps: vec![r(1.0), r(0.0)] }
    }

    pub fn one() -> Self {
        Self { amps: vec![r(0.0), r(1.0)] }
    }

    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: vec![r(h), r(h)] }
    }

    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: vec![r(h), r(-h)] }
    }

    pub fn plus_i() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: vec![r(h), c(0.0, h)] }
    }

    pub fn minus_i() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self { amps: vec![r(h), c(0.0, -h)] }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn nqubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn projector(&self) -> CMatrix {
        CMatrix::outer(&self.amps, &self.amps)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            nqubits: self.nqubits(),
            m: self.projector(),
        }
    }

    /// `⟨ψ|m|ψ⟩` (real part).
    pub fn expectation(&self, m: &CMatrix) -> f64 {
        let mut acc = r(0.0);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += self.amps[i].conj() * m[(i, j)] * self.amps[j];
            }
        }
        acc.re
    }
}

/// Hermitian, positive semidefinite, unit-trace state on 1–4 qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    nqubits: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("density matrix must be square".into()));
        }
        let nqubits = qubits_of(m.rows)?;
        if nqubits == 0 {
            return Err(Error::Dimension("density matrix needs at least one qubit".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::NotNormalized(tr.re));
        }
        let dev = m.hermitian_deviation();
        if dev > tol::HERMITIAN {
            return Err(Error::NotHermitian(dev));
        }
        let (vals, _) = hermitian_eigen(&m)?;
        if vals[0] < -tol::PSD_EIG {
            return Err(Error::NotPsd(vals[0]));
        }
        Ok(Self { nqubits, m })
    }

    /// Wraps a matrix that is a state by construction. Dimensions are still checked.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        let nqubits = qubits_of(m.rows).expect("state dimension");
        debug_assert!(m.is_square());
        Self { nqubits, m: m.hermitian_part() }
    }

    pub fn maximally_mixed(nqubits: usize) -> Self {
        let d = 1 << nqubits;
        Self::from_matrix_unchecked(CMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    pub fn basis(nqubits: usize, index: usize) -> Self {
        let d = 1 << nqubits;
        let mut m = CMatrix::zeros(d, d);
        m[(index, index)] = r(1.0);
        Self::from_matrix_unchecked(m)
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity(&self, psi: &PureState) -> f64 {
        psi.expectation(&self.m)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.m).map(|(v, _)| v).unwrap_or_default()
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.m - &other.m;
        hermitian_eigen(&diff)
            .map(|(v, _)| 0.5 * v.iter().map(|x| x.abs()).sum::<f64>())
            .unwrap_or(f64::INFINITY)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::QubitIndex("keep set is empty".into()));
        }
        Ok(Self::from_matrix_unchecked(partial_trace(&self.m, keep)?))
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::from_matrix_unchecked(self.m.kron(&other.m))
    }

    /// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of a single-qubit state.
    pub fn bloch(&self) -> Option<[f64; 3]> {
        if self.nqubits != 1 {
            return None;
        }
        let m = &self.m;
        Some([2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }
}

/// Unnormalized branch state `KρK†` with trace at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct SubnormalizedState {
    m: CMatrix,
}

impl SubnormalizedState {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("state must be square".into()));
        }
        qubits_of(m.rows)?;
        let tr = m.trace().re;
        if tr < -tol::TRACE || tr > 1.0 + tol::TRACE {
            return Err(Error::NotNormalized(tr));
        }
        Ok(Self { m: m.hermitian_part() })
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self { m: m.hermitian_part() }
    }

    pub fn zero(dim: usize) -> Self {
        Self { m: CMatrix::zeros(dim, dim) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Normalized state, or `None` when the weight is below the branch threshold.
    pub fn normalized(&self) -> Option<DensityMatrix> {
        let tr = self.trace();
        (tr > tol::BRANCH_PROB)
            .then(|| DensityMatrix::from_matrix_unchecked(self.m.scale_real(1.0 / tr)))
    }
}

pub mod gates {
    //! Fixed single-qubit matrices.
    use super::{c, r, CMatrix};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn i2() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_vec(2, 2, vec![r(0.0), c(0.0, -1.0), c(0.0, 1.0), r(0.0)]).unwrap()
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    pub fn h() -> CMatrix {
        CMatrix::from_real(2, 2, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2])
    }

    pub fn ry(theta: f64) -> CMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        CMatrix::from_real(2, 2, &[c, -s, s, c])
    }

    pub fn proj0() -> CMatrix {
        CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0])
    }

    pub fn proj1() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 1.0])
    }

    /// CNOT on two qubits, control first.
    pub fn cnot() -> CMatrix {
        &proj0().kron(&i2()) + &proj1().kron(&x())
    }
}

#[cfg(test)]
mod tests {
    use super::gates::*;
    use super::*;

    fn ad(gamma: f64) -> (CMatrix, CMatrix) {
        (
            CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()]),
            CMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0]),
        )
    }

    #[test]
    fn kron_identities() {
        assert_eq!(i2().kron(&i2()), CMatrix::identity(4));
        let ket00 = CMatrix::column_vector(&[r(1.0), r(0.0), r(0.0), r(0.0)]);
        let out = &x().kron(&i2()) * &ket00;
        assert_eq!(out.column(0), vec![r(0.0), r(0.0), r(1.0), r(0.0)]);
    }

    #[test]
    fn kron_damping_pair_entries() {
        let (a0, a1) = ad(0.5);
        let k = a0.kron(&a1);
        let nonzero: Vec<(usize, usize)> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| k[(i, j)].norm() > 0.0)
            .collect();
        assert_eq!(nonzero, vec![(0, 1), (2, 3)]);
        assert!((k[(0, 1)].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((k[(2, 3)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_basics() {
        let rho = DensityMatrix::basis(2, 0);
        let red = rho.partial_trace(&[0]).unwrap();
        assert!(red.matrix().max_abs_diff(&DensityMatrix::basis(1, 0).into_matrix()) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(vec![r(h), r(0.0), r(0.0), r(h)]).unwrap().density();
        let red = bell.partial_trace(&[0]).unwrap();
        assert!(red.matrix().max_abs_diff(DensityMatrix::maximally_mixed(1).matrix()) < 1e-15);

        let all = partial_trace(bell.matrix(), &[]).unwrap();
        assert_eq!((all.rows(), all.cols()), (1, 1));
        assert!((all[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_sets() {
        let rho = DensityMatrix::basis(2, 0);
        assert!(rho.partial_trace(&[]).is_err());
        assert!(rho.partial_trace(&[2]).is_err());
        assert!(rho.partial_trace(&[0, 0]).is_err());
    }

    #[test]
    fn polar_of_identity() {
        let p = polar_decompose(&CMatrix::identity(2)).unwrap();
        assert!(p.v.max_abs_diff(&CMatrix::identity(2)) < 1e-14);
        assert!(p.p.max_abs_diff(&CMatrix::identity(2)) < 1e-14);
    }

    #[test]
    fn polar_rejects_wide() {
        assert!(polar_decompose(&CMatrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn polar_rank_deficient_completion_is_deterministic() {
        // |00⟩(⟨0| + ⟨1|): the null column is completed with |01⟩.
        let t = CMatrix::from_real(4, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let p = polar_decompose(&t).unwrap();
        assert!(p.v.is_isometry(1e-12));
        assert!((&p.v * &p.p).max_abs_diff(&t) < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = CMatrix::from_real(4, 2, &[h, h, h, -h, 0.0, 0.0, 0.0, 0.0]);
        assert!(p.v.max_abs_diff(&expect) < 1e-12, "{}", p.v);
    }

    #[test]
    fn sqrt_small_cases() {
        assert!(matrix_sqrt_psd(&CMatrix::identity(3)).unwrap().max_abs_diff(&CMatrix::identity(3)) < 1e-14);
        let d = CMatrix::from_real(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let s = matrix_sqrt_psd(&d).unwrap();
        assert!(s.max_abs_diff(&CMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 3.0])) < 1e-13);
    }

    #[test]
    fn sqrt_rejects_invalid_input() {
        let neg = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(matrix_sqrt_psd(&neg), Err(Error::NotPsd(_))));
        let skew = CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(matrix_sqrt_psd(&skew), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn sqrt_round_trip_on_branch_gram() {
        let (a0, _) = ad(0.5);
        let h = std::f64::consts::FRAC_1_SQRT_2 * 0.5f64.sqrt();
        let e = CMatrix::from_real(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, -0.5, 0.5, 0.5]);
        let t00 = &a0.kron(&a0) * &e;
        let gram = &t00.adjoint() * &t00;
        let s = matrix_sqrt_psd(&gram).unwrap();
        assert!((&s * &s).max_abs_diff(&gram) < 1e-10);
        let _ = h;
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_vec(
            3,
            3,
            vec![r(2.0), c(1.0, 1.0), r(0.0), c(1.0, -1.0), r(3.0), c(0.0, 2.0), r(0.0), c(0.0, -2.0), r(-1.0)],
        )
        .unwrap();
        let (vals, vecs) = hermitian_eigen(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let d = CMatrix::from_diag(&vals.iter().map(|&v| r(v)).collect::<Vec<_>>());
        let back = &(&vecs * &d) * &vecs.adjoint();
        assert!(back.max_abs_diff(&m) < 1e-12);
        assert!(vecs.is_unitary(1e-12));
    }

    #[test]
    fn embed_orders_qubits_left_to_right() {
        // X on qubit 0 of two flips the most significant bit.
        let full = embed(&x(), 2, &[0]).unwrap();
        assert!(full.max_abs_diff(&x().kron(&i2())) < 1e-15);
        // CNOT with control 1, target 0.
        let rev = embed(&cnot(), 2, &[1, 0]).unwrap();
        let expect = &i2().kron(&proj0()) + &x().kron(&proj1());
        assert!(rev.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(CMatrix::from_real(2, 2, &[1.5, 0.0, 0.0, -0.5])).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(2).scale_real(0.5)).is_ok());
        assert!(PureState::new(vec![r(1.0), r(1.0)]).is_err());
        assert!(CMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn bloch_of_six_states() {
        let cases = [
            (PureState::zero(), [0.0, 0.0, 1.0]),
            (PureState::one(), [0.0, 0.0, -1.0]),
            (PureState::plus(), [1.0, 0.0, 0.0]),
            (PureState::minus(), [-1.0, 0.0, 0.0]),
            (PureState::plus_i(), [0.0, 1.0, 0.0]),
            (PureState::minus_i(), [0.0, -1.0, 0.0]),
        ];
        for (psi, want) in cases {
            let b = psi.density().bloch().unwrap();
            for k in 0..3 {
                assert!((b[k] - want[k]).abs() < 1e-15);
            }
        }
    }
}
