//! Small dense complex linear algebra for qubit/probe systems.
//!
//! Tensor products are ordered probe first, transmitted qubit second: the
//! basis state `|e⟩_E |t⟩_T` sits at index `e * 2 + t`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;

/// Relative off-diagonal threshold for the Jacobi sweeps.
pub const JACOBI_REL_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn outer(psi: &[Complex64]) -> Self {
        let n = psi.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj();
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

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(m)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                actual: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: other.rows * other.cols,
            });
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    pub(crate) fn add_scaled_assign(&mut self, other: &ComplexMatrix, s: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M − M†‖_max`.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `‖U†U − I‖_max`.
    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let prod = self.adjoint().matmul(self).expect("square");
        prod.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn check_unitary(&self) -> Result<()> {
        let dev = self.unitary_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(())
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &ComplexMatrix) -> Result<Self> {
        self.matmul(rho)?.matmul(&self.adjoint())
    }

    /// Parses the shared `rows cols` text format with complex entries such
    /// as `0.5`, `-1i`, or `0.7071+0.7071i`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::MatrixParse {
            line: 0,
            message: "missing `rows cols` header".into(),
        })?;
        let (rows, cols) = crate::gf2::parse_header(hline, header)?;
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (line, content) in lines {
            let before = data.len();
            for tok in content.split_whitespace() {
                let z: Complex64 = tok.parse().map_err(|_| Error::MatrixParse {
                    line,
                    message: format!("bad complex entry {tok:?}"),
                })?;
                data.push(z);
            }
            if data.len() - before != cols {
                return Err(Error::MatrixParse {
                    line,
                    message: format!("expected {cols} entries, found {}", data.len() - before),
                });
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::MatrixParse {
                line: 0,
                message: format!("expected {rows} rows, found {seen}"),
            });
        }
        Self::from_vec(rows, cols, data)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// One row per line, entries as `a+bi`.
impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{}{:+}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix. Subnormalized states
/// (trace below one, used for abort branches) carry an explicit flag.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    subnormalized: bool,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace one, and eigenvalues `>= -1e-9`.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::validate(&matrix, false)?;
        Ok(DensityMatrix {
            matrix,
            subnormalized: false,
        })
    }

    /// Accepts any trace in `[0, 1]`.
    pub fn new_subnormalized(matrix: ComplexMatrix) -> Result<Self> {
        Self::validate(&matrix, true)?;
        Ok(DensityMatrix {
            matrix,
            subnormalized: true,
        })
    }

    fn validate(m: &ComplexMatrix, sub: bool) -> Result<()> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "{}x{} is not a nonempty square matrix",
                m.rows(),
                m.cols()
            )));
        }
        let dev = m.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace().re;
        let trace_ok = if sub {
            (-TRACE_TOL..=1.0 + TRACE_TOL).contains(&tr)
        } else {
            (tr - 1.0).abs() <= TRACE_TOL
        };
        if !trace_ok {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = hermitian_eigenvalues(m)?.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        DensityMatrix {
            matrix,
            subnormalized: false,
        }
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        Self::new(ComplexMatrix::outer(psi))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn is_subnormalized(&self) -> bool {
        self.subnormalized
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
            subnormalized: self.subnormalized || other.subnormalized,
        }
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        u.check_unitary()?;
        Ok(DensityMatrix {
            matrix: u.conjugate(&self.matrix)?,
            subnormalized: self.subnormalized,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Bit `b_j` of the protocol's basis string: 0 is z, 1 is x.
    pub fn from_bit(bit: bool) -> Basis {
        if bit {
            Basis::X
        } else {
            Basis::Z
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "z",
            Basis::X => "x",
        })
    }
}

/// `|bit^basis⟩`: computational states for z, `(|0⟩ ± |1⟩)/√2` for x.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QubitBasisState {
    pub bit: bool,
    pub basis: Basis,
}

impl QubitBasisState {
    pub fn new(bit: bool, basis: Basis) -> Self {
        QubitBasisState { bit, basis }
    }

    pub fn vector(&self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match (self.basis, self.bit) {
            (Basis::Z, false) => [ONE, ZERO],
            (Basis::Z, true) => [ZERO, ONE],
            (Basis::X, false) => [Complex64::new(h, 0.0), Complex64::new(h, 0.0)],
            (Basis::X, true) => [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)],
        }
    }
}

/// Eigenvalues of a Hermitian matrix in descending order, by cyclic complex
/// Jacobi rotations.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            actual: h.cols(),
        });
    }
    let dev = h.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.rows();
    // Symmetrize so rounding noise in the input cannot drift the iteration.
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let scale = a.frobenius_norm();
    let threshold = JACOBI_REL_TOL * scale;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Applies `A ← G† A G` with `G` chosen to zero `a_pq`.
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Phase e = a_pq/|a_pq| reduces the 2x2 block to a real symmetric one.
    let e = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G restricted to (p,q): [[c, s], [-s·ē, c·ē]].
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = -e.conj() * s;
    let g_qq = e.conj() * c;
    let n = a.rows();
    // A ← A G (columns p and q).
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // A ← G† A (rows p and q).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// Columns whose residual after projection falls below this fraction of
/// the Frobenius norm count as already spanned.
const RANGE_REL_TOL: f64 = 1e-13;

/// `Q† H Q` for an orthonormal basis `Q` of the column space of Hermitian
/// `H`, when that space has at most half the dimension. Its eigenvalues are
/// the nonzero eigenvalues of `H`.
fn compress_to_range(h: &ComplexMatrix) -> Option<ComplexMatrix> {
    let d = h.rows();
    let tol = RANGE_REL_TOL * h.frobenius_norm();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..d {
        let mut v: Vec<Complex64> = (0..d).map(|i| h[(i, j)]).collect();
        // Two passes of modified Gram-Schmidt keep Q orthonormal to rounding.
        for _ in 0..2 {
            for q in &basis {
                let c: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > tol {
            v.iter_mut().for_each(|z| *z /= norm);
            basis.push(v);
            if 2 * basis.len() > d {
                return None;
            }
        }
    }
    let k = basis.len();
    let hq: Vec<Vec<Complex64>> = basis.iter().map(|q| h.matvec(q).expect("square")).collect();
    let mut out = ComplexMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            out[(a, b)] = basis[a].iter().zip(&hq[b]).map(|(x, y)| x.conj() * y).sum();
        }
    }
    Some(out)
}

/// `½ Σ |λ_i(ρ − σ)|`, clamped to `[0, 1]`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let diff = rho.matrix().sub(sigma.matrix())?;
    let eig = match compress_to_range(&diff) {
        Some(small) => hermitian_eigenvalues(&small)?,
        None => hermitian_eigenvalues(&diff)?,
    };
    let d = 0.5 * eig.iter().map(|l| l.abs()).sum::<f64>();
    // `+ 0.0` turns a -0 from an all-zero spectrum into 0.
    Ok(d.clamp(0.0, 1.0) + 0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of a state on `A ⊗ B`, keeping `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem, dims: (usize, usize)) -> Result<DensityMatrix> {
    let (da, db) = dims;
    if da * db != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: da * db,
        });
    }
    let m = rho.matrix();
    let out = match keep {
        Subsystem::A => {
            let mut r = ComplexMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    r[(i, j)] = (0..db).map(|k| m[(i * db + k, j * db + k)]).sum();
                }
            }
            r
        }
        Subsystem::B => {
            let mut r = ComplexMatrix::zeros(db, db);
            for i in 0..db {
                for j in 0..db {
                    r[(i, j)] = (0..da).map(|k| m[(k * db + i, k * db + j)]).sum();
                }
            }
            r
        }
    };
    Ok(DensityMatrix {
        matrix: out,
        subnormalized: rho.subnormalized,
    })
}

/// `U |ψ⟩` for a unitary `U`.
pub fn apply_unitary(u: &ComplexMatrix, psi: &[Complex64]) -> Result<Vec<Complex64>> {
    if !u.is_square() || u.cols() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: u.cols(),
            actual: psi.len(),
        });
    }
    u.check_unitary()?;
    u.matvec(psi)
}

pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

pub mod gates {
    //! Common single- and two-qubit matrices.

    use super::*;

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn hadamard() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap()
    }

    /// `R_y(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn ry(theta: f64) -> ComplexMatrix {
        let (s, c) = (theta / 2.0).sin_cos();
        ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).unwrap()
    }

    /// Controlled gate on `target ⊗ control` (control is the second factor):
    /// applies `g` to the first factor when the second is `|1⟩`.
    pub fn controlled_on_second(g: &ComplexMatrix) -> ComplexMatrix {
        let d = g.rows();
        let mut m = ComplexMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            // control = 0: identity
            m[(i * 2, i * 2)] = ONE;
            for j in 0..d {
                m[(i * 2 + 1, j * 2 + 1)] = g[(i, j)];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ket(bit: bool, basis: Basis) -> Vec<Complex64> {
        QubitBasisState::new(bit, basis).vector().to_vec()
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(
            hermitian_eigenvalues(&ComplexMatrix::identity(2)).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            hermitian_eigenvalues(&ComplexMatrix::diag(&[3.0, -1.0])).unwrap(),
            vec![3.0, -1.0]
        );
        let ev = hermitian_eigenvalues(&gates::pauli_x()).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_reject_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigenvalues_match_two_by_two_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let a: f64 = rng.gen_range(-3.0..3.0);
            let d: f64 = rng.gen_range(-3.0..3.0);
            let b = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let m = ComplexMatrix::from_vec(2, 2, vec![c(a, 0.0), b, b.conj(), c(d, 0.0)]).unwrap();
            let mean = (a + d) / 2.0;
            let rad = (((a - d) / 2.0).powi(2) + b.norm_sqr()).sqrt();
            let ev = hermitian_eigenvalues(&m).unwrap();
            assert!((ev[0] - (mean + rad)).abs() < 1e-10, "{ev:?}");
            assert!((ev[1] - (mean - rad)).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn eigenvalue_sum_equals_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for dim in [3, 5, 8, 16, 33] {
            let h = random_hermitian(dim, &mut rng);
            let ev = hermitian_eigenvalues(&h).unwrap();
            assert!((ev.iter().sum::<f64>() - h.trace().re).abs() < 1e-9);
            assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = c(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..dim {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn low_rank_trace_distance_matches_full_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (dim, rank) in [(32, 3), (40, 10), (48, 12), (16, 1)] {
            let mix = |rng: &mut ChaCha8Rng| {
                let mut acc = ComplexMatrix::zeros(dim, dim);
                for _ in 0..rank {
                    let v: Vec<Complex64> = (0..dim)
                        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
                    acc.add_scaled_assign(&ComplexMatrix::outer(&v), 1.0 / (norm * rank as f64));
                }
                DensityMatrix::new(acc).unwrap()
            };
            let (a, b) = (mix(&mut rng), mix(&mut rng));
            let diff = a.matrix().sub(b.matrix()).unwrap();
            assert!(compress_to_range(&diff).is_some());
            let full = 0.5
                * hermitian_eigenvalues(&diff)
                    .unwrap()
                    .iter()
                    .map(|l| l.abs())
                    .sum::<f64>();
            assert!((trace_distance(&a, &b).unwrap() - full).abs() < 1e-11);
        }
        let z = ComplexMatrix::zeros(4, 4);
        assert_eq!(compress_to_range(&z).unwrap().rows(), 0);
        assert!(compress_to_range(&random_hermitian(6, &mut rng)).is_none());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::pure(&ket(false, Basis::Z)).unwrap();
        let one = DensityMatrix::pure(&ket(true, Basis::Z)).unwrap();
        let plus = DensityMatrix::pure(&ket(false, Basis::X)).unwrap();
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&zero, &plus).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(trace_distance(&zero, &DensityMatrix::maximally_mixed(4)).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let ra = DensityMatrix::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let rb = DensityMatrix::maximally_mixed(3);
        let prod = ra.kron(&rb);
        let kept = partial_trace(&prod, Subsystem::A, (2, 3)).unwrap();
        assert!(kept.matrix().max_abs_diff(ra.matrix()) < 1e-12);
        let kept_b = partial_trace(&prod, Subsystem::B, (2, 3)).unwrap();
        assert!(kept_b.matrix().max_abs_diff(rb.matrix()) < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        let red = partial_trace(&bell, Subsystem::A, (2, 2)).unwrap();
        assert!(red.matrix().max_abs_diff(DensityMatrix::maximally_mixed(2).matrix()) < 1e-12);

        let zero = DensityMatrix::pure(&ket(false, Basis::Z)).unwrap();
        let kb = partial_trace(&ra.kron(&zero), Subsystem::B, (2, 2)).unwrap();
        assert!(kb.matrix().max_abs_diff(zero.matrix()) < 1e-12);
        assert!((kb.trace() - 1.0).abs() < 1e-9);

        assert!(partial_trace(&bell, Subsystem::A, (3, 2)).is_err());
    }

    #[test]
    fn apply_unitary_examples() {
        let psi = vec![c(0.6, 0.0), c(0.0, 0.8)];
        assert_eq!(apply_unitary(&ComplexMatrix::identity(2), &psi).unwrap(), psi);

        let plus = apply_unitary(&gates::hadamard(), &ket(false, Basis::Z)).unwrap();
        for (a, b) in plus.iter().zip(ket(false, Basis::X)) {
            assert!((a - b).norm() < 1e-12);
        }

        // Probe first, qubit second; the qubit controls a flip of the probe.
        let cnot = gates::controlled_on_second(&gates::pauli_x());
        let input = kron_vec(&ket(false, Basis::Z), &ket(false, Basis::X));
        let out = apply_unitary(&cnot, &input).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        for (a, b) in out.iter().zip(want) {
            assert!((a - b).norm() < 1e-12);
        }
        let norm: f64 = out.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn apply_unitary_rejects_bad_input() {
        let not_unitary = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            apply_unitary(&not_unitary, &ket(false, Basis::Z)),
            Err(Error::NotUnitary(_))
        ));
        assert!(apply_unitary(&ComplexMatrix::identity(4), &ket(false, Basis::Z)).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::diag(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::diag(&[0.7, 0.7])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag(&[1.5, -0.5])).is_err());
        let sub = DensityMatrix::new_subnormalized(ComplexMatrix::diag(&[0.25, 0.25])).unwrap();
        assert!(sub.is_subnormalized());
        assert!(DensityMatrix::new_subnormalized(ComplexMatrix::zeros(2, 2)).is_ok());
    }

    #[test]
    fn matrix_text_round_trip() {
        let h = gates::hadamard();
        let text = h.to_string();
        let back = ComplexMatrix::parse(&text).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-15);
        let y = ComplexMatrix::parse("2 2\n0 -1i\n1i 0\n").unwrap();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert!(ComplexMatrix::parse("2 2\n0 1\n").is_err());
    }
}
