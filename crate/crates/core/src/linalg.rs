//! Dense complex linear algebra for small operators.
//!
//! [`ComplexMatrix`] stores entries row-major and is the carrier for every
//! operator and basis in the crate. Decompositions (Schur, SVD, QR) are
//! delegated to `nalgebra`; the rest is written out directly.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for unitarity and eigensolver residual checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigensolver residuals above `RESIDUAL_FACTOR * tol` are rejected.
pub const RESIDUAL_FACTOR: f64 = 100.0;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit-modulus complex number `e^{i theta}`.
#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Reduce an angle into `[0, 2pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    // `+ 0.0` turns -0.0 into 0.0
    let t = theta.rem_euclid(TAU) + 0.0;
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire form of a matrix: `{"rows": n, "cols": m, "data": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        let data = m.data.iter().map(|&[re, im]| c64(re, im)).collect();
        ComplexMatrix::new(m.rows, m.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    /// Build from row-major entries, rejecting length mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(idx) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Diagonal unitary `diag(e^{i p_0}, e^{i p_1}, ...)`.
    pub fn from_phases(phases: &[f64]) -> Self {
        let diag: Vec<C64> = phases.iter().map(|&p| cis(p)).collect();
        Self::from_diagonal(&diag)
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

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        Self::new(rows, cols, {
            let mut data = Vec::with_capacity(rows * cols);
            for i in 0..rows {
                for c in columns {
                    data.push(c[i]);
                }
            }
            data
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Side length of a square matrix.
    pub fn dim(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().iter().sum()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// `self^dagger * other` without materializing the adjoint.
    pub fn adjoint_matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.adjoint().matmul(other)
    }

    /// Kronecker product `self (x) other`.
    pub fn tensor(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        ComplexMatrix::from_fn(rows, cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    pub fn scale(&self, c: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    fn check_same_shape(&self, other: &ComplexMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_shape(other)?;
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix applied to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Max entry of `|m^dagger m - I|`.
    pub fn unitarity_deviation(&self) -> Result<f64> {
        let n = self.dim()?;
        let gram = self.adjoint_matmul(self)?;
        gram.max_abs_diff(&ComplexMatrix::identity(n))
    }

    pub fn is_unitary(&self, tol: f64) -> Result<bool> {
        Ok(self.unitarity_deviation()? <= tol)
    }

    /// Error unless the matrix is unitary within `tol`.
    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation()?;
        if deviation <= tol {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation, tol })
        }
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().max()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenphases of a unitary matrix, via complex Schur reduction.
    pub fn eigenphases(&self, tol: f64) -> Result<UnitarySpectrum> {
        UnitarySpectrum::of(self, tol)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> ComplexMatrix {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Normalizes `amplitudes`; rejects empty, zero or non-finite input.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidArgument("empty state vector".into()));
        }
        if let Some(idx) = amplitudes
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite(idx));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis state `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    /// Equal superposition of all basis states.
    pub fn uniform(dim: usize) -> Result<Self> {
        Self::new(vec![C64::new(1.0, 0.0); dim])
    }

    /// Uniformly random point on the unit sphere of `C^dim`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
            if let Ok(s) = Self::new(amps) {
                return s;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        StateVector { amplitudes: amps }
    }

    /// `m |self>`, renormalized.
    pub fn evolve(&self, m: &ComplexMatrix) -> Result<StateVector> {
        StateVector::new(m.matvec(&self.amplitudes)?)
    }
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        StateVector::new(pairs.into_iter().map(|[re, im]| c64(re, im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// `sum_i conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> Result<C64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "inner product of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenphases of a unitary, sorted ascending in `[0, 2pi)`, with matching
/// eigenvector columns and a residual certificate.
#[derive(Clone, Debug)]
pub struct UnitarySpectrum {
    pub phases: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
    pub max_residual: f64,
}

/// Complex Schur form `(Q, T)`. Nearly scalar inputs can stall the QR
/// iteration at machine-epsilon deflation, so looser thresholds are tried
/// in turn; callers validate the result through eigen-residuals.
pub(crate) fn schur_unpacked(m: DMatrix<C64>) -> Option<(DMatrix<C64>, DMatrix<C64>)> {
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(s) = nalgebra::linalg::Schur::try_new(m.clone(), eps, 10_000) {
            return Some(s.unpack());
        }
    }
    None
}

impl UnitarySpectrum {
    pub fn of(u: &ComplexMatrix, tol: f64) -> Result<Self> {
        u.ensure_unitary(tol)?;
        let n = u.dim()?;
        let (q, t) = schur_unpacked(u.to_nalgebra()).ok_or(Error::NoConvergence)?;

        // Eigenvalues projected radially onto the unit circle.
        let mut pairs: Vec<(f64, usize)> = (0..n)
            .map(|j| {
                let z = t[(j, j)];
                (wrap_phase(z.arg()), j)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let q = ComplexMatrix::from_nalgebra(&q);
        let mut columns = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        let mut max_residual: f64 = 0.0;
        for &(phase, j) in &pairs {
            let v = q.column(j);
            let wv = u.matvec(&v)?;
            let z = cis(phase);
            let r = vector_norm(
                &wv.iter()
                    .zip(&v)
                    .map(|(a, b)| a - z * b)
                    .collect::<Vec<_>>(),
            );
            max_residual = max_residual.max(r);
            phases.push(phase);
            columns.push(v);
        }
        let limit = RESIDUAL_FACTOR * tol;
        if max_residual > limit {
            return Err(Error::EigenResidual {
                residual: max_residual,
                limit,
            });
        }
        Ok(Self {
            phases,
            eigenvectors: ComplexMatrix::from_columns(&columns)?,
            max_residual,
        })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.phases.iter().map(|&p| cis(p)).collect()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<C64> {
        self.eigenvectors.column(j)
    }

    /// `V diag(e^{ic}) V^dagger`.
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let d = ComplexMatrix::from_phases(&self.phases);
        self.eigenvectors
            .matmul(&d)?
            .matmul(&self.eigenvectors.adjoint())
    }
}

pub(crate) fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Deterministic generator used for every seeded operation in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child seed from a master seed and a stream index.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Haar-distributed unitary of size `n` from a fixed seed.
pub fn haar_random_unitary(n: usize, rng_seed: u64) -> ComplexMatrix {
    haar_random_unitary_with(n, &mut seeded_rng(rng_seed))
}

/// Haar-distributed unitary drawn from an existing generator.
///
/// QR of a complex Ginibre matrix, with each column of `Q` multiplied by the
/// phase of the matching diagonal entry of `R` so that the factorization is
/// unique and the result is Haar rather than merely unitary.
pub fn haar_random_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    assert!(n >= 1, "haar_random_unitary requires n >= 1");
    let z = DMatrix::from_fn(n, n, |_, _| gaussian_c64(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}
