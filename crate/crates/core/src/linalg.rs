//! Dense complex-Hermitian linear algebra.
//!
//! Everything here works on `faer` matrices of `c64`. The Hermitian
//! eigensolver is faer's; square roots and Moore-Penrose inverse square roots
//! are spectral functions built on top of it.

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

/// Default relative cutoff for pseudo-inverses and PSD checks.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A square matrix that is Hermitian by construction.
#[derive(Clone, Debug)]
pub struct HermitianMatrix(CMat);

impl HermitianMatrix {
    /// Wraps `a`, replacing it with `(a + a*) / 2`.
    ///
    /// Panics if `a` is not square or is empty.
    pub fn new(a: CMat) -> Self {
        let n = a.nrows();
        assert!(n >= 1 && n == a.ncols(), "Hermitian matrix must be square and non-empty");
        let mut a = a;
        for i in 0..n {
            a[(i, i)] = c64::new(a[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                a[(i, j)] = avg;
                a[(j, i)] = avg.conj();
            }
        }
        HermitianMatrix(a)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self::new(Mat::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(Mat::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(Mat::zeros(dim, dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix(Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(diag[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        }))
    }

    /// `g g*` for any factor `g`.
    pub fn from_factor(g: MatRef<'_, c64>) -> Self {
        Self::new(g * g.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        HermitianMatrix(Mat::from_fn(self.dim(), self.dim(), |i, j| self.0[(i, j)] * c))
    }

    /// Unitary conjugation `u a u*`.
    pub fn conjugated(&self, u: MatRef<'_, c64>) -> Self {
        Self::new(u * self.0.as_ref() * u.adjoint())
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = c64;

    fn index(&self, idx: (usize, usize)) -> &c64 {
        &self.0[idx]
    }
}

/// Eigendecomposition `a = V diag(values) V*` with eigenvalues descending.
#[derive(Clone, Debug)]
pub struct Eid {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eid {
    /// `V diag(f(values)) V*`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> CMat {
        let n = self.vectors.nrows();
        let k = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let scaled = Mat::from_fn(n, k, |i, j| self.vectors[(i, j)] * fv[j]);
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply(|x| x)
    }

    /// Largest eigenvalue magnitude.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

/// Hermitian eigendecomposition, eigenvalues sorted descending.
///
/// Very sparse, highly degenerate inputs occasionally make the solver give
/// up; those are retried on `a + σI` for a few shifts of the order of `‖a‖`,
/// which leaves the eigenvectors unchanged.
pub fn eid_hermitian(a: &HermitianMatrix) -> Result<Eid> {
    let n = a.dim();
    let norm = frobenius(a.as_ref());
    for shift in [0.0, 1.0, 0.37, 2.9] {
        let sigma = shift * norm;
        if shift != 0.0 && sigma == 0.0 {
            break;
        }
        let evd = if sigma == 0.0 {
            a.as_ref().self_adjoint_eigen(Side::Lower)
        } else {
            let mut b = a.as_mat().clone();
            for i in 0..n {
                b[(i, i)] += sigma;
            }
            b.self_adjoint_eigen(Side::Lower)
        };
        let Ok(evd) = evd else { continue };
        let s = evd.S().column_vector();
        let u = evd.U();
        // faer returns ascending order; reversing keeps ties in a fixed order.
        let values: Vec<f64> = (0..n).rev().map(|i| s[i].re - sigma).collect();
        let vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
        return Ok(Eid { values, vectors });
    }
    Err(Error::NoConvergence { dim: n })
}

fn checked_psd_eid(a: &HermitianMatrix, tol: f64) -> Result<(Eid, f64)> {
    let eid = eid_hermitian(a)?;
    let scale = eid.scale();
    let threshold = -tol * scale;
    if let Some(&low) = eid.values.last() {
        if low < threshold {
            return Err(Error::NotPsd {
                eigenvalue: low,
                threshold,
            });
        }
    }
    Ok((eid, scale))
}

/// Principal square root of a PSD matrix. Eigenvalues in `[-tol*λmax, 0)`
/// are clamped to zero.
pub fn sqrt_psd(a: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let (eid, _) = checked_psd_eid(a, tol)?;
    Ok(HermitianMatrix::new(eid.apply(|x| x.max(0.0).sqrt())))
}

/// Moore-Penrose inverse square root: eigenvalues at or below `tol*λmax`
/// map to zero, the rest to `λ^{-1/2}`.
pub fn inv_sqrt_psd(a: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let (eid, scale) = checked_psd_eid(a, tol)?;
    let cutoff = tol * scale;
    Ok(HermitianMatrix::new(eid.apply(|x| {
        if x > cutoff {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    })))
}

/// Pseudo-inverse square root of a PSD matrix known to have rank at most
/// `rank` (e.g. `ΓΓ*` with `rank` columns in `Γ`). At most the `rank` largest
/// eigenvalues are inverted, and only those above the round-off level
/// `√dim·ε·λmax`; everything else maps to zero. `tol` only bounds the
/// negative eigenvalues. A coarser relative cutoff would drop genuine small
/// eigenvalues `λ`, which moves quadratic forms in `A^{-1/2}` by `O(√λ)`.
pub fn inv_sqrt_psd_rank(a: &HermitianMatrix, tol: f64, rank: usize) -> Result<HermitianMatrix> {
    let (eid, scale) = checked_psd_eid(a, tol)?;
    let floor = (a.dim() as f64).sqrt() * f64::EPSILON * scale;
    // values are descending, and apply visits them in order
    let mut seen = 0;
    Ok(HermitianMatrix::new(eid.apply(|x| {
        seen += 1;
        if seen <= rank && x > floor {
            1.0 / x.sqrt()
        } else {
            0.0
        }
    })))
}

/// Kronecker product. Row index of the result is `i_a * b.nrows() + i_b`,
/// so the left factor carries the most significant digit.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a list of factors, leftmost first.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = MatRef<'a, c64>>) -> CMat {
    let mut acc: CMat = Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0));
    for f in factors {
        acc = kron(acc.as_ref(), f);
    }
    acc
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// `a - b`, elementwise.
pub fn sub(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

/// Real matrix lifted to `c64`.
pub fn from_real(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> CMat {
    Mat::from_fn(rows, cols, |i, j| c64::new(f(i, j), 0.0))
}
