//! Slot-level Glauber states in a truncated Fock basis.
//!
//! A coherent state `|α⟩` has Poisson photon statistics. Adding thermal noise
//! with `nbar` mean photons gives a displaced thermal density whose Fock
//! matrix elements involve generalized Laguerre polynomials. Both are
//! truncated to the smallest dimension whose diagonal mass reaches `1 - eps`.

use faer::Mat;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, HermitianMatrix};

/// Default truncation accuracy.
pub const DEFAULT_EPS: f64 = 1e-8;
/// Default accuracy for the practical-rank choice.
pub const DEFAULT_NU: f64 = 1e-8;
/// Hard limit on the Fock dimension searched by the truncation rule.
pub const MAX_FOCK_DIM: usize = 4096;

/// `ln k!` for `k = 0..len`.
#[derive(Debug, Clone)]
pub(crate) struct LnFactorial(Vec<f64>);

impl LnFactorial {
    pub(crate) fn new(len: usize) -> Self {
        let mut t = Vec::with_capacity(len.max(1));
        t.push(0.0);
        for k in 1..len {
            let prev = t[k - 1];
            t.push(prev + (k as f64).ln());
        }
        LnFactorial(t)
    }

    pub(crate) fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("accuracy eps must lie in (0, 1), got {eps}")))
    }
}

/// Truncated coherent state `|α⟩`.
#[derive(Clone, Debug)]
pub struct CoherentKet {
    pub alpha: c64,
    pub amplitudes: Vec<c64>,
}

impl CoherentKet {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩` over the common leading levels.
    pub fn inner(&self, other: &CoherentKet) -> c64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Column vector of length `dim`, zero-padded.
    pub fn column(&self, dim: usize) -> CMat {
        Mat::from_fn(dim, 1, |i, _| {
            self.amplitudes.get(i).copied().unwrap_or(c64::new(0.0, 0.0))
        })
    }

    /// The projector `|α⟩⟨α|` padded to `dim`.
    pub fn projector(&self, dim: usize) -> HermitianMatrix {
        HermitianMatrix::from_factor(self.column(dim).as_ref())
    }
}

/// Fock amplitude `e^{-|α|²/2} α^k / √k!`, evaluated in log space.
fn coherent_amplitude(alpha: c64, k: usize, lf: &LnFactorial) -> c64 {
    let r = alpha.norm();
    if r == 0.0 {
        return if k == 0 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
    }
    let ln_mag = -0.5 * r * r + k as f64 * r.ln() - 0.5 * lf.get(k);
    c64::from_polar(ln_mag.exp(), k as f64 * alpha.arg())
}

/// Smallest `n` such that the first `n` Poisson(|α|²) probabilities sum to
/// at least `1 - eps`.
pub fn poisson_truncation_dim(alpha: c64, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let lambda = alpha.norm_sqr();
    if lambda == 0.0 {
        return Ok(1);
    }
    let lf = LnFactorial::new(MAX_FOCK_DIM);
    let mut cdf = 0.0;
    for k in 0..MAX_FOCK_DIM {
        cdf += (-lambda + k as f64 * lambda.ln() - lf.get(k)).exp();
        if cdf >= 1.0 - eps {
            return Ok(k + 1);
        }
    }
    Err(Error::Truncation {
        eps,
        max_dim: MAX_FOCK_DIM,
    })
}

/// Coherent ket truncated by the Poisson trace criterion.
pub fn coherent_ket(alpha: c64, eps: f64) -> Result<CoherentKet> {
    let dim = poisson_truncation_dim(alpha, eps)?;
    Ok(coherent_ket_with_dim(alpha, dim))
}

pub fn coherent_ket_with_dim(alpha: c64, dim: usize) -> CoherentKet {
    let lf = LnFactorial::new(dim);
    CoherentKet {
        alpha,
        amplitudes: (0..dim).map(|k| coherent_amplitude(alpha, k, &lf)).collect(),
    }
}

/// Untruncated overlap `⟨α|β⟩ = exp(-(|α|² + |β|² - 2 α* β)/2)`.
pub fn glauber_overlap(alpha: c64, beta: c64) -> c64 {
    ((alpha.norm_sqr() + beta.norm_sqr() - 2.0 * alpha.conj() * beta) * -0.5).exp()
}

/// Generalized Laguerre polynomial `L_m^{(k)}(x)` by the three-term
/// recurrence `(j+1) L_{j+1} = (2j+1+k-x) L_j - (j+k) L_{j-1}`.
pub fn laguerre_assoc(m: usize, k: usize, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Truncated density of a coherent signal in thermal noise.
#[derive(Clone, Debug)]
pub struct ThermalDensity {
    pub alpha: c64,
    pub nbar: f64,
    pub eps: f64,
    pub matrix: HermitianMatrix,
    /// Factor applied by [`normalized`]; 1 for a raw truncation.
    pub scale: f64,
}

impl ThermalDensity {
    pub fn v(&self) -> f64 {
        self.nbar / (1.0 + self.nbar)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.trace()
    }

    pub fn is_ground(&self) -> bool {
        self.alpha.norm() == 0.0
    }
}

/// Fock matrix element `ρ_{mn}(α)` for `m <= n` of the displaced thermal
/// state.
///
/// The textbook form `(1-v) v^n √(m!/n!) (α*/N)^{n-m} e^{-(1-v)|α|²}
/// L_m^{n-m}(-|α|²/(N(N+1)))` is rewritten so every term is positive:
/// `v^m L_m^{(k)}(x) = Σ_i C(n, m-i) v^{m-i} y^i / i!` with
/// `y = |α|²/(1+N)²`, which stays finite as `N -> 0`.
fn thermal_element(alpha: c64, nbar: f64, m: usize, n: usize, lf: &LnFactorial) -> c64 {
    debug_assert!(m <= n);
    let k = n - m;
    let a2 = alpha.norm_sqr();
    let v = nbar / (1.0 + nbar);
    if k > 0 && a2 == 0.0 {
        return c64::new(0.0, 0.0);
    }
    let y = a2 / ((1.0 + nbar) * (1.0 + nbar));
    let ln_v = v.ln();
    let ln_y = y.ln();

    // log-sum-exp over the positive series
    let mut terms = Vec::with_capacity(m + 1);
    for i in 0..=m {
        if (m - i > 0 && v == 0.0) || (i > 0 && y == 0.0) {
            continue;
        }
        let mut t = lf.ln_binomial(n, m - i) - lf.get(i);
        if m - i > 0 {
            t += (m - i) as f64 * ln_v;
        }
        if i > 0 {
            t += i as f64 * ln_y;
        }
        terms.push(t);
    }
    if terms.is_empty() {
        return c64::new(0.0, 0.0);
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ln_series = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();

    let mut ln_mag = (1.0 - v).ln() - (1.0 - v) * a2 + 0.5 * (lf.get(m) - lf.get(n)) + ln_series;
    if k > 0 {
        ln_mag += k as f64 * (alpha.norm() / (1.0 + nbar)).ln();
    }
    // phase of (α*)^k
    c64::from_polar(ln_mag.exp(), -(k as f64) * alpha.arg())
}

/// Diagonal photon-number probability `ρ_{mm}(α)`.
fn thermal_diagonal(alpha: c64, nbar: f64, m: usize, lf: &LnFactorial) -> f64 {
    thermal_element(alpha, nbar, m, m, lf).re
}

/// Smallest `n` with `Σ_{m<n} ρ_mm(α) >= 1 - eps`.
pub fn thermal_truncation_dim(alpha: c64, nbar: f64, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    check_nbar(nbar)?;
    if nbar == 0.0 {
        return poisson_truncation_dim(alpha, eps);
    }
    let lf = LnFactorial::new(2 * MAX_FOCK_DIM + 2);
    let mut cdf = 0.0;
    for m in 0..MAX_FOCK_DIM {
        cdf += thermal_diagonal(alpha, nbar, m, &lf);
        if cdf >= 1.0 - eps {
            return Ok(m + 1);
        }
    }
    Err(Error::Truncation {
        eps,
        max_dim: MAX_FOCK_DIM,
    })
}

fn check_nbar(nbar: f64) -> Result<()> {
    if nbar >= 0.0 && nbar.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("thermal photon number must be >= 0, got {nbar}")))
    }
}

/// Thermal density truncated by the quasi-unitary trace criterion.
pub fn thermal_density(alpha: c64, nbar: f64, eps: f64) -> Result<ThermalDensity> {
    let dim = thermal_truncation_dim(alpha, nbar, eps)?;
    let mut rho = thermal_density_with_dim(alpha, nbar, dim)?;
    rho.eps = eps;
    Ok(rho)
}

/// Thermal density at an explicit Fock dimension. `eps` is recorded as the
/// observed trace deficit.
pub fn thermal_density_with_dim(alpha: c64, nbar: f64, dim: usize) -> Result<ThermalDensity> {
    check_nbar(nbar)?;
    if dim == 0 {
        return Err(Error::Domain("Fock dimension must be >= 1".into()));
    }
    let matrix = if nbar == 0.0 {
        coherent_ket_with_dim(alpha, dim).projector(dim)
    } else {
        let lf = LnFactorial::new(2 * dim + 2);
        let mut a = Mat::<c64>::zeros(dim, dim);
        for n in 0..dim {
            for m in 0..=n {
                let e = thermal_element(alpha, nbar, m, n, &lf);
                a[(m, n)] = e;
                a[(n, m)] = e.conj();
            }
        }
        HermitianMatrix::new(a)
    };
    let deficit = (1.0 - matrix.trace()).max(0.0);
    Ok(ThermalDensity {
        alpha,
        nbar,
        eps: deficit,
        matrix,
        scale: 1.0,
    })
}

/// Rescales to unit trace; the factor is kept in `scale`.
pub fn normalized(rho: &ThermalDensity) -> Result<ThermalDensity> {
    let tr = rho.trace();
    if !(tr > 0.0) {
        return Err(Error::Domain(format!("cannot normalize a density with trace {tr}")));
    }
    let c = 1.0 / tr;
    Ok(ThermalDensity {
        matrix: rho.matrix.scaled(c),
        scale: rho.scale * c,
        ..rho.clone()
    })
}

/// Low-rank factor `γ` with `ρ ≈ γ γ*`.
#[derive(Clone, Debug)]
pub struct SlotFactor {
    /// `n × h` factor.
    pub matrix: CMat,
    pub rank: usize,
    /// Max-entry error `‖ρ - γγ*‖_max`.
    pub reconstruction_error: f64,
    /// Full spectrum of `ρ`, descending.
    pub eigenvalues: Vec<f64>,
}

impl SlotFactor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same factor with `h` columns: extra columns are zero.
    pub fn padded(&self, h: usize) -> SlotFactor {
        assert!(h >= self.rank);
        let g = &self.matrix;
        SlotFactor {
            matrix: Mat::from_fn(g.nrows(), h, |i, j| {
                if j < g.ncols() {
                    g[(i, j)]
                } else {
                    c64::new(0.0, 0.0)
                }
            }),
            rank: h,
            ..self.clone()
        }
    }
}

/// Eigenpairs of `ρ` sorted descending, plus the max-entry reconstruction
/// error after keeping `h` of them for every `h`.
struct RankProfile {
    values: Vec<f64>,
    vectors: CMat,
    errors: Vec<f64>,
}

fn rank_profile(rho: &HermitianMatrix, diagonal: bool) -> Result<RankProfile> {
    let n = rho.dim();
    let (values, vectors) = if diagonal {
        // ground state: already diagonal with decreasing entries
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| rho[(b, b)].re.total_cmp(&rho[(a, a)].re));
        let values: Vec<f64> = idx.iter().map(|&i| rho[(i, i)].re).collect();
        let vectors = linalg::from_real(n, n, |i, j| if idx[j] == i { 1.0 } else { 0.0 });
        (values, vectors)
    } else {
        let eid = linalg::eid_hermitian(rho)?;
        (eid.values, eid.vectors)
    };
    let mut resid = rho.as_mat().clone();
    let mut errors = Vec::with_capacity(n + 1);
    errors.push(linalg::max_abs(resid.as_ref()));
    for j in 0..n {
        let lam = values[j].max(0.0);
        for c in 0..n {
            let zc = vectors[(c, j)].conj() * lam;
            for r in 0..n {
                resid[(r, c)] -= vectors[(r, j)] * zc;
            }
        }
        errors.push(linalg::max_abs(resid.as_ref()));
    }
    Ok(RankProfile {
        values,
        vectors,
        errors,
    })
}

fn factor_from_profile(p: &RankProfile, h: usize) -> SlotFactor {
    let n = p.vectors.nrows();
    let kept = h.min(n);
    let matrix = Mat::from_fn(n, h, |i, j| {
        if j < kept {
            p.vectors[(i, j)] * p.values[j].max(0.0).sqrt()
        } else {
            c64::new(0.0, 0.0)
        }
    });
    SlotFactor {
        matrix,
        rank: h,
        reconstruction_error: p.errors[kept],
        eigenvalues: p.values.clone(),
    }
}

fn factor_profile(rho: &ThermalDensity) -> Result<Option<RankProfile>> {
    if rho.nbar == 0.0 {
        return Ok(None);
    }
    rank_profile(&rho.matrix, rho.is_ground()).map(Some)
}

fn pure_factor(rho: &ThermalDensity, h: usize) -> SlotFactor {
    let n = rho.dim();
    let ket = coherent_ket_with_dim(rho.alpha, n);
    let root = rho.scale.sqrt();
    let g = Mat::from_fn(n, 1, |i, _| ket.amplitudes[i] * root);
    let rec = HermitianMatrix::from_factor(g.as_ref());
    let err = linalg::max_abs(linalg::sub(rho.matrix.as_ref(), rec.as_ref()).as_ref());
    let mut values = vec![0.0; n];
    values[0] = ket.norm_sqr() * rho.scale;
    SlotFactor {
        matrix: g,
        rank: 1,
        reconstruction_error: err,
        eigenvalues: values,
    }
    .padded(h.max(1))
}

/// Reduced factorization keeping the smallest rank `h` whose max-entry
/// reconstruction error is at most `nu`.
///
/// The ground state is already diagonal and skips the eigendecomposition; a
/// pure state (`nbar = 0`) returns its ket as a single column.
pub fn factorize(rho: &ThermalDensity, nu: f64) -> Result<SlotFactor> {
    match factor_profile(rho)? {
        None => Ok(pure_factor(rho, 1)),
        Some(p) => {
            let h = (1..=rho.dim())
                .find(|&h| p.errors[h] <= nu)
                .unwrap_or(rho.dim());
            Ok(factor_from_profile(&p, h))
        }
    }
}

/// Factorization at a fixed rank `h` (columns beyond the Fock dimension are
/// zero).
pub fn factorize_with_rank(rho: &ThermalDensity, h: usize) -> Result<SlotFactor> {
    if h == 0 {
        return Err(Error::Domain("rank must be >= 1".into()));
    }
    match factor_profile(rho)? {
        None => Ok(pure_factor(rho, h)),
        Some(p) => Ok(factor_from_profile(&p, h)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    /// `L_m^{(k)}(x) = Σ_i (-1)^i C(m+k, m-i) x^i / i!`, exact sum.
    fn laguerre_explicit(m: usize, k: usize, x: f64) -> f64 {
        let binom = |n: usize, r: usize| -> f64 {
            (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        };
        let mut fact = 1.0;
        let mut s = 0.0;
        for i in 0..=m {
            if i > 0 {
                fact *= i as f64;
            }
            s += (-1f64).powi(i as i32) * binom(m + k, m - i) * x.powi(i as i32) / fact;
        }
        s
    }

    #[test]
    fn laguerre_base_cases() {
        for k in 0..5 {
            for x in [-2.0, 0.0, 0.3, 4.0] {
                assert_eq!(laguerre_assoc(0, k, x), 1.0);
                assert!((laguerre_assoc(1, k, x) - (k as f64 + 1.0 - x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        let v = laguerre_assoc(3, 2, -1.5);
        assert!((v - laguerre_explicit(3, 2, -1.5)).abs() < 1e-12);
        // L_3^{(2)}(x) = 10 - 10x + 5x²/2 - x³/6 at x = -1.5
        assert!((v - 31.1875).abs() < 1e-12);
        for m in 0..12 {
            for k in 0..6 {
                for x in [-3.0, -0.5, 0.7, 2.5] {
                    let a = laguerre_assoc(m, k, x);
                    let b = laguerre_explicit(m, k, x);
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "m={m} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn ground_coherent_ket() {
        for eps in [1e-3, 1e-8, 1e-12] {
            let k = coherent_ket(re(0.0), eps).unwrap();
            assert_eq!(k.dim(), 1);
            assert_eq!(k.amplitudes[0], re(1.0));
        }
    }

    #[test]
    fn coherent_norm_within_eps() {
        for (a, eps) in [(0.5, 1e-6), (2.0, 1e-8), (3.1, 1e-4)] {
            let k = coherent_ket(c64::new(a, 0.3), eps).unwrap();
            let n2 = k.norm_sqr();
            assert!(n2 <= 1.0 + 1e-15 && n2 >= 1.0 - eps);
            let shorter = coherent_ket_with_dim(k.alpha, k.dim() - 1);
            assert!(shorter.norm_sqr() < 1.0 - eps);
        }
    }

    #[test]
    fn coherent_overlap_matches_closed_form() {
        let eps = 1e-12;
        let a = c64::new(1.2, -0.4);
        let b = c64::new(-0.3, 0.9);
        let ka = coherent_ket(a, eps).unwrap();
        let kb = coherent_ket(b, eps).unwrap();
        let n = ka.dim().max(kb.dim());
        let ka = coherent_ket_with_dim(a, n);
        let kb = coherent_ket_with_dim(b, n);
        assert!((ka.inner(&kb) - glauber_overlap(a, b)).norm() < 1e-10);
    }

    #[test]
    fn pure_dim_below_thermal_dim() {
        let a = re(5f64.sqrt());
        let pure = poisson_truncation_dim(a, 1e-5).unwrap();
        let thermal = thermal_truncation_dim(a, 0.1, 1e-5).unwrap();
        assert_eq!(thermal, 20);
        assert!(pure <= thermal);
        // Poisson(5): P(X <= 16) < 1 - 1e-5 <= P(X <= 17)
        assert_eq!(pure, 18);
    }

    #[test]
    fn ground_thermal_is_geometric() {
        let nbar = 0.3;
        let rho = thermal_density(re(0.0), nbar, 1e-8).unwrap();
        let v = nbar / (1.0 + nbar);
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                let e = rho.matrix[(i, j)];
                if i == j {
                    assert!((e.re - (1.0 - v) * v.powi(i as i32)).abs() < 1e-15);
                } else {
                    assert_eq!(e, re(0.0));
                }
            }
        }
    }

    #[test]
    fn trace_within_eps_on_grid() {
        for &eps in &[1e-4, 1e-8] {
            for &a in &[0.0, 0.7, 1.5, 2.5] {
                for &nbar in &[0.0, 0.01, 0.1, 0.5] {
                    let alpha = c64::from_polar(a, 0.4);
                    let rho = thermal_density(alpha, nbar, eps).unwrap();
                    let tr = rho.trace();
                    assert!(tr <= 1.0 + 1e-12 && tr >= 1.0 - eps, "a={a} nbar={nbar}");
                }
            }
        }
    }

    #[test]
    fn thermal_is_psd_and_hermitian() {
        let rho = thermal_density(c64::new(1.3, 0.8), 0.2, 1e-10).unwrap();
        let eid = linalg::eid_hermitian(&rho.matrix).unwrap();
        assert!(*eid.values.last().unwrap() >= -1e-10);
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                assert_eq!(rho.matrix[(i, j)], rho.matrix[(j, i)].conj());
            }
        }
    }

    #[test]
    fn thermal_matches_laguerre_textbook_form() {
        // direct formula with the recurrence, moderate parameters
        let alpha = c64::new(1.1, 0.5);
        let nbar = 0.4;
        let v = nbar / (1.0 + nbar);
        let rho = thermal_density_with_dim(alpha, nbar, 12).unwrap();
        let lf = LnFactorial::new(30);
        let a2 = alpha.norm_sqr();
        for n in 0..12 {
            for m in 0..=n {
                let k = n - m;
                let pre = (1.0 - v)
                    * v.powi(n as i32)
                    * (0.5 * (lf.get(m) - lf.get(n))).exp()
                    * (-(1.0 - v) * a2).exp()
                    * laguerre_assoc(m, k, -a2 / (nbar * (nbar + 1.0)));
                let expect = (alpha.conj() / nbar).powi(k as i32) * pre;
                let got = rho.matrix[(m, n)];
                assert!((got - expect).norm() < 1e-12, "({m},{n}) {got} {expect}");
            }
        }
    }

    #[test]
    fn small_nbar_approaches_pure_projector() {
        let alpha = c64::new(1.7, -0.2);
        let eps = 1e-10;
        let thermal = thermal_density(alpha, 1e-9, eps).unwrap();
        let ket = coherent_ket_with_dim(alpha, thermal.dim());
        let proj = ket.projector(thermal.dim());
        let diff = linalg::sub(thermal.matrix.as_ref(), proj.as_ref());
        assert!(linalg::max_abs(diff.as_ref()) <= 1e-6);
    }

    #[test]
    fn negative_nbar_rejected() {
        assert!(matches!(
            thermal_density(re(1.0), -0.1, 1e-6),
            Err(Error::Domain(_))
        ));
        assert!(thermal_density(re(1.0), 0.1, 0.0).is_err());
    }

    #[test]
    fn normalization() {
        let rho = thermal_density(re(1.0), 0.1, 1e-3).unwrap();
        let tr = rho.trace();
        let nrm = normalized(&rho).unwrap();
        assert!((nrm.trace() - 1.0).abs() < 1e-14);
        assert!((nrm.scale - 1.0 / tr).abs() < 1e-15);
        let again = normalized(&nrm).unwrap();
        assert!((again.scale - nrm.scale).abs() < 1e-15);
        assert!(normalized(&ThermalDensity {
            matrix: HermitianMatrix::zeros(2),
            ..rho
        })
        .is_err());
    }

    #[test]
    fn eigenvalues_close_to_displaced_thermal_spectrum() {
        // Untruncated spectrum is (1-v) v^k; truncation perturbs it slightly.
        let rho = thermal_density(re(5f64.sqrt()), 0.1, 1e-5).unwrap();
        let f = factorize(&rho, DEFAULT_NU).unwrap();
        let v: f64 = 0.1 / 1.1;
        for (k, tol) in [(0, 1e-5), (1, 1e-4), (2, 1e-3), (3, 1e-2)] {
            let exact = (1.0 - v) * v.powi(k);
            assert!((f.eigenvalues[k as usize] - exact).abs() / exact < tol, "k={k}");
        }
    }

    #[test]
    fn factor_rank_and_bookkeeping() {
        let rho = thermal_density(re(5f64.sqrt()), 0.1, 1e-8).unwrap();
        let nu = 1e-8;
        let f = factorize(&rho, nu).unwrap();
        assert!(f.reconstruction_error <= nu);
        let rec = HermitianMatrix::from_factor(f.matrix.as_ref());
        let err = linalg::max_abs(linalg::sub(rho.matrix.as_ref(), rec.as_ref()).as_ref());
        assert!((err - f.reconstruction_error).abs() < 1e-14);
        let kept: f64 = f.eigenvalues[..f.rank].iter().sum();
        assert!((rec.trace() - kept).abs() < 1e-13);
        let tail: f64 = f.eigenvalues[f.rank..].iter().sum();
        assert!((rec.trace() - (rho.trace() - tail)).abs() < 1e-13);

        // refactoring the reconstruction keeps the rank
        let again = ThermalDensity {
            matrix: rec,
            ..rho.clone()
        };
        let g = factorize(&again, nu).unwrap();
        assert_eq!(g.rank, f.rank);
        assert!(g.reconstruction_error <= 2.0 * nu);
    }

    #[test]
    fn pure_state_factor_is_the_ket() {
        let alpha = re(1.4);
        let rho = thermal_density(alpha, 0.0, 1e-9).unwrap();
        let f = factorize(&rho, 1e-8).unwrap();
        assert_eq!(f.rank, 1);
        let ket = coherent_ket_with_dim(alpha, rho.dim());
        for i in 0..rho.dim() {
            assert_eq!(f.matrix[(i, 0)], ket.amplitudes[i]);
        }
    }

    #[test]
    fn ground_factor_is_diagonal_sqrt() {
        let nbar = 0.1;
        let rho = thermal_density_with_dim(re(0.0), nbar, 10).unwrap();
        let f = factorize_with_rank(&rho, 4).unwrap();
        let v: f64 = nbar / (1.0 + nbar);
        for i in 0..10 {
            for j in 0..4 {
                let expect = if i == j { ((1.0 - v) * v.powi(i as i32)).sqrt() } else { 0.0 };
                assert!((f.matrix[(i, j)].re - expect).abs() < 1e-15);
            }
        }
        assert!((f.reconstruction_error - (1.0 - v) * v.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn normalized_pure_factor_keeps_the_scale() {
        let rho = thermal_density_with_dim(re(2.0), 0.0, 5).unwrap();
        let unit = normalized(&rho).unwrap();
        let f = factorize(&unit, 1e-8).unwrap();
        let rec = HermitianMatrix::from_factor(f.matrix.as_ref());
        assert!((rec.trace() - 1.0).abs() < 1e-14);
        assert!(f.reconstruction_error < 1e-15);
    }
}
