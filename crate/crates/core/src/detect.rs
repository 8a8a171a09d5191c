//! Exact binary detection, closed forms and classical baselines.

use std::time::Instant;

use faer::{Mat, MatRef};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, HermitianMatrix, DEFAULT_TOL};
use crate::result::{DetectionResult, Diagnostics, Method};

/// Two-hypothesis problem with priors `q0`, `q1 = 1 − q0`.
#[derive(Clone, Debug)]
pub struct BinaryProblem {
    pub rho0: HermitianMatrix,
    pub rho1: HermitianMatrix,
    pub q0: f64,
    pub q1: f64,
}

/// Slack for the PSD and trace checks on problem inputs.
const STATE_TOL: f64 = 1e-9;

impl BinaryProblem {
    /// Checks dimensions, priors, positivity and `Tr ρ ≤ 1`.
    pub fn new(rho0: HermitianMatrix, rho1: HermitianMatrix, q0: f64) -> Result<Self> {
        if rho0.dim() != rho1.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rho0 is {0}x{0}, rho1 is {1}x{1}",
                rho0.dim(),
                rho1.dim()
            )));
        }
        if !(0.0..=1.0).contains(&q0) {
            return Err(Error::Domain(format!("prior q0 = {q0} outside [0, 1]")));
        }
        for rho in [&rho0, &rho1] {
            let low = *linalg::eid_hermitian(rho)?.values.last().unwrap();
            if low < -STATE_TOL {
                return Err(Error::NotPsd {
                    eigenvalue: low,
                    threshold: -STATE_TOL,
                });
            }
            let tr = rho.trace();
            if tr > 1.0 + STATE_TOL || tr <= 0.0 {
                return Err(Error::Domain(format!("state trace {tr} outside (0, 1]")));
            }
        }
        Ok(BinaryProblem {
            rho0,
            rho1,
            q0,
            q1: 1.0 - q0,
        })
    }

    pub fn equiprobable(rho0: HermitianMatrix, rho1: HermitianMatrix) -> Result<Self> {
        Self::new(rho0, rho1, 0.5)
    }

    /// `1 − min(Tr ρ0, Tr ρ1)`.
    pub fn trace_deficit(&self) -> f64 {
        1.0 - self.rho0.trace().min(self.rho1.trace())
    }

    /// Decision operator `D = q1 ρ1 − q0 ρ0`.
    pub fn decision_operator(&self) -> HermitianMatrix {
        let d = faer::Scale(c64::new(self.q1, 0.0)) * self.rho1.as_mat()
            - faer::Scale(c64::new(self.q0, 0.0)) * self.rho0.as_mat();
        HermitianMatrix::new(d)
    }
}

/// Optimal binary measurement: `Π1` projects on the positive eigenspace of
/// `D`, `Π0 = I − Π1` (zero eigenvalues go to `Π0`).
#[derive(Clone, Debug)]
pub struct HelstromPovm {
    pub pi0: HermitianMatrix,
    pub pi1: HermitianMatrix,
    /// Eigenvalues of `D`, descending.
    pub eigenvalues: Vec<f64>,
}

pub fn helstrom_povm(p: &BinaryProblem) -> Result<HelstromPovm> {
    let eid = linalg::eid_hermitian(&p.decision_operator())?;
    let dim = p.rho0.dim();
    let pi1 = eid.apply(|x| if x > 0.0 { 1.0 } else { 0.0 });
    let pi0 = Mat::<c64>::identity(dim, dim) - &pi1;
    Ok(HelstromPovm {
        pi0: HermitianMatrix::new(pi0),
        pi1: HermitianMatrix::new(pi1),
        eigenvalues: eid.values,
    })
}

fn positive_sum(values: &[f64]) -> f64 {
    values.iter().filter(|&&x| x > 0.0).sum()
}

/// `Pc = q0 + Σ_{ε_i > 0} ε_i` over the eigenvalues of `D`. For a truncated
/// `ρ0` this exceeds `Σ q_i Tr(ρ_i Π_i)` by `q0 (1 − Tr ρ0)`.
pub fn helstrom_binary(p: &BinaryProblem) -> Result<DetectionResult> {
    let t = Instant::now();
    let eid = linalg::eid_hermitian(&p.decision_operator())?;
    let pc = p.q0 + positive_sum(&eid.values);
    let diag = Diagnostics {
        m: 2,
        n: p.rho0.dim(),
        trace_deficit: p.trace_deficit(),
        ..Default::default()
    };
    Ok(DetectionResult::from_pc(Method::HelstromBinary, pc, diag).with_runtime(t.elapsed().as_secs_f64()))
}

/// Helstrom's `Pc` for `ρ0 = γ0γ0*`, `ρ1 = γ1γ1*` given only the Gram blocks
/// `G00 = γ0*γ0`, `G01 = γ0*γ1`, `G11 = γ1*γ1`.
///
/// The nonzero spectrum of `D = Γ J Γ*`, `J = diag(−q0 I, q1 I)`, equals that
/// of `G^{1/2} J G^{1/2}` with `G = Γ*Γ`.
pub fn helstrom_from_gram(
    g00: MatRef<'_, c64>,
    g01: MatRef<'_, c64>,
    g11: MatRef<'_, c64>,
    q0: f64,
) -> Result<f64> {
    let (a, b) = (g00.nrows(), g11.nrows());
    if g01.nrows() != a || g01.ncols() != b || g00.ncols() != a || g11.ncols() != b {
        return Err(Error::DimensionMismatch("inconsistent Gram blocks".into()));
    }
    let g = HermitianMatrix::from_fn(a + b, |i, j| match (i < a, j < a) {
        (true, true) => g00[(i, j)],
        (true, false) => g01[(i, j - a)],
        (false, true) => g01[(j, i - a)].conj(),
        (false, false) => g11[(i - a, j - a)],
    });
    let r = linalg::sqrt_psd(&g, DEFAULT_TOL)?;
    let q1 = 1.0 - q0;
    let rj = Mat::from_fn(a + b, a + b, |i, j| r[(i, j)] * if j < a { -q0 } else { q1 });
    let m = HermitianMatrix::new(&rj * r.as_mat());
    Ok(q0 + positive_sum(&linalg::eid_hermitian(&m)?.values))
}

/// Helstrom detection of a 2-PPM constellation through its Gram blocks, with
/// no `n²`-dimensional object.
pub fn helstrom_ppm2(c: &Constellation) -> Result<DetectionResult> {
    if c.m() != 2 {
        return Err(Error::Domain(format!("binary detection needs m = 2, got {}", c.m())));
    }
    let t = Instant::now();
    let g00 = c.gram_block(0)?;
    let g01 = c.gram_block(1)?;
    let pc = helstrom_from_gram(g00.as_ref(), g01.as_ref(), g00.as_ref(), 0.5)?;
    let diag = Diagnostics {
        m: 2,
        n: c.params.n,
        h: c.params.h,
        ns: c.params.ns,
        nbar: c.params.nbar,
        eps: c.eps,
        nu: c.nu,
        trace_deficit: c.trace_deficit,
        ..Default::default()
    };
    Ok(DetectionResult::from_pc(Method::HelstromBinary, pc, diag).with_runtime(t.elapsed().as_secs_f64()))
}

fn check_m_ns(m: usize, ns: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!("PPM order must be >= 2, got {m}")));
    }
    if !(ns >= 0.0 && ns.is_finite()) {
        return Err(Error::Domain(format!("Ns must be finite and >= 0, got {ns}")));
    }
    Ok(())
}

fn closed_form_diag(m: usize, ns: f64, nbar: f64) -> Diagnostics {
    Diagnostics {
        m,
        ns,
        nbar,
        ..Default::default()
    }
}

/// Error probability of the optimal measurement for pure coherent PPM,
/// `Pc = (1/m²)(√(1+(m−1)e^{−Ns}) + (m−1)√(1−e^{−Ns}))²`.
///
/// `1 − Pc` is evaluated in a form free of cancellation, so tiny error
/// probabilities keep full relative accuracy.
pub fn pure_ppm_pe(m: usize, ns: f64) -> f64 {
    let e = (-ns).exp();
    let mf = m as f64;
    let a = (1.0 + (mf - 1.0) * e).sqrt();
    let b = (1.0 - e).sqrt();
    (mf - 1.0) * e * e * (mf + a + (mf - 1.0) * b) / (mf * (1.0 + a) * (1.0 + b) * (a + b))
}

pub fn pure_ppm_closed_form(m: usize, ns: f64) -> Result<DetectionResult> {
    check_m_ns(m, ns)?;
    Ok(DetectionResult::from_pe(
        Method::ClosedFormPure,
        pure_ppm_pe(m, ns),
        closed_form_diag(m, ns, 0.0),
    ))
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn binomial(m: usize, i: usize) -> f64 {
    let i = i.min(m - i);
    let mut c = 1.0_f64;
    for j in 0..i {
        c = c * (m - j) as f64 / (j + 1) as f64;
    }
    c.round()
}

/// Photon-counting PPM in thermal noise:
/// `Pe = (1/m) Σ_{i=2}^m (−1)^i C(m,i) exp[−(1−v)(1−v^{i−1}) Ns / (1−v^i)]`.
///
/// The alternating sum loses accuracy for large `m` (beyond about 40)
/// regardless of summation order.
pub fn classical_ppm_pe(m: usize, ns: f64, nbar: f64) -> f64 {
    let v = nbar / (1.0 + nbar);
    let terms = (2..=m).map(|i| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let expo = if ns == 0.0 {
            0.0
        } else {
            -(1.0 - v) * (1.0 - v.powi(i as i32 - 1)) * ns / (1.0 - v.powi(i as i32))
        };
        sign * binomial(m, i) * expo.exp()
    });
    compensated_sum(terms) / m as f64
}

pub fn classical_ppm(m: usize, ns: f64, nbar: f64) -> Result<DetectionResult> {
    check_m_ns(m, ns)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::Domain(format!("nbar must be finite and >= 0, got {nbar}")));
    }
    Ok(DetectionResult::from_pe(
        Method::ClassicalPpm,
        classical_ppm_pe(m, ns, nbar),
        closed_form_diag(m, ns, nbar),
    ))
}

/// Noiseless closed forms for on-off keying and PPM. For OOK, `Ns` is the
/// mean photon number per bit, so the pulse carries `2Ns`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baselines {
    /// OOK with photon counting, `½ e^{−2Ns}`.
    pub ook_classical: f64,
    /// OOK Helstrom bound, `½[1 − √(1 − e^{−2Ns})]`.
    pub ook_helstrom: f64,
    /// `¼ e^{−2Ns}`.
    pub ook_helstrom_asymptotic: f64,
    /// PPM slot-by-slot counting as usually quoted, `(m/(m−1)) e^{−Ns}`.
    /// Exceeds 1 for small `Ns`.
    pub ppm_slot_counter_quoted: f64,
    /// Noiseless limit of [`classical_ppm_pe`], `((m−1)/m) e^{−Ns}`.
    pub ppm_slot_counter: f64,
    /// PPM quantum limit, `¼ (m−1) e^{−2Ns}`.
    pub ppm_quantum_asymptotic: f64,
    /// Conditional nulling receiver, `½ (m−1) e^{−2Ns}`.
    pub ppm_conditional_nulling: f64,
}

pub fn baselines(m: usize, ns: f64) -> Result<Baselines> {
    check_m_ns(m, ns)?;
    let mf = m as f64;
    let x = (-2.0 * ns).exp();
    Ok(Baselines {
        ook_classical: 0.5 * x,
        ook_helstrom: 0.5 * x / (1.0 + (1.0 - x).sqrt()),
        ook_helstrom_asymptotic: 0.25 * x,
        ppm_slot_counter_quoted: mf / (mf - 1.0) * (-ns).exp(),
        ppm_slot_counter: (mf - 1.0) / mf * (-ns).exp(),
        ppm_quantum_asymptotic: 0.25 * (mf - 1.0) * x,
        ppm_conditional_nulling: 0.5 * (mf - 1.0) * x,
    })
}

pub fn ook_classical(ns: f64) -> Result<DetectionResult> {
    let b = baselines(2, ns)?;
    Ok(DetectionResult::from_pe(Method::ClassicalOok, b.ook_classical, closed_form_diag(2, ns, 0.0)))
}

pub fn ook_helstrom(ns: f64) -> Result<DetectionResult> {
    let b = baselines(2, ns)?;
    Ok(DetectionResult::from_pe(Method::HelstromOok, b.ook_helstrom, closed_form_diag(2, ns, 0.0)))
}

/// Dense composite density of a 2-PPM symbol as a [`BinaryProblem`] input.
pub fn ppm2_problem(c: &Constellation) -> Result<BinaryProblem> {
    if c.m() != 2 {
        return Err(Error::Domain(format!("binary detection needs m = 2, got {}", c.m())));
    }
    let rho0 = c.factored_density(0)?;
    let rho1 = c.factored_density(1)?;
    BinaryProblem::equiprobable(rho0, rho1)
}
