//! Square-root measurement.
//!
//! The production route works on the `m` DFT blocks `E_k` of the
//! block-circulant Gram matrix, each of size `h^m`. The Gram-operator route
//! builds `T = ΓΓ*` in the full `n^m` space and exists as a cross-check.

use std::time::Instant;

use faer::{Mat, MatRef};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::gus::{root_of_unity, spectrum};
use crate::linalg::{self, c64, CMat, HermitianMatrix, DEFAULT_TOL};
use crate::result::{DetectionResult, Diagnostics, Method};

/// Eigenvalues of `E_k` in `[-EIG_FLOOR, 0)` are treated as zero.
pub const EIG_FLOOR: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSource {
    /// DFT of the Gram blocks `G_{0s}`.
    GramBlocks,
    /// `m γ_0* Y_k Y_k* γ_0` from the symmetry eigenvectors.
    Eigenprojectors,
}

/// The blocks `E_k = Σ_s G_{0s} W_m^{-ks}`, `k = 0 … m−1`.
#[derive(Clone, Debug)]
pub struct DftBlocks {
    pub blocks: Vec<HermitianMatrix>,
    pub source: BlockSource,
}

impl DftBlocks {
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// `G_{ij} = (1/m) Σ_k W_m^{k(j−i)} E_k`.
    pub fn reassemble(&self, i: usize, j: usize) -> CMat {
        let m = self.m();
        let d = self.blocks[0].dim();
        let shift = (j as i64) - (i as i64);
        let mut out = Mat::<c64>::zeros(d, d);
        for (k, e) in self.blocks.iter().enumerate() {
            let w = root_of_unity(m, k as i64 * shift) / m as f64;
            out += faer::Scale(w) * e.as_mat();
        }
        out
    }
}

pub fn dft_blocks(c: &Constellation) -> Result<DftBlocks> {
    let m = c.m();
    let grams = c.gram_blocks()?;
    let d = grams[0].nrows();
    let blocks = (0..m)
        .map(|k| {
            let mut e = Mat::<c64>::zeros(d, d);
            for (s, g) in grams.iter().enumerate() {
                e += faer::Scale(root_of_unity(m, -((k * s) as i64))) * g;
            }
            HermitianMatrix::new(e)
        })
        .collect();
    Ok(DftBlocks {
        blocks,
        source: BlockSource::GramBlocks,
    })
}

/// Same blocks through the eigenprojectors of `S`; needs the dense `γ_0`.
pub fn dft_blocks_from_projectors(c: &Constellation) -> Result<DftBlocks> {
    let m = c.m();
    let g0 = c.composite_factor(0)?.matrix;
    let spec = spectrum(c.params.n, m);
    let blocks = (0..m)
        .map(|k| HermitianMatrix::new(spec.compress(k, g0.as_ref())).scaled(m as f64))
        .collect();
    Ok(DftBlocks {
        blocks,
        source: BlockSource::Eigenprojectors,
    })
}

fn block_sqrt(e: &HermitianMatrix) -> Result<CMat> {
    let eid = linalg::eid_hermitian(e)?;
    if let Some(&low) = eid.values.last() {
        if low < -EIG_FLOOR {
            return Err(Error::NotPsd {
                eigenvalue: low,
                threshold: -EIG_FLOOR,
            });
        }
    }
    Ok(eid.apply(|x| x.max(0.0).sqrt()))
}

/// `Pc = (1/m²) Tr[(Σ_k E_k^{1/2})²]`.
pub fn pc_from_blocks(blocks: &DftBlocks) -> Result<f64> {
    let m = blocks.m();
    let sqrts: Vec<Result<CMat>> = std::thread::scope(|scope| {
        let handles: Vec<_> = blocks
            .blocks
            .iter()
            .map(|e| scope.spawn(move || block_sqrt(e)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sqrt worker panicked")).collect()
    });
    let d = blocks.blocks[0].dim();
    let mut sum = Mat::<c64>::zeros(d, d);
    for (k, r) in sqrts.into_iter().enumerate() {
        let r = r.map_err(|e| Error::Block {
            index: k,
            source: Box::new(e),
        })?;
        sum += r;
    }
    // the sum is Hermitian, so the trace of its square is its squared norm
    Ok(linalg::frobenius(sum.as_ref()).powi(2) / (m * m) as f64)
}

fn diagnostics(c: &Constellation) -> Diagnostics {
    Diagnostics {
        m: c.m(),
        n: c.params.n,
        h: c.params.h,
        ns: c.params.ns,
        nbar: c.params.nbar,
        eps: c.eps,
        nu: c.nu,
        trace_deficit: c.trace_deficit,
        ..Default::default()
    }
}

/// SRM error probability through the Gram matrix.
pub fn pc_gram_matrix(c: &Constellation) -> Result<DetectionResult> {
    let t = Instant::now();
    let blocks = dft_blocks(c)?;
    let pc = pc_from_blocks(&blocks)?;
    Ok(DetectionResult::from_pc(Method::SrmGramMatrix, pc, diagnostics(c)).with_runtime(t.elapsed().as_secs_f64()))
}

struct OperatorParts {
    factors: Vec<CMat>,
    inv_sqrt_t: HermitianMatrix,
}

fn operator_parts(c: &Constellation) -> Result<OperatorParts> {
    let factors: Vec<CMat> = (0..c.m())
        .map(|i| c.composite_factor(i).map(|f| f.matrix))
        .collect::<Result<_>>()?;
    let gamma = c.state_matrix()?;
    let t = HermitianMatrix::from_factor(gamma.as_ref());
    let inv_sqrt_t = linalg::inv_sqrt_psd_rank(&t, DEFAULT_TOL, gamma.ncols())?;
    Ok(OperatorParts { factors, inv_sqrt_t })
}

/// SRM error probability through the Gram operator `T = ΓΓ*`,
/// `Pc = Tr[(ρ_0 T^{-1/2})²]`. Dense in `N = n^m`.
pub fn pc_gram_operator(c: &Constellation) -> Result<DetectionResult> {
    let t = Instant::now();
    let parts = operator_parts(c)?;
    let g0 = parts.factors[0].as_ref();
    // Tr[(γγ* X)²] = ‖γ* X γ‖_F² for Hermitian X
    let inner = g0.adjoint() * parts.inv_sqrt_t.as_mat() * g0;
    let pc = linalg::frobenius(inner.as_ref()).powi(2);
    Ok(DetectionResult::from_pc(Method::SrmGramOperator, pc, diagnostics(c)).with_runtime(t.elapsed().as_secs_f64()))
}

/// Explicit SRM on a small instance.
#[derive(Clone, Debug)]
pub struct SrmPovm {
    /// Measurement factors `μ_i = T^{-1/2} γ_i`.
    pub factors: Vec<CMat>,
    /// `Π_i = μ_i μ_i*`.
    pub elements: Vec<HermitianMatrix>,
    /// `I − Σ Π_i`.
    pub completion: HermitianMatrix,
    /// `p(j|i) = Tr(ρ_i Π_j)`, row `i`.
    pub transition: Vec<Vec<f64>>,
}

impl SrmPovm {
    pub fn pc(&self) -> f64 {
        let m = self.transition.len();
        (0..m).map(|i| self.transition[i][i]).sum::<f64>() / m as f64
    }
}

pub fn srm_povm_reference(c: &Constellation) -> Result<SrmPovm> {
    let parts = operator_parts(c)?;
    let x = parts.inv_sqrt_t.as_mat();
    let factors: Vec<CMat> = parts.factors.iter().map(|g| x * g).collect();
    let elements: Vec<HermitianMatrix> = factors
        .iter()
        .map(|mu| HermitianMatrix::from_factor(mu.as_ref()))
        .collect();
    let dim = x.nrows();
    let mut rest = Mat::<c64>::identity(dim, dim);
    for p in &elements {
        rest -= p.as_mat();
    }
    let transition = parts
        .factors
        .iter()
        .map(|g| {
            factors
                .iter()
                .map(|mu| linalg::frobenius((mu.adjoint() * g).as_ref()).powi(2))
                .collect()
        })
        .collect();
    Ok(SrmPovm {
        factors,
        elements,
        completion: HermitianMatrix::new(rest),
        transition,
    })
}

/// Distance of `μ_0* γ_0` from the multiples of the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalityCertificate {
    /// `min_a ‖μ_0*γ_0 − aI‖_F / ‖μ_0*γ_0‖_F`.
    pub deviation: f64,
    /// Minimizing `a`.
    pub scale: c64,
    /// All symbols carry the same state, so the measurement is blind.
    pub degenerate: bool,
}

pub fn srm_optimality_certificate(c: &Constellation) -> Result<OptimalityCertificate> {
    let povm = srm_povm_reference(c)?;
    let g0 = c.composite_factor(0)?.matrix;
    let x = povm.factors[0].adjoint() * &g0;
    Ok(certificate_of(x.as_ref(), c.params.ns == 0.0))
}

fn certificate_of(x: MatRef<'_, c64>, degenerate: bool) -> OptimalityCertificate {
    let d = x.nrows();
    let tr: c64 = (0..d).map(|i| x[(i, i)]).sum();
    let scale = tr / d as f64;
    let norm = linalg::frobenius(x);
    let mut off = x.to_owned();
    for i in 0..d {
        off[(i, i)] -= scale;
    }
    let deviation = if norm > 0.0 {
        linalg::frobenius(off.as_ref()) / norm
    } else {
        0.0
    };
    OptimalityCertificate {
        deviation,
        scale,
        degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::SlotConfig;

    fn q2(m: usize, ns: f64) -> f64 {
        let e = (-ns).exp();
        let mf = m as f64;
        ((1.0 + (mf - 1.0) * e).sqrt() + (mf - 1.0) * (1.0 - e).sqrt()).powi(2) / (mf * mf)
    }

    fn mixed(m: usize, n: usize, h: usize, ns: f64, nbar: f64) -> Constellation {
        SlotConfig::new(ns, nbar)
            .force_n(Some(n))
            .force_h(Some(h))
            .build(m)
            .unwrap()
    }

    #[test]
    fn pure_blocks_are_scalars() {
        for m in [2, 3, 5] {
            let ns = 0.7;
            let c = SlotConfig::new(ns, 0.0).eps(1e-14).build(m).unwrap();
            let b = dft_blocks(&c).unwrap();
            let e = (-ns).exp();
            for k in 0..m {
                let expect = if k == 0 { 1.0 + (m as f64 - 1.0) * e } else { 1.0 - e };
                assert_eq!(b.blocks[k].dim(), 1);
                assert!((b.blocks[k][(0, 0)].re - expect).abs() < 1e-12);
            }
        }
        let c = SlotConfig::new(0.0, 0.0).build(4).unwrap();
        let b = dft_blocks(&c).unwrap();
        assert!((b.blocks[0][(0, 0)].re - 4.0).abs() < 1e-14);
        for k in 1..4 {
            assert!(b.blocks[k][(0, 0)].norm() < 1e-14);
        }
        assert!((pc_gram_matrix(&c).unwrap().pc - 0.25).abs() < 1e-14);
    }

    #[test]
    fn blocks_reassemble_the_gram_matrix() {
        let c = mixed(3, 3, 2, 1.2, 0.1);
        let b = dft_blocks(&c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let g = c.gram_block((j + 3 - i) % 3).unwrap();
                let r = b.reassemble(i, j);
                assert!(linalg::max_abs(linalg::sub(g.as_ref(), r.as_ref()).as_ref()) < 1e-12);
            }
        }
    }

    #[test]
    fn blocks_match_eigenprojector_route() {
        for (m, n, h) in [(2, 4, 2), (3, 3, 2), (4, 3, 2)] {
            let c = mixed(m, n, h, 1.0, 0.05);
            let a = dft_blocks(&c).unwrap();
            let b = dft_blocks_from_projectors(&c).unwrap();
            for k in 0..m {
                let d = linalg::sub(a.blocks[k].as_ref(), b.blocks[k].as_ref());
                assert!(linalg::max_abs(d.as_ref()) < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn pure_pc_matches_closed_form() {
        for m in [2, 3, 4] {
            for step in 0..=20 {
                let ns = 0.5 * step as f64;
                let c = SlotConfig::new(ns, 0.0).eps(1e-13).build(m).unwrap();
                let pc = pc_gram_matrix(&c).unwrap().pc;
                assert!((pc - q2(m, ns)).abs() <= 1e-10, "m={m} ns={ns}: {pc} vs {}", q2(m, ns));
            }
        }
    }

    #[test]
    fn operator_route_pure() {
        let c = SlotConfig::new(2.0, 0.0).eps(1e-14).build(2).unwrap();
        let pc = pc_gram_operator(&c).unwrap().pc;
        assert!((pc - q2(2, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn routes_agree_on_mixed_instances() {
        for (m, n, h, ns, nbar) in [
            (2, 4, 2, 1.0, 0.05),
            (2, 5, 3, 2.0, 0.1),
            (3, 3, 2, 1.5, 0.2),
            (3, 4, 3, 0.8, 0.1),
            (4, 3, 2, 1.0, 0.05),
        ] {
            let c = mixed(m, n, h, ns, nbar);
            let a = pc_gram_matrix(&c).unwrap();
            let b = pc_gram_operator(&c).unwrap();
            assert!((a.pc - b.pc).abs() < 1e-9, "{m} {n} {h}: {} vs {}", a.pc, b.pc);
            assert_eq!(a.method, Method::SrmGramMatrix);
            assert_eq!(a.diagnostics.h, h);
        }
    }

    #[test]
    fn dense_gram_matrix_oracle() {
        // Pc = (1/m) Σ_i ‖(G^{1/2})_{ii}‖_F² with G = Γ*Γ built densely
        let c = mixed(3, 3, 2, 1.1, 0.1);
        let gamma = c.state_matrix().unwrap();
        let g = HermitianMatrix::from_factor(gamma.adjoint().to_owned().as_ref());
        let r = linalg::sqrt_psd(&g, 1e-12).unwrap();
        let d = r.dim() / 3;
        let mut pc = 0.0;
        for i in 0..3 {
            let blk = r.as_ref().submatrix(i * d, i * d, d, d);
            pc += linalg::frobenius(blk).powi(2) / 3.0;
        }
        let fast = pc_gram_matrix(&c).unwrap().pc;
        assert!((pc - fast).abs() < 1e-9, "{pc} vs {fast}");
    }

    #[test]
    fn povm_properties() {
        let c = mixed(3, 3, 2, 1.0, 0.1);
        let p = srm_povm_reference(&c).unwrap();
        let low = linalg::eid_hermitian(&p.completion).unwrap().values.last().copied().unwrap();
        assert!(low >= -1e-9);
        for e in &p.elements {
            assert!(linalg::eid_hermitian(e).unwrap().values.last().unwrap() >= &-1e-10);
        }
        let t = &p.transition;
        for i in 0..3 {
            for j in 0..3 {
                assert!((t[i][j] - t[0][(j + 3 - i) % 3]).abs() < 1e-10);
            }
        }
        assert!((p.pc() - pc_gram_matrix(&c).unwrap().pc).abs() < 1e-9);
    }

    #[test]
    fn povm_tends_to_projectors() {
        let c = SlotConfig::new(16.0, 0.0).force_n(Some(40)).build(2).unwrap();
        let p = srm_povm_reference(&c).unwrap();
        assert!(p.pc() > 1.0 - 1e-6);
        for i in 0..2 {
            let k = c.composite_pure(i).unwrap();
            let proj = HermitianMatrix::from_factor(k.as_ref());
            assert!(linalg::max_abs(linalg::sub(p.elements[i].as_ref(), proj.as_ref()).as_ref()) < 1e-5);
        }
    }

    #[test]
    fn certificate() {
        for m in [2, 3, 4] {
            let c = SlotConfig::new(1.5, 0.0).force_n(Some(if m == 4 { 6 } else { 12 })).build(m).unwrap();
            let cert = srm_optimality_certificate(&c).unwrap();
            assert!(cert.deviation <= 1e-9 && !cert.degenerate);
        }
        let c = mixed(2, 6, 3, 1.5, 0.1);
        assert!(srm_optimality_certificate(&c).unwrap().deviation > 1e-3);
        let c = mixed(2, 4, 2, 0.0, 0.1);
        assert!(srm_optimality_certificate(&c).unwrap().degenerate);
    }

    #[test]
    fn negative_block_is_reported_with_index() {
        let b = DftBlocks {
            blocks: vec![HermitianMatrix::from_diag(&[1.0]), HermitianMatrix::from_diag(&[-1e-6])],
            source: BlockSource::GramBlocks,
        };
        match pc_from_blocks(&b) {
            Err(Error::Block { index: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        let ok = DftBlocks {
            blocks: vec![HermitianMatrix::from_diag(&[2.0]), HermitianMatrix::from_diag(&[-1e-12])],
            source: BlockSource::GramBlocks,
        };
        assert!((pc_from_blocks(&ok).unwrap() - 0.5).abs() < 1e-15);
    }
}
