//! The m-ary PPM constellation in the composite space `H_0^{⊗m}`.
//!
//! Symbol `i` puts the signal state in slot `i` and the ground state in every
//! other slot; slot `m − 1` is the leftmost Kronecker factor. Everything the
//! Gram-matrix route needs is computed from the two `n × h` slot factors, so
//! no `n^m`-dimensional object is formed there.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::glauber::{self, SlotFactor, ThermalDensity, DEFAULT_EPS, DEFAULT_NU};
use crate::gus::{apply_symmetry_power, shuffle_operator, DENSE_CAP};
use crate::linalg::{self, c64, CMat, HermitianMatrix};

/// Default cap on `N = n^m`.
pub const DEFAULT_MAX_N: u64 = 1 << 24;

/// Shape of a PPM instance.
#[derive(Clone, Debug, PartialEq)]
pub struct PpmParams {
    pub m: usize,
    /// Slot (Fock) dimension.
    pub n: usize,
    /// Slot rank.
    pub h: usize,
    /// Mean signal photons `|α|²`.
    pub ns: f64,
    /// Mean thermal photons.
    pub nbar: f64,
}

impl PpmParams {
    pub fn new(m: usize, n: usize, h: usize, ns: f64, nbar: f64) -> Result<Self> {
        Self::with_cap(m, n, h, ns, nbar, DEFAULT_MAX_N)
    }

    pub fn with_cap(m: usize, n: usize, h: usize, ns: f64, nbar: f64, max_n: u64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("PPM order must be >= 2, got {m}")));
        }
        if n < 2 || h < 1 {
            return Err(Error::Domain(format!("need slot dimension >= 2 and rank >= 1 (n={n}, h={h})")));
        }
        if !(ns >= 0.0 && ns.is_finite()) || !(nbar >= 0.0 && nbar.is_finite()) {
            return Err(Error::Domain(format!("photon numbers must be >= 0 (ns={ns}, nbar={nbar})")));
        }
        let p = PpmParams { m, n, h, ns, nbar };
        let big_n = p.big_n().ok_or(Error::CapExceeded {
            dim: u64::MAX,
            cap: max_n,
            hint: "",
        })?;
        if big_n > max_n {
            return Err(Error::CapExceeded {
                dim: big_n,
                cap: max_n,
                hint: "",
            });
        }
        Ok(p)
    }

    /// Composite dimension `N = n^m`.
    pub fn big_n(&self) -> Option<u64> {
        (self.n as u64).checked_pow(self.m as u32)
    }

    /// Composite rank `H = h^m`.
    pub fn big_h(&self) -> u64 {
        (self.h as u64).pow(self.m as u32)
    }

    pub fn alpha(&self) -> c64 {
        c64::new(self.ns.sqrt(), 0.0)
    }
}

/// How to build the slot states.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotConfig {
    pub ns: f64,
    pub nbar: f64,
    /// Truncation accuracy.
    pub eps: f64,
    /// Practical-rank accuracy.
    pub nu: f64,
    pub force_n: Option<usize>,
    pub force_h: Option<usize>,
    /// Rescale both slot densities to unit trace before factoring.
    pub normalize: bool,
    pub max_n: u64,
}

impl SlotConfig {
    pub fn new(ns: f64, nbar: f64) -> Self {
        SlotConfig {
            ns,
            nbar,
            eps: DEFAULT_EPS,
            nu: DEFAULT_NU,
            force_n: None,
            force_h: None,
            normalize: false,
            max_n: DEFAULT_MAX_N,
        }
    }

    pub fn eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn force_n(mut self, n: Option<usize>) -> Self {
        self.force_n = n;
        self
    }

    pub fn force_h(mut self, h: Option<usize>) -> Self {
        self.force_h = h;
        self
    }

    pub fn normalize(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    pub fn max_n(mut self, cap: u64) -> Self {
        self.max_n = cap;
        self
    }

    /// Slot dimension picked by the trace criterion (at least 2).
    pub fn auto_n(&self) -> Result<usize> {
        let alpha = c64::new(self.ns.sqrt(), 0.0);
        let n1 = glauber::thermal_truncation_dim(alpha, self.nbar, self.eps)?;
        let n0 = glauber::thermal_truncation_dim(c64::new(0.0, 0.0), self.nbar, self.eps)?;
        Ok(n1.max(n0).max(2))
    }

    /// Builds the slot densities and their common-rank factors.
    pub fn build(&self, m: usize) -> Result<Constellation> {
        let n = match self.force_n {
            Some(n) => n,
            None => self.auto_n()?,
        };
        let alpha = c64::new(self.ns.sqrt(), 0.0);
        let mut rho1 = glauber::thermal_density_with_dim(alpha, self.nbar, n)?;
        let mut rho0 = glauber::thermal_density_with_dim(c64::new(0.0, 0.0), self.nbar, n)?;
        let deficit = rho1.trace_deficit().max(rho0.trace_deficit());
        if self.normalize {
            rho1 = glauber::normalized(&rho1)?;
            rho0 = glauber::normalized(&rho0)?;
        }

        let (ground, signal) = match self.force_h {
            Some(h) => (
                glauber::factorize_with_rank(&rho0, h)?,
                glauber::factorize_with_rank(&rho1, h)?,
            ),
            None => {
                let g0 = glauber::factorize(&rho0, self.nu)?;
                let g1 = glauber::factorize(&rho1, self.nu)?;
                let h = g0.rank.max(g1.rank);
                (
                    glauber::factorize_with_rank(&rho0, h)?,
                    glauber::factorize_with_rank(&rho1, h)?,
                )
            }
        };
        let h = ground.rank;
        let params = PpmParams::with_cap(m, n, h, self.ns, self.nbar, self.max_n)?;
        Ok(Constellation {
            params,
            eps: self.eps,
            nu: self.nu,
            trace_deficit: deficit,
            rho0,
            rho1,
            ground,
            signal,
        })
    }
}

/// Factor of one composite density `ρ_i = γ_i γ_i*`.
#[derive(Clone, Debug)]
pub struct CompositeFactor {
    /// `N × h^m`.
    pub matrix: CMat,
    pub index: usize,
}

/// PPM constellation described by its slot factors.
#[derive(Clone, Debug)]
pub struct Constellation {
    pub params: PpmParams,
    pub eps: f64,
    pub nu: f64,
    /// `max(1 − Tr ρ⁰, 1 − Tr ρ¹)` before any normalization.
    pub trace_deficit: f64,
    pub rho0: ThermalDensity,
    pub rho1: ThermalDensity,
    /// Factor of the ground-state density `ρ⁰`.
    pub ground: SlotFactor,
    /// Factor of the signal density `ρ¹`.
    pub signal: SlotFactor,
}

impl Constellation {
    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn is_pure(&self) -> bool {
        self.params.nbar == 0.0
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.m() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, m: self.m() })
        }
    }

    fn dense_n(&self) -> Result<usize> {
        let big_n = self.params.big_n().unwrap_or(u64::MAX);
        if big_n > DENSE_CAP as u64 {
            return Err(Error::CapExceeded {
                dim: big_n,
                cap: DENSE_CAP as u64,
                hint: "; use the gram-matrix path",
            });
        }
        Ok(big_n as usize)
    }

    /// Slot factors of symbol `i`, leftmost (slot `m − 1`) first.
    fn slot_factors(&self, i: usize) -> Vec<MatRef<'_, c64>> {
        (0..self.m())
            .rev()
            .map(|slot| {
                if slot == i {
                    self.signal.matrix.as_ref()
                } else {
                    self.ground.matrix.as_ref()
                }
            })
            .collect()
    }

    /// Composite ket `|γ_i⟩` of a pure constellation.
    pub fn composite_pure(&self, i: usize) -> Result<CMat> {
        self.check_index(i)?;
        if !self.is_pure() {
            return Err(Error::Domain("composite kets exist only for nbar = 0".into()));
        }
        self.dense_n()?;
        let cols: Vec<CMat> = self.slot_factors(i).iter().map(|f| f.subcols(0, 1).to_owned()).collect();
        Ok(linalg::kron_all(cols.iter().map(|c| c.as_ref())))
    }

    /// `γ_i = S^{-i} γ_0`, where `γ_0` is the Kronecker product of slot
    /// factors. The shift acts on rows only, so all symbols share one column
    /// labelling.
    pub fn composite_factor(&self, i: usize) -> Result<CompositeFactor> {
        self.check_index(i)?;
        self.dense_n()?;
        let g0 = linalg::kron_all(self.slot_factors(0));
        let m = self.m();
        let matrix = if i == 0 {
            g0
        } else {
            let s = shuffle_operator(self.params.n, m);
            apply_symmetry_power(&s, m - i, g0.as_ref())
        };
        Ok(CompositeFactor { matrix, index: i })
    }

    /// Dense `ρ_i` from the slot densities (not their factors).
    pub fn composite_density(&self, i: usize) -> Result<HermitianMatrix> {
        self.check_index(i)?;
        self.dense_n()?;
        let mats: Vec<MatRef<'_, c64>> = (0..self.m())
            .rev()
            .map(|slot| {
                if slot == i {
                    self.rho1.matrix.as_ref()
                } else {
                    self.rho0.matrix.as_ref()
                }
            })
            .collect();
        Ok(HermitianMatrix::new(linalg::kron_all(mats)))
    }

    /// Dense `γ_i γ_i*`.
    pub fn factored_density(&self, i: usize) -> Result<HermitianMatrix> {
        let g = self.composite_factor(i)?;
        Ok(HermitianMatrix::from_factor(g.matrix.as_ref()))
    }

    /// Gram block `G_{0s} = γ_0* γ_s`, `h^m × h^m`, from slot cross-Grams.
    ///
    /// Shifting by `s` carries slot `l − s` (with its column digit) into slot
    /// `l`, so `G_{0s}[c, c'] = Π_l X_l[c_l, c'_{l−s}]` with
    /// `X_l = A_l* A_{l−s}`.
    pub fn gram_block(&self, s: usize) -> Result<CMat> {
        self.check_index(s)?;
        let m = self.m();
        let h = self.params.h;
        let g = self.ground.matrix.as_ref();
        let a = self.signal.matrix.as_ref();
        let slot = |l: usize| if l == 0 { a } else { g };
        let cross: Vec<CMat> = (0..m)
            .map(|l| slot(l).adjoint() * slot((l + m - s) % m))
            .collect();
        let dim = h.pow(m as u32);
        let mut pow = vec![1usize; m];
        for l in 1..m {
            pow[l] = pow[l - 1] * h;
        }
        Ok(Mat::from_fn(dim, dim, |r, c| {
            let mut acc = c64::new(1.0, 0.0);
            for l in 0..m {
                let cl = (r / pow[l]) % h;
                let src = (l + m - s) % m;
                let cs = (c / pow[src]) % h;
                acc *= cross[l][(cl, cs)];
            }
            acc
        }))
    }

    /// All blocks `G_{00} … G_{0,m−1}`.
    pub fn gram_blocks(&self) -> Result<Vec<CMat>> {
        (0..self.m()).map(|s| self.gram_block(s)).collect()
    }

    /// Dense state matrix `Γ = [γ_0 … γ_{m−1}]`.
    pub fn state_matrix(&self) -> Result<CMat> {
        let n = self.dense_n()?;
        let factors: Vec<CMat> = (0..self.m())
            .map(|i| self.composite_factor(i).map(|f| f.matrix))
            .collect::<Result<_>>()?;
        let w = factors[0].ncols();
        Ok(Mat::from_fn(n, w * self.m(), |r, c| factors[c / w][(r, c % w)]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: MatRef<'_, c64>, b: MatRef<'_, c64>, tol: f64) -> bool {
        linalg::max_abs(linalg::sub(a, b).as_ref()) <= tol
    }

    fn pure(m: usize, ns: f64) -> Constellation {
        SlotConfig::new(ns, 0.0).eps(1e-12).build(m).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PpmParams::new(1, 4, 1, 1.0, 0.0).is_err());
        assert!(PpmParams::new(2, 4, 1, -1.0, 0.0).is_err());
        let p = PpmParams::new(4, 10, 3, 3.0, 0.05).unwrap();
        assert_eq!(p.big_n(), Some(10_000));
        assert_eq!(p.big_h(), 81);
        assert!(matches!(
            PpmParams::new(4, 100, 3, 3.0, 0.05),
            Err(Error::CapExceeded { .. })
        ));
        assert!(PpmParams::with_cap(2, 100, 1, 1.0, 0.0, 1000).is_err());
    }

    #[test]
    fn four_ppm_reference_word() {
        // |γ_0⟩ = |0⟩⊗|0⟩⊗|0⟩⊗|α⟩
        let c = SlotConfig::new(1.0, 0.0).force_n(Some(4)).build(4).unwrap();
        let k = c.composite_pure(0).unwrap();
        let amp = glauber::coherent_ket_with_dim(c64::new(1.0, 0.0), 4).amplitudes;
        for idx in 0..256 {
            let expect = if idx < 4 { amp[idx] } else { c64::new(0.0, 0.0) };
            assert!((k[(idx, 0)] - expect).norm() < 1e-15);
        }
        assert!(c.composite_pure(4).is_err());
    }

    #[test]
    fn degenerate_constellation() {
        let c = SlotConfig::new(0.0, 0.0).build(3).unwrap();
        let k0 = c.composite_pure(0).unwrap();
        for i in 1..3 {
            assert_eq!(c.composite_pure(i).unwrap(), k0);
        }
    }

    #[test]
    fn pure_overlaps() {
        let ns = 1.3;
        for m in [2, 3, 4] {
            let c = pure(m, ns);
            // truncation only shortens ⟨α|α⟩, by less than eps
            for s in 0..m {
                let expect = if s == 0 { 1.0 } else { (-ns).exp() };
                let g = c.gram_block(s).unwrap();
                assert_eq!((g.nrows(), g.ncols()), (1, 1));
                assert!((g[(0, 0)].re - expect).abs() < 1e-11 && g[(0, 0)].im.abs() < 1e-15);
                if m < 4 {
                    let k0 = c.composite_pure(0).unwrap();
                    let ks = c.composite_pure(s).unwrap();
                    let ov = (k0.adjoint() * &ks)[(0, 0)];
                    assert!((ov.re - expect).abs() < 1e-11 && ov.im.abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pure_factor_reduces_to_ket() {
        let c = SlotConfig::new(0.8, 0.0).force_n(Some(2)).build(2).unwrap();
        assert_eq!(c.params.h, 1);
        for i in 0..2 {
            assert_eq!(c.composite_factor(i).unwrap().matrix, c.composite_pure(i).unwrap());
        }
    }

    fn small_mixed(m: usize, n: usize, h: usize) -> Constellation {
        SlotConfig::new(1.0, 0.1)
            .force_n(Some(n))
            .force_h(Some(h))
            .build(m)
            .unwrap()
    }

    #[test]
    fn composite_factor_matches_kronecker_of_densities() {
        let c = small_mixed(2, 4, 2);
        let g0 = c.composite_factor(0).unwrap();
        let rho = HermitianMatrix::from_factor(g0.matrix.as_ref());
        // ρ_0 = ρ⁰ ⊗ ρ¹ built from the reconstructed slot densities
        let r0 = HermitianMatrix::from_factor(c.ground.matrix.as_ref());
        let r1 = HermitianMatrix::from_factor(c.signal.matrix.as_ref());
        let dense = linalg::kron(r0.as_ref(), r1.as_ref());
        assert!(close(rho.as_ref(), dense.as_ref(), 1e-12));
    }

    #[test]
    fn factors_follow_the_symmetry() {
        for (m, n, h) in [(2, 4, 2), (3, 3, 2), (4, 2, 2)] {
            let c = small_mixed(m, n, h);
            let r0 = HermitianMatrix::from_factor(c.ground.matrix.as_ref());
            let r1 = HermitianMatrix::from_factor(c.signal.matrix.as_ref());
            for i in 0..m {
                let rho = c.factored_density(i).unwrap();
                let dense = linalg::kron_all(
                    (0..m).rev().map(|slot| if slot == i { r1.as_ref() } else { r0.as_ref() }),
                );
                assert!(close(rho.as_ref(), dense.as_ref(), 1e-12), "m={m} i={i}");
            }
            let s = shuffle_operator(n, m);
            let g0 = c.composite_factor(0).unwrap().matrix;
            let g_last = c.composite_factor(m - 1).unwrap().matrix;
            assert_eq!(apply_symmetry_power(&s, 1, g0.as_ref()), g_last);
        }
    }

    #[test]
    fn factored_density_tracks_slot_densities() {
        let c = small_mixed(3, 3, 3);
        for i in 0..3 {
            let a = c.factored_density(i).unwrap();
            let b = c.composite_density(i).unwrap();
            assert!(close(a.as_ref(), b.as_ref(), 1e-12));
        }
    }

    #[test]
    fn gram_block_matches_dense() {
        for (m, n, h) in [(2, 3, 2), (3, 3, 2), (2, 4, 3)] {
            let c = small_mixed(m, n, h);
            let g0 = c.composite_factor(0).unwrap().matrix;
            for s in 0..m {
                let gs = c.composite_factor(s).unwrap().matrix;
                let dense = g0.adjoint() * &gs;
                assert!(close(c.gram_block(s).unwrap().as_ref(), dense.as_ref(), 1e-12), "m={m} s={s}");
            }
        }
    }

    #[test]
    fn gram_blocks_are_hermitian_circulant() {
        let c = small_mixed(4, 3, 2);
        let blocks = c.gram_blocks().unwrap();
        for s in 0..4 {
            let adj = blocks[s].adjoint().to_owned();
            assert!(close(adj.as_ref(), blocks[(4 - s) % 4].as_ref(), 1e-12));
        }
        let traces: Vec<f64> = (0..4)
            .map(|i| {
                let g = c.composite_factor(i).unwrap().matrix;
                linalg::frobenius(g.as_ref()).powi(2)
            })
            .collect();
        for t in &traces {
            assert!((t - traces[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn common_rank_rule() {
        let c = SlotConfig::new(5.0, 0.1).eps(1e-8).nu(1e-8).build(2).unwrap();
        let h1 = glauber::factorize(&c.rho1, 1e-8).unwrap().rank;
        let h0 = glauber::factorize(&c.rho0, 1e-8).unwrap().rank;
        assert_eq!(c.params.h, h0.max(h1));
        assert_eq!(c.ground.matrix.ncols(), c.params.h);
        assert_eq!(c.signal.matrix.ncols(), c.params.h);
    }

    #[test]
    fn dense_paths_refuse_large_instances() {
        let c = SlotConfig::new(4.0, 0.05).force_n(Some(20)).force_h(Some(2)).build(3).unwrap();
        assert!(matches!(c.composite_factor(0), Err(Error::CapExceeded { .. })));
        assert_eq!(c.gram_block(1).unwrap().nrows(), 8);
    }
}
