//! The PPM symmetry operator and its analytic eigendecomposition.
//!
//! Unit vectors of the composite space are indexed by `k = Σ_i k_i n^i`,
//! slot `i` being digit `i`. The index map `π(k) = n·k mod (n^m − 1)` (with
//! `π(n^m − 1) = n^m − 1`) rotates the digits of `k` up by one place. The
//! symmetry operator acts on row indices, `(S x)[k] = x[π(k)]`, so as a
//! matrix `S[k][π(k)] = 1`; this is `Σ_k w_n(k) ⊗ I ⊗ w_n*(k)`. Conjugation
//! by `S` moves the Kronecker factor of slot `i` to slot `i − 1 (mod m)`.
//!
//! The orbits of `π` are the cycles of `S`. A cycle `k_0, π(k_0), …` of
//! period `p` carries the `p` eigenvectors
//! `V_j = p^{-1/2} Σ_h W_p^{-jh} w(π^h k_0)` with eigenvalue `W_p^{-j}`,
//! where `W_p = e^{i2π/p}`. Collected by eigenvalue `W_m^{-k}` they give
//! `S = Σ_k W_m^{-k} Y_k Y_k*`.

use std::collections::BTreeMap;

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};

/// Largest composite dimension for which dense matrices are built.
pub const DENSE_CAP: usize = 4096;

/// `W_m^e = e^{i2πe/m}`.
pub fn root_of_unity(m: usize, e: i64) -> c64 {
    let r = e.rem_euclid(m as i64) as f64;
    c64::from_polar(1.0, 2.0 * std::f64::consts::PI * r / m as f64)
}

fn composite_len(n: usize, m: usize) -> u64 {
    (n as u64)
        .checked_pow(m as u32)
        .expect("composite dimension overflows u64")
}

/// The slot-rotation permutation for `m` slots of dimension `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleOperator {
    n: usize,
    m: usize,
    len: u64,
}

/// Builds `S` for slot dimension `n >= 2` and order `m >= 2`.
pub fn shuffle_operator(n: usize, m: usize) -> ShuffleOperator {
    assert!(n >= 2 && m >= 2, "shuffle operator needs n >= 2 and m >= 2");
    ShuffleOperator {
        n,
        m,
        len: composite_len(n, m),
    }
}

impl ShuffleOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Composite dimension `n^m`.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `π(k)`.
    pub fn map(&self, k: u64) -> u64 {
        self.map_power(k, 1)
    }

    /// `π^t(k) = n^t k mod (n^m − 1)`, fixing the all-max word.
    pub fn map_power(&self, k: u64, t: usize) -> u64 {
        let modulus = self.len - 1;
        if k == modulus {
            return k;
        }
        let t = t % self.m;
        let factor = (self.n as u64).pow(t as u32) % modulus;
        ((k as u128 * factor as u128) % modulus as u128) as u64
    }

    /// Row-index table of `S^t`: row `k` of `S^t x` is row `table[k]` of `x`.
    pub fn power_table(&self, t: usize) -> Vec<usize> {
        (0..self.len).map(|k| self.map_power(k, t) as usize).collect()
    }

    /// Dense matrix of `S`, only for `n^m <= DENSE_CAP`.
    pub fn to_dense(&self) -> Result<CMat> {
        let len = self.dense_len()?;
        let mut s = Mat::<c64>::zeros(len, len);
        for k in 0..len {
            s[(k, self.map(k as u64) as usize)] = c64::new(1.0, 0.0);
        }
        Ok(s)
    }

    fn dense_len(&self) -> Result<usize> {
        if self.len > DENSE_CAP as u64 {
            return Err(Error::CapExceeded {
                dim: self.len,
                cap: DENSE_CAP as u64,
                hint: "",
            });
        }
        Ok(self.len as usize)
    }
}

/// `S^t x`, permuting the rows of `x` without forming `S`.
pub fn apply_symmetry_power(s: &ShuffleOperator, t: usize, x: MatRef<'_, c64>) -> CMat {
    assert_eq!(x.nrows() as u64, s.len(), "row count must equal n^m");
    let table = s.power_table(t);
    Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(table[i], j)])
}

/// Dense perfect shuffle `Σ_{k<s} w_s(k) ⊗ I_r ⊗ w_s*(k)` of order `rs`.
/// It satisfies `B ⊗ A = P(r, s) (A ⊗ B) P(h, k)ᵀ` for `A: r×h`, `B: s×k`.
pub fn perfect_shuffle(r: usize, s: usize) -> CMat {
    let mut p = Mat::<c64>::zeros(r * s, r * s);
    for k in 0..s {
        for j in 0..r {
            p[(k * r + j, j * s + k)] = c64::new(1.0, 0.0);
        }
    }
    p
}

/// One orbit of `π`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    /// `[k_0, π(k_0), …]`, `k_0` the smallest member.
    pub members: Vec<u64>,
}

impl Cycle {
    pub fn period(&self) -> usize {
        self.members.len()
    }

    pub fn representative(&self) -> u64 {
        self.members[0]
    }
}

#[derive(Clone, Debug)]
pub struct CycleDecomposition {
    pub n: usize,
    pub m: usize,
    /// Ordered by representative.
    pub cycles: Vec<Cycle>,
}

impl CycleDecomposition {
    /// `N_p`: number of unit vectors with minimal period `p`.
    pub fn unit_vector_counts(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for c in &self.cycles {
            *out.entry(c.period()).or_insert(0) += c.period() as u64;
        }
        out
    }

    /// Number of cycles of each period, `N_p / p`.
    pub fn cycle_counts(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for c in &self.cycles {
            *out.entry(c.period()).or_insert(0) += 1;
        }
        out
    }

    pub fn of_period(&self, p: usize) -> impl Iterator<Item = &Cycle> {
        self.cycles.iter().filter(move |c| c.period() == p)
    }
}

/// Enumerates the orbits of `π` from unvisited minimal representatives.
pub fn cycles(n: usize, m: usize) -> CycleDecomposition {
    let s = shuffle_operator(n, m);
    let len = s.len() as usize;
    let mut seen = vec![false; len];
    let mut out = Vec::new();
    for k0 in 0..len {
        if seen[k0] {
            continue;
        }
        let mut members = vec![k0 as u64];
        seen[k0] = true;
        let mut k = s.map(k0 as u64);
        while k != k0 as u64 {
            seen[k as usize] = true;
            members.push(k);
            k = s.map(k);
        }
        out.push(Cycle { members });
    }
    CycleDecomposition { n, m, cycles: out }
}

pub fn divisors(m: usize) -> Vec<usize> {
    (1..=m).filter(|d| m.is_multiple_of(*d)).collect()
}

/// `N_p` from `n^p = Σ_{d|p} N_d`, for every divisor `p` of `m`.
pub fn period_counts(n: usize, m: usize) -> BTreeMap<usize, u128> {
    let mut counts: BTreeMap<usize, u128> = BTreeMap::new();
    for p in divisors(m) {
        let total = (n as u128).pow(p as u32);
        let lower: u128 = divisors(p)
            .into_iter()
            .filter(|&d| d < p)
            .map(|d| counts[&d])
            .sum();
        counts.insert(p, total - lower);
    }
    counts
}

/// Multiplicities `(n_0, …, n_{m−1})` of the eigenvalues `W_m^{-h}`:
/// `n_h = Σ N_p / p` over periods `p` with `(m/p) | h`. Purely arithmetic.
pub fn count_multiplicities(n: usize, m: usize) -> Vec<u128> {
    let counts = period_counts(n, m);
    (0..m)
        .map(|h| {
            counts
                .iter()
                .filter(|(&p, _)| h % (m / p) == 0)
                .map(|(&p, &np)| np / p as u128)
                .sum()
        })
        .collect()
}

/// Recipe for one eigenvector: cycle index and phase index `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EigvecRecipe {
    pub cycle: usize,
    pub j: usize,
}

/// Sparse eigenvector families `Y_0 … Y_{m−1}` of `S`.
#[derive(Clone, Debug)]
pub struct SymmetrySpectrum {
    pub decomposition: CycleDecomposition,
    /// `families[k]` spans the eigenspace of `W_m^{-k}`.
    pub families: Vec<Vec<EigvecRecipe>>,
}

/// Builds the eigenvector recipes from the cycle decomposition.
pub fn spectrum(n: usize, m: usize) -> SymmetrySpectrum {
    let decomposition = cycles(n, m);
    let mut families = vec![Vec::new(); m];
    for (ci, c) in decomposition.cycles.iter().enumerate() {
        let p = c.period();
        for j in 0..p {
            // W_p^{-j} = W_m^{-j m / p}
            families[j * m / p].push(EigvecRecipe { cycle: ci, j });
        }
    }
    SymmetrySpectrum {
        decomposition,
        families,
    }
}

impl SymmetrySpectrum {
    pub fn m(&self) -> usize {
        self.decomposition.m
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.families.iter().map(Vec::len).collect()
    }

    /// Eigenvalue `W_m^{-k}` of family `k`.
    pub fn eigenvalue(&self, k: usize) -> c64 {
        root_of_unity(self.m(), -(k as i64))
    }

    /// Nonzero entries `(index, value)` of one eigenvector.
    pub fn entries(&self, r: EigvecRecipe) -> Vec<(u64, c64)> {
        let c = &self.decomposition.cycles[r.cycle];
        let p = c.period();
        let norm = 1.0 / (p as f64).sqrt();
        c.members
            .iter()
            .enumerate()
            .map(|(h, &k)| (k, root_of_unity(p, -((r.j * h) as i64)) * norm))
            .collect()
    }

    fn dense_len(&self) -> Result<usize> {
        shuffle_operator(self.decomposition.n, self.decomposition.m).dense_len()
    }

    /// Dense `Y_k`, columns in recipe order.
    pub fn dense_family(&self, k: usize) -> Result<CMat> {
        let len = self.dense_len()?;
        let fam = &self.families[k];
        let mut y = Mat::<c64>::zeros(len, fam.len());
        for (col, &r) in fam.iter().enumerate() {
            for (idx, val) in self.entries(r) {
                y[(idx as usize, col)] = val;
            }
        }
        Ok(y)
    }

    /// Dense projector `Y_k Y_k*`.
    pub fn projector(&self, k: usize) -> Result<CMat> {
        let y = self.dense_family(k)?;
        Ok(&y * y.adjoint())
    }

    /// `γ* Y_k Y_k* γ` computed from the sparse recipes, for a factor `γ`
    /// with `n^m` rows.
    pub fn compress(&self, k: usize, gamma: MatRef<'_, c64>) -> CMat {
        let w = gamma.ncols();
        let mut out = Mat::<c64>::zeros(w, w);
        for &r in &self.families[k] {
            // row vector y* γ
            let mut proj = vec![c64::new(0.0, 0.0); w];
            for (idx, val) in self.entries(r) {
                let vc = val.conj();
                for (c, slot) in proj.iter_mut().enumerate() {
                    *slot += vc * gamma[(idx as usize, c)];
                }
            }
            for a in 0..w {
                let pa = proj[a].conj();
                for b in 0..w {
                    out[(a, b)] += pa * proj[b];
                }
            }
        }
        out
    }
}
