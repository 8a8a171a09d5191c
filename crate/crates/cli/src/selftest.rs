//! Small-instance oracle checks run by `qppm selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qppm_core::constellation::SlotConfig;
use qppm_core::detect::{classical_ppm_pe, helstrom_ppm2, pure_ppm_pe};
use qppm_core::gus::{count_multiplicities, shuffle_operator, spectrum};
use qppm_core::linalg::{max_abs, sub, CMat};
use qppm_core::srm::{pc_gram_matrix, pc_gram_operator};
use qppm_core::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn pure_srm() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in [2, 3, 4] {
        for ns in [0.5, 2.0, 4.0] {
            let c = SlotConfig::new(ns, 0.0).eps(1e-13).build(m)?;
            let pe = pc_gram_matrix(&c)?.pe;
            let exact = pure_ppm_pe(m, ns);
            worst = worst.max(((pe - exact) / exact).abs());
        }
    }
    Ok((worst <= 1e-9, format!("max relative error {worst:.2e}")))
}

fn symmetry_spectrum() -> Result<(bool, String)> {
    let (n, m) = (2, 4);
    let s = shuffle_operator(n, m).to_dense()?;
    let sp = spectrum(n, m);
    let mut sum = CMat::zeros(s.nrows(), s.ncols());
    for k in 0..m {
        let p = sp.projector(k)?;
        let w = sp.eigenvalue(k);
        for j in 0..p.ncols() {
            for i in 0..p.nrows() {
                sum[(i, j)] += w * p[(i, j)];
            }
        }
    }
    let err = max_abs(sub(s.as_ref(), sum.as_ref()).as_ref());
    let mult = sp.multiplicities();
    let ok = err <= 1e-12 && mult == vec![6, 3, 4, 3];
    Ok((ok, format!("reconstruction {err:.1e}, multiplicities {mult:?}")))
}

fn counting() -> Result<(bool, String)> {
    let counted = count_multiplicities(2, 10);
    let enumerated: Vec<u128> = spectrum(2, 10).multiplicities().into_iter().map(|x| x as u128).collect();
    let expected: Vec<u128> = vec![108, 99, 105, 99, 105, 100, 105, 99, 105, 99];
    Ok((
        counted == expected && enumerated == expected,
        format!("{counted:?}"),
    ))
}

fn path_equivalence(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let ns = rng.gen_range(0.2..2.0);
        let nbar = rng.gen_range(0.02..0.2);
        let c = SlotConfig::new(ns, nbar).eps(1e-5).build(2)?;
        let a = pc_gram_matrix(&c)?.pc;
        let b = pc_gram_operator(&c)?.pc;
        worst = worst.max((a - b).abs());
    }
    Ok((worst <= 1e-9, format!("max |ΔPc| {worst:.2e}")))
}

fn binary_ordering(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for _ in 0..4 {
        let ns = rng.gen_range(0.5..4.0);
        let nbar = rng.gen_range(0.02..0.2);
        let c = SlotConfig::new(ns, nbar).build(2)?;
        let ratio = pc_gram_matrix(&c)?.pe / helstrom_ppm2(&c)?.pe;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo >= 1.0 - 1e-9, format!("Pe(SRM)/Pe(Helstrom) in [{lo:.3}, {hi:.3}]")))
}

fn classical_guessing() -> Result<(bool, String)> {
    let bad: Vec<usize> = (2..=8)
        .filter(|&m| classical_ppm_pe(m, 0.0, 0.1) != (m as f64 - 1.0) / m as f64)
        .collect();
    Ok((bad.is_empty(), format!("mismatched orders {bad:?}")))
}

/// Runs every check; `seed` drives the randomized instances.
pub fn run(seed: u64) -> Vec<Check> {
    vec![
        check("pure SRM matches the closed form", pure_srm),
        check("symmetry operator spectrum (n=2, m=4)", symmetry_spectrum),
        check("multiplicities (n=2, m=10)", counting),
        check("gram-matrix vs gram-operator", || path_equivalence(seed)),
        check("SRM never beats Helstrom", || binary_ordering(seed)),
        check("classical PPM at Ns=0", classical_guessing),
    ]
}
