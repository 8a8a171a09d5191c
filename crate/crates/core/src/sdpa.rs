//! Export of the optimal m-ary measurement problem in SDPA sparse format.
//!
//! The problem
//!
//! ```text
//! maximize   (1/m) Σ_i Tr(ρ_i Π_i)
//! subject to Π_i ≽ 0,  Σ_i Π_i = I
//! ```
//!
//! is written in the dual SDPA form `max F0•Y s.t. Fk•Y = c_k, Y ≽ 0` with
//! `Y = diag(Π_0, …, Π_{m−1})`:
//!
//! * `nBLOCK = m`, every block of size `N`;
//! * `F0` has block `i` equal to `ρ_i / m`;
//! * one constraint per pair `a ≤ b` of the `N(N+1)/2` upper-triangle
//!   positions, `Fk` carrying the symmetric unit matrix `(E_ab + E_ba)/2`
//!   in every block and `c_k = δ_ab`.
//!
//! Only real states are supported (real `α`), so all matrices are real
//! symmetric. Entries are written as `matno block i j value`, 1-based,
//! upper triangle, with values in shortest round-trip form.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMat};

/// Largest `N` accepted for export.
pub const SDP_CAP: usize = 512;

/// Imaginary parts larger than this make a state non-exportable.
const IMAG_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct SdpEntry {
    /// 0 for `F0`, `k` for constraint `k`.
    pub mat: usize,
    /// 1-based.
    pub block: usize,
    /// 1-based, `i ≤ j`.
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub comment: String,
    /// Negative sizes denote diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub c: Vec<f64>,
    pub entries: Vec<SdpEntry>,
}

fn fmt_value(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl SdpProblem {
    pub fn num_constraints(&self) -> usize {
        self.c.len()
    }

    pub fn to_sdpa_string(&self) -> String {
        let mut s = String::new();
        for line in self.comment.lines() {
            let _ = writeln!(s, "\"{line}");
        }
        if self.comment.is_empty() {
            s.push_str("\"\n");
        }
        let _ = writeln!(s, "{}", self.c.len());
        let _ = writeln!(s, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let cs: Vec<String> = self.c.iter().map(|&x| fmt_value(x)).collect();
        let _ = writeln!(s, "{}", cs.join(" "));
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {} {} {}", e.mat, e.block, e.i, e.j, fmt_value(e.value));
        }
        s
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(self.to_sdpa_string().as_bytes())?;
        Ok(())
    }

    /// Evaluates `(F0•Y, [F1•Y, …])` for real symmetric blocks `Y`.
    pub fn evaluate(&self, y: &[Vec<Vec<f64>>]) -> (f64, Vec<f64>) {
        let mut obj = 0.0;
        let mut cons = vec![0.0; self.c.len()];
        for e in &self.entries {
            let b = &y[e.block - 1];
            let (i, j) = (e.i - 1, e.j - 1);
            let t = if i == j { e.value * b[i][i] } else { e.value * (b[i][j] + b[j][i]) };
            if e.mat == 0 {
                obj += t;
            } else {
                cons[e.mat - 1] += t;
            }
        }
        (obj, cons)
    }
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
        .filter(|t| !t.is_empty())
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| fmt_err(format!("missing {what}")))?;
    tok.parse().map_err(|_| fmt_err(format!("bad {what}: {tok:?}")))
}

/// Reads an SDPA sparse file and checks every entry against the header.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text.lines().peekable();
    let mut comment = Vec::new();
    while let Some(l) = lines.peek() {
        if let Some(rest) = l.strip_prefix('"').or_else(|| l.strip_prefix('*')) {
            comment.push(rest.to_string());
            lines.next();
        } else {
            break;
        }
    }
    let mut body = lines.flat_map(tokens);
    let mdim: usize = num(body.next(), "mDIM")?;
    let nblock: usize = num(body.next(), "nBLOCK")?;
    let block_sizes = (0..nblock)
        .map(|_| num::<i64>(body.next(), "block size"))
        .collect::<Result<Vec<_>>>()?;
    if block_sizes.contains(&0) {
        return Err(fmt_err("zero block size"));
    }
    let c = (0..mdim)
        .map(|_| num::<f64>(body.next(), "c entry"))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    while let Some(tok) = body.next() {
        let mat: usize = num(Some(tok), "matrix number")?;
        let block: usize = num(body.next(), "block number")?;
        let i: usize = num(body.next(), "row")?;
        let j: usize = num(body.next(), "column")?;
        let value: f64 = num(body.next(), "value")?;
        if mat > mdim {
            return Err(fmt_err(format!("matrix number {mat} > mDIM {mdim}")));
        }
        if block == 0 || block > nblock {
            return Err(fmt_err(format!("block {block} outside 1..={nblock}")));
        }
        let size = block_sizes[block - 1];
        let dim = size.unsigned_abs() as usize;
        if i == 0 || j == 0 || i > dim || j > dim || i > j {
            return Err(fmt_err(format!("entry ({i}, {j}) invalid for block {block} of size {size}")));
        }
        if size < 0 && i != j {
            return Err(fmt_err(format!("off-diagonal entry in diagonal block {block}")));
        }
        entries.push(SdpEntry { mat, block, i, j, value });
    }
    Ok(SdpProblem {
        comment: comment.join("\n"),
        block_sizes,
        c,
        entries,
    })
}

/// Real part of a state matrix, refusing complex entries.
fn real_state(rho: &CMat) -> Result<Vec<Vec<f64>>> {
    let n = rho.nrows();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let z: c64 = rho[(i, j)];
            if z.im.abs() > IMAG_TOL {
                return Err(Error::Domain("SDP export needs real states (real alpha)".into()));
            }
            out[i][j] = z.re;
        }
    }
    Ok(out)
}

/// Builds the export problem from explicit real symmetric states.
pub fn measurement_sdp(states: &[Vec<Vec<f64>>], comment: &str) -> Result<SdpProblem> {
    let m = states.len();
    if m < 2 {
        return Err(Error::Domain("need at least two states".into()));
    }
    let n = states[0].len();
    if states.iter().any(|s| s.len() != n || s.iter().any(|r| r.len() != n)) {
        return Err(Error::DimensionMismatch("states must share one square shape".into()));
    }
    let mut entries = Vec::new();
    for (b, rho) in states.iter().enumerate() {
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (rho[i][j] + rho[j][i]) / m as f64;
                if v != 0.0 {
                    entries.push(SdpEntry { mat: 0, block: b + 1, i: i + 1, j: j + 1, value: v });
                }
            }
        }
    }
    let mut c = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for bcol in a..n {
            c.push(if a == bcol { 1.0 } else { 0.0 });
            let k = c.len();
            let value = if a == bcol { 1.0 } else { 0.5 };
            for blk in 1..=m {
                entries.push(SdpEntry { mat: k, block: blk, i: a + 1, j: bcol + 1, value });
            }
        }
    }
    Ok(SdpProblem {
        comment: comment.to_string(),
        block_sizes: vec![n as i64; m],
        c,
        entries,
    })
}

/// Checks the layout produced by [`measurement_sdp`] for `m` states of
/// dimension `n`.
pub fn check_measurement_layout(p: &SdpProblem, m: usize, n: usize) -> Result<()> {
    if p.block_sizes != vec![n as i64; m] {
        return Err(fmt_err(format!("expected {m} blocks of size {n}, got {:?}", p.block_sizes)));
    }
    let k = n * (n + 1) / 2;
    if p.c.len() != k {
        return Err(fmt_err(format!("expected {k} constraints, got {}", p.c.len())));
    }
    let per = p.entries.iter().filter(|e| e.mat > 0).count();
    if per != k * m {
        return Err(fmt_err(format!("expected {} constraint entries, got {per}", k * m)));
    }
    Ok(())
}

/// The measurement problem for a constellation with real amplitude.
pub fn ppm_sdp(c: &Constellation) -> Result<SdpProblem> {
    let big_n = c.params.big_n().unwrap_or(u64::MAX);
    if big_n > SDP_CAP as u64 {
        return Err(Error::CapExceeded {
            dim: big_n,
            cap: SDP_CAP as u64,
            hint: "; lower n or m for export",
        });
    }
    let states = (0..c.m())
        .map(|i| c.factored_density(i).and_then(|r| real_state(r.as_mat())))
        .collect::<Result<Vec<_>>>()?;
    let comment = format!(
        "optimal {}-PPM measurement: Ns={} nbar={} n={} h={}",
        c.m(),
        c.params.ns,
        c.params.nbar,
        c.params.n,
        c.params.h
    );
    measurement_sdp(&states, &comment)
}

pub fn export_sdp(c: &Constellation, path: &Path) -> Result<SdpProblem> {
    let p = ppm_sdp(c)?;
    let mut w = BufWriter::new(File::create(path)?);
    p.write(&mut w)?;
    w.flush()?;
    Ok(p)
}
