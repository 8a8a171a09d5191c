use std::fmt;
use std::str::FromStr;

use qppm_core::constellation::DEFAULT_MAX_N;
use qppm_core::glauber::{DEFAULT_EPS, DEFAULT_NU};

use crate::error::{CliError, Result};

/// Default cap on `H = h^m` for the eigendecompositions.
pub const DEFAULT_MAX_H: u64 = 1500;

/// Environment variable overriding [`DEFAULT_MAX_H`].
pub const MAX_H_ENV: &str = "QPPM_MAX_H";

/// Evaluation families a sweep can request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MethodSel {
    Srm,
    Helstrom,
    PureClosedForm,
    Classical,
    OokBaselines,
}

impl MethodSel {
    pub const ALL: [MethodSel; 5] = [
        MethodSel::Srm,
        MethodSel::Helstrom,
        MethodSel::PureClosedForm,
        MethodSel::Classical,
        MethodSel::OokBaselines,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodSel::Srm => "srm",
            MethodSel::Helstrom => "helstrom",
            MethodSel::PureClosedForm => "pure-closed-form",
            MethodSel::Classical => "classical",
            MethodSel::OokBaselines => "ook-baselines",
        }
    }

    /// Whether the method ignores the noise level (evaluated once per `Ns`,
    /// reported at `nbar = 0`).
    pub fn noiseless(self) -> bool {
        matches!(self, MethodSel::PureClosedForm | MethodSel::OokBaselines)
    }
}

impl fmt::Display for MethodSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodSel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        MethodSel::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = MethodSel::ALL.iter().map(|m| m.name()).collect();
                CliError::Spec(format!("unknown method '{s}' (expected one of {})", known.join(", ")))
            })
    }
}

/// Dimension limits applied per point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Limit on `H = h^m`.
    pub max_h: u64,
    /// Limit on `N = n^m`.
    pub max_n: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_h: DEFAULT_MAX_H,
            max_n: DEFAULT_MAX_N,
        }
    }
}

impl Caps {
    /// Defaults, with `max_h` taken from `QPPM_MAX_H` when set.
    pub fn from_env() -> Result<Self> {
        let mut caps = Caps::default();
        if let Ok(v) = std::env::var(MAX_H_ENV) {
            caps.max_h = v
                .trim()
                .parse()
                .map_err(|_| CliError::Spec(format!("{MAX_H_ENV}={v} is not a positive integer")))?;
            if caps.max_h == 0 {
                return Err(CliError::Spec(format!("{MAX_H_ENV} must be positive")));
            }
        }
        Ok(caps)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub m: usize,
    pub ns_grid: Vec<f64>,
    pub nbar_list: Vec<f64>,
    pub methods: Vec<MethodSel>,
    pub eps: f64,
    pub nu: f64,
    pub force_n: Option<usize>,
    pub force_h: Option<usize>,
    pub caps: Caps,
    /// Only used by the randomized self-checks.
    pub seed: u64,
}

impl SweepSpec {
    pub fn new(m: usize, ns_grid: Vec<f64>, nbar_list: Vec<f64>, methods: Vec<MethodSel>) -> Self {
        SweepSpec {
            m,
            ns_grid,
            nbar_list,
            methods,
            eps: DEFAULT_EPS,
            nu: DEFAULT_NU,
            force_n: None,
            force_h: None,
            caps: Caps::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Spec(msg));
        if self.m < 2 {
            return bad(format!("m must be >= 2, got {}", self.m));
        }
        if self.ns_grid.is_empty() {
            return bad("Ns grid is empty".into());
        }
        if self.nbar_list.is_empty() {
            return bad("nbar list is empty".into());
        }
        for (what, list) in [("Ns", &self.ns_grid), ("nbar", &self.nbar_list)] {
            if let Some(x) = list.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return bad(format!("{what} value {x} must be finite and >= 0"));
            }
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.methods.contains(&MethodSel::Helstrom) && self.m != 2 {
            return bad(format!("helstrom is only available for m = 2, got m = {}", self.m));
        }
        for (what, v) in [("eps", self.eps), ("nu", self.nu)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{what} must lie in (0, 1), got {v}"));
            }
        }
        if self.force_n.is_some_and(|n| n < 2) {
            return bad("forced n must be >= 2".into());
        }
        if self.force_h == Some(0) {
            return bad("forced h must be >= 1".into());
        }
        Ok(())
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| -> Result<f64> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Spec(format!("'{t}' is not a number")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(CliError::Spec(format!("bad range '{s}': need a <= b and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            // keep grid values tidy when step is not a binary fraction
            Ok((0..count)
                .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect(),
        _ => Err(CliError::Spec(format!("bad grid '{s}'"))),
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<MethodSel>> {
    let mut out: Vec<MethodSel> = Vec::new();
    for t in s.split(',').filter(|t| !t.trim().is_empty()) {
        let m: MethodSel = t.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}
