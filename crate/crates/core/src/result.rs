use std::fmt;

/// Which evaluation produced a [`DetectionResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    SrmGramMatrix,
    SrmGramOperator,
    HelstromBinary,
    ClosedFormPure,
    ClassicalPpm,
    ClassicalOok,
    HelstromOok,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::SrmGramMatrix => "srm-gram-matrix",
            Method::SrmGramOperator => "srm-gram-operator",
            Method::HelstromBinary => "helstrom-binary",
            Method::ClosedFormPure => "closed-form-pure",
            Method::ClassicalPpm => "classical-ppm",
            Method::ClassicalOok => "classical-ook",
            Method::HelstromOok => "helstrom-ook",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Instance description attached to a result. Fields that do not apply to a
/// closed-form evaluation are left at zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub m: usize,
    pub n: usize,
    pub h: usize,
    pub ns: f64,
    pub nbar: f64,
    pub eps: f64,
    pub nu: f64,
    /// Largest `1 - Tr ρ` over the slot densities.
    pub trace_deficit: f64,
    pub runtime_s: f64,
    /// Unclamped correct-detection probability.
    pub raw_pc: f64,
}

/// Correct/error probability pair from one detector evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub method: Method,
    pub pc: f64,
    pub pe: f64,
    pub diagnostics: Diagnostics,
}

/// Slack allowed outside `[0, 1]` before a probability is treated as broken.
pub const PROBABILITY_SLACK: f64 = 1e-9;

impl DetectionResult {
    /// Builds a result from a raw `Pc`, clamping it to `[0, 1]`.
    ///
    /// Panics if `raw_pc` is more than [`PROBABILITY_SLACK`] outside the unit
    /// interval or not finite.
    pub fn from_pc(method: Method, raw_pc: f64, mut diagnostics: Diagnostics) -> Self {
        assert!(
            raw_pc.is_finite() && (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&raw_pc),
            "{method}: correct-detection probability {raw_pc} outside [0, 1]"
        );
        diagnostics.raw_pc = raw_pc;
        let pc = raw_pc.clamp(0.0, 1.0);
        DetectionResult {
            method,
            pc,
            pe: 1.0 - pc,
            diagnostics,
        }
    }

    /// Same, starting from an error probability (closed forms are usually
    /// stated that way and lose accuracy through `1 - Pc`).
    pub fn from_pe(method: Method, raw_pe: f64, mut diagnostics: Diagnostics) -> Self {
        assert!(
            raw_pe.is_finite() && (-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&raw_pe),
            "{method}: error probability {raw_pe} outside [0, 1]"
        );
        diagnostics.raw_pc = 1.0 - raw_pe;
        let pe = raw_pe.clamp(0.0, 1.0);
        DetectionResult {
            method,
            pc: 1.0 - pe,
            pe,
            diagnostics,
        }
    }

    pub fn with_runtime(mut self, secs: f64) -> Self {
        self.diagnostics.runtime_s = secs;
        self
    }
}
