//! `[n, 1, d]` code descriptors and the block-level error statistics used by
//! both encoded pipelines.

use std::fmt;
use std::str::FromStr;

use crate::bell::BellDiagonal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodeFamily {
    Repetition,
    Css,
}

impl CodeFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodeFamily::Repetition => "repetition",
            CodeFamily::Css => "css",
        }
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `[n, 1, d]` code. Only the combinatorics `(n, d)` matter downstream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeSpec {
    n: usize,
    d: usize,
    family: CodeFamily,
    label: String,
}

impl CodeSpec {
    pub fn new(n: usize, d: usize, family: CodeFamily) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCode("n must be at least 1".into()));
        }
        if d.is_multiple_of(2) {
            return Err(Error::InvalidCode(format!("distance {d} must be odd")));
        }
        if d > n {
            return Err(Error::InvalidCode(format!("distance {d} exceeds n = {n}")));
        }
        if family == CodeFamily::Repetition && d != n {
            return Err(Error::InvalidCode(format!(
                "repetition code must have d = n, got [{n},1,{d}]"
            )));
        }
        Ok(Self {
            n,
            d,
            family,
            label: format!("[{n},1,{d}]"),
        })
    }

    pub fn repetition(n: usize) -> Result<Self> {
        Self::new(n, n, CodeFamily::Repetition)
    }

    pub fn css(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, CodeFamily::Css)
    }

    /// The unencoded scheme, modeled as the trivial repetition code `[1,1,1]`.
    pub fn unencoded() -> Self {
        Self::repetition(1).expect("[1,1,1] is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn family(&self) -> CodeFamily {
        self.family
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of physical errors the code corrects, `(d - 1) / 2`.
    pub fn correctable(&self) -> usize {
        (self.d - 1) / 2
    }

    pub fn is_unencoded(&self) -> bool {
        self.n == 1
    }
}

impl fmt::Display for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Parses `[n,1,d]` (whitespace tolerated) or the word `unencoded`. The family
/// is repetition when `d = n`, CSS otherwise.
impl FromStr for CodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("unencoded") || t.eq_ignore_ascii_case("none") {
            return Ok(Self::unencoded());
        }
        let inner = t
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::InvalidCode(format!("expected [n,1,d], got {s:?}")))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let parse = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::InvalidCode(format!("bad integer {p:?} in {s:?}")))
        };
        if parts.len() != 3 {
            return Err(Error::InvalidCode(format!("expected [n,1,d], got {s:?}")));
        }
        let (n, k, d) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
        if k != 1 {
            return Err(Error::InvalidCode(format!(
                "only single-logical-qubit codes are supported, got k = {k}"
            )));
        }
        let family = if d == n {
            CodeFamily::Repetition
        } else {
            CodeFamily::Css
        };
        Self::new(n, d, family)
    }
}

/// The codes compared in the rate analysis, plus the unencoded pseudo-code.
pub fn code_catalog() -> Vec<CodeSpec> {
    vec![
        CodeSpec::unencoded(),
        CodeSpec::repetition(3).unwrap(),
        CodeSpec::repetition(7).unwrap(),
        CodeSpec::repetition(51).unwrap(),
        CodeSpec::css(7, 3).unwrap(),
        CodeSpec::css(25, 5).unwrap(),
        CodeSpec::css(23, 7).unwrap(),
    ]
}

/// `C(n, j)` as f64. Exact through u128 for the code sizes in use, log-gamma
/// beyond that.
fn binomial(n: usize, j: usize) -> f64 {
    let j = j.min(n - j);
    if n <= 120 {
        let mut acc: u128 = 1;
        for i in 0..j {
            // acc * (n - i) / (i + 1) stays integral at every step
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc as f64
    } else {
        use statrs::function::gamma::ln_gamma;
        (ln_gamma(n as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0))
            .exp()
    }
}

/// Probability that more than `(d - 1) / 2` of the `n` physical qubits are
/// hit, each independently with probability `q_eff`.
pub fn logical_error_prob(code: &CodeSpec, q_eff: f64) -> f64 {
    let q = q_eff.clamp(0.0, 1.0);
    let n = code.n();
    let lowest = code.correctable() + 1;
    (lowest..=n)
        .map(|j| binomial(n, j) * q.powi(j as i32) * (1.0 - q).powi((n - j) as i32))
        .sum::<f64>()
        .min(1.0)
}

/// Probability that neither or both blocks of an encoded pair carry a logical
/// error, `(1 - Q)² + Q²`.
pub fn pair_no_error_prob(logical_error: f64) -> f64 {
    (1.0 - logical_error).powi(2) + logical_error.powi(2)
}

/// Bell coefficients of the corrected encoded pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoefficients {
    pub state: BellDiagonal,
}

/// `(P F, (1 - P) F, P (1 - F), (1 - P)(1 - F))`
pub fn effective_coefficients(fidelity: f64, no_error: f64) -> Result<EffectiveCoefficients> {
    for (name, v) in [("fidelity", fidelity), ("no_error", no_error)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain {
                param: if name == "fidelity" { "fidelity" } else { "no_error" },
                value: v,
                reason: "must lie in [0, 1]",
            });
        }
    }
    let (f, p) = (fidelity, no_error);
    let state = BellDiagonal::new(p * f, (1.0 - p) * f, p * (1.0 - f), (1.0 - p) * (1.0 - f))?;
    Ok(EffectiveCoefficients { state })
}

/// Per-qubit error estimate for the CSS pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CssQubitError {
    pub q_eff: f64,
    /// The small-error sum exceeded 1 and was clamped.
    pub clamped: bool,
}

/// `3 q_m + 2 q_g + (1 - F_k)`, where the caller evaluates `q_m` at half the
/// dephasing window.
pub fn css_effective_qubit_error(q_m_half: f64, q_g: f64, purified_fidelity: f64) -> CssQubitError {
    let raw = 3.0 * q_m_half + 2.0 * q_g + (1.0 - purified_fidelity);
    CssQubitError {
        q_eff: raw.clamp(0.0, 1.0),
        clamped: !(0.0..=1.0).contains(&raw),
    }
}
