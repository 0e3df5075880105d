//! Phase bookkeeping for preparing codewords with coherent probe pulses,
//! plus the homodyne discrimination error of the readout.
//!
//! A pattern is an `n`-bit string `b_1 … b_n`, stored as an integer with
//! `b_1` as the most significant bit. Phases are integer multiples of `θ`,
//! so tables keep the integer "units" and comparisons are exact.

use std::f64::consts::{PI, SQRT_2, TAU};

use statrs::function::erf::erfc;

use crate::error::{domain, Error, Result};

/// Largest `n` for which a full `2^n` table is built.
pub const MAX_TABLE_QUBITS: usize = 20;

/// Two phases closer than this modulo `2π` count as a collision.
pub const PHASE_COLLISION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubusScheme {
    /// One probe interacting with every qubit in turn.
    Single,
    /// `n - 1` probes, each touching one adjacent pair.
    Chained,
}

impl QubusScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            QubusScheme::Single => "single",
            QubusScheme::Chained => "chained",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubusPlan {
    n: usize,
    theta_rad: f64,
    scheme: QubusScheme,
    /// `units[probe][pattern]`: phase of that probe in multiples of `θ`.
    /// The single scheme has one probe.
    units: Vec<Vec<i64>>,
}

impl QubusPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta_rad(&self) -> f64 {
        self.theta_rad
    }

    pub fn scheme(&self) -> QubusScheme {
        self.scheme
    }

    pub fn probes(&self) -> usize {
        self.units.len()
    }

    pub fn patterns(&self) -> usize {
        1 << self.n
    }

    /// Phases of every probe for one pattern, in multiples of `θ`.
    pub fn phase_units(&self, pattern: usize) -> Vec<i64> {
        self.units.iter().map(|u| u[pattern]).collect()
    }

    /// Phases of every probe for one pattern, in radians.
    pub fn phases_rad(&self, pattern: usize) -> Vec<f64> {
        self.units
            .iter()
            .map(|u| u[pattern] as f64 * self.theta_rad)
            .collect()
    }

    /// Pattern whose probe phases equal those of a different pattern, if any,
    /// other than the all-zeros / all-ones pair.
    pub fn find_collision(&self) -> Option<(usize, usize)> {
        let all_ones = self.patterns() - 1;
        let mut keyed: Vec<(Vec<i64>, usize)> =
            (0..self.patterns()).map(|p| (self.phase_units(p), p)).collect();
        keyed.sort();
        keyed.windows(2).find_map(|w| {
            let (a, b) = (w[0].1, w[1].1);
            let degenerate = (a == 0 && b == all_ones) || (a == all_ones && b == 0);
            (w[0].0 == w[1].0 && !degenerate).then_some((a, b))
        })
    }
}

/// Renders a pattern as its bit string, `b_1` first.
pub fn pattern_bits(pattern: usize, n: usize) -> String {
    (0..n)
        .map(|j| if (pattern >> (n - 1 - j)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn check_args(n: usize, theta: f64) -> Result<()> {
    if n < 2 {
        return Err(domain("n", n as f64, "at least two qubits are required"));
    }
    if n > MAX_TABLE_QUBITS {
        return Err(Error::EnumerationTooLarge {
            n,
            limit: MAX_TABLE_QUBITS,
        });
    }
    if !theta.is_finite() || theta <= 0.0 {
        return Err(domain("theta", theta, "angle must be positive"));
    }
    Ok(())
}

fn bit(pattern: usize, n: usize, j: usize) -> i64 {
    ((pattern >> (n - 1 - j)) & 1) as i64
}

/// Interaction strengths `1, 2, …, 2^(n-2), -(2^(n-1) - 1)` in units of `θ`.
pub fn single_qubus_coefficients(n: usize) -> Vec<i64> {
    let mut c: Vec<i64> = (0..n.saturating_sub(1)).map(|j| 1i64 << j).collect();
    if n >= 1 {
        c.push(-((1i64 << (n - 1)) - 1));
    }
    c
}

/// One probe; qubit `j` rotates it by `±c_j θ/2`, `+` for bit 0.
pub fn single_qubus_phases(n: usize, theta: f64) -> Result<QubusPlan> {
    check_args(n, theta)?;
    let c = single_qubus_coefficients(n);
    let units = (0..1usize << n)
        .map(|p| {
            // Σ c_j (1 - 2 b_j) is always even
            let twice: i64 = (0..n).map(|j| c[j] * (1 - 2 * bit(p, n, j))).sum();
            twice / 2
        })
        .collect();
    Ok(QubusPlan {
        n,
        theta_rad: theta,
        scheme: QubusScheme::Single,
        units: vec![units],
    })
}

/// Probe `j` couples qubits `j` and `j + 1` with alternating sign, so it
/// picks up `±θ` when the two bits differ and nothing otherwise.
pub fn chained_qubus_phases(n: usize, theta: f64) -> Result<QubusPlan> {
    check_args(n, theta)?;
    let units = (0..n - 1)
        .map(|j| {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            (0..1usize << n)
                .map(|p| sign * (bit(p, n, j + 1) - bit(p, n, j)))
                .collect()
        })
        .collect();
    Ok(QubusPlan {
        n,
        theta_rad: theta,
        scheme: QubusScheme::Chained,
        units,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `(2^(n-1) - 1) θ`.
    pub max_phase_rad: f64,
    /// Two non-degenerate patterns share a phase modulo `2π`.
    pub collision: bool,
}

/// Whether one probe can distinguish every pattern: the largest phase must
/// stay within `π` and no two phases may coincide modulo `2π`.
pub fn feasibility(n: usize, theta: f64) -> Result<Feasibility> {
    if n < 2 {
        return Err(domain("n", n as f64, "at least two qubits are required"));
    }
    if !theta.is_finite() || theta <= 0.0 {
        return Err(domain("theta", theta, "angle must be positive"));
    }
    let max_units = (1u64 << (n - 1).min(62)) - 1;
    let max_phase_rad = max_units as f64 * theta;
    // phases fill every integer in [-max, max] once, with the degenerate
    // pair sharing 0, so two differ by j θ for each j ≤ 2 max
    let collision = if n <= MAX_TABLE_QUBITS {
        let plan = single_qubus_phases(n, theta)?;
        let mut wrapped: Vec<(f64, usize)> = (0..plan.patterns())
            .filter(|&p| p != plan.patterns() - 1)
            .map(|p| ((plan.units[0][p] as f64 * theta).rem_euclid(TAU), p))
            .collect();
        wrapped.sort_by(|a, b| a.0.total_cmp(&b.0));
        let gaps = wrapped.windows(2).any(|w| w[1].0 - w[0].0 < PHASE_COLLISION_TOL);
        let wrap = wrapped.len() > 1
            && wrapped[0].0 + TAU - wrapped[wrapped.len() - 1].0 < PHASE_COLLISION_TOL;
        gaps || wrap
    } else {
        (1..=2 * max_units.min(1 << 24)).any(|j| {
            let r = (j as f64 * theta).rem_euclid(TAU);
            r.min(TAU - r) < PHASE_COLLISION_TOL
        })
    };
    Ok(Feasibility {
        feasible: max_phase_rad <= PI && !collision,
        max_phase_rad,
        collision,
    })
}

/// Midpoint x-quadrature discrimination error between `|β⟩` and
/// `|β e^{±iθ}⟩`, with `x = (a + a†)/2` of variance `1/4`.
pub fn homodyne_error(beta: f64, theta: f64) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(domain("beta", beta, "amplitude must be positive"));
    }
    if beta.is_infinite() {
        return Ok(0.0);
    }
    Ok(0.5 * erfc(beta * (1.0 - theta.cos()) / SQRT_2))
}

/// Smallest `β` with `homodyne_error(β, θ) ≤ target`.
pub fn min_beta(theta: f64, target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 0.5) {
        return Err(domain("target", target, "must lie in (0, 1/2)"));
    }
    let gap = 1.0 - theta.cos();
    if !(gap > 0.0) {
        return Err(domain("theta", theta, "angle leaves the states indistinguishable"));
    }
    let err = |b: f64| 0.5 * erfc(b * gap / SQRT_2);
    let mut lo = 0.0f64;
    let mut hi = 1.0 / gap;
    while err(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if err(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
