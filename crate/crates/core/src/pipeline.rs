//! End-to-end final fidelity and per-memory rate for both code families.
//!
//! The link is `L` km long and split into `N = L / L0` segments, `N` a power
//! of two. Pairs are purified `k` times at the first nesting level only, then
//! all `N - 1` swaps happen at once. Local operation times are neglected.

use rayon::prelude::*;

use crate::bell::{self, BellDiagonal};
use crate::codes::{self, CodeFamily, CodeSpec};
use crate::error::{Error, Result};
use crate::physics::{self, ChannelParams, HardwareParams, DEFAULT_ATTENUATION_LENGTH_KM};

/// Smallest offset from `F = 1/2` explored by the operating-point search.
pub const FIDELITY_FLOOR_EPS: f64 = 1e-9;
/// Largest fidelity explored; `F = 1` has `P0 = 0`.
pub const FIDELITY_CEIL_EPS: f64 = 1e-12;
/// Operating points hit the target final fidelity within this.
pub const OPERATING_POINT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    total_distance_km: f64,
    segment_km: f64,
    code: CodeSpec,
    rounds: u32,
    hardware: HardwareParams,
    attenuation_length_km: f64,
    segments: u64,
}

impl ProtocolConfig {
    pub fn new(
        total_distance_km: f64,
        segment_km: f64,
        code: CodeSpec,
        rounds: u32,
        hardware: HardwareParams,
    ) -> Result<Self> {
        Self::with_attenuation(
            total_distance_km,
            segment_km,
            code,
            rounds,
            hardware,
            DEFAULT_ATTENUATION_LENGTH_KM,
        )
    }

    pub fn with_attenuation(
        total_distance_km: f64,
        segment_km: f64,
        code: CodeSpec,
        rounds: u32,
        hardware: HardwareParams,
        attenuation_length_km: f64,
    ) -> Result<Self> {
        if !(segment_km > 0.0 && segment_km.is_finite()) {
            return Err(Error::Config(format!("L0 = {segment_km} km must be positive")));
        }
        if !(total_distance_km > 0.0 && total_distance_km.is_finite()) {
            return Err(Error::Config(format!(
                "L = {total_distance_km} km must be positive"
            )));
        }
        if !(attenuation_length_km > 0.0) {
            return Err(Error::Config(format!(
                "L_att = {attenuation_length_km} km must be positive"
            )));
        }
        if rounds > 16 {
            return Err(Error::Config(format!("k = {rounds} purification rounds is too many")));
        }
        let ratio = total_distance_km / segment_km;
        let segments = ratio.round();
        if (ratio - segments).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "N = L/L0 = {ratio:.2} is not an integral power of two"
            )));
        }
        let segments = segments as u64;
        if segments < 2 || !segments.is_power_of_two() {
            return Err(Error::Config(format!(
                "N = L/L0 = {segments} must be a power of two and at least 2"
            )));
        }
        Ok(Self {
            total_distance_km,
            segment_km,
            code,
            rounds,
            hardware,
            attenuation_length_km,
            segments,
        })
    }

    pub fn total_distance_km(&self) -> f64 {
        self.total_distance_km
    }
    pub fn segment_km(&self) -> f64 {
        self.segment_km
    }
    pub fn code(&self) -> &CodeSpec {
        &self.code
    }
    pub fn rounds(&self) -> u32 {
        self.rounds
    }
    pub fn hardware(&self) -> &HardwareParams {
        &self.hardware
    }
    pub fn attenuation_length_km(&self) -> f64 {
        self.attenuation_length_km
    }
    /// `N = L / L0`.
    pub fn segments(&self) -> u64 {
        self.segments
    }
    /// `log2 N`, the number of swap levels.
    pub fn nesting_levels(&self) -> u32 {
        self.segments.trailing_zeros()
    }

    pub fn with_rounds(&self, rounds: u32) -> Result<Self> {
        let mut c = self.clone();
        if rounds > 16 {
            return Err(Error::Config(format!("k = {rounds} purification rounds is too many")));
        }
        c.rounds = rounds;
        Ok(c)
    }

    pub fn with_code(&self, code: CodeSpec) -> Self {
        let mut c = self.clone();
        c.code = code;
        c
    }

    /// Transmission of one elementary segment.
    pub fn segment_transmittance(&self) -> f64 {
        (-self.segment_km / self.attenuation_length_km).exp()
    }

    /// Initial fidelity produced by a qubus with the given amplitude and
    /// rotation angle over one segment.
    pub fn fidelity_from_channel(&self, qubus_strength: f64, angle_rad: f64) -> Result<f64> {
        let ch = ChannelParams::new(
            self.segment_km,
            self.attenuation_length_km,
            qubus_strength,
            angle_rad,
        )?;
        Ok(ch.initial_fidelity())
    }
}

/// Clock of the protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// `T0 = 2 L0 / c`
    pub t0_s: f64,
    /// `t_k = (k/2 + 1) T0`, distribution plus `k` rounds of purification.
    pub t_k_s: f64,
    /// `t'_k = (k + 1) T0 / 2`, the CSS dephasing window.
    pub t_prime_k_s: f64,
    pub segments: u64,
}

pub fn timing(cfg: &ProtocolConfig) -> Timing {
    let t0 = 2.0 * cfg.segment_km * 1e3 / cfg.hardware.fiber_speed_m_per_s;
    let k = cfg.rounds as f64;
    Timing {
        t0_s: t0,
        t_k_s: (k / 2.0 + 1.0) * t0,
        t_prime_k_s: (k + 1.0) * t0 / 2.0,
        segments: cfg.segments,
    }
}

/// Exponent `m` of the global gate-loss factor `(1 - q_g)^m` applied to the
/// repetition-code final fidelity: `2n((N - 1) + 2(2^k - 1))`.
pub fn repetition_gate_loss_exponent(cfg: &ProtocolConfig) -> u64 {
    let n = cfg.code.n() as u64;
    let swaps = cfg.segments - 1;
    let purifications = 2 * ((1u64 << cfg.rounds) - 1);
    2 * n * (swaps + purifications)
}

fn check_fidelity(f: f64) -> Result<()> {
    if f > 0.5 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            param: "fidelity",
            value: f,
            reason: "initial fidelity must lie in (1/2, 1]",
        })
    }
}

fn require_family(cfg: &ProtocolConfig, family: CodeFamily) -> Result<()> {
    if cfg.code.family() == family {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "code {} is {}, this pipeline needs {}",
            cfg.code,
            cfg.code.family(),
            family
        )))
    }
}

/// Intermediate quantities of the repetition-code pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionTrace {
    pub q_eff: f64,
    pub logical_error: f64,
    pub no_error: f64,
    pub effective: BellDiagonal,
    pub purified: BellDiagonal,
    pub swapped: BellDiagonal,
    pub gate_factor: f64,
    pub final_fidelity: f64,
}

pub fn repetition_trace(cfg: &ProtocolConfig, fidelity: f64) -> Result<RepetitionTrace> {
    require_family(cfg, CodeFamily::Repetition)?;
    check_fidelity(fidelity)?;
    let clock = timing(cfg);
    // memories dephase for the whole window t_k before purification starts
    let q_eff = cfg.hardware.memory_error_prob(clock.t_k_s / 2.0)?;
    let logical_error = codes::logical_error_prob(&cfg.code, q_eff);
    let no_error = codes::pair_no_error_prob(logical_error);
    let effective = codes::effective_coefficients(fidelity, no_error)?.state;

    let mut purified = effective;
    for _ in 0..cfg.rounds {
        purified = bell::purify_ideal(&purified).state;
    }
    let mut swapped = purified;
    for _ in 0..cfg.nesting_levels() {
        swapped = bell::swap_ideal(&swapped);
    }
    let q_g = cfg.hardware.gate_error_prob();
    let gate_factor =
        (repetition_gate_loss_exponent(cfg) as f64 * (-q_g).ln_1p()).exp();
    Ok(RepetitionTrace {
        q_eff,
        logical_error,
        no_error,
        effective,
        purified,
        swapped,
        gate_factor,
        final_fidelity: swapped.fidelity() * gate_factor,
    })
}

/// Lower-bound final fidelity of the repetition-code repeater.
pub fn repetition_final_fidelity(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    Ok(repetition_trace(cfg, fidelity)?.final_fidelity)
}

/// Intermediate quantities of the CSS pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct CssTrace {
    pub purified: BellDiagonal,
    pub round_success: Vec<f64>,
    pub q_eff: f64,
    pub q_eff_clamped: bool,
    pub logical_error: f64,
    pub final_fidelity: f64,
}

pub fn css_trace(cfg: &ProtocolConfig, fidelity: f64) -> Result<CssTrace> {
    require_family(cfg, CodeFamily::Css)?;
    check_fidelity(fidelity)?;
    let q_g = cfg.hardware.gate_error_prob();
    let mut state = BellDiagonal::from_fidelity(fidelity)?;
    let mut round_success = Vec::with_capacity(cfg.rounds as usize);
    for _ in 0..cfg.rounds {
        let out = bell::purify_imperfect_exact(&state, q_g);
        round_success.push(out.success_prob);
        state = out.state;
    }
    let clock = timing(cfg);
    let q_m_half = cfg.hardware.memory_error_prob(clock.t_prime_k_s / 2.0)?;
    let q = codes::css_effective_qubit_error(q_m_half, q_g, state.fidelity());
    let logical_error = codes::logical_error_prob(&cfg.code, q.q_eff);
    let final_fidelity = (1.0 - logical_error).powi(2 * cfg.segments as i32);
    Ok(CssTrace {
        purified: state,
        round_success,
        q_eff: q.q_eff,
        q_eff_clamped: q.clamped,
        logical_error,
        final_fidelity,
    })
}

/// Final fidelity `(1 - Q_n)^(2N)` of the CSS repeater.
pub fn css_final_fidelity(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    Ok(css_trace(cfg, fidelity)?.final_fidelity)
}

/// Final fidelity for whichever family the configured code belongs to.
pub fn final_fidelity(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    match cfg.code.family() {
        CodeFamily::Repetition => repetition_final_fidelity(cfg, fidelity),
        CodeFamily::Css => css_final_fidelity(cfg, fidelity),
    }
}

/// Pair-generation success probability `P0` of one segment.
pub fn link_success_prob(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    physics::success_probability(fidelity, cfg.segment_transmittance())
}

/// Success factor of each purification round; the product is `P_k`.
///
/// Repetition: ideal-chain probabilities with the gate-loss bound split as
/// `(1 - q_g)^(4n 2^(r-1))` for round `r`. CSS: exact per-round
/// probabilities with dephasing gates.
pub fn purification_round_probs(cfg: &ProtocolConfig, fidelity: f64) -> Result<Vec<f64>> {
    check_fidelity(fidelity)?;
    match cfg.code.family() {
        CodeFamily::Repetition => {
            let tr = repetition_trace(cfg, fidelity)?;
            Ok(bell::purify_k_rounds_lower_per_round(
                &tr.effective,
                cfg.hardware.gate_error_prob(),
                cfg.code.n(),
                cfg.rounds,
            ))
        }
        CodeFamily::Css => Ok(css_trace(cfg, fidelity)?.round_success),
    }
}

/// `P_k`, the probability that all `k` purification rounds succeed (1 for
/// `k = 0`).
pub fn purification_success(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    match cfg.code.family() {
        CodeFamily::Repetition => {
            check_fidelity(fidelity)?;
            let tr = repetition_trace(cfg, fidelity)?;
            Ok(bell::purify_k_rounds_lower(
                &tr.effective,
                cfg.hardware.gate_error_prob(),
                cfg.code.n(),
                cfg.rounds,
            )
            .success_prob)
        }
        CodeFamily::Css => Ok(css_trace(cfg, fidelity)?.round_success.iter().product()),
    }
}

/// `R_n = P0 / (n T0)`, pairs per second per memory without purification.
pub fn rate_unpurified(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    let p0 = link_success_prob(cfg, fidelity)?;
    let t0 = timing(cfg).t0_s;
    Ok(p0 / (cfg.code.n() as f64 * t0))
}

/// `R_pur = P0 P_k / (n 2^k (k/2 + 1) T0)`.
pub fn rate_purified(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    if cfg.rounds == 0 {
        return Err(Error::NoPurificationRounds);
    }
    let p0 = link_success_prob(cfg, fidelity)?;
    let p_k = purification_success(cfg, fidelity)?;
    Ok(p0 * p_k / rate_denominator(cfg))
}

/// `n 2^k (k/2 + 1) T0`, the per-memory time budget of one purified pair.
pub fn rate_denominator(cfg: &ProtocolConfig) -> f64 {
    let k = cfg.rounds;
    cfg.code.n() as f64 * (1u64 << k) as f64 * (k as f64 / 2.0 + 1.0) * timing(cfg).t0_s
}

/// Rate for the configured number of rounds.
pub fn rate(cfg: &ProtocolConfig, fidelity: f64) -> Result<f64> {
    if cfg.rounds == 0 {
        rate_unpurified(cfg, fidelity)
    } else {
        rate_purified(cfg, fidelity)
    }
}

/// One evaluated operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub fidelity: f64,
    pub final_fidelity: f64,
    pub rate_per_memory_hz: f64,
    pub p0: f64,
    pub p_k: f64,
    /// `t_k` for repetition codes, `t'_k` for CSS codes.
    pub t_wait_s: f64,
    pub code_label: String,
    pub q_eff_clamped: bool,
}

pub fn evaluate(cfg: &ProtocolConfig, fidelity: f64) -> Result<SweepResult> {
    check_fidelity(fidelity)?;
    let clock = timing(cfg);
    let (final_fidelity, p_k, t_wait_s, q_eff_clamped) = match cfg.code.family() {
        CodeFamily::Repetition => {
            let tr = repetition_trace(cfg, fidelity)?;
            let p_k = bell::purify_k_rounds_lower(
                &tr.effective,
                cfg.hardware.gate_error_prob(),
                cfg.code.n(),
                cfg.rounds,
            )
            .success_prob;
            (tr.final_fidelity, p_k, clock.t_k_s, false)
        }
        CodeFamily::Css => {
            let tr = css_trace(cfg, fidelity)?;
            let p_k = tr.round_success.iter().product();
            (tr.final_fidelity, p_k, clock.t_prime_k_s, tr.q_eff_clamped)
        }
    };
    let p0 = link_success_prob(cfg, fidelity)?;
    let rate_per_memory_hz = if cfg.rounds == 0 {
        p0 / (cfg.code.n() as f64 * clock.t0_s)
    } else {
        p0 * p_k / rate_denominator(cfg)
    };
    Ok(SweepResult {
        fidelity,
        final_fidelity,
        rate_per_memory_hz,
        p0,
        p_k,
        t_wait_s,
        code_label: cfg.code.label().to_string(),
        q_eff_clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatingPoint {
    Feasible(SweepResult),
    /// The target exceeds what any initial fidelity achieves.
    Infeasible {
        target: f64,
        max_final_fidelity: f64,
    },
}

impl OperatingPoint {
    pub fn result(&self) -> Option<&SweepResult> {
        match self {
            OperatingPoint::Feasible(r) => Some(r),
            OperatingPoint::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, OperatingPoint::Feasible(_))
    }
}

/// Smallest initial fidelity whose final fidelity reaches `target`, found by
/// bisection. Relies on the final fidelity being nondecreasing in `F`; the
/// rate decreases with `F`, so this is the best-rate point at the target.
pub fn operating_point(cfg: &ProtocolConfig, target: f64) -> Result<OperatingPoint> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Domain {
            param: "target",
            value: target,
            reason: "target final fidelity must lie in (0, 1]",
        });
    }
    let mut lo = 0.5 + FIDELITY_FLOOR_EPS;
    let mut hi = 1.0 - FIDELITY_CEIL_EPS;
    let f_hi = final_fidelity(cfg, hi)?;
    if f_hi < target - OPERATING_POINT_TOL {
        return Ok(OperatingPoint::Infeasible {
            target,
            max_final_fidelity: f_hi,
        });
    }
    if f_hi < target {
        // reachable only within tolerance, at the top of the range
        return Ok(OperatingPoint::Feasible(evaluate(cfg, hi)?));
    }
    if final_fidelity(cfg, lo)? >= target {
        return Ok(OperatingPoint::Feasible(evaluate(cfg, lo)?));
    }
    // invariant: final(lo) < target <= final(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if final_fidelity(cfg, mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let result = evaluate(cfg, hi)?;
    if (result.final_fidelity - target).abs() > OPERATING_POINT_TOL {
        // only possible at a discontinuity, which the models do not have
        return Err(Error::Infeasible(format!(
            "bisection ended at F = {hi} with final fidelity {} (target {target})",
            result.final_fidelity
        )));
    }
    Ok(OperatingPoint::Feasible(result))
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: ProtocolConfig,
    pub fidelity: f64,
}

/// A sweep row keeps its own error so one bad point does not stop the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub outcome: Result<SweepResult>,
}

/// Evaluates every point, possibly in parallel; rows come back in grid order.
pub fn sweep(grid: &[SweepPoint]) -> Vec<SweepRow> {
    grid.par_iter()
        .map(|p| SweepRow {
            point: p.clone(),
            outcome: evaluate(&p.config, p.fidelity),
        })
        .collect()
}

/// `count` initial fidelities spread evenly over `[lo, hi]`.
pub fn fidelity_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Cartesian product of configurations and initial fidelities, configs
/// outermost.
pub fn grid(configs: &[ProtocolConfig], fidelities: &[f64]) -> Vec<SweepPoint> {
    configs
        .iter()
        .flat_map(|c| {
            fidelities.iter().map(move |&f| SweepPoint {
                config: c.clone(),
                fidelity: f,
            })
        })
        .collect()
}

/// Canonical link: 1280 km in 20 km segments.
pub const CANONICAL_DISTANCE_KM: f64 = 1280.0;
pub const CANONICAL_SEGMENT_KM: f64 = 20.0;

fn canonical(code: CodeSpec, rounds: u32, tau_c: f64, one_minus_t: f64) -> ProtocolConfig {
    let hw = HardwareParams::new(1.0 - one_minus_t, tau_c).expect("canonical hardware");
    ProtocolConfig::new(CANONICAL_DISTANCE_KM, CANONICAL_SEGMENT_KM, code, rounds, hw)
        .expect("canonical config")
}

/// Purification-depth comparison: unencoded, `[3,1,3]` and `[7,1,3]` for
/// `k = 0, 1, 2` at `τc = 0.1 s`, `1 - T = 10⁻³`.
pub fn purification_comparison_configs() -> Vec<ProtocolConfig> {
    let codes = [
        CodeSpec::unencoded(),
        CodeSpec::repetition(3).unwrap(),
        CodeSpec::css(7, 3).unwrap(),
    ];
    codes
        .iter()
        .flat_map(|c| (0..=2).map(move |k| canonical(c.clone(), k, 0.1, 1e-3)))
        .collect()
}

/// Code comparison at `k = 2`: every catalog code for
/// `τc ∈ {0.01, 0.1, 1} s` and `1 - T ∈ {10⁻³, 10⁻⁴}`.
pub fn code_comparison_configs() -> Vec<ProtocolConfig> {
    let mut out = Vec::new();
    for one_minus_t in [1e-3, 1e-4] {
        for tau_c in [0.01, 0.1, 1.0] {
            for code in codes::code_catalog() {
                out.push(canonical(code, 2, tau_c, one_minus_t));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(code: CodeSpec, k: u32, tau_c: f64, one_minus_t: f64) -> ProtocolConfig {
        canonical(code, k, tau_c, one_minus_t)
    }

    fn rep(n: usize) -> CodeSpec {
        CodeSpec::repetition(n).unwrap()
    }

    #[test]
    fn config_validation() {
        let hw = HardwareParams::new(0.999, 0.1).unwrap();
        let err = ProtocolConfig::new(1280.0, 30.0, rep(3), 2, hw).unwrap_err();
        assert!(err.to_string().contains("42.67"), "{err}");
        assert!(ProtocolConfig::new(1200.0, 20.0, rep(3), 2, hw).is_err()); // N = 60
        assert!(ProtocolConfig::new(20.0, 20.0, rep(3), 2, hw).is_err()); // N = 1
        assert!(ProtocolConfig::new(40.0, 20.0, rep(3), 2, hw).is_ok());
    }

    #[test]
    fn timing_values() {
        let c = cfg(rep(3), 2, 0.1, 1e-3);
        let t = timing(&c);
        assert!((t.t0_s - 2e-4).abs() < 1e-18);
        assert!((t.t_k_s - 4e-4).abs() < 1e-18);
        assert!((t.t_prime_k_s - 3e-4).abs() < 1e-18);
        assert_eq!(t.segments, 64);
        assert_eq!(c.nesting_levels(), 6);
    }

    #[test]
    fn gate_loss_exponent_arithmetic() {
        assert_eq!(repetition_gate_loss_exponent(&cfg(rep(3), 2, 0.1, 1e-3)), 414);
        assert_eq!(
            repetition_gate_loss_exponent(&cfg(CodeSpec::unencoded(), 0, 0.1, 1e-3)),
            126
        );
    }

    #[test]
    fn perfect_hardware_keeps_perfect_pairs() {
        let hw = HardwareParams::perfect();
        let c = ProtocolConfig::new(1280.0, 20.0, rep(3), 2, hw).unwrap();
        assert_eq!(repetition_final_fidelity(&c, 1.0).unwrap(), 1.0);
        let c = c.with_code(CodeSpec::css(7, 3).unwrap());
        assert_eq!(css_final_fidelity(&c, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn unencoded_without_noise_is_pure_swap_degradation() {
        let hw = HardwareParams::perfect();
        let c = ProtocolConfig::new(1280.0, 20.0, CodeSpec::unencoded(), 0, hw).unwrap();
        for f in [0.6, 0.9, 0.99, 0.999] {
            let mut s = BellDiagonal::from_fidelity(f).unwrap();
            for _ in 0..6 {
                s = bell::swap_ideal(&s);
            }
            assert!((repetition_final_fidelity(&c, f).unwrap() - s.fidelity()).abs() < 1e-15);
        }
    }

    #[test]
    fn family_mismatch_is_an_error() {
        let c = cfg(rep(3), 2, 0.1, 1e-3);
        assert!(css_final_fidelity(&c, 0.9).is_err());
        let c = cfg(CodeSpec::css(7, 3).unwrap(), 2, 0.1, 1e-3);
        assert!(repetition_final_fidelity(&c, 0.9).is_err());
    }

    #[test]
    fn css_steep_segment_dependence() {
        // (1 - Q)^(2N) with Q = 0.01, N = 64
        assert!((0.99f64.powi(128) - 0.27625).abs() < 5e-6);
    }

    #[test]
    fn rates() {
        let c1 = cfg(CodeSpec::unencoded(), 0, 0.1, 1e-3);
        // P0 -> 1 as F -> 1/2
        let r = rate_unpurified(&c1, 0.5 + 1e-15).unwrap();
        assert!((r - 5000.0).abs() < 1e-6 * 5000.0 + 1e-3);
        assert_eq!(rate_unpurified(&c1, 1.0).unwrap(), 0.0);

        let c3 = cfg(rep(3), 0, 0.1, 1e-3);
        let r = rate_unpurified(&c3, 0.95).unwrap();
        assert!((r - 141.1).abs() < 0.05, "{r}");

        let k2 = cfg(rep(3), 2, 0.1, 1e-3);
        assert!((rate_denominator(&k2) - 4.8e-3).abs() < 1e-15);
        let k1 = cfg(CodeSpec::unencoded(), 1, 0.1, 1e-3);
        assert!((1.0 / rate_denominator(&k1) - 1666.6667).abs() < 1e-3);

        assert_eq!(rate_purified(&c3, 0.9), Err(Error::NoPurificationRounds));
    }

    #[test]
    fn purified_rate_bounded_by_unpurified() {
        for c in code_comparison_configs() {
            for f in fidelity_grid(0.55, 0.999, 25) {
                let ru = rate_unpurified(&c, f).unwrap();
                let rp = rate_purified(&c, f).unwrap();
                let k = c.rounds();
                let cap = ru / ((1u64 << k) as f64 * (k as f64 / 2.0 + 1.0));
                assert!(rp <= cap * (1.0 + 1e-12), "{} F={f}", c.code());
            }
        }
    }

    #[test]
    fn final_fidelity_monotone_in_initial_fidelity() {
        let mut configs = code_comparison_configs();
        configs.extend(purification_comparison_configs());
        for c in configs {
            let mut prev = -1.0;
            for f in fidelity_grid(0.5 + 1e-6, 1.0, 400) {
                let v = final_fidelity(&c, f).unwrap();
                assert!(v >= prev - 1e-12, "{} k={} F={f}: {v} < {prev}", c.code(), c.rounds());
                prev = v;
            }
        }
    }

    #[test]
    fn per_round_probs_multiply_to_p_k() {
        for c in code_comparison_configs() {
            let f = 0.9;
            let per: f64 = purification_round_probs(&c, f).unwrap().iter().product();
            let p_k = purification_success(&c, f).unwrap();
            assert!((per - p_k).abs() <= 1e-14, "{}", c.code());
        }
    }

    #[test]
    fn operating_point_searches() {
        let hw = HardwareParams::perfect();
        let c = ProtocolConfig::new(1280.0, 20.0, rep(3), 2, hw).unwrap();
        let op = operating_point(&c, 1.0 - 1e-6).unwrap();
        let r = op.result().unwrap();
        assert!(final_fidelity(&c, r.fidelity - 1e-3).unwrap() < 1.0 - 1e-6);
        assert!((r.final_fidelity - (1.0 - 1e-6)).abs() <= OPERATING_POINT_TOL);

        let unenc = cfg(CodeSpec::unencoded(), 2, 0.1, 1e-3);
        match operating_point(&unenc, 0.9).unwrap() {
            OperatingPoint::Infeasible { max_final_fidelity, .. } => {
                assert!(max_final_fidelity < 0.9)
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
        assert!(operating_point(&unenc, 1.5).is_err());
    }

    #[test]
    fn sweep_preserves_order_and_records_errors() {
        assert!(sweep(&[]).is_empty());
        let c = cfg(rep(3), 2, 0.1, 1e-3);
        let fs = [0.9, 0.4, 0.95];
        let rows = sweep(&grid(std::slice::from_ref(&c), &fs));
        assert_eq!(rows.len(), 3);
        for (row, f) in rows.iter().zip(fs) {
            assert_eq!(row.point.fidelity, f);
        }
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        assert!(rows[2].outcome.is_ok());
    }

    #[test]
    fn preset_grid_sizes() {
        assert_eq!(purification_comparison_configs().len(), 9);
        assert_eq!(code_comparison_configs().len(), 42);
    }
}
