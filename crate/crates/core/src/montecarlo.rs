//! Stochastic replica of the block-counting rate model.
//!
//! Each trial is one `T0` window: `s` memory blocks attempt pair generation,
//! successful pairs are combined two at a time for each purification round,
//! and swapping is deterministic. Leftover pairs are discarded at the end of
//! the window.
//!
//! Trial `i` draws from `ChaCha8Rng` seeded with the run seed on stream `i`,
//! and per-trial counts are summed as integers, so results do not depend on
//! thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::pipeline::{self, ProtocolConfig};

/// Generator used for every trial stream.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), stream = trial index";

/// Windows with at most this many blocks also report a full histogram.
pub const HISTOGRAM_MAX_BLOCKS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub p0: f64,
    pub blocks: u64,
    pub rounds: u32,
    pub trials: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn new(p0: f64, blocks: u64, rounds: u32, trials: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            p0,
            blocks,
            rounds,
            trials,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Takes `p0` and `k` from a protocol at initial fidelity `fidelity`.
    pub fn for_protocol(
        protocol: &ProtocolConfig,
        fidelity: f64,
        blocks: u64,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let p0 = pipeline::link_success_prob(protocol, fidelity)?;
        Self::new(p0, blocks, protocol.rounds(), trials, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p0) {
            return Err(domain("p0", self.p0, "probability must lie in [0, 1]"));
        }
        if self.blocks == 0 {
            return Err(Error::Config("blocks must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.rounds > 63 {
            return Err(Error::Config(format!("{} rounds is too many", self.rounds)));
        }
        Ok(())
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn binomial(n: u64, p: f64) -> Binomial {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("probability clamped into [0, 1]")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Tally {
    sum: u128,
    sum_sq: u128,
}

impl Tally {
    fn one(x: u64) -> Self {
        Self {
            sum: x as u128,
            sum_sq: (x as u128) * (x as u128),
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    /// Mean and standard error of the mean.
    fn moments(&self, trials: u64) -> (f64, f64) {
        let n = trials as f64;
        let mean = self.sum as f64 / n;
        if trials < 2 {
            return (mean, f64::INFINITY);
        }
        // subtract in integers first to keep the variance exact
        let t = trials as u128;
        let centered = t * self.sum_sq - self.sum * self.sum;
        let var = centered as f64 / (n * (n - 1.0));
        (mean, (var / n).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub mean_successes: f64,
    pub std_err: f64,
    /// `s p0`.
    pub expected: f64,
    pub within_3_sigma: bool,
    /// `histogram[m]` counts trials with `m` successes; only for small `s`.
    pub histogram: Option<Vec<u64>>,
}

/// Draws `Binomial(s, p0)` successes per trial.
pub fn simulate_window(cfg: &McConfig) -> Result<WindowStats> {
    cfg.validate()?;
    let dist = binomial(cfg.blocks, cfg.p0);
    let draws: Vec<u64> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| dist.sample(&mut trial_rng(cfg.seed, i)))
        .collect();
    let tally = draws
        .iter()
        .fold(Tally::default(), |acc, &m| acc.merge(Tally::one(m)));
    let (mean, se) = tally.moments(cfg.trials);
    let expected = cfg.blocks as f64 * cfg.p0;
    let histogram = (cfg.blocks <= HISTOGRAM_MAX_BLOCKS).then(|| {
        let mut h = vec![0u64; cfg.blocks as usize + 1];
        for &m in &draws {
            h[m as usize] += 1;
        }
        h
    });
    Ok(WindowStats {
        mean_successes: mean,
        std_err: se,
        expected,
        within_3_sigma: within_3_sigma(mean, expected, se),
        histogram,
    })
}

fn within_3_sigma(value: f64, expected: f64, se: f64) -> bool {
    let diff = (value - expected).abs();
    diff <= 3.0 * se || diff <= 1e-12 * expected.abs().max(1.0)
}

/// Smallest `s` with `P[Binomial(s, p0) ≥ 2^k] ≥ confidence`.
pub fn required_blocks(p0: f64, rounds: u32, confidence: f64) -> Result<u64> {
    if !(p0 > 0.0 && p0 <= 1.0) {
        if p0 == 0.0 {
            return Err(Error::Infeasible(
                "p0 = 0: no number of blocks ever yields a pair".into(),
            ));
        }
        return Err(domain("p0", p0, "probability must lie in (0, 1]"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(domain("confidence", confidence, "must lie in (0, 1)"));
    }
    if rounds > 30 {
        return Err(Error::Config(format!("{rounds} rounds is too many")));
    }
    let need = 1u64 << rounds;
    if p0 == 1.0 {
        return Ok(need);
    }
    // P[X < need] for X ~ Bin(s, p0), from the pmf by the ratio recurrence
    let shortfall = |s: u64| -> f64 {
        let q = 1.0 - p0;
        let mut pmf = q.powf(s as f64);
        let mut cdf = 0.0;
        let ln_pmf0 = s as f64 * q.ln();
        if pmf == 0.0 {
            // underflow: walk in log space instead
            let mut ln_pmf = ln_pmf0;
            for m in 0..need.min(s + 1) {
                cdf += ln_pmf.exp();
                ln_pmf += ((s - m) as f64 / (m + 1) as f64 * p0 / q).ln();
            }
            return cdf;
        }
        for m in 0..need.min(s + 1) {
            cdf += pmf;
            pmf *= (s - m) as f64 / (m + 1) as f64 * p0 / q;
        }
        cdf
    };
    let mut s = need;
    loop {
        if 1.0 - shortfall(s) >= confidence {
            return Ok(s);
        }
        s += 1;
        if s > 1 << 40 {
            return Err(Error::Infeasible(format!(
                "more than 2^40 blocks needed at p0 = {p0}"
            )));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Pairs per second per memory.
    pub rate_hz: f64,
    pub std_err_hz: f64,
    /// Closed-form rate for the same configuration.
    pub analytic_hz: f64,
    pub within_3_sigma: bool,
    pub mean_pairs_per_window: f64,
    pub trials: u64,
    pub blocks: u64,
    pub seed: u64,
    pub rng: &'static str,
}

/// Pairs one trial produces after all purification rounds.
fn window_output(cfg: &McConfig, round_probs: &[f64], trial: u64) -> u64 {
    let mut rng = trial_rng(cfg.seed, trial);
    let mut pairs = binomial(cfg.blocks, cfg.p0).sample(&mut rng);
    for &p in round_probs {
        let attempts = pairs / 2;
        if attempts == 0 {
            return 0;
        }
        pairs = binomial(attempts, p).sample(&mut rng);
    }
    pairs
}

/// Simulates `trials` windows of the protocol at initial fidelity
/// `fidelity` and converts the mean output into a per-memory rate.
///
/// Rounds in `mc` must equal the protocol's; `p0` is recomputed from the
/// protocol so the comparison with the closed form is like for like.
pub fn simulate_rate(
    protocol: &ProtocolConfig,
    fidelity: f64,
    mc: &McConfig,
) -> Result<RateEstimate> {
    mc.validate()?;
    if mc.rounds != protocol.rounds() {
        return Err(Error::Config(format!(
            "Monte Carlo rounds {} differ from protocol rounds {}",
            mc.rounds,
            protocol.rounds()
        )));
    }
    let p0 = pipeline::link_success_prob(protocol, fidelity)?;
    let cfg = McConfig { p0, ..*mc };
    let round_probs = if protocol.rounds() == 0 {
        Vec::new()
    } else {
        pipeline::purification_round_probs(protocol, fidelity)?
    };
    let tally = (0..cfg.trials)
        .into_par_iter()
        .map(|i| Tally::one(window_output(&cfg, &round_probs, i)))
        .reduce(Tally::default, Tally::merge);
    let (mean, se) = tally.moments(cfg.trials);

    let k = protocol.rounds() as f64;
    let t0 = pipeline::timing(protocol).t0_s;
    let denom = cfg.blocks as f64 * protocol.code().n() as f64 * (k / 2.0 + 1.0) * t0;
    let rate_hz = mean / denom;
    let std_err_hz = se / denom;
    let analytic_hz = pipeline::rate(protocol, fidelity)?;
    Ok(RateEstimate {
        rate_hz,
        std_err_hz,
        analytic_hz,
        within_3_sigma: within_3_sigma(rate_hz, analytic_hz, std_err_hz),
        mean_pairs_per_window: mean,
        trials: cfg.trials,
        blocks: cfg.blocks,
        seed: cfg.seed,
        rng: RNG_ALGORITHM,
    })
}
