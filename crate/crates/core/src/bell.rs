//! Bell-diagonal states and the purification and swapping recursions that act
//! on them.
//!
//! Coefficient order is `(A, B, C, D)` for `|φ⁺⟩, |φ⁻⟩, |ψ⁺⟩, |ψ⁻⟩`. Three
//! families of maps live here:
//!
//! * the ideal recursions (perfect local gates),
//! * the exact one-round recursion with dephasing CNOTs,
//! * worst-case lower bounds that push the loss of an encoded block with `n`
//!   physical qubits into a scalar factor `(1 - q_g)^m`.

use crate::error::{Error, Result};

/// Coefficients of a state are accepted as normalized within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// `A|φ⁺⟩⟨φ⁺| + B|φ⁻⟩⟨φ⁻| + C|ψ⁺⟩⟨ψ⁺| + D|ψ⁻⟩⟨ψ⁻|`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonal {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl BellDiagonal {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let coeffs = [a, b, c, d];
        if coeffs.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidState(format!(
                "coefficients must be finite and non-negative, got {coeffs:?}"
            )));
        }
        let sum: f64 = coeffs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!(
                "coefficients sum to {sum}, expected 1"
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Rescales non-negative weights to unit sum.
    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || weights.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidState(format!(
                "weights must be non-negative with positive sum, got {weights:?}"
            )));
        }
        Self::new(
            weights[0] / sum,
            weights[1] / sum,
            weights[2] / sum,
            weights[3] / sum,
        )
    }

    /// `F|φ⁺⟩⟨φ⁺| + (1 - F)|φ⁻⟩⟨φ⁻|`, the state heralded by the qubus.
    pub fn from_fidelity(fidelity: f64) -> Result<Self> {
        Self::new(fidelity, 1.0 - fidelity, 0.0, 0.0)
    }

    pub fn perfect() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            a: 0.25,
            b: 0.25,
            c: 0.25,
            d: 0.25,
        }
    }

    pub(crate) fn from_raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        debug_assert!(
            ((a + b + c + d) - 1.0).abs() <= 1e-9,
            "recursion left the simplex: {a} {b} {c} {d}"
        );
        Self { a, b, c, d }
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Overlap with `|φ⁺⟩`.
    pub fn fidelity(&self) -> f64 {
        self.a
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coefficients()
            .iter()
            .zip(other.coefficients())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

impl Default for BellDiagonal {
    fn default() -> Self {
        Self::perfect()
    }
}

/// State kept after a purification round together with the probability that
/// the round succeeded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurifyOutcome {
    pub state: BellDiagonal,
    pub success_prob: f64,
}

/// Worst-case bound for one purification round of encoded pairs.
///
/// `state` is the ideal-recursion output and stays normalized; the bounds are
/// carried as scalars because only the leading coefficient is bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurifyBound {
    pub state: BellDiagonal,
    pub success_prob: f64,
    pub fidelity: f64,
}

/// Worst-case bound for one swapping step of encoded pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapBound {
    pub state: BellDiagonal,
    /// Leading coefficient times the gate-loss factor. Not renormalized.
    pub fidelity: f64,
}

/// Success probability of the ideal recursion, `(A + D)² + (B + C)²`.
pub fn purify_success_prob(s: &BellDiagonal) -> f64 {
    (s.a + s.d).powi(2) + (s.b + s.c).powi(2)
}

/// One round of the two-pair recurrence protocol with perfect gates.
pub fn purify_ideal(s: &BellDiagonal) -> PurifyOutcome {
    let p = purify_success_prob(s);
    // p >= 1/2 on the simplex by convexity, so the division is safe
    debug_assert!(p > 0.0);
    let state = BellDiagonal::from_raw(
        (s.a * s.a + s.d * s.d) / p,
        2.0 * s.a * s.d / p,
        (s.b * s.b + s.c * s.c) / p,
        2.0 * s.b * s.c / p,
    );
    PurifyOutcome {
        state,
        success_prob: p,
    }
}

/// Entanglement swapping of two identical pairs with perfect gates. Always
/// succeeds.
pub fn swap_ideal(s: &BellDiagonal) -> BellDiagonal {
    let (a, b, c, d) = (s.a, s.b, s.c, s.d);
    BellDiagonal::from_raw(
        a * a + b * b + c * c + d * d,
        2.0 * (a * b + c * d),
        2.0 * (a * c + b * d),
        2.0 * (b * c + a * d),
    )
}

/// Exact success probability of one round with dephasing CNOTs.
pub fn purify_imperfect_success_prob(s: &BellDiagonal, q_g: f64) -> f64 {
    let (a, b, c, d) = (s.a, s.b, s.c, s.d);
    let q = q_g;
    let w = (a - b - c + d).powi(2);
    (b + c).powi(2) + (a + d).powi(2) - 2.0 * w * q + 2.0 * w * q * q
}

/// One round of the recurrence protocol where every CNOT suffers the
/// two-qubit dephasing channel with per-qubit error `q_g`.
///
/// The coefficient polynomials are kept in their expanded published form on
/// purpose; do not simplify them.
#[allow(clippy::neg_multiply, clippy::precedence)]
pub fn purify_imperfect_exact(s: &BellDiagonal, q_g: f64) -> PurifyOutcome {
    let (a, b, c, d) = (s.a, s.b, s.c, s.d);
    let q = q_g;
    let p = purify_imperfect_success_prob(s, q);

    let num_a = d * d + a * a * (1.0 + 2.0 * (-1.0 + q) * q).powi(2)
        - 2.0
            * a
            * (-1.0 + q)
            * q
            * (c + 2.0 * d + 2.0 * (b - c - 2.0 * d) * q + 2.0 * (-b + c + 2.0 * d) * q * q)
        - 2.0
            * d
            * (-1.0 + q)
            * q
            * (-2.0 * d - 2.0 * (c + d) * (-1.0 + q) * q + b * (1.0 + 2.0 * (-1.0 + q) * q));

    let num_b = -2.0
        * d
        * (-1.0 + q)
        * q
        * (c + d - 2.0 * (-b + c + d) * q + 2.0 * (-b + c + d) * q * q)
        + 2.0 * a * a * q * (1.0 + q * (-3.0 - 2.0 * (-2.0 + q) * q))
        + 2.0
            * a
            * (d * (1.0 + 2.0 * (-1.0 + q) * q).powi(2)
                - (-1.0 + q)
                    * q
                    * (-2.0 * c * (-1.0 + q) * q + b * (1.0 + 2.0 * (-1.0 + q) * q)));

    let num_c = c * c + b * b * (1.0 + 2.0 * (-1.0 + q) * q).powi(2)
        - 2.0
            * c
            * (-1.0 + q)
            * q
            * (-2.0 * c - 2.0 * (c + d) * (-1.0 + q) * q + a * (1.0 + 2.0 * (-1.0 + q) * q))
        - 2.0
            * b
            * (-1.0 + q)
            * q
            * (-2.0 * a * (-1.0 + q) * q
                + d * (1.0 + 2.0 * (-1.0 + q) * q)
                + c * (2.0 + 4.0 * (-1.0 + q) * q));

    let num_d = -2.0
        * c
        * (-1.0 + q)
        * q
        * (c + d - 2.0 * (-a + c + d) * q + 2.0 * (-a + c + d) * q * q)
        + 2.0 * b * b * q * (1.0 + q * (-3.0 - 2.0 * (-2.0 + q) * q))
        + 2.0
            * b
            * (c * (1.0 + 2.0 * (-1.0 + q) * q).powi(2)
                - (-1.0 + q)
                    * q
                    * (-2.0 * d * (-1.0 + q) * q + a * (1.0 + 2.0 * (-1.0 + q) * q)));

    PurifyOutcome {
        state: BellDiagonal::from_raw(num_a / p, num_b / p, num_c / p, num_d / p),
        success_prob: p,
    }
}

fn gate_survival(q_g: f64, gates: u64) -> f64 {
    // (1 - q)^m through ln_1p to stay accurate for tiny q and large m
    (gates as f64 * (-q_g).ln_1p()).exp()
}

/// Lower bounds for one purification round of `n`-qubit encoded blocks:
/// success and leading coefficient both scaled by `(1 - q_g)^(4n)`.
pub fn purify_lower_bound(s: &BellDiagonal, q_g: f64, n: usize) -> PurifyBound {
    let ideal = purify_ideal(s);
    let factor = gate_survival(q_g, 4 * n as u64);
    PurifyBound {
        state: ideal.state,
        success_prob: ideal.success_prob * factor,
        fidelity: ideal.state.a * factor,
    }
}

/// Lower bound for one swap of `n`-qubit encoded blocks: leading coefficient
/// scaled by `(1 - q_g)^(2n)`.
pub fn swap_lower_bound(s: &BellDiagonal, q_g: f64, n: usize) -> SwapBound {
    let state = swap_ideal(s);
    SwapBound {
        state,
        fidelity: state.a * gate_survival(q_g, 2 * n as u64),
    }
}

/// `k` rounds of bounded purification: the ideal recursion for the state,
/// the product of its success probabilities, and a single gate-loss factor
/// `(1 - q_g)^(4n(2^k - 1))`.
pub fn purify_k_rounds_lower(s: &BellDiagonal, q_g: f64, n: usize, k: u32) -> PurifyOutcome {
    let mut state = *s;
    let mut chain = 1.0;
    for _ in 0..k {
        let out = purify_ideal(&state);
        chain *= out.success_prob;
        state = out.state;
    }
    let gates = 4 * n as u64 * ((1u64 << k) - 1);
    PurifyOutcome {
        state,
        success_prob: chain * gate_survival(q_g, gates),
    }
}

/// Per-round success factors whose product is the `k`-round lower bound.
/// Round `r` (1-based) carries `(1 - q_g)^(4n · 2^(r-1))`.
pub fn purify_k_rounds_lower_per_round(
    s: &BellDiagonal,
    q_g: f64,
    n: usize,
    k: u32,
) -> Vec<f64> {
    let mut state = *s;
    (0..k)
        .map(|r| {
            let out = purify_ideal(&state);
            state = out.state;
            out.success_prob * gate_survival(q_g, 4 * n as u64 * (1u64 << r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bd(a: f64, b: f64, c: f64, d: f64) -> BellDiagonal {
        BellDiagonal::new(a, b, c, d).unwrap()
    }

    fn assert_close(x: f64, y: f64, tol: f64) {
        assert!((x - y).abs() <= tol, "{x} vs {y} (tol {tol})");
    }

    fn sum(s: &BellDiagonal) -> f64 {
        s.coefficients().iter().sum()
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(BellDiagonal::new(0.5, 0.5, 0.1, 0.0).is_err());
        assert!(BellDiagonal::new(1.1, -0.1, 0.0, 0.0).is_err());
        assert!(BellDiagonal::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
        assert!(BellDiagonal::from_weights([0.0; 4]).is_err());
        assert_eq!(
            BellDiagonal::from_weights([2.0, 2.0, 2.0, 2.0]).unwrap(),
            BellDiagonal::maximally_mixed()
        );
    }

    #[test]
    fn ideal_purification_examples() {
        let out = purify_ideal(&BellDiagonal::perfect());
        assert_eq!(out.state, BellDiagonal::perfect());
        assert_eq!(out.success_prob, 1.0);

        let out = purify_ideal(&bd(0.9, 0.1, 0.0, 0.0));
        assert_close(out.success_prob, 0.82, 1e-15);
        assert_close(out.state.a(), 0.98780, 5e-6);
        assert_close(out.state.c(), 0.01220, 5e-6);
        assert_eq!(out.state.b(), 0.0);
        assert_eq!(out.state.d(), 0.0);

        let out = purify_ideal(&BellDiagonal::maximally_mixed());
        assert_close(out.success_prob, 0.5, 1e-15);
        assert!(out.state.max_abs_diff(&BellDiagonal::maximally_mixed()) < 1e-15);
    }

    #[test]
    fn ideal_swap_examples() {
        assert_eq!(swap_ideal(&BellDiagonal::perfect()), BellDiagonal::perfect());
        let s = swap_ideal(&bd(0.9, 0.1, 0.0, 0.0));
        assert!(s.max_abs_diff(&bd(0.82, 0.18, 0.0, 0.0)) < 1e-15);
        let s = swap_ideal(&BellDiagonal::maximally_mixed());
        assert!(s.max_abs_diff(&BellDiagonal::maximally_mixed()) < 1e-15);
    }

    #[test]
    fn imperfect_reduces_to_ideal_without_gate_noise() {
        let s = bd(0.9, 0.1, 0.0, 0.0);
        let exact = purify_imperfect_exact(&s, 0.0);
        let ideal = purify_ideal(&s);
        assert_eq!(exact.success_prob, ideal.success_prob);
        assert!(exact.state.max_abs_diff(&ideal.state) < 1e-15);
    }

    #[test]
    fn lower_bound_examples() {
        let s = bd(0.9, 0.1, 0.0, 0.0);
        let qg = 7.852e-4;
        let lb = purify_lower_bound(&s, qg, 3);
        assert_close(lb.success_prob, 0.81231, 5e-6);
        assert_close(lb.fidelity, 0.97854, 5e-6);
        let zero = purify_lower_bound(&s, 0.0, 3);
        assert_eq!(zero.success_prob, purify_ideal(&s).success_prob);
        assert_eq!(zero.fidelity, purify_ideal(&s).state.a());

        let sw = swap_lower_bound(&bd(0.82, 0.18, 0.0, 0.0), qg, 3);
        assert_close(0.82f64 * 0.82 + 0.18 * 0.18, 0.70480, 1e-12);
        assert_close(sw.fidelity, 0.70149, 5e-6);
        assert_eq!(
            swap_lower_bound(&s, 0.0, 3).fidelity,
            swap_ideal(&s).a()
        );
        let sw = swap_lower_bound(&BellDiagonal::perfect(), 1e-3, 5);
        assert_close(sw.fidelity, 0.999f64.powi(10), 1e-15);
        assert!(sw.fidelity < 1.0);
    }

    #[test]
    fn k_round_composition() {
        let s = bd(0.9, 0.07, 0.02, 0.01);
        let qg = 1e-3;
        let k0 = purify_k_rounds_lower(&s, qg, 3, 0);
        assert_eq!(k0.state, s);
        assert_eq!(k0.success_prob, 1.0);

        let k1 = purify_k_rounds_lower(&s, qg, 3, 1);
        let one = purify_lower_bound(&s, qg, 3);
        assert_close(k1.success_prob, one.success_prob, 1e-15);
        assert_eq!(k1.state, one.state);

        let k2 = purify_k_rounds_lower(&s, qg, 3, 2);
        let first = purify_ideal(&s);
        let second = purify_ideal(&first.state);
        let expected = first.success_prob * second.success_prob * (1.0f64 - qg).powi(36);
        assert_close(k2.success_prob, expected, 1e-14);
        assert_eq!(k2.state, second.state);

        let per_round = purify_k_rounds_lower_per_round(&s, qg, 3, 2);
        assert_eq!(per_round.len(), 2);
        assert_close(per_round.iter().product::<f64>(), k2.success_prob, 1e-15);
    }

    #[test]
    fn imperfect_converges_linearly_to_ideal() {
        let s = bd(0.85, 0.08, 0.05, 0.02);
        let ideal = purify_ideal(&s);
        let at = |q: f64| purify_imperfect_exact(&s, q);
        let (q1, q2) = (1e-6, 1e-5);
        for i in 0..4 {
            let d1 = at(q1).state.coefficients()[i] - ideal.state.coefficients()[i];
            let d2 = at(q2).state.coefficients()[i] - ideal.state.coefficients()[i];
            let slope1 = d1 / q1;
            let slope2 = d2 / q2;
            // first-order: the two finite-difference slopes agree
            assert!(
                (slope1 - slope2).abs() <= 1e-4 * slope1.abs().max(1e-3),
                "coefficient {i}: {slope1} vs {slope2}"
            );
        }
        let dp1 = (at(q1).success_prob - ideal.success_prob) / q1;
        let dp2 = (at(q2).success_prob - ideal.success_prob) / q2;
        assert!((dp1 - dp2).abs() <= 1e-4 * dp1.abs());
    }

    fn arb_state() -> impl Strategy<Value = BellDiagonal> {
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
            .prop_filter("positive mass", |(a, b, c, d)| a + b + c + d > 1e-6)
            .prop_map(|(a, b, c, d)| BellDiagonal::from_weights([a, b, c, d]).unwrap())
    }

    proptest! {
        #[test]
        fn recursions_stay_normalized(s in arb_state(), q in 0.0f64..0.5) {
            prop_assert!((sum(&purify_ideal(&s).state) - 1.0).abs() <= NORMALIZATION_TOL);
            prop_assert!((sum(&swap_ideal(&s)) - 1.0).abs() <= NORMALIZATION_TOL);
            let exact = purify_imperfect_exact(&s, q);
            prop_assert!((sum(&exact.state) - 1.0).abs() <= NORMALIZATION_TOL);
            prop_assert!(exact.success_prob >= 0.0 && exact.success_prob <= 1.0);
            prop_assert!(exact.state.coefficients().iter().all(|x| *x >= -1e-15));
        }

        #[test]
        fn bound_ordering_on_restricted_domain(a in 0.8f64..=1.0, q in 0.0f64..=1e-3) {
            let s = BellDiagonal::new(a, 1.0 - a, 0.0, 0.0).unwrap();
            let exact = purify_imperfect_exact(&s, q);
            let lb = purify_lower_bound(&s, q, 1);
            prop_assert!(lb.success_prob <= exact.success_prob + 1e-15);
            prop_assert!(lb.fidelity <= exact.state.a() + 1e-15);
        }
    }
}
