//! Brute-force checks for the closed-form recursions.
//!
//! A dense density-matrix simulator for up to four qubits runs the recurrence
//! purification protocol and Bell-measurement swapping gate by gate, with
//! postselection computed exactly through projectors. An exhaustive
//! enumeration checks the logical error probability of small codes.
//!
//! Qubit 0 is the most significant bit of a basis index.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::bell::{self, BellDiagonal, PurifyOutcome};
use crate::codes::{self, CodeSpec};
use crate::error::{domain, Error, Result};

pub const MAX_QUBITS: usize = 4;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Largest code the exhaustive enumeration accepts.
pub const MAX_ENUMERATION_QUBITS: usize = 15;
/// Agreement required to call a gate-error variant a match.
pub const VARIANT_MATCH_TOL: f64 = 1e-10;

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)])
}

fn hadamard() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)])
}

fn projector(outcome: usize) -> CMatrix {
    let mut p = CMatrix::zeros(2, 2);
    p[(outcome, outcome)] = c(1.0);
    p
}

/// `|0⟩ → (|0⟩ + i s|1⟩)/√2`, `|1⟩ → (i s|0⟩ + |1⟩)/√2` with `s = ±1`.
fn deutsch_rotation(sign: f64) -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::new(0.0, sign * h);
    CMatrix::from_row_slice(2, 2, &[c(h), i, i, c(h)])
}

/// Bell vectors in the order `φ⁺, φ⁻, ψ⁺, ψ⁻`.
fn bell_vectors() -> [nalgebra::DVector<Complex64>; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = |x: [f64; 4]| nalgebra::DVector::from_iterator(4, x.iter().map(|&e| c(e * h)));
    [
        v([1.0, 0.0, 0.0, 1.0]),
        v([1.0, 0.0, 0.0, -1.0]),
        v([0.0, 1.0, 1.0, 0.0]),
        v([0.0, 1.0, -1.0, 0.0]),
    ]
}

/// Dense Hermitian, unit-trace operator on at most four qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps and validates a `2^m × 2^m` matrix.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{qubits} qubits exceeds the simulator limit of {MAX_QUBITS}"
            )));
        }
        let rho = Self { qubits, matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Bell-diagonal two-qubit state.
    pub fn from_bell_diagonal(s: &BellDiagonal) -> Self {
        let mut m = CMatrix::zeros(4, 4);
        for (coef, v) in s.coefficients().iter().zip(bell_vectors()) {
            m += &v * v.adjoint() * c(*coef);
        }
        Self { qubits: 2, matrix: m }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `self ⊗ other`; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{qubits} qubits exceeds the simulator limit of {MAX_QUBITS}"
            )));
        }
        Ok(Self {
            qubits,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.matrix - self.matrix.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // symmetrize first so rounding noise cannot leak into the spectrum
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace, and positive semidefinite up to the tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (error {herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let ev = self.min_eigenvalue();
        if ev < EIGENVALUE_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {ev:e}")));
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.qubits {
            Ok(())
        } else {
            Err(Error::QubitIndex {
                index: q,
                qubits: self.qubits,
            })
        }
    }

    /// Lifts single-qubit operators to the full register; missing qubits get
    /// the identity.
    fn embed(&self, ops: &[(usize, &CMatrix)]) -> CMatrix {
        let mut full = CMatrix::identity(1, 1);
        for q in 0..self.qubits {
            let op = ops
                .iter()
                .find(|(idx, _)| *idx == q)
                .map(|(_, m)| (*m).clone())
                .unwrap_or_else(identity2);
            full = full.kronecker(&op);
        }
        full
    }

    fn conjugate(&self, u: &CMatrix) -> Self {
        Self {
            qubits: self.qubits,
            matrix: u * &self.matrix * u.adjoint(),
        }
    }

    fn combine(terms: &[(f64, &Self)]) -> Self {
        let qubits = terms[0].1.qubits;
        let dim = 1 << qubits;
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in terms {
            m += &rho.matrix * c(*w);
        }
        Self { qubits, matrix: m }
    }

    /// Applies a product of single-qubit unitaries.
    pub fn apply_local(&self, ops: &[(usize, &CMatrix)]) -> Result<Self> {
        for (q, _) in ops {
            self.check_qubit(*q)?;
        }
        Ok(self.conjugate(&self.embed(ops)))
    }

    /// `(1 - q) ρ + q Z ρ Z` on one qubit.
    pub fn apply_dephasing(&self, qubit: usize, q: f64) -> Result<Self> {
        self.check_qubit(qubit)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(domain("q", q, "probability must lie in [0, 1]"));
        }
        let z = pauli_z();
        let flipped = self.conjugate(&self.embed(&[(qubit, &z)]));
        Ok(Self::combine(&[(1.0 - q, self), (q, &flipped)]))
    }

    fn two_qubit_unitary(&self, gate: TwoQubitGate, control: usize, target: usize) -> CMatrix {
        let p0 = projector(0);
        let p1 = projector(1);
        let flip = match gate {
            TwoQubitGate::Cnot => pauli_x(),
            TwoQubitGate::Cz => pauli_z(),
        };
        self.embed(&[(control, &p0)]) + self.embed(&[(control, &p1), (target, &flip)])
    }

    /// Two-qubit gate with the dephasing-gate error model
    /// `(1-q)² ρ + q(1-q)(P_c ρ P_c + P_t ρ P_t) + q² P_c P_t ρ P_t P_c`.
    ///
    /// CZ always uses `P_c = P_t = Z`, which commutes with the gate. For CNOT
    /// the variant picks the target Pauli and whether the errors act before
    /// or after the ideal gate.
    pub fn apply_noisy_two_qubit_gate(
        &self,
        control: usize,
        target: usize,
        q_g: f64,
        gate: TwoQubitGate,
        variant: GateErrorVariant,
    ) -> Result<Self> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::InvalidState("control and target must differ".into()));
        }
        if !(0.0..=1.0).contains(&q_g) {
            return Err(domain("q_g", q_g, "probability must lie in [0, 1]"));
        }
        let z = pauli_z();
        let x = pauli_x();
        let target_pauli = match (gate, variant.target_pauli_is_x()) {
            (TwoQubitGate::Cnot, true) => &x,
            _ => &z,
        };
        let err_c = self.embed(&[(control, &z)]);
        let err_t = self.embed(&[(target, target_pauli)]);
        let err_ct = &err_c * &err_t;
        let errors = |rho: &Self| {
            let a = rho.conjugate(&err_c);
            let b = rho.conjugate(&err_t);
            let ab = rho.conjugate(&err_ct);
            let q = q_g;
            Self::combine(&[
                ((1.0 - q) * (1.0 - q), rho),
                (q * (1.0 - q), &a),
                (q * (1.0 - q), &b),
                (q * q, &ab),
            ])
        };
        let u = self.two_qubit_unitary(gate, control, target);
        let after = matches!(gate, TwoQubitGate::Cnot) && variant.errors_after_gate();
        Ok(if after {
            errors(&self.conjugate(&u))
        } else {
            errors(self).conjugate(&u)
        })
    }

    /// Unnormalized `Π ρ Π` for computational-basis outcomes.
    pub fn project(&self, outcomes: &[(usize, usize)]) -> Result<Self> {
        let mut ops = Vec::with_capacity(outcomes.len());
        let projs: Vec<(usize, CMatrix)> = outcomes
            .iter()
            .map(|&(q, o)| (q, projector(o & 1)))
            .collect();
        for (q, p) in &projs {
            self.check_qubit(*q)?;
            ops.push((*q, p));
        }
        let proj = self.embed(&ops);
        Ok(Self {
            qubits: self.qubits,
            matrix: &proj * &self.matrix * &proj,
        })
    }

    /// Traces out every qubit not listed in `keep`; the kept qubits retain
    /// their relative order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        for q in keep {
            self.check_qubit(*q)?;
        }
        let m = self.qubits;
        let bit = |idx: usize, q: usize| (idx >> (m - 1 - q)) & 1;
        let traced: Vec<usize> = (0..m).filter(|q| !keep.contains(q)).collect();
        let reduced = |idx: usize| {
            keep.iter()
                .fold(0usize, |acc, &q| (acc << 1) | bit(idx, q))
        };
        let rest = |idx: usize| {
            traced
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | bit(idx, q))
        };
        let dim_out = 1 << keep.len();
        let mut out = CMatrix::zeros(dim_out, dim_out);
        let dim = self.dim();
        for i in 0..dim {
            for j in 0..dim {
                if rest(i) == rest(j) {
                    out[(reduced(i), reduced(j))] += self.matrix[(i, j)];
                }
            }
        }
        Ok(Self {
            qubits: keep.len(),
            matrix: out,
        })
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            qubits: self.qubits,
            matrix: &self.matrix * c(factor),
        }
    }

    fn require_pair(&self) -> Result<()> {
        if self.qubits == 2 {
            Ok(())
        } else {
            Err(Error::InvalidState(format!(
                "Bell-basis projection needs 2 qubits, got {}",
                self.qubits
            )))
        }
    }

    /// Diagonal of the two-qubit state in the Bell basis.
    pub fn bell_coefficients(&self) -> Result<[f64; 4]> {
        self.require_pair()?;
        let vs = bell_vectors();
        let mut out = [0.0; 4];
        for (o, v) in out.iter_mut().zip(vs.iter()) {
            *o = (v.adjoint() * &self.matrix * v)[(0, 0)].re;
        }
        Ok(out)
    }

    /// Frobenius norm of the Bell-basis off-diagonal part.
    pub fn bell_offdiagonal_residual(&self) -> Result<f64> {
        self.require_pair()?;
        let twirled = self.bell_twirl()?;
        Ok((&self.matrix - &twirled.matrix).norm())
    }

    /// Keeps only the Bell-basis diagonal.
    pub fn bell_twirl(&self) -> Result<Self> {
        let coeffs = self.bell_coefficients()?;
        let mut m = CMatrix::zeros(4, 4);
        for (coef, v) in coeffs.iter().zip(bell_vectors()) {
            m += &v * v.adjoint() * c(*coef);
        }
        Ok(Self { qubits: 2, matrix: m })
    }

    /// Bell-diagonal projection as a validated state.
    pub fn to_bell_diagonal(&self) -> Result<BellDiagonal> {
        let [a, b, cc, d] = self.bell_coefficients()?;
        // clear rounding noise below zero before validation
        let clip = |x: f64| if x < 0.0 && x > -1e-14 { 0.0 } else { x };
        BellDiagonal::from_weights([clip(a), clip(b), clip(cc), clip(d)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TwoQubitGate {
    Cz,
    Cnot,
}

/// Placement of the dephasing-gate errors when the model is transferred from
/// CZ to CNOT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateErrorVariant {
    /// `Z ⊗ Z` errors before the gate.
    ZzBefore,
    /// `Z ⊗ Z` errors after the gate.
    ZzAfter,
    /// `Z` on control, `X` on target, before the gate.
    ZControlXTargetBefore,
    /// `Z` on control, `X` on target, after the gate.
    ZControlXTargetAfter,
}

impl GateErrorVariant {
    pub const ALL: [GateErrorVariant; 4] = [
        GateErrorVariant::ZzBefore,
        GateErrorVariant::ZzAfter,
        GateErrorVariant::ZControlXTargetBefore,
        GateErrorVariant::ZControlXTargetAfter,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            GateErrorVariant::ZzBefore => "zz_before",
            GateErrorVariant::ZzAfter => "zz_after",
            GateErrorVariant::ZControlXTargetBefore => "z_control_x_target_before",
            GateErrorVariant::ZControlXTargetAfter => "z_control_x_target_after",
        }
    }

    fn target_pauli_is_x(&self) -> bool {
        matches!(
            self,
            GateErrorVariant::ZControlXTargetBefore | GateErrorVariant::ZControlXTargetAfter
        )
    }

    fn errors_after_gate(&self) -> bool {
        matches!(
            self,
            GateErrorVariant::ZzAfter | GateErrorVariant::ZControlXTargetAfter
        )
    }
}

impl std::fmt::Display for GateErrorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Kept pair of one simulated purification round, before Bell projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PurificationRun {
    /// Normalized state of the surviving pair.
    pub kept: DensityMatrix,
    pub success_prob: f64,
}

/// Runs one round of the recurrence protocol on `s ⊗ s`.
///
/// Register order is `A1 B1 A2 B2`. Side A rotates with `+i`, side B with
/// `-i`, each side applies a noisy CNOT from pair 1 onto pair 2, both targets
/// are measured, and the run is kept when the outcomes agree.
pub fn run_purification_circuit(
    s: &BellDiagonal,
    q_g: f64,
    variant: GateErrorVariant,
) -> Result<PurificationRun> {
    let pair = DensityMatrix::from_bell_diagonal(s);
    let rho = pair.tensor(&pair)?;
    let ra = deutsch_rotation(1.0);
    let rb = deutsch_rotation(-1.0);
    let rho = rho.apply_local(&[(0, &ra), (1, &rb), (2, &ra), (3, &rb)])?;
    let rho = rho.apply_noisy_two_qubit_gate(0, 2, q_g, TwoQubitGate::Cnot, variant)?;
    let rho = rho.apply_noisy_two_qubit_gate(1, 3, q_g, TwoQubitGate::Cnot, variant)?;
    // checking the 16-dim state after every channel keeps the positivity
    // invariant honest
    rho.validate()?;

    let keep_00 = rho.project(&[(2, 0), (3, 0)])?.partial_trace(&[0, 1])?;
    let keep_11 = rho.project(&[(2, 1), (3, 1)])?.partial_trace(&[0, 1])?;
    let kept = DensityMatrix::combine(&[(1.0, &keep_00), (1.0, &keep_11)]);
    let success_prob = kept.trace();
    let kept = kept.scaled(1.0 / success_prob);
    kept.validate()?;
    Ok(PurificationRun { kept, success_prob })
}

/// Bell-diagonal shadow of one simulated purification round.
pub fn simulate_purification_round(
    s: &BellDiagonal,
    q_g: f64,
    variant: GateErrorVariant,
) -> Result<PurifyOutcome> {
    let run = run_purification_circuit(s, q_g, variant)?;
    Ok(PurifyOutcome {
        state: run.kept.to_bell_diagonal()?,
        success_prob: run.success_prob,
    })
}

/// Swaps two copies of `s` by a Bell measurement on the middle qubits.
///
/// Register `A B C D` holds pairs `AB` and `CD`. The measurement is a CNOT
/// from B onto C, then B in the X basis and C in the Z basis; outcome
/// `(m_x, m_z)` is undone with `X^{m_z} Z^{m_x}` on D. Outcomes are summed
/// exactly.
pub fn simulate_swapping(s: &BellDiagonal) -> Result<BellDiagonal> {
    let pair = DensityMatrix::from_bell_diagonal(s);
    let rho = pair.tensor(&pair)?;
    let rho = rho.apply_noisy_two_qubit_gate(
        1,
        2,
        0.0,
        TwoQubitGate::Cnot,
        GateErrorVariant::ZzBefore,
    )?;
    let h = hadamard();
    let rho = rho.apply_local(&[(1, &h)])?;
    let x = pauli_x();
    let z = pauli_z();
    let mut acc: Option<DensityMatrix> = None;
    for mx in 0..2 {
        for mz in 0..2 {
            let branch = rho.project(&[(1, mx), (2, mz)])?.partial_trace(&[0, 3])?;
            let mut correction = identity2();
            if mx == 1 {
                correction = &z * correction;
            }
            if mz == 1 {
                correction = &x * correction;
            }
            let fixed = branch.apply_local(&[(1, &correction)])?;
            acc = Some(match acc {
                None => fixed,
                Some(prev) => DensityMatrix::combine(&[(1.0, &prev), (1.0, &fixed)]),
            });
        }
    }
    let out = acc.expect("four branches");
    out.validate()?;
    out.to_bell_diagonal()
}

/// Sums `q^w (1 - q)^(n - w)` over every error pattern the code cannot
/// correct.
pub fn enumerate_logical_error(code: &CodeSpec, q_eff: f64) -> Result<f64> {
    let n = code.n();
    if n > MAX_ENUMERATION_QUBITS {
        return Err(Error::EnumerationTooLarge {
            n,
            limit: MAX_ENUMERATION_QUBITS,
        });
    }
    let t = code.correctable() as u32;
    let q = q_eff;
    let mut total = 0.0;
    for pattern in 0u32..(1u32 << n) {
        let w = pattern.count_ones();
        if w > t {
            total += q.powi(w as i32) * (1.0 - q).powi(n as i32 - w as i32);
        }
    }
    Ok(total)
}

/// Worst disagreement of one variant with the closed-form recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantDeviation {
    pub variant: GateErrorVariant,
    /// Over all samples, coefficients and success probability.
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub rows: Vec<VariantDeviation>,
    pub tolerance: f64,
}

impl VariantReport {
    /// Variants within tolerance.
    pub fn matching(&self) -> Vec<GateErrorVariant> {
        self.rows
            .iter()
            .filter(|r| r.max_deviation <= self.tolerance)
            .map(|r| r.variant)
            .collect()
    }

    pub fn best(&self) -> VariantDeviation {
        *self
            .rows
            .iter()
            .min_by(|a, b| a.max_deviation.total_cmp(&b.max_deviation))
            .expect("one row per variant")
    }
}

/// Compares every CNOT error placement against the exact one-round
/// recursion over the given `(state, q_g)` samples.
pub fn match_gate_variant(samples: &[(BellDiagonal, f64)]) -> Result<VariantReport> {
    if samples.is_empty() {
        return Err(Error::InvalidState("no samples to compare".into()));
    }
    let mut rows = Vec::with_capacity(GateErrorVariant::ALL.len());
    for variant in GateErrorVariant::ALL {
        let mut worst = 0.0f64;
        for (s, q) in samples {
            let sim = simulate_purification_round(s, *q, variant)?;
            let exact = bell::purify_imperfect_exact(s, *q);
            worst = worst
                .max(sim.state.max_abs_diff(&exact.state))
                .max((sim.success_prob - exact.success_prob).abs());
        }
        rows.push(VariantDeviation {
            variant,
            max_deviation: worst,
        });
    }
    Ok(VariantReport {
        rows,
        tolerance: VARIANT_MATCH_TOL,
    })
}

/// Uniform sample from the simplex of Bell-diagonal states.
pub fn sample_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonal {
    let w: [f64; 4] = std::array::from_fn(|_| Exp1.sample(rng));
    BellDiagonal::from_weights(w).expect("exponential draws are positive")
}

/// Closed-form logical error probability, re-exported next to its oracle.
pub fn closed_form_logical_error(code: &CodeSpec, q_eff: f64) -> f64 {
    codes::logical_error_prob(code, q_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bd(a: f64, b: f64, cc: f64, d: f64) -> BellDiagonal {
        BellDiagonal::new(a, b, cc, d).unwrap()
    }

    #[test]
    fn bell_state_roundtrip() {
        let s = bd(0.7, 0.1, 0.15, 0.05);
        let rho = DensityMatrix::from_bell_diagonal(&s);
        rho.validate().unwrap();
        assert!(rho.to_bell_diagonal().unwrap().max_abs_diff(&s) < 1e-15);
        assert!(rho.bell_offdiagonal_residual().unwrap() < 1e-15);
    }

    #[test]
    fn dephasing_examples() {
        let rho = DensityMatrix::from_bell_diagonal(&BellDiagonal::perfect());
        assert_eq!(rho.apply_dephasing(0, 0.0).unwrap(), rho);
        let half = rho.apply_dephasing(1, 0.5).unwrap();
        let s = half.to_bell_diagonal().unwrap();
        assert!(s.max_abs_diff(&bd(0.5, 0.5, 0.0, 0.0)) < 1e-15);

        // each half of |φ⁺⟩ dephased by q: φ⁺ weight (1-q)² + q², total flip 2q(1-q)
        let tau = 0.1;
        let t = 0.02;
        let q_half = crate::physics::memory_error_prob(t / 2.0, tau).unwrap();
        let q_full = crate::physics::memory_error_prob(t, tau).unwrap();
        let both = rho
            .apply_dephasing(0, q_half)
            .unwrap()
            .apply_dephasing(1, q_half)
            .unwrap();
        let s = both.to_bell_diagonal().unwrap();
        assert!((s.a() - (1.0 - q_full)).abs() < 1e-15);
        assert!((s.b() - q_full).abs() < 1e-15);
        assert!((2.0 * q_half * (1.0 - q_half) - q_full).abs() < 1e-15);
        assert!(matches!(
            rho.apply_dephasing(2, 0.1),
            Err(Error::QubitIndex { index: 2, qubits: 2 })
        ));
    }

    #[test]
    fn noisy_cz_on_plus_plus() {
        // |++⟩ through a noisy CZ; fidelity with the ideal output is
        // (1-q)² since every Z error maps the output to an orthogonal state
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = nalgebra::DVector::from_vec(vec![c(h), c(h)]);
        let pp = plus.kronecker(&plus);
        let rho = DensityMatrix::new(&pp * pp.adjoint()).unwrap();
        let q = 0.03;
        let noisy = rho
            .apply_noisy_two_qubit_gate(0, 1, q, TwoQubitGate::Cz, GateErrorVariant::ZzBefore)
            .unwrap();
        let ideal = rho
            .apply_noisy_two_qubit_gate(0, 1, 0.0, TwoQubitGate::Cz, GateErrorVariant::ZzBefore)
            .unwrap();
        noisy.validate().unwrap();
        let overlap = (noisy.matrix() * ideal.matrix()).trace().re;
        assert!((overlap - (1.0 - q) * (1.0 - q)).abs() < 1e-14);
        assert!(rho
            .apply_noisy_two_qubit_gate(0, 0, q, TwoQubitGate::Cz, GateErrorVariant::ZzBefore)
            .is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DensityMatrix::from_bell_diagonal(&bd(0.6, 0.2, 0.1, 0.1));
        let b = DensityMatrix::from_bell_diagonal(&bd(0.9, 0.05, 0.05, 0.0));
        let ab = a.tensor(&b).unwrap();
        let back = ab.partial_trace(&[2, 3]).unwrap();
        assert!((back.matrix() - b.matrix()).norm() < 1e-15);
        let front = ab.partial_trace(&[0, 1]).unwrap();
        assert!((front.matrix() - a.matrix()).norm() < 1e-15);
    }

    #[test]
    fn twirl_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sample_bell_diagonal(&mut rng);
        let run = run_purification_circuit(&s, 0.05, GateErrorVariant::ZzBefore).unwrap();
        let once = run.kept.bell_twirl().unwrap();
        let twice = once.bell_twirl().unwrap();
        assert!((once.matrix() - twice.matrix()).norm() < 1e-15);
    }

    #[test]
    fn noiseless_purification_matches_recursion() {
        let s = bd(0.9, 0.1, 0.0, 0.0);
        let sim = simulate_purification_round(&s, 0.0, GateErrorVariant::ZzBefore).unwrap();
        let ideal = bell::purify_ideal(&s);
        assert!(sim.state.max_abs_diff(&ideal.state) < 1e-12);
        assert!((sim.success_prob - 0.82).abs() < 1e-12);
        assert!((sim.state.a() - 0.98780).abs() < 5e-6);
    }

    #[test]
    fn noiseless_swapping_matches_recursion() {
        assert!(simulate_swapping(&BellDiagonal::perfect())
            .unwrap()
            .max_abs_diff(&BellDiagonal::perfect())
            < 1e-15);
        let s = simulate_swapping(&bd(0.9, 0.1, 0.0, 0.0)).unwrap();
        assert!(s.max_abs_diff(&bd(0.82, 0.18, 0.0, 0.0)) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = sample_bell_diagonal(&mut rng);
            let sim = simulate_swapping(&s).unwrap();
            assert!(sim.max_abs_diff(&bell::swap_ideal(&s)) < 1e-12);
        }
    }

    #[test]
    fn enumeration_examples() {
        let rep3 = CodeSpec::repetition(3).unwrap();
        assert!((enumerate_logical_error(&rep3, 0.1).unwrap() - 0.028).abs() < 1e-15);
        for code in crate::codes::code_catalog().into_iter().filter(|c| c.n() <= 15) {
            assert_eq!(enumerate_logical_error(&code, 0.0).unwrap(), 0.0);
        }
        let steane = CodeSpec::css(7, 3).unwrap();
        let e = enumerate_logical_error(&steane, 0.05).unwrap();
        assert!((e - closed_form_logical_error(&steane, 0.05)).abs() < 1e-12);
        let golay = CodeSpec::css(23, 7).unwrap();
        assert!(matches!(
            enumerate_logical_error(&golay, 0.1),
            Err(Error::EnumerationTooLarge { n: 23, .. })
        ));
    }

    #[test]
    fn variant_report_degenerate_and_adversarial() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zero: Vec<_> = (0..5).map(|_| (sample_bell_diagonal(&mut rng), 0.0)).collect();
        let report = match_gate_variant(&zero).unwrap();
        assert_eq!(report.matching().len(), 4);

        let hard: Vec<_> = (0..5).map(|_| (sample_bell_diagonal(&mut rng), 0.4)).collect();
        let report = match_gate_variant(&hard).unwrap();
        for row in &report.rows {
            if !report.matching().contains(&row.variant) {
                assert!(row.max_deviation > VARIANT_MATCH_TOL);
            }
        }
        assert!(report
            .rows
            .iter()
            .any(|r| r.max_deviation > VARIANT_MATCH_TOL));
        assert!(match_gate_variant(&[]).is_err());
    }
}
