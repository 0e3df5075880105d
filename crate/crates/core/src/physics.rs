//! Physical parameter models: fiber transmittance, the initial pair fidelity
//! produced by the qubus, the USD success probability, and the dephasing
//! probabilities of lossy gates and finite-lifetime memories.
//!
//! Everything here is a closed-form function of its inputs.

use crate::error::{domain, Error, Result};

/// Attenuation length of standard telecom fiber (0.17 dB/km).
pub const DEFAULT_ATTENUATION_LENGTH_KM: f64 = 25.5;

/// Speed of light in fiber.
pub const DEFAULT_FIBER_SPEED_M_PER_S: f64 = 2.0e8;

/// Channel transmission `η = exp(-l / L_att)`.
pub fn transmittance(length_km: f64, attenuation_length_km: f64) -> Result<f64> {
    if !(attenuation_length_km > 0.0) {
        return Err(domain(
            "attenuation_length_km",
            attenuation_length_km,
            "must be positive",
        ));
    }
    if !(length_km >= 0.0) {
        return Err(domain("length_km", length_km, "must be non-negative"));
    }
    Ok((-length_km / attenuation_length_km).exp())
}

/// Fidelity of the pair heralded by a qubus of amplitude `alpha` that picked
/// up conditional rotations of `theta` and crossed a channel of transmission
/// `eta`.
pub fn initial_fidelity(alpha: f64, theta: f64, eta: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(domain("alpha", alpha, "qubus amplitude must be >= 0"));
    }
    check_transmission(eta)?;
    Ok(0.5 * (1.0 + (-(1.0 - eta) * alpha * alpha * (1.0 - theta.cos())).exp()))
}

/// Probability that unambiguous discrimination of the qubus heralds a pair
/// of fidelity `fidelity`, `P0 = 1 - (2F - 1)^(η / (1 - η))`.
///
/// This is the attainable upper bound and is used as the operating value.
pub fn success_probability(fidelity: f64, eta: f64) -> Result<f64> {
    if !(fidelity > 0.5 && fidelity <= 1.0) {
        return Err(domain("fidelity", fidelity, "must lie in (1/2, 1]"));
    }
    check_transmission(eta)?;
    if eta == 1.0 {
        return Err(Error::LosslessLimit);
    }
    let exponent = eta / (1.0 - eta);
    Ok(1.0 - (2.0 * fidelity - 1.0).powf(exponent))
}

/// Loss parameter `x = (π/2)(1 - T²) / (√T (1 + T))` of a gate with local
/// transmission `T`.
pub fn gate_loss_parameter(local_transmission: f64) -> Result<f64> {
    let t = local_transmission;
    if !(t > 0.0 && t <= 1.0) {
        return Err(domain("local_transmission", t, "must lie in (0, 1]"));
    }
    Ok(std::f64::consts::FRAC_PI_2 * (1.0 - t * t) / (t.sqrt() * (1.0 + t)))
}

/// Per-qubit Z-error probability of a lossy two-qubit gate,
/// `q_g = (1 - e^{-x}) / 2`.
pub fn gate_error_prob(local_transmission: f64) -> Result<f64> {
    let x = gate_loss_parameter(local_transmission)?;
    Ok(-0.5 * (-x).exp_m1())
}

/// Dephasing probability of a memory after `elapsed_s`,
/// `q_m(t) = (1 - e^{-t/τc}) / 2`. An infinite `coherence_s` is a perfect
/// memory.
pub fn memory_error_prob(elapsed_s: f64, coherence_s: f64) -> Result<f64> {
    if !(elapsed_s >= 0.0) {
        return Err(domain("elapsed_s", elapsed_s, "must be non-negative"));
    }
    if !(coherence_s > 0.0) {
        return Err(domain("memory_coherence_s", coherence_s, "must be positive"));
    }
    Ok(-0.5 * (-elapsed_s / coherence_s).exp_m1())
}

fn check_transmission(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(domain("eta", eta, "transmission must lie in (0, 1]"))
    }
}

/// Parameters of one elementary link and its qubus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub segment_length_km: f64,
    pub attenuation_length_km: f64,
    pub qubus_strength: f64,
    pub interaction_angle_rad: f64,
}

impl ChannelParams {
    pub fn new(
        segment_length_km: f64,
        attenuation_length_km: f64,
        qubus_strength: f64,
        interaction_angle_rad: f64,
    ) -> Result<Self> {
        if !(segment_length_km > 0.0) {
            return Err(domain("segment_length_km", segment_length_km, "must be positive"));
        }
        if !(attenuation_length_km > 0.0) {
            return Err(domain(
                "attenuation_length_km",
                attenuation_length_km,
                "must be positive",
            ));
        }
        if !(qubus_strength >= 0.0) {
            return Err(domain("qubus_strength", qubus_strength, "must be >= 0"));
        }
        if !(interaction_angle_rad > 0.0 && interaction_angle_rad < std::f64::consts::PI) {
            return Err(domain(
                "interaction_angle_rad",
                interaction_angle_rad,
                "must lie in (0, pi)",
            ));
        }
        Ok(Self {
            segment_length_km,
            attenuation_length_km,
            qubus_strength,
            interaction_angle_rad,
        })
    }

    pub fn transmittance(&self) -> f64 {
        (-self.segment_length_km / self.attenuation_length_km).exp()
    }

    pub fn initial_fidelity(&self) -> f64 {
        let eta = self.transmittance();
        0.5 * (1.0
            + (-(1.0 - eta)
                * self.qubus_strength
                * self.qubus_strength
                * (1.0 - self.interaction_angle_rad.cos()))
            .exp())
    }
}

/// Local hardware quality: gate transmission, memory lifetime, fiber speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareParams {
    pub local_transmission: f64,
    pub memory_coherence_s: f64,
    pub fiber_speed_m_per_s: f64,
}

impl HardwareParams {
    pub fn new(local_transmission: f64, memory_coherence_s: f64) -> Result<Self> {
        Self::with_fiber_speed(
            local_transmission,
            memory_coherence_s,
            DEFAULT_FIBER_SPEED_M_PER_S,
        )
    }

    pub fn with_fiber_speed(
        local_transmission: f64,
        memory_coherence_s: f64,
        fiber_speed_m_per_s: f64,
    ) -> Result<Self> {
        if !(local_transmission > 0.0 && local_transmission <= 1.0) {
            return Err(domain(
                "local_transmission",
                local_transmission,
                "must lie in (0, 1]",
            ));
        }
        if !(memory_coherence_s > 0.0) {
            return Err(domain("memory_coherence_s", memory_coherence_s, "must be positive"));
        }
        if !(fiber_speed_m_per_s > 0.0 && fiber_speed_m_per_s.is_finite()) {
            return Err(domain("fiber_speed_m_per_s", fiber_speed_m_per_s, "must be positive"));
        }
        Ok(Self {
            local_transmission,
            memory_coherence_s,
            fiber_speed_m_per_s,
        })
    }

    /// Lossless gates and memories that never dephase.
    pub fn perfect() -> Self {
        Self {
            local_transmission: 1.0,
            memory_coherence_s: f64::INFINITY,
            fiber_speed_m_per_s: DEFAULT_FIBER_SPEED_M_PER_S,
        }
    }

    pub fn gate_error_prob(&self) -> f64 {
        gate_error_prob(self.local_transmission).expect("validated at construction")
    }

    pub fn memory_error_prob(&self, elapsed_s: f64) -> Result<f64> {
        memory_error_prob(elapsed_s, self.memory_coherence_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn transmittance_values() {
        assert_eq!(transmittance(0.0, 25.5).unwrap(), 1.0);
        assert!(close(transmittance(20.0, 25.5).unwrap(), 0.45643, 5e-6));
        assert!(close(transmittance(25.5, 25.5).unwrap(), (-1.0f64).exp(), 1e-15));
        assert!(transmittance(1.0, 0.0).is_err());
        assert!(transmittance(1.0, -3.0).is_err());
    }

    #[test]
    fn initial_fidelity_values() {
        assert_eq!(initial_fidelity(0.0, 0.3, 0.5).unwrap(), 1.0);
        assert_eq!(initial_fidelity(4.0, 0.3, 1.0).unwrap(), 1.0);
        // alpha^2 (1 - cos theta) = 1
        let theta = std::f64::consts::FRAC_PI_2;
        let f = initial_fidelity(1.0, theta, 0.5).unwrap();
        assert!(close(f, 0.80327, 5e-6));
        assert!(close(f, (1.0 + (-0.5f64).exp()) / 2.0, 1e-15));
    }

    #[test]
    fn success_probability_values() {
        let eta = transmittance(20.0, 25.5).unwrap();
        let p = success_probability(0.95, eta).unwrap();
        assert!(close(eta / (1.0 - eta), 0.83970, 5e-6));
        assert!(close(p, 0.08467, 5e-6));
        assert_eq!(success_probability(1.0, eta).unwrap(), 0.0);
        let near_half = success_probability(0.5 + 1e-12, eta).unwrap();
        assert!(near_half > 0.999);
        assert_eq!(success_probability(0.9, 1.0), Err(Error::LosslessLimit));
        assert!(success_probability(0.5, eta).is_err());
    }

    #[test]
    fn gate_error_values() {
        assert_eq!(gate_error_prob(1.0).unwrap(), 0.0);
        assert!(close(gate_loss_parameter(0.999).unwrap(), 1.5716e-3, 5e-8));
        assert!(close(gate_error_prob(0.999).unwrap(), 7.852e-4, 5e-8));
        assert!(close(gate_error_prob(0.9999).unwrap(), 7.854e-5, 5e-9));
        assert!(gate_error_prob(0.0).is_err());
        assert!(gate_error_prob(1.5).is_err());
    }

    #[test]
    fn memory_error_values() {
        assert_eq!(memory_error_prob(0.0, 0.1).unwrap(), 0.0);
        assert!(close(memory_error_prob(0.1, 0.1).unwrap(), 0.31606, 5e-6));
        assert!(close(memory_error_prob(1e9, 0.1).unwrap(), 0.5, 1e-15));
        assert_eq!(memory_error_prob(5.0, f64::INFINITY).unwrap(), 0.0);
        assert!(memory_error_prob(-1.0, 0.1).is_err());
    }

    #[test]
    fn success_probability_decreasing_in_fidelity() {
        for i in 1..50 {
            let eta = i as f64 / 50.0;
            let mut prev = f64::INFINITY;
            for j in 1..=200 {
                let f = 0.5 + 0.5 * j as f64 / 200.0;
                let p = success_probability(f, eta).unwrap();
                assert!(p <= prev, "eta={eta} F={f}");
                prev = p;
            }
        }
    }

    #[test]
    fn channel_params_validation() {
        assert!(ChannelParams::new(20.0, 25.5, 10.0, 0.01).is_ok());
        assert!(ChannelParams::new(0.0, 25.5, 10.0, 0.01).is_err());
        assert!(ChannelParams::new(20.0, 25.5, -1.0, 0.01).is_err());
        assert!(ChannelParams::new(20.0, 25.5, 1.0, std::f64::consts::PI).is_err());
        assert!(HardwareParams::new(0.0, 1.0).is_err());
        assert!(HardwareParams::new(0.9, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn success_depends_on_channel_only_through_fidelity(
            alpha in 0.5f64..20.0,
            theta in 0.01f64..3.0,
            theta2 in 0.01f64..3.0,
            eta in 0.05f64..0.95,
        ) {
            // pick alpha2 so that alpha2^2 (1 - cos theta2) == alpha^2 (1 - cos theta)
            let product = alpha * alpha * (1.0 - theta.cos());
            let alpha2 = (product / (1.0 - theta2.cos())).sqrt();
            let f1 = initial_fidelity(alpha, theta, eta).unwrap();
            let f2 = initial_fidelity(alpha2, theta2, eta).unwrap();
            prop_assume!(f1 > 0.5 && f2 > 0.5 && f1 < 1.0);
            let p1 = success_probability(f1, eta).unwrap();
            let p2 = success_probability(f2, eta).unwrap();
            prop_assert!((p1 - p2).abs() <= 1e-9 * p1.max(1e-300).max(1.0));
        }

        #[test]
        fn error_probabilities_bounded(t in 1e-6f64..=1.0, elapsed in 0.0f64..1e4, tau in 1e-6f64..1e3) {
            let qg = gate_error_prob(t).unwrap();
            prop_assert!((0.0..=0.5).contains(&qg));
            if gate_loss_parameter(t).unwrap() < 30.0 { prop_assert!(qg < 0.5); }
            let qm = memory_error_prob(elapsed, tau).unwrap();
            prop_assert!((0.0..=0.5).contains(&qm));
            // rounds to exactly 1/2 once e^{-t/τ} drops below half an ulp of 1
            if elapsed / tau < 30.0 { prop_assert!(qm < 0.5); }
        }
    }
}
