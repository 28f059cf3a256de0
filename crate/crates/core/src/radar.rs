//! FMCW radar measurement model and estimators.
//!
//! Truth `(d, v, ψ)` is mapped to signal-space quantities (beat frequency,
//! Doppler phase shift across chirps, phase difference across array
//! elements), perturbed there with Gaussian noise, and mapped back by the
//! closed-form estimators. Radial velocity is positive when the agent recedes.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::AgentState;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    /// Chirp duration `T` (s).
    pub chirp_duration: f64,
    /// Sweep bandwidth `B` (Hz).
    pub sweep_bandwidth: f64,
    /// Carrier wavelength `λ` (m).
    pub wavelength: f64,
    /// Pulse repetition interval `T_s` (s).
    pub pulse_repetition: f64,
    /// Inter-element spacing `d` (m), at most `λ/2`.
    pub element_spacing: f64,
    /// Beat-frequency noise std-dev (Hz).
    pub beat_noise_hz: f64,
    /// Doppler phase noise std-dev (rad).
    pub doppler_noise_rad: f64,
    /// Inter-element phase noise std-dev (rad).
    pub phase_noise_rad: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        // B = 150 MHz gives c / 2B ≈ 1 m range resolution.
        Self {
            chirp_duration: 10e-6,
            sweep_bandwidth: 150e6,
            wavelength: 2e-3,
            pulse_repetition: 0.05e-3,
            element_spacing: 1e-3,
            beat_noise_hz: 2.0e3,
            doppler_noise_rad: 0.02,
            phase_noise_rad: 0.01,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radar.chirp_duration", self.chirp_duration),
            ("radar.sweep_bandwidth", self.sweep_bandwidth),
            ("radar.wavelength", self.wavelength),
            ("radar.pulse_repetition", self.pulse_repetition),
            ("radar.element_spacing", self.element_spacing),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.element_spacing > self.wavelength / 2.0 * (1.0 + 1e-12) {
            return Err(Error::config("radar.element_spacing", "must not exceed wavelength / 2"));
        }
        for (key, v) in [
            ("radar.beat_noise_hz", self.beat_noise_hz),
            ("radar.doppler_noise_rad", self.doppler_noise_rad),
            ("radar.phase_noise_rad", self.phase_noise_rad),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn noiseless(&self) -> Self {
        Self {
            beat_noise_hz: 0.0,
            doppler_noise_rad: 0.0,
            phase_noise_rad: 0.0,
            ..self.clone()
        }
    }
}

/// Estimated `(distance, radial velocity, angle)` for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarObservation {
    pub distance: f64,
    pub radial_velocity: f64,
    /// Angle from the array broadside, in `[−π/2, π/2]`.
    pub angle: f64,
}

pub fn beat_frequency_from_range(d: f64, cfg: &RadarConfig) -> f64 {
    2.0 * cfg.sweep_bandwidth * d / (SPEED_OF_LIGHT * cfg.chirp_duration)
}

pub fn estimate_range(f_beat: f64, cfg: &RadarConfig) -> f64 {
    SPEED_OF_LIGHT * cfg.chirp_duration * f_beat / (2.0 * cfg.sweep_bandwidth)
}

pub fn doppler_from_velocity(v: f64, cfg: &RadarConfig) -> f64 {
    4.0 * PI * cfg.pulse_repetition * v / cfg.wavelength
}

pub fn estimate_velocity(omega_doppler: f64, cfg: &RadarConfig) -> f64 {
    cfg.wavelength * omega_doppler / (4.0 * PI * cfg.pulse_repetition)
}

pub fn phase_from_angle(psi: f64, cfg: &RadarConfig) -> f64 {
    2.0 * PI * cfg.element_spacing * psi.sin() / cfg.wavelength
}

/// `ψ = asin(λω / 2πd)`; out-of-domain arguments are reported, not clamped.
pub fn estimate_angle(omega_phase: f64, cfg: &RadarConfig) -> Result<f64> {
    let argument = cfg.wavelength * omega_phase / (2.0 * PI * cfg.element_spacing);
    if !(-1.0..=1.0).contains(&argument) {
        return Err(Error::AngleDomain { argument });
    }
    Ok(argument.asin())
}

/// Exact geometry between a hovering UAV at `uav` (x, y, altitude) and an agent.
pub fn true_geometry(agent: &AgentState, uav: [f64; 3]) -> RadarObservation {
    let rel = [agent.position[0] - uav[0], agent.position[1] - uav[1], -uav[2]];
    let distance = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
    let radial_velocity = if distance > 0.0 {
        (rel[0] * agent.velocity[0] + rel[1] * agent.velocity[1]) / distance
    } else {
        0.0
    };
    let horizontal = rel[0].hypot(rel[1]);
    // horizontal ULA along y: sin ψ is the y direction cosine in the ground plane
    let angle = if horizontal > 0.0 {
        (rel[1] / horizontal).clamp(-1.0, 1.0).asin()
    } else {
        0.0
    };
    RadarObservation {
        distance,
        radial_velocity,
        angle,
    }
}

fn noisy<R: Rng + ?Sized>(value: f64, std: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    value + std * z
}

/// Full measurement cycle: geometry → signal model → noise → estimators.
///
/// Three normal deviates are always drawn so the stream stays aligned
/// whatever the noise levels are.
pub fn observe<R: Rng + ?Sized>(
    agent: &AgentState,
    uav: [f64; 3],
    cfg: &RadarConfig,
    rng: &mut R,
) -> Result<RadarObservation> {
    let truth = true_geometry(agent, uav);
    let f = noisy(beat_frequency_from_range(truth.distance, cfg), cfg.beat_noise_hz, rng);
    let w_d = noisy(doppler_from_velocity(truth.radial_velocity, cfg), cfg.doppler_noise_rad, rng);
    let w_p = noisy(phase_from_angle(truth.angle, cfg), cfg.phase_noise_rad, rng);
    Ok(RadarObservation {
        distance: estimate_range(f, cfg).max(0.0),
        radial_velocity: estimate_velocity(w_d, cfg),
        angle: estimate_angle(w_p, cfg)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};
    use crate::scenario::{ActivityClass, SemanticProfile, SemanticType};

    fn cfg() -> RadarConfig {
        RadarConfig::default()
    }

    fn agent(position: [f64; 2], velocity: [f64; 2]) -> AgentState {
        AgentState {
            id: 0,
            position,
            velocity,
            heading_true: 0.0,
            profile: SemanticProfile {
                sem: SemanticType::Car,
                act: ActivityClass::Walking,
            },
            los: true,
        }
    }

    #[test]
    fn range_examples() {
        let c = cfg();
        assert_eq!(beat_frequency_from_range(0.0, &c), 0.0);
        assert_eq!(estimate_range(0.0, &c), 0.0);
        // 2·150e6·10 / (c·10e-6) = 3e9 / (c·1e-5)
        let expected_f = 2.0 * 150e6 * 10.0 / (SPEED_OF_LIGHT * 10e-6);
        let f = beat_frequency_from_range(10.0, &c);
        assert!((f - expected_f).abs() / expected_f < 1e-15);
        assert!((f - 1.0e6).abs() / 1.0e6 < 1e-3, "≈1 MHz, got {f}");
        let d = estimate_range(1.0e6, &c);
        assert!((d - SPEED_OF_LIGHT / 3e7).abs() < 1e-12);
        assert!((d - 10.0).abs() < 0.01);
        assert!((estimate_range(f, &c) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_examples() {
        let c = cfg();
        assert_eq!(estimate_velocity(0.0, &c), 0.0);
        assert!((estimate_velocity(PI, &c) - 10.0).abs() < 1e-12);
        assert!(estimate_velocity(-0.3, &c) < 0.0);
        assert_eq!(estimate_velocity(-0.3, &c), -estimate_velocity(0.3, &c));
    }

    #[test]
    fn angle_examples() {
        let c = cfg();
        assert_eq!(estimate_angle(0.0, &c).unwrap(), 0.0);
        assert!((estimate_angle(PI, &c).unwrap() - PI / 2.0).abs() < 1e-12);
        let over = 2.0 * PI * c.element_spacing / c.wavelength * 1.5;
        assert!(matches!(estimate_angle(over, &c), Err(Error::AngleDomain { .. })));
    }

    #[test]
    fn noiseless_observation_is_exact() {
        let c = cfg().noiseless();
        let a = agent([120.0, 40.0], [3.0, -4.0]);
        let uav = [-50.0, 150.0, 120.0];
        let truth = true_geometry(&a, uav);
        let mut rng = rng::stream(1, Stream::Radar, 0);
        let obs = observe(&a, uav, &c, &mut rng).unwrap();
        assert!((obs.distance - truth.distance).abs() <= 1e-9 * truth.distance);
        assert!((obs.radial_velocity - truth.radial_velocity).abs() <= 1e-9 * truth.radial_velocity.abs());
        assert!((obs.angle - truth.angle).abs() <= 1e-9 * truth.angle.abs());
    }

    #[test]
    fn tangential_motion_below_uav_has_zero_radial_velocity() {
        let a = agent([0.0, 150.0], [0.0, 5.0]);
        let obs = true_geometry(&a, [0.0, 150.0, 120.0]);
        assert_eq!(obs.radial_velocity, 0.0);
        assert!((obs.distance - 120.0).abs() < 1e-12);
    }

    #[test]
    fn receding_is_positive() {
        let a = agent([100.0, 150.0], [2.0, 0.0]);
        assert!(true_geometry(&a, [0.0, 150.0, 120.0]).radial_velocity > 0.0);
    }

    #[test]
    fn fixed_seed_gives_identical_observations() {
        let a = agent([80.0, 220.0], [1.0, 1.0]);
        let uav = [-50.0, 150.0, 120.0];
        let run = || {
            let mut rng = rng::stream(5, Stream::Radar, 3);
            (0..10).map(|_| observe(&a, uav, &cfg(), &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn estimators_are_linear() {
        let c = cfg();
        for (x, y) in [(1.0e5, 4.0e5), (3.3e3, 7.1e6)] {
            let lhs = estimate_range(x + y, &c);
            assert!((lhs - estimate_range(x, &c) - estimate_range(y, &c)).abs() < 1e-9 * lhs);
            let ls = estimate_velocity(x * 1e-6 + y * 1e-6, &c);
            assert!((ls - estimate_velocity(x * 1e-6, &c) - estimate_velocity(y * 1e-6, &c)).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_bias_vanishes_under_zero_mean_noise() {
        let c = cfg();
        let a = agent([150.0, 120.0], [6.0, 2.0]);
        let uav = [-50.0, 150.0, 120.0];
        let truth = true_geometry(&a, uav);
        let n = 10_000;
        let mut rng = rng::stream(11, Stream::Radar, 0);
        let obs: Vec<_> = (0..n).map(|_| observe(&a, uav, &c, &mut rng).unwrap()).collect();
        let mean = |f: fn(&RadarObservation) -> f64| obs.iter().map(f).sum::<f64>() / n as f64;
        let band = |std: f64| 3.0 * std / (n as f64).sqrt();

        let d_std = estimate_range(c.beat_noise_hz, &c);
        assert!((mean(|o| o.distance) - truth.distance).abs() < band(d_std));
        let v_std = estimate_velocity(c.doppler_noise_rad, &c);
        assert!((mean(|o| o.radial_velocity) - truth.radial_velocity).abs() < band(v_std));
        // delta method: std(ψ) ≈ σ_phase · λ / (2πd cos ψ)
        let psi_std = c.phase_noise_rad * c.wavelength / (2.0 * PI * c.element_spacing * truth.angle.cos());
        assert!((mean(|o| o.angle) - truth.angle).abs() < band(psi_std) + 1e-6);
    }
}
