//! mmWave sparse geometric channels over a ULA, LTE flat fading, and the
//! SINR / achievable-rate laws for both radio access technologies.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Transmit antennas `M`.
    pub n_antennas: usize,
    /// Beam codebook size `|B|`.
    pub codebook_size: usize,
    /// Resolvable mmWave paths.
    pub n_paths: usize,
    /// Frame length in symbols.
    pub frame_length: usize,
    /// Pilot symbols per frame.
    pub pilot_count: usize,
    /// mmWave bandwidth (Hz).
    pub mmwave_bandwidth: f64,
    /// LTE bandwidth (Hz).
    pub lte_bandwidth: f64,
    /// LTE path-loss exponent `η`.
    pub path_loss_exponent: f64,
    /// LTE average gain at the reference distance.
    pub path_loss_ref: f64,
    /// Reference distance for the LTE path loss (m).
    pub reference_distance: f64,
    /// Receiver noise power `σ²` (normalised).
    pub noise_power: f64,
    /// Power factor applied to the geometric mmWave path when LoS is blocked.
    pub nlos_attenuation: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_antennas: 16,
            codebook_size: 16,
            n_paths: 3,
            frame_length: 140,
            pilot_count: 14,
            mmwave_bandwidth: 100e6,
            lte_bandwidth: 10e6,
            path_loss_exponent: 3.0,
            path_loss_ref: 3.0,
            reference_distance: 150.0,
            noise_power: 0.01,
            nlos_attenuation: 0.01,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("channel.n_antennas", self.n_antennas),
            ("channel.codebook_size", self.codebook_size),
            ("channel.n_paths", self.n_paths),
            ("channel.frame_length", self.frame_length),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.pilot_count >= self.frame_length {
            return Err(Error::config("channel.pilot_count", "must be smaller than frame_length"));
        }
        for (key, v) in [
            ("channel.mmwave_bandwidth", self.mmwave_bandwidth),
            ("channel.lte_bandwidth", self.lte_bandwidth),
            ("channel.path_loss_exponent", self.path_loss_exponent),
            ("channel.path_loss_ref", self.path_loss_ref),
            ("channel.reference_distance", self.reference_distance),
            ("channel.noise_power", self.noise_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&self.nlos_attenuation) {
            return Err(Error::config("channel.nlos_attenuation", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn pilot_overhead_factor(&self) -> f64 {
        1.0 - self.pilot_count as f64 / self.frame_length as f64
    }
}

/// Geometry of the shared ULA: wavelength and element spacing (m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub wavelength: f64,
    pub spacing: f64,
}

/// ULA response `a(φ)` with entries `exp(j 2π/λ · d · m · sin φ) / √M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub fn steering_vector(phi: f64, m: usize, array: ArrayGeometry) -> SteeringVector {
    let scale = 1.0 / (m as f64).sqrt();
    let k = 2.0 * PI / array.wavelength * array.spacing * phi.sin();
    SteeringVector(
        (0..m)
            .map(|i| Complex64::from_polar(scale, k * i as f64))
            .collect(),
    )
}

/// Beam codebook with angles at the bin centres of `[−π/2, π/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub angles: Vec<f64>,
    pub beams: Vec<SteeringVector>,
}

impl Codebook {
    pub fn uniform(size: usize, m: usize, array: ArrayGeometry) -> Self {
        let step = PI / size as f64;
        let angles: Vec<f64> = (0..size)
            .map(|b| -FRAC_PI_2 + (b as f64 + 0.5) * step)
            .collect();
        let beams = angles.iter().map(|&a| steering_vector(a, m, array)).collect();
        Self { angles, beams }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmWaveChannel {
    /// `(α_ℓ, φ_ℓ)` per path.
    pub paths: Vec<(Complex64, f64)>,
    /// `H = √(M/L) Σ α_ℓ a(φ_ℓ)`.
    pub vector: Vec<Complex64>,
}

impl MmWaveChannel {
    pub fn from_paths(paths: Vec<(Complex64, f64)>, m: usize, array: ArrayGeometry) -> Self {
        assert!(!paths.is_empty(), "a mmWave channel needs at least one path");
        let scale = (m as f64 / paths.len() as f64).sqrt();
        let mut vector = vec![Complex64::new(0.0, 0.0); m];
        for (alpha, phi) in &paths {
            let a = steering_vector(*phi, m, array);
            for (h, ai) in vector.iter_mut().zip(&a.0) {
                *h += scale * alpha * ai;
            }
        }
        Self { paths, vector }
    }

    pub fn n_antennas(&self) -> usize {
        self.vector.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vector.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|Hᴴ w|²`.
    pub fn gain(&self, w: &[Complex64]) -> f64 {
        self.vector
            .iter()
            .zip(w)
            .map(|(h, wi)| h.conj() * wi)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Zero-mean circular complex Gaussian with variance `var`.
pub fn circular_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws a sparse channel whose first path departs at `psi_geom`.
///
/// Remaining path angles are uniform on `[−π/2, π/2]`; gains are CN(0, 1),
/// with the geometric path scaled by `nlos_attenuation` (power) when blocked.
/// The draw count is fixed, so streams stay aligned across configurations.
pub fn sample_mmwave_channel<R: Rng + ?Sized>(
    psi_geom: f64,
    los: bool,
    cfg: &ChannelConfig,
    array: ArrayGeometry,
    rng: &mut R,
) -> MmWaveChannel {
    let mut paths = Vec::with_capacity(cfg.n_paths);
    for l in 0..cfg.n_paths {
        let mut alpha = circular_gaussian(1.0, rng);
        let u: f64 = rng.random();
        let phi = if l == 0 {
            if !los {
                alpha *= cfg.nlos_attenuation.sqrt();
            }
            psi_geom
        } else {
            -FRAC_PI_2 + PI * u
        };
        paths.push((alpha, phi));
    }
    MmWaveChannel::from_paths(paths, cfg.n_antennas, array)
}

/// `γ_n = |Hᴴw_n|² / (Σ_{i≠n} |Hᴴw_i|² + σ²)` over the supplied beams.
pub fn mmwave_sinr(
    target: &MmWaveChannel,
    beams: &[Vec<Complex64>],
    self_index: usize,
    noise_power: f64,
) -> Result<f64> {
    if !(noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {noise_power}")));
    }
    let m = target.n_antennas();
    for b in beams {
        if b.len() != m {
            return Err(Error::Dimension {
                what: "beamforming vector",
                expected: m,
                actual: b.len(),
            });
        }
    }
    let signal = target.gain(&beams[self_index]);
    let interference: f64 = beams
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != self_index)
        .map(|(_, w)| target.gain(w))
        .sum();
    Ok(signal / (interference + noise_power))
}

/// `R = B (1 − L_p/L) log2(1 + γ)`.
pub fn mmwave_rate(sinr: f64, bandwidth: f64, frame_length: usize, pilot_count: usize) -> f64 {
    debug_assert!(pilot_count < frame_length);
    bandwidth * (1.0 - pilot_count as f64 / frame_length as f64) * (1.0 + sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LteChannel {
    pub gain: Complex64,
    /// Average gain `σ_h²` from path loss.
    pub variance: f64,
}

pub fn lte_path_gain(distance: f64, cfg: &ChannelConfig) -> f64 {
    cfg.path_loss_ref * (distance / cfg.reference_distance).powf(-cfg.path_loss_exponent)
}

pub fn sample_lte_channel<R: Rng + ?Sized>(
    distance: f64,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<LteChannel> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("LTE distance must be positive, got {distance}")));
    }
    let variance = lte_path_gain(distance, cfg);
    Ok(LteChannel {
        gain: circular_gaussian(variance, rng),
        variance,
    })
}

/// LTE SINR and rate under orthogonal allocation (no inter-user interference).
pub fn lte_sinr_rate(gain: Complex64, power: f64, noise_power: f64, bandwidth: f64) -> (f64, f64) {
    let sinr = power * gain.norm_sqr() / noise_power;
    (sinr, bandwidth * (1.0 + sinr).log2())
}

pub fn combined_rate(mmwave: bool, rate_mm: f64, rate_lte: f64) -> f64 {
    if mmwave {
        rate_mm
    } else {
        rate_lte
    }
}

/// Radio access technology of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rat {
    MmWave,
    Lte,
}

impl Rat {
    pub fn from_flag(x: bool) -> Self {
        if x {
            Rat::MmWave
        } else {
            Rat::Lte
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rat::MmWave => "mmwave",
            Rat::Lte => "lte",
        }
    }
}

/// Per-agent link outcome for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub sinr: f64,
    pub rate: f64,
    pub rat: Rat,
    pub bandwidth: f64,
    pub power: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Stream};
    use proptest::prelude::*;

    const HALF_WAVE: ArrayGeometry = ArrayGeometry {
        wavelength: 2e-3,
        spacing: 1e-3,
    };

    #[test]
    fn broadside_steering_is_flat() {
        let a = steering_vector(0.0, 8, HALF_WAVE);
        for z in &a.0 {
            assert!((z.re - 1.0 / 8f64.sqrt()).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
    }

    #[test]
    fn endfire_two_element_vector() {
        let a = steering_vector(FRAC_PI_2, 2, HALF_WAVE);
        let s = 1.0 / 2f64.sqrt();
        assert!((a.0[0] - Complex64::new(s, 0.0)).norm() < 1e-15);
        assert!((a.0[1] - Complex64::new(-s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_unit_path_channel_is_all_ones() {
        let h = MmWaveChannel::from_paths(vec![(Complex64::new(1.0, 0.0), 0.0)], 16, HALF_WAVE);
        for z in &h.vector {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn channel_draw_is_reproducible() {
        let cfg = ChannelConfig::default();
        let a = sample_mmwave_channel(0.3, true, &cfg, HALF_WAVE, &mut rng::stream(1, Stream::Channel, 0));
        let b = sample_mmwave_channel(0.3, true, &cfg, HALF_WAVE, &mut rng::stream(1, Stream::Channel, 0));
        assert_eq!(a, b);
        assert_eq!(a.paths[0].1, 0.3);
        assert!(a.paths.iter().all(|(_, phi)| phi.abs() <= FRAC_PI_2));
    }

    #[test]
    fn mean_channel_energy_matches_antenna_count() {
        let cfg = ChannelConfig::default();
        let mut rng = rng::stream(2, Stream::Channel, 0);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_mmwave_channel(-0.4, true, &cfg, HALF_WAVE, &mut rng).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let m = cfg.n_antennas as f64;
        assert!((mean - m).abs() < 0.05 * m, "E|H|² = {mean}");
    }

    #[test]
    fn matched_beam_single_user_sinr_is_channel_energy() {
        let cfg = ChannelConfig::default();
        let h = sample_mmwave_channel(0.2, true, &cfg, HALF_WAVE, &mut rng::stream(3, Stream::Channel, 0));
        let norm = h.norm_sqr().sqrt();
        let w: Vec<Complex64> = h.vector.iter().map(|z| z / norm).collect();
        let g = mmwave_sinr(&h, &[w], 0, 1.0).unwrap();
        assert!((g - h.norm_sqr()).abs() < 1e-9 * h.norm_sqr());
    }

    #[test]
    fn orthogonal_beam_gives_zero_sinr() {
        // unit path at broadside: the alternating vector is orthogonal to all-ones
        let h = MmWaveChannel::from_paths(vec![(Complex64::new(1.0, 0.0), 0.0)], 4, HALF_WAVE);
        let w: Vec<Complex64> = (0..4).map(|i| Complex64::new(if i % 2 == 0 { 0.5 } else { -0.5 }, 0.0)).collect();
        assert!(mmwave_sinr(&h, &[w], 0, 1.0).unwrap().abs() < 1e-24);
    }

    #[test]
    fn identical_beams_interfere_fully() {
        let cfg = ChannelConfig::default();
        let h = sample_mmwave_channel(0.1, true, &cfg, HALF_WAVE, &mut rng::stream(4, Stream::Channel, 0));
        let w = steering_vector(0.1, cfg.n_antennas, HALF_WAVE).0;
        let s = h.gain(&w);
        let g = mmwave_sinr(&h, &[w.clone(), w], 0, 2.0).unwrap();
        assert!((g - s / (s + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn sinr_rejects_bad_noise_and_dimensions() {
        let h = MmWaveChannel::from_paths(vec![(Complex64::new(1.0, 0.0), 0.0)], 4, HALF_WAVE);
        let w = steering_vector(0.0, 4, HALF_WAVE).0;
        assert!(mmwave_sinr(&h, &[w.clone()], 0, 0.0).is_err());
        assert!(matches!(
            mmwave_sinr(&h, &[w, vec![Complex64::new(0.0, 0.0); 3]], 0, 1.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rate_examples() {
        assert_eq!(mmwave_rate(0.0, 1e6, 140, 14), 0.0);
        assert_eq!(mmwave_rate(1.0, 1.0, 140, 0), 1.0);
        assert!((mmwave_rate(15.0, 10e6, 140, 14) - 36e6).abs() < 1e-6);
    }

    #[test]
    fn lte_path_loss_examples() {
        let cfg = ChannelConfig {
            path_loss_exponent: 2.0,
            ..Default::default()
        };
        assert_eq!(lte_path_gain(cfg.reference_distance, &cfg), cfg.path_loss_ref);
        assert!((lte_path_gain(2.0 * cfg.reference_distance, &cfg) - cfg.path_loss_ref / 4.0).abs() < 1e-15);
        assert!(sample_lte_channel(0.0, &cfg, &mut rng::stream(0, Stream::Channel, 0)).is_err());
    }

    #[test]
    fn lte_mean_gain_matches_path_loss() {
        let cfg = ChannelConfig::default();
        let mut rng = rng::stream(5, Stream::Channel, 0);
        let n = 10_000;
        let d = 210.0;
        let var = lte_path_gain(d, &cfg);
        let mean = (0..n)
            .map(|_| sample_lte_channel(d, &cfg, &mut rng).unwrap().gain.norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - var).abs() < 0.05 * var);
    }

    #[test]
    fn lte_examples() {
        let g = Complex64::new(0.6, 0.8);
        assert_eq!(lte_sinr_rate(g, 0.0, 1.0, 5e6), (0.0, 0.0));
        let (s, r) = lte_sinr_rate(g, 2.0, 2.0, 5e6);
        assert!((s - 1.0).abs() < 1e-12 && (r - 5e6).abs() < 1e-6);
        let (s1, _) = lte_sinr_rate(g, 1.3, 1.0, 1.0);
        let (s2, _) = lte_sinr_rate(g, 2.6, 1.0, 1.0);
        assert_eq!(2.0 * s1, s2);
    }

    #[test]
    fn combined_rate_examples() {
        assert_eq!(combined_rate(true, 5.0, 2.0), 5.0);
        assert_eq!(combined_rate(false, 5.0, 2.0), 2.0);
        assert_eq!(combined_rate(false, 3.0, 3.0), combined_rate(true, 3.0, 3.0));
    }

    #[test]
    fn codebook_spans_half_plane() {
        let cb = Codebook::uniform(16, 16, HALF_WAVE);
        assert_eq!(cb.len(), 16);
        assert!(cb.angles.windows(2).all(|w| w[1] > w[0]));
        assert!(cb.angles[0] > -FRAC_PI_2 && cb.angles[15] < FRAC_PI_2);
        assert!((cb.angles[0] + cb.angles[15]).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn steering_vectors_are_unit_norm(phi in -FRAC_PI_2..FRAC_PI_2, m in 1usize..64) {
            prop_assert!((steering_vector(phi, m, HALF_WAVE).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sinr_invariant_under_common_phase(seed in 0u64..500, rot in 0.0..(2.0 * PI)) {
            let cfg = ChannelConfig::default();
            let mut rng = rng::stream(seed, Stream::Channel, 0);
            let h = sample_mmwave_channel(0.3, true, &cfg, HALF_WAVE, &mut rng);
            let beams: Vec<Vec<Complex64>> = [-0.5, 0.3, 0.9]
                .iter()
                .map(|&a| steering_vector(a, cfg.n_antennas, HALF_WAVE).0)
                .collect();
            let phase = Complex64::from_polar(1.0, rot);
            let rotated: Vec<Vec<Complex64>> = beams.iter().map(|b| b.iter().map(|z| z * phase).collect()).collect();
            let g0 = mmwave_sinr(&h, &beams, 1, 1.0).unwrap();
            let g1 = mmwave_sinr(&h, &rotated, 1, 1.0).unwrap();
            prop_assert!((g0 - g1).abs() <= 1e-9 * g0.max(1e-12));
        }

        #[test]
        fn rates_monotone(g1 in 0.0..1e3f64, dg in 0.0..1e3f64, lp in 0usize..139) {
            prop_assert!(mmwave_rate(g1 + dg, 1e6, 140, lp) >= mmwave_rate(g1, 1e6, 140, lp));
            prop_assert!(mmwave_rate(g1, 1e6, 140, lp + 1) <= mmwave_rate(g1, 1e6, 140, lp));
            let factor = 1.0 - lp as f64 / 140.0;
            prop_assert!(factor > 0.0 && factor <= 1.0);
        }
    }
}
