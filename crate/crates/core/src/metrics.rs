//! Energy and perception efficiency, the ranging/velocity Cramér–Rao bounds
//! and the weighted utility.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest argument accepted by [`hyp1f1_half_one`]; beyond it `e^x` nears overflow.
pub const HYP1F1_MAX_ARG: f64 = 700.0;

/// `₁F₁(1/2; 1; x)` by its power series.
///
/// Terms follow `t_{k+1} = t_k · (k + 1/2) x / (k + 1)²` and summation stops
/// once a term drops below `1e-16` of the running sum. All terms are positive
/// for `x ≥ 0`, so there is no cancellation.
pub fn hyp1f1_half_one(x: f64) -> Result<f64> {
    if !(0.0..=HYP1F1_MAX_ARG).contains(&x) {
        return Err(Error::Domain(format!(
            "1F1(1/2;1;x) needs 0 <= x <= {HYP1F1_MAX_ARG}, got {x}"
        )));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        term *= (k + 0.5) * x / ((k + 1.0) * (k + 1.0));
        sum += term;
        k += 1.0;
        if term < 1e-16 * sum {
            break;
        }
    }
    Ok(sum)
}

/// Bound family selector for perception efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrbKind {
    Range,
    Velocity,
}

/// Perception-model constants that do not depend on the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Radar cross-section (m²).
    pub s_rcs: f64,
    /// Rice factor `K = A_s / σ₂²`.
    pub rice_factor: f64,
    /// Perception-channel scatter variance `σ₂²`.
    pub perception_variance: f64,
    /// Saturation constant `κ` in the perception efficiency.
    pub kappa: f64,
    pub lambda_ee: f64,
    pub lambda_pe: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            s_rcs: 100.0,
            rice_factor: 3.0,
            perception_variance: 1.0,
            kappa: 1e-4,
            lambda_ee: 0.5,
            lambda_pe: 0.5,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("metrics.s_rcs", self.s_rcs),
            ("metrics.rice_factor", self.rice_factor),
            ("metrics.perception_variance", self.perception_variance),
            ("metrics.kappa", self.kappa),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.rice_factor / 2.0 > HYP1F1_MAX_ARG {
            return Err(Error::config("metrics.rice_factor", "too large for the hypergeometric series"));
        }
        UtilityWeights::new(self.lambda_ee, self.lambda_pe).map_err(|_| {
            Error::config("metrics.lambda_ee", "lambda_ee and lambda_pe must lie in [0, 1] and sum to 1")
        })?;
        Ok(())
    }

    pub fn utility(&self) -> UtilityWeights {
        UtilityWeights {
            ee: self.lambda_ee,
            pe: self.lambda_pe,
        }
    }

    /// Sensing constants for a link of bandwidth `bandwidth`.
    pub fn sensing(&self, wavelength: f64, pulse_repetition: f64, pilot_count: usize, bandwidth: f64) -> SensingParams {
        SensingParams {
            light_speed: crate::SPEED_OF_LIGHT,
            wavelength,
            s_rcs: self.s_rcs,
            rice_factor: self.rice_factor,
            perception_variance: self.perception_variance,
            bandwidth,
            pulse_repetition,
            pilot_count,
            kappa: self.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingParams {
    pub light_speed: f64,
    pub wavelength: f64,
    pub s_rcs: f64,
    pub rice_factor: f64,
    /// `σ₂²`.
    pub perception_variance: f64,
    /// Link bandwidth `B_n`; the rms bandwidth is derived from it.
    pub bandwidth: f64,
    pub pulse_repetition: f64,
    pub pilot_count: usize,
    pub kappa: f64,
}

impl SensingParams {
    /// Main-path strength `A_s = K σ₂²`.
    pub fn main_path_strength(&self) -> f64 {
        self.rice_factor * self.perception_variance
    }

    /// `B_rms = √12 · B_n`.
    pub fn rms_bandwidth(&self) -> f64 {
        12f64.sqrt() * self.bandwidth
    }

    /// `e^{−x} ₁F₁(1/2; 1; x)` with `x = A_s / (2σ₂²)`.
    fn rician_factor(&self) -> Result<f64> {
        let x = self.main_path_strength() / (2.0 * self.perception_variance);
        Ok((-x).exp() * hyp1f1_half_one(x)?)
    }

    fn common_denominator(&self, sinr: f64) -> f64 {
        (2.0 * self.perception_variance).sqrt() * PI.powf(1.5) * sinr * self.s_rcs
    }
}

fn check_inputs(sinr: f64, sp: &SensingParams) -> Result<()> {
    if !(sinr > 0.0) {
        return Err(Error::Domain(format!("CRB needs a positive SINR, got {sinr}")));
    }
    if sp.pilot_count == 0 {
        return Err(Error::Domain("CRB needs at least one pilot symbol".into()));
    }
    Ok(())
}

/// Ranging bound (m²).
pub fn crb_range(sinr: f64, sp: &SensingParams) -> Result<f64> {
    check_inputs(sinr, sp)?;
    let b = sp.rms_bandwidth();
    let num = sp.light_speed * sp.light_speed * sp.rician_factor()?;
    Ok(num / (8.0 * sp.common_denominator(sinr) * b * b) / sp.pilot_count as f64)
}

/// Velocity bound ((m/s)²).
pub fn crb_velocity(sinr: f64, sp: &SensingParams) -> Result<f64> {
    check_inputs(sinr, sp)?;
    let lp = sp.pilot_count as f64;
    let num = 6.0 * sp.wavelength * sp.wavelength * sp.rician_factor()?;
    let ts = sp.pulse_repetition;
    Ok(num / (32.0 * sp.common_denominator(sinr) * ts * ts) / (lp * (lp + 1.0) * (2.0 * lp + 1.0)))
}

pub fn crb(kind: CrbKind, sinr: f64, sp: &SensingParams) -> Result<f64> {
    match kind {
        CrbKind::Range => crb_range(sinr, sp),
        CrbKind::Velocity => crb_velocity(sinr, sp),
    }
}

/// `Σ R_n / Σ p_n B_n`.
pub fn energy_efficiency(rates: &[f64], powers: &[f64], bandwidths: &[f64]) -> Result<f64> {
    for (what, len) in [("power list", powers.len()), ("bandwidth list", bandwidths.len())] {
        if len != rates.len() {
            return Err(Error::Dimension {
                what,
                expected: rates.len(),
                actual: len,
            });
        }
    }
    let denom: f64 = powers.iter().zip(bandwidths).map(|(p, b)| p * b).sum();
    if !(denom > 0.0) {
        return Err(Error::Domain("energy efficiency needs positive total power-bandwidth".into()));
    }
    Ok(rates.iter().sum::<f64>() / denom)
}

/// One agent's contribution `R / (κ + CRB(γ))`.
pub fn perception_term(rate: f64, sinr: f64, sp: &SensingParams, kind: CrbKind) -> Result<f64> {
    Ok(rate / (sp.kappa + crb(kind, sinr, sp)?))
}

/// `Σ_n R_n / (κ + CRB(γ_n))`, with per-agent sensing parameters.
pub fn perception_efficiency(rates: &[f64], sinrs: &[f64], sp: &[SensingParams], kind: CrbKind) -> Result<f64> {
    for (what, len) in [("SINR list", sinrs.len()), ("sensing parameter list", sp.len())] {
        if len != rates.len() {
            return Err(Error::Dimension {
                what,
                expected: rates.len(),
                actual: len,
            });
        }
    }
    rates
        .iter()
        .zip(sinrs)
        .zip(sp)
        .map(|((r, g), s)| perception_term(*r, *g, s, kind))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    pub ee: f64,
    pub pe: f64,
}

impl UtilityWeights {
    pub fn new(ee: f64, pe: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&ee) && (0.0..=1.0).contains(&pe) && (ee + pe - 1.0).abs() <= 1e-12;
        if ok {
            Ok(Self { ee, pe })
        } else {
            Err(Error::Domain(format!("utility weights ({ee}, {pe}) must lie in [0, 1] and sum to 1")))
        }
    }
}

pub fn objective(ee: f64, pe_d: f64, pe_v: f64, w: UtilityWeights) -> f64 {
    w.ee * ee + w.pe * (pe_d + pe_v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `e^{x/2} I₀(x/2)` with the modified Bessel series summed to convergence.
    fn bessel_oracle(x: f64) -> f64 {
        let y = x / 2.0;
        let q = y * y / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..400 {
            term *= q / (k as f64 * k as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        y.exp() * sum
    }

    fn unit_params() -> SensingParams {
        // √12·B = 1 so B_rms = 1
        SensingParams {
            light_speed: 1.0,
            wavelength: 1.0,
            s_rcs: 1.0,
            rice_factor: 1.0,
            perception_variance: 1.0,
            bandwidth: 1.0 / 12f64.sqrt(),
            pulse_repetition: 1.0,
            pilot_count: 1,
            kappa: 1.0,
        }
    }

    #[test]
    fn hyp1f1_pinned_values() {
        assert_eq!(hyp1f1_half_one(0.0).unwrap(), 1.0);
        let one = hyp1f1_half_one(1.0).unwrap();
        assert!((one - 1.7533876543770904).abs() < 1e-14, "{one}");
        let ten = hyp1f1_half_one(10.0).unwrap();
        assert!((ten / 4042.755430890400259 - 1.0).abs() < 1e-12);
        assert!((ten / bessel_oracle(10.0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hyp1f1_guard() {
        assert!(hyp1f1_half_one(-1e-3).is_err());
        assert!(hyp1f1_half_one(700.5).is_err());
        assert!(hyp1f1_half_one(f64::NAN).is_err());
        assert!(hyp1f1_half_one(700.0).unwrap().is_finite());
    }

    #[test]
    fn crb_pinned_values() {
        // A_s / (2 σ₂²) = 0.5 with every other constant at 1
        let sp = unit_params();
        let d = crb_range(1.0, &sp).unwrap();
        assert!((d / 0.012556138927658950 - 1.0).abs() < 1e-12, "{d}");
        let v = crb_velocity(1.0, &sp).unwrap();
        assert!((v / 0.0031390347319147376 - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn crb_scales_with_sinr_and_pilots() {
        let sp = unit_params();
        assert!((crb_range(1.0, &sp).unwrap() / crb_range(2.0, &sp).unwrap() - 2.0).abs() < 1e-14);
        assert!((crb_velocity(3.0, &sp).unwrap() / crb_velocity(6.0, &sp).unwrap() - 2.0).abs() < 1e-14);
        let sp2 = SensingParams {
            pilot_count: 2,
            ..unit_params()
        };
        assert!((crb_velocity(1.0, &sp).unwrap() / crb_velocity(1.0, &sp2).unwrap() - 5.0).abs() < 1e-12);
        assert!((crb_range(1.0, &sp).unwrap() / crb_range(1.0, &sp2).unwrap() - 2.0).abs() < 1e-14);
        assert!(crb_range(0.0, &sp).is_err());
        assert!(crb_velocity(-1.0, &sp).is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(energy_efficiency(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(energy_efficiency(&[10.0], &[2.0], &[1.0]).unwrap(), 5.0);
        let a = energy_efficiency(&[3.0, 4.0], &[1.0, 2.0], &[5.0, 5.0]).unwrap();
        let b = energy_efficiency(&[3.0, 4.0], &[2.0, 4.0], &[5.0, 5.0]).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!(energy_efficiency(&[1.0], &[0.0], &[1.0]).is_err());
        assert!(energy_efficiency(&[1.0], &[1.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn perception_examples() {
        let sp = vec![unit_params(); 2];
        assert_eq!(perception_efficiency(&[0.0, 0.0], &[1.0, 2.0], &sp, CrbKind::Range).unwrap(), 0.0);
        let single = perception_efficiency(&[3.0], &[1.0], &sp[..1], CrbKind::Range).unwrap();
        assert!((single - 3.0 / (1.0 + 0.012556138927658950)).abs() < 1e-12);
        let big = SensingParams {
            kappa: 1e12,
            ..unit_params()
        };
        let pe = perception_efficiency(&[5.0], &[1.0], &[big], CrbKind::Velocity).unwrap();
        assert!(pe < 1e-11);
        assert!(perception_efficiency(&[1.0], &[0.0], &sp[..1], CrbKind::Range).is_err());
    }

    #[test]
    fn objective_examples() {
        let only_ee = UtilityWeights::new(1.0, 0.0).unwrap();
        assert_eq!(objective(2.0, 3.0, 4.0, only_ee), 2.0);
        assert_eq!(objective(2.0, 3.0, 4.0, UtilityWeights::new(0.0, 1.0).unwrap()), 7.0);
        assert_eq!(objective(2.0, 1.5, 2.5, UtilityWeights::new(0.5, 0.5).unwrap()), 3.0);
        assert!(UtilityWeights::new(0.6, 0.6).is_err());
    }

    #[test]
    fn rms_bandwidth_follows_link_bandwidth() {
        let sp = MetricsConfig::default().sensing(2e-3, 0.05e-3, 14, 100e6);
        assert!((sp.rms_bandwidth() - 12f64.sqrt() * 100e6).abs() < 1e-3);
        assert!((sp.main_path_strength() - 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn hyp1f1_matches_bessel_identity(x in 0.0..50.0f64) {
            let f = hyp1f1_half_one(x).unwrap();
            prop_assert!(f >= 1.0);
            prop_assert!((f / bessel_oracle(x) - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn crb_strictly_decreasing(g in 1e-3..1e3f64, dg in 1e-3..10.0f64, lp in 1usize..64) {
            let sp = MetricsConfig::default().sensing(2e-3, 0.05e-3, lp, 100e6);
            let sp1 = SensingParams { pilot_count: lp + 1, ..sp.clone() };
            prop_assert!(crb_range(g + dg, &sp).unwrap() < crb_range(g, &sp).unwrap());
            prop_assert!(crb_velocity(g + dg, &sp).unwrap() < crb_velocity(g, &sp).unwrap());
            prop_assert!(crb_range(g, &sp1).unwrap() < crb_range(g, &sp).unwrap());
            prop_assert!(crb_velocity(g, &sp1).unwrap() < crb_velocity(g, &sp).unwrap());
        }

        #[test]
        fn perception_monotone(r in 0.0..1e6f64, dr in 0.0..1e6f64, g in 0.01..100.0f64, dg in 0.0..100.0f64) {
            let sp = MetricsConfig::default().sensing(2e-3, 0.05e-3, 14, 10e6);
            let base = perception_term(r, g, &sp, CrbKind::Range).unwrap();
            prop_assert!(perception_term(r + dr, g, &sp, CrbKind::Range).unwrap() >= base);
            // higher SINR lowers the bound
            prop_assert!(perception_term(r, g + dg, &sp, CrbKind::Range).unwrap() >= base);
        }

        #[test]
        fn ee_inverse_homogeneous(c in 0.01..100.0f64, p in proptest::collection::vec(0.01..10.0f64, 1..8)) {
            let rates: Vec<f64> = (0..p.len()).map(|i| i as f64 + 1.0).collect();
            let bw = vec![1e6; p.len()];
            let scaled: Vec<f64> = p.iter().map(|x| x * c).collect();
            let a = energy_efficiency(&rates, &p, &bw).unwrap();
            let b = energy_efficiency(&rates, &scaled, &bw).unwrap();
            prop_assert!((a / (c * b) - 1.0).abs() < 1e-12);
        }
    }
}
