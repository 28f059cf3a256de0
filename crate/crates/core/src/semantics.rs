//! Semantic tokens, heading-prior beam selection and the risk heatmap.
//!
//! The vision stack is represented by a token synthesizer whose fidelity is
//! a pair of noise knobs: the type/activity confusion probability and the
//! heading noise.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::RadarObservation;
use crate::scenario::{wrap_angle, ActivityClass, AgentState, OcclusionGrid, SemanticType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenFidelity {
    /// Probability that the type (and, independently, the activity) is confused.
    pub semantic_noise: f64,
    /// Heading noise std-dev (rad).
    pub heading_noise: f64,
}

impl TokenFidelity {
    pub fn new(semantic_noise: f64, heading_noise: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&semantic_noise) {
            return Err(Error::Domain(format!("semantic noise {semantic_noise} outside [0, 1]")));
        }
        if !(heading_noise >= 0.0 && heading_noise.is_finite()) {
            return Err(Error::Domain(format!("heading noise {heading_noise} must be >= 0")));
        }
        Ok(Self {
            semantic_noise,
            heading_noise,
        })
    }

    pub const fn exact() -> Self {
        Self {
            semantic_noise: 0.0,
            heading_noise: 0.0,
        }
    }

    fn preset(semantic_noise: f64, heading_deg: f64) -> Self {
        Self {
            semantic_noise,
            heading_noise: heading_deg.to_radians(),
        }
    }

    pub fn dediff_copilot() -> Self {
        Self::preset(0.05, 5.0)
    }

    pub fn dediff_stable_xl() -> Self {
        Self::preset(0.08, 8.0)
    }

    pub fn chatgpt() -> Self {
        Self::preset(0.15, 12.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemanticToken {
    pub sem_hat: SemanticType,
    pub act_hat: ActivityClass,
    /// Visual heading estimate in `[0, 2π)`.
    pub heading_hat: f64,
    pub confidence: f64,
}

impl SemanticToken {
    pub fn exact(agent: &AgentState) -> Self {
        Self {
            sem_hat: agent.profile.sem,
            act_hat: agent.profile.act,
            heading_hat: agent.heading_true,
            confidence: 1.0,
        }
    }
}

/// Index in `0..count` with `truth` removed, driven by `k ∈ [0, 1)`.
fn confuse(truth: usize, count: usize, k: f64) -> usize {
    let j = ((k * (count - 1) as f64) as usize).min(count - 2);
    if j >= truth {
        j + 1
    } else {
        j
    }
}

/// Emits a noisy token for `agent`.
///
/// Five deviates are drawn regardless of the fidelity, so different
/// fidelities evaluated on one stream see the same underlying randomness.
pub fn synthesize_token<R: Rng + ?Sized>(
    agent: &AgentState,
    fidelity: TokenFidelity,
    rng: &mut R,
) -> SemanticToken {
    let u_sem: f64 = rng.random();
    let k_sem: f64 = rng.random();
    let u_act: f64 = rng.random();
    let k_act: f64 = rng.random();
    let z: f64 = StandardNormal.sample(rng);
    let eps = fidelity.semantic_noise;
    let sem_hat = if u_sem < eps {
        SemanticType::ALL[confuse(agent.profile.sem.index(), SemanticType::COUNT, k_sem)]
    } else {
        agent.profile.sem
    };
    let act_hat = if u_act < eps {
        ActivityClass::ALL[confuse(agent.profile.act.index(), ActivityClass::COUNT, k_act)]
    } else {
        agent.profile.act
    };
    SemanticToken {
        sem_hat,
        act_hat,
        heading_hat: wrap_angle(agent.heading_true + fidelity.heading_noise * z),
        confidence: 1.0 - eps,
    }
}

/// Folds a heading onto the array's forward half-plane (`cos > 0`).
///
/// A heading only fixes the agent's axis of travel; an agent walking back
/// towards the UAV still sits along the same bearing.
pub fn forward_axis(theta: f64) -> f64 {
    let t = if theta.cos() < 0.0 { theta + PI } else { theta };
    (t + PI).rem_euclid(TAU) - PI
}

/// `argmax_b cos(θ_b − θ_vis)`, lowest index on ties.
pub fn select_beam_prior(theta_vis: f64, angles: &[f64]) -> usize {
    assert!(!angles.is_empty(), "codebook must be non-empty");
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (b, theta_b) in angles.iter().enumerate() {
        let score = (theta_b - theta_vis).cos();
        // scores within rounding of each other count as a tie
        if score > best_score + 1e-12 {
            best = b;
            best_score = score;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    /// Heatmap cell edge (m); must tile the arena.
    pub cell_size: f64,
    pub w_density: f64,
    pub w_motion: f64,
    pub w_occlusion: f64,
    pub w_dispersion: f64,
    /// Gaussian smoothing std-dev in cells.
    pub smoothing_sigma: f64,
    /// Radial speed mapped to a motion score of 1 (m/s).
    pub speed_norm: f64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            cell_size: 10.0,
            w_density: 0.4,
            w_motion: 0.3,
            w_occlusion: 0.2,
            w_dispersion: 0.1,
            smoothing_sigma: 2.0,
            speed_norm: 14.0,
        }
    }
}

impl HeatmapConfig {
    pub fn weights(&self) -> [f64; 4] {
        [self.w_density, self.w_motion, self.w_occlusion, self.w_dispersion]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights();
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::config("semantics.w_*", "heatmap weights must be non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("semantics.w_*", format!("heatmap weights sum to {sum}, expected 1")));
        }
        if !(self.cell_size > 0.0) {
            return Err(Error::config("semantics.cell_size", "must be positive"));
        }
        if !(self.smoothing_sigma >= 0.0) {
            return Err(Error::config("semantics.smoothing_sigma", "must be >= 0"));
        }
        if !(self.speed_norm > 0.0) {
            return Err(Error::config("semantics.speed_norm", "must be positive"));
        }
        Ok(())
    }

    /// Checks that the cells tile an arena exactly.
    pub fn validate_arena(&self, arena: [f64; 2]) -> Result<()> {
        for extent in arena {
            let n = extent / self.cell_size;
            if (n - n.round()).abs() > 1e-9 || n.round() < 1.0 {
                return Err(Error::config(
                    "semantics.cell_size",
                    format!("{} m cells do not tile a {extent} m arena side", self.cell_size),
                ));
            }
        }
        Ok(())
    }
}

/// Per-cell risk scores in `[0, 1]`, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskHeatmap {
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    pub values: Vec<f64>,
}

impl RiskHeatmap {
    pub fn filled(nx: usize, ny: usize, cell_size: f64, value: f64) -> Self {
        Self {
            nx,
            ny,
            cell_size,
            values: vec![value; nx * ny],
        }
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.nx + ix] = v;
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            (ix as f64 + 0.5) * self.cell_size,
            (iy as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.cell_size, self.ny as f64 * self.cell_size]
    }

    fn cell_index(&self, p: [f64; 2]) -> (usize, usize) {
        let ix = ((p[0] / self.cell_size) as usize).min(self.nx - 1);
        let iy = ((p[1] / self.cell_size) as usize).min(self.ny - 1);
        (ix, iy)
    }

    /// Bilinear interpolation between cell centres, held constant beyond
    /// the outermost centres.
    pub fn risk_at(&self, p: [f64; 2]) -> Result<f64> {
        let [w, h] = self.extent();
        if !(p[0] >= 0.0 && p[0] <= w && p[1] >= 0.0 && p[1] <= h) {
            return Err(Error::Domain(format!(
                "position ({}, {}) outside the {w} x {h} m arena",
                p[0], p[1]
            )));
        }
        let axis = |coord: f64, n: usize| -> (usize, usize, f64) {
            let u = (coord / self.cell_size - 0.5).clamp(0.0, (n - 1) as f64);
            let i0 = (u.floor() as usize).min(n - 1);
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, u - i0 as f64)
        };
        let (x0, x1, tx) = axis(p[0], self.nx);
        let (y0, y1, ty) = axis(p[1], self.ny);
        let bottom = self.get(x0, y0) * (1.0 - tx) + self.get(x1, y0) * tx;
        let top = self.get(x0, y1) * (1.0 - tx) + self.get(x1, y1) * tx;
        Ok(bottom * (1.0 - ty) + top * ty)
    }
}

/// Separable Gaussian blur with per-pixel kernel renormalisation at the edges.
fn gaussian_smooth(values: &[f64], nx: usize, ny: usize, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let pass = |src: &[f64], along_x: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for iy in 0..ny {
            for ix in 0..nx {
                let (pos, len) = if along_x { (ix, nx) } else { (iy, ny) };
                let mut acc = 0.0;
                let mut norm = 0.0;
                for (kk, w) in kernel.iter().enumerate() {
                    let j = pos as isize + kk as isize - radius;
                    if j < 0 || j >= len as isize {
                        continue;
                    }
                    let j = j as usize;
                    let idx = if along_x { iy * nx + j } else { j * nx + ix };
                    acc += w * src[idx];
                    norm += w;
                }
                out[iy * nx + ix] = acc / norm;
            }
        }
        out
    };
    pass(&pass(values, true), false)
}

/// Fuses density, motion, occlusion and heading dispersion into a risk grid.
///
/// Per cell: density is the agent count over the busiest cell's count,
/// motion is the mean radar radial speed over `speed_norm` (clipped), the
/// occlusion indicator is read at the cell centre, and dispersion is
/// `1 − |mean unit heading|` over the tokens in the cell.
pub fn build_heatmap(
    agents: &[AgentState],
    tokens: &[SemanticToken],
    radar: &[RadarObservation],
    occlusion: &OcclusionGrid,
    arena: [f64; 2],
    cfg: &HeatmapConfig,
) -> Result<RiskHeatmap> {
    cfg.validate()?;
    cfg.validate_arena(arena)?;
    for (what, len) in [("token list", tokens.len()), ("radar list", radar.len())] {
        if len != agents.len() {
            return Err(Error::Dimension {
                what,
                expected: agents.len(),
                actual: len,
            });
        }
    }
    let nx = (arena[0] / cfg.cell_size).round() as usize;
    let ny = (arena[1] / cfg.cell_size).round() as usize;
    let mut map = RiskHeatmap::filled(nx, ny, cfg.cell_size, 0.0);
    let cells = nx * ny;
    let mut count = vec![0usize; cells];
    let mut speed = vec![0.0; cells];
    let mut hx = vec![0.0; cells];
    let mut hy = vec![0.0; cells];
    for ((agent, token), obs) in agents.iter().zip(tokens).zip(radar) {
        let (ix, iy) = map.cell_index(agent.position);
        let c = iy * nx + ix;
        count[c] += 1;
        speed[c] += obs.radial_velocity.abs();
        hx[c] += token.heading_hat.cos();
        hy[c] += token.heading_hat.sin();
    }
    let max_count = count.iter().copied().max().unwrap_or(0);
    let [wd, wm, wo, wh] = cfg.weights();
    let mut raw = vec![0.0; cells];
    for iy in 0..ny {
        for ix in 0..nx {
            let c = iy * nx + ix;
            let occluded = if occlusion.is_occluded_at(map.cell_center(ix, iy)) {
                1.0
            } else {
                0.0
            };
            let mut r = wo * occluded;
            if count[c] > 0 {
                let n = count[c] as f64;
                let density = n / max_count as f64;
                let motion = (speed[c] / n / cfg.speed_norm).min(1.0);
                let dispersion = (1.0 - hx[c].hypot(hy[c]) / n).clamp(0.0, 1.0);
                r += wd * density + wm * motion + wh * dispersion;
            }
            raw[c] = r;
        }
    }
    map.values = gaussian_smooth(&raw, nx, ny, cfg.smoothing_sigma)
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    Ok(map)
}

/// Dense grid rows `(ix, iy, x_center, y_center, risk)` for CSV export.
pub fn heatmap_rows(map: &RiskHeatmap) -> Vec<(usize, usize, f64, f64, f64)> {
    let mut rows = Vec::with_capacity(map.values.len());
    for iy in 0..map.ny {
        for ix in 0..map.nx {
            let [x, y] = map.cell_center(ix, iy);
            rows.push((ix, iy, x, y, map.get(ix, iy)));
        }
    }
    rows
}

/// Heading difference folded into `[0, π]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}
