//! Priority scoring, RAT thresholding and capacity projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ActivityClass, ActivityTable};
use crate::semantics::SemanticToken;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorityWeights {
    pub risk: f64,
    pub activity: f64,
    pub sinr: f64,
    pub align: f64,
    pub los: f64,
}

impl Default for PriorityWeights {
    fn default() -> Self {
        Self {
            risk: 0.3,
            activity: 0.2,
            sinr: 0.2,
            align: 0.2,
            los: 0.1,
        }
    }
}

impl PriorityWeights {
    pub fn values(&self) -> [f64; 5] {
        [self.risk, self.activity, self.sinr, self.align, self.los]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.values();
        if w.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::config("scheduler.weights", "weights must be non-negative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config("scheduler.weights", format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub weights: PriorityWeights,
    /// mmWave admission threshold `δ_mm`.
    pub mm_threshold: f64,
    /// mmWave slots.
    pub mm_capacity: usize,
    /// LTE slots; `N` when absent.
    pub lte_capacity: Option<usize>,
    /// Link urgency per activity, each in `[0, 1]`.
    pub urgency: ActivityTable,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            weights: PriorityWeights::default(),
            mm_threshold: 0.5,
            mm_capacity: 1,
            lte_capacity: None,
            urgency: ActivityTable {
                standing: 0.1,
                walking: 0.3,
                running: 0.9,
                talking: 0.2,
                carrying: 0.4,
                crossing: 1.0,
                turning: 0.7,
                stopping: 0.5,
            },
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self, n_agents: usize) -> Result<()> {
        self.weights.validate()?;
        if !(0.0..=1.0).contains(&self.mm_threshold) {
            return Err(Error::config("scheduler.mm_threshold", "must lie in [0, 1]"));
        }
        if self.urgency.values().iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::config("scheduler.urgency", "entries must lie in [0, 1]"));
        }
        let (mm, lte) = self.capacities(n_agents);
        if mm + lte < n_agents {
            return Err(Error::config(
                "scheduler.mm_capacity",
                format!("capacities {mm} + {lte} cannot serve {n_agents} agents"),
            ));
        }
        Ok(())
    }

    pub fn capacities(&self, n_agents: usize) -> (usize, usize) {
        (
            self.mm_capacity,
            self.lte_capacity.unwrap_or(n_agents),
        )
    }

    pub fn activity_urgency(&self, act: ActivityClass) -> f64 {
        self.urgency.get(act)
    }
}

/// SINR in dB clipped to `[−10, 30]` and mapped affinely onto `[0, 1]`.
pub fn sinr_norm(sinr: f64) -> f64 {
    if !(sinr > 0.0) {
        return 0.0;
    }
    let db = (10.0 * sinr.log10()).clamp(-10.0, 30.0);
    (db + 10.0) / 40.0
}

/// The five raw priority terms, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityTerms {
    pub risk: f64,
    pub urgency: f64,
    pub sinr: f64,
    pub align: f64,
    pub los: f64,
}

impl PriorityTerms {
    pub fn new(token: &SemanticToken, risk: f64, sinr: f64, los: bool, radar_angle: f64, cfg: &SchedulerConfig) -> Self {
        Self {
            risk: risk.clamp(0.0, 1.0),
            urgency: cfg.activity_urgency(token.act_hat),
            sinr: sinr_norm(sinr),
            align: (token.heading_hat - radar_angle).cos().max(0.0),
            los: if los { 1.0 } else { 0.0 },
        }
    }

    pub fn combine(&self, w: &PriorityWeights) -> f64 {
        let rho = w.risk * self.risk + w.activity * self.urgency + w.sinr * self.sinr + w.align * self.align + w.los * self.los;
        rho.clamp(0.0, 1.0)
    }
}

/// `ρ ∈ [0, 1]` from a token, local risk, probe SINR, LoS and radar angle.
pub fn priority_score(
    token: &SemanticToken,
    risk: f64,
    sinr: f64,
    los: bool,
    radar_angle: f64,
    cfg: &SchedulerConfig,
) -> f64 {
    PriorityTerms::new(token, risk, sinr, los, radar_angle, cfg).combine(&cfg.weights)
}

/// mmWave iff `ρ ≥ δ` and the agent has line of sight.
pub fn rat_threshold(rho: f64, los: bool, delta: f64) -> bool {
    los && rho >= delta
}

/// Capacity-feasible access vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub x: Vec<bool>,
    /// LTE overflow that could not be promoted for lack of LoS.
    pub lte_residual: usize,
}

impl Projection {
    pub fn satisfied(&self) -> bool {
        self.lte_residual == 0
    }
}

/// Enforces `Σx ≤ N_mm` by demoting the lowest-priority mmWave agents and
/// `Σ(1−x) ≤ N_lte` by promoting the highest-priority LoS LTE agents.
/// Equal priorities favour the lower agent index.
pub fn project_capacity(x: &[bool], rho: &[f64], los: &[bool], mm_max: usize, lte_max: usize) -> Result<Projection> {
    let n = x.len();
    for (what, len) in [("priority vector", rho.len()), ("LoS vector", los.len())] {
        if len != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    if n > mm_max + lte_max {
        return Err(Error::Infeasible {
            agents: n,
            mm_max,
            lte_max,
        });
    }
    let mut out = x.to_vec();
    // highest priority first, lower index first among equals
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rho[b].total_cmp(&rho[a]).then(a.cmp(&b)));

    let mm_count = out.iter().filter(|v| **v).count();
    if mm_count > mm_max {
        let mut excess = mm_count - mm_max;
        for &i in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if out[i] {
                out[i] = false;
                excess -= 1;
            }
        }
    }
    let lte_count = out.iter().filter(|v| !**v).count();
    let mut residual = 0;
    if lte_count > lte_max {
        let mut excess = lte_count - lte_max;
        for &i in &order {
            if excess == 0 {
                break;
            }
            if !out[i] && los[i] {
                out[i] = true;
                excess -= 1;
            }
        }
        residual = excess;
    }
    Ok(Projection {
        x: out,
        lte_residual: residual,
    })
}
