//! Parameter sweeps and the per-seed train-then-evaluate protocol.
//!
//! Each sweep point trains one controller per seed on its own configuration
//! (the state dimension moves with `n_agents`) unless an actor is supplied,
//! in which case the point is only re-evaluated.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{self, BaselineKind, EvalSummary};
use crate::config::Config;
use crate::env::{ACTIONS_PER_AGENT, FEATURES_PER_AGENT};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::report::SweepRow;
use crate::rl::Mlp;
use crate::training;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    NAgents,
    /// Sweeps `M` and keeps the codebook size equal to it.
    NAntennas,
    /// Transmit power budget in dBm.
    PMax,
}

impl SweepParam {
    pub const ALL: [SweepParam; 3] = [SweepParam::NAgents, SweepParam::NAntennas, SweepParam::PMax];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::NAgents => "n_agents",
            SweepParam::NAntennas => "n_antennas",
            SweepParam::PMax => "p_max",
        }
    }

    fn integral(self) -> bool {
        !matches!(self, SweepParam::PMax)
    }

    /// `cfg` with this parameter set to `value`, validated.
    pub fn apply(self, cfg: &Config, value: f64) -> Result<Config> {
        let mut out = cfg.clone();
        if self.integral() && (value.fract() != 0.0 || value < 1.0) {
            return Err(Error::Usage(format!("{self} takes positive integers, got {value}")));
        }
        match self {
            SweepParam::NAgents => out.scenario.n_agents = value as usize,
            SweepParam::NAntennas => {
                out.channel.n_antennas = value as usize;
                out.channel.codebook_size = value as usize;
            }
            SweepParam::PMax => out.env.p_max_dbm = value,
        }
        out.validate()?;
        Ok(out)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            Error::Usage(format!("unknown sweep parameter `{s}` (expected n_agents, n_antennas or p_max)"))
        })
    }
}

/// Parses `10,12,14` or the inclusive integer range `10..19`.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Usage("empty value list".into()));
    }
    if let Some((a, b)) = text.split_once("..") {
        let bound = |s: &str| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| Error::Usage(format!("range bound `{s}` is not an integer")))
        };
        let (lo, hi) = (bound(a)?, bound(b)?);
        if lo > hi {
            return Err(Error::Usage(format!("empty range {lo}..{hi}")));
        }
        return Ok((lo..=hi).map(|v| v as f64).collect());
    }
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Usage(format!("`{v}` is not a number")))
        })
        .collect()
}

/// Canonical text of a sweep value, used in CSV rows.
pub fn format_value(param: SweepParam, value: f64) -> String {
    if param.integral() {
        format!("{}", value as i64)
    } else {
        value.to_string()
    }
}

/// Evaluates `kinds` on every seed. Kinds that need a controller use
/// `actor` when given, otherwise a controller trained on the same seed.
/// Rows come back seed-major, kinds in the order given.
pub fn evaluate_point(
    cfg: &Config,
    kinds: &[BaselineKind],
    actor: Option<&Mlp>,
    seeds: &[u64],
    episodes: usize,
    mode: Execution,
) -> Result<Vec<EvalSummary>> {
    if seeds.is_empty() || kinds.is_empty() {
        return Err(Error::Usage("at least one seed and one baseline are required".into()));
    }
    if let Some(net) = actor {
        let expected = cfg.scenario.n_agents * FEATURES_PER_AGENT;
        if net.input != expected || net.output != cfg.scenario.n_agents * ACTIONS_PER_AGENT {
            return Err(Error::Dimension {
                what: "checkpoint actor input",
                expected,
                actual: net.input,
            });
        }
    }
    let needs_agent = kinds.iter().any(|k| k.needs_agent());
    let per_seed = par::try_map(mode, seeds.to_vec(), |seed| -> Result<Vec<EvalSummary>> {
        let trained = match (actor, needs_agent) {
            (None, true) => Some(training::train(cfg, seed)?.agent.actor),
            _ => None,
        };
        let net = actor.or(trained.as_ref());
        kinds.iter().map(|k| baselines::evaluate(cfg, *k, net, seed, episodes)).collect()
    })?;
    Ok(per_seed.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub kinds: Vec<BaselineKind>,
    pub seeds: Vec<u64>,
    pub episodes: usize,
}

/// One row per `(value, kind, seed)`, value-major.
///
/// Points run through `mode`; inside a point seeds run sequentially so the
/// pool stays bounded by the number of points.
pub fn run_sweep(cfg: &Config, plan: &SweepPlan, actor: Option<&Mlp>, mode: Execution) -> Result<Vec<SweepRow>> {
    if plan.values.is_empty() {
        return Err(Error::Usage("empty value list".into()));
    }
    let configs = plan
        .values
        .iter()
        .map(|v| plan.param.apply(cfg, *v))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, Config)> = plan.values.iter().copied().zip(configs).collect();
    let results = par::try_map(mode, points, |(value, point_cfg)| -> Result<Vec<SweepRow>> {
        let rows = evaluate_point(&point_cfg, &plan.kinds, actor, &plan.seeds, plan.episodes, Execution::Sequential)?;
        let mut out: Vec<SweepRow> = rows
            .into_iter()
            .map(|summary| SweepRow {
                param: plan.param.as_str().to_string(),
                value: format_value(plan.param, value),
                summary,
            })
            .collect();
        // kind-major inside a point reads better in the CSV
        out.sort_by_key(|r| plan.kinds.iter().position(|k| *k == r.summary.kind));
        Ok(out)
    })?;
    Ok(results.into_iter().flatten().collect())
}
