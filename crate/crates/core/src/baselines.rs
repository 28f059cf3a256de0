//! Comparison catalog and the relative-gap metric.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::config::Config;
use crate::env::{Environment, SlotMetrics, SlotRecord, TokenSource};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rl::Mlp;
use crate::rng::{self, SimRng, Stream};
use crate::semantics::TokenFidelity;

/// Offset separating evaluation episodes from training episodes.
pub const EVAL_EPISODE_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    RawImage,
    DeDiffCopilot,
    DeDiffStableXl,
    ChatGptCopilot,
    ChatGptStableXl,
    SemanticIgnored,
    Random,
}

impl BaselineKind {
    /// Catalog order, best expected first.
    pub const ALL: [BaselineKind; 7] = [
        BaselineKind::RawImage,
        BaselineKind::DeDiffCopilot,
        BaselineKind::DeDiffStableXl,
        BaselineKind::ChatGptCopilot,
        BaselineKind::ChatGptStableXl,
        BaselineKind::SemanticIgnored,
        BaselineKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::RawImage => "raw_image",
            BaselineKind::DeDiffCopilot => "dediff_copilot",
            BaselineKind::DeDiffStableXl => "dediff_stable_xl",
            BaselineKind::ChatGptCopilot => "chatgpt_copilot",
            BaselineKind::ChatGptStableXl => "chatgpt_stable_xl",
            BaselineKind::SemanticIgnored => "semantic_ignored",
            BaselineKind::Random => "random",
        }
    }

    pub fn fidelity(self) -> TokenFidelity {
        match self {
            BaselineKind::RawImage | BaselineKind::SemanticIgnored | BaselineKind::Random => TokenFidelity::exact(),
            BaselineKind::DeDiffCopilot => TokenFidelity::dediff_copilot(),
            BaselineKind::DeDiffStableXl => TokenFidelity::dediff_stable_xl(),
            BaselineKind::ChatGptCopilot | BaselineKind::ChatGptStableXl => TokenFidelity::chatgpt(),
        }
    }

    pub fn token_source(self) -> TokenSource {
        TokenSource {
            fidelity: self.fidelity(),
            randomize_semantics: matches!(self, BaselineKind::SemanticIgnored | BaselineKind::Random),
            randomize_heading: self == BaselineKind::Random,
        }
    }

    pub fn needs_agent(self) -> bool {
        self != BaselineKind::Random
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| {
                let names: Vec<&str> = BaselineKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Usage(format!("unknown baseline `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// State-to-action map used during evaluation.
pub enum Policy<'a> {
    Actor(&'a Mlp),
    Uniform { dim: usize, rng: SimRng },
}

impl Policy<'_> {
    pub fn act(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        match self {
            Policy::Actor(net) => {
                net.check_input(state)?;
                Ok(net.forward(state))
            }
            Policy::Uniform { dim, rng } => Ok((0..*dim).map(|_| rng.random::<f64>()).collect()),
        }
    }
}

/// Random ignores `actor`; every other kind requires it.
pub fn make_policy<'a>(kind: BaselineKind, actor: Option<&'a Mlp>, action_dim: usize, seed: u64, episode: u64) -> Result<Policy<'a>> {
    match (kind, actor) {
        (BaselineKind::Random, _) => Ok(Policy::Uniform {
            dim: action_dim,
            rng: rng::stream(seed, Stream::Policy, episode),
        }),
        (_, Some(net)) => {
            if net.output != action_dim {
                return Err(Error::Dimension {
                    what: "actor output",
                    expected: action_dim,
                    actual: net.output,
                });
            }
            Ok(Policy::Actor(net))
        }
        (_, None) => Err(Error::Usage(format!("baseline `{kind}` needs a trained agent"))),
    }
}

/// `100 (r_raw − r_other) / r_raw`.
pub fn relative_gap(r_raw: f64, r_other: f64) -> Result<f64> {
    if !(r_raw > 0.0) {
        return Err(Error::Domain(format!("relative gap needs a positive reference reward, got {r_raw}")));
    }
    Ok(100.0 * (r_raw - r_other) / r_raw)
}

/// Averages over one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub kind: BaselineKind,
    pub seed: u64,
    pub slots: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub energy_efficiency: f64,
    pub pe_range: f64,
    pub pe_velocity: f64,
    pub objective: f64,
    /// Penalised agent-slots over all agent-slots.
    pub penalty_rate: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs `episodes` evaluation episodes for one baseline and seed.
///
/// `on_slot` sees every slot's metrics and per-agent records.
pub fn evaluate_with<F>(cfg: &Config, kind: BaselineKind, actor: Option<&Mlp>, seed: u64, episodes: usize, mut on_slot: F) -> Result<EvalSummary>
where
    F: FnMut(&Environment, &SlotMetrics, &[SlotRecord]),
{
    if episodes == 0 {
        return Err(Error::Usage("at least one evaluation episode is required".into()));
    }
    let mut rewards = Vec::new();
    let mut acc = SlotMetrics::default();
    let mut agent_slots = 0usize;
    for e in 0..episodes as u64 {
        let episode = EVAL_EPISODE_BASE + e;
        let mut env = Environment::new(cfg, kind.token_source(), seed, episode)?;
        let mut policy = make_policy(kind, actor, env.action_dim(), seed, episode)?;
        if let Some(net) = actor {
            if net.input != env.state_dim() {
                return Err(Error::Dimension {
                    what: "actor input",
                    expected: env.state_dim(),
                    actual: net.input,
                });
            }
        }
        loop {
            let action = policy.act(env.state())?;
            let out = env.step(&action)?;
            on_slot(&env, &out.metrics, &out.records);
            rewards.push(out.reward);
            acc.energy_efficiency += out.metrics.energy_efficiency;
            acc.pe_range += out.metrics.pe_range;
            acc.pe_velocity += out.metrics.pe_velocity;
            acc.objective += out.metrics.objective;
            acc.penalties += out.metrics.penalties;
            agent_slots += out.records.len();
            if out.done {
                break;
            }
        }
    }
    let slots = rewards.len();
    let (mean_reward, std_reward) = mean_std(&rewards);
    let n = slots as f64;
    Ok(EvalSummary {
        kind,
        seed,
        slots,
        mean_reward,
        std_reward,
        energy_efficiency: acc.energy_efficiency / n,
        pe_range: acc.pe_range / n,
        pe_velocity: acc.pe_velocity / n,
        objective: acc.objective / n,
        penalty_rate: acc.penalties as f64 / agent_slots as f64,
    })
}

pub fn evaluate(cfg: &Config, kind: BaselineKind, actor: Option<&Mlp>, seed: u64, episodes: usize) -> Result<EvalSummary> {
    evaluate_with(cfg, kind, actor, seed, episodes, |_, _, _| {})
}

/// Every `(kind, seed)` pair, in kind-major order.
pub fn evaluate_all(
    cfg: &Config,
    kinds: &[BaselineKind],
    actor: Option<&Mlp>,
    seeds: &[u64],
    episodes: usize,
    mode: Execution,
) -> Result<Vec<EvalSummary>> {
    let jobs: Vec<(BaselineKind, u64)> = kinds.iter().flat_map(|k| seeds.iter().map(move |s| (*k, *s))).collect();
    par::try_map(mode, jobs, |(k, s)| evaluate(cfg, k, actor, s, episodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SEMANTIC_BLOCK;
    use crate::env::FEATURES_PER_AGENT;

    #[test]
    fn gap_examples() {
        assert_eq!(relative_gap(2.0, 2.0).unwrap(), 0.0);
        assert!((relative_gap(1.0, 0.96).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(relative_gap(0.7, 0.0).unwrap(), 100.0);
        assert!(relative_gap(0.0, 0.5).is_err());
        assert!(relative_gap(-1.0, 0.5).is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
        }
        assert_eq!("DeDiff-Copilot".parse::<BaselineKind>().unwrap(), BaselineKind::DeDiffCopilot);
        assert!("oracle".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn raw_image_is_noise_free() {
        assert_eq!(BaselineKind::RawImage.fidelity(), TokenFidelity::exact());
        assert_eq!(TokenFidelity::exact().semantic_noise, 0.0);
        assert_eq!(TokenFidelity::exact().heading_noise, 0.0);
    }

    #[test]
    fn trained_kinds_require_an_agent() {
        assert!(make_policy(BaselineKind::RawImage, None, 6, 0, 0).is_err());
        assert!(make_policy(BaselineKind::Random, None, 6, 0, 0).is_ok());
        let net = Mlp::zeros(4, 3, 5, crate::rl::OutputActivation::Sigmoid);
        assert!(make_policy(BaselineKind::DeDiffCopilot, Some(&net), 6, 0, 0).is_err());
    }

    #[test]
    fn uniform_policy_moments() {
        let mut p = make_policy(BaselineKind::Random, None, 10, 4, 0).unwrap();
        let mut xs = Vec::new();
        for _ in 0..1000 {
            xs.extend(p.act(&[]).unwrap());
        }
        let (mean, std) = mean_std(&xs);
        let n = xs.len() as f64;
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / 12f64).sqrt() / n.sqrt());
        assert!((std * std - 1.0 / 12.0).abs() < 0.003);
        assert!(xs.iter().all(|x| (0.0..1.0).contains(x)));
        // fraction below each decile edge, a coarse KS check
        for k in 1..10 {
            let q = k as f64 / 10.0;
            let frac = xs.iter().filter(|x| **x < q).count() as f64 / n;
            assert!((frac - q).abs() < 1.36 / n.sqrt(), "decile {q}: {frac}");
        }
    }

    #[test]
    fn semantic_ignored_differs_only_in_semantic_blocks() {
        let cfg = Config::default();
        let raw = Environment::new(&cfg, BaselineKind::RawImage.token_source(), 6, 0).unwrap();
        let ign = Environment::new(&cfg, BaselineKind::SemanticIgnored.token_source(), 6, 0).unwrap();
        let mut differs = false;
        for (i, (a, b)) in raw.state().iter().zip(ign.state()).enumerate() {
            if a != b {
                differs = true;
                assert!(SEMANTIC_BLOCK.contains(&(i % FEATURES_PER_AGENT)), "entry {i}");
            }
        }
        assert!(differs);
    }

    #[test]
    fn evaluation_is_reproducible() {
        let mut cfg = Config::default();
        cfg.env.horizon = 20;
        let a = evaluate(&cfg, BaselineKind::Random, None, 3, 2).unwrap();
        let b = evaluate(&cfg, BaselineKind::Random, None, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.slots, 40);
        let all = evaluate_all(&cfg, &[BaselineKind::Random], None, &[3, 4], 1, Execution::Parallel).unwrap();
        let seq = evaluate_all(&cfg, &[BaselineKind::Random], None, &[3, 4], 1, Execution::Sequential).unwrap();
        assert_eq!(all, seq);
    }
}
