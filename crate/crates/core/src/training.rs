//! DDPG training loop over consecutive seeded episodes.

use crate::baselines::BaselineKind;
use crate::config::Config;
use crate::env::{Environment, TokenSource};
use crate::error::Result;
use crate::rl::{DdpgAgent, Transition};
use crate::rng::{self, Stream};

/// Tokens the controller learns from.
pub const TRAINING_BASELINE: BaselineKind = BaselineKind::DeDiffCopilot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub step: usize,
    pub episode: u64,
    pub reward: f64,
    pub energy_efficiency: f64,
    pub pe_range: f64,
    pub pe_velocity: f64,
    pub objective: f64,
    pub penalties: usize,
    /// `None` until the buffer passes warm-up.
    pub critic_loss: Option<f64>,
}

pub struct TrainOutcome {
    pub agent: DdpgAgent,
    pub curve: Vec<StepLog>,
}

/// Trains for `cfg.ddpg.max_steps` environment steps with the default
/// training tokens.
pub fn train(cfg: &Config, seed: u64) -> Result<TrainOutcome> {
    train_with(cfg, seed, TRAINING_BASELINE.token_source())
}

pub fn train_with(cfg: &Config, seed: u64, source: TokenSource) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut episode = 0u64;
    let mut env = Environment::new(cfg, source, seed, episode)?;
    let mut agent = DdpgAgent::new(env.state_dim(), env.action_dim(), cfg.ddpg.clone(), seed)?;
    let mut explore = rng::stream(seed, Stream::Exploration, 0);
    let mut curve = Vec::with_capacity(cfg.ddpg.max_steps);
    let mut state = env.state().to_vec();
    for step in 0..cfg.ddpg.max_steps {
        let action = agent.act_with_noise(&state, &mut explore)?;
        let out = env.step(&action)?;
        agent.remember(Transition {
            state: std::mem::take(&mut state),
            action,
            reward: out.reward,
            next_state: out.next_state.clone(),
            done: out.done,
        });
        let stats = agent.learn()?;
        curve.push(StepLog {
            step,
            episode,
            reward: out.reward,
            energy_efficiency: out.metrics.energy_efficiency,
            pe_range: out.metrics.pe_range,
            pe_velocity: out.metrics.pe_velocity,
            objective: out.metrics.objective,
            penalties: out.metrics.penalties,
            critic_loss: stats.map(|s| s.critic_loss),
        });
        if out.done {
            episode += 1;
            env = Environment::new(cfg, source, seed, episode)?;
            state = env.state().to_vec();
        } else {
            state = out.next_state;
        }
    }
    Ok(TrainOutcome { agent, curve })
}

/// Trailing moving average; entry `i` averages `xs[i+1-w..=i]` (fewer at the start).
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "window must be positive");
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_by_hand() {
        let ma = moving_average(&[1.0, 2.0, 3.0, 4.0], 2);
        assert_eq!(ma, vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(moving_average(&[], 3), Vec::<f64>::new());
    }

    #[test]
    fn short_run_logs_every_step_and_replays() {
        let mut cfg = Config::default();
        cfg.ddpg.max_steps = 150;
        cfg.env.horizon = 40;
        let a = train(&cfg, 2).unwrap();
        let b = train(&cfg, 2).unwrap();
        assert_eq!(a.curve.len(), 150);
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.agent.checkpoint(), b.agent.checkpoint());
        assert_eq!(a.curve[149].episode, 3);
        assert!(a.curve[10].critic_loss.is_none());
        assert!(a.curve[100].critic_loss.is_some());
    }
}
