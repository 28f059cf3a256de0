//! Deep deterministic policy gradient, written out by hand.
//!
//! Actor and critic are two-layer perceptrons with hand-written reverse-mode
//! gradients. Target networks track the online ones by Polyak averaging,
//! and transitions are replayed uniformly from a FIFO ring.

mod checkpoint;
mod mlp;
mod optim;
mod replay;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use mlp::{Mlp, OutputActivation, Trace};
pub use optim::{Adam, Optimizer, OptimizerKind};
pub use replay::{ReplayBuffer, Transition};

use crate::error::{Error, Result};
use crate::rng::{self, SimRng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgHyper {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub max_steps: usize,
    pub explore_noise: f64,
    pub hidden: usize,
    pub optimizer: OptimizerKind,
    /// Transitions collected before the first update (at least one batch).
    pub warmup: usize,
    /// Weight of the `Σ(a − ½)²` penalty subtracted from the actor objective.
    pub action_l2: f64,
}

impl Default for DdpgHyper {
    fn default() -> Self {
        Self {
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            discount: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 10_000,
            max_steps: 3000,
            explore_noise: 0.2,
            hidden: 64,
            optimizer: OptimizerKind::Adam,
            warmup: 64,
            action_l2: 0.0,
        }
    }
}

impl DdpgHyper {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ddpg.actor_lr", self.actor_lr),
            ("ddpg.critic_lr", self.critic_lr),
            ("ddpg.tau", self.tau),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if self.tau > 1.0 {
            return Err(Error::config("ddpg.tau", "must not exceed 1"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("ddpg.discount", "must lie in [0, 1)"));
        }
        if !(self.explore_noise >= 0.0 && self.explore_noise.is_finite()) {
            return Err(Error::config("ddpg.explore_noise", "must be >= 0"));
        }
        if !(self.action_l2 >= 0.0 && self.action_l2.is_finite()) {
            return Err(Error::config("ddpg.action_l2", "must be >= 0"));
        }
        for (key, v) in [
            ("ddpg.batch_size", self.batch_size),
            ("ddpg.buffer_capacity", self.buffer_capacity),
            ("ddpg.max_steps", self.max_steps),
            ("ddpg.hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.batch_size > self.buffer_capacity {
            return Err(Error::config("ddpg.batch_size", "must not exceed buffer_capacity"));
        }
        Ok(())
    }
}

/// Losses reported by one learning step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub buffer: ReplayBuffer,
    pub hyper: DdpgHyper,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    replay_rng: SimRng,
}

fn concat(s: &[f64], a: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s.len() + a.len());
    x.extend_from_slice(s);
    x.extend_from_slice(a);
    x
}

impl DdpgAgent {
    /// Fresh agent; targets start as copies of the online networks.
    pub fn new(state_dim: usize, action_dim: usize, hyper: DdpgHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut init = rng::stream(seed, Stream::Init, 0);
        let actor = Mlp::random(state_dim, hyper.hidden, action_dim, OutputActivation::Sigmoid, &mut init);
        let critic = Mlp::random(state_dim + action_dim, hyper.hidden, 1, OutputActivation::Identity, &mut init);
        Ok(Self::from_networks(actor, critic, None, hyper, seed))
    }

    /// Assembles an agent from explicit networks (targets default to copies).
    pub fn from_networks(actor: Mlp, critic: Mlp, targets: Option<(Mlp, Mlp)>, hyper: DdpgHyper, seed: u64) -> Self {
        let (target_actor, target_critic) = targets.unwrap_or_else(|| (actor.clone(), critic.clone()));
        Self {
            actor_opt: Optimizer::new(hyper.optimizer, hyper.actor_lr, actor.params.len()),
            critic_opt: Optimizer::new(hyper.optimizer, hyper.critic_lr, critic.params.len()),
            buffer: ReplayBuffer::new(hyper.buffer_capacity),
            replay_rng: rng::stream(seed, Stream::Replay, 0),
            actor,
            critic,
            target_actor,
            target_critic,
            hyper,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.actor.input
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output
    }

    fn check_action(&self, a: &[f64]) -> Result<()> {
        if a.len() == self.action_dim() {
            Ok(())
        } else {
            Err(Error::Dimension {
                what: "action",
                expected: self.action_dim(),
                actual: a.len(),
            })
        }
    }

    pub fn actor_forward(&self, s: &[f64]) -> Result<Vec<f64>> {
        self.actor.check_input(s)?;
        Ok(self.actor.forward(s))
    }

    pub fn critic_forward(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        self.actor.check_input(s)?;
        self.check_action(a)?;
        Ok(self.critic.forward(&concat(s, a))[0])
    }

    /// `y = r + γ Q'(s', μ'(s')) (1 − done)`.
    pub fn td_target(&self, reward: f64, next_state: &[f64], done: bool) -> Result<f64> {
        self.actor.check_input(next_state)?;
        if done || self.hyper.discount == 0.0 {
            return Ok(reward);
        }
        let a_next = self.target_actor.forward(next_state);
        let q_next = self.target_critic.forward(&concat(next_state, &a_next))[0];
        Ok(reward + self.hyper.discount * q_next)
    }

    /// `∂Q/∂a` at `(s, a)`.
    pub fn critic_action_gradient(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.actor.check_input(s)?;
        self.check_action(a)?;
        let x = concat(s, a);
        let trace = self.critic.forward_trace(&x);
        let mut gi = vec![0.0; x.len()];
        self.critic.backward(&x, &trace, &[1.0], None, Some(&mut gi));
        Ok(gi.split_off(s.len()))
    }

    /// Mean squared TD error and its gradient in the critic parameters.
    pub fn critic_gradient(&self, batch: &[Transition]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let inv_b = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.critic.params.len()];
        let mut loss = 0.0;
        for t in batch {
            self.actor.check_input(&t.state)?;
            self.check_action(&t.action)?;
            let y = self.td_target(t.reward, &t.next_state, t.done)?;
            let x = concat(&t.state, &t.action);
            let trace = self.critic.forward_trace(&x);
            let err = trace.output[0] - y;
            loss += err * err * inv_b;
            self.critic.backward(&x, &trace, &[2.0 * err * inv_b], Some(&mut grad), None);
        }
        Ok((loss, grad))
    }

    /// One descent step on the critic; returns the pre-step loss.
    pub fn critic_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let (loss, grad) = self.critic_gradient(batch)?;
        self.critic_opt.step(&mut self.critic.params, &grad);
        Ok(loss)
    }

    /// Mean of `q(s, μ(s))` over `states` and its gradient in the actor
    /// parameters, where `q` returns the value and `∂q/∂a`.
    pub fn actor_gradient_with<F>(&self, states: &[&[f64]], q: F) -> Result<(f64, Vec<f64>)>
    where
        F: Fn(&[f64], &[f64]) -> (f64, Vec<f64>),
    {
        if states.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let inv_b = 1.0 / states.len() as f64;
        let mut grad = vec![0.0; self.actor.params.len()];
        let mut objective = 0.0;
        for s in states {
            self.actor.check_input(s)?;
            let trace = self.actor.forward_trace(s);
            let (value, dq_da) = q(s, &trace.output);
            objective += value * inv_b;
            let g: Vec<f64> = dq_da.iter().map(|d| d * inv_b).collect();
            self.actor.backward(s, &trace, &g, Some(&mut grad), None);
        }
        Ok((objective, grad))
    }

    /// `(1/B) Σ [Q(s, μ(s)) − c·Σ(μ(s) − ½)²]` and its gradient through the
    /// online critic, with `c = action_l2`.
    pub fn actor_gradient(&self, states: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
        let sd = self.state_dim();
        let c = self.hyper.action_l2;
        self.actor_gradient_with(states, |s, a| {
            let x = concat(s, a);
            let trace = self.critic.forward_trace(&x);
            let mut gi = vec![0.0; x.len()];
            self.critic.backward(&x, &trace, &[1.0], None, Some(&mut gi));
            let mut dq_da = gi.split_off(sd);
            let mut value = trace.output[0];
            for (g, ai) in dq_da.iter_mut().zip(a) {
                value -= c * (ai - 0.5).powi(2);
                *g -= 2.0 * c * (ai - 0.5);
            }
            (value, dq_da)
        })
    }

    /// One ascent step on the sampled policy gradient; returns the pre-step objective.
    pub fn actor_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
        let (objective, grad) = self.actor_gradient(&states)?;
        self.ascend_actor(&grad);
        Ok(objective)
    }

    /// Ascent step on the actor along an externally computed gradient.
    pub fn ascend_actor(&mut self, grad: &[f64]) {
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        self.actor_opt.step(&mut self.actor.params, &neg);
    }

    /// `θ' ← τθ + (1 − τ)θ'` for both target networks.
    pub fn soft_update(&mut self) {
        let tau = self.hyper.tau;
        for (target, online) in [
            (&mut self.target_actor, &self.actor),
            (&mut self.target_critic, &self.critic),
        ] {
            for (t, p) in target.params.iter_mut().zip(&online.params) {
                *t = tau * p + (1.0 - tau) * *t;
            }
        }
    }

    /// Unclipped exploration perturbation, one deviate per action component.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let std = self.hyper.explore_noise;
        (0..self.action_dim())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            })
            .collect()
    }

    /// `clip(μ(s) + N(0, σ²), 0, 1)`.
    pub fn act_with_noise<R: Rng + ?Sized>(&self, s: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor_forward(s)?;
        for (v, n) in a.iter_mut().zip(self.sample_noise(rng)) {
            *v = (*v + n).clamp(0.0, 1.0);
        }
        Ok(a)
    }

    pub fn remember(&mut self, t: Transition) {
        self.buffer.push(t);
    }

    /// Samples a batch and runs critic, actor and target updates once the
    /// buffer holds enough transitions.
    pub fn learn(&mut self) -> Result<Option<UpdateStats>> {
        let needed = self.hyper.batch_size.max(self.hyper.warmup);
        if self.buffer.len() < needed {
            return Ok(None);
        }
        let batch = self.buffer.sample(self.hyper.batch_size, &mut self.replay_rng)?;
        let critic_loss = self.critic_update(&batch)?;
        let actor_objective = self.actor_update(&batch)?;
        self.soft_update();
        Ok(Some(UpdateStats {
            critic_loss,
            actor_objective,
        }))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            actor: self.actor.clone(),
            critic: self.critic.clone(),
            target_actor: self.target_actor.clone(),
            target_critic: self.target_critic.clone(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint, hyper: DdpgHyper, seed: u64) -> Self {
        let targets = Some((ckpt.target_actor, ckpt.target_critic));
        Self::from_networks(ckpt.actor, ckpt.critic, targets, hyper, seed)
    }
}
