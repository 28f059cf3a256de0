//! The decision process: state encoding, action decoding, reward and slot
//! dynamics.
//!
//! Per agent the state holds 20 entries:
//!
//! | entries | content |
//! |---------|---------|
//! | 0..5    | one-hot token type |
//! | 5..13   | one-hot token activity |
//! | 13, 14  | `sin θ_vis`, `cos θ_vis` |
//! | 15      | normalised pilot SINR with the heading-prior beam |
//! | 16      | radar distance over the largest slant range |
//! | 17      | radar radial velocity over the speed ceiling, clipped to `[−1, 1]` |
//! | 18      | radar angle over `π/2` |
//! | 19      | heatmap risk at the agent |
//!
//! Each agent's action is `(rat_raw, power_raw, beam_raw) ∈ [0, 1]³`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ArrayGeometry, Codebook, LteChannel, MmWaveChannel, Rat};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::metrics::{self, CrbKind, SensingParams};
use crate::radar::{self, RadarObservation};
use crate::rng::{self, SimRng, Stream};
use crate::scenario::{self, ActivityClass, AgentState, OcclusionGrid, SemanticType};
use crate::scheduler::{self, PriorityTerms};
use crate::semantics::{self, RiskHeatmap, SemanticToken, TokenFidelity};

pub const FEATURES_PER_AGENT: usize = SemanticType::COUNT + ActivityClass::COUNT + 2 + 1 + 3 + 1;
pub const ACTIONS_PER_AGENT: usize = 3;

/// Offsets of the semantic one-hot blocks inside an agent's features.
pub const SEMANTIC_BLOCK: std::ops::Range<usize> = 0..SemanticType::COUNT + ActivityClass::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Slots per episode.
    pub horizon: usize,
    /// Per-agent transmit power cap (dBm).
    pub p_max_dbm: f64,
    /// Link stability threshold `γ_th` (dB).
    pub sinr_threshold_db: f64,
    pub lambda_ee: f64,
    pub lambda_pe: f64,
    pub lambda_sr: f64,
    /// Reward when the rate constraint is violated.
    pub penalty: f64,
    /// Per-agent `R/(pB)` mapped to an EE term of 1.
    pub ee_scale: f64,
    /// Per-agent `PE_d + PE_v` mapped to a PE term of 1.
    pub pe_scale: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            p_max_dbm: 10.0,
            sinr_threshold_db: 10.0,
            lambda_ee: 0.4,
            lambda_pe: 0.4,
            lambda_sr: 0.2,
            penalty: -100.0,
            ee_scale: 10.0,
            pe_scale: 1.0e14,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("env.horizon", "must be at least 1"));
        }
        if !self.p_max_dbm.is_finite() {
            return Err(Error::config("env.p_max_dbm", "must be finite"));
        }
        let w = [self.lambda_ee, self.lambda_pe, self.lambda_sr];
        if w.iter().any(|x| !(0.0..=1.0).contains(x)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::config("env.lambda_ee", "lambda_ee, lambda_pe and lambda_sr must lie in [0, 1] and sum to 1"));
        }
        for (key, v) in [("env.ee_scale", self.ee_scale), ("env.pe_scale", self.pe_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        if !(self.penalty.is_finite() && self.penalty < 0.0) {
            return Err(Error::config("env.penalty", "must be negative"));
        }
        Ok(())
    }

    /// `p_max` in linear power units (mW).
    pub fn p_max(&self) -> f64 {
        dbm_to_mw(self.p_max_dbm)
    }

    pub fn sinr_threshold(&self) -> f64 {
        10f64.powf(self.sinr_threshold_db / 10.0)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// How tokens reach the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenSource {
    pub fidelity: TokenFidelity,
    /// Replace type and activity by uniform draws.
    pub randomize_semantics: bool,
    /// Replace the heading by a uniform draw.
    pub randomize_heading: bool,
}

impl TokenSource {
    pub fn with_fidelity(fidelity: TokenFidelity) -> Self {
        Self {
            fidelity,
            randomize_semantics: false,
            randomize_heading: false,
        }
    }
}

/// Normalisation constants used by [`encode_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateScales {
    pub distance: f64,
    pub velocity: f64,
}

impl StateScales {
    pub fn from_config(cfg: &Config) -> Self {
        Self {
            distance: cfg.scenario.max_slant_range(),
            velocity: cfg.scenario.speed_ceiling(),
        }
    }
}

/// Flattened state: [`FEATURES_PER_AGENT`] entries per agent.
pub fn encode_state(
    agents: &[AgentState],
    tokens: &[SemanticToken],
    radar: &[RadarObservation],
    heatmap: &RiskHeatmap,
    probe_sinr: &[f64],
    scales: StateScales,
) -> Result<Vec<f64>> {
    let n = agents.len();
    for (what, len) in [
        ("token list", tokens.len()),
        ("radar list", radar.len()),
        ("probe SINR list", probe_sinr.len()),
    ] {
        if len != n {
            return Err(Error::Dimension {
                what,
                expected: n,
                actual: len,
            });
        }
    }
    let mut s = Vec::with_capacity(n * FEATURES_PER_AGENT);
    for i in 0..n {
        let t = &tokens[i];
        let r = &radar[i];
        s.extend_from_slice(&t.sem_hat.one_hot());
        s.extend_from_slice(&t.act_hat.one_hot());
        s.push(t.heading_hat.sin());
        s.push(t.heading_hat.cos());
        s.push(scheduler::sinr_norm(probe_sinr[i]));
        s.push((r.distance / scales.distance).clamp(0.0, 1.0));
        s.push((r.radial_velocity / scales.velocity).clamp(-1.0, 1.0));
        s.push((r.angle / FRAC_PI_2).clamp(-1.0, 1.0));
        s.push(heatmap.risk_at(agents[i].position)?);
    }
    Ok(s)
}

/// Physical decisions recovered from an action vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAction {
    pub x: Vec<bool>,
    pub power: Vec<f64>,
    pub beam: Vec<usize>,
    /// LTE overflow that capacity projection could not resolve.
    pub lte_residual: usize,
}

/// Thresholds RAT requests (LoS only), projects onto the capacities, scales
/// power by `p_max` and offsets the heading-prior beam by at most one step.
#[allow(clippy::too_many_arguments)]
pub fn decode_action(
    action: &[f64],
    rho: &[f64],
    los: &[bool],
    capacities: (usize, usize),
    p_max: f64,
    n_beams: usize,
    prior_beam: &[usize],
    delta: f64,
) -> Result<DecodedAction> {
    let n = rho.len();
    if action.len() != n * ACTIONS_PER_AGENT {
        return Err(Error::Dimension {
            what: "action vector",
            expected: n * ACTIONS_PER_AGENT,
            actual: action.len(),
        });
    }
    if prior_beam.len() != n {
        return Err(Error::Dimension {
            what: "prior beam list",
            expected: n,
            actual: prior_beam.len(),
        });
    }
    let mut requested = Vec::with_capacity(n);
    let mut power = Vec::with_capacity(n);
    let mut beam = Vec::with_capacity(n);
    for i in 0..n {
        let a = &action[i * ACTIONS_PER_AGENT..(i + 1) * ACTIONS_PER_AGENT];
        let (rat_raw, power_raw, beam_raw) = (a[0].clamp(0.0, 1.0), a[1].clamp(0.0, 1.0), a[2].clamp(0.0, 1.0));
        requested.push(scheduler::rat_threshold(rat_raw, los[i], delta));
        power.push(power_raw * p_max);
        let offset = ((beam_raw - 0.5) * 2.0).round() as isize;
        let b = (prior_beam[i] as isize + offset).clamp(0, n_beams as isize - 1);
        beam.push(b as usize);
    }
    let projection = scheduler::project_capacity(&requested, rho, los, capacities.0, capacities.1)?;
    Ok(DecodedAction {
        x: projection.x,
        power,
        beam,
        lte_residual: projection.lte_residual,
    })
}

/// Reward decomposition for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    pub ee_term: f64,
    pub pe_term: f64,
    pub sr_term: f64,
    pub penalty: bool,
    pub total: f64,
}

/// One agent's evaluated link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOutcome {
    pub rat: Rat,
    pub power: f64,
    pub bandwidth: f64,
    pub sinr: f64,
    pub rate: f64,
    /// `R/(κ + CRB_d) + R/(κ + CRB_v)`, zero without signal.
    pub perception: f64,
}

pub fn compute_reward(link: &LinkOutcome, min_rate: f64, cfg: &EnvConfig) -> RewardBreakdown {
    let ee = if link.power > 0.0 && link.rate > 0.0 {
        (link.rate / (link.power * link.bandwidth) / cfg.ee_scale).min(1.0)
    } else {
        0.0
    };
    let pe = (link.perception / cfg.pe_scale).clamp(0.0, 1.0);
    let sr = if link.sinr > cfg.sinr_threshold() { 1.0 } else { 0.0 };
    let penalty = link.rate < min_rate;
    let total = if penalty {
        cfg.penalty
    } else {
        cfg.lambda_ee * ee + cfg.lambda_pe * pe + cfg.lambda_sr * sr
    };
    RewardBreakdown {
        ee_term: ee,
        pe_term: pe,
        sr_term: sr,
        penalty,
        total,
    }
}

/// Network-level metrics of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlotMetrics {
    pub mean_reward: f64,
    pub energy_efficiency: f64,
    pub pe_range: f64,
    pub pe_velocity: f64,
    pub objective: f64,
    pub penalties: usize,
    pub mmwave_users: usize,
}

/// Per-agent trace row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub agent: usize,
    pub rat: Rat,
    pub power: f64,
    pub beam: usize,
    pub sinr: f64,
    pub rate: f64,
    pub reward: RewardBreakdown,
    pub risk: f64,
    pub priority: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub rewards: Vec<RewardBreakdown>,
    /// Mean of the per-agent totals.
    pub reward: f64,
    pub done: bool,
    pub metrics: SlotMetrics,
    pub records: Vec<SlotRecord>,
}

struct Streams {
    kinematics: SimRng,
    radar: SimRng,
    tokens: SimRng,
    channel: SimRng,
    overrides: SimRng,
}

/// One seeded episode of the slot dynamics.
///
/// World motion, radar noise, token noise and channel draws come from
/// separate streams keyed by `(seed, episode)`, and none depends on the
/// actions, so different policies evaluated on one key face the same
/// world and the same channel realisations.
pub struct Environment {
    cfg: Config,
    source: TokenSource,
    grid: OcclusionGrid,
    codebook: Codebook,
    array: ArrayGeometry,
    scales: StateScales,
    streams: Streams,
    slot: usize,
    agents: Vec<AgentState>,
    tokens: Vec<SemanticToken>,
    radar: Vec<RadarObservation>,
    heatmap: RiskHeatmap,
    mm: Vec<MmWaveChannel>,
    lte: Vec<LteChannel>,
    prior_beam: Vec<usize>,
    probe: Vec<f64>,
    state: Vec<f64>,
}

impl Environment {
    pub fn new(cfg: &Config, source: TokenSource, seed: u64, episode: u64) -> Result<Self> {
        cfg.validate()?;
        let array = ArrayGeometry {
            wavelength: cfg.radar.wavelength,
            spacing: cfg.radar.element_spacing,
        };
        let codebook = Codebook::uniform(cfg.channel.codebook_size, cfg.channel.n_antennas, array);
        let world_seed = rng::derive_seed(seed, Stream::World, episode);
        let agents = scenario::init_world(&cfg.scenario, world_seed);
        let n = agents.len();
        let mut env = Self {
            cfg: cfg.clone(),
            source,
            grid: cfg.scenario.occlusion_grid(),
            codebook,
            array,
            scales: StateScales::from_config(cfg),
            streams: Streams {
                kinematics: rng::stream(seed, Stream::Kinematics, episode),
                radar: rng::stream(seed, Stream::Radar, episode),
                tokens: rng::stream(seed, Stream::Tokens, episode),
                channel: rng::stream(seed, Stream::Channel, episode),
                overrides: rng::stream(seed, Stream::SemanticOverride, episode),
            },
            slot: 0,
            agents,
            tokens: Vec::with_capacity(n),
            radar: Vec::with_capacity(n),
            heatmap: RiskHeatmap::filled(1, 1, 1.0, 0.0),
            mm: Vec::with_capacity(n),
            lte: Vec::with_capacity(n),
            prior_beam: Vec::with_capacity(n),
            probe: Vec::with_capacity(n),
            state: Vec::new(),
        };
        env.sense()?;
        Ok(env)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn state_dim(&self) -> usize {
        self.n_agents() * FEATURES_PER_AGENT
    }

    pub fn action_dim(&self) -> usize {
        self.n_agents() * ACTIONS_PER_AGENT
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn tokens(&self) -> &[SemanticToken] {
        &self.tokens
    }

    pub fn heatmap(&self) -> &RiskHeatmap {
        &self.heatmap
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn channels(&self) -> &[MmWaveChannel] {
        &self.mm
    }

    pub fn prior_beams(&self) -> &[usize] {
        &self.prior_beam
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    fn draw_token(&mut self, i: usize) -> SemanticToken {
        let agent = &self.agents[i];
        let mut token = semantics::synthesize_token(agent, self.source.fidelity, &mut self.streams.tokens);
        // fixed draw count keeps the override stream aligned across sources
        let rng = &mut self.streams.overrides;
        let sem = rng.random_range(0..SemanticType::COUNT);
        let act = rng.random_range(0..ActivityClass::COUNT);
        let heading = rng.random::<f64>() * std::f64::consts::TAU;
        if self.source.randomize_semantics {
            token.sem_hat = SemanticType::ALL[sem];
            token.act_hat = ActivityClass::ALL[act];
        }
        if self.source.randomize_heading {
            token.heading_hat = heading;
        }
        token
    }

    /// Observes the current world: tokens, radar, heatmap, channels and the
    /// heading-prior pilot probe, then encodes the state.
    fn sense(&mut self) -> Result<()> {
        let cfg = &self.cfg;
        let uav = cfg.scenario.uav_position();
        let n = self.agents.len();
        let tokens: Vec<SemanticToken> = (0..n).map(|i| self.draw_token(i)).collect();
        self.tokens = tokens;
        let cfg = &self.cfg;
        self.radar = self
            .agents
            .iter()
            .map(|a| radar::observe(a, uav, &cfg.radar, &mut self.streams.radar))
            .collect::<Result<_>>()?;
        self.heatmap = semantics::build_heatmap(
            &self.agents,
            &self.tokens,
            &self.radar,
            &self.grid,
            cfg.scenario.arena_size,
            &cfg.semantics,
        )?;
        self.mm.clear();
        self.lte.clear();
        for a in &self.agents {
            let truth = radar::true_geometry(a, uav);
            self.mm.push(channel::sample_mmwave_channel(
                truth.angle,
                a.los,
                &cfg.channel,
                self.array,
                &mut self.streams.channel,
            ));
            self.lte.push(channel::sample_lte_channel(truth.distance, &cfg.channel, &mut self.streams.channel)?);
        }
        let p_max = cfg.env.p_max();
        self.prior_beam = self
            .tokens
            .iter()
            .map(|t| semantics::select_beam_prior(semantics::forward_axis(t.heading_hat), &self.codebook.angles))
            .collect();
        self.probe = self
            .mm
            .iter()
            .zip(&self.prior_beam)
            .map(|(h, b)| p_max * h.gain(&self.codebook.beams[*b].0) / cfg.channel.noise_power)
            .collect();
        self.state = encode_state(&self.agents, &self.tokens, &self.radar, &self.heatmap, &self.probe, self.scales)?;
        Ok(())
    }

    /// Scheduling priorities for the current slot.
    pub fn priorities(&self) -> Result<Vec<f64>> {
        (0..self.n_agents())
            .map(|i| {
                let risk = self.heatmap.risk_at(self.agents[i].position)?;
                let terms = PriorityTerms::new(
                    &self.tokens[i],
                    risk,
                    self.probe[i],
                    self.agents[i].los,
                    self.radar[i].angle,
                    &self.cfg.scheduler,
                );
                Ok(terms.combine(&self.cfg.scheduler.weights))
            })
            .collect()
    }

    pub fn decode(&self, action: &[f64]) -> Result<DecodedAction> {
        let rho = self.priorities()?;
        let los: Vec<bool> = self.agents.iter().map(|a| a.los).collect();
        decode_action(
            action,
            &rho,
            &los,
            self.cfg.scheduler.capacities(self.n_agents()),
            self.cfg.env.p_max(),
            self.codebook.len(),
            &self.prior_beam,
            self.cfg.scheduler.mm_threshold,
        )
    }

    fn sensing(&self, bandwidth: f64) -> SensingParams {
        self.cfg
            .metrics
            .sensing(self.cfg.radar.wavelength, self.cfg.radar.pulse_repetition, self.cfg.channel.pilot_count, bandwidth)
    }

    /// SINR, rate and perception value per agent under a decoded action.
    pub fn evaluate_links(&self, d: &DecodedAction) -> Result<Vec<LinkOutcome>> {
        let ch = &self.cfg.channel;
        let beams: Vec<(usize, Vec<Complex64>)> = (0..self.n_agents())
            .filter(|i| d.x[*i])
            .map(|i| {
                let s = d.power[i].sqrt();
                (i, self.codebook.beams[d.beam[i]].0.iter().map(|z| z * s).collect())
            })
            .collect();
        let vectors: Vec<Vec<Complex64>> = beams.iter().map(|(_, w)| w.clone()).collect();
        let mm_sensing = self.sensing(ch.mmwave_bandwidth);
        let lte_sensing = self.sensing(ch.lte_bandwidth);
        (0..self.n_agents())
            .map(|i| {
                let (rat, bandwidth, sinr, rate, sp) = if d.x[i] {
                    let k = beams.iter().position(|(j, _)| *j == i).expect("mmWave agent has a beam");
                    let sinr = channel::mmwave_sinr(&self.mm[i], &vectors, k, ch.noise_power)?;
                    let rate = channel::mmwave_rate(sinr, ch.mmwave_bandwidth, ch.frame_length, ch.pilot_count);
                    (Rat::MmWave, ch.mmwave_bandwidth, sinr, rate, &mm_sensing)
                } else {
                    let (sinr, rate) = channel::lte_sinr_rate(self.lte[i].gain, d.power[i], ch.noise_power, ch.lte_bandwidth);
                    (Rat::Lte, ch.lte_bandwidth, sinr, rate, &lte_sensing)
                };
                let perception = if sinr > 0.0 {
                    metrics::perception_term(rate, sinr, sp, CrbKind::Range)?
                        + metrics::perception_term(rate, sinr, sp, CrbKind::Velocity)?
                } else {
                    0.0
                };
                Ok(LinkOutcome {
                    rat,
                    power: d.power[i],
                    bandwidth,
                    sinr,
                    rate,
                    perception,
                })
            })
            .collect()
    }

    /// Decodes the action, evaluates links and rewards, advances the world
    /// one slot and re-senses it.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.slot >= self.cfg.env.horizon {
            return Err(Error::Usage("episode already finished".into()));
        }
        let rho = self.priorities()?;
        let decoded = self.decode(action)?;
        let links = self.evaluate_links(&decoded)?;
        let env_cfg = &self.cfg.env;
        let rewards: Vec<RewardBreakdown> = links
            .iter()
            .zip(&self.agents)
            .map(|(l, a)| compute_reward(l, self.cfg.scenario.min_rate.get(a.profile.act), env_cfg))
            .collect();
        let n = self.n_agents();
        let reward = rewards.iter().map(|r| r.total).sum::<f64>() / n as f64;
        let rates: Vec<f64> = links.iter().map(|l| l.rate).collect();
        let powers: Vec<f64> = links.iter().map(|l| l.power).collect();
        let bws: Vec<f64> = links.iter().map(|l| l.bandwidth).collect();
        let ee = metrics::energy_efficiency(&rates, &powers, &bws).unwrap_or(0.0);
        let mut pe = [0.0, 0.0];
        for l in &links {
            if l.sinr > 0.0 {
                let sp = self.sensing(l.bandwidth);
                pe[0] += metrics::perception_term(l.rate, l.sinr, &sp, CrbKind::Range)?;
                pe[1] += metrics::perception_term(l.rate, l.sinr, &sp, CrbKind::Velocity)?;
            }
        }
        let slot_metrics = SlotMetrics {
            mean_reward: reward,
            energy_efficiency: ee,
            pe_range: pe[0],
            pe_velocity: pe[1],
            objective: metrics::objective(ee, pe[0], pe[1], self.cfg.metrics.utility()),
            penalties: rewards.iter().filter(|r| r.penalty).count(),
            mmwave_users: decoded.x.iter().filter(|x| **x).count(),
        };
        let records = (0..n)
            .map(|i| {
                Ok(SlotRecord {
                    slot: self.slot,
                    agent: i,
                    rat: links[i].rat,
                    power: links[i].power,
                    beam: decoded.beam[i],
                    sinr: links[i].sinr,
                    rate: links[i].rate,
                    reward: rewards[i],
                    risk: self.heatmap.risk_at(self.agents[i].position)?,
                    priority: rho[i],
                })
            })
            .collect::<Result<Vec<_>>>()?;

        self.agents = scenario::step_kinematics(&self.agents, &self.cfg.scenario, &self.grid, &mut self.streams.kinematics);
        self.slot += 1;
        self.sense()?;
        Ok(StepOutcome {
            next_state: self.state.clone(),
            rewards,
            reward,
            done: self.slot >= self.cfg.env.horizon,
            metrics: slot_metrics,
            records,
        })
    }
}
