//! World model: agents, semantic vocabularies, occlusion and kinematics.
//!
//! The UAV hovers at a fixed ground point (by default just outside the west
//! edge of the arena) with its uniform linear array broadside facing `+x`,
//! so every agent sits in the array's front half-plane. Agents are 2-D
//! points moving at constant velocity with small per-slot heading jitter and
//! reflective arena walls. Activities follow a sticky Markov chain.

mod occlusion;
mod tables;

use std::f64::consts::{PI, TAU};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

pub use occlusion::{OcclusionConfig, OcclusionGrid};
pub use tables::{ActivityTable, TypeTable};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::rng::{self, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticType {
    Pedestrian,
    Bicycle,
    Motorcycle,
    Car,
    Bus,
}

impl SemanticType {
    pub const COUNT: usize = 5;
    pub const ALL: [SemanticType; Self::COUNT] = [
        SemanticType::Pedestrian,
        SemanticType::Bicycle,
        SemanticType::Motorcycle,
        SemanticType::Car,
        SemanticType::Bus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; Self::COUNT] {
        let mut v = [0.0; Self::COUNT];
        v[self.index()] = 1.0;
        v
    }
}

/// Reduced activity vocabulary (eight classes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityClass {
    Standing,
    Walking,
    Running,
    Talking,
    Carrying,
    Crossing,
    Turning,
    Stopping,
}

impl ActivityClass {
    pub const COUNT: usize = 8;
    pub const ALL: [ActivityClass; Self::COUNT] = [
        ActivityClass::Standing,
        ActivityClass::Walking,
        ActivityClass::Running,
        ActivityClass::Talking,
        ActivityClass::Carrying,
        ActivityClass::Crossing,
        ActivityClass::Turning,
        ActivityClass::Stopping,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn one_hot(self) -> [f64; Self::COUNT] {
        let mut v = [0.0; Self::COUNT];
        v[self.index()] = 1.0;
        v
    }
}

/// A point of the joint semantic space `type × activity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemanticProfile {
    pub sem: SemanticType,
    pub act: ActivityClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    /// Ground position (m).
    pub position: [f64; 2],
    /// Ground velocity (m/s).
    pub velocity: [f64; 2],
    /// Facing direction in `[0, 2π)`.
    pub heading_true: f64,
    pub profile: SemanticProfile,
    pub los: bool,
}

impl AgentState {
    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    /// Arena extent `[width, height]` (m); the arena spans `[0, w] × [0, h]`.
    pub arena_size: [f64; 2],
    /// UAV hover altitude (m).
    pub uav_altitude: f64,
    /// UAV ground point (m); must satisfy `x < 0` or lie on the west edge so
    /// all agents are in front of the array.
    pub uav_ground_position: [f64; 2],
    /// Scheduling slot (s).
    pub slot_duration: f64,
    pub rng_seed: u64,
    /// Token type/activity confusion probability.
    pub semantic_noise: f64,
    /// Token heading noise std-dev (rad).
    pub heading_noise: f64,
    /// Half-width of the initial heading offset around the motion direction (rad).
    pub heading_spread: f64,
    /// Per-slot heading jitter std-dev for moving agents (rad).
    pub heading_jitter: f64,
    /// Probability that an agent initially moves along its bearing away from the UAV.
    pub flow_alignment: f64,
    /// Diagonal of the activity transition matrix.
    pub activity_stay_probability: f64,
    /// Per-type speed cap (m/s).
    pub max_speed: TypeTable,
    pub type_prior: TypeTable,
    pub activity_prior: ActivityTable,
    /// Fraction of the per-type speed cap used by each activity.
    pub activity_speed: ActivityTable,
    /// Minimum rate per activity (bit/s).
    pub min_rate: ActivityTable,
    pub occlusion: OcclusionConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_agents: 10,
            arena_size: [300.0, 300.0],
            uav_altitude: 120.0,
            uav_ground_position: [-50.0, 150.0],
            slot_duration: 0.1,
            rng_seed: 1,
            semantic_noise: 0.05,
            heading_noise: 5.0_f64.to_radians(),
            heading_spread: 3.0_f64.to_radians(),
            heading_jitter: 0.01,
            flow_alignment: 1.0,
            activity_stay_probability: 0.98,
            max_speed: TypeTable {
                pedestrian: 2.0,
                bicycle: 6.0,
                motorcycle: 12.0,
                car: 14.0,
                bus: 10.0,
            },
            type_prior: TypeTable {
                pedestrian: 0.35,
                bicycle: 0.15,
                motorcycle: 0.1,
                car: 0.3,
                bus: 0.1,
            },
            activity_prior: ActivityTable {
                standing: 0.2,
                walking: 0.25,
                running: 0.08,
                talking: 0.1,
                carrying: 0.1,
                crossing: 0.1,
                turning: 0.09,
                stopping: 0.08,
            },
            activity_speed: ActivityTable {
                standing: 0.0,
                walking: 0.35,
                running: 0.9,
                talking: 0.0,
                carrying: 0.3,
                crossing: 0.6,
                turning: 0.4,
                stopping: 0.1,
            },
            min_rate: ActivityTable {
                standing: 1.0e6,
                walking: 2.0e6,
                running: 20.0e6,
                talking: 1.0e6,
                carrying: 2.0e6,
                crossing: 20.0e6,
                turning: 4.0e6,
                stopping: 1.0e6,
            },
            occlusion: OcclusionConfig::default(),
        }
    }
}

fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, reason))
    }
}

fn check_positive_table(values: &[f64], key: &str, allow_zero: bool) -> Result<()> {
    for v in values {
        let ok = v.is_finite() && if allow_zero { *v >= 0.0 } else { *v > 0.0 };
        check(ok, key, if allow_zero { "entries must be finite and >= 0" } else { "entries must be finite and > 0" })?;
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check(self.n_agents >= 1, "n_agents", "must be at least 1")?;
        check(
            self.arena_size.iter().all(|v| v.is_finite() && *v > 0.0),
            "arena_size",
            "both extents must be positive",
        )?;
        check(
            self.uav_altitude.is_finite() && self.uav_altitude > 0.0,
            "uav_altitude",
            "must be positive",
        )?;
        check(
            self.uav_ground_position[0] <= 0.0
                && (0.0..=self.arena_size[1]).contains(&self.uav_ground_position[1]),
            "uav_ground_position",
            "must satisfy x <= 0 and 0 <= y <= arena height (array faces +x)",
        )?;
        check(self.slot_duration > 0.0, "slot_duration", "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.semantic_noise),
            "semantic_noise",
            "must lie in [0, 1]",
        )?;
        check(self.heading_noise >= 0.0, "heading_noise", "must be >= 0")?;
        check(self.heading_spread >= 0.0, "heading_spread", "must be >= 0")?;
        check(self.heading_jitter >= 0.0, "heading_jitter", "must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.flow_alignment),
            "flow_alignment",
            "must lie in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.activity_stay_probability),
            "activity_stay_probability",
            "must lie in [0, 1]",
        )?;
        check_positive_table(&self.max_speed.values(), "max_speed", false)?;
        check_positive_table(&self.type_prior.values(), "type_prior", true)?;
        check(self.type_prior.values().iter().sum::<f64>() > 0.0, "type_prior", "must not be all zero")?;
        check_positive_table(&self.activity_prior.values(), "activity_prior", true)?;
        check(self.activity_prior.values().iter().sum::<f64>() > 0.0, "activity_prior", "must not be all zero")?;
        check_positive_table(&self.activity_speed.values(), "activity_speed", true)?;
        check(
            self.activity_speed.values().iter().all(|v| *v <= 1.0),
            "activity_speed",
            "fractions must not exceed 1",
        )?;
        check_positive_table(&self.min_rate.values(), "min_rate", false)?;
        check(self.occlusion.cell_size > 0.0, "occlusion.cell_size", "must be positive")?;
        for b in &self.occlusion.blocks {
            check(b[0] <= b[2] && b[1] <= b[3], "occlusion.blocks", "each block must be [x_min, y_min, x_max, y_max]")?;
        }
        Ok(())
    }

    pub fn uav_position(&self) -> [f64; 3] {
        [
            self.uav_ground_position[0],
            self.uav_ground_position[1],
            self.uav_altitude,
        ]
    }

    pub fn occlusion_grid(&self) -> OcclusionGrid {
        OcclusionGrid::from_config(self.arena_size, &self.occlusion)
    }

    /// Row-stochastic activity transition matrix: stay with
    /// `activity_stay_probability`, otherwise move to another class in
    /// proportion to the activity prior.
    pub fn transition_matrix(&self) -> [[f64; ActivityClass::COUNT]; ActivityClass::COUNT] {
        let prior = self.activity_prior.values();
        let mut m = [[0.0; ActivityClass::COUNT]; ActivityClass::COUNT];
        for (i, row) in m.iter_mut().enumerate() {
            let others: f64 = prior.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p).sum();
            let stay = self.activity_stay_probability;
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = if i == j {
                    stay
                } else if others > 0.0 {
                    (1.0 - stay) * prior[j] / others
                } else {
                    (1.0 - stay) / (ActivityClass::COUNT - 1) as f64
                };
            }
        }
        m
    }

    /// Largest speed any agent can reach (m/s).
    pub fn speed_ceiling(&self) -> f64 {
        self.max_speed.values().into_iter().fold(0.0, f64::max)
    }

    /// Largest UAV–agent slant range over the arena (m).
    pub fn max_slant_range(&self) -> f64 {
        let [ux, uy, h] = self.uav_position();
        let corners = [
            [0.0, 0.0],
            [self.arena_size[0], 0.0],
            [0.0, self.arena_size[1]],
            self.arena_size,
        ];
        corners
            .iter()
            .map(|c| ((c[0] - ux).powi(2) + (c[1] - uy).powi(2) + h * h).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Reads and validates a configuration file (see the README for the grammar).
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_toml_str(&text)
}

fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // floating round-off: fall back to the last class with mass
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn draw_speed<R: Rng + ?Sized>(cfg: &ScenarioConfig, profile: SemanticProfile, rng: &mut R) -> f64 {
    let cap = cfg.max_speed.get(profile.sem) * cfg.activity_speed.get(profile.act);
    cap * Uniform::new_inclusive(0.5, 1.0).expect("valid range").sample(rng)
}

/// Bearing of `p` from the UAV ground point, measured from the array broadside (+x).
pub fn bearing_from_uav(cfg: &ScenarioConfig, p: [f64; 2]) -> f64 {
    let [ux, uy, _] = cfg.uav_position();
    (p[1] - uy).atan2(p[0] - ux)
}

pub fn line_of_sight(cfg: &ScenarioConfig, grid: &OcclusionGrid, p: [f64; 2]) -> bool {
    grid.segment_clear(cfg.uav_ground_position, p)
}

/// Samples the initial agent population.
///
/// Positions are uniform over the arena; type and activity come from the
/// configured priors. With probability `flow_alignment` an agent heads
/// along its bearing away from the UAV, otherwise in a uniform direction.
/// The facing direction is within `heading_spread` of the motion direction.
pub fn init_world(cfg: &ScenarioConfig, seed: u64) -> Vec<AgentState> {
    let grid = cfg.occlusion_grid();
    let mut rng = rng::stream(seed, Stream::World, 0);
    let types = cfg.type_prior.values();
    let acts = cfg.activity_prior.values();
    (0..cfg.n_agents)
        .map(|id| {
            let position = [
                rng.random::<f64>() * cfg.arena_size[0],
                rng.random::<f64>() * cfg.arena_size[1],
            ];
            let profile = SemanticProfile {
                sem: SemanticType::ALL[sample_weighted(&types, &mut rng)],
                act: ActivityClass::ALL[sample_weighted(&acts, &mut rng)],
            };
            let aligned = rng.random::<f64>() < cfg.flow_alignment;
            let uniform_dir = rng.random::<f64>() * TAU;
            let direction = if aligned {
                bearing_from_uav(cfg, position)
            } else {
                uniform_dir
            };
            let offset = (2.0 * rng.random::<f64>() - 1.0) * cfg.heading_spread;
            let speed = draw_speed(cfg, profile, &mut rng);
            AgentState {
                id,
                position,
                velocity: [speed * direction.cos(), speed * direction.sin()],
                heading_true: wrap_angle(direction + offset),
                profile,
                los: line_of_sight(cfg, &grid, position),
            }
        })
        .collect()
}

/// Advances one agent by `dt` with reflective walls; returns the new
/// position, velocity and heading. No randomness.
pub fn advance(agent: &AgentState, dt: f64, arena: [f64; 2]) -> ([f64; 2], [f64; 2], f64) {
    let mut pos = [
        agent.position[0] + agent.velocity[0] * dt,
        agent.position[1] + agent.velocity[1] * dt,
    ];
    let mut vel = agent.velocity;
    let mut heading = agent.heading_true;
    for axis in 0..2 {
        let hi = arena[axis];
        // a few bounces cover any dt; the loop bound keeps pathological input finite
        for _ in 0..8 {
            if pos[axis] < 0.0 {
                pos[axis] = -pos[axis];
            } else if pos[axis] > hi {
                pos[axis] = 2.0 * hi - pos[axis];
            } else {
                break;
            }
            vel[axis] = -vel[axis];
            heading = if axis == 0 { PI - heading } else { -heading };
        }
        pos[axis] = pos[axis].clamp(0.0, hi);
    }
    (pos, vel, wrap_angle(heading))
}

/// One slot of world dynamics: activity transitions, heading jitter,
/// reflective motion and LoS refresh.
pub fn step_kinematics(
    agents: &[AgentState],
    cfg: &ScenarioConfig,
    grid: &OcclusionGrid,
    rng: &mut SimRng,
) -> Vec<AgentState> {
    let matrix = cfg.transition_matrix();
    agents
        .iter()
        .map(|agent| {
            let mut next = agent.clone();
            let row = matrix[agent.profile.act.index()];
            let new_act = ActivityClass::ALL[sample_weighted(&row, rng)];
            let jitter = gaussian(rng) * cfg.heading_jitter;
            let speed_draw: f64 = rng.random();
            if new_act != agent.profile.act {
                next.profile.act = new_act;
                let cap = cfg.max_speed.get(next.profile.sem) * cfg.activity_speed.get(new_act);
                let speed = cap * (0.5 + 0.5 * speed_draw);
                next.velocity = [speed * next.heading_true.cos(), speed * next.heading_true.sin()];
            }
            if next.speed() > 0.0 && cfg.heading_jitter > 0.0 {
                let (s, c) = jitter.sin_cos();
                let [vx, vy] = next.velocity;
                next.velocity = [vx * c - vy * s, vx * s + vy * c];
                next.heading_true = wrap_angle(next.heading_true + jitter);
            }
            let (pos, vel, heading) = advance(&next, cfg.slot_duration, cfg.arena_size);
            next.position = pos;
            next.velocity = vel;
            next.heading_true = heading;
            next.los = line_of_sight(cfg, grid, pos);
            next
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent_at(position: [f64; 2], velocity: [f64; 2]) -> AgentState {
        AgentState {
            id: 0,
            position,
            velocity,
            heading_true: velocity[1].atan2(velocity[0]).rem_euclid(TAU),
            profile: SemanticProfile {
                sem: SemanticType::Pedestrian,
                act: ActivityClass::Walking,
            },
            los: true,
        }
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let cfg = ScenarioConfig::default();
        assert_eq!(init_world(&cfg, 1), init_world(&cfg, 1));
        let a: Vec<_> = init_world(&cfg, 1).iter().map(|a| a.position).collect();
        let b: Vec<_> = init_world(&cfg, 2).iter().map(|a| a.position).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn init_respects_count_bounds_and_speed_caps() {
        let cfg = ScenarioConfig {
            n_agents: 19,
            ..Default::default()
        };
        let agents = init_world(&cfg, 4);
        assert_eq!(agents.len(), 19);
        for a in &agents {
            assert!((0.0..=300.0).contains(&a.position[0]) && (0.0..=300.0).contains(&a.position[1]));
            assert!(a.speed() <= cfg.max_speed.get(a.profile.sem) + 1e-12);
            assert!((0.0..TAU).contains(&a.heading_true));
        }
    }

    #[test]
    fn heading_within_spread_of_motion() {
        let cfg = ScenarioConfig::default();
        for a in init_world(&cfg, 9).iter().filter(|a| a.speed() > 0.0) {
            let motion = a.velocity[1].atan2(a.velocity[0]);
            let diff = (a.heading_true - motion).sin().asin().abs();
            assert!(diff <= cfg.heading_spread + 1e-12);
        }
    }

    #[test]
    fn zero_velocity_keeps_position() {
        let a = agent_at([10.0, 20.0], [0.0, 0.0]);
        let (p, v, _) = advance(&a, 0.1, [100.0, 100.0]);
        assert_eq!(p, [10.0, 20.0]);
        assert_eq!(v, [0.0, 0.0]);
    }

    #[test]
    fn unit_velocity_advances_one_tenth_of_a_metre() {
        let a = agent_at([10.0, 20.0], [1.0, 0.0]);
        let (p, _, _) = advance(&a, 0.1, [100.0, 100.0]);
        assert!((p[0] - 10.1).abs() < 1e-12);
        assert_eq!(p[1], 20.0);
    }

    #[test]
    fn outward_motion_at_edge_reflects() {
        let a = agent_at([99.95, 50.0], [1.0, 0.0]);
        let (p, v, heading) = advance(&a, 0.1, [100.0, 100.0]);
        assert!((p[0] - 99.95).abs() < 1e-9);
        assert_eq!(v, [-1.0, 0.0]);
        assert!((heading - PI).abs() < 1e-12);

        let b = agent_at([50.0, 0.02], [0.0, -1.0]);
        let (p, v, heading) = advance(&b, 0.1, [100.0, 100.0]);
        assert!((p[1] - 0.08).abs() < 1e-12);
        assert_eq!(v, [0.0, 1.0]);
        assert!((heading - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn transition_rows_are_stochastic() {
        let m = ScenarioConfig::default().transition_matrix();
        for row in m {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(-PI / 2.0) - 1.5 * PI).abs() < 1e-12);
        assert!(wrap_angle(-1e-18) < TAU);
        assert!((wrap_angle(5.0 * TAU + 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kinematics_keep_agents_in_arena() {
        let cfg = ScenarioConfig {
            max_speed: TypeTable {
                pedestrian: 60.0,
                bicycle: 60.0,
                motorcycle: 60.0,
                car: 60.0,
                bus: 60.0,
            },
            activity_stay_probability: 0.5,
            ..Default::default()
        };
        let grid = cfg.occlusion_grid();
        let mut agents = init_world(&cfg, 3);
        for slot in 0..500 {
            let mut rng = rng::stream(3, Stream::Kinematics, slot);
            agents = step_kinematics(&agents, &cfg, &grid, &mut rng);
            for a in &agents {
                assert!((0.0..=300.0).contains(&a.position[0]));
                assert!((0.0..=300.0).contains(&a.position[1]));
                assert_eq!(a.los, line_of_sight(&cfg, &grid, a.position));
            }
        }
    }

    #[test]
    fn validation_names_offending_key() {
        let cfg = ScenarioConfig {
            n_agents: 0,
            ..Default::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("n_agents"), "{err}");
    }
}
