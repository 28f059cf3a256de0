//! Discrete-time simulator and learning-based resource controller for
//! UAV-assisted integrated sensing and communication (ISAC).
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: world model, configuration and agent kinematics
//! - [`radar`]: FMCW range / Doppler / angle measurement and estimation
//! - [`channel`]: mmWave sparse geometric channels, LTE flat fading, SINR and rates
//! - [`semantics`]: semantic token synthesis, heading beam prior, risk heatmap
//! - [`metrics`]: energy / perception efficiency and Cramér–Rao bounds
//! - [`scheduler`]: priority scores, RAT thresholding, capacity projection
//! - [`rl`]: a small from-scratch DDPG learner
//! - [`env`]: MDP glue (state encoding, action decoding, reward, stepping)
//! - [`diffusion`]: toy-scale forward / reverse diffusion process
//! - [`baselines`]: comparison catalog and relative-gap metric
//! - [`training`], [`sweep`] and [`report`]: experiment drivers and CSV output used by the CLI
//!
//! Data-parallel loops (seeds, baselines, sweep points) go through [`par`],
//! which uses rayon when the `parallel` feature is enabled and falls back to
//! a plain sequential map otherwise.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod diffusion;
pub mod env;
pub mod error;
pub mod metrics;
pub mod par;
pub mod radar;
pub mod report;
pub mod rl;
pub mod rng;
pub mod scenario;
pub mod scheduler;
pub mod semantics;
pub mod sweep;
pub mod training;

pub use config::Config;
pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
