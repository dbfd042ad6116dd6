//! Episodic environments.
//!
//! Two physics environments ship with the crate ([`CartPole`] and a point-mass
//! [`Lander`]); [`toy::TwoStateMdp`] is a tiny enumerable MDP used to check
//! gradient estimators. All of them implement [`Environment`].

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::CostFeatures;
use crate::seed::Rng;
use crate::trajectory::Trajectory;

mod cartpole;
mod lander;
pub mod toy;

pub use cartpole::{cartpole_step, CartPole, CartPoleAction, CartPoleState};
pub use lander::{lander_step, Lander, LanderAction, LanderState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    #[serde(rename = "cartpole")]
    CartPole,
    Lander,
    Toy,
}

impl EnvId {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::CartPole => "cartpole",
            EnvId::Lander => "lander",
            EnvId::Toy => "toy",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvId::CartPole),
            "lander" => Ok(EnvId::Lander),
            "toy" => Ok(EnvId::Toy),
            other => Err(invalid!("unknown environment id {other:?}")),
        }
    }
}

/// Physical state of either built-in environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvState {
    CartPole(CartPoleState),
    Lander(LanderState),
}

impl EnvState {
    pub fn from_slice(env_id: EnvId, values: &[f64]) -> Result<Self> {
        match env_id {
            EnvId::CartPole => CartPoleState::from_slice(values).map(EnvState::CartPole),
            EnvId::Lander => LanderState::from_slice(values).map(EnvState::Lander),
            EnvId::Toy => Err(invalid!("the toy MDP has no physical state")),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            EnvState::CartPole(s) => s.to_array().to_vec(),
            EnvState::Lander(s) => s.to_array().to_vec(),
        }
    }
}

/// Result of one environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub terminated: bool,
}

/// A resettable episodic environment with discrete actions and per-state cost features.
pub trait Environment {
    fn env_id(&self) -> EnvId;
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// Hard cap on the number of actions per episode.
    fn max_steps(&self) -> usize;
    /// Starts a new episode for `task_id` and returns its first state.
    fn reset(&mut self, task_id: u32, rng: &mut Rng) -> Vec<f64>;
    /// Starts a new episode from an explicit state; the step cap restarts too.
    fn restart_from(&mut self, state: &[f64]) -> Result<()>;
    fn state(&self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepOutcome>;
    /// Cost features of `state`; `action` is the action taken there (`None` for terminal states).
    fn features(&self, state: &[f64], action: Option<usize>) -> Result<CostFeatures>;
    /// Ground-truth return of a finished episode.
    fn episode_return(&self, states: &[Vec<f64>], actions: &[usize]) -> f64;
    /// Total transitions simulated by this instance.
    fn env_steps(&self) -> u64;
}

/// Hand-crafted cost features: squared state coordinates, plus a thrust indicator
/// for the lander.
pub fn extract_features(env_id: EnvId, state: &[f64], action: Option<usize>) -> Result<CostFeatures> {
    match env_id {
        EnvId::CartPole => cartpole::features(state),
        EnvId::Lander => lander::features(state, action),
        EnvId::Toy => Err(invalid!("no hand-crafted features for environment {env_id}")),
    }
}

/// Ground-truth return for a recorded trajectory.
pub fn true_return(env_id: EnvId, traj: &Trajectory) -> Result<f64> {
    match env_id {
        EnvId::CartPole => Ok(cartpole::episode_return(&traj.actions)),
        EnvId::Lander => lander::episode_return(&traj.states, &traj.actions),
        EnvId::Toy => Err(invalid!("no ground-truth return for environment {env_id}")),
    }
}

/// Builds a fresh instance of a built-in environment.
pub fn make_env(env_id: EnvId) -> Result<Box<dyn Environment + Send>> {
    match env_id {
        EnvId::CartPole => Ok(Box::new(CartPole::new())),
        EnvId::Lander => Ok(Box::new(Lander::new())),
        EnvId::Toy => Ok(Box::new(toy::TwoStateMdp::default())),
    }
}

pub(crate) fn check_state(values: &[f64], dim: usize) -> Result<()> {
    if values.len() != dim {
        return Err(invalid!("expected a {dim}-dimensional state, got {}", values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("state contains non-finite values"));
    }
    Ok(())
}
