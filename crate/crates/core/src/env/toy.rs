//! A two-state, two-action MDP small enough to enumerate every trajectory.
//!
//! The agent starts in state 0. Action `a` moves it to state `a`. Episodes last
//! `horizon` actions. Observations are one-hot state indicators and the cost
//! features of state `s` are `[1 + s, 2 − s]`, so trajectory totals count visits.

use alloc::vec;
use alloc::vec::Vec;

use super::{EnvId, Environment, StepOutcome};
use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::seed::Rng;

#[derive(Debug, Clone)]
pub struct TwoStateMdp {
    horizon: usize,
    state: usize,
    steps: usize,
    total_steps: u64,
}

impl TwoStateMdp {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon > 0, "horizon must be positive");
        TwoStateMdp { horizon, state: 0, steps: 0, total_steps: 0 }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn observation(state: usize) -> Vec<f64> {
        let mut o = vec![0.0; 2];
        o[state] = 1.0;
        o
    }

    pub fn state_features(state: usize) -> CostFeatures {
        CostFeatures::from_vec_unchecked(vec![1.0 + state as f64, 2.0 - state as f64])
    }

    fn decode(obs: &[f64]) -> Result<usize> {
        match obs {
            [a, b] if *a == 1.0 && *b == 0.0 => Ok(0),
            [a, b] if *a == 0.0 && *b == 1.0 => Ok(1),
            _ => Err(invalid!("not a one-hot toy state: {obs:?}")),
        }
    }
}

impl Default for TwoStateMdp {
    fn default() -> Self {
        TwoStateMdp::new(3)
    }
}

impl Environment for TwoStateMdp {
    fn env_id(&self) -> EnvId {
        EnvId::Toy
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        2
    }

    fn max_steps(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, _task_id: u32, _rng: &mut Rng) -> Vec<f64> {
        self.state = 0;
        self.steps = 0;
        Self::observation(0)
    }

    fn restart_from(&mut self, state: &[f64]) -> Result<()> {
        self.state = Self::decode(state)?;
        self.steps = 0;
        Ok(())
    }

    fn state(&self) -> Vec<f64> {
        Self::observation(self.state)
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if action > 1 {
            return Err(invalid!("toy action {action} out of range"));
        }
        self.state = action;
        self.steps += 1;
        self.total_steps += 1;
        Ok(StepOutcome { state: Self::observation(self.state), terminated: self.steps >= self.horizon })
    }

    fn features(&self, state: &[f64], _action: Option<usize>) -> Result<CostFeatures> {
        Ok(Self::state_features(Self::decode(state)?))
    }

    fn episode_return(&self, _states: &[Vec<f64>], actions: &[usize]) -> f64 {
        actions.iter().filter(|a| **a == 0).count() as f64
    }

    fn env_steps(&self) -> u64 {
        self.total_steps
    }
}
