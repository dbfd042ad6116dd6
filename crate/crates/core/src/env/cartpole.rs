use alloc::vec::Vec;

use rand::Rng as _;

use super::{check_state, EnvId, Environment, StepOutcome};
use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::math;
use crate::seed::Rng;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
const FORCE: f64 = 10.0;
const DT: f64 = 0.02;
const ANGLE_LIMIT: f64 = 12.0 * core::f64::consts::PI / 180.0;
const POSITION_LIMIT: f64 = 2.4;
pub(crate) const MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub v: f64,
    pub theta: f64,
    pub omega: f64,
}

impl CartPoleState {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        check_state(values, 4)?;
        Ok(CartPoleState { x: values[0], v: values[1], theta: values[2], omega: values[3] })
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.v, self.theta, self.omega]
    }

    fn out_of_bounds(&self) -> bool {
        self.theta.abs() > ANGLE_LIMIT || self.x.abs() > POSITION_LIMIT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartPoleAction {
    Left,
    Right,
}

impl CartPoleAction {
    pub fn from_index(a: usize) -> Result<Self> {
        match a {
            0 => Ok(CartPoleAction::Left),
            1 => Ok(CartPoleAction::Right),
            _ => Err(invalid!("cart-pole action {a} out of range")),
        }
    }
}

/// Euler-integrated cart-pole transition. The flag reports the angle/position
/// thresholds (checked on entry and after the step); the step cap is the
/// environment's business.
pub fn cartpole_step(state: &CartPoleState, action: CartPoleAction) -> (CartPoleState, bool) {
    let force = match action {
        CartPoleAction::Left => -FORCE,
        CartPoleAction::Right => FORCE,
    };
    let (sin, cos) = (math::sin(state.theta), math::cos(state.theta));
    let temp = (force + POLE_MASS_LENGTH * state.omega * state.omega * sin) / TOTAL_MASS;
    let theta_acc =
        (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
    let next = CartPoleState {
        x: state.x + DT * state.v,
        v: state.v + DT * x_acc,
        theta: state.theta + DT * state.omega,
        omega: state.omega + DT * theta_acc,
    };
    let terminated = state.out_of_bounds() || next.out_of_bounds();
    (next, terminated)
}

pub(crate) fn features(state: &[f64]) -> Result<CostFeatures> {
    check_state(state, 4)?;
    Ok(CostFeatures::from_vec_unchecked(state.iter().map(|v| v * v).collect()))
}

pub(crate) fn episode_return(actions: &[usize]) -> f64 {
    actions.len().min(MAX_STEPS) as f64
}

/// Cart-pole balancing; one random start per episode, no task structure.
#[derive(Debug, Clone, Default)]
pub struct CartPole {
    state: CartPoleState,
    steps: usize,
    total_steps: u64,
}

impl CartPole {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Environment for CartPole {
    fn env_id(&self) -> EnvId {
        EnvId::CartPole
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        4
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn reset(&mut self, _task_id: u32, rng: &mut Rng) -> Vec<f64> {
        let mut draw = || rng.random_range(-0.05..0.05);
        self.state = CartPoleState { x: draw(), v: draw(), theta: draw(), omega: draw() };
        self.steps = 0;
        self.state.to_array().to_vec()
    }

    fn restart_from(&mut self, state: &[f64]) -> Result<()> {
        self.state = CartPoleState::from_slice(state)?;
        self.steps = 0;
        Ok(())
    }

    fn state(&self) -> Vec<f64> {
        self.state.to_array().to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let (next, out) = cartpole_step(&self.state, CartPoleAction::from_index(action)?);
        self.state = next;
        self.steps += 1;
        self.total_steps += 1;
        Ok(StepOutcome {
            state: next.to_array().to_vec(),
            terminated: out || self.steps >= MAX_STEPS,
        })
    }

    fn features(&self, state: &[f64], _action: Option<usize>) -> Result<CostFeatures> {
        features(state)
    }

    fn episode_return(&self, _states: &[Vec<f64>], actions: &[usize]) -> f64 {
        episode_return(actions)
    }

    fn env_steps(&self) -> u64 {
        self.total_steps
    }
}
