use alloc::vec::Vec;

use rand::Rng as _;

use super::{check_state, EnvId, Environment, StepOutcome};
use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::math;
use crate::seed::{rng_from, splitmix64, Rng};

const GRAVITY: f64 = 1.6;
const MAIN_THRUST: f64 = 3.0;
const SIDE_TORQUE: f64 = 0.05;
pub(crate) const DT: f64 = 0.05;
const X_LIMIT: f64 = 2.0;
pub(crate) const MAX_STEPS: usize = 400;
const LANDING_BONUS: f64 = 100.0;
const THRUST_PENALTY: f64 = 0.1;
const TASK_SALT: u64 = 0x1A4D_E700;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LanderState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub theta: f64,
    pub omega: f64,
}

impl LanderState {
    pub fn from_slice(values: &[f64]) -> Result<Self> {
        check_state(values, 6)?;
        Ok(LanderState {
            x: values[0],
            y: values[1],
            vx: values[2],
            vy: values[3],
            theta: values[4],
            omega: values[5],
        })
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.vx, self.vy, self.theta, self.omega]
    }

    /// Touchdown tolerances: on the pad, slow, and nearly upright.
    pub fn soft_touchdown(&self) -> bool {
        self.x.abs() <= 0.2 && self.vx.abs() <= 0.5 && self.vy.abs() <= 1.0 && self.theta.abs() <= 0.3
    }

    /// Fixed initial state of a task.
    pub fn for_task(task_id: u32) -> Self {
        let mut rng = rng_from(splitmix64(TASK_SALT ^ u64::from(task_id)));
        LanderState {
            x: rng.random_range(-0.5..0.5),
            y: rng.random_range(1.0..1.4),
            vx: rng.random_range(-0.15..0.15),
            vy: rng.random_range(-0.2..0.0),
            theta: rng.random_range(-0.05..0.05),
            omega: rng.random_range(-0.02..0.02),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LanderAction {
    Noop,
    Main,
    Left,
    Right,
}

impl LanderAction {
    pub fn from_index(a: usize) -> Result<Self> {
        match a {
            0 => Ok(LanderAction::Noop),
            1 => Ok(LanderAction::Main),
            2 => Ok(LanderAction::Left),
            3 => Ok(LanderAction::Right),
            _ => Err(invalid!("lander action {a} out of range")),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Point-mass lander transition. Returns the next state, whether the episode
/// ended (ground contact or leaving the corridor) and whether it ended with a
/// soft touchdown on the pad.
pub fn lander_step(state: &LanderState, action: LanderAction) -> (LanderState, bool, bool) {
    let (mut ax, mut ay, mut torque) = (0.0, -GRAVITY, 0.0);
    match action {
        LanderAction::Noop => {}
        LanderAction::Main => {
            ax -= MAIN_THRUST * math::sin(state.theta);
            ay += MAIN_THRUST * math::cos(state.theta);
        }
        LanderAction::Left => torque = SIDE_TORQUE,
        LanderAction::Right => torque = -SIDE_TORQUE,
    }
    let next = LanderState {
        x: state.x + DT * state.vx,
        y: state.y + DT * state.vy,
        vx: state.vx + DT * ax,
        vy: state.vy + DT * ay,
        theta: state.theta + DT * state.omega,
        omega: state.omega + DT * torque,
    };
    let touched = next.y <= 0.0;
    let landed = touched && next.soft_touchdown();
    (next, touched || next.x.abs() > X_LIMIT, landed)
}

pub(crate) fn features(state: &[f64], action: Option<usize>) -> Result<CostFeatures> {
    check_state(state, 6)?;
    let control = match action {
        None => 0.0,
        Some(a) => {
            let a = LanderAction::from_index(a)?;
            if a == LanderAction::Noop {
                0.0
            } else {
                1.0
            }
        }
    };
    let mut values: Vec<f64> = state.iter().map(|v| v * v).collect();
    values.push(control);
    Ok(CostFeatures::from_vec_unchecked(values))
}

pub(crate) fn episode_return(states: &[Vec<f64>], actions: &[usize]) -> Result<f64> {
    let last = LanderState::from_slice(states.last().ok_or_else(|| invalid!("empty lander trajectory"))?)?;
    let landed = last.y <= 0.0 && last.soft_touchdown();
    let mut shaping = 0.0;
    for s in states {
        check_state(s, 6)?;
        shaping += (s[0] * s[0] + s[2] * s[2] + s[3] * s[3]) * DT;
    }
    let thrusts = actions.iter().filter(|a| **a != LanderAction::Noop.index()).count() as f64;
    Ok(if landed { LANDING_BONUS } else { 0.0 } - shaping - THRUST_PENALTY * thrusts)
}

/// Point-mass lunar lander. Each task has a fixed initial state.
#[derive(Debug, Clone, Default)]
pub struct Lander {
    state: LanderState,
    steps: usize,
    total_steps: u64,
}

impl Lander {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Environment for Lander {
    fn env_id(&self) -> EnvId {
        EnvId::Lander
    }

    fn obs_dim(&self) -> usize {
        6
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn feature_dim(&self) -> usize {
        7
    }

    fn max_steps(&self) -> usize {
        MAX_STEPS
    }

    fn reset(&mut self, task_id: u32, _rng: &mut Rng) -> Vec<f64> {
        self.state = LanderState::for_task(task_id);
        self.steps = 0;
        self.state.to_array().to_vec()
    }

    fn restart_from(&mut self, state: &[f64]) -> Result<()> {
        self.state = LanderState::from_slice(state)?;
        self.steps = 0;
        Ok(())
    }

    fn state(&self) -> Vec<f64> {
        self.state.to_array().to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let (next, done, _) = lander_step(&self.state, LanderAction::from_index(action)?);
        self.state = next;
        self.steps += 1;
        self.total_steps += 1;
        Ok(StepOutcome {
            state: next.to_array().to_vec(),
            terminated: done || self.steps >= MAX_STEPS,
        })
    }

    fn features(&self, state: &[f64], action: Option<usize>) -> Result<CostFeatures> {
        features(state, action)
    }

    fn episode_return(&self, states: &[Vec<f64>], actions: &[usize]) -> f64 {
        episode_return(states, actions).unwrap_or(f64::NAN)
    }

    fn env_steps(&self) -> u64 {
        self.total_steps
    }
}
