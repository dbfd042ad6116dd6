//! Softmax MLP policies over discrete actions.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::nn::{self, Architecture};
use crate::seed::{rng_from, Rng};
use crate::trajectory::Trajectory;

/// Format tag written into policy files.
pub const POLICY_VERSION: &str = "minsubfi-policy/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub architecture: Architecture,
    pub weights: Vec<f64>,
    pub version: String,
}

/// One hidden layer of width 32.
pub fn default_architecture(obs_dim: usize, num_actions: usize) -> Architecture {
    Architecture { input_dim: obs_dim, hidden: vec![32], output_dim: num_actions, activation: Default::default() }
}

impl PolicyParams {
    pub fn new(architecture: Architecture, weights: Vec<f64>) -> Result<Self> {
        let p = PolicyParams { architecture, weights, version: POLICY_VERSION.to_string() };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(architecture: Architecture) -> Self {
        let n = architecture.param_count();
        PolicyParams { architecture, weights: vec![0.0; n], version: POLICY_VERSION.to_string() }
    }

    /// Xavier-uniform initialization.
    pub fn random(architecture: Architecture, rng: &mut Rng) -> Self {
        let weights = nn::xavier_init(&architecture, rng);
        PolicyParams { architecture, weights, version: POLICY_VERSION.to_string() }
    }

    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        if self.architecture.output_dim < 2 {
            return Err(invalid!("a policy needs at least two actions"));
        }
        self.architecture.check_weights(&self.weights)
    }

    pub fn num_actions(&self) -> usize {
        self.architecture.output_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.architecture.input_dim
    }

    pub fn logits(&self, state: &[f64]) -> Result<Vec<f64>> {
        nn::forward(&self.architecture, &self.weights, state)
    }

    /// Softmax action probabilities.
    pub fn action_distribution(&self, state: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(state)?))
    }

    pub fn log_prob(&self, state: &[f64], action: usize) -> Result<f64> {
        self.check_action(action)?;
        Ok(log_softmax(&self.logits(state)?)[action])
    }

    /// Gradient of `log π(action | state)` with respect to the flat weights.
    pub fn grad_log_prob(&self, state: &[f64], action: usize) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.weights.len()];
        self.accumulate_grad_log_prob(state, action, 1.0, &mut grad)?;
        Ok(grad)
    }

    /// Adds `scale · ∇ log π(action | state)` to `grad` and returns the log-probability.
    pub fn accumulate_grad_log_prob(&self, state: &[f64], action: usize, scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.check_action(action)?;
        let (logits, cache) = nn::forward_cached(&self.architecture, &self.weights, state)?;
        let lp = log_softmax(&logits);
        if scale != 0.0 {
            let g_out: Vec<f64> = lp
                .iter()
                .enumerate()
                .map(|(a, l)| scale * (if a == action { 1.0 } else { 0.0 } - math::exp(*l)))
                .collect();
            nn::backward(&self.architecture, &self.weights, &cache, &g_out, grad);
        }
        Ok(lp[action])
    }

    /// Samples an action and returns it with its log-probability.
    pub fn sample(&self, state: &[f64], rng: &mut Rng) -> Result<(usize, f64)> {
        let lp = log_softmax(&self.logits(state)?);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (a, l) in lp.iter().enumerate() {
            acc += math::exp(*l);
            if u < acc {
                return Ok((a, *l));
            }
        }
        let last = lp.len() - 1;
        Ok((last, lp[last]))
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action >= self.num_actions() {
            return Err(invalid!("action {action} out of range for {} actions", self.num_actions()));
        }
        Ok(())
    }
}

pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| math::exp(l - m)).sum();
    let lz = m + math::ln(z);
    logits.iter().map(|l| l - lz).collect()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| math::exp(l - m)).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Anything that picks actions: learned policies and scripted demonstrators.
pub trait ActionSampler {
    /// Called once before each episode.
    fn start_episode(&mut self, _rng: &mut Rng) {}
    /// Chosen action and, when known, its log-probability.
    fn sample_action(&mut self, state: &[f64], rng: &mut Rng) -> Result<(usize, Option<f64>)>;
}

impl ActionSampler for PolicyParams {
    fn sample_action(&mut self, state: &[f64], rng: &mut Rng) -> Result<(usize, Option<f64>)> {
        self.sample(state, rng).map(|(a, lp)| (a, Some(lp)))
    }
}

impl ActionSampler for &PolicyParams {
    fn sample_action(&mut self, state: &[f64], rng: &mut Rng) -> Result<(usize, Option<f64>)> {
        self.sample(state, rng).map(|(a, lp)| (a, Some(lp)))
    }
}

/// Runs one episode of `sampler` in `env`.
///
/// The episode starts from `env.reset(task_id)` or, when `start_state` is
/// given, exactly at that state. At most `max_steps` actions are taken.
/// Step features are the environment's hand-crafted features.
pub fn run_episode<S: ActionSampler + ?Sized>(
    sampler: &mut S,
    env: &mut dyn Environment,
    task_id: u32,
    seed: u64,
    start_state: Option<&[f64]>,
    max_steps: usize,
) -> Result<Trajectory> {
    let mut rng = rng_from(seed);
    let first = match start_state {
        Some(s) => {
            env.restart_from(s)?;
            s.to_vec()
        }
        None => env.reset(task_id, &mut rng),
    };
    sampler.start_episode(&mut rng);
    let mut states = vec![first];
    let mut actions = Vec::new();
    let mut logprobs = Vec::new();
    let mut all_known = true;
    while actions.len() < max_steps {
        let state = states.last().expect("nonempty");
        let (a, lp) = sampler.sample_action(state, &mut rng)?;
        match lp {
            Some(lp) => logprobs.push(lp),
            None => all_known = false,
        }
        let out = env.step(a)?;
        actions.push(a);
        states.push(out.state);
        if out.terminated {
            break;
        }
    }
    let step_features = states
        .iter()
        .enumerate()
        .map(|(t, s)| env.features(s, actions.get(t).copied()))
        .collect::<Result<Vec<_>>>()?;
    let true_return = env.episode_return(&states, &actions);
    Ok(Trajectory {
        env_id: env.env_id(),
        task_id,
        seed,
        states,
        actions,
        step_features,
        logprobs: all_known.then_some(logprobs),
        true_return,
    })
}

/// Samples one trajectory from the policy.
pub fn rollout(
    params: &PolicyParams,
    env: &mut dyn Environment,
    task_id: u32,
    seed: u64,
    start_state: Option<&[f64]>,
    max_steps: usize,
) -> Result<Trajectory> {
    if params.obs_dim() != env.obs_dim() || params.num_actions() != env.num_actions() {
        return Err(invalid!("policy and environment dimensions disagree"));
    }
    run_episode(&mut { params }, env, task_id, seed, start_state, max_steps)
}

/// `Σ_t log π(a_t | s_t)` over a trajectory.
pub fn traj_log_prob(params: &PolicyParams, traj: &Trajectory) -> Result<f64> {
    traj.actions
        .iter()
        .zip(&traj.states)
        .map(|(a, s)| params.log_prob(s, *a))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: nn::Optimizer,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { epochs: 100, learning_rate: 1e-2, batch_size: 32, seed: 0, optimizer: nn::Optimizer::Adam }
    }
}

/// Mean negative log-likelihood of the demonstrated actions.
pub fn bc_nll(params: &PolicyParams, demos: &[Trajectory]) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for d in demos {
        total -= traj_log_prob(params, d)?;
        count += d.actions.len();
    }
    if count == 0 {
        return Err(invalid!("no demonstrated actions"));
    }
    Ok(total / count as f64)
}

/// Behavior cloning by minibatch SGD on the action negative log-likelihood.
///
/// Returns the trained policy and its final mean NLL on all pairs.
pub fn bc_train(demos: &[Trajectory], arch: &Architecture, cfg: &BcConfig) -> Result<(PolicyParams, f64)> {
    let pairs: Vec<(&[f64], usize)> = demos
        .iter()
        .flat_map(|d| d.states.iter().zip(&d.actions).map(|(s, a)| (s.as_slice(), *a)))
        .collect();
    if pairs.is_empty() {
        return Err(invalid!("behavior cloning needs at least one state-action pair"));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config("batch size and learning rate must be positive".to_string()));
    }
    let mut rng = rng_from(cfg.seed);
    let mut params = PolicyParams::random(arch.clone(), &mut rng);
    params.validate()?;
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut grad = vec![0.0; params.weights.len()];
    let mut adam = match cfg.optimizer {
        nn::Optimizer::Adam => Some(nn::Adam::new(params.weights.len(), cfg.learning_rate)),
        nn::Optimizer::Sgd => None,
    };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            // gradient of the batch NLL
            let scale = -1.0 / batch.len() as f64;
            for i in batch {
                let (s, a) = pairs[*i];
                params.accumulate_grad_log_prob(s, a, scale, &mut grad)?;
            }
            match adam.as_mut() {
                Some(opt) => opt.step(&mut params.weights, &grad),
                None => params.weights.iter_mut().zip(&grad).for_each(|(w, g)| *w -= cfg.learning_rate * g),
            }
        }
    }
    let nll = bc_nll(&params, demos)?;
    if !nll.is_finite() {
        return Err(Error::Numerical("behavior cloning diverged".to_string()));
    }
    Ok((params, nll))
}
