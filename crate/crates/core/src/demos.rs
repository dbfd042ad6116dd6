//! Demonstration sets and the scripted demonstrators that produce them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::env::{make_env, EnvId};
use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::policy::{run_episode, ActionSampler};
use crate::seed::{derive, splitmix64, Rng, Stream};
use crate::trajectory::{PaddingConfig, Trajectory};

/// Demonstrations, each tagged with the task it was recorded on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemoSet {
    demos: Vec<Trajectory>,
}

impl DemoSet {
    /// Validates every trajectory and checks that they share one environment and feature dimension.
    pub fn new(demos: Vec<Trajectory>) -> Result<Self> {
        if let Some(first) = demos.first() {
            for d in &demos {
                d.validate()?;
                if d.env_id != first.env_id {
                    return Err(invalid!("demonstrations from different environments"));
                }
                if d.feature_dim() != first.feature_dim() {
                    return Err(invalid!("demonstrations with different feature dimensions"));
                }
            }
        }
        Ok(DemoSet { demos })
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn as_slice(&self) -> &[Trajectory] {
        &self.demos
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Trajectory> {
        self.demos.iter()
    }

    pub fn into_vec(self) -> Vec<Trajectory> {
        self.demos
    }

    pub fn env_id(&self) -> Option<EnvId> {
        self.demos.first().map(|d| d.env_id)
    }

    /// Demo indices grouped by task id.
    pub fn by_task(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, d) in self.demos.iter().enumerate() {
            out.entry(d.task_id).or_default().push(i);
        }
        out
    }

    pub fn returns(&self) -> Vec<f64> {
        self.demos.iter().map(|d| d.true_return).collect()
    }

    pub fn mean_return(&self) -> f64 {
        if self.demos.is_empty() {
            return 0.0;
        }
        self.returns().iter().sum::<f64>() / self.demos.len() as f64
    }

    /// New set holding the demos at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<DemoSet> {
        let mut out = Vec::with_capacity(indices.len());
        for i in indices {
            out.push(self.demos.get(*i).ok_or_else(|| invalid!("demo index {i} out of range"))?.clone());
        }
        Ok(DemoSet { demos: out })
    }
}

impl<'a> IntoIterator for &'a DemoSet {
    type Item = &'a Trajectory;
    type IntoIter = core::slice::Iter<'a, Trajectory>;
    fn into_iter(self) -> Self::IntoIter {
        self.demos.iter()
    }
}

const CARTPOLE_RATE_GAIN: f64 = 0.5;

// nominal lander gains: lateral position, lateral velocity, attitude rate
const LANDER_KX: f64 = 0.3;
const LANDER_KV: f64 = 0.6;
const LANDER_KW: f64 = 1.0;
const LANDER_MAX_TILT: f64 = 0.25;
const LANDER_DEADBAND: f64 = 0.02;

/// Scripted suboptimal controller.
///
/// Cart-pole: push toward the side the pole is falling to (`θ + 0.5 ω > 0` → right),
/// with the chosen action flipped with probability `noise`.
///
/// Lander: a PD controller that tilts toward the pad and fires the main engine
/// when falling faster than a height-dependent limit. Its gains are perturbed
/// per episode by relative Gaussian noise of standard deviation `noise`, and with
/// probability `noise` a uniformly random action replaces the chosen one.
#[derive(Debug, Clone)]
pub struct Demonstrator {
    env_id: EnvId,
    noise: f64,
    gains: [f64; 3],
}

impl Demonstrator {
    pub fn new(env_id: EnvId, noise: f64) -> Result<Self> {
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(invalid!("noise level must be a nonnegative number"));
        }
        if env_id == EnvId::Toy {
            return Err(invalid!("no scripted demonstrator for environment {env_id}"));
        }
        Ok(Demonstrator { env_id, noise, gains: [LANDER_KX, LANDER_KV, LANDER_KW] })
    }

    /// Noise-free action.
    pub fn nominal_action(&self, state: &[f64]) -> usize {
        match self.env_id {
            EnvId::CartPole => usize::from(state[2] + CARTPOLE_RATE_GAIN * state[3] > 0.0),
            _ => self.lander_action(state),
        }
    }

    fn lander_action(&self, s: &[f64]) -> usize {
        let (x, y, vx, vy, theta, omega) = (s[0], s[1], s[2], s[3], s[4], s[5]);
        let [kx, kv, kw] = self.gains;
        if vy < -(0.15 + 0.4 * y.max(0.0)) {
            return 1;
        }
        let target = (kx * x + kv * vx).clamp(-LANDER_MAX_TILT, LANDER_MAX_TILT);
        let err = target - theta - kw * omega;
        if err > LANDER_DEADBAND {
            2
        } else if err < -LANDER_DEADBAND {
            3
        } else {
            0
        }
    }
}

impl ActionSampler for Demonstrator {
    fn start_episode(&mut self, rng: &mut Rng) {
        if self.env_id == EnvId::Lander {
            let nominal = [LANDER_KX, LANDER_KV, LANDER_KW];
            for (g, n) in self.gains.iter_mut().zip(nominal) {
                let z: f64 = StandardNormal.sample(rng);
                *g = n * (1.0 + self.noise * z);
            }
        }
    }

    fn sample_action(&mut self, state: &[f64], rng: &mut Rng) -> Result<(usize, Option<f64>)> {
        let a = self.nominal_action(state);
        let u: f64 = rng.random();
        let a = match self.env_id {
            EnvId::CartPole if u < self.noise => 1 - a,
            EnvId::Lander if u < self.noise => rng.random_range(0..4),
            _ => a,
        };
        Ok((a, None))
    }
}

/// `n` demonstrations on task 0.
pub fn gen_demos(env_id: EnvId, n: usize, noise: f64, seed: u64) -> Result<DemoSet> {
    gen_demos_tasks(env_id, n, noise, seed, 1)
}

/// `n` demonstrations spread round-robin over `n_tasks` tasks.
pub fn gen_demos_tasks(env_id: EnvId, n: usize, noise: f64, seed: u64, n_tasks: u32) -> Result<DemoSet> {
    if n == 0 {
        return Err(invalid!("at least one demonstration is required"));
    }
    if n_tasks == 0 {
        return Err(invalid!("at least one task is required"));
    }
    let mut env = make_env(env_id)?;
    let mut demonstrator = Demonstrator::new(env_id, noise)?;
    let base = derive(seed, Stream::Demos);
    let max_steps = env.max_steps();
    let mut demos = Vec::with_capacity(n);
    for j in 0..n {
        let episode_seed = splitmix64(base.wrapping_add(j as u64));
        let task = (j as u32) % n_tasks;
        demos.push(run_episode(&mut demonstrator, env.as_mut(), task, episode_seed, None, max_steps)?);
    }
    DemoSet::new(demos)
}

/// Horizon used when padding is enabled by default.
pub const DEFAULT_PAD_HORIZON: usize = 200;

/// Padding with the per-feature 95th percentile of the given per-step features.
pub fn percentile_padding<'a, I>(steps: I, horizon: usize) -> Result<PaddingConfig>
where
    I: IntoIterator<Item = &'a CostFeatures>,
{
    let rows: Vec<&CostFeatures> = steps.into_iter().collect();
    let first = rows.first().ok_or_else(|| invalid!("no step features to take percentiles of"))?;
    let dim = first.dim();
    let mut pad = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        col.sort_by(f64::total_cmp);
        pad.push(percentile_sorted(&col, 0.95));
    }
    PaddingConfig::new(horizon, CostFeatures::new(pad)?)
}

/// Linear-interpolation percentile of sorted data.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Padding applied by default: both built-in environments pad to 200 steps with
/// the 95th percentile of the demonstrations' step features. Their features are
/// additive costs, so without padding an early crash is the cheapest trajectory.
pub fn default_padding(env_id: EnvId, demos: &DemoSet) -> Result<Option<PaddingConfig>> {
    match env_id {
        EnvId::CartPole | EnvId::Lander => {
            percentile_padding(demos.iter().flat_map(|d| d.step_features.iter()), DEFAULT_PAD_HORIZON).map(Some)
        }
        EnvId::Toy => Ok(None),
    }
}
