//! Satisficing evaluation.
//!
//! An imitator rollout satisfices a demonstration when its trajectory feature
//! total strictly Pareto-dominates the demonstration's. The γ-satisficing rate is
//! reported relative to the rate at which demonstrations satisfice each other.

use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::alpha::{alpha_analytic_all, AlphaUpdateConfig};
use crate::demos::DemoSet;
use crate::env::Environment;
use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::math;
use crate::policy::{run_episode, ActionSampler};
use crate::repr::FeaturePipeline;
use crate::seed::{rng_from, splitmix64};
use crate::subdom::{check_satisfices, support_set, HingeSlopes, SubdomConfig};

/// Fraction of ordered pairs `(j, j′)`, `j ≠ j′`, of demonstrations recorded on the
/// same task where `j` strictly dominates `j′`.
pub fn demo_baseline_rate(totals: &[CostFeatures], tasks: &[u32]) -> Result<f64> {
    if totals.len() < 2 {
        return Err(invalid!("the baseline rate needs at least two demonstrations"));
    }
    if tasks.len() != totals.len() {
        return Err(invalid!("one task id per demonstration expected"));
    }
    let mut pairs = 0usize;
    let mut hits = 0usize;
    for (j, fj) in totals.iter().enumerate() {
        for (jj, fjj) in totals.iter().enumerate() {
            if j == jj || tasks[j] != tasks[jj] {
                continue;
            }
            pairs += 1;
            hits += usize::from(check_satisfices(fj, fjj));
        }
    }
    if pairs == 0 {
        return Err(invalid!("no task has two demonstrations"));
    }
    Ok(hits as f64 / pairs as f64)
}

/// `1 − |∪_k SV_k| / N` at the given slopes.
pub fn bound_gamma(f_imit: &CostFeatures, demos: &[CostFeatures], slopes: &HingeSlopes, cfg: &SubdomConfig) -> Result<f64> {
    let sv = support_set(f_imit, demos, slopes, cfg)?;
    Ok(1.0 - sv.union_len() as f64 / demos.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keep {
    Best,
    Worst,
}

/// The fractions a quality subset may retain.
pub const QUALITY_FRACTIONS: [f64; 4] = [0.9, 0.8, 0.7, 0.6];

/// Keeps the best or worst `fraction` of demonstrations by true return.
/// Ties are broken by demo index and the result keeps the original order.
pub fn quality_subsets(demos: &DemoSet, keep: Keep, fraction: f64) -> Result<DemoSet> {
    if !QUALITY_FRACTIONS.contains(&fraction) {
        return Err(invalid!("fraction {fraction} is not one of 0.9, 0.8, 0.7, 0.6"));
    }
    let n = demos.len();
    let count = math::round(fraction * n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let returns = demos.returns();
    order.sort_by(|a, b| returns[*a].total_cmp(&returns[*b]));
    let mut kept: Vec<usize> = match keep {
        Keep::Worst => order[..count].to_vec(),
        Keep::Best => order[n - count..].to_vec(),
    };
    kept.sort_unstable();
    demos.subset(&kept)
}

/// Per-rollout comparison data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRollout {
    pub total: CostFeatures,
    pub demo: usize,
    pub satisfices: bool,
    pub true_return: f64,
    pub bound_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_rollouts: usize,
    pub seed: u64,
    pub subdom: SubdomConfig,
    /// Slopes for the support-vector bound; analytic per rollout when absent.
    pub slopes: Option<HingeSlopes>,
    pub alpha: AlphaUpdateConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_rollouts: 200,
            seed: 0,
            subdom: SubdomConfig::default(),
            slopes: None,
            alpha: AlphaUpdateConfig::default(),
        }
    }
}

/// Rolls the sampler out `n_rollouts` times, each on the task of a uniformly drawn
/// demonstration, and compares the rollout with that demonstration.
pub fn eval_rollouts<S: ActionSampler + ?Sized>(
    sampler: &mut S,
    demos: &DemoSet,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &EvalConfig,
) -> Result<Vec<EvalRollout>> {
    if cfg.n_rollouts == 0 {
        return Err(invalid!("at least one evaluation rollout is required"));
    }
    if demos.is_empty() {
        return Err(invalid!("evaluation needs demonstrations"));
    }
    let demo_totals = demos.iter().map(|d| features.total(d)).collect::<Result<Vec<_>>>()?;
    let by_task = demos.by_task();
    let mut rng = rng_from(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_rollouts);
    for i in 0..cfg.n_rollouts {
        let j = rng.random_range(0..demos.len());
        let task = demos.as_slice()[j].task_id;
        let episode_seed = splitmix64(cfg.seed ^ (i as u64).wrapping_mul(0xA076_1D64_78BD_642F));
        let max_steps = env.max_steps();
        let traj = run_episode(sampler, env, task, episode_seed, None, max_steps)?;
        let total = features.total(&traj)?;
        let task_totals: Vec<CostFeatures> = by_task[&task].iter().map(|k| demo_totals[*k].clone()).collect();
        let slopes = match &cfg.slopes {
            Some(s) => s.clone(),
            None => alpha_analytic_all(&total, &task_totals, cfg.subdom.mode, &cfg.alpha)?,
        };
        out.push(EvalRollout {
            satisfices: check_satisfices(&total, &demo_totals[j]),
            bound_gamma: bound_gamma(&total, &task_totals, &slopes, &cfg.subdom)?,
            total,
            demo: j,
            true_return: traj.true_return,
        });
    }
    Ok(out)
}

/// Fraction of sampled (rollout, demonstration) pairs where the rollout satisfices.
pub fn gamma_satisficing<S: ActionSampler + ?Sized>(
    sampler: &mut S,
    demos: &DemoSet,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &EvalConfig,
) -> Result<f64> {
    let r = eval_rollouts(sampler, demos, env, features, cfg)?;
    Ok(r.iter().filter(|x| x.satisfices).count() as f64 / r.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gamma_hat: f64,
    pub demo_baseline_rate: f64,
    /// `gamma_hat / demo_baseline_rate`, or 0 when the baseline is 0.
    pub relative_ratio: f64,
    pub baseline_is_zero: bool,
    pub mean_return: f64,
    pub std_return: f64,
    pub bound_gamma: f64,
    pub n_rollouts: usize,
    pub n_demos: usize,
}

impl EvalReport {
    /// Binomial standard error of `gamma_hat`.
    pub fn gamma_std_error(&self) -> f64 {
        math::sqrt(self.gamma_hat * (1.0 - self.gamma_hat) / self.n_rollouts as f64)
    }
}

pub fn report_from_rollouts(rollouts: &[EvalRollout], demos: &DemoSet, features: &FeaturePipeline) -> Result<EvalReport> {
    if rollouts.is_empty() {
        return Err(invalid!("no rollouts to report on"));
    }
    let totals = demos.iter().map(|d| features.total(d)).collect::<Result<Vec<_>>>()?;
    let tasks: Vec<u32> = demos.iter().map(|d| d.task_id).collect();
    let baseline = demo_baseline_rate(&totals, &tasks)?;
    let n = rollouts.len() as f64;
    let gamma_hat = rollouts.iter().filter(|r| r.satisfices).count() as f64 / n;
    let mean_return = rollouts.iter().map(|r| r.true_return).sum::<f64>() / n;
    let var = rollouts.iter().map(|r| (r.true_return - mean_return) * (r.true_return - mean_return)).sum::<f64>() / n;
    let baseline_is_zero = baseline == 0.0;
    Ok(EvalReport {
        gamma_hat,
        demo_baseline_rate: baseline,
        relative_ratio: if baseline_is_zero { 0.0 } else { gamma_hat / baseline },
        baseline_is_zero,
        mean_return,
        std_return: math::sqrt(var),
        bound_gamma: rollouts.iter().map(|r| r.bound_gamma).sum::<f64>() / n,
        n_rollouts: rollouts.len(),
        n_demos: demos.len(),
    })
}

/// Full evaluation of a sampler against a demonstration set.
pub fn evaluate<S: ActionSampler + ?Sized>(
    sampler: &mut S,
    demos: &DemoSet,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let rollouts = eval_rollouts(sampler, demos, env, features, cfg)?;
    report_from_rollouts(&rollouts, demos, features)
}
