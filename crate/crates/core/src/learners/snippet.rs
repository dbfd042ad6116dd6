use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng as _, RngCore};

use super::{accumulate_policy_gradient, leave_one_out_means, scored_returns, Baseline, LearnerState, PreparedDemos, TrainConfig, UpdateMetrics, Variant};
use crate::alpha::alpha_analytic_all;
use crate::env::Environment;
use crate::error::Result;
use crate::features::CostFeatures;
use crate::math;
use crate::policy::rollout;
use crate::repr::FeaturePipeline;
use crate::seed::Rng;
use crate::snippet::snippet_subdom;

const MAX_DEMO_DRAWS: usize = 100;

/// One snippet update.
///
/// Each of the `M` samples draws a demonstration and an interior state `s_t`
/// (`0 < t < |ξ̃| − 1`), rolls the policy out from `s_t` for
/// `snippet_fraction · max_steps` actions, trims both segments to a common
/// multiple of `N` states and scores the max–min snippet pair. Only the steps
/// of the selected imitator snippet receive credit. `snippet_opt` re-optimizes
/// the slopes for the selected pair; `snippet` keeps the global slopes.
pub fn snippet_update(
    state: &mut LearnerState,
    demos: &PreparedDemos,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<UpdateMetrics> {
    let n = cfg.snippet_count;
    let horizon = (math::round(cfg.snippet_fraction * env.max_steps() as f64) as usize).max(n);
    let mut grad = vec![0.0; state.params.weights.len()];
    let mut metrics = UpdateMetrics::default();
    let mut batch = Vec::new();
    let all = demos.set.as_slice();

    for _ in 0..cfg.rollouts_per_update {
        // uniform over all demos equals task weighting by demo share
        let mut pick = None;
        for _ in 0..MAX_DEMO_DRAWS {
            let j = rng.random_range(0..all.len());
            if all[j].states.len() >= 3 {
                pick = Some(j);
                break;
            }
        }
        let Some(j) = pick else {
            metrics.skipped += 1;
            continue;
        };
        let demo = &all[j];
        let t = rng.random_range(1..demo.states.len() - 1);
        let traj = rollout(&state.params, env, demo.task_id, rng.next_u64(), Some(&demo.states[t]), horizon)?;
        let imit_steps = features.map.step_features(&traj)?;
        let demo_steps = &demos.steps[j][t..demo.states.len()];
        let common = imit_steps.len().min(demo_steps.len());
        let len = common - common % n;
        if len < n {
            metrics.skipped += 1;
            continue;
        }
        let choice = snippet_subdom(&imit_steps[..len], &demo_steps[..len], &state.slopes, n, &cfg.subdom)?;
        let imit_part = &imit_steps[..choice.imitator_len];
        let demo_total = CostFeatures::total(&demo_steps[..choice.demo_len])?;
        let slopes = if cfg.variant == Variant::SnippetOpt && !state.alpha_frozen() {
            let total = CostFeatures::total(imit_part)?;
            alpha_analytic_all(&total, core::slice::from_ref(&demo_total), cfg.subdom.mode, &cfg.alpha)?
        } else {
            state.slopes.clone()
        };
        let n_actions = (choice.imitator_len - 1).min(traj.actions.len());
        let (value, support, returns) =
            scored_returns(imit_part, core::slice::from_ref(&demo_total), &slopes, &cfg.subdom, cfg.return_mode, n_actions)?;
        metrics.mean_subdom += value;
        metrics.support_fraction += support.union_len() as f64;
        metrics.mean_true_return += traj.true_return;
        batch.push((traj, returns));
    }
    let g0: Vec<f64> = batch.iter().map(|(_, r)| r.first().copied().unwrap_or(0.0)).collect();
    let baselines = match cfg.baseline {
        Baseline::None => vec![0.0; batch.len()],
        Baseline::Mean => leave_one_out_means(&g0),
    };
    let weight = 1.0 / cfg.rollouts_per_update as f64;
    for ((traj, returns), b) in batch.iter().zip(baselines) {
        accumulate_policy_gradient(&state.params, traj, returns, b, weight, &mut grad)?;
    }
    state.apply(&grad, cfg)?;
    state.end_update();
    if !batch.is_empty() {
        let k = batch.len() as f64;
        metrics.mean_subdom /= k;
        metrics.support_fraction /= k;
        metrics.mean_true_return /= k;
    }
    Ok(metrics)
}
