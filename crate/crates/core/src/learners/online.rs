use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::{
    accumulate_policy_gradient, leave_one_out_means, mean_slopes, scored_returns, AlphaMethod, Baseline,
    LearnerState, PreparedDemos, TrainConfig, UpdateMetrics,
};
use crate::alpha::{alpha_analytic_all, alpha_eg_update};
use crate::env::Environment;
use crate::error::Result;
use crate::features::CostFeatures;
use crate::policy::rollout;
use crate::repr::FeaturePipeline;
use crate::seed::Rng;
use crate::subdom::{Aggregation, HingeSlopes};

/// One online update: `M` rollouts per task, slopes per rollout, one policy step.
///
/// Each task's rollouts are weighted by the task's share of all demonstrations.
pub fn online_update(
    state: &mut LearnerState,
    demos: &PreparedDemos,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> Result<UpdateMetrics> {
    let m = cfg.rollouts_per_update;
    let n_all = demos.len() as f64;
    let max_steps = env.max_steps();
    let mut grad = vec![0.0; state.params.weights.len()];
    let mut metrics = UpdateMetrics::default();
    let mut scored = 0usize;
    let mut analytic_slopes: Vec<HingeSlopes> = Vec::new();
    let analytic = cfg.alpha_method == AlphaMethod::Analytic && cfg.subdom.aggregation == Aggregation::Sum;

    for (task, ix) in &demos.by_task {
        let task_totals: Vec<CostFeatures> = demos.task_totals(*task);
        if task_totals.is_empty() {
            metrics.skipped += 1;
            continue;
        }
        let weight = ix.len() as f64 / (n_all * m as f64);
        let mut batch = Vec::with_capacity(m);
        for _ in 0..m {
            let traj = rollout(&state.params, env, *task, rng.next_u64(), None, max_steps)?;
            let steps = features.steps(&traj)?;
            let slopes = if state.alpha_frozen() {
                state.slopes.clone()
            } else if analytic {
                let total = CostFeatures::total(&steps)?;
                let s = alpha_analytic_all(&total, &task_totals, cfg.subdom.mode, &cfg.alpha)?;
                analytic_slopes.push(s.clone());
                s
            } else {
                state.slopes.clone()
            };
            let (value, support, returns) =
                scored_returns(&steps, &task_totals, &slopes, &cfg.subdom, cfg.return_mode, traj.actions.len())?;
            if !state.alpha_frozen() && !analytic {
                let total = CostFeatures::total(&steps)?;
                state.slopes = alpha_eg_update(&state.slopes, &total, &task_totals, &cfg.subdom, &cfg.alpha)?;
            }
            metrics.mean_subdom += value;
            metrics.support_fraction += support.union_len() as f64 / task_totals.len() as f64;
            metrics.mean_true_return += traj.true_return;
            scored += 1;
            batch.push((traj, returns));
        }
        let g0: Vec<f64> = batch.iter().map(|(_, r)| r.first().copied().unwrap_or(0.0)).collect();
        let baselines = match cfg.baseline {
            Baseline::None => vec![0.0; batch.len()],
            Baseline::Mean => leave_one_out_means(&g0),
        };
        for ((traj, returns), b) in batch.iter().zip(baselines) {
            accumulate_policy_gradient(&state.params, traj, returns, b, weight, &mut grad)?;
        }
    }
    if analytic && !analytic_slopes.is_empty() {
        state.slopes = mean_slopes(&analytic_slopes, &state.slopes);
    }
    state.apply(&grad, cfg)?;
    state.end_update();
    if scored > 0 {
        let n = scored as f64;
        metrics.mean_subdom /= n;
        metrics.support_fraction /= n;
        metrics.mean_true_return /= n;
    }
    Ok(metrics)
}
