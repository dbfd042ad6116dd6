use alloc::vec;
use alloc::vec::Vec;

use super::{
    accumulate_policy_gradient, leave_one_out_means, scored_returns, Baseline, LearnerState, PreparedDemos,
    TrainConfig, UpdateMetrics,
};
use crate::alpha::alpha_offline_update;
use crate::error::Result;
use crate::features::CostFeatures;
use crate::math;
use crate::policy::{traj_log_prob, PolicyParams};

/// One pass over the demonstrations without environment interaction.
///
/// Every demonstration is scored against the other demonstrations of its task
/// and acts as a rollout whose policy-gradient term is reweighted by the clipped
/// ratio `π_θ(ξ̃)/π_BC(ξ̃)`. Slopes take one importance-weighted
/// exponentiated-gradient step per demonstration.
pub fn offline_update(
    state: &mut LearnerState,
    demos: &PreparedDemos,
    bc_params: &PolicyParams,
    cfg: &TrainConfig,
) -> Result<UpdateMetrics> {
    let n_all = demos.len() as f64;
    let mut grad = vec![0.0; state.params.weights.len()];
    let mut metrics = UpdateMetrics::default();
    let mut scored = 0usize;
    for ix in demos.by_task.values() {
        let mut batch = Vec::with_capacity(ix.len());
        for (pos, j) in ix.iter().enumerate() {
            let others: Vec<CostFeatures> =
                ix.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, i)| demos.totals[*i].clone()).collect();
            if others.is_empty() {
                metrics.skipped += 1;
                continue;
            }
            let traj = &demos.set.as_slice()[*j];
            let log_ratio = traj_log_prob(&state.params, traj)? - traj_log_prob(bc_params, traj)?;
            let ratio = math::exp(log_ratio.clamp(-cfg.log_ratio_clip, cfg.log_ratio_clip));
            let (value, support, returns) =
                scored_returns(&demos.steps[*j], &others, &state.slopes, &cfg.subdom, cfg.return_mode, traj.actions.len())?;
            if !state.alpha_frozen() {
                state.slopes =
                    alpha_offline_update(&state.slopes, &demos.totals[*j], &others, ratio, &cfg.subdom, &cfg.alpha)?;
            }
            metrics.mean_subdom += value;
            metrics.support_fraction += support.union_len() as f64 / others.len() as f64;
            metrics.mean_true_return += traj.true_return;
            scored += 1;
            batch.push((*j, ratio, returns));
        }
        let g0: Vec<f64> = batch.iter().map(|(_, _, r)| r.first().copied().unwrap_or(0.0)).collect();
        let baselines = match cfg.baseline {
            Baseline::None => vec![0.0; batch.len()],
            Baseline::Mean => leave_one_out_means(&g0),
        };
        for ((j, ratio, returns), b) in batch.iter().zip(baselines) {
            let traj = &demos.set.as_slice()[*j];
            accumulate_policy_gradient(&state.params, traj, returns, b, ratio / n_all, &mut grad)?;
        }
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
