//! Per-state decomposition of trajectory subdominance.
//!
//! Once the support set is fixed at the trajectory level, every hinge term that
//! survives is affine in the trajectory's feature total, so the subdominance
//! splits exactly into per-state contributions. These contributions are the
//! per-step costs the policy-gradient learners use for causal credit assignment.
//!
//! With `C_k = |SV_k| / n` and `n` demonstrations, state `s_t` of an
//! `L`-state trajectory contributes
//!
//! * absolute: `Σ_k C_k/L + C_k α_k f_k(s_t) − α_k F̃_k / (L n)` where `F̃_k` sums the
//!   feature totals of the support demonstrations,
//! * relative: `Σ_k C_k (1 − α_k)/L + α_k f_k(s_t) R̃_k / n` where `R̃_k` sums the
//!   reciprocals of those totals.
//!
//! Under max aggregation every demonstration supports at most one feature and the
//! same expressions hold with those support sets.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::subdom::{subdom_vs_set, Aggregation, HingeSlopes, SubdomConfig, SubdomMode, SupportSet};

/// Absolute-mode per-state contributions; they sum to `subdom_vs_set`.
pub fn decompose_per_state_abs(
    steps: &[CostFeatures],
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    aggregation: Aggregation,
) -> Result<Vec<f64>> {
    decompose(steps, demos, slopes, SubdomConfig::new(SubdomMode::Absolute, aggregation))
}

/// Relative-mode per-state contributions; they sum to the relative `subdom_vs_set`.
pub fn decompose_per_state_rel(
    steps: &[CostFeatures],
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    aggregation: Aggregation,
) -> Result<Vec<f64>> {
    decompose(steps, demos, slopes, SubdomConfig::new(SubdomMode::Relative, aggregation))
}

/// Dispatches on `cfg.mode`.
pub fn decompose(
    steps: &[CostFeatures],
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    cfg: SubdomConfig,
) -> Result<Vec<f64>> {
    if steps.is_empty() {
        return Err(invalid!("cannot decompose an empty trajectory"));
    }
    let total = CostFeatures::total(steps)?;
    let (_, support) = subdom_vs_set(&total, demos, slopes, &cfg)?;
    Ok(contributions(steps, demos, slopes, cfg.mode, &support))
}

/// Per-state contributions for a support set computed by the caller.
pub(crate) fn contributions(
    steps: &[CostFeatures],
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    mode: SubdomMode,
    support: &SupportSet,
) -> Vec<f64> {
    let n = demos.len() as f64;
    let len = steps.len() as f64;
    let dim = slopes.dim();
    // per-feature constant part and per-state slope
    let mut constant = vec![0.0; dim];
    let mut slope = vec![0.0; dim];
    for k in 0..dim {
        let sv = support.feature(k);
        if sv.is_empty() {
            continue;
        }
        let alpha = slopes.alpha()[k];
        let c = sv.len() as f64 / n;
        match mode {
            SubdomMode::Absolute => {
                let summed: f64 = sv.iter().map(|j| demos[*j][k]).sum();
                constant[k] = c / len - alpha * summed / (len * n);
                slope[k] = c * alpha;
            }
            SubdomMode::Relative => {
                let reciprocal: f64 = sv.iter().map(|j| 1.0 / demos[*j][k]).sum();
                constant[k] = c * (1.0 - alpha) / len;
                slope[k] = alpha * reciprocal / n;
            }
        }
    }
    let base: f64 = constant.iter().sum();
    steps
        .iter()
        .map(|f| base + f.iter().zip(&slope).map(|(x, s)| x * s).sum::<f64>())
        .collect()
}

/// Reverse cumulative sum: `out[t] = Σ_{t' >= t} values[t']`.
pub fn future_sums(values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let mut acc = 0.0;
    for (o, v) in out.iter_mut().zip(values).rev() {
        acc += v;
        *o = acc;
    }
    out
}
