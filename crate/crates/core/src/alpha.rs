//! Hinge-slope optimization.
//!
//! For a fixed imitator feature vector the slope objective of feature `k` is
//!
//! ```text
//! g(α) = (1/n) Σ_j [α d_j + 1]_+ + (λ/2) α²,   d_j = f_k(imitator) − f_k(demo j)
//! ```
//!
//! (`d_j = f/f̃ − 1` in relative mode). It can be decreased numerically with
//! multiplicative exponentiated-gradient steps, or minimized exactly: between
//! consecutive breakpoints `1/|d_j|` the active hinge set is fixed and `g` is a
//! quadratic with a closed-form minimizer.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::features::CostFeatures;
use crate::math;
use crate::subdom::{feature_diff, subdom_vs_set, HingeSlopes, SubdomConfig, SubdomMode};

const EXPONENT_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaUpdateConfig {
    /// Exponentiated-gradient step size η′.
    pub step_size: f64,
    /// Slope regularizer λ.
    pub lambda: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for AlphaUpdateConfig {
    fn default() -> Self {
        AlphaUpdateConfig {
            step_size: 1e-2,
            lambda: 1e-2,
            alpha_min: 1e-3,
            alpha_max: 1e3,
        }
    }
}

impl AlphaUpdateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(invalid!("slope step size must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(invalid!("slope regularizer must be nonnegative"));
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max && self.alpha_max.is_finite()) {
            return Err(invalid!("slope bounds must satisfy 0 < min <= max < inf"));
        }
        Ok(())
    }

    fn clamp(&self, a: f64) -> f64 {
        a.clamp(self.alpha_min, self.alpha_max)
    }
}

/// One multiplicative step on every feature's slope.
pub fn alpha_eg_update(
    slopes: &HingeSlopes,
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    subdom: &SubdomConfig,
    cfg: &AlphaUpdateConfig,
) -> Result<HingeSlopes> {
    weighted_eg_update(slopes, f_imit, demos, 1.0, subdom, cfg)
}

/// [`alpha_eg_update`] with the support-set term scaled by an importance ratio, for
/// updates driven by a demonstration standing in for a rollout.
pub fn alpha_offline_update(
    slopes: &HingeSlopes,
    demo_as_imitator: &CostFeatures,
    demos: &[CostFeatures],
    importance_ratio: f64,
    subdom: &SubdomConfig,
    cfg: &AlphaUpdateConfig,
) -> Result<HingeSlopes> {
    if !importance_ratio.is_finite() || importance_ratio <= 0.0 {
        return Err(invalid!("importance ratio {importance_ratio} must be finite and positive"));
    }
    weighted_eg_update(slopes, demo_as_imitator, demos, importance_ratio, subdom, cfg)
}

fn weighted_eg_update(
    slopes: &HingeSlopes,
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    weight: f64,
    subdom: &SubdomConfig,
    cfg: &AlphaUpdateConfig,
) -> Result<HingeSlopes> {
    let (_, support) = subdom_vs_set(f_imit, demos, slopes, subdom)?;
    let n = demos.len() as f64;
    let alpha = slopes
        .alpha()
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let diff: f64 = support
                .feature(k)
                .iter()
                .map(|j| feature_diff(subdom.mode, f_imit[k], demos[*j][k]))
                .sum();
            let exponent = (-cfg.step_size * (weight * diff + cfg.lambda * n * a)).clamp(-EXPONENT_CLIP, EXPONENT_CLIP);
            cfg.clamp(a * math::exp(exponent))
        })
        .collect();
    Ok(HingeSlopes::from_parts_unchecked(alpha, slopes.lambda_alpha()))
}

/// Slope objective `g(α)` for the per-demonstration differences `diffs`.
pub fn slope_objective(diffs: &[f64], lambda: f64, alpha: f64) -> f64 {
    let n = diffs.len() as f64;
    let hinge: f64 = diffs.iter().map(|d| (alpha * d + 1.0).max(0.0)).sum();
    hinge / n + 0.5 * lambda * alpha * alpha
}

/// Per-demonstration differences for feature `k`.
pub fn feature_diffs(f_imit: &CostFeatures, demos: &[CostFeatures], k: usize, mode: SubdomMode) -> Result<Vec<f64>> {
    if k >= f_imit.dim() {
        return Err(invalid!("feature index {k} out of range for dimension {}", f_imit.dim()));
    }
    demos
        .iter()
        .map(|d| {
            if d.dim() != f_imit.dim() {
                return Err(invalid!("feature dimension mismatch"));
            }
            if mode == SubdomMode::Relative && d[k] <= 0.0 {
                return Err(crate::Error::Domain(alloc::format!(
                    "relative slope: demonstration feature {k} total is zero"
                )));
            }
            Ok(feature_diff(mode, f_imit[k], d[k]))
        })
        .collect()
}

/// Exact minimizer of [`slope_objective`] over `[alpha_min, alpha_max]`; the lowest
/// minimizer wins ties.
pub fn minimize_slope(diffs: &[f64], lambda: f64, alpha_min: f64, alpha_max: f64) -> f64 {
    if diffs.is_empty() {
        return alpha_min;
    }
    let n = diffs.len() as f64;
    // A term with d < 0 is active below its knot −1/d; terms with d ≥ 0 always are.
    let mut negatives: Vec<(f64, f64)> = diffs.iter().filter(|d| **d < 0.0).map(|d| (-1.0 / d, *d)).collect();
    negatives.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots: Vec<f64> = negatives.iter().map(|(b, _)| *b).filter(|b| *b > alpha_min && *b < alpha_max).collect();
    knots.insert(0, alpha_min);
    knots.push(alpha_max);
    knots.dedup();

    let mut slope_sum: f64 = diffs.iter().filter(|d| **d >= 0.0).sum();
    let mut active = diffs.iter().filter(|d| **d >= 0.0).count() as f64;
    for (_, d) in &negatives {
        slope_sum += d;
        active += 1.0;
    }
    let mut next = 0;
    let mut retire = |upto: f64, slope_sum: &mut f64, active: &mut f64| {
        while next < negatives.len() && negatives[next].0 <= upto {
            *slope_sum -= negatives[next].1;
            *active -= 1.0;
            next += 1;
        }
    };
    retire(alpha_min, &mut slope_sum, &mut active);

    let value = |a: f64, slope_sum: f64, active: f64| (slope_sum * a + active) / n + 0.5 * lambda * a * a;
    let mut best_alpha = alpha_min;
    let mut best_value = value(alpha_min, slope_sum, active);
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        retire(lo, &mut slope_sum, &mut active);
        // the active set is constant on (lo, hi) and the objective continuous at its ends
        let candidate = if lambda > 0.0 {
            (-slope_sum / (n * lambda)).clamp(lo, hi)
        } else if slope_sum < 0.0 {
            hi
        } else {
            lo
        };
        for a in [lo, candidate, hi] {
            let v = value(a, slope_sum, active);
            if v < best_value {
                best_value = v;
                best_alpha = a;
            }
        }
    }
    best_alpha
}

/// Exact optimal slope for feature `k` against a demonstration set, clamped to the
/// bounds in `bounds`.
pub fn alpha_analytic(
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    lambda: f64,
    k: usize,
    mode: SubdomMode,
    bounds: &AlphaUpdateConfig,
) -> Result<f64> {
    if demos.is_empty() {
        return Err(invalid!("slope optimization needs at least one demonstration"));
    }
    let diffs = feature_diffs(f_imit, demos, k, mode)?;
    Ok(minimize_slope(&diffs, lambda, bounds.alpha_min, bounds.alpha_max))
}

/// [`alpha_analytic`] for every feature.
pub fn alpha_analytic_all(
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    mode: SubdomMode,
    cfg: &AlphaUpdateConfig,
) -> Result<HingeSlopes> {
    let alpha = (0..f_imit.dim())
        .map(|k| alpha_analytic(f_imit, demos, cfg.lambda, k, mode, cfg))
        .collect::<Result<Vec<_>>>()?;
    HingeSlopes::new(alpha, cfg.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn cf(v: &[f64]) -> CostFeatures {
        CostFeatures::new(v.to_vec()).unwrap()
    }

    fn cfg(step: f64, lambda: f64) -> AlphaUpdateConfig {
        AlphaUpdateConfig { step_size: step, lambda, ..AlphaUpdateConfig::default() }
    }

    #[test]
    fn eg_no_support_no_regularizer_is_identity() {
        let s = HingeSlopes::new(vec![0.7], 0.0).unwrap();
        let out = alpha_eg_update(&s, &cf(&[0.0]), &[cf(&[5.0])], &SubdomConfig::default(), &cfg(0.1, 0.0)).unwrap();
        assert_eq!(out.alpha(), s.alpha());
    }

    #[test]
    fn eg_hand_step() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let out = alpha_eg_update(&s, &cf(&[5.0]), &[cf(&[3.0])], &SubdomConfig::default(), &cfg(0.1, 0.0)).unwrap();
        assert!((out.alpha()[0] - libm::exp(-0.2)).abs() < 1e-15);
    }

    #[test]
    fn eg_non_support_demo_leaves_slope() {
        // 1 + 1/1 = 2 < 3: not a support vector
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let out = alpha_eg_update(&s, &cf(&[1.0]), &[cf(&[3.0])], &SubdomConfig::default(), &cfg(0.1, 0.0)).unwrap();
        assert_eq!(out.alpha(), &[1.0]);
    }

    #[test]
    fn eg_clamps_and_clips() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let c = AlphaUpdateConfig { step_size: 1e6, lambda: 0.0, alpha_min: 0.5, alpha_max: 2.0 };
        let up = alpha_eg_update(&s, &cf(&[0.0]), &[cf(&[0.5])], &SubdomConfig::default(), &c).unwrap();
        assert_eq!(up.alpha(), &[2.0]);
        let down = alpha_eg_update(&s, &cf(&[9.0]), &[cf(&[0.5])], &SubdomConfig::default(), &c).unwrap();
        assert_eq!(down.alpha(), &[0.5]);
    }

    #[test]
    fn offline_ratio_scaling() {
        let s = HingeSlopes::new(vec![1.0], 0.0).unwrap();
        let sc = SubdomConfig::default();
        let c = cfg(0.1, 0.0);
        let (f, demos) = (cf(&[4.0]), [cf(&[3.0])]);
        let plain = alpha_eg_update(&s, &f, &demos, &sc, &c).unwrap();
        let unit = alpha_offline_update(&s, &f, &demos, 1.0, &sc, &c).unwrap();
        assert_eq!(plain, unit);
        let half = alpha_offline_update(&s, &f, &demos, 0.5, &sc, &c).unwrap();
        assert!((half.alpha()[0] - libm::exp(-0.05)).abs() < 1e-15);
        let double = alpha_offline_update(&s, &f, &demos, 2.0, &sc, &c).unwrap();
        assert!((double.alpha()[0] - libm::exp(-0.2)).abs() < 1e-15);
        assert!(alpha_offline_update(&s, &f, &demos, f64::NAN, &sc, &c).is_err());
        assert!(alpha_offline_update(&s, &f, &demos, 0.0, &sc, &c).is_err());
    }

    #[test]
    fn analytic_imitator_worse_than_all_demos_hits_floor() {
        let b = AlphaUpdateConfig::default();
        let a = alpha_analytic(&cf(&[5.0]), &[cf(&[1.0]), cf(&[2.0])], 0.1, 0, SubdomMode::Absolute, &b).unwrap();
        assert_eq!(a, b.alpha_min);
    }

    #[test]
    fn analytic_dominating_imitator_stops_at_last_breakpoint() {
        // every hinge switches off by α = 1/|d|; beyond that only the regularizer grows
        let b = AlphaUpdateConfig::default();
        let a = alpha_analytic(&cf(&[1.0]), &[cf(&[3.0]), cf(&[5.0])], 0.01, 0, SubdomMode::Absolute, &b).unwrap();
        assert!((a - 0.5).abs() < 1e-12, "{a}");
    }

    #[test]
    fn analytic_equal_demo_hits_floor() {
        let b = AlphaUpdateConfig::default();
        let a = alpha_analytic(&cf(&[2.0]), &[cf(&[2.0])], 0.1, 0, SubdomMode::Absolute, &b).unwrap();
        assert_eq!(a, b.alpha_min);
    }

    #[test]
    fn analytic_interior_stationary_point() {
        // d = (+1, -2): on (0, 0.5) g = (2 - α)/2 + λα²/2, stationary at 1/(2λ)
        let b = AlphaUpdateConfig::default();
        let a = minimize_slope(&[1.0, -2.0], 4.0, b.alpha_min, b.alpha_max);
        assert!((a - 0.125).abs() < 1e-15);
    }
}
