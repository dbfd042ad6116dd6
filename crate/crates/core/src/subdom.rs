//! Subdominance: how far an imitator's cost features are from Pareto-dominating
//! a demonstration's by a unit margin.
//!
//! Four variants are supported, absolute or relative feature differences crossed
//! with sum or max aggregation over feature dimensions. A demonstration is a
//! *support vector* for feature `k` when its hinge argument is nonnegative, i.e.
//! `f_k(imitator) + 1/α_k >= f_k(demo)` in absolute mode. Demonstrations sitting
//! exactly on that boundary are support vectors that contribute zero loss.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::{check_same_dim, CostFeatures};

/// Strictly positive hinge slopes plus the weight of their regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeSlopes {
    alpha: Vec<f64>,
    lambda_alpha: f64,
}

impl HingeSlopes {
    pub fn new(alpha: Vec<f64>, lambda_alpha: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(invalid!("hinge slopes need at least one dimension"));
        }
        if let Some(a) = alpha.iter().find(|a| !a.is_finite() || **a <= 0.0) {
            return Err(invalid!("hinge slope {a} is not strictly positive"));
        }
        if !lambda_alpha.is_finite() || lambda_alpha < 0.0 {
            return Err(invalid!("slope regularizer {lambda_alpha} must be nonnegative"));
        }
        Ok(HingeSlopes { alpha, lambda_alpha })
    }

    /// All slopes equal to `value`.
    pub fn uniform(dim: usize, value: f64, lambda_alpha: f64) -> Result<Self> {
        HingeSlopes::new(vec![value; dim], lambda_alpha)
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn lambda_alpha(&self) -> f64 {
        self.lambda_alpha
    }

    pub(crate) fn from_parts_unchecked(alpha: Vec<f64>, lambda_alpha: f64) -> Self {
        debug_assert!(alpha.iter().all(|a| a.is_finite() && *a > 0.0));
        HingeSlopes { alpha, lambda_alpha }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubdomMode {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    Max,
}

/// Which of the four subdominance variants to evaluate. Defaults to absolute/sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdomConfig {
    pub mode: SubdomMode,
    pub aggregation: Aggregation,
}

impl SubdomConfig {
    pub fn new(mode: SubdomMode, aggregation: Aggregation) -> Self {
        SubdomConfig { mode, aggregation }
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid!("{name} = {v} is not finite"))
    }
}

fn check_slope(alpha_k: f64) -> Result<()> {
    if alpha_k.is_finite() && alpha_k > 0.0 {
        Ok(())
    } else {
        Err(invalid!("hinge slope {alpha_k} must be finite and positive"))
    }
}

#[inline]
fn hinge(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Per-feature slope-scaled difference: `f - f̃` (absolute) or `f/f̃ - 1` (relative).
#[inline]
pub(crate) fn feature_diff(mode: SubdomMode, f_imit: f64, f_demo: f64) -> f64 {
    match mode {
        SubdomMode::Absolute => f_imit - f_demo,
        SubdomMode::Relative => f_imit / f_demo - 1.0,
    }
}

/// `[α_k (f_imit − f_demo) + 1]_+`.
pub fn subdom_feature_abs(f_imit: f64, f_demo: f64, alpha_k: f64) -> Result<f64> {
    check_finite("imitator feature", f_imit)?;
    check_finite("demonstration feature", f_demo)?;
    check_slope(alpha_k)?;
    Ok(hinge(alpha_k * (f_imit - f_demo) + 1.0))
}

/// `[α_k (f_imit / f_demo − 1) + 1]_+`; the demonstration feature must be positive.
pub fn subdom_feature_rel(f_imit: f64, f_demo: f64, alpha_k: f64) -> Result<f64> {
    check_finite("imitator feature", f_imit)?;
    check_finite("demonstration feature", f_demo)?;
    check_slope(alpha_k)?;
    if f_demo <= 0.0 {
        return Err(Error::Domain(alloc::format!(
            "relative subdominance needs a positive demonstration feature, got {f_demo}"
        )));
    }
    Ok(hinge(alpha_k * (f_imit / f_demo - 1.0) + 1.0))
}

fn check_relative_demo(mode: SubdomMode, f_demo: &CostFeatures) -> Result<()> {
    if mode == SubdomMode::Relative {
        if let Some(k) = f_demo.iter().position(|v| *v <= 0.0) {
            return Err(Error::Domain(alloc::format!(
                "relative subdominance: demonstration feature {k} total is zero"
            )));
        }
    }
    Ok(())
}

/// Hinge arguments `α_k d_k + 1` for one (imitator, demonstration) pair.
fn hinge_args(
    f_imit: &CostFeatures,
    f_demo: &CostFeatures,
    slopes: &HingeSlopes,
    mode: SubdomMode,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.extend(
        f_imit
            .iter()
            .zip(f_demo.iter())
            .zip(slopes.alpha())
            .map(|((fi, fd), a)| a * feature_diff(mode, *fi, *fd) + 1.0),
    );
}

fn validate_pair(f_imit: &CostFeatures, f_demo: &CostFeatures, slopes: &HingeSlopes, cfg: &SubdomConfig) -> Result<()> {
    check_same_dim(f_imit, f_demo)?;
    if slopes.dim() != f_imit.dim() {
        return Err(invalid!(
            "slope dimension {} does not match feature dimension {}",
            slopes.dim(),
            f_imit.dim()
        ));
    }
    check_relative_demo(cfg.mode, f_demo)
}

/// Aggregated subdominance of one imitator feature vector against one demonstration.
pub fn subdom_pair(
    f_imit: &CostFeatures,
    f_demo: &CostFeatures,
    slopes: &HingeSlopes,
    cfg: &SubdomConfig,
) -> Result<f64> {
    validate_pair(f_imit, f_demo, slopes, cfg)?;
    let mut args = Vec::with_capacity(f_imit.dim());
    hinge_args(f_imit, f_demo, slopes, cfg.mode, &mut args);
    Ok(aggregate(&args, cfg.aggregation))
}

fn aggregate(args: &[f64], aggregation: Aggregation) -> f64 {
    match aggregation {
        Aggregation::Sum => args.iter().map(|a| hinge(*a)).sum(),
        Aggregation::Max => args.iter().map(|a| hinge(*a)).fold(0.0, f64::max),
    }
}

/// Support demonstrations per feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    per_feature: Vec<Vec<usize>>,
    membership: Vec<Vec<bool>>,
}

impl SupportSet {
    fn empty(n_demos: usize, dim: usize) -> Self {
        SupportSet {
            per_feature: vec![Vec::new(); dim],
            membership: vec![vec![false; dim]; n_demos],
        }
    }

    fn insert(&mut self, demo: usize, k: usize) {
        self.membership[demo][k] = true;
        self.per_feature[k].push(demo);
    }

    pub fn dim(&self) -> usize {
        self.per_feature.len()
    }

    pub fn n_demos(&self) -> usize {
        self.membership.len()
    }

    /// Demonstration indices supporting feature `k`, ascending.
    pub fn feature(&self, k: usize) -> &[usize] {
        &self.per_feature[k]
    }

    pub fn contains(&self, demo: usize, k: usize) -> bool {
        self.membership[demo][k]
    }

    /// Whether `demo` supports any feature.
    pub fn is_support(&self, demo: usize) -> bool {
        self.membership[demo].iter().any(|m| *m)
    }

    /// Size of the union over features of the support sets.
    pub fn union_len(&self) -> usize {
        self.membership.iter().filter(|row| row.iter().any(|m| *m)).count()
    }

    pub fn is_empty(&self) -> bool {
        self.per_feature.iter().all(Vec::is_empty)
    }
}

/// Mean subdominance against a demonstration set, together with its support set.
pub fn subdom_vs_set(
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    cfg: &SubdomConfig,
) -> Result<(f64, SupportSet)> {
    if demos.is_empty() {
        return Err(invalid!("subdominance against an empty demonstration set"));
    }
    let dim = f_imit.dim();
    let mut support = SupportSet::empty(demos.len(), dim);
    let mut args = Vec::with_capacity(dim);
    let mut total = 0.0;
    for (j, demo) in demos.iter().enumerate() {
        validate_pair(f_imit, demo, slopes, cfg)?;
        hinge_args(f_imit, demo, slopes, cfg.mode, &mut args);
        match cfg.aggregation {
            Aggregation::Sum => {
                for (k, a) in args.iter().enumerate() {
                    if *a >= 0.0 {
                        support.insert(j, k);
                        total += a;
                    }
                }
            }
            Aggregation::Max => {
                // first maximizing feature wins ties
                let (k_star, a_star) = args
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, a)| if a > best.1 { (k, a) } else { best });
                if a_star >= 0.0 {
                    support.insert(j, k_star);
                    total += a_star;
                }
            }
        }
    }
    Ok((total / demos.len() as f64, support))
}

/// Support set alone (see [`subdom_vs_set`]).
pub fn support_set(
    f_imit: &CostFeatures,
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    cfg: &SubdomConfig,
) -> Result<SupportSet> {
    subdom_vs_set(f_imit, demos, slopes, cfg).map(|(_, s)| s)
}

/// Strict component-wise Pareto dominance of `f_imit` over `f_demo`: the imitator
/// then satisfices every aspiration expressible with nonnegative weights on these
/// features.
pub fn check_satisfices(f_imit: &CostFeatures, f_demo: &CostFeatures) -> bool {
    f_imit.strictly_dominates(f_demo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cf(v: &[f64]) -> CostFeatures {
        CostFeatures::new(v.to_vec()).unwrap()
    }

    fn slopes(v: &[f64]) -> HingeSlopes {
        HingeSlopes::new(v.to_vec(), 0.0).unwrap()
    }

    const ABS_SUM: SubdomConfig = SubdomConfig { mode: SubdomMode::Absolute, aggregation: Aggregation::Sum };
    const ABS_MAX: SubdomConfig = SubdomConfig { mode: SubdomMode::Absolute, aggregation: Aggregation::Max };

    #[test]
    fn feature_abs_examples() {
        assert_eq!(subdom_feature_abs(2.0, 5.0, 1.0).unwrap(), 0.0);
        assert_eq!(subdom_feature_abs(5.0, 5.0, 1.0).unwrap(), 1.0);
        assert_eq!(subdom_feature_abs(7.0, 5.0, 0.5).unwrap(), 2.0);
        assert!(subdom_feature_abs(f64::NAN, 5.0, 1.0).is_err());
        assert!(subdom_feature_abs(1.0, f64::INFINITY, 1.0).is_err());
        assert!(subdom_feature_abs(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn feature_rel_examples() {
        assert_eq!(subdom_feature_rel(6.0, 3.0, 1.0).unwrap(), 2.0);
        assert_eq!(subdom_feature_rel(3.0, 3.0, 1.0).unwrap(), 1.0);
        assert_eq!(subdom_feature_rel(3.0, 6.0, 2.0).unwrap(), 0.0);
        assert!(matches!(subdom_feature_rel(1.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(subdom_feature_rel(1.0, -2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn pair_examples() {
        let a = cf(&[2.0, 6.0]);
        let b = cf(&[5.0, 5.0]);
        let s = slopes(&[1.0, 1.0]);
        assert_eq!(subdom_pair(&a, &b, &s, &ABS_SUM).unwrap(), 2.0);
        assert_eq!(subdom_pair(&a, &b, &s, &ABS_MAX).unwrap(), 2.0);
        let c = cf(&[3.0, 3.0]);
        assert_eq!(subdom_pair(&c, &c, &s, &ABS_SUM).unwrap(), 2.0);
        assert!(subdom_pair(&a, &cf(&[1.0]), &s, &ABS_SUM).is_err());
    }

    #[test]
    fn relative_pair_rejects_zero_demo_total() {
        let cfg = SubdomConfig::new(SubdomMode::Relative, Aggregation::Sum);
        let err = subdom_pair(&cf(&[1.0, 1.0]), &cf(&[1.0, 0.0]), &slopes(&[1.0, 1.0]), &cfg);
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn vs_set_examples() {
        let (v, sv) = subdom_vs_set(&cf(&[3.0]), &[cf(&[2.0]), cf(&[6.0])], &slopes(&[1.0]), &ABS_SUM).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(sv.feature(0), &[0]);

        let (v, sv) = subdom_vs_set(&cf(&[0.0]), &[cf(&[5.0]), cf(&[9.0])], &slopes(&[1.0]), &ABS_SUM).unwrap();
        assert_eq!(v, 0.0);
        assert!(sv.is_empty());

        let (v, sv) = subdom_vs_set(&cf(&[4.0]), &[cf(&[5.0]), cf(&[7.0])], &slopes(&[0.5]), &ABS_SUM).unwrap();
        assert_eq!(v, 0.25);
        assert_eq!(sv.feature(0), &[0]);

        assert!(subdom_vs_set(&cf(&[1.0]), &[], &slopes(&[1.0]), &ABS_SUM).is_err());
    }

    #[test]
    fn boundary_demo_is_support_with_zero_loss() {
        // 4 + 1/0.5 = 6 exactly
        let (v, sv) = subdom_vs_set(&cf(&[4.0]), &[cf(&[6.0])], &slopes(&[0.5]), &ABS_SUM).unwrap();
        assert_eq!(v, 0.0);
        assert!(sv.contains(0, 0));
        assert_eq!(sv.union_len(), 1);
    }

    #[test]
    fn max_aggregation_assigns_each_demo_one_feature() {
        let demos = [cf(&[1.0, 1.0]), cf(&[2.0, 0.5]), cf(&[9.0, 9.0])];
        let (v, sv) = subdom_vs_set(&cf(&[2.0, 2.0]), &demos, &slopes(&[1.0, 1.0]), &ABS_MAX).unwrap();
        for j in 0..demos.len() {
            let count = (0..2).filter(|k| sv.contains(j, *k)).count();
            assert!(count <= 1);
        }
        // demo0: args (2,2) -> feature 0; demo1: (1, 2.5) -> feature 1; demo2: none
        assert_eq!(sv.feature(0), &[0]);
        assert_eq!(sv.feature(1), &[1]);
        assert!((v - (2.0 + 2.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn satisfices_examples() {
        assert!(check_satisfices(&cf(&[1.0, 1.0]), &cf(&[2.0, 2.0])));
        assert!(!check_satisfices(&cf(&[1.0, 3.0]), &cf(&[2.0, 2.0])));
        assert!(!check_satisfices(&cf(&[2.0, 2.0]), &cf(&[2.0, 2.0])));
    }

    #[test]
    fn slopes_validation() {
        assert!(HingeSlopes::new(vec![1.0, 0.0], 0.1).is_err());
        assert!(HingeSlopes::new(vec![], 0.1).is_err());
        assert!(HingeSlopes::new(vec![1.0], -0.1).is_err());
        assert!(HingeSlopes::new(vec![1.0], 0.1).is_ok());
    }
}
