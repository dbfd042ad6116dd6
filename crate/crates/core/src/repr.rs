//! Cost features learned from two-level preferences.
//!
//! A network `f_ψ` maps each state to `K′` nonnegative values (softplus output);
//! a trajectory's learned feature total is the sum over its states. For a pair
//! where `ξ_i` is less preferred than `ξ_j`, with `c_ij = subdom(F_i, F_j)` at a
//! fixed all-ones slope, the loss is `−log(e^{c_ij} / (e^{c_ij} + e^{c_ji}))`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::features::{quadratic_expand, CostFeatures};
use crate::math;
use crate::nn::{self, Adam, Architecture};
use crate::seed::rng_from;
use crate::trajectory::{PaddingConfig, Trajectory};

pub const FEATNET_VERSION: &str = "minsubfi-featnet/1";

/// `less_preferred ≺ more_preferred`, as indices into a demo slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub less_preferred: usize,
    pub more_preferred: usize,
}

/// Every (not acceptable ≺ acceptable) pair, where acceptable means
/// `true_return >= threshold`.
pub fn build_preferences(demos: &[Trajectory], threshold: f64) -> Result<Vec<PreferencePair>> {
    let (good, bad): (Vec<usize>, Vec<usize>) = (0..demos.len()).partition(|i| demos[*i].true_return >= threshold);
    if good.is_empty() || bad.is_empty() {
        return Err(Error::Config(alloc::format!(
            "threshold {threshold} leaves {} acceptable and {} unacceptable demonstrations",
            good.len(),
            bad.len()
        )));
    }
    Ok(bad
        .iter()
        .flat_map(|b| good.iter().map(move |g| PreferencePair { less_preferred: *b, more_preferred: *g }))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNetParams {
    pub architecture: Architecture,
    pub weights: Vec<f64>,
    pub version: String,
}

impl FeatureNetParams {
    pub fn new(architecture: Architecture, weights: Vec<f64>) -> Result<Self> {
        architecture.validate()?;
        architecture.check_weights(&weights)?;
        Ok(FeatureNetParams { architecture, weights, version: FEATNET_VERSION.to_string() })
    }

    /// Two hidden layers of width 8 and three outputs.
    pub fn default_architecture(input_dim: usize) -> Architecture {
        Architecture { input_dim, hidden: vec![8, 8], output_dim: 3, activation: Default::default() }
    }

    pub fn random(architecture: Architecture, seed: u64) -> Self {
        let weights = nn::xavier_init(&architecture, &mut rng_from(seed));
        FeatureNetParams { architecture, weights, version: FEATNET_VERSION.to_string() }
    }

    pub fn output_dim(&self) -> usize {
        self.architecture.output_dim
    }

    /// Nonnegative features of one state.
    pub fn eval(&self, state: &[f64]) -> Result<CostFeatures> {
        let out = nn::forward(&self.architecture, &self.weights, state)?;
        Ok(CostFeatures::from_vec_unchecked(out.into_iter().map(math::softplus).collect()))
    }

    /// Sum of the learned features over the trajectory's states.
    pub fn trajectory_total(&self, traj: &Trajectory) -> Result<CostFeatures> {
        let mut total = CostFeatures::zeros(self.output_dim());
        for s in &traj.states {
            total.add_assign(&self.eval(s)?);
        }
        Ok(total)
    }

    /// Adds `Σ_t J(s_t)ᵀ g` to `grad`, where `J` is the Jacobian of the state features.
    fn accumulate_total_grad(&self, traj: &Trajectory, g: &[f64], grad: &mut [f64]) -> Result<()> {
        if g.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        for s in &traj.states {
            let (out, cache) = nn::forward_cached(&self.architecture, &self.weights, s)?;
            let g_out: Vec<f64> = out.iter().zip(g).map(|(o, gi)| gi * math::sigmoid(*o)).collect();
            nn::backward(&self.architecture, &self.weights, &cache, &g_out, grad);
        }
        Ok(())
    }
}

/// Where learners take their per-step cost features from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FeatureMap {
    /// The environment's features as recorded in the trajectory.
    Handcrafted,
    /// Per-state outer product of the hand-crafted features.
    HandcraftedQuadratic,
    Learned { net: FeatureNetParams },
}

impl FeatureMap {
    pub fn step_features(&self, traj: &Trajectory) -> Result<Vec<CostFeatures>> {
        match self {
            FeatureMap::Handcrafted => Ok(traj.step_features.clone()),
            FeatureMap::HandcraftedQuadratic => Ok(traj.step_features.iter().map(quadratic_expand).collect()),
            FeatureMap::Learned { net } => traj.states.iter().map(|s| net.eval(s)).collect(),
        }
    }

    /// Feature dimension given the hand-crafted dimension.
    pub fn dim(&self, handcrafted_dim: usize) -> usize {
        match self {
            FeatureMap::Handcrafted => handcrafted_dim,
            FeatureMap::HandcraftedQuadratic => handcrafted_dim * handcrafted_dim,
            FeatureMap::Learned { net } => net.output_dim(),
        }
    }
}

/// Feature map followed by optional padding; every learner and evaluator sees
/// trajectories through one of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub map: FeatureMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<PaddingConfig>,
}

impl Default for FeaturePipeline {
    fn default() -> Self {
        FeaturePipeline { map: FeatureMap::Handcrafted, padding: None }
    }
}

impl FeaturePipeline {
    pub fn new(map: FeatureMap, padding: Option<PaddingConfig>) -> Self {
        FeaturePipeline { map, padding }
    }

    /// Mapped and padded per-step features.
    pub fn steps(&self, traj: &Trajectory) -> Result<Vec<CostFeatures>> {
        let mut steps = self.map.step_features(traj)?;
        if let Some(p) = &self.padding {
            if let Some(first) = steps.first() {
                if first.dim() != p.pad_features.dim() {
                    return Err(invalid!("padding vector does not match the feature dimension"));
                }
            }
            p.pad_steps(&mut steps);
        }
        Ok(steps)
    }

    pub fn total(&self, traj: &Trajectory) -> Result<CostFeatures> {
        CostFeatures::total(&self.steps(traj)?)
    }
}

/// `Σ_k [F_a,k − F_b,k + 1]_+` with the positive-part indicators.
fn unit_subdom(a: &CostFeatures, b: &CostFeatures) -> (f64, Vec<bool>) {
    let mut value = 0.0;
    let active = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let h = x - y + 1.0;
            if h > 0.0 {
                value += h;
            }
            h > 0.0
        })
        .collect();
    (value, active)
}

/// Loss and derivatives with respect to the two trajectory totals.
fn pair_loss(less: &CostFeatures, more: &CostFeatures) -> (f64, Vec<f64>, Vec<f64>) {
    let (c_lm, act_lm) = unit_subdom(less, more);
    let (c_ml, act_ml) = unit_subdom(more, less);
    // −log σ(c_lm − c_ml) = softplus(c_ml − c_lm)
    let loss = math::softplus(c_ml - c_lm);
    let w = math::sigmoid(c_ml - c_lm);
    let k = less.dim();
    let mut g_less = vec![0.0; k];
    let mut g_more = vec![0.0; k];
    for i in 0..k {
        if act_lm[i] {
            g_less[i] -= w;
            g_more[i] += w;
        }
        if act_ml[i] {
            g_more[i] += w;
            g_less[i] -= w;
        }
    }
    (loss, g_less, g_more)
}

/// Preference loss of one pair and its subgradient in the network weights.
/// Hinge kinks take the zero subgradient.
pub fn pref_loss(net: &FeatureNetParams, pair: PreferencePair, demos: &[Trajectory]) -> Result<(f64, Vec<f64>)> {
    let less = demos.get(pair.less_preferred).ok_or_else(|| invalid!("preference index out of range"))?;
    let more = demos.get(pair.more_preferred).ok_or_else(|| invalid!("preference index out of range"))?;
    let (loss, g_less, g_more) = pair_loss(&net.trajectory_total(less)?, &net.trajectory_total(more)?);
    let mut grad = vec![0.0; net.weights.len()];
    net.accumulate_total_grad(less, &g_less, &mut grad)?;
    net.accumulate_total_grad(more, &g_more, &mut grad)?;
    Ok((loss, grad))
}

/// Loss from two trajectory-level logits.
pub fn logistic_pref_loss(c_less_more: f64, c_more_less: f64) -> f64 {
    math::softplus(c_more_less - c_less_more)
}

/// Mean preference loss and its gradient over all pairs.
pub fn mean_pref_loss(
    net: &FeatureNetParams,
    prefs: &[PreferencePair],
    demos: &[Trajectory],
) -> Result<(f64, Vec<f64>)> {
    if prefs.is_empty() {
        return Err(invalid!("no preference pairs"));
    }
    let totals = demos.iter().map(|d| net.trajectory_total(d)).collect::<Result<Vec<_>>>()?;
    let k = net.output_dim();
    let mut total_grads = vec![vec![0.0; k]; demos.len()];
    let mut loss = 0.0;
    let scale = 1.0 / prefs.len() as f64;
    for p in prefs {
        let (less, more) = (
            totals.get(p.less_preferred).ok_or_else(|| invalid!("preference index out of range"))?,
            totals.get(p.more_preferred).ok_or_else(|| invalid!("preference index out of range"))?,
        );
        let (l, gl, gm) = pair_loss(less, more);
        loss += scale * l;
        for i in 0..k {
            total_grads[p.less_preferred][i] += scale * gl[i];
            total_grads[p.more_preferred][i] += scale * gm[i];
        }
    }
    let mut grad = vec![0.0; net.weights.len()];
    for (d, g) in demos.iter().zip(&total_grads) {
        net.accumulate_total_grad(d, g, &mut grad)?;
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FeatureTrainConfig {
    fn default() -> Self {
        FeatureTrainConfig { epochs: 500, learning_rate: 0.01, seed: 0 }
    }
}

/// Full-batch Adam on the mean preference loss. Returns the net and its final loss.
pub fn train_features(
    demos: &[Trajectory],
    prefs: &[PreferencePair],
    arch: &Architecture,
    cfg: &FeatureTrainConfig,
) -> Result<(FeatureNetParams, f64)> {
    if prefs.is_empty() {
        return Err(invalid!("feature learning needs at least one preference pair"));
    }
    arch.validate()?;
    let mut net = FeatureNetParams::random(arch.clone(), cfg.seed);
    let mut opt = Adam::new(net.weights.len(), cfg.learning_rate);
    for _ in 0..cfg.epochs {
        let (loss, grad) = mean_pref_loss(&net, prefs, demos)?;
        if !loss.is_finite() {
            return Err(Error::Numerical("preference loss is not finite".to_string()));
        }
        opt.step(&mut net.weights, &grad);
    }
    let (loss, _) = mean_pref_loss(&net, prefs, demos)?;
    Ok((net, loss))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvId;

    fn demo(ret: f64, states: Vec<Vec<f64>>) -> Trajectory {
        let n = states.len();
        Trajectory {
            env_id: EnvId::CartPole,
            task_id: 0,
            seed: 0,
            states,
            actions: vec![0; n - 1],
            step_features: vec![CostFeatures::zeros(1); n],
            logprobs: None,
            true_return: ret,
        }
    }

    #[test]
    fn preference_pairs() {
        let d = [demo(10.0, vec![vec![0.0]]), demo(200.0, vec![vec![0.0]])];
        assert_eq!(
            build_preferences(&d, 100.0).unwrap(),
            vec![PreferencePair { less_preferred: 0, more_preferred: 1 }]
        );
        let d: Vec<Trajectory> = [1.0, 2.0, 3.0, 150.0, 160.0].iter().map(|r| demo(*r, vec![vec![0.0]])).collect();
        assert_eq!(build_preferences(&d, 100.0).unwrap().len(), 6);
        assert!(matches!(build_preferences(&d, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn symmetric_logits_give_ln2() {
        assert_eq!(logistic_pref_loss(1.5, 1.5), core::f64::consts::LN_2);
        assert!(logistic_pref_loss(1e3, 0.0) < 1e-12);
    }

    #[test]
    fn outputs_nonnegative() {
        let net = FeatureNetParams::random(FeatureNetParams::default_architecture(4), 1);
        let f = net.eval(&[100.0, -100.0, 3.0, 0.0]).unwrap();
        assert_eq!(f.dim(), 3);
        assert!(f.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn zero_epochs_returns_init() {
        let d = [demo(10.0, vec![vec![0.0], vec![1.0]]), demo(200.0, vec![vec![1.0], vec![2.0]])];
        let prefs = build_preferences(&d, 100.0).unwrap();
        let arch = Architecture::new(1, vec![8, 8], 3).unwrap();
        let cfg = FeatureTrainConfig { epochs: 0, seed: 9, ..Default::default() };
        let (net, _) = train_features(&d, &prefs, &arch, &cfg).unwrap();
        assert_eq!(net, FeatureNetParams::random(arch, 9));
    }

    #[test]
    fn quadratic_map_dimension() {
        let d = demo(0.0, vec![vec![0.0], vec![0.0]]);
        let m = FeatureMap::HandcraftedQuadratic;
        assert_eq!(m.step_features(&d).unwrap()[0].dim(), 1);
        assert_eq!(m.dim(4), 16);
    }
}
