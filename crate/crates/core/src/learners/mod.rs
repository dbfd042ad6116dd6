//! Policy-gradient learners that minimize expected subdominance.
//!
//! * [`online_update`] rolls the policy out from the task's initial states.
//! * [`snippet_update`] restarts rollouts from states inside demonstrations and
//!   scores max–min prefix snippets.
//! * [`offline_update`] never touches the environment: each demonstration plays
//!   the role of a rollout, reweighted by `π_θ(ξ̃)/π_BC(ξ̃)`.
//!
//! Returns `G_t` are either the negated total subdominance at every step
//! (sparse terminal cost) or negated future sums of per-state contributions.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaUpdateConfig;
pub use crate::nn::Optimizer;
use crate::decompose::{contributions, future_sums};
use crate::demos::DemoSet;
use crate::env::Environment;
use crate::error::{invalid, Error, Result};
use crate::features::CostFeatures;
use crate::nn::{Adam, Architecture};
use crate::policy::{bc_train, BcConfig, PolicyParams};
use crate::repr::FeaturePipeline;
use crate::seed::{derive, stream_rng, Rng, Stream};
use crate::subdom::{subdom_vs_set, HingeSlopes, SubdomConfig, SupportSet};
use crate::trajectory::Trajectory;

mod offline;
mod online;
mod snippet;

pub use offline::offline_update;
pub use online::online_update;
pub use snippet::snippet_update;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Online,
    Snippet,
    SnippetOpt,
    Offline,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Online => "online",
            Variant::Snippet => "snippet",
            Variant::SnippetOpt => "snippet_opt",
            Variant::Offline => "offline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    None,
    /// Leave-one-out mean of the batch's trajectory returns.
    #[default]
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnMode {
    PerState,
    #[default]
    SparseTerminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Random,
    Bc,
    #[default]
    OfflineMinsubfi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMethod {
    /// Exact minimizer recomputed for every rollout.
    #[default]
    Analytic,
    /// Exponentiated-gradient steps on a persistent slope vector.
    Eg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    /// Rollouts per task per update (`M`).
    pub rollouts_per_update: usize,
    pub learning_rate: f64,
    pub baseline: Baseline,
    pub return_mode: ReturnMode,
    /// Snippet rollout horizon as a fraction of the episode cap.
    pub snippet_fraction: f64,
    pub snippet_count: usize,
    pub updates: usize,
    pub seed: u64,
    pub lambda_theta: f64,
    pub init: Init,
    pub alpha_method: AlphaMethod,
    pub alpha: AlphaUpdateConfig,
    pub initial_alpha: f64,
    pub subdom: SubdomConfig,
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
    pub bc: BcConfig,
    /// Offline passes run before online training when `init = offline_minsubfi`.
    pub pretrain_updates: usize,
    /// Updates after a random initialization during which slopes stay fixed.
    pub alpha_guard_updates: usize,
    /// Bound on `|log π_θ(ξ̃) − log π_BC(ξ̃)|`.
    pub log_ratio_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::Online,
            rollouts_per_update: 8,
            learning_rate: 1e-2,
            baseline: Baseline::Mean,
            return_mode: ReturnMode::SparseTerminal,
            snippet_fraction: 0.2,
            snippet_count: 4,
            updates: 200,
            seed: 0,
            lambda_theta: 0.0,
            init: Init::OfflineMinsubfi,
            alpha_method: AlphaMethod::Analytic,
            alpha: AlphaUpdateConfig::default(),
            initial_alpha: 1.0,
            subdom: SubdomConfig::default(),
            hidden: vec![32],
            optimizer: Optimizer::Adam,
            bc: BcConfig::default(),
            pretrain_updates: 50,
            alpha_guard_updates: 10,
            log_ratio_clip: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.rollouts_per_update == 0 {
            return bad("rollouts_per_update must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.10..=0.25).contains(&self.snippet_fraction) {
            return bad("snippet_fraction must lie in [0.10, 0.25]");
        }
        if self.snippet_count == 0 {
            return bad("snippet_count must be at least 1");
        }
        if !(self.lambda_theta.is_finite() && self.lambda_theta >= 0.0) {
            return bad("lambda_theta must be nonnegative");
        }
        if !(self.initial_alpha.is_finite() && self.initial_alpha > 0.0) {
            return bad("initial_alpha must be positive");
        }
        if !(self.log_ratio_clip.is_finite() && self.log_ratio_clip > 0.0) {
            return bad("log_ratio_clip must be positive");
        }
        self.alpha.validate()
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub update: usize,
    pub variant: String,
    pub mean_subdom: f64,
    pub support_fraction: f64,
    pub mean_true_return: f64,
    pub env_steps: u64,
    pub wall_ms: u64,
}

/// Variant name of the row recording an offline pretraining phase.
pub const PRETRAIN_MARKER: &str = "offline_pretrain";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    /// Rows produced by the main update loop.
    pub fn update_rows(&self) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(|r| r.variant != PRETRAIN_MARKER)
    }
}

/// Metrics of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateMetrics {
    pub mean_subdom: f64,
    pub support_fraction: f64,
    pub mean_true_return: f64,
    /// Tasks (online) or samples (snippet, offline) that could not be used.
    pub skipped: usize,
}

/// Demonstrations with their features precomputed.
#[derive(Debug, Clone)]
pub struct PreparedDemos {
    pub set: DemoSet,
    pub steps: Vec<Vec<CostFeatures>>,
    pub totals: Vec<CostFeatures>,
    pub by_task: BTreeMap<u32, Vec<usize>>,
}

impl PreparedDemos {
    pub fn new(set: DemoSet, features: &FeaturePipeline) -> Result<Self> {
        if set.is_empty() {
            return Err(invalid!("training needs demonstrations"));
        }
        let steps = set.iter().map(|d| features.steps(d)).collect::<Result<Vec<_>>>()?;
        let totals = steps.iter().map(CostFeatures::total).collect::<Result<Vec<_>>>()?;
        let by_task = set.by_task();
        Ok(PreparedDemos { set, steps, totals, by_task })
    }

    pub fn task_totals(&self, task: u32) -> Vec<CostFeatures> {
        self.by_task.get(&task).map_or_else(Vec::new, |ix| ix.iter().map(|i| self.totals[*i].clone()).collect())
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.totals[0].dim()
    }
}

/// Mutable learner state carried between updates.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub params: PolicyParams,
    pub slopes: HingeSlopes,
    /// Slopes stay fixed while this is positive; decremented every update.
    pub alpha_frozen_updates: usize,
    optimizer: Option<Adam>,
}

impl LearnerState {
    pub fn new(params: PolicyParams, slopes: HingeSlopes, cfg: &TrainConfig) -> Self {
        let optimizer = match cfg.optimizer {
            Optimizer::Adam => Some(Adam::new(params.weights.len(), cfg.learning_rate)),
            Optimizer::Sgd => None,
        };
        LearnerState { params, slopes, alpha_frozen_updates: 0, optimizer }
    }

    /// `θ ← θ + η ascent − η λ_θ θ` (or the Adam equivalent).
    pub(crate) fn apply(&mut self, ascent: &[f64], cfg: &TrainConfig) -> Result<()> {
        let descent: Vec<f64> = ascent
            .iter()
            .zip(&self.params.weights)
            .map(|(g, w)| -g + cfg.lambda_theta * w)
            .collect();
        match &mut self.optimizer {
            Some(adam) => adam.step(&mut self.params.weights, &descent),
            None => {
                for (w, d) in self.params.weights.iter_mut().zip(&descent) {
                    *w -= cfg.learning_rate * d;
                }
            }
        }
        if self.params.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Numerical("policy parameters became non-finite".to_string()));
        }
        Ok(())
    }

    pub(crate) fn alpha_frozen(&self) -> bool {
        self.alpha_frozen_updates > 0
    }

    pub(crate) fn end_update(&mut self) {
        self.alpha_frozen_updates = self.alpha_frozen_updates.saturating_sub(1);
    }
}

/// Subdominance of a feature sequence, its support set and the returns for the
/// first `n_actions` steps.
pub(crate) fn scored_returns(
    steps: &[CostFeatures],
    demos: &[CostFeatures],
    slopes: &HingeSlopes,
    subdom: &SubdomConfig,
    mode: ReturnMode,
    n_actions: usize,
) -> Result<(f64, SupportSet, Vec<f64>)> {
    let total = CostFeatures::total(steps)?;
    let (value, support) = subdom_vs_set(&total, demos, slopes, subdom)?;
    let returns = match mode {
        ReturnMode::SparseTerminal => vec![-value; n_actions],
        ReturnMode::PerState => {
            let c = contributions(steps, demos, slopes, subdom.mode, &support);
            future_sums(&c).iter().take(n_actions).map(|g| -g).collect()
        }
    };
    Ok((value, support, returns))
}

/// Leave-one-out means of `values`; a lone value gets baseline 0.
pub(crate) fn leave_one_out_means(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let sum: f64 = values.iter().sum();
    values.iter().map(|v| (sum - v) / (n - 1) as f64).collect()
}

/// Adds `weight · Σ_t (G_t − b) ∇ log π(a_t | s_t)` to `grad`.
pub(crate) fn accumulate_policy_gradient(
    params: &PolicyParams,
    traj: &Trajectory,
    returns: &[f64],
    baseline: f64,
    weight: f64,
    grad: &mut [f64],
) -> Result<()> {
    for ((s, a), g) in traj.states.iter().zip(&traj.actions).zip(returns) {
        let scale = weight * (g - baseline);
        if scale != 0.0 {
            params.accumulate_grad_log_prob(s, *a, scale, grad)?;
        }
    }
    Ok(())
}

/// Element-wise mean of slope vectors.
pub(crate) fn mean_slopes(all: &[HingeSlopes], fallback: &HingeSlopes) -> HingeSlopes {
    if all.is_empty() {
        return fallback.clone();
    }
    let dim = fallback.dim();
    let mut mean = vec![0.0; dim];
    for s in all {
        for (m, a) in mean.iter_mut().zip(s.alpha()) {
            *m += a / all.len() as f64;
        }
    }
    HingeSlopes::from_parts_unchecked(mean, fallback.lambda_alpha())
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub slopes: HingeSlopes,
    pub log: TrainLog,
    /// Behavior-cloned policy, when one was trained.
    pub bc_params: Option<PolicyParams>,
}

/// Initializes a policy and runs `cfg.updates` updates of `cfg.variant`.
///
/// `clock` returns milliseconds from an arbitrary origin and only feeds the
/// `wall_ms` log column.
pub fn train(
    demos: &DemoSet,
    env: &mut dyn Environment,
    features: &FeaturePipeline,
    cfg: &TrainConfig,
    clock: &mut dyn FnMut() -> u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start_ms = clock();
    let start_steps = env.env_steps();
    let prepared = PreparedDemos::new(demos.clone(), features)?;
    let arch = Architecture::new(env.obs_dim(), cfg.hidden.clone(), env.num_actions())?;
    let slopes = HingeSlopes::uniform(prepared.feature_dim(), cfg.initial_alpha, cfg.alpha.lambda)?;

    let needs_bc = cfg.init != Init::Random || cfg.variant == Variant::Offline;
    let bc_params = if needs_bc {
        let bc_cfg = BcConfig { seed: derive(cfg.seed, Stream::Init), ..cfg.bc.clone() };
        Some(bc_train(demos.as_slice(), &arch, &bc_cfg)?.0)
    } else {
        None
    };
    let init_params = match (&bc_params, cfg.init) {
        (Some(bc), Init::Bc | Init::OfflineMinsubfi) => bc.clone(),
        _ => PolicyParams::random(arch.clone(), &mut stream_rng(cfg.seed, Stream::Init)),
    };
    let mut log = TrainLog::default();
    let mut state = LearnerState::new(init_params, slopes, cfg);
    if cfg.init == Init::Random {
        state.alpha_frozen_updates = cfg.alpha_guard_updates;
    }

    if cfg.init == Init::OfflineMinsubfi {
        let bc = bc_params.as_ref().expect("trained above");
        let mut pre = LearnerState::new(state.params.clone(), state.slopes.clone(), cfg);
        let mut last = UpdateMetrics::default();
        for _ in 0..cfg.pretrain_updates {
            last = offline_update(&mut pre, &prepared, bc, cfg)?;
        }
        log.rows.push(LogRow {
            update: 0,
            variant: PRETRAIN_MARKER.to_string(),
            mean_subdom: last.mean_subdom,
            support_fraction: last.support_fraction,
            mean_true_return: last.mean_true_return,
            env_steps: env.env_steps() - start_steps,
            wall_ms: clock().saturating_sub(start_ms),
        });
        state.params = pre.params;
        state.slopes = pre.slopes;
    }

    let mut rng: Rng = stream_rng(cfg.seed, Stream::Training);
    for u in 1..=cfg.updates {
        let m = match cfg.variant {
            Variant::Online => online_update(&mut state, &prepared, env, features, cfg, &mut rng)?,
            Variant::Snippet | Variant::SnippetOpt => snippet_update(&mut state, &prepared, env, features, cfg, &mut rng)?,
            Variant::Offline => {
                offline_update(&mut state, &prepared, bc_params.as_ref().expect("trained above"), cfg)?
            }
        };
        if !m.mean_subdom.is_finite() {
            return Err(Error::Numerical(alloc::format!("non-finite subdominance at update {u}")));
        }
        log.rows.push(LogRow {
            update: u,
            variant: cfg.variant.as_str().to_string(),
            mean_subdom: m.mean_subdom,
            support_fraction: m.support_fraction,
            mean_true_return: m.mean_true_return,
            env_steps: env.env_steps() - start_steps,
            wall_ms: clock().saturating_sub(start_ms),
        });
    }
    Ok(TrainOutcome { params: state.params, slopes: state.slopes, log, bc_params })
}
