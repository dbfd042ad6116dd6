//! The subcommands, callable without going through argument parsing.

use std::path::PathBuf;
use std::time::Instant;

use minsubfi_core::demos::{gen_demos_tasks, percentile_padding, DemoSet, Demonstrator};
use minsubfi_core::env::{make_env, EnvId};
use minsubfi_core::eval::{eval_rollouts, evaluate, quality_subsets, report_from_rollouts, EvalConfig, EvalReport, Keep, QUALITY_FRACTIONS};
use minsubfi_core::learners::{train, Init, LogRow, TrainOutcome, Variant};
use minsubfi_core::policy::{ActionSampler, PolicyParams};
use minsubfi_core::repr::{build_preferences, train_features, FeatureMap, FeatureNetParams, FeaturePipeline, FeatureTrainConfig};
use serde::Serialize;

use crate::config::{FeatureSource, RunConfig};
use crate::error::{CliError, Result};
use crate::io::{load_featnet, load_policy, read_demos, save_featnet, save_policy, write_demos};
use crate::manifest::Manifest;
use crate::table::{to_csv, write_csv, CsvRow};

impl CsvRow for LogRow {
    const HEADER: &'static [&'static str] =
        &["update", "variant", "mean_subdom", "support_fraction", "mean_true_return", "env_steps", "wall_ms"];
}

fn numerical(msg: String) -> CliError {
    CliError::Core(minsubfi_core::Error::Numerical(msg))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

// ---- gen-demos

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoSummary {
    pub env: String,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub tasks: u32,
    pub min_return: f64,
    pub mean_return: f64,
    pub max_return: f64,
}

impl CsvRow for DemoSummary {
    const HEADER: &'static [&'static str] =
        &["env", "n", "noise", "seed", "tasks", "min_return", "mean_return", "max_return"];
}

#[derive(Debug, Clone)]
pub struct GenDemosArgs {
    pub env: EnvId,
    pub n: usize,
    pub noise: f64,
    pub seed: u64,
    pub tasks: u32,
    pub out: PathBuf,
    pub summary: Option<PathBuf>,
}

pub fn cmd_gen_demos(args: &GenDemosArgs) -> Result<DemoSummary> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.tasks == 0 {
        return Err(CliError::Usage("--tasks must be at least 1".into()));
    }
    let demos = gen_demos_tasks(args.env, args.n, args.noise, args.seed, args.tasks)?;
    write_demos(&args.out, &demos)?;
    let r = demos.returns();
    let summary = DemoSummary {
        env: args.env.to_string(),
        n: demos.len(),
        noise: args.noise,
        seed: args.seed,
        tasks: args.tasks,
        min_return: r.iter().copied().fold(f64::INFINITY, f64::min),
        mean_return: demos.mean_return(),
        max_return: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let text = to_csv(std::slice::from_ref(&summary))?;
    match &args.summary {
        Some(p) => crate::io::write_bytes(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(summary)
}

// ---- shared setup

/// Demonstrations, feature pipeline and any feature net trained on the way.
pub struct Prepared {
    pub demos: DemoSet,
    pub pipeline: FeaturePipeline,
    pub trained_featnet: Option<FeatureNetParams>,
}

fn load_demos_for(cfg: &RunConfig) -> Result<DemoSet> {
    let path = cfg.demos_path()?;
    let demos = read_demos(path)?;
    match demos.env_id() {
        Some(id) if id != cfg.env => Err(CliError::Usage(format!(
            "{} holds {id} demonstrations but the config names {}",
            path.display(),
            cfg.env
        ))),
        _ => Ok(demos),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Builds the feature pipeline for `demos`. With `allow_training`, a learned
/// representation without a feature-net file is trained from return preferences.
pub fn build_pipeline(cfg: &RunConfig, demos: &DemoSet, allow_training: bool) -> Result<(FeaturePipeline, Option<FeatureNetParams>)> {
    let mut trained = None;
    let map = match cfg.features {
        FeatureSource::Handcrafted => FeatureMap::Handcrafted,
        FeatureSource::HandcraftedQuadratic => FeatureMap::HandcraftedQuadratic,
        FeatureSource::Learned => match &cfg.featnet {
            Some(p) => FeatureMap::Learned { net: load_featnet(p)? },
            None if allow_training => {
                let threshold = cfg.pref_threshold.unwrap_or_else(|| median(&demos.returns()));
                let prefs = build_preferences(demos.as_slice(), threshold)?;
                let obs_dim = demos.as_slice()[0].states[0].len();
                let arch = FeatureNetParams::default_architecture(obs_dim);
                let fcfg = FeatureTrainConfig {
                    epochs: cfg.featnet_epochs,
                    learning_rate: cfg.featnet_learning_rate,
                    seed: cfg.seeds[0],
                };
                let (net, _) = train_features(demos.as_slice(), &prefs, &arch, &fcfg)?;
                trained = Some(net.clone());
                FeatureMap::Learned { net }
            }
            None => return Err(CliError::Usage("features = learned needs a feature-net file (--featnet)".into())),
        },
    };
    let padding = if cfg.pad && cfg.env != EnvId::Toy {
        let steps = demos.iter().map(|d| map.step_features(d)).collect::<minsubfi_core::Result<Vec<_>>>()?;
        Some(percentile_padding(steps.iter().flatten(), cfg.pad_horizon)?)
    } else {
        None
    };
    Ok((FeaturePipeline::new(map, padding), trained))
}

pub fn prepare(cfg: &RunConfig, allow_training: bool) -> Result<Prepared> {
    let demos = load_demos_for(cfg)?;
    let (pipeline, trained_featnet) = build_pipeline(cfg, &demos, allow_training)?;
    Ok(Prepared { demos, pipeline, trained_featnet })
}

fn eval_config(cfg: &RunConfig, seed: u64) -> EvalConfig {
    EvalConfig {
        n_rollouts: cfg.n_rollouts,
        seed: seed.wrapping_add(cfg.eval_seed_offset),
        subdom: cfg.subdom(),
        slopes: None,
        alpha: cfg.alpha(),
    }
}

fn check_report(r: &EvalReport) -> Result<()> {
    if [r.gamma_hat, r.relative_ratio, r.mean_return, r.std_return, r.bound_gamma].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(numerical(format!("evaluation produced non-finite values: {r:?}")))
    }
}

fn train_one(cfg: &RunConfig, prepared: &Prepared, seed: u64, overrides: impl FnOnce(&mut minsubfi_core::learners::TrainConfig)) -> Result<TrainOutcome> {
    let mut tcfg = cfg.train_config(seed);
    overrides(&mut tcfg);
    let mut env = make_env(cfg.env)?;
    let start = Instant::now();
    let out = train(&prepared.demos, env.as_mut(), &prepared.pipeline, &tcfg, &mut || start.elapsed().as_millis() as u64)?;
    if out.params.weights.iter().any(|w| !w.is_finite()) {
        return Err(numerical("training produced non-finite weights".into()));
    }
    Ok(out)
}

// ---- train

pub fn cmd_train(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prepared = prepare(cfg, true)?;
    let mut manifest = Manifest::new("train", cfg);
    manifest.add_input(cfg.demos_path()?)?;
    if let Some(p) = &cfg.featnet {
        manifest.add_input(p)?;
    }
    let mut outputs = Vec::new();
    if let Some(net) = &prepared.trained_featnet {
        let p = cfg.out.join("features.featnet.json");
        save_featnet(&p, net)?;
        outputs.push(p);
    }
    for &seed in &cfg.seeds {
        let dir = if cfg.seeds.len() == 1 { cfg.out.clone() } else { cfg.out.join(format!("seed-{seed}")) };
        let out = train_one(cfg, &prepared, seed, |_| {})?;
        let policy = dir.join("policy.policy.json");
        save_policy(&policy, &out.params)?;
        outputs.push(policy);
        if let Some(bc) = &out.bc_params {
            let p = dir.join("bc.policy.json");
            save_policy(&p, bc)?;
            outputs.push(p);
        }
        let log = dir.join("train_log.csv");
        write_csv(&log, &out.log.rows)?;
        outputs.push(log);
        if let Some(last) = out.log.rows.last() {
            println!(
                "seed {seed}: {} updates, final mean subdominance {:.4}, support fraction {:.3}, mean true return {:.2}, env steps {}",
                out.log.update_rows().count(),
                last.mean_subdom,
                last.support_fraction,
                last.mean_true_return,
                last.env_steps
            );
        }
    }
    manifest.outputs = outputs.clone();
    let mpath = cfg.out.join("train.manifest.json");
    manifest.write(&mpath)?;
    outputs.push(mpath);
    Ok(outputs)
}

// ---- eval

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub seed: String,
    pub gamma_hat: f64,
    pub gamma_se: f64,
    pub demo_baseline_rate: f64,
    pub relative_ratio: f64,
    pub mean_return: f64,
    pub std_return: f64,
    pub bound_gamma: f64,
    pub n_rollouts: usize,
    pub n_demos: usize,
}

impl CsvRow for EvalRow {
    const HEADER: &'static [&'static str] = &[
        "seed",
        "gamma_hat",
        "gamma_se",
        "demo_baseline_rate",
        "relative_ratio",
        "mean_return",
        "std_return",
        "bound_gamma",
        "n_rollouts",
        "n_demos",
    ];
}

impl EvalRow {
    fn from_report(seed: String, r: &EvalReport) -> Self {
        EvalRow {
            seed,
            gamma_hat: r.gamma_hat,
            gamma_se: r.gamma_std_error(),
            demo_baseline_rate: r.demo_baseline_rate,
            relative_ratio: r.relative_ratio,
            mean_return: r.mean_return,
            std_return: r.std_return,
            bound_gamma: r.bound_gamma,
            n_rollouts: r.n_rollouts,
            n_demos: r.n_demos,
        }
    }
}

/// What to evaluate: a saved policy or the scripted demonstrator at some noise level.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Policy(PathBuf),
    Demonstrator(f64),
}

enum Sampler {
    Policy(PolicyParams),
    Demonstrator(Demonstrator),
}

impl Sampler {
    fn load(subject: &Subject, env: EnvId) -> Result<Self> {
        Ok(match subject {
            Subject::Policy(p) => Sampler::Policy(load_policy(p)?),
            Subject::Demonstrator(noise) => Sampler::Demonstrator(Demonstrator::new(env, *noise)?),
        })
    }

    fn as_sampler(&mut self) -> &mut dyn ActionSampler {
        match self {
            Sampler::Policy(p) => p,
            Sampler::Demonstrator(d) => d,
        }
    }
}

fn aggregate_row(rows: &[EvalRow]) -> EvalRow {
    let m = |f: fn(&EvalRow) -> f64| mean_std(&rows.iter().map(f).collect::<Vec<_>>()).0;
    EvalRow {
        seed: "mean".into(),
        gamma_hat: m(|r| r.gamma_hat),
        gamma_se: m(|r| r.gamma_se),
        demo_baseline_rate: m(|r| r.demo_baseline_rate),
        relative_ratio: m(|r| r.relative_ratio),
        mean_return: m(|r| r.mean_return),
        std_return: m(|r| r.std_return),
        bound_gamma: m(|r| r.bound_gamma),
        n_rollouts: rows[0].n_rollouts,
        n_demos: rows[0].n_demos,
    }
}

fn print_block(title: &str, rows: &[EvalRow]) {
    let ratio: Vec<f64> = rows.iter().map(|r| r.relative_ratio).collect();
    let gamma: Vec<f64> = rows.iter().map(|r| r.gamma_hat).collect();
    let ret: Vec<f64> = rows.iter().map(|r| r.mean_return).collect();
    let bound: Vec<f64> = rows.iter().map(|r| r.bound_gamma).collect();
    let line = |name: &str, v: &[f64]| {
        let (m, s) = mean_std(v);
        println!("  {name:<20} {m:>10.4} ± {s:.4}");
    };
    println!("{title} ({} seeds, {} rollouts each, {} demos)", rows.len(), rows[0].n_rollouts, rows[0].n_demos);
    line("gamma_hat", &gamma);
    println!("  {:<20} {:>10.4}", "demo_baseline_rate", rows[0].demo_baseline_rate);
    line("relative_ratio", &ratio);
    line("mean_return", &ret);
    line("bound_gamma", &bound);
}

pub fn cmd_eval(cfg: &RunConfig, subject: &Subject) -> Result<Vec<EvalRow>> {
    let prepared = prepare(cfg, false)?;
    let mut sampler = Sampler::load(subject, cfg.env)?;
    let mut env = make_env(cfg.env)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let r = evaluate(sampler.as_sampler(), &prepared.demos, env.as_mut(), &prepared.pipeline, &eval_config(cfg, seed))?;
        check_report(&r)?;
        rows.push(EvalRow::from_report(seed.to_string(), &r));
    }
    print_block("evaluation", &rows);
    rows.push(aggregate_row(&rows));
    let report = cfg.out.join("eval.csv");
    write_csv(&report, &rows)?;
    let mut manifest = Manifest::new("eval", cfg);
    manifest.add_input(cfg.demos_path()?)?;
    if let Subject::Policy(p) = subject {
        manifest.add_input(p)?;
    }
    if let Some(p) = &cfg.featnet {
        manifest.add_input(p)?;
    }
    manifest.outputs = vec![report];
    manifest.write(&cfg.out.join("eval.manifest.json"))?;
    Ok(rows)
}

// ---- bound

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub seed: String,
    pub bound_gamma: f64,
    pub min_bound_gamma: f64,
    pub gamma_hat: f64,
    pub n_rollouts: usize,
    pub n_demos: usize,
}

impl CsvRow for BoundRow {
    const HEADER: &'static [&'static str] = &["seed", "bound_gamma", "min_bound_gamma", "gamma_hat", "n_rollouts", "n_demos"];
}

pub fn cmd_bound(cfg: &RunConfig, subject: &Subject) -> Result<Vec<BoundRow>> {
    let prepared = prepare(cfg, false)?;
    let mut sampler = Sampler::load(subject, cfg.env)?;
    let mut env = make_env(cfg.env)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let rollouts = eval_rollouts(sampler.as_sampler(), &prepared.demos, env.as_mut(), &prepared.pipeline, &eval_config(cfg, seed))?;
        let r = report_from_rollouts(&rollouts, &prepared.demos, &prepared.pipeline)?;
        check_report(&r)?;
        rows.push(BoundRow {
            seed: seed.to_string(),
            bound_gamma: r.bound_gamma,
            min_bound_gamma: rollouts.iter().map(|x| x.bound_gamma).fold(f64::INFINITY, f64::min),
            gamma_hat: r.gamma_hat,
            n_rollouts: r.n_rollouts,
            n_demos: r.n_demos,
        });
    }
    let n = rows.len() as f64;
    rows.push(BoundRow {
        seed: "mean".into(),
        bound_gamma: rows.iter().map(|r| r.bound_gamma).sum::<f64>() / n,
        min_bound_gamma: rows.iter().map(|r| r.min_bound_gamma).fold(f64::INFINITY, f64::min),
        gamma_hat: rows.iter().map(|r| r.gamma_hat).sum::<f64>() / n,
        n_rollouts: cfg.n_rollouts,
        n_demos: prepared.demos.len(),
    });
    let agg = rows.last().expect("just pushed");
    println!("support-vector bound: mean {:.4}, worst {:.4}; observed gamma_hat {:.4}", agg.bound_gamma, agg.min_bound_gamma, agg.gamma_hat);
    let report = cfg.out.join("bound.csv");
    write_csv(&report, &rows)?;
    let mut manifest = Manifest::new("bound", cfg);
    manifest.add_input(cfg.demos_path()?)?;
    if let Subject::Policy(p) = subject {
        manifest.add_input(p)?;
    }
    manifest.outputs = vec![report];
    manifest.write(&cfg.out.join("bound.manifest.json"))?;
    Ok(rows)
}

// ---- ablate-init

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub condition: String,
    pub seed: u64,
    pub gamma_hat: f64,
    pub demo_baseline_rate: f64,
    pub relative_ratio: f64,
    pub mean_return: f64,
    pub std_return: f64,
    pub env_steps: u64,
}

impl CsvRow for AblationRow {
    const HEADER: &'static [&'static str] =
        &["condition", "seed", "gamma_hat", "demo_baseline_rate", "relative_ratio", "mean_return", "std_return", "env_steps"];
}

pub const MIN_ABLATION_SEEDS: usize = 5;

pub fn cmd_ablate_init(cfg: &RunConfig) -> Result<Vec<AblationRow>> {
    if cfg.seeds.len() < MIN_ABLATION_SEEDS {
        return Err(CliError::Usage(format!("ablate-init needs at least {MIN_ABLATION_SEEDS} seeds, got {}", cfg.seeds.len())));
    }
    let prepared = prepare(cfg, true)?;
    let mut env = make_env(cfg.env)?;
    let mut rows = Vec::new();
    for (name, init) in [("bc", Init::Bc), ("offline_minsubfi", Init::OfflineMinsubfi)] {
        for &seed in &cfg.seeds {
            let out = train_one(cfg, &prepared, seed, |t| {
                t.variant = Variant::Online;
                t.init = init;
            })?;
            let r = evaluate(&mut &out.params, &prepared.demos, env.as_mut(), &prepared.pipeline, &eval_config(cfg, seed))?;
            check_report(&r)?;
            rows.push(AblationRow {
                condition: name.to_string(),
                seed,
                gamma_hat: r.gamma_hat,
                demo_baseline_rate: r.demo_baseline_rate,
                relative_ratio: r.relative_ratio,
                mean_return: r.mean_return,
                std_return: r.std_return,
                env_steps: out.log.rows.last().map_or(0, |l| l.env_steps),
            });
        }
    }
    for name in ["bc", "offline_minsubfi"] {
        let ratio: Vec<f64> = rows.iter().filter(|r| r.condition == name).map(|r| r.relative_ratio).collect();
        let ret: Vec<f64> = rows.iter().filter(|r| r.condition == name).map(|r| r.mean_return).collect();
        let (rm, rs) = mean_std(&ratio);
        let (tm, ts) = mean_std(&ret);
        println!("{name:<17} relative_ratio {rm:.4} ± {rs:.4}   true return {tm:.2} ± {ts:.2}");
    }
    let report = cfg.out.join("ablate_init.csv");
    write_csv(&report, &rows)?;
    let mut manifest = Manifest::new("ablate-init", cfg);
    manifest.add_input(cfg.demos_path()?)?;
    manifest.outputs = vec![report];
    manifest.write(&cfg.out.join("ablate_init.manifest.json"))?;
    Ok(rows)
}

// ---- quality-sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityRow {
    pub keep: String,
    pub fraction: f64,
    pub seed: u64,
    pub n_demos: usize,
    pub demo_mean_return: f64,
    pub gamma_hat: f64,
    pub relative_ratio: f64,
    pub mean_return: f64,
}

impl CsvRow for QualityRow {
    const HEADER: &'static [&'static str] =
        &["keep", "fraction", "seed", "n_demos", "demo_mean_return", "gamma_hat", "relative_ratio", "mean_return"];
}

pub fn cmd_quality_sweep(cfg: &RunConfig, keeps: &[Keep]) -> Result<Vec<QualityRow>> {
    let all = load_demos_for(cfg)?;
    let mut env = make_env(cfg.env)?;
    let mut rows = Vec::new();
    for &keep in keeps {
        for fraction in QUALITY_FRACTIONS {
            let demos = quality_subsets(&all, keep, fraction)?;
            let (pipeline, trained_featnet) = build_pipeline(cfg, &demos, true)?;
            let prepared = Prepared { demos, pipeline, trained_featnet };
            for &seed in &cfg.seeds {
                let out = train_one(cfg, &prepared, seed, |_| {})?;
                let r = evaluate(&mut &out.params, &prepared.demos, env.as_mut(), &prepared.pipeline, &eval_config(cfg, seed))?;
                check_report(&r)?;
                rows.push(QualityRow {
                    keep: keep_name(keep).to_string(),
                    fraction,
                    seed,
                    n_demos: prepared.demos.len(),
                    demo_mean_return: prepared.demos.mean_return(),
                    gamma_hat: r.gamma_hat,
                    relative_ratio: r.relative_ratio,
                    mean_return: r.mean_return,
                });
                println!(
                    "{:<5} {fraction:.1} seed {seed}: demo mean {:.2}, imitator {:.2}, relative_ratio {:.3}",
                    keep_name(keep),
                    prepared.demos.mean_return(),
                    r.mean_return,
                    r.relative_ratio
                );
            }
        }
    }
    let report = cfg.out.join("quality_sweep.csv");
    write_csv(&report, &rows)?;
    let mut manifest = Manifest::new("quality-sweep", cfg);
    manifest.add_input(cfg.demos_path()?)?;
    manifest.outputs = vec![report];
    manifest.write(&cfg.out.join("quality_sweep.manifest.json"))?;
    Ok(rows)
}

pub fn keep_name(keep: Keep) -> &'static str {
    match keep {
        Keep::Best => "best",
        Keep::Worst => "worst",
    }
}

