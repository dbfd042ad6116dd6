//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use minsubfi_core::alpha::{alpha_analytic, slope_objective, AlphaUpdateConfig};
use minsubfi_core::decompose::decompose;
use minsubfi_core::demos::{default_padding, gen_demos, DemoSet};
use minsubfi_core::env::toy::TwoStateMdp;
use minsubfi_core::env::{make_env, EnvId};
use minsubfi_core::eval::{bound_gamma, evaluate, EvalConfig};
use minsubfi_core::learners::{online_update, train, Baseline, Init, LearnerState, Optimizer, PreparedDemos, TrainConfig, Variant};
use minsubfi_core::nn::Architecture;
use minsubfi_core::policy::{rollout, PolicyParams};
use minsubfi_core::repr::{
    build_preferences, logistic_pref_loss, pref_loss, train_features, FeatureMap, FeatureNetParams, FeaturePipeline,
    FeatureTrainConfig,
};
use minsubfi_core::seed::rng_from;
use minsubfi_core::snippet::snippet_subdom;
use minsubfi_core::subdom::{check_satisfices, subdom_pair, subdom_vs_set};
use minsubfi_core::{Aggregation, CostFeatures, HingeSlopes, SubdomConfig, SubdomMode, Trajectory};
use rand::Rng;

type Rng8 = minsubfi_core::seed::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cf(v: Vec<f64>) -> CostFeatures {
    CostFeatures::new(v).unwrap()
}

fn random_features(rng: &mut Rng8, k: usize, lo: f64, hi: f64) -> CostFeatures {
    cf((0..k).map(|_| rng.random_range(lo..hi)).collect())
}

fn random_slopes(rng: &mut Rng8, k: usize) -> HingeSlopes {
    HingeSlopes::new((0..k).map(|_| rng.random_range(0.05..3.0)).collect(), 0.0).unwrap()
}

fn all_configs() -> [SubdomConfig; 4] {
    [
        SubdomConfig::new(SubdomMode::Absolute, Aggregation::Sum),
        SubdomConfig::new(SubdomMode::Relative, Aggregation::Sum),
        SubdomConfig::new(SubdomMode::Absolute, Aggregation::Max),
        SubdomConfig::new(SubdomMode::Relative, Aggregation::Max),
    ]
}

// 1: per-state contributions sum to the trajectory subdominance.
fn decomposition_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(1..6);
        let t = rng.random_range(1..40);
        let n = rng.random_range(1..10);
        let steps: Vec<CostFeatures> = (0..t).map(|_| random_features(&mut rng, k, 0.0, 2.0)).collect();
        let demos: Vec<CostFeatures> = (0..n).map(|_| random_features(&mut rng, k, 0.5, 2.0 * t as f64)).collect();
        let slopes = random_slopes(&mut rng, k);
        let total = CostFeatures::total(&steps).unwrap();
        for cfg in all_configs() {
            let direct = subdom_vs_set(&total, &demos, &slopes, &cfg).unwrap().0;
            let sum: f64 = decompose(&steps, &demos, &slopes, cfg).unwrap().iter().sum();
            let rel = (sum - direct).abs() / direct.abs().max(1e-300);
            worst = worst.max(if direct == 0.0 { sum.abs() } else { rel });
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("1000 instances, absolute and relative with sum and max, worst relative error {worst:.2e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

// 2: exact toy-MDP gradient vs finite differences and vs the learner's estimator.
const TOY_H: usize = 3;

fn toy_traj(actions: &[usize]) -> Trajectory {
    let mut states = vec![0usize];
    states.extend_from_slice(actions);
    Trajectory {
        env_id: EnvId::Toy,
        task_id: 0,
        seed: 0,
        states: states.iter().map(|s| TwoStateMdp::observation(*s)).collect(),
        actions: actions.to_vec(),
        step_features: states.iter().map(|s| TwoStateMdp::state_features(*s)).collect(),
        logprobs: None,
        true_return: 0.0,
    }
}

fn toy_slopes() -> HingeSlopes {
    HingeSlopes::new(vec![0.8, 1.4], 0.0).unwrap()
}

fn toy_exact(params: &PolicyParams, demos: &[CostFeatures]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; params.weights.len()];
    for code in 0..(1usize << TOY_H) {
        let actions: Vec<usize> = (0..TOY_H).map(|t| (code >> t) & 1).collect();
        let traj = toy_traj(&actions);
        let mut p = 1.0;
        let mut score = vec![0.0; grad.len()];
        for (s, a) in traj.states.iter().zip(&actions) {
            p *= params.action_distribution(s).unwrap()[*a];
            params.accumulate_grad_log_prob(s, *a, 1.0, &mut score).unwrap();
        }
        let v = subdom_vs_set(&traj.feature_total().unwrap(), demos, &toy_slopes(), &SubdomConfig::default()).unwrap().0;
        value += p * v;
        for (g, sc) in grad.iter_mut().zip(&score) {
            *g += p * v * sc;
        }
    }
    (value, grad)
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let params = PolicyParams::random(Architecture::new(2, vec![3], 2).unwrap(), &mut rng_from(5));
    let demo_set = DemoSet::new(vec![toy_traj(&[1, 0, 1]), toy_traj(&[0, 0, 1]), toy_traj(&[1, 1, 0])]).unwrap();
    let demos: Vec<CostFeatures> = demo_set.iter().map(|d| d.feature_total().unwrap()).collect();
    let (_, exact) = toy_exact(&params, &demos);

    let eps = 1e-5;
    let mut fd_worst: f64 = 0.0;
    for i in 0..params.weights.len() {
        let (mut plus, mut minus) = (params.clone(), params.clone());
        plus.weights[i] += eps;
        minus.weights[i] -= eps;
        let fd = (toy_exact(&plus, &demos).0 - toy_exact(&minus, &demos).0) / (2.0 * eps);
        fd_worst = fd_worst.max((fd - exact[i]).abs() / exact[i].abs().max(1e-3));
    }

    // 100 batches of 1000 rollouts; a unit-rate SGD step exposes each batch's estimate
    let prepared = PreparedDemos::new(demo_set, &FeaturePipeline::default()).unwrap();
    let cfg = TrainConfig {
        rollouts_per_update: 1000,
        learning_rate: 1.0,
        optimizer: Optimizer::Sgd,
        baseline: Baseline::None,
        ..TrainConfig::default()
    };
    let mut env = TwoStateMdp::new(TOY_H);
    let mut rng = rng_from(77);
    let batches = 100;
    let mut estimates = Vec::with_capacity(batches);
    for _ in 0..batches {
        let mut state = LearnerState::new(params.clone(), toy_slopes(), &cfg);
        state.alpha_frozen_updates = 1;
        online_update(&mut state, &prepared, &mut env, &FeaturePipeline::default(), &cfg, &mut rng).unwrap();
        estimates.push(state.params.weights.iter().zip(&params.weights).map(|(a, b)| b - a).collect::<Vec<f64>>());
    }
    let nb = batches as f64;
    let mut worst_z: f64 = 0.0;
    for i in 0..exact.len() {
        let mean = estimates.iter().map(|e| e[i]).sum::<f64>() / nb;
        let var = estimates.iter().map(|e| (e[i] - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        let se = (var / nb).sqrt();
        worst_z = worst_z.max((mean - exact[i]).abs() / se.max(1e-300));
    }
    let elapsed = start.elapsed();
    outcome(
        fd_worst <= 1e-4 && worst_z <= 3.0 && elapsed < Duration::from_secs(60),
        format!(
            "FD worst relative error {fd_worst:.2e}; REINFORCE over 1e5 rollouts worst |z| {worst_z:.2}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 3: analytic slopes vs a 1e5-point log grid.
fn alpha_vs_grid() -> Outcome {
    let start = Instant::now();
    let bounds = AlphaUpdateConfig::default();
    let mut rng = rng_from(303);
    let grid: Vec<f64> = (0..100_000)
        .map(|i| {
            let u = i as f64 / 99_999.0;
            (bounds.alpha_min.ln() + u * (bounds.alpha_max.ln() - bounds.alpha_min.ln())).exp()
        })
        .collect();
    let (mut lowest, mut highest) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..100 {
        let n = rng.random_range(1..30);
        let imit = cf(vec![rng.random_range(0.0..10.0)]);
        let demos: Vec<CostFeatures> = (0..n).map(|_| cf(vec![rng.random_range(0.0..10.0)])).collect();
        let diffs: Vec<f64> = demos.iter().map(|d| imit[0] - d[0]).collect();
        let lambda = bounds.lambda;
        let a = alpha_analytic(&imit, &demos, lambda, 0, SubdomMode::Absolute, &bounds).unwrap();
        let analytic = slope_objective(&diffs, lambda, a);
        let best = grid.iter().map(|g| slope_objective(&diffs, lambda, *g)).fold(f64::INFINITY, f64::min);
        // negative when the analytic slope beats every grid point
        let gap = (analytic - best) / best.abs().max(1e-12);
        lowest = lowest.min(gap);
        highest = highest.max(gap);
    }
    let elapsed = start.elapsed();
    outcome(
        lowest.abs().max(highest.abs()) <= 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "100 instances, signed relative objective gap (analytic - grid) in [{lowest:.2e}, {highest:.2e}], {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 4: zero subdominance is achievable exactly under strict Pareto dominance.
fn surrogate_both_directions() -> Outcome {
    let mut rng = rng_from(404);
    let cfg = SubdomConfig::default();
    let mut failures = 0;
    for i in 0..1000 {
        let k = rng.random_range(1..5);
        // integer grids produce ties, continuous draws produce near misses
        let draw = |rng: &mut Rng8| if i % 2 == 0 { rng.random_range(0..4) as f64 } else { rng.random_range(0.0..3.0) };
        let f = cf((0..k).map(|_| draw(&mut rng)).collect());
        let g = cf((0..k).map(|_| draw(&mut rng)).collect());
        let dominates = f.iter().zip(g.iter()).all(|(a, b)| a < b);
        let achievable = if dominates {
            // any slope of at least 1/(g - f) closes the margin; twice that avoids rounding at the kink
            let slopes = HingeSlopes::new(f.iter().zip(g.iter()).map(|(a, b)| 2.0 / (b - a)).collect(), 0.0).unwrap();
            subdom_pair(&f, &g, &slopes, &cfg).unwrap() == 0.0
        } else {
            // some feature is no better, so its hinge stays at least 1 for every slope
            [1e-3, 1e-1, 1.0, 10.0, 1e3].iter().any(|a| {
                let slopes = HingeSlopes::uniform(k, *a, 0.0).unwrap();
                subdom_pair(&f, &g, &slopes, &cfg).unwrap() < 1.0
            })
        };
        if achievable != dominates || check_satisfices(&f, &g) != dominates {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("1000 pairs, {failures} failures"))
}

// 5: the bound equals one minus the support-vector fraction.
fn bound_formula() -> Outcome {
    let cfg = SubdomConfig::default();
    let f = cf(vec![0.0, 0.0]);
    let s = HingeSlopes::uniform(2, 1.0, 0.0).unwrap();
    // demo j supports feature k when its value is at most 1
    let mut seven = vec![cf(vec![5.0, 5.0]); 10];
    seven[0] = cf(vec![0.5, 5.0]);
    seven[4] = cf(vec![5.0, 1.0]);
    seven[9] = cf(vec![0.2, 0.2]);
    // (demos, hand-counted support vectors, nominal bound)
    let cases = [
        (seven, 3, 0.7),
        (vec![cf(vec![5.0, 5.0]); 4], 0, 1.0),
        (vec![cf(vec![0.5, 5.0]), cf(vec![5.0, 0.9]), cf(vec![1.0, 1.0])], 3, 0.0),
    ];
    let mut ok = true;
    let mut found = Vec::new();
    for (demos, count, nominal) in &cases {
        let b = bound_gamma(&f, demos, &s, &cfg).unwrap();
        found.push(b);
        ok &= b == 1.0 - *count as f64 / demos.len() as f64 && (b - nominal).abs() <= 1e-15;
    }
    let mut rng = rng_from(505);
    for _ in 0..200 {
        let n = rng.random_range(1..15);
        let demos: Vec<CostFeatures> = (0..n).map(|_| random_features(&mut rng, 3, 0.0, 4.0)).collect();
        let imit = random_features(&mut rng, 3, 0.0, 4.0);
        let slopes = random_slopes(&mut rng, 3);
        let sv = demos
            .iter()
            .filter(|d| (0..3).any(|k| slopes.alpha()[k] * (imit[k] - d[k]) + 1.0 >= 0.0))
            .count();
        ok &= bound_gamma(&imit, &demos, &slopes, &cfg).unwrap() == 1.0 - sv as f64 / n as f64;
    }
    outcome(ok, format!("hand-built cases {found:?}, 200 counted instances"))
}

// 6 and 10: cartpole experiments.
struct CartpoleRun {
    ratio: f64,
    mean_return: f64,
    demo_mean: f64,
    env_steps: u64,
    seconds: f64,
}

fn cartpole_setup(seed: u64) -> (DemoSet, FeaturePipeline) {
    let demos = gen_demos(EnvId::CartPole, 50, 0.3, seed).unwrap();
    let fp = FeaturePipeline::new(FeatureMap::Handcrafted, default_padding(EnvId::CartPole, &demos).unwrap());
    (demos, fp)
}

fn cartpole_run(seed: u64, init: Init) -> CartpoleRun {
    let start = Instant::now();
    let (demos, fp) = cartpole_setup(seed);
    let cfg = TrainConfig { updates: 100, init, seed, ..TrainConfig::default() };
    let mut env = make_env(EnvId::CartPole).unwrap();
    let out = train(&demos, env.as_mut(), &fp, &cfg, &mut || 0).unwrap();
    let env_steps = out.log.rows.last().map_or(0, |r| r.env_steps);
    let ecfg = EvalConfig { n_rollouts: 500, seed: seed + 1000, ..Default::default() };
    let r = evaluate(&mut &out.params, &demos, env.as_mut(), &fp, &ecfg).unwrap();
    CartpoleRun {
        ratio: r.relative_ratio,
        mean_return: r.mean_return,
        demo_mean: demos.mean_return(),
        env_steps,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn cartpole_end_to_end(runs: &[CartpoleRun]) -> Outcome {
    let ok = runs.iter().all(|r| r.ratio > 1.0 && r.mean_return >= r.demo_mean && r.env_steps <= 200_000 && r.seconds <= 600.0);
    let detail = runs
        .iter()
        .enumerate()
        .map(|(s, r)| {
            format!(
                "seed {s}: ratio {:.3}, return {:.1} vs demos {:.1}, {} steps, {:.1}s",
                r.ratio, r.mean_return, r.demo_mean, r.env_steps, r.seconds
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, detail)
}

// 7: offline training needs no environment and improves on behavior cloning.
fn rollout_subdom(params: &PolicyParams, fp: &FeaturePipeline, demos: &[CostFeatures], seed: u64) -> f64 {
    let mut env = make_env(EnvId::CartPole).unwrap();
    let slopes = HingeSlopes::uniform(demos[0].dim(), TrainConfig::default().initial_alpha, 0.0).unwrap();
    let n = 200;
    (0..n)
        .map(|i| {
            let t = rollout(params, env.as_mut(), 0, seed * 1_000_003 + i, None, 200).unwrap();
            subdom_vs_set(&fp.total(&t).unwrap(), demos, &slopes, &SubdomConfig::default()).unwrap().0
        })
        .sum::<f64>()
        / n as f64
}

fn offline_variant() -> Outcome {
    let mut steps_zero = true;
    let (mut bc_sum, mut off_sum) = (0.0, 0.0);
    let mut parts = Vec::new();
    for seed in 0..3u64 {
        let (demos, fp) = cartpole_setup(seed);
        let totals: Vec<CostFeatures> = demos.iter().map(|d| fp.total(d).unwrap()).collect();
        let cfg = TrainConfig { variant: Variant::Offline, init: Init::Bc, updates: 100, seed, ..TrainConfig::default() };
        let mut env = make_env(EnvId::CartPole).unwrap();
        let out = train(&demos, env.as_mut(), &fp, &cfg, &mut || 0).unwrap();
        steps_zero &= env.env_steps() == 0 && out.log.rows.iter().all(|r| r.env_steps == 0);
        let bc = rollout_subdom(out.bc_params.as_ref().unwrap(), &fp, &totals, seed);
        let off = rollout_subdom(&out.params, &fp, &totals, seed);
        parts.push(format!("seed {seed}: {bc:.1} -> {off:.1}"));
        bc_sum += bc;
        off_sum += off;
    }
    let improvement = 1.0 - off_sum / bc_sum;
    outcome(
        steps_zero && improvement >= 0.10,
        format!(
            "env steps all zero: {steps_zero}; mean rollout subdominance {} (improvement {:.1}%)",
            parts.join(", "),
            100.0 * improvement
        ),
    )
}

// 8: max-min snippet selection vs exhaustive pair enumeration.
fn snippet_enumeration() -> Outcome {
    let mut rng = rng_from(808);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..2000 {
        let n = rng.random_range(1..=4);
        let width = rng.random_range(1..=12 / n);
        let t = n * width;
        let k = rng.random_range(1..4);
        let imit: Vec<CostFeatures> = (0..t).map(|_| random_features(&mut rng, k, 0.0, 2.0)).collect();
        let demo: Vec<CostFeatures> = (0..t).map(|_| random_features(&mut rng, k, 0.0, 2.0)).collect();
        let slopes = random_slopes(&mut rng, k);
        let cfg = all_configs()[rng.random_range(0..4)];
        if cfg.mode == SubdomMode::Relative && demo[..width].iter().any(|f| f.iter().any(|v| *v == 0.0)) {
            continue;
        }
        let prefix = |s: &[CostFeatures], i: usize| CostFeatures::total(&s[..(i + 1) * width]).unwrap();
        // max over demo snippets of the min over imitator snippets, first index on ties
        let mut best: Option<(f64, usize, usize)> = None;
        for d in 0..n {
            let mut resp: Option<(f64, usize)> = None;
            for i in 0..n {
                let v = subdom_pair(&prefix(&imit, i), &prefix(&demo, d), &slopes, &cfg).unwrap();
                if resp.is_none_or(|(r, _)| v < r) {
                    resp = Some((v, i));
                }
            }
            let (v, i) = resp.unwrap();
            if best.is_none_or(|(b, _, _)| v > b) {
                best = Some((v, i, d));
            }
        }
        let (v, i, d) = best.unwrap();
        let c = snippet_subdom(&imit, &demo, &slopes, n, &cfg).unwrap();
        checked += 1;
        if c.value != v || c.imitator_snippet != i || c.demo_snippet != d {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0 && checked >= 1000, format!("{checked} instances, {mismatches} mismatches"))
}

// 9: preference loss symmetry and separable training.
fn preference_loss() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let mut sym_worst: f64 = 0.0;
    for c in [0.0, 0.3, 1.0, 7.5, 123.0] {
        sym_worst = sym_worst.max((logistic_pref_loss(c, c) - ln2).abs());
    }
    let mut rng = rng_from(909);
    let make = |rng: &mut Rng8, level: f64, ret: f64, seed: u64| {
        let states: Vec<Vec<f64>> =
            (0..6).map(|_| vec![level + rng.random_range(-0.1..0.1), rng.random_range(-1.0..1.0)]).collect();
        Trajectory {
            env_id: EnvId::CartPole,
            task_id: 0,
            seed,
            actions: vec![0; 5],
            step_features: vec![CostFeatures::zeros(1); 6],
            states,
            logprobs: None,
            true_return: ret,
        }
    };
    let twin = make(&mut rng, 0.5, 0.0, 0);
    let mut twin_b = twin.clone();
    twin_b.true_return = 1.0;
    let net0 = FeatureNetParams::random(FeatureNetParams::default_architecture(2), 1);
    let twins = [twin, twin_b];
    let pair = build_preferences(&twins, 0.5).unwrap()[0];
    sym_worst = sym_worst.max((pref_loss(&net0, pair, &twins).unwrap().0 - ln2).abs());

    // the first state coordinate separates acceptable from unacceptable demos
    let demos: Vec<Trajectory> = (0..16)
        .map(|i| {
            let good = i % 2 == 0;
            let level = if good { rng.random_range(0.0..0.4) } else { rng.random_range(1.2..2.0) };
            make(&mut rng, level, if good { 10.0 } else { 0.0 }, i)
        })
        .collect();
    let prefs = build_preferences(&demos, 5.0).unwrap();
    let (_, loss) = train_features(
        &demos,
        &prefs,
        &FeatureNetParams::default_architecture(2),
        &FeatureTrainConfig { epochs: 500, seed: 3, ..Default::default() },
    )
    .unwrap();
    outcome(
        sym_worst <= 1e-12 && loss < 0.1,
        format!("symmetry error {sym_worst:.1e}; separable mean loss after 500 epochs {loss:.4}"),
    )
}

fn initialization_ablation(offline: &[CartpoleRun], bc: &[CartpoleRun]) -> Outcome {
    let mean = |r: &[CartpoleRun]| r.iter().map(|x| x.ratio).sum::<f64>() / r.len() as f64;
    let (m_off, m_bc) = (mean(offline), mean(bc));
    outcome(
        m_off >= m_bc,
        format!(
            "5 seeds, mean relative_ratio offline-init {m_off:.4} vs BC-init {m_bc:.4} (per seed {:?} vs {:?})",
            offline.iter().map(|r| (r.ratio * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            bc.iter().map(|r| (r.ratio * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "decomposition identity", decomposition_identity()));
    results.push((2, "gradient oracle", gradient_oracle()));
    results.push((3, "analytic slopes vs grid", alpha_vs_grid()));
    results.push((4, "dominance surrogate", surrogate_both_directions()));
    results.push((5, "support-vector bound formula", bound_formula()));
    let offline_init: Vec<CartpoleRun> = (0..5).map(|s| cartpole_run(s, Init::OfflineMinsubfi)).collect();
    results.push((6, "cartpole end-to-end", cartpole_end_to_end(&offline_init[..3])));
    results.push((7, "offline variant", offline_variant()));
    results.push((8, "snippet enumeration", snippet_enumeration()));
    results.push((9, "preference loss", preference_loss()));
    let bc_init: Vec<CartpoleRun> = (0..5).map(|s| cartpole_run(s, Init::Bc)).collect();
    results.push((10, "initialization ablation", initialization_ablation(&offline_init, &bc_init)));

    let mut failed = 0;
    for (id, name, o) in &results {
        println!("criterion {id:>2} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
