use minsubfi_core::demos::{default_padding, gen_demos};
use minsubfi_core::env::toy::TwoStateMdp;
use minsubfi_core::env::{make_env, EnvId};
use minsubfi_core::features::CostFeatures;
use minsubfi_core::learners::{
    offline_update, online_update, snippet_update, train, Baseline, Init, LearnerState, Optimizer, PreparedDemos,
    ReturnMode, TrainConfig, Variant, PRETRAIN_MARKER,
};
use minsubfi_core::nn::Architecture;
use minsubfi_core::policy::{rollout, PolicyParams};
use minsubfi_core::repr::{FeatureMap, FeaturePipeline};
use minsubfi_core::seed::rng_from;
use minsubfi_core::subdom::{subdom_vs_set, HingeSlopes, SubdomConfig};
use minsubfi_core::demos::DemoSet;
use minsubfi_core::Trajectory;
use rand::RngCore;

fn toy_traj(actions: &[usize], feature_scale: f64) -> Trajectory {
    let mut states = vec![0usize];
    states.extend_from_slice(actions);
    Trajectory {
        env_id: EnvId::Toy,
        task_id: 0,
        seed: 0,
        states: states.iter().map(|s| TwoStateMdp::observation(*s)).collect(),
        actions: actions.to_vec(),
        step_features: states
            .iter()
            .map(|s| {
                let f = TwoStateMdp::state_features(*s);
                CostFeatures::new(f.iter().map(|v| v * feature_scale).collect()).unwrap()
            })
            .collect(),
        logprobs: None,
        true_return: actions.iter().filter(|a| **a == 0).count() as f64,
    }
}

fn toy_params(seed: u64) -> PolicyParams {
    PolicyParams::random(Architecture::new(2, vec![3], 2).unwrap(), &mut rng_from(seed))
}

fn sgd(lr: f64) -> TrainConfig {
    TrainConfig { learning_rate: lr, optimizer: Optimizer::Sgd, baseline: Baseline::None, ..TrainConfig::default() }
}

fn frozen_state(params: PolicyParams, cfg: &TrainConfig) -> LearnerState {
    let mut s = LearnerState::new(params, HingeSlopes::uniform(2, 1.0, 0.0).unwrap(), cfg);
    s.alpha_frozen_updates = 1;
    s
}

#[test]
fn dominated_demos_only_shrink_parameters() {
    let demos = DemoSet::new(vec![toy_traj(&[0, 1, 1], 50.0), toy_traj(&[1, 0, 0], 60.0)]).unwrap();
    let prepared = PreparedDemos::new(demos, &FeaturePipeline::default()).unwrap();
    let cfg = TrainConfig { lambda_theta: 0.1, ..sgd(0.5) };
    let before = toy_params(1);
    let mut state = frozen_state(before.clone(), &cfg);
    let m = online_update(&mut state, &prepared, &mut TwoStateMdp::new(3), &FeaturePipeline::default(), &cfg, &mut rng_from(2))
        .unwrap();
    assert_eq!(m.mean_subdom, 0.0);
    for (a, b) in state.params.weights.iter().zip(&before.weights) {
        assert!((a - b * (1.0 - 0.5 * 0.1)).abs() < 1e-15);
    }
}

#[test]
fn single_step_update_is_reinforce() {
    let demos = DemoSet::new(vec![toy_traj(&[1], 1.0), toy_traj(&[0], 1.0)]).unwrap();
    let prepared = PreparedDemos::new(demos.clone(), &FeaturePipeline::default()).unwrap();
    let cfg = TrainConfig { rollouts_per_update: 1, ..sgd(0.3) };
    let before = toy_params(4);
    let mut env = TwoStateMdp::new(1);
    for seed in 0..10 {
        let mut rng = rng_from(seed);
        let episode_seed = rng.clone().next_u64();
        let traj = rollout(&before, &mut env, 0, episode_seed, None, 1).unwrap();
        let totals: Vec<CostFeatures> = demos.iter().map(|d| d.feature_total().unwrap()).collect();
        let slopes = HingeSlopes::uniform(2, 1.0, 0.0).unwrap();
        let v = subdom_vs_set(&traj.feature_total().unwrap(), &totals, &slopes, &SubdomConfig::default()).unwrap().0;
        let g = before.grad_log_prob(&traj.states[0], traj.actions[0]).unwrap();

        let mut state = frozen_state(before.clone(), &cfg);
        online_update(&mut state, &prepared, &mut env, &FeaturePipeline::default(), &cfg, &mut rng).unwrap();
        for i in 0..g.len() {
            let expected = before.weights[i] - 0.3 * v * g[i];
            assert!((state.params.weights[i] - expected).abs() < 1e-12);
        }
    }
}

fn toy_demo_set() -> DemoSet {
    DemoSet::new(vec![toy_traj(&[1, 1, 0], 1.0), toy_traj(&[0, 1, 1], 1.0), toy_traj(&[0, 0, 1], 1.0), toy_traj(&[1, 0, 1], 1.0)])
        .unwrap()
}

#[test]
fn offline_first_pass_uses_unit_ratios() {
    let demos = toy_demo_set();
    let prepared = PreparedDemos::new(demos.clone(), &FeaturePipeline::default()).unwrap();
    let cfg = sgd(1.0);
    let bc = toy_params(7);
    let totals: Vec<CostFeatures> = demos.iter().map(|d| d.feature_total().unwrap()).collect();
    let slopes = HingeSlopes::uniform(2, 1.0, 0.0).unwrap();
    let n = demos.len() as f64;
    let mut expected = bc.weights.clone();
    for (j, d) in demos.iter().enumerate() {
        let others: Vec<CostFeatures> = totals.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, t)| t.clone()).collect();
        let v = subdom_vs_set(&totals[j], &others, &slopes, &SubdomConfig::default()).unwrap().0;
        for (s, a) in d.states.iter().zip(&d.actions) {
            let g = bc.grad_log_prob(s, *a).unwrap();
            for (e, gi) in expected.iter_mut().zip(&g) {
                *e -= v * gi / n;
            }
        }
    }
    let mut state = frozen_state(bc.clone(), &cfg);
    offline_update(&mut state, &prepared, &bc, &cfg).unwrap();
    for (a, b) in state.params.weights.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }

    // a different reference policy reweights the same terms
    let mut other = frozen_state(bc.clone(), &cfg);
    offline_update(&mut other, &prepared, &toy_params(8), &cfg).unwrap();
    assert_ne!(other.params.weights, state.params.weights);
}

#[test]
fn return_modes_agree_on_single_step_episodes() {
    let demos = DemoSet::new(vec![toy_traj(&[1], 1.0), toy_traj(&[0], 1.0), toy_traj(&[1], 1.0)]).unwrap();
    let prepared = PreparedDemos::new(demos, &FeaturePipeline::default()).unwrap();
    let bc = toy_params(3);
    let mut results = Vec::new();
    for mode in [ReturnMode::SparseTerminal, ReturnMode::PerState] {
        let cfg = TrainConfig { return_mode: mode, ..sgd(0.1) };
        let mut state = frozen_state(bc.clone(), &cfg);
        offline_update(&mut state, &prepared, &bc, &cfg).unwrap();
        results.push(state.params.weights);
    }
    for (a, b) in results[0].iter().zip(&results[1]) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn cartpole_setup(n: usize) -> (DemoSet, FeaturePipeline) {
    let demos = gen_demos(EnvId::CartPole, n, 0.3, 11).unwrap();
    let fp = FeaturePipeline::new(FeatureMap::Handcrafted, default_padding(EnvId::CartPole, &demos).unwrap());
    (demos, fp)
}

#[test]
fn zero_updates_return_the_initialization() {
    let (demos, fp) = cartpole_setup(10);
    let cfg = TrainConfig { init: Init::Bc, updates: 0, ..TrainConfig::default() };
    let out = train(&demos, make_env(EnvId::CartPole).unwrap().as_mut(), &fp, &cfg, &mut || 0).unwrap();
    assert!(out.log.rows.is_empty());
    assert_eq!(Some(out.params), out.bc_params);
}

#[test]
fn offline_pretrain_row_comes_first() {
    let (demos, fp) = cartpole_setup(10);
    let cfg = TrainConfig { init: Init::OfflineMinsubfi, updates: 2, pretrain_updates: 3, ..TrainConfig::default() };
    let out = train(&demos, make_env(EnvId::CartPole).unwrap().as_mut(), &fp, &cfg, &mut || 0).unwrap();
    assert_eq!(out.log.rows.len(), 3);
    assert_eq!(out.log.rows[0].variant, PRETRAIN_MARKER);
    assert_eq!(out.log.rows[0].env_steps, 0);
    assert_eq!(out.log.update_rows().map(|r| r.update).collect::<Vec<_>>(), vec![1, 2]);
}

#[test]
fn offline_training_never_steps_the_environment() {
    let (demos, fp) = cartpole_setup(20);
    let cfg = TrainConfig { variant: Variant::Offline, init: Init::Bc, updates: 20, ..TrainConfig::default() };
    let mut env = make_env(EnvId::CartPole).unwrap();
    let out = train(&demos, env.as_mut(), &fp, &cfg, &mut || 0).unwrap();
    assert_eq!(env.env_steps(), 0);
    assert!(out.log.rows.iter().all(|r| r.env_steps == 0));
}

#[test]
fn training_is_deterministic() {
    let (demos, fp) = cartpole_setup(10);
    for variant in [Variant::Online, Variant::Snippet, Variant::SnippetOpt, Variant::Offline] {
        let cfg = TrainConfig { variant, updates: 5, seed: 3, ..TrainConfig::default() };
        let a = train(&demos, make_env(EnvId::CartPole).unwrap().as_mut(), &fp, &cfg, &mut || 0).unwrap();
        let b = train(&demos, make_env(EnvId::CartPole).unwrap().as_mut(), &fp, &cfg, &mut || 0).unwrap();
        assert_eq!(a.params, b.params, "{variant:?}");
        assert_eq!(a.log, b.log, "{variant:?}");
    }
}

#[test]
fn snippet_rollouts_stay_within_budget() {
    let (demos, fp) = cartpole_setup(10);
    let cfg = TrainConfig { variant: Variant::Snippet, ..TrainConfig::default() };
    let prepared = PreparedDemos::new(demos.clone(), &fp).unwrap();
    let mut env = make_env(EnvId::CartPole).unwrap();
    let horizon = ((cfg.snippet_fraction * env.max_steps() as f64).round() as usize).max(cfg.snippet_count);
    let params = PolicyParams::random(Architecture::new(4, vec![32], 2).unwrap(), &mut rng_from(0));
    let mut state = LearnerState::new(params, HingeSlopes::uniform(4, 1.0, 0.0).unwrap(), &cfg);
    let mut rng = rng_from(1);
    for _ in 0..5 {
        let before = env.env_steps();
        let m = snippet_update(&mut state, &prepared, env.as_mut(), &fp, &cfg, &mut rng).unwrap();
        assert!(env.env_steps() - before <= (horizon * cfg.rollouts_per_update) as u64);
        assert!(m.mean_subdom.is_finite());
    }
}

#[test]
fn online_cartpole_subdominance_decreases() {
    let (demos, fp) = cartpole_setup(50);
    let cfg = TrainConfig { updates: 200, init: Init::Bc, seed: 2, ..TrainConfig::default() };
    let out = train(&demos, make_env(EnvId::CartPole).unwrap().as_mut(), &fp, &cfg, &mut || 0).unwrap();
    let rows: Vec<f64> = out.log.update_rows().map(|r| r.mean_subdom).collect();
    let first: f64 = rows[..10].iter().sum::<f64>() / 10.0;
    let last: f64 = rows[rows.len() - 10..].iter().sum::<f64>() / 10.0;
    assert!(last < first, "first window {first}, last window {last}");
}
