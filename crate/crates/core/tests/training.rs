//! Objective, optimizer and epoch loop.

mod common;

use common::{random_matrix, random_windows, small_config};
use posecast_core::data::{WindowConfig, WindowSample};
use posecast_core::graph::{ParamSet, Parameter};
use posecast_core::model::{init_params, ModelKind};
use posecast_core::tensor::Tensor;
use posecast_core::train::{
    adam_step, evaluate_loss, fit, gate_csv, mse_loss, read_metrics, write_metrics, AdamConfig, AdamState,
    TrainConfig,
};
use posecast_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mse_matches_two_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let t = rng.gen_range(1..20);
        let scale = 10f64.powi(rng.gen_range(-3..3));
        let a = random_matrix(&mut rng, t, 66, scale);
        let b = random_matrix(&mut rng, t, 66, scale);
        let mut total = 0.0;
        for r in 0..t {
            let mut frame = 0.0;
            for c in 0..66 {
                let d = a.row(r)[c] - b.row(r)[c];
                frame += d * d;
            }
            total += frame;
        }
        let oracle = total / t as f64;
        let got = mse_loss(&a, &b).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1.0), "{got} vs {oracle}");
    }
}

#[test]
fn two_adam_steps_by_hand() {
    let mut p = vec![Parameter::new("w", Tensor::scalar(1.0))];
    let cfg = AdamConfig {
        lr: 0.1,
        ..AdamConfig::default()
    };
    let mut s = AdamState::new(&p, cfg);
    let g = 0.5;
    // t=1: m = 0.05, v = 0.00025, so m̂ = 0.5 and v̂ = 0.25.
    // t=2: m = 0.095, v = 0.00049975; bias correction again gives 0.5, 0.25.
    let expected_m = [0.05, 0.095];
    let expected_v = [0.00025, 0.00049975];
    let mut theta = 1.0;
    for step in 0..2 {
        p[0].grad.values_mut()[0] = g;
        adam_step(&mut p, &mut s).unwrap();
        theta -= 0.1 * 0.5 / (0.5 + 1e-8);
        assert!((s.m[0][0] - expected_m[step]).abs() < 1e-15);
        assert!((s.v[0][0] - expected_v[step]).abs() < 1e-15);
        assert!((p[0].value.values()[0] - theta).abs() < 1e-15);
        assert_eq!(p[0].grad.values()[0], 0.0, "grads cleared");
    }
    assert_eq!(s.t, 2);
    assert!((theta - (1.0 - 0.2 / 1.00000002)).abs() < 1e-15);
}

#[test]
fn nan_gradient_names_the_parameter() {
    let mut p = init_params(ModelKind::Fusion, small_config(4), 0).unwrap();
    let mut s = AdamState::new(&p, AdamConfig::default());
    let before = p.clone();
    p.layers[1].w_h.grad.values_mut()[3] = f64::NAN;
    match adam_step(&mut p, &mut s) {
        Err(Error::NonFiniteGradient(name)) => assert_eq!(name, "layer1.w_h"),
        other => panic!("expected a non-finite gradient error, got {other:?}"),
    }
    assert_eq!(p.layers[0].w_x.value, before.layers[0].w_x.value);
}

fn tiny_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 4,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn zero_learning_rate_keeps_the_initial_model() {
    let w = WindowConfig::default();
    let train = random_windows(10, 1, w);
    let val = random_windows(4, 2, w);
    for kind in ModelKind::ALL {
        let cfg = TrainConfig {
            epochs: 1,
            lr: 0.0,
            ..tiny_cfg(3)
        };
        let r = fit(kind, small_config(6), &train, &val, &[], &cfg).unwrap();
        let init = init_params(kind, small_config(6), 3).unwrap();
        assert_eq!(r.params, init);
        let log = &r.logs[0];
        assert_eq!(log.val_loss, evaluate_loss(&init, &val).unwrap());
        assert_eq!(log.test_loss, None);
        let init_train = evaluate_loss(&init, &train).unwrap().unwrap();
        assert!((log.train_loss - init_train).abs() < 1e-12);
    }
}

#[test]
fn fit_is_deterministic_and_logs_every_epoch() {
    let w = WindowConfig::default();
    let train = random_windows(12, 4, w);
    let val = random_windows(3, 5, w);
    let test = random_windows(3, 6, w);
    let snapshot = train.clone();
    for kind in ModelKind::ALL {
        let a = fit(kind, small_config(6), &train, &val, &test, &tiny_cfg(7)).unwrap();
        let b = fit(kind, small_config(6), &train, &val, &test, &tiny_cfg(7)).unwrap();
        let bits = |l: &[posecast_core::train::EpochLog]| -> Vec<u64> {
            l.iter()
                .flat_map(|e| [Some(e.train_loss), e.val_loss, e.test_loss, e.lambda_emo])
                .map(|v| v.map_or(0, f64::to_bits))
                .collect()
        };
        assert_eq!(bits(&a.logs), bits(&b.logs));
        assert_eq!(a.params, b.params);
        assert_eq!(a.logs.len(), 3);
        assert!(a.logs.iter().enumerate().all(|(i, l)| l.epoch == i));
        assert_eq!(a.logs.iter().all(|l| l.lambda_emo.is_some()), kind.uses_emotion());
        assert!(a.logs.iter().all(|l| l.train_loss.is_finite() && l.train_loss >= 0.0));
        assert_eq!(a.logs.last().unwrap().lambda_emo, a.params.lambda());
        // Logged test loss is a pure evaluation of the final parameters.
        assert_eq!(a.logs.last().unwrap().test_loss, evaluate_loss(&a.params, &test).unwrap());
        assert!(a.best_val_params.is_some());
    }
    assert_eq!(train, snapshot);
}

#[test]
fn fit_rejects_empty_training_data() {
    assert!(fit(ModelKind::Baseline, small_config(4), &[], &[], &[], &tiny_cfg(0)).is_err());
    let train = random_windows(2, 0, WindowConfig::default());
    let bad = TrainConfig {
        batch_size: 0,
        ..tiny_cfg(0)
    };
    assert!(fit(ModelKind::Baseline, small_config(4), &train, &[], &[], &bad).is_err());
}

#[test]
fn tiny_learning_rate_does_not_increase_loss() {
    let w = WindowConfig::default();
    let mut ok = 0;
    for seed in 0..5 {
        let train: Vec<WindowSample> = random_windows(10, 100 + seed, w);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 10,
            lr: 1e-5,
            seed,
            ..TrainConfig::default()
        };
        let before = evaluate_loss(&init_params(ModelKind::Fusion, small_config(16), seed).unwrap(), &train)
            .unwrap()
            .unwrap();
        let r = fit(ModelKind::Fusion, small_config(16), &train, &[], &[], &cfg).unwrap();
        let after = evaluate_loss(&r.params, &train).unwrap().unwrap();
        if after <= before {
            ok += 1;
        }
    }
    assert!(ok >= 4, "loss decreased in only {ok}/5 seeds");
}

#[test]
fn metrics_log_round_trips() {
    let w = WindowConfig::default();
    let train = random_windows(6, 8, w);
    let r = fit(ModelKind::World, small_config(4), &train, &train, &[], &tiny_cfg(9)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("metrics.jsonl");
    write_metrics(&path, &r.logs).unwrap();
    assert_eq!(read_metrics(&path).unwrap(), r.logs);
    let csv = gate_csv(&r.logs);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "epoch,lambda");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2,"));
}

#[test]
fn optimizer_state_tracks_parameter_count() {
    let p = init_params(ModelKind::Fusion, small_config(4), 0).unwrap();
    let s = AdamState::new(&p, AdamConfig::default());
    assert_eq!(s.m.len(), p.params().len());
    assert_eq!(s.m.iter().map(Vec::len).sum::<usize>(), p.num_scalars());
}
