//! MPJPE, counterfactual sensitivity and gate reports.

mod common;

use common::{random_matrix, random_windows, small_model};
use posecast_core::data::{NormStats, WindowConfig};
use posecast_core::eval::{
    counterfactual_delta, evaluate, gate_report, mpjpe, sensitivity_csv, sensitivity_sweep, window_seed,
    PerturbationConfig,
};
use posecast_core::model::ModelKind;
use posecast_core::tensor::Tensor;
use posecast_core::train::EpochLog;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stats(rng: &mut ChaCha8Rng) -> NormStats {
    let mut s = NormStats::identity();
    s.pose_mean.iter_mut().for_each(|m| *m = rng.gen_range(-2.0..2.0));
    s.pose_std.iter_mut().for_each(|v| *v = rng.gen_range(0.01..3.0));
    s
}

#[test]
fn mpjpe_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let t = rng.gen_range(1..16);
        let stats = random_stats(&mut rng);
        let a = random_matrix(&mut rng, t, 66, 2.0);
        let b = random_matrix(&mut rng, t, 66, 2.0);
        let mut total = 0.0;
        for f in 0..t {
            for j in 0..33 {
                let raw = |m: &Tensor, k: usize| m.row(f)[k] * stats.pose_std[k] + stats.pose_mean[k];
                let dx = raw(&a, 2 * j) - raw(&b, 2 * j);
                let dy = raw(&a, 2 * j + 1) - raw(&b, 2 * j + 1);
                total += (dx * dx + dy * dy).sqrt();
            }
        }
        let oracle = total / (t * 33) as f64;
        let got = mpjpe(&a, &b, &stats).unwrap();
        assert!((got - oracle).abs() <= 1e-12, "{got} vs {oracle}");
        assert_eq!(got, mpjpe(&b, &a, &stats).unwrap());
    }
}

#[test]
fn mpjpe_shape_mismatch() {
    let s = NormStats::identity();
    assert!(mpjpe(&Tensor::zeros(&[15, 66]), &Tensor::zeros(&[14, 66]), &s).is_err());
}

#[test]
fn evaluate_on_empty_split() {
    let p = small_model(ModelKind::Baseline, 4, 0);
    let e = evaluate(&p, &[], &NormStats::identity()).unwrap();
    assert_eq!((e.windows, e.loss, e.mpjpe), (0, None, None));
}

#[test]
fn zero_noise_gives_zero_delta() {
    let w = &random_windows(1, 3, WindowConfig::default())[0];
    for kind in [ModelKind::Fusion, ModelKind::World] {
        let p = small_model(kind, 8, 4);
        let cfg = PerturbationConfig {
            sigma: 0.0,
            trials: 5,
            seed: 1,
        };
        let r = counterfactual_delta(&p, w, &cfg).unwrap();
        assert_eq!(r.per_trial, vec![0.0; 5]);
        assert_eq!(r.mean_delta, 0.0);
    }
}

#[test]
fn closed_gate_gives_zero_delta_for_any_sigma() {
    let w = &random_windows(1, 5, WindowConfig::default())[0];
    for kind in [ModelKind::Fusion, ModelKind::World] {
        let mut p = small_model(kind, 8, 6);
        p.set_lambda(0.0).unwrap();
        for sigma in [0.01, 1.0, 1e3] {
            let cfg = PerturbationConfig { sigma, trials: 4, seed: 2 };
            let r = counterfactual_delta(&p, w, &cfg).unwrap();
            assert!(r.per_trial.iter().all(|&d| d == 0.0), "{kind} sigma {sigma}");
        }
    }
}

#[test]
fn baseline_cannot_be_perturbed() {
    let w = &random_windows(1, 7, WindowConfig::default())[0];
    let p = small_model(ModelKind::Baseline, 8, 6);
    assert!(counterfactual_delta(&p, w, &PerturbationConfig::default()).is_err());
}

#[test]
fn open_gate_reacts_to_noise() {
    let w = &random_windows(1, 8, WindowConfig::default())[0];
    let p = small_model(ModelKind::Fusion, 8, 9);
    let r = counterfactual_delta(&p, w, &PerturbationConfig::default()).unwrap();
    assert_eq!(r.per_trial.len(), 20);
    assert!(r.per_trial.iter().all(|&d| d > 0.0));
    assert!(r.std_delta >= 0.0);
}

#[test]
fn single_window_sweep_equals_direct_call() {
    let windows = random_windows(1, 10, WindowConfig::default());
    let p = small_model(ModelKind::World, 8, 11);
    let cfg = PerturbationConfig {
        sigma: 0.3,
        trials: 6,
        seed: 77,
    };
    let sweep = sensitivity_sweep(&p, &windows, &[0.3], &cfg).unwrap();
    let direct = counterfactual_delta(&p, &windows[0], &cfg).unwrap();
    assert_eq!(sweep[0], direct);
    assert_eq!(window_seed(77, 0), 77);
    assert_ne!(window_seed(77, 1), 77);
}

#[test]
fn sweep_is_reproducible_and_grows_with_sigma() {
    let windows = random_windows(6, 12, WindowConfig::default());
    let p = small_model(ModelKind::Fusion, 8, 13);
    let cfg = PerturbationConfig {
        sigma: 0.1,
        trials: 5,
        seed: 3,
    };
    let a = sensitivity_sweep(&p, &windows, &[0.01, 0.1], &cfg).unwrap();
    let b = sensitivity_sweep(&p, &windows, &[0.01, 0.1], &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a[1].mean_delta > a[0].mean_delta);
    let csv = sensitivity_csv(&a);
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("sigma,mean_delta,std_delta\n0.01,"));
}

#[test]
fn invalid_perturbation_configs() {
    let w = &random_windows(1, 14, WindowConfig::default())[0];
    let p = small_model(ModelKind::Fusion, 4, 1);
    for cfg in [
        PerturbationConfig { sigma: -0.1, trials: 1, seed: 0 },
        PerturbationConfig { sigma: 0.1, trials: 0, seed: 0 },
        PerturbationConfig { sigma: f64::NAN, trials: 1, seed: 0 },
    ] {
        assert!(counterfactual_delta(&p, w, &cfg).is_err());
    }
}

fn logs(lambdas: &[f64]) -> Vec<EpochLog> {
    lambdas
        .iter()
        .enumerate()
        .map(|(epoch, &l)| EpochLog {
            epoch,
            train_loss: 1.0,
            val_loss: None,
            test_loss: None,
            lambda_emo: Some(l),
        })
        .collect()
}

#[test]
fn gate_report_reads_the_trajectory() {
    let r = gate_report(&logs(&[0.1, 0.105, 0.11, 0.1152])).unwrap();
    assert_eq!(r.final_lambda, 0.1152);
    assert_eq!(r.trajectory.len(), 4);
    assert!(r.active);
    let closed = gate_report(&logs(&[0.1, 0.05, 0.01])).unwrap();
    assert!(!closed.active);
    assert!(gate_report(&[]).is_err());
}
