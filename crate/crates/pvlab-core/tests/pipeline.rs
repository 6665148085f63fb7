use pvlab_core::gauss::{build_joint, sample_chain, nested_context_report, GaussianSource};
use pvlab_core::markov::{first_order_markov_noise, high_order_markov_noise, ChainKind};
use pvlab_core::predictor::{
    autoregressive_generate, fit_step_predictors, oracle_step_predictors, GenConfig, ResidualStd, StepPredictors,
};
use pvlab_core::stats::MeanEstimate;
use pvlab_core::{Context, Frame, NoiseSchedule, RngSpec, Shape, Tolerances};

fn unit_image() -> Frame {
    Frame::filled(Shape::new(1, 1, 1).unwrap(), 1.0).unwrap()
}

#[test]
fn noised_videos_match_propagated_moments() {
    let s = NoiseSchedule::new(vec![0.5, 0.5]).unwrap();
    let img = unit_image();
    let first: Vec<f64> = (0..10_000).map(|i| f64::from(first_order_markov_noise(&img, &s, RngSpec::new(i, 0)).unwrap().frames()[0].data()[0])).collect();
    let m = MeanEstimate::from_values(first.iter().copied());
    let var = first.iter().map(|x| (x - m.mean).powi(2)).sum::<f64>() / (first.len() - 1) as f64;
    assert!((var - 0.75).abs() < 0.05 * 0.75, "{var}");

    let high = MeanEstimate::from_values((0..10_000).map(|i| f64::from(high_order_markov_noise(&img, &s, RngSpec::new(i, 1)).unwrap().frames()[0].data()[0])));
    let want = 0.5f64.sqrt() * (0.5f64.sqrt() + 1.0) / 2.0;
    assert!((high.mean - want).abs() < 0.05 * want, "{}", high.mean);
}

#[test]
fn nested_oracle_report() {
    let src = GaussianSource::isotropic(2, 1.5).unwrap();
    let kind = ChainKind::HighOrder(NoiseSchedule::new(vec![0.2, 0.4, 0.3, 0.6]).unwrap());
    let joint = build_joint(&src, &kind, 5).unwrap();
    let nested: Vec<Context> = (1..5).map(|k| Context::recent(k).unwrap()).collect();
    let r = nested_context_report(&joint, &nested, Tolerances::default()).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert!(r.is_monotone(1e-9));
    assert!(r.max_identity_error() < 1e-9);
    assert!(r.rows[1].gap_to_prev.unwrap() > 1e-6);
    assert_eq!(r.chain_kind, "high_order");
}

#[test]
fn fitted_generation_tracks_oracle_generation() {
    let src = GaussianSource::isotropic(1, 1.0).unwrap();
    let kind = ChainKind::HighOrder(NoiseSchedule::new(vec![0.3, 0.3, 0.3]).unwrap());
    let joint = build_joint(&src, &kind, 4).unwrap();
    let train = sample_chain(&src, &kind, 50_000, RngSpec::new(1, 0)).unwrap();
    let reference = sample_chain(&src, &kind, 20_000, RngSpec::new(1, 1)).unwrap();
    let cfg = GenConfig { context_window: 2, n_videos: 20_000, residual_std: ResidualStd::Uniform(0.0), teacher_forced: true };
    let (oracle, _) = oracle_step_predictors(&joint, 2).unwrap();
    let (fitted, stds) = fit_step_predictors(&train, 2, 0.0).unwrap();
    let a = autoregressive_generate(StepPredictors::PerStep(&oracle), &reference, &cfg, RngSpec::new(1, 2)).unwrap();
    let b = autoregressive_generate(StepPredictors::PerStep(&fitted), &reference, &cfg, RngSpec::new(1, 2)).unwrap();
    assert!((a.last_frame_mse.mean - b.last_frame_mse.mean).abs() < 0.01 * a.last_frame_mse.mean);
    assert_eq!(stds.len(), 2);
    assert!(stds.iter().all(|s| *s > 0.0));
}
