use super::*;
use crate::model::{
    CoeffEntry, DomainSpec, DriftSpec, FnDrift, JumpDiffusionModel, LevyAtom, LevyMixture,
};
use crate::priors::{DpMixConfig, GaussianPriorConfig, PriorConfig};
use crate::quad::QuadratureConfig;
use crate::sim::{sample_observations, simulate_path, Init, ObservationSeries, PathSkeleton};

fn domain(r: f64) -> DomainSpec {
    DomainSpec::new(1, r).unwrap()
}

fn model(r: f64, a1: f64, lambda: f64, center: f64, tau: f64) -> JumpDiffusionModel {
    let dom = domain(r);
    let coeffs =
        if a1 == 0.0 { Vec::new() } else { vec![CoeffEntry { j: vec![1], a: vec![a1] }] };
    let drift = DriftSpec::new(dom, 4.0, 1.0, coeffs).unwrap();
    let atom = LevyAtom::new(&dom, 1.0, vec![center], tau).unwrap();
    let levy = LevyMixture::new(dom, lambda, vec![atom], 0.01).unwrap();
    JumpDiffusionModel::new(drift, levy).unwrap()
}

/// Independent oracle: the likelihood ratio of the discrete chain, written as
/// a difference of Gaussian transition log densities plus the jump terms.
fn oracle_log_weight(
    target: &JumpDiffusionModel,
    reference: &JumpDiffusionModel,
    path: &PathSkeleton,
) -> f64 {
    use crate::model::DriftField;
    let ut = target.compensator_shift()[0];
    let ur = reference.compensator_shift()[0];
    let mut acc = 0.0;
    let mut jp = 0;
    for i in 0..path.brownian.len() {
        let x = &path.states[i];
        let h = path.times[i + 1] - path.times[i];
        // Continuous-part arrival: strip the jump back off the stored state.
        let mut arrive = path.states[i + 1][0];
        while jp < path.jumps.len() && path.jumps[jp].0 == i {
            arrive -= path.jumps[jp].1[0];
            jp += 1;
        }
        if h == 0.0 {
            continue;
        }
        let mt = x[0] + (target.drift.eval(x)[0] - ut) * h;
        let mr = x[0] + (reference.drift.eval(x)[0] - ur) * h;
        acc += -(arrive - mt).powi(2) / (2.0 * h) + (arrive - mr).powi(2) / (2.0 * h);
    }
    for (_, z) in &path.jumps {
        acc += target.levy.log_density(z) - reference.levy.log_density(z);
    }
    acc - (target.levy.total_mass() - reference.levy.total_mass()) * path.horizon()
}

#[test]
fn log_weight_matches_transition_density_oracle() {
    let target = model(2.0, 0.7, 1.5, 0.6, 3.0);
    let reference = model(2.0, -0.2, 0.8, -0.4, 1.5);
    let kernel = GirsanovKernel::new(&target, &reference).unwrap();
    for seed in 0..20 {
        let path = simulate_path(&reference, &[0.2], 2.0, 0.25, seed).unwrap();
        let got = kernel.log_weight(&path).unwrap();
        let want = oracle_log_weight(&target, &reference, &path);
        assert!((got - want).abs() < 1e-9, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn weights_average_to_one_under_the_reference() {
    // Same jump measure: only the drift part is active.
    let target = model(2.0, 0.5, 1.0, 0.0, 4.0);
    let reference = model(2.0, 0.2, 1.0, 0.0, 4.0);
    let kernel = GirsanovKernel::new(&target, &reference).unwrap();
    let n = 4000;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..n {
        let path = simulate_path(&reference, &[0.0], 0.5, 0.05, seed).unwrap();
        let w = kernel.log_weight(&path).unwrap().exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.5 * se + 1e-4, "mean {mean}, se {se}");

    // Different jump measures: jump ratio and compensator join in.
    let target = model(2.0, 0.3, 0.6, 0.5, 2.0);
    let reference = model(2.0, 0.0, 0.5, -0.3, 3.0);
    let kernel = GirsanovKernel::new(&target, &reference).unwrap();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for seed in 0..n {
        let path = simulate_path(&reference, &[0.0], 0.5, 0.05, seed).unwrap();
        let w = kernel.log_weight(&path).unwrap().exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.5 * se + 1e-3, "mean {mean}, se {se}");
}

#[test]
fn jumpless_target_assigns_zero_weight_to_jumpy_paths() {
    let dom = domain(2.0);
    let drift = DriftSpec::zero(dom, 4.0, 1.0).unwrap();
    let atom = LevyAtom::new(&dom, 1.0, vec![0.0], 4.0).unwrap();
    let no_jumps = JumpDiffusionModel::new(
        drift.clone(),
        LevyMixture::new(dom, 0.0, vec![atom.clone()], 0.01).unwrap(),
    )
    .unwrap();
    let jumpy = JumpDiffusionModel::new(
        drift,
        LevyMixture::new(dom, 5.0, vec![atom], 0.01).unwrap(),
    )
    .unwrap();
    let kernel = GirsanovKernel::new(&no_jumps, &jumpy).unwrap();
    let mut saw_jumpy = false;
    for seed in 0..10 {
        let path = simulate_path(&jumpy, &[0.0], 1.0, 0.1, seed).unwrap();
        let w = kernel.log_weight(&path).unwrap();
        if path.num_jumps() > 0 {
            saw_jumpy = true;
            assert_eq!(w, f64::NEG_INFINITY);
        } else {
            assert!(w.is_finite());
        }
    }
    assert!(saw_jumpy);
}

#[test]
fn jump_off_the_reference_support_is_singular() {
    let target = model(2.0, 0.0, 1.0, 0.0, 4.0);
    let reference = model(2.0, 0.0, 1.0, 0.0, 4.0);
    let path = PathSkeleton {
        dt: 0.5,
        times: vec![0.0, 0.5, 1.0],
        states: vec![vec![0.0], vec![5.1], vec![5.0]],
        brownian: vec![vec![0.1], vec![-0.1]],
        jumps: vec![(0, vec![5.0])],
    };
    match GirsanovKernel::new(&target, &reference).unwrap().log_weight(&path) {
        Err(crate::Error::SingularWeight { jump }) => assert_eq!(jump, vec![5.0]),
        other => panic!("expected singular weight, got {other:?}"),
    }
}

#[test]
fn drift_correction_sign_tracks_atom_locations() {
    let plus = model(2.0, 0.0, 1.0, 0.8, 6.0);
    let minus = model(2.0, 0.0, 1.0, -0.8, 6.0);
    let k = GirsanovKernel::new(&plus, &minus).unwrap();
    assert!(k.drift_correction()[0] > 0.5);
    let same = GirsanovKernel::new(&plus, &plus).unwrap();
    assert_eq!(same.drift_correction(), &[0.0]);
}

#[test]
fn mean_neg_log_weight_is_nonnegative() {
    let target = model(2.0, 0.6, 1.0, 0.3, 2.0);
    let reference = model(2.0, 0.0, 1.0, 0.0, 4.0);
    let (mean, se) =
        mean_neg_log_weight(&target, &reference, &[0.0], 1.0, 0.1, 500, 3).unwrap();
    assert!(mean > -3.0 * se, "mean {mean}, se {se}");
    assert!(se > 0.0);
}

#[test]
fn mean_weight_centers_on_one() {
    let target = model(2.0, 0.4, 1.2, 0.3, 3.0);
    let reference = model(2.0, 0.0, 1.0, 0.0, 4.0);
    let (mean, se) = mean_weight(&target, &reference, &[0.1], 0.5, 0.05, 2000, 17).unwrap();
    assert!((mean - 1.0).abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn kl_bound_is_zero_for_identical_models() {
    let m = model(2.0, 0.4, 1.2, 0.5, 2.5);
    let pts = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let terms = kl_upper_bound(&m, &m, &pts, QuadratureConfig { order: 64 }).unwrap();
    assert_eq!(terms.drift_term, 0.0);
    assert_eq!(terms.jump_term, 0.0);
    assert_eq!(terms.total, 0.0);
    assert_eq!(terms.clipped, 0);
}

#[test]
fn kl_jump_term_for_scaled_intensity_is_analytic() {
    // nu0 = 2 nu: rho is the constant 2, so the integral is
    // (2 ln 2 - 1) * Lambda_other.
    let truth = model(2.0, 0.0, 1.0, 0.4, 3.0);
    let other = model(2.0, 0.0, 0.5, 0.4, 3.0);
    let pts = vec![vec![0.0]];
    let terms = kl_upper_bound(&truth, &other, &pts, QuadratureConfig { order: 96 }).unwrap();
    let want = (2.0 * std::f64::consts::LN_2 - 1.0) * other.levy.total_mass();
    assert!((terms.jump_term - want).abs() < 1e-9, "{} vs {want}", terms.jump_term);
    assert_eq!(terms.clipped, 0);
    assert!(terms.jump_term >= 0.0);
}

#[test]
fn kl_jump_term_matches_simpson_oracle_for_unequal_kernels() {
    let truth = model(2.0, 0.0, 1.3, 0.5, 2.0);
    let other = model(2.0, 0.0, 0.9, -0.6, 5.0);
    let pts = vec![vec![0.0]];
    let terms = kl_upper_bound(&truth, &other, &pts, QuadratureConfig { order: 128 }).unwrap();
    // Composite Simpson oracle of the same integrand.
    let n = 20_000;
    let h = 4.0 / n as f64;
    let f = |z: f64| {
        let f0 = truth.levy.density(&[z]);
        let f1 = other.levy.density(&[z]);
        let rho = f0 / f1;
        f1 * (rho * rho.ln() - rho + 1.0)
    };
    let mut oracle = f(-2.0 + 1e-12) + f(2.0 - 1e-12);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        oracle += w * f(-2.0 + i as f64 * h);
    }
    oracle *= h / 3.0;
    assert!((terms.jump_term - oracle).abs() < 1e-6, "{} vs {oracle}", terms.jump_term);
}

#[test]
fn kl_drift_term_single_point_oracle() {
    // r = 1, single mode a_1 = 0.6 versus the zero series, same jump measure:
    // at x = 0 the gap is 0.6 sin(pi/2) = 0.6, u = 0, so the drift term is
    // 0.5 * 0.36 = 0.18 when the empirical measure is a point mass at 0.
    let truth = model(1.0, 0.6, 1.0, 0.0, 4.0);
    let other = model(1.0, 0.0, 1.0, 0.0, 4.0);
    let terms =
        kl_upper_bound(&truth, &other, &[vec![0.0]], QuadratureConfig::default()).unwrap();
    assert!((terms.drift_term - 0.18).abs() < 1e-12, "{}", terms.drift_term);
    assert!(terms.jump_term.abs() < 1e-12);
}

#[test]
fn kl_support_rules() {
    let with_jumps = model(2.0, 0.0, 1.0, 0.0, 4.0);
    let without = model(2.0, 0.0, 0.0, 0.0, 4.0);
    let pts = vec![vec![0.0]];
    match kl_upper_bound(&with_jumps, &without, &pts, QuadratureConfig::default()) {
        Err(crate::Error::SupportViolation { .. }) => {}
        other => panic!("expected support violation, got {other:?}"),
    }
    // The reverse direction is integrable: rho = 0 gives Lambda_other.
    let terms =
        kl_upper_bound(&without, &with_jumps, &pts, QuadratureConfig::default()).unwrap();
    assert!((terms.jump_term - with_jumps.levy.total_mass()).abs() < 1e-12);
    // No jumps on either side: zero.
    let terms = kl_upper_bound(&without, &without, &pts, QuadratureConfig::default()).unwrap();
    assert_eq!(terms.jump_term, 0.0);
}

#[test]
fn extreme_kernels_clip_but_stay_finite() {
    let truth = model(2.0, 0.0, 1.0, 1.8, 400.0);
    let other = model(2.0, 0.0, 1.0, -1.8, 400.0);
    let terms =
        kl_upper_bound(&truth, &other, &[vec![0.0]], QuadratureConfig { order: 128 }).unwrap();
    assert!(terms.clipped > 0);
    assert!(terms.total.is_finite());
    assert!(terms.jump_term >= 0.0);
}

#[test]
fn transition_estimator_matches_brownian_motion() {
    // Zero drift, no jumps: the scheme is exact and p_delta(x, .) is the
    // N(x, delta) density. Kernel bias and Monte Carlo noise stay well under
    // the tolerance at this replicate count.
    let zero = FnDrift::new(1, |_: &[f64], out: &mut [f64]| out[0] = 0.0);
    let cfg = EstimatorConfig { replicates: 8000, dt: 0.5, bandwidth: None };
    let delta = 0.5;
    for (y, seed) in [(0.0, 5u64), (0.7, 6), (-1.0, 7)] {
        let got =
            estimate_transition_density_field(&zero, None, &[0.0], &[y], delta, &cfg, seed)
                .unwrap();
        let want = (-(y * y) / (2.0 * delta)).exp() / (2.0 * std::f64::consts::PI * delta).sqrt();
        assert!((got - want).abs() < 0.05 * want.max(0.1), "y {y}: {got} vs {want}");
    }
}

#[test]
fn transition_estimator_is_seed_deterministic() {
    let m = model(2.0, 0.5, 1.0, 0.3, 3.0);
    let cfg = EstimatorConfig { replicates: 32, dt: 0.05, bandwidth: None };
    let a = estimate_transition_density(&m, &[0.1], &[0.4], 0.5, &cfg, 11).unwrap();
    let b = estimate_transition_density(&m, &[0.1], &[0.4], 0.5, &cfg, 11).unwrap();
    let c = estimate_transition_density(&m, &[0.1], &[0.4], 0.5, &cfg, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a > 0.0);
    // A fixed bandwidth is honored.
    let fixed = EstimatorConfig { replicates: 32, dt: 0.05, bandwidth: Some(0.25) };
    let f = estimate_transition_density(&m, &[0.1], &[0.4], 0.5, &fixed, 11).unwrap();
    assert!(f > 0.0 && f != a);
}

#[test]
fn unreachable_transitions_are_floored_and_counted() {
    let m = model(2.0, 0.0, 0.5, 0.0, 4.0);
    let series = ObservationSeries { delta: 0.5, states: vec![vec![0.0], vec![1000.0]] };
    let cfg = EstimatorConfig { replicates: 16, dt: 0.1, bandwidth: None };
    let (ll, zeros) = log_likelihood(&m, &series, &cfg, 1).unwrap();
    assert_eq!(zeros, 1);
    assert_eq!(ll, LOG_DENSITY_FLOOR);
}

#[test]
fn posterior_score_decomposes() {
    let dom = domain(2.0);
    let prior = PriorConfig {
        drift: GaussianPriorConfig::new(dom, 4.0, 3, 1.0).unwrap(),
        levy: DpMixConfig::new(dom, 1.0),
    };
    let truth = model(2.0, 0.5, 1.0, 0.3, 3.0);
    let series =
        sample_observations(&truth, &Init::Point(vec![0.0]), 5, 0.5, 0.05, 77).unwrap();
    let draw = crate::priors::sample_model_prior(&prior, 12).unwrap();
    let cfg = EstimatorConfig { replicates: 24, dt: 0.05, bandwidth: None };
    let score = log_posterior_unnorm(&draw, &series, &prior, &cfg, 5).unwrap();
    assert!(score.log_prior.is_finite());
    assert!(score.log_likelihood.is_finite());
    assert_eq!(score.total, score.log_prior + score.log_likelihood);
    assert_eq!(score.zero_transitions, 0);
}
