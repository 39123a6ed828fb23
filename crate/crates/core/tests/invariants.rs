//! Property tests for the library invariants.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use pamret::landscape::{limiting_profile, ProfileModel, ProfileQuery};
use pamret::objectives::{gradient, loss, radial_derivative, EvalContext, LossModel};
use pamret::signal_models::{
    add_noise, distance, sample_cdp, sample_gaussian_complex, sample_gaussian_real, sample_signal, MeasurementEnsemble,
    NoiseSpec, ScalarKind, Signal,
};
use pamret::solvers::{run_solver, spectral_init, Method};
use proptest::prelude::*;

fn real_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

fn nonzero(v: Vec<f64>) -> Option<Signal> {
    let s = Signal::Real(v);
    (s.norm() > 0.1).then_some(s)
}

fn observed_real(n: usize, m: usize, seed: u64) -> (MeasurementEnsemble, Signal) {
    let x = sample_signal(n, ScalarKind::Real, seed);
    (sample_gaussian_real(n, m, seed).unwrap().observe(&x).unwrap(), x)
}

fn models() -> [LossModel; 5] {
    [
        LossModel::Pam1 { beta: 1.0 },
        LossModel::Pam2 { beta: 0.8 },
        LossModel::Saf { beta: 0.5 },
        LossModel::WfIntensity,
        LossModel::Amplitude,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pam1_is_jointly_homogeneous(seed in 0u64..1000, c in 0.1..5.0f64, u in real_vec(6)) {
        let Some(u) = nonzero(u) else { return Ok(()) };
        let (ens, _) = observed_real(6, 30, seed);
        let y: Vec<f64> = ens.observations().unwrap().iter().map(|v| c * v).collect();
        let scaled = sample_gaussian_real(6, 30, seed).unwrap().with_observations(y).unwrap();
        let model = LossModel::Pam1 { beta: 1.0 };
        let f = loss(&EvalContext::new(model, &ens).unwrap(), &u).unwrap();
        let fc = loss(&EvalContext::new(model, &scaled).unwrap(), &u.scaled(c)).unwrap();
        prop_assert!((fc - c * c * f).abs() <= 1e-10 * (1.0 + fc.abs()));
    }

    #[test]
    fn sign_symmetry(seed in 0u64..1000, u in real_vec(5)) {
        let Some(u) = nonzero(u) else { return Ok(()) };
        let (ens, _) = observed_real(5, 40, seed);
        for model in models() {
            let ctx = EvalContext::new(model, &ens).unwrap();
            let neg = u.scaled(-1.0);
            prop_assert_eq!(loss(&ctx, &u).unwrap(), loss(&ctx, &neg).unwrap());
            let g = gradient(&ctx, &u).unwrap();
            let gn = gradient(&ctx, &neg).unwrap();
            prop_assert!(g.scaled(-1.0).sub(&gn).unwrap().norm() <= 1e-12 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn radial_derivative_matches_gradient(seed in 0u64..1000, u in real_vec(7), beta in 0.2..4.0f64) {
        let Some(u) = nonzero(u) else { return Ok(()) };
        let (ens, _) = observed_real(7, 50, seed);
        let rho = u.norm();
        let uhat = u.normalized().unwrap();
        for model in [LossModel::Pam1 { beta }, LossModel::Pam2 { beta }] {
            let ctx = EvalContext::new(model, &ens).unwrap();
            let along = gradient(&ctx, &u).unwrap().dot_re(&uhat).unwrap();
            let rd = radial_derivative(&ctx, rho, &uhat).unwrap();
            prop_assert!((along - rd).abs() <= 1e-10 * (1.0 + rd.abs()), "{along} vs {rd}");
        }
    }

    #[test]
    fn pam1_is_convex_along_rays(seed in 0u64..500, u in real_vec(8)) {
        let Some(u) = nonzero(u) else { return Ok(()) };
        let (ens, x) = observed_real(8, 400, seed);
        // unit-norm truth so that the ray interval is in the natural scale
        let y: Vec<f64> = ens.observations().unwrap().iter().map(|v| v / x.norm()).collect();
        let ens = ens.with_observations(y).unwrap();
        let ctx = EvalContext::new(LossModel::Pam1 { beta: 1.0 }, &ens).unwrap();
        let uhat = u.normalized().unwrap();
        let (c1, c2) = (1.0 / 8.0, 3.0 * 2f64.sqrt());
        let h = 1e-3;
        for k in 0..=20 {
            let rho = c1 + (c2 - c1) * k as f64 / 20.0;
            let f = |r: f64| loss(&ctx, &uhat.scaled(r)).unwrap();
            let d2 = f(rho + h) - 2.0 * f(rho) + f(rho - h);
            prop_assert!(d2 >= -1e-12, "rho={rho}: {d2}");
        }
    }

    #[test]
    fn distance_is_phase_invariant(seed in 0u64..1000, phase in 0.0..std::f64::consts::TAU) {
        let u = sample_signal(6, ScalarKind::Complex, seed);
        let x = sample_signal(6, ScalarKind::Complex, seed + 1);
        let d = distance(&u, &x).unwrap();
        let rot = u.rotated(Complex64::from_polar(1.0, phase)).unwrap();
        prop_assert!((distance(&rot, &x).unwrap() - d).abs() <= 1e-12 * (1.0 + d));
        prop_assert!(distance(&x.rotated(Complex64::from_polar(1.0, phase)).unwrap(), &x).unwrap() < 1e-12 * x.norm());
    }

    #[test]
    fn samplers_are_pure_functions_of_seed(seed in 0u64..u64::MAX) {
        prop_assert_eq!(sample_signal(9, ScalarKind::Complex, seed), sample_signal(9, ScalarKind::Complex, seed));
        let a = sample_gaussian_complex(4, 12, seed).unwrap();
        let b = sample_gaussian_complex(4, 12, seed).unwrap();
        prop_assert_eq!(a.complex_rows(), b.complex_rows());
        let (c, d) = (sample_cdp(8, 3, seed).unwrap(), sample_cdp(8, 3, seed).unwrap());
        prop_assert_eq!(c.masks(), d.masks());
    }

    #[test]
    fn cdp_energy_identity(seed in 0u64..1000, l in 1usize..6) {
        let n = 16;
        let ens = sample_cdp(n, l, seed).unwrap();
        let z = sample_signal(n, ScalarKind::Complex, seed ^ 7);
        let energy: f64 = ens.forward(&z).unwrap().abs_sqr().iter().sum();
        let zc = z.as_complex().unwrap();
        let masks = ens.masks().unwrap();
        // unnormalized DFT: each output carries the energy of its masked input
        let expected: f64 = n as f64
            * (0..l).map(|k| (0..n).map(|i| masks[k * n + i].norm_sqr() * zc[i].norm_sqr()).sum::<f64>()).sum::<f64>();
        prop_assert!((energy - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn realized_snr_matches_request(seed in 0u64..1000, snr in 0.0..80.0f64) {
        let (ens, _) = observed_real(8, 64, seed);
        let clean = ens.observations().unwrap().to_vec();
        let noisy = add_noise(ens, NoiseSpec { snr_db: snr, seed }).unwrap();
        let eta: f64 = noisy.observations().unwrap().iter().zip(&clean).map(|(a, b)| (a - b).powi(2)).sum();
        let sig: f64 = clean.iter().map(|v| v * v).sum();
        prop_assert!((10.0 * (sig / eta).log10() - snr).abs() <= 1e-9);
    }

    #[test]
    fn profile_is_even_and_increasing(t in 0.05..0.95f64, beta in 0.25..4.0f64, rho in 0.3..3.0f64) {
        for model in [ProfileModel::Pam1, ProfileModel::Pam2] {
            let h = |t: f64| limiting_profile(&ProfileQuery::new(model, beta, rho, t).unwrap()).unwrap();
            prop_assert!((h(t) - h(-t)).abs() <= 1e-10);
            prop_assert!(h(t) > h(t - 0.04));
        }
    }
}

#[test]
fn spectral_init_matches_dense_eigenvector() {
    let (n, m) = (10, 200);
    let (ens, _) = observed_real(n, m, 4);
    let rows = ens.real_rows().unwrap();
    let y = ens.observations().unwrap();
    // rows hold the sampling vectors scaled as used by `forward`
    let a = DMatrix::from_row_slice(m, n, rows);
    let mut y_mat = DMatrix::<f64>::zeros(n, n);
    for (j, yj) in y.iter().enumerate() {
        let r = a.row(j).transpose();
        y_mat += &r * r.transpose() * (yj * yj / m as f64);
    }
    let eig = SymmetricEigen::new(y_mat);
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    let u = spectral_init(&ens, 500).unwrap();
    let uhat = u.normalized().unwrap();
    let cos: f64 = uhat.as_real().unwrap().iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    assert!((cos.abs() - 1.0).abs() < 1e-9, "{cos}");
    let mean_y2 = y.iter().map(|v| v * v).sum::<f64>() / m as f64;
    assert!((u.norm() - mean_y2.sqrt()).abs() < 1e-12 * u.norm());
}

#[test]
fn solver_record_is_deterministic() {
    let (ens, x) = observed_real(16, 128, 3);
    for method in Method::ALL {
        let mut cfg = method.default_config(300, 5);
        cfg.record_trace = true;
        let a = run_solver(method, &ens, &cfg, Some(&x)).unwrap();
        let b = run_solver(method, &ens, &cfg, Some(&x)).unwrap();
        assert_eq!(a.estimate, b.estimate, "{method}");
        assert_eq!(a.trace, b.trace, "{method}");
        assert_eq!(
            a.milestones.iter().map(|m| m.iter).collect::<Vec<_>>(),
            b.milestones.iter().map(|m| m.iter).collect::<Vec<_>>()
        );
        let last = a.trace.as_ref().unwrap().last().unwrap().rel_error.unwrap();
        assert_eq!(last, a.final_rel_error, "{method}");
    }
}

#[test]
fn loss_tail_is_monotone() {
    let mut good = 0;
    let trials = 40;
    for seed in 0..trials {
        let (ens, x) = observed_real(32, 256, seed);
        let method = if seed % 2 == 0 { Method::Pam1 } else { Method::Pam2 };
        let mut cfg = method.default_config(400, seed);
        cfg.record_trace = true;
        let trace = run_solver(method, &ens, &cfg, Some(&x)).unwrap().trace.unwrap();
        let start = trace.len() / 10;
        if trace[start..].windows(2).all(|w| w[1].loss <= w[0].loss * (1.0 + 1e-12) + 1e-300) {
            good += 1;
        }
    }
    assert!(good as f64 >= 0.95 * trials as f64, "{good}/{trials}");
}
