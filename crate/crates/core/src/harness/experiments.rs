use serde::Serialize;

use super::{par_map, ExperimentConfig};
use crate::error::{Error, Result};
use crate::landscape::{run_audit, LandscapeReport, ProbeConfig, ProfileModel};
use crate::rng::derive_seed;
use crate::signal_models::image::{read_pnm, write_pnm, Image};
use crate::signal_models::{
    add_noise, distance, sample_cdp, sample_gaussian_complex, sample_gaussian_real, sample_signal, EnsembleKind,
    MeasurementEnsemble, NoiseSpec, ScalarKind, Signal,
};
use crate::solvers::{run_method, Method, SolverConfig, TrialRecord, TrialStatus};

/// Relative error at which convergence traces stop.
const TRACE_FLOOR: f64 = 1e-14;

fn trial_seed(cfg: &ExperimentConfig, setting: usize, trial: usize) -> u64 {
    derive_seed(cfg.seed, ((setting as u64) << 32) | trial as u64)
}

/// Ground truth and observed ensemble; `size` is `m` or the mask count.
fn instance(kind: EnsembleKind, n: usize, size: usize, seed: u64) -> Result<(MeasurementEnsemble, Signal)> {
    let x = sample_signal(n, kind.scalar_kind(), seed);
    let ens = match kind {
        EnsembleKind::GaussianReal => sample_gaussian_real(n, size, seed)?,
        EnsembleKind::GaussianComplex => sample_gaussian_complex(n, size, seed)?,
        EnsembleKind::Cdp => sample_cdp(n, size, seed)?,
    };
    Ok((ens.observe(&x)?, x))
}

fn solver_config(cfg: &ExperimentConfig, method: Method, init_seed: u64) -> SolverConfig {
    let mut sc = method.default_config(cfg.max_iters, init_seed);
    if let Some(mu) = cfg.mu {
        sc.step_mu = mu;
    }
    sc
}

fn solve(
    cfg: &ExperimentConfig,
    method: Method,
    ens: &MeasurementEnsemble,
    sc: &SolverConfig,
    x: &Signal,
) -> Result<TrialRecord> {
    run_method(method, method.model(cfg.beta), ens, sc, Some(x))
}

/// Measurement settings of the run: `(m/n or L, m or L)`.
fn settings(cfg: &ExperimentConfig) -> Vec<(f64, usize)> {
    match cfg.measurement {
        EnsembleKind::Cdp => cfg.l_values.iter().map(|&l| (l as f64, l)).collect(),
        _ => cfg.ratios.iter().map(|&r| (r, cfg.measurements_for(r))).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessRow {
    pub method: Method,
    pub measurement: EnsembleKind,
    pub n: usize,
    pub m_over_n: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// Fraction of trials ending within `tol_success` of the truth, per method and setting.
pub fn run_success_rate(cfg: &ExperimentConfig) -> Result<Vec<SuccessRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (si, (ratio, size)) in settings(cfg).into_iter().enumerate() {
        for &method in &cfg.methods {
            let ok = par_map(cfg.workers, cfg.trials, |t| {
                let seed = trial_seed(cfg, si, t);
                let (ens, x) = instance(cfg.measurement, cfg.n, size, seed)?;
                let mut sc = solver_config(cfg, method, seed);
                sc.rel_tol_stop = Some(cfg.tol_success);
                let rec = solve(cfg, method, &ens, &sc, &x)?;
                Ok(rec.final_rel_error <= cfg.tol_success)
            })?;
            let successes = ok.iter().filter(|s| **s).count();
            rows.push(SuccessRow {
                method,
                measurement: cfg.measurement,
                n: cfg.n,
                m_over_n: ratio,
                trials: cfg.trials,
                successes,
                success_rate: successes as f64 / cfg.trials as f64,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub method: Method,
    pub iter: usize,
    pub rel_error: f64,
}

/// Relative error per iteration on one shared instance; the flag reports divergence.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<(Vec<TraceRow>, bool)> {
    cfg.validate()?;
    let (_, size) = settings(cfg)[0];
    let seed = trial_seed(cfg, 0, 0);
    let (ens, x) = instance(cfg.measurement, cfg.n, size, seed)?;
    let records = par_map(cfg.workers, cfg.methods.len(), |i| {
        let method = cfg.methods[i];
        let mut sc = solver_config(cfg, method, seed);
        sc.record_trace = true;
        sc.rel_tol_stop = Some(TRACE_FLOOR);
        solve(cfg, method, &ens, &sc, &x)
    })?;
    let mut rows = Vec::new();
    let mut diverged = false;
    for (method, rec) in cfg.methods.iter().zip(records) {
        diverged |= rec.status == TrialStatus::Diverged;
        for p in rec.trace.unwrap_or_default() {
            rows.push(TraceRow { method: *method, iter: p.iter, rel_error: p.rel_error.unwrap_or(f64::NAN) });
        }
    }
    Ok((rows, diverged))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub method: Method,
    pub scalar_kind: ScalarKind,
    pub target_tol: f64,
    /// Mean over the trials that reached the target; NaN when none did.
    pub mean_iters: f64,
    pub mean_time_s: f64,
}

/// Iterations and seconds to reach each target relative error.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<Vec<TimingRow>> {
    cfg.validate()?;
    let (_, size) = settings(cfg)[0];
    let floor = cfg.targets.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        let recs = par_map(cfg.workers, cfg.trials, |t| {
            let seed = trial_seed(cfg, 0, t);
            let (ens, x) = instance(cfg.measurement, cfg.n, size, seed)?;
            let mut sc = solver_config(cfg, method, seed);
            sc.rel_tol_stop = Some(floor);
            sc.milestones = cfg.targets.clone();
            solve(cfg, method, &ens, &sc, &x)
        })?;
        for &tol in &cfg.targets {
            let hits: Vec<_> = recs.iter().filter_map(|r| r.milestones.iter().find(|m| m.tol == tol)).collect();
            let k = hits.len() as f64;
            let (iters, time) = if hits.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (hits.iter().map(|m| m.iter as f64).sum::<f64>() / k, hits.iter().map(|m| m.elapsed_s).sum::<f64>() / k)
            };
            rows.push(TimingRow {
                method,
                scalar_kind: cfg.measurement.scalar_kind(),
                target_tol: tol,
                mean_iters: iters,
                mean_time_s: time,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseRow {
    pub method: Method,
    pub snr_db: f64,
    pub mean_mse_db: f64,
}

/// Mean of `10 log10(dist^2(u, x)/||x||^2)` over trials, per method and SNR.
pub fn run_noise(cfg: &ExperimentConfig) -> Result<Vec<NoiseRow>> {
    cfg.validate()?;
    let (_, size) = settings(cfg)[0];
    let mut levels = cfg.snr_db.clone();
    if cfg.noiseless {
        levels.push(f64::INFINITY);
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &snr in &levels {
            let mse = par_map(cfg.workers, cfg.trials, |t| {
                let seed = trial_seed(cfg, 0, t);
                let (ens, x) = instance(cfg.measurement, cfg.n, size, seed)?;
                let ens = add_noise(ens, NoiseSpec { snr_db: snr, seed: derive_seed(seed, 0x6e6f) })?;
                let rec = solve(cfg, method, &ens, &solver_config(cfg, method, seed), &x)?;
                let rel = distance(&rec.estimate, &x)? / x.norm();
                Ok(20.0 * rel.log10())
            })?;
            rows.push(NoiseRow { method, snr_db: snr, mean_mse_db: mse.iter().sum::<f64>() / mse.len() as f64 });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageRow {
    pub channel: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub iterations: usize,
    /// First iteration within `tol_success`; NaN if never reached.
    pub iters_to_tol: f64,
    pub rel_error: f64,
    /// Largest pixel error in `[0, 1]` units after global phase alignment.
    pub max_pixel_dev: f64,
    pub status: TrialStatus,
}

pub struct ImageOutcome {
    pub rows: Vec<ImageRow>,
    /// Recovered image for the first `L` value.
    pub recovered: Image,
    pub diverged: bool,
}

/// RGB test image whose channels are linear ramps.
pub fn synthetic_image(size: usize) -> Image {
    let ramp = |v: usize| (v * 255 / size.saturating_sub(1).max(1)) as u8;
    let mut channels: Vec<Vec<u8>> = (0..3).map(|_| Vec::with_capacity(size * size)).collect();
    for i in 0..size {
        for j in 0..size {
            channels[0].push(ramp(i));
            channels[1].push(ramp(j));
            channels[2].push(ramp((i + j) / 2));
        }
    }
    Image { width: size, height: size, channels }
}

/// Rotates `u` so that its entries sum to a positive real, the natural
/// alignment for a nonnegative image.
fn align_nonnegative(u: &Signal) -> Result<Signal> {
    let Signal::Complex(c) = u else {
        return Ok(u.clone());
    };
    let s: num_complex::Complex64 = c.iter().sum();
    if s.norm() == 0.0 {
        return Ok(u.clone());
    }
    u.rotated(s.conj() / s.norm())
}

/// Per-channel recovery from coded diffraction intensities.
pub fn run_image(cfg: &ExperimentConfig) -> Result<ImageOutcome> {
    cfg.validate()?;
    let img = match &cfg.image_path {
        Some(p) => read_pnm(p)?,
        None => synthetic_image(cfg.image_size),
    };
    let pixels = img.pixels();
    if !pixels.is_power_of_two() {
        return Err(Error::Image(format!(
            "{}x{} image has {pixels} pixels; only power-of-two lengths are supported (no padding)",
            img.width, img.height
        )));
    }
    let method = cfg.methods[0];
    let channels = img.channels.len();
    let jobs: Vec<(usize, usize)> =
        cfg.l_values.iter().enumerate().flat_map(|(li, _)| (0..channels).map(move |c| (li, c))).collect();
    let results = par_map(cfg.workers, jobs.len(), |j| {
        let (li, c) = jobs[j];
        let l = cfg.l_values[li];
        let x = Signal::Real(img.channel_signal(c)).to_complex();
        let seed = derive_seed(cfg.seed, c as u64);
        let ens = sample_cdp(pixels, l, seed)?.observe(&x)?;
        let mut sc = solver_config(cfg, method, seed);
        sc.milestones = vec![cfg.tol_success];
        let rec = solve(cfg, method, &ens, &sc, &x)?;
        let aligned = align_nonnegative(&rec.estimate)?;
        let values: Vec<f64> = aligned.as_complex().expect("complex").iter().map(|v| v.re).collect();
        let truth = img.channel_signal(c);
        let dev = values.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let row = ImageRow {
            channel: c,
            l,
            iterations: rec.iterations_run,
            iters_to_tol: rec.milestones.first().map_or(f64::NAN, |m| m.iter as f64),
            rel_error: rec.final_rel_error,
            max_pixel_dev: dev,
            status: rec.status,
        };
        Ok((row, values))
    })?;
    let diverged = results.iter().any(|(r, _)| r.status == TrialStatus::Diverged);
    let recovered = Image {
        width: img.width,
        height: img.height,
        channels: results.iter().take(channels).map(|(_, v)| Image::quantize(v)).collect(),
    };
    if let Some(p) = &cfg.image_out {
        write_pnm(p, &recovered)?;
    }
    Ok(ImageOutcome { rows: results.into_iter().map(|(r, _)| r).collect(), recovered, diverged })
}

/// Landscape audit for the first configured method.
pub fn run_landscape(cfg: &ExperimentConfig) -> Result<LandscapeReport> {
    cfg.validate()?;
    let model = match cfg.methods[0] {
        Method::Pam1 => ProfileModel::Pam1,
        Method::Pam2 => ProfileModel::Pam2,
        other => return Err(Error::Config(format!("landscape audits need pam1 or pam2 (got {other})"))),
    };
    let probe = ProbeConfig {
        model,
        beta: cfg.beta.unwrap_or(1.0),
        n: cfg.n,
        m: cfg.measurements_for(cfg.ratios[0]),
        seed: cfg.seed,
        ..cfg.landscape.clone()
    };
    probe.validate().map_err(|e| Error::Config(e.to_string()))?;
    run_audit(&probe)
}

#[cfg(test)]
mod tests {
    use super::super::{to_csv, Experiment};
    use super::*;

    fn small(e: Experiment) -> ExperimentConfig {
        ExperimentConfig { n: 16, trials: 3, workers: Some(2), ..ExperimentConfig::defaults(e) }
    }

    #[test]
    fn success_rate_rows() {
        let cfg = ExperimentConfig { ratios: vec![1.0, 8.0], ..small(Experiment::SuccessRate) };
        let rows = run_success_rate(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].m_over_n, 1.0);
        let high: Vec<_> = rows.iter().filter(|r| r.m_over_n == 8.0).collect();
        assert!(high.iter().all(|r| r.successes >= 2), "{rows:?}");
        let low: Vec<_> = rows.iter().filter(|r| r.m_over_n == 1.0).collect();
        assert!(low.iter().all(|r| r.successes == 0), "{rows:?}");
        let csv = String::from_utf8(to_csv(&rows).unwrap()).unwrap();
        assert!(csv.starts_with("method,measurement,n,m_over_n,trials,successes,success_rate\n"));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let a = ExperimentConfig { ratios: vec![4.0], workers: Some(1), ..small(Experiment::SuccessRate) };
        let b = ExperimentConfig { workers: Some(3), ..a.clone() };
        assert_eq!(to_csv(&run_success_rate(&a).unwrap()).unwrap(), to_csv(&run_success_rate(&b).unwrap()).unwrap());
    }

    #[test]
    fn cdp_rows_use_mask_counts() {
        let cfg = ExperimentConfig {
            measurement: EnsembleKind::Cdp,
            l_values: vec![6],
            methods: vec![Method::Pam2],
            ..small(Experiment::SuccessRate)
        };
        let rows = run_success_rate(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].m_over_n, rows[0].successes), (6.0, 3));
    }

    #[test]
    fn convergence_trace() {
        let cfg = ExperimentConfig { ratios: vec![8.0], ..small(Experiment::Convergence) };
        let (rows, diverged) = run_convergence(&cfg).unwrap();
        assert!(!diverged);
        for m in Method::ALL {
            let tr: Vec<_> = rows.iter().filter(|r| r.method == m).collect();
            assert_eq!(tr[0].iter, 0);
            assert!(tr.last().unwrap().rel_error <= 1e-10, "{m} {:?}", tr.last());
        }
        let (again, _) = run_convergence(&cfg).unwrap();
        assert_eq!(to_csv(&rows).unwrap(), to_csv(&again).unwrap());
        let csv = String::from_utf8(to_csv(&rows).unwrap()).unwrap();
        assert!(csv.starts_with("method,iter,rel_error\n"));
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = ExperimentConfig { methods: vec![Method::Pam2], mu: Some(1e6), ..small(Experiment::Convergence) };
        let (_, diverged) = run_convergence(&cfg).unwrap();
        assert!(diverged);
    }

    #[test]
    fn timing_rows() {
        let cfg =
            ExperimentConfig { n: 32, trials: 2, methods: vec![Method::Pam2, Method::Wf], ..small(Experiment::Timing) };
        let rows = run_timing(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.chunks(2) {
            assert!(pair[0].mean_iters <= pair[1].mean_iters);
            assert!(pair[0].mean_time_s >= 0.0);
        }
        let csv = String::from_utf8(to_csv(&rows).unwrap()).unwrap();
        assert!(csv.starts_with("method,scalar_kind,target_tol,mean_iters,mean_time_s\n"));
    }

    #[test]
    fn noise_rows() {
        let cfg = ExperimentConfig {
            n: 32,
            snr_db: vec![20.0, 60.0],
            noiseless: true,
            methods: vec![Method::Pam2],
            max_iters: 1500,
            ..small(Experiment::Noise)
        };
        let rows = run_noise(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].mean_mse_db > rows[1].mean_mse_db);
        assert!(rows[2].snr_db.is_infinite() && rows[2].mean_mse_db < -100.0, "{rows:?}");
        let csv = String::from_utf8(to_csv(&rows).unwrap()).unwrap();
        assert!(csv.starts_with("method,snr_db,mean_mse_db\n") && csv.contains(",inf,"));
    }

    #[test]
    fn image_recovery() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("rec.ppm");
        let cfg = ExperimentConfig {
            image_size: 16,
            l_values: vec![10],
            image_out: Some(out.clone()),
            ..small(Experiment::Image)
        };
        let o = run_image(&cfg).unwrap();
        assert_eq!(o.rows.len(), 3);
        for r in &o.rows {
            assert!(r.rel_error <= 1e-5 && r.max_pixel_dev <= 1e-3, "{r:?}");
        }
        assert_eq!(o.recovered, synthetic_image(16));
        assert_eq!(read_pnm(&out).unwrap(), o.recovered);
        let odd = ExperimentConfig { image_size: 12, ..cfg };
        assert!(matches!(run_image(&odd), Err(Error::Image(_))));
    }

    #[test]
    fn landscape_needs_pam_model() {
        let cfg = ExperimentConfig { methods: vec![Method::Wf], ..small(Experiment::Landscape) };
        assert!(matches!(run_landscape(&cfg), Err(Error::Config(_))));
        let cfg = ExperimentConfig { ratios: vec![0.5], ..small(Experiment::Landscape) };
        assert!(matches!(run_landscape(&cfg), Err(Error::Config(_))));
    }
}
