//! Experiment runner behind the `pamret` binary: configuration, trial
//! scheduling, and CSV/JSON persistence.
//!
//! Every trial draws its instance from a seed derived from the run seed, the
//! setting index and the trial index, so outputs do not depend on the number
//! of worker threads.

mod experiments;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::ProbeConfig;
use crate::signal_models::EnsembleKind;
use crate::solvers::Method;

pub use experiments::{
    run_convergence, run_image, run_landscape, run_noise, run_success_rate, run_timing, synthetic_image, ImageOutcome,
    ImageRow, NoiseRow, SuccessRow, TimingRow, TraceRow,
};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const PROBE_FAILURE: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SuccessRate,
    Convergence,
    Timing,
    Noise,
    Image,
    Landscape,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SuccessRate,
        Experiment::Convergence,
        Experiment::Timing,
        Experiment::Noise,
        Experiment::Image,
        Experiment::Landscape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SuccessRate => "success_rate",
            Experiment::Convergence => "convergence",
            Experiment::Timing => "timing",
            Experiment::Noise => "noise",
            Experiment::Image => "image",
            Experiment::Landscape => "landscape",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Settings shared by all experiments; unused fields are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub methods: Vec<Method>,
    pub measurement: EnsembleKind,
    pub n: usize,
    /// `m / n` for Gaussian measurements.
    pub ratios: Vec<f64>,
    /// Mask counts for coded diffraction measurements.
    #[serde(rename = "L")]
    pub l_values: Vec<usize>,
    pub trials: usize,
    pub tol_success: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub out_path: Option<PathBuf>,
    /// Step parameter override for every method.
    pub mu: Option<f64>,
    /// Smoothing parameter override for the methods that have one.
    pub beta: Option<f64>,
    pub workers: Option<usize>,
    /// Noise levels of the noise experiment.
    pub snr_db: Vec<f64>,
    /// Add a noise-free row to the noise experiment.
    pub noiseless: bool,
    /// Relative-error levels of the timing experiment.
    pub targets: Vec<f64>,
    /// Input image; a synthetic gradient image when absent.
    pub image_path: Option<PathBuf>,
    /// Where to write the recovered image.
    pub image_out: Option<PathBuf>,
    /// Side length of the synthetic image.
    pub image_size: usize,
    /// Landscape probe sizes and thresholds. Model, beta, n, m and seed are
    /// taken from the top-level fields.
    pub landscape: ProbeConfig,
}

impl ExperimentConfig {
    /// Defaults sized for each experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            experiment,
            methods: vec![Method::Pam1, Method::Pam2],
            measurement: EnsembleKind::GaussianReal,
            n: 128,
            ratios: vec![6.0],
            l_values: vec![7],
            trials: 100,
            tol_success: 1e-5,
            max_iters: 2500,
            seed: 0,
            out_path: None,
            mu: None,
            beta: None,
            workers: None,
            snr_db: vec![20.0, 30.0, 40.0, 50.0, 60.0],
            noiseless: false,
            targets: vec![1e-5, 1e-10],
            image_path: None,
            image_out: None,
            image_size: 64,
            landscape: ProbeConfig::default(),
        };
        match experiment {
            Experiment::SuccessRate => {
                ExperimentConfig { ratios: (1..=10).map(f64::from).collect(), l_values: (2..=10).collect(), ..base }
            }
            Experiment::Convergence => ExperimentConfig { methods: Method::ALL.to_vec(), trials: 1, ..base },
            Experiment::Timing => ExperimentConfig { n: 1000, ratios: vec![8.0], trials: 50, ..base },
            Experiment::Noise => ExperimentConfig { ratios: vec![8.0], trials: 10, ..base },
            Experiment::Image => ExperimentConfig {
                methods: vec![Method::Pam2],
                measurement: EnsembleKind::Cdp,
                l_values: vec![10],
                max_iters: 300,
                ..base
            },
            Experiment::Landscape => {
                ExperimentConfig { methods: vec![Method::Pam1], n: 64, ratios: vec![50.0], seed: 1, ..base }
            }
        }
    }

    /// Parses a JSON object over the experiment's defaults.
    pub fn from_json(experiment: Experiment, text: &str) -> Result<Self> {
        let user: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        let serde_json::Value::Object(user) = user else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        if let Some(e) = user.get("experiment") {
            if e.as_str() != Some(experiment.name()) {
                return Err(Error::Config(format!("config is for experiment {e}, not `{experiment}`")));
            }
        }
        let mut merged = serde_json::to_value(ExperimentConfig::defaults(experiment))?;
        let obj = merged.as_object_mut().expect("struct serializes to an object");
        for (k, v) in user {
            if k == "landscape" {
                let inner = obj.get_mut("landscape").and_then(|l| l.as_object_mut()).expect("landscape object");
                let serde_json::Value::Object(v) = v else {
                    return Err(Error::Config("`landscape` must be an object".into()));
                };
                inner.extend(v);
            } else {
                obj.insert(k, v);
            }
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: Experiment, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        ExperimentConfig::from_json(experiment, &text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.tol_success > 0.0) {
            return bad("tol_success must be positive".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if matches!(self.mu, Some(mu) if !(mu > 0.0 && mu.is_finite())) {
            return bad("mu must be positive".into());
        }
        if matches!(self.beta, Some(b) if !(b > 0.0 && b.is_finite())) {
            return bad("beta must be positive".into());
        }
        let cdp = self.measurement == EnsembleKind::Cdp;
        if cdp && (self.l_values.is_empty() || self.l_values.contains(&0)) {
            return bad("L values must be non-empty and positive".into());
        }
        if !cdp && (self.ratios.is_empty() || self.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0))) {
            return bad("ratios must be non-empty and positive".into());
        }
        if self.experiment == Experiment::Noise && self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite (use `noiseless` for the noise-free row)".into());
        }
        if self.experiment == Experiment::Timing
            && (self.targets.is_empty() || self.targets.iter().any(|t| !(*t > 0.0)))
        {
            return bad("targets must be non-empty and positive".into());
        }
        Ok(())
    }

    /// Number of Gaussian measurements for a ratio.
    pub fn measurements_for(&self, ratio: f64) -> usize {
        ((ratio * self.n as f64).round() as usize).max(1)
    }
}

/// Command-line overrides, applied after the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub methods: Option<Vec<Method>>,
    pub measurement: Option<EnsembleKind>,
    pub n: Option<usize>,
    pub ratios: Option<Vec<f64>>,
    pub l_values: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub mu: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.methods {
            cfg.methods = v;
        }
        if let Some(v) = self.measurement {
            cfg.measurement = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.ratios {
            cfg.ratios = v;
        }
        if let Some(v) = self.l_values {
            cfg.l_values = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.mu.is_some() {
            cfg.mu = self.mu;
        }
        if self.beta.is_some() {
            cfg.beta = self.beta;
        }
        if let Some(v) = self.tol {
            cfg.tol_success = v;
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if self.out.is_some() {
            cfg.out_path = self.out;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.validate()
    }
}

/// Maps `f` over `0..count` on a pool of `workers` threads, keeping order.
pub(crate) fn par_map<T, F>(workers: Option<usize>, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// CSV text with a header row.
pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn timing_table(rows: &[TimingRow]) -> String {
    let mut s = format!("{:<6} {:<8} {:>8} {:>10} {:>12}\n", "method", "kind", "tol", "mean_iter", "mean_time_s");
    for r in rows {
        s.push_str(&format!(
            "{:<6} {:<8} {:>8.0e} {:>10.1} {:>12.4}\n",
            r.method, r.scalar_kind, r.target_tol, r.mean_iters, r.mean_time_s
        ));
    }
    s
}

/// Runs an experiment, writes its output and returns the exit code.
pub fn execute(cfg: &ExperimentConfig) -> Result<i32> {
    let out = cfg.out_path.as_deref();
    match cfg.experiment {
        Experiment::SuccessRate => emit(&to_csv(&run_success_rate(cfg)?)?, out)?,
        Experiment::Convergence => {
            let (rows, diverged) = run_convergence(cfg)?;
            emit(&to_csv(&rows)?, out)?;
            if diverged {
                return Ok(exit::DIVERGENCE);
            }
        }
        Experiment::Timing => {
            let rows = run_timing(cfg)?;
            emit(&to_csv(&rows)?, out)?;
            eprint!("{}", timing_table(&rows));
            eprintln!("times cover initialization and iterations, not ensemble sampling");
        }
        Experiment::Noise => emit(&to_csv(&run_noise(cfg)?)?, out)?,
        Experiment::Image => {
            let outcome = run_image(cfg)?;
            emit(&to_csv(&outcome.rows)?, out)?;
            if outcome.diverged {
                return Ok(exit::DIVERGENCE);
            }
        }
        Experiment::Landscape => {
            let report = run_landscape(cfg)?;
            let mut text = serde_json::to_vec_pretty(&report)?;
            text.push(b'\n');
            emit(&text, out)?;
            if !report.all_pass() {
                return Ok(exit::PROBE_FAILURE);
            }
        }
    }
    Ok(exit::OK)
}

/// Exit code for an error raised before or during a run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) | Error::Image(_) => exit::CONFIG,
        _ => exit::FAILURE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_merges_over_defaults() {
        let cfg = ExperimentConfig::from_json(Experiment::Noise, r#"{"n": 32, "trials": 3}"#).unwrap();
        assert_eq!((cfg.n, cfg.trials), (32, 3));
        assert_eq!(cfg.ratios, vec![8.0]);
        let cfg = ExperimentConfig::from_json(Experiment::Landscape, r#"{"landscape": {"rays": 2}}"#).unwrap();
        assert_eq!(cfg.landscape.rays, 2);
        assert_eq!(cfg.landscape.directions, 100);
        let cfg = ExperimentConfig::from_json(Experiment::Image, r#"{"L": [10, 20]}"#).unwrap();
        assert_eq!(cfg.l_values, vec![10, 20]);
    }

    #[test]
    fn bad_configs_are_config_errors() {
        for text in [
            "[1]",
            "{",
            r#"{"trials": 0}"#,
            r#"{"ratios": []}"#,
            r#"{"tol_success": -1}"#,
            r#"{"unknown": 1}"#,
            r#"{"experiment": "timing"}"#,
            r#"{"methods": ["xx"]}"#,
        ] {
            let err = ExperimentConfig::from_json(Experiment::SuccessRate, text).unwrap_err();
            assert_eq!(exit_code(&err), exit::CONFIG, "{text}: {err}");
        }
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut cfg = ExperimentConfig::defaults(Experiment::SuccessRate);
        let o =
            Overrides { n: Some(16), ratios: Some(vec![4.0]), trials: Some(2), seed: Some(9), ..Overrides::default() };
        o.apply(&mut cfg).unwrap();
        assert_eq!((cfg.n, cfg.ratios.clone(), cfg.trials, cfg.seed), (16, vec![4.0], 2, 9));
        assert!(Overrides { trials: Some(0), ..Overrides::default() }.apply(&mut cfg).is_err());
        assert!(Overrides { workers: Some(0), ..Overrides::default() }.apply(&mut cfg).is_err());
    }

    #[test]
    fn experiment_names_roundtrip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn par_map_keeps_order() {
        let a = par_map(Some(3), 50, |i| Ok(i * i)).unwrap();
        let b = par_map(Some(1), 50, |i| Ok(i * i)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[7], 49);
        let e = par_map(Some(2), 10, |i| if i == 5 { Err(Error::Config("x".into())) } else { Ok(i) });
        assert!(e.is_err());
    }
}
