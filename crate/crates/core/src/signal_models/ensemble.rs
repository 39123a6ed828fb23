use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use super::signal::{complex_normal, ScalarKind, Signal};
use crate::error::{check_dim, invalid, Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    GaussianReal,
    GaussianComplex,
    Cdp,
}

impl EnsembleKind {
    pub fn scalar_kind(self) -> ScalarKind {
        match self {
            EnsembleKind::GaussianReal => ScalarKind::Real,
            _ => ScalarKind::Complex,
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::GaussianReal => "gaussian_real",
            EnsembleKind::GaussianComplex => "gaussian_complex",
            EnsembleKind::Cdp => "cdp",
        })
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_real" => Ok(EnsembleKind::GaussianReal),
            "gaussian_complex" => Ok(EnsembleKind::GaussianComplex),
            "cdp" => Ok(EnsembleKind::Cdp),
            _ => Err(Error::Config(format!("unknown measurement kind `{s}`"))),
        }
    }
}

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    fn new(n: usize) -> FftPair {
        let mut planner = FftPlanner::new();
        FftPair { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }
}

#[derive(Clone)]
enum Vectors {
    /// m x n row-major.
    Real(Vec<f64>),
    /// m x n row-major; row j holds the conjugate of a_j so that
    /// `z_j = <a_j, u> = sum_i row[j][i] u[i]`.
    Complex(Vec<Complex64>),
    /// L x n octanary masks; measurement `l*n + k` is the k-th unnormalized
    /// DFT coefficient of `mask_l .* u`.
    Cdp { masks: Vec<Complex64>, fft: FftPair },
}

/// Sampling functionals plus (optionally) the observed magnitudes.
#[derive(Clone)]
pub struct MeasurementEnsemble {
    kind: EnsembleKind,
    n: usize,
    m: usize,
    seed: u64,
    vectors: Vectors,
    observations: Option<Vec<f64>>,
}

impl fmt::Debug for MeasurementEnsemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeasurementEnsemble")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("seed", &self.seed)
            .field("observed", &self.observations.is_some())
            .finish()
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(invalid(format!("ensemble needs n >= 1 and m >= 1 (got n={n}, m={m})")));
    }
    Ok(())
}

/// m i.i.d. N(0, I_n) real sampling vectors.
pub fn sample_gaussian_real(n: usize, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    check_sizes(n, m)?;
    let mut rng = stream(seed, Purpose::Measurement);
    let rows = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::GaussianReal,
        n,
        m,
        seed,
        vectors: Vectors::Real(rows),
        observations: None,
    })
}

/// m i.i.d. N(0, I_n/2) + i N(0, I_n/2) sampling vectors.
pub fn sample_gaussian_complex(n: usize, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    check_sizes(n, m)?;
    let mut rng = stream(seed, Purpose::Measurement);
    let rows = (0..n * m).map(|_| complex_normal(&mut rng, 0.5)).collect();
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::GaussianComplex,
        n,
        m,
        seed,
        vectors: Vectors::Complex(rows),
        observations: None,
    })
}

fn octanary_entry<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let phase = match rng.random_range(0..4u8) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(-1.0, 0.0),
        2 => Complex64::new(0.0, 1.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let magnitude = if rng.random_range(0..5u8) < 4 { std::f64::consts::FRAC_1_SQRT_2 } else { 3f64.sqrt() };
    phase * magnitude
}

/// L octanary coded-diffraction masks of length n (m = L n).
pub fn sample_cdp(n: usize, l: usize, seed: u64) -> Result<MeasurementEnsemble> {
    if l == 0 {
        return Err(invalid("coded diffraction needs at least one mask"));
    }
    check_sizes(n, n * l)?;
    let mut rng = stream(seed, Purpose::Mask);
    let masks = (0..n * l).map(|_| octanary_entry(&mut rng)).collect();
    MeasurementEnsemble::from_masks(n, l, seed, masks)
}

/// Additive Gaussian noise on the observed magnitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Target SNR in dB; `f64::INFINITY` means no noise.
    pub snr_db: f64,
    pub seed: u64,
}

/// Add noise scaled so that `10 log10(sum y^2 / ||eta||^2)` equals the
/// requested SNR. Noisy magnitudes are kept as they are, negatives included.
pub fn add_noise(ensemble: MeasurementEnsemble, spec: NoiseSpec) -> Result<MeasurementEnsemble> {
    ensemble.with_noise(spec)
}

/// Serialized ensemble: Gaussian vectors are regenerated from the seed,
/// CDP masks are stored explicitly as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub kind: EnsembleKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<Vec<[f64; 2]>>,
}

impl MeasurementEnsemble {
    /// Ensemble with explicit real rows (m x n, row-major).
    pub fn from_real_rows(n: usize, rows: Vec<f64>, seed: u64) -> Result<MeasurementEnsemble> {
        if n == 0 || rows.is_empty() || !rows.len().is_multiple_of(n) {
            return Err(invalid("row buffer length must be a positive multiple of n"));
        }
        if rows.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        let m = rows.len() / n;
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::GaussianReal,
            n,
            m,
            seed,
            vectors: Vectors::Real(rows),
            observations: None,
        })
    }

    /// Ensemble with explicit complex rows; row j is the conjugate of a_j.
    pub fn from_complex_rows(n: usize, rows: Vec<Complex64>, seed: u64) -> Result<MeasurementEnsemble> {
        if n == 0 || rows.is_empty() || !rows.len().is_multiple_of(n) {
            return Err(invalid("row buffer length must be a positive multiple of n"));
        }
        let m = rows.len() / n;
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::GaussianComplex,
            n,
            m,
            seed,
            vectors: Vectors::Complex(rows),
            observations: None,
        })
    }

    /// Coded-diffraction ensemble from explicit masks (L x n, row-major).
    pub fn from_masks(n: usize, l: usize, seed: u64, masks: Vec<Complex64>) -> Result<MeasurementEnsemble> {
        if n == 0 || l == 0 {
            return Err(invalid("coded diffraction needs n >= 1 and L >= 1"));
        }
        check_dim(n * l, masks.len())?;
        Ok(MeasurementEnsemble {
            kind: EnsembleKind::Cdp,
            n,
            m: n * l,
            seed,
            vectors: Vectors::Cdp { masks, fft: FftPair::new(n) },
            observations: None,
        })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        self.kind.scalar_kind()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn observations(&self) -> Option<&[f64]> {
        self.observations.as_deref()
    }

    /// Number of masks for coded diffraction, `None` otherwise.
    pub fn num_masks(&self) -> Option<usize> {
        match &self.vectors {
            Vectors::Cdp { .. } => Some(self.m / self.n),
            _ => None,
        }
    }

    pub fn masks(&self) -> Option<&[Complex64]> {
        match &self.vectors {
            Vectors::Cdp { masks, .. } => Some(masks),
            _ => None,
        }
    }

    pub fn real_rows(&self) -> Option<&[f64]> {
        match &self.vectors {
            Vectors::Real(r) => Some(r),
            _ => None,
        }
    }

    pub fn complex_rows(&self) -> Option<&[Complex64]> {
        match &self.vectors {
            Vectors::Complex(r) => Some(r),
            _ => None,
        }
    }

    /// Replace the observations.
    pub fn with_observations(mut self, y: Vec<f64>) -> Result<MeasurementEnsemble> {
        check_dim(self.m, y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.observations = Some(y);
        Ok(self)
    }

    /// Set `y_j = |<a_j, x>|`.
    pub fn observe(self, x: &Signal) -> Result<MeasurementEnsemble> {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let z = self.forward(x)?;
        let y = z.abs_sqr().into_iter().map(f64::sqrt).collect();
        self.with_observations(y)
    }

    fn with_noise(self, spec: NoiseSpec) -> Result<MeasurementEnsemble> {
        if spec.snr_db.is_nan() || spec.snr_db == f64::NEG_INFINITY {
            return Err(invalid("snr_db must be finite or +inf"));
        }
        let y = self.observations.clone().ok_or(Error::MissingObservations)?;
        if spec.snr_db == f64::INFINITY {
            return Ok(self);
        }
        let mut rng = stream(spec.seed, Purpose::Noise);
        let mut eta: Vec<f64> = (0..self.m).map(|_| rng.sample(StandardNormal)).collect();
        let signal_energy: f64 = y.iter().map(|v| v * v).sum();
        let eta_energy: f64 = eta.iter().map(|v| v * v).sum();
        let target = signal_energy / 10f64.powf(spec.snr_db / 10.0);
        let c = if eta_energy > 0.0 { (target / eta_energy).sqrt() } else { 0.0 };
        eta.iter_mut().for_each(|e| *e *= c);
        let noisy = y.iter().zip(&eta).map(|(a, b)| a + b).collect();
        self.with_observations(noisy)
    }

    fn check_input(&self, u: &Signal) -> Result<()> {
        check_dim(self.n, u.len())?;
        if self.kind == EnsembleKind::GaussianReal && u.kind() == ScalarKind::Complex {
            return Err(Error::KindMismatch("a real ensemble requires a real signal".into()));
        }
        Ok(())
    }

    /// `z = A u` (length m). Real signals are promoted on complex ensembles.
    pub fn forward(&self, u: &Signal) -> Result<Signal> {
        self.check_input(u)?;
        let n = self.n;
        match &self.vectors {
            Vectors::Real(rows) => {
                let u = u.as_real().expect("checked above");
                Ok(Signal::Real(rows.chunks_exact(n).map(|r| dot(r, u)).collect()))
            }
            Vectors::Complex(rows) => {
                let uc = u.to_complex();
                let u = uc.as_complex().expect("promoted");
                Ok(Signal::Complex(rows.chunks_exact(n).map(|r| cdot(r, u)).collect()))
            }
            Vectors::Cdp { masks, fft } => {
                let uc = u.to_complex();
                let u = uc.as_complex().expect("promoted");
                let mut z = Vec::with_capacity(self.m);
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.forward.get_inplace_scratch_len()];
                for d in masks.chunks_exact(n) {
                    let start = z.len();
                    z.extend(d.iter().zip(u).map(|(a, b)| a * b));
                    fft.forward.process_with_scratch(&mut z[start..], &mut scratch);
                }
                Ok(Signal::Complex(z))
            }
        }
    }

    /// `A^H w` (length n).
    pub fn adjoint(&self, w: &Signal) -> Result<Signal> {
        check_dim(self.m, w.len())?;
        let n = self.n;
        match (&self.vectors, w) {
            (Vectors::Real(rows), Signal::Real(w)) => {
                let mut g = vec![0.0; n];
                for (r, &wj) in rows.chunks_exact(n).zip(w) {
                    if wj != 0.0 {
                        g.iter_mut().zip(r).for_each(|(gi, ri)| *gi += wj * ri);
                    }
                }
                Ok(Signal::Real(g))
            }
            (Vectors::Complex(rows), Signal::Complex(w)) => {
                let mut g = vec![Complex64::new(0.0, 0.0); n];
                for (r, &wj) in rows.chunks_exact(n).zip(w) {
                    if wj.re != 0.0 || wj.im != 0.0 {
                        g.iter_mut().zip(r).for_each(|(gi, ri)| *gi += ri.conj() * wj);
                    }
                }
                Ok(Signal::Complex(g))
            }
            (Vectors::Cdp { masks, fft }, Signal::Complex(w)) => {
                let mut g = vec![Complex64::new(0.0, 0.0); n];
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                let mut scratch = vec![Complex64::new(0.0, 0.0); fft.inverse.get_inplace_scratch_len()];
                for (d, wl) in masks.chunks_exact(n).zip(w.chunks_exact(n)) {
                    buf.copy_from_slice(wl);
                    fft.inverse.process_with_scratch(&mut buf, &mut scratch);
                    g.iter_mut().zip(d.iter().zip(&buf)).for_each(|(gi, (di, bi))| *gi += di.conj() * bi);
                }
                Ok(Signal::Complex(g))
            }
            _ => Err(Error::KindMismatch("adjoint input kind does not match the ensemble".into())),
        }
    }

    pub fn to_record(&self) -> EnsembleRecord {
        EnsembleRecord {
            kind: self.kind,
            n: self.n,
            m: self.m,
            seed: self.seed,
            y: self.observations.clone(),
            masks: self.masks().map(|ms| ms.iter().map(|c| [c.re, c.im]).collect()),
        }
    }

    /// Rebuild from a record. Gaussian vectors are regenerated from the seed.
    pub fn from_record(rec: &EnsembleRecord) -> Result<MeasurementEnsemble> {
        let ens = match rec.kind {
            EnsembleKind::GaussianReal => sample_gaussian_real(rec.n, rec.m, rec.seed)?,
            EnsembleKind::GaussianComplex => sample_gaussian_complex(rec.n, rec.m, rec.seed)?,
            EnsembleKind::Cdp => {
                if rec.n == 0 || !rec.m.is_multiple_of(rec.n) {
                    return Err(invalid("cdp record needs m to be a multiple of n"));
                }
                match &rec.masks {
                    Some(ms) => MeasurementEnsemble::from_masks(
                        rec.n,
                        rec.m / rec.n,
                        rec.seed,
                        ms.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
                    )?,
                    None => sample_cdp(rec.n, rec.m / rec.n, rec.seed)?,
                }
            }
        };
        check_dim(rec.m, ens.m)?;
        match &rec.y {
            Some(y) => ens.with_observations(y.clone()),
            None => Ok(ens),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize without reassociation flags
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re - x.im * y.im;
        im += x.re * y.im + x.im * y.re;
    }
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_models::sample_signal;

    #[test]
    fn real_sampler_moments() {
        let e = sample_gaussian_real(4, 250_000, 7).unwrap();
        let rows = e.real_rows().unwrap();
        let mean = rows.iter().sum::<f64>() / rows.len() as f64;
        let var = rows.iter().map(|a| a * a).sum::<f64>() / rows.len() as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn complex_sampler_second_moment() {
        let e = sample_gaussian_complex(2, 500_000, 1).unwrap();
        let rows = e.complex_rows().unwrap();
        let m2 = rows.iter().map(|a| a.norm_sqr()).sum::<f64>() / rows.len() as f64;
        assert!((m2 - 1.0).abs() < 0.01, "{m2}");
    }

    #[test]
    fn row_norms_concentrate() {
        let e = sample_gaussian_real(128, 768, 42).unwrap();
        let rows = e.real_rows().unwrap();
        let mean = rows.chunks_exact(128).map(|r| r.iter().map(|a| a * a).sum::<f64>() / 128.0).sum::<f64>() / 768.0;
        assert!((mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn samplers_are_deterministic() {
        let a = sample_gaussian_real(1, 1, 11).unwrap();
        let b = sample_gaussian_real(1, 1, 11).unwrap();
        assert_eq!(a.real_rows(), b.real_rows());
        let a = sample_gaussian_complex(3, 5, 2).unwrap();
        let b = sample_gaussian_complex(3, 5, 2).unwrap();
        assert_eq!(a.complex_rows(), b.complex_rows());
        let a = sample_cdp(8, 3, 2).unwrap();
        let b = sample_cdp(8, 3, 2).unwrap();
        assert_eq!(a.masks(), b.masks());
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(sample_gaussian_real(0, 3, 1).is_err());
        assert!(sample_gaussian_complex(3, 0, 1).is_err());
        assert!(sample_cdp(8, 0, 1).is_err());
    }

    #[test]
    fn cdp_sizes_and_mask_law() {
        let e = sample_cdp(8, 2, 5).unwrap();
        assert_eq!(e.m(), 16);
        let big = sample_cdp(1024, 200, 9).unwrap();
        let ms = big.masks().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for d in ms {
            let r = d.norm();
            assert!((r - h).abs() < 1e-15 || (r - 3f64.sqrt()).abs() < 1e-15);
            assert!(d.re == 0.0 || d.im == 0.0);
        }
        let m2 = ms.iter().map(|d| d.norm_sqr()).sum::<f64>() / ms.len() as f64;
        assert!((m2 - 1.0).abs() < 0.01, "{m2}");
    }

    #[test]
    fn cdp_parseval_identity() {
        let n = 64;
        let e = sample_cdp(n, 5, 3).unwrap();
        let x = sample_signal(n, ScalarKind::Complex, 8);
        let z = e.forward(&x).unwrap();
        let lhs = z.norm_sqr();
        let xs = x.as_complex().unwrap();
        let rhs: f64 = e
            .masks()
            .unwrap()
            .chunks_exact(n)
            .map(|d| d.iter().zip(xs).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>())
            .sum::<f64>()
            * n as f64;
        assert!((lhs - rhs).abs() <= 1e-10 * rhs);
    }

    #[test]
    fn cdp_matches_dense_dft() {
        let n = 6;
        let e = sample_cdp(n, 2, 4).unwrap();
        let x = sample_signal(n, ScalarKind::Complex, 2);
        let z = e.forward(&x).unwrap();
        let xs = x.as_complex().unwrap();
        let ms = e.masks().unwrap();
        for l in 0..2 {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let w = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (i * k) as f64 / n as f64);
                    acc += w * ms[l * n + i] * xs[i];
                }
                assert!((acc - z.as_complex().unwrap()[l * n + k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_identity_all_kinds() {
        let n = 12;
        let ensembles = [
            sample_gaussian_real(n, 30, 1).unwrap(),
            sample_gaussian_complex(n, 30, 1).unwrap(),
            sample_cdp(n, 3, 1).unwrap(),
        ];
        for e in ensembles {
            let k = e.scalar_kind();
            let u = sample_signal(n, k, 3);
            let w = sample_signal(e.m(), k, 4);
            let lhs = w.inner(&e.forward(&u).unwrap()).unwrap();
            let rhs = e.adjoint(&w).unwrap().inner(&u).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()), "{:?}", e.kind());
        }
    }

    #[test]
    fn observe_examples() {
        let e = MeasurementEnsemble::from_real_rows(2, vec![1.0, 1.0], 0).unwrap();
        let o = e.observe(&Signal::Real(vec![3.0, -4.0])).unwrap();
        assert_eq!(o.observations().unwrap(), &[1.0]);

        let e = sample_gaussian_complex(5, 10, 3).unwrap();
        let z = e.clone().observe(&Signal::zeros(5, ScalarKind::Complex)).unwrap();
        assert!(z.observations().unwrap().iter().all(|&v| v == 0.0));
        let x = sample_signal(5, ScalarKind::Complex, 1);
        let a = e.clone().observe(&x).unwrap();
        let b = e.observe(&x.scaled(-1.0)).unwrap();
        assert_eq!(a.observations(), b.observations());
    }

    #[test]
    fn observe_rejects_mismatch() {
        let e = sample_gaussian_real(3, 4, 1).unwrap();
        assert!(matches!(e.clone().observe(&Signal::Real(vec![1.0; 2])), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(e.observe(&Signal::zeros(3, ScalarKind::Complex)), Err(Error::KindMismatch(_))));
    }

    #[test]
    fn noise_hits_requested_snr() {
        let x = sample_signal(16, ScalarKind::Real, 2);
        let e = sample_gaussian_real(16, 128, 5).unwrap().observe(&x).unwrap();
        let clean = e.observations().unwrap().to_vec();
        let spec = NoiseSpec { snr_db: 27.5, seed: 3 };
        let noisy = add_noise(e.clone(), spec).unwrap();
        let again = add_noise(e.clone(), spec).unwrap();
        assert_eq!(noisy.observations(), again.observations());
        let y = noisy.observations().unwrap();
        let eta2: f64 = y.iter().zip(&clean).map(|(a, b)| (a - b) * (a - b)).sum();
        let s2: f64 = clean.iter().map(|a| a * a).sum();
        assert!((10.0 * (s2 / eta2).log10() - 27.5).abs() < 1e-9);
        let same = add_noise(e, NoiseSpec { snr_db: f64::INFINITY, seed: 1 }).unwrap();
        assert_eq!(same.observations().unwrap(), &clean[..]);
    }

    #[test]
    fn noise_needs_observations() {
        let e = sample_gaussian_real(3, 4, 1).unwrap();
        assert!(matches!(add_noise(e, NoiseSpec { snr_db: 10.0, seed: 0 }), Err(Error::MissingObservations)));
    }

    #[test]
    fn record_roundtrip() {
        for e in [sample_gaussian_real(4, 9, 3).unwrap(), sample_cdp(8, 2, 3).unwrap()] {
            let x = sample_signal(e.n(), e.scalar_kind(), 1);
            let e = e.observe(&x).unwrap();
            let json = serde_json::to_string(&e.to_record()).unwrap();
            let back = MeasurementEnsemble::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
            assert_eq!(back.observations(), e.observations());
            assert_eq!(back.real_rows(), e.real_rows());
            assert_eq!(back.masks(), e.masks());
        }
    }
}
