use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarKind {
    Real,
    Complex,
}

impl std::fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalarKind::Real => "real",
            ScalarKind::Complex => "complex",
        })
    }
}

/// A real or complex n-vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "entries", rename_all = "snake_case")]
pub enum Signal {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Signal {
    pub fn zeros(n: usize, kind: ScalarKind) -> Signal {
        match kind {
            ScalarKind::Real => Signal::Real(vec![0.0; n]),
            ScalarKind::Complex => Signal::Complex(vec![Complex64::new(0.0, 0.0); n]),
        }
    }

    /// The `i`-th standard basis vector.
    pub fn basis(n: usize, i: usize, kind: ScalarKind) -> Signal {
        let mut s = Signal::zeros(n, kind);
        match &mut s {
            Signal::Real(v) => v[i] = 1.0,
            Signal::Complex(v) => v[i] = Complex64::new(1.0, 0.0),
        }
        s
    }

    pub fn len(&self) -> usize {
        match self {
            Signal::Real(v) => v.len(),
            Signal::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Signal::Real(_) => ScalarKind::Real,
            Signal::Complex(_) => ScalarKind::Complex,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Signal::Real(v) => v.iter().all(|a| a.is_finite()),
            Signal::Complex(v) => v.iter().all(|a| a.re.is_finite() && a.im.is_finite()),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            Signal::Real(v) => v.iter().map(|a| a * a).sum(),
            Signal::Complex(v) => v.iter().map(|a| a.norm_sqr()).sum(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Promote to complex entries (a no-op for complex signals).
    pub fn to_complex(&self) -> Signal {
        match self {
            Signal::Real(v) => Signal::Complex(v.iter().map(|&a| Complex64::new(a, 0.0)).collect()),
            Signal::Complex(_) => self.clone(),
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Signal::Real(v) => Some(v),
            Signal::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&[Complex64]> {
        match self {
            Signal::Complex(v) => Some(v),
            Signal::Real(_) => None,
        }
    }

    pub fn scale(&mut self, c: f64) {
        match self {
            Signal::Real(v) => v.iter_mut().for_each(|a| *a *= c),
            Signal::Complex(v) => v.iter_mut().for_each(|a| *a *= c),
        }
    }

    pub fn scaled(&self, c: f64) -> Signal {
        let mut s = self.clone();
        s.scale(c);
        s
    }

    /// Multiply by a unit-modulus phase. Real signals only accept ±1.
    pub fn rotated(&self, phase: Complex64) -> Result<Signal> {
        match self {
            Signal::Real(v) => {
                if phase.im == 0.0 && phase.re.abs() == 1.0 {
                    Ok(Signal::Real(v.iter().map(|a| a * phase.re).collect()))
                } else {
                    Err(Error::KindMismatch("complex phase applied to a real signal".into()))
                }
            }
            Signal::Complex(v) => Ok(Signal::Complex(v.iter().map(|a| a * phase).collect())),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Signal) -> Result<()> {
        check_dim(self.len(), other.len())?;
        match (self, other) {
            (Signal::Real(u), Signal::Real(v)) => u.iter_mut().zip(v).for_each(|(p, q)| *p += a * q),
            (Signal::Complex(u), Signal::Complex(v)) => u.iter_mut().zip(v).for_each(|(p, q)| *p += q * a),
            _ => return Err(Error::KindMismatch("axpy on signals of different kinds".into())),
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        let mut d = self.clone();
        d.axpy(-1.0, other)?;
        Ok(d)
    }

    /// Real inner product of the underlying real vectors, `Re <self, other>`.
    pub fn dot_re(&self, other: &Signal) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        match (self, other) {
            (Signal::Real(u), Signal::Real(v)) => Ok(u.iter().zip(v).map(|(p, q)| p * q).sum()),
            (Signal::Complex(u), Signal::Complex(v)) => {
                Ok(u.iter().zip(v).map(|(p, q)| p.re * q.re + p.im * q.im).sum())
            }
            _ => Err(Error::KindMismatch("inner product of signals of different kinds".into())),
        }
    }

    /// Conjugate inner product `self^H other` (the plain dot product when real).
    pub fn inner(&self, other: &Signal) -> Result<Complex64> {
        check_dim(self.len(), other.len())?;
        match (self, other) {
            (Signal::Real(u), Signal::Real(v)) => Ok(Complex64::new(u.iter().zip(v).map(|(p, q)| p * q).sum(), 0.0)),
            (Signal::Complex(u), Signal::Complex(v)) => Ok(u.iter().zip(v).map(|(p, q)| p.conj() * q).sum()),
            _ => Err(Error::KindMismatch("inner product of signals of different kinds".into())),
        }
    }

    /// Multiply entry `j` by the real weight `w[j]`.
    pub fn mul_weights(&mut self, w: &[f64]) {
        match self {
            Signal::Real(v) => v.iter_mut().zip(w).for_each(|(a, b)| *a *= b),
            Signal::Complex(v) => v.iter_mut().zip(w).for_each(|(a, b)| *a *= b),
        }
    }

    /// Squared moduli of the entries.
    pub fn abs_sqr(&self) -> Vec<f64> {
        match self {
            Signal::Real(v) => v.iter().map(|a| a * a).collect(),
            Signal::Complex(v) => v.iter().map(|a| a.norm_sqr()).collect(),
        }
    }

    /// Normalized copy; errors on the zero vector.
    pub fn normalized(&self) -> Result<Signal> {
        let nrm = self.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(self.scaled(1.0 / nrm))
    }

    /// Flatten to interleaved real coordinates (re, im, re, im, ...) for
    /// complex signals, or the entries themselves for real ones.
    pub fn to_real_coords(&self) -> Vec<f64> {
        match self {
            Signal::Real(v) => v.clone(),
            Signal::Complex(v) => v.iter().flat_map(|a| [a.re, a.im]).collect(),
        }
    }

    /// Inverse of [`Signal::to_real_coords`].
    pub fn from_real_coords(coords: &[f64], kind: ScalarKind) -> Signal {
        match kind {
            ScalarKind::Real => Signal::Real(coords.to_vec()),
            ScalarKind::Complex => {
                Signal::Complex(coords.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
            }
        }
    }
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var_per_part: f64) -> Complex64 {
    let s = var_per_part.sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Gaussian vector with i.i.d. entries; complex entries use `unit_part_variance`
/// to choose between N(0,1)+iN(0,1) (`true`) and N(0,1/2)+iN(0,1/2) (`false`).
pub(crate) fn gaussian_vector<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    kind: ScalarKind,
    unit_part_variance: bool,
) -> Signal {
    match kind {
        ScalarKind::Real => Signal::Real((0..n).map(|_| rng.sample(StandardNormal)).collect()),
        ScalarKind::Complex => {
            let v = if unit_part_variance { 1.0 } else { 0.5 };
            Signal::Complex((0..n).map(|_| complex_normal(rng, v)).collect())
        }
    }
}

/// Ground-truth test signal: standard Gaussian entries, with independent
/// N(0,1) real and imaginary parts in the complex case.
pub fn sample_signal(n: usize, kind: ScalarKind, seed: u64) -> Signal {
    let mut rng = crate::rng::stream(seed, crate::rng::Purpose::Signal);
    gaussian_vector(&mut rng, n, kind, true)
}

/// Uniformly distributed unit vector.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize, kind: ScalarKind) -> Signal {
    loop {
        let v = gaussian_vector(rng, n, kind, false);
        if let Ok(u) = v.normalized() {
            return u;
        }
    }
}

/// Distance modulo the global phase: `min_phi ||u - e^{i phi} x||`.
///
/// The minimizing phase is `arg(x^H u)`; the difference is formed explicitly
/// rather than through the expanded quadratic so that tiny distances keep
/// full relative precision.
pub fn distance(u: &Signal, x: &Signal) -> Result<f64> {
    check_dim(x.len(), u.len())?;
    match (u, x) {
        (Signal::Real(a), Signal::Real(b)) => {
            let minus: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
            let plus: f64 = a.iter().zip(b).map(|(p, q)| (p + q) * (p + q)).sum();
            Ok(minus.min(plus).sqrt())
        }
        (Signal::Complex(a), Signal::Complex(b)) => {
            let c: Complex64 = b.iter().zip(a).map(|(p, q)| p.conj() * q).sum();
            let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
            Ok(a.iter().zip(b).map(|(p, q)| (p - phase * q).norm_sqr()).sum::<f64>().sqrt())
        }
        _ => Err(Error::KindMismatch("distance between signals of different kinds".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn distance_is_phase_invariant() {
        let x = sample_signal(16, ScalarKind::Complex, 3);
        assert_eq!(distance(&x, &x).unwrap(), 0.0);
        let ix = x.rotated(Complex64::new(0.0, 1.0)).unwrap();
        assert!(distance(&ix, &x).unwrap() < 1e-12);
        let xr = sample_signal(16, ScalarKind::Real, 3);
        assert_eq!(distance(&xr.scaled(-1.0), &xr).unwrap(), 0.0);
    }

    #[test]
    fn distance_rejects_mismatch() {
        let a = Signal::Real(vec![1.0; 3]);
        let b = Signal::Real(vec![1.0; 4]);
        assert!(matches!(distance(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(distance(&a, &a.to_complex()).is_err());
    }

    #[test]
    fn tiny_distances_keep_precision() {
        let x = sample_signal(32, ScalarKind::Complex, 5);
        let mut u = x.rotated(Complex64::from_polar(1.0, 0.7)).unwrap();
        let mut e = Signal::zeros(32, ScalarKind::Complex);
        if let Signal::Complex(v) = &mut e {
            v[3] = Complex64::new(1e-12, 0.0);
        }
        u.axpy(1.0, &e).unwrap();
        let d = distance(&u, &x).unwrap();
        assert!((d - 1e-12).abs() < 1e-14, "{d}");
    }

    #[test]
    fn random_unit_has_unit_norm() {
        let mut rng = stream(1, Purpose::Probe);
        for kind in [ScalarKind::Real, ScalarKind::Complex] {
            let u = random_unit(&mut rng, 10, kind);
            assert!((u.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn real_coords_roundtrip() {
        let x = sample_signal(5, ScalarKind::Complex, 1);
        let c = x.to_real_coords();
        assert_eq!(Signal::from_real_coords(&c, ScalarKind::Complex), x);
    }
}
