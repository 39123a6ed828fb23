//! Deterministic quadrature for expectations over standard normal variables.
//!
//! Two-dimensional expectations are computed in polar coordinates: the
//! integrands of interest are products of square roots of quadratic forms,
//! which are smooth along rays and only lose smoothness on finitely many
//! lines through the origin. Splitting the angular integral at those lines
//! gives spectral accuracy even when the smoothing parameter is tiny.

use std::f64::consts::{PI, TAU};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1, "need at least one node");
    if k == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    let half = k.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=k {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[k - 1 - i] = z;
        w[i] = wi;
        w[k - 1 - i] = wi;
    }
    if k % 2 == 1 {
        x[k / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Hermite rule for `E f(X)`, `X ~ N(0, 1)`: nodes and weights summing to one.
pub fn gauss_hermite(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1, "need at least one node");
    // Newton iteration on orthonormal physicists' Hermite functions.
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; k];
    let mut w = vec![0.0; k];
    let nf = k as f64;
    let mut z = 0.0;
    for i in 0..k.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..k {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[k - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[k - 1 - i] = w[i];
    }
    if k % 2 == 1 {
        x[k / 2] = 0.0;
    }
    // exp(-t^2) weight to the standard normal density
    let s = std::f64::consts::SQRT_2;
    let norm = PI.sqrt();
    let nodes: Vec<f64> = x.iter().rev().map(|v| v * s).collect();
    let weights: Vec<f64> = w.iter().rev().map(|v| v / norm).collect();
    (nodes, weights)
}

/// Composite polar and Cartesian Gauss-Legendre rules for Gaussian expectations.
#[derive(Clone, Debug)]
pub struct Quadrature {
    cutoff: f64,
    panels: usize,
    radial: (Vec<f64>, Vec<f64>),
    angular: (Vec<f64>, Vec<f64>),
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::new(12.0, 12, 20, 64)
    }
}

impl Quadrature {
    /// `panels` unit-width radial panels up to `cutoff`, with `radial_nodes`
    /// per panel and `angular_nodes` per smooth angular piece.
    pub fn new(cutoff: f64, panels: usize, radial_nodes: usize, angular_nodes: usize) -> Self {
        Quadrature { cutoff, panels, radial: gauss_legendre(radial_nodes), angular: gauss_legendre(angular_nodes) }
    }

    /// Rule with twice the nodes in every direction.
    pub fn refined(&self) -> Self {
        Quadrature::new(self.cutoff, self.panels * 2, self.radial.0.len(), self.angular.0.len() * 2)
    }

    fn panel_nodes(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let width = (hi - lo) / self.panels as f64;
        (0..self.panels).flat_map(move |p| {
            let a = lo + p as f64 * width;
            self.radial.0.iter().zip(&self.radial.1).map(move |(x, w)| (a + 0.5 * width * (x + 1.0), 0.5 * width * w))
        })
    }

    /// `E f(X)` for `X ~ N(0, 1)`.
    pub fn expect_1d(&self, f: impl Fn(f64) -> f64) -> f64 {
        let c = 1.0 / (TAU).sqrt();
        self.panel_nodes(-self.cutoff, self.cutoff).map(|(x, w)| w * c * (-0.5 * x * x).exp() * f(x)).sum()
    }

    /// `E f(X, Y)` for independent standard normals. `kinks` lists angles
    /// where `theta -> f(r cos theta, r sin theta)` may fail to be smooth.
    pub fn expect_2d(&self, f: impl Fn(f64, f64) -> f64, kinks: &[f64]) -> f64 {
        let mut cuts: Vec<f64> = kinks.iter().map(|k| k.rem_euclid(TAU)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        if cuts.is_empty() {
            cuts.push(0.0);
        }
        let first = cuts[0];
        if cuts.len() > 1 && (first + TAU - cuts[cuts.len() - 1]) < 1e-14 {
            cuts.pop();
        }
        cuts.push(first + TAU);
        let radial: Vec<(f64, f64)> =
            self.panel_nodes(0.0, self.cutoff).map(|(r, w)| (r, w * r * (-0.5 * r * r).exp())).collect();
        let mut total = 0.0;
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let half = 0.5 * (b - a);
            for (x, wt) in self.angular.0.iter().zip(&self.angular.1) {
                let th = a + half * (x + 1.0);
                let (s, c) = th.sin_cos();
                let inner: f64 = radial.iter().map(|&(r, w)| w * f(r * c, r * s)).sum();
                total += half * wt * inner;
            }
        }
        total / TAU
    }
}

/// Trapezoid rule for a smooth periodic function over one period `[a, a + period)`.
pub fn periodic_trapezoid(f: impl Fn(f64) -> f64, a: f64, period: f64, k: usize) -> f64 {
    let h = period / k as f64;
    (0..k).map(|i| f(a + i as f64 * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        for k in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(k);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * k) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - exact).abs() < 1e-12, "k={k} deg={deg}");
            }
        }
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        for k in [1, 4, 20, 64, 100] {
            let (x, w) = gauss_hermite(k);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "k={k}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            let mut dfact = 1.0;
            for deg in (0..(2 * k).min(24)).step_by(2) {
                if deg > 0 {
                    dfact *= (deg - 1) as f64;
                }
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((got - dfact).abs() < 1e-10 * dfact, "k={k} deg={deg} {got} vs {dfact}");
            }
        }
    }

    #[test]
    fn polar_rule_matches_known_expectations() {
        let q = Quadrature::default();
        assert!((q.expect_2d(|_, _| 1.0, &[]) - 1.0).abs() < 1e-13);
        assert!((q.expect_2d(|x, y| x * x * y * y, &[]) - 1.0).abs() < 1e-12);
        assert!((q.expect_2d(|x, _| x.powi(4), &[0.3]) - 3.0).abs() < 1e-12);
        // E|X||Y| = 2/pi, kinks on both axes
        let k = [0.0, PI / 2.0, PI, 1.5 * PI];
        assert!((q.expect_2d(|x, y| x.abs() * y.abs(), &k) - 2.0 / PI).abs() < 1e-13);
        assert!((q.expect_1d(|x| x * x) - 1.0).abs() < 1e-13);
        assert!((q.expect_1d(f64::abs) - (2.0 / PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn refined_rule_agrees() {
        let q = Quadrature::default();
        let f = |x: f64, y: f64| (1.0 + (0.6 * x + 0.8 * y).powi(2)).sqrt() * (1.0 + x * x).sqrt();
        let a = q.expect_2d(f, &[]);
        let b = q.refined().expect_2d(f, &[]);
        assert!((a - b).abs() < 1e-9);
        let (x, w) = gauss_hermite(96);
        let mut gh = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                gh += w[i] * w[j] * f(x[i], x[j]);
            }
        }
        assert!((a - gh).abs() < 1e-7, "{a} vs {gh}");
    }

    #[test]
    fn trapezoid_is_spectral_for_periodic() {
        let v = periodic_trapezoid(|t| (1.0 + 0.5 * t.cos()).sqrt(), 0.0, TAU, 64);
        let w = periodic_trapezoid(|t| (1.0 + 0.5 * t.cos()).sqrt(), 0.3, TAU, 128);
        assert!((v - w).abs() < 1e-13);
    }
}
