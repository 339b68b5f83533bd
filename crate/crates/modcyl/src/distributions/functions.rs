//! Test functions on the interval and two-component test spinors.

use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry, IntervalPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type PointFn = Arc<dyn Fn(&IntervalPoint) -> Complex64 + Send + Sync>;
pub type RealFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    /// Smooth and vanishing to all orders at `±ℓ`.
    SchwartzLike,
    /// Square integrable only; no accuracy guarantee for `δ'` or PV parts.
    L2,
}

#[derive(Clone)]
enum Eval {
    Plain(RealFn),
    Point { f: PointFn, geo: Geometry },
}

/// A complex function on `[-ℓ, ℓ]` (or `[0, L]` in full-circle contexts).
#[derive(Clone)]
pub struct TestFunction1D {
    eval: Eval,
    deriv: Option<RealFn>,
    support: (f64, f64),
    smoothness: Smoothness,
    samples: Option<Arc<Vec<Complex64>>>,
}

impl std::fmt::Debug for TestFunction1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction1D")
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .field("has_derivative", &self.deriv.is_some())
            .field("sampled", &self.samples.is_some())
            .finish()
    }
}

impl TestFunction1D {
    /// Wrap a plain callable vanishing outside `support`.
    pub fn new<F>(f: F, support: (f64, f64), smoothness: Smoothness) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        TestFunction1D {
            eval: Eval::Plain(Arc::new(f)),
            deriv: None,
            support,
            smoothness,
            samples: None,
        }
    }

    /// Wrap a callable that reads the endpoint-accurate point data.
    pub fn from_point_fn<F>(geo: &Geometry, f: F, support: (f64, f64), smoothness: Smoothness) -> Self
    where
        F: Fn(&IntervalPoint) -> Complex64 + Send + Sync + 'static,
    {
        TestFunction1D {
            eval: Eval::Point {
                f: Arc::new(f),
                geo: *geo,
            },
            deriv: None,
            support,
            smoothness,
            samples: None,
        }
    }

    /// The zero function, with empty support.
    pub fn zero() -> Self {
        TestFunction1D::new(|_| Complex64::new(0.0, 0.0), (0.0, 0.0), Smoothness::SchwartzLike)
    }

    /// Samples on the midpoint grid of `n = values.len()` cells, joined by
    /// local cubic Lagrange interpolation.
    pub fn from_samples(geo: &Geometry, values: Vec<Complex64>) -> Result<Self> {
        let n = values.len();
        if n < 4 {
            return Err(Error::Invalid("need at least four samples".into()));
        }
        let l = geo.half_width();
        let dx = 2.0 * l / n as f64;
        let vals = Arc::new(values);
        let v2 = vals.clone();
        let f = move |x: f64| {
            if !(-l..=l).contains(&x) {
                return Complex64::new(0.0, 0.0);
            }
            let s = (x + l) / dx - 0.5;
            let j0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..4 {
                let mut w = 1.0;
                for k in 0..4 {
                    if k != i {
                        w *= (s - (j0 + k) as f64) / (i as f64 - k as f64);
                    }
                }
                acc += v2[j0 + i] * w;
            }
            acc
        };
        let mut tf = TestFunction1D::new(f, (-l, l), Smoothness::L2);
        tf.samples = Some(vals);
        Ok(tf)
    }

    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(d));
        self
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn samples(&self) -> Option<&[Complex64]> {
        self.samples.as_deref().map(|v| v.as_slice())
    }

    pub fn in_support(&self, x: f64) -> bool {
        x >= self.support.0 && x <= self.support.1
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if !self.in_support(x) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.eval {
            Eval::Plain(f) => f(x),
            Eval::Point { f, geo } => match geo.point(x) {
                Ok(p) => f(&p),
                Err(_) => Complex64::new(0.0, 0.0),
            },
        }
    }

    pub fn eval_point(&self, p: &IntervalPoint) -> Complex64 {
        if !self.in_support(p.x) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.eval {
            Eval::Plain(f) => f(p.x),
            Eval::Point { f, .. } => f(p),
        }
    }

    /// `f'(x)`: analytic when supplied, otherwise fourth-order central
    /// differences with step `2ℓ·1e-4`.
    pub fn derivative(&self, geo: &Geometry, x: f64) -> Result<Complex64> {
        if let Some(d) = &self.deriv {
            return Ok(if self.in_support(x) { d(x) } else { Complex64::new(0.0, 0.0) });
        }
        if self.smoothness == Smoothness::L2 {
            return Err(Error::Precision(
                "derivative of an L2-only test function requested".into(),
            ));
        }
        let h = 2.0 * geo.half_width() * 1e-4;
        let f = |y: f64| self.eval(y);
        Ok((f(x - 2.0 * h) - f(x + 2.0 * h) + 8.0 * (f(x + h) - f(x - h))) / (12.0 * h))
    }

    /// Values at a list of positions.
    pub fn sample(&self, xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let mut out = self.map(|z| z.conj());
        out.deriv = self.deriv.clone().map(|d| -> RealFn { Arc::new(move |x| d(x).conj()) });
        out
    }

    /// Multiply by a constant.
    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.map(move |z| z * c);
        out.deriv = self.deriv.clone().map(|d| -> RealFn { Arc::new(move |x| d(x) * c) });
        out
    }

    fn map<G>(&self, g: G) -> Self
    where
        G: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let eval = match &self.eval {
            Eval::Plain(f) => {
                let f = f.clone();
                Eval::Plain(Arc::new(move |x| g(f(x))))
            }
            Eval::Point { f, geo } => {
                let f = f.clone();
                Eval::Point {
                    f: Arc::new(move |p| g(f(p))),
                    geo: *geo,
                }
            }
        };
        TestFunction1D {
            eval,
            deriv: None,
            support: self.support,
            smoothness: self.smoothness,
            samples: None,
        }
    }
}

/// Two-chirality test function.
#[derive(Clone, Debug)]
pub struct TestSpinor {
    pub f1: TestFunction1D,
    pub f2: TestFunction1D,
}

impl TestSpinor {
    pub fn new(f1: TestFunction1D, f2: TestFunction1D) -> Self {
        TestSpinor { f1, f2 }
    }

    pub fn only(a: Chirality, f: TestFunction1D) -> Self {
        match a {
            Chirality::One => TestSpinor::new(f, TestFunction1D::zero()),
            Chirality::Two => TestSpinor::new(TestFunction1D::zero(), f),
        }
    }

    pub fn component(&self, a: Chirality) -> &TestFunction1D {
        match a {
            Chirality::One => &self.f1,
            Chirality::Two => &self.f2,
        }
    }

    pub fn eval(&self, x: f64) -> [Complex64; 2] {
        [self.f1.eval(x), self.f2.eval(x)]
    }

    pub fn eval_point(&self, p: &IntervalPoint) -> [Complex64; 2] {
        [self.f1.eval_point(p), self.f2.eval_point(p)]
    }

    pub fn conj(&self) -> Self {
        TestSpinor::new(self.f1.conj(), self.f2.conj())
    }
}

/// Probe families used by tests, examples and the verification suite.
pub mod probes {
    use super::*;

    /// Gaussian in `x`, cut where it drops below `e^{-36}`.
    pub fn gaussian_x(geo: &Geometry, center: f64, width: f64, phase_k: f64) -> TestFunction1D {
        let l = geo.half_width();
        let cut = 8.5 * width;
        let support = ((center - cut).max(-l), (center + cut).min(l));
        let smooth = if support.0 > -l && support.1 < l {
            Smoothness::SchwartzLike
        } else {
            Smoothness::L2
        };
        let f = move |x: f64| {
            let u = (x - center) / width;
            Complex64::from_polar((-0.5 * u * u).exp(), phase_k * x)
        };
        let d = move |x: f64| {
            let u = (x - center) / width;
            Complex64::from_polar((-0.5 * u * u).exp(), phase_k * x)
                * Complex64::new(-u / width, phase_k)
        };
        TestFunction1D::new(f, support, smooth).with_derivative(d)
    }

    /// Gaussian in the coordinate `Ω₁`: `exp(-(Ω₁(x)-c)²/(2w²))`. These are
    /// Schwartz functions of `Ω₁` and vanish to all orders at `±ℓ`.
    pub fn gaussian_omega(geo: &Geometry, center: f64, width: f64, phase: f64) -> TestFunction1D {
        let cut = 9.0 * width;
        let lo = geo.point_at_omega(center - cut).x;
        let hi = geo.point_at_omega(center + cut).x;
        let g = *geo;
        let f = move |p: &IntervalPoint| {
            let u = (p.omega1 - center) / width;
            Complex64::from_polar((-0.5 * u * u).exp(), phase * p.omega1)
        };
        let d = move |x: f64| match g.point(x) {
            Ok(p) if p.omega1.is_finite() => {
                let u = (p.omega1 - center) / width;
                Complex64::from_polar((-0.5 * u * u).exp(), phase * p.omega1)
                    * Complex64::new(-u / width, phase)
                    * g.omega1_prime(&p)
            }
            _ => Complex64::new(0.0, 0.0),
        };
        TestFunction1D::from_point_fn(geo, f, (lo, hi), Smoothness::SchwartzLike).with_derivative(d)
    }

    /// `exp(-(Ω₁(x)-c)²/(2w²) + i·phase·Ω₁(x)) / sqrt(P(x))`. The weighted
    /// transform `∫ f(x) sqrt(P(x)) e^{isΩ₁(x)} dx/(...)` is then an exact
    /// Gaussian in `s`, so spectral integrals of these probes have
    /// Gaussian tails.
    pub fn spectral_gaussian(geo: &Geometry, center: f64, width: f64, phase: f64) -> TestFunction1D {
        let cut = 9.0 * width;
        let lo = geo.point_at_omega(center - cut).x;
        let hi = geo.point_at_omega(center + cut).x;
        let g = *geo;
        let f = move |p: &IntervalPoint| {
            let u = (p.omega1 - center) / width;
            Complex64::from_polar((-0.5 * u * u).exp() / g.endpoint_product(p).sqrt(), phase * p.omega1)
        };
        let d = move |x: f64| match g.point(x) {
            Ok(p) if p.omega1.is_finite() => {
                let u = (p.omega1 - center) / width;
                let pp = g.endpoint_product(&p);
                let dp = -g.k() * (2.0 * g.k() * x).sin();
                Complex64::from_polar((-0.5 * u * u).exp() / pp.sqrt(), phase * p.omega1)
                    * (Complex64::new(-u / width, phase) * g.omega1_prime(&p) - 0.5 * dp / pp)
            }
            _ => Complex64::new(0.0, 0.0),
        };
        TestFunction1D::from_point_fn(geo, f, (lo, hi), Smoothness::SchwartzLike).with_derivative(d)
    }

    /// `exp(1 - 1/(1-u²))` with `u = (x-c)/r`, compactly supported.
    pub fn bump(center: f64, radius: f64) -> TestFunction1D {
        let f = move |x: f64| {
            let u = (x - center) / radius;
            if u.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new((1.0 - 1.0 / (1.0 - u * u)).exp(), 0.0)
            }
        };
        let d = move |x: f64| {
            let u = (x - center) / radius;
            if u.abs() >= 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                let q = 1.0 - u * u;
                Complex64::new((1.0 - 1.0 / q).exp() * (-2.0 * u / (q * q)) / radius, 0.0)
            }
        };
        TestFunction1D::new(f, (center - radius, center + radius), Smoothness::SchwartzLike)
            .with_derivative(d)
    }

    /// Standard spinor probe: Ω-Gaussians of width `w` at `±c` in the two
    /// chiralities, with a relative phase.
    pub fn omega_pair(geo: &Geometry, c: f64, w: f64) -> TestSpinor {
        TestSpinor::new(
            gaussian_omega(geo, c, w, 0.0),
            gaussian_omega(geo, -c, w, 0.0).scale(Complex64::from_polar(0.5, PI / 3.0)),
        )
    }

    /// A second, differently shaped probe for bilinear checks.
    pub fn omega_pair_alt(geo: &Geometry, c: f64, w: f64) -> TestSpinor {
        TestSpinor::new(
            gaussian_omega(geo, -0.5 * c, 1.2 * w, 0.4).scale(Complex64::new(0.8, -0.3)),
            gaussian_omega(geo, 0.7 * c, w, -0.3),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn support_and_eval() {
        let g = Geometry::desk();
        let f = probes::gaussian_x(&g, 0.3, 0.05, 0.0);
        assert_eq!(f.eval(0.3).re, 1.0);
        assert_eq!(f.eval(0.9), Complex64::new(0.0, 0.0));
        assert_eq!(f.smoothness(), Smoothness::SchwartzLike);
    }

    #[test]
    fn numeric_derivative_matches_analytic() {
        let g = Geometry::desk();
        let f = probes::gaussian_omega(&g, 0.2, 0.7, 0.3);
        let plain = TestFunction1D::from_point_fn(
            &g,
            {
                let f = f.clone();
                move |p| f.eval_point(p)
            },
            f.support(),
            Smoothness::SchwartzLike,
        );
        for &x in &[-0.5, 0.0, 0.4, 0.8] {
            let a = f.derivative(&g, x).unwrap();
            let n = plain.derivative(&g, x).unwrap();
            assert!((a - n).norm() < 1e-9 * (1.0 + a.norm()), "x={x}: {a} vs {n}");
        }
    }

    #[test]
    fn samples_interpolate_cubics_exactly() {
        let g = Geometry::desk();
        let n = 32;
        let xs = g.midpoint_nodes(n);
        let vals: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x * x * x - x, x)).collect();
        let f = TestFunction1D::from_samples(&g, vals).unwrap();
        for &x in &[-0.97, -0.2, 0.013, 0.71] {
            let v = f.eval(x);
            assert_relative_eq!(v.re, x * x * x - x, epsilon = 1e-13);
            assert_relative_eq!(v.im, x, epsilon = 1e-13);
        }
        assert!(f.derivative(&g, 0.0).is_err());
        assert_eq!(f.samples().unwrap().len(), n);
    }
}
