//! Cylinder of circumference `L` with the interval `[-ℓ, ℓ]`, and the
//! logarithmic coordinate
//!
//! ```text
//! Ω₁(x) = ln( sin(π(ℓ+x)/L) / sin(π(ℓ-x)/L) ),   Ω₂(x) = -Ω₁(x)
//! ```
//!
//! which maps the interval onto the real line. Most numerics in this crate
//! integrate in the variable `v = Ω₁(y)`, so points carry their endpoint
//! distances `ℓ+x` and `ℓ-x` explicitly; that keeps `Ω` and the sine
//! factors accurate even when `x` sits within rounding distance of `±ℓ`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative distance to `±ℓ` below which a position counts as the endpoint.
pub const BOUNDARY_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    One,
    Two,
}

impl Chirality {
    pub const BOTH: [Chirality; 2] = [Chirality::One, Chirality::Two];

    /// `+1` for chirality 1, `-1` for chirality 2.
    pub fn sign(self) -> f64 {
        match self {
            Chirality::One => 1.0,
            Chirality::Two => -1.0,
        }
    }

    /// Zero-based index used for spinor components and matrix entries.
    pub fn index(self) -> usize {
        match self {
            Chirality::One => 0,
            Chirality::Two => 1,
        }
    }

    pub fn from_index(i: usize) -> Chirality {
        if i == 0 {
            Chirality::One
        } else {
            Chirality::Two
        }
    }
}

/// A position in the interval with its endpoint distances and `Ω₁` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPoint {
    pub x: f64,
    /// `ℓ + x`
    pub dist_lo: f64,
    /// `ℓ - x`
    pub dist_hi: f64,
    pub omega1: f64,
}

impl IntervalPoint {
    /// `self.x - y.x`, taken from the endpoint distances when both points
    /// sit near the same endpoint.
    pub fn minus(&self, y: &IntervalPoint) -> f64 {
        let half = 0.25 * (self.dist_lo + self.dist_hi);
        if self.dist_hi + y.dist_hi < half {
            y.dist_hi - self.dist_hi
        } else if self.dist_lo + y.dist_lo < half {
            self.dist_lo - y.dist_lo
        } else {
            self.x - y.x
        }
    }

    pub fn omega(&self, a: Chirality) -> f64 {
        a.sign() * self.omega1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr")]
pub struct Geometry {
    #[serde(rename = "L")]
    l: f64,
    ell: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryRepr {
    #[serde(rename = "L")]
    l: f64,
    ell: f64,
}

impl TryFrom<GeometryRepr> for Geometry {
    type Error = Error;

    fn try_from(r: GeometryRepr) -> Result<Self> {
        Geometry::new(r.l, r.ell)
    }
}

impl Geometry {
    pub fn new(circumference: f64, half_width: f64) -> Result<Self> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return Err(Error::Domain(format!(
                "circumference L must be positive and finite, got {circumference}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0 && 2.0 * half_width < circumference) {
            return Err(Error::Domain(format!(
                "half width ell must satisfy 0 < 2*ell < L, got ell={half_width}, L={circumference}"
            )));
        }
        Ok(Geometry {
            l: circumference,
            ell: half_width,
        })
    }

    /// The reference desk configuration `L = 4`, `ℓ = 1`.
    pub fn desk() -> Self {
        Geometry { l: 4.0, ell: 1.0 }
    }

    pub fn circumference(&self) -> f64 {
        self.l
    }

    pub fn half_width(&self) -> f64 {
        self.ell
    }

    /// `π/L`
    pub fn k(&self) -> f64 {
        PI / self.l
    }

    /// `sin(2πℓ/L)`
    pub fn sin_2w(&self) -> f64 {
        (2.0 * PI * self.ell / self.l).sin()
    }

    /// `tan(πℓ/L)`
    pub fn tan_w(&self) -> f64 {
        (PI * self.ell / self.l).tan()
    }

    /// `sin²(πℓ/L)`
    pub fn sin2_w(&self) -> f64 {
        (PI * self.ell / self.l).sin().powi(2)
    }

    /// `κ = L/(4ℓ)`, the rescaling of Ω in the nonlocal kernels.
    pub fn kappa(&self) -> f64 {
        self.l / (4.0 * self.ell)
    }

    /// Reduce a separation modulo `2L`, the period of `sin(πu/L)`, into
    /// `(-L, L]`. The factor `1/sin` is antiperiodic under `u → u+L`, so a
    /// reduction modulo `L` alone would flip its sign.
    pub fn reduce_separation(&self, u: f64) -> f64 {
        if u.abs() <= self.l {
            return u;
        }
        let p = 2.0 * self.l;
        let mut r = u.rem_euclid(p);
        if r > self.l {
            r -= p;
        }
        r
    }

    /// `sin(π u / L)` after period reduction.
    pub fn sin_sep(&self, u: f64) -> f64 {
        (self.k() * self.reduce_separation(u)).sin()
    }

    /// `cot(π u / L)` after period reduction.
    pub fn cot_sep(&self, u: f64) -> f64 {
        let a = self.k() * self.reduce_separation(u);
        a.cos() / a.sin()
    }

    fn check_position(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x.abs() > self.ell * (1.0 + BOUNDARY_REL_TOL) {
            return Err(Error::Domain(format!(
                "position {x} outside [-{0}, {0}]",
                self.ell
            )));
        }
        Ok(())
    }

    /// Build an [`IntervalPoint`] from a position in `[-ℓ, ℓ]`.
    pub fn point(&self, x: f64) -> Result<IntervalPoint> {
        self.check_position(x)?;
        let x = x.clamp(-self.ell, self.ell);
        Ok(self.point_unchecked(x))
    }

    pub(crate) fn point_unchecked(&self, x: f64) -> IntervalPoint {
        let dist_lo = self.ell + x;
        let dist_hi = self.ell - x;
        let tol = BOUNDARY_REL_TOL * self.ell;
        let omega1 = if dist_hi <= tol {
            f64::INFINITY
        } else if dist_lo <= tol {
            f64::NEG_INFINITY
        } else {
            ((self.k() * dist_lo).sin() / (self.k() * dist_hi).sin()).ln()
        };
        IntervalPoint {
            x,
            dist_lo,
            dist_hi,
            omega1,
        }
    }

    /// The point whose `Ω₁` value is `v`, with endpoint distances computed
    /// without cancellation.
    pub fn point_at_omega(&self, v: f64) -> IntervalPoint {
        if v == f64::INFINITY {
            return IntervalPoint {
                x: self.ell,
                dist_lo: 2.0 * self.ell,
                dist_hi: 0.0,
                omega1: v,
            };
        }
        if v == f64::NEG_INFINITY {
            return IntervalPoint {
                x: -self.ell,
                dist_lo: 0.0,
                dist_hi: 2.0 * self.ell,
                omega1: v,
            };
        }
        let tw = self.tan_w();
        let th = (0.5 * v).tanh();
        let x = (tw * th).atan() / self.k();
        let dist_hi = self.dist_to_upper(v, tw);
        let dist_lo = self.dist_to_upper(-v, tw);
        IntervalPoint {
            x,
            dist_lo,
            dist_hi,
            omega1: v,
        }
    }

    /// `ℓ - x(v)` via `atan(T) - atan(T·th) = atan2(T(1-th), 1+T²th)`
    /// with `1 - tanh(v/2) = 2/(1+e^v)`.
    fn dist_to_upper(&self, v: f64, tw: f64) -> f64 {
        let th = (0.5 * v).tanh();
        let one_minus = 2.0 / (1.0 + v.exp());
        (tw * one_minus).atan2(1.0 + tw * tw * th) / self.k()
    }

    /// `Ω_a(x)`, returning signed infinity at the endpoints.
    pub fn omega(&self, a: Chirality, x: f64) -> Result<f64> {
        Ok(self.point(x)?.omega(a))
    }

    /// `P(x) = sin(π(ℓ+x)/L)·sin(π(ℓ-x)/L)`.
    pub fn endpoint_product(&self, p: &IntervalPoint) -> f64 {
        (self.k() * p.dist_lo).sin() * (self.k() * p.dist_hi).sin()
    }

    /// `Ω₁'(x) = (π/L)·sin(2πℓ/L)/P(x)`; `Ω₂' = -Ω₁'`.
    pub fn omega_prime(&self, a: Chirality, x: f64) -> Result<f64> {
        let p = self.point(x)?;
        Ok(a.sign() * self.omega1_prime(&p))
    }

    pub fn omega1_prime(&self, p: &IntervalPoint) -> f64 {
        self.k() * self.sin_2w() / self.endpoint_product(p)
    }

    /// `dx/dv` at the point, the Jacobian of the `v = Ω₁` substitution.
    pub fn jacobian(&self, p: &IntervalPoint) -> f64 {
        self.endpoint_product(p) / (self.k() * self.sin_2w())
    }

    /// `Ω_a(x) - Ω_b(y)` as the logarithm of a single ratio of sine
    /// factors, accurate for nearby arguments.
    pub fn omega_diff(
        &self,
        a: Chirality,
        x: &IntervalPoint,
        b: Chirality,
        y: &IntervalPoint,
    ) -> f64 {
        let k = self.k();
        let s = self.sin_2w();
        if a == b {
            // Ω₁(x) - Ω₁(y) = ln(1 + S·sin(π(x-y)/L) / (sin(π(ℓ-x)/L)·sin(π(ℓ+y)/L)))
            let d = if !x.omega1.is_finite() || !y.omega1.is_finite() {
                x.omega1 - y.omega1
            } else {
                let den = (k * x.dist_hi).sin() * (k * y.dist_lo).sin();
                (s * (k * x.minus(y)).sin() / den).ln_1p()
            };
            a.sign() * d
        } else {
            // Ω₁(x) + Ω₁(y) = ln(1 + S·sin(π(x+y)/L) / (sin(π(ℓ-x)/L)·sin(π(ℓ-y)/L)))
            let d = if !x.omega1.is_finite() || !y.omega1.is_finite() {
                x.omega1 + y.omega1
            } else {
                let den = (k * x.dist_hi).sin() * (k * y.dist_hi).sin();
                (s * (k * (x.x + y.x)).sin() / den).ln_1p()
            };
            a.sign() * d
        }
    }

    /// `x₀(y, t)`, the solution of `Ω₁(x₀) = Ω₁(y) + 2πt`.
    pub fn flow_trajectory(&self, y: f64, t: f64) -> Result<f64> {
        Ok(self.flow_point(&self.interior_point(y)?, t).x)
    }

    /// Trajectory as an [`IntervalPoint`], keeping endpoint accuracy.
    pub fn flow_point(&self, y: &IntervalPoint, t: f64) -> IntervalPoint {
        self.point_at_omega(y.omega1 + 2.0 * PI * t)
    }

    fn interior_point(&self, y: f64) -> Result<IntervalPoint> {
        let p = self.point(y)?;
        if !p.omega1.is_finite() {
            return Err(Error::Domain(format!("position {y} is an endpoint")));
        }
        Ok(p)
    }

    /// Both sides of
    /// `1/sinh((Ω₁(x)-Ω₁(y))/2) = 2·sqrt(P(x)P(y))/sin(2πℓ/L) · 1/sin(π(x-y)/L)`.
    pub fn sinh_omega_identity(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let px = self.interior_point(x)?;
        let py = self.interior_point(y)?;
        if x == y {
            return Err(Error::Domain("coincident points".into()));
        }
        let d = self.omega_diff(Chirality::One, &px, Chirality::One, &py);
        let lhs = 1.0 / (0.5 * d).sinh();
        let rhs = 2.0 * (self.endpoint_product(&px) * self.endpoint_product(&py)).sqrt()
            / self.sin_2w()
            / (self.k() * (x - y)).sin();
        Ok((lhs, rhs))
    }

    /// Uniform-in-`x` midpoint nodes `(j+½)·2ℓ/n - ℓ`.
    pub fn midpoint_nodes(&self, n: usize) -> Vec<f64> {
        let dx = 2.0 * self.ell / n as f64;
        (0..n).map(|j| (j as f64 + 0.5) * dx - self.ell).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn geo() -> Geometry {
        Geometry::desk()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new(4.0, 2.0).is_err());
        assert!(Geometry::new(-1.0, 0.1).is_err());
        assert!(Geometry::new(4.0, 0.0).is_err());
        assert!(Geometry::new(4.0, 1.999).is_ok());
    }

    #[test]
    fn deserialization_revalidates() {
        let g: Geometry = serde_json::from_str(r#"{"L": 4.0, "ell": 1.0}"#).unwrap();
        assert_eq!(g, geo());
        assert!(serde_json::from_str::<Geometry>(r#"{"L": 4.0, "ell": 2.0}"#).is_err());
        assert_eq!(serde_json::to_string(&geo()).unwrap(), r#"{"L":4.0,"ell":1.0}"#);
    }

    #[test]
    fn omega_at_center_and_mirror() {
        let g = geo();
        assert_eq!(g.omega(Chirality::One, 0.0).unwrap(), 0.0);
        for &x in &[-0.9, -0.3, 0.1, 0.77] {
            let a = g.omega(Chirality::Two, x).unwrap();
            let b = g.omega(Chirality::One, -x).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn omega_half_point_frozen() {
        // ln(sin(3π/8)/sin(π/8)) = ln(cot(π/8)) = ln(1+√2), evaluated to 30 digits
        // as 0.881373587019543025232609324979.
        let g = geo();
        let v = g.omega(Chirality::One, 0.5).unwrap();
        assert_relative_eq!(v, 0.881_373_587_019_543, max_relative = 1e-15);
    }

    #[test]
    fn omega_endpoints_and_domain() {
        let g = geo();
        assert_eq!(g.omega(Chirality::One, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(g.omega(Chirality::One, -1.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(g.omega(Chirality::Two, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(g.omega(Chirality::One, 1.01).is_err());
        assert!(g.omega(Chirality::One, f64::NAN).is_err());
    }

    #[test]
    fn trajectory_limits() {
        let g = geo();
        assert_relative_eq!(g.flow_trajectory(0.3, 0.0).unwrap(), 0.3, max_relative = 1e-14);
        assert_relative_eq!(g.flow_trajectory(0.3, 50.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(g.flow_trajectory(1.0, 0.1).is_err());
    }

    #[test]
    fn point_at_omega_keeps_endpoint_distance() {
        let g = geo();
        let p = g.point_at_omega(30.0);
        // ℓ - x ≈ (L/π)·2·tan(πℓ/L)/(1+tan²)·e^{-30} = (L/π)·sin(2πℓ/L)·e^{-30}
        let expect = 4.0 / PI * (-30.0f64).exp();
        assert_relative_eq!(p.dist_hi, expect, max_relative = 1e-10);
        assert_relative_eq!(g.jacobian(&p), p.dist_hi, max_relative = 1e-10);
    }

    #[test]
    fn first_order_trajectory_expansion() {
        // Richardson: the O(t²) remainder quarters when t halves.
        let g = geo();
        let y = 0.35;
        let lin = |t: f64| {
            let s = (PI * y / 4.0).sin();
            t * (2.0 * 4.0 / g.sin_2w()) * (g.sin2_w() - s * s)
        };
        let rem = |t: f64| g.flow_trajectory(y, t).unwrap() - y - lin(t);
        let r1 = rem(1e-3);
        let r2 = rem(5e-4);
        assert_relative_eq!(r1 / r2, 4.0, max_relative = 1e-2);
    }

    #[test]
    fn sinh_identity_near_diagonal() {
        let g = geo();
        let y = 0.2;
        let x = y + 1e-7;
        let (lhs, rhs) = g.sinh_omega_identity(x, y).unwrap();
        let lead = 2.0 / (g.omega_prime(Chirality::One, y).unwrap() * (x - y));
        assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
        assert_relative_eq!(lhs / lead, 1.0, max_relative = 1e-5);
        assert!(g.sinh_omega_identity(y, y).is_err());
    }

    proptest! {
        #[test]
        fn omega_monotone(a in -0.999f64..0.999, b in -0.999f64..0.999) {
            prop_assume!(a < b);
            let g = geo();
            prop_assert!(g.omega(Chirality::One, a).unwrap() < g.omega(Chirality::One, b).unwrap());
        }

        #[test]
        fn trajectory_residual(y in -0.9f64..0.9, t in -0.5f64..0.5) {
            let g = geo();
            let x0 = g.flow_trajectory(y, t).unwrap();
            let target = g.omega(Chirality::One, y).unwrap() + 2.0 * PI * t;
            let r = g.omega(Chirality::One, x0).unwrap() - target;
            prop_assert!(r.abs() < 1e-12 * (1.0 + target.abs()), "residual {}", r);
        }

        #[test]
        fn trajectory_group_law(y in -0.95f64..0.95, t1 in -0.8f64..0.8, t2 in -0.8f64..0.8) {
            let g = geo();
            let a = g.flow_trajectory(g.flow_trajectory(y, t1).unwrap(), t2).unwrap();
            let b = g.flow_trajectory(y, t1 + t2).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn sinh_identity_random(x in -0.99f64..0.99, y in -0.99f64..0.99) {
            prop_assume!((x - y).abs() > 1e-9);
            let g = geo();
            let (lhs, rhs) = g.sinh_omega_identity(x, y).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
            let (l2, r2) = g.sinh_omega_identity(y, x).unwrap();
            prop_assert!((l2 + lhs).abs() <= 1e-12 * lhs.abs());
            prop_assert!((r2 + rhs).abs() <= 1e-12 * rhs.abs());
        }

        #[test]
        fn omega_diff_matches_direct(x in -0.9f64..0.9, y in -0.9f64..0.9) {
            let g = geo();
            let px = g.point(x).unwrap();
            let py = g.point(y).unwrap();
            for a in Chirality::BOTH {
                for b in Chirality::BOTH {
                    let d = g.omega_diff(a, &px, b, &py);
                    let direct = px.omega(a) - py.omega(b);
                    prop_assert!((d - direct).abs() < 1e-12 * (1.0 + direct.abs()));
                }
            }
        }
    }
}
