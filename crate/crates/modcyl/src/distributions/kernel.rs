//! Structured 2×2 distributional kernels and their smearing.
//!
//! A [`SingularKernel1D`] is a sum of a smooth part, principal-value parts
//! with a known first-order singular factor, and local `δ(x-y)`,
//! `δ'(x-y)` and `δ(x+y)` parts. Integrals are carried out in the variable
//! `v = Ω₁(y)`, which spreads the endpoint regions over the real line.
//! Principal values use the subtracted form: the integrand minus its value
//! on the singular locus is regular, and the subtracted constant is
//! integrated in closed form.

use super::functions::{TestFunction1D, TestSpinor};
use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry, IntervalPoint};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

pub type PairFn = Arc<dyn Fn(&IntervalPoint, &IntervalPoint) -> Matrix2<Complex64> + Send + Sync>;
pub type DiagFn = Arc<dyn Fn(&IntervalPoint) -> Matrix2<Complex64> + Send + Sync>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The singular factor multiplying a PV prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Singularity {
    /// `1/(x-y)`
    InvDiff,
    /// `1/sin(π(x-y)/L)`
    InvSinDiff,
    /// `cot(π(x-y)/L)`
    CotDiff,
    /// `1/sinh(scale·(Ω_a(x) - Ω_b(y) - shift))`, entry by entry.
    InvSinhOmegaDiff { scale: f64, shift: f64 },
}

#[derive(Clone)]
pub struct PvPart {
    pub prefactor: PairFn,
    pub singularity: Singularity,
    /// Entries `(a, b)` where the prefactor is not identically zero.
    pub active: [[bool; 2]; 2],
}

/// Coefficient `c(x,y)` of `δ'(x-y)`, given by its value and `∂_y` on the
/// diagonal, so that `∫ c(x,y) δ'(x-y) f(y) dy = c f' + (∂_y c) f` at `y = x`.
#[derive(Clone)]
pub struct DeltaPrimePart {
    pub value: DiagFn,
    pub dy: DiagFn,
}

#[derive(Clone)]
pub struct SingularKernel1D {
    pub geo: Geometry,
    pub smooth: Option<PairFn>,
    pub pv: Vec<PvPart>,
    pub delta_diag: Option<DiagFn>,
    pub delta_prime: Option<DeltaPrimePart>,
    pub delta_mirror: Option<DiagFn>,
}

/// Smeared kernel: entry `(a, b)` is `∫ K_ab(x,y) f_b(y) dy`.
#[derive(Debug, Clone, Copy)]
pub struct SmearResult {
    pub value: Matrix2<Complex64>,
    pub error: f64,
    pub converged: bool,
}

impl SmearResult {
    /// `Σ_b ∫ K_ab f_b`, the applied spinor at `x`.
    pub fn applied(&self) -> [Complex64; 2] {
        [
            self.value[(0, 0)] + self.value[(0, 1)],
            self.value[(1, 0)] + self.value[(1, 1)],
        ]
    }
}

pub fn const_pair(m: Matrix2<Complex64>) -> PairFn {
    Arc::new(move |_, _| m)
}

pub fn const_diag(m: Matrix2<Complex64>) -> DiagFn {
    Arc::new(move |_| m)
}

impl SingularKernel1D {
    pub fn empty(geo: &Geometry) -> Self {
        SingularKernel1D {
            geo: *geo,
            smooth: None,
            pv: Vec::new(),
            delta_diag: None,
            delta_prime: None,
            delta_mirror: None,
        }
    }

    pub fn identity(geo: &Geometry) -> Self {
        let mut k = Self::empty(geo);
        k.delta_diag = Some(const_diag(Matrix2::identity()));
        k
    }

    /// Sum of two kernels on the same geometry.
    pub fn plus(mut self, other: SingularKernel1D) -> Self {
        fn add_pair(a: Option<PairFn>, b: Option<PairFn>) -> Option<PairFn> {
            match (a, b) {
                (Some(p), Some(q)) => Some(Arc::new(move |x, y| p(x, y) + q(x, y))),
                (p, q) => p.or(q),
            }
        }
        fn add_diag(a: Option<DiagFn>, b: Option<DiagFn>) -> Option<DiagFn> {
            match (a, b) {
                (Some(p), Some(q)) => Some(Arc::new(move |x| p(x) + q(x))),
                (p, q) => p.or(q),
            }
        }
        self.smooth = add_pair(self.smooth, other.smooth);
        self.pv.extend(other.pv);
        self.delta_diag = add_diag(self.delta_diag, other.delta_diag);
        self.delta_mirror = add_diag(self.delta_mirror, other.delta_mirror);
        self.delta_prime = match (self.delta_prime, other.delta_prime) {
            (Some(p), Some(q)) => Some(DeltaPrimePart {
                value: add_diag(Some(p.value), Some(q.value)).unwrap(),
                dy: add_diag(Some(p.dy), Some(q.dy)).unwrap(),
            }),
            (p, q) => p.or(q),
        };
        self
    }

    pub fn has_nonlocal(&self) -> bool {
        self.smooth.is_some() || !self.pv.is_empty()
    }

    /// Smear against `f` at the point `x`.
    pub fn smear(&self, f: &TestSpinor, x: &IntervalPoint, quad: &QuadratureSpec) -> Result<SmearResult> {
        let geo = &self.geo;
        let mut value = Matrix2::from_element(ZERO);
        let mut error = 0.0;
        let mut converged = true;

        if let Some(s) = &self.smooth {
            for a in Chirality::BOTH {
                for b in Chirality::BOTH {
                    let fb = f.component(b);
                    if let Some((lo, hi)) = v_range(geo, fb, quad) {
                        let r = integrate(
                            |v| {
                                let y = geo.point_at_omega(v);
                                s(x, &y)[(a.index(), b.index())] * fb.eval_point(&y) * geo.jacobian(&y)
                            },
                            lo,
                            hi,
                            &[],
                            quad,
                        );
                        value[(a.index(), b.index())] += r.value;
                        error += r.error;
                        converged &= r.converged;
                    }
                }
            }
        }

        for part in &self.pv {
            for a in Chirality::BOTH {
                for b in Chirality::BOTH {
                    if !part.active[a.index()][b.index()] {
                        continue;
                    }
                    let fb = f.component(b);
                    let Some(range) = v_range(geo, fb, quad) else {
                        continue;
                    };
                    let (v, e, c) = match part.singularity {
                        Singularity::InvSinhOmegaDiff { scale, shift } => {
                            pv_sinh(geo, part, a, b, fb, x, range, scale, shift, quad)
                        }
                        kind => pv_diff(geo, part, kind, a, b, fb, x, range, quad),
                    };
                    value[(a.index(), b.index())] += v;
                    error += e;
                    converged &= c;
                }
            }
        }

        if let Some(d) = &self.delta_diag {
            let m = d(x);
            let fx = f.eval_point(x);
            for a in 0..2 {
                for b in 0..2 {
                    value[(a, b)] += m[(a, b)] * fx[b];
                }
            }
        }

        if let Some(dp) = &self.delta_prime {
            let c = (dp.value)(x);
            let cy = (dp.dy)(x);
            let fx = f.eval_point(x);
            let dfx = [
                f.f1.derivative(geo, x.x)?,
                f.f2.derivative(geo, x.x)?,
            ];
            for a in 0..2 {
                for b in 0..2 {
                    value[(a, b)] += c[(a, b)] * dfx[b] + cy[(a, b)] * fx[b];
                }
            }
        }

        if let Some(m) = &self.delta_mirror {
            let coef = m(x);
            let fm = f.eval_point(&IntervalPoint {
                x: -x.x,
                dist_lo: x.dist_hi,
                dist_hi: x.dist_lo,
                omega1: -x.omega1,
            });
            for a in 0..2 {
                for b in 0..2 {
                    value[(a, b)] += coef[(a, b)] * fm[b];
                }
            }
        }

        if !value.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Precision(format!("non-finite smeared value at x = {}", x.x)));
        }
        Ok(SmearResult {
            value,
            error,
            converged,
        })
    }

    /// Apply to `f` at each point, in parallel.
    pub fn apply(&self, f: &TestSpinor, points: &[IntervalPoint], quad: &QuadratureSpec) -> Result<Vec<[Complex64; 2]>> {
        points
            .par_iter()
            .map(|p| self.smear(f, p, quad).map(|r| r.applied()))
            .collect()
    }
}

/// Pointwise values of the parts of a kernel at `(x, y)`. Local parts report
/// their coefficient at `x`; `pv` entries are `None` on the singular locus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub smooth: Option<Matrix2<Complex64>>,
    pub pv: Option<[[Option<Complex64>; 2]; 2]>,
    pub delta: Option<Matrix2<Complex64>>,
    pub delta_prime: Option<Matrix2<Complex64>>,
    pub mirror: Option<Matrix2<Complex64>>,
}

impl SingularKernel1D {
    pub fn sample(&self, x: &IntervalPoint, y: &IntervalPoint) -> KernelSample {
        let geo = &self.geo;
        let pv = (!self.pv.is_empty()).then(|| {
            let mut out = [[Some(ZERO); 2]; 2];
            for part in &self.pv {
                let m = (part.prefactor)(x, y);
                for a in Chirality::BOTH {
                    for b in Chirality::BOTH {
                        let (i, j) = (a.index(), b.index());
                        if !part.active[i][j] {
                            continue;
                        }
                        let factor = match part.singularity {
                            Singularity::InvSinhOmegaDiff { scale, shift } => {
                                let d = x.omega(a) - y.omega(b) - shift;
                                (d != 0.0).then(|| 1.0 / (scale * d).sinh())
                            }
                            kind => {
                                let u = x.minus(y);
                                (u != 0.0).then(|| singular_factor(geo, kind, u))
                            }
                        };
                        out[i][j] = match (out[i][j], factor) {
                            (Some(acc), Some(f)) => Some(acc + m[(i, j)] * f),
                            _ => None,
                        };
                    }
                }
            }
            out
        });
        KernelSample {
            smooth: self.smooth.as_ref().map(|s| s(x, y)),
            pv,
            delta: self.delta_diag.as_ref().map(|d| d(x)),
            delta_prime: self.delta_prime.as_ref().map(|d| (d.value)(x)),
            mirror: self.delta_mirror.as_ref().map(|d| d(x)),
        }
    }
}

/// The `v`-interval covering the support of `f`, truncated to `±omega_max`.
pub fn v_range(geo: &Geometry, f: &TestFunction1D, quad: &QuadratureSpec) -> Option<(f64, f64)> {
    let (c, d) = f.support();
    let l = geo.half_width();
    let vm = quad.omega_max;
    let lo = if c <= -l { -vm } else { geo.point(c).ok()?.omega1.max(-vm) };
    let hi = if d >= l { vm } else { geo.point(d).ok()?.omega1.min(vm) };
    (hi > lo).then_some((lo, hi))
}

/// Whether a singular locus at `v` needs subtraction over `[lo, hi]`.
/// Loci beyond `|v| = 700` sit closer to an endpoint than `e^{-700}`.
fn near_range(v: f64, lo: f64, hi: f64) -> bool {
    v.abs() < 700.0 && v > lo - 1.0 && v < hi + 1.0
}

fn singular_factor(geo: &Geometry, kind: Singularity, u: f64) -> f64 {
    match kind {
        Singularity::InvDiff => 1.0 / u,
        Singularity::InvSinDiff => 1.0 / geo.sin_sep(u),
        Singularity::CotDiff => geo.cot_sep(u),
        Singularity::InvSinhOmegaDiff { .. } => unreachable!(),
    }
}

/// `PV ∫_c^d k(x-y) dy` in closed form, for `c < x < d`, given `x-c` and `d-x`.
fn pv_constant(geo: &Geometry, kind: Singularity, xc: f64, dx: f64) -> f64 {
    let k = geo.k();
    match kind {
        Singularity::InvDiff => (xc / dx).ln(),
        Singularity::InvSinDiff => ((0.5 * k * xc).tan() / (0.5 * k * dx).tan()).ln() / k,
        Singularity::CotDiff => ((k * xc).sin() / (k * dx).sin()).ln() / k,
        Singularity::InvSinhOmegaDiff { .. } => unreachable!(),
    }
}

#[allow(clippy::too_many_arguments)]
fn pv_diff(
    geo: &Geometry,
    part: &PvPart,
    kind: Singularity,
    a: Chirality,
    b: Chirality,
    fb: &TestFunction1D,
    x: &IntervalPoint,
    (lo, hi): (f64, f64),
    quad: &QuadratureSpec,
) -> (Complex64, f64, bool) {
    let (ia, ib) = (a.index(), b.index());
    let pre = &part.prefactor;
    let xv = x.omega1;
    if !near_range(xv, lo, hi) {
        let r = integrate(
            |v| {
                let y = geo.point_at_omega(v);
                pre(x, &y)[(ia, ib)] * fb.eval_point(&y) * singular_factor(geo, kind, x.minus(&y)) * geo.jacobian(&y)
            },
            lo,
            hi,
            &[],
            quad,
        );
        return (r.value, r.error, r.converged);
    }
    let a_v = lo.min(xv - 1.0);
    let b_v = hi.max(xv + 1.0);
    let gx = pre(x, x)[(ia, ib)] * fb.eval_point(x);
    let breaks = [xv, lo, hi];
    let r = integrate(
        |v| {
            let y = geo.point_at_omega(v);
            let gy = pre(x, &y)[(ia, ib)] * fb.eval_point(&y);
            (gy - gx) * singular_factor(geo, kind, x.minus(&y)) * geo.jacobian(&y)
        },
        a_v,
        b_v,
        &breaks,
        quad,
    );
    let c = geo.point_at_omega(a_v);
    let d = geo.point_at_omega(b_v);
    let konst = pv_constant(geo, kind, x.dist_lo - c.dist_lo, x.dist_hi - d.dist_hi);
    (r.value + gx * konst, r.error, r.converged)
}

#[allow(clippy::too_many_arguments)]
fn pv_sinh(
    geo: &Geometry,
    part: &PvPart,
    a: Chirality,
    b: Chirality,
    fb: &TestFunction1D,
    x: &IntervalPoint,
    (lo, hi): (f64, f64),
    scale: f64,
    shift: f64,
    quad: &QuadratureSpec,
) -> (Complex64, f64, bool) {
    let (ia, ib) = (a.index(), b.index());
    let pre = &part.prefactor;
    // Locus: Ω_b(y) = Ω_a(x) - shift, i.e. v* = σ_b (Ω_a(x) - shift).
    let vstar = b.sign() * (x.omega(a) - shift);
    let m = scale * b.sign();
    let kernel = move |v: f64| 1.0 / (m * (vstar - v)).sinh();
    if !near_range(vstar, lo, hi) {
        let r = integrate(
            |v| {
                let y = geo.point_at_omega(v);
                pre(x, &y)[(ia, ib)] * fb.eval_point(&y) * geo.jacobian(&y) * kernel(v)
            },
            lo,
            hi,
            &[],
            quad,
        );
        return (r.value, r.error, r.converged);
    }
    let a_v = lo.min(vstar - 1.0);
    let b_v = hi.max(vstar + 1.0);
    let ystar = geo.point_at_omega(vstar);
    let fstar = pre(x, &ystar)[(ia, ib)] * fb.eval_point(&ystar) * geo.jacobian(&ystar);
    let r = integrate(
        |v| {
            let y = geo.point_at_omega(v);
            let fy = pre(x, &y)[(ia, ib)] * fb.eval_point(&y) * geo.jacobian(&y);
            (fy - fstar) * kernel(v)
        },
        a_v,
        b_v,
        &[vstar, lo, hi],
        quad,
    );
    let w_a = m * (a_v - vstar);
    let w_b = m * (b_v - vstar);
    let lt = |w: f64| (0.5 * w).tanh().abs().ln();
    let konst = -(lt(w_b) - lt(w_a)) / m;
    (r.value + fstar * konst, r.error, r.converged)
}
