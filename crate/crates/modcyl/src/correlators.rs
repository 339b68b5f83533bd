//! Two-point functions `ω(ψ(f) ψ(g)†)` of the NS vacuum and of the periodic
//! ground states, their truncated mode sums, and the analytic continuation
//! `Hf` off the interval.
//!
//! The kernel is
//!
//! ```text
//! NS:  G_ab(x,y) = δ_ab σ_a / (2iL sin(π(x - y - σ_a iε)/L))
//! R:   G_ab(x,y) = h_ab + δ_ab σ_a cot(π(x - y - σ_a iε)/L) / (2iL)
//! ```
//!
//! with `σ₁ = 1`, `σ₂ = -1`. Both split into `½δ(x-y)` plus a principal
//! value. The pairing is `two_point(f, g) = Σ ∫∫ f_a(x) G_ab(x,y) g*_b(y)`,
//! so `⟨f, G f⟩ = two_point(f*, f*)`.

use crate::distributions::identities::{sokhotski_split, CauchyFamily, EpsKernel};
use crate::distributions::kernel::{const_pair, v_range, SingularKernel1D};
use crate::distributions::quadrature::{composite_gl, integrate, QuadratureSpec};
use crate::distributions::{TestFunction1D, TestSpinor};
use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry};
use crate::states::{build_h, g_covariance, StateParams};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Where the test functions live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Supported in `[-ℓ, ℓ]`; the restricted operator of modular theory.
    Interval,
    /// Supported in `[0, L]`, the full circle.
    Circle,
}

/// Side from which the cut `[-ℓ, ℓ]` is approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `Im z → 0⁺`
    Above,
    /// `Im z → 0⁻`
    Below,
}

/// A smeared scalar with its accumulated quadrature error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Smeared {
    pub value: Complex64,
    pub error: f64,
    pub converged: bool,
}

/// The two-point kernel for one state, in one domain.
#[derive(Clone)]
pub struct TwoPointKernel {
    geo: Geometry,
    state: StateParams,
    domain: Domain,
    h: Option<Matrix2<Complex64>>,
    kernel: SingularKernel1D,
}

fn ns_family(state: &StateParams) -> CauchyFamily {
    if state.is_ns() {
        CauchyFamily::Sin
    } else {
        CauchyFamily::Cot
    }
}

/// `Σ_a σ_a coef·K(x - y - s σ_a iε)` on the diagonal, split into PV and `δ`.
fn chiral_kernel(geo: &Geometry, family: CauchyFamily, coef: Complex64, side: i8) -> Result<SingularKernel1D> {
    let mut out = SingularKernel1D::empty(geo);
    for a in Chirality::BOTH {
        let mut c = Matrix2::from_element(ZERO);
        c[(a.index(), a.index())] = coef * a.sign();
        let part = sokhotski_split(
            geo,
            &EpsKernel {
                family,
                coef: c,
                side: side * a.sign() as i8,
            },
        )?;
        out = out.plus(part);
    }
    Ok(out)
}

impl TwoPointKernel {
    pub fn new(state: &StateParams, geo: &Geometry, domain: Domain) -> Result<Self> {
        let coef = Complex64::new(0.0, -0.5 / geo.circumference());
        let mut kernel = chiral_kernel(geo, ns_family(state), coef, 1)?;
        let h = if state.is_ns() {
            None
        } else {
            let h = build_h(state, geo)?.0;
            kernel.smooth = Some(const_pair(h));
            Some(h)
        };
        Ok(TwoPointKernel {
            geo: *geo,
            state: *state,
            domain,
            h,
            kernel,
        })
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn state(&self) -> &StateParams {
        &self.state
    }

    /// The structured interval kernel.
    pub fn kernel(&self) -> &SingularKernel1D {
        &self.kernel
    }

    /// Kernel of `1 - G`, built from the complementary mode set, i.e. the
    /// opposite `iε` prescription.
    pub fn complement_kernel(&self) -> Result<SingularKernel1D> {
        let coef = Complex64::new(0.0, 0.5 / self.geo.circumference());
        let mut k = chiral_kernel(&self.geo, ns_family(&self.state), coef, -1)?;
        if let Some(h) = self.h {
            k.smooth = Some(const_pair(-h));
        }
        Ok(k)
    }

    fn check_support(&self, f: &TestSpinor) -> Result<()> {
        let (lo, hi) = match self.domain {
            Domain::Interval => (-self.geo.half_width(), self.geo.half_width()),
            Domain::Circle => (0.0, self.geo.circumference()),
        };
        let tol = 1e-12 * self.geo.circumference();
        for a in Chirality::BOTH {
            let (c, d) = f.component(a).support();
            if c < lo - tol || d > hi + tol {
                return Err(Error::Domain(format!(
                    "support [{c}, {d}] of chirality {} outside [{lo}, {hi}]",
                    a.index() + 1
                )));
            }
        }
        Ok(())
    }

    /// `(G g)(x)` for each position.
    pub fn apply(&self, g: &TestSpinor, xs: &[f64], quad: &QuadratureSpec) -> Result<Vec<[Complex64; 2]>> {
        self.check_support(g)?;
        xs.par_iter().map(|&x| self.apply_at(g, x, quad).map(|r| r.0)).collect()
    }

    fn apply_at(&self, g: &TestSpinor, x: f64, quad: &QuadratureSpec) -> Result<([Complex64; 2], f64, bool)> {
        match self.domain {
            Domain::Interval => {
                let p = self.geo.point(x)?;
                let r = self.kernel.smear(g, &p, quad)?;
                Ok((r.applied(), r.error, r.converged))
            }
            Domain::Circle => Ok(self.apply_circle(g, x, quad)),
        }
    }

    /// Circle version: PV over the period cell centred at `x`, using the
    /// periodic (R) or antiperiodic (NS) extension of `g`.
    fn apply_circle(&self, g: &TestSpinor, x: f64, quad: &QuadratureSpec) -> ([Complex64; 2], f64, bool) {
        let geo = &self.geo;
        let l = geo.circumference();
        let sign = if self.state.is_ns() { -1.0 } else { 1.0 };
        let ext = |f: &TestFunction1D, y: f64| {
            if y < 0.0 {
                f.eval(y + l) * sign
            } else if y >= l {
                f.eval(y - l) * sign
            } else {
                f.eval(y)
            }
        };
        let sing = |u: f64| {
            if self.state.is_ns() {
                1.0 / geo.sin_sep(u)
            } else {
                geo.cot_sep(u)
            }
        };
        let coef = Complex64::new(0.0, -0.5 / l);
        let mut out = [ZERO; 2];
        let mut error = 0.0;
        let mut converged = true;
        for a in Chirality::BOTH {
            let f = g.component(a);
            let fx = ext(f, x);
            let r = integrate(
                |y| (ext(f, y) - fx) * sing(x - y),
                x - 0.5 * l,
                x + 0.5 * l,
                &[x, 0.0, l],
                quad,
            );
            out[a.index()] = 0.5 * fx + coef * a.sign() * r.value;
            error += r.error / (2.0 * l);
            converged &= r.converged;
        }
        if let Some(h) = self.h {
            let mut ints = [ZERO; 2];
            for b in Chirality::BOTH {
                let f = g.component(b);
                let (c, d) = f.support();
                let r = integrate(|y| f.eval(y), c, d, &[], quad);
                ints[b.index()] = r.value;
                error += r.error;
                converged &= r.converged;
            }
            for a in 0..2 {
                out[a] += h[(a, 0)] * ints[0] + h[(a, 1)] * ints[1];
            }
        }
        (out, error, converged)
    }

    /// `Σ_a ∫ f_a(x) (K g*)_a(x) dx` for the kernel `K` applied by `apply`.
    fn pair_with<A>(&self, f: &TestSpinor, apply: A, quad: &QuadratureSpec) -> Result<Smeared>
    where
        A: Fn(f64) -> Result<([Complex64; 2], f64, bool)> + Sync,
    {
        let geo = &self.geo;
        let mut value = ZERO;
        let mut error = 0.0;
        let mut converged = true;
        for a in Chirality::BOTH {
            let fa = f.component(a);
            let failure = RefCell::new(None);
            let integrand = |x: f64| match apply(x) {
                Ok((v, _, _)) => v[a.index()],
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    ZERO
                }
            };
            let r = match self.domain {
                Domain::Interval => {
                    let Some((lo, hi)) = v_range(geo, fa, quad) else {
                        continue;
                    };
                    integrate(
                        |v| {
                            let p = geo.point_at_omega(v);
                            fa.eval_point(&p) * integrand(p.x) * geo.jacobian(&p)
                        },
                        lo,
                        hi,
                        &[],
                        quad,
                    )
                }
                Domain::Circle => {
                    let (c, d) = fa.support();
                    integrate(|x| fa.eval(x) * integrand(x), c, d, &[], quad)
                }
            };
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            value += r.value;
            error += r.error;
            converged &= r.converged;
        }
        Ok(Smeared {
            value,
            error,
            converged,
        })
    }

    /// `ω(ψ(f) ψ(g)†)`.
    pub fn two_point(&self, f: &TestSpinor, g: &TestSpinor, quad: &QuadratureSpec) -> Result<Smeared> {
        self.check_support(f)?;
        self.check_support(g)?;
        let gc = g.conj();
        self.pair_with(f, |x| self.apply_at(&gc, x, quad), quad)
    }

    /// `ω(ψ(g)† ψ(f))`, from the complementary kernel; only on the interval.
    pub fn anti_two_point(&self, f: &TestSpinor, g: &TestSpinor, quad: &QuadratureSpec) -> Result<Smeared> {
        if self.domain != Domain::Interval {
            return Err(Error::Invalid("complementary kernel is built for the interval only".into()));
        }
        self.check_support(f)?;
        self.check_support(g)?;
        let k = self.complement_kernel()?;
        let gc = g.conj();
        self.pair_with(
            f,
            |x| {
                let p = self.geo.point(x)?;
                let r = k.smear(&gc, &p, quad)?;
                Ok((r.applied(), r.error, r.converged))
            },
            quad,
        )
    }

    /// `⟨f, G f⟩ = Σ ∫∫ f*_a G_ab f_b`.
    pub fn expectation(&self, f: &TestSpinor, quad: &QuadratureSpec) -> Result<Smeared> {
        let fc = f.conj();
        self.two_point(&fc, &fc, quad)
    }
}

/// `Σ_a ∫ conj(f_a) g_a` over the supports.
pub fn inner(f: &TestSpinor, g: &TestSpinor, quad: &QuadratureSpec) -> Complex64 {
    let mut acc = ZERO;
    for a in Chirality::BOTH {
        let (fa, ga) = (f.component(a), g.component(a));
        let (c1, d1) = fa.support();
        let (c2, d2) = ga.support();
        let (c, d) = (c1.max(c2), d1.min(d2));
        if d > c {
            acc += integrate(|x| fa.eval(x).conj() * ga.eval(x), c, d, &[], quad).value;
        }
    }
    acc
}

/// `ω(ψ(f) ψ(g)†)` on the interval with default quadrature.
pub fn two_point(f: &TestSpinor, g: &TestSpinor, state: &StateParams, geo: &Geometry) -> Result<Smeared> {
    TwoPointKernel::new(state, geo, Domain::Interval)?.two_point(f, g, &QuadratureSpec::default())
}

/// `(1/√L) ∫ f(x) e^{2πimx/L} dx` for a list of (possibly half-integer) `m`,
/// from one set of Gauss–Legendre samples over the support.
fn fourier_coefficients(f: &TestFunction1D, modes: &[f64], l: f64, panels: usize) -> Vec<Complex64> {
    let (c, d) = f.support();
    if d <= c {
        return vec![ZERO; modes.len()];
    }
    let (xs, ws) = composite_gl(c, d, panels, 16);
    let vals: Vec<Complex64> = xs.iter().zip(&ws).map(|(&x, &w)| f.eval(x) * w).collect();
    let norm = 1.0 / l.sqrt();
    modes
        .par_iter()
        .map(|&m| {
            let k = 2.0 * PI * m / l;
            xs.iter()
                .zip(&vals)
                .map(|(&x, &v)| v * Complex64::from_polar(1.0, k * x))
                .sum::<Complex64>()
                * norm
        })
        .collect()
}

/// Truncated Fourier-mode sum of `ω(ψ(f) ψ(g)†)` with `n_modes` modes per
/// chirality (plus the zero mode for R).
pub fn mode_sum_oracle(
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    n_modes: usize,
) -> Result<Complex64> {
    if n_modes == 0 {
        return Err(Error::Invalid("n_modes must be positive".into()));
    }
    let l = geo.circumference();
    let gc = g.conj();
    let panels = (n_modes / 2).max(64);
    let offset = if state.is_ns() { 0.5 } else { 1.0 };
    let pos: Vec<f64> = (0..n_modes).map(|n| n as f64 + offset).collect();
    let neg: Vec<f64> = pos.iter().map(|m| -m).collect();
    let coeffs = |s: &TestFunction1D, m: &[f64]| fourier_coefficients(s, m, l, panels);
    let f1n = coeffs(&f.f1, &neg);
    let g1p = coeffs(&gc.f1, &pos);
    let f2p = coeffs(&f.f2, &pos);
    let g2n = coeffs(&gc.f2, &neg);
    let mut acc: Complex64 = (0..n_modes).map(|n| f1n[n] * g1p[n] + f2p[n] * g2n[n]).sum();
    if !state.is_ns() {
        let gm = g_covariance(state, geo)?;
        let f0 = [coeffs(&f.f1, &[0.0])[0], coeffs(&f.f2, &[0.0])[0]];
        let g0 = [coeffs(&gc.f1, &[0.0])[0], coeffs(&gc.f2, &[0.0])[0]];
        for a in 0..2 {
            for b in 0..2 {
                acc += gm[(a, b)] * l * f0[a] * g0[b];
            }
        }
    }
    Ok(acc)
}

fn on_cut(geo: &Geometry, z: Complex64) -> bool {
    let l = geo.circumference();
    let r = (z.re + 0.5 * l).rem_euclid(l) - 0.5 * l;
    z.im == 0.0 && r.abs() <= geo.half_width()
}

/// `(Hf)(z)` for `z` off the cut, for `f` supported in `[-ℓ, ℓ]`.
pub fn analytic_h(
    f: &TestSpinor,
    z: Complex64,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<[Complex64; 2]> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("z = {z} is not finite")));
    }
    if on_cut(geo, z) {
        return Err(Error::Domain(format!("z = {z} lies on the cut; use boundary_h")));
    }
    let k = geo.k();
    let coef = Complex64::new(0.0, -0.5 / geo.circumference());
    let ns = state.is_ns();
    let mut out = [ZERO; 2];
    let mut ints = [ZERO; 2];
    for a in Chirality::BOTH {
        let fa = f.component(a);
        let (c, d) = fa.support();
        if d <= c {
            continue;
        }
        let eta = z.im.abs();
        let mut breaks = vec![];
        for s in [-8.0, -1.0, 0.0, 1.0, 8.0] {
            let b = z.re + s * eta;
            if b > c && b < d {
                breaks.push(b);
            }
        }
        let kern = |y: f64| {
            let w = (z - y) * k;
            if ns {
                1.0 / w.sin()
            } else {
                1.0 / w.tan()
            }
        };
        let r = integrate(|y| fa.eval(y) * kern(y), c, d, &breaks, quad);
        out[a.index()] = coef * a.sign() * r.value;
        if !ns {
            ints[a.index()] = integrate(|y| fa.eval(y), c, d, &[], quad).value;
        }
    }
    if !ns {
        let h = build_h(state, geo)?.0;
        for a in 0..2 {
            out[a] += h[(a, 0)] * ints[0] + h[(a, 1)] * ints[1];
        }
    }
    Ok(out)
}

/// Boundary values `(Hf)^±(x)` on the cut, from `G f` and the jump
/// `(Hf)⁻ - (Hf)⁺ = (f₁, -f₂)`.
pub fn boundary_h(
    f: &TestSpinor,
    x: f64,
    side: Side,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<[Complex64; 2]> {
    let kern = TwoPointKernel::new(state, geo, Domain::Interval)?;
    let [g1, g2] = kern.apply(f, &[x], quad)?[0];
    let fx = f.eval(x);
    Ok(match side {
        Side::Below => [g1, g2 - fx[1]],
        Side::Above => [g1 - fx[0], g2],
    })
}
