//! Resolvent `R(μ) = (G - μ)⁻¹` of the restricted two-point operator.
//!
//! With `λ = (i/2π)·log(1 - 1/μ)` and `E_ab(x,y) = e^{λ(Ω_a(x) - Ω_b(y))}`,
//!
//! ```text
//! R_ab = C·[σ_a δ_ab K(x - y ∓ iε)/(2iL) + g_ab(μ)]·E_ab - δ_ab δ(x-y)/μ,
//! C = 1/(μ(1-μ)),
//! ```
//!
//! where `K` is `1/sin(π·/L)` for NS and `cot(π·/L)` for R, and `g = 0` for NS.
//! The factor `E` separates in `x` and `y`, so applying `R` is a `G`-type
//! smearing of `e^{-λΩ_b} f_b` followed by multiplication with `e^{λΩ_a}`.
//!
//! For `μ ∈ (0,1)` the jump `R(μ+i0) - R(μ-i0)` is smooth. With
//! `μ = 1/(1 + e^{-2πs})` the spectral density separates into
//! one-dimensional transforms in `Ω`.

use crate::correlators::Side;
use crate::distributions::interp::PiecewiseCheb;
use crate::distributions::kernel::{const_diag, v_range, PairFn, PvPart, Singularity, SingularKernel1D};
use crate::distributions::quadrature::{integrate, QuadratureSpec};
use crate::distributions::{Smoothness, TestFunction1D, TestSpinor};
use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry, IntervalPoint};
use crate::states::{build_h, StateParams};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spectral parameter off `[0,1]`, or a boundary value on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventPoint {
    mu: Complex64,
    /// `log(1 - 1/μ)`; principal off the cut, `ln(1/μ - 1) ± iπ` on it.
    log_base: Complex64,
}

impl ResolventPoint {
    pub fn new(mu: Complex64) -> Result<Self> {
        if !(mu.re.is_finite() && mu.im.is_finite()) {
            return Err(Error::Domain(format!("mu = {mu} is not finite")));
        }
        if mu.im == 0.0 && (0.0..=1.0).contains(&mu.re) {
            return Err(Error::Domain(format!(
                "mu = {} lies on the spectrum [0,1]; use a boundary value",
                mu.re
            )));
        }
        Ok(ResolventPoint {
            mu,
            log_base: (1.0 - 1.0 / mu).ln(),
        })
    }

    /// `μ ± i0` for `0 < μ < 1`.
    pub fn boundary(mu: f64, side: Side) -> Result<Self> {
        if !(mu > 1e-300 && mu < 1.0) {
            return Err(Error::Domain(format!("boundary value needs 0 < mu < 1, got {mu}")));
        }
        let s = match side {
            Side::Above => 1.0,
            Side::Below => -1.0,
        };
        Ok(ResolventPoint {
            mu: Complex64::new(mu, 0.0),
            log_base: Complex64::new(((1.0 - mu) / mu).ln(), s * PI),
        })
    }

    /// `μ(s) ± i0` with `μ(s) = 1/(1 + e^{-2πs})`, keeping full precision in
    /// the logarithm where `μ` itself rounds to 0 or 1.
    pub fn boundary_at_s(s: f64, side: Side) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("spectral coordinate s = {s} is not finite")));
        }
        let sign = match side {
            Side::Above => 1.0,
            Side::Below => -1.0,
        };
        Ok(ResolventPoint {
            mu: Complex64::new(mu_of_s(s), 0.0),
            log_base: Complex64::new(-2.0 * PI * s, sign * PI),
        })
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    pub fn log_base(&self) -> Complex64 {
        self.log_base
    }

    /// `λ = (i/2π)·log(1 - 1/μ)`.
    pub fn lambda(&self) -> Complex64 {
        I * self.log_base / (2.0 * PI)
    }

    /// `(1 - 1/μ)^p` on this point's branch.
    pub fn power(&self, p: Complex64) -> Complex64 {
        (p * self.log_base).exp()
    }

    /// `1/(μ(1-μ))`
    pub fn prefactor(&self) -> Complex64 {
        1.0 / (self.mu * (1.0 - self.mu))
    }
}

fn check_off_cut(geo: &Geometry, z: Complex64) -> Result<()> {
    let l = geo.circumference();
    let r = (z.re + 0.5 * l).rem_euclid(l) - 0.5 * l;
    if !(z.re.is_finite() && z.im.is_finite()) || (z.im == 0.0 && r.abs() <= geo.half_width()) {
        return Err(Error::Domain(format!("z = {z} lies on the cut")));
    }
    Ok(())
}

/// `ρ_k(z) = (i/2π)·ln(sin(π(z-ℓ)/L)/sin(π(z+ℓ)/L))`, principal log. The
/// ratio is negative real exactly on the cut, so this branch is continuous
/// on the cut cylinder.
pub fn rho_k(z: Complex64, geo: &Geometry) -> Result<Complex64> {
    check_off_cut(geo, z)?;
    let k = geo.k();
    let ell = geo.half_width();
    let ratio = ((z - ell) * k).sin() / ((z + ell) * k).sin();
    Ok(I / (2.0 * PI) * ratio.ln())
}

/// `ρ_k^±(x) = -(i/2π)Ω₁(x) ∓ ½`.
pub fn rho_k_boundary(x: f64, side: Side, geo: &Geometry) -> Result<Complex64> {
    let p = geo.point(x)?;
    if !p.omega1.is_finite() {
        return Err(Error::Domain(format!("x = {x} is an endpoint")));
    }
    let s = match side {
        Side::Above => -0.5,
        Side::Below => 0.5,
    };
    Ok(Complex64::new(s, -p.omega1 / (2.0 * PI)))
}

/// `M_k(z) = (1 - 1/μ)^{ρ_k(z)}`.
pub fn m_k(z: Complex64, mu: &ResolventPoint, geo: &Geometry) -> Result<Complex64> {
    Ok(mu.power(rho_k(z, geo)?))
}

/// `M_k^±(x)` from the boundary values of `ρ_k`.
pub fn m_k_boundary(x: f64, side: Side, mu: &ResolventPoint, geo: &Geometry) -> Result<Complex64> {
    Ok(mu.power(rho_k_boundary(x, side, geo)?))
}

/// The zero-mode matrix `g(μ)` entering the R resolvent, with `w = ℓ/L`.
pub fn g_mu(mu: &ResolventPoint, state: &StateParams, geo: &Geometry) -> Result<Matrix2<Complex64>> {
    let z = state.zero_mode()?;
    let h = build_h(state, geo)?.0;
    let l = geo.circumference();
    let w = geo.half_width() / l;
    let q = mu.power(Complex64::new(2.0 * w, 0.0));
    let qi = 1.0 / q;
    let plus = (1.0 + 2.0 * l * z.h1) * (1.0 + 2.0 * l * z.h2);
    let minus = (1.0 - 2.0 * l * z.h1) * (1.0 - 2.0 * l * z.h2);
    let c0 = 1.0 - 4.0 * l * l * z.h1 * z.h2;
    let den = c0 + 0.5 * plus * q + 0.5 * minus * qi;
    let size = c0.abs() + 0.5 * (plus.abs() * q.norm() + minus.abs() * qi.norm());
    if den.norm() < 1e-13 * size {
        return Err(Error::Degenerate(format!("g(mu) denominator {den} vanishes at mu = {}", mu.mu())));
    }
    let tr = h[(0, 0)] + h[(1, 1)];
    let diag = -tr + (plus * q - minus * qi) / (4.0 * l);
    let num = h * Complex64::new(2.0, 0.0) + Matrix2::from_diagonal_element(diag);
    Ok(num / den)
}

/// `g(μ ± i0)` for `0 < μ < 1`.
pub fn g_mu_boundary(mu: f64, side: Side, state: &StateParams, geo: &Geometry) -> Result<Matrix2<Complex64>> {
    g_mu(&ResolventPoint::boundary(mu, side)?, state, geo)
}

/// Which closed form of the kernel to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    /// Boundary value of the `iε` kernel, split into PV and `δ`.
    Epsilon,
    /// Rewritten with `(1/μ - 1)^{iΔΩ/2π}`, an explicit `arg` weight and
    /// `PV 1/sin` (times `cos` for R).
    Rewritten,
}

#[derive(Clone)]
pub struct ResolventKernel {
    point: ResolventPoint,
    state: StateParams,
    geo: Geometry,
    g: Option<Matrix2<Complex64>>,
    kernel: SingularKernel1D,
}

fn chiral_sign_matrix(c: Complex64) -> Matrix2<Complex64> {
    Matrix2::new(c, ZERO, ZERO, -c)
}

impl ResolventKernel {
    pub fn new(point: ResolventPoint, state: &StateParams, geo: &Geometry) -> Result<Self> {
        Self::with_form(point, state, geo, KernelForm::Epsilon)
    }

    pub fn with_form(point: ResolventPoint, state: &StateParams, geo: &Geometry, form: KernelForm) -> Result<Self> {
        let g = if state.is_ns() { None } else { Some(g_mu(&point, state, geo)?) };
        let c = point.prefactor();
        let coef = c * Complex64::new(0.0, -0.5 / geo.circumference());
        let lam = point.lambda();
        let diag_active = [[true, false], [false, true]];
        let mut kernel = SingularKernel1D::empty(geo);
        let omega_factor = move |x: &IntervalPoint, y: &IntervalPoint, a: Chirality, b: Chirality| {
            (lam * (x.omega(a) - y.omega(b))).exp()
        };
        match form {
            KernelForm::Epsilon => {
                let singularity = if state.is_ns() {
                    Singularity::InvSinDiff
                } else {
                    Singularity::CotDiff
                };
                let pre: PairFn = Arc::new(move |x, y| {
                    let d = Chirality::BOTH.map(|a| omega_factor(x, y, a, a));
                    Matrix2::new(coef * d[0], ZERO, ZERO, -coef * d[1])
                });
                kernel.pv.push(PvPart {
                    prefactor: pre,
                    singularity,
                    active: diag_active,
                });
                // ½δ from the iε split, minus δ/μ.
                let d = 0.5 * c - 1.0 / point.mu();
                kernel.delta_diag = Some(const_diag(Matrix2::from_diagonal_element(d)));
            }
            KernelForm::Rewritten => {
                let mu = point.mu();
                let log_a = (1.0 / mu - 1.0).ln();
                let weight = (log_a.im - point.log_base().im) / (2.0 * PI);
                let ns = state.is_ns();
                let k = geo.k();
                let pre: PairFn = Arc::new(move |x, y| {
                    let trig = if ns { 1.0 } else { (k * x.minus(y)).cos() };
                    let d = Chirality::BOTH.map(|a| {
                        let dw = x.omega(a) - y.omega(a);
                        (dw * weight).exp() * (I * dw / (2.0 * PI) * log_a).exp() * trig
                    });
                    Matrix2::new(coef * d[0], ZERO, ZERO, -coef * d[1])
                });
                kernel.pv.push(PvPart {
                    prefactor: pre,
                    singularity: Singularity::InvSinDiff,
                    active: diag_active,
                });
                let d = -(1.0 - 2.0 * mu) * c * 0.5;
                kernel.delta_diag = Some(const_diag(Matrix2::from_diagonal_element(d)));
            }
        }
        if let Some(g) = g {
            let gc = g * c;
            kernel.smooth = Some(Arc::new(move |x, y| {
                let mut m = gc;
                for a in Chirality::BOTH {
                    for b in Chirality::BOTH {
                        m[(a.index(), b.index())] *= omega_factor(x, y, a, b);
                    }
                }
                m
            }));
        }
        Ok(ResolventKernel {
            point,
            state: *state,
            geo: *geo,
            g,
            kernel,
        })
    }

    pub fn point(&self) -> &ResolventPoint {
        &self.point
    }

    pub fn kernel(&self) -> &SingularKernel1D {
        &self.kernel
    }

    /// `g(μ)` for R states.
    pub fn g(&self) -> Option<Matrix2<Complex64>> {
        self.g
    }

    /// `(R f)(x)` at each position, by direct smearing.
    pub fn apply(&self, f: &TestSpinor, xs: &[f64], quad: &QuadratureSpec) -> Result<Vec<[Complex64; 2]>> {
        let pts: Vec<IntervalPoint> = xs.iter().map(|&x| self.geo.point(x)).collect::<Result<_>>()?;
        self.kernel.apply(f, &pts, quad)
    }

    /// `⟨g, R f⟩`.
    pub fn matrix_element(&self, g: &TestSpinor, f: &TestSpinor, quad: &QuadratureSpec) -> Result<Complex64> {
        matrix_element(&self.geo, &self.kernel, g, f, quad)
    }

    /// `R f` as a test spinor. The smooth factor
    /// `J_a = Σ_b ∫ [σ_a δ_ab PV K/(2iL) + g_ab] e^{-λΩ_b(y)} f_b(y) dy`
    /// is interpolated in `v = Ω₁(x)` on `[-omega_max, omega_max]`.
    pub fn solve(&self, f: &TestSpinor, quad: &QuadratureSpec) -> Result<TestSpinor> {
        let geo = self.geo;
        let lam = self.point.lambda();
        let weighted = TestSpinor::new(
            weight_by_omega(&geo, &f.f1, -lam, Chirality::One),
            weight_by_omega(&geo, &f.f2, -lam, Chirality::Two),
        );
        let mut jk = SingularKernel1D::empty(&geo);
        jk.pv.push(PvPart {
            prefactor: Arc::new({
                let c = Complex64::new(0.0, -0.5 / geo.circumference());
                move |_, _| chiral_sign_matrix(c)
            }),
            singularity: if self.state.is_ns() {
                Singularity::InvSinDiff
            } else {
                Singularity::CotDiff
            },
            active: [[true, false], [false, true]],
        });
        if let Some(g) = self.g {
            jk.smooth = Some(Arc::new(move |_, _| g));
        }
        let failure = Mutex::new(None);
        let vm = quad.omega_max;
        let interp = PiecewiseCheb::build(
            |v| match jk.smear(&weighted, &geo.point_at_omega(v), quad) {
                Ok(r) => r.applied().to_vec(),
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    vec![ZERO; 2]
                }
            },
            -vm,
            vm,
            2,
            quad.abs_tol,
            quad.rel_tol,
        );
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        let interp = Arc::new(interp);
        let c = self.point.prefactor();
        let dcoef = -(1.0 - 2.0 * self.point.mu()) * c * 0.5;
        let l = geo.half_width();
        let comp = |a: Chirality| {
            let fa = f.component(a).clone();
            let j = interp.clone();
            TestFunction1D::from_point_fn(
                &geo,
                move |p: &IntervalPoint| {
                    let v = p.omega1.clamp(-vm, vm);
                    c * (lam * p.omega(a)).exp() * j.eval(v, a.index()) + dcoef * fa.eval_point(p)
                },
                (-l, l),
                Smoothness::L2,
            )
        };
        Ok(TestSpinor::new(comp(Chirality::One), comp(Chirality::Two)))
    }
}

/// `e^{p·Ω_a(y)} f(y)`, keeping the support.
fn weight_by_omega(geo: &Geometry, f: &TestFunction1D, p: Complex64, a: Chirality) -> TestFunction1D {
    let f = f.clone();
    let support = f.support();
    let smooth = f.smoothness();
    TestFunction1D::from_point_fn(geo, move |y| f.eval_point(y) * (p * y.omega(a)).exp(), support, smooth)
}

/// `⟨g, K f⟩ = Σ_a ∫ conj(g_a(x)) (K f)_a(x) dx`, integrated in `v = Ω₁(x)`.
pub fn matrix_element(
    geo: &Geometry,
    kernel: &SingularKernel1D,
    g: &TestSpinor,
    f: &TestSpinor,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let mut acc = ZERO;
    for a in Chirality::BOTH {
        let ga = g.component(a);
        let Some((lo, hi)) = v_range(geo, ga, quad) else {
            continue;
        };
        let failure = Mutex::new(None);
        let r = integrate(
            |v| {
                let p = geo.point_at_omega(v);
                let gv = ga.eval_point(&p);
                if gv == ZERO {
                    return ZERO;
                }
                match kernel.smear(f, &p, quad) {
                    Ok(s) => gv.conj() * s.applied()[a.index()] * geo.jacobian(&p),
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        ZERO
                    }
                }
            },
            lo,
            hi,
            &[],
            quad,
        );
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        acc += r.value;
    }
    Ok(acc)
}

/// `(R(μ) f)(x)` at each position with default quadrature.
pub fn resolvent_apply(
    mu: Complex64,
    f: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    xs: &[f64],
) -> Result<Vec<[Complex64; 2]>> {
    ResolventKernel::new(ResolventPoint::new(mu)?, state, geo)?.apply(f, xs, &QuadratureSpec::default())
}

/// `μ = 1/(1 + e^{-2πs})`
pub fn mu_of_s(s: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * PI * s).exp())
}

/// `s = ln(μ/(1-μ))/(2π)`
pub fn s_of_mu(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln() / (2.0 * PI)
}

/// Pointwise jump kernel `[R(μ+i0) - R(μ-i0)]_ab(x, y)` for `0 < μ < 1`.
pub fn jump_kernel(
    mu: f64,
    x: &IntervalPoint,
    y: &IntervalPoint,
    state: &StateParams,
    geo: &Geometry,
) -> Result<Matrix2<Complex64>> {
    check_endpoint_distance(mu)?;
    let s = s_of_mu(mu);
    let c = 1.0 / (mu * (1.0 - mu));
    let l = geo.circumference();
    let pp = (geo.endpoint_product(x) * geo.endpoint_product(y)).sqrt();
    let local = -c * geo.sin_2w() / (2.0 * l) / pp * Complex64::new(0.0, -1.0);
    let trig = if state.is_ns() { 1.0 } else { (geo.k() * x.minus(y)).cos() };
    let mut m = Matrix2::from_element(ZERO);
    for a in Chirality::BOTH {
        let d = x.omega(a) - y.omega(a);
        m[(a.index(), a.index())] = local * trig * Complex64::from_polar(1.0, -s * d);
    }
    if !state.is_ns() {
        let gp = g_mu_boundary(mu, Side::Above, state, geo)?;
        let gm = g_mu_boundary(mu, Side::Below, state, geo)?;
        for a in Chirality::BOTH {
            for b in Chirality::BOTH {
                let d = x.omega(a) - y.omega(b);
                let (i, j) = (a.index(), b.index());
                m[(i, j)] += c * Complex64::from_polar(1.0, -s * d) * (gp[(i, j)] * (-0.5 * d).exp() - gm[(i, j)] * (0.5 * d).exp());
            }
        }
    }
    Ok(m)
}

fn check_endpoint_distance(mu: f64) -> Result<()> {
    if !(mu > 1e-10 && mu < 1.0 - 1e-10) {
        return Err(Error::Domain(format!(
            "mu = {mu} within 1e-10 of the spectral endpoints; use the limit identities"
        )));
    }
    Ok(())
}

/// `∫ f(y) e^{p·Ω_a(y)} w(y) dy` over the support, in `v`.
fn omega_transform(
    geo: &Geometry,
    f: &TestFunction1D,
    a: Chirality,
    p: Complex64,
    weight: impl Fn(&IntervalPoint) -> f64,
    quad: &QuadratureSpec,
) -> Complex64 {
    let Some((lo, hi)) = v_range(geo, f, quad) else {
        return ZERO;
    };
    integrate(
        |v| {
            let y = geo.point_at_omega(v);
            f.eval_point(&y) * (p * y.omega(a)).exp() * weight(&y) * geo.jacobian(&y)
        },
        lo,
        hi,
        &[],
        quad,
    )
    .value
}

/// `(1/2πi)·⟨g, [R(μ+i0) - R(μ-i0)] f⟩`, the density of the spectral
/// measure of `G` at `0 < μ < 1`, from the closed-form jump kernel.
pub fn spectral_density(
    mu: f64,
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    check_endpoint_distance(mu)?;
    let d = spectral_density_s(s_of_mu(mu), f, g, state, geo, quad)?;
    Ok(d / (2.0 * PI * mu * (1.0 - mu)))
}

/// The same measure per unit `s = ln(μ/(1-μ))/2π`, i.e. `dE(f,g)/ds`. Valid
/// for every real `s`; the tails toward `μ ∈ {0, 1}` stay accurate.
pub fn spectral_density_s(
    s: f64,
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let l = geo.circumference();
    let k = geo.k();
    let is = Complex64::new(0.0, s);
    let inv_sqrt_p = |y: &IntervalPoint| 1.0 / geo.endpoint_product(y).sqrt();
    // Local part: S/(2L) Σ_a conj(ĝ_a) f̂_a, with cos(k(x-y)) split for R.
    let mut local = ZERO;
    let trig_weights: Vec<Box<dyn Fn(&IntervalPoint) -> f64 + Sync>> = if state.is_ns() {
        vec![Box::new(|_| 1.0)]
    } else {
        vec![Box::new(move |y| (k * y.x).cos()), Box::new(move |y| (k * y.x).sin())]
    };
    for a in Chirality::BOTH {
        for w in &trig_weights {
            let wf = |y: &IntervalPoint| w(y) * inv_sqrt_p(y);
            let ft = omega_transform(geo, f.component(a), a, is, wf, quad);
            let gt = omega_transform(geo, g.component(a), a, is, wf, quad);
            local += gt.conj() * ft;
        }
    }
    let mut total = local * (geo.sin_2w() / (2.0 * l));
    if !state.is_ns() {
        let gp = g_mu(&ResolventPoint::boundary_at_s(s, Side::Above)?, state, geo)?;
        let gm = g_mu(&ResolventPoint::boundary_at_s(s, Side::Below)?, state, geo)?;
        let t = |h: &TestSpinor, a: Chirality, kappa: f64| {
            omega_transform(geo, h.component(a), a, is + 0.5 * kappa, |_| 1.0, quad)
        };
        let mut acc = ZERO;
        for a in Chirality::BOTH {
            let (gam, gap) = (t(g, a, -1.0).conj(), t(g, a, 1.0).conj());
            for b in Chirality::BOTH {
                let (fbp, fbm) = (t(f, b, 1.0), t(f, b, -1.0));
                let (i, j) = (a.index(), b.index());
                acc += gp[(i, j)] * gam * fbp - gm[(i, j)] * gap * fbm;
            }
        }
        total += -I * acc;
    }
    Ok(total)
}

/// `∫ φ(s)·dE(f,g)/ds ds` over `|s| ≤ s_max`; `μ = 1/(1 + e^{-2πs})`.
pub fn integrate_density<P>(
    phi: P,
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    s_max: f64,
    quad: &QuadratureSpec,
) -> Result<Complex64>
where
    P: Fn(f64) -> Complex64 + Sync,
{
    integrate_density_over(phi, f, g, state, geo, (-s_max, s_max), quad)
}

/// `∫ φ(s)·dE(f,g)/ds ds` over `s_lo ≤ s ≤ s_hi`.
pub fn integrate_density_over<P>(
    phi: P,
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    (s_lo, s_hi): (f64, f64),
    quad: &QuadratureSpec,
) -> Result<Complex64>
where
    P: Fn(f64) -> Complex64 + Sync,
{
    let failure = Mutex::new(None);
    let breaks: Vec<f64> = if s_lo < 0.0 && s_hi > 0.0 { vec![0.0] } else { vec![] };
    let r = integrate(
        |s| match spectral_density_s(s, f, g, state, geo, quad) {
            Ok(d) => phi(s) * d,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                ZERO
            }
        },
        s_lo,
        s_hi,
        &breaks,
        quad,
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(r.value)
}

/// Spectral densities at a list of `μ` values, in parallel.
pub fn spectral_density_sweep(
    mus: &[f64],
    f: &TestSpinor,
    g: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<Vec<Complex64>> {
    mus.par_iter().map(|&m| spectral_density(m, f, g, state, geo, quad)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo() -> Geometry {
        Geometry::desk()
    }

    #[test]
    fn rho_boundary_values() {
        let g = geo();
        for x in [-0.9, -0.3, 0.0, 0.45, 0.8] {
            let om = g.omega(Chirality::One, x).unwrap();
            for (side, s) in [(Side::Above, 1.0), (Side::Below, -1.0)] {
                let b = rho_k_boundary(x, side, &g).unwrap();
                let expect = Complex64::new(-0.5 * s, -om / (2.0 * PI));
                assert!((b - expect).norm() < 1e-15);
                let near = rho_k(Complex64::new(x, s * 1e-9), &g).unwrap();
                assert!((near - expect).norm() < 1e-8, "{near} vs {expect}");
            }
            let jump = rho_k_boundary(x, Side::Below, &g).unwrap() - rho_k_boundary(x, Side::Above, &g).unwrap();
            assert!((jump - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn rho_at_infinity() {
        let g = geo();
        let w = g.half_width() / g.circumference();
        for x in [0.0, 0.7, 2.5] {
            assert!((rho_k(Complex64::new(x, 30.0), &g).unwrap() + w).norm() < 1e-12);
            assert!((rho_k(Complex64::new(x, -30.0), &g).unwrap() - w).norm() < 1e-12);
        }
    }

    #[test]
    fn m_jump_and_large_mu() {
        let g = geo();
        for mu in [Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.3)] {
            let p = ResolventPoint::new(mu).unwrap();
            for x in [-0.6, 0.2] {
                let r = m_k_boundary(x, Side::Below, &p, &g).unwrap() / m_k_boundary(x, Side::Above, &p, &g).unwrap();
                assert!((r - (1.0 - 1.0 / mu)).norm() < 1e-13);
            }
        }
        let p = ResolventPoint::new(Complex64::new(1e9, 0.0)).unwrap();
        assert!((m_k(Complex64::new(0.3, 0.5), &p, &g).unwrap() - 1.0).norm() < 1e-8);
    }

    #[test]
    fn m_bounded_at_the_endpoints() {
        let g = geo();
        for mu in [Complex64::new(3.0, 0.0), Complex64::new(0.4, -0.2), Complex64::new(-2.0, 1.0)] {
            let p = ResolventPoint::new(mu).unwrap();
            for (end, dir) in [(1.0, Complex64::new(1.0, 1.0)), (-1.0, Complex64::new(-1.0, -2.0))] {
                for d in [1e-3, 1e-6, 1e-9] {
                    let dz = dir / dir.norm() * d;
                    let m = m_k(Complex64::new(end, 0.0) + dz, &p, &g).unwrap();
                    assert!(d.sqrt() * m.norm() < 2.0, "{mu} {end} {d}: {}", m.norm());
                }
            }
        }
    }

    #[test]
    fn g_mu_zero_h_closed_form() {
        let g = geo();
        let st = StateParams::zero_temperature(&g);
        let m = g_mu(&ResolventPoint::new(Complex64::new(2.0, 0.0)).unwrap(), &st, &g).unwrap();
        let r = 0.5f64.sqrt();
        let expect = (r - 1.0 / r) / (4.0 * 4.0) / (1.0 + 0.5 * (r + 1.0 / r));
        assert!((m[(0, 0)] - expect).norm() < 1e-15);
        assert!((m[(1, 1)] - expect).norm() < 1e-15);
        assert!(m[(0, 1)].norm() < 1e-16);
    }

    #[test]
    fn g_mu_limits() {
        let g = geo();
        let st = StateParams::ramond(&g, 0.07, -0.03, 1.1, 0.6).unwrap();
        let h = build_h(&st, &g).unwrap().0;
        let mut prev = f64::INFINITY;
        for m in [1e2, 1e3, 1e4] {
            let gm = g_mu(&ResolventPoint::new(Complex64::new(m, 0.0)).unwrap(), &st, &g).unwrap();
            let d = (gm - h).norm();
            assert!(d * m < 1.0 && d < prev);
            prev = d;
        }
        let b = 0.5 / g.circumference();
        for m in [1e-4, 1e-8] {
            let gm = g_mu_boundary(m, Side::Above, &st, &g).unwrap();
            let d = (gm - Matrix2::from_diagonal_element(Complex64::new(b, 0.0))).norm();
            assert!(d < 10.0 * m.powf(0.5), "{m}: {d}");
        }
    }

    #[test]
    fn point_validation() {
        assert!(ResolventPoint::new(Complex64::new(0.3, 0.0)).is_err());
        assert!(ResolventPoint::new(Complex64::new(0.0, 0.0)).is_err());
        assert!(ResolventPoint::new(Complex64::new(0.3, 1e-3)).is_ok());
        assert!(ResolventPoint::boundary(1.0, Side::Above).is_err());
        assert!(spectral_density(
            1e-12,
            &crate::distributions::probes::omega_pair(&geo(), 0.0, 1.0),
            &crate::distributions::probes::omega_pair(&geo(), 0.0, 1.0),
            &StateParams::ns(),
            &geo(),
            &QuadratureSpec::default()
        )
        .is_err());
    }
}
