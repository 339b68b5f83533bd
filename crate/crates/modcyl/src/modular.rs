//! Modular flow `K(t) = (G/(1-G))^{it}` and modular Hamiltonian
//! `H = ln(G/(1-G))` restricted to `[-ℓ, ℓ]`.
//!
//! Local parts follow the trajectories `Ω_a(y) = Ω_a(x) - 2πt` and are
//! applied by exact transport, weighted by `cos(π(x - y)/L)` for periodic
//! states. The periodic states also add, for each zero-mode
//! eigenvalue `hᵢ` with `rᵢ = (1+2Lhᵢ)/(1-2Lhᵢ)`, a term
//!
//! ```text
//! (1/4ℓ) sinh(πt) Pf 1/sinh(L α/4ℓ) · rᵢ^{iLα/4πℓ} · Aᵢ,   α = 2πt - Ω_a(x) + Ω_b(y),
//! ```
//!
//! with `A₁ = 𝟙 + n·σ`, `A₂ = 𝟙 - n·σ`. When `|2Lhᵢ| = 1` the term
//! collapses to `±(iπ/L) sinh(πt) δ(α) Aᵢ`, which is how the pure states
//! become local or anti-local.

use crate::distributions::interp::PiecewiseCheb;
use crate::distributions::kernel::{DeltaPrimePart, PairFn, PvPart, Singularity, SingularKernel1D};
use crate::distributions::quadrature::integrate;
use crate::distributions::{QuadratureSpec, Smoothness, TestFunction1D, TestSpinor};
use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry, IntervalPoint};
use crate::states::{classify, StateClass, StateParams, ZeroMode};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Extreme points of the double cone of periodic ground states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PureLimit {
    TipPlus,
    TipMinus,
    RimPlus,
    RimMinus,
}

impl PureLimit {
    fn sign(self) -> f64 {
        match self {
            PureLimit::TipPlus | PureLimit::RimPlus => 1.0,
            PureLimit::TipMinus | PureLimit::RimMinus => -1.0,
        }
    }

    /// Chirality structure of the extra local term.
    fn matrix(self, psi: f64, phi: f64) -> Matrix2<Complex64> {
        match self {
            PureLimit::TipPlus | PureLimit::TipMinus => Matrix2::identity(),
            PureLimit::RimPlus | PureLimit::RimMinus => {
                let c = Complex64::new(psi.cos(), 0.0);
                let e = Complex64::from_polar(psi.sin(), phi);
                Matrix2::new(c, e, e.conj(), -c)
            }
        }
    }

    pub fn state(self, geo: &Geometry, psi: f64, phi: f64) -> Result<StateParams> {
        match self {
            PureLimit::TipPlus => Ok(StateParams::tip(geo, true)),
            PureLimit::TipMinus => Ok(StateParams::tip(geo, false)),
            PureLimit::RimPlus => StateParams::rim(geo, true, psi, phi),
            PureLimit::RimMinus => StateParams::rim(geo, false, psi, phi),
        }
    }
}

/// `c·δ(Ω_a(x) - Ω_b(y) - shift)·M_ab`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OmegaDelta {
    coef: Complex64,
    matrix: Matrix2<Complex64>,
}

impl OmegaDelta {
    /// `∫ c δ(Ω_a(x) - Ω_b(y) - shift) M_ab f_b(y) dy`, summed over `b`.
    fn apply(&self, geo: &Geometry, f: &TestSpinor, x: &IntervalPoint, shift: f64) -> [Complex64; 2] {
        let mut out = [ZERO; 2];
        for a in Chirality::BOTH {
            for b in Chirality::BOTH {
                let m = self.matrix[(a.index(), b.index())];
                if m == ZERO {
                    continue;
                }
                let y = geo.point_at_omega(b.sign() * (x.omega(a) - shift));
                out[a.index()] += self.coef * m * geo.jacobian(&y) * f.component(b).eval_point(&y);
            }
        }
        out
    }
}

/// One zero-mode term: PV while `rᵢ ∈ (0, ∞)`, δ once `rᵢ ∈ {0, ∞}`.
enum ZeroModeTerm {
    Pv { log_r: f64, matrix: Matrix2<Complex64> },
    Delta { sign: f64, matrix: Matrix2<Complex64> },
}

fn zero_mode_terms(z: &ZeroMode, geo: &Geometry) -> Vec<ZeroModeTerm> {
    let ratios = z.ratios(geo);
    let mats = z.mixing_matrices();
    ratios
        .iter()
        .zip(mats)
        .map(|(&r, m)| {
            if r == f64::INFINITY {
                ZeroModeTerm::Delta { sign: 1.0, matrix: m }
            } else if r <= 0.0 {
                ZeroModeTerm::Delta { sign: -1.0, matrix: m }
            } else {
                ZeroModeTerm::Pv { log_r: r.ln(), matrix: m }
            }
        })
        .collect()
}

fn scale(geo: &Geometry) -> f64 {
    geo.circumference() / (4.0 * geo.half_width())
}

/// PV part `pre·Σᵢ rᵢ^{i c α}·Aᵢ / sinh(scale·(Ω_a(x) - Ω_b(y) - shift))`, with
/// `α = shift - Ω_a(x) + Ω_b(y)` and `c = L/(4πℓ)`.
fn zero_mode_pv(geo: &Geometry, terms: &[(f64, Matrix2<Complex64>)], pre: Complex64, shift: f64) -> PvPart {
    let c = geo.circumference() / (4.0 * PI * geo.half_width());
    let terms = terms.to_vec();
    let mut active = [[false; 2]; 2];
    for (_, m) in &terms {
        for a in 0..2 {
            for b in 0..2 {
                active[a][b] |= m[(a, b)] != ZERO;
            }
        }
    }
    let prefactor: PairFn = Arc::new(move |x, y| {
        let mut out = Matrix2::from_element(ZERO);
        for a in Chirality::BOTH {
            for b in Chirality::BOTH {
                let alpha = shift - x.omega(a) + y.omega(b);
                let (i, j) = (a.index(), b.index());
                for (log_r, m) in &terms {
                    if m[(i, j)] != ZERO {
                        out[(i, j)] += pre * m[(i, j)] * Complex64::from_polar(1.0, c * alpha * log_r);
                    }
                }
            }
        }
        out
    });
    PvPart {
        prefactor,
        singularity: Singularity::InvSinhOmegaDiff {
            scale: scale(geo),
            shift,
        },
        active,
    }
}

/// Square-root ratio `sqrt(P(y)/P(x))` of endpoint products.
fn transport_weight(geo: &Geometry, y: &IntervalPoint, x: &IntervalPoint) -> f64 {
    (geo.endpoint_product(y) / geo.endpoint_product(x)).sqrt()
}

/// Structured parts of `K_ab(t, x, y)` at one point pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowKernelParts {
    /// `2πt - Ω_a(x) + Ω_b(y)`; the local parts live where this vanishes.
    pub trajectory_residual: [[f64; 2]; 2],
    /// Coefficient of `δ(2πt - Ω_a(x) + Ω_b(y))`.
    pub local_weight: [[Complex64; 2]; 2],
    /// Coefficient of `Pf 1/sinh(L(2πt - Ω_a(x) + Ω_b(y))/4ℓ)`.
    pub nonlocal_prefactor: [[Complex64; 2]; 2],
    /// Prefactor times the singular factor; `None` on the locus.
    pub nonlocal_value: [[Option<Complex64>; 2]; 2],
}

/// The single-particle modular flow at fixed `t`.
#[derive(Clone)]
pub struct ModularFlowKernel {
    t: f64,
    geo: Geometry,
    /// Periodic states weight the transport by `cos(π(x - y)/L)`.
    periodic: bool,
    /// Extra local terms beyond the NS transport.
    local: Vec<OmegaDelta>,
    nonlocal: Option<SingularKernel1D>,
}

impl ModularFlowKernel {
    pub fn new(t: f64, state: &StateParams, geo: &Geometry) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::Invalid(format!("modular time {t} is not finite")));
        }
        let mut k = ModularFlowKernel {
            t,
            geo: *geo,
            periodic: !state.is_ns(),
            local: Vec::new(),
            nonlocal: None,
        };
        if state.is_ns() {
            return Ok(k);
        }
        let z = state.zero_mode()?;
        let sh = (PI * t).sinh();
        let mut pv = Vec::new();
        for term in zero_mode_terms(&z, geo) {
            match term {
                ZeroModeTerm::Pv { log_r, matrix } => pv.push((log_r, matrix)),
                ZeroModeTerm::Delta { sign, matrix } => k.local.push(OmegaDelta {
                    coef: sign * I * PI / geo.circumference() * sh,
                    matrix,
                }),
            }
        }
        if !pv.is_empty() && t != 0.0 {
            // 1/sinh(scale·α) = -1/sinh(scale·(Ω_a(x) - Ω_b(y) - 2πt)).
            let pre = Complex64::new(-sh / (4.0 * geo.half_width()), 0.0);
            let mut nl = SingularKernel1D::empty(geo);
            nl.pv.push(zero_mode_pv(geo, &pv, pre, 2.0 * PI * t));
            k.nonlocal = Some(nl);
        }
        Ok(k)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn is_local(&self) -> bool {
        self.nonlocal.is_none()
    }

    pub fn nonlocal(&self) -> Option<&SingularKernel1D> {
        self.nonlocal.as_ref()
    }

    /// Local part at `x`: NS transport plus any collapsed zero-mode terms.
    fn apply_local(&self, f: &TestSpinor, x: &IntervalPoint) -> [Complex64; 2] {
        let geo = &self.geo;
        let mut out = [ZERO; 2];
        for a in Chirality::BOTH {
            let y = geo.point_at_omega(x.omega1 - a.sign() * 2.0 * PI * self.t);
            let mut w = transport_weight(geo, &y, x);
            if self.periodic {
                w *= (geo.k() * x.minus(&y)).cos();
            }
            out[a.index()] = w * f.component(a).eval_point(&y);
        }
        for d in &self.local {
            let extra = d.apply(geo, f, x, 2.0 * PI * self.t);
            out[0] += extra[0];
            out[1] += extra[1];
        }
        out
    }

    /// `(K(t) f)(x)` at an interior point.
    pub fn apply_point(&self, f: &TestSpinor, x: &IntervalPoint, quad: &QuadratureSpec) -> Result<[Complex64; 2]> {
        let mut out = self.apply_local(f, x);
        if let Some(nl) = &self.nonlocal {
            let r = nl.smear(f, x, quad)?.applied();
            out[0] += r[0];
            out[1] += r[1];
        }
        Ok(out)
    }

    /// `(K(t) f)(x)` for each position.
    pub fn apply(&self, f: &TestSpinor, xs: &[f64], quad: &QuadratureSpec) -> Result<Vec<[Complex64; 2]>> {
        xs.par_iter()
            .map(|&x| {
                let p = self.geo.point(x)?;
                if !p.omega1.is_finite() {
                    return Err(Error::Domain(format!("flow evaluated at the endpoint {x}")));
                }
                self.apply_point(f, &p, quad)
            })
            .collect()
    }

    /// `K(t) f` as a test spinor: exact transport for the local part, the
    /// non-local part interpolated in `v = Ω₁(x)`.
    pub fn apply_fn(&self, f: &TestSpinor, quad: &QuadratureSpec) -> Result<TestSpinor> {
        let geo = self.geo;
        let interp = match &self.nonlocal {
            None => None,
            Some(nl) => Some(Arc::new(interpolate_in_v(&geo, quad, |p| {
                nl.smear(f, p, quad).map(|r| r.applied())
            })?)),
        };
        let local = self.clone();
        let f = f.clone();
        let l = geo.half_width();
        let vm = quad.omega_max;
        let comp = |a: Chirality| {
            let local = local.clone();
            let f = f.clone();
            let interp = interp.clone();
            TestFunction1D::from_point_fn(
                &geo,
                move |p: &IntervalPoint| {
                    let mut v = local.apply_local(&f, p)[a.index()];
                    if let Some(j) = &interp {
                        if p.omega1.abs() <= vm {
                            v += j.eval(p.omega1, a.index());
                        }
                    }
                    v
                },
                (-l, l),
                Smoothness::SchwartzLike,
            )
        };
        Ok(TestSpinor::new(comp(Chirality::One), comp(Chirality::Two)))
    }

    /// Structured parts of the kernel at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<FlowKernelParts> {
        let geo = &self.geo;
        let px = interior(geo, x)?;
        let py = interior(geo, y)?;
        let shift = 2.0 * PI * self.t;
        let mut parts = FlowKernelParts {
            trajectory_residual: [[0.0; 2]; 2],
            local_weight: [[ZERO; 2]; 2],
            nonlocal_prefactor: [[ZERO; 2]; 2],
            nonlocal_value: [[Some(ZERO); 2]; 2],
        };
        let sh = (PI * self.t).sinh();
        let l = geo.circumference();
        for a in Chirality::BOTH {
            for b in Chirality::BOTH {
                let (i, j) = (a.index(), b.index());
                let alpha = shift - px.omega(a) + py.omega(b);
                parts.trajectory_residual[i][j] = alpha;
                if a == b {
                    // (2π/L) sinh(πt) σ_a / sin(π(x-y)/L); on the locus this
                    // equals πS/(L sqrt(P(x)P(y))), which stays finite at t = 0.
                    let s = (geo.k() * px.minus(&py)).sin();
                    let c = if self.periodic { (geo.k() * px.minus(&py)).cos() } else { 1.0 };
                    parts.local_weight[i][j] = c * if alpha.abs() < 1e-12 || s == 0.0 {
                        Complex64::new(
                            PI * geo.sin_2w() / (l * (geo.endpoint_product(&px) * geo.endpoint_product(&py)).sqrt()),
                            0.0,
                        )
                    } else {
                        Complex64::new(2.0 * PI / l * sh * a.sign() / s, 0.0)
                    };
                }
                for d in &self.local {
                    // δ(Ω_a(x) - Ω_b(y) - 2πt) = δ(α).
                    parts.local_weight[i][j] += d.coef * d.matrix[(i, j)];
                }
            }
        }
        if let Some(nl) = &self.nonlocal {
            let part = &nl.pv[0];
            let m = (part.prefactor)(&px, &py);
            let sc = scale(geo);
            for a in 0..2 {
                for b in 0..2 {
                    // Reported against 1/sinh(scale·α), undoing the stored sign.
                    parts.nonlocal_prefactor[a][b] = -m[(a, b)];
                    let alpha = parts.trajectory_residual[a][b];
                    parts.nonlocal_value[a][b] = if alpha == 0.0 {
                        None
                    } else {
                        Some(-m[(a, b)] / (sc * alpha).sinh())
                    };
                }
            }
        }
        Ok(parts)
    }
}

fn interior(geo: &Geometry, x: f64) -> Result<IntervalPoint> {
    let p = geo.point(x)?;
    if !p.omega1.is_finite() {
        return Err(Error::Domain(format!("{x} is an endpoint")));
    }
    Ok(p)
}

/// Interpolate a pointwise spinor field in `v` on `±omega_max`.
fn interpolate_in_v<F>(geo: &Geometry, quad: &QuadratureSpec, field: F) -> Result<PiecewiseCheb>
where
    F: Fn(&IntervalPoint) -> Result<[Complex64; 2]> + Sync,
{
    let failure = Mutex::new(None);
    let vm = quad.omega_max;
    let interp = PiecewiseCheb::build(
        |v| match field(&geo.point_at_omega(v)) {
            Ok(r) => r.to_vec(),
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
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(interp),
    }
}

/// The single-particle modular Hamiltonian as a structured kernel.
#[derive(Clone)]
pub struct ModularHamiltonianKernel {
    geo: Geometry,
    kernel: SingularKernel1D,
}

/// `2iL·[sin²(πℓ/L) - sin(πx/L) sin(πy/L)]/sin(2πℓ/L)·diag(1,-1)` as a `δ'` part.
fn ns_delta_prime(geo: &Geometry) -> DeltaPrimePart {
    let g = *geo;
    let c = 2.0 * geo.circumference() / geo.sin_2w();
    let sigma = |z: Complex64| Matrix2::new(z, ZERO, ZERO, -z);
    DeltaPrimePart {
        // sin²(πℓ/L) - sin²(πx/L) = P(x)
        value: Arc::new(move |x| sigma(I * c * g.endpoint_product(x))),
        dy: Arc::new(move |x| {
            let kx = g.k() * x.x;
            sigma(I * c * (-g.k() * kx.sin() * kx.cos()))
        }),
    }
}

impl ModularHamiltonianKernel {
    pub fn new(state: &StateParams, geo: &Geometry) -> Result<Self> {
        let mut kernel = SingularKernel1D::empty(geo);
        kernel.delta_prime = Some(ns_delta_prime(geo));
        if !state.is_ns() {
            let z = state.zero_mode()?;
            let mut pv = Vec::new();
            let mut diag = Matrix2::from_element(ZERO);
            let mut mirror = Matrix2::from_element(ZERO);
            for term in zero_mode_terms(&z, geo) {
                match term {
                    ZeroModeTerm::Pv { log_r, matrix } => pv.push((log_r, matrix)),
                    ZeroModeTerm::Delta { sign, matrix } => {
                        // ±(π²/L) δ(Ω_a(x) - Ω_b(y)) Aᵢ
                        let c = Complex64::new(sign * PI * PI / geo.circumference(), 0.0);
                        diag += Matrix2::new(matrix[(0, 0)], ZERO, ZERO, matrix[(1, 1)]) * c;
                        mirror += Matrix2::new(ZERO, matrix[(0, 1)], matrix[(1, 0)], ZERO) * c;
                    }
                }
            }
            if !pv.is_empty() {
                // (iπ/4ℓ) Pf 1/sinh(scale·β) rᵢ^{-icβ}, β = Ω_a(x) - Ω_b(y): the
                // flow form at shift 0 has α = -β.
                let pre = I * PI / (4.0 * geo.half_width());
                kernel.pv.push(zero_mode_pv(geo, &pv, pre, 0.0));
            }
            let g = *geo;
            let jac = move |x: &IntervalPoint| Complex64::new(g.jacobian(x), 0.0);
            if diag != Matrix2::from_element(ZERO) {
                kernel.delta_diag = Some(Arc::new(move |x| diag * jac(x)));
            }
            if mirror != Matrix2::from_element(ZERO) {
                kernel.delta_mirror = Some(Arc::new(move |x| mirror * jac(x)));
            }
        }
        Ok(ModularHamiltonianKernel { geo: *geo, kernel })
    }

    pub fn kernel(&self) -> &SingularKernel1D {
        &self.kernel
    }

    pub fn is_local(&self) -> bool {
        !self.kernel.has_nonlocal()
    }

    pub fn apply_point(&self, f: &TestSpinor, x: &IntervalPoint, quad: &QuadratureSpec) -> Result<[Complex64; 2]> {
        Ok(self.kernel.smear(f, x, quad)?.applied())
    }

    /// `(H f)(x)` for each position.
    pub fn apply(&self, f: &TestSpinor, xs: &[f64], quad: &QuadratureSpec) -> Result<Vec<[Complex64; 2]>> {
        xs.par_iter()
            .map(|&x| self.apply_point(f, &interior(&self.geo, x)?, quad))
            .collect()
    }

    /// `⟨g, H f⟩`.
    pub fn matrix_element(&self, g: &TestSpinor, f: &TestSpinor, quad: &QuadratureSpec) -> Result<Complex64> {
        crate::resolvent::matrix_element(&self.geo, &self.kernel, g, f, quad)
    }
}

/// Closed-form kernels of a pure state.
#[derive(Clone)]
pub struct PureLimitKernels {
    pub hamiltonian: ModularHamiltonianKernel,
    pub flow: ModularFlowKernel,
}

/// Hamiltonian and flow at a cone extreme point, built directly from the
/// limit formulas rather than from the mixed-state expressions.
pub fn pure_limit_kernel(which: PureLimit, psi: f64, phi: f64, t: f64, geo: &Geometry) -> Result<PureLimitKernels> {
    let s = which.sign();
    let m = which.matrix(psi, phi);
    let g = *geo;
    let mut kernel = SingularKernel1D::empty(geo);
    kernel.delta_prime = Some(ns_delta_prime(geo));
    // ±2π[sin²(πℓ/L) - sin²(πx/L)]/sin(2πℓ/L)
    let coef = move |x: &IntervalPoint| s * 2.0 * PI * ((g.k() * g.half_width()).sin().powi(2) - (g.k() * x.x).sin().powi(2)) / g.sin_2w();
    let diag = Matrix2::new(m[(0, 0)], ZERO, ZERO, m[(1, 1)]);
    let mirror = Matrix2::new(ZERO, m[(0, 1)], m[(1, 0)], ZERO);
    kernel.delta_diag = Some(Arc::new(move |x| diag * Complex64::new(coef(x), 0.0)));
    if mirror != Matrix2::from_element(ZERO) {
        kernel.delta_mirror = Some(Arc::new(move |x| mirror * Complex64::new(coef(x), 0.0)));
    }
    if !t.is_finite() {
        return Err(Error::Invalid(format!("modular time {t} is not finite")));
    }
    let flow = ModularFlowKernel {
        t,
        geo: *geo,
        periodic: true,
        local: vec![OmegaDelta {
            coef: s * 2.0 * PI * I / geo.circumference() * (PI * t).sinh(),
            matrix: m,
        }],
        nonlocal: None,
    };
    Ok(PureLimitKernels {
        hamiltonian: ModularHamiltonianKernel { geo: *geo, kernel },
        flow,
    })
}

/// Kernels for any state, dispatching pure periodic states to the limit forms.
pub fn kernels_for(state: &StateParams, t: f64, geo: &Geometry) -> Result<(ModularHamiltonianKernel, ModularFlowKernel)> {
    if !state.is_ns() {
        let z = state.zero_mode()?;
        let which = match classify(state, geo) {
            StateClass::PureTipPlus => Some(PureLimit::TipPlus),
            StateClass::PureTipMinus => Some(PureLimit::TipMinus),
            StateClass::PureRim if z.h1 > 0.0 => Some(PureLimit::RimPlus),
            StateClass::PureRim => Some(PureLimit::RimMinus),
            StateClass::Mixed => None,
        };
        if let Some(w) = which {
            let k = pure_limit_kernel(w, z.psi, z.phi, t, geo)?;
            return Ok((k.hamiltonian, k.flow));
        }
    }
    Ok((ModularHamiltonianKernel::new(state, geo)?, ModularFlowKernel::new(t, state, geo)?))
}

/// `(K(t) f)(x)` at each position.
pub fn flow_apply(t: f64, f: &TestSpinor, state: &StateParams, geo: &Geometry, xs: &[f64]) -> Result<Vec<[Complex64; 2]>> {
    kernels_for(state, t, geo)?.1.apply(f, xs, &QuadratureSpec::default())
}

/// Structured parts of `K_ab(t, x, y)`.
pub fn flow_kernel_eval(t: f64, x: f64, y: f64, state: &StateParams, geo: &Geometry) -> Result<FlowKernelParts> {
    kernels_for(state, t, geo)?.1.eval(x, y)
}

/// `(H f)(x)` at each position.
pub fn hamiltonian_apply(f: &TestSpinor, state: &StateParams, geo: &Geometry, xs: &[f64]) -> Result<Vec<[Complex64; 2]>> {
    kernels_for(state, 0.0, geo)?.0.apply(f, xs, &QuadratureSpec::default())
}

/// Output grid clustered toward `±ℓ`: uniform in `v = Ω₁(x)` up to
/// `|v| = v_max`, mapped back to positions.
pub fn flow_grid(geo: &Geometry, n: usize, v_max: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|j| geo.point_at_omega(-v_max + 2.0 * v_max * j as f64 / (n - 1) as f64).x)
        .collect()
}

/// `(Σ_a ∫ |r_a(x)|² dx)^{1/2}` for a pointwise field on the interval,
/// integrated in `v = Ω₁(x)` over `±omega_max`.
pub fn field_norm<F>(geo: &Geometry, field: F, quad: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&IntervalPoint) -> Result<[Complex64; 2]> + Sync,
{
    let failure = Mutex::new(None);
    let vm = quad.omega_max;
    let r = integrate(
        |v| {
            let p = geo.point_at_omega(v);
            match field(&p) {
                Ok(r) => Complex64::new((r[0].norm_sqr() + r[1].norm_sqr()) * geo.jacobian(&p), 0.0),
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    ZERO
                }
            }
        },
        -vm,
        vm,
        &[0.0],
        quad,
    );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(r.value.re.max(0.0).sqrt())
}

/// `‖f‖₂` of a test spinor.
pub fn spinor_norm(geo: &Geometry, f: &TestSpinor, quad: &QuadratureSpec) -> Result<f64> {
    field_norm(geo, |p| Ok(f.eval_point(p)), quad)
}

/// One row of a generator check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorRow {
    pub t: f64,
    /// `‖(K(t)f - f)/(it) - Hf‖ / ‖f‖`
    pub relative_error: f64,
}

/// `‖(K(t)f - f)/(it) - Hf‖/‖f‖` for each nonzero `t`.
pub fn generator_check(
    f: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    t_list: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<GeneratorRow>> {
    let h = kernels_for(state, 0.0, geo)?.0;
    let norm = spinor_norm(geo, f, quad)?;
    t_list
        .iter()
        .filter(|&&t| t != 0.0)
        .map(|&t| {
            let k = kernels_for(state, t, geo)?.1;
            let err = field_norm(
                geo,
                |p| {
                    let kf = k.apply_point(f, p, quad)?;
                    let hf = h.apply_point(f, p, quad)?;
                    let fx = f.eval_point(p);
                    Ok([0, 1].map(|a| (kf[a] - fx[a]) / (I * t) - hf[a]))
                },
                quad,
            )?;
            Ok(GeneratorRow {
                t,
                relative_error: err / norm,
            })
        })
        .collect()
}

/// `‖K(t1) K(t2) f - K(t1+t2) f‖`.
pub fn group_law_check(
    t1: f64,
    t2: f64,
    f: &TestSpinor,
    state: &StateParams,
    geo: &Geometry,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let k2 = kernels_for(state, t2, geo)?.1;
    let k1 = kernels_for(state, t1, geo)?.1;
    let k12 = kernels_for(state, t1 + t2, geo)?.1;
    let inner = k2.apply_fn(f, quad)?;
    field_norm(
        geo,
        |p| {
            let a = k1.apply_point(&inner, p, quad)?;
            let b = k12.apply_point(f, p, quad)?;
            Ok([a[0] - b[0], a[1] - b[1]])
        },
        quad,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::probes;

    fn geo() -> Geometry {
        Geometry::desk()
    }

    #[test]
    fn identity_at_zero_time() {
        let g = geo();
        let quad = QuadratureSpec::default();
        let f = probes::omega_pair(&g, 0.4, 0.7);
        for st in [StateParams::ns(), StateParams::ramond(&g, 0.05, -0.08, 1.0, 0.7).unwrap()] {
            let k = ModularFlowKernel::new(0.0, &st, &g).unwrap();
            assert!(k.is_local());
            for x in [-0.8, 0.0, 0.33] {
                let p = g.point(x).unwrap();
                let out = k.apply_point(&f, &p, &quad).unwrap();
                let fx = f.eval_point(&p);
                assert!((out[0] - fx[0]).norm() + (out[1] - fx[1]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn transport_matches_closed_form_weight() {
        // 2π sinh(πt)/(L sin(π(x-y*)/L) Ω₁'(y*)) f(y*) with y* = x₀(x, -t).
        let g = geo();
        let f = probes::omega_pair(&g, 0.1, 0.9);
        let k = ModularFlowKernel::new(0.3, &StateParams::ns(), &g).unwrap();
        for x in [-0.6, 0.1, 0.7] {
            let p = g.point(x).unwrap();
            let ys = g.flow_trajectory(x, -0.3).unwrap();
            let py = g.point(ys).unwrap();
            let w = 2.0 * PI * (PI * 0.3f64).sinh() / (4.0 * (g.k() * (x - ys)).sin() * g.omega1_prime(&py));
            let out = k.apply_point(&f, &p, &QuadratureSpec::default()).unwrap();
            assert!((out[0] - f.f1.eval(ys) * w).norm() < 1e-13, "{} vs {}", out[0], f.f1.eval(ys) * w);
        }
    }

    #[test]
    fn ns_constant_hamiltonian() {
        // f₁ ≡ c near x gives (Hf)₁(x) = -iπc sin(2πx/L)/sin(2πℓ/L).
        let g = geo();
        let c = Complex64::new(0.7, -0.2);
        let f = TestSpinor::only(
            Chirality::One,
            TestFunction1D::new(move |_| c, (-1.0, 1.0), Smoothness::SchwartzLike).with_derivative(|_| ZERO),
        );
        let h = ModularHamiltonianKernel::new(&StateParams::ns(), &g).unwrap();
        for x in [-0.5, 0.2, 0.9] {
            let out = h.apply_point(&f, &g.point(x).unwrap(), &QuadratureSpec::default()).unwrap();
            let expect = -I * PI * c * (2.0 * PI * x / 4.0).sin() / g.sin_2w();
            assert!((out[0] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_h_prefactor() {
        let g = geo();
        let t = 0.35;
        let k = ModularFlowKernel::new(t, &StateParams::zero_temperature(&g), &g).unwrap();
        let parts = k.eval(0.2, -0.4).unwrap();
        let expect = (PI * t).sinh() / (2.0 * g.half_width());
        assert!((parts.nonlocal_prefactor[0][0] - expect).norm() < 1e-14);
        assert!((parts.nonlocal_prefactor[1][1] - expect).norm() < 1e-14);
        assert!(parts.nonlocal_prefactor[0][1].norm() < 1e-16);
    }

    #[test]
    fn chirality_mixing_entry() {
        let g = geo();
        for (psi, mixes) in [(0.0, false), (PI, false), (1.1, true)] {
            let st = StateParams::ramond(&g, 0.04, -0.09, psi, 0.6).unwrap();
            let parts = ModularFlowKernel::new(0.2, &st, &g).unwrap().eval(0.1, 0.3).unwrap();
            assert_eq!(parts.nonlocal_prefactor[0][1].norm() > 1e-12, mixes);
        }
    }

    #[test]
    fn ns_flow_is_local_off_trajectory() {
        let g = geo();
        let parts = flow_kernel_eval(0.2, 0.1, 0.5, &StateParams::ns(), &g).unwrap();
        assert!(parts.trajectory_residual[0][0].abs() > 0.1);
        assert!(parts.nonlocal_prefactor.iter().flatten().all(|z| *z == ZERO));
        assert_eq!(parts.local_weight[0][1], ZERO);
    }

    #[test]
    fn grid_clusters_toward_endpoints() {
        let g = geo();
        let xs = flow_grid(&g, 41, 20.0);
        assert!(xs[1] - xs[0] < 1e-6 && xs[20].abs() < 1e-15);
    }
}
