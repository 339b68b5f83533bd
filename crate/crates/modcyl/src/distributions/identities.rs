//! Boundary-value splits and the two real-line integral identities behind
//! the pure-state limits and the flow kernels.

use super::kernel::{const_diag, const_pair, PvPart, Singularity, SingularKernel1D};
use super::quadrature::{integrate, QuadratureSpec};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use nalgebra::Matrix2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Family of an `iε`-regularized Cauchy-type kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyFamily {
    /// `1/(u ∓ iε)`
    Plain,
    /// `1/sin(π(u ∓ iε)/L)`
    Sin,
    /// `cot(π(u ∓ iε)/L)`
    Cot,
}

/// `coef · k(x - y - s·iε)` with `s = ±1`, where `k` is one of the
/// [`CauchyFamily`] kernels.
#[derive(Debug, Clone, Copy)]
pub struct EpsKernel {
    pub family: CauchyFamily,
    pub coef: Matrix2<Complex64>,
    /// `+1` for `x - y - iε`, `-1` for `x - y + iε`.
    pub side: i8,
}

/// Split `coef·k(u ∓ iε)` into `coef·PV k(u) ± iπ·r·coef·δ(u)`, where `r`
/// is the residue of `k` at `u = 0` (`1`, or `L/π` for the sin and cot
/// kernels).
pub fn sokhotski_split(geo: &Geometry, kernel: &EpsKernel) -> Result<SingularKernel1D> {
    if kernel.side != 1 && kernel.side != -1 {
        return Err(Error::Invalid(format!("iε side must be ±1, got {}", kernel.side)));
    }
    let (singularity, residue) = match kernel.family {
        CauchyFamily::Plain => (Singularity::InvDiff, 1.0),
        CauchyFamily::Sin => (Singularity::InvSinDiff, 1.0 / geo.k()),
        CauchyFamily::Cot => (Singularity::CotDiff, 1.0 / geo.k()),
    };
    let mut k = SingularKernel1D::empty(geo);
    let c = kernel.coef;
    let active = [0, 1].map(|a| [0, 1].map(|b| c[(a, b)] != Complex64::new(0.0, 0.0)));
    k.pv.push(PvPart {
        prefactor: const_pair(c),
        singularity,
        active,
    });
    let delta = c * Complex64::new(0.0, PI * residue * kernel.side as f64);
    k.delta_diag = Some(const_diag(delta));
    Ok(k)
}

/// Real-line integrand decaying fast enough for the limit lemma.
fn truncation(max_abs: f64, rate: f64) -> f64 {
    ((max_abs.max(1e-300) / 1e-14).ln() / rate).max(4.0)
}

fn sup_estimate<F: Fn(f64) -> Complex64>(f: &F) -> Result<f64> {
    let mut m: f64 = 0.0;
    for j in -400..=400 {
        let v = f(j as f64 * 0.05).norm();
        if !v.is_finite() {
            return Err(Error::Domain("test function is not finite on the sample grid".into()));
        }
        m = m.max(v);
    }
    Ok(m)
}

/// `∫ a^{it} Pf[1/sinh(πt)] f(t) dt` for complex `a` with `|arg a| < π`,
/// through the regularized form
/// `∫ a^{it}[f(t) - f(0)]/sinh(πt) dt + i f(0) (a-1)/(a+1)`.
pub fn lemma_limit_eval_complex<F>(a: Complex64, f: F, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
        return Err(Error::Domain(format!("a = {a} must be finite and nonzero")));
    }
    let la = a.ln();
    let rate = PI - la.im.abs();
    if rate <= 1e-3 {
        return Err(Error::Domain(format!("|arg a| must stay below π, got {}", la.im)));
    }
    let f0 = f(0.0);
    let max = sup_estimate(&f)?;
    let weighted = |t: f64| f(t).norm() * (-rate * t.abs()).exp();
    let peak = sup_estimate(&|t: f64| Complex64::new(weighted(t), 0.0))?;
    for t in [-60.0, 60.0] {
        let w = weighted(t);
        if !w.is_finite() || w > 1e-10 * peak {
            return Err(Error::Domain(
                "f(t)/sinh(πt) is not integrable at the truncation point".into(),
            ));
        }
    }
    let t_max = truncation(max, rate);
    let phase = |t: f64| (Complex64::new(0.0, t) * la).exp();
    let r = integrate(
        |t| phase(t) * (f(t) - f0) / (PI * t).sinh(),
        -t_max,
        t_max,
        &[0.0],
        quad,
    );
    let corr = Complex64::new(0.0, 1.0) * f0 * (a - 1.0) / (a + 1.0);
    Ok(r.value + corr)
}

/// [`lemma_limit_eval_complex`] for `a > 0`.
pub fn lemma_limit_eval<F>(a: f64, f: F, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("a = {a} must be positive")));
    }
    lemma_limit_eval_complex(Complex64::new(a, 0.0), f, quad)
}

fn check_c(c: Complex64) -> Result<()> {
    if !(c.re > 0.0) || !c.im.is_finite() {
        return Err(Error::Domain(format!("Re c must be positive, got c = {c}")));
    }
    Ok(())
}

/// Pointwise value `c^{iz/(2π) - 1}·(-i/2)/sinh(z/2)` of
/// `∫ e^{isz}/(c + e^{2πs}) ds` at `z ≠ 0`.
pub fn flow_integral_pointwise(c: Complex64, z: f64) -> Result<Complex64> {
    check_c(c)?;
    if z == 0.0 {
        return Err(Error::Domain("pointwise value at z = 0 is a distribution".into()));
    }
    let p = (Complex64::new(0.0, z / (2.0 * PI)) - 1.0) * c.ln();
    Ok(p.exp() * Complex64::new(0.0, -0.5) / (0.5 * z).sinh())
}

/// `∫ dz f(z) c^{iz/(2π) - 1} [-(i/2) Pf 1/sinh(z/2) + π δ(z)]`.
pub fn flow_integral_smeared<F>(c: Complex64, f: F, quad: &QuadratureSpec) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    check_c(c)?;
    // z = 2πτ turns the kernel into c^{iτ} Pf 1/sinh(πτ).
    let pf = lemma_limit_eval_complex(c, |t| f(2.0 * PI * t), quad)? * (2.0 * PI);
    Ok((Complex64::new(0.0, -0.5) * pf + PI * f(0.0)) / c)
}
