//! Quasi-free ground states: the antiperiodic (NS) vacuum and the
//! four-parameter family of periodic (R) ground states.
//!
//! An R state is fixed by the eigenvalues `h₁, h₂` of the zero-mode matrix
//!
//! ```text
//! h = (h₁+h₂)/2·𝟙 + (h₁-h₂)/2·[[cos ψ, sin ψ e^{iφ}], [sin ψ e^{-iφ}, -cos ψ]]
//! ```
//!
//! with `|hᵢ| ≤ 1/(2L)`. The admissible set is a double cone; its tips
//! (`h₁ = h₂ = ±1/(2L)`) and rim (`h₁ = -h₂ = ±1/(2L)`) are the pure states.

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance (in units of `1/(2L)`) for purity classification.
pub const CLASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BoundaryCondition {
    Ns,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroMode {
    pub h1: f64,
    pub h2: f64,
    pub psi: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    bc: BoundaryCondition,
    zero_mode: Option<ZeroMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateClass {
    Mixed,
    PureTipPlus,
    PureTipMinus,
    PureRim,
}

impl StateClass {
    pub fn is_pure(self) -> bool {
        self != StateClass::Mixed
    }
}

/// Hermitian 2×2 zero-mode matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HMatrix(pub Matrix2<Complex64>);

impl StateParams {
    pub fn ns() -> Self {
        StateParams {
            bc: BoundaryCondition::Ns,
            zero_mode: None,
        }
    }

    /// A periodic ground state. Angles are validated, `φ` is reduced into
    /// `[0, 2π)`, and when `h₁ = h₂` the gauge angles are set to zero.
    pub fn ramond(geo: &Geometry, h1: f64, h2: f64, psi: f64, phi: f64) -> Result<Self> {
        let bound = 0.5 / geo.circumference();
        for (name, h) in [("h1", h1), ("h2", h2)] {
            if !h.is_finite() {
                return Err(Error::StateConstraint(format!("{name} is not finite")));
            }
            if h.abs() > bound * (1.0 + CLASS_TOL) {
                return Err(Error::StateConstraint(format!(
                    "|{name}| = {} exceeds 1/(2L) = {bound}",
                    h.abs()
                )));
            }
        }
        if !(psi.is_finite() && (0.0..=PI).contains(&psi)) {
            return Err(Error::StateConstraint(format!("psi = {psi} outside [0, pi]")));
        }
        if !phi.is_finite() {
            return Err(Error::StateConstraint("phi is not finite".into()));
        }
        let h1 = h1.clamp(-bound, bound);
        let h2 = h2.clamp(-bound, bound);
        let (psi, phi) = if (h1 - h2).abs() <= CLASS_TOL * bound {
            (0.0, 0.0)
        } else {
            (psi, phi.rem_euclid(2.0 * PI))
        };
        Ok(StateParams {
            bc: BoundaryCondition::R,
            zero_mode: Some(ZeroMode { h1, h2, psi, phi }),
        })
    }

    /// `h₁ = h₂ = 0`, the zero-temperature limit of the thermal state.
    pub fn zero_temperature(geo: &Geometry) -> Self {
        Self::ramond(geo, 0.0, 0.0, 0.0, 0.0).expect("valid")
    }

    /// `h₂ = -h₁ = 1/(2L)`, `ψ = φ = π/2`: the massless limit of the massive vacuum.
    pub fn massive_vacuum(geo: &Geometry) -> Self {
        let b = 0.5 / geo.circumference();
        Self::ramond(geo, -b, b, PI / 2.0, PI / 2.0).expect("valid")
    }

    /// `h₁ = h₂ = ±1/(2L)`.
    pub fn tip(geo: &Geometry, plus: bool) -> Self {
        let b = 0.5 / geo.circumference();
        let h = if plus { b } else { -b };
        Self::ramond(geo, h, h, 0.0, 0.0).expect("valid")
    }

    /// `h₁ = -h₂ = ±1/(2L)` with mixing angles.
    pub fn rim(geo: &Geometry, plus: bool, psi: f64, phi: f64) -> Result<Self> {
        let b = 0.5 / geo.circumference();
        let h = if plus { b } else { -b };
        Self::ramond(geo, h, -h, psi, phi)
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn is_ns(&self) -> bool {
        self.bc == BoundaryCondition::Ns
    }

    /// Zero-mode data; an error for NS, which has no zero mode.
    pub fn zero_mode(&self) -> Result<ZeroMode> {
        self.zero_mode
            .ok_or_else(|| Error::InvalidState("NS state has no zero-mode data".into()))
    }
}

impl ZeroMode {
    /// Rescaled eigenvalue ratios `rᵢ = (1+2Lhᵢ)/(1-2Lhᵢ)`; `∞` at `hᵢ = 1/(2L)`.
    pub fn ratios(&self, geo: &Geometry) -> [f64; 2] {
        let l = geo.circumference();
        [self.h1, self.h2].map(|h| {
            let den = 1.0 - 2.0 * l * h;
            if den <= 0.0 {
                f64::INFINITY
            } else {
                (1.0 + 2.0 * l * h) / den
            }
        })
    }

    /// Mixing matrices `𝟙 ± n·σ` multiplying the `h₁` and `h₂` phases.
    pub fn mixing_matrices(&self) -> [Matrix2<Complex64>; 2] {
        let (c, s) = (self.psi.cos(), self.psi.sin());
        let e = Complex64::from_polar(s, self.phi);
        let one = Complex64::new(1.0, 0.0);
        let p1 = Matrix2::new(one + c, e, e.conj(), one - c);
        let p2 = Matrix2::new(one - c, -e, -e.conj(), one + c);
        [p1, p2]
    }

    /// `[[cos ψ, sin ψ e^{iφ}], [sin ψ e^{-iφ}, -cos ψ]]`
    pub fn direction(&self) -> Matrix2<Complex64> {
        let c = Complex64::new(self.psi.cos(), 0.0);
        let e = Complex64::from_polar(self.psi.sin(), self.phi);
        Matrix2::new(c, e, e.conj(), -c)
    }
}

impl HMatrix {
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.0[(a, b)]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let tr = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let d = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let r = (d * d + m[(0, 1)].norm_sqr()).sqrt();
        [tr - r, tr + r]
    }

    /// `(|α|, |β|)` with `α` half the trace and `β` the Pauli-vector norm.
    pub fn cone_coordinates(&self) -> (f64, f64) {
        let [lo, hi] = self.eigenvalues();
        (0.5 * (lo + hi).abs(), 0.5 * (hi - lo))
    }
}

pub fn build_h(params: &StateParams, _geo: &Geometry) -> Result<HMatrix> {
    let z = params.zero_mode()?;
    let mean = Complex64::new(0.5 * (z.h1 + z.h2), 0.0);
    let half = 0.5 * (z.h1 - z.h2);
    Ok(HMatrix(Matrix2::from_diagonal_element(mean) + z.direction() * Complex64::new(half, 0.0)))
}

/// `g = h + 𝟙/(2L)`, the zero-mode covariance.
pub fn g_covariance(params: &StateParams, geo: &Geometry) -> Result<Matrix2<Complex64>> {
    let h = build_h(params, geo)?;
    Ok(h.0 + Matrix2::from_diagonal_element(Complex64::new(0.5 / geo.circumference(), 0.0)))
}

pub fn classify(params: &StateParams, geo: &Geometry) -> StateClass {
    let Some(z) = params.zero_mode else {
        return StateClass::Mixed;
    };
    let b = 0.5 / geo.circumference();
    let tol = CLASS_TOL * b;
    let at = |h: f64, target: f64| (h - target).abs() <= tol;
    if at(z.h1, b) && at(z.h2, b) {
        StateClass::PureTipPlus
    } else if at(z.h1, -b) && at(z.h2, -b) {
        StateClass::PureTipMinus
    } else if (at(z.h1, b) && at(z.h2, -b)) || (at(z.h1, -b) && at(z.h2, b)) {
        StateClass::PureRim
    } else {
        StateClass::Mixed
    }
}
