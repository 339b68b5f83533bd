//! Pure zero-mode states at the tips and on the rim of the cone: the rim
//! Hamiltonian maps a bump at x to its mirror image at -x.

use modcyl::distributions::{probes, QuadratureSpec, TestSpinor};
use modcyl::modular::{pure_limit_kernel, PureLimit};
use modcyl::{Chirality, Geometry};
use std::f64::consts::PI;

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let bump = TestSpinor::only(Chirality::Two, probes::bump(0.5, 0.1));

    for which in [PureLimit::TipPlus, PureLimit::RimPlus] {
        let k = pure_limit_kernel(which, PI / 2.0, 0.0, 0.0, &geo)?;
        let xs = [-0.5, -0.2, 0.0, 0.5];
        let out = k.hamiltonian.apply(&bump, &xs, &quad)?;
        println!("{which:?}: H applied to a chirality-2 bump at x = 0.5");
        for (x, v) in xs.iter().zip(&out) {
            println!("  x = {x:>4}: |(H f)_1| = {:.3e}, |(H f)_2| = {:.3e}", v[0].norm(), v[1].norm());
        }
    }
    Ok(())
}
