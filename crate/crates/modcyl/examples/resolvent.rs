//! The resolvent of the restricted two-point operator: solving
//! (G - mu) u = f in closed form and reading off the spectral measure.

use modcyl::correlators::inner;
use modcyl::distributions::{probes, QuadratureSpec};
use modcyl::resolvent::{integrate_density, spectral_density, ResolventKernel, ResolventPoint};
use modcyl::states::StateParams;
use modcyl::{Complex64, Geometry};

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let state = StateParams::ramond(&geo, 0.025, -0.0625, 1.0, 0.7)?;
    let f = probes::omega_pair(&geo, 0.2, 0.8);

    let mu = Complex64::new(0.5, 0.3);
    let r = ResolventKernel::new(ResolventPoint::new(mu)?, &state, &geo)?;
    let u = r.solve(&f, &quad)?;
    println!("R(mu) f at mu = {mu}:");
    for x in [-0.5, 0.0, 0.5] {
        let v = u.eval(x);
        println!("  x = {x:>4}: ({:.8}, {:.8})", v[0], v[1]);
    }

    println!("\ndE(f,f)/dmu:");
    for m in [0.1, 0.3, 0.5, 0.7, 0.9] {
        println!("  mu = {m}: {:.8}", spectral_density(m, &f, &f, &state, &geo, &quad)?.re);
    }

    let mass = integrate_density(|_| Complex64::new(1.0, 0.0), &f, &f, &state, &geo, 10.0, &quad)?;
    println!("\nmass of the measure = {:.10}\n<f, f>              = {:.10}", mass.re, inner(&f, &f, &quad).re);
    Ok(())
}
