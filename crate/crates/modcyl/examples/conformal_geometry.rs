//! The conformal coordinate Ω₁ on the interval, the modular trajectories it
//! straightens, and the sinh identity behind the local flow term.

use modcyl::{Chirality, Geometry};

fn main() -> modcyl::Result<()> {
    let geo = Geometry::new(4.0, 1.0)?;
    println!("L = {}, ell = {}, k = {:.6}", geo.circumference(), geo.half_width(), geo.k());

    println!("\n{:>6} {:>12} {:>12} {:>12}", "x", "Omega_1", "Omega_2", "dOmega_1/dx");
    for x in [-0.99, -0.5, 0.0, 0.5, 0.99] {
        println!(
            "{x:>6} {:>12.6} {:>12.6} {:>12.6}",
            geo.omega(Chirality::One, x)?,
            geo.omega(Chirality::Two, x)?,
            geo.omega_prime(Chirality::One, x)?
        );
    }

    println!("\nflow trajectory of y = 0.3: Omega_1 advances by 2 pi t");
    for t in [-1.0, -0.25, 0.0, 0.25, 1.0] {
        let x = geo.flow_trajectory(0.3, t)?;
        println!("  t = {t:>5}: x(t) = {x:+.12}");
    }

    let (lhs, rhs) = geo.sinh_omega_identity(0.2, -0.45)?;
    println!("\n1/sinh(dOmega/2) = {lhs:.15}\nsine form        = {rhs:.15}\ndifference       = {:.1e}", (lhs - rhs).abs());
    Ok(())
}
