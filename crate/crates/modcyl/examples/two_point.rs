//! The restricted two-point function: smeared matrix elements, cross-checked
//! against a truncated mode sum on the circle.

use modcyl::correlators::{mode_sum_oracle, two_point, Domain, TwoPointKernel};
use modcyl::distributions::{probes, QuadratureSpec};
use modcyl::states::StateParams;
use modcyl::Geometry;

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&geo, 0.2, 0.8);
    let g = probes::omega_pair_alt(&geo, 0.3, 0.9);

    for (name, state) in [("ns", StateParams::ns()), ("zero temperature", StateParams::zero_temperature(&geo))] {
        let k = TwoPointKernel::new(&state, &geo, Domain::Interval)?;
        let w = k.two_point(&f, &g, &quad)?;
        let wc = k.anti_two_point(&f, &g, &quad)?;
        let modes = mode_sum_oracle(&f, &g, &state, &geo, 4000)?;
        println!("{name}");
        println!("  w(psi(f) psi(g)^dag)   = {:.10}  (quadrature error {:.1e})", w.value, w.error);
        println!("  mode sum, 4000 modes   = {:.10}", modes);
        println!("  w + anti-ordered       = {:.10}", w.value + wc.value);
    }

    let w = two_point(&f, &f, &StateParams::ns(), &geo)?;
    println!("\n<f, G f> = {:.10} lies in [0, <f, f>]", w.value);
    Ok(())
}
