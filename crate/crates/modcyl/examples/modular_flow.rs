//! The modular flow K(t) = (G/(1-G))^{it} applied to a test spinor, with its
//! unitarity and one-parameter group law.

use modcyl::distributions::{probes, QuadratureSpec};
use modcyl::modular::{group_law_check, kernels_for, spinor_norm, flow_kernel_eval};
use modcyl::states::StateParams;
use modcyl::Geometry;

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&geo, 0.2, 0.8);
    let norm = spinor_norm(&geo, &f, &quad)?;

    for (name, state) in [("ns", StateParams::ns()), ("massive vacuum", StateParams::massive_vacuum(&geo))] {
        println!("{name}");
        for t in [0.1, 0.5, 1.0] {
            let k = kernels_for(&state, t, &geo)?.1;
            let kf = k.apply_fn(&f, &quad)?;
            let n = spinor_norm(&geo, &kf, &quad)?;
            println!("  t = {t}: |K f| / |f| = {:.10}", n / norm);
        }
        let defect = group_law_check(0.3, -0.7, &f, &state, &geo, &quad)?;
        println!("  |K(0.3) K(-0.7) f - K(-0.4) f| = {defect:.2e}");
    }

    let p = flow_kernel_eval(0.25, 0.1, -0.4, &StateParams::zero_temperature(&geo), &geo)?;
    println!("\nzero temperature, t = 0.25, (x, y) = (0.1, -0.4):");
    println!("  nonlocal (1,1) = {:?}", p.nonlocal_value[0][0]);
    println!("  nonlocal (1,2) = {:?}", p.nonlocal_value[0][1]);
    Ok(())
}
