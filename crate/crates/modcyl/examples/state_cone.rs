//! Ground states on the cylinder: the antiperiodic vacuum and the cone of
//! periodic zero-mode states with its tips and rim.

use modcyl::states::{classify, g_covariance, BoundaryCondition, StateParams};
use modcyl::Geometry;
use std::f64::consts::PI;

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let b = 0.5 / geo.circumference();
    let states = [
        ("ns vacuum", StateParams::ns()),
        ("zero temperature", StateParams::zero_temperature(&geo)),
        ("massive vacuum", StateParams::massive_vacuum(&geo)),
        ("tip +", StateParams::tip(&geo, true)),
        ("tip -", StateParams::tip(&geo, false)),
        ("rim (pi/3, 1)", StateParams::rim(&geo, true, PI / 3.0, 1.0)?),
        ("mixed", StateParams::ramond(&geo, 0.2 * b, -0.5 * b, 1.0, 0.7)?),
    ];
    for (name, s) in &states {
        match s.bc() {
            BoundaryCondition::Ns => println!("{name:<18} NS"),
            BoundaryCondition::R => {
                let z = s.zero_mode()?;
                let cls = classify(s, &geo);
                let g = g_covariance(s, &geo)?;
                println!(
                    "{name:<18} R  h = ({:+.4}, {:+.4})  class {cls:?}  tr g = {:.4}",
                    z.h1,
                    z.h2,
                    (g[(0, 0)] + g[(1, 1)]).re
                );
            }
        }
    }

    // Outside the cone |h_i| <= 1/(2L) construction fails.
    match StateParams::ramond(&geo, 2.0 * b, 0.0, 0.0, 0.0) {
        Err(e) => println!("\nh1 = 1/L rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
