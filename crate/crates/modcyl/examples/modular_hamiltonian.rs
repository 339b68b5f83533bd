//! The modular Hamiltonian H = ln(G/(1-G)) as a structured kernel, and the
//! generator check (K(t) f - f)/(it) -> H f.

use modcyl::distributions::{probes, QuadratureSpec};
use modcyl::modular::{generator_check, ModularHamiltonianKernel};
use modcyl::states::StateParams;
use modcyl::Geometry;

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&geo, 0.2, 0.8);
    let g = probes::omega_pair_alt(&geo, 0.3, 0.9);

    for (name, state) in [("ns", StateParams::ns()), ("zero temperature", StateParams::zero_temperature(&geo))] {
        let h = ModularHamiltonianKernel::new(&state, &geo)?;
        println!("{name}: local only = {}", h.is_local());
        let hgf = h.matrix_element(&g, &f, &quad)?;
        let hfg = h.matrix_element(&f, &g, &quad)?;
        println!("  <g, H f> = {hgf:.10}\n  <f, H g>* = {:.10}", hfg.conj());
        for row in generator_check(&f, &state, &geo, &[1e-2, 5e-3, 2.5e-3], &quad)? {
            println!("  t = {:<7} relative generator error {:.3e}", row.t, row.relative_error);
        }
    }
    Ok(())
}
