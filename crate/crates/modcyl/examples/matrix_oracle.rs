//! The discretized oracle: collocate G on a midpoint grid, diagonalize, and
//! compare the matrix Hamiltonian and the spectral histogram with the
//! closed forms.

use modcyl::distributions::{probes, QuadratureSpec, TestSpinor};
use modcyl::modular::hamiltonian_apply;
use modcyl::oracle::{compare, spectral_measure_check, OracleGrid};
use modcyl::resolvent::spectral_density_s;
use modcyl::states::StateParams;
use modcyl::{Complex64, Geometry};

fn main() -> modcyl::Result<()> {
    let geo = Geometry::desk();
    let quad = QuadratureSpec::default();
    let state = StateParams::ns();
    let f = TestSpinor::new(probes::gaussian_omega(&geo, 0.0, 0.36, 0.0), probes::gaussian_omega(&geo, 0.2, 0.33, 0.3));

    let grids: Vec<OracleGrid> = [128, 256, 512].iter().map(|&n| OracleGrid::new(&state, &geo, n)).collect::<modcyl::Result<_>>()?;
    for g in &grids {
        let ev = g.eig.eigenvalues();
        println!("N = {:>3}: eigenvalues in [{:.3e}, 1 - {:.3e}], hermiticity defect {:.1e}", g.op.n(), ev[0], 1.0 - ev[ev.len() - 1], g.op.hermiticity_defect());
    }

    let rep = compare(
        "ns H",
        |p: &TestSpinor, xs: &[f64]| hamiltonian_apply(p, &state, &geo, xs),
        |g: &OracleGrid, v: &[Complex64]| g.apply_hamiltonian(v),
        &grids,
        std::slice::from_ref(&f),
    )?;
    for n in [128, 256, 512] {
        println!("H error at N = {n}: {:.3e}", rep.max_error_at(n).unwrap());
    }
    println!("fitted order {:.2} (spectral truncation limits it; see README)", rep.min_order());

    let chk = spectral_measure_check(&grids[2], |s| spectral_density_s(s, &f, &f, &state, &geo, &quad), &f, &f, 16, 30.0, &quad)?;
    println!("\nspectral histogram at N = 512, sup residual {:.3e}", chk.residual);
    for b in &chk.bins {
        println!("  mu in [{:.4}, {:.4}): eigenvectors {:>9.5}  analytic {:>9.5}", b.lo, b.hi, b.discrete.re, b.analytic.re);
    }
    Ok(())
}
