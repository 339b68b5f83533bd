use modcyl::distributions::{probes, QuadratureSpec, TestSpinor};
use modcyl::geometry::Geometry;
use modcyl::modular::hamiltonian_apply;
use modcyl::oracle::{
    apply_matrix, compare, discretize_g, matrix_modular_flow, matrix_modular_hamiltonian, spectral_measure_check,
    CMatrix, OracleGrid,
};
use modcyl::resolvent::spectral_density_s;
use modcyl::states::StateParams;
use num_complex::Complex64;

fn geo() -> Geometry {
    Geometry::desk()
}

fn regimes(g: &Geometry) -> Vec<(&'static str, StateParams)> {
    let b = 0.5 / g.circumference();
    vec![
        ("ns", StateParams::ns()),
        ("h0", StateParams::zero_temperature(g)),
        ("mixed", StateParams::ramond(g, 0.2 * b, -0.5 * b, 1.0, 0.7).unwrap()),
        ("near_tip", StateParams::ramond(g, b * (1.0 - 1e-2), b * (1.0 - 1e-2), 0.0, 0.0).unwrap()),
    ]
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

fn identity(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}

#[test]
fn discretized_g_is_hermitian_in_every_regime() {
    let g = geo();
    for (name, st) in regimes(&g) {
        let d = discretize_g(&st, &g, 64).unwrap();
        assert!(d.hermiticity_defect() <= 1e-14, "{name}");
    }
}

#[test]
fn eigenvalues_stay_in_the_unit_interval_up_to_a_shrinking_margin() {
    let g = geo();
    for (name, st) in regimes(&g) {
        let excess: Vec<f64> = [128, 256]
            .iter()
            .map(|&n| {
                let e = discretize_g(&st, &g, n).unwrap().decompose().unwrap();
                let ev = e.eigenvalues();
                (-ev[0]).max(ev[ev.len() - 1] - 1.0).max(0.0)
            })
            .collect();
        assert!(excess[0] <= 1e-3, "{name}: {excess:?}");
        assert!(excess[1] <= excess[0], "{name}: {excess:?}");
    }
}

#[test]
fn ns_hamiltonian_spectrum_is_symmetric() {
    let g = geo();
    let d = discretize_g(&StateParams::ns(), &g, 128).unwrap();
    let e = d.decompose().unwrap();
    let h: Vec<f64> = e.eigenvalues().iter().map(|l| (l / (1.0 - l)).ln()).collect();
    let m = h.len();
    for k in 0..m / 2 {
        assert!((h[k] + h[m - 1 - k]).abs() <= 1e-8, "pair {k}: {} {}", h[k], h[m - 1 - k]);
    }
}

#[test]
fn flow_at_zero_is_the_identity() {
    let g = geo();
    let d = discretize_g(&regimes(&g)[2].1, &g, 64).unwrap();
    let k = matrix_modular_flow(&d, 0.0).unwrap();
    assert!(max_abs_diff(&k, &identity(d.dim())) <= 1e-12);
}

#[test]
fn matrix_flow_is_unitary_and_a_group() {
    let g = geo();
    for (name, st) in regimes(&g) {
        let e = discretize_g(&st, &g, 64).unwrap().decompose().unwrap();
        let (k1, k2, k12) = (e.flow(0.3).unwrap(), e.flow(-0.55).unwrap(), e.flow(-0.25).unwrap());
        let kk = k1.adjoint() * &k1;
        assert!(max_abs_diff(&kk, &identity(k1.nrows())) <= 1e-10, "{name} unitarity");
        assert!(max_abs_diff(&(&k1 * &k2), &k12) <= 1e-10, "{name} group law");
    }
}

#[test]
fn flow_is_the_exponential_of_the_hamiltonian() {
    let g = geo();
    for (name, st) in regimes(&g) {
        let d = discretize_g(&st, &g, 64).unwrap();
        let h = matrix_modular_hamiltonian(&d).unwrap();
        let t = 0.37;
        // independent decomposition of H itself
        let evd = h.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let (s, u) = (evd.S().column_vector(), evd.U());
        let phase = CMatrix::from_fn(h.nrows(), h.nrows(), |i, j| u[(i, j)] * Complex64::from_polar(1.0, t * s[j].re));
        let expm = &phase * u.adjoint();
        let k = matrix_modular_flow(&d, t).unwrap();
        assert!(max_abs_diff(&k, &expm) <= 1e-10, "{name}");
    }
}

#[test]
fn hamiltonian_at_one_half_vanishes() {
    let g = geo();
    let d = discretize_g(&StateParams::ns(), &g, 32).unwrap();
    let h = matrix_modular_hamiltonian(&d).unwrap();
    // the trace of ln(λ/(1-λ)) vanishes by the λ ↔ 1-λ pairing
    let tr: Complex64 = (0..h.nrows()).map(|i| h[(i, i)]).sum();
    assert!(tr.norm() <= 1e-10);
}

#[test]
fn identity_against_identity_has_zero_error() {
    let g = geo();
    let grids: Vec<OracleGrid> = [64, 128].iter().map(|&n| OracleGrid::new(&StateParams::ns(), &g, n).unwrap()).collect();
    let p = vec![TestSpinor::new(probes::gaussian_x(&g, 0.1, 0.08, 1.0), probes::gaussian_x(&g, -0.2, 0.08, 0.0))];
    let rep = compare(
        "identity",
        |f: &TestSpinor, xs: &[f64]| Ok(xs.iter().map(|&x| f.eval(x)).collect()),
        |_: &OracleGrid, v: &[Complex64]| Ok(v.to_vec()),
        &grids,
        &p,
    )
    .unwrap();
    assert_eq!(rep.max_error_at(64), Some(0.0));
    assert_eq!(rep.max_error_at(128), Some(0.0));
}

#[test]
fn compare_rejects_probes_reaching_the_endpoints() {
    let g = geo();
    let grids = vec![OracleGrid::new(&StateParams::ns(), &g, 64).unwrap()];
    let wide = vec![TestSpinor::new(probes::gaussian_x(&g, 0.0, 0.5, 0.0), probes::gaussian_x(&g, 0.0, 0.5, 0.0))];
    let r = compare(
        "wide",
        |f: &TestSpinor, xs: &[f64]| Ok(xs.iter().map(|&x| f.eval(x)).collect()),
        |_: &OracleGrid, v: &[Complex64]| Ok(v.to_vec()),
        &grids,
        &wide,
    );
    assert!(r.is_err());
}

#[test]
fn matrix_hamiltonian_error_decreases_with_resolution() {
    let g = geo();
    let st = StateParams::ns();
    let p = vec![TestSpinor::new(probes::gaussian_omega(&g, 0.0, 0.36, 0.0), probes::gaussian_omega(&g, 0.2, 0.33, 0.3))];
    let grids: Vec<OracleGrid> = [128, 256].iter().map(|&n| OracleGrid::new(&st, &g, n).unwrap()).collect();
    let rep = compare(
        "ns hamiltonian",
        |f: &TestSpinor, xs: &[f64]| hamiltonian_apply(f, &st, &g, xs),
        |gr: &OracleGrid, v: &[Complex64]| gr.apply_hamiltonian(v),
        &grids,
        &p,
    )
    .unwrap();
    let (e1, e2) = (rep.max_error_at(128).unwrap(), rep.max_error_at(256).unwrap());
    assert!(e2 < e1, "{e1} {e2}");
}

#[test]
fn apply_matrix_agrees_with_apply_function() {
    let g = geo();
    let gr = OracleGrid::new(&regimes(&g)[2].1, &g, 64).unwrap();
    let v = gr.op.sample(&probes::omega_pair(&g, 0.1, 0.3));
    let a = apply_matrix(&gr.eig.hamiltonian().unwrap(), &v);
    let b = gr.apply_hamiltonian(&v).unwrap();
    let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-10);
}

#[test]
fn ns_spectral_histogram_matches_the_jump_density() {
    let g = geo();
    let st = StateParams::ns();
    let quad = QuadratureSpec::default();
    let gr = OracleGrid::new(&st, &g, 512).unwrap();
    let f = TestSpinor::new(probes::gaussian_x(&g, 0.1, 0.1, 1.0), probes::gaussian_x(&g, -0.2, 0.09, 0.0));
    let h = TestSpinor::new(probes::gaussian_x(&g, 0.0, 0.1, 0.0), probes::gaussian_x(&g, -0.1, 0.1, 0.5));
    let chk = spectral_measure_check(&gr, |s| spectral_density_s(s, &f, &h, &st, &g, &quad), &f, &h, 32, 30.0, &quad).unwrap();
    assert!((chk.mass_discrete - chk.overlap).norm() <= 1e-5);
    let exact = modcyl::correlators::inner(&h, &f, &quad);
    assert!((chk.mass_analytic - exact).norm() <= 1e-5, "{} {}", chk.mass_analytic, exact);
    assert!(chk.residual <= 5e-3, "residual {}", chk.residual);
}

#[test]
fn spectral_check_refuses_bins_below_the_spacing() {
    let g = geo();
    let st = StateParams::ns();
    let quad = QuadratureSpec::default();
    let gr = OracleGrid::new(&st, &g, 16).unwrap();
    let f = probes::omega_pair(&g, 0.0, 0.2);
    let r = spectral_measure_check(&gr, |_| Ok(Complex64::new(0.0, 0.0)), &f, &f, 64, 10.0, &quad);
    assert!(r.is_err());
}
