use modcyl::correlators::inner;
use modcyl::distributions::quadrature::integrate;
use modcyl::distributions::{probes, QuadratureSpec, TestSpinor};
use modcyl::modular::{
    field_norm, generator_check, group_law_check, kernels_for, pure_limit_kernel, spinor_norm,
    ModularFlowKernel, ModularHamiltonianKernel, PureLimit,
};
use modcyl::resolvent::integrate_density;
use modcyl::states::StateParams;
use modcyl::{Chirality, Complex64, Geometry};
use std::f64::consts::PI;

fn geo() -> Geometry {
    Geometry::desk()
}

fn mixed(g: &Geometry) -> StateParams {
    let b = 0.5 / g.circumference();
    StateParams::ramond(g, 0.2 * b, -0.5 * b, 1.0, 0.7).unwrap()
}

/// `⟨h, K f⟩` by integrating the pointwise flow output against `h`.
fn flow_element(k: &ModularFlowKernel, h: &TestSpinor, f: &TestSpinor, g: &Geometry, quad: &QuadratureSpec) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in Chirality::BOTH {
        let ha = h.component(a);
        acc += integrate(
            |v| {
                let p = g.point_at_omega(v);
                let hv = ha.eval_point(&p);
                if hv.norm() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                hv.conj() * k.apply_point(f, &p, quad).unwrap()[a.index()] * g.jacobian(&p)
            },
            -quad.omega_max,
            quad.omega_max,
            &[0.0],
            quad,
        )
        .value;
    }
    acc
}

/// Probes whose NS spectral densities have Gaussian tails in `s`.
fn spectral_pair(g: &Geometry) -> (TestSpinor, TestSpinor) {
    let f = TestSpinor::new(
        probes::spectral_gaussian(g, 0.3, 2.5, 0.2),
        probes::spectral_gaussian(g, -0.4, 2.3, 0.0).scale(Complex64::new(0.3, 0.5)),
    );
    let h = TestSpinor::new(
        probes::spectral_gaussian(g, -0.2, 2.4, -0.3),
        probes::spectral_gaussian(g, 0.1, 2.6, 0.4),
    );
    (f, h)
}

/// `∫ φ(s) dE(f, h)` over a window wide enough for the periodic tails.
fn spectral_oracle<P>(phi: P, f: &TestSpinor, h: &TestSpinor, st: &StateParams, g: &Geometry, quad: &QuadratureSpec) -> Complex64
where
    P: Fn(f64) -> Complex64 + Sync,
{
    integrate_density(phi, f, h, st, g, 10.0, quad).unwrap()
}

#[test]
fn flow_matches_spectral_integral() {
    // Oracle: ∫ (μ/(1-μ))^{it} dE(f,h) from the closed-form spectral density.
    let g = geo();
    let quad = QuadratureSpec::default();
    let (f, h) = spectral_pair(&g);
    for st in [StateParams::ns(), StateParams::zero_temperature(&g), mixed(&g)] {
        for t in [0.15, -0.4] {
            let k = ModularFlowKernel::new(t, &st, &g).unwrap();
            let direct = flow_element(&k, &h, &f, &g, &quad);
            let spectral = spectral_oracle(|s| Complex64::from_polar(1.0, 2.0 * PI * s * t), &f, &h, &st, &g, &quad);
            assert!((direct - spectral).norm() < 1e-6, "t={t}: {direct} vs {spectral}");
        }
    }
}

#[test]
fn pure_flow_matches_spectral_integral() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let (f, h) = spectral_pair(&g);
    for st in [StateParams::tip(&g, true), StateParams::rim(&g, false, 0.8, 0.3).unwrap()] {
        for t in [0.15, -0.4] {
            let k = kernels_for(&st, t, &g).unwrap().1;
            let direct = flow_element(&k, &h, &f, &g, &quad);
            let spectral = spectral_oracle(|s| Complex64::from_polar(1.0, 2.0 * PI * s * t), &f, &h, &st, &g, &quad);
            assert!((direct - spectral).norm() < 1e-6, "t={t}: {direct} vs {spectral}");
        }
    }
}

#[test]
fn hamiltonian_matches_spectral_integral() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let (f, h) = spectral_pair(&g);
    for st in [StateParams::ns(), StateParams::zero_temperature(&g), mixed(&g)] {
        let k = ModularHamiltonianKernel::new(&st, &g).unwrap();
        let direct = k.matrix_element(&h, &f, &quad).unwrap();
        let spectral = spectral_oracle(|s| Complex64::new(2.0 * PI * s, 0.0), &f, &h, &st, &g, &quad);
        assert!((direct - spectral).norm() < 1e-6, "{direct} vs {spectral}");
    }
}

#[test]
fn hamiltonian_is_hermitian() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.4, 0.8);
    let h = probes::omega_pair_alt(&g, -0.3, 0.9);
    for st in [StateParams::ns(), mixed(&g), StateParams::massive_vacuum(&g), StateParams::tip(&g, false)] {
        let k = kernels_for(&st, 0.0, &g).unwrap().0;
        let a = k.matrix_element(&h, &f, &quad).unwrap();
        let b = k.matrix_element(&f, &h, &quad).unwrap();
        assert!((a - b.conj()).norm() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn flow_is_unitary() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.4, 0.8);
    let h = probes::omega_pair_alt(&g, -0.3, 0.9);
    for st in [StateParams::ns(), mixed(&g), StateParams::rim(&g, true, 1.2, 0.4).unwrap()] {
        let k = kernels_for(&st, 0.3, &g).unwrap().1;
        let kf = k.apply_fn(&f, &quad).unwrap();
        let kh = k.apply_fn(&h, &quad).unwrap();
        let lhs = inner(&kh, &kf, &quad);
        let rhs = inner(&h, &f, &quad);
        assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn generator_error_is_linear_in_t() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.2, 0.8);
    for st in [StateParams::ns(), mixed(&g)] {
        let rows = generator_check(&f, &st, &g, &[1e-2, 5e-3, 2.5e-3], &quad).unwrap();
        let xs: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.relative_error.ln()).collect();
        let slope = (ys[0] - ys[2]) / (xs[0] - xs[2]);
        assert!((slope - 1.0).abs() < 0.2, "{rows:?}");
    }
}

#[test]
fn group_law() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.2, 0.8);
    let norm = spinor_norm(&g, &f, &quad).unwrap();
    let ns = StateParams::ns();
    assert!(group_law_check(0.3, -0.3, &f, &ns, &g, &quad).unwrap() <= 1e-4 * norm);
    assert!(group_law_check(0.3, 0.5, &f, &ns, &g, &quad).unwrap() <= 1e-3 * norm);
    let m = mixed(&g);
    assert!(group_law_check(0.2, 0.2, &f, &m, &g, &quad).unwrap() <= 1e-3 * norm);
    assert!(group_law_check(0.25, -0.25, &f, &m, &g, &quad).unwrap() <= 1e-4 * norm);
}

#[test]
fn ns_flow_preserves_chirality_and_support() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = TestSpinor::only(Chirality::One, probes::bump(0.3, 0.1));
    let k = kernels_for(&StateParams::ns(), 0.2, &g).unwrap().1;
    let (lo, hi) = (g.flow_trajectory(0.2, 0.2).unwrap(), g.flow_trajectory(0.4, 0.2).unwrap());
    for x in [-0.9, -0.2, 0.1, lo - 1e-3, hi + 1e-3, 0.95] {
        let out = k.apply(&f, &[x], &quad).unwrap()[0];
        assert_eq!(out[1], Complex64::new(0.0, 0.0));
        assert_eq!(out[0], Complex64::new(0.0, 0.0), "x = {x}");
    }
    let mid = k.apply(&f, &[0.5 * (lo + hi)], &quad).unwrap()[0];
    assert!(mid[0].norm() > 0.1);
}

#[test]
fn mixed_flow_is_nonlocal() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = TestSpinor::only(Chirality::One, probes::bump(0.3, 0.05));
    let k = kernels_for(&mixed(&g), 0.2, &g).unwrap().1;
    for x in [-0.95, -0.5, 0.0, 0.8] {
        let out = k.apply(&f, &[x], &quad).unwrap()[0];
        assert!(out[0].norm() + out[1].norm() > 1e-9, "x = {x}");
    }
}

#[test]
fn pure_limits_agree_with_generic_collapse() {
    // The generic builder collapses |2Lhᵢ| = 1 terms to δ's; the limit
    // formulas are written independently.
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.2, 0.8);
    let (psi, phi) = (1.1, 0.4);
    for which in [PureLimit::TipPlus, PureLimit::TipMinus, PureLimit::RimPlus, PureLimit::RimMinus] {
        let st = which.state(&g, psi, phi).unwrap();
        let lim = pure_limit_kernel(which, psi, phi, 0.3, &g).unwrap();
        let gen_h = ModularHamiltonianKernel::new(&st, &g).unwrap();
        let gen_k = ModularFlowKernel::new(0.3, &st, &g).unwrap();
        assert!(gen_h.is_local() && gen_k.is_local());
        for x in [-0.7, 0.05, 0.6] {
            let p = g.point(x).unwrap();
            let a = lim.hamiltonian.apply_point(&f, &p, &quad).unwrap();
            let b = gen_h.apply_point(&f, &p, &quad).unwrap();
            let c = lim.flow.apply_point(&f, &p, &quad).unwrap();
            let d = gen_k.apply_point(&f, &p, &quad).unwrap();
            for i in 0..2 {
                assert!((a[i] - b[i]).norm() < 1e-12 * (1.0 + a[i].norm()), "{which:?} H");
                assert!((c[i] - d[i]).norm() < 1e-12 * (1.0 + c[i].norm()), "{which:?} K");
            }
        }
    }
}

#[test]
fn near_tip_hamiltonian_approaches_the_limit() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probes::omega_pair(&g, 0.2, 0.8);
    let h = probes::omega_pair_alt(&g, 0.1, 0.9);
    let b = 0.5 / g.circumference();
    let lim = pure_limit_kernel(PureLimit::TipPlus, 0.0, 0.0, 0.0, &g).unwrap().hamiltonian;
    let target = lim.matrix_element(&h, &f, &quad).unwrap();
    let diffs: Vec<f64> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|&eta| {
            let st = StateParams::ramond(&g, b * (1.0 - eta), b * (1.0 - eta), 0.0, 0.0).unwrap();
            let k = ModularHamiltonianKernel::new(&st, &g).unwrap();
            (k.matrix_element(&h, &f, &quad).unwrap() - target).norm()
        })
        .collect();
    assert!(diffs[1] < diffs[0] && diffs[2] < diffs[1], "{diffs:?}");
}

#[test]
fn rim_mirror_response() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let st = StateParams::rim(&g, true, PI / 2.0, 0.0).unwrap();
    let h = kernels_for(&st, 0.0, &g).unwrap().0;
    let f = TestSpinor::only(Chirality::Two, probes::bump(0.5, 0.1));
    let out = h.apply(&f, &[-0.5], &quad).unwrap()[0];
    assert!(out[0].norm() > 0.1, "{out:?}");
    let zero = field_norm(&g, |p| Ok(if p.x.abs() < 0.35 { h.apply_point(&f, p, &quad)? } else { [Complex64::new(0.0, 0.0); 2] }), &quad).unwrap();
    assert!(zero < 1e-12);
}

#[test]
fn periodic_local_weight_is_the_ns_weight_times_cos() {
    let g = geo();
    let t = 0.2;
    for (x, y) in [(0.3, -0.1), (-0.6, 0.5), (0.1, 0.1)] {
        let ns = ModularFlowKernel::new(t, &StateParams::ns(), &g).unwrap().eval(x, y).unwrap();
        let r = ModularFlowKernel::new(t, &mixed(&g), &g).unwrap().eval(x, y).unwrap();
        let c = (PI * (x - y) / g.circumference()).cos();
        for a in 0..2 {
            assert!((r.local_weight[a][a] - ns.local_weight[a][a] * c).norm() < 1e-14);
            assert_eq!(r.trajectory_residual[a][a], ns.trajectory_residual[a][a]);
        }
    }
}
