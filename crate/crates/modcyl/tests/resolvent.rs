use modcyl::correlators::{inner, Domain, Side, TwoPointKernel};
use modcyl::distributions::quadrature::integrate;
use modcyl::distributions::{probes, QuadratureSpec, TestSpinor};
use modcyl::resolvent::{
    integrate_density, mu_of_s, spectral_density, KernelForm, ResolventKernel, ResolventPoint,
};
use modcyl::states::StateParams;
use modcyl::{Complex64, Geometry, IntervalPoint};

fn geo() -> Geometry {
    Geometry::desk()
}

fn near_tip(g: &Geometry) -> StateParams {
    let b = 0.5 / g.circumference() * (1.0 - 1e-2);
    StateParams::ramond(g, b, b, 0.0, 0.0).unwrap()
}

fn mixed(g: &Geometry) -> StateParams {
    let b = 0.5 / g.circumference();
    StateParams::ramond(g, 0.2 * b, -0.5 * b, 1.0, 0.7).unwrap()
}

fn probe(g: &Geometry) -> TestSpinor {
    TestSpinor::new(probes::gaussian_x(g, 0.1, 0.2, 1.5), probes::gaussian_x(g, -0.2, 0.15, -0.5))
}

/// `(∫ Σ_a |r_a(x)|² dx)^{1/2}`, integrated in `v = Ω₁(x)`.
fn l2<F>(g: &Geometry, r: F, vmax: f64) -> f64
where
    F: Fn(&IntervalPoint) -> [Complex64; 2] + Sync,
{
    let quad = QuadratureSpec::default().with_tol(1e-14, 1e-8);
    integrate(
        |v| {
            let p = g.point_at_omega(v);
            let r = r(&p);
            Complex64::new((r[0].norm_sqr() + r[1].norm_sqr()) * g.jacobian(&p), 0.0)
        },
        -vmax,
        vmax,
        &[0.0],
        &quad,
    )
    .value
    .re
    .sqrt()
}

#[test]
fn resolvent_identity() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let fnorm = inner(&f, &f, &quad).re.sqrt();
    for st in [StateParams::ns(), mixed(&g)] {
        let gk = TwoPointKernel::new(&st, &g, Domain::Interval).unwrap();
        for mu in [Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.3)] {
            let rk = ResolventKernel::new(ResolventPoint::new(mu).unwrap(), &st, &g).unwrap();
            let u = rk.solve(&f, &quad).unwrap();
            let res = l2(
                &g,
                |p| {
                    let gu = gk.kernel().smear(&u, p, &quad).unwrap().applied();
                    let uu = u.eval_point(p);
                    let ff = f.eval_point(p);
                    [gu[0] - mu * uu[0] - ff[0], gu[1] - mu * uu[1] - ff[1]]
                },
                30.0,
            );
            assert!(res < 1e-6 * fnorm, "{mu}: {res}");
        }
    }
}

#[test]
fn solve_matches_direct_smearing() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let xs = [-0.7, -0.1, 0.25, 0.9];
    for st in [StateParams::ns(), mixed(&g)] {
        let rk = ResolventKernel::new(ResolventPoint::new(Complex64::new(-1.0, 0.0)).unwrap(), &st, &g).unwrap();
        let u = rk.solve(&f, &quad).unwrap();
        let direct = rk.apply(&f, &xs, &quad).unwrap();
        for (x, d) in xs.iter().zip(direct) {
            let s = u.eval(*x);
            assert!((s[0] - d[0]).norm() + (s[1] - d[1]).norm() < 1e-8, "{x}: {s:?} vs {d:?}");
        }
    }
}

#[test]
fn neumann_series_at_large_mu() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let fnorm = inner(&f, &f, &quad).re.sqrt();
    for st in [StateParams::ns(), mixed(&g)] {
        let gk = TwoPointKernel::new(&st, &g, Domain::Interval).unwrap();
        let mu = 100.0;
        let rk = ResolventKernel::new(ResolventPoint::new(Complex64::new(mu, 0.0)).unwrap(), &st, &g).unwrap();
        let u = rk.solve(&f, &quad).unwrap();
        let res = l2(
            &g,
            |p| {
                let gf = gk.kernel().smear(&f, p, &quad).unwrap().applied();
                let uu = u.eval_point(p);
                let ff = f.eval_point(p);
                [0, 1].map(|a| uu[a] + ff[a] / mu + gf[a] / (mu * mu))
            },
            30.0,
        );
        assert!(res <= 5.0 * fnorm / mu.powi(3), "{res}");
    }
}

#[test]
fn kernel_forms_agree() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let h = TestSpinor::new(probes::gaussian_x(&g, -0.3, 0.2, 0.0), probes::gaussian_x(&g, 0.2, 0.2, 2.0));
    for st in [StateParams::ns(), mixed(&g)] {
        for mu in [Complex64::new(2.0, 0.0), Complex64::new(-0.4, 0.0), Complex64::new(0.5, 0.3)] {
            let p = ResolventPoint::new(mu).unwrap();
            let a = ResolventKernel::with_form(p, &st, &g, KernelForm::Epsilon).unwrap();
            let b = ResolventKernel::with_form(p, &st, &g, KernelForm::Rewritten).unwrap();
            let va = a.matrix_element(&h, &f, &quad).unwrap();
            let vb = b.matrix_element(&h, &f, &quad).unwrap();
            assert!((va - vb).norm() < 1e-8 * (1.0 + va.norm()), "{mu}: {va} vs {vb}");
        }
    }
}

#[test]
fn spectral_mass_and_first_moment() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let pairs = [
        (probes::omega_pair(&g, 0.3, 2.0), probes::omega_pair_alt(&g, 0.5, 2.0)),
        (probe(&g), TestSpinor::new(probes::gaussian_x(&g, -0.1, 0.25, 1.0), probes::gaussian_x(&g, 0.3, 0.2, 0.0))),
    ];
    for (f, h) in &pairs {
        for st in [StateParams::ns(), StateParams::zero_temperature(&g), mixed(&g), near_tip(&g)] {
            let gk = TwoPointKernel::new(&st, &g, Domain::Interval).unwrap();
            let mass = integrate_density(|_| Complex64::new(1.0, 0.0), f, h, &st, &g, 14.0, &quad).unwrap();
            let expect = inner(h, f, &quad);
            assert!((mass - expect).norm() < 1e-5, "mass {mass} vs {expect}");
            let moment = integrate_density(|s| Complex64::new(mu_of_s(s), 0.0), f, h, &st, &g, 14.0, &quad).unwrap();
            // ⟨h, G f⟩ = ω(ψ(h*) ψ(f*)†) in the bilinear convention of two_point.
            let gf = gk.two_point(&h.conj(), &f.conj(), &quad).unwrap().value;
            assert!((moment - gf).norm() < 1e-5, "moment {moment} vs {gf}");
        }
    }
}

#[test]
fn density_is_positive_on_the_diagonal() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    for st in [StateParams::ns(), mixed(&g), near_tip(&g)] {
        for s in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            let d = spectral_density(mu_of_s(s), &f, &f, &st, &g, &quad).unwrap();
            assert!(d.re > -1e-10 && d.im.abs() < 1e-9 * (1.0 + d.re), "s={s}: {d}");
        }
    }
}

#[test]
fn density_matches_boundary_resolvent_difference() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let h = TestSpinor::new(probes::gaussian_x(&g, 0.2, 0.2, 0.0), probes::gaussian_x(&g, -0.1, 0.3, 0.0));
    for st in [StateParams::ns(), mixed(&g)] {
        for mu in [0.2, 0.5, 0.8] {
            let jump = |side| {
                let k = ResolventKernel::new(ResolventPoint::boundary(mu, side).unwrap(), &st, &g).unwrap();
                k.matrix_element(&h, &f, &quad).unwrap()
            };
            let sub = (jump(Side::Above) - jump(Side::Below)) / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
            let direct = spectral_density(mu, &f, &h, &st, &g, &quad).unwrap();
            assert!((sub - direct).norm() < 1e-8 * (1.0 + direct.norm()), "{mu}: {sub} vs {direct}");
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[test]
fn off_diagonal_entries_scale_with_the_interval_ratio() {
    let g = geo();
    let st = mixed(&g);
    let w = g.half_width() / g.circumference();
    let mus = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2];
    let (x, y) = (g.point(0.3).unwrap(), g.point(-0.45).unwrap());
    for side in [Side::Above, Side::Below] {
        let vals: Vec<f64> = mus
            .iter()
            .map(|&m| {
                let k = ResolventKernel::new(ResolventPoint::boundary(m, side).unwrap(), &st, &g).unwrap();
                (k.kernel().smooth.as_ref().unwrap())(&x, &y)[(0, 1)].norm()
            })
            .collect();
        let slope = loglog_slope(&mus, &vals);
        assert!((slope - (2.0 * w - 1.0)).abs() < 0.05, "{side:?}: {slope}");
    }
    // Off the cut, approaching 0 from the left. The O(μ^{2ℓ/L}) correction
    // to the leading power is larger here, so the fit moves closer to 0.
    let mus = [1e-7, 1e-6, 1e-5];
    let vals: Vec<f64> = mus
        .iter()
        .map(|&m| {
            let k = ResolventKernel::new(ResolventPoint::new(Complex64::new(-m, 0.0)).unwrap(), &st, &g).unwrap();
            (k.kernel().smooth.as_ref().unwrap())(&x, &y)[(0, 1)].norm()
        })
        .collect();
    let slope = loglog_slope(&mus, &vals);
    assert!((slope - (2.0 * w - 1.0)).abs() < 0.05, "{slope}");
}

#[test]
fn endpoint_tameness() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let h = TestSpinor::new(probes::gaussian_x(&g, -0.2, 0.2, 0.0), probes::gaussian_x(&g, 0.1, 0.2, 1.0));
    for st in [StateParams::ns(), mixed(&g)] {
        for (end, dir) in [(0.0, -1.0), (1.0, 1.0)] {
            let vals: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4]
                .iter()
                .map(|&eps| {
                    let mu = Complex64::new(end + dir * eps, 0.0);
                    let k = ResolventKernel::new(ResolventPoint::new(mu).unwrap(), &st, &g).unwrap();
                    let weight = if end == 0.0 { mu } else { 1.0 - mu };
                    (weight * k.matrix_element(&h, &f, &quad).unwrap()).norm()
                })
                .collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]), "end {end}: {vals:?}");
        }
    }
}

#[test]
fn matrix_elements_are_analytic_off_the_cut() {
    let g = geo();
    let quad = QuadratureSpec::default();
    let f = probe(&g);
    let h = TestSpinor::new(probes::gaussian_x(&g, -0.2, 0.2, 0.0), probes::gaussian_x(&g, 0.1, 0.2, 1.0));
    for st in [StateParams::ns(), mixed(&g)] {
        let at = |mu: Complex64| {
            ResolventKernel::new(ResolventPoint::new(mu).unwrap(), &st, &g)
                .unwrap()
                .matrix_element(&h, &f, &quad)
                .unwrap()
        };
        for mu in [Complex64::new(1.6, 0.4), Complex64::new(-0.5, -0.3), Complex64::new(0.5, 0.6)] {
            let d = 1e-3;
            let dx = (at(mu + d) - at(mu - d)) / (2.0 * d);
            let dy = (at(mu + Complex64::new(0.0, d)) - at(mu - Complex64::new(0.0, d))) / Complex64::new(0.0, 2.0 * d);
            assert!((dx - dy).norm() < 1e-5 * (1.0 + dx.norm()), "{mu}: {dx} vs {dy}");
        }
    }
}
