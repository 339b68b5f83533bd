//! Adaptive piecewise Chebyshev interpolation of vector-valued complex
//! functions. Used to turn an expensive pointwise evaluator (a flow output,
//! a resolvent integral) into something cheap to integrate against.

use num_complex::Complex64;
use rayon::prelude::*;

const ORDER: usize = 24;
const MAX_DEPTH: usize = 18;

#[derive(Debug, Clone)]
pub struct PiecewiseCheb {
    dim: usize,
    breaks: Vec<f64>,
    /// Per panel, `ORDER` coefficient rows of length `dim`.
    coeffs: Vec<Vec<Complex64>>,
}

fn cheb_nodes(a: f64, b: f64) -> Vec<f64> {
    (0..ORDER)
        .map(|j| {
            let t = (std::f64::consts::PI * (j as f64 + 0.5) / ORDER as f64).cos();
            0.5 * (a + b) + 0.5 * (b - a) * t
        })
        .collect()
}

fn coefficients(values: &[Vec<Complex64>], dim: usize) -> Vec<Complex64> {
    let n = ORDER;
    let mut c = vec![Complex64::new(0.0, 0.0); n * dim];
    for k in 0..n {
        let scale = if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        for (j, v) in values.iter().enumerate() {
            let w = (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos() * scale;
            for d in 0..dim {
                c[k * dim + d] += v[d] * w;
            }
        }
    }
    c
}

fn tail(c: &[Complex64], dim: usize) -> f64 {
    (ORDER - 3..ORDER)
        .flat_map(|k| (0..dim).map(move |d| (k, d)))
        .map(|(k, d)| c[k * dim + d].norm())
        .fold(0.0, f64::max)
}

struct Built {
    breaks: Vec<f64>,
    coeffs: Vec<Vec<Complex64>>,
}

fn build_rec<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64, depth: usize) -> Built
where
    F: Fn(f64) -> Vec<Complex64> + Sync,
{
    let nodes = cheb_nodes(a, b);
    let values: Vec<Vec<Complex64>> = nodes.par_iter().map(|&x| f(x)).collect();
    let c = coefficients(&values, dim);
    if tail(&c, dim) <= tol || depth >= MAX_DEPTH {
        return Built {
            breaks: vec![a, b],
            coeffs: vec![c],
        };
    }
    let m = 0.5 * (a + b);
    let (mut l, r) = rayon::join(
        || build_rec(f, a, m, dim, tol, depth + 1),
        || build_rec(f, m, b, dim, tol, depth + 1),
    );
    l.breaks.pop();
    l.breaks.extend(r.breaks);
    l.coeffs.extend(r.coeffs);
    l
}

impl PiecewiseCheb {
    /// Interpolate `f` on `[a, b]` to absolute accuracy about
    /// `abs_tol + rel_tol·max|f|` (max estimated from a pilot sample).
    pub fn build<F>(f: F, a: f64, b: f64, dim: usize, abs_tol: f64, rel_tol: f64) -> Self
    where
        F: Fn(f64) -> Vec<Complex64> + Sync,
    {
        let pilot: Vec<f64> = (0..=64).map(|j| a + (b - a) * j as f64 / 64.0).collect();
        let scale = pilot
            .par_iter()
            .map(|&x| f(x).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
        let tol = abs_tol + rel_tol * scale;
        let built = build_rec(&f, a, b, dim, tol, 0);
        PiecewiseCheb {
            dim,
            breaks: built.breaks,
            coeffs: built.coeffs,
        }
    }

    pub fn panels(&self) -> usize {
        self.coeffs.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().expect("nonempty"))
    }

    /// Evaluate component `d` at `x`; zero outside the domain.
    pub fn eval(&self, x: f64, d: usize) -> Complex64 {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return Complex64::new(0.0, 0.0);
        }
        let i = match self.breaks.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(self.coeffs.len() - 1),
            Err(i) => i - 1,
        };
        let (pa, pb) = (self.breaks[i], self.breaks[i + 1]);
        let t = (2.0 * x - pa - pb) / (pb - pa);
        let c = &self.coeffs[i];
        let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for k in (1..ORDER).rev() {
            let b0 = c[k * self.dim + d] + b1 * (2.0 * t) - b2;
            b2 = b1;
            b1 = b0;
        }
        c[d] + b1 * t - b2
    }
}
