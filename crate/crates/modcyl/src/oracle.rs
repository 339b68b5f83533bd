//! Numerical cross-check of the analytic kernels.
//!
//! `G` is collocated on a midpoint grid of `N` nodes per chirality, and the
//! functions `ln(G/(1-G))` and `(G/(1-G))^{it}` are formed from its Hermitian
//! eigendecomposition. Nothing here touches the closed-form flow or
//! Hamiltonian kernels; the comparison drivers take those as closures.

use crate::distributions::quadrature::integrate;
use crate::distributions::{QuadratureSpec, TestSpinor};
use crate::error::{Error, Result};
use crate::geometry::{Chirality, Geometry};
use crate::states::{build_h, StateParams};
use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Mutex;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Eigenvalues are clipped into `[LAMBDA_MIN, 1 - LAMBDA_MIN]` before
/// `ln` or powers are taken.
pub const LAMBDA_MIN: f64 = 1e-12;

/// Dense complex matrix used for the discretized operators.
pub type CMatrix = Mat<Complex64>;

/// `G` restricted to the interval, collocated at the midpoints
/// `x_j = -ℓ + (j + ½)·dx`. Index `a·N + j` is chirality `a`, node `j`.
#[derive(Clone)]
pub struct DiscretizedOperator {
    n: usize,
    dx: f64,
    nodes: Vec<f64>,
    geo: Geometry,
    mat: CMatrix,
}

/// Collocate the two-point operator.
///
/// The `iε` kernel splits into `½δ(x-y)` plus a principal value; the PV part
/// is odd, so its diagonal is dropped and the off-diagonal entries carry the
/// weight `dx`. Periodic states add `h_ab·dx` to every entry.
pub fn discretize_g(state: &StateParams, geo: &Geometry, n: usize) -> Result<DiscretizedOperator> {
    if n < 16 || n % 2 != 0 {
        return Err(Error::Invalid(format!("grid size N = {n} must be even and at least 16")));
    }
    let ell = geo.half_width();
    let dx = 2.0 * ell / n as f64;
    let nodes: Vec<f64> = (0..n).map(|j| -ell + (j as f64 + 0.5) * dx).collect();
    let h = if state.is_ns() { None } else { Some(build_h(state, geo)?.0) };
    let periodic = h.is_some();
    let k = geo.k();
    let l = geo.circumference();
    let dim = 2 * n;
    let entry = |i: usize, j: usize| -> Complex64 {
        let (a, p) = (i / n, i % n);
        let (b, q) = (j / n, j % n);
        let mut v = h.map_or(ZERO, |h| h[(a, b)] * dx);
        if a == b {
            if p == q {
                v += 0.5;
            } else {
                let u = k * (nodes[p] - nodes[q]);
                let f = if periodic { u.cos() / u.sin() } else { 1.0 / u.sin() };
                let sigma = Chirality::from_index(a).sign();
                // σ_a/(2iL)·f·dx
                v += Complex64::new(0.0, -sigma * f * dx / (2.0 * l));
                // self-cell PV term -c·f'(x)·dx, c = -iσ/2π, by central difference
                if q == p + 1 {
                    v += Complex64::new(0.0, sigma / (4.0 * PI));
                } else if p == q + 1 {
                    v -= Complex64::new(0.0, sigma / (4.0 * PI));
                }
            }
        }
        v
    };
    let cols: Vec<Vec<Complex64>> = (0..dim).into_par_iter().map(|j| (0..dim).map(|i| entry(i, j)).collect()).collect();
    let mat = Mat::from_fn(dim, dim, |i, j| 0.5 * (cols[j][i] + cols[i][j].conj()));
    Ok(DiscretizedOperator {
        n,
        dx,
        nodes,
        geo: *geo,
        mat,
    })
}

/// Apply a dense matrix to a sampled vector.
pub fn apply_matrix(m: &CMatrix, u: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .into_par_iter()
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * u[j]).sum())
        .collect()
}

impl DiscretizedOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geo
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `max |G - G†|`
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Samples at the nodes, chirality 1 first.
    pub fn sample(&self, f: &TestSpinor) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for (j, &x) in self.nodes.iter().enumerate() {
            let v = f.eval(x);
            out[j] = v[0];
            out[self.n + j] = v[1];
        }
        out
    }

    /// Reject probes that do not vanish within `cells` nodes of either
    /// endpoint.
    pub fn check_probe(&self, f: &TestSpinor, cells: usize) -> Result<()> {
        let u = self.sample(f);
        let peak = u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for a in 0..2 {
            for j in (0..cells).chain(self.n - cells..self.n) {
                if u[a * self.n + j].norm() > 1e-14 * peak {
                    return Err(Error::Invalid(format!(
                        "probe does not vanish within {cells} cells of the endpoints (node {j}, chirality {})",
                        a + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// `dx·Σ conj(u)·v`
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.dx
    }

    pub fn norm(&self, u: &[Complex64]) -> f64 {
        self.inner(u, u).re.sqrt()
    }

    /// Hermitian eigendecomposition with clipping bookkeeping.
    pub fn decompose(&self) -> Result<SpectralDecomposition> {
        let evd = self
            .mat
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Degenerate(format!("eigendecomposition failed: {e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let dim = self.dim();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
        let eigenvectors = Mat::from_fn(dim, dim, |i, j| u[(i, order[j])]);
        let below = eigenvalues.iter().filter(|&&l| l < LAMBDA_MIN).count();
        let above = eigenvalues.iter().filter(|&&l| l > 1.0 - LAMBDA_MIN).count();
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            clipped: ClipCount { below, above },
        })
    }
}

/// How many eigenvalues were clipped at each end of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClipCount {
    pub below: usize,
    pub above: usize,
}

impl ClipCount {
    pub fn total(&self) -> usize {
        self.below + self.above
    }
}

/// `G = U·diag(λ)·U†`, eigenvalues ascending.
#[derive(Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    clipped: ClipCount,
}

fn clip(l: f64) -> f64 {
    l.clamp(LAMBDA_MIN, 1.0 - LAMBDA_MIN)
}

impl SpectralDecomposition {
    /// Raw eigenvalues, before clipping.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn clipped(&self) -> ClipCount {
        self.clipped
    }

    fn values<F>(&self, f: F) -> Result<Vec<Complex64>>
    where
        F: Fn(f64) -> Complex64,
    {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = f(clip(l));
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Degenerate(format!("spectral function is not finite at eigenvalue {l}")))
                }
            })
            .collect()
    }

    /// `U·diag(f(λ))·U†`
    pub fn function_matrix<F>(&self, f: F) -> Result<CMatrix>
    where
        F: Fn(f64) -> Complex64,
    {
        let d = self.values(f)?;
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, dj) in d.iter().enumerate() {
            for i in 0..u.nrows() {
                scaled[(i, j)] *= *dj;
            }
        }
        Ok(&scaled * u.adjoint())
    }

    /// `U·diag(f(λ))·U†·v` without forming the matrix.
    pub fn apply_function<F>(&self, f: F, v: &[Complex64]) -> Result<Vec<Complex64>>
    where
        F: Fn(f64) -> Complex64,
    {
        let d = self.values(f)?;
        let u = &self.eigenvectors;
        let dim = u.nrows();
        let w: Vec<Complex64> = (0..dim)
            .into_par_iter()
            .map(|k| d[k] * (0..dim).map(|i| u[(i, k)].conj() * v[i]).sum::<Complex64>())
            .collect();
        Ok((0..dim).into_par_iter().map(|i| (0..dim).map(|k| u[(i, k)] * w[k]).sum()).collect())
    }

    /// `ln(λ/(1-λ))`
    pub fn hamiltonian(&self) -> Result<CMatrix> {
        self.function_matrix(log_ratio)
    }

    /// `(λ/(1-λ))^{it}`
    pub fn flow(&self, t: f64) -> Result<CMatrix> {
        self.function_matrix(|l| flow_phase(l, t))
    }

    /// Coefficients `U†v`.
    pub fn coefficients(&self, v: &[Complex64]) -> Vec<Complex64> {
        let u = &self.eigenvectors;
        let dim = u.nrows();
        (0..dim)
            .into_par_iter()
            .map(|k| (0..dim).map(|i| u[(i, k)].conj() * v[i]).sum())
            .collect()
    }
}

fn log_ratio(l: f64) -> Complex64 {
    Complex64::new((l / (1.0 - l)).ln(), 0.0)
}

fn flow_phase(l: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t * (l / (1.0 - l)).ln())
}

/// `ln(G/(1-G))` on the grid.
pub fn matrix_modular_hamiltonian(d: &DiscretizedOperator) -> Result<CMatrix> {
    d.decompose()?.hamiltonian()
}

/// `(G/(1-G))^{it}` on the grid.
pub fn matrix_modular_flow(d: &DiscretizedOperator, t: f64) -> Result<CMatrix> {
    d.decompose()?.flow(t)
}

/// A discretized operator together with its decomposition, shared by every
/// comparison at that resolution.
#[derive(Clone)]
pub struct OracleGrid {
    pub op: DiscretizedOperator,
    pub eig: SpectralDecomposition,
}

impl OracleGrid {
    pub fn new(state: &StateParams, geo: &Geometry, n: usize) -> Result<Self> {
        let op = discretize_g(state, geo, n)?;
        let eig = op.decompose()?;
        Ok(OracleGrid { op, eig })
    }

    pub fn apply_hamiltonian(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.eig.apply_function(log_ratio, v)
    }

    pub fn apply_flow(&self, t: f64, v: &[Complex64]) -> Result<Vec<Complex64>> {
        self.eig.apply_function(|l| flow_phase(l, t), v)
    }
}

/// Where the largest pointwise deviation sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxLocation {
    pub chirality: u8,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeError {
    pub probe: usize,
    pub relative_l2: f64,
    pub max_abs: f64,
    pub max_at: MaxLocation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridComparison {
    pub n: usize,
    pub clipped: ClipCount,
    pub errors: Vec<ProbeError>,
}

/// Errors per grid and probe, with fitted convergence orders in `1/N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub label: String,
    pub grids: Vec<GridComparison>,
    /// One least-squares order per probe.
    pub orders: Vec<f64>,
    /// Probes whose fitted order falls below 0.5.
    pub non_convergent: Vec<usize>,
}

impl ComparisonReport {
    /// Largest relative error over probes at grid size `n`.
    pub fn max_error_at(&self, n: usize) -> Option<f64> {
        self.grids
            .iter()
            .find(|g| g.n == n)
            .map(|g| g.errors.iter().map(|e| e.relative_l2).fold(0.0, f64::max))
    }

    /// Smallest fitted order over probes.
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Probes must vanish within this many grid cells of `±ℓ`.
pub const EDGE_CELLS: usize = 4;

/// Compare an analytic pointwise action against a numeric action on one grid.
pub fn compare_on_grid<A, M>(analytic: A, numeric: M, grid: &OracleGrid, probes: &[TestSpinor]) -> Result<GridComparison>
where
    A: Fn(&TestSpinor, &[f64]) -> Result<Vec<[Complex64; 2]>>,
    M: Fn(&OracleGrid, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let op = &grid.op;
    let n = op.n();
    let mut errors = Vec::with_capacity(probes.len());
    for (idx, f) in probes.iter().enumerate() {
        op.check_probe(f, EDGE_CELLS)?;
        let num = numeric(grid, &op.sample(f))?;
        let ana = analytic(f, op.nodes())?;
        let mut exact = vec![ZERO; op.dim()];
        for (j, v) in ana.iter().enumerate() {
            exact[j] = v[0];
            exact[n + j] = v[1];
        }
        let diff: Vec<Complex64> = exact.iter().zip(&num).map(|(a, b)| a - b).collect();
        let (mut max_abs, mut at) = (0.0, 0);
        for (i, d) in diff.iter().enumerate() {
            if d.norm() > max_abs {
                max_abs = d.norm();
                at = i;
            }
        }
        let scale = op.norm(&exact);
        errors.push(ProbeError {
            probe: idx,
            relative_l2: op.norm(&diff) / if scale > 0.0 { scale } else { 1.0 },
            max_abs,
            max_at: MaxLocation {
                chirality: (at / n + 1) as u8,
                x: op.nodes()[at % n],
            },
        });
    }
    Ok(GridComparison {
        n,
        clipped: grid.eig.clipped(),
        errors,
    })
}

/// Least-squares slope of `ln e` against `ln N`, negated.
pub fn convergence_order(ns: &[usize], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&n, &e)| ((n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - mx) * (y - my), d + (x - mx) * (x - mx)));
    -num / den
}

/// Run [`compare_on_grid`] over a sweep of grids and fit orders.
pub fn compare<A, M>(label: &str, analytic: A, numeric: M, grids: &[OracleGrid], probes: &[TestSpinor]) -> Result<ComparisonReport>
where
    A: Fn(&TestSpinor, &[f64]) -> Result<Vec<[Complex64; 2]>>,
    M: Fn(&OracleGrid, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let rows: Vec<GridComparison> = grids
        .iter()
        .map(|g| compare_on_grid(&analytic, &numeric, g, probes))
        .collect::<Result<_>>()?;
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let orders: Vec<f64> = (0..probes.len())
        .map(|p| {
            let e: Vec<f64> = rows.iter().map(|r| r.errors[p].relative_l2).collect();
            convergence_order(&ns, &e)
        })
        .collect();
    let non_convergent = orders
        .iter()
        .enumerate()
        .filter(|(_, o)| !(**o >= 0.5))
        .map(|(i, _)| i)
        .collect();
    Ok(ComparisonReport {
        label: label.to_string(),
        grids: rows,
        orders,
        non_convergent,
    })
}

/// One `μ`-bin of the spectral measure `⟨g, dE f⟩`, bin-averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralBin {
    pub lo: f64,
    pub hi: f64,
    pub discrete: Complex64,
    pub analytic: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCheck {
    pub bins: Vec<SpectralBin>,
    /// `sup` over bins of the difference of bin-averaged densities.
    pub residual: f64,
    pub mass_discrete: Complex64,
    pub mass_analytic: Complex64,
    /// `⟨g, f⟩` on the grid.
    pub overlap: Complex64,
}

/// Bin the eigen-decomposition of `G` against an analytic density.
///
/// `density_s` is `dE(f,g)/ds` with `μ = 1/(1 + e^{-2πs})`; the outer bins
/// are integrated out to `|s| = s_tail`.
pub fn spectral_measure_check<D>(
    grid: &OracleGrid,
    density_s: D,
    f: &TestSpinor,
    g: &TestSpinor,
    bins: usize,
    s_tail: f64,
    quad: &QuadratureSpec,
) -> Result<SpectralCheck>
where
    D: Fn(f64) -> Result<Complex64> + Sync,
{
    let op = &grid.op;
    if bins == 0 || 1.0 / (bins as f64) < 1.0 / op.dim() as f64 {
        return Err(Error::Precision(format!(
            "{bins} bins are narrower than the mean eigenvalue spacing 1/{}",
            op.dim()
        )));
    }
    op.check_probe(f, EDGE_CELLS)?;
    op.check_probe(g, EDGE_CELLS)?;
    let (uf, ug) = (op.sample(f), op.sample(g));
    let (cf, cg) = (grid.eig.coefficients(&uf), grid.eig.coefficients(&ug));
    let width = 1.0 / bins as f64;
    let mut discrete = vec![ZERO; bins];
    for (k, &l) in grid.eig.eigenvalues().iter().enumerate() {
        let b = ((l / width).floor().max(0.0) as usize).min(bins - 1);
        discrete[b] += cg[k].conj() * cf[k] * op.dx();
    }
    let s_of = |mu: f64| (mu / (1.0 - mu)).ln() / (2.0 * std::f64::consts::PI);
    let failure = Mutex::new(None);
    let analytic: Vec<Complex64> = (0..bins)
        .into_par_iter()
        .map(|b| {
            let lo = if b == 0 { -s_tail } else { s_of(b as f64 * width) };
            let hi = if b + 1 == bins { s_tail } else { s_of((b + 1) as f64 * width) };
            integrate(
                |s| match density_s(s) {
                    Ok(d) => d,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        ZERO
                    }
                },
                lo,
                hi,
                &[],
                quad,
            )
            .value
        })
        .collect();
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let rows: Vec<SpectralBin> = (0..bins)
        .map(|b| SpectralBin {
            lo: b as f64 * width,
            hi: (b + 1) as f64 * width,
            discrete: discrete[b] / width,
            analytic: analytic[b] / width,
        })
        .collect();
    let residual = rows.iter().map(|r| (r.discrete - r.analytic).norm()).fold(0.0, f64::max);
    Ok(SpectralCheck {
        bins: rows,
        residual,
        mass_discrete: discrete.iter().sum(),
        mass_analytic: analytic.iter().sum(),
        overlap: op.inner(&ug, &uf),
    })
}
