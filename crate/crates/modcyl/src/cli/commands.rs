use super::config::{Format, RunConfig};
use super::output::{csv_string, json_string, parse_csv, write_atomic, KernelTable, Part, Row, SCHEMA_VERSION};
use super::svg::{self, Curve, HistogramBin};
use super::CliError;
use crate::correlators::{Domain, TwoPointKernel};
use crate::distributions::{QuadratureSpec, SingularKernel1D};
use crate::geometry::{Chirality, Geometry, IntervalPoint};
use crate::modular::{ModularFlowKernel, ModularHamiltonianKernel};
use crate::oracle::{spectral_measure_check, OracleGrid};
use crate::resolvent::{jump_kernel, spectral_density_s};
use crate::states::StateParams;
use crate::suite::{self, oracle_probes, Regime, SuiteConfig, SuiteReport};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Spectral parameters at which the resolvent jump is tabulated.
pub const JUMP_MU: [f64; 3] = [0.25, 0.5, 0.75];
const SPECTRUM_BINS: usize = 32;
const SPECTRUM_TAIL: f64 = 30.0;
/// Trajectory points with `|Ω|` above this lie within 1e-15 of an endpoint.
const OMEGA_EDGE: f64 = 36.0;

fn row(a: usize, b: usize, x: f64, y: f64, part: Part, z: Complex64) -> Row {
    Row { a: a as u8 + 1, b: b as u8 + 1, x, y, part, re: z.re, im: z.im }
}

fn nodes(geo: &Geometry, n: usize) -> Vec<IntervalPoint> {
    geo.midpoint_nodes(n).into_iter().map(|x| geo.point(x).expect("interior node")).collect()
}

fn mirror_point(p: &IntervalPoint) -> IntervalPoint {
    IntervalPoint { x: -p.x, dist_lo: p.dist_hi, dist_hi: p.dist_lo, omega1: -p.omega1 }
}

/// Rows for every part of a structured kernel on the product grid. Local
/// parts sit on `y = x` (`δ`, `δ'`) or `y = -x` (mirror).
pub fn structured_rows(k: &SingularKernel1D, pts: &[IntervalPoint]) -> Vec<Row> {
    pts.par_iter()
        .flat_map_iter(|x| {
            let mut out = Vec::new();
            for y in pts {
                let s = k.sample(x, y);
                if let Some(m) = s.smooth {
                    for (a, b) in pairs() {
                        out.push(row(a, b, x.x, y.x, Part::Smooth, m[(a, b)]));
                    }
                }
                if let Some(pv) = s.pv {
                    for (a, b) in pairs() {
                        if let Some(z) = pv[a][b] {
                            out.push(row(a, b, x.x, y.x, Part::Pv, z));
                        }
                    }
                }
            }
            let local = k.sample(x, x);
            for (part, m, y) in [
                (Part::Delta, local.delta, x.x),
                (Part::DeltaPrime, local.delta_prime, x.x),
                (Part::Mirror, local.mirror, mirror_point(x).x),
            ] {
                if let Some(m) = m {
                    for (a, b) in pairs() {
                        out.push(row(a, b, x.x, y, part, m[(a, b)]));
                    }
                }
            }
            out
        })
        .collect()
}

fn pairs() -> [(usize, usize); 4] {
    [(0, 0), (0, 1), (1, 0), (1, 1)]
}

/// Flow rows: nonlocal values on the grid, local weights on the trajectory
/// `Ω_b(y) = Ω_a(x) - 2πt`. Local rows with `a ≠ b` are tagged mirror and
/// kept only when some weight is nonzero.
pub fn flow_rows(k: &ModularFlowKernel, geo: &Geometry, pts: &[IntervalPoint]) -> crate::Result<Vec<Row>> {
    let shift = 2.0 * PI * k.t();
    let per_x: Vec<(Vec<Row>, Vec<Row>)> = pts
        .par_iter()
        .map(|x| -> crate::Result<(Vec<Row>, Vec<Row>)> {
            let mut rows = Vec::new();
            let mut mirror = Vec::new();
            if k.nonlocal().is_some() {
                for y in pts {
                    let p = k.eval(x.x, y.x)?;
                    for (a, b) in pairs() {
                        if let Some(z) = p.nonlocal_value[a][b] {
                            rows.push(row(a, b, x.x, y.x, Part::Pv, z));
                        }
                    }
                }
            }
            for (a, b) in pairs() {
                let (ca, cb) = (Chirality::from_index(a), Chirality::from_index(b));
                let v = cb.sign() * (x.omega(ca) - shift);
                if v.abs() > OMEGA_EDGE {
                    continue;
                }
                let y = geo.point_at_omega(v);
                let w = k.eval(x.x, y.x)?.local_weight[a][b];
                if a == b {
                    rows.push(row(a, b, x.x, y.x, Part::Delta, w));
                } else {
                    mirror.push(row(a, b, x.x, y.x, Part::Mirror, w));
                }
            }
            Ok((rows, mirror))
        })
        .collect::<crate::Result<_>>()?;
    let any_mirror = per_x.iter().flat_map(|p| &p.1).any(|r| r.re != 0.0 || r.im != 0.0);
    Ok(per_x
        .into_iter()
        .flat_map(|(mut r, m)| {
            if any_mirror {
                r.extend(m);
            }
            r
        })
        .collect())
}

/// `(1/2πi)[R(μ+i0) - R(μ-i0)](x, y)`, the kernel of `dE/dμ`.
pub fn jump_rows(mu: f64, state: &StateParams, geo: &Geometry, pts: &[IntervalPoint]) -> crate::Result<Vec<Row>> {
    let norm = Complex64::new(0.0, 2.0 * PI).inv();
    let per_x: Vec<Vec<Row>> = pts
        .par_iter()
        .map(|x| {
            let mut out = Vec::with_capacity(4 * pts.len());
            for y in pts {
                let m = jump_kernel(mu, x, y, state, geo)?;
                for (a, b) in pairs() {
                    out.push(row(a, b, x.x, y.x, Part::Smooth, norm * m[(a, b)]));
                }
            }
            Ok(out)
        })
        .collect::<crate::Result<_>>()?;
    Ok(per_x.into_iter().flatten().collect())
}

fn table(cfg: &RunConfig, object: &str, parameter: Option<f64>, rows: Vec<Row>) -> KernelTable {
    KernelTable {
        schema_version: SCHEMA_VERSION,
        kind: "kernel".into(),
        object: object.into(),
        parameter,
        circumference: cfg.geometry.circumference(),
        ell: cfg.geometry.half_width(),
        state: cfg.state_spec.label(),
        n: cfg.n,
        rows,
    }
}

/// Every kernel table the `kernel` verb writes, keyed by file stem.
pub fn kernel_tables(cfg: &RunConfig) -> crate::Result<Vec<(String, KernelTable)>> {
    let geo = &cfg.geometry;
    let pts = nodes(geo, cfg.n);
    let mut out = Vec::new();
    let g = TwoPointKernel::new(&cfg.state, geo, Domain::Interval)?;
    out.push(("g".to_string(), table(cfg, "g", None, structured_rows(g.kernel(), &pts))));
    for mu in JUMP_MU {
        out.push((format!("jump_mu{mu}"), table(cfg, "jump", Some(mu), jump_rows(mu, &cfg.state, geo, &pts)?)));
    }
    for &t in &cfg.times {
        let k = ModularFlowKernel::new(t, &cfg.state, geo)?;
        out.push((format!("flow_t{t}"), table(cfg, "flow", Some(t), flow_rows(&k, geo, &pts)?)));
    }
    let h = ModularHamiltonianKernel::new(&cfg.state, geo)?;
    out.push(("hamiltonian".to_string(), table(cfg, "hamiltonian", None, structured_rows(h.kernel(), &pts))));
    Ok(out)
}

/// Encoded outputs are staged in memory and written only once all succeed.
struct Staged(Vec<(PathBuf, Vec<u8>)>);

impl Staged {
    fn write(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in self.0 {
            let p = dir.join(name);
            write_atomic(&p, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            written.push(p);
        }
        Ok(written)
    }
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let tables = kernel_tables(cfg)?;
    let mut staged = Vec::new();
    for (stem, t) in &tables {
        if cfg.wants(Format::Csv) {
            staged.push((PathBuf::from(format!("{stem}.csv")), csv_string(&t.rows).into_bytes()));
        }
        if cfg.wants(Format::Json) {
            staged.push((PathBuf::from(format!("{stem}.json")), json_string(t).into_bytes()));
        }
        if cfg.wants(Format::Svg) {
            staged.push((PathBuf::from(format!("{stem}.svg")), svg::heatmap(t).into_bytes()));
        }
    }
    Staged(staged).write(&cfg.directory)
}

/// The verify report file.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyFile<'a> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub state: String,
    #[serde(flatten)]
    pub report: &'a SuiteReport,
}

/// Coarsest grid on which the oracle probes vanish near the endpoints.
pub const VERIFY_MIN_GRID: usize = 128;

/// The suite for the configured state on the grids among `N/4, N/2, N` that
/// are at least [`VERIFY_MIN_GRID`]; at least two are required.
pub fn suite_config(cfg: &RunConfig) -> Result<SuiteConfig, CliError> {
    let grids: Vec<usize> = [cfg.n / 4, cfg.n / 2, cfg.n].into_iter().filter(|&n| n >= VERIFY_MIN_GRID).collect();
    if grids.len() < 2 {
        return Err(CliError::Invalid(format!(
            "  N: verify needs N >= {}, got {}",
            2 * VERIFY_MIN_GRID,
            cfg.n
        )));
    }
    Ok(SuiteConfig {
        geometry: cfg.geometry,
        regimes: vec![Regime { name: cfg.state_spec.label(), state: cfg.state }],
        grids,
        times: cfg.times.clone(),
        seed: cfg.seed,
        probes: cfg.probes,
        quad: QuadratureSpec::default(),
    })
}

fn curves(report: &SuiteReport) -> Vec<Curve> {
    report
        .criteria
        .iter()
        .flat_map(|c| &c.convergence)
        .map(|s| Curve { label: s.label.clone(), n: s.n.clone(), error: s.error.clone() })
        .collect()
}

/// Runs the suite, printing one line per criterion. Returns whether every
/// criterion passed and the files written.
pub fn cmd_verify(cfg: &RunConfig) -> Result<(bool, Vec<PathBuf>), CliError> {
    let sc = suite_config(cfg)?;
    let report = suite::run_all(&sc, |c| println!("{}", c.summary_line()));
    let file = VerifyFile { schema_version: SCHEMA_VERSION, kind: "verify", state: cfg.state_spec.label(), report: &report };
    let mut staged = vec![(PathBuf::from("verify.json"), json_string(&file).into_bytes())];
    let cs = curves(&report);
    if cfg.wants(Format::Csv) {
        let mut s = String::from("series,N,error\n");
        for c in &cs {
            for (n, e) in c.n.iter().zip(&c.error) {
                s.push_str(&format!("{},{n},{e}\n", c.label));
            }
        }
        staged.push((PathBuf::from("verify_convergence.csv"), s.into_bytes()));
    }
    if cfg.wants(Format::Svg) {
        let title = format!("oracle error vs N ({})", cfg.state_spec.label());
        staged.push((PathBuf::from("verify_convergence.svg"), svg::convergence(&cs, &title).into_bytes()));
    }
    let written = Staged(staged).write(&cfg.directory)?;
    Ok((report.passed, written))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub lo: f64,
    pub hi: f64,
    pub discrete: Complex64,
    pub analytic: Complex64,
}

/// Eigenvector histogram of the discretized `G` against `dE(f,f)/dμ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub schema_version: u32,
    pub kind: String,
    pub state: String,
    #[serde(rename = "L")]
    pub circumference: f64,
    pub ell: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub residual: f64,
    pub mass_discrete: Complex64,
    pub mass_analytic: Complex64,
    pub bins: Vec<SpectrumBin>,
}

pub fn spectrum(cfg: &RunConfig) -> crate::Result<SpectrumFile> {
    let geo = &cfg.geometry;
    let quad = QuadratureSpec::default();
    let f = oracle_probes(geo, cfg.probes).swap_remove(0);
    let grid = OracleGrid::new(&cfg.state, geo, cfg.n)?;
    let chk = spectral_measure_check(
        &grid,
        |s| spectral_density_s(s, &f, &f, &cfg.state, geo, &quad),
        &f,
        &f,
        SPECTRUM_BINS,
        SPECTRUM_TAIL,
        &quad,
    )?;
    Ok(SpectrumFile {
        schema_version: SCHEMA_VERSION,
        kind: "spectrum".into(),
        state: cfg.state_spec.label(),
        circumference: geo.circumference(),
        ell: geo.half_width(),
        n: cfg.n,
        residual: chk.residual,
        mass_discrete: chk.mass_discrete,
        mass_analytic: chk.mass_analytic,
        bins: chk.bins.iter().map(|b| SpectrumBin { lo: b.lo, hi: b.hi, discrete: b.discrete, analytic: b.analytic }).collect(),
    })
}

fn histogram(s: &SpectrumFile) -> String {
    let bins: Vec<HistogramBin> = s
        .bins
        .iter()
        .map(|b| HistogramBin { lo: b.lo, hi: b.hi, discrete: b.discrete.re, analytic: b.analytic.re })
        .collect();
    svg::spectral_histogram(&bins, &format!("spectral measure of G ({}, N = {})", s.state, s.n))
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let s = spectrum(cfg)?;
    let mut staged = Vec::new();
    if cfg.wants(Format::Csv) {
        let mut t = String::from("mu_lo,mu_hi,discrete_re,discrete_im,analytic_re,analytic_im\n");
        for b in &s.bins {
            t.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.lo, b.hi, b.discrete.re, b.discrete.im, b.analytic.re, b.analytic.im
            ));
        }
        staged.push((PathBuf::from("spectrum.csv"), t.into_bytes()));
    }
    if cfg.wants(Format::Json) {
        staged.push((PathBuf::from("spectrum.json"), json_string(&s).into_bytes()));
    }
    if cfg.wants(Format::Svg) {
        staged.push((PathBuf::from("spectrum.svg"), histogram(&s).into_bytes()));
    }
    Staged(staged).write(&cfg.directory)
}

#[derive(Debug, Deserialize)]
struct VerifyIn {
    state: String,
    criteria: Vec<CriterionIn>,
}

#[derive(Debug, Deserialize)]
struct CriterionIn {
    #[serde(default)]
    convergence: Vec<SeriesIn>,
}

#[derive(Debug, Deserialize)]
struct SeriesIn {
    label: String,
    n: Vec<usize>,
    error: Vec<f64>,
}

/// Render one input file. The format is recognised from the CSV header or
/// the JSON `kind` and `schema_version`.
pub fn render(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |m: String| CliError::Invalid(format!("{}: {m}", path.display()));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if text.trim_start().starts_with('{') {
        let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        match v.get("schema_version").and_then(|s| s.as_u64()) {
            Some(s) if s == SCHEMA_VERSION as u64 => {}
            Some(s) => return Err(bad(format!("schema_version {s} is not supported (expected {SCHEMA_VERSION})"))),
            None => return Err(bad("missing schema_version".into())),
        }
        return match v.get("kind").and_then(|k| k.as_str()) {
            Some("kernel") => {
                let t: KernelTable = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                Ok(svg::heatmap(&t))
            }
            Some("verify") => {
                let r: VerifyIn = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                let cs: Vec<Curve> = r
                    .criteria
                    .into_iter()
                    .flat_map(|c| c.convergence)
                    .map(|s| Curve { label: s.label, n: s.n, error: s.error })
                    .collect();
                Ok(svg::convergence(&cs, &format!("oracle error vs N ({})", r.state)))
            }
            Some("spectrum") => {
                let s: SpectrumFile = serde_json::from_value(v).map_err(|e| bad(e.to_string()))?;
                Ok(histogram(&s))
            }
            other => Err(bad(format!("unknown kind {other:?}"))),
        };
    }
    let rows = parse_csv(&text).map_err(bad)?;
    Ok(svg::heatmap(&table_from_rows(&stem, rows)))
}

/// Grid size and half-width recovered from midpoint nodes in `x`.
fn table_from_rows(stem: &str, rows: Vec<Row>) -> KernelTable {
    let mut xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let n = xs.len().max(1);
    let edge = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ell = if n > 1 { edge * n as f64 / (n as f64 - 1.0) } else { edge.max(1.0) };
    KernelTable {
        schema_version: SCHEMA_VERSION,
        kind: "kernel".into(),
        object: stem.into(),
        parameter: None,
        circumference: f64::NAN,
        ell,
        state: "csv".into(),
        n,
        rows,
    }
}

/// Render each input to `<stem>.svg`, in `out` or next to the input. All
/// inputs are rendered before anything is written.
pub fn cmd_plot(inputs: &[PathBuf], out: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let mut staged: Vec<(PathBuf, PathBuf, Vec<u8>)> = Vec::new();
    for p in inputs {
        let svg = render(p)?;
        let dir = match out {
            Some(d) => d.to_path_buf(),
            None => p.parent().map(Path::to_path_buf).unwrap_or_default(),
        };
        let name = format!("{}.svg", p.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default());
        staged.push((dir, PathBuf::from(name), svg.into_bytes()));
    }
    let mut written = Vec::new();
    for (dir, name, bytes) in staged {
        let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
        written.extend(Staged(vec![(name, bytes)]).write(&dir)?);
    }
    Ok(written)
}
