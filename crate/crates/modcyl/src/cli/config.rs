//! Run configuration: a TOML file, overridden field by field by flags.
//!
//! ```toml
//! times = [0.1, 0.4, 1.0]
//!
//! [geometry]
//! L = 4.0
//! ell = 1.0
//!
//! [state]
//! preset = "rim(pi/2, pi/2)"   # or bc = "r", h1, h2, psi, phi
//!
//! [grid]
//! N = 128
//! probe = "both"               # omega-gaussian | x-gaussian | both
//! seed = 7
//!
//! [output]
//! directory = "modcyl-out"
//! formats = ["csv", "json", "svg"]
//! ```

use crate::geometry::Geometry;
use crate::states::StateParams;
use crate::suite::ProbeFamily;
use serde::Deserialize;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

pub const MIN_N: usize = 16;
pub const MAX_N: usize = 2048;

/// One problem with one field of the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn parse(s: &str) -> Option<Format> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

/// A named preset or explicit zero-mode parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    NsVacuum,
    ZeroTemperature,
    MassiveVacuum,
    TipPlus,
    TipMinus,
    Rim { plus: bool, psi: f64, phi: f64 },
    Explicit { ns: bool, h1: f64, h2: f64, psi: f64, phi: f64 },
}

impl StateSpec {
    /// Parse `ns-vacuum`, `zero-temperature`, `massive-vacuum`, `tip-plus`,
    /// `tip-minus`, `rim(psi,phi)` or `rim-minus(psi,phi)`. Angles accept
    /// `pi`, `pi/2`, `3*pi/4` and plain numbers.
    pub fn parse_preset(s: &str) -> std::result::Result<StateSpec, String> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        match t.as_str() {
            "ns-vacuum" => return Ok(StateSpec::NsVacuum),
            "zero-temperature" => return Ok(StateSpec::ZeroTemperature),
            "massive-vacuum" => return Ok(StateSpec::MassiveVacuum),
            "tip-plus" => return Ok(StateSpec::TipPlus),
            "tip-minus" => return Ok(StateSpec::TipMinus),
            _ => {}
        }
        let (plus, args) = if let Some(r) = t.strip_prefix("rim-minus(") {
            (false, r)
        } else if let Some(r) = t.strip_prefix("rim(") {
            (true, r)
        } else {
            return Err(format!(
                "unknown preset `{s}`; expected ns-vacuum, zero-temperature, massive-vacuum, tip-plus, tip-minus, rim(psi,phi) or rim-minus(psi,phi)"
            ));
        };
        let args = args.strip_suffix(')').ok_or_else(|| format!("`{s}`: missing `)`"))?;
        let mut it = args.split(',');
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(format!("`{s}`: rim takes two angles (psi,phi)"));
        };
        let psi = parse_angle(a).ok_or_else(|| format!("`{a}` is not an angle"))?;
        let phi = parse_angle(b).ok_or_else(|| format!("`{b}` is not an angle"))?;
        Ok(StateSpec::Rim { plus, psi, phi })
    }

    /// Stable name used in file metadata.
    pub fn label(&self) -> String {
        match self {
            StateSpec::NsVacuum => "ns-vacuum".into(),
            StateSpec::ZeroTemperature => "zero-temperature".into(),
            StateSpec::MassiveVacuum => "massive-vacuum".into(),
            StateSpec::TipPlus => "tip-plus".into(),
            StateSpec::TipMinus => "tip-minus".into(),
            StateSpec::Rim { plus, psi, phi } => {
                format!("{}({psi},{phi})", if *plus { "rim" } else { "rim-minus" })
            }
            StateSpec::Explicit { ns: true, .. } => "ns".into(),
            StateSpec::Explicit { h1, h2, psi, phi, .. } => format!("r(h1={h1},h2={h2},psi={psi},phi={phi})"),
        }
    }

    pub fn build(&self, geo: &Geometry) -> crate::Result<StateParams> {
        Ok(match *self {
            StateSpec::NsVacuum | StateSpec::Explicit { ns: true, .. } => StateParams::ns(),
            StateSpec::ZeroTemperature => StateParams::zero_temperature(geo),
            StateSpec::MassiveVacuum => StateParams::massive_vacuum(geo),
            StateSpec::TipPlus => StateParams::tip(geo, true),
            StateSpec::TipMinus => StateParams::tip(geo, false),
            StateSpec::Rim { plus, psi, phi } => StateParams::rim(geo, plus, psi, phi)?,
            StateSpec::Explicit { h1, h2, psi, phi, .. } => StateParams::ramond(geo, h1, h2, psi, phi)?,
        })
    }
}

fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d.parse::<f64>().ok()?)),
        None => (s, None),
    };
    let num = if num == "pi" {
        PI
    } else if let Some(c) = num.strip_suffix("*pi") {
        c.parse::<f64>().ok()? * PI
    } else {
        num.parse::<f64>().ok()?
    };
    let v = match den {
        Some(d) if d != 0.0 => num / d,
        Some(_) => return None,
        None => num,
    };
    v.is_finite().then_some(v)
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub state_spec: StateSpec,
    pub state: StateParams,
    pub n: usize,
    pub probes: ProbeFamily,
    pub seed: u64,
    pub times: Vec<f64>,
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub times: Option<String>,
    pub out: Option<PathBuf>,
    pub formats: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    geometry: Option<RawGeometry>,
    state: Option<RawState>,
    grid: Option<RawGrid>,
    times: Option<Vec<f64>>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(rename = "L")]
    circumference: Option<f64>,
    ell: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    preset: Option<String>,
    bc: Option<String>,
    h1: Option<f64>,
    h2: Option<f64>,
    psi: Option<f64>,
    phi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "N")]
    n: Option<i64>,
    probe: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    formats: Option<Vec<String>>,
}

/// Parse and validate; every problem found is reported, not just the first.
pub fn load(text: Option<&str>, flags: &Overrides) -> std::result::Result<RunConfig, Vec<Diagnostic>> {
    let raw: RawConfig = match text {
        Some(t) => toml::from_str(t).map_err(|e| vec![toml_diagnostic(t, &e)])?,
        None => RawConfig::default(),
    };
    let mut diags = Vec::new();

    let g = raw.geometry.unwrap_or_default();
    let l = g.circumference.unwrap_or(4.0);
    let ell = g.ell.unwrap_or(1.0);
    if !(l.is_finite() && l > 0.0) {
        diags.push(Diagnostic::new("geometry.L", format!("must be a positive finite number, got {l}")));
    }
    if !(ell.is_finite() && ell > 0.0) {
        diags.push(Diagnostic::new("geometry.ell", format!("must be a positive finite number, got {ell}")));
    } else if l.is_finite() && 2.0 * ell >= l {
        diags.push(Diagnostic::new("geometry.ell", format!("2*ell = {} must be below L = {l}", 2.0 * ell)));
    }
    let geometry = if diags.is_empty() {
        Geometry::new(l, ell).map_err(|e| diags.push(Diagnostic::new("geometry", e.to_string()))).ok()
    } else {
        None
    };

    let state_spec = match &flags.preset {
        Some(p) => StateSpec::parse_preset(p).map_err(|m| diags.push(Diagnostic::new("--preset", m))).ok(),
        None => state_spec(raw.state.unwrap_or_default(), &mut diags),
    };
    let state = match (&state_spec, &geometry) {
        (Some(s), Some(geo)) => s.build(geo).map_err(|e| diags.push(Diagnostic::new("state", e.to_string()))).ok(),
        _ => None,
    };

    let grid = raw.grid.unwrap_or_default();
    let n = match flags.n {
        Some(n) => check_n("--N", n as i64, &mut diags),
        None => check_n("grid.N", grid.n.unwrap_or(128), &mut diags),
    };
    let probes = match grid.probe.as_deref().unwrap_or("both") {
        "omega-gaussian" => ProbeFamily::OmegaGaussian,
        "x-gaussian" => ProbeFamily::XGaussian,
        "both" => ProbeFamily::Both,
        other => {
            diags.push(Diagnostic::new(
                "grid.probe",
                format!("unknown probe family `{other}`; expected omega-gaussian, x-gaussian or both"),
            ));
            ProbeFamily::Both
        }
    };

    let times = match &flags.times {
        Some(list) => parse_list("--t", list, |s| s.trim().parse::<f64>().ok(), &mut diags),
        None => raw.times.unwrap_or_else(|| vec![0.1, 0.4, 1.0]),
    };
    let times_field = if flags.times.is_some() { "--t" } else { "times" };
    if times.is_empty() {
        diags.push(Diagnostic::new(times_field, "at least one modular time is required"));
    }
    for t in &times {
        if !t.is_finite() {
            diags.push(Diagnostic::new(times_field, format!("{t} is not finite")));
        }
    }

    let out = raw.output.unwrap_or_default();
    let directory = flags.out.clone().or(out.directory).unwrap_or_else(|| PathBuf::from("modcyl-out"));
    let mut formats = match (&flags.formats, out.formats) {
        (Some(list), _) => parse_list("--format", list, Format::parse, &mut diags),
        (None, Some(list)) => {
            let mut v = Vec::new();
            for s in list {
                match Format::parse(&s) {
                    Some(f) => v.push(f),
                    None => diags.push(Diagnostic::new("output.formats", format!("unknown format `{s}`; expected csv, json or svg"))),
                }
            }
            v
        }
        (None, None) => vec![Format::Csv, Format::Json, Format::Svg],
    };
    formats.sort();
    formats.dedup();
    if formats.is_empty() {
        diags.push(Diagnostic::new("output.formats", "at least one of csv, json, svg is required"));
    }

    match (diags.is_empty(), geometry, state_spec, state, n) {
        (true, Some(geometry), Some(state_spec), Some(state), Some(n)) => Ok(RunConfig {
            geometry,
            state_spec,
            state,
            n,
            probes,
            seed: grid.seed.unwrap_or(7),
            times,
            directory,
            formats,
        }),
        _ => Err(diags),
    }
}

/// Read the file at `path`, if any, then [`load`].
pub fn load_file(path: Option<&Path>, flags: &Overrides) -> std::result::Result<RunConfig, LoadError> {
    let text = match path {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| LoadError::Io(p.to_path_buf(), e))?),
        None => None,
    };
    load(text.as_deref(), flags).map_err(LoadError::Invalid)
}

#[derive(Debug)]
pub enum LoadError {
    Io(PathBuf, std::io::Error),
    Invalid(Vec<Diagnostic>),
}

fn state_spec(s: RawState, diags: &mut Vec<Diagnostic>) -> Option<StateSpec> {
    let explicit = s.bc.is_some() || s.h1.is_some() || s.h2.is_some() || s.psi.is_some() || s.phi.is_some();
    match (s.preset, explicit) {
        (Some(_), true) => {
            diags.push(Diagnostic::new("state", "give either `preset` or `bc`/`h1`/`h2`/`psi`/`phi`, not both"));
            None
        }
        (Some(p), false) => StateSpec::parse_preset(&p).map_err(|m| diags.push(Diagnostic::new("state.preset", m))).ok(),
        (None, false) => Some(StateSpec::NsVacuum),
        (None, true) => match s.bc.as_deref().map(str::to_ascii_lowercase).as_deref() {
            Some("ns") => {
                for (name, v) in [("h1", s.h1), ("h2", s.h2), ("psi", s.psi), ("phi", s.phi)] {
                    if v.is_some() {
                        diags.push(Diagnostic::new(format!("state.{name}"), "not allowed with bc = \"ns\""));
                    }
                }
                Some(StateSpec::Explicit { ns: true, h1: 0.0, h2: 0.0, psi: 0.0, phi: 0.0 })
            }
            Some("r") => {
                let mut need = |name: &str, v: Option<f64>| {
                    v.or_else(|| {
                        diags.push(Diagnostic::new(format!("state.{name}"), "required with bc = \"r\""));
                        None
                    })
                };
                let (h1, h2) = (need("h1", s.h1), need("h2", s.h2));
                Some(StateSpec::Explicit {
                    ns: false,
                    h1: h1?,
                    h2: h2?,
                    psi: s.psi.unwrap_or(0.0),
                    phi: s.phi.unwrap_or(0.0),
                })
            }
            Some(other) => {
                diags.push(Diagnostic::new("state.bc", format!("unknown boundary condition `{other}`; expected ns or r")));
                None
            }
            None => {
                diags.push(Diagnostic::new("state.bc", "required when h1/h2/psi/phi are given"));
                None
            }
        },
    }
}

fn check_n(field: &str, n: i64, diags: &mut Vec<Diagnostic>) -> Option<usize> {
    if n < MIN_N as i64 || n > MAX_N as i64 || n % 4 != 0 {
        diags.push(Diagnostic::new(field, format!("must be a multiple of 4 in [{MIN_N}, {MAX_N}], got {n}")));
        return None;
    }
    Some(n as usize)
}

fn parse_list<T>(field: &str, list: &str, parse: impl Fn(&str) -> Option<T>, diags: &mut Vec<Diagnostic>) -> Vec<T> {
    let mut out = Vec::new();
    for item in list.split(',').filter(|s| !s.trim().is_empty()) {
        match parse(item) {
            Some(v) => out.push(v),
            None => diags.push(Diagnostic::new(field, format!("cannot parse `{}`", item.trim()))),
        }
    }
    out
}

fn toml_diagnostic(text: &str, e: &toml::de::Error) -> Diagnostic {
    let field = match e.span() {
        Some(span) => format!("config line {}", text[..span.start].matches('\n').count() + 1),
        None => "config".into(),
    };
    Diagnostic::new(field, e.message().to_string())
}
