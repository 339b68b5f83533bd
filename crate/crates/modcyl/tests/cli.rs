use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn modcyl(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_modcyl"));
    c.args(args);
    match threads {
        Some(t) => c.env("MODCYL_THREADS", t),
        None => c.env_remove("MODCYL_THREADS"),
    };
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `part -> (rows, rows with a != b and a nonzero value)` for a kernel CSV.
fn part_counts(p: &Path) -> BTreeMap<String, (usize, usize)> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut m: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let e = m.entry(f[4].to_string()).or_default();
        e.0 += 1;
        let nonzero = f[5].parse::<f64>().unwrap() != 0.0 || f[6].parse::<f64>().unwrap() != 0.0;
        if f[0] != f[1] && nonzero {
            e.1 += 1;
        }
    }
    m
}

fn kernel(dir: &Path, preset: &str, extra: &[&str]) -> Output {
    let mut args = vec!["kernel", "--preset", preset, "--N", "16", "--t", "0.1,0.5", "--out", path_str(dir)];
    args.extend_from_slice(extra);
    modcyl(&args, None)
}

#[test]
fn ns_vacuum_flow_and_hamiltonian_have_no_nonlocal_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = kernel(d.path(), "ns-vacuum", &["--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["flow_t0.1.csv", "flow_t0.5.csv", "hamiltonian.csv"] {
        let c = part_counts(&d.path().join(f));
        assert!(!c.contains_key("pv") && !c.contains_key("smooth"), "{f}: {c:?}");
        assert!(!c.contains_key("mirror"), "{f}: {c:?}");
    }
    assert!(part_counts(&d.path().join("hamiltonian.csv")).contains_key("delta_prime"));
}

#[test]
fn zero_temperature_has_nonlocal_parts_without_chirality_mixing() {
    let d = tempfile::tempdir().unwrap();
    let o = kernel(d.path(), "zero-temperature", &["--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["flow_t0.1.csv", "flow_t0.5.csv", "hamiltonian.csv"] {
        let c = part_counts(&d.path().join(f));
        let (rows, mixing) = c["pv"];
        assert!(rows > 0, "{f}");
        assert_eq!(mixing, 0, "{f}: off-diagonal nonlocal entries");
        assert!(!c.contains_key("mirror"), "{f}");
    }
}

#[test]
fn rim_state_writes_mirror_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = kernel(d.path(), "rim(pi/2,pi/2)", &["--format", "csv,svg"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["flow_t0.1.csv", "hamiltonian.csv"] {
        let (rows, nonzero) = part_counts(&d.path().join(f))["mirror"];
        assert!(rows > 0 && nonzero > 0, "{f}");
    }
    let svg = std::fs::read_to_string(d.path().join("hamiltonian.svg")).unwrap();
    assert!(svg.contains(r#"id="layer-mirror""#));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path| -> Vec<String> {
        ["kernel", "--preset", "massive-vacuum", "--N", "16", "--t", "0.3", "--out", path_str(d)]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let aa = args(a.path());
    let bb = args(b.path());
    assert_eq!(code(&modcyl(&aa.iter().map(String::as_str).collect::<Vec<_>>(), Some("1"))), 0);
    assert_eq!(code(&modcyl(&bb.iter().map(String::as_str).collect::<Vec<_>>(), Some("4"))), 0);
    let mut names: Vec<PathBuf> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert_eq!(names.len(), 3 * 6);
    for p in names {
        let q = b.path().join(p.file_name().unwrap());
        assert!(std::fs::read(&p).unwrap() == std::fs::read(&q).unwrap(), "{} differs", p.display());
    }
}

#[test]
fn json_mirrors_csv_with_a_schema_version() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&kernel(d.path(), "tip-plus", &["--format", "csv,json"])), 0);
    let csv = std::fs::read_to_string(d.path().join("hamiltonian.csv")).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("hamiltonian.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["kind"], "kernel");
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), csv.lines().count() - 1);
    let first: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(rows[0]["part"], first[4]);
    assert_eq!(rows[0]["re"].as_f64().unwrap(), first[5].parse::<f64>().unwrap());
}

#[test]
fn broken_geometry_is_rejected_before_any_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    std::fs::write(&cfg, "[geometry]\nL = 4.0\nell = 2.0\n").unwrap();
    let out = d.path().join("out");
    let o = modcyl(&["kernel", "--config", path_str(&cfg), "--out", path_str(&out)], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("geometry.ell"), "{}", stderr(&o));
    assert!(!out.exists());
    let o = modcyl(&["verify", "--config", path_str(&cfg), "--out", path_str(&out)], None);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_bad_values_exit_with_invalid_input() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.toml");
    std::fs::write(&cfg, "[grid]\nN = 64\nsmoothing = 2\n").unwrap();
    let o = modcyl(&["kernel", "--config", path_str(&cfg)], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("smoothing"));
    assert_eq!(code(&modcyl(&["kernel", "--preset", "thermal"], None)), 2);
    assert_eq!(code(&modcyl(&["kernel", "--t", "a,b"], None)), 2);
    assert_eq!(code(&modcyl(&["kernel", "--N", "16"], Some("lots"))), 2);
    assert_eq!(code(&modcyl(&["verify", "--N", "128"], None)), 2);
    assert_eq!(code(&modcyl(&["frobnicate"], None)), 2);
}

#[test]
fn io_failures_exit_with_three() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = kernel(&file.join("sub"), "ns-vacuum", &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let missing = d.path().join("missing.toml");
    assert_eq!(code(&modcyl(&["kernel", "--config", path_str(&missing)], None)), 3);
    assert_eq!(code(&modcyl(&["plot", path_str(&missing)], None)), 3);
}

#[test]
fn plot_renders_kernel_csv_and_omits_empty_layers() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&kernel(d.path(), "zero-temperature", &["--format", "csv"])), 0);
    let out = d.path().join("plots");
    let o = modcyl(&["plot", path_str(&d.path().join("g.csv")), "--out", path_str(&out)], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = std::fs::read_to_string(out.join("g.svg")).unwrap();
    for layer in ["smooth", "pv", "delta"] {
        assert!(svg.contains(&format!(r#"id="layer-{layer}""#)), "{layer}");
    }
    assert!(!svg.contains("layer-mirror"));
}

#[test]
fn plot_annotates_the_fitted_slope_of_a_verify_report() {
    let d = tempfile::tempdir().unwrap();
    let report = d.path().join("verify.json");
    std::fs::write(
        &report,
        r#"{"schema_version": 1, "kind": "verify", "state": "ns-vacuum", "passed": false,
            "criteria": [{"id": 4, "title": "t", "passed": false, "checks": [],
              "convergence": [{"label": "ns H", "n": [128, 256, 512], "error": [0.4, 0.1, 0.025], "order": 2.0}]}]}"#,
    )
    .unwrap();
    let o = modcyl(&["plot", path_str(&report)], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = std::fs::read_to_string(d.path().join("verify.svg")).unwrap();
    assert!(svg.contains("ns H (slope -2.00)"), "{svg}");
}

#[test]
fn plot_rejects_schema_mismatches() {
    let d = tempfile::tempdir().unwrap();
    let cases = [
        ("a.csv", "s,density\n0,1\n"),
        ("b.json", r#"{"schema_version": 2, "kind": "kernel"}"#),
        ("c.json", r#"{"schema_version": 1, "kind": "histogram"}"#),
        ("d.json", r#"{"kind": "verify"}"#),
    ];
    for (name, body) in cases {
        let p = d.path().join(name);
        std::fs::write(&p, body).unwrap();
        let o = modcyl(&["plot", path_str(&p)], None);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
    }
    assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), cases.len());
}

#[test]
fn spectrum_histogram_carries_the_full_measure() {
    let d = tempfile::tempdir().unwrap();
    let o = modcyl(&["spectrum", "--N", "256", "--out", path_str(d.path())], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(s["kind"], "spectrum");
    let (md, ma) = (s["mass_discrete"][0].as_f64().unwrap(), s["mass_analytic"][0].as_f64().unwrap());
    assert!((md - ma).abs() <= 1e-5, "{md} {ma}");
    assert_eq!(s["bins"].as_array().unwrap().len(), 32);
    assert!(std::fs::read_to_string(d.path().join("spectrum.svg")).unwrap().contains(r#"id="analytic""#));
}

#[test]
fn verify_exit_status_matches_the_report() {
    let d = tempfile::tempdir().unwrap();
    let o = modcyl(&["verify", "--preset", "ns-vacuum", "--N", "256", "--out", path_str(d.path())], None);
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("verify.json")).unwrap()).unwrap();
    let criteria = r["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 11);
    let all = criteria.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(r["passed"].as_bool().unwrap(), all);
    assert_eq!(code(&o), if all { 0 } else { 1 });
    assert_eq!(r["config"]["grids"], serde_json::json!([128, 256]));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 11);
}
