//! Acceptance suite on the reference desk configuration. Prints one line per
//! criterion and exits nonzero if any criterion fails.

use modcyl::suite::{run_all, SuiteConfig};
use std::time::Instant;

fn main() {
    let cfg = SuiteConfig::reference();
    let start = Instant::now();
    println!("acceptance: L = {}, ell = {}, N = {:?}", cfg.geometry.circumference(), cfg.geometry.half_width(), cfg.grids);
    let report = run_all(&cfg, |c| {
        println!("{}", c.summary_line());
        for check in c.checks.iter().filter(|k| !k.passed) {
            let note = check.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default();
            println!("        {}: {:.3e} {} {:.1e}{note}", check.label, check.value, check.relation, check.threshold);
        }
    });
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        report.criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
