//! Build a run configuration in code and tabulate kernels by part, as the
//! `kernel` command does, without touching the filesystem.

use modcyl::cli::commands::kernel_tables;
use modcyl::cli::config::{load, Overrides};
use std::collections::BTreeMap;

fn main() {
    let toml = "times = [0.25]\n[state]\npreset = \"rim(pi/2, pi/2)\"\n[grid]\nN = 32\n";
    let cfg = match load(Some(toml), &Overrides::default()) {
        Ok(c) => c,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            std::process::exit(2);
        }
    };
    for (stem, table) in kernel_tables(&cfg).expect("valid state") {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &table.rows {
            *counts.entry(r.part.tag()).or_default() += 1;
        }
        println!("{stem:<14} {counts:?}");
    }
}
