//! Run a few acceptance criteria programmatically and print their checks.

use modcyl::suite::{flat_space_limit, generator, identity_self_tests, SuiteConfig};

fn main() {
    let cfg = SuiteConfig::reference();
    for c in [identity_self_tests(&cfg), generator(&cfg), flat_space_limit(&cfg)] {
        println!("{}", c.summary_line());
        for k in &c.checks {
            println!("    {:<48} {:.3e} {} {:.1e}", k.label, k.value, k.relation, k.threshold);
        }
    }
}
