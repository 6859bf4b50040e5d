//! Runs every verification suite and prints one line per suite.

use asymspec::family::HGrid;
use asymspec::verify::verify_all;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let report = verify_all(seed, &HGrid::default());
    for suite in &report.suites {
        let failing: Vec<&str> = suite
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        let status = if suite.passed() { "pass" } else { "FAIL" };
        println!(
            "{status} {:<48} {} checks {}",
            suite.name,
            suite.checks.len(),
            failing.join(" ")
        );
    }
    println!("all passed: {}", report.all_passed());
}
