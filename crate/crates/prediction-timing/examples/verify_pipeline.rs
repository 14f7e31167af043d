// Run the full cross-validation pipeline in process: solve a table, then
// fire every internal consistency check against it.

use prediction_timing::runner::verify::run_all;
use prediction_timing::solver::{solve, SolverConfig};

fn main() {
    let horizon = 50;
    let mut cfg = SolverConfig::with_grid(horizon, 0.1, 0.02).unwrap();
    cfg.store_full_grid = true;
    let table = solve(&cfg).unwrap();

    let report = run_all(&table, 0.5, 20_000, 42).unwrap();
    for check in &report.checks {
        let mark = if check.pass { "ok " } else { "FAIL" };
        println!("{mark} {:<18} {}", check.name, check.detail);
    }
    let failures = report.failures();
    println!();
    if failures == 0 {
        println!("all {} checks passed", report.checks.len());
    } else {
        println!("{failures} checks FAILED");
        std::process::exit(4);
    }
}
