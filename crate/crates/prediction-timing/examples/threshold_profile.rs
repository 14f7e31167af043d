// Track how the stopping threshold and the value at the origin grow with
// the number of remaining rounds, against the 2 log log t benchmark.

use prediction_timing::solver::{solve, SolverConfig};

fn main() {
    let horizon = 2000;
    let cfg = SolverConfig::with_grid(horizon, 0.1, 0.02).unwrap();
    let table = solve(&cfg).unwrap();

    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "t", "theta^2/t", "psi_t(0)", "2loglog(t)"
    );
    let mut t = 4;
    while t <= horizon {
        let theta = table.theta(t).unwrap();
        let bench = 2.0 * (t as f64).ln().ln();
        println!(
            "{:>6} {:>12.5} {:>12.5} {:>12.5}",
            t,
            theta * theta / t as f64,
            table.psi0(t).unwrap(),
            bench
        );
        t *= 2;
    }
    let theta = table.theta(horizon).unwrap();
    println!(
        "{:>6} {:>12.5} {:>12.5} {:>12.5}",
        horizon,
        theta * theta / horizon as f64,
        table.psi0(horizon).unwrap(),
        2.0 * (horizon as f64).ln().ln()
    );

    println!();
    println!("both columns grow like 2 log log t; the threshold in the");
    println!("original scale is theta(t) = sqrt(t * theta^2/t), so waiting");
    println!("pays only for excursions a bit beyond the typical sqrt(t).");
}
