// Market-scoring scenario: an expert with partial foresight decides when
// to post a prediction against a public martingale estimate. Reward is
// the log-score edge over the market.

use prediction_timing::sim::scenario_monte_carlo;
use prediction_timing::solver::{solve, SolverConfig};

fn main() {
    let horizon = 100;
    let n = 100_000;
    let cfg = SolverConfig::with_grid(horizon, 0.1, 0.01).unwrap();
    let table = solve(&cfg).unwrap();

    println!("T = {horizon}, {n} paths per quality level");
    println!();
    println!(
        "{:>5} {:>12} {:>12} {:>12} {:>10}",
        "q", "realized", "expected", "floor", "stop t"
    );
    for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let rep = scenario_monte_carlo(&table, horizon, q, n, 42).unwrap();
        println!(
            "{:>5.1} {:>12.4} {:>12.4} {:>12.4} {:>10.1}",
            q, rep.mean_realized, rep.mean_expected, rep.quality_floor, rep.mean_stop_time
        );
        // the paired difference should straddle zero
        assert!(rep.mean_diff.abs() < 5.0 * rep.stderr_diff);
    }

    println!();
    println!("q is the share of per-round variance the expert foresees.");
    println!("The floor is what predicting at a dead moment still earns;");
    println!("timing the prediction by the threshold rule adds the rest.");
    println!("Higher q raises both the floor and the timing edge, and the");
    println!("realized column agrees with the expected one on every row.");
}
