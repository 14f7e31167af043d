// Solve the optimal stopping policy for a 100-round horizon and print
// the threshold table. The expert predicts as soon as |S_t| >= theta(t).

use prediction_timing::solver::{solve, SolverConfig};

fn main() {
    let cfg = SolverConfig::with_grid(100, 0.1, 0.01).unwrap();
    let table = solve(&cfg).unwrap();

    println!("horizon T = {}", table.horizon());
    println!("grid step  = {}", cfg.gamma);
    println!();
    println!("{:>5} {:>12} {:>12} {:>12}", "t", "theta", "theta^2/t", "psi_t(0)");
    for t in [1usize, 2, 3, 5, 10, 20, 50, 100] {
        let theta = table.theta(t).unwrap();
        println!(
            "{:>5} {:>12.6} {:>12.6} {:>12.6}",
            t,
            theta,
            theta * theta / t as f64,
            table.psi0(t).unwrap()
        );
    }

    let psi = table.capital_psi(100).unwrap();
    println!();
    println!("expected reward under the policy: Psi(100) = {psi:.6}");
    println!("predicting immediately instead would earn exactly 1");

    // a certified run picks the grid from the accuracy target; only small
    // horizons fit in the work budget
    let certified = SolverConfig::from_accuracy(10, 0.05).unwrap();
    let small = solve(&certified).unwrap();
    println!();
    println!(
        "certified T=10 run: Psi(10) = {:.6} +- {:.3} (gamma = {:.2e})",
        small.capital_psi(10).unwrap(),
        small.certified_error_at(10).unwrap(),
        certified.gamma
    );
}
