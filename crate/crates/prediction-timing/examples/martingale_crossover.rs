// The quantity the expert watches is S_t^2/t. One step of waiting moves
// it by (1 - c^2/t)/t in expectation: below |c| = sqrt(t) it drifts up,
// above it drifts down. This is why thresholds sit just past sqrt(t).

use prediction_timing::sim::{conditional_ratio_mean, ratio_drift};

fn main() {
    let t = 16;
    let tf = t as f64;
    println!("one-step drift of S^2/t at t = {t} (exact vs sampled):");
    println!();
    println!(
        "{:>8} {:>10} {:>12} {:>12} {:>10}",
        "c", "c^2/t", "exact", "sampled", "stderr"
    );
    for mult in [0.0, 0.5, 0.75, 1.0, 1.25, 2.0] {
        let c = mult * tf.sqrt();
        let exact = ratio_drift(t, c).unwrap();
        let est = conditional_ratio_mean(t, c, 400_000, 42).unwrap();
        println!(
            "{:>8.3} {:>10.3} {:>12.6} {:>12.6} {:>10.6}",
            c,
            c * c / tf,
            exact,
            est.mean,
            est.stderr
        );
    }

    println!();
    println!("crossover at |c| = sqrt(t) = {}", tf.sqrt());
    println!("(at t = 16, c = 4 the drift is exactly zero in f64)");
    assert_eq!(ratio_drift(16, 4.0).unwrap(), 0.0);
}
