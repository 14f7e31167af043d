// Evaluate the analytic growth envelopes for the optimal reward at
// horizons far beyond anything the solver can grind out directly.

use prediction_timing::bounds::{bound_report, corollary_envelope, theta_envelope};

fn main() {
    println!(
        "{:>8} {:>10} {:>12} {:>12}  note",
        "T", "2loglogT", "best upper", "best lower"
    );
    for exp in [2i32, 3, 6, 9, 15, 24] {
        let horizon = 10f64.powi(exp);
        let rep = bound_report(horizon);
        let upper = rep
            .best_upper
            .map(|(_, v)| format!("{v:>12.4}"))
            .unwrap_or_else(|| format!("{:>12}", "-"));
        let (lower, note) = match rep.best_lower {
            Some((eps, v)) if rep.lower_vacuous => {
                (format!("{v:>12.4}"), format!("lower vacuous (eps {eps:.2})"))
            }
            Some((eps, v)) => (format!("{v:>12.4}"), format!("lower from eps {eps:.2}")),
            None => (format!("{:>12}", "-"), "T too small".to_string()),
        };
        println!(
            "{:>8} {:>10.4} {upper} {lower}  {note}",
            format!("1e{exp}"),
            rep.two_loglog
        );
    }

    // the eps-free bracket kicks in once loglog T >= 4, around T = 1e24
    let (lo, hi) = corollary_envelope(1e24).unwrap();
    println!();
    println!("eps-free bracket at T = 1e24: Psi in [{lo:.2}, {hi:.2}]");
    println!("(the lower end only turns positive at truly astronomical T)");

    println!();
    println!("threshold envelope used when no solved table is available:");
    for exp in [3i32, 6, 40] {
        let t = 10f64.powi(exp);
        let env = theta_envelope(t).unwrap();
        println!("  T = 1e{exp:<3} theta(T) <~ {:.4e}", env.value());
    }
}
