//! Prints a comparison of the fuzzy and sharp MMSE rules on both simulation designs.
//!
//! cargo run --release -p frd-bandwidth --example compare_methods -- [reps] [n] [seed]

use frd_bandwidth::simlab::{run_monte_carlo, Design, DgpSpec, Method};
use frd_bandwidth::KernelSpec;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reps = args.first().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(42);

    println!(
        "{:<7} {:<7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>7} {:>6} {:>5} {:>5}",
        "design", "method", "h+", "sd", "h-", "sd", "bias", "rmse", "eff", "fail", "edge"
    );
    for design in [Design::Design1, Design::Design2] {
        let spec = DgpSpec::new(design, n, seed);
        let mut base = None;
        for method in [Method::MmseF, Method::MmseS] {
            let s = run_monte_carlo(&spec, method, reps, KernelSpec::Triangular)
                .expect("monte carlo run");
            let base_rmse = *base.get_or_insert(s.rmse_trimmed);
            println!(
                "{:<7} {:<7} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>8.3} {:>7.3} {:>6.3} {:>5} {:>5}",
                design.number(),
                method.label(),
                s.h_plus_mean,
                s.h_plus_sd,
                s.h_minus_mean,
                s.h_minus_sd,
                s.bias_trimmed,
                s.rmse_trimmed,
                base_rmse / s.rmse_trimmed,
                s.reps_failed,
                s.boundary_clamped
            );
        }
    }
}
