//! Acceptance report: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::Instant;

use frd_bandwidth::simlab::{run_replications, summarize, McConfig, RepOutcome};
use frd_bandwidth::{
    afo_bandwidths, fit_boundary, minimize_mmse, mean_outcome, run_monte_carlo,
    treatment_prob, AmseCoefficients, Arm, Bounds, Design, DgpSpec, Execution, KernelSpec, McSummary,
    Method, Response, Result as FrdResult, Sample, Side,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u8, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "criterion {id} {:<4} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn kernel_constants() -> (bool, String) {
    let m = KernelSpec::Triangular.moments();
    // one-sided moments of (1 − u) on [0, 1], integrated by hand
    let mu = [1.0 / 2.0, 1.0 / 6.0, 1.0 / 12.0, 1.0 / 20.0, 1.0 / 30.0];
    let nu = [1.0 / 3.0, 1.0 / 12.0, 1.0 / 30.0];
    let mut worst = 0.0f64;
    for (a, b) in m.mu.iter().zip(mu).chain(m.nu.iter().zip(nu)) {
        worst = worst.max((a - b).abs());
    }
    for (a, b) in [(m.c1, -0.05), (m.v, 4.8), (m.xi1, -0.1), (m.xi2, -0.08)] {
        worst = worst.max((a - b).abs());
    }
    (worst <= 1e-10, format!("max abs deviation {worst:.2e}"))
}

fn llr_exactness() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let kernels = KernelSpec::ALL;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(40..120);
        let c: f64 = rng.random_range(-0.5..0.5);
        let x: Vec<f64> = (0..n).map(|_| c + rng.random_range(-1.0..1.0)).collect();
        let order = rng.random_range(1..=4usize);
        let degree = rng.random_range(0..=order);
        let coefs: Vec<f64> = (0..=order)
            .map(|j| if j <= degree { rng.random_range(-5.0..5.0) } else { 0.0 })
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|&v| coefs.iter().rev().fold(0.0, |acc, b| acc * (v - c) + b))
            .collect();
        let d: Vec<f64> = x.iter().map(|&v| (v >= c) as u8 as f64).collect();
        let Ok(sample) = Sample::new(x, y, d, c) else { continue };
        let side = if rng.random_bool(0.5) { Side::Plus } else { Side::Minus };
        let h = rng.random_range(0.8..2.5);
        let kernel = kernels[rng.random_range(0..kernels.len())];
        // designs without enough distinct points in the window are redrawn
        let Ok(fit) = fit_boundary(&sample, Response::Y, side, h, order, kernel) else { continue };
        for (a, b) in fit.coefficients.iter().zip(&coefs) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
        done += 1;
    }
    (worst <= 1e-8, format!("200 datasets, max scaled coefficient error {worst:.2e}"))
}

fn coefficients(rng: &mut ChaCha8Rng, same_sign: bool) -> AmseCoefficients {
    let mag = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-1.0..1.0));
    let sign = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let s = sign(rng);
    let phi_plus = s * mag(rng);
    let phi_minus = if same_sign { s } else { -s } * mag(rng);
    let (psi_plus, psi_minus) = if same_sign {
        (sign(rng) * mag(rng), sign(rng) * mag(rng))
    } else {
        (0.0, 0.0)
    };
    AmseCoefficients {
        phi_plus,
        phi_minus,
        psi_plus,
        psi_minus,
        omega_plus: 10f64.powf(rng.random_range(-2.0..0.0)),
        omega_minus: 10f64.powf(rng.random_range(-2.0..0.0)),
        v: 4.8,
        f: rng.random_range(0.2..2.0),
        tau_d: 1.0,
        n: rng.random_range(100..100_000),
    }
}

/// Minimizer of the second-order AMSE along `h− = λ** h+`: a fine log grid
/// then golden-section refinement.
fn constrained_oracle(c: &AmseCoefficients) -> (f64, f64) {
    let lambda = (c.phi_plus / c.phi_minus).sqrt();
    let amse = |h: f64| {
        let b = c.psi_plus * h.powi(3) - c.psi_minus * (lambda * h).powi(3);
        b * b + c.variance_scale() * (c.omega_plus / h + c.omega_minus / (lambda * h))
    };
    let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
    let m = 20_000;
    let node = |i: usize| (lo + (hi - lo) * i as f64 / m as f64).exp();
    let best = (0..=m).min_by(|&a, &b| amse(node(a)).total_cmp(&amse(node(b)))).unwrap();
    let (mut a, mut b) = (node(best.saturating_sub(1)), node((best + 1).min(m)));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if amse(x1) < amse(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let h = 0.5 * (a + b);
    (h, lambda * h)
}

fn afo_oracles() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_opp = 0.0f64;
    for _ in 0..100 {
        let c = coefficients(&mut rng, false);
        let afo = afo_bandwidths(&c).expect("closed form");
        let lo = afo.h_plus.min(afo.h_minus) / 100.0;
        let hi = afo.h_plus.max(afo.h_minus) * 100.0;
        let r = minimize_mmse(&c, Bounds::uniform(lo, hi), Execution::Parallel).expect("minimizer");
        worst_opp = worst_opp.max(rel(r.h_plus, afo.h_plus)).max(rel(r.h_minus, afo.h_minus));
    }
    let mut worst_same = 0.0f64;
    let mut used = 0;
    while used < 100 {
        let c = coefficients(&mut rng, true);
        let Ok(afo) = afo_bandwidths(&c) else { continue };
        let (hp, hm) = constrained_oracle(&c);
        worst_same = worst_same.max(rel(hp, afo.h_plus)).max(rel(hm, afo.h_minus));
        used += 1;
    }
    (
        worst_opp <= 0.01 && worst_same <= 0.01,
        format!("opposite-sign max rel gap {worst_opp:.2e}, same-sign max rel gap {worst_same:.2e}"),
    )
}

fn rates() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for (same, factor) in [(false, 32usize), (true, 128)] {
        for _ in 0..50 {
            let c = coefficients(&mut rng, same);
            let Ok(a) = afo_bandwidths(&c) else { continue };
            let b = afo_bandwidths(&AmseCoefficients { n: c.n * factor, ..c }).unwrap();
            worst = worst.max(rel(b.h_plus / a.h_plus, 0.5)).max(rel(b.h_minus / a.h_minus, 0.5));
        }
    }
    (worst <= 1e-12, format!("n x32 and n x128 halve the AFO pair, max rel error {worst:.2e}"))
}

/// `Φ(z) − Φ(−z)` from the Maclaurin series of erf.
fn central_mass(z: f64) -> f64 {
    let t = z / 2f64.sqrt();
    let (mut term, mut sum) = (t, t);
    for k in 1..60 {
        term *= -t * t / k as f64;
        sum += term / (2 * k + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

fn dgp_fidelity() -> (bool, String) {
    let jump = treatment_prob(0.0) - treatment_prob(-1e-300);
    let oracle = central_mass(1.28);
    let gaps = [(Design::Design1, -4.30), (Design::Design2, 0.075)].map(|(d, want)| {
        let gap = mean_outcome(d, Arm::Treated, 0.0) - mean_outcome(d, Arm::Control, 0.0);
        (gap - want).abs()
    });
    // 0.7995 is the four-decimal rounding of the exact jump; the 1e-9
    // tolerance is applied to the exact value. Intercept gaps are exact up to
    // the binary rounding of decimal intercepts.
    let pass = (jump - oracle).abs() <= 1e-9
        && (jump * 1e4).round() == 7995.0
        && gaps.iter().all(|g| *g <= 1e-15);
    (
        pass,
        format!(
            "treatment jump {jump:.10} vs series oracle {oracle:.10}, intercept gap errors {:.1e} / {:.1e}",
            gaps[0], gaps[1]
        ),
    )
}

struct Runs {
    d1_f: Vec<FrdResult<RepOutcome>>,
    d1_s: Vec<FrdResult<RepOutcome>>,
    d2_f: McSummary,
    d2_s: McSummary,
}

const REPS: usize = 1000;
const SEED: u64 = 42;

fn table_runs() -> Runs {
    let d1 = DgpSpec::new(Design::Design1, 500, SEED);
    let d2 = DgpSpec::new(Design::Design2, 500, SEED);
    let k = KernelSpec::Triangular;
    Runs {
        d1_f: run_replications(&d1, Method::MmseF, REPS, k, Execution::Parallel),
        d1_s: run_replications(&d1, Method::MmseS, REPS, k, Execution::Parallel),
        d2_f: run_monte_carlo(&d2, Method::MmseF, REPS, k).unwrap(),
        d2_s: run_monte_carlo(&d2, Method::MmseS, REPS, k).unwrap(),
    }
}

fn table_reproduction(runs: &Runs) -> (bool, String) {
    let cfg = McConfig::new(REPS, KernelSpec::Triangular);
    let d1 = DgpSpec::new(Design::Design1, 500, SEED);
    let d1_f = summarize(&d1, Method::MmseF, &runs.d1_f, &cfg).unwrap();
    let d1_s = summarize(&d1, Method::MmseS, &runs.d1_s, &cfg).unwrap();
    let (f, s) = (&runs.d2_f, &runs.d2_s);
    let d2_ok = (0.057..=0.090).contains(&f.rmse_trimmed)
        && f.bias_trimmed.abs() <= 0.02
        && (f.h_plus_mean - 0.226).abs() <= 0.06
        && (f.h_minus_mean - 0.624).abs() <= 0.16;
    let d2_close = (f.rmse_trimmed - s.rmse_trimmed).abs() <= 0.10 * f.rmse_trimmed.max(s.rmse_trimmed);
    let ratio = d1_f.rmse_trimmed / d1_s.rmse_trimmed;
    let d1_ok = d1_f.rmse_trimmed < d1_s.rmse_trimmed && ratio <= 0.7;
    let failed = [&d1_f, &d1_s, f, s].iter().map(|m| m.reps_failed).sum::<usize>();
    (
        d2_ok && d2_close && d1_ok,
        format!(
            "D2 f rmse {:.4} bias {:+.4} h+ {:.3} h- {:.3}; D2 s rmse {:.4}; D1 f/s rmse {:.4}/{:.4} = {ratio:.3}; failed reps {failed}",
            f.rmse_trimmed, f.bias_trimmed, f.h_plus_mean, f.h_minus_mean, s.rmse_trimmed,
            d1_f.rmse_trimmed, d1_s.rmse_trimmed
        ),
    )
}

fn abs_errors(outcomes: &[FrdResult<RepOutcome>]) -> Vec<f64> {
    let mut v: Vec<f64> = outcomes.iter().flatten().map(|o| o.error.abs()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn cdf_dominance(runs: &Runs) -> (bool, String) {
    let d1 = DgpSpec::new(Design::Design1, 500, SEED);
    // both curves are emitted on one shared threshold grid
    let cfg = McConfig::new(REPS, KernelSpec::Triangular);
    let own = |m, o| summarize(&d1, m, o, &cfg).unwrap().cdf.last().unwrap().threshold;
    let upper = own(Method::MmseF, &runs.d1_f).max(own(Method::MmseS, &runs.d1_s));
    let shared = McConfig { cdf_upper: Some(upper), ..cfg };
    let f = summarize(&d1, Method::MmseF, &runs.d1_f, &shared).unwrap().cdf;
    let s = summarize(&d1, Method::MmseS, &runs.d1_s, &shared).unwrap().cdf;
    let errs = abs_errors(&runs.d1_f);
    let p10 = errs[(errs.len() as f64 * 0.1).ceil() as usize - 1];
    let mut checked = 0;
    let mut violations = Vec::new();
    for (a, b) in f.iter().zip(&s) {
        if a.threshold < p10 {
            continue;
        }
        checked += 1;
        if a.fraction < b.fraction {
            violations.push(a.threshold);
        }
    }
    (
        violations.is_empty(),
        format!(
            "{checked} thresholds from {p10:.4}, {} violations{}",
            violations.len(),
            violations.first().map(|t| format!(" (first at {t:.4})")).unwrap_or_default()
        ),
    )
}

fn full_mode() -> (bool, String) {
    let spec = DgpSpec::new(Design::Design2, 500, SEED);
    match run_monte_carlo(&spec, Method::MmseF, 10_000, KernelSpec::Triangular) {
        Ok(s) => (
            s.reps_total == 10_000,
            format!(
                "10000 reps completed, {} failed, rmse {:.4} (not gated)",
                s.reps_failed, s.rmse_trimmed
            ),
        ),
        Err(e) => (false, format!("run failed: {e}")),
    }
}

fn main() {
    let mut report = Report { failures: 0 };
    let t = Instant::now();
    let (p, d) = kernel_constants();
    report.line(1, "kernel constants", p, d, t);
    let t = Instant::now();
    let (p, d) = llr_exactness();
    report.line(2, "local polynomial exactness", p, d, t);
    let t = Instant::now();
    let (p, d) = afo_oracles();
    report.line(3, "AFO and MMSE oracle agreement", p, d, t);
    let t = Instant::now();
    let (p, d) = rates();
    report.line(4, "rate scaling", p, d, t);
    let t = Instant::now();
    let (p, d) = dgp_fidelity();
    report.line(5, "DGP fidelity", p, d, t);
    let t = Instant::now();
    let runs = table_runs();
    let (p, d) = table_reproduction(&runs);
    report.line(6, "Monte Carlo table at 1000 reps", p, d, t);
    let t = Instant::now();
    let (p, d) = cdf_dominance(&runs);
    report.line(7, "error CDF dominance on design 1", p, d, t);
    let t = Instant::now();
    let (p, d) = full_mode();
    report.line(8, "full 10000-rep mode", p, d, t);
    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
