use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use frd_bandwidth::simlab::{run_monte_carlo_with, Design, DgpSpec, McConfig, Method};
use frd_bandwidth::{minimize_mmse, AmseCoefficients, Bounds, Execution, KernelSpec};

fn coefficients() -> AmseCoefficients {
    AmseCoefficients {
        phi_plus: 4.256,
        phi_minus: 1.314,
        psi_plus: 13.79,
        psi_minus: 2.563,
        omega_plus: 0.0168,
        omega_minus: 0.0168,
        v: 4.8,
        f: 0.625,
        tau_d: 0.8,
        n: 500,
    }
}

fn grid_search(c: &mut Criterion) {
    let coeffs = coefficients();
    let bounds = Bounds {
        plus: (0.005, 0.8),
        minus: (0.005, 1.0),
    };
    let mut group = c.benchmark_group("minimize_mmse");
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &e| {
            b.iter(|| minimize_mmse(&coeffs, bounds, e).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let spec = DgpSpec::new(Design::Design2, 500, 42);
    let mut group = c.benchmark_group("monte_carlo_64_reps");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let mut cfg = McConfig::new(64, KernelSpec::Triangular);
        cfg.execution = exec;
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| run_monte_carlo_with(&spec, Method::MmseF, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid_search, monte_carlo);
criterion_main!(benches);
