//! Sequential vs parallel execution of the embarrassingly parallel drivers.

use bindsym::analysis::{poincare_section, IcGrid, PoincareConfig};
use bindsym::experiments::{error_table, ProductRun, ScanVariable};
use bindsym::models::ProductHamiltonian;
use bindsym::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn omega_table(c: &mut Criterion) {
    let base = ProductRun::new(-3.0, 1e-3, 20.0, 4, 5.0);
    let omegas = [20.0, 40.0, 80.0, 160.0];
    let mut group = c.benchmark_group("error_table");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| error_table(&base, ScanVariable::Omega, &omegas, exec).unwrap())
        });
    }
    group.finish();
}

fn small_section(c: &mut Criterion) {
    let mut cfg = PoincareConfig::product_shell(0.8);
    cfg.grid = IcGrid { nq: 3, np: 3, ..cfg.grid };
    cfg.crossings = 50;
    let mut group = c.benchmark_group("poincare_section");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| poincare_section(&ProductHamiltonian, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, omega_table, small_section);
criterion_main!(benches);
