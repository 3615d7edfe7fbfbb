use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dmme::bath::BathSpec;
use dmme::driving::DrivingProtocol;
use dmme::lri::{adiabatic_init, solve_lri};
use dmme::ode::OdeOptions;
use dmme::par;
use dmme::quad::QuadOptions;
use dmme::rates::{memory_kernel_rate, KernelOperator};
use dmme::scenario::{self, Axis, ScenarioConfig};

fn kernel_rows(c: &mut Criterion) {
    let p = DrivingProtocol::sine_squared(1.0, 1.0, 1.0, 0.0, 0.5).unwrap();
    let frame = solve_lri(&p, adiabatic_init(&p).unwrap(), &OdeOptions::default()).unwrap();
    let bath = BathSpec::zero_temperature(1.0, 20.0).unwrap();
    let quad = QuadOptions::new(1e-12, 1e-10);
    let ts: Vec<f64> = (1..=64).map(|k| 0.5 * k as f64 / 64.0).collect();
    let row = |t: &f64| {
        memory_kernel_rate(
            &frame,
            &bath,
            KernelOperator::Dephasing,
            *t,
            None,
            (1, 1),
            (1, 1),
            &quad,
        )
        .unwrap()
    };
    let mut g = c.benchmark_group("kernel_rows");
    g.bench_function("par", |b| b.iter(|| black_box(par::map(&ts, row))));
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(par::map_sequential(&ts, row)))
    });
    g.finish();
}

fn scenario_sweep(c: &mut Criterion) {
    let cfg = ScenarioConfig::parse(scenario::bundled("lz-sudden").unwrap()).unwrap();
    let axes = [Axis::parse("protocol.omega0=0.2,0.5,1,2").unwrap()];
    let mut g = c.benchmark_group("lz_sweep");
    g.sample_size(10);
    g.bench_function("par", |b| {
        b.iter(|| black_box(scenario::sweep(&cfg, &axes, None).unwrap()))
    });
    g.bench_function("sequential", |b| {
        b.iter(|| black_box(scenario::sweep(&cfg, &axes, Some(1)).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, kernel_rows, scenario_sweep);
criterion_main!(benches);
