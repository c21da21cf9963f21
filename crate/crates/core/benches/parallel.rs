use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fourier_tomo::circuits::{build_protocol1_circuit, circuit_unitary_with};
use fourier_tomo::reconstruct::ReconstructOptions;
use fourier_tomo::sampling::{Protocol, Shots};
use fourier_tomo::sweep::{run_sweep, SweepConfig};
use fourier_tomo::Exec;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for n in [3usize, 6] {
        let config = SweepConfig {
            protocols: vec![Protocol::One, Protocol::Two],
            n_qubits: vec![n],
            lambdas: vec![0.0, 0.01],
            shots: vec![Shots::Finite(10_000)],
            trials: 64,
            seed: 1,
            options: ReconstructOptions::default(),
        };
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &config, |b, cfg| {
                b.iter(|| run_sweep(black_box(cfg), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn unitary(c: &mut Criterion) {
    let mut group = c.benchmark_group("circuit_unitary");
    group.sample_size(10);
    for n in [5usize, 8] {
        let circuit = build_protocol1_circuit(n).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &circuit, |b, c| {
                b.iter(|| circuit_unitary_with(black_box(c), exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweep, unitary);
criterion_main!(benches);
