use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use semispec::actions::Landscape;
use semispec::oracle::{richardson, Grid, Operator};
use semispec::par::Exec;
use semispec::potential::PotentialModel;
use semispec::semiclassics::{phase_space_measure, predict_spectrum};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn eigenvalues(c: &mut Criterion) {
    let m = PotentialModel::builtin("double_well", None).unwrap();
    let mut group = c.benchmark_group("eigenvalues_in");
    for hbar in [0.05, 0.02] {
        let op = Operator::assemble(&m, Grid::auto((-2.2, 2.2), hbar), hbar).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, hbar), &op, |b, op| {
                b.iter(|| op.eigenvalues_in(black_box((0.0, 1.0)), exec));
            });
        }
    }
    group.finish();
}

fn refined(c: &mut Criterion) {
    let m = PotentialModel::builtin("double_well", None).unwrap();
    let hbar = 0.04;
    let grid = Grid::auto((-2.2, 2.2), hbar);
    let mut group = c.benchmark_group("richardson");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| richardson(&m, grid, hbar, (0.0, 1.0), exec).unwrap()));
    }
    group.finish();
}

fn prediction(c: &mut Criterion) {
    let landscape = Landscape::new(PotentialModel::parse("(x^2 - 1)^2 + 0.1*x").unwrap(), (-2.2, 2.2));
    let mut group = c.benchmark_group("predict_spectrum");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| predict_spectrum(&landscape, 0.02, (0.2, 0.8), 5.0, exec).unwrap()));
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let m = PotentialModel::builtin("double_well", None).unwrap();
    let mut group = c.benchmark_group("phase_space_measure");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| phase_space_measure(&m, (-2.2, 2.2), (0.2, 0.8), 1 << 18, 7, exec)));
    }
    group.finish();
}

criterion_group!(benches, eigenvalues, refined, prediction, monte_carlo);
criterion_main!(benches);
