use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use kawa_core::kmc::{Instrumentation, Simulator};
use kawa_core::landscape::{analyze, LevelOrder, LocalGraph, PlusMode};
use kawa_core::potential::{capacity, SolverOptions};
use kawa_core::srw::BoxGreen;
use kawa_core::{Configuration, Geometry, ModelParams, StateSpace};

fn state_space(c: &mut Criterion) {
    let g = Geometry::new(3, 3).unwrap();
    c.bench_function("state space 3x3", |b| {
        b.iter(|| StateSpace::new(g.clone(), ModelParams::preset()).unwrap())
    });
    let space = StateSpace::new(g, ModelParams::preset()).unwrap();
    c.bench_function("minimax sweep 3x3", |b| {
        b.iter(|| {
            let order = LevelOrder::new(&space);
            analyze(&space, &order, space.empty(), space.plus(PlusMode::Interior)).ok()
        })
    });
}

fn capacity_solve(c: &mut Criterion) {
    let space = StateSpace::new(Geometry::new(3, 3).unwrap(), ModelParams::preset()).unwrap();
    let domain = LocalGraph::whole(&space);
    let (a, z) = (space.empty(), space.plus(PlusMode::Interior));
    let opts = SolverOptions::default();
    for beta in [1.0, 8.0] {
        c.bench_function(&format!("capacity 3x3 beta={beta}"), |b| {
            b.iter(|| capacity(&domain, &[a], &[z], beta, &opts).unwrap())
        });
    }
}

fn green(c: &mut Criterion) {
    for m in [16, 64] {
        c.bench_function(&format!("box green M={m}"), |b| b.iter(|| BoxGreen::new(m).value((0, 0), (1, 0))));
    }
}

fn kmc(c: &mut Criterion) {
    let g = Geometry::new(4, 3).unwrap();
    let p = ModelParams::preset();
    let target = Configuration::EMPTY.with(5, 1).with(6, 2);
    c.bench_function("kmc transition 4x3 beta=1", |b| {
        b.iter_batched(
            || Simulator::new(&g, &p, 1.0, 1 << 14),
            |mut sim| sim.transition(Configuration::EMPTY, target, 7, 0, 1 << 32, &Instrumentation::none()),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, state_space, capacity_solve, green, kmc);
criterion_main!(benches);
