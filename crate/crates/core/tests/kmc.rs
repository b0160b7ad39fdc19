use kawa_core::kmc::{run_batch, BatchSpec, Instrumentation, Simulator};
use kawa_core::landscape::{LocalGraph, PlusMode};
use kawa_core::potential::{equilibrium_potential, mean_hitting_time, SolverOptions};
use kawa_core::{Geometry, Landscape, ModelParams, StateSpace};

fn three_by_three() -> StateSpace {
    StateSpace::new(Geometry::new(3, 3).unwrap(), ModelParams::preset()).unwrap()
}

fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn infinite_temperature_mean_matches_exact_solve() {
    let space = three_by_three();
    let (e, p) = (space.empty(), space.plus(PlusMode::Interior));
    let domain = LocalGraph::whole(&space);
    let exact = mean_hitting_time(&domain, &[p], 0.0, &SolverOptions::default()).unwrap().values[e as usize];
    let spec = BatchSpec::new(0.0, 1000, 77);
    let recs = run_batch(space.geometry(), space.params(), space.config(e), space.config(p), &spec, &Instrumentation::none());
    assert!(recs.iter().all(|r| r.complete));
    let (m, se) = mean_and_se(&recs.iter().map(|r| r.hitting_time).collect::<Vec<_>>());
    assert!((m - exact).abs() < 3.0 * se, "mean {m} ± {se}, exact {exact}");
}

#[test]
fn race_frequency_matches_equilibrium_potential() {
    let space = three_by_three();
    let (e, p) = (space.empty(), space.plus(PlusMode::Interior));
    let beta = 1.0;
    let domain = LocalGraph::whole(&space);
    let h = equilibrium_potential(&domain, &[e], &[p], beta, &SolverOptions::default()).unwrap();
    // a start where both outcomes are common
    let start = (0..space.num_states() as u32)
        .filter(|&s| s != e && s != p)
        .min_by(|&a, &b| (h.values[a as usize] - 0.5).abs().total_cmp(&(h.values[b as usize] - 0.5).abs()))
        .unwrap();
    let target = 1.0 - h.values[start as usize];
    let runs = 2000;
    let mut sim = Simulator::new(space.geometry(), space.params(), beta, 1 << 16);
    let hits = (0..runs)
        .filter(|&i| sim.race(space.config(start), space.config(e), space.config(p), 31, i, 1 << 40).unwrap())
        .count();
    let f = hits as f64 / runs as f64;
    let se = (target * (1.0 - target) / runs as f64).sqrt();
    assert!((f - target).abs() < 3.0 * se, "fraction {f}, 1 − h* = {target}, se {se}");
}
