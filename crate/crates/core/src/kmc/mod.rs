//! Rejection-free simulation of the Metropolis dynamics.

mod stats;

use std::num::NonZeroUsize;

use lru::LruCache;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

pub use stats::{chi_square_uniform, kolmogorov_p, ks_exponential, BatchStatistics, ChiSquare, KsTest, MIN_RECORDS};

use crate::landscape::GateReport;
use crate::lattice::{energy_level, for_each_move, Configuration, EnergyScale, Geometry, ModelParams};

pub const DEFAULT_BUDGET: u64 = 10_000_000_000;
pub const DEFAULT_CACHE: usize = 1 << 16;

/// Outcome of one run from □ to ⊞.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TransitionRecord {
    pub seed: u64,
    pub stream: u64,
    pub hitting_time: f64,
    /// Base-3 code of the first `C*_bd` state of the final excursion.
    pub gate_entrance: Option<u64>,
    pub passed_through_cstar: bool,
    pub excursion_count: u64,
    pub events: u64,
    pub complete: bool,
}

/// Gate sets watched during the final excursion, as base-3 codes.
#[derive(Clone, Debug, Default)]
pub struct Instrumentation {
    boundary: FxHashSet<u64>,
    critical: FxHashSet<u64>,
}

impl Instrumentation {
    pub fn from_gate(gate: &GateReport) -> Self {
        Self {
            boundary: gate.entrance.iter().map(|&s| s as u64).collect(),
            critical: gate.critical.iter().map(|&s| s as u64).collect(),
        }
    }

    pub fn none() -> Self {
        Self::default()
    }
}

struct Moves {
    targets: Vec<Configuration>,
    cumulative: Vec<f64>,
}

/// Per-worker simulator with a bounded cache of move lists.
pub struct Simulator {
    geom: Geometry,
    scale: EnergyScale,
    beta: f64,
    cache: LruCache<u64, Moves>,
    misses: u64,
}

impl Simulator {
    pub fn new(geom: &Geometry, params: &ModelParams, beta: f64, cache: usize) -> Self {
        Self {
            geom: geom.clone(),
            scale: params.scale(),
            beta,
            cache: LruCache::new(NonZeroUsize::new(cache.max(1)).unwrap()),
            misses: 0,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn cache_misses(&self) -> u64 {
        self.misses
    }

    fn moves(&mut self, c: Configuration) -> &Moves {
        if !self.cache.contains(&c.0) {
            self.misses += 1;
            let here = energy_level(&self.geom, &self.scale, c);
            let (mut targets, mut cumulative, mut total) = (Vec::new(), Vec::new(), 0.0);
            let (geom, scale, beta) = (&self.geom, &self.scale, self.beta);
            for_each_move(geom, c, |d, _| {
                let up = (energy_level(geom, scale, d) - here).max(0);
                total += (-beta * scale.to_f64(up)).exp();
                targets.push(d);
                cumulative.push(total);
            });
            self.cache.put(c.0, Moves { targets, cumulative });
        }
        self.cache.get(&c.0).unwrap()
    }

    /// One event: holding time and next configuration.
    fn step(&mut self, c: Configuration, rng: &mut ChaCha8Rng) -> (f64, Configuration) {
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let m = self.moves(c);
        let total = *m.cumulative.last().unwrap();
        let pick = v * total;
        let k = m.cumulative.partition_point(|&x| x <= pick).min(m.targets.len() - 1);
        (-(1.0 - u).ln() / total, m.targets[k])
    }

    /// Runs from `start` until `target`, tracking the excursions from `start`.
    pub fn transition(
        &mut self,
        start: Configuration,
        target: Configuration,
        seed: u64,
        stream: u64,
        budget: u64,
        watch: &Instrumentation,
    ) -> TransitionRecord {
        let sites = self.geom.len();
        let mut rng = rng_for(seed, stream);
        let mut rec = TransitionRecord {
            seed,
            stream,
            hitting_time: 0.0,
            gate_entrance: None,
            passed_through_cstar: false,
            excursion_count: 0,
            events: 0,
            complete: false,
        };
        let mut c = start;
        while c != target {
            if rec.events >= budget {
                return rec;
            }
            let (dt, next) = self.step(c, &mut rng);
            rec.hitting_time += dt;
            rec.events += 1;
            c = next;
            if c == start {
                rec.excursion_count += 1;
                rec.gate_entrance = None;
                rec.passed_through_cstar = false;
            } else if !watch.boundary.is_empty() || !watch.critical.is_empty() {
                let code = c.code(sites);
                if rec.gate_entrance.is_none() && watch.boundary.contains(&code) {
                    rec.gate_entrance = Some(code);
                }
                if watch.critical.contains(&code) {
                    rec.passed_through_cstar = true;
                }
            }
        }
        rec.complete = true;
        rec
    }

    /// Whether the walk from `start` reaches `b` before `a`; `None` past the budget.
    pub fn race(&mut self, start: Configuration, a: Configuration, b: Configuration, seed: u64, stream: u64, budget: u64) -> Option<bool> {
        let mut rng = rng_for(seed, stream);
        let mut c = start;
        for _ in 0..=budget {
            if c == a {
                return Some(false);
            }
            if c == b {
                return Some(true);
            }
            c = self.step(c, &mut rng).1;
        }
        None
    }

    /// Jump counts along a trajectory of `steps` events.
    pub fn jump_counts(&mut self, start: Configuration, steps: u64, seed: u64, stream: u64) -> FxHashMap<(u64, u64), u64> {
        let mut rng = rng_for(seed, stream);
        let mut counts = FxHashMap::default();
        let mut c = start;
        for _ in 0..steps {
            let next = self.step(c, &mut rng).1;
            *counts.entry((c.0, next.0)).or_insert(0) += 1;
            c = next;
        }
        counts
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Σ_e |n(e) − n(ē)| / Σ_e n(e)` over unordered pairs.
pub fn flux_asymmetry(counts: &FxHashMap<(u64, u64), u64>) -> f64 {
    let total: u64 = counts.values().sum();
    let mut diff = 0u64;
    for (&(a, b), &n) in counts {
        if a < b {
            diff += n.abs_diff(counts.get(&(b, a)).copied().unwrap_or(0));
        } else if !counts.contains_key(&(b, a)) {
            diff += n;
        }
    }
    diff as f64 / total.max(1) as f64
}

/// Batch settings shared by all records.
#[derive(Clone, Debug)]
pub struct BatchSpec {
    pub beta: f64,
    pub runs: usize,
    pub seed: u64,
    pub budget: u64,
    pub cache: usize,
}

impl BatchSpec {
    pub fn new(beta: f64, runs: usize, seed: u64) -> Self {
        Self { beta, runs, seed, budget: DEFAULT_BUDGET, cache: DEFAULT_CACHE }
    }
}

/// Records `0..runs` on streams `0..runs`; independent of the worker count.
pub fn run_batch(
    geom: &Geometry,
    params: &ModelParams,
    start: Configuration,
    target: Configuration,
    spec: &BatchSpec,
    watch: &Instrumentation,
) -> Vec<TransitionRecord> {
    (0..spec.runs as u64)
        .into_par_iter()
        .map_init(
            || Simulator::new(geom, params, spec.beta, spec.cache),
            |sim, i| sim.transition(start, target, spec.seed, i, spec.budget, watch),
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ModelParams;

    fn small() -> (Geometry, ModelParams) {
        (Geometry::new(3, 3).unwrap(), ModelParams::preset())
    }

    #[test]
    fn same_stream_same_record() {
        let (g, p) = small();
        let target = Configuration::EMPTY.with(4, 1);
        let mut a = Simulator::new(&g, &p, 1.0, 16);
        let mut b = Simulator::new(&g, &p, 1.0, 1 << 12);
        let ra = a.transition(Configuration::EMPTY, target, 9, 3, 1 << 30, &Instrumentation::none());
        let rb = b.transition(Configuration::EMPTY, target, 9, 3, 1 << 30, &Instrumentation::none());
        assert_eq!(ra, rb);
        assert!(ra.complete && ra.hitting_time > 0.0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let (g, p) = small();
        let mut s = Simulator::new(&g, &p, 1.0, 16);
        let r = s.transition(Configuration::EMPTY, Configuration::EMPTY.with(4, 2), 1, 0, 3, &Instrumentation::none());
        assert!(!r.complete);
        assert_eq!(r.events, 3);
    }

    #[test]
    fn batch_is_worker_independent() {
        let (g, p) = small();
        let spec = BatchSpec::new(0.5, 8, 11);
        let target = Configuration::EMPTY.with(4, 1);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let two = rayon::ThreadPoolBuilder::new().num_threads(2).build().unwrap();
        let a = one.install(|| run_batch(&g, &p, Configuration::EMPTY, target, &spec, &Instrumentation::none()));
        let b = two.install(|| run_batch(&g, &p, Configuration::EMPTY, target, &spec, &Instrumentation::none()));
        assert_eq!(a, b);
    }

    #[test]
    fn jump_flux_balances() {
        let (g, p) = small();
        let mut s = Simulator::new(&g, &p, 1.0, 1 << 14);
        let short = flux_asymmetry(&s.jump_counts(Configuration::EMPTY, 20_000, 5, 0));
        let long = flux_asymmetry(&s.jump_counts(Configuration::EMPTY, 2_000_000, 5, 1));
        assert!(long < short, "{short} {long}");
    }
}
