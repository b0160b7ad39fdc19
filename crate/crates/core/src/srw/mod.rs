//! Simple random walk capacities on square boxes `B_M = [−M, M]²`.

mod bounds;
mod green;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bounds::{kasymp_trend, theta_bounds, KasympRow, ThetaBounds, DEFAULT_EPSILON};
pub use green::{BoxGreen, GreenTable};

use crate::error::{Error, Result};
use crate::lattice::{lattice_neighbors, Site};
use crate::potential::linsolve::{solve, SolveInfo, SolverOptions, SpdMatrix};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "mode", content = "sites")]
pub enum SrwMode {
    #[default]
    Plain,
    /// Sites removed from the graph together with their edges.
    Obstacle(Vec<Site>),
}

/// Solution of the Dirichlet problem `g = 1` on `∂⁺B_M`, `g = 0` on `F`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SrwSolution {
    pub m: i32,
    /// `½ Σ_{(x,x')} (g(x) − g(x'))²` over ordered neighbour pairs of `B_M⁺`.
    pub capacity: f64,
    /// `g` on `B_M`, row-major from `(−M, −M)`; NaN on obstacles.
    pub values: Vec<f64>,
    /// Largest harmonicity defect at a free site.
    pub residual: f64,
    pub info: SolveInfo,
}

impl SrwSolution {
    pub fn at(&self, (x, y): Site) -> f64 {
        if x.abs() > self.m || y.abs() > self.m {
            return 1.0;
        }
        let n = 2 * self.m + 1;
        self.values[((x + self.m) * n + y + self.m) as usize]
    }
}

pub(crate) fn inside(m: i32, (x, y): Site) -> bool {
    x.abs() <= m && y.abs() <= m
}

/// `CAP^{B_M⁺}(∂⁺B_M, F)` with unit conductances.
pub fn srw_capacity(m: i32, target: &[Site], mode: &SrwMode, opts: &SolverOptions) -> Result<SrwSolution> {
    if m < 0 {
        return Err(Error::Srw(format!("negative half-side {m}")));
    }
    if target.is_empty() {
        return Err(Error::EmptySet("srw target"));
    }
    if let Some(s) = target.iter().find(|&&s| !inside(m, s)) {
        return Err(Error::Srw(format!("target site {s:?} is not inside B_{m}")));
    }
    let blocked: BTreeSet<Site> = match mode {
        SrwMode::Plain => BTreeSet::new(),
        SrwMode::Obstacle(s) => s.iter().copied().filter(|&s| inside(m, s)).collect(),
    };
    let zero: BTreeSet<Site> = target.iter().copied().filter(|s| !blocked.contains(s)).collect();
    if zero.is_empty() {
        return Err(Error::EmptySet("srw target outside the obstacle"));
    }
    let n = 2 * m + 1;
    let id = |(x, y): Site| ((x + m) * n + y + m) as usize;
    let total = (n * n) as usize;
    // -2 blocked, -1 zero, otherwise the unknown index
    let mut role = vec![0i64; total];
    let mut free = Vec::new();
    for x in -m..=m {
        for y in -m..=m {
            let s = (x, y);
            role[id(s)] = if blocked.contains(&s) {
                -2
            } else if zero.contains(&s) {
                -1
            } else {
                free.push(s);
                free.len() as i64 - 1
            };
        }
    }
    let mut rhs = vec![0.0; free.len()];
    let rows: Vec<Vec<(u32, f64)>> = free
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let mut row = vec![];
            let mut deg = 0.0;
            for u in lattice_neighbors(s) {
                if !inside(m, u) {
                    deg += 1.0;
                    rhs[i] += 1.0;
                    continue;
                }
                match role[id(u)] {
                    -2 => {}
                    -1 => deg += 1.0,
                    j => {
                        deg += 1.0;
                        row.push((j as u32, -1.0));
                    }
                }
            }
            row.push((i as u32, deg));
            row
        })
        .collect();
    let (x, info) = solve(&SpdMatrix::from_rows(rows), &[rhs], opts)?;
    let mut values = vec![0.0; total];
    for (k, &r) in role.iter().enumerate() {
        if r == -2 {
            values[k] = f64::NAN;
        } else if r >= 0 {
            values[k] = x[0][r as usize];
        }
    }
    let g = |s: Site| if inside(m, s) { values[id(s)] } else { 1.0 };
    let mut capacity = 0.0;
    for x in -m - 1..=m + 1 {
        for y in -m - 1..=m + 1 {
            let s = (x, y);
            let open = |s: Site| (s.0.abs() <= m + 1 && s.1.abs() <= m + 1) && (s.0.abs() <= m || s.1.abs() <= m) && (!inside(m, s) || role[id(s)] != -2);
            if !open(s) {
                continue;
            }
            for u in [(x + 1, y), (x, y + 1)] {
                if open(u) {
                    let d = g(s) - g(u);
                    capacity += d * d;
                }
            }
        }
    }
    let residual = free
        .iter()
        .map(|&s| {
            let nb: Vec<f64> = lattice_neighbors(s)
                .into_iter()
                .filter(|&u| !inside(m, u) || role[id(u)] != -2)
                .map(g)
                .collect();
            (nb.len() as f64 * g(s) - nb.iter().sum::<f64>()).abs()
        })
        .fold(0.0, f64::max);
    Ok(SrwSolution { m, capacity, values, residual, info })
}

/// `P_0(τ_{∂⁺B_{2M}} < τ_0)` against `π / (2 log 2M)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Escape {
    pub m: i32,
    pub probability: f64,
    /// `1 / (4 G(0, 0))` from the spectral Green's function.
    pub spectral: f64,
    pub asymptotic: f64,
    pub ratio: f64,
    pub info: SolveInfo,
}

pub fn escape_probability(m: i32, opts: &SolverOptions) -> Result<Escape> {
    if m < 1 {
        return Err(Error::Srw("escape needs M ≥ 1".into()));
    }
    let sol = srw_capacity(2 * m, &[(0, 0)], &SrwMode::Plain, opts)?;
    let probability = sol.capacity / 4.0;
    let spectral = 1.0 / (4.0 * BoxGreen::new(2 * m).value((0, 0), (0, 0)));
    let asymptotic = PI / (2.0 * (2.0 * m as f64).ln());
    Ok(Escape { m, probability, spectral, asymptotic, ratio: probability / asymptotic, info: sol.info })
}

/// Fraction of walks from the origin leaving `B_n` before returning.
pub fn escape_monte_carlo(n: i32, runs: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..runs {
        let mut p: Site = (0, 0);
        loop {
            p = lattice_neighbors(p)[rng.random_range(0..4)];
            if p == (0, 0) {
                break;
            }
            if !inside(n, p) {
                hits += 1;
                break;
            }
        }
    }
    let f = hits as f64 / runs as f64;
    (f, (f * (1.0 - f) / runs as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn three_by_three_by_hand() {
        let s = srw_capacity(1, &[(0, 0)], &SrwMode::Plain, &opts()).unwrap();
        assert!((s.capacity - 8.0 / 3.0).abs() < 1e-14);
        assert!((s.at((1, 0)) - 2.0 / 3.0).abs() < 1e-14);
        assert!((s.at((1, 1)) - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn full_box_target() {
        // only the 4(2M+1) boundary edges carry a unit drop
        let m = 3;
        let all: Vec<Site> = (-m..=m).flat_map(|x| (-m..=m).map(move |y| (x, y))).collect();
        let s = srw_capacity(m, &all, &SrwMode::Plain, &opts()).unwrap();
        assert_eq!(s.capacity, (4 * (2 * m + 1)) as f64);
    }

    #[test]
    fn symmetric_under_rotation() {
        let f = [(0, 0), (1, 0), (1, 2), (-2, 1)];
        let base = srw_capacity(6, &f, &SrwMode::Plain, &opts()).unwrap().capacity;
        for map in [|(x, y): Site| (-y, x), |(x, y): Site| (y, x), |(x, y): Site| (-x, y)] {
            let g: Vec<Site> = f.iter().map(|&s| map(s)).collect();
            let c = srw_capacity(6, &g, &SrwMode::Plain, &opts()).unwrap().capacity;
            assert!((c - base).abs() < 1e-11 * base);
        }
    }

    #[test]
    fn matches_green_function() {
        let (m, f) = (7, [(0, 0), (1, 0), (0, 1), (3, -2)]);
        let s = srw_capacity(m, &f, &SrwMode::Plain, &opts()).unwrap();
        let g = BoxGreen::new(m);
        let gm = faer::Mat::<f64>::from_fn(4, 4, |i, j| g.value(f[i], f[j]));
        let inv = faer::linalg::solvers::DenseSolveCore::inverse(&gm.llt(faer::Side::Lower).unwrap());
        let cap: f64 = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).map(|(i, j)| inv[(i, j)]).sum();
        assert!((s.capacity - cap).abs() < 1e-10 * cap);
        assert!(s.residual < 1e-10);
    }

    #[test]
    fn obstacle_lowers_capacity() {
        let f = [(0, 0), (1, 0)];
        let plain = srw_capacity(8, &f, &SrwMode::Plain, &opts()).unwrap().capacity;
        let obst = srw_capacity(8, &f, &SrwMode::Obstacle(vec![(0, 1), (1, 1)]), &opts()).unwrap().capacity;
        assert!(obst < plain);
    }

    #[test]
    fn rejects_targets_off_the_box() {
        assert!(srw_capacity(2, &[(3, 0)], &SrwMode::Plain, &opts()).is_err());
    }

    #[test]
    fn escape_agrees_with_spectral_and_walks() {
        let e = escape_probability(8, &opts()).unwrap();
        assert!((e.probability - e.spectral).abs() < 1e-10);
        let (f, se) = escape_monte_carlo(16, 20_000, 7);
        assert!((f - e.probability).abs() < 3.0 * se, "{f} {se} {}", e.probability);
    }
}
