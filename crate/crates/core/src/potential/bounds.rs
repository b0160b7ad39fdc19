use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::capacity::{capacity, equilibrium_potential, Capacity};
use super::linsolve::SolverOptions;
use super::{log_scale, weight, Scaled};
use crate::error::{Error, Result};
use crate::landscape::{sublevel_path, Landscape, Level, LocalGraph};

/// Constants with `C1 ≤ e^{βΦ} Z CAP(A, B) ≤ C2` for every β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Apriori {
    pub phi: Level,
    /// Edges on a shortest path realising Φ.
    pub path_len: usize,
    pub c1: f64,
    /// Edges from `K(A,B) = {Φ(η,A) ≤ Φ(η,B)}` to its complement.
    pub c2: u64,
    /// Every such edge goes strictly downhill and starts at or above Φ.
    pub outcond: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sandwich {
    pub beta: f64,
    /// `ln(C1 e^{−βΦ})`, `ln` of the lower and upper capacity estimates, `ln(C2 e^{−βΦ})`.
    pub ln_lower: f64,
    pub ln_cap_low: f64,
    pub ln_cap_high: f64,
    pub ln_upper: f64,
    pub holds: bool,
}

impl Apriori {
    /// Checks the sandwich against a bracket `low ≤ Z·CAP ≤ high`.
    pub fn sandwich(&self, beta: f64, low: &Scaled, high: &Scaled, denom: i64) -> Sandwich {
        let s = log_scale(beta, self.phi, denom);
        let ln_lower = self.c1.ln() + s;
        let ln_upper = (self.c2 as f64).ln() + s;
        let ln_cap_low = low.ln();
        let ln_cap_high = high.ln();
        let tol = 1e-12;
        Sandwich {
            beta,
            ln_lower,
            ln_cap_low,
            ln_cap_high,
            ln_upper,
            holds: ln_lower <= ln_cap_low + tol && ln_cap_high <= ln_upper + tol,
        }
    }
}

/// A priori constants from the heights of every state to `A` and to `B`.
pub fn apriori<L: Landscape>(land: &L, a: &[u32], b: &[u32], to_a: &[Level], to_b: &[Level]) -> Result<Apriori> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("a priori bound sets"));
    }
    let phi = b.iter().map(|&s| to_a[s as usize]).min().unwrap();
    let path = sublevel_path(land, a, b, phi)
        .ok_or_else(|| Error::Degenerate("no path realises the communication height".into()))?;
    let path_len = path.len().saturating_sub(1).max(1);
    let in_k = |s: u32| to_a[s as usize] <= to_b[s as usize];
    let (c2, outcond) = (0..land.num_states() as u32)
        .into_par_iter()
        .filter(|&s| in_k(s))
        .map(|s| {
            let (mut n, mut ok) = (0u64, true);
            let h = land.level(s);
            land.for_each_neighbor(s, |u| {
                if !in_k(u) {
                    n += 1;
                    ok &= land.level(u) < h && h >= phi;
                }
            });
            (n, ok)
        })
        .reduce(|| (0, true), |x, y| (x.0 + y.0, x.1 && y.1));
    Ok(Apriori { phi, path_len, c1: 1.0 / path_len as f64, c2, outcond })
}

const OUTER_CHUNK: u32 = 1 << 14;

/// `Z·CAP(A, B)` of the full landscape bracketed from a solve on `domain`.
///
/// The lower end is the domain capacity (fewer edges, less conductance). The upper
/// end is the Dirichlet energy of the domain potential continued by `1_K` outside.
#[allow(clippy::too_many_arguments)]
pub fn capacity_bracket<L: Landscape>(
    land: &L,
    domain: &LocalGraph,
    a: &[u32],
    b: &[u32],
    to_a: &[Level],
    to_b: &[Level],
    beta: f64,
    opts: &SolverOptions,
) -> Result<(Capacity, Scaled)> {
    let (la, lb) = match (domain.locals(a), domain.locals(b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Degenerate("bracket sets must lie in the domain".into())),
    };
    let cap = capacity(domain, &la, &lb, beta, opts)?;
    let h = equilibrium_potential(domain, &la, &lb, beta, opts)?.values;
    let denom = land.denom();
    let reference = cap.phi;
    let mut inside = vec![false; land.num_states()];
    for &s in domain.globals() {
        inside[s as usize] = true;
    }
    let in_k = |s: u32| to_a[s as usize] <= to_b[s as usize];
    let w = |x: u32, y: u32| weight(beta, land.level(x).max(land.level(y)), reference, denom);
    let mut glued = 0.0;
    for (v, &s) in domain.globals().iter().enumerate() {
        land.for_each_neighbor(s, |u| {
            if !inside[u as usize] {
                let d = h[v] - if in_k(u) { 1.0 } else { 0.0 };
                glued += w(s, u) * d * d;
            }
        });
    }
    // fixed chunks summed in order, so the result does not depend on the thread count
    let n = land.num_states() as u32;
    let chunks: Vec<f64> = (0..n.div_ceil(OUTER_CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut t = 0.0;
            for s in k * OUTER_CHUNK..((k + 1) * OUTER_CHUNK).min(n) {
                if inside[s as usize] || !in_k(s) {
                    continue;
                }
                land.for_each_neighbor(s, |u| {
                    if !inside[u as usize] && !in_k(u) {
                        t += w(s, u);
                    }
                });
            }
            t
        })
        .collect();
    let outer: f64 = chunks.iter().sum();
    let high = Scaled::new(cap.dirichlet.at_scale(log_scale(beta, reference, denom)) + glued + outer, log_scale(beta, reference, denom));
    Ok((cap, high))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{minimax_from, ExplicitGraph};
    use crate::potential::path_capacity;

    #[test]
    fn path_graph_constants() {
        let levels = vec![0, 2, 1, 3, 0];
        let g = ExplicitGraph::path(levels.clone(), 1);
        let (ta, tb) = (minimax_from(&g, &[0]), minimax_from(&g, &[4]));
        let ap = apriori(&g, &[0], &[4], &ta, &tb).unwrap();
        assert_eq!(ap.phi, 3);
        assert_eq!(ap.path_len, 4);
        assert_eq!(ap.c1, 0.25);
        assert_eq!(ap.c2, 1);
        assert!(ap.outcond);
        let d = LocalGraph::whole(&g);
        for beta in [0.5, 1.0, 4.0] {
            let cap = capacity(&d, &[0], &[4], beta, &SolverOptions::default()).unwrap();
            assert!(ap.sandwich(beta, &cap.dirichlet, &cap.dirichlet, 1).holds);
            let m = path_capacity(&[2, 2, 3, 3], beta, 1);
            assert!((m.ln() - cap.dirichlet.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn bracket_contains_full_capacity() {
        // a diamond with a high detour 1-5-3 left outside the domain
        let mut g = ExplicitGraph::new(vec![0, 2, 1, 2, 0, 4], 1);
        for (x, y) in [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 3)] {
            g.add_edge(x, y);
        }
        let (ta, tb) = (minimax_from(&g, &[0]), minimax_from(&g, &[4]));
        let opts = SolverOptions::default();
        let whole = LocalGraph::whole(&g);
        let part = LocalGraph::sublevel_component(&g, &[0], 2);
        assert_eq!(part.len(), 5);
        for beta in [0.1, 1.0, 3.0] {
            let exact = capacity(&whole, &[0], &[4], beta, &opts).unwrap().dirichlet.ln();
            let (low, high) = capacity_bracket(&g, &part, &[0], &[4], &ta, &tb, beta, &opts).unwrap();
            assert!(low.dirichlet.ln() <= exact + 1e-12 && exact <= high.ln() + 1e-12);
            let (l2, h2) = capacity_bracket(&g, &whole, &[0], &[4], &ta, &tb, beta, &opts).unwrap();
            assert!((l2.dirichlet.ln() - exact).abs() < 1e-12 && (h2.ln() - exact).abs() < 1e-12);
        }
    }
}
