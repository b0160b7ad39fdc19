use serde::{Deserialize, Serialize};

use super::linsolve::{solve, SolveInfo, SolverOptions, SpdMatrix};
use crate::error::{Error, Result};
use crate::landscape::{Partition, Region};

/// The unit-conductance problem on X* with valleys and wells collapsed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaReport {
    pub theta: f64,
    pub k: f64,
    /// Potential of each well, in `Partition::wells` order.
    pub well_constants: Vec<f64>,
    pub free_nodes: usize,
    /// Unit edges touching a saddle state, counted with multiplicity.
    pub edges: usize,
    /// Largest harmonicity defect at a free node.
    pub residual: f64,
    pub info: SolveInfo,
}

/// Θ as the Dirichlet energy of the harmonic function equal to 1 on `X_□`
/// and 0 on `X_⊞`, with wells and saddle states free.
pub fn theta_quotient(part: &Partition) -> Result<ThetaReport> {
    let g = &part.graph;
    let saddles = part.saddles();
    let nw = part.wells.len();
    // fixed nodes: 0 = X_□ (value 1), 1 = X_⊞ (value 0); free nodes follow
    let node = |v: u32| -> usize {
        match part.regions[v as usize] {
            Region::Empty => 0,
            Region::Plus => 1,
            Region::Well(w) => 2 + w as usize,
            Region::Saddle => 2 + nw + saddles.binary_search(&v).unwrap(),
        }
    };
    let total = 2 + nw + saddles.len();
    let mut edges = Vec::new();
    for &v in &saddles {
        for &u in g.adjacent(v) {
            if part.regions[u as usize] != Region::Saddle || u > v {
                edges.push((node(v), node(u)));
            }
        }
    }
    let mut adj = vec![Vec::new(); total];
    for &(x, y) in &edges {
        adj[x].push(y);
        adj[y].push(x);
    }
    if edges.iter().any(|&(x, y)| x.min(y) == 0 && x.max(y) == 1) {
        return Err(Error::Degenerate("X_□ and X_⊞ adjacent".into()));
    }

    // free nodes reachable from a fixed node
    let mut seen = vec![false; total];
    let mut stack = vec![0usize, 1];
    seen[0] = true;
    seen[1] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    let mut index = vec![u32::MAX; total];
    let mut free = Vec::new();
    for x in 2..total {
        if seen[x] {
            index[x] = free.len() as u32;
            free.push(x);
        }
    }
    let mut rhs = vec![0.0; free.len()];
    let rows = free
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut row = vec![(i as u32, adj[x].len() as f64)];
            for &y in &adj[x] {
                match y {
                    0 => rhs[i] += 1.0,
                    1 => {}
                    _ => row.push((index[y], -1.0)),
                }
            }
            row
        })
        .collect();
    let (x, info) = solve(&SpdMatrix::from_rows(rows), &[rhs], &SolverOptions::default())?;
    let mut phi = vec![0.0; total];
    phi[0] = 1.0;
    for (&n, &v) in free.iter().zip(&x[0]) {
        phi[n] = v;
    }
    let theta: f64 = edges.iter().map(|&(a, b)| (phi[a] - phi[b]).powi(2)).sum();
    let residual = free
        .iter()
        .map(|&n| adj[n].iter().map(|&y| phi[n] - phi[y]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    Ok(ThetaReport {
        theta,
        k: 1.0 / theta,
        well_constants: (0..nw).map(|w| phi[2 + w]).collect(),
        free_nodes: free.len(),
        edges: edges.len(),
        residual,
        info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{analyze, ExplicitGraph, LevelOrder};

    fn theta_of(g: &ExplicitGraph, a: u32, b: u32) -> ThetaReport {
        let an = analyze(g, &LevelOrder::new(g), a, b).unwrap();
        theta_quotient(&Partition::build(g, &an).unwrap()).unwrap()
    }

    #[test]
    fn single_saddle_is_two_unit_resistors() {
        let g = ExplicitGraph::path(vec![0, 5, -1], 1);
        let t = theta_of(&g, 0, 2);
        assert!((t.theta - 0.5).abs() < 1e-15);
        assert!((t.k - 2.0).abs() < 1e-14);
    }

    #[test]
    fn well_between_two_saddles() {
        // □ - s - well - s - ⊞: four unit resistors in series
        let g = ExplicitGraph::path(vec![0, 3, 1, 3, -1], 1);
        let t = theta_of(&g, 0, 4);
        assert!((t.theta - 0.25).abs() < 1e-15);
        assert_eq!(t.well_constants.len(), 1);
        assert!((t.well_constants[0] - 0.5).abs() < 1e-15);
        assert!(t.residual < 1e-14);
    }

    #[test]
    fn parallel_saddles_add() {
        let mut g = ExplicitGraph::new(vec![0, 5, 5, -1], 1);
        for (a, b) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            g.add_edge(a, b);
        }
        assert!((theta_of(&g, 0, 3).theta - 1.0).abs() < 1e-15);
    }
}
