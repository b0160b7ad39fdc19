use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::linsolve::{solve, SolveInfo, SolverOptions, SpdMatrix};
use super::{log_scale, weight, Scaled};
use crate::error::{Error, Result};
use crate::landscape::{minimax_from, Landscape, Level, LocalGraph, INFINITE};

/// Equilibrium potential on a domain, indexed by local state id.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PotentialField {
    pub beta: f64,
    pub values: Vec<f64>,
    /// Unknowns with no path to the boundary sets, set to 0.
    pub singular: usize,
    /// Level the conductances are measured from.
    pub reference: Level,
    pub info: SolveInfo,
}

/// `Z_β · CAP_β(A, B)` on a domain by two representations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Capacity {
    pub beta: f64,
    /// `Φ(A, B)` inside the domain.
    pub phi: Level,
    pub dirichlet: Scaled,
    pub escape: Scaled,
    /// Upper bound on what the edges leaving the domain can add.
    pub truncation: Scaled,
    pub info: SolveInfo,
}

impl Capacity {
    pub fn relative_gap(&self) -> f64 {
        let e = self.escape.at_scale(self.dirichlet.log_scale);
        (self.dirichlet.mantissa - e).abs() / self.dirichlet.mantissa.abs().max(e.abs())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HittingTimes {
    pub beta: f64,
    /// `E_η τ_B` per local state.
    pub values: Vec<f64>,
    pub singular: usize,
    pub info: SolveInfo,
}

fn roles(domain: &LocalGraph, a: &[u32], b: &[u32]) -> Result<Vec<i8>> {
    if a.is_empty() {
        return Err(Error::EmptySet("source set"));
    }
    if b.is_empty() {
        return Err(Error::EmptySet("sink set"));
    }
    let mut role = vec![-1i8; domain.len()];
    for &s in a {
        role[s as usize] = 1;
    }
    for &s in b {
        if role[s as usize] == 1 {
            return Err(Error::Degenerate("source and sink sets intersect".into()));
        }
        role[s as usize] = 0;
    }
    Ok(role)
}

/// Free states connected to a fixed one.
fn anchored(domain: &LocalGraph, fixed: impl Fn(u32) -> bool) -> Vec<bool> {
    let mut seen = vec![false; domain.len()];
    let mut queue: VecDeque<u32> = (0..domain.len() as u32).filter(|&v| fixed(v)).collect();
    for &v in &queue {
        seen[v as usize] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in domain.adjacent(v) {
            if !seen[u as usize] {
                seen[u as usize] = true;
                queue.push_back(u);
            }
        }
    }
    seen
}

/// `h*_{A,B}` on `domain` (sets in local ids); states outside the domain are ignored.
pub fn equilibrium_potential(
    domain: &LocalGraph,
    a: &[u32],
    b: &[u32],
    beta: f64,
    opts: &SolverOptions,
) -> Result<PotentialField> {
    let role = roles(domain, a, b)?;
    let reference = pair_height(domain, a, b);
    let (values, singular, info) = harmonic(domain, &role, beta, reference, opts)?;
    Ok(PotentialField { beta, values, singular, reference, info })
}

fn pair_height(domain: &LocalGraph, a: &[u32], b: &[u32]) -> Level {
    let d = minimax_from(domain, a);
    let h = b.iter().map(|&s| d[s as usize]).min().unwrap_or(INFINITE);
    if h == INFINITE {
        domain.levels().iter().copied().max().unwrap_or(0)
    } else {
        h
    }
}

fn harmonic(
    domain: &LocalGraph,
    role: &[i8],
    beta: f64,
    reference: Level,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, usize, SolveInfo)> {
    let denom = domain.denom();
    let lv = domain.levels();
    let reach = anchored(domain, |v| role[v as usize] >= 0);
    let mut index = vec![u32::MAX; domain.len()];
    let mut free = Vec::new();
    for v in 0..domain.len() {
        if role[v] < 0 && reach[v] {
            index[v] = free.len() as u32;
            free.push(v as u32);
        }
    }
    let singular = (0..domain.len()).filter(|&v| role[v] < 0 && !reach[v]).count();
    let mut rhs = vec![0.0; free.len()];
    let mut leak = vec![0.0; free.len()];
    let rows: Vec<Vec<(u32, f64)>> = free
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut row = Vec::with_capacity(domain.adjacent(v).len() + 1);
            let mut diag = 0.0;
            for &u in domain.adjacent(v) {
                let w = weight(beta, lv[v as usize].max(lv[u as usize]), reference, denom);
                diag += w;
                match role[u as usize] {
                    1 => {
                        rhs[i] += w;
                        leak[i] += w;
                    }
                    0 => leak[i] += w,
                    _ => row.push((index[u as usize], -w)),
                }
            }
            row.push((i as u32, diag));
            row
        })
        .collect();
    let m = SpdMatrix::from_rows(rows).with_leak(leak);
    let (x, info) = solve(&m, &[rhs], opts)?;
    let mut values: Vec<f64> = role.iter().map(|&r| if r == 1 { 1.0 } else { 0.0 }).collect();
    for (&v, &h) in free.iter().zip(&x[0]) {
        values[v as usize] = h.clamp(0.0, 1.0);
    }
    Ok((values, singular, info))
}

/// Dirichlet-form and escape representations of `Z_β·CAP_β(A, B)` on `domain`.
pub fn capacity(domain: &LocalGraph, a: &[u32], b: &[u32], beta: f64, opts: &SolverOptions) -> Result<Capacity> {
    let role = roles(domain, a, b)?;
    let phi = pair_height(domain, a, b);
    let denom = domain.denom();
    let lv = domain.levels();
    let (h, _, info) = harmonic(domain, &role, beta, phi, opts)?;
    let reversed: Vec<i8> = role.iter().map(|&r| if r < 0 { r } else { 1 - r }).collect();
    let (g, _, info2) = harmonic(domain, &reversed, beta, phi, opts)?;

    let mut dirichlet = 0.0;
    for v in 0..domain.len() as u32 {
        for &u in domain.adjacent(v) {
            if u > v {
                let w = weight(beta, lv[v as usize].max(lv[u as usize]), phi, denom);
                let d = h[v as usize] - h[u as usize];
                dirichlet += w * d * d;
            }
        }
    }
    let escape: f64 = a
        .iter()
        .flat_map(|&s| domain.adjacent(s).iter().map(move |&u| (s, u)))
        .map(|(s, u)| weight(beta, lv[s as usize].max(lv[u as usize]), phi, denom) * g[u as usize])
        .sum();
    let scale = log_scale(beta, phi, denom);
    let info = SolveInfo { residual: info.residual.max(info2.residual), ..info };
    Ok(Capacity {
        beta,
        phi,
        dirichlet: Scaled::new(dirichlet, scale),
        escape: Scaled::new(escape, scale),
        truncation: Scaled::new(domain.exit_weight(beta, phi), scale),
        info,
    })
}

/// `E_η τ_B` for every state of the domain, from the reversible form
/// `Σ_η' μ(η)c(η,η')(u(η) − u(η')) = μ(η)` off `B`.
pub fn mean_hitting_time(domain: &LocalGraph, b: &[u32], beta: f64, opts: &SolverOptions) -> Result<HittingTimes> {
    if b.is_empty() {
        return Err(Error::EmptySet("target set"));
    }
    let denom = domain.denom();
    let lv = domain.levels();
    let reference = lv.iter().copied().min().unwrap_or(0);
    let mut target = vec![false; domain.len()];
    for &s in b {
        target[s as usize] = true;
    }
    let reach = anchored(domain, |v| target[v as usize]);
    let mut index = vec![u32::MAX; domain.len()];
    let mut free = Vec::new();
    for v in 0..domain.len() {
        if !target[v] && reach[v] {
            index[v] = free.len() as u32;
            free.push(v as u32);
        }
    }
    let singular = (0..domain.len()).filter(|&v| !target[v] && !reach[v]).count();
    let rhs: Vec<f64> = free.iter().map(|&v| weight(beta, lv[v as usize], reference, denom)).collect();
    let mut leak = vec![0.0; free.len()];
    let rows: Vec<Vec<(u32, f64)>> = free
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut row = Vec::new();
            let mut diag = 0.0;
            for &u in domain.adjacent(v) {
                let w = weight(beta, lv[v as usize].max(lv[u as usize]), reference, denom);
                diag += w;
                if target[u as usize] {
                    leak[i] += w;
                } else {
                    row.push((index[u as usize], -w));
                }
            }
            row.push((i as u32, diag));
            row
        })
        .collect();
    let (x, info) = solve(&SpdMatrix::from_rows(rows).with_leak(leak), &[rhs], opts)?;
    let mut values = vec![0.0; domain.len()];
    for (&v, &t) in free.iter().zip(&x[0]) {
        values[v as usize] = t;
    }
    for v in 0..domain.len() {
        if !target[v] && !reach[v] {
            values[v] = f64::INFINITY;
        }
    }
    Ok(HittingTimes { beta, values, singular, info })
}

/// `E_a τ_B = Σ_η μ(η) h*_{a,B}(η) / CAP(a, B)` for a single start state.
pub fn mean_time_from_capacity(
    domain: &LocalGraph,
    a: u32,
    b: &[u32],
    beta: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let cap = capacity(domain, &[a], b, beta, opts)?;
    let h = equilibrium_potential(domain, &[a], b, beta, opts)?;
    let lv = domain.levels();
    let reference = lv.iter().copied().min().unwrap_or(0);
    let mass: f64 = (0..domain.len())
        .map(|v| weight(beta, lv[v], reference, domain.denom()) * h.values[v])
        .sum();
    let ln = mass.ln() + log_scale(beta, reference, domain.denom()) - cap.dirichlet.ln();
    Ok(ln.exp())
}

/// Capacity between the ends of a path whose consecutive edges sit at the given levels:
/// `[Σ_l 1/(μ(ω_l) c(ω_l, ω_{l+1}))]^{-1}` times `Z_β`.
pub fn path_capacity(edge_levels: &[Level], beta: f64, denom: i64) -> Scaled {
    let top = edge_levels.iter().copied().max().unwrap_or(0);
    let s: f64 = edge_levels.iter().map(|&l| 1.0 / weight(beta, l, top, denom)).sum();
    Scaled::new(1.0 / s, log_scale(beta, top, denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::ExplicitGraph;

    #[test]
    fn two_state_chain() {
        let g = ExplicitGraph::path(vec![0, 3], 1);
        let d = LocalGraph::whole(&g);
        let opts = SolverOptions::default();
        let cap = capacity(&d, &[0], &[1], 1.0, &opts).unwrap();
        assert!((cap.dirichlet.value() - (-3.0f64).exp()).abs() < 1e-15);
        // rate 0 → 1 is e^{-3}, so the mean time is e^{3}
        let t = mean_hitting_time(&d, &[1], 1.0, &opts).unwrap();
        assert!((t.values[0] - 3.0f64.exp()).abs() < 1e-9);
        assert_eq!(t.values[1], 0.0);
    }

    #[test]
    fn three_state_chain_by_hand() {
        // 0 - 1 - 2 with levels 0, 1, 0 at β = ln 2: both edge weights 1/2, h(1) = 1/2
        let g = ExplicitGraph::path(vec![0, 1, 0], 1);
        let d = LocalGraph::whole(&g);
        let opts = SolverOptions::default();
        let h = equilibrium_potential(&d, &[0], &[2], 2f64.ln(), &opts).unwrap();
        assert!((h.values[1] - 0.5).abs() < 1e-15);
        let cap = capacity(&d, &[0], &[2], 2f64.ln(), &opts).unwrap();
        assert!((cap.dirichlet.value() - 0.25).abs() < 1e-15);
        assert!(cap.relative_gap() < 1e-14);
    }

    #[test]
    fn singular_component_is_reported() {
        let mut g = ExplicitGraph::new(vec![0, 1, 2, 1], 1);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let d = LocalGraph::whole(&g);
        let h = equilibrium_potential(&d, &[0], &[2], 1.0, &SolverOptions::default()).unwrap();
        assert_eq!(h.singular, 1);
        assert_eq!(h.values[3], 0.0);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let g = ExplicitGraph::path(vec![0, 1], 1);
        let d = LocalGraph::whole(&g);
        assert!(capacity(&d, &[], &[1], 1.0, &SolverOptions::default()).is_err());
        assert!(capacity(&d, &[0], &[0], 1.0, &SolverOptions::default()).is_err());
    }
}
