use serde::{Deserialize, Serialize};

use super::capacity::{capacity, equilibrium_potential};
use super::linsolve::SolverOptions;
use crate::error::{Error, Result};
use crate::landscape::{Landscape, LocalGraph, Partition, Region};

/// `max_{η∉M} μ(η)/CAP(η, M)` over `min_{η∈M} μ(η)/CAP(η, M∖η)` for `M = {□, ⊞}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairRatio {
    pub beta: f64,
    pub ln_ratio: f64,
    /// Local id attaining the numerator.
    pub worst: u32,
}

impl PairRatio {
    pub fn ratio(&self) -> f64 {
        self.ln_ratio.exp()
    }
}

/// `ln(μ(η)/CAP(η, rest))` up to the common `ln Z`.
fn ln_weight_over_cap(domain: &LocalGraph, s: u32, rest: &[u32], beta: f64, opts: &SolverOptions) -> Result<f64> {
    let cap = capacity(domain, &[s], rest, beta, opts)?;
    Ok(-beta * domain.level(s) as f64 / domain.denom() as f64 - cap.dirichlet.ln())
}

/// Evaluated over `candidates` (local ids outside the pair) on `domain`.
pub fn metastable_pair_ratio(
    domain: &LocalGraph,
    empty: u32,
    plus: u32,
    candidates: &[u32],
    beta: f64,
    opts: &SolverOptions,
) -> Result<PairRatio> {
    if candidates.is_empty() {
        return Ok(PairRatio { beta, ln_ratio: f64::NEG_INFINITY, worst: u32::MAX });
    }
    let den = ln_weight_over_cap(domain, empty, &[plus], beta, opts)?
        .min(ln_weight_over_cap(domain, plus, &[empty], beta, opts)?);
    let mut best = (f64::NEG_INFINITY, u32::MAX);
    for &s in candidates {
        if s == empty || s == plus {
            return Err(Error::Degenerate("candidate inside the metastable pair".into()));
        }
        let v = ln_weight_over_cap(domain, s, &[empty, plus], beta, opts)?;
        if v > best.0 {
            best = (v, s);
        }
    }
    Ok(PairRatio { beta, ln_ratio: best.0 - den, worst: best.1 })
}

/// How close `h*_{□,⊞}` on X* is to its limiting shape at one β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrivialityRow {
    pub beta: f64,
    /// `1 − min_{X_□} h*`.
    pub empty_gap: f64,
    /// `max_{X_⊞} h*`.
    pub plus_max: f64,
    /// Largest oscillation of h* inside a single well.
    pub well_oscillation: f64,
}

pub fn triviality_profile(part: &Partition, empty: u32, plus: u32, betas: &[f64], opts: &SolverOptions) -> Result<Vec<TrivialityRow>> {
    let g = &part.graph;
    let (a, b) = (g.local(empty).unwrap(), g.local(plus).unwrap());
    betas
        .iter()
        .map(|&beta| {
            let h = equilibrium_potential(g, &[a], &[b], beta, opts)?.values;
            let mut row = TrivialityRow { beta, empty_gap: 0.0, plus_max: 0.0, well_oscillation: 0.0 };
            let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY); part.wells.len()];
            for (v, &x) in h.iter().enumerate() {
                match part.regions[v] {
                    Region::Empty => row.empty_gap = row.empty_gap.max(1.0 - x),
                    Region::Plus => row.plus_max = row.plus_max.max(x),
                    Region::Well(w) => {
                        let r = &mut range[w as usize];
                        *r = (r.0.min(x), r.1.max(x));
                    }
                    Region::Saddle => {}
                }
            }
            row.well_oscillation = range.iter().map(|r| r.1 - r.0).fold(0.0, f64::max);
            Ok(row)
        })
        .collect()
}

/// Least-squares slope of `−ln y` against `β` over positive entries; `None` if fewer than two.
pub fn decay_rate(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(b, y)| (b, -y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::ExplicitGraph;

    #[test]
    fn decay_of_exact_exponential() {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 6.0].iter().map(|&b| (b, 3.0 * (-0.7 * b).exp())).collect();
        assert!((decay_rate(&pts).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(decay_rate(&[(1.0, 0.0)]), None);
    }

    #[test]
    fn pair_ratio_decays_on_a_double_well() {
        // □=0 at level 0, shallow state 2 at level 1, ⊞=4 at level -1; barriers 3 and 4
        let g = ExplicitGraph::path(vec![0, 3, 1, 4, -1], 1);
        let d = LocalGraph::whole(&g);
        let opts = SolverOptions::default();
        let r: Vec<f64> = [2.0, 4.0, 6.0]
            .iter()
            .map(|&b| metastable_pair_ratio(&d, 0, 4, &[2], b, &opts).unwrap().ln_ratio)
            .collect();
        assert!(r[0] > r[1] && r[1] > r[2]);
        // V* = 2 at state 2 against Γ* = 4
        assert!(((r[1] - r[2]) / 2.0 - 2.0).abs() < 0.1);
    }
}
