use std::collections::BTreeSet;
use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::green::{BoxGreen, GreenTable};
use super::inside;
use crate::error::{Error, Result};
use crate::landscape::DropletShape;
use crate::lattice::{lattice_neighbors, Site};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Sums of `CAP^{B_M⁺}(∂⁺B_M, ·)` over all placements of the droplet shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThetaBounds {
    pub m: i32,
    pub epsilon: f64,
    pub n_star: usize,
    /// Translations with the support in `B_{M−1}`.
    pub placements: usize,
    /// Placements whose `CS⁺⁺` is cut down to `B_M`.
    pub clipped: usize,
    /// Targets `CS`.
    pub theta1: f64,
    /// Targets `CS⁺⁺ ∩ B_M`.
    pub theta2: f64,
    /// Placements keeping `CS⁺⁺` farther than `εM` from `∂⁺B_M`.
    pub interior_placements: usize,
    pub interior_theta1: f64,
    pub interior_theta2: f64,
}

/// Target sites a walk from far away can reach; enclosed sites do not change the capacity.
fn exposed(set: &BTreeSet<Site>) -> Vec<Site> {
    let x0 = set.iter().map(|s| s.0).min().unwrap() - 1;
    let x1 = set.iter().map(|s| s.0).max().unwrap() + 1;
    let y0 = set.iter().map(|s| s.1).min().unwrap() - 1;
    let y1 = set.iter().map(|s| s.1).max().unwrap() + 1;
    let mut outside = BTreeSet::from([(x0, y0)]);
    let mut stack = vec![(x0, y0)];
    while let Some(s) = stack.pop() {
        for u in lattice_neighbors(s) {
            if u.0 >= x0 && u.0 <= x1 && u.1 >= y0 && u.1 <= y1 && !set.contains(&u) && outside.insert(u) {
                stack.push(u);
            }
        }
    }
    set.iter()
        .copied()
        .filter(|&s| lattice_neighbors(s).iter().any(|u| outside.contains(u)))
        .collect()
}

fn capacity_of(table: &GreenTable, f: &[Site], t: Site, m: i32) -> Result<f64> {
    let placed: Vec<Site> = f.iter().map(|&(x, y)| (x + t.0, y + t.1)).filter(|&s| inside(m, s)).collect();
    let k = placed.len();
    let g = Mat::<f64>::from_fn(k, k, |i, j| table.get(placed[i], placed[j]));
    let ones = Mat::<f64>::from_fn(k, 1, |_, _| 1.0);
    let llt = g
        .llt(Side::Lower)
        .map_err(|e| Error::Srw(format!("Green's matrix not positive definite: {e:?}")))?;
    let x = llt.solve(&ones);
    Ok((0..k).map(|i| x[(i, 0)]).sum())
}

struct Prepared {
    support: Vec<Site>,
    outer: Vec<Site>,
    f1: Vec<Site>,
    f2: Vec<Site>,
}

fn prepare(shape: &DropletShape) -> Prepared {
    let cs: BTreeSet<Site> = shape.cs.iter().chain(shape.particles.iter().map(|p| &p.0)).copied().collect();
    let all: BTreeSet<Site> = cs.iter().chain(&shape.cs_plus).chain(&shape.cs_plus_plus).copied().collect();
    Prepared { support: shape.support(), outer: all.iter().copied().collect(), f1: exposed(&cs), f2: exposed(&all) }
}

fn differences(f: &[Site]) -> impl Iterator<Item = Site> + '_ {
    f.iter().flat_map(move |a| f.iter().map(move |b| (b.0 - a.0, b.1 - a.1)))
}

pub fn theta_bounds(shapes: &[DropletShape], m: i32, epsilon: f64) -> Result<ThetaBounds> {
    if shapes.is_empty() {
        return Err(Error::EmptySet("droplet shapes"));
    }
    let prepared: Vec<Prepared> = shapes.iter().map(prepare).collect();
    let green = BoxGreen::new(m);
    let table = GreenTable::new(&green, prepared.iter().flat_map(|p| differences(&p.f1).chain(differences(&p.outer))));
    let margin = epsilon * m as f64;
    let mut out = ThetaBounds {
        m,
        epsilon,
        n_star: shapes.len(),
        placements: 0,
        clipped: 0,
        theta1: 0.0,
        theta2: 0.0,
        interior_placements: 0,
        interior_theta1: 0.0,
        interior_theta2: 0.0,
    };
    for (p, shape) in prepared.iter().zip(shapes) {
        let mut valid = Vec::new();
        for tx in -m..=m {
            for ty in -m..=m {
                let shift = |s: &Site| (s.0 + tx, s.1 + ty);
                if !p.support.iter().all(|s| inside(m - 1, shift(s))) {
                    continue;
                }
                let gap = p.outer.iter().map(|s| m + 1 - shift(s).0.abs().max(shift(s).1.abs())).min().unwrap();
                valid.push(((tx, ty), gap as f64 > margin, gap <= 0));
            }
        }
        if valid.is_empty() {
            return Err(Error::Srw(format!("shape {:?} does not fit B_{m}", shape.particles)));
        }
        // enclosed sites only matter once the enclosure is cut by the box
        let caps: Vec<(f64, f64, bool, bool)> = valid
            .par_iter()
            .map(|&(t, interior, cut)| {
                let f2 = if cut { &p.outer } else { &p.f2 };
                Ok((capacity_of(&table, &p.f1, t, m)?, capacity_of(&table, f2, t, m)?, interior, cut))
            })
            .collect::<Result<_>>()?;
        for (c1, c2, interior, cut) in caps {
            out.placements += 1;
            out.clipped += cut as usize;
            out.theta1 += c1;
            out.theta2 += c2;
            if interior {
                out.interior_placements += 1;
                out.interior_theta1 += c1;
                out.interior_theta2 += c2;
            }
        }
    }
    Ok(out)
}

/// One box size of the K-scaling table.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KasympRow {
    pub m: i32,
    /// `|Λ| = (2M + 1)²`.
    pub volume: u64,
    pub bounds: ThetaBounds,
    /// `K·N*·4π|Λ| / log|Λ|` with `K = 1/Θ1` and `K = 1/Θ2`.
    pub ratio_theta1: f64,
    pub ratio_theta2: f64,
    /// `Θ / (2π N* (2M)² / log M)` for Θ1 and Θ2.
    pub scaled_theta1: f64,
    pub scaled_theta2: f64,
}

pub fn kasymp_trend(shapes: &[DropletShape], ms: &[i32], epsilon: f64) -> Result<Vec<KasympRow>> {
    ms.iter()
        .map(|&m| {
            let b = theta_bounds(shapes, m, epsilon)?;
            let volume = ((2 * m + 1) as u64).pow(2);
            let ns = b.n_star as f64;
            let norm = ns * 4.0 * PI * volume as f64 / (volume as f64).ln();
            let lead = 2.0 * PI * ns * (2.0 * m as f64).powi(2) / (m as f64).ln();
            Ok(KasympRow {
                m,
                volume,
                ratio_theta1: norm / b.theta1,
                ratio_theta2: norm / b.theta2,
                scaled_theta1: b.theta1 / lead,
                scaled_theta2: b.theta2 / lead,
                bounds: b,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{srw_capacity, SrwMode};
    use super::*;
    use crate::potential::SolverOptions;

    fn dimer() -> DropletShape {
        DropletShape {
            particles: vec![((0, 0), 1), ((1, 0), 2)],
            cs: vec![(0, 0), (1, 0)],
            cs_plus: vec![(-1, 0), (2, 0), (0, 1), (1, 1), (0, -1), (1, -1)],
            cs_plus_plus: vec![(-2, 0), (3, 0), (-1, 1), (-1, -1), (2, 1), (2, -1), (0, 2), (1, 2), (0, -2), (1, -2)],
            multiplicity: 1,
        }
    }

    #[test]
    fn exposed_drops_enclosed_sites() {
        let ring: BTreeSet<Site> = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2), (1, 1)].into();
        let e = exposed(&ring);
        assert_eq!(e.len(), 8);
        assert!(!e.contains(&(1, 1)));
    }

    #[test]
    fn single_placement_matches_direct_solve() {
        let b = theta_bounds(&[dimer()], 4, 0.0).unwrap();
        assert!(b.theta1 <= b.theta2);
        assert_eq!(b.placements, 6 * 7);
        let opts = SolverOptions::default();
        let (mut t1, mut t2) = (0.0, 0.0);
        for tx in -4..=4 {
            for ty in -4..=4 {
                let sh = |v: &[Site]| v.iter().map(|&(x, y)| (x + tx, y + ty)).filter(|&s| inside(4, s)).collect::<Vec<_>>();
                if sh(&dimer().support()).iter().all(|&s| inside(3, s)) {
                    let d = dimer();
                    let all: Vec<Site> = sh(&d.cs).into_iter().chain(sh(&d.cs_plus)).chain(sh(&d.cs_plus_plus)).collect();
                    t1 += srw_capacity(4, &sh(&d.cs), &SrwMode::Plain, &opts).unwrap().capacity;
                    t2 += srw_capacity(4, &all, &SrwMode::Plain, &opts).unwrap().capacity;
                }
            }
        }
        assert!((b.theta1 - t1).abs() < 1e-10 * t1);
        assert!((b.theta2 - t2).abs() < 1e-10 * t2);
    }

    #[test]
    fn too_small_box_is_rejected() {
        assert!(theta_bounds(&[dimer()], 0, 0.1).is_err());
    }
}
