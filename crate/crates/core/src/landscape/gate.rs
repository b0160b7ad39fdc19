use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::blocks::on_simple_paths;
use super::partition::{Partition, Region};
use super::space::StateSpace;
use super::sweep::Analysis;
use super::Landscape;
use crate::error::{Error, Result};
use crate::lattice::{lattice_neighbors, Configuration, Site};

/// A protocritical droplet up to translation, with its extended site sets
/// in the same shifted coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DropletShape {
    pub particles: Vec<(Site, u8)>,
    pub cs: Vec<Site>,
    pub cs_plus: Vec<Site>,
    pub cs_plus_plus: Vec<Site>,
    /// Number of protocritical configurations with this shape.
    pub multiplicity: usize,
}

impl DropletShape {
    pub fn support(&self) -> Vec<Site> {
        self.particles.iter().map(|&(s, _)| s).collect()
    }
}

/// Site sets attached to one protocritical configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProtocriticalSites {
    pub state: u32,
    pub attachment: Vec<Site>,
    pub good: Vec<Site>,
    pub bad: Vec<Site>,
    pub wells: Vec<u32>,
    pub cs: Vec<Site>,
    pub cs_plus: Vec<Site>,
    pub cs_plus_plus: Vec<Site>,
}

/// Whether each level-set state belongs to some minimal gate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "status")]
pub enum Essential {
    Decided { flags: Vec<bool> },
    Undecided { reason: String },
}

/// Gate structure of the (□, ⊞) transition. State lists hold global codes, sorted.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateReport {
    pub level_set: Vec<u32>,
    pub on_path_saddles: Vec<u32>,
    pub entrance: Vec<u32>,
    pub protocritical: Vec<u32>,
    pub critical: Vec<u32>,
    pub attached: Vec<u32>,
    pub n_star: usize,
    pub shapes: Vec<DropletShape>,
    pub sites: Vec<ProtocriticalSites>,
    pub essential: Essential,
}

/// Largest state space on which essential-gate flags are searched.
pub const ESSENTIAL_MAX_STATES: usize = 19_683;
const ESSENTIAL_BUDGET: u64 = 5_000_000;

pub fn gate_analysis(space: &StateSpace, analysis: &Analysis, part: &Partition) -> Result<GateReport> {
    let g = &part.graph;
    let saddles = part.saddles();
    if saddles.is_empty() {
        return Err(Error::Degenerate("empty communication level set".into()));
    }
    let s = g.local(analysis.empty).unwrap();
    let t = g.local(analysis.plus).unwrap();
    let simple = on_simple_paths(g, s, t);
    let on_path: Vec<u32> = saddles.iter().copied().filter(|&v| simple[v as usize]).collect();

    let mut entrance = Vec::new();
    let mut protocritical = BTreeSet::new();
    for &z in &on_path {
        let below: Vec<u32> = g
            .adjacent(z)
            .iter()
            .copied()
            .filter(|&u| part.regions[u as usize] == Region::Empty)
            .collect();
        if !below.is_empty() {
            entrance.push(g.global(z));
            protocritical.extend(below.iter().map(|&u| g.global(u)));
        }
    }
    let protocritical: Vec<u32> = protocritical.into_iter().collect();

    let mut critical = BTreeSet::new();
    let mut attached = BTreeSet::new();
    let mut sites = Vec::new();
    for &p in &protocritical {
        let (free, att) = extensions(space, p);
        critical.extend(free);
        attached.extend(att);
        sites.push(site_sets(space, part, p));
    }

    let shapes = shapes(space, &protocritical, &sites);
    let essential = if space.num_states() <= ESSENTIAL_MAX_STATES {
        essential_flags(part, s, t, ESSENTIAL_BUDGET)
    } else {
        Essential::Undecided {
            reason: format!("state space above {ESSENTIAL_MAX_STATES} states"),
        }
    };

    let sorted = |v: Vec<u32>| {
        let mut v: Vec<u32> = v.into_iter().map(|x| g.global(x)).collect();
        v.sort_unstable();
        v
    };
    let level_set = sorted(saddles.clone());
    let on_path_saddles = sorted(on_path);
    entrance.sort_unstable();
    let essential = match essential {
        Essential::Decided { flags } => {
            let by_global: BTreeMap<u32, bool> = saddles
                .iter()
                .zip(flags)
                .map(|(&v, f)| (g.global(v), f))
                .collect();
            Essential::Decided { flags: level_set.iter().map(|x| by_global[x]).collect() }
        }
        e => e,
    };

    Ok(GateReport {
        level_set,
        on_path_saddles,
        entrance,
        protocritical,
        critical: critical.into_iter().collect(),
        attached: attached.into_iter().collect(),
        n_star: shapes.len(),
        shapes,
        sites,
        essential,
    })
}

/// States from `p` with one type-2 particle added: `(free, attached)`.
pub fn extensions(space: &StateSpace, p: u32) -> (Vec<u32>, Vec<u32>) {
    let c = space.config(p);
    let (mut free, mut attached) = (Vec::new(), Vec::new());
    for x in 0..space.geometry().len() {
        if c.get(x) != 0 {
            continue;
        }
        let d = space.state(c.with(x, 2));
        if binds(space, c, x) {
            attached.push(d);
        } else {
            free.push(d);
        }
    }
    (free, attached)
}

/// Would a type-2 particle at empty site `x` form an active bond?
fn binds(space: &StateSpace, c: Configuration, x: usize) -> bool {
    let geom = space.geometry();
    geom.is_interior(x) && geom.site_neighbors(x).any(|y| geom.is_interior(y) && c.get(y) == 1)
}

fn outer(set: &BTreeSet<Site>) -> BTreeSet<Site> {
    set.iter()
        .flat_map(|&s| lattice_neighbors(s))
        .filter(|s| !set.contains(s))
        .collect()
}

fn site_sets(space: &StateSpace, part: &Partition, p: u32) -> ProtocriticalSites {
    let geom = space.geometry();
    let c = space.config(p);
    let support: BTreeSet<Site> = (0..geom.len())
        .filter(|&i| c.get(i) != 0)
        .map(|i| geom.site(i))
        .collect();
    let (mut attachment, mut good, mut bad, mut wells) = (Vec::new(), Vec::new(), Vec::new(), BTreeSet::new());
    for x in outer(&support) {
        let Some(i) = geom.index_of(x) else { continue };
        let d = space.state(c.with(i, 2));
        if space.level(d) >= part.saddle {
            continue;
        }
        attachment.push(x);
        match part.region_of(d) {
            Some(Region::Plus) => good.push(x),
            Some(Region::Well(w)) => {
                bad.push(x);
                wells.insert(w);
            }
            _ => {}
        }
    }
    let cs: BTreeSet<Site> = support.iter().copied().chain(good.iter().copied()).collect();
    let cs_plus = outer(&cs);
    let cs_plus_plus = outer(&cs_plus);
    ProtocriticalSites {
        state: p,
        attachment,
        good,
        bad,
        wells: wells.into_iter().collect(),
        cs: cs.into_iter().collect(),
        cs_plus: cs_plus.into_iter().collect(),
        cs_plus_plus: cs_plus_plus.into_iter().collect(),
    }
}

fn shapes(space: &StateSpace, protocritical: &[u32], sites: &[ProtocriticalSites]) -> Vec<DropletShape> {
    let geom = space.geometry();
    let mut by_shape: BTreeMap<Vec<(Site, u8)>, DropletShape> = BTreeMap::new();
    for (&p, ss) in protocritical.iter().zip(sites) {
        let c = space.config(p);
        let particles: Vec<(Site, u8)> = (0..geom.len())
            .filter(|&i| c.get(i) != 0)
            .map(|i| (geom.site(i), c.get(i)))
            .collect();
        let dx = particles.iter().map(|&((x, _), _)| x).min().unwrap_or(0);
        let dy = particles.iter().map(|&((_, y), _)| y).min().unwrap_or(0);
        let shift = |v: &[Site]| v.iter().map(|&(x, y)| (x - dx, y - dy)).collect::<Vec<_>>();
        let mut key: Vec<(Site, u8)> = particles.iter().map(|&((x, y), k)| ((x - dx, y - dy), k)).collect();
        key.sort_unstable();
        let candidate = DropletShape {
            particles: key.clone(),
            cs: shift(&ss.cs),
            cs_plus: shift(&ss.cs_plus),
            cs_plus_plus: shift(&ss.cs_plus_plus),
            multiplicity: 1,
        };
        by_shape
            .entry(key)
            .and_modify(|e| {
                e.multiplicity += 1;
                if candidate.cs.len() > e.cs.len() {
                    let m = e.multiplicity;
                    *e = DropletShape { multiplicity: m, ..candidate.clone() };
                }
            })
            .or_insert(candidate);
    }
    by_shape.into_values().collect()
}

/// Essential-gate flags for the saddles of `part`, in `part.saddles()` order.
///
/// A saddle is essential iff some simple path from `X_□` to `X_⊞` through it,
/// with every sub-saddle valley or well always available, leaves the saddle
/// as a cut vertex between the two valleys. Decided by exhaustive path
/// enumeration on the graph with valleys and wells contracted.
pub fn essential_flags(part: &Partition, s: u32, t: u32, budget: u64) -> Essential {
    let g = &part.graph;
    let saddles = part.saddles();
    let nw = part.wells.len();
    // contracted nodes: 0 = X_□, 1 = X_⊞, 2.. wells, then saddles
    let node_of = |v: u32| -> usize {
        match part.regions[v as usize] {
            Region::Empty => 0,
            Region::Plus => 1,
            Region::Well(w) => 2 + w as usize,
            Region::Saddle => 2 + nw + saddles.binary_search(&v).unwrap(),
        }
    };
    let total = 2 + nw + saddles.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); total];
    for v in 0..g.len() as u32 {
        let a = node_of(v);
        for &u in g.adjacent(v) {
            let b = node_of(u);
            if a != b {
                adj[a].insert(b);
            }
        }
    }
    let adj: Vec<Vec<usize>> = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    let (src, dst) = (node_of(s), node_of(t));
    let first_saddle = 2 + nw;
    let mut flags = vec![false; saddles.len()];
    let mut on = vec![false; total];
    let mut path = vec![src];
    on[src] = true;
    let mut steps = 0u64;
    let mut stack: Vec<usize> = vec![0];
    while let Some(i) = stack.last_mut() {
        let v = *path.last().unwrap();
        if v == dst {
            check_path(&adj, &path, first_saddle, src, dst, &mut flags);
            stack.pop();
            on[path.pop().unwrap()] = false;
            continue;
        }
        if *i < adj[v].len() {
            let w = adj[v][*i];
            *i += 1;
            steps += 1;
            if steps > budget {
                return Essential::Undecided { reason: format!("path budget {budget} exhausted") };
            }
            if !on[w] {
                on[w] = true;
                path.push(w);
                stack.push(0);
            }
        } else {
            stack.pop();
            on[path.pop().unwrap()] = false;
        }
    }
    Essential::Decided { flags }
}

fn check_path(adj: &[Vec<usize>], path: &[usize], first_saddle: usize, src: usize, dst: usize, flags: &mut [bool]) {
    let chosen: BTreeSet<usize> = path.iter().copied().filter(|&x| x >= first_saddle).collect();
    for &z in &chosen {
        if flags[z - first_saddle] {
            continue;
        }
        let allowed = |x: usize| x != z && (x < first_saddle || chosen.contains(&x));
        let mut seen = vec![false; adj.len()];
        let mut queue = vec![src];
        seen[src] = true;
        let mut reached = false;
        while let Some(x) = queue.pop() {
            if x == dst {
                reached = true;
                break;
            }
            for &y in &adj[x] {
                if !seen[y] && allowed(y) {
                    seen[y] = true;
                    queue.push(y);
                }
            }
        }
        if !reached {
            flags[z - first_saddle] = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::sweep::{analyze, LevelOrder};
    use super::super::ExplicitGraph;
    use super::*;

    fn partition_of(g: &ExplicitGraph, a: u32, b: u32) -> (Partition, u32, u32) {
        let an = analyze(g, &LevelOrder::new(g), a, b).unwrap();
        let p = Partition::build(g, &an).unwrap();
        let (s, t) = (p.graph.local(a).unwrap(), p.graph.local(b).unwrap());
        (p, s, t)
    }

    #[test]
    fn dead_end_saddle_is_not_essential() {
        // valley 0, saddle 1, valley 2; saddle 3 hangs off valley 0 and saddle 1
        let mut g = ExplicitGraph::new(vec![0, 5, -1, 5], 1);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(3, 1);
        let (p, s, t) = partition_of(&g, 0, 2);
        match essential_flags(&p, s, t, 1000) {
            Essential::Decided { flags } => assert_eq!(flags, vec![true, false]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn parallel_saddles_are_both_essential() {
        let mut g = ExplicitGraph::new(vec![0, 5, 5, -1], 1);
        g.add_edge(0, 1);
        g.add_edge(0, 2);
        g.add_edge(1, 3);
        g.add_edge(2, 3);
        let (p, s, t) = partition_of(&g, 0, 3);
        assert_eq!(essential_flags(&p, s, t, 1000), Essential::Decided { flags: vec![true, true] });
        assert!(matches!(essential_flags(&p, s, t, 1), Essential::Undecided { .. }));
    }
}
