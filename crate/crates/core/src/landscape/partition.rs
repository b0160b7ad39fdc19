use std::collections::{BTreeMap, VecDeque};

use rustc_hash::FxHashMap;

use super::sweep::Analysis;
use super::{Landscape, Level};
use crate::error::{Error, Result};

/// A connected sub-landscape stored with local indices and CSR adjacency.
#[derive(Clone, Debug)]
pub struct LocalGraph {
    states: Vec<u32>,
    levels: Vec<Level>,
    denom: i64,
    offsets: Vec<u32>,
    adj: Vec<u32>,
    index: FxHashMap<u32, u32>,
    exits: BTreeMap<Level, u64>,
}

impl LocalGraph {
    /// States reachable from `seeds` through levels `≤ cap`, in BFS order.
    pub fn sublevel_component<L: Landscape>(land: &L, seeds: &[u32], cap: Level) -> Self {
        let mut index = FxHashMap::default();
        let mut states = Vec::new();
        for &s in seeds {
            if land.level(s) <= cap && !index.contains_key(&s) {
                index.insert(s, states.len() as u32);
                states.push(s);
            }
        }
        let mut k = 0;
        while k < states.len() {
            let v = states[k];
            k += 1;
            land.for_each_neighbor(v, |u| {
                if land.level(u) <= cap && !index.contains_key(&u) {
                    index.insert(u, states.len() as u32);
                    states.push(u);
                }
            });
        }
        Self::induced(land, states, index)
    }

    /// Every state of the landscape.
    pub fn whole<L: Landscape>(land: &L) -> Self {
        let states: Vec<u32> = (0..land.num_states() as u32).collect();
        let index = states.iter().map(|&s| (s, s)).collect();
        Self::induced(land, states, index)
    }

    fn induced<L: Landscape>(land: &L, states: Vec<u32>, index: FxHashMap<u32, u32>) -> Self {
        let mut offsets = Vec::with_capacity(states.len() + 1);
        let mut adj = Vec::new();
        let mut exits = BTreeMap::new();
        offsets.push(0);
        for &s in &states {
            let ls = land.level(s);
            land.for_each_neighbor(s, |u| match index.get(&u) {
                Some(&j) => adj.push(j),
                None => *exits.entry(ls.max(land.level(u))).or_insert(0) += 1,
            });
            offsets.push(adj.len() as u32);
        }
        let levels = states.iter().map(|&s| land.level(s)).collect();
        Self { states, levels, denom: land.denom(), offsets, adj, index, exits }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn global(&self, local: u32) -> u32 {
        self.states[local as usize]
    }

    pub fn globals(&self) -> &[u32] {
        &self.states
    }

    pub fn local(&self, global: u32) -> Option<u32> {
        self.index.get(&global).copied()
    }

    pub fn locals(&self, globals: &[u32]) -> Option<Vec<u32>> {
        globals.iter().map(|&g| self.local(g)).collect()
    }

    #[inline]
    pub fn adjacent(&self, local: u32) -> &[u32] {
        &self.adj[self.offsets[local as usize] as usize..self.offsets[local as usize + 1] as usize]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    /// Edge levels `max(H, H')` of edges leaving the graph, with multiplicity.
    pub fn exits(&self) -> &BTreeMap<Level, u64> {
        &self.exits
    }

    /// `Σ exp(−β (max(H, H') − reference))` over edges leaving the graph.
    pub fn exit_weight(&self, beta: f64, reference: Level) -> f64 {
        self.exits
            .iter()
            .map(|(&l, &m)| m as f64 * (-beta * (l - reference) as f64 / self.denom as f64).exp())
            .sum()
    }
}

impl Landscape for LocalGraph {
    fn num_states(&self) -> usize {
        self.states.len()
    }

    #[inline]
    fn level(&self, s: u32) -> Level {
        self.levels[s as usize]
    }

    fn denom(&self) -> i64 {
        self.denom
    }

    #[inline]
    fn for_each_neighbor(&self, s: u32, mut f: impl FnMut(u32)) {
        for &t in self.adjacent(s) {
            f(t);
        }
    }
}

/// Where a state of the X*-component of □ lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    /// `X_□`.
    Empty,
    /// `X_⊞`.
    Plus,
    /// Well `X_i`.
    Well(u32),
    /// Level exactly `Φ(□, ⊞)`.
    Saddle,
}

/// Valleys, wells and saddles below and at `Φ(□, ⊞)`.
pub struct Partition {
    /// `Φ(□, ⊞)` as an absolute level.
    pub saddle: Level,
    /// The connected component of □ in X*.
    pub graph: LocalGraph,
    pub regions: Vec<Region>,
    pub empty_valley: Vec<u32>,
    pub plus_valley: Vec<u32>,
    pub wells: Vec<Vec<u32>>,
    /// |X*| and |X**| over the whole space.
    pub x_star_size: usize,
    pub x_star_star_size: usize,
    /// Components of X** not connected to □ inside X*.
    pub detached_components: usize,
    pub detached_states: usize,
}

impl Partition {
    pub fn build<L: Landscape>(land: &L, analysis: &Analysis) -> Result<Self> {
        let saddle = analysis.saddle;
        let (empty, plus) = (analysis.empty, analysis.plus);
        if land.level(empty) >= saddle || land.level(plus) >= saddle {
            return Err(Error::Degenerate(
                "□ or ⊞ lies at the communication height, so it is missing from X**".into(),
            ));
        }
        let graph = LocalGraph::sublevel_component(land, &[empty], saddle);
        let n = graph.len();
        let mut label = vec![u32::MAX; n];
        let mut components: Vec<Vec<u32>> = Vec::new();
        for start in 0..n as u32 {
            if graph.level(start) >= saddle || label[start as usize] != u32::MAX {
                continue;
            }
            let id = components.len() as u32;
            let mut members = vec![start];
            label[start as usize] = id;
            let mut k = 0;
            while k < members.len() {
                let v = members[k];
                k += 1;
                for &u in graph.adjacent(v) {
                    if graph.level(u) < saddle && label[u as usize] == u32::MAX {
                        label[u as usize] = id;
                        members.push(u);
                    }
                }
            }
            components.push(members);
        }
        let le = label[graph.local(empty).unwrap() as usize];
        let lp = graph
            .local(plus)
            .map(|p| label[p as usize])
            .ok_or_else(|| Error::Degenerate("⊞ not reachable inside X*".into()))?;
        if le == lp {
            return Err(Error::Degenerate("□ and ⊞ connected below Γ*".into()));
        }

        let mut order: Vec<u32> = (0..components.len() as u32)
            .filter(|&c| c != le && c != lp)
            .collect();
        order.sort_by_key(|&c| components[c as usize].iter().map(|&v| graph.global(v)).min());
        let mut well_id = vec![u32::MAX; components.len()];
        for (i, &c) in order.iter().enumerate() {
            well_id[c as usize] = i as u32;
        }
        let regions: Vec<Region> = (0..n)
            .map(|v| match label[v] {
                u32::MAX => Region::Saddle,
                c if c == le => Region::Empty,
                c if c == lp => Region::Plus,
                c => Region::Well(well_id[c as usize]),
            })
            .collect();
        let mut sorted = |c: u32| {
            let mut m = std::mem::take(&mut components[c as usize]);
            m.sort_unstable();
            m
        };
        let empty_valley = sorted(le);
        let plus_valley = sorted(lp);
        let wells: Vec<Vec<u32>> = order.iter().map(|&c| sorted(c)).collect();

        let total = land.num_states() as u32;
        let x_star_size = (0..total).filter(|&s| land.level(s) <= saddle).count();
        let x_star_star_size = (0..total).filter(|&s| land.level(s) < saddle).count();
        let (detached_components, detached_states) = detached(land, &graph, saddle);

        Ok(Self {
            saddle,
            graph,
            regions,
            empty_valley,
            plus_valley,
            wells,
            x_star_size,
            x_star_star_size,
            detached_components,
            detached_states,
        })
    }

    pub fn region_of(&self, global: u32) -> Option<Region> {
        self.graph.local(global).map(|l| self.regions[l as usize])
    }

    /// Local ids of the states at level `Φ(□, ⊞)` in the component.
    pub fn saddles(&self) -> Vec<u32> {
        (0..self.graph.len() as u32)
            .filter(|&v| self.regions[v as usize] == Region::Saddle)
            .collect()
    }
}

fn detached<L: Landscape>(land: &L, graph: &LocalGraph, saddle: Level) -> (usize, usize) {
    let n = land.num_states();
    let mut seen = vec![false; n];
    let (mut comps, mut states) = (0, 0);
    let mut queue = VecDeque::new();
    for s in 0..n as u32 {
        if seen[s as usize] || land.level(s) >= saddle || graph.local(s).is_some() {
            continue;
        }
        comps += 1;
        seen[s as usize] = true;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            states += 1;
            land.for_each_neighbor(v, |u| {
                if !seen[u as usize] && land.level(u) < saddle {
                    seen[u as usize] = true;
                    queue.push_back(u);
                }
            });
        }
    }
    (comps, states)
}
