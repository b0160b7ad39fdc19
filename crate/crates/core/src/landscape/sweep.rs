use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::unionfind::DisjointSets;
use super::{Landscape, Level, INFINITE};
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

/// States sorted by `(level, index)`, grouped by level.
pub struct LevelOrder {
    order: Vec<u32>,
    starts: Vec<usize>,
}

impl LevelOrder {
    pub fn new<L: Landscape>(land: &L) -> Self {
        let n = land.num_states();
        let (lo, hi) = (0..n as u32)
            .map(|s| land.level(s))
            .fold((Level::MAX, Level::MIN), |(lo, hi), l| (lo.min(l), hi.max(l)));
        let mut order: Vec<u32>;
        if n > 0 && ((hi as i64 - lo as i64) as usize) < (1 << 24).max(2 * n) {
            let span = (hi as i64 - lo as i64) as usize + 1;
            let mut count = vec![0usize; span + 1];
            for s in 0..n as u32 {
                count[(land.level(s) as i64 - lo as i64) as usize + 1] += 1;
            }
            for i in 1..=span {
                count[i] += count[i - 1];
            }
            order = vec![0; n];
            for s in 0..n as u32 {
                let slot = &mut count[(land.level(s) as i64 - lo as i64) as usize];
                order[*slot] = s;
                *slot += 1;
            }
        } else {
            order = (0..n as u32).collect();
            order.sort_unstable_by_key(|&s| (land.level(s), s));
        }
        let mut starts = Vec::new();
        for (k, &s) in order.iter().enumerate() {
            if k == 0 || land.level(order[k - 1]) != land.level(s) {
                starts.push(k);
            }
        }
        starts.push(n);
        Self { order, starts }
    }

    /// Iterates `(level, states)` in ascending level.
    pub fn groups<'a, L: Landscape>(&'a self, land: &'a L) -> impl Iterator<Item = (Level, &'a [u32])> + 'a {
        self.starts.windows(2).map(move |w| {
            let g = &self.order[w[0]..w[1]];
            (land.level(g[0]), g)
        })
    }

    pub fn states(&self) -> &[u32] {
        &self.order
    }
}

/// Disjoint circular lists keyed by their union-find root.
struct Lists {
    next: Vec<u32>,
    head: Vec<u32>,
}

impl Lists {
    fn new(n: usize) -> Self {
        Self { next: vec![NONE; n], head: vec![NONE; n] }
    }

    #[inline]
    fn singleton(&mut self, v: u32) {
        self.next[v as usize] = v;
        self.head[v as usize] = v;
    }

    #[inline]
    fn take(&mut self, root: u32) -> u32 {
        std::mem::replace(&mut self.head[root as usize], NONE)
    }

    #[inline]
    fn join(&mut self, a: u32, b: u32) -> u32 {
        if a == NONE {
            return b;
        }
        if b != NONE {
            self.next.swap(a as usize, b as usize);
        }
        a
    }

    #[inline]
    fn drain(&mut self, h: u32, mut f: impl FnMut(u32)) {
        if h == NONE {
            return;
        }
        let mut v = h;
        loop {
            f(v);
            v = self.next[v as usize];
            if v == h {
                break;
            }
        }
    }
}

/// Output of one energy-ascending sweep.
pub struct Sweep {
    /// `V_η`, with [`INFINITE`] for ground states of their component.
    pub stability: Vec<Level>,
    /// `Φ(η, T_k)` for every target set `T_k`, [`INFINITE`] if unreachable.
    pub heights: Vec<Vec<Level>>,
    /// `Φ(T_0, T_1)` when at least two targets were given.
    pub merge_level: Option<Level>,
}

/// Computes all stability levels and the communication heights of every state
/// to each target set in a single union-find sweep.
pub fn sweep<L: Landscape>(land: &L, order: &LevelOrder, targets: &[&[u32]]) -> Sweep {
    assert!(targets.len() <= 8);
    let n = land.num_states();
    let k = targets.len();
    let mut mask = vec![0u8; n];
    for (t, set) in targets.iter().enumerate() {
        for &s in set.iter() {
            mask[s as usize] |= 1 << t;
        }
    }
    let mut dsu = DisjointSets::new(n);
    let mut cmin = vec![0 as Level; n];
    let mut stability = vec![INFINITE; n];
    let mut wait = Lists::new(n);
    let mut heights = vec![vec![INFINITE; n]; k];
    let mut pending: Vec<Lists> = (0..k).map(|_| Lists::new(n)).collect();
    let mut flags = vec![0u8; n];
    let mut merge_level = None;

    for (level, group) in order.groups(land) {
        for &v in group {
            cmin[v as usize] = level;
            wait.singleton(v);
            let m = mask[v as usize];
            flags[v as usize] = m;
            for t in 0..k {
                if m & (1 << t) != 0 {
                    heights[t][v as usize] = level;
                } else {
                    pending[t].singleton(v);
                }
            }
            if m & 3 == 3 && merge_level.is_none() {
                merge_level = Some(level);
            }
        }
        for &v in group {
            land.for_each_neighbor(v, |u| {
                if land.level(u) > level {
                    return;
                }
                let (ra, rb) = (dsu.find(v), dsu.find(u));
                if ra == rb {
                    return;
                }
                let (fa, fb) = (flags[ra as usize], flags[rb as usize]);
                if merge_level.is_none() && k >= 2 && ((fa & 1 != 0 && fb & 2 != 0) || (fa & 2 != 0 && fb & 1 != 0)) {
                    merge_level = Some(level);
                }
                let (r, _) = dsu.link(ra, rb);

                let (ma, mb) = (cmin[ra as usize], cmin[rb as usize]);
                let (ha, hb) = (wait.take(ra), wait.take(rb));
                let keep = if ma < mb {
                    wait.drain(hb, |w| stability[w as usize] = level - mb);
                    ha
                } else if mb < ma {
                    wait.drain(ha, |w| stability[w as usize] = level - ma);
                    hb
                } else {
                    wait.join(ha, hb)
                };
                wait.head[r as usize] = keep;
                cmin[r as usize] = ma.min(mb);

                for t in 0..k {
                    let bit = 1u8 << t;
                    let (pa, pb) = (pending[t].take(ra), pending[t].take(rb));
                    let h = &mut heights[t];
                    let keep = match (fa & bit != 0, fb & bit != 0) {
                        (true, false) => {
                            pending[t].drain(pb, |w| h[w as usize] = level);
                            NONE
                        }
                        (false, true) => {
                            pending[t].drain(pa, |w| h[w as usize] = level);
                            NONE
                        }
                        (false, false) => pending[t].join(pa, pb),
                        (true, true) => NONE,
                    };
                    pending[t].head[r as usize] = keep;
                }
                flags[r as usize] = fa | fb;
            });
        }
    }
    Sweep { stability, heights, merge_level }
}

/// Repeated pairwise communication-height queries with early stopping.
pub struct Minimax {
    order: LevelOrder,
    dsu: DisjointSets,
    flags: Vec<u8>,
}

impl Minimax {
    pub fn new<L: Landscape>(land: &L) -> Self {
        let n = land.num_states();
        Self { order: LevelOrder::new(land), dsu: DisjointSets::new(n), flags: vec![0; n] }
    }

    pub fn from_order(order: LevelOrder, n: usize) -> Self {
        Self { order, dsu: DisjointSets::new(n), flags: vec![0; n] }
    }

    pub fn order(&self) -> &LevelOrder {
        &self.order
    }

    /// `Φ(A, B)`, or `None` if no path joins the sets.
    pub fn height<L: Landscape>(&mut self, land: &L, a: &[u32], b: &[u32]) -> Result<Option<Level>> {
        if a.is_empty() {
            return Err(Error::EmptySet("A"));
        }
        if b.is_empty() {
            return Err(Error::EmptySet("B"));
        }
        self.dsu.reset();
        self.flags.fill(0);
        let mut mask = FxHashMap::default();
        for &s in a {
            *mask.entry(s).or_insert(0u8) |= 1;
        }
        for &s in b {
            *mask.entry(s).or_insert(0u8) |= 2;
        }
        let Self { order, dsu, flags } = self;
        for (level, group) in order.groups(land) {
            for &v in group {
                let m = mask.get(&v).copied().unwrap_or(0);
                if m == 3 {
                    return Ok(Some(level));
                }
                flags[v as usize] = m;
            }
            let mut done = false;
            for &v in group {
                land.for_each_neighbor(v, |u| {
                    if done || land.level(u) > level {
                        return;
                    }
                    let (ra, rb) = (dsu.find(v), dsu.find(u));
                    if ra != rb {
                        let f = flags[ra as usize] | flags[rb as usize];
                        let (r, _) = dsu.link(ra, rb);
                        flags[r as usize] = f;
                        done = f == 3;
                    }
                });
                if done {
                    return Ok(Some(level));
                }
            }
        }
        Ok(None)
    }

    /// `Φ(A, B)` together with a shortest path from `A` to `B` inside `{H ≤ Φ}`.
    pub fn height_with_witness<L: Landscape>(
        &mut self,
        land: &L,
        a: &[u32],
        b: &[u32],
    ) -> Result<Option<(Level, Vec<u32>)>> {
        let Some(level) = self.height(land, a, b)? else {
            return Ok(None);
        };
        Ok(Some((level, sublevel_path(land, a, b, level).expect("path exists below the height"))))
    }
}

/// Shortest path from `a` to `b` through states with level at most `cap`.
pub fn sublevel_path<L: Landscape>(land: &L, a: &[u32], b: &[u32], cap: Level) -> Option<Vec<u32>> {
    let targets: rustc_hash::FxHashSet<u32> = b.iter().copied().collect();
    let mut parent: FxHashMap<u32, u32> = FxHashMap::default();
    let mut queue = VecDeque::new();
    for &s in a {
        if land.level(s) <= cap && !parent.contains_key(&s) {
            parent.insert(s, s);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        if targets.contains(&v) {
            let mut path = vec![v];
            let mut x = v;
            while parent[&x] != x {
                x = parent[&x];
                path.push(x);
            }
            path.reverse();
            return Some(path);
        }
        land.for_each_neighbor(v, |u| {
            if land.level(u) <= cap && !parent.contains_key(&u) {
                parent.insert(u, v);
                queue.push_back(u);
            }
        });
    }
    None
}

/// Global landscape quantities relative to the pair (□, ⊞).
pub struct Analysis {
    pub empty: u32,
    pub plus: u32,
    pub stability: Vec<Level>,
    pub height_to_empty: Vec<Level>,
    pub height_to_plus: Vec<Level>,
    /// `Φ(□, ⊞)` as an absolute level.
    pub saddle: Level,
    pub ground: Level,
    pub stable: Vec<u32>,
    pub metastable: Vec<u32>,
    /// Γ, the stability level of `X_meta`; `None` when every state is stable.
    pub gamma: Option<Level>,
    /// V* over states other than □ and ⊞, with an attaining state.
    pub v_star: Option<(Level, u32)>,
}

impl Analysis {
    /// Γ* = Φ(□, ⊞) − H(□) as a level difference.
    pub fn gamma_star<L: Landscape>(&self, land: &L) -> Level {
        self.saddle - land.level(self.empty)
    }

    /// `Φ(η, {□, ⊞})`.
    pub fn height_to_pair(&self, s: u32) -> Level {
        self.height_to_empty[s as usize].min(self.height_to_plus[s as usize])
    }
}

pub fn analyze<L: Landscape>(land: &L, order: &LevelOrder, empty: u32, plus: u32) -> Result<Analysis> {
    if empty == plus {
        return Err(Error::Degenerate("□ and ⊞ coincide".into()));
    }
    let sw = sweep(land, order, &[&[empty], &[plus]]);
    let saddle = sw
        .merge_level
        .ok_or_else(|| Error::Degenerate("□ and ⊞ are not connected".into()))?;
    let n = land.num_states() as u32;
    let ground = (0..n).map(|s| land.level(s)).min().unwrap_or(0);
    let stable: Vec<u32> = (0..n).filter(|&s| land.level(s) == ground).collect();
    let gamma = (0..n)
        .filter(|&s| land.level(s) != ground)
        .map(|s| sw.stability[s as usize])
        .max();
    let metastable = match gamma {
        Some(g) => (0..n)
            .filter(|&s| land.level(s) != ground && sw.stability[s as usize] == g)
            .collect(),
        None => Vec::new(),
    };
    let v_star = (0..n)
        .filter(|&s| s != empty && s != plus)
        .map(|s| (sw.stability[s as usize], s))
        .fold(None, |best: Option<(Level, u32)>, (v, s)| match best {
            Some((bv, _)) if bv >= v => best,
            _ => Some((v, s)),
        });
    let mut heights = sw.heights.into_iter();
    Ok(Analysis {
        empty,
        plus,
        stability: sw.stability,
        height_to_empty: heights.next().unwrap(),
        height_to_plus: heights.next().unwrap(),
        saddle,
        ground,
        stable,
        metastable,
        gamma,
        v_star,
    })
}

#[cfg(test)]
mod tests {
    use super::super::oracle::minimax_height;
    use super::super::ExplicitGraph;
    use super::*;

    fn double_well() -> ExplicitGraph {
        // 0 -- 1 -- 2 -- 3 -- 4 with a side branch 5 off 1
        let mut g = ExplicitGraph::new(vec![0, 3, 1, 4, -1, 2], 1);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5)] {
            g.add_edge(a, b);
        }
        g
    }

    #[test]
    fn stability_levels_on_double_well() {
        let g = double_well();
        let order = LevelOrder::new(&g);
        let sw = sweep(&g, &order, &[&[0], &[4]]);
        assert_eq!(sw.stability, vec![4, 0, 2, 0, INFINITE, 1]);
        assert_eq!(sw.heights[0], vec![0, 3, 3, 4, 4, 3]);
        assert_eq!(sw.heights[1], vec![4, 4, 4, 4, -1, 4]);
        assert_eq!(sw.merge_level, Some(4));
    }

    #[test]
    fn pair_queries_agree_with_oracle() {
        let g = double_well();
        let mut mm = Minimax::new(&g);
        for a in 0..6u32 {
            for b in 0..6u32 {
                let h = mm.height(&g, &[a], &[b]).unwrap();
                assert_eq!(h, minimax_height(&g, &[a], &[b]));
            }
        }
        let (h, path) = mm.height_with_witness(&g, &[0], &[4]).unwrap().unwrap();
        assert_eq!(h, 4);
        assert_eq!(path, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn degenerate_single_state() {
        let g = double_well();
        let mut mm = Minimax::new(&g);
        assert_eq!(mm.height(&g, &[3], &[3]).unwrap(), Some(4));
        assert!(mm.height(&g, &[], &[3]).is_err());
    }

    #[test]
    fn analysis_of_double_well() {
        let g = double_well();
        let order = LevelOrder::new(&g);
        let a = analyze(&g, &order, 0, 4).unwrap();
        assert_eq!(a.saddle, 4);
        assert_eq!(a.stable, vec![4]);
        assert_eq!(a.gamma, Some(4));
        assert_eq!(a.metastable, vec![0]);
        assert_eq!(a.v_star, Some((2, 2)));
    }
}
