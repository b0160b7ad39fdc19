use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use super::{Landscape, Level, INFINITE};

/// Bottleneck distances from `sources`: the least possible maximum level over
/// paths from the set to each state. Label-setting search on a binary heap.
pub fn minimax_from<L: Landscape>(land: &L, sources: &[u32]) -> Vec<Level> {
    let n = land.num_states();
    let mut dist = vec![INFINITE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        let l = land.level(s);
        if l < dist[s as usize] {
            dist[s as usize] = l;
            heap.push(Reverse((l, s)));
        }
    }
    while let Some(Reverse((d, v))) = heap.pop() {
        if done[v as usize] {
            continue;
        }
        done[v as usize] = true;
        land.for_each_neighbor(v, |u| {
            let nd = d.max(land.level(u));
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse((nd, u)));
            }
        });
    }
    dist
}

/// `Φ(A, B)` by the bottleneck search, `None` if disconnected.
pub fn minimax_height<L: Landscape>(land: &L, a: &[u32], b: &[u32]) -> Option<Level> {
    let dist = minimax_from(land, a);
    b.iter()
        .map(|&s| dist[s as usize])
        .min()
        .filter(|&d| d != INFINITE)
}

/// `Φ(s, {ξ : H(ξ) < H(s)})`, searching outward from `s` until the first
/// strictly lower state is settled. `None` when `s` is a ground state.
pub fn escape_height<L: Landscape>(land: &L, s: u32) -> Option<Level> {
    let base = land.level(s);
    let mut dist: FxHashMap<u32, Level> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    dist.insert(s, base);
    heap.push(Reverse((base, s)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if dist.get(&v).is_some_and(|&x| x < d) {
            continue;
        }
        if land.level(v) < base {
            return Some(d);
        }
        land.for_each_neighbor(v, |u| {
            let nd = d.max(land.level(u));
            if dist.get(&u).is_none_or(|&x| nd < x) {
                dist.insert(u, nd);
                heap.push(Reverse((nd, u)));
            }
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::ExplicitGraph;
    use super::*;

    #[test]
    fn escape_from_valley_floor() {
        let g = ExplicitGraph::path(vec![0, 3, 1, 4, -1], 1);
        assert_eq!(escape_height(&g, 0), Some(4));
        assert_eq!(escape_height(&g, 2), Some(3));
        assert_eq!(escape_height(&g, 1), Some(3));
        assert_eq!(escape_height(&g, 4), None);
        let d = minimax_from(&g, &[2]);
        assert_eq!(d, vec![3, 3, 1, 4, 4]);
    }
}
