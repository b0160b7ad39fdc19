use std::collections::VecDeque;

use super::partition::LocalGraph;

const UNSET: u32 = u32::MAX;

/// Biconnected components (as vertex lists) of the component containing `root`.
fn blocks(graph: &LocalGraph, root: u32) -> Vec<Vec<u32>> {
    let n = graph.len();
    let mut disc = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut parent = vec![UNSET; n];
    let mut clock = 0u32;
    let mut stack: Vec<(u32, usize)> = vec![(root, 0)];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut out = Vec::new();
    disc[root as usize] = clock;
    low[root as usize] = clock;
    clock += 1;
    while let Some(&mut (v, ref mut i)) = stack.last_mut() {
        let adj = graph.adjacent(v);
        if *i < adj.len() {
            let w = adj[*i];
            *i += 1;
            if disc[w as usize] == UNSET {
                parent[w as usize] = v;
                disc[w as usize] = clock;
                low[w as usize] = clock;
                clock += 1;
                edges.push((v, w));
                stack.push((w, 0));
            } else if w != parent[v as usize] && disc[w as usize] < disc[v as usize] {
                low[v as usize] = low[v as usize].min(disc[w as usize]);
                edges.push((v, w));
            }
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                low[p as usize] = low[p as usize].min(low[v as usize]);
                if low[v as usize] >= disc[p as usize] {
                    let mut members = Vec::new();
                    while let Some((a, b)) = edges.pop() {
                        members.push(a);
                        members.push(b);
                        if (a, b) == (p, v) {
                            break;
                        }
                    }
                    members.sort_unstable();
                    members.dedup();
                    out.push(members);
                }
            }
        }
    }
    out
}

/// Marks every vertex lying on some simple path from `s` to `t`.
pub fn on_simple_paths(graph: &LocalGraph, s: u32, t: u32) -> Vec<bool> {
    let n = graph.len();
    let mut mark = vec![false; n];
    if s == t {
        mark[s as usize] = true;
        return mark;
    }
    let bl = blocks(graph, s);
    let mut member_of: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (b, vs) in bl.iter().enumerate() {
        for &v in vs {
            member_of[v as usize].push(b as u32);
        }
    }
    if member_of[t as usize].is_empty() {
        return mark;
    }
    // block-cut tree: blocks are nodes 0..B, cut vertex v is node B + v
    let nb = bl.len();
    let node = |v: u32| -> usize {
        if member_of[v as usize].len() > 1 {
            nb + v as usize
        } else {
            member_of[v as usize][0] as usize
        }
    };
    let total = nb + n;
    let mut prev = vec![usize::MAX; total];
    let (src, dst) = (node(s), node(t));
    prev[src] = src;
    let mut queue = VecDeque::from([src]);
    while let Some(x) = queue.pop_front() {
        if x == dst {
            break;
        }
        let next: Vec<usize> = if x < nb {
            bl[x]
                .iter()
                .filter(|&&v| member_of[v as usize].len() > 1)
                .map(|&v| nb + v as usize)
                .collect()
        } else {
            member_of[x - nb].iter().map(|&b| b as usize).collect()
        };
        for y in next {
            if prev[y] == usize::MAX {
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    let mut x = dst;
    loop {
        if x < nb {
            for &v in &bl[x] {
                mark[v as usize] = true;
            }
        } else {
            mark[x - nb] = true;
        }
        if x == src {
            break;
        }
        x = prev[x];
    }
    mark
}

#[cfg(test)]
mod tests {
    use super::super::{ExplicitGraph, LocalGraph};
    use super::*;

    #[test]
    fn dead_end_branch_is_excluded() {
        // 0 - 1 - 2 with a pendant 3 on 1 and a cycle 1 - 4 - 5 - 2
        let mut g = ExplicitGraph::new(vec![0; 6], 1);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(1, 3);
        g.add_edge(1, 4);
        g.add_edge(4, 5);
        g.add_edge(5, 2);
        let lg = LocalGraph::whole(&g);
        let m = on_simple_paths(&lg, 0, 2);
        assert_eq!(m, vec![true, true, true, false, true, true]);
    }

    #[test]
    fn path_graph_marks_everything_between() {
        let g = ExplicitGraph::path(vec![0; 5], 1);
        let lg = LocalGraph::whole(&g);
        assert_eq!(on_simple_paths(&lg, 1, 3), vec![false, true, true, true, false]);
    }
}
