//! Exhaustive energy landscapes: communication heights, stability levels,
//! valleys, wells and gates.

mod blocks;
mod gate;
mod oracle;
mod partition;
mod space;
mod sweep;
mod unionfind;

pub use blocks::on_simple_paths;
pub use gate::{essential_flags, extensions, gate_analysis, DropletShape, Essential, GateReport, ProtocriticalSites};
pub use oracle::{escape_height, minimax_from, minimax_height};
pub use partition::{LocalGraph, Partition, Region};
pub use space::{PlusMode, StateSpace};
pub use sweep::{analyze, sublevel_path, sweep, Analysis, LevelOrder, Minimax, Sweep};
pub use unionfind::DisjointSets;

/// Energy in integer units of `1/denom`.
pub type Level = i32;

/// Sentinel for +∞ (ground states, unreachable targets).
pub const INFINITE: Level = Level::MAX;

/// An undirected graph on states `0..num_states` with an energy per state.
pub trait Landscape: Sync {
    fn num_states(&self) -> usize;
    fn level(&self, s: u32) -> Level;
    fn denom(&self) -> i64;
    fn for_each_neighbor(&self, s: u32, f: impl FnMut(u32));

    fn energy(&self, s: u32) -> f64 {
        self.level(s) as f64 / self.denom() as f64
    }

    fn neighbors(&self, s: u32) -> Vec<u32> {
        let mut out = Vec::new();
        self.for_each_neighbor(s, |t| out.push(t));
        out
    }
}

/// Landscape given by explicit adjacency lists.
#[derive(Clone, Debug, Default)]
pub struct ExplicitGraph {
    levels: Vec<Level>,
    denom: i64,
    adj: Vec<Vec<u32>>,
}

impl ExplicitGraph {
    pub fn new(levels: Vec<Level>, denom: i64) -> Self {
        let n = levels.len();
        Self { levels, denom, adj: vec![Vec::new(); n] }
    }

    /// A path `0 - 1 - ... - n-1`.
    pub fn path(levels: Vec<Level>, denom: i64) -> Self {
        let mut g = Self::new(levels, denom);
        for i in 1..g.levels.len() as u32 {
            g.add_edge(i - 1, i);
        }
        g
    }

    pub fn add_edge(&mut self, a: u32, b: u32) {
        if a == b || self.adj[a as usize].contains(&b) {
            return;
        }
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
    }
}

impl Landscape for ExplicitGraph {
    fn num_states(&self) -> usize {
        self.levels.len()
    }

    fn level(&self, s: u32) -> Level {
        self.levels[s as usize]
    }

    fn denom(&self) -> i64 {
        self.denom
    }

    fn for_each_neighbor(&self, s: u32, mut f: impl FnMut(u32)) {
        for &t in &self.adj[s as usize] {
            f(t);
        }
    }
}
