//! The killing-configuration graph and its time-ordered killing paths.
//!
//! A node records which of the `N` coordinates are still alive. An edge joins
//! `u → v` whenever the dead set of `v` strictly contains the dead set of `u`;
//! edges that kill several coordinates at once model simultaneous killings.
//! The survival of the n-th order statistic is assembled by summing path
//! contributions over every chain from the all-alive root to the nodes with
//! exactly `n` survivors.

use std::fmt;

use crate::error::{FptError, Result};

/// Largest basket size accepted by [`build_gamma`].
pub const MAX_COORDINATES: usize = 16;

/// Alive/dead configuration of `N` coordinates. Bit `i` set means coordinate
/// `i` is alive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GammaNode {
    alive: u32,
    n: u8,
}

impl GammaNode {
    pub fn root(n: usize) -> Self {
        Self {
            alive: full_mask(n),
            n: n as u8,
        }
    }

    pub fn from_alive_mask(alive: u32, n: usize) -> Self {
        Self {
            alive: alive & full_mask(n),
            n: n as u8,
        }
    }

    pub fn len(&self) -> usize {
        usize::from(self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn alive_mask(&self) -> u32 {
        self.alive
    }

    pub fn dead_mask(&self) -> u32 {
        !self.alive & full_mask(self.len())
    }

    pub fn is_alive(&self, coord: usize) -> bool {
        self.alive >> coord & 1 == 1
    }

    pub fn alive_count(&self) -> usize {
        self.alive.count_ones() as usize
    }

    pub fn is_root(&self) -> bool {
        self.alive == full_mask(self.len())
    }

    /// True if `other` is reachable by one edge: its dead set strictly contains ours.
    pub fn precedes(&self, other: &GammaNode) -> bool {
        let (d, e) = (self.dead_mask(), other.dead_mask());
        self.n == other.n && d & e == d && d != e
    }

    /// Coordinate labels, `A` for alive and `D` for dead, coordinate 0 first.
    pub fn label(&self) -> String {
        (0..self.len())
            .map(|i| if self.is_alive(i) { 'A' } else { 'D' })
            .collect()
    }
}

impl fmt::Display for GammaNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// A chain of configurations starting at the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KillPath {
    nodes: Vec<GammaNode>,
}

impl KillPath {
    /// Validates the chain property: root first, dead sets strictly increasing.
    pub fn new(nodes: Vec<GammaNode>) -> Result<Self> {
        let first = nodes
            .first()
            .ok_or_else(|| FptError::domain("KillPath::new", "empty path"))?;
        if !first.is_root() {
            return Err(FptError::domain("KillPath::new", "path must start at the root"));
        }
        if let Some(w) = nodes.windows(2).find(|w| !w[0].precedes(&w[1])) {
            return Err(FptError::domain(
                "KillPath::new",
                format!("{} -> {} is not an edge", w[0], w[1]),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[GammaNode] {
        &self.nodes
    }

    pub fn terminal(&self) -> GammaNode {
        *self.nodes.last().expect("paths are non-empty")
    }

    /// Number of killing events (edges).
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates killed at each step, in time order, as bit masks.
    pub fn kill_steps(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.windows(2).map(|w| w[1].dead_mask() & !w[0].dead_mask())
    }
}

impl fmt::Display for KillPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str("→")?;
            }
            write!(f, "{node}")?;
        }
        Ok(())
    }
}

/// Directed graph of all `2^N` configurations. Edges are generated on demand
/// because their number, `3^N − 2^N`, is large for baskets near the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaGraph {
    n: usize,
}

pub fn build_gamma(n: usize) -> Result<GammaGraph> {
    if n == 0 {
        return Err(FptError::domain("build_gamma", "at least one coordinate required"));
    }
    if n > MAX_COORDINATES {
        return Err(FptError::Size {
            op: "build_gamma",
            size: n,
            max: MAX_COORDINATES,
        });
    }
    Ok(GammaGraph { n })
}

impl GammaGraph {
    pub fn coordinates(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> GammaNode {
        GammaNode::root(self.n)
    }

    pub fn node_count(&self) -> usize {
        1 << self.n
    }

    pub fn edge_count(&self) -> u64 {
        3u64.pow(self.n as u32) - 2u64.pow(self.n as u32)
    }

    pub fn nodes(&self) -> impl Iterator<Item = GammaNode> + '_ {
        (0..(1u32 << self.n))
            .rev()
            .map(move |alive| GammaNode::from_alive_mask(alive, self.n))
    }

    /// Every node whose dead set strictly contains that of `node`.
    pub fn successors(&self, node: GammaNode) -> impl Iterator<Item = GammaNode> {
        let n = self.n;
        let alive = node.alive_mask();
        // iterate the non-empty subsets of the alive set in decreasing order
        let mut sub = alive;
        std::iter::from_fn(move || {
            if sub == 0 {
                return None;
            }
            let killed = sub;
            sub = (sub - 1) & alive;
            Some(GammaNode::from_alive_mask(alive & !killed, n))
        })
    }

    pub fn out_degree(&self, node: GammaNode) -> usize {
        (1usize << node.alive_count()) - 1
    }

    pub fn edges(&self) -> impl Iterator<Item = (GammaNode, GammaNode)> + '_ {
        self.nodes().flat_map(move |u| self.successors(u).map(move |v| (u, v)))
    }

    /// Number of root-to-target chains ending in nodes with `n_alive` survivors,
    /// without materialising them.
    pub fn count_paths(&self, n_alive: usize) -> u128 {
        if n_alive >= self.n {
            return 0;
        }
        let killed = self.n - n_alive;
        binomial_u128(self.n, killed) * ordered_partitions(killed)
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Ordered set partitions of a `k`-set (Fubini numbers).
fn ordered_partitions(k: usize) -> u128 {
    let mut a = vec![1u128; k + 1];
    for m in 1..=k {
        a[m] = (1..=m).map(|j| binomial_u128(m, j) * a[m - j]).sum();
    }
    a[k]
}

/// All chains from the root to the nodes with exactly `n_alive` alive
/// coordinates, ordered lexicographically by their node labels.
pub fn enumerate_paths(graph: &GammaGraph, n_alive: usize) -> Result<Vec<KillPath>> {
    if n_alive >= graph.coordinates() {
        return Err(FptError::domain(
            "enumerate_paths",
            format!("n_alive = {n_alive} must be < N = {}", graph.coordinates()),
        ));
    }
    let mut out = Vec::new();
    let mut stack = vec![graph.root()];
    walk(graph, n_alive, &mut stack, &mut out);
    let mut keyed: Vec<(Vec<String>, KillPath)> = out
        .into_iter()
        .map(|p| (p.nodes.iter().map(GammaNode::label).collect(), p))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}

fn walk(graph: &GammaGraph, n_alive: usize, stack: &mut Vec<GammaNode>, out: &mut Vec<KillPath>) {
    let here = *stack.last().expect("stack holds the root");
    if here.alive_count() == n_alive {
        out.push(KillPath { nodes: stack.clone() });
        return;
    }
    for next in graph.successors(here) {
        if next.alive_count() >= n_alive {
            stack.push(next);
            walk(graph, n_alive, stack, out);
            stack.pop();
        }
    }
}
