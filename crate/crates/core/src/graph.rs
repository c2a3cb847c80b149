//! Communication topologies and the path sample space.
//!
//! A [`PathSet`] holds every simple path of `tau` vertices of a [`Network`],
//! stored once per reversal pair. On dense graphs the count grows quickly, so
//! enumeration accepts a cap and keeps a seeded subsample that still touches
//! every node.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Built-in topology families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Topology {
    Complete,
    Ring,
    Star,
    RandomConnected { edge_prob: f64, seed: u64 },
}

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network from an edge list. Edges are normalized to `(min, max)`
    /// and sorted; self-loops and duplicates are rejected. Connectivity is not
    /// required here, see [`Network::is_connected`].
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidSize(n_nodes));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i == j || i >= n_nodes || j >= n_nodes {
                return Err(Error::InvalidEdge(i, j, n_nodes));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidEdge(i, j, n_nodes));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut adjacency = vec![Vec::new(); n_nodes];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        Ok(Network {
            n_nodes,
            edges,
            adjacency,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n_nodes && self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n_nodes * (self.n_nodes - 1) / 2
    }

    /// True iff the graph has a single connected component.
    pub fn is_connected(&self) -> bool {
        component_labels(self.n_nodes, &self.adjacency).1 == 1
    }
}

/// Labels connected components; returns `(label per node, component count)`.
fn component_labels(n: usize, adjacency: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if label[w] == usize::MAX {
                    label[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Builds one of the built-in topologies on `n` nodes.
pub fn make_topology(kind: Topology, n: usize) -> Result<Network> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    let mut edges = Vec::new();
    match kind {
        Topology::Complete => {
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j));
                }
            }
        }
        Topology::Ring => {
            for i in 0..n {
                let j = (i + 1) % n;
                let e = (i.min(j), i.max(j));
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        Topology::Star => {
            for j in 1..n {
                edges.push((0, j));
            }
        }
        Topology::RandomConnected { edge_prob, seed } => {
            if !(edge_prob > 0.0 && edge_prob <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge probability {edge_prob} outside (0, 1]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < edge_prob {
                        edges.push((i, j));
                    }
                }
            }
            // Join components with random bridges until connected.
            loop {
                let net = Network::from_edges(n, &edges)?;
                let (label, count) = component_labels(n, &net.adjacency);
                if count == 1 {
                    return Ok(net);
                }
                let pick = |c: usize, rng: &mut ChaCha8Rng| {
                    let members: Vec<usize> = (0..n).filter(|&v| label[v] == c).collect();
                    members[rng.random_range(0..members.len())]
                };
                let a = pick(0, &mut rng);
                let b = pick(1, &mut rng);
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    Network::from_edges(n, &edges)
}

/// The family of simple `tau`-vertex paths of a network, one per reversal pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    n_nodes: usize,
    tau: usize,
    paths: Vec<Vec<usize>>,
}

impl PathSet {
    /// Wraps an explicit list of paths after checking them against `g`.
    pub fn from_paths(g: &Network, tau: usize, paths: Vec<Vec<usize>>) -> Result<Self> {
        check_tau(tau, g.n_nodes())?;
        let mut keys = BTreeSet::new();
        let mut out = Vec::with_capacity(paths.len());
        for p in paths {
            if p.len() != tau {
                return Err(Error::DimensionMismatch {
                    expected: tau,
                    got: p.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for &v in &p {
                if v >= g.n_nodes() || !seen.insert(v) {
                    return Err(Error::InvalidArgument(format!("{p:?} is not a simple path")));
                }
            }
            if p.windows(2).any(|w| !g.has_edge(w[0], w[1])) {
                return Err(Error::InvalidArgument(format!("{p:?} leaves the network")));
            }
            let key = canonical_key(&p);
            if !keys.insert(key.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate path {p:?}")));
            }
            out.push(key);
        }
        let set = PathSet {
            n_nodes: g.n_nodes(),
            tau,
            paths: out,
        };
        set.check_coverage()?;
        Ok(set)
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn path(&self, idx: usize) -> &[usize] {
        &self.paths[idx]
    }

    /// True when every consecutive pair of every path is an edge of `g`.
    pub fn lies_in(&self, g: &Network) -> bool {
        g.n_nodes() == self.n_nodes
            && self
                .paths
                .iter()
                .all(|p| p.windows(2).all(|w| g.has_edge(w[0], w[1])))
    }

    fn check_coverage(&self) -> Result<()> {
        let mut covered = vec![false; self.n_nodes];
        for p in &self.paths {
            for &v in p {
                covered[v] = true;
            }
        }
        match covered.iter().position(|&c| !c) {
            Some(node) => Err(Error::UncoveredNode {
                node,
                tau: self.tau,
            }),
            None => Ok(()),
        }
    }
}

/// Lexicographically smaller of a path and its reversal.
pub fn canonical_key(path: &[usize]) -> Vec<usize> {
    let rev: Vec<usize> = path.iter().rev().copied().collect();
    if rev.as_slice() < path {
        rev
    } else {
        path.to_vec()
    }
}

fn check_tau(tau: usize, n: usize) -> Result<()> {
    if tau < 2 || tau > n {
        return Err(Error::InvalidTau { tau, n });
    }
    Ok(())
}

/// Enumerates all simple `tau`-vertex paths of `g` up to reversal by
/// depth-first search, in lexicographic order.
///
/// With `cap = Some(c)` and more than `c` paths, a seeded subsample of size `c`
/// is kept: a greedy pass first picks, for each still-uncovered node, a random
/// path through it, then the remainder is drawn uniformly. `c >= N - 1`
/// always suffices because every greedy pick covers at least one new node and
/// the first covers `tau >= 2`.
pub fn enumerate_paths(g: &Network, tau: usize, cap: Option<usize>, seed: u64) -> Result<PathSet> {
    let n = g.n_nodes();
    check_tau(tau, n)?;
    if let Some(c) = cap {
        if c < n - 1 {
            return Err(Error::InfeasibleCap {
                cap: c,
                n,
                min: n - 1,
            });
        }
    }
    let mut paths = Vec::new();
    let mut stack = Vec::with_capacity(tau);
    let mut on_path = vec![false; n];
    for start in 0..n {
        stack.push(start);
        on_path[start] = true;
        extend_paths(g, tau, &mut stack, &mut on_path, &mut paths);
        on_path[start] = false;
        stack.pop();
    }
    paths.sort();
    let set = PathSet {
        n_nodes: n,
        tau,
        paths,
    };
    set.check_coverage()?;
    match cap {
        Some(c) if set.len() > c => Ok(subsample(set, c, seed)),
        _ => Ok(set),
    }
}

fn extend_paths(
    g: &Network,
    tau: usize,
    stack: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    if stack.len() == tau {
        // keep the canonical orientation only
        if stack[0] < stack[tau - 1] {
            out.push(stack.clone());
        }
        return;
    }
    let last = *stack.last().expect("path is never empty here");
    for &w in g.neighbors(last) {
        if !on_path[w] {
            on_path[w] = true;
            stack.push(w);
            extend_paths(g, tau, stack, on_path, out);
            stack.pop();
            on_path[w] = false;
        }
    }
}

fn subsample(set: PathSet, cap: usize, seed: u64) -> PathSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = set.n_nodes;
    let mut chosen = vec![false; set.len()];
    let mut covered = vec![false; n];
    let mut n_chosen = 0;
    for node in 0..n {
        if covered[node] {
            continue;
        }
        let through: Vec<usize> = (0..set.len())
            .filter(|&i| !chosen[i] && set.paths[i].contains(&node))
            .collect();
        let pick = through[rng.random_range(0..through.len())];
        chosen[pick] = true;
        n_chosen += 1;
        for &v in &set.paths[pick] {
            covered[v] = true;
        }
    }
    let mut rest: Vec<usize> = (0..set.len()).filter(|&i| !chosen[i]).collect();
    rest.shuffle(&mut rng);
    for &i in rest.iter().take(cap - n_chosen) {
        chosen[i] = true;
    }
    let paths = set
        .paths
        .into_iter()
        .zip(chosen)
        .filter_map(|(p, c)| c.then_some(p))
        .collect();
    PathSet {
        n_nodes: n,
        tau: set.tau,
        paths,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(g: &Network) -> Vec<(usize, usize)> {
        g.edges().to_vec()
    }

    #[test]
    fn builtin_topologies() {
        let k3 = make_topology(Topology::Complete, 3).unwrap();
        assert_eq!(edge_set(&k3), vec![(0, 1), (0, 2), (1, 2)]);
        let ring = make_topology(Topology::Ring, 4).unwrap();
        assert_eq!(edge_set(&ring), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        let star = make_topology(Topology::Star, 4).unwrap();
        assert_eq!(edge_set(&star), vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(
            make_topology(Topology::Complete, 1),
            Err(Error::InvalidSize(1))
        );
    }

    #[test]
    fn random_topology_is_connected_and_seeded() {
        for seed in 0..20 {
            let kind = Topology::RandomConnected {
                edge_prob: 0.1,
                seed,
            };
            let a = make_topology(kind, 12).unwrap();
            assert!(a.is_connected());
            assert_eq!(a, make_topology(kind, 12).unwrap());
        }
        assert!(make_topology(
            Topology::RandomConnected {
                edge_prob: 0.0,
                seed: 1
            },
            5
        )
        .is_err());
    }

    #[test]
    fn connectivity() {
        assert!(make_topology(Topology::Complete, 3).unwrap().is_connected());
        assert!(!Network::from_edges(2, &[]).unwrap().is_connected());
        let star_minus = Network::from_edges(5, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(!star_minus.is_connected());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Network::from_edges(3, &[(1, 1)]).is_err());
        assert!(Network::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Network::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn paths_on_small_graphs() {
        let k3 = make_topology(Topology::Complete, 3).unwrap();
        let p2 = enumerate_paths(&k3, 2, None, 0).unwrap();
        assert_eq!(p2.paths(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);
        let p3 = enumerate_paths(&k3, 3, None, 0).unwrap();
        assert_eq!(p3.paths(), &[vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2]]);

        let c4 = make_topology(Topology::Ring, 4).unwrap();
        let p = enumerate_paths(&c4, 3, None, 0).unwrap();
        assert_eq!(p.len(), 4);
        let mut centers: Vec<usize> = p.paths().iter().map(|q| q[1]).collect();
        centers.sort();
        assert_eq!(centers, vec![0, 1, 2, 3]);
    }

    #[test]
    fn tau_and_cap_errors() {
        let k4 = make_topology(Topology::Complete, 4).unwrap();
        assert_eq!(
            enumerate_paths(&k4, 1, None, 0),
            Err(Error::InvalidTau { tau: 1, n: 4 })
        );
        assert_eq!(
            enumerate_paths(&k4, 5, None, 0),
            Err(Error::InvalidTau { tau: 5, n: 4 })
        );
        assert!(matches!(
            enumerate_paths(&k4, 2, Some(2), 0),
            Err(Error::InfeasibleCap { .. })
        ));
        let split = Network::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(enumerate_paths(&split, 3, None, 0).is_err());
    }

    #[test]
    fn capped_subsample_covers_and_is_deterministic() {
        let k7 = make_topology(Topology::Complete, 7).unwrap();
        let full = enumerate_paths(&k7, 3, None, 0).unwrap();
        for cap in [6, 10, 40] {
            let a = enumerate_paths(&k7, 3, Some(cap), 11).unwrap();
            let b = enumerate_paths(&k7, 3, Some(cap), 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), cap);
            assert!(a.lies_in(&k7));
            assert!(a.paths().iter().all(|p| full.paths().contains(p)));
        }
    }

    #[test]
    fn from_paths_validates() {
        let c4 = make_topology(Topology::Ring, 4).unwrap();
        assert!(PathSet::from_paths(&c4, 2, vec![vec![0, 1], vec![2, 3]]).is_ok());
        assert!(PathSet::from_paths(&c4, 2, vec![vec![0, 2], vec![1, 3]]).is_err());
        assert!(PathSet::from_paths(&c4, 2, vec![vec![0, 1], vec![1, 0], vec![2, 3]]).is_err());
        assert!(PathSet::from_paths(&c4, 2, vec![vec![0, 1]]).is_err());
    }
}
