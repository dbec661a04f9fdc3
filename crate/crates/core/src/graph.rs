//! Plant layout: a strongly connected directed graph whose edges come in
//! reverse pairs, with hub nodes and per-edge capacity.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

pub type NodeId = u32;
pub type EdgeId = usize;

/// Distances closer than this are treated as equal when breaking ties.
pub const DIST_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub capacity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub id: NodeId,
    #[serde(default)]
    pub hub: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSegment {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub capacity: u8,
}

/// Graph section of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGraph {
    pub nodes: Vec<RawNode>,
    pub segments: Vec<RawSegment>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph is not strongly connected: node {0} cannot reach every other node")]
    NotStronglyConnected(NodeId),
    #[error("segment ({0},{1}) references an unknown node")]
    DanglingEdgeEndpoint(NodeId, NodeId),
    #[error("segment ({0},{1}) has capacity {2}, expected 1 or 2")]
    BadCapacity(NodeId, NodeId, u8),
    #[error("segment ({0},{1}) has non-positive length {2}")]
    NonPositiveLength(NodeId, NodeId, f64),
    #[error("node {0} is listed twice")]
    DuplicateNode(NodeId),
    #[error("segment ({0},{0}) is a self-loop")]
    SelfLoop(NodeId),
    #[error("segment ({0},{1}) is listed twice or disagrees with its reverse")]
    ConflictingSegment(NodeId, NodeId),
    #[error("edge ({0},{1}) has no reverse edge")]
    MissingReverse(NodeId, NodeId),
    #[error("graph has no nodes")]
    Empty,
}

/// Simple path given by its node sequence. A single node is the empty path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<NodeId>,
    pub length: f64,
}

impl Path {
    pub fn empty(at: NodeId) -> Self {
        Path {
            nodes: vec![at],
            length: 0.0,
        }
    }

    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn end(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_simple(&self) -> bool {
        let set: BTreeSet<_> = self.nodes.iter().collect();
        set.len() == self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantGraph {
    nodes: Vec<NodeId>,
    hubs: BTreeSet<NodeId>,
    edges: Vec<Edge>,
    reverse: Vec<EdgeId>,
    index: BTreeMap<(NodeId, NodeId), EdgeId>,
    out: BTreeMap<NodeId, Vec<EdgeId>>,
    inc: BTreeMap<NodeId, Vec<EdgeId>>,
}

impl PlantGraph {
    /// Builds and validates a graph. If no segment in `raw` has its reverse
    /// listed, every segment is taken as undirected and both directions are
    /// created. Otherwise the segments are read as directed edges.
    pub fn from_raw(raw: &RawGraph) -> Result<Self, GraphError> {
        if raw.nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut nodes = Vec::new();
        let mut hubs = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for n in &raw.nodes {
            if !seen.insert(n.id) {
                return Err(GraphError::DuplicateNode(n.id));
            }
            nodes.push(n.id);
            if n.hub {
                hubs.insert(n.id);
            }
        }
        nodes.sort_unstable();
        let listed: BTreeSet<(NodeId, NodeId)> = raw.segments.iter().map(|s| (s.from, s.to)).collect();
        let directed = raw
            .segments
            .iter()
            .any(|s| s.from != s.to && listed.contains(&(s.to, s.from)));
        let mut by_pair: BTreeMap<(NodeId, NodeId), Edge> = BTreeMap::new();
        for s in &raw.segments {
            if !seen.contains(&s.from) || !seen.contains(&s.to) {
                return Err(GraphError::DanglingEdgeEndpoint(s.from, s.to));
            }
            if s.from == s.to {
                return Err(GraphError::SelfLoop(s.from));
            }
            if !(s.length > 0.0) || !s.length.is_finite() {
                return Err(GraphError::NonPositiveLength(s.from, s.to, s.length));
            }
            if s.capacity != 1 && s.capacity != 2 {
                return Err(GraphError::BadCapacity(s.from, s.to, s.capacity));
            }
            let mut dirs = vec![(s.from, s.to)];
            if !directed {
                dirs.push((s.to, s.from));
            }
            for (a, b) in dirs {
                let e = Edge {
                    from: a,
                    to: b,
                    length: s.length,
                    capacity: s.capacity,
                };
                if by_pair.insert((a, b), e).is_some() {
                    return Err(GraphError::ConflictingSegment(a, b));
                }
            }
        }
        let edges: Vec<Edge> = by_pair.into_values().collect();
        let g = Self::assemble(nodes, hubs, edges);
        g.check_strongly_connected()?;
        for (i, e) in g.edges.iter().enumerate() {
            let r = g.reverse[i];
            if r == usize::MAX {
                return Err(GraphError::MissingReverse(e.from, e.to));
            }
            let re = &g.edges[r];
            if re.length != e.length || re.capacity != e.capacity {
                return Err(GraphError::ConflictingSegment(e.from, e.to));
            }
        }
        Ok(g)
    }

    fn assemble(nodes: Vec<NodeId>, hubs: BTreeSet<NodeId>, edges: Vec<Edge>) -> Self {
        let mut index = BTreeMap::new();
        let mut out: BTreeMap<NodeId, Vec<EdgeId>> = nodes.iter().map(|&n| (n, Vec::new())).collect();
        let mut inc = out.clone();
        for (i, e) in edges.iter().enumerate() {
            index.insert((e.from, e.to), i);
            out.get_mut(&e.from).unwrap().push(i);
            inc.get_mut(&e.to).unwrap().push(i);
        }
        let reverse = edges
            .iter()
            .map(|e| index.get(&(e.to, e.from)).copied().unwrap_or(usize::MAX))
            .collect();
        PlantGraph {
            nodes,
            hubs,
            edges,
            reverse,
            index,
            out,
            inc,
        }
    }

    fn check_strongly_connected(&self) -> Result<(), GraphError> {
        let root = self.nodes[0];
        for forward in [true, false] {
            let mut seen = BTreeSet::from([root]);
            let mut stack = vec![root];
            while let Some(n) = stack.pop() {
                let adj = if forward { &self.out[&n] } else { &self.inc[&n] };
                for &e in adj {
                    let m = if forward { self.edges[e].to } else { self.edges[e].from };
                    if seen.insert(m) {
                        stack.push(m);
                    }
                }
            }
            if let Some(&missing) = self.nodes.iter().find(|n| !seen.contains(n)) {
                return Err(GraphError::NotStronglyConnected(if forward { root } else { missing }));
            }
        }
        Ok(())
    }

    /// Undirected segments, each listed once with `from < to`.
    pub fn to_raw(&self) -> RawGraph {
        RawGraph {
            nodes: self
                .nodes
                .iter()
                .map(|&id| RawNode {
                    id,
                    hub: self.hubs.contains(&id),
                })
                .collect(),
            segments: self
                .edges
                .iter()
                .filter(|e| e.from < e.to)
                .map(|e| RawSegment {
                    from: e.from,
                    to: e.to,
                    length: e.length,
                    capacity: e.capacity,
                })
                .collect(),
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.out.contains_key(&n)
    }

    pub fn hubs(&self) -> &BTreeSet<NodeId> {
        &self.hubs
    }

    pub fn is_hub(&self, n: NodeId) -> bool {
        self.hubs.contains(&n)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn reverse(&self, e: EdgeId) -> EdgeId {
        self.reverse[e]
    }

    pub fn edge_between(&self, from: NodeId, to: NodeId) -> Option<EdgeId> {
        self.index.get(&(from, to)).copied()
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        self.out.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn in_edges(&self, n: NodeId) -> &[EdgeId] {
        self.inc.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edge ids along a node sequence. Panics if two consecutive nodes are
    /// not adjacent.
    pub fn path_edges(&self, p: &Path) -> Vec<EdgeId> {
        p.nodes
            .windows(2)
            .map(|w| self.edge_between(w[0], w[1]).expect("path uses a missing edge"))
            .collect()
    }

    /// Builds a path from a node sequence, checking adjacency.
    pub fn path_from_nodes(&self, nodes: Vec<NodeId>) -> Option<Path> {
        let mut length = 0.0;
        for w in nodes.windows(2) {
            length += self.edges[self.edge_between(w[0], w[1])?].length;
        }
        (!nodes.is_empty()).then_some(Path { nodes, length })
    }

    /// Single-target distances `d(n, dst)` for every node.
    fn distances_to(&self, dst: NodeId) -> BTreeMap<NodeId, f64> {
        let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(dst, 0.0);
        heap.push(HeapItem(0.0, dst));
        while let Some(HeapItem(d, n)) = heap.pop() {
            if d > dist[&n] {
                continue;
            }
            for &e in self.in_edges(n) {
                let m = self.edges[e].from;
                let nd = d + self.edges[e].length;
                if dist.get(&m).map_or(true, |&old| nd < old) {
                    dist.insert(m, nd);
                    heap.push(HeapItem(nd, m));
                }
            }
        }
        dist
    }

    /// Minimum-length path from `src` to `dst`; among equal-length paths the
    /// lexicographically smallest node sequence.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId) -> Path {
        let dist = self.distances_to(dst);
        self.walk_greedy(src, dst, &dist)
    }

    fn walk_greedy(&self, src: NodeId, dst: NodeId, dist: &BTreeMap<NodeId, f64>) -> Path {
        let mut nodes = vec![src];
        let mut cur = src;
        let mut length = 0.0;
        while cur != dst {
            let here = dist[&cur];
            // out edges are sorted by target because edges are sorted by (from, to)
            let step = self
                .out_edges(cur)
                .iter()
                .copied()
                .find(|&e| {
                    let ed = &self.edges[e];
                    dist.get(&ed.to)
                        .is_some_and(|&dt| (dt + ed.length - here).abs() <= DIST_EPS * (1.0 + here.abs()))
                })
                .expect("strong connectivity guarantees a successor on a shortest path");
            length += self.edges[step].length;
            cur = self.edges[step].to;
            nodes.push(cur);
        }
        Path { nodes, length }
    }

    pub fn distance(&self, src: NodeId, dst: NodeId) -> f64 {
        self.distances_to(dst)[&src]
    }

    /// Shortest paths between every ordered pair of `locations`.
    pub fn all_pairs_paths(&self, locations: &BTreeSet<NodeId>) -> PathMap {
        let mut map = PathMap::new();
        for &dst in locations {
            let dist = self.distances_to(dst);
            for &src in locations {
                map.insert((src, dst), self.walk_greedy(src, dst, &dist));
            }
        }
        map
    }

    /// Every simple path from `src` to `dst`, in lexicographic order.
    pub fn simple_paths(&self, src: NodeId, dst: NodeId) -> Vec<Path> {
        let mut out = Vec::new();
        let mut stack = vec![src];
        let mut on = BTreeSet::from([src]);
        self.dfs_paths(dst, &mut stack, &mut on, 0.0, &mut out);
        out
    }

    fn dfs_paths(
        &self,
        dst: NodeId,
        stack: &mut Vec<NodeId>,
        on: &mut BTreeSet<NodeId>,
        len: f64,
        out: &mut Vec<Path>,
    ) {
        let cur = *stack.last().unwrap();
        if cur == dst {
            out.push(Path {
                nodes: stack.clone(),
                length: len,
            });
            return;
        }
        for &e in self.out_edges(cur) {
            let t = self.edges[e].to;
            if on.insert(t) {
                stack.push(t);
                self.dfs_paths(dst, stack, on, len + self.edges[e].length, out);
                stack.pop();
                on.remove(&t);
            }
        }
    }
}

/// Path between each ordered pair of locations.
pub type PathMap = BTreeMap<(NodeId, NodeId), Path>;

#[derive(PartialEq)]
struct HeapItem(f64, NodeId);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Sum of edge lengths along `p`.
pub fn path_length(g: &PlantGraph, p: &Path) -> f64 {
    g.path_edges(p).iter().map(|&e| g.edge(e).length).sum()
}
