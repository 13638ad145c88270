//! Weighted undirected graphs and shortest-path machinery.
//!
//! Graphs are immutable after construction: parallel edges are merged by
//! summing weights, self-loops are dropped, and node ids are dense
//! `0..n-1`. Coarsening stages rely on all three normalisations.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub node: NodeId,
    pub weight: f64,
    /// Index into [`Graph::edges`].
    pub edge: usize,
}

/// Immutable weighted undirected graph.
#[derive(Debug, Clone)]
pub struct Graph {
    node_weights: Vec<f64>,
    /// Normalised `u < v`, sorted by `(u, v)`, duplicates merged.
    edges: Vec<Edge>,
    adj: Vec<Vec<Neighbor>>,
}

impl Graph {
    /// Build a graph from raw `(u, v, w)` triples.
    ///
    /// Self-loops are dropped, parallel edges merged by summing weights.
    /// Node ids must be `< node_count`; weights must be positive and finite.
    pub fn from_edges<I>(node_count: usize, raw: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        Self::from_weighted_nodes(vec![1.0; node_count], raw)
    }

    pub fn from_weighted_nodes<I>(node_weights: Vec<f64>, raw: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let n = node_weights.len();
        for (i, &w) in node_weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "node {i} has non-positive weight {w}"
                )));
            }
        }
        let mut merged: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
        for (u, v, w) in raw {
            if u >= n || v >= n {
                return Err(Error::InvalidConfig(format!(
                    "edge ({u}, {v}) references a node id >= {n}"
                )));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if u == v {
                continue; // self-loop
            }
            let key = (u.min(v), u.max(v));
            *merged.entry(key).or_insert(0.0) += w;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .map(|((u, v), weight)| Edge { u, v, weight })
            .collect();
        let mut adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adj[e.u].push(Neighbor {
                node: e.v,
                weight: e.weight,
                edge: idx,
            });
            adj[e.v].push(Neighbor {
                node: e.u,
                weight: e.weight,
                edge: idx,
            });
        }
        for list in &mut adj {
            list.sort_by_key(|nb| nb.node);
        }
        Ok(Graph {
            node_weights,
            edges,
            adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_weights.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_weight(&self, v: NodeId) -> f64 {
        self.node_weights[v]
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }

    pub fn total_node_weight(&self) -> f64 {
        self.node_weights.iter().sum()
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Neighbors of `v` in ascending node-id order.
    pub fn neighbors(&self, v: NodeId) -> &[Neighbor] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search_by_key(&v, |nb| nb.node).is_ok()
    }

    pub fn unit_weights(&self) -> bool {
        self.edges.iter().all(|e| e.weight == 1.0)
    }

    /// Subgraph induced by `nodes` (densely re-numbered in the given order).
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<Graph> {
        let mut index = vec![usize::MAX; self.node_count()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let weights = nodes.iter().map(|&v| self.node_weights[v]).collect();
        let edges = self.edges.iter().filter_map(|e| {
            let (iu, iv) = (index[e.u], index[e.v]);
            if iu != usize::MAX && iv != usize::MAX {
                Some((iu, iv, e.weight))
            } else {
                None
            }
        });
        Graph::from_weighted_nodes(weights, edges.collect::<Vec<_>>())
    }

    /// Edge-list text form that [`load_graph`] reads back verbatim.
    ///
    /// Every node is introduced first as a `u u` line (the self-loop is
    /// dropped on load but registers the id), so dense ids and isolated
    /// nodes survive the round trip. Non-unit node weights are recorded as
    /// comments for inspection only.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for v in 0..self.node_count() {
            if self.node_weights[v] != 1.0 {
                let _ = writeln!(out, "# node_weight {} {}", v, self.node_weights[v]);
            }
            let _ = writeln!(out, "{v} {v}");
        }
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {}", e.u, e.v, e.weight);
        }
        out
    }
}

/// An edge-list graph together with the original node tokens.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Original token of each dense node id, in first-appearance order.
    pub labels: Vec<String>,
}

fn intern<'a>(
    ids: &mut BTreeMap<&'a str, NodeId>,
    labels: &mut Vec<String>,
    tok: &'a str,
) -> NodeId {
    if let Some(&id) = ids.get(tok) {
        return id;
    }
    let id = labels.len();
    labels.push(tok.to_owned());
    ids.insert(tok, id);
    id
}

/// Parse the edge-list format: `#` starts a comment, each remaining line is
/// `u v` or `u v w` with `w > 0`. Tokens map to dense ids in
/// first-appearance order.
pub fn load_graph(text: &str) -> Result<LoadedGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut ids: BTreeMap<&str, NodeId> = BTreeMap::new();
    let mut raw_edges: Vec<(NodeId, NodeId, f64)> = Vec::new();

    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `u v [w]`, found {} token(s)", tokens.len()),
            });
        }
        let u = intern(&mut ids, &mut labels, tokens[0]);
        let v = intern(&mut ids, &mut labels, tokens[1]);
        let w = if tokens.len() == 3 {
            let w: f64 = tokens[2].parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("cannot parse weight `{}`", tokens[2]),
            })?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight { line: lineno, weight: w });
            }
            w
        } else {
            1.0
        };
        if u != v {
            raw_edges.push((u, v, w));
        }
    }

    let graph = Graph::from_edges(labels.len(), raw_edges)?;
    Ok(LoadedGraph { graph, labels })
}

/// Per-node 2D coordinates — the optimization variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    positions: Vec<Vec2>,
}

impl Layout {
    pub fn new(positions: Vec<Vec2>) -> Layout {
        Layout { positions }
    }

    pub fn zeros(n: usize) -> Layout {
        Layout {
            positions: vec![Vec2::ZERO; n],
        }
    }

    /// Uniform random layout in an axis-aligned square of the given side,
    /// centered at the origin.
    pub fn random_in_square<R: Rng>(n: usize, side: f64, rng: &mut R) -> Layout {
        let positions = (0..n)
            .map(|_| {
                Vec2::new(
                    (rng.gen::<f64>() - 0.5) * side,
                    (rng.gen::<f64>() - 0.5) * side,
                )
            })
            .collect();
        Layout { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn pos(&self, v: NodeId) -> Vec2 {
        self.positions[v]
    }

    pub fn set_pos(&mut self, v: NodeId, p: Vec2) {
        self.positions[v] = p;
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec2> {
        self.positions.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.is_finite())
    }
}

/// How graph-theoretic distances are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    /// Sum of edge weights along the shortest path.
    #[default]
    Weighted,
    /// Hop count, ignoring edge weights.
    Hops,
}

/// Symmetric matrix of pairwise shortest-path distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: NodeId) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }
}

fn bfs_row(g: &Graph, source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = 0.0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        for nb in g.neighbors(u) {
            if dist[nb.node].is_infinite() {
                dist[nb.node] = dist[u] + 1.0;
                queue.push_back(nb.node);
            }
        }
    }
    dist
}

#[derive(PartialEq)]
struct HeapEntry(f64, NodeId);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, ties by node id for determinism.
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra_row(g: &Graph, source: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = std::collections::BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry(0.0, source));
    while let Some(HeapEntry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for nb in g.neighbors(u) {
            let cand = d + nb.weight;
            if cand < dist[nb.node] {
                dist[nb.node] = cand;
                heap.push(HeapEntry(cand, nb.node));
            }
        }
    }
    dist
}

/// Single-source shortest-path distances; infinite entries mark unreachable
/// nodes.
pub fn distances_from(g: &Graph, source: NodeId, mode: DistanceMode) -> Vec<f64> {
    match mode {
        DistanceMode::Hops => bfs_row(g, source),
        DistanceMode::Weighted => {
            if g.unit_weights() {
                bfs_row(g, source)
            } else {
                dijkstra_row(g, source)
            }
        }
    }
}

/// All-pairs shortest-path distances.
///
/// Rows are computed independently (in parallel) and the result is identical
/// for any worker count. Errors on disconnected input, naming a pair of
/// mutually unreachable nodes.
pub fn shortest_path_distances(g: &Graph, mode: DistanceMode) -> Result<DistanceMatrix> {
    let n = g.node_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| distances_from(g, s, mode))
        .collect();
    let mut data = Vec::with_capacity(n * n);
    for (s, row) in rows.iter().enumerate() {
        if let Some(t) = row.iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected { a: s, b: t });
        }
        data.extend_from_slice(row);
    }
    // Per-source runs can disagree by an ulp on weighted graphs (summation
    // order along the path differs); mirror the upper triangle so the
    // matrix is exactly symmetric.
    for i in 0..n {
        for j in (i + 1)..n {
            data[j * n + i] = data[i * n + j];
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Maximal connected node sets, each sorted ascending, ordered by smallest
/// member.
pub fn connected_components(g: &Graph) -> Vec<Vec<NodeId>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for nb in g.neighbors(u) {
                if !seen[nb.node] {
                    seen[nb.node] = true;
                    queue.push_back(nb.node);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Node count above which the diameter falls back to a double-sweep
/// estimate instead of an exact all-pairs computation.
pub const EXACT_DIAMETER_LIMIT: usize = 2048;

/// Graph diameter under the given distance mode.
///
/// Exact (all-pairs) up to [`EXACT_DIAMETER_LIMIT`] nodes; beyond that a
/// double-sweep lower bound is returned, which is only ever used to rescale
/// coordinates.
pub fn graph_diameter(g: &Graph, mode: DistanceMode) -> Result<f64> {
    let n = g.node_count();
    if n == 0 {
        return Ok(0.0);
    }
    if n <= EXACT_DIAMETER_LIMIT {
        let d = shortest_path_distances(g, mode)?;
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(d.get(i, j));
            }
        }
        Ok(best)
    } else {
        let first = distances_from(g, 0, mode);
        let (far, d0) = farthest(&first)?;
        let second = distances_from(g, far, mode);
        let (_, d1) = farthest(&second)?;
        Ok(d0.max(d1))
    }
}

fn farthest(dist: &[f64]) -> Result<(NodeId, f64)> {
    let mut best = (0, 0.0);
    for (v, &d) in dist.iter().enumerate() {
        if d.is_infinite() {
            return Err(Error::Disconnected { a: 0, b: v });
        }
        if d > best.1 {
            best = (v, d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn load_path_of_three() {
        let loaded = load_graph("0 1\n1 2").unwrap();
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.edge_count(), 2);
        assert!(loaded.graph.edges().iter().all(|e| e.weight == 1.0));
        assert_eq!(loaded.labels, vec!["0", "1", "2"]);
    }

    #[test]
    fn load_merges_parallel_edges_by_sum() {
        let loaded = load_graph("0 1 2.0\n0 1 3.0").unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.graph.edges()[0].weight, 5.0);
    }

    #[test]
    fn load_drops_self_loop_but_keeps_node() {
        let loaded = load_graph("0 0").unwrap();
        assert_eq!(loaded.graph.node_count(), 1);
        assert_eq!(loaded.graph.edge_count(), 0);
    }

    #[test]
    fn load_first_appearance_order() {
        let loaded = load_graph("b a\nc b").unwrap();
        assert_eq!(loaded.labels, vec!["b", "a", "c"]);
    }

    #[test]
    fn load_rejects_malformed_line() {
        let err = load_graph("0 1\nonly_one_token").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_rejects_nonpositive_weight() {
        let err = load_graph("0 1 -2").unwrap_err();
        match err {
            Error::InvalidWeight { line, weight } => {
                assert_eq!(line, 1);
                assert_eq!(weight, -2.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let loaded = load_graph("# header\n\n0 1 2.5 # trailing\n").unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.graph.edges()[0].weight, 2.5);
    }

    #[test]
    fn distances_on_path() {
        let g = gen::path(3);
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(2, 0), 2.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn distances_single_node() {
        let g = gen::path(1);
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn distances_weighted_triangle_takes_detour() {
        // Direct edge (0,2) has weight 5, the path through 1 costs 2.
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0)]).unwrap();
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        assert_eq!(d.get(0, 2), 2.0);
        // Hop mode sees the direct edge as one step.
        let h = shortest_path_distances(&g, DistanceMode::Hops).unwrap();
        assert_eq!(h.get(0, 2), 1.0);
    }

    #[test]
    fn disconnected_distances_error_names_nodes() {
        let g = Graph::from_edges(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        match shortest_path_distances(&g, DistanceMode::Weighted).unwrap_err() {
            Error::Disconnected { a, b } => {
                assert_ne!(a == 0 || a == 1, b == 0 || b == 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn components_cases() {
        let path = gen::path(3);
        assert_eq!(connected_components(&path), vec![vec![0, 1, 2]]);

        let isolated = Graph::from_edges(3, Vec::new()).unwrap();
        assert_eq!(
            connected_components(&isolated),
            vec![vec![0], vec![1], vec![2]]
        );

        let two_edges = Graph::from_edges(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(connected_components(&two_edges), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn diameter_cases() {
        assert_eq!(graph_diameter(&gen::path(5), DistanceMode::Weighted).unwrap(), 4.0);
        assert_eq!(
            graph_diameter(&gen::complete(4), DistanceMode::Weighted).unwrap(),
            1.0
        );
    }

    #[test]
    fn grid_diameter_matches_all_pairs_bfs_oracle() {
        let g = gen::grid(3, 3);
        // Oracle: max over all-pairs BFS rows computed one by one.
        let mut oracle = 0.0f64;
        for s in 0..g.node_count() {
            for d in bfs_row(&g, s) {
                assert!(d.is_finite());
                oracle = oracle.max(d);
            }
        }
        assert_eq!(oracle, 4.0);
        assert_eq!(graph_diameter(&g, DistanceMode::Weighted).unwrap(), 4.0);
    }

    #[test]
    fn edge_list_round_trip_preserves_structure() {
        let g = Graph::from_edges(5, vec![(0, 3, 2.5), (1, 2, 1.0)]).unwrap();
        let text = g.to_edge_list();
        let again = load_graph(&text).unwrap().graph;
        assert_eq!(again.node_count(), g.node_count());
        assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn induced_subgraph_keeps_internal_edges() {
        let g = gen::path(4);
        let sub = g.induced_subgraph(&[1, 2, 3]).unwrap();
        assert_eq!(sub.node_count(), 3);
        assert_eq!(sub.edge_count(), 2);
        assert!(sub.has_edge(0, 1) && sub.has_edge(1, 2));
    }
}
