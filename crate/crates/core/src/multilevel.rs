//! Classic multilevel pipeline: matching-based edge collapse or maximal
//! independent vertex sets, position interpolation, and per-level edge
//! length rescaling.

use std::collections::{BTreeMap, VecDeque};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forces::ForceConfig;
use crate::geometry::Vec2;
use crate::graph::{graph_diameter, DistanceMode, Graph, Layout, NodeId};
use crate::optimizer::{
    force_directed_layout, random_layout, OptimizerSettings, OptimizerState,
};
use crate::seed::{derive_seed, domains};

/// Neighbor-selection priority of the greedy matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchPriority {
    FirstAvailable,
    Random,
    HeavyEdge,
    LowNodeWeight,
    CommonNeighbors,
}

impl MatchPriority {
    pub const ALL: [MatchPriority; 5] = [
        MatchPriority::FirstAvailable,
        MatchPriority::Random,
        MatchPriority::HeavyEdge,
        MatchPriority::LowNodeWeight,
        MatchPriority::CommonNeighbors,
    ];
}

impl FromStr for MatchPriority {
    type Err = Error;

    fn from_str(s: &str) -> Result<MatchPriority> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first" => Ok(MatchPriority::FirstAvailable),
            "random" => Ok(MatchPriority::Random),
            "heavy" => Ok(MatchPriority::HeavyEdge),
            "lowweight" => Ok(MatchPriority::LowNodeWeight),
            "commonneighbors" => Ok(MatchPriority::CommonNeighbors),
            other => Err(Error::InvalidConfig(format!(
                "unknown match priority `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoarseningKind {
    EdgeCollapse,
    /// Carries the fine node id of each coarse node (the set member).
    Mivs { members: Vec<NodeId> },
}

/// Pipeline-level selector between the two coarseners.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseningMethod {
    EdgeCollapse,
    Mivs,
}

/// One coarsening level: the coarse graph plus the fine-to-coarse mapping.
#[derive(Debug, Clone)]
pub struct CoarseningResult {
    pub coarse: Graph,
    pub parent_of: Vec<NodeId>,
    pub kind: CoarseningKind,
}

/// Neighborhood overlap score over closed neighborhoods:
/// `1 - 2 |N_u and N_v| / |N_u or N_v|`, lower means more shared structure.
pub fn semi_distance(g: &Graph, u: NodeId, v: NodeId) -> f64 {
    debug_assert_ne!(u, v);
    let set_of = |w: NodeId| {
        let mut s: Vec<NodeId> = g.neighbors(w).iter().map(|nb| nb.node).collect();
        s.push(w);
        s.sort_unstable();
        s
    };
    let nu = set_of(u);
    let nv = set_of(v);
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < nu.len() && j < nv.len() {
        match nu[i].cmp(&nv[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = nu.len() + nv.len() - inter;
    1.0 - 2.0 * inter as f64 / union as f64
}

/// Greedy maximal matching in ascending node order; matched pairs merge,
/// unmatched nodes copy through. Merged parallel edges sum their weights and
/// self-loops drop.
pub fn coarsen_ec(g: &Graph, priority: MatchPriority, seed: u64) -> CoarseningResult {
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matched = vec![false; n];
    let mut parent_of = vec![usize::MAX; n];
    let mut next = 0usize;

    for u in 0..n {
        if matched[u] {
            continue;
        }
        matched[u] = true;
        let candidates: Vec<&crate::graph::Neighbor> = g
            .neighbors(u)
            .iter()
            .filter(|nb| !matched[nb.node])
            .collect();
        let pick = if candidates.is_empty() {
            None
        } else {
            match priority {
                MatchPriority::FirstAvailable => Some(candidates[0].node),
                MatchPriority::Random => {
                    Some(candidates[rng.gen_range(0..candidates.len())].node)
                }
                MatchPriority::HeavyEdge => {
                    // Ties go to the lower node id; candidates are ascending.
                    let mut best = candidates[0];
                    for cand in &candidates[1..] {
                        if cand.weight > best.weight {
                            best = cand;
                        }
                    }
                    Some(best.node)
                }
                MatchPriority::LowNodeWeight => {
                    let mut best = candidates[0];
                    for cand in &candidates[1..] {
                        if g.node_weight(cand.node) < g.node_weight(best.node) {
                            best = cand;
                        }
                    }
                    Some(best.node)
                }
                MatchPriority::CommonNeighbors => {
                    let mut best = candidates[0];
                    let mut best_score = semi_distance(g, u, best.node);
                    for cand in &candidates[1..] {
                        let score = semi_distance(g, u, cand.node);
                        if score < best_score {
                            best = cand;
                            best_score = score;
                        }
                    }
                    Some(best.node)
                }
            }
        };
        let id = next;
        next += 1;
        parent_of[u] = id;
        if let Some(v) = pick {
            matched[v] = true;
            parent_of[v] = id;
        }
    }

    let coarse = aggregate(g, &parent_of, next);
    CoarseningResult {
        coarse,
        parent_of,
        kind: CoarseningKind::EdgeCollapse,
    }
}

/// Sum fine node weights and crossing edge weights under `parent_of`.
fn aggregate(g: &Graph, parent_of: &[NodeId], coarse_n: usize) -> Graph {
    let mut weights = vec![0.0f64; coarse_n];
    for v in 0..g.node_count() {
        weights[parent_of[v]] += g.node_weight(v);
    }
    let mut edges: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    for e in g.edges() {
        let (pu, pv) = (parent_of[e.u], parent_of[e.v]);
        if pu == pv {
            continue;
        }
        let key = (pu.min(pv), pu.max(pv));
        *edges.entry(key).or_insert(0.0) += e.weight;
    }
    Graph::from_weighted_nodes(
        weights,
        edges.into_iter().map(|((u, v), w)| (u, v, w)),
    )
    .expect("aggregation preserves positive weights")
}

fn bfs_hops_limited(g: &Graph, source: NodeId, limit: usize, dist: &mut [usize]) -> Vec<NodeId> {
    // `dist` is a scratch buffer filled with usize::MAX between calls.
    let mut touched = vec![source];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        if dist[u] == limit {
            continue;
        }
        for nb in g.neighbors(u) {
            if dist[nb.node] == usize::MAX {
                dist[nb.node] = dist[u] + 1;
                touched.push(nb.node);
                queue.push_back(nb.node);
            }
        }
    }
    touched
}

/// Greedy maximal independent vertex set in ascending id order. Members
/// become coarse nodes; two members are linked when they sit within three
/// hops of each other; every non-member maps to its nearest member (ties to
/// the lower member id).
pub fn coarsen_mivs(g: &Graph) -> CoarseningResult {
    let n = g.node_count();
    let mut in_set = vec![false; n];
    let mut blocked = vec![false; n];
    let mut members = Vec::new();
    for v in 0..n {
        if !blocked[v] {
            in_set[v] = true;
            members.push(v);
            blocked[v] = true;
            for nb in g.neighbors(v) {
                blocked[nb.node] = true;
            }
        }
    }
    let mut member_index = vec![usize::MAX; n];
    for (idx, &m) in members.iter().enumerate() {
        member_index[m] = idx;
    }

    // Nearest member by hop count via multi-source BFS; seeding the queue in
    // ascending member order resolves distance ties toward the lower id.
    let mut parent_of = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (idx, &m) in members.iter().enumerate() {
        parent_of[m] = idx;
        queue.push_back(m);
    }
    while let Some(u) = queue.pop_front() {
        for nb in g.neighbors(u) {
            if parent_of[nb.node] == usize::MAX {
                parent_of[nb.node] = parent_of[u];
                queue.push_back(nb.node);
            }
        }
    }
    // Isolated non-members cannot occur (maximality), but keep the mapping
    // total for robustness on degenerate inputs.
    for v in 0..n {
        if parent_of[v] == usize::MAX {
            in_set[v] = true;
            member_index[v] = members.len();
            parent_of[v] = members.len();
            members.push(v);
        }
    }

    let mut weights = vec![0.0f64; members.len()];
    for v in 0..n {
        weights[parent_of[v]] += g.node_weight(v);
    }

    let mut edges: BTreeMap<(NodeId, NodeId), f64> = BTreeMap::new();
    let mut scratch = vec![usize::MAX; n];
    for (idx, &m) in members.iter().enumerate() {
        let touched = bfs_hops_limited(g, m, 3, &mut scratch);
        for &t in &touched {
            if in_set[t] && member_index[t] > idx {
                edges.insert((idx, member_index[t]), 1.0);
            }
        }
        for t in touched {
            scratch[t] = usize::MAX;
        }
    }

    let coarse = Graph::from_weighted_nodes(
        weights,
        edges.into_iter().map(|((u, v), w)| (u, v, w)),
    )
    .expect("member weights are positive");
    CoarseningResult {
        coarse,
        parent_of,
        kind: CoarseningKind::Mivs { members },
    }
}

/// Displace groups of exactly coincident nodes onto a small circle of radius
/// `0.005 * k` around their common position.
pub fn separate_coincident(x: &mut Layout, k: f64, seed: u64) {
    let mut groups: BTreeMap<(u64, u64), Vec<NodeId>> = BTreeMap::new();
    for v in 0..x.len() {
        let p = x.pos(v);
        groups
            .entry((p.x.to_bits(), p.y.to_bits()))
            .or_default()
            .push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (_, group) in groups {
        if group.len() < 2 {
            continue;
        }
        let base = rng.gen::<f64>() * std::f64::consts::TAU;
        let step = std::f64::consts::TAU / group.len() as f64;
        for (i, v) in group.into_iter().enumerate() {
            let offset = Vec2::from_angle(base + i as f64 * step) * (0.005 * k);
            x.set_pos(v, x.pos(v) + offset);
        }
    }
}

/// Seed the fine layout from the coarse one.
///
/// Edge-collapse children inherit their parent position and coincident
/// groups are separated by a seeded jitter of magnitude `1e-2 * k`; MIVS
/// members inherit while non-members average their member neighbors
/// (falling back to the parent position when a non-member has none).
pub fn interpolate_positions(
    result: &CoarseningResult,
    coarse_layout: &Layout,
    g_fine: &Graph,
    k: f64,
    seed: u64,
) -> Result<Layout> {
    if coarse_layout.len() != result.coarse.node_count() {
        return Err(Error::DimensionMismatch {
            expected: result.coarse.node_count(),
            got: coarse_layout.len(),
        });
    }
    if result.parent_of.len() != g_fine.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g_fine.node_count(),
            got: result.parent_of.len(),
        });
    }
    let n = g_fine.node_count();
    let mut x = Layout::zeros(n);
    match &result.kind {
        CoarseningKind::EdgeCollapse => {
            for v in 0..n {
                x.set_pos(v, coarse_layout.pos(result.parent_of[v]));
            }
        }
        CoarseningKind::Mivs { members } => {
            let mut is_member = vec![false; n];
            for &m in members {
                is_member[m] = true;
                x.set_pos(m, coarse_layout.pos(result.parent_of[m]));
            }
            for v in 0..n {
                if is_member[v] {
                    continue;
                }
                let mut acc = Vec2::ZERO;
                let mut count = 0usize;
                for nb in g_fine.neighbors(v) {
                    if is_member[nb.node] {
                        acc += coarse_layout.pos(result.parent_of[nb.node]);
                        count += 1;
                    }
                }
                if count > 0 {
                    x.set_pos(v, acc * (1.0 / count as f64));
                } else {
                    x.set_pos(v, coarse_layout.pos(result.parent_of[v]));
                }
            }
        }
    }
    separate_coincident(&mut x, k, seed);
    Ok(x)
}

/// How the desired edge length shrinks from one level to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RescaleStrategy {
    /// K becomes the mean drawn edge length of the interpolated layout.
    #[default]
    AverageEdgeLength,
    /// K divides by the ratio of graph diameters.
    DiameterRatio,
    /// K divides by the fixed sqrt(7/4).
    WalshawFixed,
}

impl FromStr for RescaleStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<RescaleStrategy> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "average" => Ok(RescaleStrategy::AverageEdgeLength),
            "diameter" => Ok(RescaleStrategy::DiameterRatio),
            "walshaw" => Ok(RescaleStrategy::WalshawFixed),
            other => Err(Error::InvalidConfig(format!(
                "unknown rescale strategy `{other}`"
            ))),
        }
    }
}

/// Desired edge length for the fine level, given the coarse level's K and
/// the interpolated fine layout.
pub fn rescale_level(
    g_fine: &Graph,
    g_coarse: &Graph,
    k_coarse: f64,
    fine_layout: &Layout,
    strategy: RescaleStrategy,
    mode: DistanceMode,
) -> Result<f64> {
    match strategy {
        RescaleStrategy::AverageEdgeLength => {
            if g_fine.edge_count() == 0 {
                return Ok(k_coarse);
            }
            let total: f64 = g_fine
                .edges()
                .iter()
                .map(|e| (fine_layout.pos(e.u) - fine_layout.pos(e.v)).norm())
                .sum();
            let mean = total / g_fine.edge_count() as f64;
            if mean > 0.0 && mean.is_finite() {
                Ok(mean)
            } else {
                Ok(k_coarse)
            }
        }
        RescaleStrategy::DiameterRatio => {
            let diam_fine = graph_diameter(g_fine, mode)?;
            let diam_coarse = graph_diameter(g_coarse, mode)?;
            if diam_fine > 0.0 && diam_coarse > 0.0 {
                Ok(k_coarse / (diam_fine / diam_coarse))
            } else {
                Ok(k_coarse)
            }
        }
        RescaleStrategy::WalshawFixed => Ok(k_coarse / (7.0f64 / 4.0).sqrt()),
    }
}

#[derive(Debug, Clone)]
pub struct MultilevelOptions {
    pub method: CoarseningMethod,
    pub priority: MatchPriority,
    pub rescale: RescaleStrategy,
    /// Coarsening stops once a level has at most this many nodes.
    pub threshold: usize,
}

impl Default for MultilevelOptions {
    fn default() -> Self {
        MultilevelOptions {
            method: CoarseningMethod::EdgeCollapse,
            priority: MatchPriority::HeavyEdge,
            rescale: RescaleStrategy::AverageEdgeLength,
            threshold: 10,
        }
    }
}

/// Per-level record of a multilevel run.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub nodes: usize,
    pub edges: usize,
    pub k: f64,
    pub iterations: usize,
    /// Constrained polish iterations (partition/fuzzy pipelines only).
    pub polish_iterations: usize,
}

/// Result of any multilevel pipeline: the final layout plus per-level
/// accounting, ordered from the coarsest level to the finest.
#[derive(Debug, Clone)]
pub struct MultilevelRun {
    pub layout: Layout,
    pub levels: Vec<LevelReport>,
    /// Per-level graphs in coarsening order (finest first), for inspection.
    pub level_graphs: Vec<Graph>,
}

impl MultilevelRun {
    pub fn total_iterations(&self) -> usize {
        self.levels
            .iter()
            .map(|l| l.iterations + l.polish_iterations)
            .sum()
    }
}

/// Fig-style multilevel pipeline: coarsen until at most `threshold` nodes
/// (or until a level shrinks by less than 5%), lay out the coarsest graph
/// from a random start, then interpolate, rescale and refine downward.
pub fn multilevel_layout(
    g: &Graph,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    opts: &MultilevelOptions,
    seed: u64,
) -> Result<MultilevelRun> {
    cfg.validate()?;
    settings.validate()?;
    let mut graphs: Vec<Graph> = vec![g.clone()];
    let mut steps: Vec<CoarseningResult> = Vec::new();
    while graphs.last().unwrap().node_count() > opts.threshold {
        let fine = graphs.last().unwrap();
        let level = steps.len() as u64;
        let result = match opts.method {
            CoarseningMethod::EdgeCollapse => coarsen_ec(
                fine,
                opts.priority,
                derive_seed(seed, domains::COARSEN, level),
            ),
            CoarseningMethod::Mivs => coarsen_mivs(fine),
        };
        // Stall guard: stop on levels that shrink by less than 5%.
        if result.coarse.node_count() as f64 > 0.95 * fine.node_count() as f64 {
            break;
        }
        graphs.push(result.coarse.clone());
        steps.push(result);
    }

    let coarsest = graphs.last().unwrap();
    let mut k = cfg.k;
    let mut cfg_level = cfg.clone();
    let mut x = random_layout(
        coarsest.node_count(),
        k,
        derive_seed(seed, domains::INIT_LAYOUT, 0),
    );
    let mut state = OptimizerState::new(coarsest.node_count(), k, settings.clone());
    x = force_directed_layout(coarsest, &cfg_level, &mut state, x)?;
    let mut levels = vec![LevelReport {
        nodes: coarsest.node_count(),
        edges: coarsest.edge_count(),
        k,
        iterations: settings.max_iterations,
        polish_iterations: 0,
    }];

    for li in (0..steps.len()).rev() {
        let fine = &graphs[li];
        let coarse = &graphs[li + 1];
        let x_seed = derive_seed(seed, domains::INTERPOLATE, li as u64);
        let x_interp = interpolate_positions(&steps[li], &x, fine, k, x_seed)?;
        k = rescale_level(fine, coarse, k, &x_interp, opts.rescale, cfg.distance_mode)?;
        cfg_level.k = k;
        let mut state = OptimizerState::warm(fine.node_count(), k, settings.clone());
        x = force_directed_layout(fine, &cfg_level, &mut state, x_interp)?;
        levels.push(LevelReport {
            nodes: fine.node_count(),
            edges: fine.edge_count(),
            k,
            iterations: settings.max_iterations,
            polish_iterations: 0,
        });
    }

    Ok(MultilevelRun {
        layout: x,
        levels,
        level_graphs: graphs,
    })
}
