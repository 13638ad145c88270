//! Fuzzy multilevel pipeline: membership matrices built from short weighted
//! walks toward farthest-point centers, coarse-graph synthesis via
//! U * W * U^T, and convex interpolation back down with circle-bounded
//! polish.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::error::{Error as CrateError, Result};
use crate::forces::ForceConfig;
use crate::graph::{shortest_path_distances, Graph, Layout, NodeId};
use crate::multilevel::{separate_coincident, LevelReport, MultilevelRun};
use crate::optimizer::{
    constrained_descent, force_directed_layout, random_layout, Circle, OptimizerSettings,
    OptimizerState,
};
use crate::partition::{select_k_centers, Partition};
use crate::seed::{derive_seed, domains};

/// Raw affinities below this are dropped before column normalization.
pub const AFFINITY_PRUNE: f64 = 1e-3;

/// Column-stochastic fuzzy membership matrix, stored column-sparse: for
/// every fine node the list of `(part, membership)` entries, sorted by part.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionMatrix {
    part_count: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PartitionViolation {
    #[error("entry ({part}, {node}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { part: usize, node: usize, value: f64 },
    #[error("column {node} sums to {sum}, expected 1")]
    ColumnSum { node: usize, sum: f64 },
    #[error("row {part} sums to {sum}, expected a value in (0, {node_count})")]
    RowSum { part: usize, sum: f64, node_count: usize },
}

impl PartitionMatrix {
    pub fn new(part_count: usize, cols: Vec<Vec<(usize, f64)>>) -> PartitionMatrix {
        PartitionMatrix { part_count, cols }
    }

    /// 0/1 matrix of a crisp partition.
    pub fn from_crisp(partition: &Partition) -> PartitionMatrix {
        PartitionMatrix {
            part_count: partition.part_count,
            cols: partition.part_of.iter().map(|&p| vec![(p, 1.0)]).collect(),
        }
    }

    pub fn identity(n: usize) -> PartitionMatrix {
        PartitionMatrix {
            part_count: n,
            cols: (0..n).map(|v| vec![(v, 1.0)]).collect(),
        }
    }

    pub fn part_count(&self) -> usize {
        self.part_count
    }

    pub fn node_count(&self) -> usize {
        self.cols.len()
    }

    pub fn column(&self, k: NodeId) -> &[(usize, f64)] {
        &self.cols[k]
    }

    pub fn entry(&self, part: usize, node: NodeId) -> f64 {
        self.cols[node]
            .binary_search_by_key(&part, |&(p, _)| p)
            .map(|i| self.cols[node][i].1)
            .unwrap_or(0.0)
    }

    /// Crisp view: every node joins its maximal-membership part (ties to the
    /// lower part id). Only meaningful for matrices that are already 0/1.
    pub fn to_partition(&self) -> Partition {
        let part_of = self
            .cols
            .iter()
            .map(|col| {
                col.iter()
                    .fold((usize::MAX, f64::NEG_INFINITY), |best, &(p, mu)| {
                        if mu > best.1 {
                            (p, mu)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect();
        Partition {
            part_of,
            part_count: self.part_count,
        }
    }

    pub fn is_crisp(&self) -> bool {
        self.cols
            .iter()
            .all(|col| col.len() == 1 && col[0].1 == 1.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.part_count];
        for col in &self.cols {
            for &(p, mu) in col {
                sums[p] += mu;
            }
        }
        sums
    }

    /// Dense `c x N` copy for small instances.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.cols.len()]; self.part_count];
        for (k, col) in self.cols.iter().enumerate() {
            for &(p, mu) in col {
                dense[p][k] = mu;
            }
        }
        dense
    }

    /// `(part, node, membership)` triplets in deterministic order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (k, col) in self.cols.iter().enumerate() {
            for &(p, mu) in col {
                out.push((p, k, mu));
            }
        }
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out
    }

    /// Check the three membership conditions: entries in [0, 1], columns
    /// summing to one, rows strictly between 0 and N. Reports the first
    /// violation.
    pub fn validate(&self) -> std::result::Result<(), PartitionViolation> {
        let n = self.cols.len();
        for (k, col) in self.cols.iter().enumerate() {
            let mut sum = 0.0;
            for &(p, mu) in col {
                if !(0.0..=1.0).contains(&mu) || !mu.is_finite() {
                    return Err(PartitionViolation::EntryOutOfRange {
                        part: p,
                        node: k,
                        value: mu,
                    });
                }
                sum += mu;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PartitionViolation::ColumnSum { node: k, sum });
            }
        }
        for (p, sum) in self.row_sums().into_iter().enumerate() {
            if !(sum > 0.0 && sum < n as f64) {
                return Err(PartitionViolation::RowSum {
                    part: p,
                    sum,
                    node_count: n,
                });
            }
        }
        Ok(())
    }
}

/// Membership of non-center nodes: the summed probability of simple walks of
/// length at most `hop_limit` from the node to each center, where step
/// probabilities are edge weights normalized by node strength and
/// intermediate stops must be non-centers (centers absorb).
fn walk_affinities(
    g: &Graph,
    node: NodeId,
    center_index: &[Option<usize>],
    strength: &[f64],
    hop_limit: usize,
    aff: &mut [f64],
    visited: &mut [bool],
) {
    fn dfs(
        g: &Graph,
        u: NodeId,
        prob: f64,
        depth: usize,
        hop_limit: usize,
        center_index: &[Option<usize>],
        strength: &[f64],
        aff: &mut [f64],
        visited: &mut [bool],
    ) {
        for nb in g.neighbors(u) {
            let v = nb.node;
            if visited[v] {
                continue;
            }
            let p = prob * nb.weight / strength[u];
            if let Some(ci) = center_index[v] {
                aff[ci] += p;
            } else if depth + 1 < hop_limit {
                visited[v] = true;
                dfs(
                    g,
                    v,
                    p,
                    depth + 1,
                    hop_limit,
                    center_index,
                    strength,
                    aff,
                    visited,
                );
                visited[v] = false;
            }
        }
    }
    visited[node] = true;
    dfs(
        g,
        node,
        1.0,
        0,
        hop_limit,
        center_index,
        strength,
        aff,
        visited,
    );
    visited[node] = false;
}

/// Build the fuzzy membership matrix toward `c` farthest-point centers.
///
/// Center columns are crisp; every other column collects the truncated walk
/// affinities, prunes entries below [`AFFINITY_PRUNE`], normalizes to sum 1,
/// and falls back to a crisp assignment to the nearest center when nothing
/// survives.
pub fn fuzzy_partition(
    g: &Graph,
    c: usize,
    seed: u64,
    hop_limit: usize,
) -> Result<PartitionMatrix> {
    let n = g.node_count();
    let kc = select_k_centers(g, c, seed)?;
    let mut center_index = vec![None; n];
    for (idx, &center) in kc.centers.iter().enumerate() {
        center_index[center] = Some(idx);
    }
    let strength: Vec<f64> = (0..n)
        .map(|v| g.neighbors(v).iter().map(|nb| nb.weight).sum())
        .collect();

    let mut cols = Vec::with_capacity(n);
    let mut aff = vec![0.0f64; c];
    let mut visited = vec![false; n];
    for k in 0..n {
        if let Some(idx) = center_index[k] {
            cols.push(vec![(idx, 1.0)]);
            continue;
        }
        aff.iter_mut().for_each(|a| *a = 0.0);
        if hop_limit > 0 && strength[k] > 0.0 {
            walk_affinities(g, k, &center_index, &strength, hop_limit, &mut aff, &mut visited);
        }
        let mut total = 0.0;
        for a in aff.iter_mut() {
            if *a < AFFINITY_PRUNE {
                *a = 0.0;
            }
            total += *a;
        }
        if total > 0.0 {
            let col: Vec<(usize, f64)> = aff
                .iter()
                .enumerate()
                .filter(|&(_, &a)| a > 0.0)
                .map(|(i, &a)| (i, a / total))
                .collect();
            cols.push(col);
        } else {
            // No walk reaches a center: crisp fallback to the nearest one.
            cols.push(vec![(kc.nearest[k], 1.0)]);
        }
    }
    Ok(PartitionMatrix {
        part_count: c,
        cols,
    })
}

/// Accounting of one coarse-graph synthesis.
#[derive(Debug, Clone, Default)]
pub struct CoarseBuildReport {
    /// Intra-part edge mass folded onto the (dropped) diagonal.
    pub diagonal_mass: f64,
    /// Off-diagonal mass removed by tau pruning.
    pub pruned_mass: f64,
    pub pruned_edges: usize,
    /// Pruned edges re-added to keep the coarse graph connected.
    pub restored_edges: usize,
}

/// Synthesize the coarse graph from the fine graph and a valid membership
/// matrix: node weights are membership-weighted sums; the weight of a coarse
/// pair {p, q} collects both orientations of every fine edge; self-loop mass
/// is dropped and reported; off-diagonal edges lighter than
/// `tau * max_weight` are pruned (tau = 0 disables pruning), except where
/// removal would disconnect the coarse graph.
pub fn build_coarse_graph(
    g: &Graph,
    u: &PartitionMatrix,
    tau: f64,
) -> Result<(Graph, CoarseBuildReport)> {
    if u.node_count() != g.node_count() {
        return Err(CrateError::DimensionMismatch {
            expected: g.node_count(),
            got: u.node_count(),
        });
    }
    u.validate().map_err(CrateError::InvalidPartitionMatrix)?;

    let c = u.part_count();
    let mut weights = vec![0.0f64; c];
    for k in 0..g.node_count() {
        for &(p, mu) in u.column(k) {
            weights[p] += g.node_weight(k) * mu;
        }
    }

    let mut report = CoarseBuildReport::default();
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        for &(p, mp) in u.column(e.u) {
            for &(q, mq) in u.column(e.v) {
                let contrib = mp * e.weight * mq;
                if p == q {
                    report.diagonal_mass += contrib;
                } else {
                    *edges.entry((p.min(q), p.max(q))).or_insert(0.0) += contrib;
                }
            }
        }
    }

    let mut kept: Vec<((usize, usize), f64)> = Vec::new();
    if tau > 0.0 && !edges.is_empty() {
        let max_w = edges.values().cloned().fold(0.0, f64::max);
        let cutoff = tau * max_w;
        let mut pruned: Vec<((usize, usize), f64)> = Vec::new();
        for (key, w) in edges {
            if w < cutoff {
                pruned.push((key, w));
            } else {
                kept.push((key, w));
            }
        }
        report.pruned_edges = pruned.len();
        report.pruned_mass = pruned.iter().map(|&(_, w)| w).sum();

        if !pruned.is_empty() {
            // Re-add the heaviest pruned edges wherever pruning severed a
            // connection the unpruned graph had.
            let mut dsu = Dsu::new(c);
            for &((a, b), _) in &kept {
                dsu.union(a, b);
            }
            pruned.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
            for (key, w) in pruned {
                if dsu.union(key.0, key.1) {
                    kept.push((key, w));
                    report.pruned_edges -= 1;
                    report.pruned_mass -= w;
                    report.restored_edges += 1;
                }
            }
            kept.sort_by_key(|&(key, _)| key);
        }
    } else {
        kept = edges.into_iter().collect();
    }

    let coarse = Graph::from_weighted_nodes(
        weights,
        kept.into_iter().map(|((a, b), w)| (a, b, w)),
    )?;
    Ok((coarse, report))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns true when the two sets were previously separate.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            false
        } else {
            self.parent[ra.max(rb)] = ra.min(rb);
            true
        }
    }
}

/// Fine positions as the convex combination `X_fine = U^T X_coarse`.
pub fn fuzzy_interpolate(u: &PartitionMatrix, coarse_layout: &Layout) -> Result<Layout> {
    if coarse_layout.len() != u.part_count() {
        return Err(CrateError::DimensionMismatch {
            expected: u.part_count(),
            got: coarse_layout.len(),
        });
    }
    let mut x = Layout::zeros(u.node_count());
    for k in 0..u.node_count() {
        let mut p = crate::geometry::Vec2::ZERO;
        for &(part, mu) in u.column(k) {
            p += coarse_layout.pos(part) * mu;
        }
        x.set_pos(k, p);
    }
    Ok(x)
}

/// Jitter coincident interpolated nodes apart, then run a few clipped
/// force-directed sweeps with every node confined to a circle around its
/// interpolated position. The circle radius is half the minimum pairwise
/// distance among the coarse positions.
pub fn fuzzy_refine_local(
    g_fine: &Graph,
    x0: Layout,
    coarse_layout: &Layout,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    polish_iterations: usize,
    seed: u64,
) -> Result<Layout> {
    let mut x = x0;
    separate_coincident(&mut x, cfg.k, seed);

    let c = coarse_layout.len();
    let radius = if c < 2 {
        cfg.k * (g_fine.node_count() as f64).sqrt()
    } else {
        let mut min_dist = f64::INFINITY;
        for p in 0..c {
            for q in (p + 1)..c {
                min_dist = min_dist.min((coarse_layout.pos(p) - coarse_layout.pos(q)).norm());
            }
        }
        if min_dist > 0.0 {
            0.5 * min_dist
        } else {
            cfg.k
        }
    };
    let circles: Vec<Circle> = (0..g_fine.node_count())
        .map(|v| Circle {
            center: x.pos(v),
            radius,
        })
        .collect();

    let d = if cfg.needs_distances() {
        Some(shortest_path_distances(g_fine, cfg.distance_mode)?)
    } else {
        None
    };
    let mut state = OptimizerState::warm(g_fine.node_count(), cfg.k, settings.clone());
    constrained_descent(
        g_fine,
        d.as_ref(),
        &mut x,
        cfg,
        &circles,
        polish_iterations,
        &mut state,
    )?;
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct FuzzyOptions {
    /// Coarsening stops once a level has at most this many nodes (>= 2, so
    /// the membership conditions stay satisfiable).
    pub threshold: usize,
    pub hop_limit: usize,
    /// Relative pruning threshold for coarse edges.
    pub prune_tau: f64,
    pub polish_iterations: usize,
}

impl Default for FuzzyOptions {
    fn default() -> Self {
        FuzzyOptions {
            threshold: 10,
            hop_limit: 2,
            prune_tau: 1e-3,
            polish_iterations: 20,
        }
    }
}

/// Fuzzy multilevel pipeline: halve the node count per level with
/// `c = ceil(N/2)` memberships, lay the coarsest level out from a random
/// start, then interpolate, polish inside circles, and refine per level.
pub fn fuzzy_multilevel_layout(
    g: &Graph,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    opts: &FuzzyOptions,
    seed: u64,
) -> Result<MultilevelRun> {
    cfg.validate()?;
    settings.validate()?;
    if opts.threshold < 2 {
        return Err(CrateError::InvalidConfig(
            "fuzzy threshold must be at least 2".into(),
        ));
    }

    let mut graphs = vec![g.clone()];
    let mut mats: Vec<PartitionMatrix> = Vec::new();
    while graphs.last().unwrap().node_count() > opts.threshold {
        let fine = graphs.last().unwrap();
        let level = mats.len() as u64;
        let c = fine.node_count().div_ceil(2);
        let u = fuzzy_partition(
            fine,
            c,
            derive_seed(seed, domains::FUZZY_PART, level),
            opts.hop_limit,
        )?;
        let (coarse, _report) = build_coarse_graph(fine, &u, opts.prune_tau)?;
        graphs.push(coarse);
        mats.push(u);
    }

    let coarsest = graphs.last().unwrap();
    let mut x = random_layout(
        coarsest.node_count(),
        cfg.k,
        derive_seed(seed, domains::INIT_LAYOUT, 0),
    );
    let mut state = OptimizerState::new(coarsest.node_count(), cfg.k, settings.clone());
    x = force_directed_layout(coarsest, cfg, &mut state, x)?;
    let mut levels = vec![LevelReport {
        nodes: coarsest.node_count(),
        edges: coarsest.edge_count(),
        k: cfg.k,
        iterations: settings.max_iterations,
        polish_iterations: 0,
    }];

    for li in (0..mats.len()).rev() {
        let fine = &graphs[li];
        let interp = fuzzy_interpolate(&mats[li], &x)?;
        let polished = fuzzy_refine_local(
            fine,
            interp,
            &x,
            cfg,
            settings,
            opts.polish_iterations,
            derive_seed(seed, domains::REFINE, li as u64),
        )?;
        let mut state = OptimizerState::warm(fine.node_count(), cfg.k, settings.clone());
        x = force_directed_layout(fine, cfg, &mut state, polished)?;
        levels.push(LevelReport {
            nodes: fine.node_count(),
            edges: fine.edge_count(),
            k: cfg.k,
            iterations: settings.max_iterations,
            polish_iterations: opts.polish_iterations,
        });
    }

    Ok(MultilevelRun {
        layout: x,
        levels,
        level_graphs: graphs,
    })
}

/// The membership matrices of every coarsening level, for inspection dumps.
pub fn fuzzy_membership_chain(
    g: &Graph,
    opts: &FuzzyOptions,
    seed: u64,
) -> Result<Vec<PartitionMatrix>> {
    let mut graphs = vec![g.clone()];
    let mut mats = Vec::new();
    while graphs.last().unwrap().node_count() > opts.threshold {
        let fine = graphs.last().unwrap();
        let level = mats.len() as u64;
        let c = fine.node_count().div_ceil(2);
        let u = fuzzy_partition(
            fine,
            c,
            derive_seed(seed, domains::FUZZY_PART, level),
            opts.hop_limit,
        )?;
        let (coarse, _) = build_coarse_graph(fine, &u, opts.prune_tau)?;
        graphs.push(coarse);
        mats.push(u);
    }
    Ok(mats)
}
