//! Base-graph partition multilevel scheme: every coarse level is carved out
//! of the original graph by a farthest-point k-centers partition, and
//! refinement routes through the base graph with circle-constrained
//! placement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forces::ForceConfig;
use crate::geometry::Vec2;
use crate::graph::{
    distances_from, shortest_path_distances, DistanceMatrix, DistanceMode, Graph, Layout,
    NodeId,
};
use crate::multilevel::{LevelReport, MultilevelRun};
use crate::optimizer::{
    constrained_descent, force_directed_layout, random_layout, Circle, OptimizerSettings,
    OptimizerState,
};
use crate::seed::{derive_seed, domains};

/// A crisp partition of the node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub part_of: Vec<usize>,
    pub part_count: usize,
}

impl Partition {
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut parts = vec![Vec::new(); self.part_count];
        for (v, &p) in self.part_of.iter().enumerate() {
            parts[p].push(v);
        }
        parts
    }
}

/// Greedy farthest-point center selection.
///
/// The first center is drawn uniformly from the seed; every later center is
/// the node furthest from the chosen set (ties to the lower id). `nearest`
/// holds each node's owning center as an index into `centers`, with distance
/// ties resolved toward the lower center node id.
#[derive(Debug, Clone)]
pub struct KCenters {
    pub centers: Vec<NodeId>,
    pub nearest: Vec<usize>,
    pub dist: Vec<f64>,
}

pub fn select_k_centers(g: &Graph, k: usize, seed: u64) -> Result<KCenters> {
    let n = g.node_count();
    if k == 0 || k > n {
        return Err(Error::PartCountOutOfRange { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.gen_range(0..n);
    select_k_centers_from(g, k, first)
}

/// Deterministic variant with an explicit first center.
pub fn select_k_centers_from(g: &Graph, k: usize, first: NodeId) -> Result<KCenters> {
    let n = g.node_count();
    if k == 0 || k > n {
        return Err(Error::PartCountOutOfRange { k, n });
    }
    let mut centers = vec![first];
    let mut dist = distances_from(g, first, DistanceMode::Weighted);
    let mut nearest = vec![0usize; n];
    while centers.len() < k {
        let mut far = (0usize, f64::NEG_INFINITY);
        for v in 0..n {
            if dist[v] > far.1 {
                far = (v, dist[v]);
            }
        }
        let c = far.0;
        let idx = centers.len();
        centers.push(c);
        let row = distances_from(g, c, DistanceMode::Weighted);
        for v in 0..n {
            if row[v] < dist[v] || (row[v] == dist[v] && c < centers[nearest[v]]) {
                dist[v] = row[v];
                nearest[v] = idx;
            }
        }
    }
    Ok(KCenters {
        centers,
        nearest,
        dist,
    })
}

/// Partition by nearest center under the farthest-point selection.
pub fn k_centers_partition(g: &Graph, k: usize, seed: u64) -> Result<Partition> {
    let kc = select_k_centers(g, k, seed)?;
    Ok(Partition {
        part_of: kc.nearest,
        part_count: k,
    })
}

/// Merge each part into one coarse node: node weights sum, crossing edge
/// weights sum, internal edges vanish.
pub fn aggregate_by_partition(g: &Graph, partition: &Partition) -> Graph {
    let mut weights = vec![0.0f64; partition.part_count];
    for v in 0..g.node_count() {
        weights[partition.part_of[v]] += g.node_weight(v);
    }
    let mut edges: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for e in g.edges() {
        let (pu, pv) = (partition.part_of[e.u], partition.part_of[e.v]);
        if pu == pv {
            continue;
        }
        let key = (pu.min(pv), pu.max(pv));
        *edges.entry(key).or_insert(0.0) += e.weight;
    }
    Graph::from_weighted_nodes(weights, edges.into_iter().map(|((u, v), w)| (u, v, w)))
        .expect("aggregated weights remain positive")
}

/// Partition the base graph into `target` parts and aggregate.
pub fn coarsen_by_partition(g: &Graph, target: usize, seed: u64) -> Result<(Graph, Partition)> {
    let partition = k_centers_partition(g, target, seed)?;
    let coarse = aggregate_by_partition(g, &partition);
    Ok((coarse, partition))
}

/// The (R, O) circle of every part: center at the part's coarse position,
/// radius half the distance to the nearest other coarse node. A single part
/// gets `k * sqrt(|part|)`.
pub fn part_circles(
    partition: &Partition,
    coarse_layout: &Layout,
    k: f64,
) -> Result<Vec<Circle>> {
    let c = partition.part_count;
    if coarse_layout.len() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            got: coarse_layout.len(),
        });
    }
    let sizes = {
        let mut s = vec![0usize; c];
        for &p in &partition.part_of {
            s[p] += 1;
        }
        s
    };
    let mut circles = Vec::with_capacity(c);
    for p in 0..c {
        let o = coarse_layout.pos(p);
        let radius = if c == 1 {
            k * (sizes[p] as f64).sqrt()
        } else {
            let mut min_dist = f64::INFINITY;
            for q in 0..c {
                if q != p {
                    min_dist = min_dist.min((coarse_layout.pos(q) - o).norm());
                }
            }
            // Coincident coarse nodes would freeze their parts entirely.
            if min_dist > 0.0 {
                0.5 * min_dist
            } else {
                k
            }
        };
        circles.push(Circle { center: o, radius });
    }
    Ok(circles)
}

/// Place every base node uniformly at random inside its part's circle, then
/// run a short force-directed polish in which displacements are radially
/// clipped to the circle.
pub fn expand_via_base(
    g_base: &Graph,
    d_base: Option<&DistanceMatrix>,
    partition: &Partition,
    coarse_layout: &Layout,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    polish_iterations: usize,
    seed: u64,
) -> Result<Layout> {
    if partition.part_of.len() != g_base.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g_base.node_count(),
            got: partition.part_of.len(),
        });
    }
    let circles = part_circles(partition, coarse_layout, cfg.k)?;
    let node_circles: Vec<Circle> = partition.part_of.iter().map(|&p| circles[p]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Layout::zeros(g_base.node_count());
    let sizes = partition.members();
    for (p, members) in sizes.iter().enumerate() {
        let circle = circles[p];
        if members.len() == 1 {
            x.set_pos(members[0], circle.center);
            continue;
        }
        for &v in members {
            // Uniform in the disk.
            let r = circle.radius * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * std::f64::consts::TAU;
            x.set_pos(v, circle.center + Vec2::from_angle(theta) * r);
        }
    }

    let mut state = OptimizerState::warm(g_base.node_count(), cfg.k, settings.clone());
    constrained_descent(
        g_base,
        d_base,
        &mut x,
        cfg,
        &node_circles,
        polish_iterations,
        &mut state,
    )?;
    for (v, circle) in node_circles.iter().enumerate() {
        debug_assert!(circle.contains(x.pos(v), 1e-9), "node {v} left its circle");
    }
    Ok(x)
}

/// Position of each part: weighted centroid of its base nodes.
pub fn project_to_level(
    base_layout: &Layout,
    partition: &Partition,
    g_base: &Graph,
) -> Result<Layout> {
    if base_layout.len() != partition.part_of.len() {
        return Err(Error::DimensionMismatch {
            expected: partition.part_of.len(),
            got: base_layout.len(),
        });
    }
    let mut acc = vec![Vec2::ZERO; partition.part_count];
    let mut mass = vec![0.0f64; partition.part_count];
    for v in 0..base_layout.len() {
        let p = partition.part_of[v];
        let w = g_base.node_weight(v);
        acc[p] += base_layout.pos(v) * w;
        mass[p] += w;
    }
    Ok(Layout::new(
        acc.into_iter()
            .zip(mass)
            .map(|(a, m)| a * (1.0 / m))
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct PartitionOptions {
    pub threshold: usize,
    /// Clipped polish iterations after each circle placement.
    pub polish_iterations: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            threshold: 10,
            polish_iterations: 20,
        }
    }
}

/// Partition-based multilevel pipeline: level `i` holds roughly `|V| / 2^i`
/// nodes, carved independently out of the base graph; refinement expands
/// each coarse layout onto the base graph inside per-part circles and
/// projects it to the next finer level.
pub fn multilevel_layout_2(
    g: &Graph,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    opts: &PartitionOptions,
    seed: u64,
) -> Result<MultilevelRun> {
    cfg.validate()?;
    settings.validate()?;
    let n = g.node_count();

    // Level 0 is the base graph; deeper levels halve.
    let mut targets = Vec::new();
    let mut current = n;
    while current > opts.threshold {
        let next = (current / 2).max(1);
        if next == current {
            break;
        }
        targets.push(next);
        current = next;
    }
    if targets.is_empty() {
        let x = crate::optimizer::single_level_layout(g, cfg, settings, seed)?;
        return Ok(MultilevelRun {
            layout: x,
            levels: vec![LevelReport {
                nodes: n,
                edges: g.edge_count(),
                k: cfg.k,
                iterations: settings.max_iterations,
                polish_iterations: 0,
            }],
            level_graphs: vec![g.clone()],
        });
    }

    let d_base = if cfg.needs_distances() {
        Some(shortest_path_distances(g, cfg.distance_mode)?)
    } else {
        None
    };

    // Partition the base graph independently per level.
    let mut partitions = Vec::with_capacity(targets.len());
    let mut coarse_graphs = Vec::with_capacity(targets.len());
    for (i, &target) in targets.iter().enumerate() {
        let s = derive_seed(seed, domains::PARTITION, i as u64);
        let (coarse, partition) = coarsen_by_partition(g, target, s)?;
        partitions.push(partition);
        coarse_graphs.push(coarse);
    }

    let deepest = targets.len() - 1;
    let coarsest = &coarse_graphs[deepest];
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

    // Walk from the coarsest level back to the base graph. Index `li`
    // refers to the level being produced: level `deepest+1 .. 0` maps to
    // coarse graphs, level "-1" is the base graph itself.
    for li in (0..=deepest).rev() {
        let base_x = expand_via_base(
            g,
            d_base.as_ref(),
            &partitions[li],
            &x,
            cfg,
            settings,
            opts.polish_iterations,
            derive_seed(seed, domains::EXPAND, li as u64),
        )?;
        if li == 0 {
            // The next finer level is the base graph.
            let mut state = OptimizerState::warm(n, cfg.k, settings.clone());
            x = force_directed_layout(g, cfg, &mut state, base_x)?;
            levels.push(LevelReport {
                nodes: n,
                edges: g.edge_count(),
                k: cfg.k,
                iterations: settings.max_iterations,
                polish_iterations: opts.polish_iterations,
            });
        } else {
            let finer = li - 1;
            let x0 = project_to_level(&base_x, &partitions[finer], g)?;
            let fg = &coarse_graphs[finer];
            let mut state = OptimizerState::warm(fg.node_count(), cfg.k, settings.clone());
            x = force_directed_layout(fg, cfg, &mut state, x0)?;
            levels.push(LevelReport {
                nodes: fg.node_count(),
                edges: fg.edge_count(),
                k: cfg.k,
                iterations: settings.max_iterations,
                polish_iterations: opts.polish_iterations,
            });
        }
    }

    let mut level_graphs = vec![g.clone()];
    level_graphs.extend(coarse_graphs);
    Ok(MultilevelRun {
        layout: x,
        levels,
        level_graphs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forces::ForceRule;
    use crate::gen;

    #[test]
    fn k_centers_on_path_matches_trace() {
        // First center 0, k = 2: the farthest node is 4; node 2 ties at
        // distance 2 and goes to the lower center id.
        let g = gen::path(5);
        let kc = select_k_centers_from(&g, 2, 0).unwrap();
        assert_eq!(kc.centers, vec![0, 4]);
        let partition = Partition {
            part_of: kc.nearest,
            part_count: 2,
        };
        assert_eq!(partition.part_of, vec![0, 0, 0, 1, 1]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let g = gen::cycle(6);
        let p = k_centers_partition(&g, 6, 3).unwrap();
        let mut sizes = vec![0; 6];
        for &part in &p.part_of {
            sizes[part] += 1;
        }
        assert!(sizes.iter().all(|&s| s == 1));
    }

    #[test]
    fn k_one_single_part() {
        let g = gen::grid(3, 3);
        let p = k_centers_partition(&g, 1, 5).unwrap();
        assert!(p.part_of.iter().all(|&part| part == 0));
    }

    #[test]
    fn k_out_of_range_errors() {
        let g = gen::path(3);
        assert!(k_centers_partition(&g, 0, 0).is_err());
        assert!(k_centers_partition(&g, 4, 0).is_err());
    }

    #[test]
    fn parts_cover_and_are_nonempty() {
        for seedling in 0..6u64 {
            let g = gen::random_connected(24, 18, seedling);
            for k in [2, 3, 7, 12] {
                let p = k_centers_partition(&g, k, seedling).unwrap();
                let members = p.members();
                assert_eq!(members.iter().map(|m| m.len()).sum::<usize>(), 24);
                assert!(members.iter().all(|m| !m.is_empty()));
            }
        }
    }

    fn next_combination(combo: &mut [usize], n: usize) -> bool {
        let k = combo.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in (i + 1)..k {
                    combo[j] = combo[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }

    #[test]
    fn greedy_radius_within_twice_optimum() {
        // Brute-force the optimal k-center radius on small graphs.
        for seedling in 0..5u64 {
            let g = gen::random_connected(9, 6, seedling);
            let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
            let n = g.node_count();
            for k in [1usize, 2, 3] {
                let kc = select_k_centers(&g, k, seedling).unwrap();
                let greedy_radius = kc.dist.iter().cloned().fold(0.0, f64::max);

                let mut best = f64::INFINITY;
                let mut combo = (0..k).collect::<Vec<usize>>();
                loop {
                    let radius = (0..n)
                        .map(|v| {
                            combo
                                .iter()
                                .map(|&c| d.get(v, c))
                                .fold(f64::INFINITY, f64::min)
                        })
                        .fold(0.0, f64::max);
                    best = best.min(radius);
                    if !next_combination(&mut combo, n) {
                        break;
                    }
                }
                assert!(
                    greedy_radius <= 2.0 * best + 1e-9,
                    "k={k}: greedy {greedy_radius} optimal {best}"
                );
            }
        }
    }

    #[test]
    fn aggregation_of_path4() {
        let g = gen::path(4);
        let partition = Partition {
            part_of: vec![0, 0, 1, 1],
            part_count: 2,
        };
        let coarse = aggregate_by_partition(&g, &partition);
        assert_eq!(coarse.node_count(), 2);
        assert_eq!(coarse.edge_count(), 1);
        assert_eq!(coarse.edges()[0].weight, 1.0);
        assert_eq!(coarse.node_weight(0), 2.0);
    }

    #[test]
    fn target_n_is_isomorphic_and_target_one_collapses() {
        let g = gen::cycle(5);
        let (coarse, _) = coarsen_by_partition(&g, 5, 2).unwrap();
        assert_eq!(coarse.node_count(), 5);
        assert_eq!(coarse.edge_count(), 5);
        let mut degrees: Vec<usize> = (0..5).map(|v| coarse.degree(v)).collect();
        degrees.sort_unstable();
        assert_eq!(degrees, vec![2, 2, 2, 2, 2]);

        let (one, _) = coarsen_by_partition(&g, 1, 2).unwrap();
        assert_eq!(one.node_count(), 1);
        assert_eq!(one.edge_count(), 0);
        assert_eq!(one.node_weight(0), 5.0);
    }

    #[test]
    fn expansion_stays_inside_circles() {
        let g = gen::grid(4, 4);
        let cfg = ForceConfig::with_rules([ForceRule::Stress]);
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        let partition = k_centers_partition(&g, 4, 1).unwrap();
        let coarse_layout = Layout::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(0.0, 10.0),
            Vec2::new(10.0, 10.0),
        ]);
        let x = expand_via_base(
            &g,
            Some(&d),
            &partition,
            &coarse_layout,
            &cfg,
            &OptimizerSettings::default(),
            20,
            77,
        )
        .unwrap();
        let circles = part_circles(&partition, &coarse_layout, cfg.k).unwrap();
        for v in 0..16 {
            assert!(circles[partition.part_of[v]].contains(x.pos(v), 1e-9));
        }
        // Circles are disjoint by the half-distance rule.
        for p in 0..4 {
            for q in (p + 1)..4 {
                let gap = (circles[p].center - circles[q].center).norm();
                assert!(gap >= circles[p].radius + circles[q].radius - 1e-9);
            }
        }
    }

    #[test]
    fn singleton_part_sits_exactly_at_center() {
        let g = gen::path(3);
        let cfg = ForceConfig::with_rules([ForceRule::Stress]);
        let d = shortest_path_distances(&g, DistanceMode::Weighted).unwrap();
        let partition = Partition {
            part_of: vec![0, 1, 2],
            part_count: 3,
        };
        let coarse_layout = Layout::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(8.0, 0.0),
        ]);
        let x = expand_via_base(
            &g,
            Some(&d),
            &partition,
            &coarse_layout,
            &cfg,
            &OptimizerSettings::default(),
            0,
            3,
        )
        .unwrap();
        for v in 0..3 {
            assert_eq!(x.pos(v), coarse_layout.pos(v));
        }
    }

    #[test]
    fn projection_cases() {
        let g = gen::path(2);
        let partition = Partition {
            part_of: vec![0, 0],
            part_count: 1,
        };
        let base = Layout::new(vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0)]);
        let proj = project_to_level(&base, &partition, &g).unwrap();
        assert_eq!(proj.pos(0), Vec2::new(1.0, 0.0));

        // Weighted: w=1 at (0,0), w=3 at (4,0) -> centroid (3,0).
        let wg = Graph::from_weighted_nodes(vec![1.0, 3.0], vec![(0, 1, 1.0)]).unwrap();
        let base = Layout::new(vec![Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)]);
        let proj = project_to_level(&base, &partition, &wg).unwrap();
        assert_eq!(proj.pos(0), Vec2::new(3.0, 0.0));

        // Singleton parts are the identity.
        let partition = Partition {
            part_of: vec![0, 1],
            part_count: 2,
        };
        let proj = project_to_level(&base, &partition, &g).unwrap();
        assert_eq!(proj.positions(), base.positions());
    }

    #[test]
    fn pipeline_below_threshold_single_level() {
        let g = gen::path(5);
        let cfg = ForceConfig::with_rules([ForceRule::Stress]);
        let run = multilevel_layout_2(
            &g,
            &cfg,
            &OptimizerSettings::with_iterations(15),
            &PartitionOptions::default(),
            1,
        )
        .unwrap();
        assert_eq!(run.levels.len(), 1);
    }

    #[test]
    fn pipeline_levels_halve() {
        let g = gen::grid(8, 8);
        let cfg = ForceConfig::with_rules([ForceRule::Stress]);
        let run = multilevel_layout_2(
            &g,
            &cfg,
            &OptimizerSettings::with_iterations(8),
            &PartitionOptions::default(),
            4,
        )
        .unwrap();
        // 64 -> 32 -> 16 -> 8: coarse level sizes, coarsest first in levels.
        let sizes: Vec<usize> = run.levels.iter().map(|l| l.nodes).collect();
        assert_eq!(sizes, vec![8, 16, 32, 64]);
        assert!(run.layout.is_finite());
    }

    #[test]
    fn pipeline_deterministic() {
        let g = gen::grid(5, 5);
        let cfg = ForceConfig::with_rules([ForceRule::Stress]);
        let run = |s| {
            multilevel_layout_2(
                &g,
                &cfg,
                &OptimizerSettings::with_iterations(10),
                &PartitionOptions::default(),
                s,
            )
            .unwrap()
            .layout
        };
        assert_eq!(run(7), run(7));
    }
}
