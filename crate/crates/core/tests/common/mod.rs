#![allow(dead_code)] // shared across test targets; not every target uses every helper

//! Shared oracles for the integration suites: finite differences,
//! Floyd-Warshall, and layout generators kept independent of the library's
//! own shortest-path and force code.

use graphforce::{Graph, Layout, Vec2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference gradient of `energy` with respect to the coordinates
/// of node `v`.
pub fn fd_gradient<F>(x: &Layout, v: usize, h: f64, mut energy: F) -> Vec2
where
    F: FnMut(&Layout) -> f64,
{
    let mut probe = x.clone();
    let p = x.pos(v);

    probe.set_pos(v, Vec2::new(p.x + h, p.y));
    let fx_plus = energy(&probe);
    probe.set_pos(v, Vec2::new(p.x - h, p.y));
    let fx_minus = energy(&probe);

    probe.set_pos(v, Vec2::new(p.x, p.y + h));
    let fy_plus = energy(&probe);
    probe.set_pos(v, Vec2::new(p.x, p.y - h));
    let fy_minus = energy(&probe);

    Vec2::new(
        (fx_plus - fx_minus) / (2.0 * h),
        (fy_plus - fy_minus) / (2.0 * h),
    )
}

pub fn cosine(a: Vec2, b: Vec2) -> f64 {
    a.dot(b) / (a.norm() * b.norm())
}

/// All-pairs shortest paths by Floyd-Warshall, the reference for the
/// Dijkstra/BFS implementation.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        d[e.u][e.v] = d[e.u][e.v].min(e.weight);
        d[e.v][e.u] = d[e.v][e.u].min(e.weight);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random layout in `[0, side]^2` whose pairwise distances all exceed
/// `min_sep`, so finite-difference probes never cross a branch.
pub fn separated_layout(n: usize, side: f64, min_sep: f64, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'retry: for _ in 0..1000 {
        let pts: Vec<Vec2> = (0..n)
            .map(|_| Vec2::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
            .collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if (pts[i] - pts[j]).norm() < min_sep {
                    continue 'retry;
                }
            }
        }
        return Layout::new(pts);
    }
    panic!("could not place {n} nodes with separation {min_sep} in side {side}");
}
