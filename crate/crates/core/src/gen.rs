//! Deterministic graph constructors for demos, tests and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Graph;

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (v - 1, v, 1.0))).unwrap()
}

pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|v| (v, (v + 1) % n, 1.0))).unwrap()
}

/// Star with the hub at node 0 and `n - 1` leaves.
pub fn star(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (0, v, 1.0))).unwrap()
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v, 1.0)));
    Graph::from_edges(n, edges).unwrap()
}

/// `w x h` grid, nodes numbered row-major.
pub fn grid(w: usize, h: usize) -> Graph {
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = y * w + x;
            if x + 1 < w {
                edges.push((v, v + 1, 1.0));
            }
            if y + 1 < h {
                edges.push((v, v + w, 1.0));
            }
        }
    }
    Graph::from_edges(w * h, edges).unwrap()
}

/// Random connected graph: a random attachment tree plus `extra_edges`
/// additional distinct edges, all unit weight.
pub fn random_connected(n: usize, extra_edges: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1) + extra_edges);
    let mut present = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v, 1.0));
        present.insert((u, v));
    }
    if n >= 2 {
        let mut added = 0;
        let mut attempts = 0;
        while added < extra_edges && attempts < extra_edges * 20 + 100 {
            attempts += 1;
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if present.insert(key) {
                edges.push((key.0, key.1, 1.0));
                added += 1;
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Like [`random_connected`] but with edge weights drawn uniformly from
/// `[lo, hi]`.
pub fn random_connected_weighted(
    n: usize,
    extra_edges: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Graph {
    let base = random_connected(n, extra_edges, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xda3e_39cb_94b9_5bdb);
    let edges = base
        .edges()
        .iter()
        .map(|e| (e.u, e.v, lo + (hi - lo) * rng.gen::<f64>()))
        .collect::<Vec<_>>();
    Graph::from_edges(n, edges).unwrap()
}
