//! The six force rules, their energies, and linear blending into one
//! composite force field.
//!
//! Every rule emits, per node, a vector that is a positive multiple of the
//! negative gradient of its energy. Pairwise terms closer than a small
//! epsilon are evaluated at the epsilon separation along a direction hashed
//! from the pair ids, which keeps the field finite and antisymmetric even
//! for coincident nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::graph::{DistanceMatrix, DistanceMode, Graph, Layout, NodeId};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ForceRule {
    Spring,
    Attraction,
    Repulsion,
    NodeEdgeRepulsion,
    Stress,
    LinLog,
    BinaryStress,
}

impl ForceRule {
    pub const ALL: [ForceRule; 7] = [
        ForceRule::Spring,
        ForceRule::Attraction,
        ForceRule::Repulsion,
        ForceRule::NodeEdgeRepulsion,
        ForceRule::Stress,
        ForceRule::LinLog,
        ForceRule::BinaryStress,
    ];

    /// Rules whose evaluation needs the shortest-path distance matrix.
    pub fn needs_distances(self) -> bool {
        matches!(self, ForceRule::Spring | ForceRule::Stress)
    }
}

impl fmt::Display for ForceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ForceRule::Spring => "spring",
            ForceRule::Attraction => "attraction",
            ForceRule::Repulsion => "repulsion",
            ForceRule::NodeEdgeRepulsion => "node-edge",
            ForceRule::Stress => "stress",
            ForceRule::LinLog => "linlog",
            ForceRule::BinaryStress => "binary-stress",
        };
        f.write_str(name)
    }
}

impl FromStr for ForceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<ForceRule> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spring" => Ok(ForceRule::Spring),
            "attraction" => Ok(ForceRule::Attraction),
            "repulsion" => Ok(ForceRule::Repulsion),
            "node-edge" | "nodeedge" | "node_edge" => Ok(ForceRule::NodeEdgeRepulsion),
            "stress" => Ok(ForceRule::Stress),
            "linlog" => Ok(ForceRule::LinLog),
            "binary-stress" | "binarystress" | "binary_stress" => Ok(ForceRule::BinaryStress),
            other => Err(Error::InvalidConfig(format!("unknown force rule `{other}`"))),
        }
    }
}

/// Configuration of the composite force field.
#[derive(Debug, Clone)]
pub struct ForceConfig {
    pub enabled_rules: BTreeSet<ForceRule>,
    /// Blend weight per rule; rules absent from the map weigh 1.
    pub rule_weights: BTreeMap<ForceRule, f64>,
    /// Desired edge length K.
    pub k: f64,
    /// Exponent of the stress pair coefficient, omega = d^(-alpha).
    pub omega_exponent: f64,
    /// Balance constant of the binary stress blend.
    pub binary_alpha: f64,
    /// Exponent of the node-edge integrand; only 3 has a closed form.
    pub edge_repulsion_exponent: u32,
    /// Fraction of final iterations in which node-edge repulsion is active.
    pub edge_repulsion_tail_fraction: f64,
    pub distance_mode: DistanceMode,
}

impl Default for ForceConfig {
    fn default() -> Self {
        ForceConfig {
            enabled_rules: BTreeSet::from([ForceRule::Stress]),
            rule_weights: BTreeMap::new(),
            k: 1.0,
            omega_exponent: 2.0,
            binary_alpha: 1.0,
            edge_repulsion_exponent: 3,
            edge_repulsion_tail_fraction: 0.25,
            distance_mode: DistanceMode::Weighted,
        }
    }
}

impl ForceConfig {
    pub fn with_rules<I: IntoIterator<Item = ForceRule>>(rules: I) -> ForceConfig {
        ForceConfig {
            enabled_rules: rules.into_iter().collect(),
            ..ForceConfig::default()
        }
    }

    pub fn rule_weight(&self, rule: ForceRule) -> f64 {
        self.rule_weights.get(&rule).copied().unwrap_or(1.0)
    }

    pub fn needs_distances(&self) -> bool {
        self.enabled_rules.iter().any(|r| r.needs_distances())
    }

    /// Pairs closer than this are evaluated at this separation.
    pub fn min_pair_distance(&self) -> f64 {
        1e-9 * self.k
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::InvalidConfig(format!("K must be positive, got {}", self.k)));
        }
        if !(self.omega_exponent.is_finite() && self.omega_exponent >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega exponent must be >= 0, got {}",
                self.omega_exponent
            )));
        }
        if !(self.binary_alpha.is_finite() && self.binary_alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "binary stress alpha must be positive, got {}",
                self.binary_alpha
            )));
        }
        if self.edge_repulsion_exponent != 3 {
            return Err(Error::InvalidConfig(format!(
                "node-edge repulsion exponent {} is unsupported; only 3 has a closed form",
                self.edge_repulsion_exponent
            )));
        }
        if !(0.0..=1.0).contains(&self.edge_repulsion_tail_fraction) {
            return Err(Error::InvalidConfig(format!(
                "edge repulsion tail fraction must lie in [0, 1], got {}",
                self.edge_repulsion_tail_fraction
            )));
        }
        for (rule, &w) in &self.rule_weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "weight of rule {rule} must be >= 0, got {w}"
                )));
            }
        }
        if self.enabled_rules.is_empty() {
            return Err(Error::InvalidConfig("no force rules enabled".into()));
        }
        Ok(())
    }
}

/// Per-node summed force vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    vectors: Vec<Vec2>,
}

impl ForceField {
    pub fn new(vectors: Vec<Vec2>) -> ForceField {
        ForceField { vectors }
    }

    pub fn zeros(n: usize) -> ForceField {
        ForceField {
            vectors: vec![Vec2::ZERO; n],
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, v: NodeId) -> Vec2 {
        self.vectors[v]
    }

    pub fn vectors(&self) -> &[Vec2] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec2> {
        self.vectors
    }
}

/// The pair coefficient omega = d^(-alpha). Callers must exclude `d = 0`
/// (the diagonal).
pub fn pair_coefficient(d: f64, omega_exponent: f64) -> f64 {
    d.powf(-omega_exponent)
}

/// Deterministic unit direction for a near-coincident pair, hashed from the
/// pair ids so that both orientations are exact negations of each other.
fn pair_direction(lo: NodeId, hi: NodeId) -> Vec2 {
    let h = seed::mix(((lo as u64) << 32) ^ (hi as u64) ^ 0x706169725f646972);
    let theta = (h as f64 / u64::MAX as f64) * std::f64::consts::TAU;
    Vec2::from_angle(theta)
}

/// Difference vector `x_i - x_j` and its norm, floored at `eps`.
#[inline]
fn pair_delta(x: &Layout, i: NodeId, j: NodeId, eps: f64) -> (Vec2, f64) {
    let delta = x.pos(i) - x.pos(j);
    let r = delta.norm();
    if r < eps {
        let base = pair_direction(i.min(j), i.max(j));
        let dir = if i < j { base } else { -base };
        (dir * eps, eps)
    } else {
        (delta, r)
    }
}

#[inline]
fn pair_dist(x: &Layout, i: NodeId, j: NodeId) -> f64 {
    (x.pos(i) - x.pos(j)).norm()
}

fn require_distances<'a>(
    d: Option<&'a DistanceMatrix>,
    rule: ForceRule,
) -> Result<&'a DistanceMatrix> {
    d.ok_or(Error::DistancesRequired { rule })
}

// ---------------------------------------------------------------------------
// Per-node rule forces
// ---------------------------------------------------------------------------

fn spring_force_on(g: &Graph, d: &DistanceMatrix, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let mut f = Vec2::ZERO;
    for j in 0..g.node_count() {
        if j == i {
            continue;
        }
        let dij = d.get(i, j);
        let (delta, r) = pair_delta(x, i, j, eps);
        // Hooke term with the fixed 1/d^2 spring strength.
        let coeff = pair_coefficient(dij, 2.0) * (r - cfg.k * dij) / r;
        f -= delta * coeff;
    }
    f
}

fn attraction_force_on(g: &Graph, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let mut f = Vec2::ZERO;
    for nb in g.neighbors(i) {
        let (delta, r) = pair_delta(x, i, nb.node, eps);
        f -= delta * (r / cfg.k);
    }
    f
}

fn repulsion_force_on(g: &Graph, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let k2 = cfg.k * cfg.k;
    let mut f = Vec2::ZERO;
    for j in 0..g.node_count() {
        if j == i {
            continue;
        }
        let (delta, r) = pair_delta(x, i, j, eps);
        f += delta * (k2 / (r * r));
    }
    f
}

fn stress_force_on(g: &Graph, d: &DistanceMatrix, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let mut f = Vec2::ZERO;
    let mut omega_sum = 0.0;
    for j in 0..g.node_count() {
        if j == i {
            continue;
        }
        let dij = d.get(i, j);
        let omega = pair_coefficient(dij, cfg.omega_exponent);
        omega_sum += omega;
        let (delta, r) = pair_delta(x, i, j, eps);
        f -= delta * (omega * (r - dij * cfg.k) / r);
    }
    if omega_sum > 0.0 {
        f * (1.0 / omega_sum)
    } else {
        Vec2::ZERO
    }
}

fn linlog_force_on(g: &Graph, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let mut f = Vec2::ZERO;
    for nb in g.neighbors(i) {
        let (delta, r) = pair_delta(x, i, nb.node, eps);
        f -= delta * (1.0 / r);
    }
    for j in 0..g.node_count() {
        if j == i {
            continue;
        }
        let (delta, r) = pair_delta(x, i, j, eps);
        f += delta * (1.0 / (r * r));
    }
    f
}

fn binary_stress_force_on(g: &Graph, x: &Layout, cfg: &ForceConfig, i: NodeId) -> Vec2 {
    let eps = cfg.min_pair_distance();
    let mut f = Vec2::ZERO;
    for nb in g.neighbors(i) {
        let (delta, _) = pair_delta(x, i, nb.node, eps);
        f -= delta;
    }
    for j in 0..g.node_count() {
        if j == i {
            continue;
        }
        let (delta, r) = pair_delta(x, i, j, eps);
        f -= delta * (cfg.binary_alpha * (r - cfg.k) / r);
    }
    f
}

/// Closed-form repulsion of a charged segment `a..b` on the point `o` for
/// the cubic integrand. In segment coordinates (tangent `t`, normal `n`,
/// signed offset `h`, endpoint abscissae `s_a <= s_b` relative to the foot
/// of the perpendicular):
///
///   F_t = k^3/2 * (1/(s_b^2 + h^2) - 1/(s_a^2 + h^2))
///   F_n = k^3 * [ s / (2h (s^2+h^2)) + atan(s/h) / (2h^2) ]_{s_a}^{s_b}
fn segment_force(o: Vec2, a: Vec2, b: Vec2, k: f64) -> Vec2 {
    let ab = b - a;
    let len = ab.norm();
    if len == 0.0 {
        return Vec2::ZERO; // zero-length element integrates to nothing
    }
    let tangent = ab * (1.0 / len);
    let normal = tangent.perp();
    let rel = o - a;
    let proj = rel.dot(tangent);
    let h = rel.dot(normal);
    let sa = -proj;
    let sb = len - proj;

    // Distance from the node to the segment.
    let seg_dist = if proj < 0.0 {
        rel.norm()
    } else if proj > len {
        (o - b).norm()
    } else {
        h.abs()
    };
    if seg_dist < 1e-9 * k {
        // Node essentially on the segment: push along the normal, capped at k.
        let side = if h >= 0.0 { 1.0 } else { -1.0 };
        return normal * (k * side);
    }

    let k3 = k * k * k;
    let qa = sa * sa + h * h;
    let qb = sb * sb + h * h;
    let f_t = 0.5 * k3 * (1.0 / qb - 1.0 / qa);
    // The normal component cancels catastrophically for offsets that are
    // tiny relative to the abscissae; the true value there is O(h) and
    // negligible against f_t.
    let scale = sa.abs().max(sb.abs()).max(len);
    let f_n = if h.abs() < 1e-9 * scale {
        0.0
    } else {
        let anti = |s: f64, q: f64| s / (2.0 * h * q) + (s / h).atan() / (2.0 * h * h);
        k3 * (anti(sb, qb) - anti(sa, qa))
    };
    tangent * f_t + normal * f_n
}

fn node_edge_force_on(g: &Graph, x: &Layout, cfg: &ForceConfig, o: NodeId) -> Vec2 {
    let mut f = Vec2::ZERO;
    for e in g.edges() {
        if e.u == o || e.v == o {
            continue;
        }
        f += segment_force(x.pos(o), x.pos(e.u), x.pos(e.v), cfg.k);
    }
    f
}

/// Force of one rule on one node, evaluated against the current layout.
pub fn rule_force_on(
    rule: ForceRule,
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &Layout,
    cfg: &ForceConfig,
    v: NodeId,
) -> Result<Vec2> {
    Ok(match rule {
        ForceRule::Spring => spring_force_on(g, require_distances(d, rule)?, x, cfg, v),
        ForceRule::Attraction => attraction_force_on(g, x, cfg, v),
        ForceRule::Repulsion => repulsion_force_on(g, x, cfg, v),
        ForceRule::Stress => stress_force_on(g, require_distances(d, rule)?, x, cfg, v),
        ForceRule::LinLog => linlog_force_on(g, x, cfg, v),
        ForceRule::BinaryStress => binary_stress_force_on(g, x, cfg, v),
        ForceRule::NodeEdgeRepulsion => node_edge_force_on(g, x, cfg, v),
    })
}

/// Full force field of a single rule.
pub fn rule_force(
    rule: ForceRule,
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &Layout,
    cfg: &ForceConfig,
) -> Result<ForceField> {
    let vectors = (0..g.node_count())
        .map(|v| rule_force_on(rule, g, d, x, cfg, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForceField::new(vectors))
}

/// The node-edge repulsion field: for every (node, non-incident edge) pair,
/// the closed-form integral of the cubic repulsion along the segment.
pub fn node_edge_repulsion(g: &Graph, x: &Layout, cfg: &ForceConfig) -> ForceField {
    let vectors = (0..g.node_count())
        .map(|v| node_edge_force_on(g, x, cfg, v))
        .collect();
    ForceField::new(vectors)
}

/// Whether node-edge repulsion contributes at this point of the schedule.
pub fn node_edge_active(cfg: &ForceConfig, iteration_phase: f64) -> bool {
    cfg.enabled_rules.contains(&ForceRule::NodeEdgeRepulsion)
        && iteration_phase >= 1.0 - cfg.edge_repulsion_tail_fraction
}

/// Weighted blend of the enabled rules on one node. `iteration_phase` in
/// `[0, 1]` gates node-edge repulsion into the final iterations.
pub fn composite_force_on(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &Layout,
    cfg: &ForceConfig,
    iteration_phase: f64,
    v: NodeId,
) -> Result<Vec2> {
    let mut f = Vec2::ZERO;
    for &rule in &cfg.enabled_rules {
        if rule == ForceRule::NodeEdgeRepulsion && !node_edge_active(cfg, iteration_phase) {
            continue;
        }
        let w = cfg.rule_weight(rule);
        if w == 0.0 {
            continue;
        }
        f += rule_force_on(rule, g, d, x, cfg, v)? * w;
    }
    Ok(f)
}

pub fn composite_force(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &Layout,
    cfg: &ForceConfig,
    iteration_phase: f64,
) -> Result<ForceField> {
    let vectors = (0..g.node_count())
        .map(|v| composite_force_on(g, d, x, cfg, iteration_phase, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ForceField::new(vectors))
}

// ---------------------------------------------------------------------------
// Energies
// ---------------------------------------------------------------------------

/// S(X) = sum over i < j of omega_ij (||Xi - Xj|| - K d_ij)^2.
pub fn stress_energy(g: &Graph, d: &DistanceMatrix, x: &Layout, cfg: &ForceConfig) -> f64 {
    let n = g.node_count();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            let omega = pair_coefficient(dij, cfg.omega_exponent);
            let diff = pair_dist(x, i, j) - cfg.k * dij;
            s += omega * diff * diff;
        }
    }
    s
}

/// Spring energy with the fixed 1/d^2 strength; the antiderivative of the
/// spring rule, halved so its gradient matches the force exactly.
pub fn spring_energy(g: &Graph, d: &DistanceMatrix, x: &Layout, cfg: &ForceConfig) -> f64 {
    let n = g.node_count();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            let omega = pair_coefficient(dij, 2.0);
            let diff = pair_dist(x, i, j) - cfg.k * dij;
            s += omega * diff * diff / 2.0;
        }
    }
    s
}

/// Attraction antiderivative: sum over edges of r^3 / (3K).
pub fn attraction_energy(g: &Graph, x: &Layout, cfg: &ForceConfig) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let r = pair_dist(x, e.u, e.v);
            r * r * r / (3.0 * cfg.k)
        })
        .sum()
}

/// Repulsion antiderivative: sum over unordered distinct pairs of
/// -K^2 ln r. Errors on exactly coincident pairs.
pub fn repulsion_energy(g: &Graph, x: &Layout, cfg: &ForceConfig) -> Result<f64> {
    let n = g.node_count();
    let k2 = cfg.k * cfg.k;
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pair_dist(x, i, j);
            if r == 0.0 {
                return Err(Error::CoincidentNodes { i, j });
            }
            s -= k2 * r.ln();
        }
    }
    Ok(s)
}

/// LinLog energy: edge lengths minus log of all unordered distinct pair
/// distances. Errors on exactly coincident pairs.
pub fn linlog_energy(g: &Graph, x: &Layout) -> Result<f64> {
    let mut s = 0.0;
    for e in g.edges() {
        s += pair_dist(x, e.u, e.v);
    }
    let n = g.node_count();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = pair_dist(x, i, j);
            if r == 0.0 {
                return Err(Error::CoincidentNodes { i, j });
            }
            s -= r.ln();
        }
    }
    Ok(s)
}

/// B(X) = sum over edges of r^2, plus alpha times the disk-spreading term
/// over unordered distinct pairs with target K.
pub fn binary_stress_energy(g: &Graph, x: &Layout, cfg: &ForceConfig) -> f64 {
    let mut h = 0.0;
    for e in g.edges() {
        let r = pair_dist(x, e.u, e.v);
        h += r * r;
    }
    let n = g.node_count();
    let mut spread = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = pair_dist(x, i, j) - cfg.k;
            spread += diff * diff;
        }
    }
    h + cfg.binary_alpha * spread
}

/// Scale-invariant stress quality metric
/// U(X) = sum omega r^2 / (sum omega (K d) r)^2.
pub fn normalized_stress_u(
    g: &Graph,
    d: &DistanceMatrix,
    x: &Layout,
    cfg: &ForceConfig,
) -> Result<f64> {
    let n = g.node_count();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            let omega = pair_coefficient(dij, cfg.omega_exponent);
            let r = pair_dist(x, i, j);
            num += omega * r * r;
            den += omega * (cfg.k * dij) * r;
        }
    }
    if den == 0.0 {
        return Err(Error::DegenerateLayout);
    }
    Ok(num / (den * den))
}

/// Residual of the equilibrium identity satisfied by stress minimizers:
/// |sum omega r^2 - sum omega (K d) r| / sum omega (K d)^2.
pub fn theorem2_residual(
    g: &Graph,
    d: &DistanceMatrix,
    x: &Layout,
    cfg: &ForceConfig,
) -> Result<f64> {
    let n = g.node_count();
    let mut quad = 0.0;
    let mut cross = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d.get(i, j);
            let omega = pair_coefficient(dij, cfg.omega_exponent);
            let r = pair_dist(x, i, j);
            let target = cfg.k * dij;
            quad += omega * r * r;
            cross += omega * target * r;
            norm += omega * target * target;
        }
    }
    if norm == 0.0 {
        return Err(Error::DegenerateLayout);
    }
    Ok((quad - cross).abs() / norm)
}

/// Weighted sum of the enabled rules' energies, with pair distances floored
/// at the epsilon separation so log terms stay finite during optimization.
/// Node-edge repulsion carries no explicit energy and is skipped.
pub fn composite_energy(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &Layout,
    cfg: &ForceConfig,
) -> Result<f64> {
    let n = g.node_count();
    let eps = cfg.min_pair_distance();
    let mut total = 0.0;
    for &rule in &cfg.enabled_rules {
        let w = cfg.rule_weight(rule);
        if w == 0.0 || rule == ForceRule::NodeEdgeRepulsion {
            continue;
        }
        let e = match rule {
            ForceRule::Spring | ForceRule::Stress => {
                let d = require_distances(d, rule)?;
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let dij = d.get(i, j);
                        let exponent = if rule == ForceRule::Spring {
                            2.0
                        } else {
                            cfg.omega_exponent
                        };
                        let omega = pair_coefficient(dij, exponent);
                        let diff = pair_dist(x, i, j).max(eps) - cfg.k * dij;
                        let term = omega * diff * diff;
                        s += if rule == ForceRule::Spring { term / 2.0 } else { term };
                    }
                }
                s
            }
            ForceRule::Attraction => {
                let mut s = 0.0;
                for e in g.edges() {
                    let r = pair_dist(x, e.u, e.v).max(eps);
                    s += r * r * r / (3.0 * cfg.k);
                }
                s
            }
            ForceRule::Repulsion => {
                let k2 = cfg.k * cfg.k;
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        s -= k2 * pair_dist(x, i, j).max(eps).ln();
                    }
                }
                s
            }
            ForceRule::LinLog => {
                let mut s = 0.0;
                for e in g.edges() {
                    s += pair_dist(x, e.u, e.v).max(eps);
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        s -= pair_dist(x, i, j).max(eps).ln();
                    }
                }
                s
            }
            ForceRule::BinaryStress => {
                let mut s = 0.0;
                for e in g.edges() {
                    let r = pair_dist(x, e.u, e.v).max(eps);
                    s += r * r;
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        let diff = pair_dist(x, i, j).max(eps) - cfg.k;
                        s += cfg.binary_alpha * diff * diff;
                    }
                }
                s
            }
            ForceRule::NodeEdgeRepulsion => unreachable!(),
        };
        total += w * e;
    }
    Ok(total)
}
