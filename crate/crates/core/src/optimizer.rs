//! Two-phase numerical optimizer: adaptive per-node steepest descent with
//! immediate (Gauss-Seidel) updates, followed by conjugate-gradient steps
//! scaled by a global adaptive temperature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forces::{self, ForceConfig};
use crate::geometry::Vec2;
use crate::graph::{shortest_path_distances, DistanceMatrix, Graph, Layout, NodeId};

/// Schedule knobs shared by every pipeline.
#[derive(Debug, Clone)]
pub struct OptimizerSettings {
    /// Cooling factor t of the global temperature.
    pub cooling_t: f64,
    /// Local temperature gain r.
    pub local_r: f64,
    /// Local temperature acceleration s.
    pub local_s: f64,
    /// Fraction of iterations spent in the steepest-descent phase.
    pub phase_split: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            cooling_t: 0.9,
            local_r: 0.15,
            local_s: 3.0,
            phase_split: 0.5,
            max_iterations: 200,
        }
    }
}

impl OptimizerSettings {
    pub fn with_iterations(max_iterations: usize) -> OptimizerSettings {
        OptimizerSettings {
            max_iterations,
            ..OptimizerSettings::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cooling_t.is_finite() && self.cooling_t > 0.0 && self.cooling_t < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling_t
            )));
        }
        if !(0.0..=1.0).contains(&self.phase_split) {
            return Err(Error::InvalidConfig(format!(
                "phase split must lie in [0, 1], got {}",
                self.phase_split
            )));
        }
        Ok(())
    }

    /// Number of steepest-descent passes out of `max_iterations`.
    pub fn descent_passes(&self) -> usize {
        ((self.phase_split * self.max_iterations as f64).round() as usize)
            .min(self.max_iterations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    SteepestDescent,
    ConjugateGradient,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::SteepestDescent => "sd",
            Phase::ConjugateGradient => "cg",
        }
    }
}

/// One row of the per-iteration energy trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub iteration: usize,
    pub phase: Phase,
    pub energy: f64,
    pub temperature: f64,
}

/// Mutable optimizer state: the global temperature with its progress
/// counter, and the per-node heat / displacement history.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub temperature: f64,
    pub progress: u32,
    pub heat: Vec<f64>,
    pub displace: Vec<Vec2>,
    pub old_displace: Vec<Vec2>,
    pub old_cos: Vec<f64>,
    pub settings: OptimizerSettings,
    heat_min: f64,
    heat_max: f64,
    last_energy: Option<f64>,
    prev_gradient: Option<Vec<Vec2>>,
    prev_direction: Option<Vec<Vec2>>,
    /// Filled when tracing was requested via [`OptimizerState::with_trace`].
    pub trace: Option<Vec<TraceRow>>,
}

impl OptimizerState {
    /// State for a cold (random) start: heat K per node, temperature
    /// 0.1 * K * sqrt(n).
    pub fn new(n: usize, k: f64, settings: OptimizerSettings) -> OptimizerState {
        Self::with_initial(n, k, 0.1 * k * (n as f64).sqrt(), k, settings)
    }

    /// State for a warm start (interpolated multilevel layouts): both the
    /// temperature and the heat start an order of magnitude below K, and
    /// grow adaptively if larger moves pay off.
    pub fn warm(n: usize, k: f64, settings: OptimizerSettings) -> OptimizerState {
        Self::with_initial(n, k, 0.1 * k, 0.1 * k, settings)
    }

    fn with_initial(
        n: usize,
        k: f64,
        temperature: f64,
        heat: f64,
        settings: OptimizerSettings,
    ) -> OptimizerState {
        OptimizerState {
            temperature,
            progress: 0,
            heat: vec![heat; n],
            displace: vec![Vec2::ZERO; n],
            old_displace: vec![Vec2::ZERO; n],
            old_cos: vec![0.0; n],
            settings,
            heat_min: 1e-4 * k,
            heat_max: 1e2 * k,
            last_energy: None,
            prev_gradient: None,
            prev_direction: None,
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> OptimizerState {
        self.trace = Some(Vec::new());
        self
    }

    /// Global temperature update: five consecutive energy decreases heat the
    /// system up by 1/t, any increase cools it by t.
    pub fn update_temperature(&mut self, energy: f64, energy0: f64) {
        if energy < energy0 {
            self.progress += 1;
            if self.progress >= 5 {
                self.progress = 0;
                self.temperature /= self.settings.cooling_t;
            }
        } else {
            self.progress = 0;
            self.temperature *= self.settings.cooling_t;
        }
    }

    /// Local temperature update from the angle between the current and
    /// previous displacement of `v`. Heat grows on steady motion, shrinks on
    /// oscillation, and is clamped so long runs neither underflow nor blow
    /// up.
    pub fn update_local_temperature(&mut self, v: NodeId) {
        let cur = self.displace[v];
        let old = self.old_displace[v];
        let nc = cur.norm();
        let no = old.norm();
        if nc == 0.0 || no == 0.0 {
            return;
        }
        let cos = cur.dot(old) / (nc * no);
        let (r, s) = (self.settings.local_r, self.settings.local_s);
        if self.old_cos[v] * cos > 0.0 {
            self.heat[v] *= 1.0 + cos * r * s;
        } else {
            self.heat[v] *= 1.0 + cos * r;
        }
        self.heat[v] = self.heat[v].clamp(self.heat_min, self.heat_max);
        self.old_cos[v] = cos;
    }
}

/// One Gauss-Seidel sweep: nodes move immediately, in ascending id order,
/// each by exactly its heat along the current composite force direction.
pub fn steepest_descent_pass(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &mut Layout,
    cfg: &ForceConfig,
    state: &mut OptimizerState,
    iteration_phase: f64,
) -> Result<()> {
    let n = g.node_count();
    for v in 0..n {
        let f = forces::composite_force_on(g, d, x, cfg, iteration_phase, v)?;
        state.displace[v] = f;
        state.update_local_temperature(v);
        let norm = f.norm();
        if norm == 0.0 {
            state.displace[v] = Vec2::ZERO;
            continue;
        }
        let step = f * (state.heat[v] / norm);
        state.displace[v] = step;
        x.set_pos(v, x.pos(v) + step);
    }
    state.old_displace.copy_from_slice(&state.displace);
    Ok(())
}

/// Polak-Ribiere coefficient, clamped at zero (a restart: the direction
/// falls back to the raw force).
pub fn polak_ribiere_beta(f: &[Vec2], f_prev: &[Vec2]) -> f64 {
    let denom: f64 = f_prev.iter().map(|v| v.norm_sq()).sum();
    if denom > 0.0 {
        let num: f64 = f
            .iter()
            .zip(f_prev.iter())
            .map(|(cur, prev)| cur.dot(*cur - *prev))
            .sum();
        (num / denom).max(0.0)
    } else {
        0.0
    }
}

/// One simultaneous conjugate-gradient step: the Polak-Ribiere direction
/// (restarted whenever beta would go negative) scaled so the largest mover
/// travels exactly the global temperature; afterwards the temperature adapts
/// to the new composite energy.
pub fn conjugate_gradient_pass(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &mut Layout,
    cfg: &ForceConfig,
    state: &mut OptimizerState,
    iteration_phase: f64,
) -> Result<()> {
    if state.last_energy.is_none() {
        state.last_energy = Some(forces::composite_energy(g, d, x, cfg)?);
    }
    let field = forces::composite_force(g, d, x, cfg, iteration_phase)?;
    let f = field.vectors();

    let direction: Vec<Vec2> = match (&state.prev_gradient, &state.prev_direction) {
        (Some(fp), Some(pp)) => {
            let beta = polak_ribiere_beta(f, fp);
            f.iter()
                .zip(pp.iter())
                .map(|(cur, prev_dir)| *cur + *prev_dir * beta)
                .collect()
        }
        _ => f.to_vec(),
    };

    let max_norm = direction.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        state.prev_gradient = Some(f.to_vec());
        state.prev_direction = Some(direction);
        return Ok(());
    }
    let scale = state.temperature / max_norm;
    for v in 0..g.node_count() {
        let step = direction[v] * scale;
        state.displace[v] = step;
        x.set_pos(v, x.pos(v) + step);
    }
    state.old_displace.copy_from_slice(&state.displace);

    let energy = forces::composite_energy(g, d, x, cfg)?;
    let energy0 = state.last_energy.unwrap();
    state.update_temperature(energy, energy0);
    state.last_energy = Some(energy);
    state.prev_gradient = Some(f.to_vec());
    state.prev_direction = Some(direction);
    Ok(())
}

fn check_finite(x: &Layout, iteration: usize) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericFailure { iteration })
    }
}

/// The full two-phase schedule: `phase_split * max_iterations` steepest
/// descent passes, then conjugate-gradient passes for the remainder.
///
/// Distances are computed internally when a distance-based rule is enabled.
/// With a fixed state and `x0` the result is bit-reproducible.
pub fn force_directed_layout(
    g: &Graph,
    cfg: &ForceConfig,
    state: &mut OptimizerState,
    x0: Layout,
) -> Result<Layout> {
    if x0.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: x0.len(),
        });
    }
    let mut x = x0;
    let max_iter = state.settings.max_iterations;
    if max_iter == 0 {
        return Ok(x);
    }
    let d = if cfg.needs_distances() {
        Some(shortest_path_distances(g, cfg.distance_mode)?)
    } else {
        None
    };
    let d = d.as_ref();

    let sd_passes = state.settings.descent_passes();
    for i in 0..max_iter {
        let phase_frac = i as f64 / max_iter as f64;
        let phase = if i < sd_passes {
            steepest_descent_pass(g, d, &mut x, cfg, state, phase_frac)?;
            Phase::SteepestDescent
        } else {
            if i == sd_passes && sd_passes > 0 {
                // Hand over at the step scale the descent phase settled
                // into, so the first gradient steps do not undo it.
                let mean_heat: f64 =
                    state.heat.iter().sum::<f64>() / state.heat.len() as f64;
                state.temperature = state.temperature.min(mean_heat);
            }
            conjugate_gradient_pass(g, d, &mut x, cfg, state, phase_frac)?;
            Phase::ConjugateGradient
        };
        check_finite(&x, i)?;
        if state.trace.is_some() {
            let energy = forces::composite_energy(g, d, &x, cfg)?;
            let row = TraceRow {
                iteration: i,
                phase,
                energy,
                temperature: state.temperature,
            };
            state.trace.as_mut().unwrap().push(row);
        }
    }
    Ok(x)
}

/// Random layout in a square of side `K * sqrt(n)`, the cold-start
/// initializer of every pipeline.
pub fn random_layout(n: usize, k: f64, seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Layout::random_in_square(n, k * (n as f64).sqrt(), &mut rng)
}

/// Single-level pipeline: random start plus one two-phase run.
pub fn single_level_layout(
    g: &Graph,
    cfg: &ForceConfig,
    settings: &OptimizerSettings,
    seed: u64,
) -> Result<Layout> {
    let x0 = random_layout(g.node_count(), cfg.k, seed);
    let mut state = OptimizerState::new(g.node_count(), cfg.k, settings.clone());
    force_directed_layout(g, cfg, &mut state, x0)
}

/// Per-node circular movement bound used by the constrained polish passes.
#[derive(Debug, Clone, Copy)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    /// Radially clip `p` into the circle.
    pub fn clip(&self, p: Vec2) -> Vec2 {
        let rel = p - self.center;
        let dist = rel.norm();
        if dist <= self.radius || dist == 0.0 {
            p
        } else {
            self.center + rel * (self.radius / dist)
        }
    }

    pub fn contains(&self, p: Vec2, slack: f64) -> bool {
        (p - self.center).norm() <= self.radius + slack
    }
}

/// Steepest-descent sweeps in which every displacement leaving a node's
/// circle is radially clipped to the boundary.
pub fn constrained_descent(
    g: &Graph,
    d: Option<&DistanceMatrix>,
    x: &mut Layout,
    cfg: &ForceConfig,
    circles: &[Circle],
    iterations: usize,
    state: &mut OptimizerState,
) -> Result<()> {
    if circles.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: circles.len(),
        });
    }
    for _ in 0..iterations {
        for v in 0..g.node_count() {
            let f = forces::composite_force_on(g, d, x, cfg, 0.0, v)?;
            state.displace[v] = f;
            state.update_local_temperature(v);
            let norm = f.norm();
            if norm == 0.0 {
                state.displace[v] = Vec2::ZERO;
                continue;
            }
            let raw = x.pos(v) + f * (state.heat[v] / norm);
            let clipped = circles[v].clip(raw);
            state.displace[v] = clipped - x.pos(v);
            x.set_pos(v, clipped);
        }
        state.old_displace.copy_from_slice(&state.displace);
    }
    Ok(())
}
