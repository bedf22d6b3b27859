//! Flow construction for a fixed impulse time sequence.
//!
//! Between impulses the active configuration's vector field is integrated
//! with fixed-step RK4 on a grid snapped to the segment: interior points sit
//! at start + j·h and the segment endpoint is always a grid point. At an
//! impulse the jump rule consumes the left-limit state (and reads the input
//! signal however it needs to) and the next segment starts right-continuous
//! from the post-jump state. Grid alignment is what makes the identity,
//! causality and cocycle checks deterministic.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::core_state::{
    transition, ConfigId, ConfigRegistry, ConfigTransitionMap, Configuration, LiveState, StateView,
};
use crate::error::{LiveError, Result};
use crate::numerics::{rk4_step, snapped_grid, Rk4Scratch};
use crate::signals::InputSignal;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_ESCAPE: f64 = 1e9;

/// Strictly increasing impulse times; index k of an impulse is its 1-based
/// position in the list.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSchedule {
    times: Vec<f64>,
}

impl ImpulseSchedule {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(LiveError::InvalidSchedule("impulse times must be finite and positive".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LiveError::InvalidSchedule("impulse times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn empty() -> Self {
        Self { times: Vec::new() }
    }

    /// t_k = k·period for k = 1.. while k·period ≤ horizon.
    pub fn periodic(period: f64, horizon: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(LiveError::InvalidSchedule("period must be positive".into()));
        }
        let mut times = Vec::new();
        let mut k = 1u64;
        loop {
            let t = period * k as f64;
            if t > horizon {
                break;
            }
            times.push(t);
            k += 1;
        }
        Self::new(times)
    }

    /// t_k = scale·ln(k + 1) for k = 1.. while below the horizon: gaps shrink
    /// like 1/k, so impulses become ever denser without accumulating.
    pub fn log_shrinking(scale: f64, horizon: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(LiveError::InvalidSchedule("scale must be positive".into()));
        }
        let mut times = Vec::new();
        let mut k = 1u64;
        loop {
            let t = scale * ((k + 1) as f64).ln();
            if t > horizon {
                break;
            }
            times.push(t);
            k += 1;
        }
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Impulse times strictly after `t`, re-based by −t (the schedule seen by
    /// a system restarted at time t).
    pub fn shifted_after(&self, t: f64) -> ImpulseSchedule {
        ImpulseSchedule {
            times: self.times.iter().filter(|x| **x > t).map(|x| x - t).collect(),
        }
    }

    /// N(t, s): number of impulse times in the half-open interval (s, t].
    pub fn count_in(&self, s: f64, t: f64) -> usize {
        debug_assert!(s <= t);
        let lo = self.times.partition_point(|x| *x <= s);
        let hi = self.times.partition_point(|x| *x <= t);
        hi - lo
    }
}

/// Result of a jump rule: the target configuration and the stacked post-jump
/// vector in that configuration's canonical layout.
#[derive(Debug, Clone)]
pub struct JumpOutput {
    pub config: ConfigId,
    pub stacked: Vec<f64>,
}

/// Jump function: consumes the left-limit state, the impulse time and index,
/// and the input signal; produces the post-jump state in the target
/// configuration.
pub type JumpFn =
    Arc<dyn Fn(&StateView<'_>, f64, u64, &InputSignal) -> Result<JumpOutput> + Send + Sync>;

/// Vector field of one configuration, writing the stacked derivative into
/// `out`.
pub type FieldFn =
    Arc<dyn Fn(f64, &StateView<'_>, &InputSignal, &mut [f64]) -> Result<()> + Send + Sync>;

/// Jump rules keyed by (source, target) configuration ids.
#[derive(Default, Clone)]
pub struct JumpTable {
    rules: HashMap<(ConfigId, ConfigId), JumpFn>,
}

impl JumpTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: ConfigId, to: ConfigId, rule: JumpFn) {
        self.rules.insert((from, to), rule);
    }

    pub fn get(&self, from: ConfigId, to: ConfigId) -> Option<&JumpFn> {
        self.rules.get(&(from, to))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(ConfigId, ConfigId)> {
        self.rules.keys()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Debug for JumpTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JumpTable({} rules)", self.rules.len())
    }
}

/// A live system ready to evolve: configuration registry, per-configuration
/// vector fields, the configuration-transition map, jump rules, and the
/// blow-up threshold.
#[derive(Clone)]
pub struct LiveSystemDefinition {
    pub registry: ConfigRegistry,
    fields: HashMap<ConfigId, FieldFn>,
    pub transition_map: ConfigTransitionMap,
    pub jumps: JumpTable,
    pub escape_threshold: f64,
}

impl fmt::Debug for LiveSystemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LiveSystemDefinition({} configs, {} jump rules, escape {})",
            self.registry.len(),
            self.jumps.len(),
            self.escape_threshold
        )
    }
}

impl LiveSystemDefinition {
    pub fn new(registry: ConfigRegistry, transition_map: ConfigTransitionMap) -> Self {
        Self {
            registry,
            fields: HashMap::new(),
            transition_map,
            jumps: JumpTable::new(),
            escape_threshold: DEFAULT_ESCAPE,
        }
    }

    pub fn with_escape(mut self, threshold: f64) -> Self {
        self.escape_threshold = threshold;
        self
    }

    pub fn set_field(&mut self, config: ConfigId, field: FieldFn) {
        self.fields.insert(config, field);
    }

    pub fn set_jump(&mut self, from: ConfigId, to: ConfigId, rule: JumpFn) {
        self.jumps.insert(from, to, rule);
    }

    pub fn field(&self, config: ConfigId) -> Result<&FieldFn> {
        self.fields.get(&config).ok_or(LiveError::MissingField(config))
    }
}

/// How much of the trajectory to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateStorage {
    /// Every grid sample as a stacked state (the default).
    #[default]
    Full,
    /// Only times, pseudonorms, and the final state. Jump records carry
    /// norms but no states. Needed when the dimension grows so fast that
    /// storing dense states would dominate memory.
    NormsOnly,
}

#[derive(Clone)]
pub struct EvolveOptions {
    pub step: f64,
    pub storage: StateStorage,
    /// Extra scalar observable recorded at every grid sample (e.g. a
    /// Lyapunov function).
    pub observer: Option<ObserverFn>,
}

impl fmt::Debug for EvolveOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolveOptions")
            .field("step", &self.step)
            .field("storage", &self.storage)
            .field("observer", &self.observer.is_some())
            .finish()
    }
}

pub type ObserverFn = Arc<dyn Fn(&StateView<'_>) -> f64 + Send + Sync>;

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, storage: StateStorage::Full, observer: None }
    }
}

impl EvolveOptions {
    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalStatus {
    CompletedHorizon,
    /// The pseudonorm crossed the escape threshold; `t_esc` is the first
    /// grid time at which that was observed.
    BlowUp { t_esc: f64 },
}

/// One inter-impulse piece of a trajectory. The sample at the final grid
/// point is the left-limit state at the segment's right end.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub config: Arc<Configuration>,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub observed: Option<Vec<f64>>,
    /// Stacked states per grid point; absent under NormsOnly storage.
    pub states: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub t: f64,
    pub k: u64,
    pub pre_norm: f64,
    pub post_norm: f64,
    pub pre: Option<LiveState>,
    pub post: Option<LiveState>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub segments: Vec<TrajectorySegment>,
    pub jumps: Vec<JumpRecord>,
    pub status: TerminalStatus,
    pub final_state: LiveState,
    pub final_time: f64,
}

impl Trajectory {
    pub fn blew_up(&self) -> bool {
        matches!(self.status, TerminalStatus::BlowUp { .. })
    }

    /// State at a grid time; exact time match. The state at an impulse time
    /// is the post-jump one (trajectories are right-continuous).
    pub fn state_at(&self, t: f64) -> Option<LiveState> {
        // Later segments win at shared boundary times.
        for seg in self.segments.iter().rev() {
            if seg.times.is_empty() || t < seg.times[0] {
                continue;
            }
            if let Ok(idx) = seg.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                let states = seg.states.as_ref()?;
                return Some(seg.config.unpack(&states[idx]));
            }
        }
        None
    }

    pub fn norm_at(&self, t: f64) -> Option<f64> {
        for seg in self.segments.iter().rev() {
            if seg.times.is_empty() || t < seg.times[0] {
                continue;
            }
            if let Ok(idx) = seg.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                return Some(seg.norms[idx]);
            }
        }
        None
    }

    /// All (time, norm) samples in order.
    pub fn norm_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.segments
            .iter()
            .flat_map(|seg| seg.times.iter().copied().zip(seg.norms.iter().copied()))
    }

    pub fn max_norm(&self) -> f64 {
        self.norm_samples().fold(0.0_f64, |m, (_, n)| m.max(n))
    }

    pub fn sample_count(&self) -> usize {
        self.segments.iter().map(|s| s.times.len()).sum()
    }

    /// Bitwise equality of all samples up to and including time `t` (grid
    /// times only make sense here). Used by the causality and restriction
    /// checks.
    pub fn bitwise_prefix_eq(&self, other: &Trajectory, t: f64) -> bool {
        let mine = self.prefix_samples(t);
        let theirs = other.prefix_samples(t);
        if mine.len() != theirs.len() {
            return false;
        }
        mine.iter().zip(theirs.iter()).all(|(a, b)| {
            a.0.to_bits() == b.0.to_bits()
                && a.1 == b.1
                && a.2.len() == b.2.len()
                && a.2.iter().zip(b.2.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
        })
    }

    fn prefix_samples(&self, t: f64) -> Vec<(f64, ConfigId, &[f64])> {
        let mut out = Vec::new();
        for seg in &self.segments {
            let Some(states) = seg.states.as_ref() else { continue };
            for (i, time) in seg.times.iter().enumerate() {
                if *time <= t {
                    out.push((*time, seg.config.id(), states[i].as_slice()));
                }
            }
        }
        out
    }
}

/// Integrate the live system from `x0` under schedule `sched` and input `u`
/// up to `horizon`.
///
/// The first stored sample is `x0` itself, so the identity property holds
/// exactly. An impulse time equal to the horizon is applied and the
/// trajectory ends immediately after it.
pub fn evolve(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    x0: &LiveState,
    u: &InputSignal,
    horizon: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(LiveError::InvalidArgument("horizon must be positive".into()));
    }
    if !(opts.step.is_finite() && opts.step > 0.0) {
        return Err(LiveError::InvalidArgument("step must be positive".into()));
    }
    let mut config = sys.registry.get(x0.config)?;
    let mut state = config.pack(&x0.blocks)?;

    let mut segments: Vec<TrajectorySegment> = Vec::new();
    let mut jumps: Vec<JumpRecord> = Vec::new();
    let mut status = TerminalStatus::CompletedHorizon;
    let mut scratch = Rk4Scratch::new(state.len());
    let full = matches!(opts.storage, StateStorage::Full);

    // Impulses within (0, horizon], paired with their 1-based indices.
    let events: Vec<(u64, f64)> = sched
        .times()
        .iter()
        .enumerate()
        .filter(|(_, t)| **t <= horizon)
        .map(|(i, t)| ((i + 1) as u64, *t))
        .collect();

    let mut t_cursor = 0.0;
    let mut event_idx = 0usize;
    'outer: loop {
        let seg_end = if event_idx < events.len() { events[event_idx].1 } else { horizon };
        debug_assert!(seg_end > t_cursor);
        let grid = snapped_grid(t_cursor, seg_end, opts.step);

        let field = sys.field(config.id())?;
        scratch.resize(state.len());

        let mut seg = TrajectorySegment {
            config: Arc::clone(&config),
            times: Vec::with_capacity(grid.len()),
            norms: Vec::with_capacity(grid.len()),
            observed: opts.observer.as_ref().map(|_| Vec::with_capacity(grid.len())),
            states: full.then(|| Vec::with_capacity(grid.len())),
        };

        let push_sample =
            |seg: &mut TrajectorySegment, t: f64, data: &[f64], cfg: &Configuration| {
                let norm = cfg.stacked_norm(data);
                seg.times.push(t);
                seg.norms.push(norm);
                if let Some(obs) = opts.observer.as_ref() {
                    let v = obs(&StateView::new(cfg, data));
                    seg.observed.as_mut().unwrap().push(v);
                }
                if let Some(states) = seg.states.as_mut() {
                    states.push(data.to_vec());
                }
                norm
            };

        let first_norm = push_sample(&mut seg, grid[0], &state, &config);
        if first_norm > sys.escape_threshold {
            status = TerminalStatus::BlowUp { t_esc: grid[0] };
            segments.push(seg);
            break 'outer;
        }

        for w in grid.windows(2) {
            let (t, t_next) = (w[0], w[1]);
            let mut eval = |time: f64, x: &[f64], out: &mut [f64]| -> Result<()> {
                let view = StateView::new(&config, x);
                field(time, &view, u, out)
            };
            rk4_step(&mut eval, t, t_next - t, &mut state, &mut scratch)?;
            if state.iter().any(|v| !v.is_finite()) {
                return Err(LiveError::Numerical { t: t_next, reason: "non-finite state".into() });
            }
            let norm = push_sample(&mut seg, t_next, &state, &config);
            if norm > sys.escape_threshold {
                status = TerminalStatus::BlowUp { t_esc: t_next };
                segments.push(seg);
                break 'outer;
            }
        }
        segments.push(seg);

        if event_idx >= events.len() {
            break;
        }

        // Jump at seg_end with the left-limit state.
        let (k, t_k) = events[event_idx];
        let next_id = transition(&sys.transition_map, &sys.registry, config.id(), k)?;
        let rule = sys
            .jumps
            .get(config.id(), next_id)
            .ok_or(LiveError::MissingJumpRule { from: config.id(), to: next_id })?;
        let pre_view = StateView::new(&config, &state);
        let pre_norm = config.stacked_norm(&state);
        let post = rule(&pre_view, t_k, k, u)?;
        if post.config != next_id {
            return Err(LiveError::MalformedState {
                config: post.config,
                reason: format!("jump rule produced configuration {} instead of {next_id}", post.config),
            });
        }
        let next_config = sys.registry.get(next_id)?;
        if post.stacked.len() != next_config.total_dim() {
            return Err(LiveError::MalformedState {
                config: next_id,
                reason: format!(
                    "jump rule produced {} entries, configuration has dimension {}",
                    post.stacked.len(),
                    next_config.total_dim()
                ),
            });
        }
        let post_norm = next_config.stacked_norm(&post.stacked);
        jumps.push(JumpRecord {
            t: t_k,
            k,
            pre_norm,
            post_norm,
            pre: full.then(|| config.unpack(&state)),
            post: full.then(|| next_config.unpack(&post.stacked)),
        });
        config = next_config;
        state = post.stacked;
        t_cursor = t_k;
        event_idx += 1;

        if t_k >= horizon {
            // Impulse at the horizon: record the post state and stop.
            let seg = TrajectorySegment {
                config: Arc::clone(&config),
                times: vec![t_k],
                norms: vec![config.stacked_norm(&state)],
                observed: opts
                    .observer
                    .as_ref()
                    .map(|obs| vec![obs(&StateView::new(&config, &state))]),
                states: full.then(|| vec![state.clone()]),
            };
            if seg.norms[0] > sys.escape_threshold {
                status = TerminalStatus::BlowUp { t_esc: t_k };
            }
            segments.push(seg);
            break;
        }
    }

    let final_time = segments
        .last()
        .and_then(|s| s.times.last().copied())
        .unwrap_or(0.0);
    let final_state = config.unpack(&state);
    Ok(Trajectory { segments, jumps, status, final_state, final_time })
}

/// Pass/fail entries produced by the axiom harness.
#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Identity property: the trajectory at time 0 is exactly the initial state.
pub fn check_identity(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    samples: &[(LiveState, InputSignal)],
    horizon: f64,
    opts: &EvolveOptions,
) -> Result<AxiomReport> {
    let mut failures = Vec::new();
    for (i, (x0, u)) in samples.iter().enumerate() {
        let traj = evolve(sys, sched, x0, u, horizon, opts)?;
        let at_zero = traj.state_at(0.0);
        if at_zero.as_ref() != Some(x0) {
            failures.push(format!("sample {i}: phi(0, x, u) != x"));
        }
    }
    Ok(AxiomReport { checked: samples.len(), failures })
}

/// Causality: inputs agreeing on [0, t] produce bitwise-identical prefixes.
/// For each sample the second input is `u ◇_t tail`, which agrees with `u` on
/// the closed interval [0, t] by construction.
pub fn check_causality(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    samples: &[(LiveState, InputSignal, f64, InputSignal)],
    horizon: f64,
    opts: &EvolveOptions,
) -> Result<AxiomReport> {
    let mut failures = Vec::new();
    for (i, (x0, u, t, tail)) in samples.iter().enumerate() {
        let altered = InputSignal::concatenate(u, tail, *t)?;
        let a = evolve(sys, sched, x0, u, horizon, opts)?;
        let b = evolve(sys, sched, x0, &altered, horizon, opts)?;
        if !a.bitwise_prefix_eq(&b, *t) {
            failures.push(format!("sample {i}: prefixes differ on [0, {t}]"));
        }
    }
    Ok(AxiomReport { checked: samples.len(), failures })
}

/// Cocycle property: restarting at a grid-aligned time t and evolving for h
/// lands within `tol` (in the pseudonorm of the difference of block vectors)
/// of the direct evolution to t + h. The restarted system sees the shifted
/// schedule {t_k − t : t_k > t} and input u(· + t).
pub fn check_cocycle(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    samples: &[(LiveState, InputSignal, f64, f64)],
    tol: f64,
    opts: &EvolveOptions,
) -> Result<AxiomReport> {
    let mut failures = Vec::new();
    for (i, (x0, u, t, h)) in samples.iter().enumerate() {
        let direct = evolve(sys, sched, x0, u, t + h, opts)?;
        if direct.blew_up() {
            failures.push(format!("sample {i}: blow-up before t+h"));
            continue;
        }
        let Some(mid) = direct.state_at(*t) else {
            failures.push(format!("sample {i}: t = {t} is not a grid point"));
            continue;
        };
        let shifted_u = u.shift(*t)?;
        let shifted_sched = sched.shifted_after(*t);
        let restarted = evolve(sys, &shifted_sched, &mid, &shifted_u, *h, opts)?;
        let a = direct.final_state;
        let b = restarted.final_state;
        if a.config != b.config {
            failures.push(format!("sample {i}: configurations differ after restart"));
            continue;
        }
        let config = sys.registry.get(a.config)?;
        let sa = config.pack(&a.blocks)?;
        let sb = config.pack(&b.blocks)?;
        let diff: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| x - y).collect();
        let err = config.stacked_norm(&diff);
        if err > tol {
            failures.push(format!("sample {i}: cocycle discrepancy {err:.3e} > {tol:.1e}"));
        }
    }
    Ok(AxiomReport { checked: samples.len(), failures })
}
