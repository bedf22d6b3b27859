//! Open multi-agent systems: per-agent ODEs, arrival/departure sets, and the
//! compilation into a live-system definition.
//!
//! Arrivals are inputs: an agent entering at t_k starts from its input
//! channel's value at t_k (read right-continuously). Survivors may jump
//! through their own maps, which read left limits. The arrival set must be
//! disjoint from the pre-impulse configuration and departures must be
//! contained in it; either violation is a hard error raised before any
//! integration starts.
//!
//! `compile` walks the whole schedule once up front. When the realized chain
//! only ever appends agents with increasing indices (the common "network
//! grows" case), every configuration is a prefix view of one shared agent
//! buffer, so compiling K impulses costs O(K) memory instead of O(K²).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::core_state::{
    omas_set_update, AgentIndex, ConfigId, ConfigRegistry, ConfigTransitionMap, Configuration,
    LiveState, NormKind, SharedVec, StateView,
};
use crate::error::{LiveError, Result};
use crate::flow_engine::{
    FieldFn, ImpulseSchedule, JumpOutput, LiveSystemDefinition, DEFAULT_ESCAPE,
};
use crate::numerics::DenseMatrix;
use crate::signals::InputSignal;

/// Input values at one instant, one vector per agent channel.
pub type UValues = BTreeMap<AgentIndex, Vec<f64>>;

/// Instantaneous input-value norm: sup over channels of the Euclidean norm.
pub fn uvalues_norm(values: &UValues) -> f64 {
    values
        .values()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Continuous dynamics of one agent. Fields that read the input declare it
/// so the engine only evaluates channels that matter.
#[derive(Clone)]
pub enum AgentDynamics {
    /// ẋ = a·x (scalar block).
    LinearScalar(f64),
    /// ẋ_i = A x_i.
    Linear(Arc<DenseMatrix>),
    /// ẋ_i = A x_i + B u_i.
    LinearWithInput { a: Arc<DenseMatrix>, b: Arc<DenseMatrix> },
    /// ż = −z³ + ‖rest of the network‖ (scalar block); the cascade readout.
    CascadeZ,
    /// Arbitrary block derivative from the full state view and the agent's
    /// input value.
    Custom {
        reads_input: bool,
        f: Arc<dyn Fn(f64, &StateView<'_>, &[f64], &mut [f64]) -> Result<()> + Send + Sync>,
    },
}

impl fmt::Debug for AgentDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentDynamics::LinearScalar(a) => write!(f, "LinearScalar({a})"),
            AgentDynamics::Linear(_) => f.write_str("Linear(..)"),
            AgentDynamics::LinearWithInput { .. } => f.write_str("LinearWithInput(..)"),
            AgentDynamics::CascadeZ => f.write_str("CascadeZ"),
            AgentDynamics::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

impl AgentDynamics {
    fn reads_input(&self) -> bool {
        match self {
            AgentDynamics::LinearScalar(_) | AgentDynamics::Linear(_) | AgentDynamics::CascadeZ => {
                false
            }
            AgentDynamics::LinearWithInput { .. } => true,
            AgentDynamics::Custom { reads_input, .. } => *reads_input,
        }
    }

    fn eval(
        &self,
        t: f64,
        view: &StateView<'_>,
        own: &[f64],
        u_i: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        match self {
            AgentDynamics::LinearScalar(a) => {
                out[0] = a * own[0];
                Ok(())
            }
            AgentDynamics::Linear(m) => {
                m.apply(own, out);
                Ok(())
            }
            AgentDynamics::LinearWithInput { a, b } => {
                a.apply(own, out);
                let mut bu = vec![0.0; out.len()];
                b.apply(u_i, &mut bu);
                for (o, v) in out.iter_mut().zip(&bu) {
                    *o += v;
                }
                Ok(())
            }
            AgentDynamics::CascadeZ => {
                let z = own[0];
                let total_sq: f64 = view.data.iter().map(|v| v * v).sum();
                let rest = (total_sq - z * z).max(0.0).sqrt();
                out[0] = -z * z * z + rest;
                Ok(())
            }
            AgentDynamics::Custom { f, .. } => f(t, view, u_i, out),
        }
    }
}

/// How a surviving agent's block changes at an impulse (default: unchanged).
#[derive(Clone, Default)]
pub enum SurvivorJump {
    #[default]
    Identity,
    Scale(f64),
    /// Full access: pre-jump state view plus left-limit input values.
    Custom(Arc<dyn Fn(&StateView<'_>, &JumpContext<'_>, AgentIndex, &mut [f64]) -> Result<()> + Send + Sync>),
}

impl fmt::Debug for SurvivorJump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurvivorJump::Identity => f.write_str("Identity"),
            SurvivorJump::Scale(c) => write!(f, "Scale({c})"),
            SurvivorJump::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Where an arriving agent's initial block comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalSource {
    /// The agent's own input channel at the impulse time (right-continuous).
    Input,
    /// Copy the left-limit block of another (departing) agent; used by the
    /// switched-system reduction where a replacement carries the vector over.
    CopyOf(AgentIndex),
}

/// Static description of one agent.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub dim: usize,
    pub dynamics: AgentDynamics,
    pub survivor_jump: SurvivorJump,
}

impl AgentSpec {
    pub fn new(dim: usize, dynamics: AgentDynamics) -> Self {
        Self { dim, dynamics, survivor_jump: SurvivorJump::Identity }
    }
}

/// Agent universe: explicit map, or one template spec for every index (with
/// optional overrides), which is how an unbounded arrival stream is declared
/// without materializing the index set.
#[derive(Debug, Clone)]
pub enum AgentModel {
    Explicit(BTreeMap<AgentIndex, AgentSpec>),
    Template { spec: AgentSpec, overrides: BTreeMap<AgentIndex, AgentSpec> },
}

impl AgentModel {
    pub fn spec(&self, agent: AgentIndex) -> Result<&AgentSpec> {
        match self {
            AgentModel::Explicit(map) => map.get(&agent).ok_or_else(|| {
                LiveError::InvalidArgument(format!("agent {agent} has no declared dynamics"))
            }),
            AgentModel::Template { spec, overrides } => Ok(overrides.get(&agent).unwrap_or(spec)),
        }
    }
}

/// Open multi-agent system definition.
#[derive(Debug, Clone)]
pub struct OmasDefinition {
    pub agents: AgentModel,
    pub initial: BTreeSet<AgentIndex>,
    /// B(t_k) by impulse index (1-based); missing entries are empty.
    pub arrivals: BTreeMap<u64, BTreeSet<AgentIndex>>,
    /// D(t_k) by impulse index; missing entries are empty.
    pub departures: BTreeMap<u64, BTreeSet<AgentIndex>>,
    /// Per-(impulse, agent) arrival overrides; default is `Input`.
    pub arrival_sources: BTreeMap<(u64, AgentIndex), ArrivalSource>,
    pub norm: NormKind,
    pub escape_threshold: f64,
}

impl OmasDefinition {
    pub fn new(agents: AgentModel, initial: BTreeSet<AgentIndex>) -> Self {
        Self {
            agents,
            initial,
            arrivals: BTreeMap::new(),
            departures: BTreeMap::new(),
            arrival_sources: BTreeMap::new(),
            norm: NormKind::EuclideanOfBlocks,
            escape_threshold: DEFAULT_ESCAPE,
        }
    }

    pub fn arrivals_at(&self, k: u64) -> BTreeSet<AgentIndex> {
        self.arrivals.get(&k).cloned().unwrap_or_default()
    }

    pub fn departures_at(&self, k: u64) -> BTreeSet<AgentIndex> {
        self.departures.get(&k).cloned().unwrap_or_default()
    }

    fn arrival_source(&self, k: u64, agent: AgentIndex) -> ArrivalSource {
        self.arrival_sources.get(&(k, agent)).copied().unwrap_or(ArrivalSource::Input)
    }

    /// Apply the impulse-k jump to a labelled state using explicit input
    /// values (left limits for survivors, at-values for arrivals).
    ///
    /// This is the reference implementation of the jump semantics; the
    /// compiled fast path is tested against it.
    pub fn apply_impulse(
        &self,
        state: &LiveState,
        k: u64,
        u_left: &UValues,
        u_at: &UValues,
    ) -> Result<JumpOutcome> {
        let current: BTreeSet<AgentIndex> = state.blocks.keys().copied().collect();
        let arrivals = self.arrivals_at(k);
        let departures = self.departures_at(k);
        let next = omas_set_update(&current, &arrivals, &departures, k)?;

        let mut blocks = BTreeMap::new();
        for agent in &next {
            let spec = self.agents.spec(*agent)?;
            if arrivals.contains(agent) {
                let value = match self.arrival_source(k, *agent) {
                    ArrivalSource::Input => u_at
                        .get(agent)
                        .cloned()
                        .ok_or(LiveError::MissingArrivalValue { agent: *agent, k })?,
                    ArrivalSource::CopyOf(src) => state
                        .block(src)
                        .map(|b| b.to_vec())
                        .ok_or_else(|| LiveError::InvalidArgument(format!(
                            "arrival {agent} copies from {src}, which is not present"
                        )))?,
                };
                if value.len() != spec.dim {
                    return Err(LiveError::InvalidArgument(format!(
                        "arrival value for agent {agent} has length {}, expected {}",
                        value.len(),
                        spec.dim
                    )));
                }
                blocks.insert(*agent, value);
            } else {
                let own = state.block(*agent).expect("survivor present in state");
                let new_block = match &spec.survivor_jump {
                    SurvivorJump::Identity => own.to_vec(),
                    SurvivorJump::Scale(c) => own.iter().map(|v| c * v).collect(),
                    SurvivorJump::Custom(f) => {
                        // Reconstruct a view for the custom map.
                        let dims: BTreeMap<AgentIndex, usize> = current
                            .iter()
                            .map(|a| Ok((*a, self.agents.spec(*a)?.dim)))
                            .collect::<Result<_>>()?;
                        let config = Configuration::from_dims(&dims, self.norm.clone())?;
                        let stacked = config.pack(&state.blocks)?;
                        let view = StateView::new(&config, &stacked);
                        let ctx = JumpContext { values: ValueSource::Tables { left: u_left, at: u_at }, t: f64::NAN, k };
                        let mut out = vec![0.0; spec.dim];
                        f(&view, &ctx, *agent, &mut out)?;
                        out
                    }
                };
                blocks.insert(*agent, new_block);
            }
        }
        let dims: BTreeMap<AgentIndex, usize> = next
            .iter()
            .map(|a| Ok((*a, self.agents.spec(*a)?.dim)))
            .collect::<Result<_>>()?;
        let config = Configuration::from_dims(&dims, self.norm.clone())?;
        Ok(JumpOutcome {
            configuration: next,
            state: LiveState::new(config.id(), blocks),
        })
    }

    /// Compile for a fixed schedule: realize every configuration reachable
    /// from the initial one, the transition table, the stacked vector
    /// fields, and the jump rules.
    pub fn compile(&self, sched: &ImpulseSchedule) -> Result<LiveSystemDefinition> {
        let registry = ConfigRegistry::new();
        let compiled = CompiledOmas::build(self, sched, &registry)?;
        let compiled = Arc::new(compiled);

        let table: BTreeMap<u64, (ConfigId, ConfigId)> = compiled
            .chain
            .windows(2)
            .enumerate()
            .map(|(i, w)| ((i + 1) as u64, (w[0].id(), w[1].id())))
            .collect();
        let transition_map = ConfigTransitionMap::from_table(
            table.iter().map(|(k, (a, b))| ((*a, *k), *b)).collect(),
        );

        let mut sys = LiveSystemDefinition::new(registry, transition_map)
            .with_escape(self.escape_threshold);

        // One field closure per distinct configuration id.
        let mut seen: HashSet<ConfigId> = HashSet::new();
        for (idx, config) in compiled.chain.iter().enumerate() {
            if seen.insert(config.id()) {
                sys.set_field(config.id(), compiled.field_for(idx));
            }
        }

        // One shared jump closure per distinct (source, target) pair; the
        // impulse index argument selects the arrival/departure sets.
        let mut pairs: HashSet<(ConfigId, ConfigId)> = HashSet::new();
        for w in compiled.chain.windows(2) {
            let pair = (w[0].id(), w[1].id());
            if pairs.insert(pair) {
                let ctx = Arc::clone(&compiled);
                sys.set_jump(
                    pair.0,
                    pair.1,
                    Arc::new(move |view, t, k, u| ctx.jump(view, t, k, u)),
                );
            }
        }
        Ok(sys)
    }
}

/// Result of applying one impulse.
#[derive(Debug, Clone)]
pub struct JumpOutcome {
    pub configuration: BTreeSet<AgentIndex>,
    pub state: LiveState,
}

enum ValueSource<'a> {
    Signal(&'a InputSignal),
    Tables { left: &'a UValues, at: &'a UValues },
}

/// Input access handed to custom survivor jumps.
pub struct JumpContext<'a> {
    values: ValueSource<'a>,
    pub t: f64,
    pub k: u64,
}

impl JumpContext<'_> {
    /// Left limit of the input channel at the impulse time.
    pub fn left(&self, agent: AgentIndex, dim: usize) -> Result<Vec<f64>> {
        match &self.values {
            ValueSource::Signal(u) => u.left_limit(agent, self.t, dim),
            ValueSource::Tables { left, .. } => Ok(left
                .get(&agent)
                .cloned()
                .unwrap_or_else(|| vec![0.0; dim])),
        }
    }

    /// Right-continuous value of the input channel at the impulse time.
    pub fn at(&self, agent: AgentIndex, dim: usize) -> Result<Vec<f64>> {
        match &self.values {
            ValueSource::Signal(u) => u.value(agent, self.t, dim),
            ValueSource::Tables { at, .. } => at
                .get(&agent)
                .cloned()
                .ok_or(LiveError::MissingArrivalValue { agent, k: self.k }),
        }
    }
}

/// Everything the per-impulse closures need, shared behind one Arc.
struct CompiledOmas {
    /// chain[k] is the configuration after impulse k (chain[0] is initial).
    chain: Vec<Arc<Configuration>>,
    /// Dynamics aligned by position. In the shared-prefix case this is one
    /// buffer valid for every configuration in the chain; otherwise one
    /// resolved vector per chain entry.
    dynamics: DynLayout,
    arrivals: BTreeMap<u64, BTreeSet<AgentIndex>>,
    arrival_sources: BTreeMap<(u64, AgentIndex), ArrivalSource>,
    survivor_jumps: SurvivorLayout,
}

enum DynLayout {
    /// One buffer whose prefix of the right length serves every config.
    SharedPrefix(Arc<Vec<AgentDynamics>>),
    PerConfig(Vec<Arc<Vec<AgentDynamics>>>),
}

enum SurvivorLayout {
    AllIdentity,
    PerAgent(Arc<BTreeMap<AgentIndex, SurvivorJump>>),
}

impl CompiledOmas {
    fn build(
        omas: &OmasDefinition,
        sched: &ImpulseSchedule,
        registry: &ConfigRegistry,
    ) -> Result<CompiledOmas> {
        if omas.initial.is_empty() {
            return Err(LiveError::InvalidConfiguration("initial configuration is empty".into()));
        }
        let impulse_count = sched.len() as u64;

        // Pass 1: realize the agent-set chain and detect the append-only case.
        let mut sets: Vec<BTreeSet<AgentIndex>> = vec![omas.initial.clone()];
        let mut append_only = true;
        for k in 1..=impulse_count {
            let arrivals = omas.arrivals_at(k);
            let departures = omas.departures_at(k);
            let current = sets.last().unwrap();
            if !departures.is_empty() {
                append_only = false;
            } else if let (Some(new_min), Some(cur_max)) =
                (arrivals.iter().next(), current.iter().next_back())
            {
                if new_min <= cur_max {
                    append_only = false;
                }
            }
            let next = omas_set_update(current, &arrivals, &departures, k)?;
            sets.push(next);
        }

        let mut chain: Vec<Arc<Configuration>> = Vec::with_capacity(sets.len());
        let dynamics;
        if append_only {
            // All configurations are prefixes of the final agent list.
            let full_agents: Vec<AgentIndex> = sets.last().unwrap().iter().copied().collect();
            let mut full_dims = Vec::with_capacity(full_agents.len());
            let mut full_dyn = Vec::with_capacity(full_agents.len());
            let mut offsets = Vec::with_capacity(full_agents.len() + 1);
            let mut total = 0usize;
            for agent in &full_agents {
                let spec = omas.agents.spec(*agent)?;
                offsets.push(total);
                total += spec.dim;
                full_dims.push(spec.dim);
                full_dyn.push(spec.dynamics.clone());
            }
            offsets.push(total);
            let agents_buf = Arc::new(full_agents);
            let dims_buf = Arc::new(full_dims);
            let offsets_buf = Arc::new(offsets);
            for set in &sets {
                let n = set.len();
                let config = Configuration::from_shared(
                    SharedVec::prefix(&agents_buf, n),
                    SharedVec::prefix(&dims_buf, n),
                    SharedVec::prefix(&offsets_buf, n + 1),
                    omas.norm.clone(),
                );
                chain.push(registry.intern(config)?);
            }
            dynamics = DynLayout::SharedPrefix(Arc::new(
                agents_buf.iter().map(|a| omas.agents.spec(*a).unwrap().dynamics.clone()).collect(),
            ));
        } else {
            let mut per_config = Vec::with_capacity(sets.len());
            for set in &sets {
                let mut dims = BTreeMap::new();
                let mut dyns = Vec::with_capacity(set.len());
                for agent in set {
                    let spec = omas.agents.spec(*agent)?;
                    dims.insert(*agent, spec.dim);
                    dyns.push(spec.dynamics.clone());
                }
                let config = Configuration::from_dims(&dims, omas.norm.clone())?;
                chain.push(registry.intern(config)?);
                per_config.push(Arc::new(dyns));
            }
            dynamics = DynLayout::PerConfig(per_config);
        }

        // Survivor-jump layout: the common all-identity case needs no lookup.
        let survivor_jumps = {
            let mut map = BTreeMap::new();
            let mut collect = |agent: AgentIndex, spec: &AgentSpec| {
                if !matches!(spec.survivor_jump, SurvivorJump::Identity) {
                    map.insert(agent, spec.survivor_jump.clone());
                }
            };
            match &omas.agents {
                AgentModel::Explicit(specs) => {
                    for (a, s) in specs {
                        collect(*a, s);
                    }
                }
                AgentModel::Template { spec, overrides } => {
                    if !matches!(spec.survivor_jump, SurvivorJump::Identity) {
                        return Err(LiveError::InvalidArgument(
                            "template agents must use identity survivor jumps; override per agent instead"
                                .into(),
                        ));
                    }
                    for (a, s) in overrides {
                        collect(*a, s);
                    }
                }
            }
            if map.is_empty() {
                SurvivorLayout::AllIdentity
            } else {
                SurvivorLayout::PerAgent(Arc::new(map))
            }
        };

        Ok(CompiledOmas {
            chain,
            dynamics,
            arrivals: omas.arrivals.clone(),
            arrival_sources: omas.arrival_sources.clone(),
            survivor_jumps,
        })
    }

    fn dyn_slice(&self, chain_idx: usize) -> Arc<Vec<AgentDynamics>> {
        match &self.dynamics {
            DynLayout::SharedPrefix(buf) => Arc::clone(buf),
            DynLayout::PerConfig(v) => Arc::clone(&v[chain_idx]),
        }
    }

    /// Stacked vector field for the configuration at `chain_idx`. The
    /// returned closure serves any view whose agent list is a prefix of the
    /// captured dynamics buffer.
    fn field_for(&self, chain_idx: usize) -> FieldFn {
        let dyns = self.dyn_slice(chain_idx);
        Arc::new(move |t, view, u, out| {
            let config = view.config;
            let n = config.agent_count();
            debug_assert!(n <= dyns.len());
            let mut u_buf = [0.0_f64; 16];
            for pos in 0..n {
                let off = config.offset_at(pos);
                let dim = config.dim_at(pos);
                let own = &view.data[off..off + dim];
                let dynamics = &dyns[pos];
                let out_block = &mut out[off..off + dim];
                if dynamics.reads_input() {
                    let agent = config.agents()[pos];
                    if dim <= u_buf.len() {
                        u.value_into(agent, t, &mut u_buf[..dim])?;
                        dynamics.eval(t, view, own, &u_buf[..dim], out_block)?;
                    } else {
                        let mut big = vec![0.0; dim];
                        u.value_into(agent, t, &mut big)?;
                        dynamics.eval(t, view, own, &big, out_block)?;
                    }
                } else {
                    dynamics.eval(t, view, own, &[], out_block)?;
                }
            }
            Ok(())
        })
    }

    /// The jump realized at impulse index k.
    fn jump(
        &self,
        view: &StateView<'_>,
        t: f64,
        k: u64,
        u: &InputSignal,
    ) -> Result<JumpOutput> {
        let idx = k as usize;
        if idx == 0 || idx >= self.chain.len() {
            return Err(LiveError::InvalidArgument(format!("impulse index {k} out of range")));
        }
        let source = &self.chain[idx - 1];
        let target = &self.chain[idx];
        if view.config.id() != source.id() {
            return Err(LiveError::MalformedState {
                config: view.config.id(),
                reason: format!("jump at impulse {k} expects source configuration {}", source.id()),
            });
        }
        let empty = BTreeSet::new();
        let arrivals = self.arrivals.get(&k).unwrap_or(&empty);
        let mut out = vec![0.0; target.total_dim()];

        // Fast path: pure appends with identity survivor jumps share the
        // stacked prefix verbatim.
        let prefix_copy = matches!(self.survivor_jumps, SurvivorLayout::AllIdentity)
            && std::ptr::eq(source.agents().as_ptr(), target.agents().as_ptr());
        if prefix_copy {
            out[..view.data.len()].copy_from_slice(view.data);
            for agent in arrivals {
                let range = target
                    .block_range(*agent)
                    .ok_or(LiveError::MissingArrivalValue { agent: *agent, k })?;
                self.fill_arrival(*agent, k, t, u, view, &mut out[range])?;
            }
            return Ok(JumpOutput { config: target.id(), stacked: out });
        }

        let ctx = JumpContext { values: ValueSource::Signal(u), t, k };
        for (pos, agent) in target.agents().iter().enumerate() {
            let off = target.offset_at(pos);
            let dim = target.dim_at(pos);
            let out_block = &mut out[off..off + dim];
            if arrivals.contains(agent) {
                self.fill_arrival(*agent, k, t, u, view, out_block)?;
            } else {
                let own = view.block(*agent).ok_or_else(|| LiveError::MalformedState {
                    config: view.config.id(),
                    reason: format!("survivor {agent} missing from pre-jump state"),
                })?;
                match self.survivor_rule(*agent) {
                    SurvivorJump::Identity => out_block.copy_from_slice(own),
                    SurvivorJump::Scale(c) => {
                        for (o, v) in out_block.iter_mut().zip(own) {
                            *o = c * v;
                        }
                    }
                    SurvivorJump::Custom(f) => f(view, &ctx, *agent, out_block)?,
                }
            }
        }
        Ok(JumpOutput { config: target.id(), stacked: out })
    }

    fn survivor_rule(&self, agent: AgentIndex) -> SurvivorJump {
        match &self.survivor_jumps {
            SurvivorLayout::AllIdentity => SurvivorJump::Identity,
            SurvivorLayout::PerAgent(map) => map.get(&agent).cloned().unwrap_or_default(),
        }
    }

    fn fill_arrival(
        &self,
        agent: AgentIndex,
        k: u64,
        t: f64,
        u: &InputSignal,
        pre: &StateView<'_>,
        out: &mut [f64],
    ) -> Result<()> {
        match self.arrival_sources.get(&(k, agent)).copied().unwrap_or(ArrivalSource::Input) {
            ArrivalSource::Input => u.value_into(agent, t, out),
            ArrivalSource::CopyOf(src) => {
                let block = pre.block(src).ok_or_else(|| {
                    LiveError::InvalidArgument(format!(
                        "arrival {agent} copies from {src}, which is not present"
                    ))
                })?;
                out.copy_from_slice(block);
                Ok(())
            }
        }
    }
}

/// Piecewise-constant, right-continuous mode signal for switched systems.
#[derive(Debug, Clone)]
pub struct SwitchSignal {
    pub initial: u64,
    /// (time, new mode) pairs with strictly increasing positive times.
    pub switches: Vec<(f64, u64)>,
}

impl SwitchSignal {
    pub fn new(initial: u64, switches: Vec<(f64, u64)>) -> Result<Self> {
        if switches.iter().any(|(t, _)| !t.is_finite() || *t <= 0.0) {
            return Err(LiveError::InvalidArgument("switch times must be positive".into()));
        }
        if switches.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(LiveError::InvalidArgument("switch times must be strictly increasing".into()));
        }
        Ok(Self { initial, switches })
    }
}

/// View a linear switched system ẋ = A_{σ(t)} x as a live system with
/// replacements: at each switch the new mode's agent enters carrying the old
/// agent's vector, and the old one leaves. Configurations are singletons of
/// equal dimension.
pub fn switched_system(
    matrices: &BTreeMap<u64, DenseMatrix>,
    sigma: &SwitchSignal,
) -> Result<(OmasDefinition, ImpulseSchedule)> {
    if matrices.is_empty() {
        return Err(LiveError::InvalidArgument("at least one mode matrix required".into()));
    }
    let p = matrices.values().next().unwrap().rows();
    for (j, m) in matrices {
        if m.rows() != m.cols() || m.rows() != p {
            return Err(LiveError::InvalidArgument(format!(
                "mode {j}: all matrices must be square of equal dimension"
            )));
        }
    }
    let mode_spec = |j: u64| -> Result<AgentSpec> {
        let m = matrices
            .get(&j)
            .ok_or_else(|| LiveError::InvalidArgument(format!("mode {j} has no matrix")))?;
        Ok(AgentSpec::new(p, AgentDynamics::Linear(Arc::new(m.clone()))))
    };

    let mut specs: BTreeMap<AgentIndex, AgentSpec> = BTreeMap::new();
    specs.insert(AgentIndex(sigma.initial), mode_spec(sigma.initial)?);
    for (_, j) in &sigma.switches {
        specs.entry(AgentIndex(*j)).or_insert(mode_spec(*j)?);
    }

    let mut omas = OmasDefinition::new(
        AgentModel::Explicit(specs),
        [AgentIndex(sigma.initial)].into(),
    );
    let mut times = Vec::with_capacity(sigma.switches.len());
    let mut previous = sigma.initial;
    for (i, (t, mode)) in sigma.switches.iter().enumerate() {
        let k = (i + 1) as u64;
        times.push(*t);
        omas.arrivals.insert(k, [AgentIndex(*mode)].into());
        omas.departures.insert(k, [AgentIndex(previous)].into());
        omas.arrival_sources
            .insert((k, AgentIndex(*mode)), ArrivalSource::CopyOf(AgentIndex(previous)));
        previous = *mode;
    }
    let sched = ImpulseSchedule::new(times)?;
    Ok((omas, sched))
}

/// Freeze the system in one configuration: no impulses ever occur. Used to
/// probe per-configuration behavior uniformly over a family of
/// configurations.
pub fn fixed_configuration(
    omas: &OmasDefinition,
    agents: &BTreeSet<AgentIndex>,
) -> Result<LiveSystemDefinition> {
    let frozen = OmasDefinition {
        agents: omas.agents.clone(),
        initial: agents.clone(),
        arrivals: BTreeMap::new(),
        departures: BTreeMap::new(),
        arrival_sources: BTreeMap::new(),
        norm: omas.norm.clone(),
        escape_threshold: omas.escape_threshold,
    };
    frozen.compile(&ImpulseSchedule::empty())
}

/// Initial state helper: stack the given blocks in the initial configuration.
pub fn initial_state(
    omas: &OmasDefinition,
    sys: &LiveSystemDefinition,
    blocks: BTreeMap<AgentIndex, Vec<f64>>,
) -> Result<LiveState> {
    let dims: BTreeMap<AgentIndex, usize> = omas
        .initial
        .iter()
        .map(|a| Ok((*a, omas.agents.spec(*a)?.dim)))
        .collect::<Result<_>>()?;
    let config = Configuration::from_dims(&dims, omas.norm.clone())?;
    let config = sys.registry.get(config.id())?;
    let mut full = BTreeMap::new();
    for agent in &omas.initial {
        let dim = config.dim_of(*agent).unwrap();
        let block = blocks.get(agent).cloned().unwrap_or_else(|| vec![0.0; dim]);
        full.insert(*agent, block);
    }
    config.pack(&full)?;
    Ok(LiveState::new(config.id(), full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_engine::{evolve, EvolveOptions};

    fn decaying_agents() -> AgentModel {
        AgentModel::Template {
            spec: AgentSpec::new(1, AgentDynamics::LinearScalar(-1.0)),
            overrides: BTreeMap::new(),
        }
    }

    #[test]
    fn no_impulses_reduces_to_plain_ode() {
        let omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        let sched = ImpulseSchedule::empty();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![1.0])].into()).unwrap();
        let traj =
            evolve(&sys, &sched, &x0, &InputSignal::zero(), 1.0, &EvolveOptions::default())
                .unwrap();
        // Bit-exact against direct integration of the same scalar ODE.
        let grid = crate::numerics::snapped_grid(0.0, 1.0, EvolveOptions::default().step);
        let direct = crate::numerics::rk4_integrate(
            |_t, x, dx| {
                dx[0] = -x[0];
                Ok(())
            },
            &[1.0],
            &grid,
        )
        .unwrap();
        let seg = &traj.segments[0];
        let states = seg.states.as_ref().unwrap();
        assert_eq!(states.len(), direct.len());
        for (a, b) in states.iter().zip(direct.iter()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }

    #[test]
    fn arrival_extends_configuration() {
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(2)].into());
        let sched = ImpulseSchedule::new(vec![1.0]).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![1.0])].into()).unwrap();
        let u = InputSignal::arrival_pulses(&[(1.0, AgentIndex(2), vec![3.0])], 0.25).unwrap();
        let traj = evolve(&sys, &sched, &x0, &u, 1.0, &EvolveOptions::default()).unwrap();
        assert_eq!(traj.jumps.len(), 1);
        let post = &traj.final_state;
        assert_eq!(post.blocks.len(), 2);
        // Post-jump pseudonorm: sqrt(e^{-2} + 9).
        let expected = ((-2.0_f64).exp() + 9.0).sqrt();
        let got = sys.registry.pseudonorm(post).unwrap();
        assert!((got - expected).abs() < 1e-6, "got {got}, expected {expected}");
    }

    #[test]
    fn replacement_keeps_dimension_and_norm() {
        // D(1) = {1}, B(1) = {2} with the arrival copying agent 1's vector.
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(2)].into());
        omas.departures.insert(1, [AgentIndex(1)].into());
        omas.arrival_sources.insert((1, AgentIndex(2)), ArrivalSource::CopyOf(AgentIndex(1)));
        let sched = ImpulseSchedule::new(vec![0.5]).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![2.0])].into()).unwrap();
        let traj =
            evolve(&sys, &sched, &x0, &InputSignal::zero(), 1.0, &EvolveOptions::default())
                .unwrap();
        let jump = &traj.jumps[0];
        assert_eq!(jump.pre_norm.to_bits(), jump.post_norm.to_bits());
        assert_eq!(traj.final_state.blocks.len(), 1);
        assert!(traj.final_state.block(AgentIndex(2)).is_some());
    }

    #[test]
    fn apply_impulse_matches_compiled_jump() {
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(2)].into());
        let state = LiveState::new(
            Configuration::from_dims(&[(AgentIndex(1), 1)].into(), NormKind::EuclideanOfBlocks)
                .unwrap()
                .id(),
            [(AgentIndex(1), vec![0.5])].into(),
        );
        let u_at: UValues = [(AgentIndex(2), vec![3.0])].into();
        let outcome = omas.apply_impulse(&state, 1, &UValues::new(), &u_at).unwrap();
        assert_eq!(outcome.configuration.len(), 2);
        assert_eq!(outcome.state.block(AgentIndex(1)).unwrap(), &[0.5]);
        assert_eq!(outcome.state.block(AgentIndex(2)).unwrap(), &[3.0]);
    }

    #[test]
    fn apply_impulse_missing_arrival_value_errors() {
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(2)].into());
        let state = LiveState::new(
            Configuration::from_dims(&[(AgentIndex(1), 1)].into(), NormKind::EuclideanOfBlocks)
                .unwrap()
                .id(),
            [(AgentIndex(1), vec![0.5])].into(),
        );
        let err = omas.apply_impulse(&state, 1, &UValues::new(), &UValues::new()).unwrap_err();
        assert!(matches!(err, LiveError::MissingArrivalValue { .. }));
    }

    #[test]
    fn departure_then_arrival_norm() {
        // Departure of the decayed agent plus an arrival of value 1.
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(2)].into());
        omas.departures.insert(1, [AgentIndex(1)].into());
        let sched = ImpulseSchedule::new(vec![1.0]).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![1.0])].into()).unwrap();
        let u = InputSignal::arrival_pulses(&[(1.0, AgentIndex(2), vec![1.0])], 0.25).unwrap();
        let traj = evolve(&sys, &sched, &x0, &u, 1.5, &EvolveOptions::default()).unwrap();
        assert!((traj.jumps[0].post_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assumption_violations_are_hard_errors() {
        // Re-arrival of a present agent.
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.arrivals.insert(1, [AgentIndex(1)].into());
        let sched = ImpulseSchedule::new(vec![1.0]).unwrap();
        assert!(matches!(
            omas.compile(&sched),
            Err(LiveError::ArrivalOverlap { k: 1, .. })
        ));

        // Departure of an absent agent.
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.departures.insert(1, [AgentIndex(9)].into());
        assert!(matches!(
            omas.compile(&sched),
            Err(LiveError::DepartureNotPresent { k: 1, .. })
        ));

        // Impulse that would empty the configuration.
        let mut omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        omas.departures.insert(1, [AgentIndex(1)].into());
        assert!(matches!(omas.compile(&sched), Err(LiveError::EmptyConfiguration { k: 1 })));
    }

    #[test]
    fn switched_two_modes_matches_product_of_exponentials() {
        // Modes -1 and -2, switch at t = 1, x0 = 1: φ(2) = e^{-3}.
        let matrices: BTreeMap<u64, DenseMatrix> =
            [(1, DenseMatrix::scalar(-1.0)), (2, DenseMatrix::scalar(-2.0))].into();
        let sigma = SwitchSignal::new(1, vec![(1.0, 2)]).unwrap();
        let (omas, sched) = switched_system(&matrices, &sigma).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![1.0])].into()).unwrap();
        let traj =
            evolve(&sys, &sched, &x0, &InputSignal::zero(), 2.0, &EvolveOptions::default())
                .unwrap();
        let end = traj.final_state.block(AgentIndex(2)).unwrap()[0];
        assert!((end - (-3.0_f64).exp()).abs() < 1e-8, "got {end}");
    }

    #[test]
    fn self_switch_is_rejected() {
        let matrices: BTreeMap<u64, DenseMatrix> = [(1, DenseMatrix::scalar(-1.0))].into();
        let sigma = SwitchSignal::new(1, vec![(1.0, 1)]).unwrap();
        let (omas, sched) = switched_system(&matrices, &sigma).unwrap();
        assert!(matches!(
            omas.compile(&sched),
            Err(LiveError::ArrivalOverlap { k: 1, .. })
        ));
    }

    #[test]
    fn single_mode_is_plain_linear_ode() {
        let matrices: BTreeMap<u64, DenseMatrix> = [(3, DenseMatrix::scalar(-0.5))].into();
        let sigma = SwitchSignal::new(3, vec![]).unwrap();
        let (omas, sched) = switched_system(&matrices, &sigma).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(3), vec![2.0])].into()).unwrap();
        let traj =
            evolve(&sys, &sched, &x0, &InputSignal::zero(), 1.0, &EvolveOptions::default())
                .unwrap();
        let end = traj.final_state.block(AgentIndex(3)).unwrap()[0];
        assert!((end - 2.0 * (-0.5_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn fixed_configuration_never_jumps() {
        let omas = OmasDefinition::new(decaying_agents(), [AgentIndex(1)].into());
        let agents: BTreeSet<AgentIndex> = [AgentIndex(4), AgentIndex(7)].into();
        let sys = fixed_configuration(&omas, &agents).unwrap();
        let dims: BTreeMap<AgentIndex, usize> = agents.iter().map(|a| (*a, 1)).collect();
        let config =
            Configuration::from_dims(&dims, NormKind::EuclideanOfBlocks).unwrap();
        let x0 = LiveState::new(
            config.id(),
            [(AgentIndex(4), vec![1.0]), (AgentIndex(7), vec![1.0])].into(),
        );
        let traj = evolve(
            &sys,
            &ImpulseSchedule::empty(),
            &x0,
            &InputSignal::zero(),
            2.0,
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(traj.jumps.is_empty());
        assert_eq!(traj.segments.len(), 1);
    }

    #[test]
    fn survivor_scale_jump_applies() {
        let mut specs: BTreeMap<AgentIndex, AgentSpec> = BTreeMap::new();
        let mut spec = AgentSpec::new(1, AgentDynamics::LinearScalar(0.0));
        spec.survivor_jump = SurvivorJump::Scale(0.5);
        specs.insert(AgentIndex(1), spec);
        let mut omas =
            OmasDefinition::new(AgentModel::Explicit(specs), [AgentIndex(1)].into());
        // Impulse with empty arrival/departure sets: a classical state jump.
        omas.arrivals.insert(1, BTreeSet::new());
        let sched = ImpulseSchedule::new(vec![1.0]).unwrap();
        let sys = omas.compile(&sched).unwrap();
        let x0 = initial_state(&omas, &sys, [(AgentIndex(1), vec![2.0])].into()).unwrap();
        let traj =
            evolve(&sys, &sched, &x0, &InputSignal::zero(), 2.0, &EvolveOptions::default())
                .unwrap();
        assert_eq!(traj.final_state.block(AgentIndex(1)).unwrap(), &[1.0]);
    }
}
