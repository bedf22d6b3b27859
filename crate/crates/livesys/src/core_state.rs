//! Configurations, the labelled state set, and the pseudonorm.
//!
//! The state set is a disjoint union of per-configuration vector spaces: a
//! state is a labelled pair (configuration id, block vector) and two states
//! are comparable only when their labels agree. There is deliberately no
//! addition across configurations anywhere in this crate — the union has no
//! linear structure, only the pseudonorm below.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{LiveError, Result};

/// Label of one subsystem (agent) in the index universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentIndex(pub u64);

impl fmt::Display for AgentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Canonical configuration identifier.
///
/// Derived by hashing the sorted agent list together with the per-agent
/// dimensions and the norm tag, so set-equality implies id-equality without
/// materializing a textual key. The registry checks content equality on
/// intern, so an (astronomically unlikely) hash collision is reported rather
/// than silently merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigId(pub u64);

impl fmt::Display for ConfigId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Immutable slice view into a shared vector.
///
/// Configurations along an arrival-only chain differ only in length, so they
/// can all view prefixes of one buffer instead of owning quadratic copies.
#[derive(Debug, Clone)]
pub struct SharedVec<T> {
    data: Arc<Vec<T>>,
    len: usize,
}

impl<T> SharedVec<T> {
    pub fn from_vec(v: Vec<T>) -> Self {
        let len = v.len();
        Self { data: Arc::new(v), len }
    }

    pub fn prefix(data: &Arc<Vec<T>>, len: usize) -> Self {
        assert!(len <= data.len());
        Self { data: Arc::clone(data), len }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

impl<T> std::ops::Deref for SharedVec<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        self.as_slice()
    }
}

/// How a configuration turns its block vector into a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    /// Euclidean norm of the stacked blocks: (Σ_j |x_j|²)^{1/2}.
    EuclideanOfBlocks,
    /// Weighted variant, (Σ_j w_j |x_j|²)^{1/2} with all w_j > 0.
    WeightedBlocks { weights: BTreeMap<AgentIndex, f64> },
}

impl NormKind {
    fn tag(&self) -> u64 {
        match self {
            NormKind::EuclideanOfBlocks => 1,
            NormKind::WeightedBlocks { .. } => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if let NormKind::WeightedBlocks { weights } = self {
            if weights.values().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(LiveError::InvalidConfiguration(
                    "norm weights must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Immutable description of one admissible shape of the system.
#[derive(Debug)]
pub struct Configuration {
    id: ConfigId,
    agents: SharedVec<AgentIndex>,
    dims: SharedVec<usize>,
    /// offsets[i] is the position of agent i's block in the stacked vector;
    /// one extra entry holds the total dimension.
    offsets: SharedVec<usize>,
    norm: NormKind,
}

impl Configuration {
    /// Build from an explicit agent → dimension map.
    pub fn from_dims(dims: &BTreeMap<AgentIndex, usize>, norm: NormKind) -> Result<Arc<Self>> {
        let agents: Vec<AgentIndex> = dims.keys().copied().collect();
        let dim_vec: Vec<usize> = dims.values().copied().collect();
        Self::from_parts(
            SharedVec::from_vec(agents),
            SharedVec::from_vec(dim_vec),
            norm,
        )
    }

    /// Build from pre-shared sorted agent and dimension views.
    pub fn from_parts(
        agents: SharedVec<AgentIndex>,
        dims: SharedVec<usize>,
        norm: NormKind,
    ) -> Result<Arc<Self>> {
        if agents.is_empty() {
            return Err(LiveError::InvalidConfiguration("agent set must be nonempty".into()));
        }
        if agents.len() != dims.len() {
            return Err(LiveError::InvalidConfiguration("dims must cover every agent".into()));
        }
        if agents.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LiveError::InvalidConfiguration(
                "agent list must be strictly increasing".into(),
            ));
        }
        if dims.iter().any(|d| *d == 0) {
            return Err(LiveError::InvalidConfiguration("agent dimensions must be positive".into()));
        }
        norm.validate()?;
        let mut offsets = Vec::with_capacity(agents.len() + 1);
        let mut total = 0usize;
        for d in dims.iter() {
            offsets.push(total);
            total += d;
        }
        offsets.push(total);
        let id = canonical_id(agents.as_slice(), dims.as_slice(), &norm);
        Ok(Arc::new(Self {
            id,
            agents,
            dims,
            offsets: SharedVec::from_vec(offsets),
            norm,
        }))
    }

    /// Variant used by chain builders that already share an offsets buffer.
    pub(crate) fn from_shared(
        agents: SharedVec<AgentIndex>,
        dims: SharedVec<usize>,
        offsets: SharedVec<usize>,
        norm: NormKind,
    ) -> Arc<Self> {
        debug_assert_eq!(offsets.len(), agents.len() + 1);
        let id = canonical_id(agents.as_slice(), dims.as_slice(), &norm);
        Arc::new(Self { id, agents, dims, offsets, norm })
    }

    pub fn id(&self) -> ConfigId {
        self.id
    }

    pub fn agents(&self) -> &[AgentIndex] {
        self.agents.as_slice()
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn contains(&self, agent: AgentIndex) -> bool {
        self.agents.binary_search(&agent).is_ok()
    }

    pub fn position(&self, agent: AgentIndex) -> Option<usize> {
        self.agents.binary_search(&agent).ok()
    }

    pub fn dim_of(&self, agent: AgentIndex) -> Option<usize> {
        self.position(agent).map(|i| self.dims[i])
    }

    pub fn dim_at(&self, pos: usize) -> usize {
        self.dims[pos]
    }

    pub fn offset_at(&self, pos: usize) -> usize {
        self.offsets[pos]
    }

    pub fn block_range(&self, agent: AgentIndex) -> Option<std::ops::Range<usize>> {
        self.position(agent).map(|i| self.offsets[i]..self.offsets[i + 1])
    }

    pub fn total_dim(&self) -> usize {
        self.offsets[self.agents.len()]
    }

    pub fn norm_kind(&self) -> &NormKind {
        &self.norm
    }

    /// Norm of a stacked vector under this configuration's norm.
    pub fn stacked_norm(&self, data: &[f64]) -> f64 {
        debug_assert_eq!(data.len(), self.total_dim());
        match &self.norm {
            NormKind::EuclideanOfBlocks => data.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::WeightedBlocks { weights } => {
                let mut acc = 0.0;
                for (i, agent) in self.agents.iter().enumerate() {
                    let w = weights.get(agent).copied().unwrap_or(1.0);
                    let block = &data[self.offsets[i]..self.offsets[i + 1]];
                    acc += w * block.iter().map(|v| v * v).sum::<f64>();
                }
                acc.sqrt()
            }
        }
    }

    /// Stack a block map into the canonical layout.
    pub fn pack(&self, blocks: &BTreeMap<AgentIndex, Vec<f64>>) -> Result<Vec<f64>> {
        if blocks.len() != self.agents.len() {
            return Err(LiveError::MalformedState {
                config: self.id,
                reason: format!(
                    "state has {} blocks, configuration has {} agents",
                    blocks.len(),
                    self.agents.len()
                ),
            });
        }
        let mut out = vec![0.0; self.total_dim()];
        for (agent, block) in blocks {
            let range = self.block_range(*agent).ok_or_else(|| LiveError::MalformedState {
                config: self.id,
                reason: format!("agent {agent} not in configuration"),
            })?;
            if block.len() != range.len() {
                return Err(LiveError::MalformedState {
                    config: self.id,
                    reason: format!(
                        "block of agent {agent} has length {}, expected {}",
                        block.len(),
                        range.len()
                    ),
                });
            }
            out[range].copy_from_slice(block);
        }
        Ok(out)
    }

    /// Inverse of [`pack`](Self::pack).
    pub fn unpack(&self, data: &[f64]) -> LiveState {
        debug_assert_eq!(data.len(), self.total_dim());
        let mut blocks = BTreeMap::new();
        for (i, agent) in self.agents.iter().enumerate() {
            blocks.insert(*agent, data[self.offsets[i]..self.offsets[i + 1]].to_vec());
        }
        LiveState { config: self.id, blocks }
    }

    /// Short human-readable rendering of the agent set, abbreviated when large.
    pub fn describe(&self) -> String {
        let agents = self.agents.as_slice();
        if agents.len() <= 8 {
            let items: Vec<String> = agents.iter().map(|a| a.to_string()).collect();
            format!("{{{}}}", items.join(","))
        } else {
            format!(
                "{{{},{},...,{}}} ({} agents)",
                agents[0],
                agents[1],
                agents[agents.len() - 1],
                agents.len()
            )
        }
    }
}

fn canonical_id(agents: &[AgentIndex], dims: &[usize], norm: &NormKind) -> ConfigId {
    // FNV-1a over the canonical content.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    };
    eat(norm.tag());
    if let NormKind::WeightedBlocks { weights } = norm {
        for (a, w) in weights {
            eat(a.0);
            eat(w.to_bits());
        }
    }
    eat(agents.len() as u64);
    for (a, d) in agents.iter().zip(dims.iter()) {
        eat(a.0);
        eat(*d as u64);
    }
    ConfigId(h)
}

/// A labelled state: configuration id plus one block per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveState {
    pub config: ConfigId,
    pub blocks: BTreeMap<AgentIndex, Vec<f64>>,
}

impl LiveState {
    pub fn new(config: ConfigId, blocks: BTreeMap<AgentIndex, Vec<f64>>) -> Self {
        Self { config, blocks }
    }

    pub fn block(&self, agent: AgentIndex) -> Option<&[f64]> {
        self.blocks.get(&agent).map(|v| v.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|b| b.iter().all(|v| *v == 0.0))
    }
}

/// Borrowed stacked state tied to its configuration; the hot-path view used
/// by vector fields and jump rules.
#[derive(Clone, Copy)]
pub struct StateView<'a> {
    pub config: &'a Configuration,
    pub data: &'a [f64],
}

impl<'a> StateView<'a> {
    pub fn new(config: &'a Configuration, data: &'a [f64]) -> Self {
        debug_assert_eq!(data.len(), config.total_dim());
        Self { config, data }
    }

    pub fn block(&self, agent: AgentIndex) -> Option<&'a [f64]> {
        self.config.block_range(agent).map(|r| &self.data[r])
    }

    pub fn block_at(&self, pos: usize) -> &'a [f64] {
        &self.data[self.config.offset_at(pos)..self.config.offset_at(pos) + self.config.dim_at(pos)]
    }

    pub fn norm(&self) -> f64 {
        self.config.stacked_norm(self.data)
    }

    pub fn to_state(&self) -> LiveState {
        self.config.unpack(self.data)
    }
}

/// Interning registry of configurations; referentially consistent by
/// construction: every id it ever hands out resolves.
#[derive(Debug, Default, Clone)]
pub struct ConfigRegistry {
    inner: Arc<Mutex<HashMap<ConfigId, Arc<Configuration>>>>,
}

impl ConfigRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&self, config: Arc<Configuration>) -> Result<Arc<Configuration>> {
        let mut map = self.inner.lock().unwrap();
        if let Some(existing) = map.get(&config.id()) {
            if existing.agents() != config.agents()
                || existing.dims.as_slice() != config.dims.as_slice()
                || existing.norm != config.norm
            {
                return Err(LiveError::ConfigIdCollision { id: config.id() });
            }
            return Ok(Arc::clone(existing));
        }
        map.insert(config.id(), Arc::clone(&config));
        Ok(config)
    }

    pub fn get(&self, id: ConfigId) -> Result<Arc<Configuration>> {
        self.inner
            .lock()
            .unwrap()
            .get(&id)
            .cloned()
            .ok_or(LiveError::UnknownConfiguration(id))
    }

    pub fn contains(&self, id: ConfigId) -> bool {
        self.inner.lock().unwrap().contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Register a configuration built from an agent → dimension map.
    pub fn register_dims(
        &self,
        dims: &BTreeMap<AgentIndex, usize>,
        norm: NormKind,
    ) -> Result<Arc<Configuration>> {
        self.intern(Configuration::from_dims(dims, norm)?)
    }

    /// Pseudonorm of a labelled state: the norm of the block vector in the
    /// state's own configuration space. Zero exactly when every block is the
    /// zero vector.
    pub fn pseudonorm(&self, x: &LiveState) -> Result<f64> {
        let config = self.get(x.config)?;
        let stacked = config.pack(&x.blocks)?;
        Ok(config.stacked_norm(&stacked))
    }

    /// Scalar multiplication inside the state's configuration space.
    pub fn scale(&self, lambda: f64, x: &LiveState) -> Result<LiveState> {
        let config = self.get(x.config)?;
        // Validate block shape first so scaling never fabricates a state.
        config.pack(&x.blocks)?;
        let blocks = x
            .blocks
            .iter()
            .map(|(a, b)| (*a, b.iter().map(|v| lambda * v).collect()))
            .collect();
        Ok(LiveState { config: x.config, blocks })
    }
}

/// Deterministic configuration-change rule (configuration, impulse index) →
/// configuration.
#[derive(Clone)]
pub struct ConfigTransitionMap {
    rule: Arc<dyn Fn(ConfigId, u64) -> Option<ConfigId> + Send + Sync>,
}

impl fmt::Debug for ConfigTransitionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConfigTransitionMap(..)")
    }
}

impl ConfigTransitionMap {
    pub fn from_fn<F>(rule: F) -> Self
    where
        F: Fn(ConfigId, u64) -> Option<ConfigId> + Send + Sync + 'static,
    {
        Self { rule: Arc::new(rule) }
    }

    /// q(Q, k) = Q for all k.
    pub fn identity() -> Self {
        Self::from_fn(|q, _| Some(q))
    }

    pub fn from_table(table: BTreeMap<(ConfigId, u64), ConfigId>) -> Self {
        Self::from_fn(move |q, k| table.get(&(q, k)).copied())
    }

    pub fn apply(&self, current: ConfigId, k: u64) -> Option<ConfigId> {
        (self.rule)(current, k)
    }
}

/// Post-impulse configuration, checked against the registry.
pub fn transition(
    q: &ConfigTransitionMap,
    registry: &ConfigRegistry,
    current: ConfigId,
    k: u64,
) -> Result<ConfigId> {
    if !registry.contains(current) {
        return Err(LiveError::UnknownConfiguration(current));
    }
    let next = q.apply(current, k).ok_or(LiveError::MissingTransition { from: current, k })?;
    if !registry.contains(next) {
        return Err(LiveError::InadmissibleTransition { from: current, k });
    }
    Ok(next)
}

/// The OMAS set-update rule: I(t_k) = (I(t_k⁻) ∪ B(t_k)) \ D(t_k), with the
/// arrivals required to be disjoint from the pre-impulse set and departures
/// contained in it.
pub fn omas_set_update(
    current: &BTreeSet<AgentIndex>,
    arrivals: &BTreeSet<AgentIndex>,
    departures: &BTreeSet<AgentIndex>,
    k: u64,
) -> Result<BTreeSet<AgentIndex>> {
    let overlap: Vec<AgentIndex> = arrivals.intersection(current).copied().collect();
    if !overlap.is_empty() {
        return Err(LiveError::ArrivalOverlap { k, agents: overlap });
    }
    let missing: Vec<AgentIndex> = departures.difference(current).copied().collect();
    if !missing.is_empty() {
        return Err(LiveError::DepartureNotPresent { k, agents: missing });
    }
    let mut next = current.clone();
    next.extend(arrivals.iter().copied());
    for d in departures {
        next.remove(d);
    }
    if next.is_empty() {
        return Err(LiveError::EmptyConfiguration { k });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry_with(dims: &[(u64, usize)]) -> (ConfigRegistry, Arc<Configuration>) {
        let registry = ConfigRegistry::new();
        let map: BTreeMap<AgentIndex, usize> =
            dims.iter().map(|(a, d)| (AgentIndex(*a), *d)).collect();
        let config = registry.register_dims(&map, NormKind::EuclideanOfBlocks).unwrap();
        (registry, config)
    }

    fn state(config: &Configuration, blocks: &[(u64, Vec<f64>)]) -> LiveState {
        LiveState::new(
            config.id(),
            blocks.iter().map(|(a, b)| (AgentIndex(*a), b.clone())).collect(),
        )
    }

    #[test]
    fn pseudonorm_of_zero_element_is_zero() {
        let (registry, config) = registry_with(&[(1, 1)]);
        let x = state(&config, &[(1, vec![0.0])]);
        assert_eq!(registry.pseudonorm(&x).unwrap(), 0.0);
        assert!(x.is_zero());
    }

    #[test]
    fn pseudonorm_is_block_euclidean() {
        let (registry, config) = registry_with(&[(1, 1), (2, 1)]);
        let x = state(&config, &[(1, vec![3.0]), (2, vec![4.0])]);
        assert_eq!(registry.pseudonorm(&x).unwrap(), 5.0);
    }

    #[test]
    fn pseudonorm_of_two_dim_block() {
        let (registry, config) = registry_with(&[(7, 2)]);
        let x = state(&config, &[(7, vec![1.0, 1.0])]);
        let got = registry.pseudonorm(&x).unwrap();
        assert!((got - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pseudonorm_unknown_configuration_errors() {
        let (registry, _config) = registry_with(&[(1, 1)]);
        let ghost = LiveState::new(ConfigId(0xdead), BTreeMap::new());
        assert!(matches!(
            registry.pseudonorm(&ghost),
            Err(LiveError::UnknownConfiguration(_))
        ));
    }

    #[test]
    fn scale_by_zero_gives_zero_state() {
        let (registry, config) = registry_with(&[(1, 2)]);
        let x = state(&config, &[(1, vec![2.0, -1.0])]);
        let y = registry.scale(0.0, &x).unwrap();
        assert_eq!(y.config, x.config);
        assert_eq!(registry.pseudonorm(&y).unwrap(), 0.0);
    }

    #[test]
    fn scale_by_one_is_identity() {
        let (registry, config) = registry_with(&[(1, 2)]);
        let x = state(&config, &[(1, vec![2.0, -1.0])]);
        let y = registry.scale(1.0, &x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn scale_homogeneity() {
        let (registry, config) = registry_with(&[(1, 1), (2, 1)]);
        let x = state(&config, &[(1, vec![3.0]), (2, vec![4.0])]);
        let y = registry.scale(-2.0, &x).unwrap();
        assert!((registry.pseudonorm(&y).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn transition_identity_rule() {
        let (registry, config) = registry_with(&[(1, 1)]);
        let q = ConfigTransitionMap::identity();
        for k in 1..5 {
            assert_eq!(transition(&q, &registry, config.id(), k).unwrap(), config.id());
        }
    }

    #[test]
    fn transition_omas_set_update() {
        // I(0) = {1}, B(1) = {2}: post-impulse configuration is {1,2}.
        let current: BTreeSet<AgentIndex> = [AgentIndex(1)].into();
        let arrivals: BTreeSet<AgentIndex> = [AgentIndex(2)].into();
        let next = omas_set_update(&current, &arrivals, &BTreeSet::new(), 1).unwrap();
        let expected: BTreeSet<AgentIndex> = [AgentIndex(1), AgentIndex(2)].into();
        assert_eq!(next, expected);
    }

    #[test]
    fn transition_switched_rule() {
        // Singleton configurations {1}, {2}; the rule sends {j} to {m}.
        let (registry, c1) = registry_with(&[(1, 1)]);
        let map: BTreeMap<AgentIndex, usize> = [(AgentIndex(2), 1)].into();
        let c2 = registry.register_dims(&map, NormKind::EuclideanOfBlocks).unwrap();
        let target = c2.id();
        let q = ConfigTransitionMap::from_fn(move |_q, _k| Some(target));
        assert_eq!(transition(&q, &registry, c1.id(), 1).unwrap(), c2.id());
    }

    #[test]
    fn transition_to_unregistered_is_inadmissible() {
        let (registry, config) = registry_with(&[(1, 1)]);
        let q = ConfigTransitionMap::from_fn(|_q, _k| Some(ConfigId(0xbeef)));
        assert!(matches!(
            transition(&q, &registry, config.id(), 1),
            Err(LiveError::InadmissibleTransition { .. })
        ));
    }

    #[test]
    fn set_update_rejects_rejoining_agent() {
        let current: BTreeSet<AgentIndex> = [AgentIndex(1)].into();
        let arrivals: BTreeSet<AgentIndex> = [AgentIndex(1)].into();
        assert!(matches!(
            omas_set_update(&current, &arrivals, &BTreeSet::new(), 3),
            Err(LiveError::ArrivalOverlap { k: 3, .. })
        ));
    }

    #[test]
    fn canonical_id_depends_only_on_content() {
        let dims: BTreeMap<AgentIndex, usize> = [(AgentIndex(2), 1), (AgentIndex(1), 2)].into();
        let a = Configuration::from_dims(&dims, NormKind::EuclideanOfBlocks).unwrap();
        let b = Configuration::from_dims(&dims, NormKind::EuclideanOfBlocks).unwrap();
        assert_eq!(a.id(), b.id());
        let other: BTreeMap<AgentIndex, usize> = [(AgentIndex(1), 2)].into();
        let c = Configuration::from_dims(&other, NormKind::EuclideanOfBlocks).unwrap();
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let (_registry, config) = registry_with(&[(1, 2), (5, 1)]);
        let x = state(&config, &[(1, vec![1.5, -0.5]), (5, vec![2.0])]);
        let stacked = config.pack(&x.blocks).unwrap();
        assert_eq!(stacked, vec![1.5, -0.5, 2.0]);
        assert_eq!(config.unpack(&stacked), x);
    }

    #[test]
    fn pack_rejects_wrong_shape() {
        let (_registry, config) = registry_with(&[(1, 2)]);
        let bad = state(&config, &[(1, vec![1.0])]);
        assert!(matches!(
            config.pack(&bad.blocks),
            Err(LiveError::MalformedState { .. })
        ));
    }

    #[test]
    fn weighted_norm() {
        let registry = ConfigRegistry::new();
        let dims: BTreeMap<AgentIndex, usize> = [(AgentIndex(1), 1), (AgentIndex(2), 1)].into();
        let weights: BTreeMap<AgentIndex, f64> = [(AgentIndex(1), 4.0), (AgentIndex(2), 1.0)].into();
        let config = registry
            .register_dims(&dims, NormKind::WeightedBlocks { weights })
            .unwrap();
        let x = state(&config, &[(1, vec![1.0]), (2, vec![2.0])]);
        // sqrt(4·1 + 1·4) = sqrt(8)
        assert!((registry.pseudonorm(&x).unwrap() - 8.0_f64.sqrt()).abs() < 1e-15);
    }
}
