//! Piecewise right-continuous input signals on [0, ∞).
//!
//! A signal holds one channel per agent; each channel is a sorted list of
//! segments (constant, affine, exponential-decay, or sampled-with-hold) plus
//! optional isolated point values. Point values exist so that concatenation
//! can take the left piece's value exactly at the seam while staying
//! right-continuous everywhere else.
//!
//! Sup-norms are computed exactly per segment kind, which is what makes the
//! stability checkers trustworthy: a constant attains its bound, an affine
//! piece attains it at an endpoint, an exponential at its left end, and a
//! hold segment at one of its samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::core_state::AgentIndex;
use crate::error::{LiveError, Result};

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One piece of a channel, valid from `start` until the next segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Constant { value: Vec<f64> },
    /// value + slope·(t − start)
    Affine { value: Vec<f64>, slope: Vec<f64> },
    /// value·e^{−rate·(t − start)}, rate ≥ 0
    ExpDecay { value: Vec<f64>, rate: f64 },
    /// Sample-and-hold; offsets are relative to the segment start, the first
    /// must be 0 so the segment has a value from its beginning.
    Sampled { offsets: Vec<f64>, values: Vec<Vec<f64>> },
}

impl SegmentKind {
    fn dim(&self) -> usize {
        match self {
            SegmentKind::Constant { value } => value.len(),
            SegmentKind::Affine { value, .. } => value.len(),
            SegmentKind::ExpDecay { value, .. } => value.len(),
            SegmentKind::Sampled { values, .. } => values.first().map(|v| v.len()).unwrap_or(0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SegmentKind::Constant { .. } => Ok(()),
            SegmentKind::Affine { value, slope } => {
                if value.len() != slope.len() {
                    return Err(LiveError::InvalidSignal("affine value/slope length mismatch".into()));
                }
                Ok(())
            }
            SegmentKind::ExpDecay { rate, .. } => {
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(LiveError::InvalidSignal("exponential rate must be >= 0".into()));
                }
                Ok(())
            }
            SegmentKind::Sampled { offsets, values } => {
                if offsets.is_empty() || offsets.len() != values.len() {
                    return Err(LiveError::InvalidSignal("sampled segment needs matching offsets/values".into()));
                }
                if offsets[0] != 0.0 {
                    return Err(LiveError::InvalidSignal("first sample offset must be 0".into()));
                }
                if offsets.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(LiveError::InvalidSignal("sample offsets must be strictly increasing".into()));
                }
                let d = values[0].len();
                if values.iter().any(|v| v.len() != d) {
                    return Err(LiveError::InvalidSignal("sample value dimensions differ".into()));
                }
                Ok(())
            }
        }
    }

    /// Evaluate at local time τ = t − start, writing into `out`.
    fn eval_into(&self, tau: f64, out: &mut [f64]) {
        match self {
            SegmentKind::Constant { value } => out.copy_from_slice(value),
            SegmentKind::Affine { value, slope } => {
                for i in 0..out.len() {
                    out[i] = value[i] + slope[i] * tau;
                }
            }
            SegmentKind::ExpDecay { value, rate } => {
                let factor = (-rate * tau).exp();
                for i in 0..out.len() {
                    out[i] = value[i] * factor;
                }
            }
            SegmentKind::Sampled { offsets, values } => {
                let idx = match offsets.binary_search_by(|o| o.partial_cmp(&tau).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1),
                };
                out.copy_from_slice(&values[idx]);
            }
        }
    }

    /// Left limit at local time τ > 0.
    fn left_limit_into(&self, tau: f64, out: &mut [f64]) {
        match self {
            SegmentKind::Sampled { offsets, values } => {
                // Strictly before τ: the previous hold value.
                let idx = match offsets.binary_search_by(|o| o.partial_cmp(&tau).unwrap()) {
                    Ok(i) => i.saturating_sub(1),
                    Err(i) => i.saturating_sub(1),
                };
                out.copy_from_slice(&values[idx]);
            }
            // Continuous kinds: the limit equals the value.
            other => other.eval_into(tau, out),
        }
    }

    /// Exact sup of |u(t)| over local times [0, len); `len` may be infinite.
    fn sup_norm(&self, len: f64) -> f64 {
        match self {
            SegmentKind::Constant { value } => vec_norm(value),
            SegmentKind::Affine { value, slope } => {
                if slope.iter().all(|s| *s == 0.0) {
                    return vec_norm(value);
                }
                if !len.is_finite() {
                    return f64::INFINITY;
                }
                // |value + slope·τ|² is convex in τ: max at an endpoint.
                let at_end: f64 = value
                    .iter()
                    .zip(slope)
                    .map(|(v, s)| {
                        let e = v + s * len;
                        e * e
                    })
                    .sum::<f64>()
                    .sqrt();
                vec_norm(value).max(at_end)
            }
            SegmentKind::ExpDecay { value, .. } => vec_norm(value),
            SegmentKind::Sampled { offsets, values } => {
                let mut best = 0.0_f64;
                for (o, v) in offsets.iter().zip(values) {
                    if *o < len {
                        best = best.max(vec_norm(v));
                    }
                }
                best
            }
        }
    }

    /// Rebase the segment so local time τ becomes 0.
    fn rebased(&self, tau: f64) -> SegmentKind {
        match self {
            SegmentKind::Constant { value } => SegmentKind::Constant { value: value.clone() },
            SegmentKind::Affine { value, slope } => SegmentKind::Affine {
                value: value.iter().zip(slope).map(|(v, s)| v + s * tau).collect(),
                slope: slope.clone(),
            },
            SegmentKind::ExpDecay { value, rate } => {
                let factor = (-rate * tau).exp();
                SegmentKind::ExpDecay {
                    value: value.iter().map(|v| v * factor).collect(),
                    rate: *rate,
                }
            }
            SegmentKind::Sampled { offsets, values } => {
                let active = match offsets.binary_search_by(|o| o.partial_cmp(&tau).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1),
                };
                let mut new_offsets = vec![0.0];
                let mut new_values = vec![values[active].clone()];
                for i in (active + 1)..offsets.len() {
                    new_offsets.push(offsets[i] - tau);
                    new_values.push(values[i].clone());
                }
                SegmentKind::Sampled { offsets: new_offsets, values: new_values }
            }
        }
    }
}

/// One agent's input channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    segments: Vec<Segment>,
    /// Isolated point values, introduced by concatenation seams.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    points: Vec<(f64, Vec<f64>)>,
}

impl Channel {
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(LiveError::InvalidSignal("channel needs at least one segment".into()));
        }
        if segments[0].start != 0.0 {
            return Err(LiveError::InvalidSignal("first segment must start at 0".into()));
        }
        if segments.windows(2).any(|w| w[0].start >= w[1].start) {
            return Err(LiveError::InvalidSignal("segment starts must be strictly increasing".into()));
        }
        let dim = segments[0].kind.dim();
        for seg in &segments {
            seg.kind.validate()?;
            if seg.kind.dim() != dim {
                return Err(LiveError::InvalidSignal("segment dimensions differ within channel".into()));
            }
            if !seg.start.is_finite() || seg.start < 0.0 {
                return Err(LiveError::InvalidSignal("segment start must be finite and >= 0".into()));
            }
        }
        Ok(Self { segments, points: Vec::new() })
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Self {
            segments: vec![Segment { start: 0.0, kind: SegmentKind::Constant { value } }],
            points: Vec::new(),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.segments[0].kind.dim()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    fn active_index(&self, t: f64) -> usize {
        match self
            .segments
            .binary_search_by(|seg| seg.start.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    pub fn value_into(&self, t: f64, out: &mut [f64]) {
        if let Ok(i) = self.points.binary_search_by(|(p, _)| p.partial_cmp(&t).unwrap()) {
            out.copy_from_slice(&self.points[i].1);
            return;
        }
        let i = self.active_index(t);
        self.segments[i].kind.eval_into(t - self.segments[i].start, out);
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.value_into(t, &mut out);
        out
    }

    pub fn left_limit(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        // The segment active immediately left of t.
        let i = match self
            .segments
            .binary_search_by(|seg| seg.start.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.saturating_sub(1),
            Err(i) => i.saturating_sub(1),
        };
        self.segments[i].kind.left_limit_into(t - self.segments[i].start, &mut out);
        out
    }

    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0_f64;
        for (i, seg) in self.segments.iter().enumerate() {
            let len = if i + 1 < self.segments.len() {
                self.segments[i + 1].start - seg.start
            } else {
                f64::INFINITY
            };
            best = best.max(seg.kind.sup_norm(len));
            if best.is_infinite() {
                return best;
            }
        }
        for (_, v) in &self.points {
            best = best.max(vec_norm(v));
        }
        best
    }

    fn shifted(&self, tau: f64) -> Channel {
        if tau == 0.0 {
            return self.clone();
        }
        let active = self.active_index(tau);
        let mut segments = Vec::with_capacity(self.segments.len() - active);
        segments.push(Segment {
            start: 0.0,
            kind: self.segments[active].kind.rebased(tau - self.segments[active].start),
        });
        for seg in &self.segments[active + 1..] {
            segments.push(Segment { start: seg.start - tau, kind: seg.kind.clone() });
        }
        let points = self
            .points
            .iter()
            .filter(|(p, _)| *p >= tau)
            .map(|(p, v)| (p - tau, v.clone()))
            .collect();
        Channel { segments, points }
    }
}

/// The total input: one channel per materialized agent; absent channels read
/// as zero. Its norm is the sup over channels of the per-channel sup-norm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSignal {
    channels: BTreeMap<AgentIndex, Channel>,
}

impl InputSignal {
    /// The identically-zero input.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_channels(channels: BTreeMap<AgentIndex, Channel>) -> Self {
        Self { channels }
    }

    pub fn constant(values: BTreeMap<AgentIndex, Vec<f64>>) -> Self {
        Self {
            channels: values.into_iter().map(|(a, v)| (a, Channel::constant(v))).collect(),
        }
    }

    /// Encode arrival data: each (time, agent, value) holds `value` on the
    /// agent's channel over [time, time + hold) and is zero elsewhere, so the
    /// arriving agent's initial state can be read off the channel at its
    /// impulse time while the tail norm still records decaying arrivals.
    pub fn arrival_pulses(pulses: &[(f64, AgentIndex, Vec<f64>)], hold: f64) -> Result<Self> {
        if !(hold.is_finite() && hold > 0.0) {
            return Err(LiveError::InvalidArgument("hold window must be positive".into()));
        }
        let mut per_agent: BTreeMap<AgentIndex, Vec<(f64, Vec<f64>)>> = BTreeMap::new();
        for (t, agent, value) in pulses {
            if !(t.is_finite() && *t > 0.0) {
                return Err(LiveError::InvalidArgument("pulse times must be positive".into()));
            }
            per_agent.entry(*agent).or_default().push((*t, value.clone()));
        }
        let mut channels = BTreeMap::new();
        for (agent, mut events) in per_agent {
            events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if events.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(LiveError::InvalidArgument(format!(
                    "agent {agent} has two pulses at the same time"
                )));
            }
            let dim = events[0].1.len();
            let mut segments = vec![Segment { start: 0.0, kind: SegmentKind::Constant { value: vec![0.0; dim] } }];
            for (i, (t, value)) in events.iter().enumerate() {
                if value.len() != dim {
                    return Err(LiveError::InvalidArgument(format!(
                        "agent {agent} pulse dimensions differ"
                    )));
                }
                segments.push(Segment { start: *t, kind: SegmentKind::Constant { value: value.clone() } });
                let end = t + hold;
                let next_start = events.get(i + 1).map(|(s, _)| *s);
                if next_start.map_or(true, |s| s > end) {
                    segments.push(Segment { start: end, kind: SegmentKind::Constant { value: vec![0.0; dim] } });
                }
            }
            channels.insert(agent, Channel::from_segments(segments)?);
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &BTreeMap<AgentIndex, Channel> {
        &self.channels
    }

    pub fn channel(&self, agent: AgentIndex) -> Option<&Channel> {
        self.channels.get(&agent)
    }

    pub fn with_channel(mut self, agent: AgentIndex, channel: Channel) -> Self {
        self.channels.insert(agent, channel);
        self
    }

    /// u_agent(t), zero-filled when the channel is not materialized.
    pub fn value_into(&self, agent: AgentIndex, t: f64, out: &mut [f64]) -> Result<()> {
        match self.channels.get(&agent) {
            None => out.fill(0.0),
            Some(ch) => {
                if ch.dim() != out.len() {
                    return Err(LiveError::InvalidSignal(format!(
                        "channel of agent {agent} has dimension {}, expected {}",
                        ch.dim(),
                        out.len()
                    )));
                }
                ch.value_into(t, out);
            }
        }
        Ok(())
    }

    pub fn value(&self, agent: AgentIndex, t: f64, dim: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; dim];
        self.value_into(agent, t, &mut out)?;
        Ok(out)
    }

    /// lim_{s↑t} u_agent(s).
    pub fn left_limit(&self, agent: AgentIndex, t: f64, dim: usize) -> Result<Vec<f64>> {
        if !(t > 0.0) {
            return Err(LiveError::InvalidArgument("left limit requires t > 0".into()));
        }
        match self.channels.get(&agent) {
            None => Ok(vec![0.0; dim]),
            Some(ch) => {
                if ch.dim() != dim {
                    return Err(LiveError::InvalidSignal(format!(
                        "channel of agent {agent} has dimension {}, expected {}",
                        ch.dim(),
                        dim
                    )));
                }
                Ok(ch.left_limit(t))
            }
        }
    }

    /// Time shift: result(s) = u(s + tau). Never increases the norm.
    pub fn shift(&self, tau: f64) -> Result<InputSignal> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(LiveError::InvalidArgument("shift requires tau >= 0".into()));
        }
        if tau == 0.0 {
            return Ok(self.clone());
        }
        Ok(InputSignal {
            channels: self.channels.iter().map(|(a, ch)| (*a, ch.shifted(tau))).collect(),
        })
    }

    /// Concatenation at time t > 0: equals u1 on [0, t] (closed at t) and
    /// u2(· − t) afterwards. The value exactly at t is pinned as a point value.
    pub fn concatenate(u1: &InputSignal, u2: &InputSignal, t: f64) -> Result<InputSignal> {
        if !(t.is_finite() && t > 0.0) {
            return Err(LiveError::InvalidArgument("concatenation time must be positive".into()));
        }
        let mut agents: Vec<AgentIndex> = u1.channels.keys().copied().collect();
        for a in u2.channels.keys() {
            if !agents.contains(a) {
                agents.push(*a);
            }
        }
        agents.sort();
        let mut channels = BTreeMap::new();
        for agent in agents {
            let dim = match (u1.channels.get(&agent), u2.channels.get(&agent)) {
                (Some(c1), Some(c2)) => {
                    if c1.dim() != c2.dim() {
                        return Err(LiveError::InvalidSignal(format!(
                            "channel of agent {agent} has different dimensions in the operands"
                        )));
                    }
                    c1.dim()
                }
                (Some(c), None) | (None, Some(c)) => c.dim(),
                (None, None) => unreachable!(),
            };
            let zero = Channel::zero(dim);
            let first = u1.channels.get(&agent).unwrap_or(&zero);
            let second = u2.channels.get(&agent).unwrap_or(&zero);

            let mut segments: Vec<Segment> =
                first.segments.iter().filter(|s| s.start < t).cloned().collect();
            let mut points: Vec<(f64, Vec<f64>)> =
                first.points.iter().filter(|(p, _)| *p < t).cloned().collect();
            points.push((t, first.value(t)));
            for seg in &second.segments {
                segments.push(Segment { start: seg.start + t, kind: seg.kind.clone() });
            }
            for (p, v) in &second.points {
                points.push((p + t, v.clone()));
            }
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            points.dedup_by(|a, b| a.0 == b.0);
            channels.insert(agent, Channel { segments, points });
        }
        Ok(InputSignal { channels })
    }

    /// ‖u‖ = sup over channels of the sup over time of the pointwise norm.
    /// Unbounded signals report +∞.
    pub fn norm(&self) -> f64 {
        let mut best = 0.0_f64;
        for ch in self.channels.values() {
            best = best.max(ch.sup_norm());
            if best.is_infinite() {
                break;
            }
        }
        best
    }

    /// ‖u(t + ·)‖.
    pub fn tail_norm(&self, t: f64) -> Result<f64> {
        Ok(self.shift(t)?.norm())
    }

    /// Structural validity check (used by the axiom-closure property tests).
    pub fn validate(&self) -> Result<()> {
        for ch in self.channels.values() {
            Channel::from_segments(ch.segments.clone())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(i: u64) -> AgentIndex {
        AgentIndex(i)
    }

    fn scalar_constant(v: f64) -> InputSignal {
        InputSignal::constant([(agent(1), vec![v])].into())
    }

    #[test]
    fn concatenate_constants_is_constant() {
        let u = scalar_constant(1.0);
        let joined = InputSignal::concatenate(&u, &u, 5.0).unwrap();
        for t in [0.0, 4.9, 5.0, 5.1, 20.0] {
            assert_eq!(joined.value(agent(1), t, 1).unwrap(), vec![1.0]);
        }
        assert_eq!(joined.norm(), 1.0);
    }

    #[test]
    fn concatenation_takes_left_value_at_seam() {
        let u1 = scalar_constant(0.0);
        let u2 = scalar_constant(1.0);
        let joined = InputSignal::concatenate(&u1, &u2, 1.0).unwrap();
        assert_eq!(joined.value(agent(1), 1.0, 1).unwrap(), vec![0.0]);
        assert_eq!(joined.value(agent(1), 1.5, 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn concatenation_norm_is_max_of_constants() {
        let u1 = scalar_constant(-2.0);
        let u2 = scalar_constant(3.0);
        let joined = InputSignal::concatenate(&u1, &u2, 2.0).unwrap();
        assert_eq!(joined.norm(), 3.0);
    }

    #[test]
    fn concatenate_rejects_nonpositive_time() {
        let u = scalar_constant(1.0);
        assert!(InputSignal::concatenate(&u, &u, 0.0).is_err());
        assert!(InputSignal::concatenate(&u, &u, -1.0).is_err());
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let u = scalar_constant(2.0);
        assert_eq!(u.shift(0.0).unwrap(), u);
    }

    #[test]
    fn shift_past_pulse_gives_zero_signal() {
        // u = 1 on [0, 2), 0 after; shifting by 2 leaves the zero signal.
        let ch = Channel::from_segments(vec![
            Segment { start: 0.0, kind: SegmentKind::Constant { value: vec![1.0] } },
            Segment { start: 2.0, kind: SegmentKind::Constant { value: vec![0.0] } },
        ])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        let shifted = u.shift(2.0).unwrap();
        assert_eq!(shifted.norm(), 0.0);
        assert_eq!(shifted.value(agent(1), 0.0, 1).unwrap(), vec![0.0]);
    }

    #[test]
    fn shift_decaying_exponential() {
        let ch = Channel::from_segments(vec![Segment {
            start: 0.0,
            kind: SegmentKind::ExpDecay { value: vec![1.0], rate: 1.0 },
        }])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        let shifted = u.shift(1.0).unwrap();
        let expected = (-1.0_f64).exp();
        assert!((shifted.norm() - expected).abs() < 1e-12);
        assert!(shifted.norm() <= u.norm());
    }

    #[test]
    fn left_limit_of_constant() {
        let u = scalar_constant(4.0);
        assert_eq!(u.left_limit(agent(1), 3.0, 1).unwrap(), vec![4.0]);
    }

    #[test]
    fn left_limit_at_step() {
        // Right-continuous step 0 → 1 at t = 1.
        let ch = Channel::from_segments(vec![
            Segment { start: 0.0, kind: SegmentKind::Constant { value: vec![0.0] } },
            Segment { start: 1.0, kind: SegmentKind::Constant { value: vec![1.0] } },
        ])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        assert_eq!(u.left_limit(agent(1), 1.0, 1).unwrap(), vec![0.0]);
        assert_eq!(u.value(agent(1), 1.0, 1).unwrap(), vec![1.0]);
    }

    #[test]
    fn left_limit_of_ramp() {
        let ch = Channel::from_segments(vec![Segment {
            start: 0.0,
            kind: SegmentKind::Affine { value: vec![0.0], slope: vec![1.0] },
        }])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        assert_eq!(u.left_limit(agent(1), 2.0, 1).unwrap(), vec![2.0]);
    }

    #[test]
    fn norm_of_zero_signal() {
        assert_eq!(InputSignal::zero().norm(), 0.0);
    }

    #[test]
    fn norm_sup_over_channels() {
        let u = InputSignal::constant([(agent(1), vec![2.0]), (agent(2), vec![3.0])].into());
        assert_eq!(u.norm(), 3.0);
    }

    #[test]
    fn tail_norm_of_exponential() {
        let ch = Channel::from_segments(vec![Segment {
            start: 0.0,
            kind: SegmentKind::ExpDecay { value: vec![1.0], rate: 1.0 },
        }])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        let tail = u.tail_norm(10.0_f64.ln()).unwrap();
        assert!((tail - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unbounded_affine_reports_infinity() {
        let ch = Channel::from_segments(vec![Segment {
            start: 0.0,
            kind: SegmentKind::Affine { value: vec![0.0], slope: vec![1.0] },
        }])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        assert!(u.norm().is_infinite());
    }

    #[test]
    fn arrival_pulse_reads_at_impulse_time() {
        let u = InputSignal::arrival_pulses(&[(1.0, agent(2), vec![3.0])], 0.25).unwrap();
        assert_eq!(u.value(agent(2), 1.0, 1).unwrap(), vec![3.0]);
        assert_eq!(u.value(agent(2), 0.5, 1).unwrap(), vec![0.0]);
        assert_eq!(u.value(agent(2), 1.3, 1).unwrap(), vec![0.0]);
        assert_eq!(u.left_limit(agent(2), 1.0, 1).unwrap(), vec![0.0]);
        assert_eq!(u.norm(), 3.0);
        // Tail norm drops to zero once the pulse window has passed.
        assert_eq!(u.tail_norm(1.25).unwrap(), 0.0);
    }

    #[test]
    fn sampled_hold_evaluation() {
        let ch = Channel::from_segments(vec![Segment {
            start: 0.0,
            kind: SegmentKind::Sampled {
                offsets: vec![0.0, 1.0, 2.0],
                values: vec![vec![1.0], vec![5.0], vec![2.0]],
            },
        }])
        .unwrap();
        let u = InputSignal::zero().with_channel(agent(1), ch);
        assert_eq!(u.value(agent(1), 0.5, 1).unwrap(), vec![1.0]);
        assert_eq!(u.value(agent(1), 1.0, 1).unwrap(), vec![5.0]);
        assert_eq!(u.left_limit(agent(1), 1.0, 1).unwrap(), vec![1.0]);
        assert_eq!(u.norm(), 5.0);
        // Shift inside the hold keeps the active sample.
        let shifted = u.shift(1.5).unwrap();
        assert_eq!(shifted.value(agent(1), 0.0, 1).unwrap(), vec![5.0]);
        assert_eq!(shifted.value(agent(1), 0.5, 1).unwrap(), vec![2.0]);
    }

    #[test]
    fn missing_channel_reads_zero() {
        let u = InputSignal::zero();
        assert_eq!(u.value(agent(9), 1.0, 3).unwrap(), vec![0.0, 0.0, 0.0]);
    }
}
