//! Lyapunov certificates for live systems: the sandwich and implication
//! conditions, numerical Lie-derivative probes, impulse counting, the
//! generalized average dwell-time check, and the uniform-ISS battery over a
//! class of schedules.
//!
//! The dwell-time inequality −d·N(t,s) − c·(t−s) ≤ ln h(t−s) is checked on a
//! finite pair set that provably contains the worst pairs: N(·,·) is
//! piecewise constant with steps exactly at impulse times, so the supremum
//! of the left side over a bounded window is attained with s just below an
//! impulse and t at one. The verdict involves no integration and is exact up
//! to the δ = 1e-9 offset used for "just below".

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::core_state::{LiveState, StateView};
use crate::error::{LiveError, Result};
use crate::flow_engine::{
    evolve, EvolveOptions, ImpulseSchedule, LiveSystemDefinition, StateStorage,
};
use crate::numerics::{rk4_step, DenseMatrix, Rk4Scratch};
use crate::omas::{uvalues_norm, UValues};
use crate::signals::InputSignal;
use crate::stability::{check_iss, ClassK, ClassKl, ClassL, CheckReport, SampleCloud};

/// The scalar function V itself.
#[derive(Clone)]
pub enum LyapunovV {
    /// V(x) = Σ_j x_jᵀ P x_j over the blocks (all blocks must match P's
    /// dimension).
    BlockQuadratic { p: Arc<DenseMatrix> },
    Custom(Arc<dyn Fn(&StateView<'_>) -> f64 + Send + Sync>),
}

impl fmt::Debug for LyapunovV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LyapunovV::BlockQuadratic { .. } => f.write_str("BlockQuadratic"),
            LyapunovV::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LyapunovV {
    pub fn eval(&self, view: &StateView<'_>) -> f64 {
        match self {
            LyapunovV::BlockQuadratic { p } => {
                let n = view.config.agent_count();
                let mut acc = 0.0;
                for pos in 0..n {
                    acc += p.quad_form(view.block_at(pos));
                }
                acc
            }
            LyapunovV::Custom(f) => f(view),
        }
    }

    pub fn observer(&self) -> crate::flow_engine::ObserverFn {
        let v = self.clone();
        Arc::new(move |view| v.eval(view))
    }
}

/// Dissipation rate along flows: V̇ ≤ −rate(V) whenever V dominates the
/// input threshold.
#[derive(Clone)]
pub enum DissipationRate {
    Linear { c: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl DissipationRate {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            DissipationRate::Linear { c } => c * v,
            DissipationRate::Custom(f) => f(v),
        }
    }
}

impl fmt::Debug for DissipationRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DissipationRate::Linear { c } => write!(f, "Linear({c})"),
            DissipationRate::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Jump bound: V(g(x, ξ)) ≤ bound(V(x)) whenever V dominates the threshold.
#[derive(Clone)]
pub enum JumpBound {
    /// α(s) = e^{−d}·s; d < 0 allows growth at jumps.
    ExpGain { d: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl JumpBound {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            JumpBound::ExpGain { d } => (-d).exp() * v,
            JumpBound::Custom(f) => f(v),
        }
    }
}

impl fmt::Debug for JumpBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpBound::ExpGain { d } => write!(f, "ExpGain({d})"),
            JumpBound::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IssLyapunovFunction {
    pub v: LyapunovV,
    pub psi1: ClassK,
    pub psi2: ClassK,
    pub chi: ClassK,
    pub dissipation: DissipationRate,
    pub jump_bound: JumpBound,
    /// (c, d) when the rate is c·s and the jump bound e^{−d}·s.
    pub exponential: Option<(f64, f64)>,
}

impl IssLyapunovFunction {
    pub fn exponential(
        v: LyapunovV,
        psi1: ClassK,
        psi2: ClassK,
        chi: ClassK,
        c: f64,
        d: f64,
    ) -> Self {
        Self {
            v,
            psi1,
            psi2,
            chi,
            dissipation: DissipationRate::Linear { c },
            jump_bound: JumpBound::ExpGain { d },
            exponential: Some((c, d)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LieEstimate {
    /// (dt, forward difference quotient) pairs, largest dt first.
    pub quotients: Vec<(f64, f64)>,
    /// Extrapolated limit from the two finest quotients.
    pub limit: f64,
    /// Spread between the finest quotients; a convergence indicator.
    pub spread: f64,
}

pub const DEFAULT_DT_SEQ: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Forward-difference estimate of the Lie derivative of V along the flow
/// from `x` at time `at_time` under input `u`.
///
/// For small enough probe windows the flow does not depend on the impulse
/// schedule; if one is supplied and has an impulse inside the window, the
/// probe is refused so the caller can shrink dt.
pub fn lie_derivative_estimate(
    sys: &LiveSystemDefinition,
    v: &LyapunovV,
    x: &LiveState,
    u: &InputSignal,
    at_time: f64,
    sched: Option<&ImpulseSchedule>,
    dt_seq: &[f64],
) -> Result<LieEstimate> {
    if dt_seq.is_empty() || dt_seq.windows(2).any(|w| w[0] <= w[1]) || dt_seq[0] <= 0.0 {
        return Err(LiveError::InvalidArgument("dt sequence must be positive and decreasing".into()));
    }
    let window = dt_seq[0];
    if let Some(sched) = sched {
        if let Some(&t_k) = sched
            .times()
            .iter()
            .find(|t| **t > at_time && **t <= at_time + window)
        {
            return Err(LiveError::ProbeWindow { t_k, window });
        }
    }
    let config = sys.registry.get(x.config)?;
    let stacked = config.pack(&x.blocks)?;
    let field = sys.field(config.id())?;
    let v0 = v.eval(&StateView::new(&config, &stacked));

    let mut scratch = Rk4Scratch::new(stacked.len());
    let mut quotients = Vec::with_capacity(dt_seq.len());
    for &dt in dt_seq {
        let mut state = stacked.clone();
        let mut eval = |time: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
            field(time, &StateView::new(&config, y), u, out)
        };
        rk4_step(&mut eval, at_time, dt, &mut state, &mut scratch)?;
        if state.iter().any(|val| !val.is_finite()) {
            return Err(LiveError::Numerical { t: at_time + dt, reason: "non-finite probe state".into() });
        }
        let v_dt = v.eval(&StateView::new(&config, &state));
        quotients.push((dt, (v_dt - v0) / dt));
    }
    let (limit, spread) = if quotients.len() >= 2 {
        let (dt1, q1) = quotients[quotients.len() - 2];
        let (dt2, q2) = quotients[quotients.len() - 1];
        // The quotient is V̇ + a·dt + O(dt²); eliminate the linear term.
        let limit = q2 + (q2 - q1) * dt2 / (dt1 - dt2);
        (limit, (q2 - q1).abs())
    } else {
        (quotients[0].1, f64::NAN)
    };
    Ok(LieEstimate { quotients, limit, spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovViolation {
    pub condition: String,
    pub v_value: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovConditionsReport {
    pub sandwich_checked: usize,
    pub flow_checked: usize,
    pub jump_checked: usize,
    pub below_threshold: usize,
    pub violations: Vec<LyapunovViolation>,
}

impl LyapunovConditionsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct LyapunovCheckOptions {
    pub dt_seq: Vec<f64>,
    /// Slack for the flow condition: abs + rel·V(x).
    pub flow_tol_abs: f64,
    pub flow_tol_rel: f64,
    /// Slack for the jump condition.
    pub jump_tol_abs: f64,
    pub jump_tol_rel: f64,
}

impl Default for LyapunovCheckOptions {
    fn default() -> Self {
        Self {
            dt_seq: DEFAULT_DT_SEQ.to_vec(),
            flow_tol_abs: 1e-6,
            flow_tol_rel: 1e-2,
            jump_tol_abs: 1e-9,
            jump_tol_rel: 1e-9,
        }
    }
}

/// Verify the sandwich and, for every (state, input value) pair above the
/// threshold, the flow and jump implications.
///
/// Jump rules are probed through the schedule: for each sampled state and
/// each impulse index whose transition applies to the state's configuration,
/// the registered rule is applied with a constant input pinned at the given
/// value.
pub fn verify_lyapunov_conditions(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    lyap: &IssLyapunovFunction,
    states: &[LiveState],
    input_values: &[UValues],
    opts: &LyapunovCheckOptions,
) -> Result<LyapunovConditionsReport> {
    if states.is_empty() {
        return Err(LiveError::InvalidArgument("state samples must be nonempty".into()));
    }
    let mut report = LyapunovConditionsReport {
        sandwich_checked: 0,
        flow_checked: 0,
        jump_checked: 0,
        below_threshold: 0,
        violations: Vec::new(),
    };
    for x in states {
        let config = sys.registry.get(x.config)?;
        let stacked = config.pack(&x.blocks)?;
        let view = StateView::new(&config, &stacked);
        let v_x = lyap.v.eval(&view);
        let norm = view.norm();

        report.sandwich_checked += 1;
        let lo = lyap.psi1.eval(norm);
        let hi = lyap.psi2.eval(norm);
        let slack = 1e-9 * (1.0 + v_x.abs());
        if v_x < lo - slack || v_x > hi + slack {
            report.violations.push(LyapunovViolation {
                condition: "sandwich".into(),
                v_value: v_x,
                lhs: v_x,
                rhs: if v_x < lo { lo } else { hi },
                detail: format!("psi1({norm}) = {lo}, psi2({norm}) = {hi}"),
            });
        }

        for xi in input_values {
            let xi_norm = uvalues_norm(xi);
            if v_x < lyap.chi.eval(xi_norm) {
                report.below_threshold += 1;
                continue;
            }
            let u_const = InputSignal::constant(xi.clone());

            report.flow_checked += 1;
            let est =
                lie_derivative_estimate(sys, &lyap.v, x, &u_const, 0.0, None, &opts.dt_seq)?;
            let bound = -lyap.dissipation.eval(v_x)
                + opts.flow_tol_abs
                + opts.flow_tol_rel * v_x.abs();
            if est.limit > bound {
                report.violations.push(LyapunovViolation {
                    condition: "flow".into(),
                    v_value: v_x,
                    lhs: est.limit,
                    rhs: bound,
                    detail: format!("input norm {xi_norm}, spread {:.3e}", est.spread),
                });
            }

            for (k, &t_k) in sched.times().iter().enumerate() {
                let k = (k + 1) as u64;
                let Some(target) = sys.transition_map.apply(x.config, k) else { continue };
                let Some(rule) = sys.jumps.get(x.config, target) else { continue };
                report.jump_checked += 1;
                let post = rule(&view, t_k, k, &u_const)?;
                let post_config = sys.registry.get(post.config)?;
                let v_post = lyap.v.eval(&StateView::new(&post_config, &post.stacked));
                let bound = lyap.jump_bound.eval(v_x)
                    + opts.jump_tol_abs
                    + opts.jump_tol_rel * v_x.abs();
                if v_post > bound {
                    report.violations.push(LyapunovViolation {
                        condition: "jump".into(),
                        v_value: v_x,
                        lhs: v_post,
                        rhs: bound,
                        detail: format!("impulse {k}, input norm {xi_norm}"),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// N(t, s): impulses in the half-open interval (s, t].
pub fn count_impulses(sched: &ImpulseSchedule, s: f64, t: f64) -> Result<usize> {
    if s > t {
        return Err(LiveError::InvalidArgument("count_impulses requires s <= t".into()));
    }
    Ok(sched.count_in(s, t))
}

/// The dwell-time budget h together with a decay witness dominating it.
#[derive(Clone)]
pub struct GadtBudget {
    pub h: BudgetFn,
    pub g_dom: ClassL,
}

#[derive(Clone)]
pub enum BudgetFn {
    /// h(x) = scale·e^{−rate·x}
    ScaledExp { scale: f64, rate: f64 },
    /// h ≡ 1
    One,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl BudgetFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BudgetFn::ScaledExp { scale, rate } => scale * (-rate * x).exp(),
            BudgetFn::One => 1.0,
            BudgetFn::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for BudgetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetFn::ScaledExp { scale, rate } => write!(f, "ScaledExp({scale}, {rate})"),
            BudgetFn::One => f.write_str("One"),
            BudgetFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl fmt::Debug for GadtBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GadtBudget({:?})", self.h)
    }
}

impl GadtBudget {
    /// h(x) = scale·e^{−rate·x} is its own decay witness.
    pub fn scaled_exp(scale: f64, rate: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0 && rate.is_finite() && rate > 0.0) {
            return Err(LiveError::InvalidArgument("budget needs scale > 0 and rate > 0".into()));
        }
        Ok(Self {
            h: BudgetFn::ScaledExp { scale, rate },
            g_dom: ClassL::ExpDecay { scale, rate },
        })
    }

    pub fn with_witness(h: BudgetFn, g_dom: ClassL) -> Self {
        Self { h, g_dom }
    }

    /// Check h > 0 and h ≤ g_dom on a log-spaced grid over (0, span].
    pub fn validate(&self, span: f64) -> Result<()> {
        self.g_dom.validate()?;
        let mut xs = vec![0.0];
        let lo: f64 = 1e-9;
        let hi = span.max(1.0);
        for i in 0..=64 {
            let x = lo * (hi / lo).powf(i as f64 / 64.0);
            xs.push(x);
        }
        for x in xs {
            let h = self.h.eval(x);
            if !(h.is_finite() && h > 0.0) {
                return Err(LiveError::Hypothesis(format!("budget h({x}) = {h} is not positive")));
            }
            let g = self.g_dom.eval(x);
            if h > g * (1.0 + 1e-12) {
                return Err(LiveError::Hypothesis(format!(
                    "budget h({x}) = {h} exceeds its decay witness {g}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GadtWitness {
    pub s: f64,
    pub t: f64,
    pub impulses: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GadtReport {
    pub admissible: bool,
    pub pairs_checked: usize,
    /// The pair with the largest lhs − rhs margin (the witness when
    /// violated).
    pub worst: GadtWitness,
}

/// Check −d·N(t,s) − c·(t−s) ≤ ln h(t−s) for all 0 ≤ s ≤ t ≤ horizon.
///
/// The pair set is {0, horizon} ∪ {t_k} ∪ {t_k − δ} plus a uniform grid;
/// since N is constant between impulse times, the supremum of the left side
/// is attained on these pairs (up to δ).
pub fn check_gadt(
    sched: &ImpulseSchedule,
    c: f64,
    d: f64,
    budget: &GadtBudget,
    horizon: f64,
    extra_grid: usize,
) -> Result<GadtReport> {
    if d == 0.0 {
        return Err(LiveError::Hypothesis("dwell-time condition requires d != 0".into()));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(LiveError::InvalidArgument("horizon must be positive".into()));
    }
    budget.validate(horizon)?;

    const DELTA: f64 = 1e-9;
    let mut points = vec![0.0, horizon];
    for &t_k in sched.times() {
        if t_k > horizon {
            break;
        }
        points.push(t_k);
        let below = t_k - DELTA;
        if below > 0.0 {
            points.push(below);
        }
    }
    for i in 1..extra_grid {
        points.push(horizon * i as f64 / extra_grid as f64);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();

    let mut worst = GadtWitness { s: 0.0, t: 0.0, impulses: 0, lhs: f64::NEG_INFINITY, rhs: 0.0 };
    let mut admissible = true;
    let mut pairs_checked = 0usize;
    for (i, &s) in points.iter().enumerate() {
        for &t in &points[i..] {
            pairs_checked += 1;
            let n = sched.count_in(s, t);
            let lhs = -d * n as f64 - c * (t - s);
            let rhs = budget.h.eval(t - s).ln();
            if lhs - rhs > worst.lhs - worst.rhs {
                worst = GadtWitness { s, t, impulses: n, lhs, rhs };
            }
            if lhs > rhs {
                admissible = false;
            }
        }
    }
    Ok(GadtReport { admissible, pairs_checked, worst })
}

/// One schedule's worth of evidence for the uniform-ISS battery.
pub struct ScheduleBattery {
    pub id: u64,
    pub sys: LiveSystemDefinition,
    pub sched: ImpulseSchedule,
    /// (initial state, input) runs to evolve.
    pub runs: Vec<(LiveState, InputSignal)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformIssReport {
    pub gadt: Vec<(u64, GadtReport)>,
    pub bound: CheckReport,
    /// Smallest slack (rhs − lhs) seen across all records; negative means a
    /// violation.
    pub worst_margin: f64,
}

impl UniformIssReport {
    pub fn passed(&self) -> bool {
        self.bound.passed()
    }
}

/// Uniform ISS over a class of schedules: every schedule must satisfy the
/// dwell-time condition and the Lyapunov conditions must already be
/// verified; then a single (β, γ) built from (ψ1, ψ2, χ, g_dom) is checked
/// against trajectory batteries of every schedule.
///
/// β(r, t) = ψ1⁻¹(g_dom(t)·ψ2(r)) and γ(s) = ψ1⁻¹(g_dom(0)·χ(s)): the decay
/// witness dominates e^{−d·N−c·(t−s)} along admissible schedules, so V-level
/// decay transports through the sandwich. The bound is validated
/// empirically, record by record.
pub fn uniform_iss_over_class(
    batteries: &[ScheduleBattery],
    lyap: &IssLyapunovFunction,
    lyap_evidence: &LyapunovConditionsReport,
    budget: &GadtBudget,
    horizon: f64,
    opts: &EvolveOptions,
    tol: f64,
) -> Result<UniformIssReport> {
    let Some((c, d)) = lyap.exponential else {
        return Err(LiveError::Hypothesis("uniform ISS battery requires exponential coefficients".into()));
    };
    if !lyap_evidence.passed() {
        return Err(LiveError::Hypothesis(format!(
            "Lyapunov conditions not verified: {} violations",
            lyap_evidence.violations.len()
        )));
    }
    let mut gadt = Vec::with_capacity(batteries.len());
    for battery in batteries {
        let report = check_gadt(&battery.sched, c, d, budget, horizon, 16)?;
        if !report.admissible {
            return Err(LiveError::Hypothesis(format!(
                "schedule {} violates the dwell-time condition at (s = {}, t = {})",
                battery.id, report.worst.s, report.worst.t
            )));
        }
        gadt.push((battery.id, report));
    }

    let (beta, gamma) = certificate_from_lyapunov(lyap, &budget.g_dom, batteries)?;

    let mut cloud = SampleCloud::new();
    let mut scenario = 0u64;
    for battery in batteries {
        for (x0, u) in &battery.runs {
            let x0_norm = battery.sys.registry.pseudonorm(x0)?;
            let u_norm = u.norm();
            let run_opts = EvolveOptions {
                storage: StateStorage::NormsOnly,
                observer: None,
                ..opts.clone()
            };
            let traj = evolve(&battery.sys, &battery.sched, x0, u, horizon, &run_opts)?;
            cloud.add_trajectory(scenario, x0_norm, u_norm, &traj, 10);
            scenario += 1;
        }
    }
    let bound = check_iss(&cloud, &beta, &gamma, tol);
    let mut worst_margin = f64::INFINITY;
    for r in &cloud.records {
        let rhs = beta.eval(r.x0_norm, r.t) + gamma.eval(r.u_norm) + tol;
        worst_margin = worst_margin.min(rhs - r.phi_norm);
    }
    Ok(UniformIssReport { gadt, bound, worst_margin })
}

/// The (β, γ) pair implied by an exponential Lyapunov function and a decay
/// witness. γ is tabulated over the battery's input range since its closed
/// form is a composition.
fn certificate_from_lyapunov(
    lyap: &IssLyapunovFunction,
    g_dom: &ClassL,
    batteries: &[ScheduleBattery],
) -> Result<(ClassKl, ClassK)> {
    let psi1_inv = lyap.psi1.inverse_fn()?;
    let beta = ClassKl::Composed {
        outer: psi1_inv.clone(),
        inner: lyap.psi2.clone(),
        decay: g_dom.clone(),
    };
    beta.validate()?;

    let mut u_max = 0.0_f64;
    for b in batteries {
        for (_, u) in &b.runs {
            u_max = u_max.max(u.norm());
        }
    }
    let g0 = g_dom.value_at_zero();
    let gamma = if u_max == 0.0 {
        ClassK::Zero
    } else {
        let span = 2.0 * u_max;
        let n = 128;
        let mut points = vec![(0.0, 0.0)];
        let mut prev = 0.0_f64;
        for i in 1..=n {
            let s = span * i as f64 / n as f64;
            let v = psi1_inv.eval(g0 * lyap.chi.eval(s));
            let v = v.max(prev * (1.0 + 1e-12) + 1e-15);
            points.push((s, v));
            prev = v;
        }
        let (x0, y0) = points[n - 1];
        let (x1, y1) = points[n];
        ClassK::Table { points, tail_slope: ((y1 - y0) / (x1 - x0)).max(1e-12) }
    };
    gamma.validate()?;
    Ok((beta, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_state::{AgentIndex, ConfigRegistry, ConfigTransitionMap, NormKind};
    use std::collections::BTreeMap;

    fn scalar_system(a: f64) -> (LiveSystemDefinition, LiveState) {
        let registry = ConfigRegistry::new();
        let dims: BTreeMap<AgentIndex, usize> = [(AgentIndex(1), 1)].into();
        let config = registry.register_dims(&dims, NormKind::EuclideanOfBlocks).unwrap();
        let mut sys = LiveSystemDefinition::new(registry, ConfigTransitionMap::identity());
        sys.set_field(
            config.id(),
            Arc::new(move |_t, view, _u, out| {
                out[0] = a * view.data[0];
                Ok(())
            }),
        );
        let x0 = LiveState::new(config.id(), [(AgentIndex(1), vec![1.0])].into());
        (sys, x0)
    }

    #[test]
    fn lie_derivative_of_quadratic_along_decay() {
        // V = x², x' = -x at x = 1: V̇ = -2.
        let (sys, x0) = scalar_system(-1.0);
        let v = LyapunovV::Custom(Arc::new(|view| view.data[0] * view.data[0]));
        let est = lie_derivative_estimate(
            &sys,
            &v,
            &x0,
            &InputSignal::zero(),
            0.0,
            None,
            &DEFAULT_DT_SEQ,
        )
        .unwrap();
        assert!((est.limit + 2.0).abs() < 1e-2, "limit {}", est.limit);
    }

    #[test]
    fn lie_derivative_vanishes_at_equilibrium() {
        let (sys, x0) = scalar_system(-1.0);
        let zero = LiveState::new(x0.config, [(AgentIndex(1), vec![0.0])].into());
        let v = LyapunovV::Custom(Arc::new(|view| view.data[0].abs()));
        let est = lie_derivative_estimate(
            &sys,
            &v,
            &zero,
            &InputSignal::zero(),
            0.0,
            None,
            &DEFAULT_DT_SEQ,
        )
        .unwrap();
        assert!(est.limit.abs() < 1e-9);
    }

    #[test]
    fn probe_refused_when_impulse_inside_window() {
        let (sys, x0) = scalar_system(-1.0);
        let sched = ImpulseSchedule::new(vec![5e-4]).unwrap();
        let v = LyapunovV::Custom(Arc::new(|view| view.data[0]));
        let err = lie_derivative_estimate(
            &sys,
            &v,
            &x0,
            &InputSignal::zero(),
            0.0,
            Some(&sched),
            &DEFAULT_DT_SEQ,
        )
        .unwrap_err();
        assert!(matches!(err, LiveError::ProbeWindow { .. }));
    }

    #[test]
    fn count_impulses_examples() {
        let sched = ImpulseSchedule::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(count_impulses(&sched, 0.5, 2.0).unwrap(), 2);
        assert_eq!(count_impulses(&sched, 2.0, 2.0).unwrap(), 0);
        assert_eq!(count_impulses(&ImpulseSchedule::empty(), 0.0, 100.0).unwrap(), 0);
        // Additivity N(t,s) = N(t,m) + N(m,s).
        for m in [0.0, 0.5, 1.0, 1.5, 2.5, 3.0] {
            let total = count_impulses(&sched, 0.0, 3.0).unwrap();
            let a = count_impulses(&sched, 0.0, m).unwrap();
            let b = count_impulses(&sched, m, 3.0).unwrap();
            assert_eq!(total, a + b);
        }
    }

    #[test]
    fn gadt_no_impulses_is_admissible() {
        let budget =
            GadtBudget::with_witness(BudgetFn::One, ClassL::ExpDecay { scale: 1e30, rate: 0.5 });
        let report =
            check_gadt(&ImpulseSchedule::empty(), 2.0, -0.5, &budget, 10.0, 16).unwrap();
        assert!(report.admissible);
    }

    #[test]
    fn gadt_periodic_admissible_and_log_shrinking_violated() {
        // c = 2, d = -ln 2, h(x) = e·e^{-x}.
        let c = 2.0;
        let d = -(2.0_f64.ln());
        let budget = GadtBudget::scaled_exp(std::f64::consts::E, 1.0).unwrap();

        let periodic = ImpulseSchedule::periodic(1.0, 100.0).unwrap();
        let report = check_gadt(&periodic, c, d, &budget, 100.0, 16).unwrap();
        assert!(report.admissible, "worst: {:?}", report.worst);

        let shrinking = ImpulseSchedule::log_shrinking(1.0, 3.0).unwrap();
        let report = check_gadt(&shrinking, c, d, &budget, 3.0, 16).unwrap();
        assert!(!report.admissible);
        assert!(report.worst.lhs > report.worst.rhs);
    }

    #[test]
    fn gadt_d_zero_is_a_hypothesis_error() {
        let budget = GadtBudget::scaled_exp(1.0, 1.0).unwrap();
        let err = check_gadt(&ImpulseSchedule::empty(), 1.0, 0.0, &budget, 1.0, 4).unwrap_err();
        assert!(matches!(err, LiveError::Hypothesis(_)));
    }

    #[test]
    fn budget_rejects_insufficient_witness() {
        let budget = GadtBudget::with_witness(
            BudgetFn::One,
            ClassL::ExpDecay { scale: 2.0, rate: 1.0 },
        );
        // The witness drops below 1 at x = ln 2 < span.
        assert!(budget.validate(10.0).is_err());
    }
}
