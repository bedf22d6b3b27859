//! Empirical stability checkers over trajectory sample clouds, and the
//! assembly of an ISS certificate from decay evidence.
//!
//! A sample cloud holds (‖x₀‖, ‖u‖, t, ‖φ(t, x, u)‖) records from completed
//! trajectory runs, plus any blow-ups encountered while collecting. Checks
//! never prove anything — they falsify: a passing report says the claimed
//! bound held on every record, with the stated tolerance absorbing
//! integrator and time-sampling error.

pub mod comparison;
pub mod majorant;

use std::collections::BTreeMap;

use serde::Serialize;

pub use comparison::{ClassK, ClassKl, ClassL, ComposedK};
pub use majorant::{kl_majorant, BoundProbe};

use crate::core_state::{ConfigId, LiveState};
use crate::error::{LiveError, Result};
use crate::flow_engine::{evolve, EvolveOptions, ImpulseSchedule, LiveSystemDefinition, Trajectory};
use crate::rng::SplitMix64;
use crate::signals::InputSignal;

/// One observed point of a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CloudRecord {
    pub scenario: u64,
    pub x0_norm: f64,
    pub u_norm: f64,
    pub t: f64,
    pub phi_norm: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupRecord {
    pub scenario: u64,
    pub x0_norm: f64,
    pub u_norm: f64,
    pub t_esc: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SampleCloud {
    pub records: Vec<CloudRecord>,
    pub blowups: Vec<BlowupRecord>,
}

impl SampleCloud {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record a finished trajectory. Completed runs contribute every
    /// `stride`-th norm sample (plus the final one); a blown-up run
    /// contributes only its blow-up record.
    pub fn add_trajectory(
        &mut self,
        scenario: u64,
        x0_norm: f64,
        u_norm: f64,
        traj: &Trajectory,
        stride: usize,
    ) {
        if let crate::flow_engine::TerminalStatus::BlowUp { t_esc } = traj.status {
            self.blowups.push(BlowupRecord { scenario, x0_norm, u_norm, t_esc });
            return;
        }
        let stride = stride.max(1);
        let total = traj.sample_count();
        for (i, (t, phi_norm)) in traj.norm_samples().enumerate() {
            if i % stride == 0 || i + 1 == total {
                self.records.push(CloudRecord { scenario, x0_norm, u_norm, t, phi_norm });
            }
        }
    }

    pub fn merge(&mut self, other: SampleCloud) {
        self.records.extend(other.records);
        self.blowups.extend(other.blowups);
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.blowups.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.records.iter().fold(0.0_f64, |m, r| m.max(r.t))
    }

    /// Scenario radius max(‖x₀‖, ‖u‖) per scenario id.
    pub fn scenario_radii(&self) -> BTreeMap<u64, f64> {
        let mut out: BTreeMap<u64, f64> = BTreeMap::new();
        for r in &self.records {
            let rad = r.x0_norm.max(r.u_norm);
            out.entry(r.scenario).and_modify(|v| *v = v.max(rad)).or_insert(rad);
        }
        out
    }
}

/// One falsified comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub scenario: u64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checked: 0, violations: Vec::new(), notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst_margin(&self) -> f64 {
        self.violations.iter().fold(0.0_f64, |m, v| m.max(v.lhs - v.rhs))
    }
}

pub const DEFAULT_CHECK_TOL: f64 = 1e-6;

/// ‖φ(t, x, u)‖ ≤ β(‖x‖, t) + γ(‖u‖) + tol on every record. Blow-ups
/// falsify outright (the bound presumes forward completeness).
pub fn check_iss(cloud: &SampleCloud, beta: &ClassKl, gamma: &ClassK, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("iss");
    for b in &cloud.blowups {
        report.violations.push(Violation {
            scenario: b.scenario,
            t: b.t_esc,
            lhs: f64::INFINITY,
            rhs: 0.0,
            detail: "trajectory blew up; not forward complete".into(),
        });
    }
    for r in &cloud.records {
        report.checked += 1;
        let rhs = beta.eval(r.x0_norm, r.t) + gamma.eval(r.u_norm) + tol;
        if r.phi_norm > rhs {
            report.violations.push(Violation {
                scenario: r.scenario,
                t: r.t,
                lhs: r.phi_norm,
                rhs,
                detail: "decay bound violated".into(),
            });
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct BrsGroup {
    pub c: f64,
    pub tau: f64,
    pub records: usize,
    pub sup: f64,
    pub falsified_by: Option<BlowupRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BrsReport {
    pub groups: Vec<BrsGroup>,
}

impl BrsReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(|g| g.falsified_by.is_none())
    }
}

/// Bounded reachability sets: for each (C, τ) report the observed sup of
/// ‖φ‖ over records with ‖x₀‖ ≤ C, ‖u‖ ≤ C, t ≤ τ, and flag any blow-up in
/// that range as falsification.
pub fn check_brs(cloud: &SampleCloud, groups: &[(f64, f64)]) -> BrsReport {
    let mut out = Vec::with_capacity(groups.len());
    for &(c, tau) in groups {
        let mut sup = 0.0_f64;
        let mut count = 0usize;
        for r in &cloud.records {
            if r.x0_norm <= c && r.u_norm <= c && r.t <= tau {
                sup = sup.max(r.phi_norm);
                count += 1;
            }
        }
        let falsified_by = cloud
            .blowups
            .iter()
            .find(|b| b.x0_norm <= c && b.u_norm <= c && b.t_esc <= tau)
            .copied();
        out.push(BrsGroup { c, tau, records: count, sup, falsified_by });
    }
    BrsReport { groups: out }
}

/// Uniform local stability inside the ball of radius r:
/// ‖φ‖ ≤ σ(‖x‖) + γ(‖u‖) + tol for every record with ‖x₀‖ ≤ r, ‖u‖ ≤ r.
pub fn check_uls(
    cloud: &SampleCloud,
    sigma: &ClassK,
    gamma: &ClassK,
    r: f64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("uls");
    for b in &cloud.blowups {
        if b.x0_norm <= r && b.u_norm <= r {
            report.violations.push(Violation {
                scenario: b.scenario,
                t: b.t_esc,
                lhs: f64::INFINITY,
                rhs: 0.0,
                detail: "trajectory in the ball blew up".into(),
            });
        }
    }
    for rec in &cloud.records {
        if rec.x0_norm <= r && rec.u_norm <= r {
            report.checked += 1;
            let rhs = sigma.eval(rec.x0_norm) + gamma.eval(rec.u_norm) + tol;
            if rec.phi_norm > rhs {
                report.violations.push(Violation {
                    scenario: rec.scenario,
                    t: rec.t,
                    lhs: rec.phi_norm,
                    rhs,
                    detail: "local stability bound violated".into(),
                });
            }
        }
    }
    report
}

/// Uniform asymptotic gain: for every (ε, r) pair with τ = tau_oracle(ε, r),
/// every record with t ≥ τ inside the r-ball satisfies
/// ‖φ‖ ≤ ε + γ(‖u‖) + tol.
pub fn check_uag(
    cloud: &SampleCloud,
    gamma: &ClassK,
    tau_oracle: &dyn Fn(f64, f64) -> Option<f64>,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("uag");
    for &(eps, r) in pairs {
        let tau = tau_oracle(eps, r).ok_or(LiveError::TauUndefined { eps, r })?;
        for rec in &cloud.records {
            if rec.x0_norm <= r && rec.u_norm <= r && rec.t >= tau {
                report.checked += 1;
                let rhs = eps + gamma.eval(rec.u_norm) + tol;
                if rec.phi_norm > rhs {
                    report.violations.push(Violation {
                        scenario: rec.scenario,
                        t: rec.t,
                        lhs: rec.phi_norm,
                        rhs,
                        detail: format!("asymptotic gain violated for (eps={eps}, r={r}, tau={tau})"),
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Uniform limit property: for every (ε, r) pair, each scenario inside the
/// r-ball must have at least one sampled time t ≤ τ with
/// ‖φ(t)‖ ≤ ε + γ(‖u‖) + tol.
pub fn check_ulim(
    cloud: &SampleCloud,
    gamma: &ClassK,
    tau_oracle: &dyn Fn(f64, f64) -> Option<f64>,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<CheckReport> {
    let mut report = CheckReport::new("ulim");
    for &(eps, r) in pairs {
        let tau = tau_oracle(eps, r).ok_or(LiveError::TauUndefined { eps, r })?;
        let mut witnessed: BTreeMap<u64, bool> = BTreeMap::new();
        for rec in &cloud.records {
            if rec.x0_norm <= r && rec.u_norm <= r {
                let entry = witnessed.entry(rec.scenario).or_insert(false);
                if rec.t <= tau && rec.phi_norm <= eps + gamma.eval(rec.u_norm) + tol {
                    *entry = true;
                }
            }
        }
        report.checked += witnessed.len();
        for (scenario, ok) in witnessed {
            if !ok {
                report.violations.push(Violation {
                    scenario,
                    t: tau,
                    lhs: f64::NAN,
                    rhs: eps,
                    detail: format!("no sampled t <= {tau} reaches eps={eps} for r={r}"),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CiucsRadius {
    pub r: f64,
    pub peak_sup: f64,
    pub final_sup: f64,
    /// First sampled time from which the sup over the ball stays below eps.
    pub time_below: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CiucsReport {
    pub eps: f64,
    pub radii: Vec<CiucsRadius>,
    pub input_tail_norms: Vec<(f64, f64)>,
    pub input_tail_vanishes: bool,
}

impl CiucsReport {
    pub fn converged(&self) -> bool {
        self.radii.iter().all(|r| r.time_below.is_some())
    }
}

/// Convergent-input convergent-state probe: runs a bundle of initial states
/// from each ball, tracks the per-time sup of the pseudonorm, and reports
/// when it drops (and stays) under eps. The input's tail norm is reported
/// alongside so a non-vanishing input explains a non-convergent verdict.
#[allow(clippy::too_many_arguments)]
pub fn check_ciucs(
    sys: &LiveSystemDefinition,
    sched: &ImpulseSchedule,
    u: &InputSignal,
    initial_config: ConfigId,
    radii: &[f64],
    eps: f64,
    horizon: f64,
    samples_per_radius: usize,
    seed: u64,
    opts: &EvolveOptions,
) -> Result<CiucsReport> {
    let config = sys.registry.get(initial_config)?;
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut sup: Vec<(f64, f64)> = Vec::new();
        for s in 0..samples_per_radius.max(1) {
            // Random direction on the sphere of radius r (first sample on the
            // boundary, later ones at random depths).
            let dim = config.total_dim();
            let mut direction: Vec<f64> = (0..dim).map(|_| rng.range(-1.0, 1.0)).collect();
            let len: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if s == 0 { 1.0 } else { rng.next_f64() };
            if len > 0.0 {
                for v in &mut direction {
                    *v *= r * scale / len;
                }
            }
            let x0 = config.unpack(&direction);
            let traj = evolve(sys, sched, &x0, u, horizon, opts)?;
            if traj.blew_up() {
                return Err(LiveError::Numerical {
                    t: traj.final_time,
                    reason: "trajectory blew up during convergence probe".into(),
                });
            }
            if sup.is_empty() {
                sup = traj.norm_samples().collect();
            } else {
                for (acc, (_, n)) in sup.iter_mut().zip(traj.norm_samples()) {
                    acc.1 = acc.1.max(n);
                }
            }
        }
        // Suffix max: when does the sup drop under eps for good?
        let mut suffix = vec![0.0_f64; sup.len()];
        let mut running = 0.0_f64;
        for (i, (_, n)) in sup.iter().enumerate().rev() {
            running = running.max(*n);
            suffix[i] = running;
        }
        let time_below = sup
            .iter()
            .zip(&suffix)
            .find(|(_, sfx)| **sfx < eps)
            .map(|((t, _), _)| *t);
        out.push(CiucsRadius {
            r,
            peak_sup: suffix.first().copied().unwrap_or(0.0),
            final_sup: sup.last().map(|(_, n)| *n).unwrap_or(0.0),
            time_below,
        });
    }
    let probe_times: Vec<f64> = (0..=4).map(|i| horizon * i as f64 / 4.0).collect();
    let input_tail_norms: Vec<(f64, f64)> =
        probe_times.iter().map(|t| Ok((*t, u.tail_norm(*t)?))).collect::<Result<_>>()?;
    let input_tail_vanishes = input_tail_norms.last().map(|(_, n)| *n < eps).unwrap_or(true);
    Ok(CiucsReport { eps, radii: out, input_tail_norms, input_tail_vanishes })
}

/// The two-branch profile that is finite everywhere, satisfies the decay and
/// small-argument hypotheses, and is still unbounded on a compact set (the
/// ridge r ≥ 1, t → 1⁻), so no decay envelope can majorize it.
pub fn counterexample_g(r: f64, t: f64) -> f64 {
    debug_assert!(r >= 0.0 && t >= 0.0);
    if r >= 1.0 && (0.0..1.0).contains(&t) {
        r / (1.0 - t)
    } else {
        r * (-t).exp()
    }
}

/// Empirical decay profile plus the gain it was built with.
#[derive(Debug, Clone, Serialize)]
pub struct GainEstimate {
    pub beta: ClassKl,
    pub gamma: ClassK,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct CertificateOptions {
    /// Radius grid for the envelope; defaults to the distinct scenario radii.
    pub r_grid: Option<Vec<f64>>,
    pub tau_grid_size: usize,
    /// Tolerance used when validating the assembled bound.
    pub tol: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self { r_grid: None, tau_grid_size: 48, tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub estimate: GainEstimate,
    pub train: CheckReport,
    pub holdout: CheckReport,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.train.passed() && self.holdout.passed()
    }
}

/// Assemble an ISS certificate from a training cloud and validate the final
/// bound ‖φ(t,x,u)‖ ≤ β(‖x‖, t) + β(‖u‖, 0) + γ(‖u‖) on both clouds.
///
/// The empirical profile g(r, τ) = sup{‖φ(t,x,u)‖ − γ(‖u‖) : ‖x‖ ≤ r,
/// ‖u‖ ≤ r, t ≥ τ} is tabulated on a radius × decay-time grid, its
/// row-wise decay times feed the envelope construction, and the uniform
/// bound σ is the strictified running maximum of g(·, 0).
pub fn assemble_iss_certificate(
    train: &SampleCloud,
    holdout: &SampleCloud,
    gamma: &ClassK,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    gamma.validate()?;
    if train.records.is_empty() {
        return Err(LiveError::InvalidArgument("training cloud is empty".into()));
    }
    if !train.blowups.is_empty() {
        return Err(LiveError::Hypothesis(
            "training cloud contains blow-ups; bounded-reachability evidence insufficient".into(),
        ));
    }

    let radii_by_scenario = train.scenario_radii();
    let r_grid: Vec<f64> = match &opts.r_grid {
        Some(grid) => grid.clone(),
        None => {
            let mut radii: Vec<f64> =
                radii_by_scenario.values().copied().filter(|r| *r > 0.0).collect();
            radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
            radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
            radii
        }
    };
    if r_grid.is_empty() {
        return Err(LiveError::InvalidArgument(
            "no positive scenario radii; nothing to certify".into(),
        ));
    }

    let t_max = train.t_max().max(1e-9);
    let j_count = opts.tau_grid_size.max(2);
    let tau_grid: Vec<f64> =
        (0..j_count).map(|j| t_max * j as f64 / (j_count - 1) as f64).collect();

    // g_emp[i][j] = max(0, sup{phi − γ(u) over scenarios of radius ≤ r_i, t ≥ τ_j}).
    let i_count = r_grid.len();
    let mut g_emp = vec![vec![0.0_f64; j_count]; i_count];
    for rec in &train.records {
        let rad = radii_by_scenario[&rec.scenario];
        // First grid radius covering this scenario.
        let i_min = r_grid.partition_point(|r| *r < rad - 1e-12 * rad.abs().max(1.0));
        if i_min >= i_count {
            continue; // outside an explicitly narrowed grid
        }
        let j_max = tau_grid.partition_point(|tau| *tau <= rec.t);
        let value = rec.phi_norm - gamma.eval(rec.u_norm);
        if value > g_emp[i_min][j_max - 1] {
            g_emp[i_min][j_max - 1] = value;
        }
    }
    // Close under "radius ≤ r_i" (prefix max over i) and "t ≥ τ_j" (suffix
    // max over j).
    for i in 0..i_count {
        for j in (0..j_count.saturating_sub(1)).rev() {
            if g_emp[i][j + 1] > g_emp[i][j] {
                g_emp[i][j] = g_emp[i][j + 1];
            }
        }
        if i > 0 {
            for j in 0..j_count {
                if g_emp[i - 1][j] > g_emp[i][j] {
                    g_emp[i][j] = g_emp[i - 1][j];
                }
            }
        }
    }

    // Uniform bound σ: strictified envelope of g(·, 0).
    let peak = g_emp[i_count - 1][0];
    let step = (1e-9 * peak.max(1.0)).max(1e-12);
    let mut sigma_points = vec![(0.0, 0.0)];
    let mut prev = 0.0_f64;
    for (i, &r) in r_grid.iter().enumerate() {
        let v = (g_emp[i][0] + step).max(prev + step);
        sigma_points.push((r, v));
        prev = v;
    }
    let tail_slope = if sigma_points.len() >= 2 {
        let (x0, y0) = sigma_points[sigma_points.len() - 2];
        let (x1, y1) = sigma_points[sigma_points.len() - 1];
        ((y1 - y0) / (x1 - x0)).max(step)
    } else {
        step
    };
    let sigma = ClassK::Table { points: sigma_points, tail_slope };

    let g_lookup = {
        let g_emp = g_emp.clone();
        let r_grid = r_grid.clone();
        let tau_grid = tau_grid.clone();
        move |s: f64, t: f64| -> f64 {
            let i = r_grid.partition_point(|r| *r <= s);
            if i == 0 {
                return 0.0; // no evidence below the smallest radius
            }
            let j = tau_grid.partition_point(|tau| *tau <= t);
            g_emp[i - 1][j.saturating_sub(1).min(tau_grid.len() - 1)]
        }
    };
    let tau_oracle = {
        let g_emp = g_emp.clone();
        let r_grid = r_grid.clone();
        let tau_grid = tau_grid.clone();
        move |eps: f64, rho: f64| -> Option<f64> {
            let i = r_grid.partition_point(|r| *r <= rho * (1.0 + 1e-12));
            if i == 0 {
                return Some(0.0);
            }
            g_emp[i - 1]
                .iter()
                .position(|v| *v <= eps)
                .map(|j| tau_grid[j])
        }
    };

    let probe = BoundProbe {
        s_samples: r_grid.clone(),
        t_samples: tau_grid.clone(),
        bound: g_emp[i_count - 1][0] * (1.0 + 1e-9) + 1.0,
    };
    let beta = kl_majorant(&g_lookup, &sigma, &tau_oracle, &r_grid, &probe)?;

    let estimate = GainEstimate {
        beta,
        gamma: gamma.clone(),
        provenance: format!(
            "empirical decay profile over {} scenarios, {} radii, horizon {:.3}",
            radii_by_scenario.len(),
            i_count,
            t_max
        ),
    };
    let train_report = check_certificate_bound(train, &estimate, opts.tol, "certificate-train");
    let holdout_report =
        check_certificate_bound(holdout, &estimate, opts.tol, "certificate-holdout");
    Ok(CertificateReport { estimate, train: train_report, holdout: holdout_report })
}

/// ‖φ(t,x,u)‖ ≤ β(‖x‖, t) + β(‖u‖, 0) + γ(‖u‖) + tol over a cloud.
pub fn check_certificate_bound(
    cloud: &SampleCloud,
    estimate: &GainEstimate,
    tol: f64,
    name: &str,
) -> CheckReport {
    let mut report = CheckReport::new(name);
    for b in &cloud.blowups {
        report.violations.push(Violation {
            scenario: b.scenario,
            t: b.t_esc,
            lhs: f64::INFINITY,
            rhs: 0.0,
            detail: "trajectory blew up".into(),
        });
    }
    for r in &cloud.records {
        report.checked += 1;
        let rhs = estimate.beta.eval(r.x0_norm, r.t)
            + estimate.beta.eval(r.u_norm, 0.0)
            + estimate.gamma.eval(r.u_norm)
            + tol;
        if r.phi_norm > rhs {
            report.violations.push(Violation {
                scenario: r.scenario,
                t: r.t,
                lhs: r.phi_norm,
                rhs,
                detail: "certificate bound violated".into(),
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_cloud(rate: f64, scenarios: &[(u64, f64, f64)], horizon: f64, n: usize) -> SampleCloud {
        // Synthetic records following ‖φ‖ = ‖x0‖e^{−rate·t} + ‖u‖ exactly.
        let mut cloud = SampleCloud::new();
        for &(id, x0, u) in scenarios {
            for i in 0..=n {
                let t = horizon * i as f64 / n as f64;
                cloud.records.push(CloudRecord {
                    scenario: id,
                    x0_norm: x0,
                    u_norm: u,
                    t,
                    phi_norm: x0 * (-rate * t).exp() + u,
                });
            }
        }
        cloud
    }

    #[test]
    fn iss_check_passes_with_true_envelope() {
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0), (2, 2.0, 0.5)], 10.0, 100);
        let beta = ClassKl::SeparableExp { k: ClassK::Identity, rate: 1.0 };
        let gamma = ClassK::Identity;
        let report = check_iss(&cloud, &beta, &gamma, DEFAULT_CHECK_TOL);
        assert!(report.passed(), "{:?}", report.violations.first());
    }

    #[test]
    fn iss_check_fails_with_too_fast_envelope() {
        // Claiming decay e^{-2t} against data decaying like e^{-t} fails at
        // small positive times.
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0)], 5.0, 200);
        let beta = ClassKl::SeparableExp { k: ClassK::Identity, rate: 2.0 };
        let report = check_iss(&cloud, &beta, &ClassK::Zero, DEFAULT_CHECK_TOL);
        assert!(!report.passed());
    }

    #[test]
    fn iss_zero_state_zero_input_passes_exactly() {
        let cloud = exp_cloud(1.0, &[(1, 0.0, 0.0)], 5.0, 50);
        let beta = ClassKl::SeparableExp { k: ClassK::Identity, rate: 1.0 };
        let report = check_iss(&cloud, &beta, &ClassK::Zero, 0.0);
        assert!(report.passed());
    }

    #[test]
    fn brs_flags_blowup() {
        let mut cloud = exp_cloud(1.0, &[(1, 1.0, 0.0)], 2.0, 10);
        cloud.blowups.push(BlowupRecord { scenario: 9, x0_norm: 2.0, u_norm: 2.0, t_esc: 0.4 });
        let report = check_brs(&cloud, &[(2.0, 1.0), (0.5, 1.0)]);
        assert!(!report.passed());
        assert!(report.groups[0].falsified_by.is_some());
        // The smaller ball excludes the blow-up scenario.
        assert!(report.groups[1].falsified_by.is_none());
    }

    #[test]
    fn uls_passes_with_identity_sigma() {
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0), (2, 0.3, 0.2)], 8.0, 80);
        let report = check_uls(&cloud, &ClassK::Identity, &ClassK::Identity, 1.0, 1e-9);
        assert!(report.passed());
    }

    #[test]
    fn uls_fails_with_half_sigma() {
        // sigma(s) = s/2 fails as t -> 0 where ‖φ‖ ≈ ‖x0‖.
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0)], 2.0, 50);
        let report =
            check_uls(&cloud, &ClassK::Linear { slope: 0.5 }, &ClassK::Zero, 1.0, 1e-9);
        assert!(!report.passed());
    }

    #[test]
    fn uag_with_exact_decay_times() {
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0), (2, 0.7, 0.0)], 12.0, 120);
        let oracle = |eps: f64, r: f64| {
            if eps >= r {
                Some(0.0)
            } else {
                Some((r / eps).ln())
            }
        };
        let pairs = [(0.5, 1.0), (0.1, 1.0), (0.01, 1.0)];
        let report = check_uag(&cloud, &ClassK::Zero, &oracle, &pairs, 1e-9).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());

        // Halving the waiting times falsifies.
        let bad_oracle = |eps: f64, r: f64| oracle(eps, r).map(|t| t / 2.0);
        let report = check_uag(&cloud, &ClassK::Zero, &bad_oracle, &pairs, 1e-9).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn ulim_weaker_than_uag() {
        let cloud = exp_cloud(1.0, &[(1, 1.0, 0.0)], 12.0, 120);
        // One sample spacing of slack so the discrete grid contains a
        // witness time below tau.
        let dt = 12.0 / 120.0;
        let oracle = move |eps: f64, r: f64| {
            if eps >= r {
                Some(0.0)
            } else {
                Some((r / eps).ln() + dt)
            }
        };
        let pairs = [(0.5, 1.0), (0.05, 1.0)];
        let uag = check_uag(&cloud, &ClassK::Zero, &oracle, &pairs, 1e-9).unwrap();
        let ulim = check_ulim(&cloud, &ClassK::Zero, &oracle, &pairs, 1e-9).unwrap();
        assert!(uag.passed());
        assert!(ulim.passed());
    }

    #[test]
    fn counterexample_branch_values() {
        assert_eq!(counterexample_g(1.0, 0.5), 2.0);
        assert!((counterexample_g(0.5, 1.0) - 0.5 * (-1.0_f64).exp()).abs() < 1e-15);
        assert!((counterexample_g(1.0, 0.999) - 1000.0).abs() < 1e-9);
        // Second branch for r < 1 even at small t.
        assert!((counterexample_g(0.9, 0.1) - 0.9 * (-0.1_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn certificate_on_decaying_cloud() {
        let scenarios: Vec<(u64, f64, f64)> =
            (0..12).map(|i| (i, 0.2 + 0.15 * i as f64, 0.1 * (i % 4) as f64)).collect();
        let train = exp_cloud(1.0, &scenarios, 15.0, 60);
        let holdout_scenarios: Vec<(u64, f64, f64)> =
            (0..8).map(|i| (100 + i, 0.25 + 0.17 * i as f64, 0.05 * (i % 3) as f64)).collect();
        let holdout = exp_cloud(1.0, &holdout_scenarios, 15.0, 60);
        // γ(s) = 2s over-covers the additive ‖u‖ term.
        let gamma = ClassK::Linear { slope: 2.0 };
        let report = assemble_iss_certificate(&train, &holdout, &gamma, &Default::default())
            .unwrap();
        assert!(report.train.passed(), "{:?}", report.train.violations.first());
        assert!(report.holdout.passed(), "{:?}", report.holdout.violations.first());
    }

    #[test]
    fn certificate_refuses_blowups() {
        let mut train = exp_cloud(1.0, &[(1, 1.0, 0.0)], 5.0, 20);
        train.blowups.push(BlowupRecord { scenario: 2, x0_norm: 1.0, u_norm: 0.0, t_esc: 1.0 });
        let err = assemble_iss_certificate(
            &train,
            &SampleCloud::new(),
            &ClassK::Identity,
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, LiveError::Hypothesis(_)));
    }

    #[test]
    fn certificate_on_zero_dynamics_reduces_to_gain() {
        // ‖φ‖ = ‖u‖ for all t: β degenerates, γ carries the bound.
        let mut cloud = SampleCloud::new();
        for i in 0..6 {
            let u = 0.2 + 0.1 * i as f64;
            for j in 0..=40 {
                let t = 10.0 * j as f64 / 40.0;
                cloud.records.push(CloudRecord {
                    scenario: i,
                    x0_norm: 0.5,
                    u_norm: u,
                    t,
                    phi_norm: u,
                });
            }
        }
        let gamma = ClassK::Linear { slope: 1.0 };
        let report =
            assemble_iss_certificate(&cloud, &cloud.clone(), &gamma, &Default::default()).unwrap();
        assert!(report.passed());
    }
}
