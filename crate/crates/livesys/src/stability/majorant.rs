//! Constructive KL envelope for a two-argument decay profile.
//!
//! Given g(s, t), a uniform bound σ ∈ K∞ with g(s, t) ≤ σ(s) whenever s ≤ r,
//! and a decay-time oracle τ(ε, r) certifying that g(s, t) ≤ ε for s ≤ r and
//! t ≥ τ, the construction lays down, for each radius grid point, the knots
//!
//!   ω(r, 0) = 2σ(r),   ω(r, τ'_n) = ε_{n−1},   ε_n = 2^{−n} σ(r),
//!
//! with the oracle times monotonized by a running maximum plus 2^{−n}
//! spacing, interpolates them as a class-L row, and takes the running
//! pointwise maximum over radii. The result majorizes g at every radius grid
//! point for all probed times; the postcondition is verified before the
//! table is returned.
//!
//! Construction is refused when the boundedness probe finds a sample above
//! the declared bound (a profile unbounded on a bounded set admits no such
//! envelope), when the small-argument bound fails, or when the oracle cannot
//! even certify decay to σ(r)/2.

use crate::error::{LiveError, Result};
use crate::stability::comparison::{ClassK, ClassKl, ClassL};

/// Grid and threshold for the boundedness probe (hypothesis check on a
/// compact rectangle of (s, t) samples).
#[derive(Debug, Clone)]
pub struct BoundProbe {
    pub s_samples: Vec<f64>,
    pub t_samples: Vec<f64>,
    pub bound: f64,
}

impl BoundProbe {
    /// Uniform probe over [0, s_max] × [0, t_max].
    pub fn uniform(s_max: f64, t_max: f64, n: usize, bound: f64) -> Self {
        let lin = |hi: f64| -> Vec<f64> {
            (0..=n).map(|i| hi * i as f64 / n as f64).collect()
        };
        Self { s_samples: lin(s_max), t_samples: lin(t_max), bound }
    }

    pub fn t_max(&self) -> f64 {
        self.t_samples.iter().fold(0.0_f64, |m, t| m.max(*t))
    }
}

/// Build a KL table majorizing `g` on the radius grid.
///
/// `tau_oracle(eps, r)` returns a time after which g(s, ·) ≤ eps holds for
/// all s ≤ r, or `None` when no such time can be certified. `None` at the
/// very first level is an error; at deeper levels it closes the row at the
/// last certified claim, which is the natural end of finite-horizon
/// evidence.
pub fn kl_majorant(
    g: &dyn Fn(f64, f64) -> f64,
    sigma: &ClassK,
    tau_oracle: &dyn Fn(f64, f64) -> Option<f64>,
    r_grid: &[f64],
    probe: &BoundProbe,
) -> Result<ClassKl> {
    sigma.validate()?;
    if sigma.is_zero() {
        return Err(LiveError::InvalidArgument("uniform bound must be a K-infinity gain".into()));
    }
    if r_grid.is_empty() {
        return Err(LiveError::InvalidArgument("radius grid must be nonempty".into()));
    }
    if r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(LiveError::InvalidArgument("radius grid must be positive".into()));
    }
    if r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LiveError::InvalidArgument("radius grid must be strictly increasing".into()));
    }
    if probe.t_samples.is_empty() || probe.s_samples.is_empty() {
        return Err(LiveError::InvalidArgument("probe grids must be nonempty".into()));
    }

    // Boundedness on the probe rectangle.
    for &s in &probe.s_samples {
        for &t in &probe.t_samples {
            let v = g(s, t);
            if !v.is_finite() || v > probe.bound {
                return Err(LiveError::UnboundedSample { s, t, value: v, bound: probe.bound });
            }
        }
    }

    // Small-argument bound: g(s, ·) ≤ σ(s) near zero.
    let delta = r_grid[0];
    for j in 0..=8 {
        let s = delta * 0.5_f64.powi(j);
        let cap = sigma.eval(s);
        for &t in &probe.t_samples {
            let v = g(s, t);
            if v > cap * (1.0 + 1e-9) + 1e-12 {
                return Err(LiveError::Hypothesis(format!(
                    "small-argument bound failed: g({s}, {t}) = {v} > sigma({s}) = {cap}"
                )));
            }
        }
    }

    let t_max = probe.t_max();
    let mut rows: Vec<ClassL> = Vec::with_capacity(r_grid.len());
    let mut running: Option<ClassL> = None;
    for &rho in r_grid {
        let row = build_row(sigma.eval(rho), rho, tau_oracle, t_max)?;
        let merged = match &running {
            None => row,
            Some(prev) => prev.pointwise_max(&row),
        };
        rows.push(merged.clone());
        running = Some(merged);
    }

    let beta = ClassKl::Table { r_grid: r_grid.to_vec(), rows };
    beta.validate()?;

    // Postcondition: majorization at every radius grid point over the probed
    // times (and t = 0).
    for &s in r_grid {
        for &t in probe.t_samples.iter().chain(std::iter::once(&0.0)) {
            let gv = g(s, t);
            let bv = beta.eval(s, t);
            if gv > bv * (1.0 + 1e-9) + 1e-12 {
                return Err(LiveError::NotMajorized { s, t, g: gv, beta: bv });
            }
        }
    }
    Ok(beta)
}

/// One decay row of the envelope at radius `rho` with uniform bound `eps0` =
/// σ(rho).
fn build_row(
    eps0: f64,
    rho: f64,
    tau_oracle: &dyn Fn(f64, f64) -> Option<f64>,
    t_max: f64,
) -> Result<ClassL> {
    debug_assert!(eps0 > 0.0);
    let mut knots = vec![(0.0, 2.0 * eps0)];
    let mut tau_prev = 0.0_f64;
    let mut eps_prev = eps0;
    for n in 1..=48_i32 {
        let eps_n = eps0 * 0.5_f64.powi(n);
        let spacing = 0.5_f64.powi(n);
        match tau_oracle(eps_n, rho) {
            Some(tau) if tau.is_finite() && tau >= 0.0 => {
                // Monotonize, and keep the knot strictly after the previous
                // one even when the dyadic spacing underflows.
                let tau_n = tau
                    .max(tau_prev + spacing)
                    .max(tau_prev * (1.0 + 1e-9) + 1e-12);
                knots.push((tau_n, eps_prev));
                tau_prev = tau_n;
                eps_prev = eps_n;
                if tau_n >= t_max {
                    break;
                }
            }
            Some(bad) => {
                return Err(LiveError::InvalidArgument(format!(
                    "decay-time oracle returned invalid time {bad} for (eps = {eps_n}, r = {rho})"
                )))
            }
            None if n == 1 => return Err(LiveError::TauUndefined { eps: eps_n, r: rho }),
            None => break,
        }
    }
    if tau_prev < t_max {
        // Pin the last certified claim level through the probed horizon.
        let t_close = (t_max * 1.125).max(tau_prev * 1.125 + 1e-9);
        knots.push((t_close, eps_prev));
    }
    let (t0, v0) = knots[knots.len() - 2];
    let (t1, v1) = knots[knots.len() - 1];
    let tail_rate = ((v0 / v1).ln() / (t1 - t0)).max(1e-12);
    let row = ClassL::Table { knots, tail_rate };
    row.validate()?;
    Ok(row)
}
