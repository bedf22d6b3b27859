//! Comparison functions: class K / K∞ gains, class L decays, and class KL
//! envelopes, in closed form or as monotone tables.
//!
//! Tables are the workhorse: K-tables interpolate linearly with a linear
//! tail, L-tables interpolate log-linearly (piecewise exponential) with an
//! exponential tail, and KL-tables hold one L-row per radius grid point with
//! linear interpolation in the radius.

use serde::{Deserialize, Serialize};

use crate::error::{LiveError, Result};

/// Class K (strictly increasing, zero at zero); every non-`Zero` form here is
/// unbounded, hence class K∞. `Zero` stands for the degenerate gain in
/// K∞ ∪ {0}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassK {
    Zero,
    Identity,
    Linear { slope: f64 },
    /// coeff·s^exponent
    Power { coeff: f64, exponent: f64 },
    Table { points: Vec<(f64, f64)>, tail_slope: f64 },
}

impl ClassK {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClassK::Zero | ClassK::Identity => Ok(()),
            ClassK::Linear { slope } => {
                if !(slope.is_finite() && *slope > 0.0) {
                    return Err(LiveError::InvalidArgument("linear gain needs slope > 0".into()));
                }
                Ok(())
            }
            ClassK::Power { coeff, exponent } => {
                if !(coeff.is_finite() && *coeff > 0.0 && exponent.is_finite() && *exponent > 0.0) {
                    return Err(LiveError::InvalidArgument(
                        "power gain needs coeff > 0 and exponent > 0".into(),
                    ));
                }
                Ok(())
            }
            ClassK::Table { points, tail_slope } => {
                if points.is_empty() || points[0] != (0.0, 0.0) {
                    return Err(LiveError::InvalidArgument(
                        "gain table must start at (0, 0)".into(),
                    ));
                }
                if points.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 >= w[1].1) {
                    return Err(LiveError::InvalidArgument(
                        "gain table must be strictly increasing in both coordinates".into(),
                    ));
                }
                if !(tail_slope.is_finite() && *tail_slope > 0.0) {
                    return Err(LiveError::InvalidArgument("gain table needs tail_slope > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ClassK::Zero)
    }

    pub fn eval(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match self {
            ClassK::Zero => 0.0,
            ClassK::Identity => s,
            ClassK::Linear { slope } => slope * s,
            ClassK::Power { coeff, exponent } => coeff * s.powf(*exponent),
            ClassK::Table { points, tail_slope } => {
                let last = points.len() - 1;
                if s >= points[last].0 {
                    return points[last].1 + tail_slope * (s - points[last].0);
                }
                let idx = points.partition_point(|(x, _)| *x <= s);
                // points[idx-1].0 <= s < points[idx].0
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                y0 + (y1 - y0) * (s - x0) / (x1 - x0)
            }
        }
    }

    /// Inverse for the K∞ forms. `Zero` has none.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 {
            return Err(LiveError::InvalidArgument("inverse argument must be >= 0".into()));
        }
        match self {
            ClassK::Zero => Err(LiveError::InvalidArgument("the zero gain has no inverse".into())),
            ClassK::Identity => Ok(y),
            ClassK::Linear { slope } => Ok(y / slope),
            ClassK::Power { coeff, exponent } => Ok((y / coeff).powf(1.0 / exponent)),
            ClassK::Table { points, tail_slope } => {
                let last = points.len() - 1;
                if y >= points[last].1 {
                    return Ok(points[last].0 + (y - points[last].1) / tail_slope);
                }
                let idx = points.partition_point(|(_, v)| *v <= y);
                let (x0, y0) = points[idx - 1];
                let (x1, y1) = points[idx];
                Ok(x0 + (x1 - x0) * (y - y0) / (y1 - y0))
            }
        }
    }

    /// Composition self ∘ other (still class K).
    pub fn compose(&self, other: &ClassK) -> ComposedK {
        ComposedK { outer: self.clone(), inner: other.clone() }
    }

    /// The inverse function as a class-K object (K∞ forms only).
    pub fn inverse_fn(&self) -> Result<ClassK> {
        match self {
            ClassK::Zero => Err(LiveError::InvalidArgument("the zero gain has no inverse".into())),
            ClassK::Identity => Ok(ClassK::Identity),
            ClassK::Linear { slope } => Ok(ClassK::Linear { slope: 1.0 / slope }),
            ClassK::Power { coeff, exponent } => Ok(ClassK::Power {
                coeff: coeff.powf(-1.0 / exponent),
                exponent: 1.0 / exponent,
            }),
            ClassK::Table { points, tail_slope } => Ok(ClassK::Table {
                points: points.iter().map(|(x, y)| (*y, *x)).collect(),
                tail_slope: 1.0 / tail_slope,
            }),
        }
    }
}

/// Lightweight composition helper (evaluation only).
#[derive(Debug, Clone)]
pub struct ComposedK {
    outer: ClassK,
    inner: ClassK,
}

impl ComposedK {
    pub fn eval(&self, s: f64) -> f64 {
        self.outer.eval(self.inner.eval(s))
    }
}

/// Class L: continuous, strictly decreasing to zero. `Zero` is the degenerate
/// all-zero row used at radius zero of KL tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassL {
    Zero,
    /// scale·e^{−rate·t}
    ExpDecay { scale: f64, rate: f64 },
    /// Log-linear interpolation through positive strictly decreasing knots,
    /// exponential tail beyond the last knot.
    Table { knots: Vec<(f64, f64)>, tail_rate: f64 },
}

impl ClassL {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClassL::Zero => Ok(()),
            ClassL::ExpDecay { scale, rate } => {
                if !(scale.is_finite() && *scale > 0.0 && rate.is_finite() && *rate > 0.0) {
                    return Err(LiveError::InvalidArgument("decay needs scale > 0 and rate > 0".into()));
                }
                Ok(())
            }
            ClassL::Table { knots, tail_rate } => {
                if knots.is_empty() || knots[0].0 != 0.0 {
                    return Err(LiveError::InvalidArgument("decay table must start at t = 0".into()));
                }
                if knots.iter().any(|(t, v)| !t.is_finite() || !(v.is_finite() && *v > 0.0)) {
                    return Err(LiveError::InvalidArgument("decay table values must be positive".into()));
                }
                if knots.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 <= w[1].1) {
                    return Err(LiveError::InvalidArgument(
                        "decay table must be strictly decreasing over strictly increasing times".into(),
                    ));
                }
                if !(tail_rate.is_finite() && *tail_rate > 0.0) {
                    return Err(LiveError::InvalidArgument("decay table needs tail_rate > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            ClassL::Zero => 0.0,
            ClassL::ExpDecay { scale, rate } => scale * (-rate * t).exp(),
            ClassL::Table { knots, tail_rate } => {
                let last = knots.len() - 1;
                if t >= knots[last].0 {
                    return knots[last].1 * (-tail_rate * (t - knots[last].0)).exp();
                }
                let idx = knots.partition_point(|(x, _)| *x <= t);
                let (t0, v0) = knots[idx - 1];
                let (t1, v1) = knots[idx];
                // Log-linear: v0 · (v1/v0)^((t-t0)/(t1-t0)).
                let frac = (t - t0) / (t1 - t0);
                v0 * (v1 / v0).powf(frac)
            }
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// Pointwise maximum of two decays, again as a decay table. Knot sets
    /// are merged; the tail keeps the slower of the two rates so the result
    /// still dominates both.
    pub fn pointwise_max(&self, other: &ClassL) -> ClassL {
        match (self, other) {
            (ClassL::Zero, x) | (x, ClassL::Zero) => x.clone(),
            (a, b) => {
                let mut times: Vec<f64> = Vec::new();
                let mut add_knots = |l: &ClassL| match l {
                    ClassL::Table { knots, .. } => times.extend(knots.iter().map(|(t, _)| *t)),
                    ClassL::ExpDecay { .. } => times.push(0.0),
                    ClassL::Zero => {}
                };
                add_knots(a);
                add_knots(b);
                times.sort_by(|x, y| x.partial_cmp(y).unwrap());
                times.dedup();
                let knots: Vec<(f64, f64)> =
                    times.iter().map(|t| (*t, a.eval(*t).max(b.eval(*t)))).collect();
                let tail_rate = a.tail_rate().min(b.tail_rate());
                if knots.len() == 1 {
                    return ClassL::ExpDecay { scale: knots[0].1, rate: tail_rate };
                }
                ClassL::Table { knots, tail_rate }
            }
        }
    }

    fn tail_rate(&self) -> f64 {
        match self {
            ClassL::Zero => 1.0,
            ClassL::ExpDecay { rate, .. } => *rate,
            ClassL::Table { tail_rate, .. } => *tail_rate,
        }
    }
}

/// Class KL: increasing in the first argument, decreasing to zero in the
/// second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKl {
    /// k(r)·e^{−rate·t}
    SeparableExp { k: ClassK, rate: f64 },
    /// outer(decay(t)·inner(r)); class KL whenever the parts are valid and
    /// outer ∈ K∞.
    Composed { outer: ClassK, inner: ClassK, decay: ClassL },
    /// One decay row per radius grid point; linear interpolation in r, zero
    /// below the grid (anchored at β(0, ·) = 0), linear extension above.
    Table { r_grid: Vec<f64>, rows: Vec<ClassL> },
}

impl ClassKl {
    pub fn validate(&self) -> Result<()> {
        match self {
            ClassKl::SeparableExp { k, rate } => {
                k.validate()?;
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(LiveError::InvalidArgument("separable decay needs rate > 0".into()));
                }
                Ok(())
            }
            ClassKl::Composed { outer, inner, decay } => {
                outer.validate()?;
                inner.validate()?;
                decay.validate()
            }
            ClassKl::Table { r_grid, rows } => {
                if r_grid.is_empty() || r_grid.len() != rows.len() {
                    return Err(LiveError::InvalidArgument(
                        "KL table needs one row per radius grid point".into(),
                    ));
                }
                if r_grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err(LiveError::InvalidArgument("radius grid must be positive".into()));
                }
                if r_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(LiveError::InvalidArgument("radius grid must be strictly increasing".into()));
                }
                for row in rows {
                    row.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        debug_assert!(r >= 0.0 && t >= 0.0);
        match self {
            ClassKl::SeparableExp { k, rate } => k.eval(r) * (-rate * t).exp(),
            ClassKl::Composed { outer, inner, decay } => outer.eval(decay.eval(t) * inner.eval(r)),
            ClassKl::Table { r_grid, rows } => {
                if r == 0.0 {
                    return 0.0;
                }
                let n = r_grid.len();
                if r <= r_grid[0] {
                    // Anchor at (0, 0): continuity in r at zero.
                    return rows[0].eval(t) * (r / r_grid[0]);
                }
                if r >= r_grid[n - 1] {
                    let top = rows[n - 1].eval(t);
                    if n == 1 {
                        return top * (r / r_grid[0]);
                    }
                    let prev = rows[n - 2].eval(t);
                    let slope = ((top - prev) / (r_grid[n - 1] - r_grid[n - 2])).max(0.0);
                    return top + slope * (r - r_grid[n - 1]);
                }
                let idx = r_grid.partition_point(|x| *x <= r);
                let (r0, r1) = (r_grid[idx - 1], r_grid[idx]);
                let (v0, v1) = (rows[idx - 1].eval(t), rows[idx].eval(t));
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Smallest time at which the envelope at radius r has decayed to `eps`,
    /// found by bisection (the envelope is nonincreasing in t). Returns None
    /// when even `t_max` is not enough.
    pub fn time_to_reach(&self, r: f64, eps: f64, t_max: f64) -> Option<f64> {
        if self.eval(r, 0.0) <= eps {
            return Some(0.0);
        }
        if self.eval(r, t_max) > eps {
            return None;
        }
        let (mut lo, mut hi) = (0.0_f64, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(r, mid) <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_table_eval_and_inverse_roundtrip() {
        let k = ClassK::Table {
            points: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 5.0)],
            tail_slope: 1.5,
        };
        k.validate().unwrap();
        assert_eq!(k.eval(0.0), 0.0);
        assert_eq!(k.eval(1.0), 2.0);
        assert!((k.eval(2.0) - 3.5).abs() < 1e-15);
        assert!((k.eval(5.0) - 8.0).abs() < 1e-15);
        for y in [0.0, 0.7, 2.0, 4.2, 9.5] {
            let s = k.inverse(y).unwrap();
            assert!((k.eval(s) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn power_inverse() {
        let k = ClassK::Power { coeff: 0.5, exponent: 2.0 };
        let y = k.eval(3.0);
        assert!((y - 4.5).abs() < 1e-15);
        assert!((k.inverse(y).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn l_table_is_log_linear() {
        let l = ClassL::Table {
            knots: vec![(0.0, 4.0), (2.0, 1.0)],
            tail_rate: 0.5,
        };
        l.validate().unwrap();
        assert_eq!(l.eval(0.0), 4.0);
        assert_eq!(l.eval(2.0), 1.0);
        // Midpoint in log space: sqrt(4·1) = 2.
        assert!((l.eval(1.0) - 2.0).abs() < 1e-12);
        // Tail: 1·e^{-0.5·(t-2)}.
        assert!((l.eval(4.0) - (-1.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn l_pointwise_max_dominates_both() {
        let a = ClassL::ExpDecay { scale: 2.0, rate: 1.0 };
        let b = ClassL::Table { knots: vec![(0.0, 1.0), (1.0, 0.9)], tail_rate: 0.1 };
        let m = a.pointwise_max(&b);
        for t in [0.0, 0.3, 1.0, 2.5, 7.0, 20.0] {
            assert!(m.eval(t) >= a.eval(t) - 1e-12, "t={t}");
            assert!(m.eval(t) >= b.eval(t) - 1e-12, "t={t}");
        }
    }

    #[test]
    fn kl_table_monotonicity() {
        let kl = ClassKl::Table {
            r_grid: vec![1.0, 2.0],
            rows: vec![
                ClassL::ExpDecay { scale: 1.0, rate: 1.0 },
                ClassL::ExpDecay { scale: 3.0, rate: 0.5 },
            ],
        };
        kl.validate().unwrap();
        assert_eq!(kl.eval(0.0, 1.0), 0.0);
        // Increasing in r at fixed t.
        let mut prev = 0.0;
        for r in [0.2, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let v = kl.eval(r, 0.7);
            assert!(v >= prev);
            prev = v;
        }
        // Decreasing in t at fixed r.
        let mut prev = f64::INFINITY;
        for t in [0.0, 0.5, 1.0, 2.0, 8.0] {
            let v = kl.eval(1.4, t);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn time_to_reach_exponential() {
        let kl = ClassKl::SeparableExp { k: ClassK::Identity, rate: 1.0 };
        // r·e^{-t} = eps at t = ln(r/eps).
        let t = kl.time_to_reach(10.0, 1.0, 50.0).unwrap();
        assert!((t - 10.0_f64.ln()).abs() < 1e-9);
        assert_eq!(kl.time_to_reach(10.0, 11.0, 50.0), Some(0.0));
        assert_eq!(kl.time_to_reach(1e9, 1e-9, 1.0), None);
    }
}
