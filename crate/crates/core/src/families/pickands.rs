use crate::error::{CopulaError, Result};
use crate::families::archimedean::midpoint_convexity;
use crate::families::Certificate;

const GRID: usize = 1001;
const BOUND_TOL: f64 = 1e-12;
const CONVEXITY_SLACK: f64 = 1e-9;

/// Pickands dependence function `A: [0, 1] → [1/2, 1]`, convex, with
/// `max(t, 1 − t) ≤ A(t) ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum PickandsFunction {
    /// `A ≡ 1`; yields the independence copula.
    Independence,
    /// `A(t) = max(t, 1 − t)`; yields the upper Fréchet bound.
    Comonotone,
    /// `A(t) = (t^θ + (1 − t)^θ)^(1/θ)`, `θ ≥ 1`.
    Gumbel { theta: f64 },
    /// Piecewise-linear interpolation of `(t, A(t))` knots spanning [0, 1].
    Tabulated { knots: Vec<(f64, f64)> },
}

impl PickandsFunction {
    pub fn gumbel(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 1.0 {
            return Err(CopulaError::ParameterOutOfRange(format!(
                "Gumbel–Pickands requires θ ≥ 1, got {theta}"
            )));
        }
        Ok(Self::Gumbel { theta })
    }

    /// Validates the knots and certifies bounds and convexity on the audit grid.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(CopulaError::InvalidSpec(
                "Pickands knots must start at t = 0 and end at t = 1".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CopulaError::InvalidSpec(
                "Pickands knots must be strictly increasing in t".into(),
            ));
        }
        let p = Self::Tabulated { knots };
        match p.certificate() {
            Certificate::Certified => Ok(p),
            other => Err(CopulaError::InvalidSpec(format!(
                "tabulated Pickands function fails its audit: {other:?}"
            ))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Independence => "independence",
            Self::Comonotone => "comonotone",
            Self::Gumbel { .. } => "gumbel",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Independence => 1.0,
            Self::Comonotone => t.max(1.0 - t),
            Self::Gumbel { theta } => (t.powf(*theta) + (1.0 - t).powf(*theta)).powf(1.0 / theta),
            Self::Tabulated { knots } => {
                let k = knots
                    .windows(2)
                    .position(|w| t <= w[1].0)
                    .unwrap_or(knots.len() - 2);
                let (t0, a0) = knots[k];
                let (t1, a1) = knots[k + 1];
                a0 + (a1 - a0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `A'(t)` where `A` is differentiable everywhere; `None` for kinked functions.
    pub fn derivative(&self, t: f64) -> Option<f64> {
        match self {
            Self::Independence => Some(0.0),
            Self::Gumbel { theta } => {
                let th = *theta;
                let s = t.powf(th) + (1.0 - t).powf(th);
                Some((t.powf(th - 1.0) - (1.0 - t).powf(th - 1.0)) * s.powf(1.0 / th - 1.0))
            }
            Self::Comonotone | Self::Tabulated { .. } => None,
        }
    }

    /// Bounds `max(t, 1−t) ≤ A ≤ 1` (tolerance 1e-12) and midpoint
    /// convexity (slack 1e-9) on a uniform 1001-point grid.
    pub fn certificate(&self) -> Certificate {
        let mut values = Vec::with_capacity(GRID);
        for i in 0..GRID {
            let t = i as f64 / (GRID - 1) as f64;
            let a = self.value(t);
            if !a.is_finite() || a > 1.0 + BOUND_TOL || a < t.max(1.0 - t) - BOUND_TOL {
                return Certificate::Refuted {
                    at: t,
                    excess: (a - 1.0).max(t.max(1.0 - t) - a),
                };
            }
            values.push((t, a));
        }
        midpoint_convexity(&values, CONVEXITY_SLACK)
    }

    /// Extreme-value copula `exp(log(uv) · A(log u / log uv))`.
    pub fn copula_value(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        if let Self::Independence = self {
            return u * v;
        }
        let (x, y) = (-u.ln(), -v.ln());
        let s = x + y;
        (-s * self.value(x / s)).exp().clamp(0.0, u.min(v))
    }

    /// Closed-form partial derivative when `A'` exists.
    pub fn copula_partial(&self, component: u8, u: f64, v: f64) -> Option<f64> {
        let (w, other) = if component == 1 { (u, v) } else { (v, u) };
        if other <= 0.0 {
            return Some(0.0);
        }
        if other >= 1.0 {
            return Some(1.0);
        }
        if w <= 0.0 {
            return None;
        }
        let (x, y) = (-u.ln(), -v.ln());
        let s = x + y;
        let t = x / s;
        let a = self.value(t);
        let da = self.derivative(t)?;
        let c = self.copula_value(u, v);
        let r = if component == 1 {
            c / u * (a + (1.0 - t) * da)
        } else {
            c / v * (a - t * da)
        };
        r.is_finite().then(|| r.clamp(0.0, 1.0))
    }
}
