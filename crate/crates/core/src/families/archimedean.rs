//! Archimedean generators `φ: [0, ∞) → [0, 1]` with `φ(0) = 1`, decreasing
//! and convex, and the stochastic-monotonicity criterion on `log(−φ')`.

use std::io::Read;

use crate::error::{CopulaError, Result};
use crate::families::Certificate;

/// Number of points in the convexity audit grid.
pub const AUDIT_POINTS: usize = 1001;
/// Slack allowed in the midpoint-convexity certificate.
pub const CONVEXITY_SLACK: f64 = 1e-9;
/// The audit covers `t ∈ [φ⁻¹(1 − δ), φ⁻¹(δ)]` with this `δ`.
pub const AUDIT_EDGE: f64 = 1e-6;

const INVERSE_TOL: f64 = 1e-12;

/// Additive generator of an Archimedean copula.
#[derive(Debug, Clone, PartialEq)]
pub enum ArchimedeanGenerator {
    /// `φ(t) = exp(−t)`, generating the independence copula.
    Independence,
    /// `φ(t) = (1 + θt)^(−1/θ)`, `θ > −1`, `θ ≠ 0`.
    Clayton { theta: f64 },
    /// `φ(t) = exp(−t^(1/θ))`, `θ ≥ 1`.
    Gumbel { theta: f64 },
    /// `φ(t) = −ln(1 − (1 − e^(−θ)) e^(−t)) / θ`, `θ ≠ 0`.
    Frank { theta: f64 },
    /// Monotone cubic interpolation of user-supplied values.
    Tabulated(TabulatedGenerator),
}

impl ArchimedeanGenerator {
    pub fn clayton(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta <= -1.0 || theta == 0.0 {
            return Err(CopulaError::ParameterOutOfRange(format!(
                "Clayton requires θ > −1 and θ ≠ 0, got {theta}"
            )));
        }
        Ok(Self::Clayton { theta })
    }

    pub fn gumbel(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 1.0 {
            return Err(CopulaError::ParameterOutOfRange(format!(
                "Gumbel requires θ ≥ 1, got {theta}"
            )));
        }
        Ok(Self::Gumbel { theta })
    }

    pub fn frank(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta == 0.0 {
            return Err(CopulaError::ParameterOutOfRange(format!(
                "Frank requires a finite θ ≠ 0, got {theta}"
            )));
        }
        Ok(Self::Frank { theta })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Independence => "independence",
            Self::Clayton { .. } => "clayton",
            Self::Gumbel { .. } => "gumbel",
            Self::Frank { .. } => "frank",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Self::Clayton { theta } | Self::Gumbel { theta } | Self::Frank { theta } => Some(theta),
            _ => None,
        }
    }

    /// End of the support: `∞` for strict generators, otherwise the zero of `φ`.
    pub fn support_end(&self) -> f64 {
        match self {
            Self::Clayton { theta } if *theta < 0.0 => -1.0 / theta,
            Self::Tabulated(t) => t.support_end(),
            _ => f64::INFINITY,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            Self::Independence => (-t).exp(),
            Self::Clayton { theta } => {
                if theta < 0.0 && t >= -1.0 / theta {
                    0.0
                } else {
                    (-(theta * t).ln_1p() / theta).exp()
                }
            }
            Self::Gumbel { theta } => (-t.powf(1.0 / theta)).exp(),
            Self::Frank { theta } => {
                let c = -(-theta).exp_m1();
                -(-c * (-t).exp()).ln_1p() / theta
            }
            Self::Tabulated(ref tab) => tab.phi(t),
        }
    }

    /// Pseudo-inverse `φ^[−1]`; equals `support_end()` at `u = 0`.
    pub fn phi_inv(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        if u <= 0.0 {
            return self.support_end();
        }
        match *self {
            Self::Independence => -u.ln(),
            Self::Clayton { theta } => (-theta * u.ln()).exp_m1() / theta,
            Self::Gumbel { theta } => (-u.ln()).powf(theta),
            Self::Frank { theta } => -((-theta * u).exp_m1() / (-theta).exp_m1()).ln(),
            Self::Tabulated(ref tab) => tab.phi_inv(u),
        }
    }

    /// First derivative `φ'(t)`; may be `−∞` at `t = 0`.
    pub fn dphi(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            Self::Independence => -(-t).exp(),
            Self::Clayton { theta } => {
                if theta < 0.0 && t >= -1.0 / theta {
                    0.0
                } else {
                    -(-(1.0 / theta + 1.0) * (theta * t).ln_1p()).exp()
                }
            }
            Self::Gumbel { theta } => {
                let a = 1.0 / theta;
                if t == 0.0 {
                    return if theta == 1.0 {
                        -1.0
                    } else {
                        f64::NEG_INFINITY
                    };
                }
                -a * t.powf(a - 1.0) * self.phi(t)
            }
            Self::Frank { theta } => {
                let q = -(-theta).exp_m1() * (-t).exp();
                -q / (1.0 - q) / theta
            }
            Self::Tabulated(ref tab) => tab.dphi(t),
        }
    }

    /// Second derivative `φ''(t)`.
    pub fn d2phi(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            Self::Independence => (-t).exp(),
            Self::Clayton { theta } => {
                if theta < 0.0 && t >= -1.0 / theta {
                    0.0
                } else {
                    (1.0 + theta) * (-(1.0 / theta + 2.0) * (theta * t).ln_1p()).exp()
                }
            }
            Self::Gumbel { theta } => {
                let a = 1.0 / theta;
                if t == 0.0 {
                    return if theta == 1.0 { 1.0 } else { f64::INFINITY };
                }
                self.phi(t) * (a * a * t.powf(2.0 * a - 2.0) - a * (a - 1.0) * t.powf(a - 2.0))
            }
            Self::Frank { theta } => {
                let q = -(-theta).exp_m1() * (-t).exp();
                q / ((1.0 - q) * (1.0 - q)) / theta
            }
            Self::Tabulated(ref tab) => tab.d2phi(t),
        }
    }

    /// `φ(φ^[−1](u) + φ^[−1](v))`.
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
        self.phi(self.phi_inv(u) + self.phi_inv(v))
            .clamp(0.0, u.min(v))
    }

    /// Closed-form `∂₁C(u, v) = φ'(φ^[−1](u) + φ^[−1](v)) / φ'(φ^[−1](u))`.
    /// Returns `None` where the expression degenerates.
    pub fn copula_partial(&self, u: f64, v: f64) -> Option<f64> {
        if v <= 0.0 {
            return Some(0.0);
        }
        if v >= 1.0 {
            return Some(1.0);
        }
        if let Self::Independence = self {
            return Some(v);
        }
        let tu = self.phi_inv(u);
        let s = tu + self.phi_inv(v);
        if s >= self.support_end() {
            return Some(0.0);
        }
        let r = self.dphi(s) / self.dphi(tu);
        r.is_finite().then(|| r.clamp(0.0, 1.0))
    }

    /// Midpoint-convexity certificate for `t ↦ log(−φ'(t))`. A convex
    /// log-derivative is equivalent to the copula being stochastically
    /// increasing in both components.
    pub fn si_certificate(&self) -> Certificate {
        let lo = self.phi_inv(1.0 - AUDIT_EDGE);
        let hi = self.phi_inv(AUDIT_EDGE);
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Certificate::Inconclusive {
                reason: format!("audit interval [{lo}, {hi}] is degenerate"),
            };
        }
        let step = (hi - lo) / (AUDIT_POINTS - 1) as f64;
        let mut values = Vec::with_capacity(AUDIT_POINTS);
        for i in 0..AUDIT_POINTS {
            let t = lo + step * i as f64;
            let d = -self.dphi(t);
            if d.is_nan() || d <= 0.0 || !d.is_finite() {
                return Certificate::Inconclusive {
                    reason: format!("φ' is not strictly negative and finite at t = {t}"),
                };
            }
            values.push((t, d.ln()));
        }
        midpoint_convexity(&values, CONVEXITY_SLACK)
    }
}

/// Checks `f(t_i) ≤ (f(t_{i−1}) + f(t_{i+1}))/2 + slack` on a uniform grid.
pub(crate) fn midpoint_convexity(values: &[(f64, f64)], slack: f64) -> Certificate {
    let mut worst: Option<(f64, f64)> = None;
    for w in values.windows(3) {
        let excess = w[1].1 - 0.5 * (w[0].1 + w[2].1);
        if excess > slack && worst.is_none_or(|(_, e)| excess > e) {
            worst = Some((w[1].0, excess));
        }
    }
    match worst {
        None => Certificate::Certified,
        Some((at, excess)) => Certificate::Refuted { at, excess },
    }
}

/// Generator given by a table of `(t, φ(t))` pairs, interpolated with a
/// monotone piecewise cubic (Fritsch–Carlson). Past the last knot the
/// generator continues with an exponential tail matching value and slope,
/// unless the table already reaches zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedGenerator {
    t: Vec<f64>,
    phi: Vec<f64>,
    slope: Vec<f64>,
}

impl TabulatedGenerator {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(CopulaError::InvalidSpec(
                "a tabulated generator needs at least two points".into(),
            ));
        }
        let (t, phi): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        if t.iter().chain(&phi).any(|x| !x.is_finite()) {
            return Err(CopulaError::InvalidSpec(
                "table entries must be finite".into(),
            ));
        }
        if t[0] != 0.0 || (phi[0] - 1.0).abs() > 1e-12 {
            return Err(CopulaError::InvalidSpec(
                "a tabulated generator must start at (0, 1)".into(),
            ));
        }
        for k in 1..t.len() {
            if t[k] <= t[k - 1] {
                return Err(CopulaError::InvalidSpec(format!(
                    "knots must be strictly increasing (row {k})"
                )));
            }
            if phi[k] >= phi[k - 1] {
                return Err(CopulaError::InvalidSpec(format!(
                    "φ must be strictly decreasing (row {k})"
                )));
            }
        }
        if *phi.last().unwrap() < 0.0 {
            return Err(CopulaError::InvalidSpec("φ must be nonnegative".into()));
        }
        let secants: Vec<f64> = (1..t.len())
            .map(|k| (phi[k] - phi[k - 1]) / (t[k] - t[k - 1]))
            .collect();
        if let Some(k) = secants
            .windows(2)
            .position(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0))
        {
            return Err(CopulaError::InvalidSpec(format!(
                "tabulated φ is not convex around knot {}",
                k + 1
            )));
        }
        let slope = pchip_slopes(&t, &secants);
        let mut phi = phi;
        phi[0] = 1.0;
        Ok(Self { t, phi, slope })
    }

    /// Reads headerless CSV rows `t, φ(t)`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            points.push(rec?);
        }
        Self::new(&points)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.t
            .iter()
            .copied()
            .zip(self.phi.iter().copied())
            .collect()
    }

    fn last(&self) -> (f64, f64, f64) {
        let m = self.t.len() - 1;
        (self.t[m], self.phi[m], self.slope[m])
    }

    /// Decay rate of the exponential tail.
    fn tail_rate(&self) -> f64 {
        let (_, p, d) = self.last();
        let m = self.t.len() - 1;
        let d = if d < 0.0 {
            d
        } else {
            (self.phi[m] - self.phi[m - 1]) / (self.t[m] - self.t[m - 1])
        };
        -d / p
    }

    fn support_end(&self) -> f64 {
        let (t, p, _) = self.last();
        if p > 0.0 {
            f64::INFINITY
        } else {
            t
        }
    }

    fn segment(&self, x: f64) -> usize {
        match self.t.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(self.t.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.t.len() - 2),
        }
    }

    fn hermite(&self, x: f64) -> (f64, f64, f64) {
        let k = self.segment(x);
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let (m0, m1) = (self.slope[k] * h, self.slope[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * p1
            + (s3 - s2) * m1;
        let d1 = ((6.0 * s2 - 6.0 * s) * p0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * p1
            + (3.0 * s2 - 2.0 * s) * m1)
            / h;
        let d2 = ((12.0 * s - 6.0) * p0
            + (6.0 * s - 4.0) * m0
            + (-12.0 * s + 6.0) * p1
            + (6.0 * s - 2.0) * m1)
            / (h * h);
        (value, d1, d2)
    }

    fn phi(&self, x: f64) -> f64 {
        let (tm, pm, _) = self.last();
        if x <= tm {
            return self.hermite(x).0.max(0.0);
        }
        if pm == 0.0 {
            return 0.0;
        }
        pm * (-self.tail_rate() * (x - tm)).exp()
    }

    fn dphi(&self, x: f64) -> f64 {
        let (tm, pm, _) = self.last();
        if x <= tm {
            return self.hermite(x).1;
        }
        if pm == 0.0 {
            return 0.0;
        }
        -self.tail_rate() * self.phi(x)
    }

    fn d2phi(&self, x: f64) -> f64 {
        let (tm, pm, _) = self.last();
        if x <= tm {
            return self.hermite(x).2;
        }
        if pm == 0.0 {
            return 0.0;
        }
        let r = self.tail_rate();
        r * r * self.phi(x)
    }

    fn phi_inv(&self, u: f64) -> f64 {
        let (tm, pm, _) = self.last();
        if u < pm {
            return tm + (pm / u).ln() / self.tail_rate();
        }
        let (mut lo, mut hi) = (0.0, tm);
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Fritsch–Carlson slopes for shape-preserving cubic Hermite interpolation.
fn pchip_slopes(t: &[f64], secants: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n == 2 {
        return vec![secants[0]; 2];
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (s0, s1) = (secants[k - 1], secants[k]);
        if s0 * s1 <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / s0 + w2 / s1);
        }
    }
    let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
        let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d * s0 <= 0.0 {
            0.0
        } else if s0 * s1 <= 0.0 && d.abs() > 3.0 * s0.abs() {
            3.0 * s0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], secants[0], secants[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], secants[n - 2], secants[n - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generators() -> Vec<ArchimedeanGenerator> {
        vec![
            ArchimedeanGenerator::Independence,
            ArchimedeanGenerator::clayton(2.0).unwrap(),
            ArchimedeanGenerator::clayton(-0.5).unwrap(),
            ArchimedeanGenerator::gumbel(1.5).unwrap(),
            ArchimedeanGenerator::frank(4.0).unwrap(),
            ArchimedeanGenerator::frank(-3.0).unwrap(),
        ]
    }

    #[test]
    fn parameter_ranges() {
        assert!(ArchimedeanGenerator::clayton(-1.0).is_err());
        assert!(ArchimedeanGenerator::clayton(0.0).is_err());
        assert!(ArchimedeanGenerator::gumbel(0.9).is_err());
        assert!(ArchimedeanGenerator::frank(0.0).is_err());
        assert!(ArchimedeanGenerator::frank(f64::NAN).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        for g in generators() {
            assert_eq!(g.phi(0.0), 1.0);
            for i in 1..100 {
                let u = i as f64 / 100.0;
                let t = g.phi_inv(u);
                assert!((g.phi(t) - u).abs() < 1e-12, "{g:?} at {u}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in generators() {
            let end = g.support_end().min(6.0);
            for i in 1..40 {
                let t = end * i as f64 / 41.0;
                let h = 1e-6;
                let fd1 = (g.phi(t + h) - g.phi(t - h)) / (2.0 * h);
                let fd2 = (g.dphi(t + h) - g.dphi(t - h)) / (2.0 * h);
                assert!((g.dphi(t) - fd1).abs() < 1e-6, "{g:?} φ' at {t}");
                assert!(
                    (g.d2phi(t) - fd2).abs() < 1e-5 * (1.0 + fd2.abs()),
                    "{g:?} φ'' at {t}"
                );
                assert!(g.dphi(t) < 0.0 && g.d2phi(t) >= 0.0);
            }
        }
    }

    #[test]
    fn si_criterion_by_family() {
        use Certificate::*;
        assert_eq!(
            ArchimedeanGenerator::Independence.si_certificate(),
            Certified
        );
        assert_eq!(
            ArchimedeanGenerator::clayton(2.0).unwrap().si_certificate(),
            Certified
        );
        assert_eq!(
            ArchimedeanGenerator::gumbel(3.0).unwrap().si_certificate(),
            Certified
        );
        assert_eq!(
            ArchimedeanGenerator::frank(5.0).unwrap().si_certificate(),
            Certified
        );
        assert!(matches!(
            ArchimedeanGenerator::clayton(-0.5)
                .unwrap()
                .si_certificate(),
            Refuted { .. }
        ));
        assert!(matches!(
            ArchimedeanGenerator::frank(-5.0).unwrap().si_certificate(),
            Refuted { .. }
        ));
    }

    #[test]
    fn tabulated_exponential_tracks_independence() {
        let pts: Vec<(f64, f64)> = (0..=400)
            .map(|i| {
                let t = i as f64 * 0.05;
                (t, (-t).exp())
            })
            .collect();
        let tab = ArchimedeanGenerator::Tabulated(TabulatedGenerator::new(&pts).unwrap());
        for &(u, v) in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.1), (0.999, 0.01)] {
            assert!((tab.copula_value(u, v) - u * v).abs() < 1e-6);
        }
        // past the table the exponential tail takes over
        assert!((tab.phi(25.0) - (-25.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(TabulatedGenerator::new(&[(0.0, 1.0)]).is_err());
        assert!(TabulatedGenerator::new(&[(0.1, 1.0), (1.0, 0.5)]).is_err());
        assert!(TabulatedGenerator::new(&[(0.0, 1.0), (1.0, 1.0)]).is_err());
        // concave data
        assert!(TabulatedGenerator::new(&[(0.0, 1.0), (1.0, 0.9), (2.0, 0.5)]).is_err());
        let csv = "0, 1\n1, 0.5\n2, 0.3\n";
        assert!(TabulatedGenerator::from_csv(csv.as_bytes()).is_ok());
    }
}
