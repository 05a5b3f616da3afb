//! The copula type: checkerboards and closed-form families behind one
//! evaluation, derivative and discretization interface.

use serde::{Deserialize, Serialize};

use crate::error::{CopulaError, Result};
use crate::families::{ArchimedeanGenerator, OrdinalSum, PickandsFunction};
use crate::grid::{CellSide, GridCopula};
use crate::spec::CopulaSpec;

/// Step of the finite-difference fallback for partial derivatives.
pub const FD_STEP: f64 = 1e-6;
/// Cell volumes below `−NEGATIVE_VOLUME_TOL` abort a discretization.
pub const NEGATIVE_VOLUME_TOL: f64 = 1e-12;

const QUANTILE_ITERS: usize = 64;

/// A bivariate copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CopulaSpec", try_from = "CopulaSpec")]
pub enum Copula {
    /// Checkerboard copula of a doubly stochastic matrix.
    Grid(GridCopula),
    /// Independence `Π(u, v) = uv`.
    Product,
    /// Upper Fréchet bound `C⁺(u, v) = min(u, v)`.
    Upper,
    /// Lower Fréchet bound `C⁻(u, v) = max(u + v − 1, 0)`.
    Lower,
    Archimedean(ArchimedeanGenerator),
    ExtremeValue(PickandsFunction),
    OrdinalSum(OrdinalSum),
    /// `(u, v) ↦ C(v, u)`.
    Transpose(Box<Copula>),
}

/// Copulas with a distinguished role in the Markov product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Special {
    /// `C⁺`, the identity.
    Identity,
    /// `Π`, the null element.
    Independence,
    /// `C⁻`, a self-inverse element.
    Countermonotone,
}

impl From<GridCopula> for Copula {
    fn from(g: GridCopula) -> Self {
        Copula::Grid(g)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(CopulaError::Domain(format!(
            "{name} = {x} is not in [0, 1]"
        )));
    }
    Ok(())
}

fn check_component(component: u8) -> Result<()> {
    if component != 1 && component != 2 {
        return Err(CopulaError::Domain(format!(
            "component must be 1 or 2, got {component}"
        )));
    }
    Ok(())
}

impl Copula {
    /// Recognises analytic representations of `C⁺`, `Π` and `C⁻`. Grids are
    /// never special: the identity matrix is `C⁺` only among checkerboards.
    pub fn special(&self) -> Option<Special> {
        match self {
            Copula::Product => Some(Special::Independence),
            Copula::Upper => Some(Special::Identity),
            Copula::Lower => Some(Special::Countermonotone),
            Copula::Archimedean(ArchimedeanGenerator::Independence) => Some(Special::Independence),
            Copula::ExtremeValue(PickandsFunction::Independence) => Some(Special::Independence),
            Copula::ExtremeValue(PickandsFunction::Comonotone) => Some(Special::Identity),
            Copula::OrdinalSum(o) if o.family().is_empty() => Some(Special::Identity),
            Copula::OrdinalSum(o) if o.family().intervals() == [(0.0, 1.0)] => {
                o.components()[0].special()
            }
            Copula::Transpose(c) => c.special(),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&GridCopula> {
        match self {
            Copula::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// `C(u, v)`, rejecting arguments outside the unit square.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        check_unit("u", u)?;
        check_unit("v", v)?;
        Ok(self.value(u, v))
    }

    /// `C(u, v)` with arguments clamped to [0, 1].
    pub fn value(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        match self {
            Copula::Grid(g) => g.value(u, v),
            Copula::Product => u * v,
            Copula::Upper => u.min(v),
            Copula::Lower => (u + v - 1.0).max(0.0),
            Copula::Archimedean(g) => g.copula_value(u, v),
            Copula::ExtremeValue(p) => p.copula_value(u, v),
            Copula::OrdinalSum(o) => o.value(u, v),
            Copula::Transpose(c) => c.value(v, u),
        }
    }

    /// Mass of `[u1, u2] × [v1, v2]`.
    pub fn h_volume(&self, u1: f64, u2: f64, v1: f64, v2: f64) -> Result<f64> {
        for (name, x) in [("u1", u1), ("u2", u2), ("v1", v1), ("v2", v2)] {
            check_unit(name, x)?;
        }
        if u1 > u2 || v1 > v2 {
            return Err(CopulaError::Domain(format!(
                "malformed rectangle [{u1}, {u2}] × [{v1}, {v2}]"
            )));
        }
        Ok(self.value(u2, v2) - self.value(u2, v1) - self.value(u1, v2) + self.value(u1, v1))
    }

    /// Right-continuous partial derivative `∂_component C(u, v)`.
    pub fn partial_derivative(&self, component: u8, u: f64, v: f64) -> Result<f64> {
        check_component(component)?;
        check_unit("u", u)?;
        check_unit("v", v)?;
        Ok(self.partial_side(component, u, v, CellSide::Right))
    }

    /// Partial derivative with an explicit one-sided convention where it
    /// jumps. At the edges of [0, 1] the only available side is used.
    pub fn partial_side(&self, component: u8, u: f64, v: f64, side: CellSide) -> f64 {
        assert!(component == 1 || component == 2, "component must be 1 or 2");
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        let (x, y) = if component == 1 { (u, v) } else { (v, u) };
        let side = match side {
            CellSide::Right if x >= 1.0 => CellSide::Left,
            CellSide::Left if x <= 0.0 => CellSide::Right,
            s => s,
        };
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        let raw = match self {
            Copula::Grid(g) => g.partial(component, u, v, side),
            Copula::Product => y,
            Copula::Upper => indicator(match side {
                CellSide::Right => x < y,
                CellSide::Left => x <= y,
            }),
            Copula::Lower => indicator(match side {
                CellSide::Right => x + y >= 1.0,
                CellSide::Left => x + y > 1.0,
            }),
            Copula::Archimedean(g) => g
                .copula_partial(x, y)
                .unwrap_or_else(|| self.finite_difference(component, u, v)),
            Copula::ExtremeValue(p) => p
                .copula_partial(component, u, v)
                .unwrap_or_else(|| self.finite_difference(component, u, v)),
            Copula::OrdinalSum(o) => o.partial(component, u, v, side),
            Copula::Transpose(c) => c.partial_side(3 - component, v, u, side),
        };
        raw.clamp(0.0, 1.0)
    }

    /// Central difference with step [`FD_STEP`], one-sided near the edges.
    pub fn finite_difference(&self, component: u8, u: f64, v: f64) -> f64 {
        let h = FD_STEP;
        let at = |x: f64| {
            if component == 1 {
                self.value(x, v)
            } else {
                self.value(u, x)
            }
        };
        let x = if component == 1 { u } else { v };
        let (lo, hi) = ((x - h).max(0.0), (x + h).min(1.0));
        ((at(hi) - at(lo)) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Checkerboard approximation with `a[k][l] = n · mass(cell(k, l))`.
    /// Exact for checkerboards whose resolution divides `n`.
    pub fn discretize(&self, n: usize) -> Result<GridCopula> {
        if n == 0 {
            return Err(CopulaError::Domain("resolution must be positive".into()));
        }
        if let Copula::Grid(g) = self {
            let m = g.resolution();
            if n.is_multiple_of(m) {
                return Ok(g.refine(n / m));
            }
        }
        match self.special() {
            Some(Special::Identity) => return Ok(GridCopula::identity(n)),
            Some(Special::Independence) => return Ok(GridCopula::independence(n)),
            Some(Special::Countermonotone) => return Ok(GridCopula::countermonotone(n)),
            None => {}
        }
        let nf = n as f64;
        let corners: Vec<Vec<f64>> = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|j| self.value(i as f64 / nf, j as f64 / nf))
                    .collect()
            })
            .collect();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                let vol =
                    corners[k + 1][l + 1] - corners[k + 1][l] - corners[k][l + 1] + corners[k][l];
                if vol < -NEGATIVE_VOLUME_TOL {
                    return Err(CopulaError::NegativeVolume {
                        row: k,
                        col: l,
                        volume: vol,
                    });
                }
                m[(k, l)] = nf * vol.max(0.0);
            }
        }
        GridCopula::new(m)
    }

    /// Coordinates at which the representation has structure: cell
    /// boundaries of checkerboards and block endpoints of ordinal sums.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Copula::Grid(g) => {
                let n = g.resolution();
                (0..=n).map(|k| k as f64 / n as f64).collect()
            }
            Copula::OrdinalSum(o) => o.breakpoints(),
            Copula::Transpose(c) => c.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Smallest `v` with `∂₁C(u, v) ≥ w`: the conditional quantile of the
    /// second coordinate given the first.
    pub fn conditional_quantile(&self, u: f64, w: f64) -> f64 {
        let w = w.clamp(0.0, 1.0);
        match self {
            Copula::Grid(g) => return g.conditional_quantile(u, w),
            Copula::OrdinalSum(o) => return o.conditional_quantile(u, w),
            _ => {}
        }
        match self.special() {
            Some(Special::Identity) => return u,
            Some(Special::Independence) => return w,
            Some(Special::Countermonotone) => return 1.0 - u,
            None => {}
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..QUANTILE_ITERS {
            let mid = 0.5 * (lo + hi);
            if self.partial_side(1, u, mid, CellSide::Right) >= w {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `(u, v) ↦ C(v, u)`. Matrix transpose on checkerboards; symmetric
    /// families are returned unchanged.
    pub fn transposed(&self) -> Copula {
        match self {
            Copula::Grid(g) => Copula::Grid(g.transpose()),
            Copula::Transpose(c) => (**c).clone(),
            c if c.special().is_some() => c.clone(),
            Copula::Archimedean(_) => self.clone(),
            c => Copula::Transpose(Box::new(c.clone())),
        }
    }
}
