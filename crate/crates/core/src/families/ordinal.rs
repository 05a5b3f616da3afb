use crate::copula::Copula;
use crate::error::{CopulaError, Result};
use crate::grid::CellSide;
use crate::interval::IntervalFamily;

/// Ordinal sum: component `k` rescaled onto `(a_k, b_k)²`, the upper Fréchet
/// bound everywhere else.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalSum {
    family: IntervalFamily,
    components: Vec<Copula>,
}

impl OrdinalSum {
    pub fn new(family: IntervalFamily, components: Vec<Copula>) -> Result<Self> {
        if family.len() != components.len() {
            return Err(CopulaError::InvalidIntervals(format!(
                "{} intervals but {} components",
                family.len(),
                components.len()
            )));
        }
        Ok(Self { family, components })
    }

    /// Ordinal sum of `Π` over every interval of `family`.
    pub fn of_independence(family: IntervalFamily) -> Self {
        let components = vec![Copula::Product; family.len()];
        Self { family, components }
    }

    pub fn family(&self) -> &IntervalFamily {
        &self.family
    }

    pub fn components(&self) -> &[Copula] {
        &self.components
    }

    pub fn blocks(&self) -> impl Iterator<Item = ((f64, f64), &Copula)> {
        self.family
            .intervals()
            .iter()
            .copied()
            .zip(&self.components)
    }

    pub fn value(&self, u: f64, v: f64) -> f64 {
        for ((a, b), c) in self.blocks() {
            if a < u && u < b && a < v && v < b {
                let w = b - a;
                return a + w * c.value((u - a) / w, (v - a) / w);
            }
        }
        u.min(v)
    }

    /// Partial derivative; the block containing the differentiated coordinate
    /// is chosen half-open according to `side`.
    pub fn partial(&self, component: u8, u: f64, v: f64, side: CellSide) -> f64 {
        let (x, y) = if component == 1 { (u, v) } else { (v, u) };
        let inside = |a: f64, b: f64| match side {
            CellSide::Right => a <= x && x < b,
            CellSide::Left => a < x && x <= b,
        };
        for ((a, b), c) in self.blocks() {
            if inside(a, b) && a <= y && y <= b {
                let w = b - a;
                let (su, sv) = ((u - a) / w, (v - a) / w);
                return c.partial_side(component, su.clamp(0.0, 1.0), sv.clamp(0.0, 1.0), side);
            }
        }
        let below = match side {
            CellSide::Right => x < y,
            CellSide::Left => x <= y,
        };
        if below {
            1.0
        } else {
            0.0
        }
    }

    /// Smallest `v` with `∂₁C(u, v) ≥ w`.
    pub fn conditional_quantile(&self, u: f64, w: f64) -> f64 {
        for ((a, b), c) in self.blocks() {
            if a <= u && u < b {
                let width = b - a;
                return a + width * c.conditional_quantile((u - a) / width, w);
            }
        }
        u
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = Vec::new();
        for ((a, b), c) in self.blocks() {
            pts.push(a);
            pts.push(b);
            pts.extend(c.breakpoints().into_iter().map(|t| a + (b - a) * t));
        }
        pts
    }
}
