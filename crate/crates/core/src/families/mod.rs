//! Closed-form copula families.

pub mod archimedean;
pub mod ordinal;
pub mod pickands;

use serde::Serialize;

pub use archimedean::{ArchimedeanGenerator, TabulatedGenerator};
pub use ordinal::OrdinalSum;
pub use pickands::PickandsFunction;

use crate::copula::Copula;
use crate::error::Result;
use crate::interval::IntervalFamily;

/// Outcome of a grid-limited convexity audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Certificate {
    /// Passed at every audit point.
    Certified,
    /// Failed; `at` is the worst audit point and `excess` the amount by which
    /// the midpoint inequality is broken there.
    Refuted { at: f64, excess: f64 },
    /// The audit could not be carried out.
    Inconclusive { reason: String },
}

impl Certificate {
    /// `Some(true)` when certified, `Some(false)` when refuted, `None` otherwise.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Self::Certified => Some(true),
            Self::Refuted { .. } => Some(false),
            Self::Inconclusive { .. } => None,
        }
    }
}

pub fn archimedean_copula(generator: ArchimedeanGenerator) -> Copula {
    Copula::Archimedean(generator)
}

/// SI criterion for the copula generated by `generator`: convexity of `log(−φ')`.
pub fn is_si_archimedean(generator: &ArchimedeanGenerator) -> Certificate {
    generator.si_certificate()
}

pub fn extreme_value_copula(pickands: PickandsFunction) -> Copula {
    Copula::ExtremeValue(pickands)
}

/// Ordinal sum of `components` over `family`; the empty family yields `C⁺`.
pub fn ordinal_sum(family: IntervalFamily, components: Vec<Copula>) -> Result<Copula> {
    Ok(Copula::OrdinalSum(OrdinalSum::new(family, components)?))
}
