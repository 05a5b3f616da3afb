use serde::{Deserialize, Serialize};

use crate::error::{CopulaError, Result};

/// A finite family of disjoint open subintervals of (0, 1), sorted by left
/// endpoint. Adjacent intervals may share an endpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct IntervalFamily {
    intervals: Vec<(f64, f64)>,
}

impl IntervalFamily {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        let mut prev_end = 0.0;
        for (k, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(CopulaError::InvalidIntervals(format!(
                    "interval {k} has a non-finite endpoint"
                )));
            }
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                return Err(CopulaError::InvalidIntervals(format!(
                    "interval {k} = ({a}, {b}) is not inside [0, 1]"
                )));
            }
            if a >= b {
                return Err(CopulaError::InvalidIntervals(format!(
                    "interval {k} = ({a}, {b}) is empty"
                )));
            }
            if a < prev_end {
                return Err(CopulaError::InvalidIntervals(format!(
                    "interval {k} = ({a}, {b}) overlaps its predecessor or is out of order"
                )));
            }
            prev_end = b;
        }
        Ok(Self { intervals })
    }

    /// The empty family; its ordinal sum is the upper Fréchet bound.
    pub fn empty() -> Self {
        Self::default()
    }

    /// The single interval (0, 1).
    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Index of the interval whose open interior contains `x`.
    pub fn containing(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|&(a, b)| a < x && x < b)
    }

    /// Endpoints of all intervals, sorted and deduplicated.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect();
        pts.dedup();
        pts
    }

    /// Total length of the union.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

impl TryFrom<Vec<[f64; 2]>> for IntervalFamily {
    type Error = CopulaError;

    fn try_from(raw: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(raw.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<IntervalFamily> for Vec<[f64; 2]> {
    fn from(f: IntervalFamily) -> Self {
        f.intervals.into_iter().map(|(a, b)| [a, b]).collect()
    }
}
