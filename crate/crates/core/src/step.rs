use serde::{Deserialize, Serialize};

use crate::error::{CopulaError, Result};

/// A function that is constant on each cell ((k-1)/n, k/n) of the uniform
/// n-partition of [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CopulaError::Domain(
                "a step function needs at least one cell".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CopulaError::Domain("step values must be finite".into()));
        }
        Ok(Self { values })
    }

    /// Indicator of [0, cells/n] at resolution `n`.
    pub fn lower_indicator(n: usize, cells: usize) -> Self {
        assert!(n > 0 && cells <= n);
        let values = (0..n).map(|k| if k < cells { 1.0 } else { 0.0 }).collect();
        Self { values }
    }

    pub fn constant(n: usize, value: f64) -> Self {
        assert!(n > 0);
        Self {
            values: vec![value; n],
        }
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Value at `x`, right-continuous at cell boundaries.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.values.len();
        let k = ((x * n as f64).floor() as usize).min(n - 1);
        self.values[k]
    }

    /// The same function on a partition `factor` times finer.
    pub fn refine(&self, factor: usize) -> Self {
        assert!(factor > 0);
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, factor))
            .collect();
        Self { values }
    }

    /// Largest increase between neighbouring cells (0 for a decreasing function).
    pub fn max_increase(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Largest decrease between neighbouring cells (0 for an increasing function).
    pub fn max_decrease(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    pub fn is_decreasing(&self, tol: f64) -> bool {
        self.max_increase() <= tol
    }

    pub fn is_increasing(&self, tol: f64) -> bool {
        self.max_decrease() <= tol
    }
}
