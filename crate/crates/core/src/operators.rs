//! Markov operators on step functions.
//!
//! A checkerboard copula with matrix `A` acts on a step function `f` of the
//! same resolution by `T f = A f`, on cell values. Row sums of one make `T`
//! fix constants; column sums of one make it preserve integrals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::copula::Copula;
use crate::error::{CopulaError, Result};
use crate::grid::{validate_doubly_stochastic, GridCopula, DOUBLY_STOCHASTIC_TOL};
use crate::interval::IntervalFamily;
use crate::step::StepFunction;

const ALIGN_TOL: f64 = 1e-9;

/// The action of a copula on step functions of a fixed resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMarkovOperator {
    resolution: usize,
    #[serde(serialize_with = "serialize_rows")]
    matrix: DMatrix<f64>,
}

fn serialize_rows<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

impl DiscreteMarkovOperator {
    /// Validates positivity, `A·1 = 1` and `1ᵀA = 1ᵀ`.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        validate_doubly_stochastic(&matrix, DOUBLY_STOCHASTIC_TOL)?;
        Ok(Self {
            resolution: matrix.nrows(),
            matrix,
        })
    }

    /// Operator of `c` on step functions of resolution `n`. For a
    /// checkerboard of resolution `n` this is its matrix, unchanged.
    pub fn operator_of(c: &Copula, n: usize) -> Result<Self> {
        let matrix = c.discretize(n)?.into_matrix();
        Ok(Self {
            resolution: n,
            matrix,
        })
    }

    /// The checkerboard copula with this operator.
    pub fn copula_of(&self) -> Result<GridCopula> {
        GridCopula::new(self.matrix.clone())
    }

    pub fn identity(n: usize) -> Self {
        Self {
            resolution: n,
            matrix: DMatrix::identity(n, n),
        }
    }

    /// Averaging over each atom of a partition of the cells `0..n`.
    pub fn partition_average(n: usize, atoms: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut m = DMatrix::zeros(n, n);
        for atom in atoms {
            if atom.is_empty() {
                return Err(CopulaError::Domain(
                    "partition atoms must be non-empty".into(),
                ));
            }
            let w = 1.0 / atom.len() as f64;
            for &i in atom {
                if i >= n || seen[i] {
                    return Err(CopulaError::Domain(format!(
                        "cell {i} is out of range or repeated"
                    )));
                }
                seen[i] = true;
                for &j in atom {
                    m[(i, j)] = w;
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(CopulaError::Domain(format!("cell {i} is not covered")));
        }
        Ok(Self {
            resolution: n,
            matrix: m,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `T f`. A step function on a coarser grid dividing the resolution is
    /// refined first.
    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        let n = self.resolution;
        let m = f.resolution();
        if !n.is_multiple_of(m) {
            return Err(CopulaError::Domain(format!(
                "step function of resolution {m} does not refine to {n}"
            )));
        }
        let f = f.refine(n / m);
        let out = &self.matrix * DVector::from_column_slice(f.values());
        StepFunction::new(out.iter().copied().collect())
    }

    /// `self ∘ other`, the operator of the Markov product of the copulas.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.resolution != other.resolution {
            return Err(CopulaError::Domain(format!(
                "resolutions {} and {} differ",
                self.resolution, other.resolution
            )));
        }
        Ok(Self {
            resolution: self.resolution,
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// `max |A² − A|`.
    pub fn idempotency_gap(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix).amax()
    }

    /// Cells split into the classes of the graph linking `i` and `j` when
    /// `a[i][j] > tol`. For an idempotent operator these are the atoms of
    /// its fixed σ-field: each class indicator is fixed by the operator.
    pub fn fixed_sigma_field(&self, tol: f64) -> Result<FixedPartition> {
        let gap = self.idempotency_gap();
        if gap > tol {
            return Err(CopulaError::NotIdempotent { gap });
        }
        let n = self.resolution;
        let mut label = vec![usize::MAX; n];
        let mut atoms = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = atoms.len();
            let mut stack = vec![start];
            let mut atom = Vec::new();
            label[start] = id;
            while let Some(i) = stack.pop() {
                atom.push(i);
                for (j, l) in label.iter_mut().enumerate() {
                    let linked = self.matrix[(i, j)] > tol || self.matrix[(j, i)] > tol;
                    if linked && *l == usize::MAX {
                        *l = id;
                        stack.push(j);
                    }
                }
            }
            atom.sort_unstable();
            atoms.push(atom);
        }
        for atom in &atoms {
            let mut indicator = DVector::zeros(n);
            for &i in atom {
                indicator[i] = 1.0;
            }
            let err = (&self.matrix * &indicator - &indicator).amax();
            if err > tol {
                return Err(CopulaError::NotIdempotent { gap: err });
            }
        }
        Ok(FixedPartition {
            resolution: n,
            atoms,
        })
    }
}

/// Atoms (sets of cell indices) generating the fixed σ-field of an
/// idempotent operator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPartition {
    pub resolution: usize,
    pub atoms: Vec<Vec<usize>>,
}

impl FixedPartition {
    /// Intervals spanned by the atoms with more than one cell, when every
    /// such atom is a run of consecutive cells. Single-cell atoms act as the
    /// identity and contribute nothing.
    pub fn interval_family(&self) -> Option<IntervalFamily> {
        let n = self.resolution as f64;
        let mut intervals = Vec::new();
        for atom in self.atoms.iter().filter(|a| a.len() > 1) {
            let (lo, hi) = (atom[0], atom[atom.len() - 1]);
            if hi - lo + 1 != atom.len() {
                return None;
            }
            intervals.push((lo as f64 / n, (hi + 1) as f64 / n));
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        IntervalFamily::new(intervals).ok()
    }

    /// The averaging operator over these atoms.
    pub fn operator(&self) -> DiscreteMarkovOperator {
        DiscreteMarkovOperator::partition_average(self.resolution, &self.atoms)
            .expect("atoms partition the cells")
    }
}

fn grid_index(x: f64, n: usize) -> Result<usize> {
    let s = x * n as f64;
    let k = s.round();
    if (s - k).abs() > ALIGN_TOL {
        return Err(CopulaError::Misaligned {
            endpoint: x,
            resolution: n,
            suggestion: k / n as f64,
        });
    }
    Ok(k as usize)
}

/// Operator averaging over each interval of `family` and acting as the
/// identity elsewhere. Every endpoint must lie on the grid `k/n`.
pub fn conditional_expectation_form(
    family: &IntervalFamily,
    n: usize,
) -> Result<DiscreteMarkovOperator> {
    if n == 0 {
        return Err(CopulaError::Domain("resolution must be positive".into()));
    }
    let mut m = DMatrix::identity(n, n);
    for &(a, b) in family.intervals() {
        let (lo, hi) = (grid_index(a, n)?, grid_index(b, n)?);
        let w = 1.0 / (hi - lo) as f64;
        for i in lo..hi {
            for j in lo..hi {
                m[(i, j)] = w;
            }
        }
    }
    Ok(DiscreteMarkovOperator {
        resolution: n,
        matrix: m,
    })
}
