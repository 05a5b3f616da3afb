//! Stochastic monotonicity and the orderings it induces.
//!
//! `C` is stochastically increasing (SI) in the first component when
//! `u ↦ ∂₁C(u, v)` is non-increasing for every `v`, equivalently when every
//! section `u ↦ C(u, v)` is concave. Stochastically decreasing (SD) is the
//! mirror image. Plateaus are allowed in both.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{self, AlgebraConfig};
use crate::copula::Copula;
use crate::error::{CopulaError, Result};
use crate::grid::{random_doubly_stochastic, GridCopula};
use crate::metrics;
use crate::operators::DiscreteMarkovOperator;
use crate::sampling;
use crate::step::StepFunction;

/// Points per section in the concavity audit of closed-form copulas.
pub const SECTION_POINTS: usize = 257;
/// Number of sections audited.
pub const SECTIONS: usize = 65;
/// Floating-point floor, in slope units, for the concavity audit.
pub const ANALYTIC_NOISE_FLOOR: f64 = 1e-9;
/// Minimum samples per bin in [`empirical_si_check`].
pub const MIN_BIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certification {
    /// Exact cumulative-sum comparison on a checkerboard.
    Exact,
    /// Second differences on a fixed audit grid.
    GridCertified,
}

/// Outcome of [`check_si`]. Triples are `[x₁, x₂, y]`, where `x₁ < x₂` are
/// values of the conditioning coordinate (`u` for component 1, `v` for
/// component 2) and `y` is the other coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityVerdict {
    pub si: bool,
    pub sd: bool,
    pub component: u8,
    /// Largest increase of the conditional distribution function, i.e. the
    /// worst SI violation (0 when none).
    pub max_violation: f64,
    pub witness: [f64; 3],
    /// Largest decrease, the worst SD violation.
    pub sd_violation: f64,
    pub sd_witness: [f64; 3],
    pub certification: Certification,
}

struct Worst {
    value: f64,
    at: [f64; 3],
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            at: [0.0; 3],
        }
    }

    fn offer(&mut self, value: f64, at: [f64; 3]) {
        if value > self.value {
            self.value = value;
            self.at = at;
        }
    }
}

/// Tests SI and SD in `component` (1 or 2).
///
/// Checkerboards are checked exactly: for component 1 the cumulative row sums
/// `S_k(l) = Σ_{j<l} a[k][j]` must be non-increasing in `k` for every `l`.
/// Other copulas are checked for concavity of their sections on a
/// 257 × 65 grid, with a floating-point floor of 1e-9.
pub fn check_si(c: &Copula, component: u8, tol: f64) -> MonotonicityVerdict {
    assert!(component == 1 || component == 2, "component must be 1 or 2");
    match c {
        Copula::Grid(g) => grid_verdict(g, component, tol),
        _ => analytic_verdict(c, component, tol),
    }
}

fn grid_verdict(g: &GridCopula, component: u8, tol: f64) -> MonotonicityVerdict {
    let n = g.resolution();
    let nf = n as f64;
    let cum = |x: usize, y: usize| {
        if component == 1 {
            g.row_cumulative(x, y)
        } else {
            g.column_cumulative(y, x)
        }
    };
    let (mut si, mut sd) = (Worst::new(), Worst::new());
    for y in 1..n {
        for x in 0..n - 1 {
            let inc = cum(x + 1, y) - cum(x, y);
            let at = [(x as f64 + 0.5) / nf, (x as f64 + 1.5) / nf, y as f64 / nf];
            si.offer(inc, at);
            sd.offer(-inc, at);
        }
    }
    MonotonicityVerdict {
        si: si.value <= tol,
        sd: sd.value <= tol,
        component,
        max_violation: si.value,
        witness: si.at,
        sd_violation: sd.value,
        sd_witness: sd.at,
        certification: Certification::Exact,
    }
}

fn analytic_verdict(c: &Copula, component: u8, tol: f64) -> MonotonicityVerdict {
    let h = 1.0 / (SECTION_POINTS - 1) as f64;
    let tol = tol.max(ANALYTIC_NOISE_FLOOR);
    let (mut si, mut sd) = (Worst::new(), Worst::new());
    for j in 0..SECTIONS {
        let y = j as f64 / (SECTIONS - 1) as f64;
        let section: Vec<f64> = (0..SECTION_POINTS)
            .map(|i| {
                let x = i as f64 * h;
                if component == 1 {
                    c.value(x, y)
                } else {
                    c.value(y, x)
                }
            })
            .collect();
        for i in 1..SECTION_POINTS - 1 {
            let slope_change = (section[i - 1] - 2.0 * section[i] + section[i + 1]) / h;
            let at = [(i - 1) as f64 * h, (i + 1) as f64 * h, y];
            si.offer(slope_change, at);
            sd.offer(-slope_change, at);
        }
    }
    MonotonicityVerdict {
        si: si.value <= tol,
        sd: sd.value <= tol,
        component,
        max_violation: si.value,
        witness: si.at,
        sd_violation: sd.value,
        sd_witness: sd.at,
        certification: Certification::GridCertified,
    }
}

/// Which side of `C` the product `D * C` must lie on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `D * C ≤ C`, the ordering enjoyed by SI copulas.
    Below,
    /// `D * C ≥ C`, the ordering enjoyed by SD copulas.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceCheck {
    pub holds: bool,
    pub max_violation: f64,
    pub witness: [f64; 2],
}

/// Compares `D * C` with `C` pointwise in the given direction.
pub fn check_dominance(
    d: &Copula,
    c: &Copula,
    direction: Direction,
    tol: f64,
    cfg: &AlgebraConfig,
) -> Result<DominanceCheck> {
    let p = algebra::markov_product(d, c, cfg)?;
    let (max_violation, witness) = match direction {
        Direction::Below => metrics::signed_sup(&p, c),
        Direction::Above => metrics::signed_sup(c, &p),
    };
    Ok(DominanceCheck {
        holds: max_violation <= tol,
        max_violation,
        witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ViolationSearch {
    /// A `D` with `D * C ≰ C` was found.
    Found {
        trial: usize,
        violation: f64,
        witness: [f64; 2],
        #[serde(skip)]
        d: GridCopula,
    },
    /// No violation among the trials; this does not certify SI.
    Inconclusive { trials: usize },
}

fn permutation_matrix(order: &[usize]) -> DMatrix<f64> {
    let n = order.len();
    DMatrix::from_fn(n, n, |i, j| if order[i] == j { 1.0 } else { 0.0 })
}

/// Searches for a doubly stochastic `D` with `D * C ≰ C + tol`. Candidates
/// are tried in order: the row permutations that sort each column of the
/// cumulative sums decreasingly, their transposes composed with `C`, then
/// random doubly stochastic matrices, `trials` in total.
pub fn find_dominance_violation(
    c: &Copula,
    tol: f64,
    trials: usize,
    seed: u64,
    cfg: &AlgebraConfig,
) -> Result<ViolationSearch> {
    let g = algebra::to_grid(c, cfg)?;
    let n = g.resolution();
    let mut structured = Vec::new();
    for l in 1..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| g.row_cumulative(b, l).total_cmp(&g.row_cumulative(a, l)));
        let p = permutation_matrix(&order);
        structured.push(p.transpose() * g.matrix());
        structured.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c_grid = Copula::Grid(g.clone());
    for trial in 0..trials {
        let m = match structured.get(trial) {
            Some(m) => m.clone(),
            None => random_doubly_stochastic(n, &mut rng),
        };
        let d = GridCopula::new(m)?;
        let p = Copula::Grid(d.product(&g));
        let (violation, witness) = metrics::signed_sup(&p, &c_grid);
        if violation > tol {
            return Ok(ViolationSearch::Found {
                trial,
                violation,
                witness,
                d,
            });
        }
    }
    Ok(ViolationSearch::Inconclusive { trials })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadrantDependence {
    Pqd,
    Nqd,
    Neither,
    /// Both orderings hold: `C` is `Π` within tolerance.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadrantVerdict {
    pub dependence: QuadrantDependence,
    /// `sup (Π − C)`; at most `tol` for PQD copulas.
    pub max_below_product: f64,
    /// `sup (C − Π)`; at most `tol` for NQD copulas.
    pub max_above_product: f64,
}

pub fn check_quadrant_dependence(c: &Copula, tol: f64) -> QuadrantVerdict {
    let below = metrics::signed_sup(&Copula::Product, c).0;
    let above = metrics::signed_sup(c, &Copula::Product).0;
    let dependence = match (below <= tol, above <= tol) {
        (true, true) => QuadrantDependence::Both,
        (true, false) => QuadrantDependence::Pqd,
        (false, true) => QuadrantDependence::Nqd,
        (false, false) => QuadrantDependence::Neither,
    };
    QuadrantVerdict {
        dependence,
        max_below_product: below,
        max_above_product: above,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompleteDependence {
    pub holds: bool,
    /// `d∞(Cᵀ * C, C⁺)`.
    pub gap: f64,
}

/// Tests `Cᵀ * C = C⁺`. On checkerboards `C⁺` is represented by the identity
/// matrix of the product's resolution.
pub fn check_complete_dependence(
    c: &Copula,
    tol: f64,
    cfg: &AlgebraConfig,
) -> Result<CompleteDependence> {
    let p = algebra::markov_product(&c.transposed(), c, cfg)?;
    let reference = match &p {
        Copula::Grid(g) => Copula::Grid(GridCopula::identity(g.resolution())),
        _ => Copula::Upper,
    };
    let gap = metrics::d_inf(&p, &reference);
    Ok(CompleteDependence {
        holds: gap <= tol,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneAction {
    /// The image is non-increasing within tolerance.
    pub preserves: bool,
    /// The image is non-decreasing within tolerance.
    pub reverses: bool,
    pub output: StepFunction,
}

/// Applies the Markov operator of `c` to a decreasing step function and
/// reports whether the image is again decreasing. Checkerboards act at the
/// common refinement of both resolutions; other copulas are discretized at
/// the resolution of `f`.
pub fn operator_preserves_monotone(
    c: &Copula,
    f: &StepFunction,
    tol: f64,
    cfg: &AlgebraConfig,
) -> Result<MonotoneAction> {
    if !f.is_decreasing(tol) {
        return Err(CopulaError::NonMonotone(format!(
            "input step function increases by {}",
            f.max_increase()
        )));
    }
    let n = match c {
        Copula::Grid(g) => algebra::lcm(g.resolution(), f.resolution()),
        _ => f.resolution(),
    };
    if n > cfg.grid_cap {
        return Err(CopulaError::ResolutionOverflow {
            resolution: n,
            cap: cfg.grid_cap,
        });
    }
    let op = DiscreteMarkovOperator::operator_of(c, n)?;
    let output = op.apply(&f.refine(n / f.resolution()))?;
    Ok(MonotoneAction {
        preserves: output.is_decreasing(tol),
        reverses: output.is_increasing(tol),
        output,
    })
}

/// Non-increasing function given by piecewise-linear interpolation of knots,
/// constant beyond the first and last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreasingTable {
    knots: Vec<(f64, f64)>,
}

impl DecreasingTable {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(CopulaError::Domain(
                "a table needs at least one knot".into(),
            ));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(CopulaError::Domain("table entries must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(CopulaError::Domain(
                "knots must be strictly increasing".into(),
            ));
        }
        if let Some(w) = knots.windows(2).find(|w| w[1].1 > w[0].1) {
            return Err(CopulaError::NonMonotone(format!(
                "table increases between x = {} and x = {}",
                w[0].0, w[1].0
            )));
        }
        Ok(Self { knots })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if x <= w[1].0 {
                let t = (x - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSiReport {
    pub samples: usize,
    pub bin_counts: Vec<usize>,
    /// Conditional mean of `f(V)` given `U` in each bin.
    pub bin_means: Vec<f64>,
    /// Adjacent-bin increases of any size.
    pub increases: usize,
    /// Increases beyond three combined standard errors.
    pub violations: usize,
    /// Largest amount by which an increase exceeds its noise band (0 if none).
    pub max_excess: f64,
}

/// Monte-Carlo check that `E[f(V) | U]` is decreasing in `U` for a
/// decreasing `f`: samples are binned by `u`, and each adjacent increase is
/// compared with a 3-sigma band from the bin standard errors.
pub fn empirical_si_check(
    c: &Copula,
    f: &DecreasingTable,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<EmpiricalSiReport> {
    if bins == 0 {
        return Err(CopulaError::Domain("bins must be positive".into()));
    }
    let pairs = sampling::sample(c, samples, seed)?;
    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (u, v) in pairs {
        let b = ((u * bins as f64) as usize).min(bins - 1);
        let y = f.eval(v);
        sum[b] += y;
        sum_sq[b] += y * y;
        counts[b] += 1;
    }
    if let Some(bin) = counts.iter().position(|&k| k < MIN_BIN_SAMPLES) {
        return Err(CopulaError::InsufficientSamples {
            bin,
            count: counts[bin],
            required: MIN_BIN_SAMPLES,
        });
    }
    let means: Vec<f64> = (0..bins).map(|b| sum[b] / counts[b] as f64).collect();
    let se2: Vec<f64> = (0..bins)
        .map(|b| {
            let k = counts[b] as f64;
            let var = ((sum_sq[b] - k * means[b] * means[b]) / (k - 1.0)).max(0.0);
            var / k
        })
        .collect();
    let (mut increases, mut violations, mut max_excess) = (0, 0, 0.0f64);
    for b in 0..bins - 1 {
        let inc = means[b + 1] - means[b];
        if inc > 0.0 {
            increases += 1;
            let band = 3.0 * (se2[b] + se2[b + 1]).sqrt();
            if inc > band {
                violations += 1;
                max_excess = max_excess.max(inc - band);
            }
        }
    }
    Ok(EmpiricalSiReport {
        samples,
        bin_counts: counts,
        bin_means: means,
        increases,
        violations,
        max_excess,
    })
}
