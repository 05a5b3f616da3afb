//! The Markov product `(A * B)(u, v) = ∫ ∂₂A(u, t) ∂₁B(t, v) dt` and the
//! operations built on it.
//!
//! Products of checkerboards are computed exactly as matrix products at the
//! least common multiple of their resolutions. `C⁺`, `Π` and `C⁻` are handled
//! symbolically. Every other closed-form copula is discretized first.

use serde::Serialize;

use crate::copula::{Copula, Special};
use crate::error::{CopulaError, Result};
use crate::grid::{CellSide, GridCopula};
use crate::interval::IntervalFamily;
use crate::metrics;
use crate::monotonicity;

pub const DEFAULT_RESOLUTION: usize = 128;
pub const DEFAULT_GRID_CAP: usize = 4096;
/// Environment variable overriding [`DEFAULT_GRID_CAP`].
pub const GRID_CAP_ENV: &str = "COPULA_GRID_CAP";
/// Default tolerance for diagonal fixed points.
pub const DIAGONAL_TOL: f64 = 1e-6;
/// Diagonal sampling step `1/DIAGONAL_STEPS`.
pub const DIAGONAL_STEPS: usize = 1024;

const ALIGN_TOL: f64 = 1e-12;
const SI_PRECHECK_TOL: f64 = 1e-9;
const BLOCK_AUDIT: usize = 65;

/// Resolutions used when closed-form copulas enter the grid algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlgebraConfig {
    /// Minimum resolution at which closed-form copulas are discretized.
    pub resolution: usize,
    /// Largest resolution any product may reach.
    pub grid_cap: usize,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            grid_cap: DEFAULT_GRID_CAP,
        }
    }
}

impl AlgebraConfig {
    /// Defaults, with the cap taken from `COPULA_GRID_CAP` when it is set to
    /// a positive integer.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(cap) = std::env::var(GRID_CAP_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&c| c > 0)
        {
            cfg.grid_cap = cap;
        }
        cfg
    }
}

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn aligned(points: &[f64], n: usize) -> bool {
    points.iter().all(|&p| {
        let s = p * n as f64;
        (s - s.round()).abs() <= ALIGN_TOL * n as f64
    })
}

/// Resolution for discretizing `c`: the smallest multiple of `step` that is
/// at least `cfg.resolution` and puts every breakpoint of `c` on a cell
/// boundary. Falls back to the smallest multiple of `step` when no aligned
/// resolution below the cap exists.
pub fn discretization_resolution(c: &Copula, step: usize, cfg: &AlgebraConfig) -> usize {
    let first = cfg.resolution.div_ceil(step).max(1) * step;
    let points = c.breakpoints();
    let mut n = first;
    while n <= cfg.grid_cap {
        if aligned(&points, n) {
            return n;
        }
        n += step;
    }
    first
}

/// Discretizes `c` at [`discretization_resolution`] unless it already is a grid.
pub fn to_grid(c: &Copula, cfg: &AlgebraConfig) -> Result<GridCopula> {
    match c {
        Copula::Grid(g) => Ok(g.clone()),
        _ => c.discretize(discretization_resolution(c, 1, cfg)),
    }
}

fn grid_product(a: &GridCopula, b: &GridCopula, cfg: &AlgebraConfig) -> Result<GridCopula> {
    let n = lcm(a.resolution(), b.resolution());
    if n > cfg.grid_cap {
        return Err(CopulaError::ResolutionOverflow {
            resolution: n,
            cap: cfg.grid_cap,
        });
    }
    let a = a.refine(n / a.resolution());
    let b = b.refine(n / b.resolution());
    Ok(a.product(&b))
}

/// The Markov product `a * b`.
pub fn markov_product(a: &Copula, b: &Copula, cfg: &AlgebraConfig) -> Result<Copula> {
    use Special::*;
    match (a.special(), b.special()) {
        (Some(Identity), _) => return Ok(b.clone()),
        (_, Some(Identity)) => return Ok(a.clone()),
        (Some(Independence), _) | (_, Some(Independence)) => return Ok(Copula::Product),
        (Some(Countermonotone), Some(Countermonotone)) => return Ok(Copula::Upper),
        _ => {}
    }
    match (a, b) {
        (Copula::Grid(g), _) if b.special() == Some(Countermonotone) => {
            Ok(Copula::Grid(g.reverse_columns()))
        }
        (_, Copula::Grid(g)) if a.special() == Some(Countermonotone) => {
            Ok(Copula::Grid(g.reverse_rows()))
        }
        (Copula::Grid(ga), Copula::Grid(gb)) => Ok(Copula::Grid(grid_product(ga, gb, cfg)?)),
        (Copula::Grid(g), other) | (other, Copula::Grid(g)) => {
            let n = discretization_resolution(other, g.resolution(), cfg);
            let d = other.discretize(n)?;
            let (ga, gb) = if matches!(a, Copula::Grid(_)) {
                (g.clone(), d)
            } else {
                (d, g.clone())
            };
            Ok(Copula::Grid(grid_product(&ga, &gb, cfg)?))
        }
        _ => {
            let ga = to_grid(a, cfg)?;
            let gb = to_grid(b, cfg)?;
            Ok(Copula::Grid(grid_product(&ga, &gb, cfg)?))
        }
    }
}

/// Midpoint-rule evaluation of the defining integral with `panels` panels.
/// Exact for checkerboards whose resolutions divide `panels`.
#[derive(Debug, Clone)]
pub struct QuadratureProduct<'a> {
    a: &'a Copula,
    b: &'a Copula,
    panels: usize,
}

pub fn quadrature_markov_product<'a>(
    a: &'a Copula,
    b: &'a Copula,
    panels: usize,
) -> Result<QuadratureProduct<'a>> {
    if panels < 8 {
        return Err(CopulaError::Domain(format!(
            "quadrature needs at least 8 panels, got {panels}"
        )));
    }
    Ok(QuadratureProduct { a, b, panels })
}

impl QuadratureProduct<'_> {
    pub fn value(&self, u: f64, v: f64) -> f64 {
        let m = self.panels as f64;
        let sum: f64 = (0..self.panels)
            .map(|i| {
                let t = (i as f64 + 0.5) / m;
                self.a.partial_side(2, u, t, CellSide::Right)
                    * self.b.partial_side(1, t, v, CellSide::Right)
            })
            .sum();
        sum / m
    }
}

pub fn transpose(c: &Copula) -> Copula {
    c.transposed()
}

/// `C⁻ * C`, which exchanges stochastically increasing and decreasing copulas.
pub fn si_sd_involution(c: &Copula, cfg: &AlgebraConfig) -> Result<Copula> {
    markov_product(&Copula::Lower, c, cfg)
}

/// `n`-fold Markov product by repeated squaring.
pub fn power(c: &Copula, n: usize, cfg: &AlgebraConfig) -> Result<Copula> {
    if n == 0 {
        return Err(CopulaError::Domain("power requires n ≥ 1".into()));
    }
    let mut base = c.clone();
    let mut acc: Option<Copula> = None;
    let mut k = n;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(x) => markov_product(&x, &base, cfg)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = markov_product(&base, &base, cfg)?;
    }
    Ok(acc.expect("n ≥ 1"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdempotencyCheck {
    pub idempotent: bool,
    /// `d∞(C * C, C)`.
    pub gap: f64,
    /// Where the gap is attained, when it is positive.
    pub witness: Option<[f64; 2]>,
    /// Resolution of the checkerboard the check ran on; `None` when symbolic.
    pub resolution: Option<usize>,
}

/// Tests `C * C = C` within `tol`. Closed-form copulas other than `C⁺`, `Π`
/// and `C⁻` are checked on their discretization.
pub fn is_idempotent(c: &Copula, tol: f64, cfg: &AlgebraConfig) -> Result<IdempotencyCheck> {
    let symbolic = |gap: f64, witness| IdempotencyCheck {
        idempotent: gap <= tol,
        gap,
        witness,
        resolution: None,
    };
    match c.special() {
        Some(Special::Identity) | Some(Special::Independence) => return Ok(symbolic(0.0, None)),
        Some(Special::Countermonotone) => {
            let (gap, at) = metrics::d_inf_with_witness(&Copula::Upper, &Copula::Lower);
            return Ok(symbolic(gap, Some(at)));
        }
        None => {}
    }
    let g = to_grid(c, cfg)?;
    let sq = Copula::Grid(g.product(&g));
    let g = Copula::Grid(g);
    let (gap, at) = metrics::d_inf_with_witness(&sq, &g);
    Ok(IdempotencyCheck {
        idempotent: gap <= tol,
        gap,
        witness: (gap > 0.0).then_some(at),
        resolution: g.as_grid().map(GridCopula::resolution),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateStep {
    pub step: usize,
    /// `d∞(C^{*step}, C^{*(step+1)})`.
    pub d_inf_gap: f64,
    /// `D₁(C^{*step}, C^{*(step+1)})`.
    pub d1_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateReport {
    pub n_steps: usize,
    pub limit: Copula,
    pub intervals: IntervalFamily,
    /// `d∞` between the last two iterates.
    pub sup_gap: f64,
    /// Largest pointwise increase `C^{*(k+1)} − C^{*k}` seen at any step.
    pub monotone_decrease_violation: f64,
    /// Largest verification gap of the extracted ordinal-sum blocks.
    pub block_gap: f64,
    pub history: Vec<IterateStep>,
}

/// Iterates `C^{*(k+1)} = C * C^{*k}` until consecutive iterates are within
/// `tol` in `d∞`. The input must be stochastically increasing in the first
/// component; the limit is then an ordinal sum of `Π`, whose blocks are
/// extracted from the diagonal.
pub fn iterate_to_limit(
    c: &Copula,
    tol: f64,
    max_iter: usize,
    cfg: &AlgebraConfig,
) -> Result<IterateReport> {
    let verdict = monotonicity::check_si(c, 1, SI_PRECHECK_TOL);
    if !verdict.si {
        return Err(CopulaError::NotStochasticallyIncreasing {
            violation: verdict.max_violation,
        });
    }
    let trivial = |limit: Copula, intervals| IterateReport {
        n_steps: 1,
        limit,
        intervals,
        sup_gap: 0.0,
        monotone_decrease_violation: 0.0,
        block_gap: 0.0,
        history: vec![IterateStep {
            step: 1,
            d_inf_gap: 0.0,
            d1_gap: 0.0,
        }],
    };
    match c.special() {
        Some(Special::Identity) => return Ok(trivial(Copula::Upper, IntervalFamily::empty())),
        Some(Special::Independence) => return Ok(trivial(Copula::Product, IntervalFamily::full())),
        _ => {}
    }
    let base = to_grid(c, cfg)?;
    let mut current = base.clone();
    let mut history = Vec::new();
    let mut violation: f64 = 0.0;
    for step in 1..=max_iter {
        let next = base.product(&current);
        let (cur_c, next_c) = (Copula::Grid(current), Copula::Grid(next));
        let gap = metrics::d_inf(&cur_c, &next_c);
        let increase = metrics::signed_sup(&next_c, &cur_c).0;
        violation = violation.max(increase);
        history.push(IterateStep {
            step,
            d_inf_gap: gap,
            d1_gap: metrics::d1_metric(&cur_c, &next_c),
        });
        if gap < tol {
            // an idempotent input is its own limit; decomposing the original
            // keeps comonotone stretches from splitting into one-cell blocks
            let limit = if step == 1 { c.clone() } else { next_c };
            let decomposition = extract_pi_ordinal_structure(&limit, DIAGONAL_TOL)?;
            return Ok(IterateReport {
                n_steps: step,
                limit,
                intervals: decomposition.intervals,
                sup_gap: gap,
                monotone_decrease_violation: violation,
                block_gap: decomposition.max_gap,
                history,
            });
        }
        current = match next_c {
            Copula::Grid(g) => g,
            _ => unreachable!(),
        };
        if step == max_iter {
            return Err(CopulaError::NotConverged { steps: step, gap });
        }
    }
    Err(CopulaError::NotConverged {
        steps: 0,
        gap: f64::INFINITY,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub intervals: IntervalFamily,
    /// `d∞` between each rescaled block and `Π`.
    pub block_gaps: Vec<f64>,
    pub max_gap: f64,
}

/// Diagonal sample points: multiples of `1/1024` together with the
/// breakpoints of `c`.
fn diagonal_points(c: &Copula) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=DIAGONAL_STEPS)
        .map(|k| k as f64 / DIAGONAL_STEPS as f64)
        .chain(
            c.breakpoints()
                .into_iter()
                .filter(|p| (0.0..=1.0).contains(p)),
        )
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Recovers the interval family of an idempotent, stochastically increasing
/// copula from the fixed points of its diagonal `v ↦ C(v, v)`, then checks
/// that each rescaled block is `Π` within `10 · tol`.
pub fn extract_pi_ordinal_structure(c: &Copula, tol: f64) -> Result<Decomposition> {
    let pts = diagonal_points(c);
    let fixed: Vec<bool> = pts.iter().map(|&v| v - c.value(v, v) <= tol).collect();
    let mut intervals = Vec::new();
    let mut last_fixed = 0usize;
    let mut gap_since = false;
    for (i, &f) in fixed.iter().enumerate() {
        if f {
            if gap_since {
                intervals.push((pts[last_fixed], pts[i]));
            }
            last_fixed = i;
            gap_since = false;
        } else {
            gap_since = true;
        }
    }
    if gap_since {
        intervals.push((pts[last_fixed], 1.0));
    }
    let intervals = IntervalFamily::new(intervals)?;
    let limit = 10.0 * tol;
    let mut block_gaps = Vec::with_capacity(intervals.len());
    for &(a, b) in intervals.intervals() {
        let w = b - a;
        let mut gap: f64 = 0.0;
        for i in 0..BLOCK_AUDIT {
            let x = i as f64 / (BLOCK_AUDIT - 1) as f64;
            for j in 0..BLOCK_AUDIT {
                let y = j as f64 / (BLOCK_AUDIT - 1) as f64;
                let rescaled = (c.value(a + w * x, a + w * y) - a) / w;
                gap = gap.max((rescaled - x * y).abs());
            }
        }
        block_gaps.push(gap);
    }
    let max_gap = block_gaps.iter().copied().fold(0.0, f64::max);
    if max_gap > limit {
        return Err(CopulaError::VerificationFailed {
            gap: max_gap,
            limit,
        });
    }
    Ok(Decomposition {
        intervals,
        block_gaps,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{ordinal_sum, ArchimedeanGenerator};

    fn asymmetric_checkerboard() -> GridCopula {
        GridCopula::from_rows(&[
            vec![2.0 / 3.0, 0.0, 1.0 / 3.0],
            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            vec![0.0, 2.0 / 3.0, 1.0 / 3.0],
        ])
        .unwrap()
    }

    fn cfg() -> AlgebraConfig {
        AlgebraConfig::default()
    }

    #[test]
    fn special_elements() {
        let a = Copula::Grid(asymmetric_checkerboard());
        assert_eq!(markov_product(&Copula::Upper, &a, &cfg()).unwrap(), a);
        assert_eq!(
            markov_product(&a, &Copula::Product, &cfg()).unwrap(),
            Copula::Product
        );
        assert_eq!(
            markov_product(&Copula::Lower, &Copula::Lower, &cfg()).unwrap(),
            Copula::Upper
        );
        assert_eq!(
            si_sd_involution(&Copula::Upper, &cfg()).unwrap(),
            Copula::Lower
        );
        assert_eq!(power(&Copula::Upper, 7, &cfg()).unwrap(), Copula::Upper);
        assert_eq!(power(&Copula::Lower, 2, &cfg()).unwrap(), Copula::Upper);
    }

    #[test]
    fn square_of_asymmetric_checkerboard() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let sq = markov_product(&a, &a, &cfg()).unwrap();
        let m = sq.as_grid().unwrap().matrix();
        let expected = [[4.0, 2.0, 3.0], [3.0, 3.0, 3.0], [2.0, 4.0, 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[(i, j)] - expected[i][j] / 9.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mixed_resolutions_use_lcm() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let b = Copula::Grid(GridCopula::independence(2));
        let p = markov_product(&a, &b, &cfg()).unwrap();
        assert_eq!(p.as_grid().unwrap().resolution(), 6);
        let small = AlgebraConfig {
            resolution: 4,
            grid_cap: 5,
        };
        assert!(matches!(
            markov_product(&a, &b, &small),
            Err(CopulaError::ResolutionOverflow {
                resolution: 6,
                cap: 5
            })
        ));
    }

    #[test]
    fn discretization_aligns_to_breakpoints() {
        let os = ordinal_sum(
            IntervalFamily::new(vec![(0.0, 1.0 / 3.0), (5.0 / 6.0, 1.0)]).unwrap(),
            vec![Copula::Product, Copula::Product],
        )
        .unwrap();
        assert_eq!(discretization_resolution(&os, 1, &cfg()), 132);
        let gumbel = Copula::Archimedean(ArchimedeanGenerator::gumbel(2.0).unwrap());
        assert_eq!(discretization_resolution(&gumbel, 3, &cfg()), 129);
    }

    #[test]
    fn quadrature_oracle() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let q = quadrature_markov_product(&a, &a, 9).unwrap();
        let sq = markov_product(&a, &a, &cfg()).unwrap();
        for i in 0..=3 {
            for j in 0..=3 {
                let (u, v) = (i as f64 / 3.0, j as f64 / 3.0);
                assert!((q.value(u, v) - sq.value(u, v)).abs() < 1e-12);
            }
        }
        let l = Copula::Lower;
        let q = quadrature_markov_product(&l, &l, 300).unwrap();
        assert!((q.value(0.5, 0.5) - 0.5).abs() < 1e-3);
        assert!(quadrature_markov_product(&l, &l, 4).is_err());
    }

    #[test]
    fn power_converges_to_independence() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let p = power(&a, 50, &cfg()).unwrap();
        for x in p.as_grid().unwrap().matrix().iter() {
            assert!((x - 1.0 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn idempotency() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let r = is_idempotent(&a, 1e-6, &cfg()).unwrap();
        assert!(!r.idempotent && r.witness.is_some());
        assert!(
            is_idempotent(&Copula::Product, 1e-12, &cfg())
                .unwrap()
                .idempotent
        );
        assert!(
            is_idempotent(&Copula::Upper, 1e-12, &cfg())
                .unwrap()
                .idempotent
        );
        assert!(
            !is_idempotent(&Copula::Lower, 1e-12, &cfg())
                .unwrap()
                .idempotent
        );
    }

    #[test]
    fn iterate_asymmetric_checkerboard() {
        let a = Copula::Grid(asymmetric_checkerboard());
        let r = iterate_to_limit(&a, 1e-8, 200, &cfg()).unwrap();
        assert_eq!(r.intervals, IntervalFamily::full());
        assert!(r.n_steps <= 60);
        assert!(r.monotone_decrease_violation <= 1e-12);
        assert!(metrics::d_inf(&r.limit, &Copula::Grid(GridCopula::independence(3))) < 1e-8);
        let upper = iterate_to_limit(&Copula::Upper, 1e-8, 10, &cfg()).unwrap();
        assert!(upper.intervals.is_empty());
        assert!(matches!(
            iterate_to_limit(&Copula::Lower, 1e-8, 10, &cfg()),
            Err(CopulaError::NotStochasticallyIncreasing { .. })
        ));
        assert!(matches!(
            iterate_to_limit(&a, 1e-8, 3, &cfg()),
            Err(CopulaError::NotConverged { steps: 3, .. })
        ));
    }

    #[test]
    fn idempotent_input_is_its_own_limit() {
        let f = IntervalFamily::new(vec![(0.0, 1.0 / 3.0), (5.0 / 6.0, 1.0)]).unwrap();
        let os = ordinal_sum(f.clone(), vec![Copula::Product, Copula::Product]).unwrap();
        let r = iterate_to_limit(&os, 1e-8, 10, &cfg()).unwrap();
        assert_eq!((r.n_steps, r.intervals), (1, f));
        assert_eq!(r.limit, os);
    }

    #[test]
    fn extraction_of_examples() {
        let f = IntervalFamily::new(vec![(0.0, 1.0 / 3.0), (5.0 / 6.0, 1.0)]).unwrap();
        let os = ordinal_sum(f.clone(), vec![Copula::Product, Copula::Product]).unwrap();
        assert_eq!(
            extract_pi_ordinal_structure(&os, 1e-6).unwrap().intervals,
            f
        );
        assert!(extract_pi_ordinal_structure(&Copula::Upper, 1e-6)
            .unwrap()
            .intervals
            .is_empty());
        assert_eq!(
            extract_pi_ordinal_structure(&Copula::Product, 1e-6)
                .unwrap()
                .intervals,
            IntervalFamily::full()
        );
        let a = Copula::Grid(asymmetric_checkerboard());
        assert!(matches!(
            extract_pi_ordinal_structure(&a, 1e-6),
            Err(CopulaError::VerificationFailed { .. })
        ));
    }
}
