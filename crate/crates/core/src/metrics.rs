//! Distances between copulas and the diagonal functional `2∫(C*C)(u,u)du`.

use serde::Serialize;

use crate::algebra::{self, AlgebraConfig, DEFAULT_GRID_CAP};
use crate::copula::{Copula, Special};
use crate::error::{CopulaError, Result};
use crate::grid::{CellSide, GridCopula};

/// Uniform audit points per axis for `d∞` on non-bilinear copulas.
pub const AUDIT_POINTS: usize = 257;
/// Nodes of the composite Simpson rule on the diagonal.
pub const SIMPSON_NODES: usize = 1025;
/// Panels per axis of the 2-d midpoint rule.
pub const MIDPOINT_PANELS: usize = 512;

/// Resolution at which `c` is bilinear on every cell, if any.
fn bilinear_resolution(c: &Copula) -> Option<usize> {
    match c {
        Copula::Grid(g) => Some(g.resolution()),
        _ if c.special() == Some(Special::Independence) => Some(1),
        _ => None,
    }
}

/// A common resolution on whose cells both copulas are bilinear. The
/// difference of two such copulas attains its extremes at cell corners.
fn common_bilinear_resolution(a: &Copula, b: &Copula) -> Option<usize> {
    let n = algebra::lcm(bilinear_resolution(a)?, bilinear_resolution(b)?);
    (n <= DEFAULT_GRID_CAP).then_some(n)
}

/// 257 uniform points plus the breakpoints of every copula, sorted.
pub fn audit_coordinates(copulas: &[&Copula]) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..AUDIT_POINTS)
        .map(|i| i as f64 / (AUDIT_POINTS - 1) as f64)
        .chain(copulas.iter().flat_map(|c| c.breakpoints()))
        .filter(|p| (0.0..=1.0).contains(p))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Points at which a pointwise comparison of `a` and `b` is carried out.
pub fn comparison_coordinates(a: &Copula, b: &Copula) -> Vec<f64> {
    match common_bilinear_resolution(a, b) {
        Some(n) => (0..=n).map(|k| k as f64 / n as f64).collect(),
        None => audit_coordinates(&[a, b]),
    }
}

/// Largest value of `a − b` over the comparison points, with its location.
pub fn signed_sup(a: &Copula, b: &Copula) -> (f64, [f64; 2]) {
    let xs = comparison_coordinates(a, b);
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    for &u in &xs {
        for &v in &xs {
            let d = a.value(u, v) - b.value(u, v);
            if d > best.0 {
                best = (d, [u, v]);
            }
        }
    }
    best
}

/// `sup |a − b|` with its location. Exact for pairs of checkerboards (and
/// `Π`), which are compared at the corners of their common grid.
pub fn d_inf_with_witness(a: &Copula, b: &Copula) -> (f64, [f64; 2]) {
    let xs = comparison_coordinates(a, b);
    let mut best = (0.0, [0.0, 0.0]);
    for &u in &xs {
        for &v in &xs {
            let d = (a.value(u, v) - b.value(u, v)).abs();
            if d > best.0 {
                best = (d, [u, v]);
            }
        }
    }
    best
}

pub fn d_inf(a: &Copula, b: &Copula) -> f64 {
    d_inf_with_witness(a, b).0
}

/// `∫₀¹ |α + β s| ds`.
fn abs_linear_integral(alpha: f64, beta: f64) -> f64 {
    let end = alpha + beta;
    if alpha * end >= 0.0 {
        (alpha + 0.5 * beta).abs()
    } else {
        let r = -alpha / beta;
        0.5 * (alpha.abs() * r + end.abs() * (1.0 - r))
    }
}

/// Exact `D₁` for two checkerboards of the same resolution: on each cell
/// `∂₁C` is linear in `v`, so the cell integral has a closed form.
fn grid_d1(a: &GridCopula, b: &GridCopula) -> f64 {
    let n = a.resolution();
    let (ma, mb) = (a.matrix(), b.matrix());
    let mut total = 0.0;
    for k in 0..n {
        for l in 0..n {
            let alpha = a.row_cumulative(k, l) - b.row_cumulative(k, l);
            let beta = ma[(k, l)] - mb[(k, l)];
            total += abs_linear_integral(alpha, beta);
        }
    }
    total / (n * n) as f64
}

/// `D₁(a, b) = ∫∫ |∂₁a − ∂₁b|` together with the number of nodes used.
fn d1_with_nodes(a: &Copula, b: &Copula) -> (f64, usize) {
    if let (Some(ga), Some(gb)) = (a.as_grid(), b.as_grid()) {
        let n = algebra::lcm(ga.resolution(), gb.resolution());
        if n <= DEFAULT_GRID_CAP {
            let ra = ga.refine(n / ga.resolution());
            let rb = gb.refine(n / gb.resolution());
            return (grid_d1(&ra, &rb), n * n);
        }
    }
    let m = MIDPOINT_PANELS;
    let mf = m as f64;
    let mut total = 0.0;
    for i in 0..m {
        let u = (i as f64 + 0.5) / mf;
        for j in 0..m {
            let v = (j as f64 + 0.5) / mf;
            total += (a.partial_side(1, u, v, CellSide::Right)
                - b.partial_side(1, u, v, CellSide::Right))
            .abs();
        }
    }
    (total / (mf * mf), m * m)
}

pub fn d1_metric(a: &Copula, b: &Copula) -> f64 {
    d1_with_nodes(a, b).0
}

/// Composite Simpson rule for `∫₀¹ f` on `SIMPSON_NODES` nodes.
pub fn simpson<F: Fn(f64) -> f64>(f: F) -> f64 {
    let intervals = SIMPSON_NODES - 1;
    let h = 1.0 / intervals as f64;
    let mut sum = f(0.0) + f(1.0);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0
}

/// `2 ∫₀¹ (C * C)(u, u) du`.
pub fn sobolev_diagonal(c: &Copula, cfg: &AlgebraConfig) -> Result<f64> {
    let sq = algebra::markov_product(c, c, cfg)?;
    Ok(2.0 * simpson(|u| sq.value(u, u)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Dinf,
    D1,
    SobolevDiag,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Dinf => "dinf",
            Metric::D1 => "d1",
            Metric::SobolevDiag => "sobolev-diag",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metric: Metric,
    pub value: f64,
    pub n_nodes: usize,
}

/// Evaluates `metric`; the distances need `b`, the diagonal functional ignores it.
pub fn evaluate(
    metric: Metric,
    a: &Copula,
    b: Option<&Copula>,
    cfg: &AlgebraConfig,
) -> Result<MetricReport> {
    let second = || {
        b.ok_or_else(|| CopulaError::Domain(format!("metric {} needs two copulas", metric.name())))
    };
    let (value, n_nodes) = match metric {
        Metric::Dinf => {
            let b = second()?;
            let xs = comparison_coordinates(a, b).len();
            (d_inf(a, b), xs * xs)
        }
        Metric::D1 => d1_with_nodes(a, second()?),
        Metric::SobolevDiag => (sobolev_diagonal(a, cfg)?, SIMPSON_NODES),
    };
    Ok(MetricReport {
        metric,
        value,
        n_nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NqdVerdict {
    /// `C ≤ Π + tol` on the audit grid.
    pub nqd: bool,
    /// `sup (C − Π)`.
    pub max_excess_over_product: f64,
    /// `d∞(C, Π)`, computed when `C` is NQD.
    pub d_inf_to_product: Option<f64>,
    /// `2∫(C*C)(u,u)du`, computed when `C` is NQD.
    pub sobolev_diagonal: Option<f64>,
    /// For NQD input: both `d∞(C, Π)` and `|sobolev − 2/3|` are within `10 · tol`.
    /// Vacuously true otherwise.
    pub consistent: bool,
}

/// For an idempotent copula: if it is negative quadrant dependent it must be
/// `Π`, checked both directly and through the diagonal functional.
pub fn nqd_idempotent_check(c: &Copula, tol: f64, cfg: &AlgebraConfig) -> Result<NqdVerdict> {
    let idem = algebra::is_idempotent(c, tol, cfg)?;
    if !idem.idempotent {
        return Err(CopulaError::NotIdempotent { gap: idem.gap });
    }
    let excess = signed_sup(c, &Copula::Product).0;
    if excess > tol {
        return Ok(NqdVerdict {
            nqd: false,
            max_excess_over_product: excess,
            d_inf_to_product: None,
            sobolev_diagonal: None,
            consistent: true,
        });
    }
    let dist = d_inf(c, &Copula::Product);
    let sob = sobolev_diagonal(c, cfg)?;
    Ok(NqdVerdict {
        nqd: true,
        max_excess_over_product: excess,
        d_inf_to_product: Some(dist),
        sobolev_diagonal: Some(sob),
        consistent: dist <= 10.0 * tol && (sob - 2.0 / 3.0).abs() <= 10.0 * tol,
    })
}
