use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use markov_copula::algebra::{
    extract_pi_ordinal_structure, is_idempotent, iterate_to_limit, markov_product,
    quadrature_markov_product,
};
use markov_copula::metrics::{evaluate, Metric};
use markov_copula::monotonicity::{
    check_complete_dependence, check_quadrant_dependence, check_si, QuadrantDependence,
};
use markov_copula::sampling::sample;
use markov_copula::spec::{read_spec, write_spec};
use markov_copula::{AlgebraConfig, CellSide, Copula, CopulaError};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Command, Property, Status};

/// Points per axis at which a non-checkerboard product is cross-checked.
const ORACLE_AXIS_POINTS: usize = 33;
/// Quadrature panels for non-checkerboard products.
const ORACLE_PANELS: usize = 512;

pub fn run(command: Command, cfg: &AlgebraConfig) -> Result<Status> {
    match command {
        Command::Check {
            spec,
            property,
            tol,
        } => check(&spec, property, tol, cfg),
        Command::Product {
            a,
            b,
            out,
            oracle,
            panels,
        } => product(&a, &b, &out, oracle, panels, cfg),
        Command::Iterate {
            spec,
            tol,
            max_iter,
            out_dir,
        } => iterate(&spec, tol, max_iter, &out_dir, cfg),
        Command::DerivativeTrace {
            spec,
            component,
            at,
            points,
            side,
            out,
        } => derivative_trace(&spec, component, at, points, side.into(), &out),
        Command::Decompose {
            spec,
            tol,
            idempotent_tol,
        } => decompose(&spec, tol, idempotent_tol, cfg),
        Command::Metric { a, b, metric } => metric_cmd(&a, b.as_deref(), metric.into(), cfg),
        Command::Sample {
            spec,
            count,
            seed,
            out,
        } => sample_cmd(&spec, count, seed, &out),
        Command::Discretize { spec, n, out } => {
            let c = load(&spec)?;
            if n == 0 || n > cfg.grid_cap {
                bail!("resolution must be in 1..={}", cfg.grid_cap);
            }
            write_spec(&out, &Copula::Grid(c.discretize(n)?))?;
            emit(&json!({ "out": out, "resolution": n }))?;
            Ok(Status::Holds)
        }
    }
}

fn load(path: &Path) -> Result<Copula> {
    read_spec(path).with_context(|| format!("cannot load {}", path.display()))
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn property_name(p: Property) -> String {
    p.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn check(path: &Path, property: Property, tol: f64, cfg: &AlgebraConfig) -> Result<Status> {
    let c = load(path)?;
    let (holds, verdict): (bool, Value) = match property {
        Property::Si1 | Property::Si2 | Property::Sd1 | Property::Sd2 => {
            let component = if matches!(property, Property::Si1 | Property::Sd1) {
                1
            } else {
                2
            };
            let v = check_si(&c, component, tol);
            let holds = if matches!(property, Property::Si1 | Property::Si2) {
                v.si
            } else {
                v.sd
            };
            (holds, serde_json::to_value(v)?)
        }
        Property::Idempotent => {
            let v = is_idempotent(&c, tol, cfg)?;
            (v.idempotent, serde_json::to_value(v)?)
        }
        Property::Pqd | Property::Nqd => {
            let v = check_quadrant_dependence(&c, tol);
            let holds = matches!(
                (property, v.dependence),
                (_, QuadrantDependence::Both)
                    | (Property::Pqd, QuadrantDependence::Pqd)
                    | (Property::Nqd, QuadrantDependence::Nqd)
            );
            (holds, serde_json::to_value(v)?)
        }
        Property::CompleteDependence => {
            let v = check_complete_dependence(&c, tol, cfg)?;
            (v.holds, serde_json::to_value(v)?)
        }
    };
    emit(&json!({
        "spec": path,
        "property": property_name(property),
        "tol": tol,
        "holds": holds,
        "verdict": verdict,
    }))?;
    Ok(if holds { Status::Holds } else { Status::Fails })
}

fn product(
    a_path: &Path,
    b_path: &Path,
    out: &Path,
    oracle: bool,
    panels: Option<usize>,
    cfg: &AlgebraConfig,
) -> Result<Status> {
    let (a, b) = (load(a_path)?, load(b_path)?);
    let p = markov_product(&a, &b, cfg)?;
    write_spec(out, &p).with_context(|| format!("cannot write {}", out.display()))?;
    let resolution = p.as_grid().map(|g| g.resolution());
    let mut report = json!({ "out": out, "resolution": resolution });
    if oracle {
        // checkerboard values are exact at cell corners when the panels refine the grid
        let (axis, default_panels) = match resolution {
            Some(n) => (n + 1, (4 * n).max(8)),
            None => (ORACLE_AXIS_POINTS, ORACLE_PANELS),
        };
        let panels = panels.unwrap_or(default_panels);
        let q = quadrature_markov_product(&a, &b, panels)?;
        let step = (axis - 1) as f64;
        let mut worst: f64 = 0.0;
        let mut at = [0.0, 0.0];
        for i in 0..axis {
            for j in 0..axis {
                let (u, v) = (i as f64 / step, j as f64 / step);
                let d = (p.value(u, v) - q.value(u, v)).abs();
                if d > worst {
                    worst = d;
                    at = [u, v];
                }
            }
        }
        report["oracle"] = json!({
            "panels": panels,
            "points": axis * axis,
            "max_discrepancy": worst,
            "witness": at,
        });
    }
    emit(&report)?;
    Ok(Status::Holds)
}

fn iterate(
    path: &Path,
    tol: f64,
    max_iter: usize,
    out_dir: &Path,
    cfg: &AlgebraConfig,
) -> Result<Status> {
    let c = load(path)?;
    let report = match iterate_to_limit(&c, tol, max_iter, cfg) {
        Ok(r) => r,
        Err(CopulaError::NotStochasticallyIncreasing { .. }) => {
            emit(&json!({ "converged": false, "si_verdict": check_si(&c, 1, tol) }))?;
            eprintln!("error: input is not stochastically increasing in the first component");
            return Ok(Status::Fails);
        }
        Err(CopulaError::NotConverged { steps, gap }) => {
            emit(&json!({ "converged": false, "steps": steps, "final_gap": gap }))?;
            eprintln!("error: no convergence after {steps} steps (gap {gap:e})");
            return Ok(Status::NotConverged);
        }
        Err(e) => return Err(e.into()),
    };
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    fs::write(out_dir.join("report.json"), text)?;
    let mut csv = String::from("step,d_inf_gap,d1_gap\n");
    for s in &report.history {
        writeln!(csv, "{},{},{}", s.step, s.d_inf_gap, s.d1_gap)?;
    }
    fs::write(out_dir.join("steps.csv"), csv)?;
    emit(&json!({
        "converged": true,
        "n_steps": report.n_steps,
        "sup_gap": report.sup_gap,
        "intervals": report.intervals,
        "monotone_decrease_violation": report.monotone_decrease_violation,
        "report": out_dir.join("report.json"),
        "steps": out_dir.join("steps.csv"),
    }))?;
    Ok(Status::Holds)
}

fn derivative_trace(
    path: &Path,
    component: u8,
    at: f64,
    points: usize,
    side: CellSide,
    out: &Path,
) -> Result<Status> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let c = load(path)?;
    let mut csv = String::from(if component == 1 {
        "u,partial\n"
    } else {
        "v,partial\n"
    });
    for i in 0..points {
        let x = i as f64 / (points - 1) as f64;
        let d = match component {
            1 => c.partial_side(1, x, at, side),
            _ => c.partial_side(2, at, x, side),
        };
        writeln!(csv, "{x},{d}")?;
    }
    fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    emit(&json!({ "out": out, "component": component, "at": at, "rows": points }))?;
    Ok(Status::Holds)
}

fn decompose(path: &Path, tol: f64, idempotent_tol: f64, cfg: &AlgebraConfig) -> Result<Status> {
    let c = load(path)?;
    let idem = is_idempotent(&c, idempotent_tol, cfg)?;
    if !idem.idempotent {
        emit(&json!({ "idempotent": false, "verdict": idem }))?;
        eprintln!("error: copula is not idempotent (gap {:e})", idem.gap);
        return Ok(Status::Fails);
    }
    emit(&extract_pi_ordinal_structure(&c, tol)?)?;
    Ok(Status::Holds)
}

fn metric_cmd(
    a_path: &Path,
    b_path: Option<&Path>,
    metric: Metric,
    cfg: &AlgebraConfig,
) -> Result<Status> {
    let a = load(a_path)?;
    let b = b_path.map(load).transpose()?;
    let r = evaluate(metric, &a, b.as_ref(), cfg)?;
    emit(&json!({
        "metric": r.metric,
        "value": r.value,
        "n_nodes": r.n_nodes,
        "copula_a": a_path,
        "copula_b": b_path,
    }))?;
    Ok(Status::Holds)
}

fn sample_cmd(path: &Path, count: usize, seed: u64, out: &Path) -> Result<Status> {
    let c = load(path)?;
    let mut csv = String::from("u,v\n");
    for (u, v) in sample(&c, count, seed)? {
        writeln!(csv, "{u},{v}")?;
    }
    fs::write(out, csv).with_context(|| format!("cannot write {}", out.display()))?;
    emit(&json!({ "out": out, "count": count, "seed": seed }))?;
    Ok(Status::Holds)
}
