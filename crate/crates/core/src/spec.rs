//! Serializable copula descriptions (JSON) and headerless CSV matrices.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::copula::Copula;
use crate::error::{CopulaError, Result};
use crate::families::{ArchimedeanGenerator, OrdinalSum, PickandsFunction, TabulatedGenerator};
use crate::grid::GridCopula;
use crate::interval::IntervalFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchimedeanFamily {
    Independence,
    Clayton,
    Gumbel,
    Frank,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PickandsFamily {
    Independence,
    Comonotone,
    Gumbel,
    Tabulated,
}

/// Tagged description of a copula.
///
/// Tabulated families carry their points inline in `table`, or name a
/// headerless two-column CSV in `table_file` (resolved relative to the spec
/// file by [`read_spec`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CopulaSpec {
    Checkerboard {
        matrix: Vec<Vec<f64>>,
    },
    Product,
    FrechetUpper,
    FrechetLower,
    Archimedean {
        family: ArchimedeanFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table_file: Option<PathBuf>,
    },
    ExtremeValue {
        family: PickandsFamily,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table_file: Option<PathBuf>,
    },
    OrdinalSum {
        intervals: IntervalFamily,
        components: Vec<CopulaSpec>,
    },
    Transpose {
        copula: Box<CopulaSpec>,
    },
}

fn require_theta(theta: Option<f64>, family: &str) -> Result<f64> {
    theta.ok_or_else(|| CopulaError::InvalidSpec(format!("family {family} requires \"theta\"")))
}

fn require_table(table: Option<Vec<[f64; 2]>>, file: &Option<PathBuf>) -> Result<Vec<(f64, f64)>> {
    match (table, file) {
        (Some(t), _) => Ok(t.into_iter().map(|[a, b]| (a, b)).collect()),
        (None, Some(p)) => Err(CopulaError::InvalidSpec(format!(
            "table file {} was not resolved; load the spec with read_spec",
            p.display()
        ))),
        (None, None) => Err(CopulaError::InvalidSpec(
            "tabulated family requires \"table\" or \"table_file\"".into(),
        )),
    }
}

impl TryFrom<CopulaSpec> for Copula {
    type Error = CopulaError;

    fn try_from(spec: CopulaSpec) -> Result<Self> {
        Ok(match spec {
            CopulaSpec::Checkerboard { matrix } => Copula::Grid(GridCopula::from_rows(&matrix)?),
            CopulaSpec::Product => Copula::Product,
            CopulaSpec::FrechetUpper => Copula::Upper,
            CopulaSpec::FrechetLower => Copula::Lower,
            CopulaSpec::Archimedean {
                family,
                theta,
                table,
                table_file,
            } => Copula::Archimedean(match family {
                ArchimedeanFamily::Independence => ArchimedeanGenerator::Independence,
                ArchimedeanFamily::Clayton => {
                    ArchimedeanGenerator::clayton(require_theta(theta, "clayton")?)?
                }
                ArchimedeanFamily::Gumbel => {
                    ArchimedeanGenerator::gumbel(require_theta(theta, "gumbel")?)?
                }
                ArchimedeanFamily::Frank => {
                    ArchimedeanGenerator::frank(require_theta(theta, "frank")?)?
                }
                ArchimedeanFamily::Tabulated => ArchimedeanGenerator::Tabulated(
                    TabulatedGenerator::new(&require_table(table, &table_file)?)?,
                ),
            }),
            CopulaSpec::ExtremeValue {
                family,
                theta,
                table,
                table_file,
            } => Copula::ExtremeValue(match family {
                PickandsFamily::Independence => PickandsFunction::Independence,
                PickandsFamily::Comonotone => PickandsFunction::Comonotone,
                PickandsFamily::Gumbel => {
                    PickandsFunction::gumbel(require_theta(theta, "gumbel")?)?
                }
                PickandsFamily::Tabulated => {
                    PickandsFunction::tabulated(require_table(table, &table_file)?)?
                }
            }),
            CopulaSpec::OrdinalSum {
                intervals,
                components,
            } => {
                let components = components
                    .into_iter()
                    .map(Copula::try_from)
                    .collect::<Result<Vec<_>>>()?;
                Copula::OrdinalSum(OrdinalSum::new(intervals, components)?)
            }
            CopulaSpec::Transpose { copula } => {
                Copula::Transpose(Box::new(Copula::try_from(*copula)?))
            }
        })
    }
}

fn table_of(points: Vec<(f64, f64)>) -> Option<Vec<[f64; 2]>> {
    Some(points.into_iter().map(|(a, b)| [a, b]).collect())
}

impl From<Copula> for CopulaSpec {
    fn from(c: Copula) -> Self {
        match c {
            Copula::Grid(g) => CopulaSpec::Checkerboard { matrix: g.rows() },
            Copula::Product => CopulaSpec::Product,
            Copula::Upper => CopulaSpec::FrechetUpper,
            Copula::Lower => CopulaSpec::FrechetLower,
            Copula::Archimedean(g) => {
                let (family, table) = match &g {
                    ArchimedeanGenerator::Independence => (ArchimedeanFamily::Independence, None),
                    ArchimedeanGenerator::Clayton { .. } => (ArchimedeanFamily::Clayton, None),
                    ArchimedeanGenerator::Gumbel { .. } => (ArchimedeanFamily::Gumbel, None),
                    ArchimedeanGenerator::Frank { .. } => (ArchimedeanFamily::Frank, None),
                    ArchimedeanGenerator::Tabulated(t) => {
                        (ArchimedeanFamily::Tabulated, table_of(t.points()))
                    }
                };
                CopulaSpec::Archimedean {
                    family,
                    theta: g.theta(),
                    table,
                    table_file: None,
                }
            }
            Copula::ExtremeValue(p) => {
                let (family, theta, table) = match p {
                    PickandsFunction::Independence => (PickandsFamily::Independence, None, None),
                    PickandsFunction::Comonotone => (PickandsFamily::Comonotone, None, None),
                    PickandsFunction::Gumbel { theta } => {
                        (PickandsFamily::Gumbel, Some(theta), None)
                    }
                    PickandsFunction::Tabulated { knots } => {
                        (PickandsFamily::Tabulated, None, table_of(knots))
                    }
                };
                CopulaSpec::ExtremeValue {
                    family,
                    theta,
                    table,
                    table_file: None,
                }
            }
            Copula::OrdinalSum(o) => CopulaSpec::OrdinalSum {
                intervals: o.family().clone(),
                components: o
                    .components()
                    .iter()
                    .cloned()
                    .map(CopulaSpec::from)
                    .collect(),
            },
            Copula::Transpose(c) => CopulaSpec::Transpose {
                copula: Box::new(CopulaSpec::from(*c)),
            },
        }
    }
}

impl CopulaSpec {
    /// Replaces every `table_file` by the table it names, resolving relative
    /// paths against `base`.
    pub fn resolve_files(&mut self, base: &Path) -> Result<()> {
        match self {
            CopulaSpec::Archimedean {
                table, table_file, ..
            }
            | CopulaSpec::ExtremeValue {
                table, table_file, ..
            } => {
                if let Some(p) = table_file.take() {
                    let path = if p.is_absolute() { p } else { base.join(p) };
                    let points = read_pairs_csv(fs::File::open(&path)?)?;
                    *table = table_of(points);
                }
                Ok(())
            }
            CopulaSpec::OrdinalSum { components, .. } => components
                .iter_mut()
                .try_for_each(|c| c.resolve_files(base)),
            CopulaSpec::Transpose { copula } => copula.resolve_files(base),
            _ => Ok(()),
        }
    }
}

/// Loads a copula from a JSON spec, or from a headerless CSV matrix when the
/// file extension is `.csv`.
pub fn read_spec(path: &Path) -> Result<Copula> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        return Ok(Copula::Grid(read_matrix_csv(fs::File::open(path)?)?));
    }
    let text = fs::read_to_string(path)?;
    let mut spec: CopulaSpec = serde_json::from_str(&text)?;
    spec.resolve_files(path.parent().unwrap_or(Path::new(".")))?;
    Copula::try_from(spec)
}

/// Writes `copula` as pretty-printed JSON, or as a CSV matrix when the
/// extension is `.csv` and the copula is a checkerboard.
pub fn write_spec(path: &Path, copula: &Copula) -> Result<()> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let g = copula.as_grid().ok_or_else(|| {
            CopulaError::InvalidSpec("only checkerboard copulas can be written as CSV".into())
        })?;
        return write_matrix_csv(fs::File::create(path)?, g.matrix());
    }
    let mut text = serde_json::to_string_pretty(copula)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

/// Reads a square doubly stochastic matrix, one row per line.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<GridCopula> {
    let mut rows = Vec::new();
    for rec in csv_reader(reader).deserialize::<Vec<f64>>() {
        rows.push(rec?);
    }
    GridCopula::from_rows(&rows)
}

pub fn write_matrix_csv<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads two-column rows such as `(t, φ(t))` tables.
pub fn read_pairs_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for rec in csv_reader(reader).deserialize::<(f64, f64)>() {
        out.push(rec?);
    }
    Ok(out)
}
