//! CSV tables with a schema stamp.
//!
//! Every file starts with `# arithclass-schema: <version> <kind>`, followed
//! by a header row. Floats use 17 significant digits so they round-trip.

use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::lattice::{IntVector, SigmaEntry, SigmaProfile};
use crate::measure::{BoundReport, DensityCurve};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("missing or malformed schema line (expected kind `{0}`)")]
    Schema(String),
    #[error("unexpected header: {0}")]
    Header(String),
    #[error("bad field `{field}` on row {row}: {value}")]
    Field {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn schema_line(kind: &str) -> String {
    format!("# arithclass-schema: {SCHEMA_VERSION} {kind}")
}

/// Writes a stamped table.
pub fn write_table<W: Write>(
    mut w: W,
    kind: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), IoError> {
    writeln!(w, "{}", schema_line(kind))?;
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a stamped table, checking the kind and header.
pub fn read_table<R: Read>(
    mut r: R,
    kind: &str,
    header: &[&str],
) -> Result<Vec<Vec<String>>, IoError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    if first.trim_end() != schema_line(kind) {
        return Err(IoError::Schema(kind.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(IoError::Header(found.join(",")));
    }
    reader
        .records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect()
}

fn parse<T: std::str::FromStr>(row: usize, field: &'static str, value: &str) -> Result<T, IoError> {
    value.parse().map_err(|_| IoError::Field {
        row,
        field,
        value: value.to_string(),
    })
}

pub const SIGMA_HEADER: [&str; 5] = ["k", "value_num", "value_den", "value_float", "witness"];

pub fn write_sigma_csv<W: Write>(w: W, profile: &SigmaProfile) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = profile
        .entries
        .iter()
        .map(|e| {
            vec![
                e.k.to_string(),
                e.value.numer().to_string(),
                e.value.denom().to_string(),
                fmt_f64(crate::Interval::from_rational(&e.value).mid()),
                e.witness.to_semicolon(),
            ]
        })
        .collect();
    write_table(w, "sigma", &SIGMA_HEADER, &rows)
}

pub fn read_sigma_csv<R: Read>(r: R) -> Result<SigmaProfile, IoError> {
    let rows = read_table(r, "sigma", &SIGMA_HEADER)?;
    let entries = rows
        .iter()
        .enumerate()
        .map(|(idx, row)| {
            let num: BigInt = parse(idx, "value_num", &row[1])?;
            let den: BigInt = parse(idx, "value_den", &row[2])?;
            let witness = IntVector::parse_semicolon(&row[4]).ok_or_else(|| IoError::Field {
                row: idx,
                field: "witness",
                value: row[4].clone(),
            })?;
            Ok(SigmaEntry {
                k: parse(idx, "k", &row[0])?,
                value: BigRational::new(num, den),
                witness,
            })
        })
        .collect::<Result<_, IoError>>()?;
    Ok(SigmaProfile { entries })
}

pub const DENSITY_HEADER: [&str; 5] = ["r", "density_lb", "err", "bands_considered", "truncation_tail"];

#[derive(Clone, Debug, PartialEq)]
pub struct DensityRow {
    pub r: f64,
    pub density_lb: f64,
    pub err: f64,
    pub bands_considered: u64,
    pub truncation_tail: f64,
}

pub fn write_density_csv<W: Write>(w: W, curve: &DensityCurve) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.r),
                fmt_f64(p.density_lb),
                fmt_f64(p.density.error),
                p.bands_considered.to_string(),
                fmt_f64(curve.truncation_tail),
            ]
        })
        .collect();
    write_table(w, "density", &DENSITY_HEADER, &rows)
}

pub fn read_density_csv<R: Read>(r: R) -> Result<Vec<DensityRow>, IoError> {
    read_table(r, "density", &DENSITY_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            Ok(DensityRow {
                r: parse(i, "r", &row[0])?,
                density_lb: parse(i, "density_lb", &row[1])?,
                err: parse(i, "err", &row[2])?,
                bands_considered: parse(i, "bands_considered", &row[3])?,
                truncation_tail: parse(i, "truncation_tail", &row[4])?,
            })
        })
        .collect()
}

pub const BOUND_HEADER: [&str; 6] = ["id", "lhs", "lhs_err", "rhs", "satisfied", "margin"];

/// One parsed bound-report row; `satisfied` is `None` for skipped checks.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub id: String,
    pub lhs: f64,
    pub lhs_err: f64,
    pub rhs: f64,
    pub satisfied: Option<bool>,
    pub margin: f64,
}

pub fn write_bounds_csv<W: Write>(w: W, reports: &[BoundReport]) -> Result<(), IoError> {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|b| {
            let verdict = match (&b.skipped, b.satisfied) {
                (Some(_), _) => "skipped",
                (None, true) => "true",
                (None, false) => "false",
            };
            vec![
                b.id.clone(),
                fmt_f64(b.lhs.value),
                fmt_f64(b.lhs.error),
                fmt_f64(b.rhs),
                verdict.to_string(),
                fmt_f64(b.margin),
            ]
        })
        .collect();
    write_table(w, "bounds", &BOUND_HEADER, &rows)
}

pub fn read_bounds_csv<R: Read>(r: R) -> Result<Vec<BoundRow>, IoError> {
    read_table(r, "bounds", &BOUND_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let satisfied = match row[4].as_str() {
                "true" => Some(true),
                "false" => Some(false),
                "skipped" => None,
                other => {
                    return Err(IoError::Field {
                        row: i,
                        field: "satisfied",
                        value: other.to_string(),
                    })
                }
            };
            Ok(BoundRow {
                id: row[0].clone(),
                lhs: parse(i, "lhs", &row[1])?,
                lhs_err: parse(i, "lhs_err", &row[2])?,
                rhs: parse(i, "rhs", &row[3])?,
                satisfied,
                margin: parse(i, "margin", &row[5])?,
            })
        })
        .collect()
}
