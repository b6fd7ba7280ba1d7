//! System files (JSON), reference trajectories (CSV) and CSV exports.
//!
//! A system file is `{"name": "..", "A": [[..]], "B": [[..]], "C": [[..]], "x0": [..]}`
//! with row-major nested arrays; `name` and `x0` are optional. Reference files
//! have the header `k,y1,..,yl` and one row per consecutive sample index.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use trackkit_core::control::SimulationRun;
use trackkit_core::trackability::ReferenceDecomposition;
use trackkit_core::{Matrix, ReferenceTrajectory, StateSpaceSystem, Trajectory, Vector};

use crate::error::{Error, Result};

/// A system together with the optional display name from its file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSystem {
    pub name: Option<String>,
    pub system: StateSpaceSystem,
}

impl NamedSystem {
    pub fn new(name: Option<String>, system: StateSpaceSystem) -> Self {
        NamedSystem { name, system }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
    #[serde(rename = "D", default, skip_serializing)]
    d: Option<serde_json::Value>,
}

fn to_matrix(key: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Format(format!("matrix {key} is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Format(format!(
            "matrix {key}: row {} has {} entries, expected {ncols}",
            i + 1,
            rows[i].len()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Matrix::from_row_slice(rows.len(), ncols, &flat))
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn parse_system(text: &str) -> Result<NamedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if file.d.is_some() {
        return Err(Error::Format(
            "key \"D\" is not supported: only strictly proper systems (no direct feedthrough) are modelled".into(),
        ));
    }
    let system = StateSpaceSystem::new(to_matrix("A", &file.a)?, to_matrix("B", &file.b)?, to_matrix("C", &file.c)?)?;
    let system = match file.x0 {
        Some(x0) => system.with_initial_state(Vector::from_vec(x0))?,
        None => system,
    };
    Ok(NamedSystem { name: file.name, system })
}

pub fn load_system(path: impl AsRef<Path>) -> Result<NamedSystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_system(&text)
}

/// JSON text of a system; `x0` is written only when nonzero.
pub fn system_to_json(sys: &NamedSystem) -> String {
    let s = &sys.system;
    let file = SystemFile {
        name: sys.name.clone(),
        a: to_rows(s.a()),
        b: to_rows(s.b()),
        c: to_rows(s.c()),
        x0: (s.x0().iter().any(|&v| v != 0.0)).then(|| s.x0().iter().copied().collect()),
        d: None,
    };
    serde_json::to_string_pretty(&file).expect("finite matrices serialize")
}

pub fn save_system(path: impl AsRef<Path>, sys: &NamedSystem) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, system_to_json(sys) + "\n").map_err(|e| Error::io(path, e))
}

/// Parse a reference CSV with `l` output columns.
pub fn read_reference<R: Read>(reader: R, l: usize) -> Result<ReferenceTrajectory> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Format("reference file is empty".into()));
    }
    if headers.len() != l + 1 {
        return Err(Error::Format(format!(
            "reference has {} columns, expected {} (k and {l} outputs)",
            headers.len(),
            l + 1
        )));
    }
    if &headers[0] != "k" {
        return Err(Error::Format(format!("first column must be \"k\", found \"{}\"", &headers[0])));
    }
    let mut start = None;
    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        let line = row + 2;
        let k: usize = record[0]
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: invalid sample index \"{}\"", &record[0])))?;
        let first = *start.get_or_insert(k);
        if k != first + samples.len() {
            return Err(Error::Format(format!(
                "line {line}: sample index {k} does not follow {}",
                first + samples.len() - 1
            )));
        }
        let values = record
            .iter()
            .skip(1)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Format(format!("line {line}: invalid value \"{v}\"")))
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Vector::from_vec(values));
    }
    let Some(start) = start else {
        return Err(Error::Format("reference file has no samples".into()));
    };
    Ok(Trajectory::new(start, samples)?)
}

pub fn load_reference(path: impl AsRef<Path>, l: usize) -> Result<ReferenceTrajectory> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_reference(file, l)
}

fn labels(prefix: &str, dim: usize) -> impl Iterator<Item = String> + '_ {
    (1..=dim).map(move |i| format!("{prefix}{i}"))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io("<output>", e),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Write a trajectory with header `k,<prefix>1,..`.
pub fn write_trajectory<W: Write>(writer: W, traj: &Trajectory, prefix: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = std::iter::once("k".to_string()).chain(labels(prefix, traj.dim())).collect();
    w.write_record(&header).map_err(csv_error)?;
    for (i, s) in traj.samples().iter().enumerate() {
        let row = std::iter::once((traj.start_index() + i).to_string()).chain(s.iter().map(f64::to_string));
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// Columns `k, y1.., proj1.., resid1..`.
pub fn write_decomposition<W: Write>(
    writer: W,
    reference: &ReferenceTrajectory,
    d: &ReferenceDecomposition,
) -> Result<()> {
    let l = reference.dim();
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain(labels("y", l))
        .chain(labels("proj", l))
        .chain(labels("resid", l))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    let rows = reference.samples().iter().zip(d.projected.samples()).zip(d.residual.samples());
    for (i, ((y, p), e)) in rows.enumerate() {
        let row = std::iter::once((reference.start_index() + i).to_string())
            .chain(y.iter().chain(p.iter()).chain(e.iter()).map(f64::to_string));
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

/// Columns `k, u1..um, y1..yl, yref1..yrefl` for `k = 0..=r`. Inputs past
/// `r - L` and reference samples before `L` are left empty.
pub fn write_simulation<W: Write>(writer: W, sys: &StateSpaceSystem, run: &SimulationRun) -> Result<()> {
    let (m, l) = (sys.m(), sys.l());
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> =
        std::iter::once("k".to_string()).chain(labels("u", m)).chain(labels("y", l)).chain(labels("yref", l)).collect();
    w.write_record(&header).map_err(csv_error)?;
    let cells = |v: Option<&Vector>, dim: usize| -> Vec<String> {
        match v {
            Some(v) => v.iter().map(f64::to_string).collect(),
            None => vec![String::new(); dim],
        }
    };
    for (k, x) in run.states.iter().enumerate() {
        let y = sys.c() * x;
        let mut row = vec![k.to_string()];
        row.extend(cells(run.inputs.at(k), m));
        row.extend(cells(Some(&y), l));
        row.extend(cells(run.reference.at(k), l));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}
