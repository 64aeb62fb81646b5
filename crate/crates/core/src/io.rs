//! CSV matrices and vectors, system JSON bundles, and trajectory CSVs.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{AppraisalMatrix, InteractingLaplacian, MidsMatrix, SusceptibilityMatrix, SystemSpec};
use crate::simulate::Trajectory;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Parses comma-separated rows; `#` lines are comments.
pub fn parse_matrix_csv(text: &str, source_name: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let parse_err = |line: u64, reason: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        reason,
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("'{f}' is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    line,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no data rows".into()));
    }
    let cols = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_csv(&read_text(path)?, &path.display().to_string())
}

/// A single row or a single column.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.nrows() != 1 && m.ncols() != 1 {
        return Err(Error::Dimension(format!(
            "{}: expected one row or one column, found {}x{}",
            path.display(),
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(DVector::from_iterator(m.len(), m.transpose().iter().copied()))
}

pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_to_csv(m))
}

/// JSON layout of a system bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub lambda: Vec<f64>,
    pub laplacian: Vec<Vec<f64>>,
    pub appraisal: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mids: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_issues: Option<usize>,
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid(what, "rows must be non-empty and of equal length"));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SystemFile {
    pub fn from_spec(sys: &SystemSpec) -> Self {
        Self {
            lambda: sys.lambda.diag().iter().copied().collect(),
            laplacian: matrix_to_rows(sys.laplacian.matrix()),
            appraisal: matrix_to_rows(sys.appraisal.matrix()),
            mids: sys.mids.as_ref().map(|c| matrix_to_rows(c.matrix())),
            n_issues: sys.mids.as_ref().map(MidsMatrix::issues),
        }
    }

    /// Validates every component. Without `mids`, `n_issues > 1` attaches
    /// uncoupled issues (`C = I`).
    pub fn into_spec(self) -> Result<SystemSpec> {
        let spec = SystemSpec::new(
            SusceptibilityMatrix::from_slice(&self.lambda)?,
            InteractingLaplacian::new(rows_to_matrix(&self.laplacian, "laplacian")?)?,
            AppraisalMatrix::new(rows_to_matrix(&self.appraisal, "appraisal")?)?,
        )?;
        match (self.mids, self.n_issues) {
            (Some(rows), n) => {
                let c = MidsMatrix::new(rows_to_matrix(&rows, "mids")?)?;
                if let Some(n) = n.filter(|&n| n != c.issues()) {
                    return Err(Error::Dimension(format!(
                        "n_issues = {n} but mids is {0}x{0}",
                        c.issues()
                    )));
                }
                Ok(spec.with_mids(c))
            }
            (None, Some(n)) if n > 1 => Ok(spec.with_mids(MidsMatrix::new(DMatrix::identity(n, n))?)),
            (None, Some(0)) => Err(Error::invalid("n_issues", "must be at least 1")),
            (None, _) => Ok(spec),
        }
    }
}

pub fn parse_system_json(text: &str, source_name: &str) -> Result<SystemSpec> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.line() as u64,
        reason: e.to_string(),
    })?;
    file.into_spec()
}

pub fn load_system(path: &Path) -> Result<SystemSpec> {
    parse_system_json(&read_text(path)?, &path.display().to_string())
}

pub fn system_to_json(sys: &SystemSpec) -> String {
    serde_json::to_string_pretty(&SystemFile::from_spec(sys)).expect("plain data serialises")
}

pub fn save_system(path: &Path, sys: &SystemSpec) -> Result<()> {
    write_text(path, &(system_to_json(sys) + "\n"))
}

/// Columns `k, xi_1..xi_M, spread`.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let dim = traj.states.first().map(|s| s.xi.len()).unwrap_or(0);
    let mut out = String::from("k");
    for i in 1..=dim {
        out.push_str(&format!(",xi_{i}"));
    }
    out.push_str(",spread\n");
    for (s, spread) in traj.states.iter().zip(&traj.spread_series) {
        out.push_str(&s.k.to_string());
        for x in s.xi.iter() {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push_str(&format!(",{spread}\n"));
    }
    out
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_text(path, &trajectory_to_csv(traj))
}

/// Columns `rho, max_magnitude`.
pub fn samples_to_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::from("rho,max_magnitude\n");
    for (r, m) in samples {
        out.push_str(&format!("{r},{m}\n"));
    }
    out
}

pub fn write_text_file(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}
