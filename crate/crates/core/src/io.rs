//! On-disk formats: field dumps (CSV plus a JSON sidecar), the branch table
//! CSV and the branch metadata JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::{BranchTable, NewtonOptions, StopReason};
use crate::domain::{ComplexField, Domain, DomainError, DomainSpec, Params};
use crate::postprocess::{PointDiagnostics, StandingWave};

/// Column order of the branch table.
pub const BRANCH_HEADER: [&str; 10] = [
    "alpha",
    "mu",
    "omega",
    "l2_norm_v",
    "l2_norm_u",
    "h1_norm_u",
    "residual_inf",
    "identity_real_err",
    "identity_imag_err",
    "newton_iters",
];

const COORD_NAMES: [&str; 3] = ["x", "y", "z"];
/// Node coordinates in a dump must match the grid to this tolerance.
const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn csv(path: &Path, source: csv::Error) -> Self {
        IoError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    fn json(path: &Path, source: serde_json::Error) -> Self {
        IoError::Json {
            path: path.to_path_buf(),
            source,
        }
    }

    fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

/// Present in the sidecar when the dump holds a standing wave.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveMeta {
    pub theta: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    #[serde(flatten)]
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveMeta>,
}

/// `field.csv` → `field.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::io(path, e))
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| IoError::json(path, e))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| IoError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| IoError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| IoError::json(path, e))
}

/// Writes the physical values of `field` as `x[,y],re,im`, one node per row
/// in row-major order, and the sidecar next to it.
pub fn write_field(
    path: &Path,
    domain: &Domain,
    field: &ComplexField,
    wave: Option<WaveMeta>,
) -> Result<(), IoError> {
    let values = domain.to_physical(field)?;
    let axes = domain.shape().len();
    let mut writer = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<&str> = COORD_NAMES[..axes].to_vec();
    header.extend(["re", "im"]);
    writer.write_record(&header).map_err(|e| IoError::csv(path, e))?;
    for (i, z) in values.values.iter().enumerate() {
        let mut row: Vec<String> = domain.node(i).iter().map(|&x| format_f64(x)).collect();
        row.push(format_f64(z.re));
        row.push(format_f64(z.im));
        writer.write_record(&row).map_err(|e| IoError::csv(path, e))?;
    }
    writer.flush().map_err(|e| IoError::io(path, e))?;
    let meta = FieldMeta {
        domain: domain.spec().clone(),
        wave,
    };
    write_json(&sidecar_path(path), &meta)
}

/// Writes `wave` with its angles, exponent and frequency in the sidecar.
pub fn write_wave(path: &Path, domain: &Domain, wave: &StandingWave, mu: Option<f64>) -> Result<(), IoError> {
    let meta = WaveMeta {
        theta: wave.params.theta(),
        gamma: wave.params.gamma(),
        alpha: wave.alpha,
        omega: wave.omega,
        mu,
    };
    write_field(path, domain, &wave.u, Some(meta))
}

/// Reads a dump and its sidecar, rebuilds the domain and checks that the node
/// coordinates match it. The field is returned in physical representation.
pub fn read_field(path: &Path) -> Result<(Domain, ComplexField, FieldMeta), IoError> {
    let meta: FieldMeta = read_json(&sidecar_path(path))?;
    let domain = Domain::new(meta.domain.clone())?;
    let axes = domain.shape().len();
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::csv(path, e))?;
    let header = reader.headers().map_err(|e| IoError::csv(path, e))?.clone();
    let mut expected: Vec<&str> = COORD_NAMES[..axes].to_vec();
    expected.extend(["re", "im"]);
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(IoError::format(
            path,
            format!("expected header {}, found {}", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut values = Vec::with_capacity(domain.len());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IoError::csv(path, e))?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64, IoError> {
            record[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| IoError::format(path, format!("line {line}, column {}: {e}", expected[k])))
        };
        if i >= domain.len() {
            return Err(IoError::format(path, format!("more than {} rows", domain.len())));
        }
        let node = domain.node(i);
        for (k, &x) in node.iter().enumerate() {
            let got = num(k)?;
            if (got - x).abs() > COORD_TOL * x.abs().max(1.0) {
                return Err(IoError::format(
                    path,
                    format!("line {line}: {} = {got} does not match grid node {x}", expected[k]),
                ));
            }
        }
        values.push(Complex64::new(num(axes)?, num(axes + 1)?));
    }
    if values.len() != domain.len() {
        return Err(IoError::format(
            path,
            format!("expected {} rows, found {}", domain.len(), values.len()),
        ));
    }
    Ok((domain, ComplexField::physical(values), meta))
}

/// Reads a dump that carries a wave block.
pub fn read_wave(path: &Path) -> Result<(Domain, StandingWave, WaveMeta), IoError> {
    let (domain, u, meta) = read_field(path)?;
    let wave = meta
        .wave
        .ok_or_else(|| IoError::format(&sidecar_path(path), "sidecar has no wave block"))?;
    let params = Params::new(wave.theta, wave.gamma)?;
    let u = domain.to_coefficients(&u)?;
    let standing = StandingWave {
        u,
        omega: wave.omega,
        alpha: wave.alpha,
        params,
        domain: meta.domain,
    };
    Ok((domain, standing, wave))
}

/// Branch table rows with [`BRANCH_HEADER`]. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_branch_csv<W: Write>(out: W, rows: &[PointDiagnostics]) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(BRANCH_HEADER)?;
    for r in rows {
        let floats = [
            r.alpha,
            r.mu,
            r.omega,
            r.l2_norm_v,
            r.l2_norm_u,
            r.h1_norm_u,
            r.residual_inf,
            r.identity_real_err,
            r.identity_imag_err,
        ];
        let mut record: Vec<String> = floats.iter().map(|&x| format_f64(x)).collect();
        record.push(r.newton_iters.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_branch_csv(path: &Path, rows: &[PointDiagnostics]) -> Result<(), IoError> {
    write_branch_csv(create(path)?, rows).map_err(|e| IoError::csv(path, e))
}

/// Reads back the columns of a branch table, keyed by [`BRANCH_HEADER`].
pub fn read_branch_csv(path: &Path) -> Result<Vec<[f64; 10]>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::csv(path, e))?;
    let header = reader.headers().map_err(|e| IoError::csv(path, e))?;
    if header.iter().ne(BRANCH_HEADER) {
        return Err(IoError::format(path, "unexpected branch header"));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IoError::csv(path, e))?;
        let mut row = [0.0; 10];
        for (k, cell) in record.iter().enumerate().take(10) {
            row[k] = cell
                .parse()
                .map_err(|e| IoError::format(path, format!("line {}, column {}: {e}", i + 2, BRANCH_HEADER[k])))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Thresholds a run was judged against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub identity_tol: f64,
    pub max_iters: usize,
    pub min_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedValues {
    pub mu0: f64,
    pub omega0: f64,
}

/// Contents of `meta.json` for one branch.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchMeta {
    pub params: Params,
    pub domain: DomainSpec,
    pub eigen_index: usize,
    pub lambda: f64,
    pub seed: SeedValues,
    pub tolerances: Tolerances,
    pub newton: NewtonOptions,
    pub points: usize,
    pub alpha_reached: f64,
    pub stop: StopReason,
}

impl BranchMeta {
    pub fn new(table: &BranchTable, tolerances: Tolerances) -> Self {
        Self {
            params: table.params,
            domain: table.domain.clone(),
            eigen_index: table.eigen_index,
            lambda: table.lambda,
            seed: SeedValues {
                mu0: table.mu0,
                omega0: table.omega0,
            },
            tolerances,
            newton: table.newton,
            points: table.points.len(),
            alpha_reached: table.alpha_reached,
            stop: table.stop.clone(),
        }
    }
}
