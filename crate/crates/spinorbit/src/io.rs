//! Deterministic artifact output: CSV tables, JSON sidecars, matrix dumps.
//!
//! Every writer goes through the same atomic path: the bytes are written to
//! a sibling `<name>.tmp` file, flushed, then renamed over the target, so a
//! crash never leaves a partial artifact behind. Floats are formatted with
//! the shortest round-trip representation, which makes table bodies
//! byte-identical across runs of the same configuration.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::classical::SemiclassicalTrajectory;
use crate::error::{Error, Result};
use crate::linalg::CMat;

fn env_err(path: &Path, what: &str, e: std::io::Error) -> Error {
    Error::Validation(format!("{what} {}: {e}", path.display()))
}

/// Write bytes to `path` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| env_err(parent, "create directory", e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp).map_err(|e| env_err(tmp, "create", e))?;
        f.write_all(bytes).map_err(|e| env_err(tmp, "write", e))?;
        f.sync_all().map_err(|e| env_err(tmp, "sync", e))?;
    }
    fs::rename(tmp, path).map_err(|e| env_err(path, "rename into", e))
}

/// Shortest round-trip decimal form of x; the single float format used in
/// every table so that reruns produce byte-identical artifacts.
pub fn format_float(x: f64) -> String {
    format!("{x}")
}

/// An in-memory numeric table with named columns.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: Vec<S>) -> Self {
        Self {
            header: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Validation(format!(
                "row has {} entries for {} columns",
                row.len(),
                self.header.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for &x in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format_float(x));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }
}

/// Serialize a value as pretty JSON (declaration key order) and write it
/// atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Validation(format!("serialize {}: {e}", path.display())))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Hex SHA-256 of a byte string; used to stamp table bodies into their
/// provenance sidecars.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Table view of a one-dimensional semiclassical trajectory with columns
/// t,q,p,n1,n2,n3,S,alpha.
pub fn trajectory_table(traj: &SemiclassicalTrajectory) -> Result<CsvTable> {
    let mut table = CsvTable::new(vec!["t", "q", "p", "n1", "n2", "n3", "S", "alpha"]);
    for node in traj.nodes() {
        if node.z.dim() != 1 {
            return Err(Error::Capability(
                "trajectory tables cover one orbital degree of freedom".into(),
            ));
        }
        let n = node.n.components();
        table.push_row(vec![
            node.t,
            node.z.q[0],
            node.z.p[0],
            n[0],
            n[1],
            n[2],
            node.action_s,
            node.alpha,
        ])?;
    }
    Ok(table)
}

/// Scales and bookkeeping for a trajectory's JSON sidecar; the caller merges
/// in its own description of the coupling field.
pub fn trajectory_metadata(
    traj: &SemiclassicalTrajectory,
    field: serde_json::Value,
) -> serde_json::Value {
    let scales = traj.scales();
    serde_json::json!({
        "hbar": scales.hbar(),
        "twice_s": scales.spin().twice_s(),
        "kappa": scales.kappa(),
        "couple_in_orbital_action": traj.couple_in_orbital_action(),
        "nodes": traj.len(),
        "t_start": traj.node(0).t,
        "t_end": traj.endpoint().t,
        "field": field,
    })
}

/// Debug dump of a complex matrix: a `rows,cols` line, then one `re,im`
/// line per entry in column-major order.
pub fn matrix_to_csv(m: &CMat) -> String {
    let mut out = format!("{},{}\n", m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            out.push_str(&format_float(z.re));
            out.push(',');
            out.push_str(&format_float(z.im));
            out.push('\n');
        }
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &CMat) -> Result<()> {
    write_atomic(path, matrix_to_csv(m).as_bytes())
}
