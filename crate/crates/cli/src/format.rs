//! File formats: the `HKT1` binary table container, CSV export, JSON
//! reports and ground states.
//!
//! `HKT1` layout, all integers and floats little-endian:
//!
//! ```text
//! b"HKT1" | u32 version | u32 header length | header JSON
//! radii (f64 × N) | times (f64 × M) | origin (f64 × M, if present)
//! values (f64 × M·N·columns, row-major in time, radius, column)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use hardy_kernels_core::audit::AuditReport;
use hardy_kernels_core::spectral::{DecayFit, GroundState};
use hardy_kernels_core::table::{KernelTable, TableKind, TableMeta};
use hardy_kernels_core::{HardyCoupling, LevyModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"HKT1";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: TableKind,
    model: LevyModel,
    coupling: Option<HardyCoupling>,
    radii: usize,
    times: usize,
    columns: usize,
    has_origin: bool,
    meta: TableMeta,
}

fn put(w: &mut impl Write, xs: &[f64]) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_table(table: &KernelTable, path: &Path) -> Result<()> {
    let header = Header {
        kind: table.kind,
        model: table.model.clone(),
        coupling: table.coupling,
        radii: table.radii.len(),
        times: table.times.len(),
        columns: table.columns,
        has_origin: table.origin.is_some(),
        meta: table.meta.clone(),
    };
    let json = serde_json::to_vec(&header).expect("table headers serialize");
    let io = CliError::io(path);
    let mut w = BufWriter::new(File::create(path).map_err(CliError::io(path))?);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        put(w, &table.radii)?;
        put(w, &table.times)?;
        if let Some(o) = &table.origin {
            put(w, o)?;
        }
        put(w, &table.values)?;
        w.flush()
    };
    write(&mut w).map_err(io)
}

pub fn read_table(path: &Path) -> Result<KernelTable> {
    let bad = |reason: String| CliError::Format { path: path.to_path_buf(), reason };
    let mut r = BufReader::new(File::open(path).map_err(CliError::io(path))?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(CliError::io(path))?;
    let mut at = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(at..at + n).ok_or_else(|| bad("truncated file".into()))?;
        at += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err(bad("not an HKT1 table (bad magic)".into()));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("HKT1 version {version} is not supported (expected {VERSION})")));
    }
    let len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(take(len)?).map_err(|e| bad(format!("header: {e}")))?;
    let mut floats = |n: usize| -> Result<Vec<f64>> {
        Ok(take(8 * n)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let radii = floats(header.radii)?;
    let times = floats(header.times)?;
    let origin = if header.has_origin { Some(floats(header.times)?) } else { None };
    let values = floats(header.radii * header.times * header.columns)?;
    if at != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - at)));
    }
    Ok(KernelTable {
        kind: header.kind,
        model: header.model,
        coupling: header.coupling,
        radii,
        times,
        columns: header.columns,
        values,
        origin,
        meta: header.meta,
    })
}

/// One row per `(time, radius)`: `t, r` followed by the `columns` values.
pub fn write_csv(table: &KernelTable, path: &Path) -> Result<()> {
    let to_io = |e: csv::Error| CliError::Io { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    let mut head = vec!["t".to_string(), "r".to_string()];
    if table.columns == 1 {
        head.push("value".into());
    } else {
        let n = table.radii.len();
        head.extend((0..table.columns).map(|j| if j < n { format!("y={}", table.radii[j]) } else { format!("y=-{}", table.radii[j - n]) }));
    }
    w.write_record(&head).map_err(to_io)?;
    for (k, &t) in table.times.iter().enumerate() {
        let row = table.row(k);
        for (i, &r) in table.radii.iter().enumerate() {
            let mut rec = vec![t.to_string(), r.to_string()];
            rec.extend(row[i * table.columns..(i + 1) * table.columns].iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(to_io)?;
        }
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

pub fn write_report(reports: &[AuditReport], path: &Path) -> Result<()> {
    write_json(&reports, path)
}

pub fn read_report(path: &Path) -> Result<Vec<AuditReport>> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format { path: path.to_path_buf(), reason: e.to_string() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fits {
    pub delta_hat: f64,
    pub rate_hat: f64,
    pub delta_rms: f64,
    pub rate_rms: f64,
    pub inconclusive: bool,
}

impl From<DecayFit> for Fits {
    fn from(f: DecayFit) -> Self {
        Self { delta_hat: f.delta_hat, rate_hat: f.rate_hat, delta_rms: f.delta_rms, rate_rms: f.rate_rms, inconclusive: f.inconclusive }
    }
}

/// The JSON form of a solved ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateFile {
    pub model: LevyModel,
    pub coupling: HardyCoupling,
    #[serde(rename = "E")]
    pub energy: f64,
    pub lambda_star: f64,
    pub grid: GridSummary,
    pub phi: Vec<f64>,
    pub mu_curve: Vec<(f64, f64)>,
    pub fits: Option<Fits>,
    pub evaluations: usize,
}

impl GroundStateFile {
    pub fn new(gs: &GroundState, fits: Option<DecayFit>) -> Self {
        let radii = gs.phi.radii.clone();
        Self {
            model: gs.model.clone(),
            coupling: gs.coupling,
            energy: gs.energy,
            lambda_star: gs.lambda_star,
            grid: GridSummary { r_min: radii[0], r_max: radii[radii.len() - 1], n: radii.len(), radii },
            phi: gs.phi.values.clone(),
            mu_curve: gs.mu_curve.clone(),
            fits: fits.map(Fits::from),
            evaluations: gs.diagnostics.evaluations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardy_kernels_core::RadialGrid;

    fn table() -> KernelTable {
        let grid = RadialGrid::log(1e-2, 10.0, 12, vec![0.1, 0.5, 1.0]).unwrap();
        KernelTable::heat(&LevyModel::relativistic(3, 1.0, 1.0).unwrap(), &grid).unwrap()
    }

    #[test]
    fn tables_roundtrip_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.hkt");
        let t = table();
        write_table(&t, &p).unwrap();
        let back = read_table(&p).unwrap();
        assert_eq!(back, t);
        assert!(back.values.iter().zip(&t.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn version_mismatch_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.hkt");
        write_table(&table(), &p).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[4] = 9;
        std::fs::write(&p, &bytes).unwrap();
        let e = read_table(&p).unwrap_err();
        assert!(matches!(e, CliError::Format { .. }) && e.to_string().contains("version 9"), "{e}");
        bytes[0] = b'X';
        std::fs::write(&p, &bytes).unwrap();
        assert!(read_table(&p).unwrap_err().to_string().contains("magic"));
    }

    #[test]
    fn csv_has_one_row_per_radius_and_time() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = table();
        write_csv(&t, &p).unwrap();
        let rows = csv::Reader::from_path(&p).unwrap().records().count();
        assert_eq!(rows, t.radii.len() * t.times.len());
    }
}
