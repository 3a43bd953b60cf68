//! CSV and JSON artifacts.
//!
//! | file          | columns                                                  |
//! |---------------|----------------------------------------------------------|
//! | `curve.csv`   | `tau, v, dv_dtau, gap, iters`                            |
//! | `trace.csv`   | `misfit, k, tau, v, dv_dtau, tol, inner_iters`           |
//! | `signals.csv` | `i, x0, x_<misfit>…, true_error, residual_<misfit>…`     |
//!
//! Empty cells mean "not applicable". Matrices are plain CSV without a
//! header, one row per line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use vfsense_core::{DenseMatrix, ParetoTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub tau: f64,
    pub v: f64,
    pub dv_dtau: Option<f64>,
    pub gap: Option<f64>,
    pub iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TraceRow<'a> {
    misfit: &'a str,
    k: usize,
    tau: f64,
    v: f64,
    dv_dtau: Option<f64>,
    tol: f64,
    inner_iters: usize,
}

/// One recovered signal and its residual, for `signals.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalColumn {
    pub name: String,
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for i in 0..vfsense_core::LinearOperator::rows(a) {
        w.write_record(a.row(i).iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: empty matrix", path.display());
    }
    Ok(DenseMatrix::from_rows(&rows)?)
}

/// A vector stored as one value per line or as a single row.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let a = read_matrix_csv(path)?;
    let (r, c) = (vfsense_core::LinearOperator::rows(&a), vfsense_core::LinearOperator::cols(&a));
    if r != 1 && c != 1 {
        bail!("{}: expected a vector, found a {r}x{c} matrix", path.display());
    }
    Ok(a.data().to_vec())
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_trace_csv<'a>(path: &Path, traces: impl IntoIterator<Item = (&'a str, &'a ParetoTrace)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for (misfit, trace) in traces {
        for s in &trace.steps {
            w.serialize(TraceRow {
                misfit,
                k: s.k,
                tau: s.tau,
                v: s.value,
                dv_dtau: s.slope,
                tol: s.inner_tol,
                inner_iters: s.inner_iters,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_signals_csv(path: &Path, x0: &[f64], true_error: &[f64], columns: &[SignalColumn]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["i".to_string(), "x0".to_string()];
    header.extend(columns.iter().map(|c| format!("x_{}", c.name)));
    header.push("true_error".into());
    header.extend(columns.iter().map(|c| format!("residual_{}", c.name)));
    w.write_record(&header)?;
    let cell = |v: &[f64], i: usize| v.get(i).map(|x| x.to_string()).unwrap_or_default();
    let len = x0.len().max(true_error.len());
    for i in 0..len {
        let mut rec = vec![i.to_string(), cell(x0, i)];
        rec.extend(columns.iter().map(|c| cell(&c.x, i)));
        rec.push(cell(true_error, i));
        rec.extend(columns.iter().map(|c| cell(&c.residual, i)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let a = DenseMatrix::from_rows(&[[1.0, -2.5e-7], [0.1, 3.0]]).unwrap();
        write_matrix_csv(&path, &a).unwrap();
        assert_eq!(read_matrix_csv(&path).unwrap(), a);
    }

    #[test]
    fn vector_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let col = dir.path().join("col.csv");
        std::fs::write(&col, "1\n2\n3\n").unwrap();
        assert_eq!(read_vector_csv(&col).unwrap(), vec![1.0, 2.0, 3.0]);
        let row = dir.path().join("row.csv");
        std::fs::write(&row, "1, 2, 3\n").unwrap();
        assert_eq!(read_vector_csv(&row).unwrap(), vec![1.0, 2.0, 3.0]);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "1,2\n3,4\n").unwrap();
        assert!(read_vector_csv(&bad).is_err());
    }

    #[test]
    fn curve_round_trip_keeps_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/curve.csv");
        let rows = vec![
            CurveRow { tau: 0.0, v: 2.5, dv_dtau: None, gap: Some(0.0), iters: 0 },
            CurveRow { tau: 1.0, v: 1.0, dv_dtau: Some(-1.0), gap: None, iters: 7 },
        ];
        write_curve_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("tau,v,dv_dtau,gap,iters\n"));
        assert_eq!(read_curve_csv(&path).unwrap(), rows);
    }

    #[test]
    fn signals_pad_shorter_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("signals.csv");
        let col = SignalColumn {
            name: "ls".into(),
            x: vec![1.0, 0.0, 2.0],
            residual: vec![0.5],
        };
        write_signals_csv(&path, &[1.0, 0.0, 2.0], &[0.4], &[col]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,x0,x_ls,true_error,residual_ls");
        assert_eq!(lines[3], "2,2,2,,");
    }
}
