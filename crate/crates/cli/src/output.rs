//! CSV and JSON writers. Floats are written in shortest round-trip form, so
//! identical inputs give byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gini_ellipse::elliptical::SampleMatrix;
use gini_ellipse::tail::IdentityReport;
use serde::Serialize;

use crate::error::CliResult;

/// `path` with `suffix` appended to the full file name.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// A file when `path` is given, stdout otherwise.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_json<T: Serialize>(value: &T, mut w: impl Write) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json_file<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    write_json(value, open_output(Some(path))?)
}

fn table<W: Write>(w: W, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    out.flush()?;
    Ok(())
}

/// Header `x1,…,xn`, one draw per line.
pub fn write_samples_csv(samples: &SampleMatrix, w: impl Write) -> CliResult<()> {
    let header: Vec<String> = (1..=samples.dim()).map(|i| format!("x{i}")).collect();
    table(w, &header, samples.rows().map(|r| r.to_vec()))
}

pub fn write_values_csv(name: &str, values: &[f64], w: impl Write) -> CliResult<()> {
    table(w, &[name.to_string()], values.iter().map(|v| vec![*v]))
}

/// `t,surv_x,surv_y,sigma`.
pub fn write_survival_csv(rows: &[[f64; 4]], w: impl Write) -> CliResult<()> {
    let header = ["t", "surv_x", "surv_y", "sigma"].map(String::from);
    table(w, &header, rows.iter().map(|r| r.to_vec()))
}

/// `t,p_direct,p_union,sigma`.
pub fn write_identity_csv(report: &IdentityReport, w: impl Write) -> CliResult<()> {
    let header = ["t", "p_direct", "p_union", "sigma"].map(String::from);
    table(
        w,
        &header,
        report
            .rows
            .iter()
            .map(|r| vec![r.t, r.p_direct, r.p_union, r.sigma]),
    )
}

/// Rows of a CSV file with a header line, all numeric.
pub fn read_vectors_csv(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| crate::error::CliError::Input(format!("line {}: {e}", k + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}
