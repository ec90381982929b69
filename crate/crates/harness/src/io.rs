//! CSV waveforms, CSV sweep tables and JSON reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::report::SweepRow;
use crate::Error;

/// Sampled waveform: one row of state values per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Column names of the states.
    pub labels: Vec<String>,
    /// Sample times in s.
    pub times: Vec<f64>,
    /// `values[i]` holds the states at `times[i]`.
    pub values: Vec<Vec<f64>>,
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv(format!("{}: {e}", path.display()))
}

/// Round-trip exact formatting: 17 significant digits.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,<labels>` followed by one row per sample.
pub fn write_waveform_csv(path: &Path, waveform: &Waveform) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec!["t".to_string()];
    header.extend(waveform.labels.iter().cloned());
    w.write_record(&header).map_err(csv_error(path))?;
    for (t, row) in waveform.times.iter().zip(&waveform.values) {
        let record = std::iter::once(fmt(*t)).chain(row.iter().map(|&v| fmt(v)));
        w.write_record(record).map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Reads a file written by [`write_waveform_csv`].
pub fn read_waveform_csv(path: &Path) -> Result<Waveform, Error> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = r.headers().map_err(csv_error(path))?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Csv(format!(
            "{}: first column must be t",
            path.display()
        )));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut waveform = Waveform {
        labels,
        times: Vec::new(),
        values: Vec::new(),
    };
    for record in r.records() {
        let record = record.map_err(csv_error(path))?;
        let mut fields = record.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Csv(format!("{}: {f:?}: {e}", path.display())))
        });
        waveform
            .times
            .push(fields.next().transpose()?.unwrap_or(f64::NAN));
        waveform.values.push(fields.collect::<Result<_, _>>()?);
    }
    Ok(waveform)
}

/// Writes the sweep table, one row per tolerance.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    w.write_record([
        "tol",
        "mpde_eps_v",
        "mpde_eps_i",
        "mpde_steps",
        "mpde_failed",
        "mpde_lu",
        "mpde_solves",
        "reference_eps_v",
        "reference_eps_i",
        "reference_steps",
        "reference_failed",
        "reference_lu",
        "reference_solves",
    ])
    .map_err(csv_error(path))?;
    for row in rows {
        let (m, r) = (&row.mpde, &row.reference);
        w.write_record([
            fmt(row.tol),
            fmt(m.eps_v),
            fmt(m.eps_i),
            m.stats.accepted_steps.to_string(),
            m.stats.failed_steps.to_string(),
            m.stats.lu_factorizations.to_string(),
            m.stats.linear_solves.to_string(),
            fmt(r.eps_v),
            fmt(r.eps_i),
            r.stats.accepted_steps.to_string(),
            r.stats.failed_steps.to_string(),
            r.stats.lu_factorizations.to_string(),
            r.stats.linear_solves.to_string(),
        ])
        .map_err(csv_error(path))?;
    }
    w.flush().map_err(io_error(path))
}

/// Pretty-printed JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    writeln!(w).map_err(io_error(path))?;
    w.flush().map_err(io_error(path))
}
