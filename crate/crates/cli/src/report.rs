//! CSV and JSON emission.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tagauth_core::simlab::ExperimentReport;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 12] = [
    "snr_db",
    "threshold",
    "pfa_emp",
    "pfa_lo",
    "pfa_hi",
    "pd_emp",
    "pd_lo",
    "pd_hi",
    "pfa_theory",
    "pd_theory",
    "trials",
    "seed",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per grid point; points whose threshold failed keep empty numeric cells.
pub fn detection_csv(report: &ExperimentReport) -> CliResult<String> {
    let rows = report.points.iter().map(|p| {
        let ok = p.error.is_none();
        let num = |v: f64| if ok { v.to_string() } else { String::new() };
        vec![
            p.grid.snr_bob_db.to_string(),
            num(p.threshold),
            num(p.pfa.estimate),
            num(p.pfa.lo),
            num(p.pfa.hi),
            num(p.pd.estimate),
            num(p.pd.lo),
            num(p.pd.hi),
            opt(p.pfa_theory.filter(|_| ok)),
            opt(p.pd_theory.filter(|_| ok)),
            report.trials.to_string(),
            report.seed.to_string(),
        ]
    });
    table_csv(&CSV_HEADER, rows)
}

pub fn table_csv<I, R, S>(header: &[&str], rows: I) -> CliResult<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// Writes `text` under `dir`, creating the directory, and returns the path.
pub fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
