//! `tagauth simulate`: one experiment from a config file.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tagauth_core::simlab::{run_detection_experiment, ExperimentReport, ExperimentSpec};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::report::{detection_csv, to_json, write_file};
use crate::svg::{Plot, Series};

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a RunConfig,
    spec: &'a ExperimentSpec,
    report: &'a ExperimentReport,
}

pub fn run(config: &Path, out_dir: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(d) = out_dir {
        cfg.output.dir = d.to_path_buf();
    }
    let spec = cfg.to_spec()?;
    let report = run_detection_experiment(&spec)?;
    for p in report.points.iter().filter(|p| p.error.is_some()) {
        eprintln!("{} dB: {}", p.grid.snr_bob_db, p.error.as_deref().unwrap_or_default());
    }
    let stem = cfg.stem();
    let dir = &cfg.output.dir;
    let mut files = vec![
        write_file(dir, &format!("{stem}.csv"), &detection_csv(&report)?)?,
        write_file(
            dir,
            &format!("{stem}.json"),
            &to_json(&Sidecar {
                config: &cfg,
                spec: &spec,
                report: &report,
            }),
        )?,
    ];
    if cfg.output.svg {
        let mut plot = Plot::new(spec.scheme.name(), "SNR at Bob (dB)", "probability").with_y_range(0.0, 1.0);
        let pts = |f: &dyn Fn(&tagauth_core::simlab::PointReport) -> Option<f64>| -> Vec<(f64, f64)> {
            report
                .points
                .iter()
                .filter_map(|p| f(p).map(|v| (p.grid.snr_bob_db, v)))
                .collect()
        };
        plot.push(Series::new("P_D", pts(&|p| p.error.is_none().then_some(p.pd.estimate))));
        plot.push(Series::new("P_FA", pts(&|p| p.error.is_none().then_some(p.pfa.estimate))));
        plot.push(Series::new("P_D theory", pts(&|p| p.pd_theory)).dashed());
        files.push(write_file(dir, &format!("{stem}.svg"), &plot.render())?);
    }
    Ok(files)
}
