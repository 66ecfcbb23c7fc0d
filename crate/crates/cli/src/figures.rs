//! Pre-baked figure experiments for `tagauth reproduce`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use tagauth_core::adversary::EveMode;
use tagauth_core::schemes::Scheme;
use tagauth_core::simlab::{
    bob_grid, crossing, performance_gap_experiment, roc_curve, run_detection_experiment, security_experiment, ErrorModel,
    ExperimentReport, ExperimentSpec, GridPoint, SchemeKind, SecurityPoint,
};
use tagauth_core::theory::{self, CostParams, RbeParams};
use tagauth_core::SchemeParams;

use crate::config::linspace;
use crate::error::CliResult;
use crate::report::{detection_csv, table_csv, to_json, write_file};
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig10,
    Fig11,
    Fig12,
    Rbe,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
            Figure::Fig10 => "fig10",
            Figure::Fig11 => "fig11",
            Figure::Fig12 => "fig12",
            Figure::Rbe => "rbe",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReproduceArgs {
    pub figure: Figure,
    /// Monte Carlo trials per hypothesis and grid point.
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
    /// Assert the acceptance tolerances; exit code 4 on failure.
    #[arg(long)]
    pub check: bool,
    #[arg(long = "no-svg")]
    pub no_svg: bool,
    /// Tag power for fig4; both 0.01 and 0.1 when absent.
    #[arg(long = "rho-t2")]
    pub rho_t2: Option<f64>,
    /// Bob's SNR for fig7.
    #[arg(long = "bob-snr-db", default_value_t = 14.0, allow_hyphen_values = true)]
    pub bob_snr_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct FigureRun {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    pub checks: Vec<Check>,
}

struct Ctx<'a> {
    args: &'a ReproduceArgs,
    run: FigureRun,
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    figure: &'static str,
    args: &'a ReproduceArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<&'a ExperimentSpec>,
    result: &'a T,
}

fn three_sigma(p: f64, m: usize) -> f64 {
    3.0 * (p * (1.0 - p) / m.max(1) as f64).sqrt()
}

fn pd_points(r: &ExperimentReport) -> Vec<(f64, f64)> {
    r.points
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| (p.grid.snr_bob_db, p.pd.estimate))
        .collect()
}

fn pd_theory_points(r: &ExperimentReport) -> Vec<(f64, f64)> {
    r.points
        .iter()
        .filter_map(|p| p.pd_theory.map(|t| (p.grid.snr_bob_db, t)))
        .collect()
}

fn cross_at(points: &[(f64, f64)], level: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    crossing(&xs, &ys, level)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "none".into())
}

impl<'a> Ctx<'a> {
    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = write_file(&self.args.out_dir, name, text)?;
        self.run.files.push(path);
        Ok(())
    }

    fn sidecar<T: Serialize>(&mut self, name: &str, spec: Option<&ExperimentSpec>, result: &T) -> CliResult<()> {
        let doc = Sidecar {
            figure: self.args.figure.id(),
            args: self.args,
            spec,
            result,
        };
        self.write(name, &to_json(&doc))
    }

    fn plot(&mut self, name: &str, plot: &Plot) -> CliResult<()> {
        if self.args.no_svg {
            return Ok(());
        }
        self.write(name, &plot.render())
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.run.checks.push(Check {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    fn note(&mut self, line: String) {
        self.run.summary.push(line);
    }

    /// Runs one detection experiment and writes `<stem>.csv` plus its JSON sidecar.
    fn detection(&mut self, stem: &str, spec: ExperimentSpec) -> CliResult<ExperimentReport> {
        let r = run_detection_experiment(&spec)?;
        self.write(&format!("{stem}.csv"), &detection_csv(&r)?)?;
        self.sidecar(&format!("{stem}.json"), Some(&spec), &r)?;
        for p in r.points.iter().filter(|p| p.error.is_some()) {
            self.note(format!(
                "{stem}: {} dB: {}",
                p.grid.snr_bob_db,
                p.error.as_deref().unwrap_or_default()
            ));
        }
        Ok(r)
    }

    fn spec(&self, kind: SchemeKind, p: SchemeParams, grid: Vec<GridPoint>) -> ExperimentSpec {
        ExperimentSpec::new(kind, p, grid, self.args.trials, self.args.seed)
    }
}

fn sca(l: usize, rt: f64) -> SchemeParams {
    SchemeParams::sup_sca(l, rt)
}

fn tbcr(l: usize, rt: f64) -> SchemeParams {
    SchemeParams::tbcr(l, rt, 1.0)
}

fn fig4(c: &mut Ctx) -> CliResult<()> {
    let rhos = c.args.rho_t2.map(|r| vec![r]).unwrap_or_else(|| vec![0.01, 0.1]);
    let grid = bob_grid(0.0, 30.0, 31, 0.0, 0.0);
    let mut plot = Plot::new("SUP: genie vs SCL decoding", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    let mut gaps = Vec::new();
    for rt in rhos {
        let g = performance_gap_experiment(rt, &grid, c.args.trials, c.args.seed)?;
        for (label, r) in [("sup_ideal", &g.ideal), ("sup_practical", &g.practical)] {
            let stem = format!("fig4_rho{rt}_{label}");
            c.write(&format!("{stem}.csv"), &detection_csv(r)?)?;
            plot.push(Series::new(format!("{label} rho_t^2={rt}"), pd_points(r)));
        }
        plot.push(Series::new(format!("theory rho_t^2={rt}"), pd_theory_points(&g.ideal)).dashed());
        c.note(format!("rho_t^2={rt}: gap {} dB at P_D=0.9", fmt_opt(g.gap_db)));
        let target = if (rt - 0.01).abs() < 1e-12 {
            Some(2.5)
        } else if (rt - 0.1).abs() < 1e-12 {
            Some(5.0)
        } else {
            None
        };
        if let Some(t) = target {
            let pass = g.gap_db.is_some_and(|d| (d - t).abs() <= 1.0);
            c.check(
                &format!("gap rho_t^2={rt}"),
                pass,
                format!("{} dB, target {t} +- 1", fmt_opt(g.gap_db)),
            );
        }
        gaps.push((rt, g.gap_db, g.ideal_db, g.practical_db));
    }
    c.sidecar("fig4.json", None, &gaps)?;
    c.plot("fig4.svg", &plot)
}

fn fig5(c: &mut Ctx) -> CliResult<()> {
    let grid = bob_grid(0.0, 10.0, 11, 5.0, 0.0);
    let mut plot = Plot::new("P_D vs SNR at Bob, Alice 5 dB", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    let runs = [
        (SchemeKind::Sca, sca(64, 0.1)),
        (SchemeKind::Tbcr, tbcr(64, 0.1)),
        (SchemeKind::SupIdeal, sca(64, 0.1)),
        (SchemeKind::SupPractical, sca(64, 0.1)),
        (SchemeKind::Btp, sca(64, 0.1)),
    ];
    for (kind, p) in runs {
        let r = c.detection(&format!("fig5_{}", kind.name()), c.spec(kind, p, grid.clone()))?;
        plot.push(Series::new(kind.name(), pd_points(&r)));
        if matches!(kind, SchemeKind::Sca | SchemeKind::Tbcr) {
            plot.push(Series::new(format!("{} theory", kind.name()), pd_theory_points(&r)).dashed());
            let (mut ok, mut total) = (0, 0);
            for q in &r.points {
                for (prop, th) in [(&q.pfa, q.pfa_theory), (&q.pd, q.pd_theory)] {
                    total += 1;
                    ok += usize::from(th.is_some_and(|t| prop.within_3_sigma(t)));
                }
            }
            c.check(
                &format!("{} theory agreement", kind.name()),
                ok as f64 >= 0.95 * total as f64,
                format!("{ok}/{total} within 3 sigma"),
            );
        }
    }
    c.plot("fig5.svg", &plot)
}

fn fig6(c: &mut Ctx) -> CliResult<()> {
    let mut rows = Vec::new();
    let mut aucs = Vec::new();
    for snr in [5.0, 7.0] {
        let mut plot = Plot::new(format!("ROC at {snr} dB, Alice 10 dB"), "P_FA", "P_D").with_y_range(0.0, 1.0);
        for (kind, p) in [
            (SchemeKind::Sca, sca(64, 0.01)),
            (SchemeKind::Tbcr, tbcr(64, 0.01)),
            (SchemeKind::SupPractical, sca(64, 0.01)),
        ] {
            let roc = roc_curve(kind, &p, GridPoint::new(snr, 10.0, 0.0), c.args.trials, c.args.seed, 101)?;
            for &(f, d) in &roc.points {
                rows.push(vec![snr.to_string(), kind.name().to_string(), f.to_string(), d.to_string()]);
            }
            plot.push(Series::new(format!("{} AUC {:.3}", kind.name(), roc.auc), roc.points.clone()));
            aucs.push((snr, kind, roc.auc));
        }
        c.plot(&format!("fig6_{snr}db.svg"), &plot)?;
    }
    c.write("fig6_roc.csv", &table_csv(&["snr_db", "scheme", "pfa", "pd"], rows)?)?;
    let auc_rows = aucs
        .iter()
        .map(|(s, k, a)| vec![s.to_string(), k.name().to_string(), a.to_string()]);
    c.write("fig6_auc.csv", &table_csv(&["snr_db", "scheme", "auc"], auc_rows)?)?;
    c.sidecar("fig6.json", None, &aucs)?;
    let at = |snr: f64, k: SchemeKind| aucs.iter().find(|a| a.0 == snr && a.1 == k).map(|a| a.2).unwrap_or(f64::NAN);
    let (s, t, u) = (
        at(5.0, SchemeKind::Sca),
        at(5.0, SchemeKind::Tbcr),
        at(5.0, SchemeKind::SupPractical),
    );
    c.check(
        "AUC ordering at 5 dB",
        s >= t && t >= u,
        format!("sca {s:.4}, tbcr {t:.4}, sup_practical {u:.4}"),
    );
    let grows = [SchemeKind::Sca, SchemeKind::Tbcr, SchemeKind::SupPractical]
        .iter()
        .all(|&k| at(7.0, k) > at(5.0, k));
    c.check("AUC grows from 5 to 7 dB", grows, String::new());
    Ok(())
}

fn fig7(c: &mut Ctx) -> CliResult<()> {
    let alice: Vec<f64> = (-10..=20).map(f64::from).collect();
    let bob = c.args.bob_snr_db;
    let r = tagauth_core::simlab::crossover_experiment(&alice, bob, c.args.trials, c.args.seed)?;
    let rows = (0..alice.len()).map(|i| {
        vec![
            alice[i].to_string(),
            r.tbcr_pd[i].to_string(),
            r.sca_pd[i].to_string(),
            r.sup_practical_pd.to_string(),
        ]
    });
    c.write(
        "fig7.csv",
        &table_csv(&["alice_snr_db", "tbcr_pd", "sca_pd", "sup_practical_pd"], rows)?,
    )?;
    c.sidecar("fig7.json", None, &r)?;
    let mut plot = Plot::new(format!("TBCR vs SNR at Alice, Bob {bob} dB"), "SNR at Alice (dB)", "P_D");
    plot.push(Series::new(
        "tbcr",
        alice.iter().copied().zip(r.tbcr_pd.iter().copied()).collect(),
    ));
    plot.push(Series::new("sca", alice.iter().map(|&a| (a, r.sca_pd[0])).collect()).dashed());
    plot.push(Series::new("sup_practical", alice.iter().map(|&a| (a, r.sup_practical_pd)).collect()).dashed());
    c.plot("fig7.svg", &plot)?;
    let cross_ok = r.crossover_db.is_some_and(|x| (x - 2.0).abs() <= 1.5);
    c.check(
        "crossover",
        cross_ok,
        format!("{} dB, target 2 +- 1.5", fmt_opt(r.crossover_db)),
    );
    let i20 = alice.iter().position(|&a| a == 20.0).expect("grid holds 20 dB");
    let d = (r.tbcr_pd[i20] - r.sca_pd[i20]).abs();
    c.check("TBCR meets SCA at Alice 20 dB", d <= 0.01, format!("|diff| {d:.4}"));
    Ok(())
}

fn fig8(c: &mut Ctx) -> CliResult<()> {
    let grid = bob_grid(-6.0, 14.0, 21, 3.0, 0.0);
    let mut plot_l = Plot::new("Signal length, Alice 3 dB", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    let mut sca_x80 = Vec::new();
    for l in [32usize, 64, 128] {
        for (kind, p) in [(SchemeKind::Sca, sca(l, 0.1)), (SchemeKind::Tbcr, tbcr(l, 0.1))] {
            let r = c.detection(&format!("fig8a_{}_l{l}", kind.name()), c.spec(kind, p, grid.clone()))?;
            let pts = pd_points(&r);
            let x80 = cross_at(&pts, 0.8);
            c.note(format!("{} L={l}: P_D=0.8 at {} dB", kind.name(), fmt_opt(x80)));
            if kind == SchemeKind::Sca {
                sca_x80.push(x80);
            }
            plot_l.push(Series::new(format!("{} L={l}", kind.name()), pts));
        }
    }
    c.plot("fig8a.svg", &plot_l)?;
    for w in sca_x80.windows(2) {
        let shift = w[0].zip(w[1]).map(|(a, b)| a - b);
        c.check(
            "SCA length doubling shift",
            shift.is_some_and(|s| (s - 3.0).abs() <= 0.5),
            format!("{} dB, target 3 +- 0.5", fmt_opt(shift)),
        );
    }
    let mut plot_r = Plot::new("Tag power, Alice 3 dB", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    for rt in [0.01, 0.05, 0.1, 0.2] {
        for (kind, p) in [(SchemeKind::Sca, sca(64, rt)), (SchemeKind::Tbcr, tbcr(64, rt))] {
            let r = c.detection(&format!("fig8b_{}_rho{rt}", kind.name()), c.spec(kind, p, grid.clone()))?;
            plot_r.push(Series::new(format!("{} rho_t^2={rt}", kind.name()), pd_points(&r)));
        }
    }
    c.plot("fig8b.svg", &plot_r)
}

fn fig10(c: &mut Ctx) -> CliResult<()> {
    let grid = bob_grid(0.0, 10.0, 11, 10.0, 0.0);
    let mut plot_a = Plot::new("Channel estimation error, Alice 10 dB", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    for eta in [0.0, 0.01, 0.05, 0.1, 0.2] {
        for (kind, p) in [(SchemeKind::Sca, sca(64, 0.1)), (SchemeKind::Tbcr, tbcr(64, 0.1))] {
            let mut spec = c.spec(kind, p, grid.clone());
            spec.error_model.eta_e_sq = eta;
            let r = c.detection(&format!("fig10a_{}_eta{eta}", kind.name()), spec)?;
            plot_a.push(Series::new(format!("{} eta^2={eta}", kind.name()), pd_points(&r)));
        }
    }
    c.plot("fig10a.svg", &plot_a)?;
    let mut plot_b = Plot::new("Synchronization offset, Alice 10 dB", "SNR at Bob (dB)", "P_D").with_y_range(0.0, 1.0);
    let offsets = [0.0, 0.125, 0.25, 0.375, 0.5];
    let at10 = grid.iter().position(|g| g.snr_bob_db == 10.0).expect("grid holds 10 dB");
    for (kind, p) in [(SchemeKind::Sca, sca(64, 0.1)), (SchemeKind::Tbcr, tbcr(64, 0.1))] {
        let mut pds = Vec::new();
        for off in offsets {
            let mut spec = c.spec(kind, p, grid.clone());
            spec.error_model = ErrorModel {
                sync_offset_frac: off,
                ..ErrorModel::default()
            };
            let r = c.detection(&format!("fig10b_{}_off{off}", kind.name()), spec)?;
            pds.push(r.points[at10].pd.estimate);
            plot_b.push(Series::new(format!("{} offset {off}", kind.name()), pd_points(&r)));
        }
        let m = c.args.trials;
        let monotone = pds
            .windows(2)
            .all(|w| w[1] <= w[0] + three_sigma(w[0], m) * std::f64::consts::SQRT_2);
        c.check(
            &format!("{} P_D non-increasing in offset", kind.name()),
            monotone,
            format!("{pds:.4?} at 10 dB"),
        );
        let drop = offsets
            .iter()
            .zip(&pds)
            .filter(|(o, _)| **o < 0.25)
            .map(|(_, p)| pds[0] - p)
            .fold(0.0, f64::max);
        c.check(
            &format!("{} small-offset drop", kind.name()),
            drop < 0.10,
            format!("{:.1} pp below 1/4 symbol", drop * 100.0),
        );
    }
    c.plot("fig10b.svg", &plot_b)
}

#[derive(Serialize)]
struct SecurityCurve {
    label: &'static str,
    points: Vec<SecurityPoint>,
    bob_pd_with_errors: Vec<f64>,
}

fn fig11(c: &mut Ctx) -> CliResult<()> {
    let snrs: Vec<f64> = (0..=10).map(f64::from).collect();
    let m = c.args.trials;
    let mut curves = Vec::new();
    let errors = ErrorModel {
        eta_e_sq: 0.05,
        sync_offset_frac: 0.125,
        ..ErrorModel::default()
    };
    let mut rows = Vec::new();
    for (kind, mode, p, label) in [
        (SchemeKind::Tbcr, EveMode::NearAlice, tbcr(64, 0.1), "tbcr_near_alice"),
        (SchemeKind::Tbcr, EveMode::NearBob, tbcr(64, 0.1), "tbcr_near_bob"),
        (SchemeKind::Sca, EveMode::NearAlice, sca(64, 0.1), "sca"),
    ] {
        let pts = security_experiment(kind, mode, &p, &snrs, 10.0, 0.01, m, c.args.seed)?;
        let grid: Vec<GridPoint> = snrs.iter().map(|&s| GridPoint::new(s, 10.0, s)).collect();
        let mut spec = c.spec(kind, p, grid);
        spec.error_model = errors;
        let with_err: Vec<f64> = run_detection_experiment(&spec)?
            .points
            .iter()
            .map(|q| q.pd.estimate)
            .collect();
        for (s, e) in pts.iter().zip(&with_err) {
            rows.push(vec![
                label.to_string(),
                s.snr_db.to_string(),
                s.bob_pd.estimate.to_string(),
                e.to_string(),
                s.eve_pfa.estimate.to_string(),
                s.eve_pd.estimate.to_string(),
                s.eve_pd_bound.to_string(),
                s.eve_threshold.to_string(),
            ]);
        }
        let ordered = pts.iter().filter(|s| s.bob_pd.estimate > s.eve_pd.estimate).count();
        c.check(
            &format!("{label} Bob above Eve"),
            ordered == pts.len(),
            format!("{ordered}/{}", pts.len()),
        );
        let regime: Vec<_> = pts.iter().filter(|s| s.eve_pd.estimate > 0.5).collect();
        let bounded = regime
            .iter()
            .filter(|s| s.eve_pd.estimate <= s.eve_pd_bound + three_sigma(s.eve_pd_bound, m))
            .count();
        c.check(
            &format!("{label} Eve bound"),
            bounded == regime.len(),
            format!("{bounded}/{} points with Eve P_D > 0.5", regime.len()),
        );
        curves.push(SecurityCurve {
            label,
            points: pts,
            bob_pd_with_errors: with_err,
        });
    }
    let header = [
        "case",
        "snr_db",
        "bob_pd",
        "bob_pd_errors",
        "eve_pfa",
        "eve_pd",
        "eve_pd_bound",
        "eve_threshold",
    ];
    c.write("fig11.csv", &table_csv(&header, rows)?)?;
    c.sidecar("fig11.json", None, &curves)?;
    let mut plot = Plot::new("Bob vs Eve at equal SNR, Alice 10 dB", "SNR (dB)", "P_D").with_y_range(0.0, 1.0);
    for cv in &curves {
        plot.push(Series::new(
            format!("Bob {}", cv.label),
            cv.points.iter().map(|s| (s.snr_db, s.bob_pd.estimate)).collect(),
        ));
        plot.push(Series::new(
            format!("Eve {}", cv.label),
            cv.points.iter().map(|s| (s.snr_db, s.eve_pd.estimate)).collect(),
        ));
        plot.push(
            Series::new(
                format!("bound {}", cv.label),
                cv.points.iter().map(|s| (s.snr_db, s.eve_pd_bound)).collect(),
            )
            .dashed(),
        );
    }
    c.plot("fig11.svg", &plot)
}

fn fig12(c: &mut Ctx) -> CliResult<()> {
    let eve: Vec<f64> = (-10..=30).map(f64::from).collect();
    let mut rows = Vec::new();
    let mut plot = Plot::new("Key equivocation, Alice 30 dB", "SNR at Eve (dB)", "bits per symbol").with_y_range(0.0, 1.0);
    let mut all_ok = true;
    let mut curves = Vec::new();
    for scheme in [Scheme::Tbcr, Scheme::Sca, Scheme::Sup, Scheme::Btp] {
        let mut by_rho = Vec::new();
        for rt in [0.01, 0.1] {
            let mut bits = Vec::new();
            for &e in &eve {
                let p = SchemeParams::for_scheme(scheme, 64, rt).with_snr_db(0.0, 30.0, e);
                let k = theory::key_equivocation(scheme, &p)?;
                rows.push(vec![
                    format!("{scheme:?}").to_lowercase(),
                    rt.to_string(),
                    e.to_string(),
                    k.mean_tnr.to_string(),
                    k.p_e.to_string(),
                    k.bits.to_string(),
                ]);
                bits.push(k.bits);
            }
            all_ok &= bits.windows(2).all(|w| w[1] < w[0]);
            plot.push(Series::new(
                format!("{scheme:?} rho_t^2={rt}"),
                eve.iter().copied().zip(bits.iter().copied()).collect(),
            ));
            by_rho.push(bits);
        }
        all_ok &= by_rho[0].iter().zip(&by_rho[1]).all(|(a, b)| a > b);
        curves.push((scheme, by_rho));
    }
    c.write(
        "fig12.csv",
        &table_csv(&["scheme", "rho_t_sq", "eve_snr_db", "mean_tnr", "p_e", "bits"], rows)?,
    )?;
    c.sidecar("fig12.json", None, &curves)?;
    c.plot("fig12.svg", &plot)?;
    c.check(
        "equivocation orderings",
        all_ok,
        "decreasing in Eve SNR, rho_t^2=0.01 above 0.1".into(),
    );
    Ok(())
}

fn rbe(c: &mut Ctx) -> CliResult<()> {
    let p = sca(64, 0.1);
    let std = RbeParams::standard();
    let costs = CostParams {
        z_s: 1.0,
        z_p: 0.0,
        e_frame: 1.0,
    };
    let mut rows = Vec::new();
    let mut plot = Plot::new("RBE ratio to SUP", "SNR (dB)", "ratio");
    for n in [1usize, 10] {
        for scheme in [Scheme::Sup, Scheme::Tbcr, Scheme::Sca] {
            let mut pts = Vec::new();
            for snr in linspace(-10.0, 30.0, 41) {
                let r = RbeParams {
                    n_frames: n,
                    snr_linear: 10f64.powf(snr / 10.0),
                    ..std
                };
                let v = theory::rbe(scheme, &r, &p)?;
                let ratio = theory::rbe_ratio(scheme, &r, &p)?;
                rows.push(vec![
                    format!("{scheme:?}").to_lowercase(),
                    n.to_string(),
                    snr.to_string(),
                    v.to_string(),
                    ratio.to_string(),
                ]);
                pts.push((snr, ratio));
            }
            plot.push(Series::new(format!("{scheme:?} N={n}"), pts));
        }
    }
    c.write(
        "rbe_curves.csv",
        &table_csv(&["scheme", "n_frames", "snr_db", "rbe", "rbe_ratio"], rows)?,
    )?;
    c.plot("rbe.svg", &plot)?;
    let rt = theory::rbe_ratio(Scheme::Tbcr, &std, &p)?;
    let rs = theory::rbe_ratio(Scheme::Sca, &std, &p)?;
    let ratio = |f: fn(Scheme, &RbeParams, &CostParams) -> tagauth_core::Result<f64>, s| -> CliResult<f64> {
        Ok(f(s, &std, &costs)? / f(Scheme::Sup, &std, &costs)?)
    };
    let (dt, ds) = (
        ratio(theory::auth_delay, Scheme::Tbcr)?,
        ratio(theory::auth_delay, Scheme::Sca)?,
    );
    let (et, es) = (
        ratio(theory::auth_energy, Scheme::Tbcr)?,
        ratio(theory::auth_energy, Scheme::Sca)?,
    );
    let header = ["quantity", "tbcr", "sca"];
    let table = [
        ["rbe_ratio".to_string(), format!("{rt:.4}"), format!("{rs:.4}")],
        ["delay_ratio".to_string(), format!("{dt:.3}"), format!("{ds:.3}")],
        ["energy_ratio".to_string(), format!("{et:.3}"), format!("{es:.3}")],
    ];
    c.write("rbe.csv", &table_csv(&header, table)?)?;
    c.sidecar(
        "rbe.json",
        None,
        &[("rbe_ratio", rt, rs), ("delay_ratio", dt, ds), ("energy_ratio", et, es)],
    )?;
    c.note(format!("R_TBCR {rt:.4}  R_SCA {rs:.4}"));
    c.note(format!("delay ratio {dt:.3} / {ds:.3}, energy ratio {et:.3} / {es:.3}"));
    let r4 = |x: f64| format!("{x:.4}");
    let r3 = |x: f64| format!("{x:.3}");
    c.check(
        "RBE ratios",
        r4(rt) == "0.9722" && r4(rs) == "0.9677",
        format!("{rt:.4} / {rs:.4}"),
    );
    c.check(
        "delay and energy ratios",
        r3(dt) == "1.067" && r3(ds) == "1.033" && r3(et) == "1.067" && r3(es) == "1.033",
        format!("{dt:.3} {ds:.3} {et:.3} {es:.3}"),
    );
    Ok(())
}

pub fn run(args: &ReproduceArgs) -> CliResult<FigureRun> {
    let mut c = Ctx {
        args,
        run: FigureRun::default(),
    };
    match args.figure {
        Figure::Fig4 => fig4(&mut c)?,
        Figure::Fig5 => fig5(&mut c)?,
        Figure::Fig6 => fig6(&mut c)?,
        Figure::Fig7 => fig7(&mut c)?,
        Figure::Fig8 => fig8(&mut c)?,
        Figure::Fig10 => fig10(&mut c)?,
        Figure::Fig11 => fig11(&mut c)?,
        Figure::Fig12 => fig12(&mut c)?,
        Figure::Rbe => rbe(&mut c)?,
    }
    Ok(c.run)
}
