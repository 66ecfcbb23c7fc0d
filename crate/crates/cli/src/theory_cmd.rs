//! `tagauth theory`: closed-form values on standard output.

use clap::{Args, ValueEnum};
use serde::Serialize;
use tagauth_core::schemes::Scheme;
use tagauth_core::theory::{self, CostParams, EveCase, GcqConfig, RbeParams};
use tagauth_core::SchemeParams;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// SUP with error-free decoding.
    Sup,
    Tbcr,
    Sca,
    IdealTbcr,
    EveNearAlice,
    EveNearBob,
    EveSca,
    Equivocation,
    Rbe,
    Delay,
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Pfa,
    Pd,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Sup,
    Btp,
    Tbcr,
    Sca,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Sup => Scheme::Sup,
            SchemeArg::Btp => Scheme::Btp,
            SchemeArg::Tbcr => Scheme::Tbcr,
            SchemeArg::Sca => Scheme::Sca,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    pub target: Target,
    /// Required for detection targets.
    pub quantity: Option<Quantity>,
    /// Threshold; `L` stands for the tag length.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Target false-alarm probability for `threshold`.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub l: usize,
    #[arg(long = "rho-t2", default_value_t = 0.1)]
    pub rho_t2: f64,
    /// Bob's SNR; also the link SNR for `rbe`.
    #[arg(long = "snr-db", default_value_t = 0.0, allow_hyphen_values = true)]
    pub snr_db: f64,
    #[arg(long = "alice-snr-db", default_value_t = 5.0, allow_hyphen_values = true)]
    pub alice_snr_db: f64,
    /// Defaults to Bob's SNR.
    #[arg(long = "eve-snr-db", allow_hyphen_values = true)]
    pub eve_snr_db: Option<f64>,
    /// Normalized CSI error applied through variance substitution.
    #[arg(long = "eta-e2", default_value_t = 0.0)]
    pub eta_e2: f64,
    #[arg(long, default_value_t = theory::DEFAULT_GCQ_NODES)]
    pub nodes: usize,
    /// Scheme for equivocation, rbe, delay and energy.
    #[arg(long)]
    pub scheme: Option<SchemeArg>,
    /// Frames per tag.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 32)]
    pub l1: usize,
    #[arg(long, default_value_t = 32)]
    pub l2: usize,
    #[arg(long, default_value_t = 64)]
    pub l3: usize,
    #[arg(long = "z-s", default_value_t = 1.0)]
    pub z_s: f64,
    #[arg(long = "z-p", default_value_t = 0.0)]
    pub z_p: f64,
    #[arg(long = "e-frame", default_value_t = 1.0)]
    pub e_frame: f64,
    /// Report rbe, delay or energy relative to SUP.
    #[arg(long)]
    pub ratio: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
struct TheoryOutput {
    target: Target,
    #[serde(skip_serializing_if = "Option::is_none")]
    quantity: Option<Quantity>,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<SchemeParams>,
}

/// `%.12g`-style formatting.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, v);
        let (m, e) = s.split_once('e').expect("exponent form");
        let m = if m.contains('.') {
            m.trim_end_matches('0').trim_end_matches('.')
        } else {
            m
        };
        return format!("{m}e{e}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl TheoryArgs {
    fn scheme_or(&self, default: Option<SchemeArg>) -> CliResult<Scheme> {
        self.scheme
            .or(default)
            .map(Scheme::from)
            .ok_or_else(|| CliError::Usage(format!("{:?} needs --scheme", self.target)))
    }

    fn params(&self, scheme: Scheme) -> CliResult<SchemeParams> {
        let eve = self.eve_snr_db.unwrap_or(self.snr_db);
        let p = SchemeParams::for_scheme(scheme, self.l, self.rho_t2).with_snr_db(self.snr_db, self.alice_snr_db, eve);
        p.validate()?;
        if self.eta_e2 > 0.0 {
            return Ok(theory::nonideal_substitution(&p, self.eta_e2, scheme)?);
        }
        Ok(p)
    }

    fn gamma(&self) -> CliResult<f64> {
        let g = self
            .gamma
            .as_deref()
            .ok_or_else(|| CliError::Usage("--gamma is required".into()))?;
        if g == "L" {
            return Ok(self.l as f64);
        }
        g.parse()
            .map_err(|_| CliError::Usage(format!("--gamma expects a number or L, got `{g}`")))
    }

    fn eps(&self) -> CliResult<f64> {
        self.eps
            .ok_or_else(|| CliError::Usage("--eps is required for threshold".into()))
    }

    fn rbe_params(&self) -> RbeParams {
        RbeParams {
            l1: self.l1,
            l2: self.l2,
            l3: self.l3,
            n_frames: self.n,
            snr_linear: 10f64.powf(self.snr_db / 10.0),
            ..RbeParams::standard()
        }
    }

    fn detection(&self, q: Quantity, p: &SchemeParams) -> CliResult<f64> {
        let cfg = GcqConfig::new(self.nodes)?;
        let eve = |case: EveCase| -> CliResult<f64> {
            Ok(match q {
                Quantity::Pfa => theory::eve_pfa(case, self.gamma()?, p),
                Quantity::Pd => theory::eve_pd(case, self.gamma()?, p),
                Quantity::Threshold => theory::eve_threshold(case, self.eps()?, p)?,
            })
        };
        Ok(match (self.target, q) {
            (Target::Sup, Quantity::Pfa) => theory::ideal_pfa(self.gamma()?, p),
            (Target::Sup, Quantity::Pd) => theory::ideal_pd(self.gamma()?, p),
            (Target::Sup, Quantity::Threshold) => {
                let e = self.eps()?;
                if !(e > 0.0 && e < 0.5) {
                    return Err(CliError::Usage("--eps must lie in (0, 0.5)".into()));
                }
                theory::ideal_threshold(e, p)
            }
            (Target::Sca, Quantity::Pfa) => theory::pfa_sca(self.gamma()?, p),
            (Target::Sca, Quantity::Pd) => theory::pd_sca(self.gamma()?, p),
            (Target::Sca, Quantity::Threshold) => theory::threshold_sca(self.eps()?, p)?,
            (Target::IdealTbcr, Quantity::Pfa) => theory::ideal_tbcr_pfa(self.gamma()?, p),
            (Target::IdealTbcr, Quantity::Pd) => theory::ideal_tbcr_pd(self.gamma()?, p),
            (Target::IdealTbcr, Quantity::Threshold) => theory::ideal_tbcr_threshold(self.eps()?, p)?,
            (Target::Tbcr, Quantity::Pfa) => theory::pfa_tbcr(self.gamma()?, p, &cfg)?,
            (Target::Tbcr, Quantity::Pd) => theory::pd_tbcr(self.gamma()?, p, &cfg)?,
            (Target::Tbcr, Quantity::Threshold) => theory::threshold_tbcr(self.eps()?, p, &cfg)?,
            (Target::EveNearAlice, _) => eve(EveCase::TbcrNearAlice)?,
            (Target::EveNearBob, _) => eve(EveCase::TbcrNearBob)?,
            (Target::EveSca, _) => eve(EveCase::Sca)?,
            _ => unreachable!("non-detection targets handled by the caller"),
        })
    }

    fn evaluate(&self) -> CliResult<TheoryOutput> {
        let out = |value, params| TheoryOutput {
            target: self.target,
            quantity: self.quantity,
            value,
            params,
        };
        let costs = CostParams {
            z_s: self.z_s,
            z_p: self.z_p,
            e_frame: self.e_frame,
        };
        match self.target {
            Target::Equivocation => {
                let s = self.scheme_or(None)?;
                let p = self.params(s)?;
                Ok(out(theory::key_equivocation(s, &p)?.bits, Some(p)))
            }
            Target::Rbe => {
                let s = self.scheme_or(None)?;
                let p = self.params(s)?;
                let r = self.rbe_params();
                let v = if self.ratio {
                    theory::rbe_ratio(s, &r, &p)?
                } else {
                    theory::rbe(s, &r, &p)?
                };
                Ok(out(v, None))
            }
            Target::Delay | Target::Energy => {
                let s = self.scheme_or(None)?;
                let r = self.rbe_params();
                let f = if self.target == Target::Delay {
                    theory::auth_delay
                } else {
                    theory::auth_energy
                };
                let mut v = f(s, &r, &costs)?;
                if self.ratio {
                    v /= f(Scheme::Sup, &r, &costs)?;
                }
                Ok(out(v, None))
            }
            _ => {
                let q = self
                    .quantity
                    .ok_or_else(|| CliError::Usage("detection targets need pfa, pd or threshold".into()))?;
                let scheme = match self.target {
                    Target::Tbcr | Target::IdealTbcr | Target::EveNearAlice | Target::EveNearBob => Scheme::Tbcr,
                    _ => Scheme::Sca,
                };
                let p = self.params(scheme)?;
                Ok(out(self.detection(q, &p)?, Some(p)))
            }
        }
    }
}

pub fn run(args: &TheoryArgs) -> CliResult<String> {
    let o = args.evaluate()?;
    Ok(if args.json {
        serde_json::to_string(&o).expect("theory output serializes")
    } else {
        format_sig(o.value, 12)
    })
}
