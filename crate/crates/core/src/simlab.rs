//! Monte Carlo harness: per-trial pipelines, calibration, sweeps, ROC and
//! timing-error injection.
//!
//! Every trial draws from its own stream `seed -> (point, hypothesis, trial)`,
//! so results do not depend on thread count or scheduling.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{eve_sca_statistic, eve_tbcr_observe, eve_tbcr_statistic, EveMode, EvePosition};
use crate::error::{param, Error, Result};
use crate::keytag::{gen_interleaver, gen_tag, InterleaverKey, Permutation, TagKey};
use crate::polarcodec::{PolarCodeConfig, DEFAULT_DESIGN_SNR_DB, DEFAULT_LIST_SIZE};
use crate::schemes::{
    btp_receive, sca_fold_tag, sca_series, sca_ssc, sca_statistic, sca_tag, sup_receive, sup_statistic, tbcr_statistic,
    Hypothesis, MessageCodec, Scheme, SchemeParams,
};
use crate::sigcore::{awgn, cscg, draw_rayleigh_block, ChannelDraw, ComplexVec, RngStream, StreamRng, C64};
use crate::theory::{self, EveCase, GcqConfig};

/// Pilot symbols feeding the tag generator.
pub const PILOT_LEN: usize = 32;
const MAX_RESAMPLES: u32 = 64;
const Z95: f64 = 1.959_963_984_540_054;

const KEY_PATH: u64 = u64::MAX;
const CALIBRATION_HYP: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// SUP with genie decoding `s_hat = s`.
    SupIdeal,
    SupPractical,
    Btp,
    Tbcr,
    Sca,
}

impl SchemeKind {
    pub fn scheme(self) -> Scheme {
        match self {
            SchemeKind::SupIdeal | SchemeKind::SupPractical => Scheme::Sup,
            SchemeKind::Btp => Scheme::Btp,
            SchemeKind::Tbcr => Scheme::Tbcr,
            SchemeKind::Sca => Scheme::Sca,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::SupIdeal => "sup_ideal",
            SchemeKind::SupPractical => "sup_practical",
            SchemeKind::Btp => "btp",
            SchemeKind::Tbcr => "tbcr",
            SchemeKind::Sca => "sca",
        }
    }

    fn needs_codec(self) -> bool {
        matches!(self, SchemeKind::SupPractical | SchemeKind::Btp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Theory,
    Empirical,
}

/// Composite raised-cosine response of a root-raised-cosine pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseShape {
    pub rolloff: f64,
    /// Span of each root-raised-cosine filter in symbols.
    pub span: usize,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self { rolloff: 0.25, span: 8 }
    }
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(param("rolloff", "must lie in [0, 1]"));
        }
        if self.span == 0 {
            return Err(param("span", "must be >= 1"));
        }
        Ok(())
    }

    /// Matched-filter output at `t` symbols from the pulse peak.
    pub fn response(&self, t: f64) -> f64 {
        if t.abs() > self.span as f64 {
            return 0.0;
        }
        let b = self.rolloff;
        let den = 1.0 - (2.0 * b * t).powi(2);
        if den.abs() < 1e-10 {
            return PI / 4.0 * sinc(1.0 / (2.0 * b));
        }
        sinc(t) * (PI * b * t).cos() / den
    }
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

/// Symbol-rate samples taken `offset_frac` of a symbol late after pulse
/// shaping at `oversample` times the symbol rate and matched filtering.
pub fn sync_error_pipeline(frame: &[C64], offset_frac: f64, oversample: usize, pulse: &PulseShape) -> Result<ComplexVec> {
    if !(0.0..=0.5).contains(&offset_frac) {
        return Err(param("sync_offset_frac", format!("must lie in [0, 0.5], got {offset_frac}")));
    }
    if oversample < 2 {
        return Err(param("oversample", "must be >= 2"));
    }
    pulse.validate()?;
    // The delay is realized on the oversampled grid.
    let tau = (offset_frac * oversample as f64).round() / oversample as f64;
    let reach = pulse.span as isize + 1;
    let n = frame.len() as isize;
    Ok((0..n)
        .map(|i| {
            let lo = (i - reach).max(0);
            let hi = (i + reach).min(n - 1);
            (lo..=hi)
                .map(|k| frame[k as usize] * pulse.response((i - k) as f64 - tau))
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModel {
    #[serde(default)]
    pub eta_e_sq: f64,
    #[serde(default)]
    pub sync_offset_frac: f64,
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    #[serde(default)]
    pub pulse: PulseShape,
}

fn default_oversample() -> usize {
    8
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self {
            eta_e_sq: 0.0,
            sync_offset_frac: 0.0,
            oversample: default_oversample(),
            pulse: PulseShape::default(),
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.eta_e_sq) {
            return Err(param("eta_e_sq", "must lie in [0, 1)"));
        }
        if !(0.0..=0.5).contains(&self.sync_offset_frac) {
            return Err(param("sync_offset_frac", "must lie in [0, 0.5]"));
        }
        if self.oversample < 2 {
            return Err(param("oversample", "must be >= 2"));
        }
        self.pulse.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    pub snr_bob_db: f64,
    pub snr_alice_db: f64,
    pub snr_eve_db: f64,
}

impl GridPoint {
    pub fn new(snr_bob_db: f64, snr_alice_db: f64, snr_eve_db: f64) -> Self {
        Self {
            snr_bob_db,
            snr_alice_db,
            snr_eve_db,
        }
    }

    pub fn params(&self, base: &SchemeParams) -> SchemeParams {
        base.with_snr_db(self.snr_bob_db, self.snr_alice_db, self.snr_eve_db)
    }
}

/// `n` evenly spaced Bob SNRs over `[lo, hi]`, Alice and Eve fixed.
pub fn bob_grid(lo: f64, hi: f64, n: usize, alice_db: f64, eve_db: f64) -> Vec<GridPoint> {
    (0..n)
        .map(|i| {
            let s = if n == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            };
            GridPoint::new(s, alice_db, eve_db)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scheme: SchemeKind,
    pub params: SchemeParams,
    pub grid: Vec<GridPoint>,
    pub trials: usize,
    pub target_pfa: f64,
    pub threshold_source: ThresholdSource,
    #[serde(default)]
    pub error_model: ErrorModel,
    pub seed: u64,
    /// Defaults to a rate-1/2 code of length `L` with list size 8.
    #[serde(default)]
    pub polar: Option<PolarCodeConfig>,
    #[serde(default)]
    pub gcq: GcqConfig,
    /// H0 trials for empirical thresholds; defaults to `trials`.
    #[serde(default)]
    pub calibration_trials: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(scheme: SchemeKind, params: SchemeParams, grid: Vec<GridPoint>, trials: usize, seed: u64) -> Self {
        Self {
            scheme,
            params,
            grid,
            trials,
            target_pfa: 0.01,
            threshold_source: if scheme == SchemeKind::Btp {
                ThresholdSource::Empirical
            } else {
                ThresholdSource::Theory
            },
            error_model: ErrorModel::default(),
            seed,
            polar: None,
            gcq: GcqConfig::default(),
            calibration_trials: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.error_model.validate()?;
        self.gcq.validate()?;
        if !(self.target_pfa > 0.0 && self.target_pfa < 1.0) {
            return Err(param("target_pfa", "must lie in (0, 1)"));
        }
        if let Some(c) = &self.polar {
            c.validate()?;
            if c.block_length != self.params.l {
                return Err(param("polar", "block length must equal the tag length L"));
            }
        }
        Ok(())
    }

    pub fn polar_config(&self) -> Result<PolarCodeConfig> {
        match &self.polar {
            Some(c) => Ok(c.clone()),
            None => default_code(self.params.l),
        }
    }
}

pub fn default_code(l: usize) -> Result<PolarCodeConfig> {
    PolarCodeConfig::construct(l, 0.5, DEFAULT_LIST_SIZE, DEFAULT_DESIGN_SNR_DB)
}

/// Binomial proportion with a 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Proportion {
    pub fn wilson(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self {
                successes,
                trials,
                estimate: 0.0,
                lo: 0.0,
                hi: 1.0,
            };
        }
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z95 * Z95;
        let den = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / den;
        let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
        Self {
            successes,
            trials,
            estimate: p,
            lo: (centre - half).max(0.0).min(p),
            hi: (centre + half).min(1.0).max(p),
        }
    }

    /// `3 sqrt(p (1 - p) / M)` around a reference probability.
    pub fn within_3_sigma(&self, reference: f64) -> bool {
        let m = self.trials as f64;
        (self.estimate - reference).abs() <= 3.0 * (reference * (1.0 - reference) / m).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub grid: GridPoint,
    pub threshold: f64,
    pub pfa: Proportion,
    pub pd: Proportion,
    pub pfa_theory: Option<f64>,
    pub pd_theory: Option<f64>,
    /// Channel draws rejected as singular and redrawn.
    pub resampled: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scheme: SchemeKind,
    pub seed: u64,
    pub trials: usize,
    pub target_pfa: f64,
    pub points: Vec<PointReport>,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

/// Equality ignores wall time.
impl PartialEq for ExperimentReport {
    fn eq(&self, other: &Self) -> bool {
        self.scheme == other.scheme
            && self.seed == other.seed
            && self.trials == other.trials
            && self.target_pfa == other.target_pfa
            && self.points == other.points
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0)))
    }
}

/// Keys and fixed per-experiment randomness.
#[derive(Debug, Clone)]
pub struct ExperimentKeys {
    pub tag: TagKey,
    pub interleaver: Permutation,
}

impl ExperimentKeys {
    pub fn derive(seed: u64, l: usize) -> Result<Self> {
        let mut rng = RngStream::new(seed, 0).derive(&[KEY_PATH]).rng();
        let mut tag = [0u8; 32];
        let mut il = [0u8; 32];
        rng.fill(&mut tag);
        rng.fill(&mut il);
        Ok(Self {
            tag: TagKey::from_bytes(&tag)?,
            interleaver: gen_interleaver(&InterleaverKey::from_bytes(&il)?, 2 * l)?,
        })
    }
}

/// Runs single trials of one scheme at one parameter point.
pub struct TrialEngine {
    kind: SchemeKind,
    params: SchemeParams,
    errors: ErrorModel,
    keys: ExperimentKeys,
    polar: PolarCodeConfig,
}

fn bpsk_vec(len: usize, rng: &mut StreamRng) -> ComplexVec {
    (0..len)
        .map(|_| C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

fn nonsingular(h: C64) -> bool {
    h.norm() >= crate::schemes::SINGULAR_CHANNEL
}

impl TrialEngine {
    pub fn new(kind: SchemeKind, params: SchemeParams, errors: ErrorModel, polar: PolarCodeConfig, seed: u64) -> Result<Self> {
        params.validate()?;
        errors.validate()?;
        if kind.needs_codec() && polar.block_length != params.l {
            return Err(param("polar", "block length must equal the tag length L"));
        }
        Ok(Self {
            kind,
            params,
            errors,
            keys: ExperimentKeys::derive(seed, params.l)?,
            polar,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    fn new_codec(&self) -> Option<MessageCodec> {
        if self.kind.needs_codec() {
            Some(MessageCodec::new(self.polar.clone()).expect("validated code"))
        } else {
            None
        }
    }

    /// Bob's channel: truth and receiver estimate with `h = h_est + delta_h`.
    fn draw_channel(&self, rng: &mut StreamRng) -> Result<ChannelDraw> {
        let s = self.params.sigma_h_sq;
        let eta = self.errors.eta_e_sq;
        if eta == 0.0 {
            return Ok(ChannelDraw::perfect(draw_rayleigh_block(s, rng)?, s));
        }
        let h_est = draw_rayleigh_block(s, rng)?;
        let delta_h = cscg(eta * s, rng);
        Ok(ChannelDraw {
            h_true: h_est + delta_h,
            h_est,
            delta_h,
            sigma_h_sq: s,
            eta_e_sq: eta,
        })
    }

    fn timing(&self, x: ComplexVec) -> Result<ComplexVec> {
        if self.errors.sync_offset_frac == 0.0 {
            return Ok(x);
        }
        sync_error_pipeline(&x, self.errors.sync_offset_frac, self.errors.oversample, &self.errors.pulse)
    }

    fn receive(&self, x: ComplexVec, h: C64, rng: &mut StreamRng) -> Result<ComplexVec> {
        let x = self.timing(x)?;
        let w = awgn(x.len(), self.params.sigma_b_sq, rng)?;
        Ok(x.iter().zip(w.iter()).map(|(&a, &b)| h * a + b).collect())
    }

    fn bob_once(&self, hyp: Hypothesis, rng: &mut StreamRng, codec: &mut Option<MessageCodec>) -> Result<f64> {
        let p = &self.params;
        let l = p.l;
        let ch = self.draw_channel(rng)?;
        if !nonsingular(ch.h_est) || !nonsingular(ch.h_true) {
            return Err(Error::SingularChannel(ch.h_est.norm().min(ch.h_true.norm())));
        }
        let (rs, rt) = (p.rho_s(), p.rho_t());
        let key = &self.keys.tag;
        match self.kind {
            SchemeKind::SupIdeal | SchemeKind::SupPractical | SchemeKind::Btp => {
                let k = self.polar.info_len();
                let info: Vec<u8> = (0..k).map(|_| rng.gen::<bool>() as u8).collect();
                let enc = MessageCodec::encode_with(&self.polar, &info)?;
                let x = match hyp {
                    Hypothesis::H1 => {
                        let t = gen_tag(&enc, key, l);
                        enc.iter().zip(t.iter()).map(|(&s, &t)| s * rs + t * rt).collect()
                    }
                    Hypothesis::H0 => enc.clone(),
                };
                let y = self.receive(x, ch.h_true, rng)?;
                match (self.kind, codec.as_mut()) {
                    (SchemeKind::SupIdeal, _) => {
                        let x_hat: ComplexVec = y.iter().map(|&v| v / ch.h_est).collect();
                        let t_hat = gen_tag(&enc, key, l);
                        sup_statistic(&x_hat, &enc, &t_hat, p)
                    }
                    (SchemeKind::SupPractical, Some(c)) => sup_receive(&y, ch.h_est, c, key, p),
                    (SchemeKind::Btp, Some(c)) => btp_receive(&y, ch.h_est, c, key, p),
                    _ => unreachable!("codec allocated for decode-based schemes"),
                }
            }
            SchemeKind::Tbcr => {
                let x_c = bpsk_vec(l, rng);
                let pilot = bpsk_vec(PILOT_LEN, rng);
                let t = gen_tag(&pilot, key, l);
                let w_a = awgn(l, p.sigma_a_sq, rng)?;
                let hc = ch.h_true.conj();
                let y_a: ComplexVec = x_c.iter().zip(w_a.iter()).map(|(&x, &w)| hc * x + w).collect();
                let x_r = match hyp {
                    Hypothesis::H1 => y_a.iter().zip(t.iter()).map(|(&y, &t)| y * rs + t * rt).collect(),
                    Hypothesis::H0 => y_a,
                };
                let y_b = self.receive(x_r, ch.h_true, rng)?;
                tbcr_statistic(&y_b, &x_c, ch.h_est, &t, p)
            }
            SchemeKind::Sca => {
                let perm = &self.keys.interleaver;
                let m = bpsk_vec(l, rng);
                let pilot = bpsk_vec(PILOT_LEN, rng);
                let t2 = sca_tag(&pilot, key, perm)?;
                let s = sca_series(&m, perm)?;
                let x = match hyp {
                    Hypothesis::H1 => s.iter().zip(t2.iter()).map(|(&a, &b)| a * rs + b * rt).collect(),
                    Hypothesis::H0 => s,
                };
                let y = self.receive(x, ch.h_true, rng)?;
                let s_hat: ComplexVec = y.iter().map(|&v| v / ch.h_est).collect();
                let r = sca_ssc(&s_hat, perm, p)?;
                sca_statistic(&r, &sca_fold_tag(&t2, perm)?)
            }
        }
    }

    fn eve_once(&self, mode: EveMode, hyp: Hypothesis, rng: &mut StreamRng) -> Result<f64> {
        let p = &self.params;
        let l = p.l;
        let (rs, rt) = (p.rho_s(), p.rho_t());
        let key = &self.keys.tag;
        match self.kind {
            SchemeKind::Tbcr => {
                let h = draw_rayleigh_block(p.sigma_h_sq, rng)?;
                if !nonsingular(h) {
                    return Err(Error::SingularChannel(h.norm()));
                }
                let x_c = bpsk_vec(l, rng);
                let pilot = bpsk_vec(PILOT_LEN, rng);
                let t = gen_tag(&pilot, key, l);
                let w_a = awgn(l, p.sigma_a_sq, rng)?;
                let y_a: ComplexVec = x_c.iter().zip(w_a.iter()).map(|(&x, &w)| h.conj() * x + w).collect();
                let x_r: ComplexVec = match hyp {
                    Hypothesis::H1 => y_a.iter().zip(t.iter()).map(|(&y, &t)| y * rs + t * rt).collect(),
                    Hypothesis::H0 => y_a,
                };
                let w_e = awgn(l, p.sigma_e_sq, rng)?;
                let y_e = eve_tbcr_observe(&x_r, h, &w_e, mode)?;
                let pos = EvePosition {
                    mode,
                    sigma_e_sq: p.sigma_e_sq,
                    sigma_ea_sq: p.sigma_ea_sq,
                };
                eve_tbcr_statistic(&y_e, &x_c, h, &pos)
            }
            SchemeKind::Sca => {
                let h_ea = draw_rayleigh_block(p.sigma_ea_sq, rng)?;
                if !nonsingular(h_ea) {
                    return Err(Error::SingularChannel(h_ea.norm()));
                }
                let perm = &self.keys.interleaver;
                let m = bpsk_vec(l, rng);
                let pilot = bpsk_vec(PILOT_LEN, rng);
                let t2 = sca_tag(&pilot, key, perm)?;
                let s = sca_series(&m, perm)?;
                let x: ComplexVec = match hyp {
                    Hypothesis::H1 => s.iter().zip(t2.iter()).map(|(&a, &b)| a * rs + b * rt).collect(),
                    Hypothesis::H0 => s,
                };
                let w_e = awgn(2 * l, p.sigma_e_sq, rng)?;
                let y_e: ComplexVec = x.iter().zip(w_e.iter()).map(|(&v, &w)| h_ea * v + w).collect();
                eve_sca_statistic(&y_e, &m, perm, h_ea)
            }
            _ => Err(Error::NoClosedForm("Eve pipelines exist for TBCR and SCA only")),
        }
    }

    fn with_resample<F>(mut f: F, rng: &mut StreamRng) -> Result<(f64, u32)>
    where
        F: FnMut(&mut StreamRng) -> Result<f64>,
    {
        for attempt in 0..=MAX_RESAMPLES {
            match f(rng) {
                Ok(v) => return Ok((v, attempt)),
                Err(Error::SingularChannel(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::SingularChannel(0.0))
    }

    /// Bob's statistic for `trials` independent trials of `stream`, in trial order.
    pub fn statistics(&self, hyp: Hypothesis, trials: usize, stream: RngStream) -> Result<(Vec<f64>, u64)> {
        let out: Vec<Result<(f64, u32)>> = (0..trials as u64)
            .into_par_iter()
            .map_init(
                || self.new_codec(),
                |codec, i| {
                    let mut rng = stream.derive(&[i]).rng();
                    Self::with_resample(|r| self.bob_once(hyp, r, codec), &mut rng)
                },
            )
            .collect();
        collect_stats(out)
    }

    /// Eve's statistic, TBCR and SCA only.
    pub fn eve_statistics(&self, mode: EveMode, hyp: Hypothesis, trials: usize, stream: RngStream) -> Result<(Vec<f64>, u64)> {
        let out: Vec<Result<(f64, u32)>> = (0..trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.derive(&[i]).rng();
                Self::with_resample(|r| self.eve_once(mode, hyp, r), &mut rng)
            })
            .collect();
        collect_stats(out)
    }
}

fn collect_stats(out: Vec<Result<(f64, u32)>>) -> Result<(Vec<f64>, u64)> {
    let mut stats = Vec::with_capacity(out.len());
    let mut resampled = 0u64;
    for r in out {
        let (v, n) = r?;
        stats.push(v);
        resampled += n as u64;
    }
    Ok((stats, resampled))
}

fn point_stream(seed: u64, point: usize, hyp_code: u64) -> RngStream {
    RngStream::new(seed, 0).derive(&[point as u64, hyp_code])
}

/// `(1 - epsilon)` empirical quantile with a 95% order-statistic interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub threshold: f64,
    pub lo: f64,
    pub hi: f64,
    pub trials: usize,
}

pub fn quantile_threshold(mut h0: Vec<f64>, epsilon: f64) -> Result<CalibratedThreshold> {
    if h0.is_empty() {
        return Err(Error::Threshold("no H0 samples".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(param("epsilon", "must lie in (0, 1)"));
    }
    h0.sort_by(f64::total_cmp);
    let m = h0.len();
    let idx = |q: f64| ((q * m as f64).floor() as usize).min(m - 1);
    let q = 1.0 - epsilon;
    let half = Z95 * (epsilon * (1.0 - epsilon) / m as f64).sqrt();
    Ok(CalibratedThreshold {
        threshold: h0[idx(q)],
        lo: h0[idx((q - half).max(0.0))],
        hi: h0[idx((q + half).min(1.0))],
        trials: m,
    })
}

/// Threshold from `trials` simulated H0 statistics on the calibration stream.
pub fn calibrate_empirical_threshold(
    kind: SchemeKind,
    params: &SchemeParams,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<CalibratedThreshold> {
    let engine = TrialEngine::new(kind, *params, ErrorModel::default(), default_code(params.l)?, seed)?;
    let (h0, _) = engine.statistics(Hypothesis::H0, trials, point_stream(seed, 0, CALIBRATION_HYP))?;
    quantile_threshold(h0, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

/// Closed-form threshold and probabilities, if the scheme has them.
pub fn theory_point(
    kind: SchemeKind,
    p: &SchemeParams,
    epsilon: f64,
    eta_e_sq: f64,
    gcq: &GcqConfig,
) -> Result<Option<TheoryPoint>> {
    let p = match kind {
        SchemeKind::Tbcr | SchemeKind::Sca if eta_e_sq > 0.0 => theory::nonideal_substitution(p, eta_e_sq, kind.scheme())?,
        _ if eta_e_sq > 0.0 => return Ok(None),
        _ => *p,
    };
    Ok(match kind {
        SchemeKind::Sca => {
            let g = theory::threshold_sca(epsilon, &p)?;
            Some(TheoryPoint {
                threshold: g,
                pfa: theory::pfa_sca(g, &p),
                pd: theory::pd_sca(g, &p),
            })
        }
        SchemeKind::Tbcr if p.sigma_a_sq > 0.0 => {
            let g = theory::threshold_tbcr(epsilon, &p, gcq)?;
            Some(TheoryPoint {
                threshold: g,
                pfa: theory::pfa_tbcr(g, &p, gcq)?,
                pd: theory::pd_tbcr(g, &p, gcq)?,
            })
        }
        SchemeKind::Tbcr => {
            let g = theory::ideal_tbcr_threshold(epsilon, &p)?;
            Some(TheoryPoint {
                threshold: g,
                pfa: theory::ideal_tbcr_pfa(g, &p),
                pd: theory::ideal_tbcr_pd(g, &p),
            })
        }
        SchemeKind::SupIdeal | SchemeKind::SupPractical => {
            let g = theory::ideal_threshold(epsilon, &p);
            Some(TheoryPoint {
                threshold: g,
                pfa: theory::ideal_pfa(g, &p),
                pd: theory::ideal_pd(g, &p),
            })
        }
        SchemeKind::Btp => None,
    })
}

fn count_at_or_above(stats: &[f64], threshold: f64) -> u64 {
    stats.iter().filter(|&&s| s >= threshold).count() as u64
}

fn run_point(spec: &ExperimentSpec, idx: usize, polar: &PolarCodeConfig) -> Result<PointReport> {
    let gp = spec.grid[idx];
    let p = gp.params(&spec.params);
    let engine = TrialEngine::new(spec.scheme, p, spec.error_model, polar.clone(), spec.seed)?;
    let eps = spec.target_pfa;
    let theory = if eps < 0.5 {
        theory_point(spec.scheme, &p, eps, spec.error_model.eta_e_sq, &spec.gcq)?
    } else {
        None
    };
    let mut resampled = 0;
    let threshold = match spec.threshold_source {
        ThresholdSource::Theory => theory
            .map(|t| t.threshold)
            .ok_or_else(|| Error::Threshold(format!("{} has no closed-form threshold", spec.scheme.name())))?,
        ThresholdSource::Empirical => {
            let m = spec.calibration_trials.unwrap_or(spec.trials);
            let (h0, r) = engine.statistics(Hypothesis::H0, m, point_stream(spec.seed, idx, CALIBRATION_HYP))?;
            resampled += r;
            quantile_threshold(h0, eps)?.threshold
        }
    };
    let (h0, r0) = engine.statistics(Hypothesis::H0, spec.trials, point_stream(spec.seed, idx, 0))?;
    let (h1, r1) = engine.statistics(Hypothesis::H1, spec.trials, point_stream(spec.seed, idx, 1))?;
    resampled += r0 + r1;
    let m = spec.trials as u64;
    Ok(PointReport {
        grid: gp,
        threshold,
        pfa: Proportion::wilson(count_at_or_above(&h0, threshold), m),
        pd: Proportion::wilson(count_at_or_above(&h1, threshold), m),
        pfa_theory: theory.map(|t| theory_at(spec, &p, threshold, Hypothesis::H0).unwrap_or(t.pfa)),
        pd_theory: theory.map(|t| theory_at(spec, &p, threshold, Hypothesis::H1).unwrap_or(t.pd)),
        resampled,
        error: None,
    })
}

/// Closed-form probability at an arbitrary threshold.
fn theory_at(spec: &ExperimentSpec, p: &SchemeParams, gamma: f64, hyp: Hypothesis) -> Option<f64> {
    let eta = spec.error_model.eta_e_sq;
    let p = match spec.scheme {
        SchemeKind::Tbcr | SchemeKind::Sca if eta > 0.0 => theory::nonideal_substitution(p, eta, spec.scheme.scheme()).ok()?,
        _ => *p,
    };
    let h1 = hyp == Hypothesis::H1;
    match spec.scheme {
        SchemeKind::Sca => Some(if h1 {
            theory::pd_sca(gamma, &p)
        } else {
            theory::pfa_sca(gamma, &p)
        }),
        SchemeKind::Tbcr if p.sigma_a_sq > 0.0 => if h1 {
            theory::pd_tbcr(gamma, &p, &spec.gcq)
        } else {
            theory::pfa_tbcr(gamma, &p, &spec.gcq)
        }
        .ok(),
        SchemeKind::Tbcr => Some(if h1 {
            theory::ideal_tbcr_pd(gamma, &p)
        } else {
            theory::ideal_tbcr_pfa(gamma, &p)
        }),
        SchemeKind::SupIdeal | SchemeKind::SupPractical => Some(if h1 {
            theory::ideal_pd(gamma, &p)
        } else {
            theory::ideal_pfa(gamma, &p)
        }),
        SchemeKind::Btp => None,
    }
}

/// Runs every grid point. Point failures are recorded, not propagated.
pub fn run_detection_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let start = Instant::now();
    let mut points = Vec::new();
    if spec.trials > 0 {
        let polar = spec.polar_config()?;
        for idx in 0..spec.grid.len() {
            let pt = run_point(spec, idx, &polar).unwrap_or_else(|e| PointReport {
                grid: spec.grid[idx],
                threshold: f64::NAN,
                pfa: Proportion::wilson(0, 0),
                pd: Proportion::wilson(0, 0),
                pfa_theory: None,
                pd_theory: None,
                resampled: 0,
                error: Some(e.to_string()),
            });
            points.push(pt);
        }
    }
    Ok(ExperimentReport {
        scheme: spec.scheme,
        seed: spec.seed,
        trials: spec.trials,
        target_pfa: spec.target_pfa,
        points,
        wall_time: start.elapsed(),
    })
}

/// `P(X1 > X0) + P(X1 = X0) / 2` by rank sums.
pub fn auc(h0: &[f64], h1: &[f64]) -> f64 {
    if h0.is_empty() || h1.is_empty() {
        return f64::NAN;
    }
    let mut all: Vec<(f64, bool)> = h0.iter().map(|&v| (v, false)).chain(h1.iter().map(|&v| (v, true))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += all[i..=j].iter().filter(|x| x.1).count() as f64 * mid;
        i = j + 1;
    }
    let n1 = h1.len() as f64;
    let n0 = h0.len() as f64;
    (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(pfa, pd)` ordered by increasing threshold, from `(1, 1)` to `(0, 0)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn roc_from_statistics(h0: &[f64], h1: &[f64], n_points: usize) -> RocCurve {
    let mut pooled: Vec<f64> = h0.iter().chain(h1).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut points = vec![(1.0, 1.0)];
    let n = n_points.max(2);
    if !pooled.is_empty() {
        let frac = |v: &[f64], g: f64| count_at_or_above(v, g) as f64 / v.len().max(1) as f64;
        for i in 0..n {
            let g = pooled[(i * (pooled.len() - 1)) / (n - 1)];
            points.push((frac(h0, g), frac(h1, g)));
        }
    }
    points.push((0.0, 0.0));
    RocCurve {
        points,
        auc: auc(h0, h1),
    }
}

pub fn roc_curve(
    kind: SchemeKind,
    params: &SchemeParams,
    grid: GridPoint,
    trials: usize,
    seed: u64,
    n_points: usize,
) -> Result<RocCurve> {
    let p = grid.params(params);
    let engine = TrialEngine::new(kind, p, ErrorModel::default(), default_code(p.l)?, seed)?;
    let (h0, _) = engine.statistics(Hypothesis::H0, trials, point_stream(seed, 0, 0))?;
    let (h1, _) = engine.statistics(Hypothesis::H1, trials, point_stream(seed, 0, 1))?;
    Ok(roc_from_statistics(&h0, &h1, n_points))
}

/// First `x` where `ys` reaches `level`, interpolating linearly in `x`.
pub fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    for i in 1..xs.len().min(ys.len()) {
        let (y0, y1) = (ys[i - 1] - level, ys[i] - level);
        if y0 < 0.0 && y1 >= 0.0 {
            return Some(xs[i - 1] + (xs[i] - xs[i - 1]) * (-y0) / (y1 - y0));
        }
        if i == 1 && y0 >= 0.0 {
            return Some(xs[0]);
        }
    }
    None
}

fn pd_curve(report: &ExperimentReport) -> (Vec<f64>, Vec<f64>) {
    report
        .points
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| (p.grid.snr_bob_db, p.pd.estimate))
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap_db: Option<f64>,
    pub ideal_db: Option<f64>,
    pub practical_db: Option<f64>,
    pub ideal: ExperimentReport,
    pub practical: ExperimentReport,
}

/// Horizontal SNR gap at `P_D = 0.9` between genie and SCL-decoded SUP.
pub fn performance_gap_experiment(rho_t_sq: f64, grid: &[GridPoint], trials: usize, seed: u64) -> Result<GapReport> {
    let base = SchemeParams::sup_sca(64, rho_t_sq);
    let run = |kind| run_detection_experiment(&ExperimentSpec::new(kind, base, grid.to_vec(), trials, seed));
    let ideal = run(SchemeKind::SupIdeal)?;
    let practical = run(SchemeKind::SupPractical)?;
    let (xi, yi) = pd_curve(&ideal);
    let (xp, yp) = pd_curve(&practical);
    let ideal_db = crossing(&xi, &yi, 0.9);
    let practical_db = crossing(&xp, &yp, 0.9);
    Ok(GapReport {
        gap_db: ideal_db.zip(practical_db).map(|(a, b)| b - a),
        ideal_db,
        practical_db,
        ideal,
        practical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverReport {
    pub crossover_db: Option<f64>,
    pub snr_bob_db: f64,
    pub alice_db: Vec<f64>,
    pub tbcr_pd: Vec<f64>,
    pub sca_pd: Vec<f64>,
    pub sup_practical_pd: f64,
}

/// Alice SNR where TBCR's empirical `P_D` overtakes SUP-practical at a fixed Bob SNR.
pub fn crossover_experiment(grid_alice_snr: &[f64], snr_bob_db: f64, trials: usize, seed: u64) -> Result<CrossoverReport> {
    let grid: Vec<GridPoint> = grid_alice_snr
        .iter()
        .map(|&a| GridPoint::new(snr_bob_db, a, snr_bob_db))
        .collect();
    let tbcr = run_detection_experiment(&ExperimentSpec::new(
        SchemeKind::Tbcr,
        SchemeParams::tbcr(64, 0.1, 1.0),
        grid.clone(),
        trials,
        seed,
    ))?;
    let sca = run_detection_experiment(&ExperimentSpec::new(
        SchemeKind::Sca,
        SchemeParams::sup_sca(64, 0.1),
        vec![grid[0]],
        trials,
        seed,
    ))?;
    let sup = run_detection_experiment(&ExperimentSpec::new(
        SchemeKind::SupPractical,
        SchemeParams::sup_sca(64, 0.1),
        vec![grid[0]],
        trials,
        seed,
    ))?;
    let first_error = |r: &ExperimentReport| r.points.iter().find_map(|p| p.error.clone());
    for r in [&tbcr, &sca, &sup] {
        if let Some(e) = first_error(r) {
            return Err(Error::Threshold(e));
        }
    }
    let tbcr_pd: Vec<f64> = tbcr.points.iter().map(|p| p.pd.estimate).collect();
    let sup_pd = sup.points[0].pd.estimate;
    let diff: Vec<f64> = tbcr_pd.iter().map(|v| v - sup_pd).collect();
    Ok(CrossoverReport {
        crossover_db: crossing(grid_alice_snr, &diff, 0.0),
        snr_bob_db,
        alice_db: grid_alice_snr.to_vec(),
        sca_pd: vec![sca.points[0].pd.estimate; grid_alice_snr.len()],
        tbcr_pd,
        sup_practical_pd: sup_pd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityPoint {
    pub snr_db: f64,
    pub bob_pd: Proportion,
    pub eve_pfa: Proportion,
    pub eve_pd: Proportion,
    pub eve_threshold: f64,
    pub eve_pd_bound: f64,
    pub eve_pfa_theory: f64,
}

/// Bob against Eve at equal SNRs. Eve uses her closed-form threshold.
#[allow(clippy::too_many_arguments)]
pub fn security_experiment(
    kind: SchemeKind,
    mode: EveMode,
    base: &SchemeParams,
    snrs_db: &[f64],
    alice_db: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<SecurityPoint>> {
    let case = match kind {
        SchemeKind::Tbcr => EvePosition {
            mode,
            sigma_e_sq: 0.0,
            sigma_ea_sq: 1.0,
        }
        .case(),
        SchemeKind::Sca => EveCase::Sca,
        _ => return Err(Error::NoClosedForm("Eve pipelines exist for TBCR and SCA only")),
    };
    let grid: Vec<GridPoint> = snrs_db.iter().map(|&s| GridPoint::new(s, alice_db, s)).collect();
    let mut spec = ExperimentSpec::new(kind, *base, grid.clone(), trials, seed);
    spec.target_pfa = epsilon;
    let bob = run_detection_experiment(&spec)?;
    let mut out = Vec::with_capacity(grid.len());
    for (i, gp) in grid.iter().enumerate() {
        if let Some(e) = &bob.points[i].error {
            return Err(Error::Threshold(e.clone()));
        }
        let p = gp.params(base);
        let engine = TrialEngine::new(kind, p, ErrorModel::default(), default_code(p.l)?, seed)?;
        let g = theory::eve_threshold(case, epsilon, &p)?;
        let eve_seed = seed ^ 0x5EC0_0000;
        let (h0, _) = engine.eve_statistics(mode, Hypothesis::H0, trials, point_stream(eve_seed, i, 0))?;
        let (h1, _) = engine.eve_statistics(mode, Hypothesis::H1, trials, point_stream(eve_seed, i, 1))?;
        out.push(SecurityPoint {
            snr_db: gp.snr_bob_db,
            bob_pd: bob.points[i].pd,
            eve_pfa: Proportion::wilson(count_at_or_above(&h0, g), trials as u64),
            eve_pd: Proportion::wilson(count_at_or_above(&h1, g), trials as u64),
            eve_threshold: g,
            eve_pd_bound: theory::eve_pd(case, g, &p),
            eve_pfa_theory: theory::eve_pfa(case, g, &p),
        });
    }
    Ok(out)
}
