//! Transmit and receive pipelines for SUP, BTP, TBCR and SCA.
//!
//! Channel convention: the challenge reaches Alice through `conj(h)` and her
//! response reaches Bob through `h`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};
use crate::keytag::{deinterleave, gen_tag, interleave, Permutation, TagKey};
use crate::polarcodec::{bpsk_demodulate_llr, bpsk_modulate, polar_encode, PolarCodeConfig, SclDecoder};
use crate::sigcore::{inner, noise_var_from_snr_db, ComplexVec, C64};

/// Channel estimates below this magnitude are treated as singular.
pub const SINGULAR_CHANNEL: f64 = 1e-12;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sup,
    Btp,
    Tbcr,
    Sca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `rho_s^2 + rho_t^2 = 1`.
    SupSca,
    /// `rho_s^2 (sigma_h^2 + sigma_A^2) + rho_t^2 = 1`.
    Tbcr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub l: usize,
    pub rho_s_sq: f64,
    pub rho_t_sq: f64,
    pub sigma_a_sq: f64,
    pub sigma_b_sq: f64,
    pub sigma_e_sq: f64,
    pub sigma_h_sq: f64,
    pub sigma_ea_sq: f64,
    pub normalization: Normalization,
}

impl SchemeParams {
    /// Unit channel and noise variances with the SUP/SCA power split.
    pub fn sup_sca(l: usize, rho_t_sq: f64) -> Self {
        Self {
            l,
            rho_s_sq: 1.0 - rho_t_sq,
            rho_t_sq,
            sigma_a_sq: 0.0,
            sigma_b_sq: 1.0,
            sigma_e_sq: 1.0,
            sigma_h_sq: 1.0,
            sigma_ea_sq: 1.0,
            normalization: Normalization::SupSca,
        }
    }

    /// Unit channel and Bob noise with the TBCR power split for `sigma_a_sq`.
    pub fn tbcr(l: usize, rho_t_sq: f64, sigma_a_sq: f64) -> Self {
        Self {
            sigma_a_sq,
            normalization: Normalization::Tbcr,
            ..Self::sup_sca(l, rho_t_sq)
        }
        .renormalized()
    }

    pub fn for_scheme(scheme: Scheme, l: usize, rho_t_sq: f64) -> Self {
        match scheme {
            Scheme::Tbcr => Self::tbcr(l, rho_t_sq, 1.0),
            _ => Self::sup_sca(l, rho_t_sq),
        }
    }

    /// Recomputes `rho_s_sq` from `rho_t_sq` and the normalization rule.
    pub fn renormalized(mut self) -> Self {
        self.rho_s_sq = match self.normalization {
            Normalization::SupSca => 1.0 - self.rho_t_sq,
            Normalization::Tbcr => (1.0 - self.rho_t_sq) / (self.sigma_h_sq + self.sigma_a_sq),
        };
        self
    }

    /// Sets noise variances from SNRs in dB against `sigma_h_sq`, then renormalizes.
    pub fn with_snr_db(mut self, bob: f64, alice: f64, eve: f64) -> Self {
        self.sigma_b_sq = noise_var_from_snr_db(bob, self.sigma_h_sq);
        self.sigma_a_sq = noise_var_from_snr_db(alice, self.sigma_h_sq);
        self.sigma_e_sq = noise_var_from_snr_db(eve, self.sigma_h_sq);
        self.renormalized()
    }

    pub fn rho_s(&self) -> f64 {
        self.rho_s_sq.sqrt()
    }

    pub fn rho_t(&self) -> f64 {
        self.rho_t_sq.sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(param("l", "must be >= 1"));
        }
        let nonneg = [
            ("rho_s_sq", self.rho_s_sq),
            ("rho_t_sq", self.rho_t_sq),
            ("sigma_a_sq", self.sigma_a_sq),
            ("sigma_b_sq", self.sigma_b_sq),
            ("sigma_e_sq", self.sigma_e_sq),
            ("sigma_h_sq", self.sigma_h_sq),
            ("sigma_ea_sq", self.sigma_ea_sq),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        let total = match self.normalization {
            Normalization::SupSca => self.rho_s_sq + self.rho_t_sq,
            Normalization::Tbcr => self.rho_s_sq * (self.sigma_h_sq + self.sigma_a_sq) + self.rho_t_sq,
        };
        if (total - 1.0).abs() > NORM_TOL {
            return Err(param(
                "rho_s_sq",
                format!("{:?} power constraint sums to {total}, not 1", self.normalization),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameRole {
    Pilot,
    Challenge,
    Response,
    TaggedPayload,
    SeriesSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthFrame {
    pub samples: ComplexVec,
    pub role: FrameRole,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Hypothesis,
    pub truth: Hypothesis,
}

impl DetectionOutcome {
    pub fn new(statistic: f64, threshold: f64, truth: Hypothesis) -> Self {
        Self {
            statistic,
            threshold,
            decision: decide(statistic, threshold),
            truth,
        }
    }

    pub fn is_correct(&self) -> bool {
        self.decision == self.truth
    }
}

/// H1 iff `statistic >= threshold`; ties go to H1.
pub fn decide(statistic: f64, threshold: f64) -> Hypothesis {
    if statistic >= threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

fn check_channel(h: C64) -> Result<()> {
    let m = h.norm();
    if m < SINGULAR_CHANNEL || !m.is_finite() {
        Err(Error::SingularChannel(m))
    } else {
        Ok(())
    }
}

fn superimpose(a: &[C64], ka: f64, b: &[C64], kb: f64) -> ComplexVec {
    a.iter().zip(b).map(|(&x, &y)| x * ka + y * kb).collect()
}

/// `x = rho_s s + rho_t t`.
pub fn sup_transmit(s: &[C64], t: &[C64], p: &SchemeParams) -> Result<AuthFrame> {
    check_len(s.len(), t.len())?;
    Ok(AuthFrame {
        samples: superimpose(s, p.rho_s(), t, p.rho_t()),
        role: FrameRole::TaggedPayload,
        hypothesis: Hypothesis::H1,
    })
}

/// `Re{t_hat^H r}` with `r = (x_hat - rho_s s_hat) / rho_t`.
pub fn sup_statistic(x_hat: &[C64], s_hat: &[C64], t_hat: &[C64], p: &SchemeParams) -> Result<f64> {
    check_len(x_hat.len(), s_hat.len())?;
    check_len(x_hat.len(), t_hat.len())?;
    let (rs, rt) = (p.rho_s(), p.rho_t());
    let r: ComplexVec = x_hat.iter().zip(s_hat).map(|(&x, &s)| (x - s * rs) / rt).collect();
    Ok(inner(t_hat, &r).re)
}

/// `Re{t_hat^H x_hat}`.
pub fn btp_statistic(x_hat: &[C64], t_hat: &[C64]) -> Result<f64> {
    check_len(x_hat.len(), t_hat.len())?;
    Ok(inner(t_hat, x_hat).re)
}

/// Polar codec for decode-based receivers. The codeword length is the tag length.
pub struct MessageCodec {
    cfg: PolarCodeConfig,
    decoder: SclDecoder,
}

impl MessageCodec {
    pub fn new(cfg: PolarCodeConfig) -> Result<Self> {
        let decoder = SclDecoder::new(&cfg)?;
        Ok(Self { cfg, decoder })
    }

    pub fn config(&self) -> &PolarCodeConfig {
        &self.cfg
    }

    /// BPSK codeword symbols for `info`.
    pub fn encode(&self, info: &[u8]) -> Result<ComplexVec> {
        Self::encode_with(&self.cfg, info)
    }

    pub fn encode_with(cfg: &PolarCodeConfig, info: &[u8]) -> Result<ComplexVec> {
        Ok(bpsk_modulate(&polar_encode(info, cfg)?))
    }

    /// Decodes `y = h (rho_s s + rho_t t) + w` treating the tag as noise and
    /// returns the re-encoded symbol estimate.
    pub fn estimate_message(&mut self, y: &[C64], h_est: C64, p: &SchemeParams) -> Result<ComplexVec> {
        check_len(self.cfg.block_length, y.len())?;
        let sigma = p.sigma_b_sq + p.rho_t_sq * h_est.norm_sqr();
        let llrs = bpsk_demodulate_llr(y, h_est * p.rho_s(), sigma);
        let info = self.decoder.decode(&llrs)?;
        self.encode(&info)
    }
}

/// Decoded message, regenerated tag and equalized signal from a SUP/BTP frame.
pub struct DecodedFrame {
    pub x_hat: ComplexVec,
    pub s_hat: ComplexVec,
    pub t_hat: ComplexVec,
}

pub fn decode_frame(y: &[C64], h_est: C64, codec: &mut MessageCodec, key: &TagKey, p: &SchemeParams) -> Result<DecodedFrame> {
    check_channel(h_est)?;
    let x_hat: ComplexVec = y.iter().map(|&v| v / h_est).collect();
    let s_hat = codec.estimate_message(y, h_est, p)?;
    let t_hat = gen_tag(&s_hat, key, p.l);
    Ok(DecodedFrame { x_hat, s_hat, t_hat })
}

/// SUP receiver: equalize, decode, regenerate `t_hat = Gen(s_hat)`, correlate with the residual.
pub fn sup_receive(y: &[C64], h_est: C64, codec: &mut MessageCodec, key: &TagKey, p: &SchemeParams) -> Result<f64> {
    let d = decode_frame(y, h_est, codec, key, p)?;
    sup_statistic(&d.x_hat, &d.s_hat, &d.t_hat, p)
}

/// BTP receiver: as SUP but correlates the regenerated tag with `x_hat` directly.
pub fn btp_receive(y: &[C64], h_est: C64, codec: &mut MessageCodec, key: &TagKey, p: &SchemeParams) -> Result<f64> {
    let d = decode_frame(y, h_est, codec, key, p)?;
    btp_statistic(&d.x_hat, &d.t_hat)
}

/// Alice's tagged response `x_r = rho_s y_A + rho_t t`.
pub fn tbcr_respond(y_a: &[C64], t: &[C64], p: &SchemeParams) -> Result<AuthFrame> {
    check_len(y_a.len(), t.len())?;
    Ok(AuthFrame {
        samples: superimpose(y_a, p.rho_s(), t, p.rho_t()),
        role: FrameRole::Response,
        hypothesis: Hypothesis::H1,
    })
}

/// Untagged unit-gain forward of the received challenge.
pub fn tbcr_forward(y_a: &[C64]) -> AuthFrame {
    AuthFrame {
        samples: ComplexVec(y_a.to_vec()),
        role: FrameRole::Response,
        hypothesis: Hypothesis::H0,
    }
}

/// Estimated tag `(y_B / h_est - rho_s conj(h_est) x_c) / rho_t`.
pub fn tbcr_residual(y_b: &[C64], x_c: &[C64], h_est: C64, p: &SchemeParams) -> Result<ComplexVec> {
    check_len(y_b.len(), x_c.len())?;
    check_channel(h_est)?;
    let (rs, rt) = (p.rho_s(), p.rho_t());
    let hc = h_est.conj();
    Ok(y_b.iter().zip(x_c).map(|(&y, &x)| (y / h_est - hc * x * rs) / rt).collect())
}

pub fn tbcr_statistic(y_b: &[C64], x_c: &[C64], h_est: C64, t: &[C64], p: &SchemeParams) -> Result<f64> {
    check_len(y_b.len(), t.len())?;
    let r = tbcr_residual(y_b, x_c, h_est, p)?;
    Ok(inner(t, &r).re)
}

/// `interleave([m; -m])`.
pub fn sca_series(m: &[C64], perm: &Permutation) -> Result<ComplexVec> {
    check_len(2 * m.len(), perm.len())?;
    let spliced: Vec<C64> = m.iter().copied().chain(m.iter().map(|&v| -v)).collect();
    interleave(&spliced, perm)
}

/// Length-`2L` SCA tag whose deinterleaved halves sit on the I and Q rails,
/// so the folded tag has `|T_i|^2 = 2` for every `i`.
pub fn sca_tag(pilot: &[C64], key: &TagKey, perm: &Permutation) -> Result<ComplexVec> {
    if !perm.len().is_multiple_of(2) {
        return Err(param("perm", "series interleaver must have even length"));
    }
    let half = perm.len() / 2;
    let bits = gen_tag(pilot, key, perm.len());
    let t_de: Vec<C64> = (0..perm.len())
        .map(|i| if i < half { bits[i] } else { C64::new(0.0, bits[i].re) })
        .collect();
    interleave(&t_de, perm)
}

/// SSG: `rho_s interleave([m; -m]) + rho_t t2`.
pub fn sca_ssg(m: &[C64], t2: &[C64], perm: &Permutation, p: &SchemeParams) -> Result<AuthFrame> {
    check_len(2 * m.len(), t2.len())?;
    let s = sca_series(m, perm)?;
    Ok(AuthFrame {
        samples: superimpose(&s, p.rho_s(), t2, p.rho_t()),
        role: FrameRole::SeriesSignal,
        hypothesis: Hypothesis::H1,
    })
}

fn fold(v: &[C64], perm: &Permutation) -> Result<ComplexVec> {
    if !v.len().is_multiple_of(2) {
        return Err(param("frame", format!("series frames have even length, got {}", v.len())));
    }
    let d = deinterleave(v, perm)?;
    let half = d.len() / 2;
    Ok((0..half).map(|i| d[i] + d[half + i]).collect())
}

/// SSC: deinterleave and fold, `r = (m_hat[..L] + m_hat[L..]) / rho_t`.
pub fn sca_ssc(s_hat: &[C64], perm: &Permutation, p: &SchemeParams) -> Result<ComplexVec> {
    let rt = p.rho_t();
    Ok(fold(s_hat, perm)?.iter().map(|&v| v / rt).collect())
}

/// Folded reference tag `T = t_de[..L] + t_de[L..]`.
pub fn sca_fold_tag(t2: &[C64], perm: &Permutation) -> Result<ComplexVec> {
    fold(t2, perm)
}

/// `Re{r^H T} / 2`.
pub fn sca_statistic(r: &[C64], folded_tag: &[C64]) -> Result<f64> {
    check_len(r.len(), folded_tag.len())?;
    Ok(inner(r, folded_tag).re / 2.0)
}
