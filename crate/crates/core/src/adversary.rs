//! Eve's detection pipelines and replay waveforms.
//!
//! Eve knows every system parameter except the keys. For SCA she is also
//! handed the true interleaver; near Bob she is handed `|h|^2`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::keytag::{deinterleave, Permutation};
use crate::schemes::{SchemeParams, SINGULAR_CHANNEL};
use crate::sigcore::{awgn, draw_rayleigh_block, inner, ComplexVec, C64};
use crate::theory::EveCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveMode {
    /// `h_EA = 1` and `h_BE = h`.
    NearAlice,
    /// Eve sees `h x_r` and equalizes by `|h|^2`.
    NearBob,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvePosition {
    pub mode: EveMode,
    pub sigma_e_sq: f64,
    pub sigma_ea_sq: f64,
}

impl EvePosition {
    pub fn case(&self) -> EveCase {
        match self.mode {
            EveMode::NearAlice => EveCase::TbcrNearAlice,
            EveMode::NearBob => EveCase::TbcrNearBob,
        }
    }
}

fn nonsingular(h: C64) -> Result<()> {
    if h.norm() < SINGULAR_CHANNEL || !h.norm().is_finite() {
        Err(Error::SingularChannel(h.norm()))
    } else {
        Ok(())
    }
}

/// Eve's observation of the TBCR response `x_r`.
pub fn eve_tbcr_observe(x_r: &[C64], h: C64, w_e: &[C64], mode: EveMode) -> Result<ComplexVec> {
    check_len(x_r.len(), w_e.len())?;
    let gain = match mode {
        EveMode::NearAlice => C64::new(1.0, 0.0),
        EveMode::NearBob => h,
    };
    Ok(x_r.iter().zip(w_e).map(|(&x, &w)| gain * x + w).collect())
}

/// `Re{x_c^H (x_c - x_hat)}` with `x_hat` equalized for Eve's position.
pub fn eve_tbcr_statistic(y_e: &[C64], x_c: &[C64], h: C64, pos: &EvePosition) -> Result<f64> {
    check_len(x_c.len(), y_e.len())?;
    nonsingular(h)?;
    let eq = match pos.mode {
        EveMode::NearAlice => h / h.norm_sqr(),
        EveMode::NearBob => C64::new(1.0 / h.norm_sqr(), 0.0),
    };
    let r: ComplexVec = x_c.iter().zip(y_e).map(|(&x, &y)| x - eq * y).collect();
    Ok(inner(x_c, &r).re)
}

/// `Re{(m - m_hat[..L])^H m}` from the deinterleaved observation.
pub fn eve_sca_statistic(y_e: &[C64], m: &[C64], perm: &Permutation, h_ea: C64) -> Result<f64> {
    check_len(2 * m.len(), y_e.len())?;
    nonsingular(h_ea)?;
    let s_hat: ComplexVec = y_e.iter().map(|&y| y / h_ea).collect();
    let m_hat = deinterleave(&s_hat, perm)?;
    let d: ComplexVec = m.iter().zip(m_hat.iter()).map(|(&a, &b)| a - b).collect();
    Ok(inner(&d, m).re)
}

/// `log2((2L)!)`: bits Eve must guess to recover a `2L` interleaver.
pub fn interleaver_guess_entropy_bits(l: usize) -> f64 {
    (2..=2 * l).map(|k| (k as f64).log2()).sum()
}

/// `1 / (2L)!` as a base-2 logarithm.
pub fn interleaver_guess_probability_log2(l: usize) -> f64 {
    -interleaver_guess_entropy_bits(l)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayLegs {
    pub h: C64,
    pub h_ae: C64,
    pub h_eb: C64,
}

impl ReplayLegs {
    pub fn draw<R: Rng + ?Sized>(sigma_h_sq: f64, rng: &mut R) -> Result<Self> {
        Ok(Self {
            h: draw_rayleigh_block(sigma_h_sq, rng)?,
            h_ae: draw_rayleigh_block(sigma_h_sq, rng)?,
            h_eb: draw_rayleigh_block(sigma_h_sq, rng)?,
        })
    }

    pub fn relay_gain(&self) -> C64 {
        self.h_eb * self.h_ae
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayWaveforms {
    pub y_via_eve: ComplexVec,
    pub y_direct: ComplexVec,
    /// `rho_s conj(h) x_c + rho_t t`, the part of `x_r` Bob can rebuild.
    pub known_parts: ComplexVec,
    pub legs: ReplayLegs,
}

/// Relayed and direct TBCR frames at Bob with independent channel legs.
pub fn replay_waveforms<R: Rng + ?Sized>(p: &SchemeParams, x_c: &[C64], t: &[C64], rng: &mut R) -> Result<ReplayWaveforms> {
    let legs = ReplayLegs::draw(p.sigma_h_sq, rng)?;
    replay_waveforms_with(p, x_c, t, legs, rng)
}

pub fn replay_waveforms_with<R: Rng + ?Sized>(
    p: &SchemeParams,
    x_c: &[C64],
    t: &[C64],
    legs: ReplayLegs,
    rng: &mut R,
) -> Result<ReplayWaveforms> {
    check_len(x_c.len(), t.len())?;
    let n = x_c.len();
    let (rs, rt) = (p.rho_s(), p.rho_t());
    let hc = legs.h.conj();
    let known_parts: ComplexVec = x_c.iter().zip(t).map(|(&x, &tt)| hc * x * rs + tt * rt).collect();
    let relay = legs.relay_gain();

    let w_a = awgn(n, p.sigma_a_sq, rng)?;
    let w_e = awgn(n, p.sigma_e_sq, rng)?;
    let w_b = awgn(n, p.sigma_b_sq, rng)?;
    let y_via_eve = (0..n)
        .map(|i| relay * (known_parts[i] + w_a[i] * rs) + legs.h_eb * w_e[i] + w_b[i])
        .collect();

    let w_a = awgn(n, p.sigma_a_sq, rng)?;
    let w_b = awgn(n, p.sigma_b_sq, rng)?;
    let y_direct = (0..n).map(|i| legs.h * (known_parts[i] + w_a[i] * rs) + w_b[i]).collect();

    Ok(ReplayWaveforms {
        y_via_eve,
        y_direct,
        known_parts,
        legs,
    })
}

/// Residual power after removing `h_est * known_parts`, normalized by the
/// power expected for a direct frame. Near 1 for direct frames, larger when relayed.
pub fn replay_discriminator(frame: &[C64], known_parts: &[C64], h_est: C64, p: &SchemeParams) -> Result<f64> {
    check_len(known_parts.len(), frame.len())?;
    if frame.is_empty() {
        return Ok(0.0);
    }
    let power = frame
        .iter()
        .zip(known_parts)
        .map(|(&y, &k)| (y - h_est * k).norm_sqr())
        .sum::<f64>()
        / frame.len() as f64;
    let expected = h_est.norm_sqr() * p.rho_s_sq * p.sigma_a_sq + p.sigma_b_sq;
    Ok(if expected > 0.0 { power / expected } else { power })
}
