//! Complex-signal primitives, block fading, receiver noise, CSI error and the
//! per-stream randomness contract shared by every simulation.
//!
//! Every random draw in the crate goes through an [`RngStream`]. A stream is a
//! plain value `(master_seed, stream_id)`; the generator it produces is seeded
//! by hashing both words, so trial `i` of a run can be regenerated without
//! replaying trials `0..i` and results do not depend on thread scheduling.

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_len, param, Result};

pub type C64 = Complex64;

/// Generator type handed out by [`RngStream::rng`].
pub type StreamRng = ChaCha12Rng;

/// Owned vector of complex baseband samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexVec(pub Vec<C64>);

impl ComplexVec {
    pub fn zeros(len: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); len])
    }

    pub fn from_real(values: &[f64]) -> Self {
        values.iter().map(|&v| C64::new(v, 0.0)).collect()
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    /// Squared Euclidean norm.
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Hermitian inner product `self^H other`.
    pub fn inner(&self, other: &[C64]) -> Result<C64> {
        check_len(self.len(), other.len())?;
        Ok(inner(&self.0, other))
    }

    pub fn scaled(&self, k: C64) -> Self {
        self.0.iter().map(|&z| z * k).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Deref for ComplexVec {
    type Target = [C64];
    fn deref(&self) -> &[C64] {
        &self.0
    }
}

impl DerefMut for ComplexVec {
    fn deref_mut(&mut self) -> &mut [C64] {
        &mut self.0
    }
}

impl From<Vec<C64>> for ComplexVec {
    fn from(v: Vec<C64>) -> Self {
        Self(v)
    }
}

impl FromIterator<C64> for ComplexVec {
    fn from_iter<I: IntoIterator<Item = C64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// `a^H b` without a length check.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Real sign with `sign(0) == 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Deterministic random stream identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    /// Child stream addressed by `path` below this one.
    pub fn derive(&self, path: &[u64]) -> Self {
        let mut h = Sha256::new();
        h.update(b"tagauth/stream");
        h.update(self.stream_id.to_le_bytes());
        h.update((path.len() as u64).to_le_bytes());
        for p in path {
            h.update(p.to_le_bytes());
        }
        let d = h.finalize();
        let mut id = [0u8; 8];
        id.copy_from_slice(&d[..8]);
        Self::new(self.master_seed, u64::from_le_bytes(id))
    }

    pub fn rng(&self) -> StreamRng {
        let mut h = Sha256::new();
        h.update(b"tagauth/seed");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.stream_id.to_le_bytes());
        StreamRng::from_seed(h.finalize().into())
    }
}

/// One CSCG sample with total variance `var`.
pub fn cscg<R: Rng + ?Sized>(var: f64, rng: &mut R) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Block-fading coefficient `h ~ CN(0, sigma_h_sq)`.
pub fn draw_rayleigh_block<R: Rng + ?Sized>(sigma_h_sq: f64, rng: &mut R) -> Result<C64> {
    if !(sigma_h_sq >= 0.0) || !sigma_h_sq.is_finite() {
        return Err(param("sigma_h_sq", format!("must be finite and >= 0, got {sigma_h_sq}")));
    }
    if sigma_h_sq == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(cscg(sigma_h_sq, rng))
}

/// `length` i.i.d. CSCG samples of variance `sigma_sq`.
pub fn awgn<R: Rng + ?Sized>(length: usize, sigma_sq: f64, rng: &mut R) -> Result<ComplexVec> {
    if length == 0 {
        return Err(param("length", "must be >= 1"));
    }
    if !(sigma_sq >= 0.0) || !sigma_sq.is_finite() {
        return Err(param("sigma_sq", format!("must be finite and >= 0, got {sigma_sq}")));
    }
    if sigma_sq == 0.0 {
        return Ok(ComplexVec::zeros(length));
    }
    Ok((0..length).map(|_| cscg(sigma_sq, rng)).collect())
}

/// Flat channel `h x + noise`.
pub fn apply_channel(x: &[C64], h: C64, noise: &[C64]) -> Result<ComplexVec> {
    check_len(x.len(), noise.len())?;
    Ok(x.iter().zip(noise).map(|(&xi, &wi)| h * xi + wi).collect())
}

/// Block-fading draw as seen by a receiver with imperfect CSI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub h_true: C64,
    pub h_est: C64,
    pub delta_h: C64,
    pub sigma_h_sq: f64,
    pub eta_e_sq: f64,
}

impl ChannelDraw {
    pub fn perfect(h: C64, sigma_h_sq: f64) -> Self {
        Self {
            h_true: h,
            h_est: h,
            delta_h: C64::new(0.0, 0.0),
            sigma_h_sq,
            eta_e_sq: 0.0,
        }
    }
}

/// Adds estimation error `delta_h ~ CN(0, eta_e_sq * sigma_h_sq)` so that
/// `h_true = h_est + delta_h`.
///
/// `h_true` is stored as `h_est + delta_h` so the identity holds bit-exactly;
/// it can differ from the argument by at most one rounding step.
pub fn perturb_csi<R: Rng + ?Sized>(h_true: C64, eta_e_sq: f64, sigma_h_sq: f64, rng: &mut R) -> Result<ChannelDraw> {
    if !(0.0..1.0).contains(&eta_e_sq) {
        return Err(param("eta_e_sq", format!("must lie in [0, 1), got {eta_e_sq}")));
    }
    if !(sigma_h_sq >= 0.0) {
        return Err(param("sigma_h_sq", format!("must be >= 0, got {sigma_h_sq}")));
    }
    if eta_e_sq == 0.0 {
        return Ok(ChannelDraw::perfect(h_true, sigma_h_sq));
    }
    let delta_h = cscg(eta_e_sq * sigma_h_sq, rng);
    let h_est = h_true - delta_h;
    Ok(ChannelDraw {
        h_true: h_est + delta_h,
        h_est,
        delta_h,
        sigma_h_sq,
        eta_e_sq,
    })
}

/// Noise variance for a receive SNR in dB against average channel gain `sigma_h_sq`.
pub fn noise_var_from_snr_db(snr_db: f64, sigma_h_sq: f64) -> f64 {
    sigma_h_sq * 10f64.powf(-snr_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> StreamRng {
        RngStream::new(7, 1).rng()
    }

    #[test]
    fn zero_variance_channel_is_zero() {
        assert_eq!(draw_rayleigh_block(0.0, &mut stream()).unwrap(), C64::new(0.0, 0.0));
        assert!(draw_rayleigh_block(-1.0, &mut stream()).is_err());
    }

    #[test]
    fn rayleigh_moments() {
        let mut rng = stream();
        let n = 1_000_000;
        let mut p = 0.0;
        for _ in 0..n {
            p += draw_rayleigh_block(1.0, &mut rng).unwrap().norm_sqr();
        }
        assert!((p / n as f64 - 1.0).abs() < 0.01);

        let xs: Vec<f64> = (0..n).map(|_| draw_rayleigh_block(4.0, &mut rng).unwrap().re).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((v / 2.0 - 1.0).abs() < 0.01, "var {v}");
    }

    #[test]
    fn awgn_power_and_determinism() {
        assert!(awgn(8, 0.0, &mut stream()).unwrap().iter().all(|z| z.norm_sqr() == 0.0));
        let w = awgn(1_000_000, 1.0, &mut stream()).unwrap();
        let p = w.norm_sqr() / w.len() as f64;
        assert!((0.99..=1.01).contains(&p));
        let s = RngStream::new(99, 4);
        assert_eq!(awgn(64, 2.0, &mut s.rng()).unwrap(), awgn(64, 2.0, &mut s.rng()).unwrap());
        assert!(awgn(0, 1.0, &mut stream()).is_err());
    }

    #[test]
    fn circularity() {
        let w = awgn(1_000_000, 1.0, &mut stream()).unwrap();
        let n = w.len() as f64;
        let c = w.iter().map(|z| z.re * z.im).sum::<f64>() / n;
        let vr = w.iter().map(|z| z.re * z.re).sum::<f64>() / n;
        let vi = w.iter().map(|z| z.im * z.im).sum::<f64>() / n;
        assert!((c / (vr * vi).sqrt()).abs() < 0.01);
    }

    #[test]
    fn channel_arithmetic() {
        let x = ComplexVec::from_real(&[1.0, -1.0, 1.0]);
        let z = ComplexVec::zeros(3);
        assert_eq!(apply_channel(&x, C64::new(1.0, 0.0), &z).unwrap(), x);
        let w = ComplexVec::from_real(&[0.1, 0.2, 0.3]);
        assert_eq!(apply_channel(&x, C64::new(0.0, 0.0), &w).unwrap(), w);
        let y = apply_channel(&[C64::new(1.0, 0.0)], C64::new(2.0, 0.0), &[C64::new(0.5, 0.0)]).unwrap();
        assert_eq!(y.0, vec![C64::new(2.5, 0.0)]);
        assert!(apply_channel(&x, C64::new(1.0, 0.0), &w[..2]).is_err());
    }

    #[test]
    fn csi_error_model() {
        let h = C64::new(0.3, -1.2);
        let d = perturb_csi(h, 0.0, 1.0, &mut stream()).unwrap();
        assert_eq!(d.h_est, h);
        assert_eq!(d.delta_h, C64::new(0.0, 0.0));
        assert!(perturb_csi(h, 1.0, 1.0, &mut stream()).is_err());

        let mut rng = stream();
        let n = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let d = perturb_csi(h, 0.1, 1.0, &mut rng).unwrap();
            assert_eq!(d.h_est + d.delta_h, d.h_true);
            acc += d.delta_h.norm_sqr();
        }
        assert!((acc / n as f64 / 0.1 - 1.0).abs() < 0.01);
    }

    #[test]
    fn derived_streams_differ() {
        let s = RngStream::new(1, 2);
        assert_ne!(s.derive(&[0]), s.derive(&[1]));
        assert_ne!(s.derive(&[0, 1]), s.derive(&[1, 0]));
        assert_eq!(s.derive(&[3, 4]), s.derive(&[3, 4]));
    }

    #[test]
    fn sign_of_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-2.0), -1.0);
        assert_eq!(sign(1e-300), 1.0);
    }
}
