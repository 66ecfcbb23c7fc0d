//! Closed-form detection probabilities, thresholds and cost metrics.
//!
//! All channel expectations are over `|h|^2 ~ Exp(sigma_h^2)`. Probabilities
//! use the `sign(0) = 0` rule so every tail evaluates to `1/2` at its mean.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{param, Error, Result};
use crate::schemes::{Scheme, SchemeParams};
use crate::sigcore::sign;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Above this argument `g` switches to the Mills-ratio continued fraction.
const G_ASYMPTOTIC_FROM: f64 = 20.0;
pub const DEFAULT_GCQ_NODES: usize = 100;
pub const CONVERGENCE_WARN: f64 = 1e-5;
const THRESHOLD_TOL: f64 = 1e-8;

pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `g(x) = exp(x^2/2) Q(x)`.
pub fn g_func(x: f64) -> f64 {
    if x < G_ASYMPTOTIC_FROM {
        return (0.5 * x * x).exp() * q_func(x);
    }
    let mut d = x;
    for k in (1..=80).rev() {
        d = x + k as f64 / d;
    }
    INV_SQRT_2PI / d
}

/// Inverse of `g` on `(0, inf)` by bisection.
pub fn g_inverse(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 0.5) {
        return Err(param("y", format!("g_inverse needs y in (0, 1/2), got {y}")));
    }
    let mut hi = 1.0;
    while g_func(hi) > y {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if g_func(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.5 {
        Ok(())
    } else {
        Err(param("epsilon", format!("must lie in (0, 1/2), got {epsilon}")))
    }
}

/// `E[Q(delta sqrt(2Y/v))]` for `Y ~ Exp(s)`.
fn rayleigh_tail(delta: f64, v: f64, s: f64) -> f64 {
    let d2s = delta * delta * s;
    if d2s == 0.0 {
        return 0.5;
    }
    0.5 * (1.0 - sign(delta) * (d2s / (v + d2s)).sqrt())
}

/// Solves `rayleigh_tail(gamma, v, s) = epsilon` for `gamma > 0`.
fn rayleigh_tail_inverse(epsilon: f64, v: f64, s: f64) -> f64 {
    (1.0 - 2.0 * epsilon) * (v / (4.0 * epsilon * (1.0 - epsilon) * s)).sqrt()
}

/// `E[Q(delta Y sqrt(2/v))]` for `Y ~ Exp(s)`.
fn rayleigh_linear_tail(delta: f64, v: f64, s: f64) -> f64 {
    if delta == 0.0 {
        return 0.5;
    }
    0.5 - sign(delta) * g_func((v / (2.0 * delta * delta * s * s)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GcqConfig {
    pub nodes: usize,
}

impl Default for GcqConfig {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_GCQ_NODES,
        }
    }
}

impl GcqConfig {
    pub fn new(nodes: usize) -> Result<Self> {
        let c = Self { nodes };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(param("nodes", "must be >= 1"));
        }
        Ok(())
    }

    fn doubled(&self) -> Self {
        Self { nodes: 2 * self.nodes }
    }
}

/// Gauss-Chebyshev approximation of `int_0^u f(x) dx`.
fn gcq(u: f64, f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let nf = n as f64;
    let sum: f64 = (1..=n)
        .map(|i| {
            let k = ((2 * i - 1) as f64 * PI / (2.0 * nf)).cos();
            (1.0 - k * k).sqrt() * f(0.5 * u * (k + 1.0))
        })
        .sum();
    0.5 * u * PI / nf * sum
}

/// `int_0^u phi(x) exp(-sigma_B^2 x^2 / (sigma_h^2 (c - var x^2))) dx` with `u = sqrt(c/var)`.
fn tbcr_omega(c: f64, var: f64, p: &SchemeParams, n: usize) -> f64 {
    let u = (c / var).sqrt();
    let f = |x: f64| {
        let den = p.sigma_h_sq * (c - var * x * x);
        if den <= 0.0 {
            return 0.0;
        }
        INV_SQRT_2PI * (-p.sigma_b_sq * x * x / den - 0.5 * x * x).exp()
    };
    gcq(u, f, n)
}

fn tbcr_prechecks(p: &SchemeParams, cfg: &GcqConfig) -> Result<()> {
    p.validate()?;
    cfg.validate()?;
    if p.sigma_a_sq <= 0.0 {
        return Err(param("sigma_a_sq", "GCQ form needs sigma_a_sq > 0; use the ideal form"));
    }
    Ok(())
}

/// False-alarm probability of TBCR with noise at Alice.
pub fn pfa_tbcr(gamma: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<f64> {
    tbcr_prechecks(p, cfg)?;
    let a = 2.0 * gamma * gamma * p.rho_t_sq / p.l as f64;
    if a == 0.0 {
        return Ok(0.5);
    }
    // Coarse node counts can overshoot the unit interval.
    Ok((0.5 - sign(gamma) * tbcr_omega(a, p.sigma_a_sq, p, cfg.nodes)).clamp(0.0, 1.0))
}

/// Detection probability of TBCR with noise at Alice.
pub fn pd_tbcr(gamma: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<f64> {
    tbcr_prechecks(p, cfg)?;
    let l = p.l as f64;
    let b = 2.0 * p.rho_t_sq * (gamma - l).powi(2) / l;
    let var = p.rho_s_sq * p.sigma_a_sq;
    if b == 0.0 {
        return Ok(0.5);
    }
    if var == 0.0 {
        return Ok(ideal_pd(gamma, p));
    }
    Ok((0.5 - sign(gamma - l) * tbcr_omega(b, var, p, cfg.nodes)).clamp(0.0, 1.0))
}

/// A GCQ value together with its change when the node count doubles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuardedValue {
    pub value: f64,
    pub discrepancy: f64,
}

impl GuardedValue {
    pub fn converged(&self) -> bool {
        self.discrepancy <= CONVERGENCE_WARN
    }
}

pub fn pfa_tbcr_guarded(gamma: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<GuardedValue> {
    let value = pfa_tbcr(gamma, p, cfg)?;
    let fine = pfa_tbcr(gamma, p, &cfg.doubled())?;
    Ok(GuardedValue {
        value,
        discrepancy: (fine - value).abs(),
    })
}

pub fn pd_tbcr_guarded(gamma: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<GuardedValue> {
    let value = pd_tbcr(gamma, p, cfg)?;
    let fine = pd_tbcr(gamma, p, &cfg.doubled())?;
    Ok(GuardedValue {
        value,
        discrepancy: (fine - value).abs(),
    })
}

/// Threshold achieving `pfa_tbcr = epsilon`, by bisection.
pub fn threshold_tbcr(epsilon: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<f64> {
    check_epsilon(epsilon)?;
    tbcr_prechecks(p, cfg)?;
    let pfa = |g: f64| pfa_tbcr(g, p, cfg);
    let mut hi = ideal_threshold(epsilon, p).max(1e-3);
    let mut widen = 0;
    while pfa(hi)? > epsilon {
        hi *= 2.0;
        widen += 1;
        if widen > 200 {
            return Err(Error::Threshold(format!("no bracket for epsilon {epsilon}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = pfa(mid)?;
        if v == epsilon || hi - lo < 1e-14 * hi {
            return Ok(mid);
        }
        if v > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let v = pfa(mid)?;
    if (v - epsilon).abs() < THRESHOLD_TOL {
        Ok(mid)
    } else {
        Err(Error::Threshold(format!("bisection stalled at P_FA {v}, target {epsilon}")))
    }
}

/// Fast threshold taking the cross term of the GCQ exponent as 1.
/// Accurate only when `2 gamma^2 rho_t^2 / (L sigma_A^2)` is small.
pub fn threshold_tbcr_heuristic(epsilon: f64, p: &SchemeParams, cfg: &GcqConfig) -> Result<f64> {
    check_epsilon(epsilon)?;
    tbcr_prechecks(p, cfg)?;
    let n = cfg.nodes as f64;
    let s: f64 = (1..=cfg.nodes)
        .map(|i| {
            let k = ((2 * i - 1) as f64 * PI / (2.0 * n)).cos();
            let den = 4.0 * p.sigma_h_sq * p.sigma_a_sq * (0.75 - 0.25 * k * k - 0.5 * k);
            let e = if den > 0.0 {
                (-p.sigma_b_sq * (k + 1.0).powi(2) / den).exp()
            } else {
                0.0
            };
            (1.0 - k * k).sqrt() * INV_SQRT_2PI * e
        })
        .sum::<f64>()
        * PI
        / n;
    let slope = 0.5 * s * (2.0 * p.rho_t_sq / (p.l as f64 * p.sigma_a_sq)).sqrt();
    if slope <= 0.0 {
        return Err(Error::Threshold("heuristic slope vanished".into()));
    }
    Ok((0.5 - epsilon) / slope)
}

fn sca_core(delta: f64, p: &SchemeParams) -> f64 {
    let c = p.rho_t_sq * p.sigma_h_sq * delta * delta;
    if c == 0.0 {
        return 0.5;
    }
    0.5 * (1.0 - sign(delta) * (c / (p.l as f64 * p.sigma_b_sq + c)).sqrt())
}

pub fn pfa_sca(gamma: f64, p: &SchemeParams) -> f64 {
    sca_core(gamma, p)
}

pub fn threshold_sca(epsilon: f64, p: &SchemeParams) -> Result<f64> {
    check_epsilon(epsilon)?;
    let l = p.l as f64;
    Ok((1.0 - 2.0 * epsilon) * (l * p.sigma_b_sq / (4.0 * epsilon * (1.0 - epsilon) * p.rho_t_sq * p.sigma_h_sq)).sqrt())
}

pub fn pd_sca(gamma: f64, p: &SchemeParams) -> f64 {
    sca_core(gamma - p.l as f64, p)
}

/// Ideal TBCR forms: the GCQ integral with `sigma_A = 0` in closed form,
/// `int_0^inf phi(x) exp(-c x^2) dx = 1 / (2 sqrt(1 + 2c))`.
fn ideal_tbcr_tail(delta: f64, p: &SchemeParams) -> f64 {
    let a = 2.0 * delta * delta * p.rho_t_sq / p.l as f64;
    if a == 0.0 {
        return 0.5;
    }
    let c = p.sigma_b_sq / (p.sigma_h_sq * a);
    0.5 - sign(delta) * 0.5 / (1.0 + 2.0 * c).sqrt()
}

pub fn ideal_tbcr_pfa(gamma: f64, p: &SchemeParams) -> f64 {
    ideal_tbcr_tail(gamma, p)
}

pub fn ideal_tbcr_pd(gamma: f64, p: &SchemeParams) -> f64 {
    ideal_tbcr_tail(gamma - p.l as f64, p)
}

pub fn ideal_tbcr_threshold(epsilon: f64, p: &SchemeParams) -> Result<f64> {
    check_epsilon(epsilon)?;
    // 1 + 2c = 1 / (1 - 2 eps)^2 solved for gamma.
    let r = 1.0 - 2.0 * epsilon;
    let c = 0.5 * (1.0 / (r * r) - 1.0);
    Ok((p.sigma_b_sq * p.l as f64 / (2.0 * p.rho_t_sq * p.sigma_h_sq * c)).sqrt())
}

fn ideal_variance(p: &SchemeParams) -> f64 {
    p.l as f64 * p.sigma_b_sq / p.rho_t_sq
}

/// Ideal (error-free decoding) SUP forms from the Gaussian statistic
/// `L + Re{t^H w} / (rho_t h)`.
pub fn ideal_pfa(gamma: f64, p: &SchemeParams) -> f64 {
    rayleigh_tail(gamma, ideal_variance(p), p.sigma_h_sq)
}

pub fn ideal_pd(gamma: f64, p: &SchemeParams) -> f64 {
    rayleigh_tail(gamma - p.l as f64, ideal_variance(p), p.sigma_h_sq)
}

pub fn ideal_threshold(epsilon: f64, p: &SchemeParams) -> f64 {
    rayleigh_tail_inverse(epsilon, ideal_variance(p), p.sigma_h_sq)
}

/// Replaces `sigma_B^2` by the variance that absorbs CSI error `eta_e_sq`.
pub fn nonideal_substitution(p: &SchemeParams, eta_e_sq: f64, scheme: Scheme) -> Result<SchemeParams> {
    if !(0.0..1.0).contains(&eta_e_sq) {
        return Err(param("eta_e_sq", format!("must lie in [0, 1), got {eta_e_sq}")));
    }
    let l = p.l as f64;
    let extra = match scheme {
        Scheme::Tbcr => (l * p.rho_t_sq + p.rho_s_sq * p.sigma_a_sq) * eta_e_sq * p.sigma_h_sq,
        Scheme::Sca => p.rho_t_sq * l * eta_e_sq * p.sigma_h_sq,
        Scheme::Sup | Scheme::Btp => return Err(Error::NoClosedForm("CSI error in decode-based schemes")),
    };
    Ok(SchemeParams {
        sigma_b_sq: p.sigma_b_sq + extra,
        ..*p
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveCase {
    TbcrNearAlice,
    TbcrNearBob,
    Sca,
}

impl EveCase {
    /// `(v, s)` of Eve's statistic: variance scale and channel mean.
    fn moments(self, p: &SchemeParams) -> (f64, f64) {
        let l = p.l as f64;
        match self {
            EveCase::TbcrNearAlice => ((p.sigma_a_sq + p.sigma_e_sq) * l, p.sigma_h_sq),
            EveCase::TbcrNearBob => (l * p.sigma_e_sq, p.sigma_h_sq),
            EveCase::Sca => (l * p.sigma_e_sq, p.sigma_ea_sq),
        }
    }

    fn mean_h1(self, p: &SchemeParams) -> f64 {
        (1.0 - p.rho_s()) * p.l as f64
    }

    fn tail(self, delta: f64, v: f64, s: f64) -> f64 {
        match self {
            EveCase::TbcrNearBob => rayleigh_linear_tail(delta, v, s),
            _ => rayleigh_tail(delta, v, s),
        }
    }
}

pub fn eve_pfa(case: EveCase, gamma: f64, p: &SchemeParams) -> f64 {
    let (v, s) = case.moments(p);
    case.tail(gamma, v, s)
}

pub fn eve_threshold(case: EveCase, epsilon: f64, p: &SchemeParams) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (v, s) = case.moments(p);
    Ok(match case {
        EveCase::TbcrNearBob => {
            let w = g_inverse(0.5 - epsilon)?;
            (v / (2.0 * w * w * s * s)).sqrt()
        }
        _ => rayleigh_tail_inverse(epsilon, v, s),
    })
}

/// Eve's detection probability. For near-Alice TBCR the noise at Alice is
/// dropped, giving the high-SNR upper bound.
pub fn eve_pd(case: EveCase, gamma: f64, p: &SchemeParams) -> f64 {
    let (v, s) = match case {
        EveCase::TbcrNearAlice => (p.l as f64 * p.sigma_e_sq, p.sigma_h_sq),
        _ => case.moments(p),
    };
    case.tail(gamma - case.mean_h1(p), v, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyEquivocation {
    pub mean_tnr: f64,
    pub p_e: f64,
    pub bits: f64,
}

impl KeyEquivocation {
    fn from_mean_tnr(mean_tnr: f64) -> Self {
        let p_e = q_func(mean_tnr.sqrt());
        Self {
            mean_tnr,
            p_e,
            bits: binary_entropy(p_e),
        }
    }
}

/// Equivocation of the tag given Eve's observation, per symbol.
pub fn key_equivocation(scheme: Scheme, p: &SchemeParams) -> Result<KeyEquivocation> {
    p.validate()?;
    let mean = match scheme {
        Scheme::Tbcr => {
            let f = |y: f64| p.rho_t_sq * y / (p.rho_s_sq * y * p.sigma_a_sq + p.sigma_e_sq);
            integrate_exponential(f, p.sigma_ea_sq, 1e-8)?
        }
        // SUP and BTP expose the tag to Eve at the same TNR as SCA.
        Scheme::Sca | Scheme::Sup | Scheme::Btp => p.rho_t_sq * p.sigma_ea_sq / p.sigma_e_sq,
    };
    Ok(KeyEquivocation::from_mean_tnr(mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbeParams {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
    pub n_frames: usize,
    /// Cancels in every ratio.
    pub bandwidth: f64,
    pub snr_linear: f64,
}

impl RbeParams {
    /// Pilot 32, authentication 32, message 64 symbols, 10 frames per tag, 0 dB.
    pub fn standard() -> Self {
        Self {
            l1: 32,
            l2: 32,
            l3: 64,
            n_frames: 10,
            bandwidth: 1.0,
            snr_linear: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l1 + self.l3 == 0 || self.n_frames == 0 {
            return Err(param("rbe", "need l1 + l3 >= 1 and n_frames >= 1"));
        }
        if !(self.snr_linear > 0.0) || !(self.bandwidth > 0.0) {
            return Err(param("rbe", "snr_linear and bandwidth must be positive"));
        }
        Ok(())
    }

    fn base(&self) -> f64 {
        (self.n_frames * (self.l1 + self.l3)) as f64
    }

    pub fn capacity_plain(&self) -> f64 {
        self.bandwidth * (1.0 + self.snr_linear).log2()
    }

    /// Message capacity with the tag treated as noise, SUP power split.
    pub fn capacity_tagged(&self, rho_t_sq: f64) -> f64 {
        let sigma_b_sq = 1.0 / self.snr_linear;
        let gamma_tag = (1.0 - rho_t_sq) / (sigma_b_sq + rho_t_sq);
        self.bandwidth * (1.0 + gamma_tag).log2()
    }

    /// `C_Tag / C_0`.
    pub fn delta(&self, rho_t_sq: f64) -> f64 {
        self.capacity_tagged(rho_t_sq) / self.capacity_plain()
    }
}

/// Ratio of average to tag-free bandwidth efficiency.
pub fn rbe(scheme: Scheme, r: &RbeParams, p: &SchemeParams) -> Result<f64> {
    r.validate()?;
    let a = r.base();
    let l2 = r.l2 as f64;
    let delta = r.delta(p.rho_t_sq);
    Ok(match scheme {
        Scheme::Sup | Scheme::Btp => 1.0 - (1.0 - delta) * l2 / a,
        Scheme::Tbcr => 1.0 - l2 / (a + 2.0 * l2),
        Scheme::Sca => 1.0 - (2.0 - delta) * l2 / (a + l2),
    })
}

/// Bandwidth-efficiency ratio against SUP.
///
/// The TBCR ratio counts the authenticated share `A / (A + L2)` of the
/// exchange against SUP's `xi`, with `A = N (L1 + L3)`; it is not
/// `rbe(Tbcr) / rbe(Sup)`.
pub fn rbe_ratio(scheme: Scheme, r: &RbeParams, p: &SchemeParams) -> Result<f64> {
    r.validate()?;
    let a = r.base();
    let l2 = r.l2 as f64;
    let delta = r.delta(p.rho_t_sq);
    Ok(match scheme {
        Scheme::Sup | Scheme::Btp => 1.0,
        Scheme::Tbcr => a * a / ((a + l2) * (a - (1.0 - delta) * l2)),
        Scheme::Sca => a / (a + l2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub z_s: f64,
    pub z_p: f64,
    pub e_frame: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("z_s", self.z_s), ("z_p", self.z_p), ("e_frame", self.e_frame)] {
            if !(v >= 0.0) {
                return Err(param(n, "must be >= 0"));
            }
        }
        Ok(())
    }
}

/// Frame-equivalents of symbols sent per authentication.
fn frame_load(scheme: Scheme, r: &RbeParams) -> f64 {
    let per = (r.l1 + r.l3) as f64;
    let n = r.n_frames as f64;
    let l2 = r.l2 as f64;
    match scheme {
        Scheme::Sup | Scheme::Btp => n,
        Scheme::Tbcr => (n * per + 2.0 * l2) / per,
        Scheme::Sca => (n * per + l2) / per,
    }
}

pub fn auth_delay(scheme: Scheme, r: &RbeParams, c: &CostParams) -> Result<f64> {
    r.validate()?;
    c.validate()?;
    let hops = match scheme {
        Scheme::Tbcr => r.n_frames as f64 + 1.0,
        _ => r.n_frames as f64,
    };
    Ok(frame_load(scheme, r) * c.z_s + hops * c.z_p)
}

pub fn auth_energy(scheme: Scheme, r: &RbeParams, c: &CostParams) -> Result<f64> {
    r.validate()?;
    c.validate()?;
    Ok(frame_load(scheme, r) * c.e_frame)
}

// 15-point Kronrod nodes on [-1, 1] (non-negative half) with Kronrod and
// embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod integration over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    loop {
        let total: f64 = parts.iter().map(|p| p.2 .0).sum();
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        let target = (rel_tol * total.abs()).max(1e-300);
        if err <= target {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Convergence {
                achieved: err / total.abs().max(1e-300),
                requested: rel_tol,
            });
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
}

/// `int_0^inf F(y) exp(-y/s)/s dy` through `y = s t / (1 - t)`.
fn integrate_exponential(f: impl Fn(f64) -> f64, s: f64, rel_tol: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(param("sigma_h_sq", "must be > 0"));
    }
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let om = 1.0 - t;
        let z = t / om;
        let w = (-z).exp() / (om * om);
        if w == 0.0 {
            0.0
        } else {
            f(s * z) * w
        }
    };
    integrate(g, 0.0, 1.0, rel_tol)
}

/// `E[F(|h|^2)]` for `|h|^2 ~ Exp(sigma_h_sq)`, adaptive quadrature at relative tolerance 1e-9.
pub fn channel_expectation_oracle(integrand: impl Fn(f64) -> f64, sigma_h_sq: f64) -> Result<f64> {
    integrate_exponential(integrand, sigma_h_sq, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tbcr_p(l: usize, rho_t_sq: f64, alice_db: f64, bob_db: f64) -> SchemeParams {
        SchemeParams::tbcr(l, rho_t_sq, 1.0).with_snr_db(bob_db, alice_db, bob_db)
    }

    #[test]
    fn special_functions() {
        assert_eq!(q_func(0.0), 0.5);
        assert!((g_func(1e-12) - 0.5).abs() < 1e-12);
        let g1 = g_func(1.0);
        assert!((g_inverse(g1).unwrap() - 1.0).abs() < 1e-10);
        let asym = 1.0 / (10.0 * (2.0 * PI).sqrt());
        assert!((g_func(10.0) / asym - 1.0).abs() < 0.01);
        // continuity across the branch switch
        let a = (0.5 * 19.999f64.powi(2)).exp() * q_func(19.999);
        assert!((a / g_func(20.0001) - 1.0).abs() < 1e-4);
        assert!(g_inverse(0.5).is_err());
        assert!(g_inverse(0.0).is_err());
        let mut prev = g_func(0.0);
        for i in 1..400 {
            let v = g_func(i as f64 * 0.1);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn oracle_basics() {
        assert!((channel_expectation_oracle(|_| 1.0, 1.7).unwrap() - 1.0).abs() < 1e-9);
        assert!((channel_expectation_oracle(|y| y, 1.7).unwrap() - 1.7).abs() < 1e-8);
        for &c in &[0.3, 1.0, 4.0] {
            let s = 1.3;
            let got = channel_expectation_oracle(|y| q_func(c * y.sqrt()), s).unwrap();
            let x = c * c * s / 2.0;
            assert!((got - 0.5 * (1.0 - (x / (1.0 + x)).sqrt())).abs() < 1e-8);
        }
    }

    #[test]
    fn sca_forms() {
        let p = SchemeParams::sup_sca(64, 0.1);
        assert_eq!(pfa_sca(0.0, &p), 0.5);
        assert_eq!(pd_sca(64.0, &p), 0.5);
        let t = threshold_sca(0.01, &p).unwrap();
        assert!((pfa_sca(t, &p) - 0.01).abs() < 1e-12);
        assert!(threshold_sca(0.5, &p).is_err());
        let want = 0.5 * (64.0 / (0.75 * 0.1f64)).sqrt();
        assert!((threshold_sca(0.25, &p).unwrap() - want).abs() < 1e-12);
        assert!(ideal_tbcr_threshold(0.5 - 1e-12, &p).unwrap() < 1e-4);
    }

    #[test]
    fn sca_equals_ideal_tbcr_identities() {
        let p = SchemeParams::sup_sca(32, 0.05).with_snr_db(3.0, 0.0, 0.0);
        for &g in &[-5.0, 0.0, 3.0, 17.0, 32.0, 60.0] {
            assert!((pfa_sca(g, &p) - ideal_tbcr_pfa(g, &p)).abs() < 1e-12);
            assert!((pfa_sca(g, &p) - ideal_pfa(g, &p)).abs() < 1e-12);
            assert!((pd_sca(g, &p) - ideal_tbcr_pd(g, &p)).abs() < 1e-12);
            assert!((pd_sca(g, &p) - ideal_pd(g, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn tbcr_sign_conventions() {
        let p = tbcr_p(64, 0.1, 10.0, 5.0);
        let cfg = GcqConfig::default();
        assert_eq!(pd_tbcr(64.0, &p, &cfg).unwrap(), 0.5);
        assert_eq!(pfa_tbcr(0.0, &p, &cfg).unwrap(), 0.5);
        let mut q = p;
        q.sigma_a_sq = 0.0;
        assert!(pfa_tbcr(1.0, &q, &cfg).is_err());
        let t = threshold_tbcr(0.01, &p, &cfg).unwrap();
        assert!((pfa_tbcr(t, &p, &cfg).unwrap() - 0.01).abs() < 1e-8);
        assert!(GcqConfig::new(0).is_err());
    }

    #[test]
    fn nonideal_arithmetic() {
        let mut p = SchemeParams::tbcr(64, 0.1, 1.0);
        p.rho_s_sq = 0.5;
        p.sigma_a_sq = 1.0;
        let q = nonideal_substitution(&p, 0.1, Scheme::Tbcr).unwrap();
        assert!((q.sigma_b_sq - 1.69).abs() < 1e-12);
        assert_eq!(nonideal_substitution(&p, 0.0, Scheme::Sca).unwrap(), p);
        let s = nonideal_substitution(&p, 0.1, Scheme::Sca).unwrap();
        assert!(s.sigma_b_sq < q.sigma_b_sq);
        assert!(nonideal_substitution(&p, 1.0, Scheme::Sca).is_err());
    }

    #[test]
    fn eve_forms() {
        let p = SchemeParams::tbcr(64, 0.1, 0.1);
        for case in [EveCase::TbcrNearAlice, EveCase::TbcrNearBob, EveCase::Sca] {
            assert_eq!(eve_pfa(case, 0.0, &p), 0.5);
            let t = eve_threshold(case, 0.01, &p).unwrap();
            assert!((eve_pfa(case, t, &p) - 0.01).abs() < 1e-10, "{case:?}");
            assert_eq!(eve_pd(case, case.mean_h1(&p), &p), 0.5);
        }
        assert!(eve_pfa(EveCase::TbcrNearBob, 1e9, &p) < 1e-6);
    }

    #[test]
    fn equivocation_limits() {
        assert!((KeyEquivocation::from_mean_tnr(0.0).bits - 1.0).abs() < 1e-15);
        assert!(KeyEquivocation::from_mean_tnr(1e4).bits < 1e-12);
        let p = SchemeParams::sup_sca(64, 0.1);
        let k = key_equivocation(Scheme::Sca, &p).unwrap();
        assert!((k.mean_tnr - 0.1).abs() < 1e-15);
        let t = key_equivocation(Scheme::Tbcr, &SchemeParams::tbcr(64, 0.1, 0.1)).unwrap();
        assert!(t.bits > 0.0 && t.bits <= 1.0);
    }

    #[test]
    fn rbe_and_costs() {
        let r = RbeParams::standard();
        let p = SchemeParams::sup_sca(32, 0.1);
        let tb = rbe_ratio(Scheme::Tbcr, &r, &p).unwrap();
        let sc = rbe_ratio(Scheme::Sca, &r, &p).unwrap();
        assert!((tb - 0.9722).abs() < 5e-5, "{tb}");
        assert!((sc - 0.9677).abs() < 5e-5, "{sc}");
        let direct = rbe(Scheme::Sca, &r, &p).unwrap() / rbe(Scheme::Sup, &r, &p).unwrap();
        assert!((direct - sc).abs() < 1e-12);
        let p0 = SchemeParams::sup_sca(32, 0.0);
        assert!((rbe(Scheme::Sup, &r, &p0).unwrap() - 1.0).abs() < 1e-15);
        let c = CostParams {
            z_s: 1.0,
            z_p: 0.0,
            e_frame: 1.0,
        };
        assert!((auth_delay(Scheme::Tbcr, &r, &c).unwrap() - 10.0 - 2.0 / 3.0).abs() < 1e-12);
        assert!((auth_delay(Scheme::Sca, &r, &c).unwrap() - 10.0 - 1.0 / 3.0).abs() < 1e-12);
        assert!((auth_energy(Scheme::Sup, &r, &c).unwrap() - 10.0).abs() < 1e-12);
    }
}
