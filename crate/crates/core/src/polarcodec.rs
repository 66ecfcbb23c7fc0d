//! BPSK modem, polar encoder and successive-cancellation-list decoder.
//!
//! The transform is `x = u F^{(x)n}` with `F = [[1,0],[1,1]]`, evaluated in
//! place by butterflies with no bit-reversal. Index `i` of `u` is decoded `i`-th.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::sigcore::{ComplexVec, C64};

pub const DEFAULT_DESIGN_SNR_DB: f64 = 2.0;
pub const DEFAULT_LIST_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarCodeConfig {
    pub block_length: usize,
    pub rate: f64,
    /// Sorted frozen indices.
    pub frozen_set: Vec<usize>,
    pub list_size: usize,
}

impl PolarCodeConfig {
    /// Code with a frozen set from the Bhattacharyya-bound construction at `design_snr_db`.
    pub fn construct(block_length: usize, rate: f64, list_size: usize, design_snr_db: f64) -> Result<Self> {
        let k = info_len_for(block_length, rate)?;
        let frozen_set = bhattacharyya_frozen_set(block_length, block_length - k, design_snr_db);
        let cfg = Self {
            block_length,
            rate,
            frozen_set,
            list_size,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `N = 64`, rate 1/2, list 8, design SNR 2 dB.
    pub fn default_64() -> Self {
        Self::construct(64, 0.5, DEFAULT_LIST_SIZE, DEFAULT_DESIGN_SNR_DB).expect("valid default code")
    }

    pub fn validate(&self) -> Result<()> {
        let k = info_len_for(self.block_length, self.rate)?;
        if self.list_size == 0 {
            return Err(param("list_size", "must be >= 1"));
        }
        if self.frozen_set.len() != self.block_length - k {
            return Err(param(
                "frozen_set",
                format!(
                    "expected {} frozen indices, got {}",
                    self.block_length - k,
                    self.frozen_set.len()
                ),
            ));
        }
        if self.frozen_set.windows(2).any(|w| w[0] >= w[1]) || self.frozen_set.last().is_some_and(|&f| f >= self.block_length) {
            return Err(param("frozen_set", "indices must be sorted, distinct and < N"));
        }
        Ok(())
    }

    pub fn info_len(&self) -> usize {
        self.block_length - self.frozen_set.len()
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.block_length];
        for &f in &self.frozen_set {
            mask[f] = true;
        }
        mask
    }

    pub fn info_positions(&self) -> Vec<usize> {
        let mask = self.frozen_mask();
        (0..self.block_length).filter(|&i| !mask[i]).collect()
    }
}

fn info_len_for(n: usize, rate: f64) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(param("block_length", format!("must be a power of two, got {n}")));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(param("rate", format!("must lie in (0, 1], got {rate}")));
    }
    let k = n as f64 * rate;
    if (k - k.round()).abs() > 1e-9 {
        return Err(param("rate", format!("N * rate = {k} is not an integer")));
    }
    Ok(k.round() as usize)
}

/// Bhattacharyya parameters of the synthetic channels for BPSK at `design_snr_db` (Es/N0).
pub fn bhattacharyya_parameters(n: usize, design_snr_db: f64) -> Vec<f64> {
    fn split(z: f64, n: usize, out: &mut Vec<f64>) {
        if n == 1 {
            out.push(z);
        } else {
            split(2.0 * z - z * z, n / 2, out);
            split(z * z, n / 2, out);
        }
    }
    let z0 = (-(10f64.powf(design_snr_db / 10.0))).exp();
    let mut out = Vec::with_capacity(n);
    split(z0, n, &mut out);
    out
}

/// The `n_frozen` least reliable indices, sorted ascending.
pub fn bhattacharyya_frozen_set(n: usize, n_frozen: usize, design_snr_db: f64) -> Vec<usize> {
    let z = bhattacharyya_parameters(n, design_snr_db);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut frozen = order[..n_frozen].to_vec();
    frozen.sort_unstable();
    frozen
}

/// `0 -> +1`, `1 -> -1`.
pub fn bpsk_modulate(bits: &[u8]) -> ComplexVec {
    bits.iter().map(|&b| C64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0)).collect()
}

/// Hard decision on the real part; negative maps to 1.
pub fn bpsk_hard_bits(symbols: &[C64]) -> Vec<u8> {
    symbols.iter().map(|z| u8::from(z.re < 0.0)).collect()
}

/// Per-bit LLRs `ln P(0)/P(1)` for `y = h s + w`, `w ~ CN(0, sigma_sq)`.
pub fn bpsk_demodulate_llr(y: &[C64], h_est: C64, sigma_sq: f64) -> Vec<f64> {
    let k = 4.0 / sigma_sq;
    y.iter().map(|&yi| k * (h_est.conj() * yi).re).collect()
}

/// In-place `u F^{(x)n}` over GF(2).
pub fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    let mut s = 1;
    while s < n {
        for base in (0..n).step_by(2 * s) {
            for j in base..base + s {
                x[j] ^= x[j + s];
            }
        }
        s *= 2;
    }
}

pub fn polar_encode(info_bits: &[u8], cfg: &PolarCodeConfig) -> Result<Vec<u8>> {
    check_len(cfg.info_len(), info_bits.len())?;
    let mut u = vec![0u8; cfg.block_length];
    for (&pos, &b) in cfg.info_positions().iter().zip(info_bits) {
        u[pos] = b & 1;
    }
    polar_transform(&mut u);
    Ok(u)
}

#[derive(Clone)]
struct Path {
    alpha: Vec<f64>,
    beta: Vec<u8>,
    left: Vec<u8>,
    u: Vec<u8>,
    metric: f64,
}

impl Path {
    fn new(n: usize) -> Self {
        Self {
            alpha: vec![0.0; 2 * n],
            beta: vec![0; 2 * n],
            left: vec![0; 2 * n],
            u: vec![0; n],
            metric: 0.0,
        }
    }

    fn copy_from(&mut self, other: &Path) {
        self.alpha.copy_from_slice(&other.alpha);
        self.beta.copy_from_slice(&other.beta);
        self.left.copy_from_slice(&other.left);
        self.u.copy_from_slice(&other.u);
        self.metric = other.metric;
    }

    fn set_leaf(&mut self, index: usize, bit: u8, metric: f64) {
        self.beta[1] = bit;
        self.u[index] = bit;
        self.metric = metric;
    }
}

#[inline]
fn min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// SCL decoder with reusable path storage. One instance per worker.
pub struct SclDecoder {
    n: usize,
    list_size: usize,
    frozen: Vec<bool>,
    info: Vec<usize>,
    paths: Vec<Path>,
    spare: Vec<Path>,
    candidates: Vec<(f64, usize, u8)>,
}

impl SclDecoder {
    pub fn new(cfg: &PolarCodeConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            n: cfg.block_length,
            list_size: cfg.list_size,
            frozen: cfg.frozen_mask(),
            info: cfg.info_positions(),
            paths: Vec::with_capacity(cfg.list_size * 2),
            spare: Vec::new(),
            candidates: Vec::with_capacity(cfg.list_size * 2),
        })
    }

    /// Information bits of the lowest-metric surviving path.
    pub fn decode(&mut self, llrs: &[f64]) -> Result<Vec<u8>> {
        check_len(self.n, llrs.len())?;
        self.spare.append(&mut self.paths);
        let mut root = self.spare.pop().unwrap_or_else(|| Path::new(self.n));
        root.alpha[self.n..].copy_from_slice(llrs);
        root.metric = 0.0;
        self.paths.push(root);
        self.node(self.n, 0);
        let best = self
            .paths
            .iter()
            .min_by(|a, b| a.metric.total_cmp(&b.metric))
            .expect("list never empties");
        Ok(self.info.iter().map(|&i| best.u[i]).collect())
    }

    fn node(&mut self, s: usize, base: usize) {
        if s == 1 {
            self.leaf(base);
            return;
        }
        let h = s / 2;
        for p in &mut self.paths {
            let (lo, hi) = p.alpha.split_at_mut(s);
            for j in 0..h {
                lo[h + j] = min_sum(hi[j], hi[h + j]);
            }
        }
        self.node(h, base);
        for p in &mut self.paths {
            let (l, b) = (&mut p.left, &p.beta);
            l[h..s].copy_from_slice(&b[h..s]);
            let (lo, hi) = p.alpha.split_at_mut(s);
            for j in 0..h {
                let sgn = if l[h + j] == 0 { 1.0 } else { -1.0 };
                lo[h + j] = hi[h + j] + sgn * hi[j];
            }
        }
        self.node(h, base + h);
        for p in &mut self.paths {
            for j in 0..h {
                let r = p.beta[h + j];
                p.beta[s + j] = p.left[h + j] ^ r;
                p.beta[s + h + j] = r;
            }
        }
    }

    fn leaf(&mut self, index: usize) {
        if self.frozen[index] {
            for p in &mut self.paths {
                let llr = p.alpha[1];
                let m = if llr < 0.0 { p.metric - llr } else { p.metric };
                p.set_leaf(index, 0, m);
            }
            return;
        }
        self.candidates.clear();
        for (i, p) in self.paths.iter().enumerate() {
            let llr = p.alpha[1];
            let (m0, m1) = if llr >= 0.0 {
                (p.metric, p.metric + llr)
            } else {
                (p.metric - llr, p.metric)
            };
            self.candidates.push((m0, i, 0));
            self.candidates.push((m1, i, 1));
        }
        self.candidates
            .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        self.candidates.truncate(self.list_size);

        let mut keep = vec![[None::<f64>; 2]; self.paths.len()];
        for &(m, i, b) in &self.candidates {
            keep[i][b as usize] = Some(m);
        }
        let old = std::mem::take(&mut self.paths);
        for (mut p, k) in old.into_iter().zip(keep) {
            match k {
                [None, None] => self.spare.push(p),
                [Some(m), None] => {
                    p.set_leaf(index, 0, m);
                    self.paths.push(p);
                }
                [None, Some(m)] => {
                    p.set_leaf(index, 1, m);
                    self.paths.push(p);
                }
                [Some(m0), Some(m1)] => {
                    let mut q = match self.spare.pop() {
                        Some(mut q) => {
                            q.copy_from(&p);
                            q
                        }
                        None => p.clone(),
                    };
                    p.set_leaf(index, 0, m0);
                    q.set_leaf(index, 1, m1);
                    self.paths.push(p);
                    self.paths.push(q);
                }
            }
        }
    }
}

/// One-shot decode; allocate an [`SclDecoder`] instead inside loops.
pub fn scl_decode(llrs: &[f64], cfg: &PolarCodeConfig) -> Result<Vec<u8>> {
    SclDecoder::new(cfg)?.decode(llrs)
}
