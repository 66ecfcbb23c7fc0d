//! Keyed tag generation and keyed interleavers.
//!
//! Tags come from HMAC-SHA256 in counter mode over the sign bits of the
//! input symbols. Bit 0 maps to `+1`, bit 1 to `-1`.

use std::fmt;
use std::marker::PhantomData;

use hmac::{Hmac, Mac};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{check_len, param, Result};
use crate::sigcore::{ComplexVec, C64};

type HmacSha256 = Hmac<Sha256>;

pub const MIN_KEY_BYTES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyPurpose {
    Tag,
    Interleaver,
}

pub trait Purpose {
    const PURPOSE: KeyPurpose;
}

/// Marker for `k_Tag`.
#[derive(Debug, Clone, Copy)]
pub enum TagPurpose {}
/// Marker for `k_in`.
#[derive(Debug, Clone, Copy)]
pub enum InterleaverPurpose {}

impl Purpose for TagPurpose {
    const PURPOSE: KeyPurpose = KeyPurpose::Tag;
}
impl Purpose for InterleaverPurpose {
    const PURPOSE: KeyPurpose = KeyPurpose::Interleaver;
}

/// Secret key bound to one purpose at the type level.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey<P: Purpose> {
    bytes: Vec<u8>,
    _purpose: PhantomData<P>,
}

pub type TagKey = SecretKey<TagPurpose>;
pub type InterleaverKey = SecretKey<InterleaverPurpose>;

impl<P: Purpose> SecretKey<P> {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MIN_KEY_BYTES {
            return Err(param(
                "key",
                format!("need at least {MIN_KEY_BYTES} bytes, got {}", bytes.len()),
            ));
        }
        Ok(Self {
            bytes: bytes.to_vec(),
            _purpose: PhantomData,
        })
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.len().is_multiple_of(2) {
            return Err(param("key", "hex string has odd length"));
        }
        let bytes = (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| param("key", format!("bad hex: {e}")))?;
        Self::from_bytes(&bytes)
    }

    pub fn purpose(&self) -> KeyPurpose {
        P::PURPOSE
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Copy with bit `bit` (counted from the first byte's LSB) flipped.
    pub fn with_bit_flipped(&self, bit: usize) -> Self {
        let mut bytes = self.bytes.clone();
        bytes[bit / 8 % self.bytes.len()] ^= 1 << (bit % 8);
        Self {
            bytes,
            _purpose: PhantomData,
        }
    }

    fn mac(&self) -> HmacSha256 {
        HmacSha256::new_from_slice(&self.bytes).expect("HMAC accepts any key length")
    }
}

impl<P: Purpose> fmt::Debug for SecretKey<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey<{:?}>({} bytes)", P::PURPOSE, self.bytes.len())
    }
}

/// Sign bits of the real parts, packed LSB first. Non-negative maps to 0.
fn pack_sign_bits(symbols: &[C64]) -> Vec<u8> {
    let mut out = vec![0u8; symbols.len().div_ceil(8)];
    for (i, z) in symbols.iter().enumerate() {
        if z.re < 0.0 {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

/// `t = Gen(p, k_Tag)`: BPSK tag of `length` symbols keyed on the pilot's sign pattern.
pub fn gen_tag(pilot: &[C64], key: &TagKey, length: usize) -> ComplexVec {
    let bits = pack_sign_bits(pilot);
    let mut tag = Vec::with_capacity(length);
    let mut counter = 0u32;
    while tag.len() < length {
        let mut mac = key.mac();
        mac.update(b"tagauth/tag");
        mac.update(&(pilot.len() as u64).to_le_bytes());
        mac.update(&(length as u64).to_le_bytes());
        mac.update(&counter.to_le_bytes());
        mac.update(&bits);
        let block = mac.finalize().into_bytes();
        for byte in block.iter() {
            for b in 0..8 {
                if tag.len() == length {
                    break;
                }
                let v = if byte >> b & 1 == 0 { 1.0 } else { -1.0 };
                tag.push(C64::new(v, 0.0));
            }
        }
        counter += 1;
    }
    ComplexVec(tag)
}

/// Permutation of `0..n` applied as a gather: `out[i] = v[map[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || seen[m] {
                return Err(param("permutation", format!("index {m} repeated or out of range")));
            }
            seen[m] = true;
        }
        Ok(Self { map })
    }

    /// Builds from 1-based indices as written in index notation.
    pub fn from_one_based(map: &[usize]) -> Result<Self> {
        if map.contains(&0) {
            return Err(param("permutation", "one-based map contains 0"));
        }
        Self::new(map.iter().map(|m| m - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &m) in self.map.iter().enumerate() {
            inv[m] = i;
        }
        Self { map: inv }
    }

    /// `self` after `first`: gathering with the result equals gathering with
    /// `first` then with `self`.
    pub fn after(&self, first: &Permutation) -> Self {
        Self {
            map: self.map.iter().map(|&i| first.map[i]).collect(),
        }
    }
}

/// Keyed Fisher-Yates permutation of `0..size`.
pub fn gen_interleaver(key: &InterleaverKey, size: usize) -> Result<Permutation> {
    if size < 2 || !size.is_multiple_of(2) {
        return Err(param("size", format!("must be even and >= 2, got {size}")));
    }
    let mut mac = key.mac();
    mac.update(b"tagauth/interleaver");
    mac.update(&(size as u64).to_le_bytes());
    let seed: [u8; 32] = mac.finalize().into_bytes().into();
    let mut rng = ChaCha20Rng::from_seed(seed);
    let mut map: Vec<usize> = (0..size).collect();
    for i in (1..size).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        map.swap(i, j);
    }
    Ok(Permutation { map })
}

pub fn interleave(v: &[C64], p: &Permutation) -> Result<ComplexVec> {
    check_len(p.len(), v.len())?;
    Ok(p.map.iter().map(|&i| v[i]).collect())
}

pub fn deinterleave(v: &[C64], p: &Permutation) -> Result<ComplexVec> {
    check_len(p.len(), v.len())?;
    let mut out = ComplexVec::zeros(v.len());
    for (i, &m) in p.map.iter().enumerate() {
        out[m] = v[i];
    }
    Ok(out)
}
