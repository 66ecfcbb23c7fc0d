use num_bigint::BigUint;
use proptest::prelude::*;
use tagauth_core::adversary::{interleaver_guess_entropy_bits, interleaver_guess_probability_log2};
use tagauth_core::keytag::{deinterleave, gen_interleaver, gen_tag, interleave};
use tagauth_core::sigcore::{awgn, draw_rayleigh_block, perturb_csi};
use tagauth_core::{InterleaverKey, Permutation, RngStream, TagKey, C64};

fn key_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, b) in out.iter_mut().enumerate() {
        *b = (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(i as u32 * 3) >> 11) as u8 ^ i as u8;
    }
    out
}

fn tag_key(seed: u64) -> TagKey {
    TagKey::from_bytes(&key_bytes(seed)).unwrap()
}

fn il_key(seed: u64) -> InterleaverKey {
    InterleaverKey::from_bytes(&key_bytes(seed ^ 0xFFFF)).unwrap()
}

fn pilot(len: usize, seed: u64) -> Vec<C64> {
    (0..len)
        .map(|i| C64::new(if (seed >> (i % 64)) & 1 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect()
}

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::from(1u32), |acc, k| acc * k)
}

fn big_log2(v: &BigUint) -> f64 {
    let bits = v.bits();
    let shift = bits.saturating_sub(53);
    let top: u64 = (v >> shift).try_into().unwrap();
    (top as f64).log2() + shift as f64
}

#[test]
fn channel_and_noise_moments() {
    let mut rng = RngStream::new(101, 0).rng();
    let n = 1_000_000;
    let (mut p, mut re, mut re2) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let h = draw_rayleigh_block(4.0, &mut rng).unwrap();
        p += h.norm_sqr();
        re += h.re;
        re2 += h.re * h.re;
    }
    let mean_re = re / n as f64;
    assert!((p / n as f64 / 4.0 - 1.0).abs() < 0.01);
    assert!((re2 / n as f64 - mean_re * mean_re - 2.0).abs() / 2.0 < 0.01);
    let w = awgn(n, 1.0, &mut rng).unwrap();
    let m = w.norm_sqr() / n as f64;
    assert!((0.99..=1.01).contains(&m));
    let corr: f64 = w.iter().map(|z| z.re * z.im).sum::<f64>() / (n as f64 * 0.5);
    assert!(corr.abs() < 0.01);
}

#[test]
fn csi_error_variance() {
    let mut rng = RngStream::new(102, 0).rng();
    let n = 1_000_000;
    let mut acc = 0.0;
    for _ in 0..n {
        let h = draw_rayleigh_block(1.0, &mut rng).unwrap();
        let d = perturb_csi(h, 0.1, 1.0, &mut rng).unwrap();
        assert_eq!(d.h_true, d.h_est + d.delta_h);
        acc += d.delta_h.norm_sqr();
    }
    assert!((acc / n as f64 / 0.1 - 1.0).abs() < 0.01);
}

#[test]
fn tag_energy_and_balance() {
    let l = 64;
    let frames = 10_000;
    let mut energy = 0.0;
    let mut per_pos = vec![0.0; l];
    for f in 0..frames {
        let t = gen_tag(&pilot(32, f as u64 * 31 + 7), &tag_key(f as u64), l);
        energy += t.norm_sqr();
        if f < 1000 {
            for (acc, z) in per_pos.iter_mut().zip(t.iter()) {
                *acc += z.re;
            }
        }
    }
    assert!((energy / frames as f64 / l as f64 - 1.0).abs() < 0.02);
    assert!(per_pos.iter().all(|s| (s / 1000.0).abs() < 0.1));
}

#[test]
fn key_avalanche() {
    let l = 64;
    let mut changed = 0usize;
    let trials = 1000;
    for i in 0..trials {
        let k = tag_key(i as u64);
        let p = pilot(32, i as u64);
        let a = gen_tag(&p, &k, l);
        let b = gen_tag(&p, &k.with_bit_flipped(i % 256), l);
        changed += a.iter().zip(b.iter()).filter(|(x, y)| x != y).count();
    }
    assert!(changed as f64 / (trials * l) as f64 >= 0.3);
}

#[test]
fn permutation_counts_by_enumeration() {
    // Keyed interleavers of size 2L must reach all (2L)! permutations for small L.
    for (size, keys) in [(2usize, 200u64), (4, 2000)] {
        let mut seen = std::collections::HashSet::new();
        for k in 0..keys {
            seen.insert(gen_interleaver(&il_key(k), size).unwrap().as_slice().to_vec());
        }
        let count: u64 = (1..=size as u64).product();
        assert_eq!(seen.len() as u64, count);
    }
    for l in 1..=3 {
        let exact = big_log2(&factorial(2 * l));
        assert!((interleaver_guess_entropy_bits(l) - exact).abs() < 1e-9);
    }
    assert_eq!(interleaver_guess_entropy_bits(1), 1.0);
    assert!((interleaver_guess_entropy_bits(3) - 720f64.log2()).abs() < 1e-12);
}

#[test]
fn guess_probability_matches_big_factorial() {
    for l in [32usize, 64] {
        let exact = big_log2(&factorial(2 * l));
        assert!((interleaver_guess_entropy_bits(l) - exact).abs() / exact < 1e-12);
        assert!((interleaver_guess_probability_log2(l) + exact).abs() / exact < 1e-12);
    }
    let bits = interleaver_guess_entropy_bits(32);
    assert!((bits - 296.0).abs() < 1.0, "log2(64!) = {bits}");
}

fn arb_permutation(max: usize) -> impl Strategy<Value = Permutation> {
    (1..=max)
        .prop_flat_map(|n| Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        .prop_map(|m| Permutation::new(m).unwrap())
}

fn arb_vector(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| C64::new(a, b)), n)
}

proptest! {
    #[test]
    fn interleave_round_trips(
        (p, v) in arb_permutation(96).prop_flat_map(|p| { let n = p.len(); (Just(p), arb_vector(n)) })
    ) {
        let fwd = interleave(&v, &p).unwrap();
        prop_assert_eq!(&deinterleave(&fwd, &p).unwrap().0, &v);
        prop_assert_eq!(&interleave(&deinterleave(&v, &p).unwrap(), &p).unwrap().0, &v);
        prop_assert_eq!(&interleave(&v, &p.inverse()).unwrap().0, &deinterleave(&v, &p).unwrap().0);
    }

    #[test]
    fn composition_matches_sequential_gather(
        (a, b, v) in (1usize..40).prop_flat_map(|n| (
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            arb_vector(n),
        ))
    ) {
        let (a, b) = (Permutation::new(a).unwrap(), Permutation::new(b).unwrap());
        let seq = interleave(&interleave(&v, &a).unwrap(), &b).unwrap();
        prop_assert_eq!(interleave(&v, &b.after(&a)).unwrap().0, seq.0);
    }

    #[test]
    fn keyed_interleavers_are_bijections(seed in any::<u64>(), half in 1usize..80) {
        let p = gen_interleaver(&il_key(seed), 2 * half).unwrap();
        let mut s = p.as_slice().to_vec();
        s.sort_unstable();
        prop_assert_eq!(s, (0..2 * half).collect::<Vec<_>>());
        prop_assert_eq!(gen_interleaver(&il_key(seed), 2 * half).unwrap(), p);
    }

    #[test]
    fn tags_are_bpsk_and_deterministic(seed in any::<u64>(), l in 1usize..300) {
        let p = pilot(32, seed);
        let t = gen_tag(&p, &tag_key(seed), l);
        prop_assert_eq!(t.len(), l);
        prop_assert!(t.iter().all(|z| z.im == 0.0 && z.re.abs() == 1.0));
        prop_assert_eq!(gen_tag(&p, &tag_key(seed), l), t);
    }
}
