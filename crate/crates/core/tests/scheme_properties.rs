use proptest::prelude::*;
use tagauth_core::adversary::{
    eve_sca_statistic, eve_tbcr_observe, eve_tbcr_statistic, replay_discriminator, replay_waveforms, EveMode, EvePosition,
};
use tagauth_core::keytag::{deinterleave, interleave};
use tagauth_core::schemes::{
    sca_fold_tag, sca_series, sca_ssc, sca_ssg, sca_statistic, tbcr_residual, tbcr_respond, tbcr_statistic,
};
use tagauth_core::simlab::auc;
use tagauth_core::{ComplexVec, Permutation, RngStream, SchemeParams, C64};

fn cplx() -> impl Strategy<Value = C64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn channel() -> impl Strategy<Value = C64> {
    (0.05..3.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, th)| C64::from_polar(r, th))
}

fn bpsk(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| C64::new(if b { 1.0 } else { -1.0 }, 0.0)), n)
}

fn perm(n: usize) -> impl Strategy<Value = Permutation> {
    Just((0..n).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|m| Permutation::new(m).unwrap())
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

proptest! {
    // SCA: folding cancels any message exactly; only tag and folded noise remain.
    #[test]
    fn sca_message_cancellation(
        (m, t2, w, pm, h) in (1usize..48).prop_flat_map(|l| (
            prop::collection::vec(cplx(), l),
            prop::collection::vec(cplx(), 2 * l),
            prop::collection::vec(cplx(), 2 * l),
            perm(2 * l),
            channel(),
        )),
        rho_t_sq in 0.001..0.9f64,
    ) {
        let l = m.len();
        let p = SchemeParams::sup_sca(l, rho_t_sq);
        let series = sca_series(&m, &pm).unwrap();
        let de = deinterleave(&series, &pm).unwrap();
        for i in 0..l {
            prop_assert_eq!(de[i] + de[l + i], C64::new(0.0, 0.0));
        }
        let x = sca_ssg(&m, &t2, &pm, &p).unwrap().samples;
        let s_hat: Vec<C64> = x.iter().zip(&w).map(|(&xi, &wi)| (h * xi + wi) / h).collect();
        let r = sca_ssc(&s_hat, &pm, &p).unwrap();
        let tf = sca_fold_tag(&t2, &pm).unwrap();
        let wd = deinterleave(&w, &pm).unwrap();
        for i in 0..l {
            let expect = tf[i] + (wd[i] + wd[l + i]) / (h * p.rho_t());
            prop_assert!(close(r[i], expect, 1e-9), "{} vs {}", r[i], expect);
        }
        // Noise-free the statistic is |T|^2 / 2 regardless of the message.
        let clean = sca_ssc(&x, &pm, &p).unwrap();
        let stat = sca_statistic(&clean, &tf).unwrap();
        let energy = tf.norm_sqr() / 2.0;
        prop_assert!((stat - energy).abs() <= 1e-9 * (1.0 + energy));
    }

    // TBCR: r = t + (rho_s w_A + w_B / h) / rho_t with perfect CSI.
    #[test]
    fn tbcr_residual_decomposition(
        (x_c, t, w_a, w_b) in (1usize..80).prop_flat_map(|l| (
            bpsk(l), bpsk(l),
            prop::collection::vec(cplx(), l),
            prop::collection::vec(cplx(), l),
        )),
        h in channel(),
        rho_t_sq in 0.001..0.5f64,
        sigma_a_sq in 0.0..2.0f64,
    ) {
        let l = x_c.len();
        let p = SchemeParams::tbcr(l, rho_t_sq, sigma_a_sq);
        let y_a: Vec<C64> = x_c.iter().zip(&w_a).map(|(&x, &w)| h.conj() * x + w).collect();
        let x_r = tbcr_respond(&y_a, &t, &p).unwrap().samples;
        let y_b: Vec<C64> = x_r.iter().zip(&w_b).map(|(&x, &w)| h * x + w).collect();
        let r = tbcr_residual(&y_b, &x_c, h, &p).unwrap();
        let mut expect_stat = 0.0;
        for i in 0..l {
            let e = t[i] + (w_a[i] * p.rho_s() + w_b[i] / h) / p.rho_t();
            prop_assert!(close(r[i], e, 1e-9), "{} vs {}", r[i], e);
            expect_stat += (t[i].conj() * e).re;
        }
        let stat = tbcr_statistic(&y_b, &x_c, h, &t, &p).unwrap();
        prop_assert!((stat - expect_stat).abs() <= 1e-9 * (1.0 + expect_stat.abs()));
    }

    #[test]
    fn tbcr_noise_free_statistic_is_l(
        (x_c, t) in (1usize..80).prop_flat_map(|l| (bpsk(l), bpsk(l))),
        h in channel(),
        rho_t_sq in 0.001..0.5f64,
    ) {
        let l = x_c.len();
        let p = SchemeParams::tbcr(l, rho_t_sq, 0.5);
        let y_a: Vec<C64> = x_c.iter().map(|&x| h.conj() * x).collect();
        let x_r = tbcr_respond(&y_a, &t, &p).unwrap().samples;
        let y_b: Vec<C64> = x_r.iter().map(|&x| h * x).collect();
        let stat = tbcr_statistic(&y_b, &x_c, h, &t, &p).unwrap();
        prop_assert!((stat - l as f64).abs() < 1e-9 * l as f64);
    }

    #[test]
    fn eve_tbcr_noise_free(
        (x_c, t) in (1usize..64).prop_flat_map(|l| (bpsk(l), bpsk(l))),
        h in channel(),
        near_bob in prop::bool::ANY,
    ) {
        let l = x_c.len();
        let p = SchemeParams::tbcr(l, 0.1, 0.0);
        let mode = if near_bob { EveMode::NearBob } else { EveMode::NearAlice };
        let pos = EvePosition { mode, sigma_e_sq: 0.0, sigma_ea_sq: 1.0 };
        let zero = ComplexVec::zeros(l);
        let y_a: Vec<C64> = x_c.iter().map(|&x| h.conj() * x).collect();
        let y0 = eve_tbcr_observe(&y_a, h, &zero, mode).unwrap();
        prop_assert!(eve_tbcr_statistic(&y0, &x_c, h, &pos).unwrap().abs() < 1e-9 * l as f64);
        // Affine in the tag, so the antithetic pair averages to the H1 mean (1 - rho_s) L.
        let neg: Vec<C64> = t.iter().map(|&v| -v).collect();
        let mut s1 = 0.0;
        for tag in [&t, &neg] {
            let x_r = tbcr_respond(&y_a, tag, &p).unwrap().samples;
            let y1 = eve_tbcr_observe(&x_r, h, &zero, mode).unwrap();
            s1 += 0.5 * eve_tbcr_statistic(&y1, &x_c, h, &pos).unwrap();
        }
        prop_assert!((s1 - (1.0 - p.rho_s()) * l as f64).abs() < 1e-9 * l as f64);
    }

    #[test]
    fn eve_sca_noise_free(
        (m, pm) in (1usize..48).prop_flat_map(|l| (bpsk(l), perm(2 * l))),
        h in channel(),
    ) {
        let l = m.len();
        let p = SchemeParams::sup_sca(l, 0.1);
        let s = sca_series(&m, &pm).unwrap();
        let y0: Vec<C64> = s.iter().map(|&v| h * v).collect();
        prop_assert!(eve_sca_statistic(&y0, &m, &pm, h).unwrap().abs() < 1e-9 * l as f64);
        // Tag on the Q rail of the first half: orthogonal to the real message.
        let t_de: Vec<C64> = (0..2 * l).map(|i| if i < l { C64::new(0.0, 1.0) } else { C64::new(1.0, 0.0) }).collect();
        let t2 = interleave(&t_de, &pm).unwrap();
        let x = sca_ssg(&m, &t2, &pm, &p).unwrap().samples;
        let y1: Vec<C64> = x.iter().map(|&v| h * v).collect();
        let s1 = eve_sca_statistic(&y1, &m, &pm, h).unwrap();
        prop_assert!((s1 - (1.0 - p.rho_s()) * l as f64).abs() < 1e-9 * l as f64);
    }
}

#[test]
fn replay_scores_separate_relayed_frames() {
    let l = 64;
    let mut p = SchemeParams::tbcr(64, 0.1, 0.1).with_snr_db(10.0, 10.0, 10.0);
    p.sigma_e_sq = p.sigma_b_sq;
    let mut rng = RngStream::new(77, 0).rng();
    let x_c = ComplexVec::from_real(&(0..l).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect::<Vec<_>>());
    let t = ComplexVec::from_real(&(0..l).map(|i| if i % 5 < 2 { -1.0 } else { 1.0 }).collect::<Vec<_>>());
    let (mut direct, mut relayed) = (Vec::new(), Vec::new());
    for _ in 0..4000 {
        let w = replay_waveforms(&p, &x_c, &t, &mut rng).unwrap();
        direct.push(replay_discriminator(&w.y_direct, &w.known_parts, w.legs.h, &p).unwrap());
        relayed.push(replay_discriminator(&w.y_via_eve, &w.known_parts, w.legs.relay_gain(), &p).unwrap());
    }
    let md = median(direct.clone());
    assert!((md - 1.0).abs() < 0.1, "direct median {md}");
    assert!(median(relayed.clone()) > md);
    assert!(auc(&direct, &relayed) > 0.5);
    let zero = replay_discriminator(&w_zero(l), &w_zero(l), C64::new(1.0, 0.0), &p).unwrap();
    assert_eq!(zero, 0.0);
}

fn w_zero(l: usize) -> ComplexVec {
    ComplexVec::zeros(l)
}

#[test]
fn replay_indistinguishable_without_eve_noise() {
    let l = 64;
    let mut p = SchemeParams::tbcr(64, 0.1, 0.1).with_snr_db(10.0, 10.0, 10.0);
    p.sigma_e_sq = 0.0;
    let mut rng = RngStream::new(78, 0).rng();
    let x_c = ComplexVec::from_real(&vec![1.0; l]);
    let t = ComplexVec::from_real(&(0..l).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect::<Vec<_>>());
    let (mut direct, mut relayed) = (Vec::new(), Vec::new());
    for _ in 0..4000 {
        let mut legs = tagauth_core::adversary::ReplayLegs::draw(1.0, &mut rng).unwrap();
        // Unit-modulus second leg so the cascade has the direct channel's gain.
        legs.h_eb = C64::from_polar(1.0, legs.h_eb.arg());
        legs.h_ae = legs.h / legs.h_eb;
        let w = tagauth_core::adversary::replay_waveforms_with(&p, &x_c, &t, legs, &mut rng).unwrap();
        direct.push(replay_discriminator(&w.y_direct, &w.known_parts, w.legs.h, &p).unwrap());
        relayed.push(replay_discriminator(&w.y_via_eve, &w.known_parts, w.legs.relay_gain(), &p).unwrap());
    }
    let a = auc(&direct, &relayed);
    assert!((a - 0.5).abs() < 0.03, "auc {a}");
}
