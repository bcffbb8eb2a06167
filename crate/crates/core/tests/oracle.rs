use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use skcap::oracle::{entropy_resub, jackknife_se, ks_uniform, mi_knn, sample, Column, KnnOptions, Obs};
use skcap::quad::QuadOptions;
use skcap::rss::{self, Pdf2};
use skcap::{ChannelParams, Exec, Pair, Which};

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    (0..n).map(|_| (-2.0 * u().ln()).sqrt() * (TAU * u()).cos()).collect()
}

fn line(v: Vec<f64>) -> Column {
    Column::new(1, v, vec![false])
}

#[test]
fn independent_columns_have_no_information() {
    let n = 100_000;
    let est = mi_knn(&line(normals(1, n)), &line(normals(2, n)), &KnnOptions::default()).unwrap();
    assert!(est.value.abs() < 0.01, "{est:?}");
    assert!(est.std_error > 0.0 && est.std_error < 0.01);
}

#[test]
fn correlated_gaussians() {
    let n = 100_000;
    let r: f64 = 0.9;
    let (x, w) = (normals(3, n), normals(4, n));
    let y: Vec<f64> = x.iter().zip(&w).map(|(a, b)| r * a + (1.0 - r * r).sqrt() * b).collect();
    let truth = -0.5 * (1.0 - r * r).log2();
    let est = mi_knn(&line(x), &line(y), &KnnOptions::default()).unwrap();
    assert!((est.value - truth).abs() < 0.02, "{} vs {truth}", est.value);
}

#[test]
fn complex_pair_at_zero_db() {
    let c = ChannelParams::with_real_rho(1.0, 1.0, 1.0, 1.0, 0.0);
    let b = sample(&c, 100_000, 7, Exec::default()).unwrap();
    let est = mi_knn(&b.complex_view(Obs::A), &b.complex_view(Obs::B), &KnnOptions::default()).unwrap();
    let truth = (4.0f64 / 3.0).log2();
    assert!((est.value - truth).abs() < 0.02, "{} vs {truth}", est.value);
}

#[test]
fn sampler_moments() {
    let c = ChannelParams::with_real_rho(2.0, 0.5, 0.25, 1.0, 0.6).with_rho_phase(1.0);
    let n = 200_000;
    let b = sample(&c, n, 11, Exec::default()).unwrap();
    let mean = |f: &dyn Fn(&[num_complex::Complex64; 3]) -> num_complex::Complex64| {
        b.triples.iter().map(f).sum::<num_complex::Complex64>() / n as f64
    };
    let tol = 5.0 * 3.0 / (n as f64).sqrt();
    assert!((mean(&|t| t[0] * t[0].conj()).re - 2.5).abs() < tol);
    assert!((mean(&|t| t[1] * t[1].conj()).re - 2.25).abs() < tol);
    assert!((mean(&|t| t[2] * t[2].conj()).re - 3.0).abs() < tol);
    assert!((mean(&|t| t[0] * t[1].conj()) - 2.0).norm() < tol);
    assert!((mean(&|t| t[0] * t[2].conj()) - c.rho * c.p).norm() < tol);
    assert!(mean(&|t| t[0] * t[0]).norm() < tol);
}

#[test]
fn sampling_is_deterministic_across_strategies() {
    let c = ChannelParams::with_real_rho(1.0, 0.1, 0.1, 0.1, 0.9);
    let a = sample(&c, 10_001, 5, Exec::Sequential).unwrap();
    let b = sample(&c, 10_001, 5, Exec::Parallel).unwrap();
    assert_eq!(a.triples, b.triples);
    let d = sample(&c, 10_001, 6, Exec::Sequential).unwrap();
    assert_ne!(a.triples, d.triples);
    let x = mi_knn(&a.complex_view(Obs::A), &a.complex_view(Obs::E), &KnnOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
    let y = mi_knn(&a.complex_view(Obs::A), &a.complex_view(Obs::E), &KnnOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
    assert_eq!(x, y);
}

#[test]
fn phases_are_uniform_and_independent_of_envelopes() {
    let c = ChannelParams::with_real_rho(1.0, 0.1, 0.1, 0.1, 0.9);
    let b = sample(&c, 20_000, 13, Exec::default()).unwrap();
    for who in [Obs::A, Obs::B, Obs::E] {
        let ks = ks_uniform(&b.phases(who), 0.0, TAU);
        assert!(ks.passed, "{who:?}: {ks:?}");
    }
    let envs = Column::stack(&[&b.envelope_view(Obs::A), &b.envelope_view(Obs::B), &b.envelope_view(Obs::E)]);
    let est = mi_knn(&b.phase_view(Obs::E), &envs, &KnnOptions::default()).unwrap();
    assert!(est.value.abs() < 4.0 * est.std_error.max(0.003), "{est:?}");
}

#[test]
fn resubstitution_matches_quadrature() {
    let c = ChannelParams::with_real_rho(1.0, 0.1, 0.1, 0.1, 0.6);
    let b = sample(&c, 50_000, 17, Exec::default()).unwrap();
    let pdf = Pdf2::new(&c, Pair::AE).unwrap();
    let view = Column::stack(&[&b.envelope_view(Obs::A), &b.envelope_view(Obs::E)]);
    let est = entropy_resub(&view, |r| pdf.ln(r[0], r[1]), Exec::default()).unwrap();
    let h = rss::joint_entropy(&c, Which::AE, &QuadOptions::with_tol(1e-6)).unwrap().value;
    assert!((est.value - h).abs() < 4.0 * est.std_error, "{} vs {h} se {}", est.value, est.std_error);
}

#[test]
fn jackknife_standard_error() {
    let v = [1.0, 2.0, 4.0, 5.0];
    // mean 3, squared deviations 10, (g−1)/g = 3/4
    assert!((jackknife_se(&v) - 7.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(jackknife_se(&[2.0; 10]), 0.0);
}

#[test]
fn rejects_bad_input() {
    let c = ChannelParams::with_real_rho(1.0, 0.1, 0.1, 0.1, 0.5);
    assert!(sample(&c, 0, 1, Exec::default()).is_err());
    let x = line(normals(1, 10));
    assert!(mi_knn(&x, &line(normals(2, 9)), &KnnOptions::default()).is_err());
}

#[test]
fn perfect_correlation_copies_the_envelope() {
    let c = ChannelParams::with_real_rho(1.0, 0.0, 0.0, 0.0, 1.0).with_rho_phase(0.7);
    let b = sample(&c, 1000, 3, Exec::default()).unwrap();
    for (a, e) in b.envelopes(Obs::A).iter().zip(b.envelopes(Obs::E)) {
        assert!((a - e).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn more_samples_shrink_the_error() {
    let c = ChannelParams::from_snr_db(1.0, 20.0, 20.0, 20.0, 0.9.into());
    let truth = skcap::csi::bounds(&c).unwrap().mi_ab;
    let median_error = |n: usize| {
        let mut e: Vec<f64> = (0..10)
            .map(|seed| {
                let b = sample(&c, n, 100 + seed, Exec::default()).unwrap();
                let est = mi_knn(&b.complex_view(Obs::A), &b.complex_view(Obs::B), &KnnOptions::default()).unwrap();
                (est.value - truth).abs()
            })
            .collect();
        e.sort_by(f64::total_cmp);
        (e[4] + e[5]) / 2.0
    };
    let (small, large) = (median_error(4000), median_error(8000));
    assert!(large < small, "{small} -> {large}");
}
