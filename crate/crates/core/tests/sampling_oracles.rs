//! Sampler validation against analytic and quadrature CDFs.

use wis_core::quad::composite_gauss_1d;
use wis_core::{Density, Quadrature, RngStream};

/// One-sided Kolmogorov–Smirnov distance between a sample of coordinates
/// and a CDF.
fn ks_distance<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut worst = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        worst = worst.max((c - i as f64 / n).abs());
        worst = worst.max(((i + 1) as f64 / n - c).abs());
    }
    worst
}

fn coordinate(samples: &[f64], dim: usize, axis: usize) -> Vec<f64> {
    samples
        .chunks(dim)
        .map(|p| p[axis])
        .collect()
}

#[test]
fn uniform_sampler_replays_the_raw_stream() {
    let u = Density::uniform(2);
    let mut rng = RngStream::seed_from(9);
    let pts = u.sample(&mut rng, 4).unwrap();
    let mut replay = RngStream::seed_from(9);
    for &v in &pts {
        assert_eq!(v, replay.uniform_open());
    }
}

#[test]
fn cosine_sampler_matches_analytic_cdf() {
    let tau = 2.0 * std::f64::consts::PI;
    let (a, b) = (0.5f64, 2u32);
    let g = Density::cosine_product(vec![a, 0.3], vec![b, 1]).unwrap();
    let mut rng = RngStream::seed_from(10);
    let n = 100_000;
    let pts = g.sample(&mut rng, n).unwrap();
    let cdf0 = |x: f64| x + a * (tau * b as f64 * x).sin() / (tau * b as f64);
    let d0 = ks_distance(coordinate(&pts, 2, 0), cdf0);
    assert!(d0 < 0.02, "axis 0 KS = {d0}");
    let cdf1 = |x: f64| x + 0.3 * (tau * x).sin() / tau;
    let d1 = ks_distance(coordinate(&pts, 2, 1), cdf1);
    assert!(d1 < 0.02, "axis 1 KS = {d1}");
}

#[test]
fn tilt_sampler_matches_analytic_cdf() {
    let t = -1.2f64;
    let g = Density::linear_tilt_product(vec![t]).unwrap();
    let mut rng = RngStream::seed_from(11);
    let pts = g.sample(&mut rng, 100_000).unwrap();
    let cdf = |x: f64| x + 0.5 * t * (x * x - x);
    let d = ks_distance(pts, cdf);
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn tempered_sampler_matches_quadrature_cdf() {
    let base = Density::cosine_product(vec![0.6], vec![1]).unwrap();
    let g = Density::tempered(base, 0.6, &Quadrature::gauss(64)).unwrap();
    let mut rng = RngStream::seed_from(12);
    let pts = g.sample(&mut rng, 100_000).unwrap();
    // quadrature CDF oracle, independent of the sampler path
    let cdf = |x: f64| composite_gauss_1d(0.0, x, 16, 1.0 / 64.0, |t| g.eval(&[t]).unwrap());
    let d = ks_distance(pts, cdf);
    assert!(d < 0.02, "KS = {d}");
}

#[test]
fn custom_grid_sampler_matches_cell_masses() {
    let g = Density::custom_grid(1, 4, vec![1.0, 3.0, 2.0, 2.0]).unwrap();
    let mut rng = RngStream::seed_from(13);
    let n = 100_000usize;
    let pts = g.sample(&mut rng, n).unwrap();
    let mut counts = [0usize; 4];
    for &x in &pts {
        counts[((x * 4.0) as usize).min(3)] += 1;
    }
    for (c, want) in counts.iter().zip([0.125, 0.375, 0.25, 0.25]) {
        let got = *c as f64 / n as f64;
        assert!((got - want).abs() < 0.01, "{got} vs {want}");
    }
}

#[test]
fn starved_rejection_sampler_reports_config_error() {
    // one spiked cell out of 4096 pushes the normalized sup near 4096, so
    // the uniform-envelope acceptance rate drops below the 1e-3 floor
    let m = 4096usize;
    let mut vals = vec![1.0; m];
    vals[0] = 1e9;
    let g = Density::custom_grid(1, m, vals).unwrap();
    let mut rng = RngStream::seed_from(14);
    let err = g.sample(&mut rng, 50).unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("configuration"), "{msg}");
}

#[test]
fn sampling_is_deterministic_per_stream() {
    let g = Density::cosine_product(vec![0.5, 0.5, 0.5], vec![1, 1, 1]).unwrap();
    let mut r1 = RngStream::derive(77, &[1, 2]);
    let mut r2 = RngStream::derive(77, &[1, 2]);
    assert_eq!(g.sample(&mut r1, 500).unwrap(), g.sample(&mut r2, 500).unwrap());
}
