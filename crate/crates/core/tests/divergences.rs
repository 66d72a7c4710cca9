use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use stlmc::divergences::{
    change_of_measure_margin, check_partition_ratio_bound, check_temp_scaling_bounds, chi2_gaussian, chi2_max,
    chi2_numeric, kl_discrete, kl_mixture_upper_bound_check, kl_numeric, min_measure, overlap_delta,
    partition_ratio_lower_bound, GridMeasure, QuadratureGrid,
};
use stlmc::MixtureTarget;

fn gauss_1d(mu: f64, var: f64) -> impl Fn(&[f64]) -> f64 {
    move |x: &[f64]| -0.5 * (x[0] - mu).powi(2) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

fn chi2_1d(mu1: f64, v1: f64, mu2: f64, v2: f64) -> f64 {
    chi2_gaussian(
        &DVector::from_element(1, mu1),
        &DMatrix::from_element(1, 1, v1),
        &DVector::from_element(1, mu2),
        &DMatrix::from_element(1, 1, v2),
    )
    .unwrap()
}

/// Midpoint rule for `∫ p₂²/p₁ − 1`.
fn chi2_midpoint(mu1: f64, v1: f64, mu2: f64, v2: f64) -> f64 {
    let pdf = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
    let (lo, hi, n) = (-30.0, 30.0, 600_000);
    let h = (hi - lo) / n as f64;
    let mut s = 0.0;
    for k in 0..n {
        let x = lo + (k as f64 + 0.5) * h;
        s += pdf(x, mu2, v2).powi(2) / pdf(x, mu1, v1) * h;
    }
    s - 1.0
}

#[test]
fn chi2_unit_shift_is_e_minus_one() {
    let v = chi2_1d(0.0, 1.0, 1.0, 1.0);
    assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    let v = chi2_1d(0.0, 4.0, 2.0, 4.0);
    assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
}

#[test]
fn chi2_matches_independent_integration() {
    for (m1, v1, m2, v2) in [(0.0, 1.0, 0.5, 0.8), (1.0, 2.0, -0.5, 1.5), (0.0, 1.0, 0.0, 1.7)] {
        let closed = chi2_1d(m1, v1, m2, v2);
        let numeric = chi2_midpoint(m1, v1, m2, v2);
        assert!((closed - numeric).abs() < 1e-8 * closed.max(1.0), "{closed} vs {numeric}");
    }
}

#[test]
fn chi2_double_variance_diverges_one_way() {
    assert!(chi2_1d(0.0, 1.0, 0.0, 2.0).is_infinite());
    let reverse = chi2_1d(0.0, 2.0, 0.0, 1.0);
    assert!((reverse - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);
}

#[test]
fn chi2_factorizes_over_independent_axes() {
    let mu1 = DVector::from_vec(vec![0.0, 1.0]);
    let mu2 = DVector::from_vec(vec![0.3, 0.2]);
    let s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
    let s2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 1.5]));
    let joint = chi2_gaussian(&mu1, &s1, &mu2, &s2).unwrap();
    let product = (1.0 + chi2_1d(0.0, 1.0, 0.3, 0.9)) * (1.0 + chi2_1d(1.0, 2.0, 0.2, 1.5)) - 1.0;
    assert!((joint - product).abs() < 1e-12 * product);
}

#[test]
fn grid_chi2_agrees_with_closed_form() {
    let grid = QuadratureGrid::line(-15.0, 15.0, 400).unwrap();
    let p = grid.measure(gauss_1d(0.0, 1.0)).unwrap();
    let q = grid.measure(gauss_1d(0.7, 1.2)).unwrap();
    let closed = chi2_1d(0.0, 1.0, 0.7, 1.2);
    assert!((chi2_numeric(&p, &q).unwrap() - closed).abs() < 1e-6 * closed);
    assert!(chi2_max(&p, &q).unwrap() >= closed);
}

#[test]
fn kl_matches_gaussian_formula() {
    let grid = QuadratureGrid::line(-15.0, 15.0, 400).unwrap();
    let (m1, v1, m2, v2) = (0.0, 1.0, 1.0, 2.0);
    let p = grid.measure(gauss_1d(m1, v1)).unwrap();
    let q = grid.measure(gauss_1d(m2, v2)).unwrap();
    let exact = 0.5 * ((v2 / v1).ln() + (v1 + (m1 - m2) * (m1 - m2)) / v2 - 1.0);
    assert!((kl_numeric(&p, &q).unwrap() - exact).abs() < 1e-6);
}

#[test]
fn kl_discrete_values() {
    assert_eq!(kl_discrete(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    let v = kl_discrete(&[0.25, 0.75], &[0.5, 0.5]).unwrap();
    let exact = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
    assert!((v - exact).abs() < 1e-15);
    assert!(kl_discrete(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_infinite());
    assert!(kl_discrete(&[0.5], &[0.5, 0.5]).is_err());
}

#[test]
fn overlap_of_shifted_unit_gaussians() {
    let std = Normal::new(0.0, 1.0).unwrap();
    for shift in [0.5, 1.0, 3.0] {
        // an even panel count puts the kink of min{p, q} on a panel edge
        let grid = QuadratureGrid::line(shift / 2.0 - 15.0, shift / 2.0 + 15.0, 608).unwrap();
        let p = grid.measure(gauss_1d(0.0, 1.0)).unwrap();
        let q = grid.measure(gauss_1d(shift, 1.0)).unwrap();
        let exact = 2.0 * std.cdf(-shift / 2.0);
        let got = overlap_delta(&p, &q, 1.0).unwrap();
        assert!((got - exact).abs() < 1e-6, "shift {shift}: {got} vs {exact}");
        let (_, delta) = min_measure(&p, &q).unwrap();
        assert!((delta - exact).abs() < 1e-6);
    }
}

#[test]
fn change_of_measure_and_kl_mixture_hold() {
    let grid = QuadratureGrid::line(-12.0, 12.0, 208).unwrap();
    let p = grid.measure(gauss_1d(0.0, 1.0)).unwrap();
    let q = grid.measure(gauss_1d(0.8, 0.9)).unwrap();
    let g: Vec<f64> = grid.points().iter().map(|x| x[0].powi(3)).collect();
    assert!(change_of_measure_margin(&p, &q, &g).unwrap() >= 0.0);

    let ps = vec![p.clone(), q.clone()];
    let qs = vec![grid.measure(gauss_1d(-0.2, 1.1)).unwrap(), grid.measure(gauss_1d(1.0, 1.0)).unwrap()];
    let r = kl_mixture_upper_bound_check(&[0.4, 0.6], &[0.5, 0.5], &ps, &qs).unwrap();
    assert!(r.pass && r.worst_margin >= 0.0);
}

#[test]
fn grid_measure_mixture_is_normalized() {
    let a = GridMeasure::from_masses(&[0.2, 0.8, 0.0]).unwrap();
    let b = GridMeasure::from_masses(&[0.0, 0.5, 0.5]).unwrap();
    let m = GridMeasure::mixture(&[0.5, 0.5], &[a, b]).unwrap();
    let masses = m.masses();
    assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert!((masses[1] - 0.65).abs() < 1e-15);
}

#[test]
fn temp_scaling_is_exact_for_one_component() {
    let t = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0, 0.0]], 1.0).unwrap();
    let probes: Vec<Vec<f64>> = (0..50).map(|k| vec![0.1 * k as f64, -0.2 * k as f64]).collect();
    let r = check_temp_scaling_bounds(&t, 0.3, &probes).unwrap();
    assert!(r.pass);
    assert!((r.values["min_ratio"] - 1.0).abs() < 1e-12 && (r.values["max_ratio"] - 1.0).abs() < 1e-12);
}

#[test]
fn single_gaussian_partition_ratio() {
    let t = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0]], 1.0).unwrap();
    let grid = QuadratureGrid::line(-40.0, 40.0, 400).unwrap();
    let (alpha, beta) = (0.2, 0.8);
    let r = check_partition_ratio_bound(&t, alpha, beta, &grid).unwrap();
    assert!(r.pass);
    assert!((r.values["ratio"] - (alpha / beta).sqrt()).abs() < 1e-9);
    assert!(partition_ratio_lower_bound(1, 0.0, 1.0, alpha, beta) < (alpha / beta).sqrt());
}
