//! Randomized verification suites shared by the CLI and the test targets.
//!
//! Every instance `k` of a suite draws from `RngStream::new(seed).child(k)`,
//! so suites are reproducible and independent of the worker count.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    congestion_bound, discretize_density, mixture_chain, random_reversible_chain, uniform_nodes,
    verify_simple_decomposition, verify_tempering_decomposition, CanonicalPathSet, DecompositionReport,
    FiniteMarkovProcess, LevelDecomposition,
};
use crate::divergences::{
    change_of_measure_margin, check_temp_scaling_bounds, chi2_gaussian, chi2_numeric, kl_mixture_upper_bound_check,
    min_measure, CheckReport, GridMeasure, QuadratureGrid, QuadratureRule,
};
use crate::error::Result;
use crate::oracle::MixtureTarget;
use crate::rng::RngStream;

fn stream(seed: u64, k: usize) -> RngStream {
    RngStream::new(seed).child(k as u64)
}

fn uniform_in(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

fn random_weights(rng: &mut RngStream, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| 0.2 + rng.uniform()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

// ---------------------------------------------------------------------------
// Decomposition instances
// ---------------------------------------------------------------------------

/// A chain together with the components its generator decomposes into.
#[derive(Debug, Clone)]
pub struct SimpleInstance {
    pub chain: FiniteMarkovProcess,
    pub weights: Vec<f64>,
    pub components: Vec<FiniteMarkovProcess>,
}

/// Instance `k`: 16 to 64 states and two or three components. Even `k` uses
/// discretized Gaussians on a shared grid, odd `k` random reversible chains on
/// a shared random graph.
pub fn random_simple_instance(seed: u64, k: usize) -> Result<SimpleInstance> {
    let mut rng = stream(seed, k);
    let n = 16 + (rng.uniform() * 49.0) as usize;
    let m = 2 + (rng.uniform() < 0.5) as usize;
    let weights = random_weights(&mut rng, m);
    let components = if k.is_multiple_of(2) {
        let nodes = uniform_nodes(-6.0, 6.0, n);
        (0..m)
            .map(|_| {
                let mu = uniform_in(&mut rng, -2.5, 2.5);
                let s = uniform_in(&mut rng, 0.7, 1.5);
                discretize_density(&nodes, |x| (-(x - mu) * (x - mu) / (2.0 * s * s)).exp())
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        let density = uniform_in(&mut rng, 0.05, 0.3);
        (0..m)
            .map(|_| random_reversible_chain(n, density, &mut rng))
            .collect::<Result<Vec<_>>>()?
    };
    let chain = mixture_chain(&weights, &components)?;
    Ok(SimpleInstance {
        chain,
        weights,
        components,
    })
}

/// Three-level tempering instance over a two-well 1D mixture.
#[derive(Debug, Clone)]
pub struct TemperingInstance {
    pub betas: Vec<f64>,
    pub levels: Vec<LevelDecomposition>,
    pub rel_probs: Vec<f64>,
    pub swap_rate: f64,
    pub k: f64,
}

/// Instance `k`: grid of 24 to 64 nodes on [−8, 8], centers ±μ with
/// μ ∈ [1, 2.5], β₁ ∈ [0.1, 0.3] and a geometric ladder to 1, λ ∈ [0.5, 2]
/// and `K` cycling through {0.5, 1, 2}.
pub fn random_tempering_instance(seed: u64, k: usize) -> Result<TemperingInstance> {
    let mut rng = stream(seed, k);
    let n = 24 + (rng.uniform() * 41.0) as usize;
    let nodes = uniform_nodes(-8.0, 8.0, n);
    let mu = uniform_in(&mut rng, 1.0, 2.5);
    let centers = [-mu, mu];
    let weights = random_weights(&mut rng, 2);
    let beta1 = uniform_in(&mut rng, 0.1, 0.3);
    let betas = vec![beta1, beta1.sqrt(), 1.0];
    let levels = betas
        .iter()
        .map(|&b| {
            let comps = centers
                .iter()
                .map(|&c| discretize_density(&nodes, |x| (-b * (x - c) * (x - c) / 2.0).exp()))
                .collect::<Result<Vec<_>>>()?;
            LevelDecomposition::from_components(weights.clone(), comps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperingInstance {
        betas,
        levels,
        rel_probs: vec![1.0 / 3.0; 3],
        swap_rate: uniform_in(&mut rng, 0.5, 2.0),
        k: [0.5, 1.0, 2.0][k % 3],
    })
}

pub fn simple_decomposition_suite(seed: u64, instances: usize) -> Result<Vec<DecompositionReport>> {
    (0..instances)
        .into_par_iter()
        .map(|k| {
            let inst = random_simple_instance(seed, k)?;
            verify_simple_decomposition(&inst.chain, &inst.weights, &inst.components)
        })
        .collect()
}

pub fn tempering_decomposition_suite(seed: u64, instances: usize) -> Result<Vec<DecompositionReport>> {
    (0..instances)
        .into_par_iter()
        .map(|k| {
            let inst = random_tempering_instance(seed, k)?;
            verify_tempering_decomposition(&inst.levels, &inst.rel_probs, inst.swap_rate, inst.k)
        })
        .collect()
}

/// `Var_p(g) ≤ ρ(γ)·𝓔(g, g)` on random chains with geodesic paths.
pub fn canonical_path_suite(seed: u64, chains: usize, functions: usize) -> Result<CheckReport> {
    let results: Vec<(f64, usize)> = (0..chains)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let n = 4 + (rng.uniform() * 29.0) as usize;
            let density = uniform_in(&mut rng, 0.0, 0.5);
            let chain = random_reversible_chain(n, density, &mut rng)?;
            let rates = chain.generator().map_with_location(|i, j, v| if i == j { 0.0 } else { v });
            let paths = CanonicalPathSet::geodesic(&rates)?;
            let rho = congestion_bound(&rates, chain.stationary(), &paths)?.rho;
            let mut worst = f64::INFINITY;
            for _ in 0..functions {
                let g: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
                let var = chain.variance(&g)?;
                let energy = chain.dirichlet_form(&g)?;
                worst = worst.min((rho * energy - var) / var.max(f64::MIN_POSITIVE));
            }
            Ok((worst, functions))
        })
        .collect::<Result<_>>()?;
    let mut report = CheckReport::new("canonical-paths");
    for (w, count) in results {
        report.instances += count;
        report.worst_margin = report.worst_margin.min(w);
    }
    report.pass = report.worst_margin >= -1e-9;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Divergence instances
// ---------------------------------------------------------------------------

fn sym_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("invertible")
}

fn random_spd(rng: &mut RngStream, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.normal() * 0.6);
    &a * a.transpose() + DMatrix::identity(d, d) * 0.5
}

fn gaussian_log_density(mu: &DVector<f64>, cov: &DMatrix<f64>) -> impl Fn(&[f64]) -> f64 {
    let prec = sym_inverse(cov);
    let d = mu.len() as f64;
    let log_norm = -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + cov.determinant().ln());
    let mu = mu.clone();
    move |x: &[f64]| {
        let z = DVector::from_column_slice(x) - &mu;
        log_norm - 0.5 * z.dot(&(&prec * &z))
    }
}

/// `χ²(N₂ ‖ N₁)` by Gauss–Legendre quadrature of `p₂²/p₁` on a box of ±12
/// standard deviations around the Gaussian proportional to the integrand.
pub fn chi2_gaussian_quadrature(
    mu1: &DVector<f64>,
    s1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    s2: &DMatrix<f64>,
    nodes_per_axis: usize,
) -> Result<f64> {
    let d = mu1.len();
    let (p1, p2) = (sym_inverse(s1), sym_inverse(s2));
    let a = &p2 * 2.0 - &p1;
    let cov = sym_inverse(&a);
    let center = &cov * (&p2 * mu2 * 2.0 - &p1 * mu1);
    let bounds = (0..d)
        .map(|i| {
            let r = 12.0 * cov[(i, i)].sqrt();
            (center[i] - r, center[i] + r)
        })
        .collect();
    let grid = QuadratureGrid::new(bounds, nodes_per_axis, QuadratureRule::GaussLegendre)?;
    let (l1, l2) = (gaussian_log_density(mu1, s1), gaussian_log_density(mu2, s2));
    Ok(grid.log_integrate(|x| 2.0 * l2(x) - l1(x)).exp_m1())
}

/// A random pair `(μ₁, Σ₁), (μ₂, Σ₂)` with `2Σ₂⁻¹ − Σ₁⁻¹` well inside the
/// positive-definite cone, so `χ²(N₂ ‖ N₁)` is finite.
pub fn random_gaussian_pair(
    rng: &mut RngStream,
    d: usize,
) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    loop {
        let mu1 = DVector::from_fn(d, |_, _| uniform_in(rng, -1.5, 1.5));
        let mu2 = DVector::from_fn(d, |_, _| uniform_in(rng, -1.5, 1.5));
        let s1 = random_spd(rng, d);
        let s2 = random_spd(rng, d);
        let a = sym_inverse(&s2) * 2.0 - sym_inverse(&s1);
        let min_a = SymmetricEigen::new((&a + a.transpose()) * 0.5).eigenvalues.min();
        let min_p2 = SymmetricEigen::new(sym_inverse(&s2)).eigenvalues.min();
        if min_a > 0.25 * min_p2 {
            return (mu1, s1, mu2, s2);
        }
    }
}

/// Relative agreement of [`chi2_gaussian`] with quadrature on `pairs`
/// random pairs (alternating 1D and 2D) plus `χ²(N(1,1) ‖ N(0,1)) = e − 1`.
pub fn chi2_gaussian_suite(seed: u64, pairs: usize, tol: f64) -> Result<CheckReport> {
    let errs: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let d = 1 + k % 2;
            let (mu1, s1, mu2, s2) = random_gaussian_pair(&mut rng, d);
            let closed = chi2_gaussian(&mu1, &s1, &mu2, &s2)?;
            let numeric = chi2_gaussian_quadrature(&mu1, &s1, &mu2, &s2, if d == 1 { 512 } else { 256 })?;
            Ok((closed - numeric).abs() / numeric.abs().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<_>>()?;
    let one = DMatrix::identity(1, 1);
    let forced = chi2_gaussian(&DVector::from_element(1, 0.0), &one, &DVector::from_element(1, 1.0), &one)?;
    let e_minus_1 = std::f64::consts::E - 1.0;
    let forced_err = (forced - e_minus_1).abs() / e_minus_1;
    let mut report = CheckReport::new("chi2-gaussian");
    report.instances = pairs + 1;
    let worst = errs.iter().copied().fold(forced_err, f64::max);
    report.worst_margin = tol - worst;
    report.pass = worst <= tol;
    report.values.insert("worst_relative_error".into(), worst);
    report.values.insert("forced_e_minus_1".into(), forced);
    Ok(report)
}

/// Random mixture: dimension 1 to 3, 2 to 4 unit-variance components with
/// centers in [−5, 5]^d.
pub fn random_mixture(rng: &mut RngStream) -> Result<MixtureTarget> {
    let d = 1 + (rng.uniform() * 3.0) as usize;
    let m = 2 + (rng.uniform() * 3.0) as usize;
    let weights = random_weights(rng, m);
    let centers = (0..m)
        .map(|_| (0..d).map(|_| uniform_in(rng, -5.0, 5.0)).collect())
        .collect();
    MixtureTarget::gaussian(weights, centers, 1.0)
}

/// `g̃_β ≤ g_β ≤ g̃_β / w_min` over `mixtures × betas × probes` points.
pub fn temp_scaling_suite(seed: u64, mixtures: usize, betas: &[f64], probes: usize) -> Result<CheckReport> {
    let reports: Vec<CheckReport> = (0..mixtures)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let target = random_mixture(&mut rng)?;
            let mut out = Vec::new();
            for &beta in betas {
                let pts: Vec<Vec<f64>> = (0..probes)
                    .map(|_| (0..target.dim()).map(|_| 6.0 * rng.normal()).collect())
                    .collect();
                out.push(check_temp_scaling_bounds(&target, beta, &pts)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<Vec<_>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut report = CheckReport::new("temp-scaling");
    for r in reports {
        report.instances += r.instances;
        report.worst_margin = report.worst_margin.min(r.worst_margin);
        report.pass &= r.pass;
    }
    Ok(report)
}

/// Discretized 1D Gaussian with random mean and variance on `grid`.
fn random_grid_gaussian(rng: &mut RngStream, grid: &QuadratureGrid) -> Result<GridMeasure> {
    let mu = uniform_in(rng, -3.0, 3.0);
    let var = uniform_in(rng, 0.3, 3.0);
    grid.measure(|x| -(x[0] - mu).powi(2) / (2.0 * var) - 0.5 * (2.0 * std::f64::consts::PI * var).ln())
}

fn inequality_grid() -> Result<QuadratureGrid> {
    QuadratureGrid::line(-14.0, 14.0, 256)
}

/// `(E_P g − E_Q g)² ≤ Var_P(g) χ²(Q‖P) + tol` on random 1D triples.
pub fn change_of_measure_suite(seed: u64, instances: usize, tol: f64) -> Result<CheckReport> {
    let grid = inequality_grid()?;
    let margins: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let p = random_grid_gaussian(&mut rng, &grid)?;
            let q = random_grid_gaussian(&mut rng, &grid)?;
            let (a, b, c) = (rng.normal(), rng.normal(), rng.normal());
            let g: Vec<f64> = grid.points().iter().map(|x| (a * x[0] + b * (c * x[0]).sin()).tanh()).collect();
            change_of_measure_margin(&p, &q, &g)
        })
        .collect::<Result<_>>()?;
    Ok(margin_report("change-of-measure", &margins, tol))
}

/// `χ²(R̃ ‖ P) ≤ 1/δ + tol` for the normalized overlap `R̃ ∝ min{P, Q}`.
pub fn overlap_chi_suite(seed: u64, instances: usize, tol: f64) -> Result<CheckReport> {
    let grid = inequality_grid()?;
    let margins: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let p = random_grid_gaussian(&mut rng, &grid)?;
            let q = random_grid_gaussian(&mut rng, &grid)?;
            let (r, delta) = min_measure(&p, &q)?;
            Ok(1.0 / delta - chi2_numeric(&p, &r)?)
        })
        .collect::<Result<_>>()?;
    Ok(margin_report("overlap-chi", &margins, tol))
}

/// `KL(Σ w_i P_i ‖ Σ w'_i Q_i) ≤ KL(W‖W') + Σ w_i KL(P_i‖Q_i) + tol`.
pub fn kl_mixture_suite(seed: u64, instances: usize, tol: f64) -> Result<CheckReport> {
    let grid = inequality_grid()?;
    let margins: Vec<f64> = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k);
            let m = 2 + (rng.uniform() * 2.0) as usize;
            let w = random_weights(&mut rng, m);
            let w2 = random_weights(&mut rng, m);
            let ps = (0..m).map(|_| random_grid_gaussian(&mut rng, &grid)).collect::<Result<Vec<_>>>()?;
            let qs = (0..m).map(|_| random_grid_gaussian(&mut rng, &grid)).collect::<Result<Vec<_>>>()?;
            Ok(kl_mixture_upper_bound_check(&w, &w2, &ps, &qs)?.worst_margin)
        })
        .collect::<Result<_>>()?;
    Ok(margin_report("kl-mixture", &margins, tol))
}

fn margin_report(name: &str, margins: &[f64], tol: f64) -> CheckReport {
    let mut report = CheckReport::new(name);
    report.instances = margins.len();
    report.worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    report.pass = report.worst_margin >= -tol;
    report.values.insert("tolerance".into(), tol);
    report
}

/// Sizes of the built-in suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSizes {
    pub simple: usize,
    pub tempering: usize,
    pub path_chains: usize,
    pub path_functions: usize,
    pub chi2_pairs: usize,
    pub scaling_mixtures: usize,
    pub scaling_probes: usize,
    pub inequality_instances: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            simple: 20,
            tempering: 10,
            path_chains: 50,
            path_functions: 100,
            chi2_pairs: 50,
            scaling_mixtures: 10,
            scaling_probes: 1000,
            inequality_instances: 100,
        }
    }
}

pub const SCALING_BETAS: [f64; 3] = [0.1, 0.5, 0.9];

/// Every divergence-side check at the given sizes.
pub fn divergence_suite(seed: u64, sizes: &SuiteSizes) -> Result<Vec<CheckReport>> {
    Ok(vec![
        chi2_gaussian_suite(seed, sizes.chi2_pairs, 1e-5)?,
        temp_scaling_suite(seed, sizes.scaling_mixtures, &SCALING_BETAS, sizes.scaling_probes)?,
        change_of_measure_suite(seed, sizes.inequality_instances, 1e-9)?,
        overlap_chi_suite(seed, sizes.inequality_instances, 1e-6)?,
        kl_mixture_suite(seed, sizes.inequality_instances, 1e-6)?,
    ])
}
