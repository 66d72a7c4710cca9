//! Density oracles: value and gradient of a negative log-density `f`.
//!
//! The sampler only ever sees the [`DensityOracle`] trait. Concrete oracles
//! here cover translated mixtures of a strongly log-concave base
//! ([`MixtureTarget`]), inverse-temperature scaling ([`Tempered`]), bounded
//! smooth perturbations ([`Perturbed`]) and the two-variance construction
//! that defeats any query-efficient sampler ([`AdversarialTwoGaussian`]).
//!
//! Convention: `f₀(0) = 0` and normalizing constants are dropped, so
//! `f(x) = -ln Σ w_i exp(-f₀(x - μ_i))` is non-negative for the Gaussian base.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{dist_sq, log_sum_exp, norm, norm_sq, softmax_into};
use crate::rng::RngStream;

/// Black-box access to `f` and `∇f`. Implementations must be immutable after
/// construction so they can be shared across worker threads.
pub trait DensityOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.grad(x)?))
    }
}

impl<T: DensityOracle + ?Sized> DensityOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).grad(x)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).value_grad(x)
    }
}

impl<T: DensityOracle + ?Sized> DensityOracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).grad(x)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).value_grad(x)
    }
}

impl<T: DensityOracle + ?Sized> DensityOracle for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        (**self).value(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).grad(x)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).value_grad(x)
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Base function
// ---------------------------------------------------------------------------

/// The strongly log-concave base `f₀` with `∇f₀(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseFunction {
    /// `f₀(z) = ‖z‖² / 2σ²`.
    IsotropicGaussian { sigma: f64 },
    /// `f₀(z) = ½ zᵀ H z` with `κI ≼ H ≼ KI`.
    QuadraticForm {
        kappa: f64,
        #[serde(rename = "K")]
        smoothness: f64,
        #[serde(rename = "H")]
        h: Vec<Vec<f64>>,
    },
}

impl BaseFunction {
    pub fn gaussian(sigma: f64) -> Self {
        BaseFunction::IsotropicGaussian { sigma }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(invalid("sigma", format!("must be positive, got {sigma}")));
                }
            }
            BaseFunction::QuadraticForm {
                kappa,
                smoothness,
                h,
            } => {
                if !(*kappa > 0.0 && kappa <= smoothness && smoothness.is_finite()) {
                    return Err(invalid(
                        "kappa",
                        format!("need 0 < kappa <= K, got kappa={kappa}, K={smoothness}"),
                    ));
                }
                if h.len() != dim || h.iter().any(|row| row.len() != dim) {
                    return Err(invalid("H", format!("must be {dim}x{dim}")));
                }
                let m = DMatrix::from_fn(dim, dim, |i, j| h[i][j]);
                if (&m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                    return Err(invalid("H", "must be symmetric"));
                }
                let eig = SymmetricEigen::new(m).eigenvalues;
                let tol = 1e-10 * smoothness.max(1.0);
                for &ev in eig.iter() {
                    if ev < kappa - tol || ev > smoothness + tol {
                        return Err(invalid(
                            "H",
                            format!("eigenvalue {ev} outside [kappa={kappa}, K={smoothness}]"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Strong convexity constant κ.
    pub fn strong_convexity(&self) -> f64 {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => 1.0 / (sigma * sigma),
            BaseFunction::QuadraticForm { kappa, .. } => *kappa,
        }
    }

    /// Smoothness constant K.
    pub fn smoothness(&self) -> f64 {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => 1.0 / (sigma * sigma),
            BaseFunction::QuadraticForm { smoothness, .. } => *smoothness,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => Some(*sigma),
            BaseFunction::QuadraticForm { .. } => None,
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => norm_sq(z) / (2.0 * sigma * sigma),
            BaseFunction::QuadraticForm { h, .. } => {
                let mut acc = 0.0;
                for (i, row) in h.iter().enumerate() {
                    acc += z[i] * crate::math::dot(row, z);
                }
                0.5 * acc
            }
        }
    }

    /// Accumulates `scale · ∇f₀(z)` into `out`.
    fn add_grad(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => {
                let s = scale / (sigma * sigma);
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += s * zi;
                }
            }
            BaseFunction::QuadraticForm { h, .. } => {
                for (o, row) in out.iter_mut().zip(h) {
                    *o += scale * crate::math::dot(row, z);
                }
            }
        }
    }

    /// `ln ∫ exp(-f₀)` over ℝ^d.
    pub fn log_normalizer(&self, dim: usize) -> f64 {
        match self {
            BaseFunction::IsotropicGaussian { sigma } => {
                0.5 * dim as f64 * (2.0 * PI * sigma * sigma).ln()
            }
            BaseFunction::QuadraticForm { h, .. } => {
                let m = DMatrix::from_fn(dim, dim, |i, j| h[i][j]);
                let log_det: f64 = SymmetricEigen::new(m).eigenvalues.iter().map(|e| e.ln()).sum();
                0.5 * dim as f64 * (2.0 * PI).ln() - 0.5 * log_det
            }
        }
    }

    /// Draws `z ~ exp(-f₀)` normalized.
    fn sample(&self, dim: usize, rng: &mut RngStream) -> Vec<f64> {
        let mut xi = vec![0.0; dim];
        rng.fill_normal(&mut xi);
        match self {
            BaseFunction::IsotropicGaussian { sigma } => xi.iter().map(|v| sigma * v).collect(),
            BaseFunction::QuadraticForm { h, .. } => {
                // Covariance H⁻¹: with H = LLᵀ, z = L⁻ᵀ ξ.
                let m = DMatrix::from_fn(dim, dim, |i, j| h[i][j]);
                let chol = m.cholesky().expect("validated positive definite");
                let l_t = chol.l().transpose();
                let z = l_t
                    .solve_upper_triangular(&DVector::from_vec(xi))
                    .expect("triangular factor is nonsingular");
                z.iter().copied().collect()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Mixture target
// ---------------------------------------------------------------------------

/// Fixture document: `{dim, weights, centers, base, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub base: BaseFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Ground-truth translated mixture `f(x) = -ln Σ w_i e^{-f₀(x-μ_i)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FixtureSpec", into = "FixtureSpec")]
pub struct MixtureTarget {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    centers: Vec<Vec<f64>>,
    base: BaseFunction,
    dim: usize,
}

impl TryFrom<FixtureSpec> for MixtureTarget {
    type Error = Error;

    fn try_from(spec: FixtureSpec) -> Result<Self> {
        let target = MixtureTarget::new(spec.weights, spec.centers, spec.base)?;
        if target.dim != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: target.dim,
            });
        }
        Ok(target)
    }
}

impl From<MixtureTarget> for FixtureSpec {
    fn from(t: MixtureTarget) -> Self {
        FixtureSpec {
            dim: t.dim,
            weights: t.weights,
            centers: t.centers,
            base: t.base,
            seed: None,
        }
    }
}

impl MixtureTarget {
    pub fn new(weights: Vec<f64>, centers: Vec<Vec<f64>>, base: BaseFunction) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        if weights.len() != centers.len() {
            return Err(Error::LengthMismatch {
                what: "centers",
                expected: weights.len(),
                got: centers.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMixture(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let dim = centers[0].len();
        if dim == 0 {
            return Err(Error::InvalidMixture("dimension must be positive".into()));
        }
        for c in &centers {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMixture("non-finite center".into()));
            }
        }
        base.validate(dim)?;
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            weights,
            log_weights,
            centers,
            base,
            dim,
        })
    }

    /// Isotropic Gaussian mixture with common σ.
    pub fn gaussian(weights: Vec<f64>, centers: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        Self::new(weights, centers, BaseFunction::gaussian(sigma))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FixtureSpec = serde_json::from_str(text)?;
        Self::try_from(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn base(&self) -> &BaseFunction {
        &self.base
    }

    pub fn w_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max_i ‖μ_i‖`.
    pub fn center_bound(&self) -> f64 {
        self.centers.iter().map(|c| norm(c)).fold(0.0, f64::max)
    }

    /// Component exponents `ln w_i − f₀(x − μ_i)`.
    pub fn component_log_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x)?;
        let mut z = vec![0.0; self.dim];
        Ok(self
            .centers
            .iter()
            .zip(&self.log_weights)
            .map(|(mu, lw)| {
                for ((zi, xi), mi) in z.iter_mut().zip(x).zip(mu) {
                    *zi = xi - mi;
                }
                lw - self.base.value(&z)
            })
            .collect())
    }

    /// `f(x)` with log-sum-exp stabilization.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(-log_sum_exp(&self.component_log_terms(x)?))
    }

    /// Posterior responsibilities `w_i e^{-f₀(x-μ_i)} / Σ_j w_j e^{-f₀(x-μ_j)}`.
    pub fn softmax_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let terms = self.component_log_terms(x)?;
        let mut out = vec![0.0; terms.len()];
        softmax_into(&terms, &mut out);
        Ok(out)
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_grad(x)?.1)
    }

    pub fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let terms = self.component_log_terms(x)?;
        let value = -log_sum_exp(&terms);
        let mut resp = vec![0.0; terms.len()];
        softmax_into(&terms, &mut resp);
        let mut g = vec![0.0; self.dim];
        let mut z = vec![0.0; self.dim];
        for (mu, r) in self.centers.iter().zip(&resp) {
            if *r == 0.0 {
                continue;
            }
            for ((zi, xi), mi) in z.iter_mut().zip(x).zip(mu) {
                *zi = xi - mi;
            }
            self.base.add_grad(&z, *r, &mut g);
        }
        Ok((value, g))
    }

    /// Exact `ln Z_β = ln ∫ e^{-βf}` where a closed form exists: a single
    /// isotropic Gaussian component at any β, or any Gaussian mixture at β = 1.
    pub fn gaussian_log_partition(&self, beta: f64) -> Result<f64> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("must be positive, got {beta}")));
        }
        let sigma = match &self.base {
            BaseFunction::IsotropicGaussian { sigma } => *sigma,
            BaseFunction::QuadraticForm { .. } => {
                return Err(Error::Unsupported(
                    "gaussian_log_partition needs an isotropic Gaussian base".into(),
                ))
            }
        };
        let half_d = 0.5 * self.dim as f64;
        if self.components() == 1 {
            Ok(half_d * (2.0 * PI * sigma * sigma / beta).ln())
        } else if beta == 1.0 {
            Ok(half_d * (2.0 * PI * sigma * sigma).ln())
        } else {
            Err(Error::PartitionUndefined {
                components: self.components(),
                beta,
            })
        }
    }

    /// `ln p(x)` for the normalized target (β = 1).
    pub fn normalized_log_density(&self, x: &[f64]) -> Result<f64> {
        Ok(-self.log_density(x)? - self.base.log_normalizer(self.dim))
    }

    /// Exact draw: pick a component by weight, then draw from the base.
    pub fn sample_exact(&self, rng: &mut RngStream) -> Vec<f64> {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut idx = self.components() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = i;
                break;
            }
        }
        let z = self.base.sample(self.dim, rng);
        z.iter().zip(&self.centers[idx]).map(|(a, b)| a + b).collect()
    }

    /// Index of the center closest to `x` (Euclidean).
    pub fn nearest_center(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = dist_sq(x, c);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

impl DensityOracle for MixtureTarget {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.log_density(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        MixtureTarget::grad(self, x)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        MixtureTarget::value_grad(self, x)
    }
}

// ---------------------------------------------------------------------------
// Temperature scaling
// ---------------------------------------------------------------------------

/// `(βf, β∇f)` for a wrapped oracle.
#[derive(Debug, Clone)]
pub struct Tempered<O> {
    base: O,
    beta: f64,
}

impl<O: DensityOracle> Tempered<O> {
    pub fn new(base: O, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("must be positive, got {beta}")));
        }
        Ok(Self { base, beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn inner(&self) -> &O {
        &self.base
    }
}

pub fn tempered_oracle<O: DensityOracle>(base: O, beta: f64) -> Result<Tempered<O>> {
    Tempered::new(base, beta)
}

impl<O: DensityOracle> DensityOracle for Tempered<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.beta * self.base.value(x)?)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.base.grad(x)?;
        g.iter_mut().for_each(|v| *v *= self.beta);
        Ok(g)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, mut g) = self.base.value_grad(x)?;
        g.iter_mut().for_each(|gi| *gi *= self.beta);
        Ok((self.beta * v, g))
    }
}

// ---------------------------------------------------------------------------
// Perturbations
// ---------------------------------------------------------------------------

/// A bounded smooth additive perturbation of `f`.
pub trait Perturbation: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn add_grad(&self, x: &[f64], out: &mut [f64]);
}

/// Caller-declared bounds: `sup|perturbation| ≤ sup_norm`,
/// `sup‖∇perturbation‖ ≤ grad_sup_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBounds {
    pub sup_norm: f64,
    pub grad_sup_norm: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPerturbation;

impl Perturbation for ZeroPerturbation {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn add_grad(&self, _x: &[f64], _out: &mut [f64]) {}
}

/// `amplitude · sin(x[axis])`.
#[derive(Debug, Clone, Copy)]
pub struct SinePerturbation {
    pub amplitude: f64,
    pub axis: usize,
}

impl SinePerturbation {
    pub fn bounds(&self) -> PerturbationBounds {
        PerturbationBounds {
            sup_norm: self.amplitude.abs(),
            grad_sup_norm: self.amplitude.abs(),
        }
    }
}

impl Perturbation for SinePerturbation {
    fn value(&self, x: &[f64]) -> f64 {
        self.amplitude * x[self.axis].sin()
    }
    fn add_grad(&self, x: &[f64], out: &mut [f64]) {
        out[self.axis] += self.amplitude * x[self.axis].cos();
    }
}

/// `f + perturbation`, carrying the declared (Δ, τ) for schedule construction.
#[derive(Debug, Clone)]
pub struct Perturbed<O, P> {
    base: O,
    perturbation: P,
    bounds: PerturbationBounds,
}

impl<O: DensityOracle, P: Perturbation> Perturbed<O, P> {
    pub fn new(base: O, perturbation: P, bounds: PerturbationBounds) -> Self {
        Self {
            base,
            perturbation,
            bounds,
        }
    }

    pub fn bounds(&self) -> PerturbationBounds {
        self.bounds
    }

    pub fn inner(&self) -> &O {
        &self.base
    }
}

pub fn perturbed_oracle<O: DensityOracle, P: Perturbation>(
    base: O,
    perturbation: P,
    bounds: PerturbationBounds,
) -> Perturbed<O, P> {
    Perturbed::new(base, perturbation, bounds)
}

impl<O: DensityOracle, P: Perturbation> DensityOracle for Perturbed<O, P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.base.value(x)? + self.perturbation.value(x))
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.base.grad(x)?;
        self.perturbation.add_grad(x, &mut g);
        Ok(g)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (v, mut g) = self.base.value_grad(x)?;
        self.perturbation.add_grad(x, &mut g);
        Ok((v + self.perturbation.value(x), g))
    }
}

// ---------------------------------------------------------------------------
// Adversarial two-variance construction
// ---------------------------------------------------------------------------

/// Smooth step: 0 for `x ≤ 0`, 1 for `x ≥ 1`, `x²(1−x)² + (1−(1−x)²)²` between.
pub fn adversarial_bump_h(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = x * (1.0 - x);
        let b = 1.0 - (1.0 - x) * (1.0 - x);
        a * a + b * b
    }
}

/// `h'(x) = 2x(1−x)(5−4x)` on (0, 1), zero elsewhere.
pub fn adversarial_bump_h_prime(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        2.0 * x * (1.0 - x) * (5.0 - 4.0 * x)
    }
}

/// Equal mixture of `N(0, 2I)` and `N(u, I)` whose second mode is hidden:
/// `f̃ = g f₁ + (1 − g) f` equals the wide component `f₁` outside the ball of
/// radius `1.6‖u‖` around `2u`, with `‖u‖ = 8d·ln 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialTwoGaussian {
    u: Vec<f64>,
    u_norm: f64,
    dim: usize,
}

impl AdversarialTwoGaussian {
    pub fn u_norm_for(dim: usize) -> f64 {
        8.0 * dim as f64 * LN_2
    }

    /// `u` is `direction` rescaled to norm `8d·ln 2`.
    pub fn new(direction: &[f64]) -> Result<Self> {
        let dim = direction.len();
        let n = norm(direction);
        if dim == 0 || !(n > 0.0 && n.is_finite()) {
            return Err(invalid("direction", "must be a non-zero finite vector"));
        }
        let u_norm = Self::u_norm_for(dim);
        let u = direction.iter().map(|v| v * u_norm / n).collect();
        Ok(Self { u, u_norm, dim })
    }

    /// Uniformly random direction on the sphere.
    pub fn random(dim: usize, rng: &mut RngStream) -> Result<Self> {
        let mut dir = vec![0.0; dim];
        rng.fill_normal(&mut dir);
        Self::new(&dir)
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_norm(&self) -> f64 {
        self.u_norm
    }

    fn f1(&self, x: &[f64]) -> f64 {
        norm_sq(x) / 4.0 + 0.5 * self.dim as f64 * (2.0 * 2f64.sqrt() * PI).ln()
    }

    fn f2(&self, x: &[f64]) -> f64 {
        dist_sq(x, &self.u) / 2.0 + 0.5 * self.dim as f64 * (2.0 * PI).ln()
    }

    /// The true mixture `f = −ln(½(e^{−f₁} + e^{−f₂}))`.
    pub fn mixture_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(LN_2 - log_sum_exp(&[-self.f1(x), -self.f2(x)]))
    }

    /// The wide component `f₁ = ‖x‖²/4 + (d/2) ln(2√2 π)`.
    pub fn wide_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(self.f1(x))
    }

    fn mixture_value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let terms = [-self.f1(x), -self.f2(x)];
        let value = LN_2 - log_sum_exp(&terms);
        let mut r = [0.0; 2];
        softmax_into(&terms, &mut r);
        let g = x
            .iter()
            .zip(&self.u)
            .map(|(xi, ui)| r[0] * 0.5 * xi + r[1] * (xi - ui))
            .collect();
        (value, g)
    }

    /// Blending weight `g(x) = h(10(‖x − 2u‖/‖u‖ − 1.5))`.
    pub fn blend(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x)?;
        Ok(adversarial_bump_h(self.blend_arg(x).0))
    }

    fn blend_arg(&self, x: &[f64]) -> (f64, f64) {
        let r = x
            .iter()
            .zip(&self.u)
            .map(|(xi, ui)| (xi - 2.0 * ui) * (xi - 2.0 * ui))
            .sum::<f64>()
            .sqrt();
        (10.0 * (r / self.u_norm - 1.5), r)
    }

    /// `(f̃(x), ∇f̃(x))` by the product rule.
    pub fn value_grad_tilde(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(self.dim, x)?;
        let (s, r) = self.blend_arg(x);
        if s >= 1.0 {
            let g = x.iter().map(|xi| 0.5 * xi).collect();
            return Ok((self.f1(x), g));
        }
        let (f, grad_f) = self.mixture_value_grad(x);
        if s <= 0.0 {
            return Ok((f, grad_f));
        }
        let f1 = self.f1(x);
        let blend = adversarial_bump_h(s);
        let dblend = adversarial_bump_h_prime(s) * 10.0 / (self.u_norm * r);
        let value = blend * f1 + (1.0 - blend) * f;
        let grad = x
            .iter()
            .zip(&self.u)
            .zip(&grad_f)
            .map(|((xi, ui), gf)| {
                let grad_blend = dblend * (xi - 2.0 * ui);
                grad_blend * (f1 - f) + blend * 0.5 * xi + (1.0 - blend) * gf
            })
            .collect();
        Ok((value, grad))
    }
}

pub fn adversarial_value_grad(a: &AdversarialTwoGaussian, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    a.value_grad_tilde(x)
}

impl DensityOracle for AdversarialTwoGaussian {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_grad_tilde(x)?.0)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_grad_tilde(x)?.1)
    }
    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.value_grad_tilde(x)
    }
}

// ---------------------------------------------------------------------------
// Gradient consistency
// ---------------------------------------------------------------------------

/// Worst relative disagreement between `∇f` and central finite differences of
/// `f` over `probes`: `‖fd − ∇f‖∞ / max(‖∇f‖∞, 1)`.
pub fn gradient_check<O: DensityOracle + ?Sized>(oracle: &O, probes: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in probes {
        let g = oracle.grad(x)?;
        let mut xp = x.clone();
        let mut err: f64 = 0.0;
        for i in 0..x.len() {
            let h = 1e-5 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let fp = oracle.value(&xp)?;
            xp[i] = x[i] - h;
            let fm = oracle.value(&xp)?;
            xp[i] = x[i];
            let fd = (fp - fm) / (2.0 * h);
            err = err.max((fd - g[i]).abs());
        }
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(err / scale);
    }
    Ok(worst)
}
