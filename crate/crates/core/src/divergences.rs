//! χ² divergences, overlaps and the inequalities built on them.
//!
//! Gaussian χ² has a closed form in any dimension. Everything else is computed
//! on a [`QuadratureGrid`] in one or two dimensions: densities are turned into
//! discrete measures `m_k = w_k p(x_k)` and the divergences are evaluated on
//! those, so the inequalities checked here hold exactly up to rounding.
//!
//! An infinite divergence is returned as `f64::INFINITY`; downstream rates of
//! the form `w / χ²` then become 0 without special cases.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{gauss_legendre, log_sum_exp};
use crate::oracle::{BaseFunction, MixtureTarget};

/// Tolerance on `|∫p − 1|` before a density is accepted as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Trapezoid,
    /// Composite Gauss–Legendre with 16-node panels.
    GaussLegendre,
}

const GL_PANEL: usize = 16;

/// Tensor-product quadrature on a box in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    bounds: Vec<(f64, f64)>,
    nodes_per_axis: usize,
    rule: QuadratureRule,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn axis_rule(lo: f64, hi: f64, n: usize, rule: QuadratureRule) -> (Vec<f64>, Vec<f64>) {
    match rule {
        QuadratureRule::Trapezoid => {
            let h = (hi - lo) / (n - 1) as f64;
            let x = (0..n).map(|i| lo + i as f64 * h).collect();
            let w = (0..n)
                .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
                .collect();
            (x, w)
        }
        QuadratureRule::GaussLegendre => {
            let panels = n / GL_PANEL;
            let (gx, gw) = gauss_legendre(GL_PANEL);
            let width = (hi - lo) / panels as f64;
            let mut x = Vec::with_capacity(n);
            let mut w = Vec::with_capacity(n);
            for p in 0..panels {
                let a = lo + p as f64 * width;
                for (xi, wi) in gx.iter().zip(&gw) {
                    x.push(a + 0.5 * width * (xi + 1.0));
                    w.push(0.5 * width * wi);
                }
            }
            (x, w)
        }
    }
}

impl QuadratureGrid {
    /// `nodes_per_axis ≥ 64`; for Gauss–Legendre it must be a multiple of 16.
    pub fn new(bounds: Vec<(f64, f64)>, nodes_per_axis: usize, rule: QuadratureRule) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not supported (1 or 2 only)",
                bounds.len()
            )));
        }
        if nodes_per_axis < 64 {
            return Err(Error::InvalidGrid(format!(
                "{nodes_per_axis} nodes per axis; at least 64 required"
            )));
        }
        if rule == QuadratureRule::GaussLegendre && !nodes_per_axis.is_multiple_of(GL_PANEL) {
            return Err(Error::InvalidGrid(format!(
                "Gauss–Legendre node count must be a multiple of {GL_PANEL}"
            )));
        }
        if bounds.iter().any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::InvalidGrid("bounds must be finite with lo < hi".into()));
        }
        let axes: Vec<_> = bounds
            .iter()
            .map(|(a, b)| axis_rule(*a, *b, nodes_per_axis, rule))
            .collect();
        let (points, weights) = if axes.len() == 1 {
            let (x, w) = &axes[0];
            (x.iter().map(|v| vec![*v]).collect(), w.clone())
        } else {
            let mut pts = Vec::with_capacity(nodes_per_axis * nodes_per_axis);
            let mut wts = Vec::with_capacity(nodes_per_axis * nodes_per_axis);
            for (x0, w0) in axes[0].0.iter().zip(&axes[0].1) {
                for (x1, w1) in axes[1].0.iter().zip(&axes[1].1) {
                    pts.push(vec![*x0, *x1]);
                    wts.push(w0 * w1);
                }
            }
            (pts, wts)
        };
        Ok(Self {
            bounds,
            nodes_per_axis,
            rule,
            points,
            weights,
        })
    }

    /// Gauss–Legendre grid on `[lo, hi]` with `n` nodes.
    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![(lo, hi)], n, QuadratureRule::GaussLegendre)
    }

    /// Gauss–Legendre grid on `[lo, hi]²`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![(lo, hi), (lo, hi)], n, QuadratureRule::GaussLegendre)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.nodes_per_axis
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// `ln ∫ exp(log_f)` over the grid.
    pub fn log_integrate(&self, log_f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w.ln() + log_f(x))
            .collect();
        log_sum_exp(&terms)
    }

    /// Discrete measure of a density that should integrate to 1.
    ///
    /// Fails with [`Error::NotNormalized`] when the grid misses more than
    /// [`NORMALIZATION_TOL`] of the mass; otherwise renormalizes.
    pub fn measure(&self, log_density: impl Fn(&[f64]) -> f64) -> Result<GridMeasure> {
        let log_mass: Vec<f64> = self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w.ln() + log_density(x))
            .collect();
        let log_total = log_sum_exp(&log_mass);
        let total = log_total.exp();
        if !((total - 1.0).abs() <= NORMALIZATION_TOL) {
            return Err(Error::NotNormalized { integral: total });
        }
        Ok(GridMeasure::from_log_masses(log_mass))
    }

    /// Discrete measure of an unnormalized density; no coverage check.
    pub fn measure_unnormalized(&self, log_density: impl Fn(&[f64]) -> f64) -> GridMeasure {
        GridMeasure::from_log_masses(
            self.points
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w.ln() + log_density(x))
                .collect(),
        )
    }
}

/// A probability vector over grid nodes, kept in log form.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    log_mass: Vec<f64>,
}

impl GridMeasure {
    /// Normalizes the given log-masses.
    pub fn from_log_masses(mut log_mass: Vec<f64>) -> Self {
        let total = log_sum_exp(&log_mass);
        for v in &mut log_mass {
            *v -= total;
        }
        Self { log_mass }
    }

    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        if masses.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(invalid("masses", "must be non-negative and finite"));
        }
        if !(masses.iter().sum::<f64>() > 0.0) {
            return Err(invalid("masses", "total mass must be positive"));
        }
        Ok(Self::from_log_masses(masses.iter().map(|m| m.ln()).collect()))
    }

    pub fn len(&self) -> usize {
        self.log_mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_mass.is_empty()
    }

    pub fn log_masses(&self) -> &[f64] {
        &self.log_mass
    }

    pub fn masses(&self) -> Vec<f64> {
        self.log_mass.iter().map(|v| v.exp()).collect()
    }

    pub fn expectation(&self, g: &[f64]) -> f64 {
        self.log_mass.iter().zip(g).map(|(l, v)| l.exp() * v).sum()
    }

    pub fn variance(&self, g: &[f64]) -> f64 {
        let m = self.expectation(g);
        self.log_mass
            .iter()
            .zip(g)
            .map(|(l, v)| l.exp() * (v - m) * (v - m))
            .sum()
    }

    /// `Σ_j w_j P_j`.
    pub fn mixture(weights: &[f64], parts: &[GridMeasure]) -> Result<Self> {
        check_parts(weights, parts)?;
        let n = parts[0].len();
        let log_mass = (0..n)
            .map(|k| {
                let terms: Vec<f64> = weights
                    .iter()
                    .zip(parts)
                    .map(|(w, p)| w.ln() + p.log_mass[k])
                    .collect();
                log_sum_exp(&terms)
            })
            .collect();
        Ok(Self::from_log_masses(log_mass))
    }
}

fn check_parts(weights: &[f64], parts: &[GridMeasure]) -> Result<()> {
    if weights.len() != parts.len() || parts.is_empty() {
        return Err(Error::LengthMismatch {
            what: "mixture parts",
            expected: weights.len(),
            got: parts.len(),
        });
    }
    let n = parts[0].len();
    if parts.iter().any(|p| p.len() != n) {
        return Err(invalid("parts", "measures live on different grids"));
    }
    Ok(())
}

fn same_support(p: &GridMeasure, q: &GridMeasure) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            what: "grid measures",
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// χ² divergences
// ---------------------------------------------------------------------------

fn spd_cholesky(m: &DMatrix<f64>, name: &'static str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !m.is_square() {
        return Err(invalid(name, "must be square"));
    }
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 * m.abs().max().max(1.0) {
        return Err(invalid(name, "must be symmetric"));
    }
    Cholesky::new(m.clone()).ok_or_else(|| invalid(name, "must be positive definite"))
}

fn log_det(ch: &Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `χ²(N(μ₂, Σ₂) ‖ N(μ₁, Σ₁)) = ∫ p₂²/p₁ − 1`.
///
/// Returns `+∞` when `2Σ₂⁻¹ − Σ₁⁻¹` is not positive definite.
pub fn chi2_gaussian(
    mu1: &DVector<f64>,
    sigma1: &DMatrix<f64>,
    mu2: &DVector<f64>,
    sigma2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mu1.len();
    if mu2.len() != d || sigma1.nrows() != d || sigma2.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu2.len().max(sigma1.nrows()).max(sigma2.nrows()),
        });
    }
    let c1 = spd_cholesky(sigma1, "Sigma1")?;
    let c2 = spd_cholesky(sigma2, "Sigma2")?;
    let p1 = c1.inverse();
    let p2 = c2.inverse();
    let a = &p2 * 2.0 - &p1;
    let a = (&a + a.transpose()) * 0.5;
    let Some(ca) = Cholesky::new(a) else {
        return Ok(f64::INFINITY);
    };
    let b = &p2 * mu2 * 2.0 - &p1 * mu1;
    let quad_b = b.dot(&ca.solve(&b));
    let quad1 = mu1.dot(&(&p1 * mu1));
    let quad2 = mu2.dot(&(&p2 * mu2));
    let log_one_plus =
        0.5 * log_det(&c1) - log_det(&c2) - 0.5 * log_det(&ca) + 0.5 * quad_b + 0.5 * quad1 - quad2;
    Ok(log_one_plus.exp_m1().max(0.0))
}

/// `χ²(Q ‖ P) = Σ q_k²/p_k − 1`; `+∞` when `q` has mass where `p` has none.
pub fn chi2_numeric(p: &GridMeasure, q: &GridMeasure) -> Result<f64> {
    same_support(p, q)?;
    let mut terms = Vec::with_capacity(p.len());
    for (lp, lq) in p.log_mass.iter().zip(&q.log_mass) {
        if *lq == f64::NEG_INFINITY {
            continue;
        }
        if *lp == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        terms.push(2.0 * lq - lp);
    }
    Ok(log_sum_exp(&terms).exp_m1().max(0.0))
}

/// `max{χ²(P‖Q), χ²(Q‖P)}`.
pub fn chi2_max(p: &GridMeasure, q: &GridMeasure) -> Result<f64> {
    Ok(chi2_numeric(p, q)?.max(chi2_numeric(q, p)?))
}

/// `∫ min{c·p, q}`.
pub fn overlap_delta(p: &GridMeasure, q: &GridMeasure, scale: f64) -> Result<f64> {
    same_support(p, q)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("scale", "must be positive and finite"));
    }
    let ls = scale.ln();
    Ok(p.log_mass
        .iter()
        .zip(&q.log_mass)
        .map(|(lp, lq)| (lp + ls).min(*lq).exp())
        .sum())
}

/// `KL(P ‖ Q) = Σ p ln(p/q)`.
pub fn kl_numeric(p: &GridMeasure, q: &GridMeasure) -> Result<f64> {
    same_support(p, q)?;
    let mut total = 0.0;
    for (lp, lq) in p.log_mass.iter().zip(&q.log_mass) {
        if *lp == f64::NEG_INFINITY {
            continue;
        }
        if *lq == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total += lp.exp() * (lp - lq);
    }
    Ok(total.max(0.0))
}

/// `KL(W ‖ W')` for finite weight vectors.
pub fn kl_discrete(w: &[f64], w2: &[f64]) -> Result<f64> {
    if w.len() != w2.len() {
        return Err(Error::LengthMismatch {
            what: "weights",
            expected: w.len(),
            got: w2.len(),
        });
    }
    let mut total = 0.0;
    for (a, b) in w.iter().zip(w2) {
        if *a == 0.0 {
            continue;
        }
        if *b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// `{check, instances, worst_margin, pass}` plus named values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub instances: usize,
    /// Smallest slack `rhs − lhs` seen; negative means a violation.
    pub worst_margin: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    /// Set when the bound is infinite and the check holds trivially.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

impl CheckReport {
    pub fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            instances: 0,
            worst_margin: f64::INFINITY,
            pass: true,
            values: BTreeMap::new(),
            vacuous: false,
        }
    }
}

/// Compares `g_β = (Σ w_i e^{−f_i})^β` with `g̃_β = Σ w_i e^{−βf_i}` at each
/// probe: `g̃_β ≤ g_β ≤ g̃_β / w_min`. Values record the extreme ratios.
pub fn check_temp_scaling_bounds(
    target: &MixtureTarget,
    beta: f64,
    probes: &[Vec<f64>],
) -> Result<CheckReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", "must lie in (0, 1]"));
    }
    let lw: Vec<f64> = target.weights().iter().map(|w| w.ln()).collect();
    let upper = -target.w_min().ln();
    let mut lo_ratio = f64::INFINITY;
    let mut hi_ratio = f64::NEG_INFINITY;
    let mut report = CheckReport::new("temp-scaling");
    for x in probes {
        if x.len() != target.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                got: x.len(),
            });
        }
        let fs: Vec<f64> = target
            .centers()
            .iter()
            .map(|mu| {
                let z: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
                target.base().value(&z)
            })
            .collect();
        let terms: Vec<f64> = lw.iter().zip(&fs).map(|(l, f)| l - f).collect();
        let log_g = beta * log_sum_exp(&terms);
        let tempered: Vec<f64> = lw.iter().zip(&fs).map(|(l, f)| l - beta * f).collect();
        let log_gt = log_sum_exp(&tempered);
        let r = log_g - log_gt;
        lo_ratio = lo_ratio.min(r);
        hi_ratio = hi_ratio.max(r);
        report.worst_margin = report.worst_margin.min(r).min(upper - r);
        report.instances += 1;
    }
    let slack = 1e-12;
    report.pass = lo_ratio >= -slack && hi_ratio <= upper + slack;
    report.values.insert("min_ratio".into(), lo_ratio.exp());
    report.values.insert("max_ratio".into(), hi_ratio.exp());
    report.values.insert("upper_bound".into(), upper.exp());
    Ok(report)
}

/// Lower end of the interval for `Z_β/Z_α` of a unit-variance Gaussian
/// mixture with centers in a ball of radius `D`:
/// `½ exp(−2(β−α)(D + (√d + 2√ln(2/w_min))/√α)²)`.
pub fn partition_ratio_lower_bound(d: usize, center_bound: f64, w_min: f64, alpha: f64, beta: f64) -> f64 {
    let r = center_bound + ((d as f64).sqrt() + 2.0 * (2.0 / w_min).ln().sqrt()) / alpha.sqrt();
    0.5 * (-2.0 * (beta - alpha) * r * r).exp()
}

/// `Z_β / Z_α` by quadrature, checked against
/// [`partition_ratio_lower_bound`] and 1. Isotropic Gaussian bases are
/// rescaled to unit variance first (D ↦ D/σ).
pub fn check_partition_ratio_bound(
    target: &MixtureTarget,
    alpha: f64,
    beta: f64,
    grid: &QuadratureGrid,
) -> Result<CheckReport> {
    if !(alpha > 0.0 && alpha <= beta) {
        return Err(invalid("alpha", "need 0 < alpha ≤ beta"));
    }
    if grid.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: grid.dim(),
        });
    }
    let sigma = match target.base() {
        BaseFunction::IsotropicGaussian { sigma } => *sigma,
        _ => {
            return Err(Error::Unsupported(
                "partition ratio bound needs an isotropic Gaussian base".into(),
            ))
        }
    };
    let f = |x: &[f64]| target.log_density(x).unwrap_or(f64::INFINITY);
    let log_za = grid.log_integrate(|x| -alpha * f(x));
    let log_zb = grid.log_integrate(|x| -beta * f(x));
    let ratio = (log_zb - log_za).exp();
    let lower = partition_ratio_lower_bound(
        target.dim(),
        target.center_bound() / sigma,
        target.w_min(),
        alpha,
        beta,
    );
    let mut report = CheckReport::new("partition-ratio");
    report.instances = 1;
    report.worst_margin = (ratio - lower).min(1.0 - ratio);
    report.pass = ratio >= lower && ratio <= 1.0 + 1e-12;
    report.values.insert("ratio".into(), ratio);
    report.values.insert("lower".into(), lower);
    report.values.insert("upper".into(), 1.0);
    Ok(report)
}

/// `KL(Σ w_i P_i ‖ Σ w'_i Q_i) ≤ KL(W ‖ W') + Σ w_i KL(P_i ‖ Q_i)`.
pub fn kl_mixture_upper_bound_check(
    w: &[f64],
    w2: &[f64],
    ps: &[GridMeasure],
    qs: &[GridMeasure],
) -> Result<CheckReport> {
    check_parts(w, ps)?;
    check_parts(w2, qs)?;
    same_support(&ps[0], &qs[0])?;
    let lhs = kl_numeric(&GridMeasure::mixture(w, ps)?, &GridMeasure::mixture(w2, qs)?)?;
    let mut rhs = kl_discrete(w, w2)?;
    for ((wi, p), q) in w.iter().zip(ps).zip(qs) {
        if *wi > 0.0 {
            rhs += wi * kl_numeric(p, q)?;
        }
    }
    let mut report = CheckReport::new("kl-mixture");
    report.instances = 1;
    report.vacuous = rhs.is_infinite();
    report.worst_margin = rhs - lhs;
    report.pass = report.vacuous || lhs <= rhs + 1e-6;
    report.values.insert("lhs".into(), lhs);
    report.values.insert("rhs".into(), rhs);
    Ok(report)
}

/// `(E_P g − E_Q g)² ≤ Var_P(g) · χ²(Q‖P)`; margin is `rhs − lhs`.
pub fn change_of_measure_margin(p: &GridMeasure, q: &GridMeasure, g: &[f64]) -> Result<f64> {
    let diff = p.expectation(g) - q.expectation(g);
    let chi = chi2_numeric(p, q)?;
    let rhs = p.variance(g) * chi;
    Ok(if rhs.is_nan() { f64::INFINITY } else { rhs - diff * diff })
}

/// Normalized overlap measure `R̃ ∝ min{P, Q}` and its total mass `δ`.
pub fn min_measure(p: &GridMeasure, q: &GridMeasure) -> Result<(GridMeasure, f64)> {
    same_support(p, q)?;
    let lm: Vec<f64> = p.log_mass.iter().zip(&q.log_mass).map(|(a, b)| a.min(*b)).collect();
    let delta = log_sum_exp(&lm).exp();
    if !(delta > 0.0) {
        return Err(invalid("p", "measures do not overlap"));
    }
    Ok((GridMeasure::from_log_masses(lm), delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn normal_1d(mu: f64, var: f64) -> impl Fn(&[f64]) -> f64 {
        move |x: &[f64]| -0.5 * (x[0] - mu).powi(2) / var - 0.5 * (2.0 * PI * var).ln()
    }

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn vec1(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    #[test]
    fn chi2_identical_is_zero() {
        let m = DVector::from_vec(vec![1.0, -2.0]);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(chi2_gaussian(&m, &s, &m, &s).unwrap().abs() < 1e-14);
    }

    #[test]
    fn chi2_equal_variance_shift() {
        let v = chi2_gaussian(&vec1(0.0), &scalar(1.0), &vec1(1.0), &scalar(1.0)).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        let grid = QuadratureGrid::line(-15.0, 16.0, 512).unwrap();
        let p = grid.measure(normal_1d(0.0, 1.0)).unwrap();
        let q = grid.measure(normal_1d(1.0, 1.0)).unwrap();
        assert!((chi2_numeric(&p, &q).unwrap() - v).abs() < 1e-6);
    }

    #[test]
    fn chi2_variance_ratio_direction() {
        // p₁ = N(0, 2), p₂ = N(0, 1): ∫p₂²/p₁ = 2/√3
        let v = chi2_gaussian(&vec1(0.0), &scalar(2.0), &vec1(0.0), &scalar(1.0)).unwrap();
        assert!((v - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);
        let grid = QuadratureGrid::line(-20.0, 20.0, 512).unwrap();
        let p1 = grid.measure(normal_1d(0.0, 2.0)).unwrap();
        let p2 = grid.measure(normal_1d(0.0, 1.0)).unwrap();
        assert!((chi2_numeric(&p1, &p2).unwrap() - v).abs() < 1e-6);
        // σ₂² = 2σ₁²: 2Σ₂⁻¹ − Σ₁⁻¹ = 0, the integral diverges
        let inf = chi2_gaussian(&vec1(0.0), &scalar(1.0), &vec1(0.0), &scalar(2.0)).unwrap();
        assert_eq!(inf, f64::INFINITY);
    }

    #[test]
    fn chi2_numeric_identity_and_coverage() {
        let grid = QuadratureGrid::line(-10.0, 10.0, 256).unwrap();
        let p = grid.measure(normal_1d(0.0, 1.0)).unwrap();
        assert!(chi2_numeric(&p, &p).unwrap().abs() < 1e-8);
        let narrow = QuadratureGrid::line(-2.0, 2.0, 256).unwrap();
        assert!(matches!(
            narrow.measure(normal_1d(0.0, 1.0)),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn chi2_max_picks_larger() {
        let grid = QuadratureGrid::line(-40.0, 40.0, 1024).unwrap();
        let a = grid.measure(normal_1d(0.0, 1.0)).unwrap();
        let b = grid.measure(normal_1d(0.0, 4.0)).unwrap();
        let ab = chi2_numeric(&a, &b).unwrap();
        let ba = chi2_numeric(&b, &a).unwrap();
        assert_eq!(chi2_max(&a, &b).unwrap(), ab.max(ba));
        // χ²(N(0,1) ‖ N(0,4)) = 4/√7 − 1
        let exact = chi2_gaussian(&vec1(0.0), &scalar(4.0), &vec1(0.0), &scalar(1.0)).unwrap();
        assert!((ba - exact).abs() < 1e-6);
        let c = grid.measure(normal_1d(1.0, 1.0)).unwrap();
        let d = grid.measure(normal_1d(-1.0, 1.0)).unwrap();
        assert!((chi2_numeric(&c, &d).unwrap() - chi2_numeric(&d, &c).unwrap()).abs() < 1e-8);
        assert_eq!(chi2_max(&a, &a).unwrap(), chi2_numeric(&a, &a).unwrap());
    }

    #[test]
    fn overlap_examples() {
        let grid = QuadratureGrid::line(-12.0, 15.0, 1024).unwrap();
        let p = grid.measure(normal_1d(0.0, 1.0)).unwrap();
        let q = grid.measure(normal_1d(3.0, 1.0)).unwrap();
        assert!((overlap_delta(&p, &p, 1.0).unwrap() - 1.0).abs() < 1e-6);
        // 2Φ(−1.5)
        let expected = 0.133_614_402_537_715_9;
        assert!((overlap_delta(&p, &q, 1.0).unwrap() - expected).abs() < 1e-5);
        let a = GridMeasure::from_masses(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        let b = GridMeasure::from_masses(&[0.0, 0.0, 0.5, 0.5]).unwrap();
        assert_eq!(overlap_delta(&a, &b, 1.0).unwrap(), 0.0);
        assert_eq!(chi2_numeric(&a, &b).unwrap(), f64::INFINITY);
    }

    #[test]
    fn temp_scaling_degenerate_cases() {
        let t = MixtureTarget::gaussian(vec![0.3, 0.7], vec![vec![0.0, 0.0], vec![3.0, 1.0]], 1.0).unwrap();
        let probes = vec![vec![0.5, 0.5], vec![-2.0, 4.0], vec![3.0, 1.0]];
        let r = check_temp_scaling_bounds(&t, 1.0, &probes).unwrap();
        assert_eq!(r.values["min_ratio"], 1.0);
        assert_eq!(r.values["max_ratio"], 1.0);
        let single = MixtureTarget::gaussian(vec![1.0], vec![vec![1.0, 1.0]], 1.0).unwrap();
        let r = check_temp_scaling_bounds(&single, 0.3, &probes).unwrap();
        assert_eq!(r.values["min_ratio"], 1.0);
        assert_eq!(r.values["max_ratio"], 1.0);
    }

    #[test]
    fn partition_ratio_examples() {
        let grid = QuadratureGrid::line(-40.0, 40.0, 512).unwrap();
        let t = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0]], 1.0).unwrap();
        let same = check_partition_ratio_bound(&t, 0.7, 0.7, &grid).unwrap();
        assert!((same.values["ratio"] - 1.0).abs() < 1e-12);
        let r = check_partition_ratio_bound(&t, 0.5, 1.0, &grid).unwrap();
        assert!(r.pass);
        assert!((r.values["ratio"] - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kl_mixture_trivial() {
        let grid = QuadratureGrid::line(-12.0, 12.0, 256).unwrap();
        let p = vec![
            grid.measure(normal_1d(-1.0, 1.0)).unwrap(),
            grid.measure(normal_1d(2.0, 1.0)).unwrap(),
        ];
        let r = kl_mixture_upper_bound_check(&[0.4, 0.6], &[0.4, 0.6], &p, &p).unwrap();
        assert!(r.values["lhs"].abs() < 1e-12 && r.values["rhs"].abs() < 1e-12);
        assert!(r.pass);
    }
}
