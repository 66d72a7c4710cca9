//! Finite reversible chains and numerical checks of the spectral-gap
//! decomposition bounds.
//!
//! A chain whose stationary law is a mixture `Σ w_j π_j` is built so that its
//! generator splits exactly into component generators. The true Poincaré
//! constant `C*` of the chain is then compared with the bound assembled from
//! the component constants `C` and the constant `C̄` of a small projected
//! chain on the component labels.

mod chain;
mod paths;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use chain::{
    build_tempering_chain, decomposition_residual, discretize_density, mixture_chain,
    random_reversible_chain, tempering_dirichlet_direct, uniform_nodes, FiniteMarkovProcess,
};
pub use paths::{congestion_bound, CanonicalPathSet, Congestion};

use crate::divergences::{chi2_max, overlap_delta, GridMeasure};
use crate::error::{invalid, Error, Result};

/// Default stand-in for `w/0` when two components coincide.
pub const RATE_CAP: f64 = 1e12;

/// Relative tolerance when comparing `C*` with a bound.
pub const BOUND_TOL: f64 = 1e-6;

/// Residual above which the generator decomposition is considered broken.
pub const DECOMPOSITION_TOL: f64 = 1e-10;

/// χ²_max between top-level components and overlaps between levels.
///
/// `chi2_max[(j, k)]` is symmetric; either order may be supplied.
/// `delta[(i, i2, j)]` is `δ_{(i,j),(i2,j)}`; when one direction is missing
/// it is recovered from `r_i w_{i,j} δ_{(i,j),(i2,j)} = r_{i2} w_{i2,j} δ_{(i2,j),(i,j)}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTable {
    pub chi2_max: BTreeMap<(usize, usize), f64>,
    pub delta: BTreeMap<(usize, usize, usize), f64>,
}

impl DivergenceTable {
    fn chi2(&self, j: usize, k: usize) -> Result<f64> {
        self.chi2_max
            .get(&(j, k))
            .or_else(|| self.chi2_max.get(&(k, j)))
            .copied()
            .ok_or_else(|| Error::MissingDivergence(format!("chi2_max between components {j} and {k}")))
    }
}

/// Chain on (level, component) labels with rates `T̄` and stationary weights
/// proportional to `r_i w_{i,j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedChain {
    pub labels: Vec<(usize, usize)>,
    pub rates: DMatrix<f64>,
    pub stationary: Vec<f64>,
}

impl ProjectedChain {
    pub fn index(&self, level: usize, component: usize) -> Option<usize> {
        self.labels.iter().position(|l| *l == (level, component))
    }

    pub fn rate(&self, from: (usize, usize), to: (usize, usize)) -> Option<f64> {
        Some(self.rates[(self.index(from.0, from.1)?, self.index(to.0, to.1)?)])
    }

    /// `max |p̄_a T̄(a,b) − p̄_b T̄(b,a)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.labels.len();
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                let f = self.stationary[a] * self.rates[(a, b)];
                let g = self.stationary[b] * self.rates[(b, a)];
                m = m.max((f - g).abs());
            }
        }
        m
    }

    pub fn to_process(&self) -> Result<FiniteMarkovProcess> {
        FiniteMarkovProcess::from_rates(self.rates.clone(), self.stationary.clone())
    }

    /// `C̄`; `+∞` when the label graph is disconnected.
    pub fn poincare_constant(&self) -> Result<f64> {
        self.to_process()?.poincare_constant_or_inf()
    }
}

/// Rates `T̄((1,j),(1,k)) = w_{1,k}/χ²_max` at the top level and
/// `T̄((i,j),(i±1,j)) = K δ_{(i,j),(i±1,j)}` between levels.
///
/// Level 0 is the highest temperature. A zero χ²_max becomes `rate_cap`.
pub fn build_projected_chain(
    weights: &[Vec<f64>],
    rel_probs: &[f64],
    k: f64,
    table: &DivergenceTable,
    rate_cap: f64,
) -> Result<ProjectedChain> {
    let l = weights.len();
    if l == 0 || rel_probs.len() != l {
        return Err(Error::LengthMismatch {
            what: "relative probabilities",
            expected: l,
            got: rel_probs.len(),
        });
    }
    if !(k > 0.0) {
        return Err(invalid("K", "must be positive"));
    }
    for w in weights {
        if w.is_empty() || (w.iter().sum::<f64>() - 1.0).abs() > 1e-10 || w.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("weights", "each level's weights must be positive and sum to 1"));
        }
    }
    let labels: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .flat_map(|(i, w)| (0..w.len()).map(move |j| (i, j)))
        .collect();
    let n = labels.len();
    let index = |i: usize, j: usize| labels.iter().position(|l| *l == (i, j)).expect("label");
    let mut stationary: Vec<f64> = labels.iter().map(|(i, j)| rel_probs[*i] * weights[*i][*j]).collect();
    let total: f64 = stationary.iter().sum();
    for s in &mut stationary {
        *s /= total;
    }
    let mut rates = DMatrix::zeros(n, n);
    let m0 = weights[0].len();
    for j in 0..m0 {
        for kk in 0..m0 {
            if j == kk {
                continue;
            }
            let chi = table.chi2(j, kk)?;
            let rate = if chi == 0.0 {
                log::warn!("chi2_max = 0 between components {j} and {kk}; capping rate at {rate_cap:e}");
                rate_cap
            } else {
                weights[0][kk] / chi
            };
            rates[(index(0, j), index(0, kk))] = rate;
        }
    }
    for i in 0..l {
        for i2 in [i.wrapping_sub(1), i + 1] {
            if i2 >= l {
                continue;
            }
            for j in 0..weights[i].len().min(weights[i2].len()) {
                let d = match table.delta.get(&(i, i2, j)) {
                    Some(d) => *d,
                    None => {
                        let back = table.delta.get(&(i2, i, j)).ok_or_else(|| {
                            Error::MissingDivergence(format!("delta between ({i},{j}) and ({i2},{j})"))
                        })?;
                        back * rel_probs[i2] * weights[i2][j] / (rel_probs[i] * weights[i][j])
                    }
                };
                rates[(index(i, j), index(i2, j))] = k * d;
            }
        }
    }
    Ok(ProjectedChain {
        labels,
        rates,
        stationary,
    })
}

fn measure_of(stationary: &[f64]) -> Result<GridMeasure> {
    GridMeasure::from_masses(stationary)
}

/// χ²_max among the top-level components and overlaps
/// `δ_{(i,j),(i',j)} = Σ_x min{r_{i'} w_{i',j} p_{(i',j)}(x) / (r_i w_{i,j}), p_{(i,j)}(x)}`
/// computed from component stationary vectors.
pub fn divergence_table(
    components: &[Vec<FiniteMarkovProcess>],
    weights: &[Vec<f64>],
    rel_probs: &[f64],
) -> Result<DivergenceTable> {
    let mut table = DivergenceTable::default();
    let top: Vec<GridMeasure> = components[0]
        .iter()
        .map(|c| measure_of(c.stationary()))
        .collect::<Result<_>>()?;
    for j in 0..top.len() {
        for k in j + 1..top.len() {
            table.chi2_max.insert((j, k), chi2_max(&top[j], &top[k])?);
        }
    }
    let l = components.len();
    for i in 0..l {
        for i2 in [i.wrapping_sub(1), i + 1] {
            if i2 >= l {
                continue;
            }
            for j in 0..components[i].len().min(components[i2].len()) {
                let here = measure_of(components[i][j].stationary())?;
                let there = measure_of(components[i2][j].stationary())?;
                let scale = rel_probs[i2] * weights[i2][j] / (rel_probs[i] * weights[i][j]);
                table.delta.insert((i, i2, j), overlap_delta(&there, &here, scale)?);
            }
        }
    }
    Ok(table)
}

/// `{theorem, instance_hash, C, C_bar, C_star, bound, slack, pass}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub theorem: String,
    pub instance_hash: String,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_bar")]
    pub c_bar: f64,
    #[serde(rename = "C_star")]
    pub c_star: f64,
    pub bound: f64,
    /// `bound / C*`; at least 1 when the bound holds.
    pub slack: f64,
    pub pass: bool,
    /// The projected chain was disconnected, so the bound is infinite.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    #[serde(rename = "K")]
    pub k: Option<f64>,
    /// Largest generator-decomposition residual seen.
    pub residual: f64,
    /// The overlap-based variant `T̄(j,k) = w_k δ_{j,k}` with bound `C(1 + 2C̄)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_variant: Option<Box<DecompositionReport>>,
}

impl DecompositionReport {
    fn finish(
        theorem: &str,
        hash: String,
        c: f64,
        c_bar: f64,
        c_star: f64,
        bound: f64,
        residual: f64,
    ) -> Self {
        let vacuous = !bound.is_finite();
        Self {
            theorem: theorem.to_string(),
            instance_hash: hash,
            c,
            c_bar,
            c_star,
            bound,
            slack: bound / c_star,
            pass: vacuous || c_star <= bound * (1.0 + BOUND_TOL),
            vacuous,
            k: None,
            residual,
            overlap_variant: None,
        }
    }

    /// Both the main bound and (when present) the overlap variant hold.
    pub fn all_pass(&self) -> bool {
        self.pass && self.overlap_variant.as_ref().is_none_or(|v| v.pass)
    }
}

/// Short content hash of an instance's generator and stationary vector.
pub fn instance_hash(chain: &FiniteMarkovProcess) -> String {
    let mut h = Sha256::new();
    for v in chain.generator().iter() {
        h.update(v.to_le_bytes());
    }
    for v in chain.stationary() {
        h.update(v.to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn guard_decomposition(
    chain: &FiniteMarkovProcess,
    weights: &[f64],
    components: &[FiniteMarkovProcess],
) -> Result<f64> {
    let residual = decomposition_residual(chain, weights, components)?;
    let scale = chain.generator().abs().max().max(1.0);
    if residual > DECOMPOSITION_TOL * scale {
        return Err(Error::DecompositionMismatch { residual });
    }
    Ok(residual)
}

fn max_poincare<'a>(components: impl IntoIterator<Item = &'a FiniteMarkovProcess>) -> Result<f64> {
    let mut c: f64 = 0.0;
    for comp in components {
        c = c.max(comp.poincare_constant()?);
    }
    Ok(c)
}

/// Checks `C* ≤ C(1 + C̄/2)` for a chain with `⟨f, 𝓛g⟩_P = Σ w_j ⟨f, 𝓛_j g⟩_{P_j}`,
/// and the overlap variant `C* ≤ C(1 + 2C̄)`.
pub fn verify_simple_decomposition(
    chain: &FiniteMarkovProcess,
    weights: &[f64],
    components: &[FiniteMarkovProcess],
) -> Result<DecompositionReport> {
    let residual = guard_decomposition(chain, weights, components)?;
    let c = max_poincare(components)?;
    let c_star = chain.poincare_constant()?;
    let hash = instance_hash(chain);
    let measures: Vec<GridMeasure> = components
        .iter()
        .map(|m| measure_of(m.stationary()))
        .collect::<Result<_>>()?;
    let m = components.len();

    let mut chi_table = DivergenceTable::default();
    let mut overlap_rates = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            if j < k {
                chi_table.chi2_max.insert((j, k), chi2_max(&measures[j], &measures[k])?);
            }
            if j != k {
                overlap_rates[(j, k)] = weights[k] * overlap_delta(&measures[j], &measures[k], 1.0)?;
            }
        }
    }
    let projected = build_projected_chain(&[weights.to_vec()], &[1.0], 1.0, &chi_table, RATE_CAP)?;
    let c_bar = projected.poincare_constant()?;
    let mut report = DecompositionReport::finish(
        "simple",
        hash.clone(),
        c,
        c_bar,
        c_star,
        c * (1.0 + c_bar / 2.0),
        residual,
    );

    let overlap = ProjectedChain {
        labels: (0..m).map(|j| (0, j)).collect(),
        rates: overlap_rates,
        stationary: weights.to_vec(),
    };
    let c_bar_alt = overlap.poincare_constant()?;
    report.overlap_variant = Some(Box::new(DecompositionReport::finish(
        "simple-overlap",
        hash,
        c,
        c_bar_alt,
        c_star,
        c * (1.0 + 2.0 * c_bar_alt),
        residual,
    )));
    Ok(report)
}

/// One temperature level: its chain and the components it decomposes into.
#[derive(Debug, Clone)]
pub struct LevelDecomposition {
    pub chain: FiniteMarkovProcess,
    pub weights: Vec<f64>,
    pub components: Vec<FiniteMarkovProcess>,
}

impl LevelDecomposition {
    /// Level chain assembled from its components.
    pub fn from_components(weights: Vec<f64>, components: Vec<FiniteMarkovProcess>) -> Result<Self> {
        let chain = mixture_chain(&weights, &components)?;
        Ok(Self {
            chain,
            weights,
            components,
        })
    }
}

/// Checks `C* ≤ max{C(1 + (½ + 6K)C̄), 6KC̄/λ}` for the tempering chain built
/// from `levels` (level 0 hottest) with relative probabilities `r` and swap
/// rate `λ`.
pub fn verify_tempering_decomposition(
    levels: &[LevelDecomposition],
    rel_probs: &[f64],
    swap_rate: f64,
    k: f64,
) -> Result<DecompositionReport> {
    if levels.is_empty() {
        return Err(invalid("levels", "need at least one level"));
    }
    if !(swap_rate > 0.0) {
        return Err(invalid("swap_rate", "must be positive"));
    }
    let mut residual: f64 = 0.0;
    for lvl in levels {
        residual = residual.max(guard_decomposition(&lvl.chain, &lvl.weights, &lvl.components)?);
    }
    let chains: Vec<FiniteMarkovProcess> = levels.iter().map(|l| l.chain.clone()).collect();
    let full = build_tempering_chain(&chains, rel_probs, swap_rate)?;
    let c = max_poincare(levels.iter().flat_map(|l| l.components.iter()))?;
    let comps: Vec<Vec<FiniteMarkovProcess>> = levels.iter().map(|l| l.components.clone()).collect();
    let weights: Vec<Vec<f64>> = levels.iter().map(|l| l.weights.clone()).collect();
    let table = divergence_table(&comps, &weights, rel_probs)?;
    let projected = build_projected_chain(&weights, rel_probs, k, &table, RATE_CAP)?;
    let c_bar = projected.poincare_constant()?;
    let c_star = full.poincare_constant()?;
    let bound = (c * (1.0 + (0.5 + 6.0 * k) * c_bar)).max(6.0 * k * c_bar / swap_rate);
    let mut report = DecompositionReport::finish(
        "tempering",
        instance_hash(&full),
        c,
        c_bar,
        c_star,
        bound,
        residual,
    );
    report.k = Some(k);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_with_chi(chi: f64) -> DivergenceTable {
        let mut t = DivergenceTable::default();
        t.chi2_max.insert((0, 1), chi);
        t
    }

    #[test]
    fn horizontal_rate_formula() {
        let p = build_projected_chain(&[vec![0.5, 0.5]], &[1.0], 1.0, &table_with_chi(3.0), RATE_CAP).unwrap();
        assert!((p.rate((0, 0), (0, 1)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.rate((0, 1), (0, 0)).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn identical_components_capped() {
        let p = build_projected_chain(&[vec![0.5, 0.5]], &[1.0], 1.0, &table_with_chi(0.0), RATE_CAP).unwrap();
        assert_eq!(p.rate((0, 0), (0, 1)).unwrap(), RATE_CAP);
    }

    #[test]
    fn infinite_chi_disconnects() {
        let p = build_projected_chain(&[vec![0.5, 0.5]], &[1.0], 1.0, &table_with_chi(f64::INFINITY), RATE_CAP)
            .unwrap();
        assert_eq!(p.rate((0, 0), (0, 1)).unwrap(), 0.0);
        assert_eq!(p.poincare_constant().unwrap(), f64::INFINITY);
    }

    #[test]
    fn vertical_rate_and_reverse() {
        let mut t = DivergenceTable::default();
        t.delta.insert((0, 1, 0), 0.4);
        let r = [0.25, 0.75];
        let p = build_projected_chain(&[vec![1.0], vec![1.0]], &r, 1.0, &t, RATE_CAP).unwrap();
        assert!((p.rate((0, 0), (1, 0)).unwrap() - 0.4).abs() < 1e-15);
        let back = p.rate((1, 0), (0, 0)).unwrap();
        assert!((back - 0.4 * 0.25 / 0.75).abs() < 1e-15);
        assert!(p.detailed_balance_residual() < 1e-15);
    }

    #[test]
    fn missing_entries_reported() {
        let e = build_projected_chain(&[vec![0.5, 0.5]], &[1.0], 1.0, &DivergenceTable::default(), RATE_CAP)
            .unwrap_err();
        assert!(matches!(e, Error::MissingDivergence(_)));
        let e = build_projected_chain(&[vec![1.0], vec![1.0]], &[0.5, 0.5], 1.0, &DivergenceTable::default(), RATE_CAP)
            .unwrap_err();
        assert!(matches!(e, Error::MissingDivergence(_)));
    }

    #[test]
    fn single_component_simple_bound() {
        let nodes = uniform_nodes(-5.0, 5.0, 48);
        let c = discretize_density(&nodes, |x| (-x * x / 2.0).exp()).unwrap();
        let chain = mixture_chain(&[1.0], std::slice::from_ref(&c)).unwrap();
        let r = verify_simple_decomposition(&chain, &[1.0], &[c]).unwrap();
        assert!(r.pass);
        assert!((r.c - r.c_star).abs() <= 1e-9 * r.c_star);
    }

    #[test]
    fn mismatched_decomposition_reported() {
        let nodes = uniform_nodes(-5.0, 5.0, 32);
        let a = discretize_density(&nodes, |x| (-(x - 1.0) * (x - 1.0) / 2.0).exp()).unwrap();
        let b = discretize_density(&nodes, |x| (-(x + 1.0) * (x + 1.0) / 2.0).exp()).unwrap();
        let wrong = discretize_density(&nodes, |x| (-x * x / 2.0).exp()).unwrap();
        let e = verify_simple_decomposition(&wrong, &[0.5, 0.5], &[a, b]).unwrap_err();
        assert!(matches!(e, Error::DecompositionMismatch { .. }));
    }
}
