use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

const ROW_SUM_TOL: f64 = 1e-10;
const REVERSIBILITY_TOL: f64 = 1e-10;

/// Continuous-time reversible chain on `n` states: generator `Q` with zero
/// row sums and stationary vector `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMarkovProcess {
    generator: DMatrix<f64>,
    stationary: Vec<f64>,
    /// Grid coordinates of the states, when the chain discretizes a density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<f64>>,
}

impl FiniteMarkovProcess {
    /// Validates rates, row sums, normalization and detailed balance.
    pub fn new(generator: DMatrix<f64>, stationary: Vec<f64>) -> Result<Self> {
        let n = stationary.len();
        if n == 0 {
            return Err(Error::InvalidGenerator("no states".into()));
        }
        if generator.nrows() != n || generator.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: generator.nrows(),
            });
        }
        if stationary.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidGenerator("stationary vector must be positive".into()));
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidGenerator(format!("stationary sums to {total}")));
        }
        let scale = generator.abs().max().max(1.0);
        for x in 0..n {
            let mut row = 0.0;
            for y in 0..n {
                let q = generator[(x, y)];
                if !q.is_finite() {
                    return Err(Error::InvalidGenerator(format!("non-finite rate at ({x}, {y})")));
                }
                if x != y && q < 0.0 {
                    return Err(Error::InvalidGenerator(format!("negative rate at ({x}, {y})")));
                }
                row += q;
            }
            if row.abs() > ROW_SUM_TOL * scale {
                return Err(Error::InvalidGenerator(format!("row {x} sums to {row}")));
            }
        }
        let out = Self {
            generator,
            stationary,
            nodes: None,
        };
        let res = out.reversibility_residual();
        if res > REVERSIBILITY_TOL * out.max_flow().max(1.0) {
            return Err(Error::InvalidGenerator(format!(
                "detailed balance residual {res:e}"
            )));
        }
        Ok(out)
    }

    /// Builds the diagonal from off-diagonal rates, then validates.
    pub fn from_rates(mut rates: DMatrix<f64>, stationary: Vec<f64>) -> Result<Self> {
        let n = rates.nrows();
        for x in 0..n {
            rates[(x, x)] = 0.0;
            let s: f64 = rates.row(x).sum();
            rates[(x, x)] = -s;
        }
        Self::new(rates, stationary)
    }

    pub fn with_nodes(mut self, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() != self.len() {
            return Err(Error::LengthMismatch {
                what: "nodes",
                expected: self.len(),
                got: nodes.len(),
            });
        }
        self.nodes = Some(nodes);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.stationary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stationary.is_empty()
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn nodes(&self) -> Option<&[f64]> {
        self.nodes.as_deref()
    }

    fn max_flow(&self) -> f64 {
        let n = self.len();
        let mut m: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    m = m.max(self.stationary[x] * self.generator[(x, y)]);
                }
            }
        }
        m
    }

    /// `max |π_x Q(x,y) − π_y Q(y,x)|`.
    pub fn reversibility_residual(&self) -> f64 {
        let n = self.len();
        let mut m: f64 = 0.0;
        for x in 0..n {
            for y in x + 1..n {
                let a = self.stationary[x] * self.generator[(x, y)];
                let b = self.stationary[y] * self.generator[(y, x)];
                m = m.max((a - b).abs());
            }
        }
        m
    }

    /// Number of communicating classes of the support graph.
    pub fn communicating_classes(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut classes = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            classes += 1;
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(x) = queue.pop_front() {
                for y in 0..n {
                    if !seen[y] && y != x && (self.generator[(x, y)] > 0.0 || self.generator[(y, x)] > 0.0) {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        classes
    }

    pub fn is_irreducible(&self) -> bool {
        self.communicating_classes() == 1
    }

    fn check_len(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: g.len(),
            });
        }
        Ok(())
    }

    pub fn expectation(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g)?;
        Ok(self.stationary.iter().zip(g).map(|(p, v)| p * v).sum())
    }

    pub fn variance(&self, g: &[f64]) -> Result<f64> {
        let m = self.expectation(g)?;
        Ok(self
            .stationary
            .iter()
            .zip(g)
            .map(|(p, v)| p * (v - m) * (v - m))
            .sum())
    }

    /// `−Σ_x π_x g(x) (Qg)(x)`.
    pub fn dirichlet_form(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g)?;
        let gv = DVector::from_column_slice(g);
        let qg = &self.generator * &gv;
        Ok(-self
            .stationary
            .iter()
            .zip(g.iter().zip(qg.iter()))
            .map(|(p, (a, b))| p * a * b)
            .sum::<f64>())
    }

    /// `½ Σ_{x,y} π_x Q(x,y) (g(x) − g(y))²`.
    pub fn dirichlet_form_pairwise(&self, g: &[f64]) -> Result<f64> {
        self.check_len(g)?;
        let n = self.len();
        let mut total = 0.0;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    let d = g[x] - g[y];
                    total += self.stationary[x] * self.generator[(x, y)] * d * d;
                }
            }
        }
        Ok(0.5 * total)
    }

    /// `S = −D^{1/2} Q D^{−1/2}` with `D = diag(π)`, symmetrized against
    /// rounding.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let n = self.len();
        let sq: Vec<f64> = self.stationary.iter().map(|p| p.sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for x in 0..n {
            for y in 0..n {
                s[(x, y)] = -sq[x] * self.generator[(x, y)] / sq[y];
            }
        }
        (&s + s.transpose()) * 0.5
    }

    /// Spectral gap and an eigenvector `g` (in the original coordinates)
    /// attaining `𝓔(g,g) = Gap · Var(g)`.
    ///
    /// The null direction `√π` is deflated by adding `M·√π√πᵀ` with `M`
    /// above the spectrum, so the gap is the smallest remaining eigenvalue.
    pub fn spectral_gap_with_vector(&self) -> Result<(f64, Vec<f64>)> {
        let classes = self.communicating_classes();
        if classes > 1 {
            return Err(Error::Reducible { components: classes });
        }
        let n = self.len();
        if n == 1 {
            return Ok((f64::INFINITY, vec![0.0]));
        }
        let mut s = self.symmetrized();
        let bound = (0..n)
            .map(|x| s.row(x).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let u = DVector::from_iterator(n, self.stationary.iter().map(|p| p.sqrt()));
        s += (&u * u.transpose()) * (2.0 * bound + 1.0);
        let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
        let (idx, gap) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty spectrum");
        if !(gap > 0.0) {
            return Err(Error::Eigen(format!("non-positive gap {gap:e}")));
        }
        let v = eig.eigenvectors.column(idx);
        let g = v.iter().zip(&u).map(|(a, b)| a / b).collect();
        Ok((gap, g))
    }

    pub fn spectral_gap(&self) -> Result<f64> {
        Ok(self.spectral_gap_with_vector()?.0)
    }

    /// `1 / Gap`, the best `C` with `Var_π(g) ≤ C 𝓔(g,g)`.
    pub fn poincare_constant(&self) -> Result<f64> {
        Ok(1.0 / self.spectral_gap()?)
    }

    /// Poincaré constant with a reducible chain mapped to `+∞`.
    pub fn poincare_constant_or_inf(&self) -> Result<f64> {
        match self.poincare_constant() {
            Err(Error::Reducible { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    }
}

fn uniform_spacing(nodes: &[f64]) -> Result<f64> {
    if nodes.len() < 2 {
        return Err(invalid("nodes", "need at least two grid nodes"));
    }
    let h = nodes[1] - nodes[0];
    if !(h > 0.0) {
        return Err(invalid("nodes", "must be increasing"));
    }
    for w in nodes.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0) {
            return Err(invalid("nodes", "must be uniformly spaced"));
        }
    }
    Ok(h)
}

/// Evenly spaced nodes on `[lo, hi]`.
pub fn uniform_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * h).collect()
}

/// Metropolis birth–death chain on uniform nodes with stationary law
/// proportional to `density` at the nodes and base rate `1/h²`.
pub fn discretize_density(nodes: &[f64], density: impl Fn(f64) -> f64) -> Result<FiniteMarkovProcess> {
    let h = uniform_spacing(nodes)?;
    let values: Vec<f64> = nodes.iter().map(|x| density(*x)).collect();
    for (i, v) in values.iter().enumerate() {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveDensity { node: i, value: *v });
        }
    }
    let total: f64 = values.iter().sum();
    let pi: Vec<f64> = values.iter().map(|v| v / total).collect();
    let n = nodes.len();
    let base = 1.0 / (h * h);
    let mut rates = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in [x.wrapping_sub(1), x + 1] {
            if y < n {
                rates[(x, y)] = base * (pi[y] / pi[x]).min(1.0);
            }
        }
    }
    FiniteMarkovProcess::from_rates(rates, pi)?.with_nodes(nodes.to_vec())
}

/// Chain whose generator decomposes as `⟨f, 𝓛g⟩_π = Σ_j w_j ⟨f, 𝓛_j g⟩_{π_j}`
/// with `π = Σ_j w_j π_j`: `Q = D_π⁻¹ Σ_j w_j D_{π_j} Q_j`.
pub fn mixture_chain(weights: &[f64], components: &[FiniteMarkovProcess]) -> Result<FiniteMarkovProcess> {
    check_components(weights, components)?;
    let n = components[0].len();
    let mut pi = vec![0.0; n];
    let mut flow = DMatrix::zeros(n, n);
    for (w, c) in weights.iter().zip(components) {
        for x in 0..n {
            pi[x] += w * c.stationary[x];
            for y in 0..n {
                if x != y {
                    flow[(x, y)] += w * c.stationary[x] * c.generator[(x, y)];
                }
            }
        }
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    for x in 0..n {
        for y in 0..n {
            flow[(x, y)] /= total * pi[x];
        }
    }
    let chain = FiniteMarkovProcess::from_rates(flow, pi)?;
    match components[0].nodes() {
        Some(nodes) => chain.with_nodes(nodes.to_vec()),
        None => Ok(chain),
    }
}

pub(crate) fn check_components(weights: &[f64], components: &[FiniteMarkovProcess]) -> Result<()> {
    if weights.is_empty() || weights.len() != components.len() {
        return Err(Error::LengthMismatch {
            what: "components",
            expected: weights.len(),
            got: components.len(),
        });
    }
    if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(invalid("weights", "must be positive and sum to 1"));
    }
    let n = components[0].len();
    if components.iter().any(|c| c.len() != n) {
        return Err(invalid("components", "chains live on different state spaces"));
    }
    Ok(())
}

/// Largest entry of `|D_π Q − Σ_j w_j D_{π_j} Q_j|` and `|π − Σ_j w_j π_j|`:
/// zero exactly when the decomposition holds for every pair `(f, g)`.
pub fn decomposition_residual(
    chain: &FiniteMarkovProcess,
    weights: &[f64],
    components: &[FiniteMarkovProcess],
) -> Result<f64> {
    check_components(weights, components)?;
    let n = chain.len();
    if components[0].len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: components[0].len(),
        });
    }
    let mut worst: f64 = 0.0;
    for x in 0..n {
        let mix_pi: f64 = weights.iter().zip(components).map(|(w, c)| w * c.stationary[x]).sum();
        worst = worst.max((mix_pi - chain.stationary[x]).abs());
        for y in 0..n {
            let mix: f64 = weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.stationary[x] * c.generator[(x, y)])
                .sum();
            worst = worst.max((mix - chain.stationary[x] * chain.generator[(x, y)]).abs());
        }
    }
    Ok(worst)
}

/// Tempering chain on `[L] × Ω` (state `(i, x)` has index `i·n + x`).
///
/// Within a level the level generator acts; `(i, x) → (i±1, x)` jumps at
/// rate `(λ/2) min{r_{i'}π_{i'}(x) / (r_i π_i(x)), 1}`.
pub fn build_tempering_chain(
    levels: &[FiniteMarkovProcess],
    rel_probs: &[f64],
    swap_rate: f64,
) -> Result<FiniteMarkovProcess> {
    if levels.is_empty() || levels.len() != rel_probs.len() {
        return Err(Error::LengthMismatch {
            what: "relative probabilities",
            expected: levels.len(),
            got: rel_probs.len(),
        });
    }
    if rel_probs.iter().any(|r| !(*r > 0.0)) || (rel_probs.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(invalid("rel_probs", "must be positive and sum to 1"));
    }
    if !(swap_rate >= 0.0) {
        return Err(invalid("swap_rate", "must be non-negative"));
    }
    let n = levels[0].len();
    for lvl in levels {
        if lvl.len() != n {
            return Err(invalid("levels", "levels do not share a state grid"));
        }
        if let (Some(a), Some(b)) = (lvl.nodes(), levels[0].nodes()) {
            if a != b {
                return Err(invalid("levels", "levels do not share a state grid"));
            }
        }
    }
    let l = levels.len();
    let mut rates = DMatrix::zeros(l * n, l * n);
    let mut pi = vec![0.0; l * n];
    for (i, lvl) in levels.iter().enumerate() {
        for x in 0..n {
            pi[i * n + x] = rel_probs[i] * lvl.stationary[x];
            for y in 0..n {
                if x != y {
                    rates[(i * n + x, i * n + y)] = lvl.generator[(x, y)];
                }
            }
        }
    }
    for i in 0..l {
        for j in [i.wrapping_sub(1), i + 1] {
            if j >= l {
                continue;
            }
            for x in 0..n {
                let a = rel_probs[i] * levels[i].stationary[x];
                let b = rel_probs[j] * levels[j].stationary[x];
                rates[(i * n + x, j * n + x)] = 0.5 * swap_rate * (b / a).min(1.0);
            }
        }
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    let chain = FiniteMarkovProcess::from_rates(rates, pi)?;
    match levels[0].nodes() {
        Some(nodes) => {
            let all: Vec<f64> = (0..l).flat_map(|_| nodes.iter().copied()).collect();
            chain.with_nodes(all)
        }
        None => Ok(chain),
    }
}

/// `Σ_i r_i 𝓔_i(g_i) + (λ/4) Σ_{i, j=i±1} Σ_x (g_i(x) − g_j(x))² min{r_iπ_i(x), r_jπ_j(x)}`
/// evaluated level by level, for comparison with the assembled chain.
pub fn tempering_dirichlet_direct(
    levels: &[FiniteMarkovProcess],
    rel_probs: &[f64],
    swap_rate: f64,
    g: &[f64],
) -> Result<f64> {
    let l = levels.len();
    let n = levels[0].len();
    if g.len() != l * n {
        return Err(Error::DimensionMismatch {
            expected: l * n,
            got: g.len(),
        });
    }
    let mut total = 0.0;
    for (i, lvl) in levels.iter().enumerate() {
        total += rel_probs[i] * lvl.dirichlet_form(&g[i * n..(i + 1) * n])?;
    }
    let mut cross = 0.0;
    for i in 0..l {
        for j in [i.wrapping_sub(1), i + 1] {
            if j >= l {
                continue;
            }
            for x in 0..n {
                let d = g[i * n + x] - g[j * n + x];
                let m = (rel_probs[i] * levels[i].stationary[x]).min(rel_probs[j] * levels[j].stationary[x]);
                cross += d * d * m;
            }
        }
    }
    Ok(total + 0.25 * swap_rate * cross)
}

/// Random reversible chain: symmetric conductances on a connected random
/// graph (a path plus extra edges with probability `density`) and a random
/// positive stationary vector; `Q(x,y) = c(x,y)/π_x`.
pub fn random_reversible_chain(n: usize, density: f64, rng: &mut RngStream) -> Result<FiniteMarkovProcess> {
    if n < 2 {
        return Err(invalid("n", "need at least two states"));
    }
    let mut pi: Vec<f64> = (0..n).map(|_| 0.1 + rng.uniform()).collect();
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    let mut rates = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in x + 1..n {
            if y == x + 1 || rng.uniform() < density {
                let c = (0.1 + rng.uniform()) / n as f64;
                rates[(x, y)] = c / pi[x];
                rates[(y, x)] = c / pi[y];
            }
        }
    }
    FiniteMarkovProcess::from_rates(rates, pi)
}
