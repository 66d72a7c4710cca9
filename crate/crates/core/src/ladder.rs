//! Temperature ladders and run schedules.
//!
//! Inverse temperatures grow geometrically from a small β₁ to exactly 1. The
//! asymptotic orders of the schedule are turned into concrete numbers by the
//! named multipliers in [`ScheduleConstants`]; these are echoed into every run
//! output so an experiment can be reproduced.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Multipliers standing in for the Θ(·)/O(·) constants of the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConstants {
    /// β₁ multiplier.
    pub c1: f64,
    /// Swap-rate multiplier.
    pub c2: f64,
    /// Total-time multiplier.
    pub c_t: f64,
    /// Step-size multiplier.
    pub c_eta: f64,
    /// Samples per partition-estimation stage: `n = c_n · L² · ln(1/δ)`.
    pub c_n: f64,
    /// Power of `1/w_min` in the total time. Defaults to 4.
    pub wmin_exponent: f64,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c_t: 10.0,
            c_eta: 0.1,
            c_n: 1.0,
            wmin_exponent: 4.0,
        }
    }
}

/// Which term of the step-size minimum was active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepBound {
    /// Term scaling as `1/((D/σ + √d)·T)` (Gaussian) or `1/((DK/√κ + √d)·T)`.
    Horizon,
    /// Term independent of `T` (`1/√D` for Gaussians).
    CenterScale,
    /// Term scaling as `ε/(d·T)`.
    Accuracy,
    /// Step size supplied by the caller.
    Override,
}

/// β₁ < … < β_L = 1 with relative probabilities and log-partition estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureLadder {
    betas: Vec<f64>,
    rel_probs: Vec<f64>,
    /// `ln Ẑ_i`; stored in log form because Ẑ spans many orders of magnitude
    /// in moderate dimension.
    log_partition_estimates: Vec<f64>,
    ratio_bound: f64,
}

impl TemperatureLadder {
    /// Ladder from explicit betas. Requires `0 < β₁ < … < β_L = 1` and every
    /// consecutive ratio ≤ `ratio_bound`; r uniform, Ẑ all 1.
    pub fn new(betas: Vec<f64>, ratio_bound: f64) -> Result<Self> {
        let ladder = Self::unchecked(betas, ratio_bound);
        ladder.validate()?;
        Ok(ladder)
    }

    fn unchecked(betas: Vec<f64>, ratio_bound: f64) -> Self {
        let l = betas.len();
        Self {
            rel_probs: vec![1.0 / l as f64; l],
            log_partition_estimates: vec![0.0; l],
            betas,
            ratio_bound,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_prefix()?;
        if *self.betas.last().expect("non-empty") != 1.0 {
            return Err(invalid("betas", "last inverse temperature must be exactly 1"));
        }
        Ok(())
    }

    fn validate_prefix(&self) -> Result<()> {
        let l = self.betas.len();
        if l == 0 {
            return Err(invalid("betas", "ladder must have at least one level"));
        }
        if self.rel_probs.len() != l || self.log_partition_estimates.len() != l {
            return Err(Error::LengthMismatch {
                what: "ladder fields",
                expected: l,
                got: self.rel_probs.len().min(self.log_partition_estimates.len()),
            });
        }
        if !(self.betas[0] > 0.0) {
            return Err(invalid("betas", "β₁ must be positive"));
        }
        for w in self.betas.windows(2) {
            if !(w[1] > w[0]) {
                return Err(invalid("betas", "must be strictly increasing"));
            }
            if w[1] / w[0] > self.ratio_bound * (1.0 + 1e-12) {
                return Err(invalid(
                    "betas",
                    format!("ratio {} exceeds bound {}", w[1] / w[0], self.ratio_bound),
                ));
            }
        }
        if self.betas.iter().any(|b| *b > 1.0) {
            return Err(invalid("betas", "inverse temperatures must lie in (0, 1]"));
        }
        if self.rel_probs.iter().any(|r| !(*r > 0.0)) {
            return Err(invalid("rel_probs", "must be positive"));
        }
        if (self.rel_probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(invalid("rel_probs", "must sum to 1"));
        }
        if self.log_partition_estimates.iter().any(|z| !z.is_finite()) {
            return Err(invalid("partition_estimates", "must be positive and finite"));
        }
        Ok(())
    }

    /// Geometric ladder from β₁ with the given ratio; the last step is shrunk
    /// so the ladder lands exactly on 1.
    pub fn geometric(beta1: f64, ratio: f64) -> Result<Self> {
        if !(beta1 > 0.0 && beta1 <= 1.0) {
            return Err(invalid("beta1", format!("must lie in (0, 1], got {beta1}")));
        }
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(invalid("ratio", format!("must exceed 1, got {ratio}")));
        }
        let mut betas = Vec::new();
        if beta1 < 1.0 {
            let l = ((1.0 / beta1).ln() / ratio.ln()).ceil() as usize + 1;
            betas.extend((0..l - 1).map(|i| beta1 * ratio.powi(i as i32)));
            while betas.last().is_some_and(|b| *b >= 1.0 - 1e-12) {
                betas.pop();
            }
        }
        betas.push(1.0);
        Self::new(betas, ratio)
    }

    pub fn levels(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta(&self, level: usize) -> f64 {
        self.betas[level]
    }

    pub fn rel_probs(&self) -> &[f64] {
        &self.rel_probs
    }

    pub fn ratio_bound(&self) -> f64 {
        self.ratio_bound
    }

    pub fn log_partition_estimates(&self) -> &[f64] {
        &self.log_partition_estimates
    }

    pub fn partition_estimates(&self) -> Vec<f64> {
        self.log_partition_estimates.iter().map(|z| z.exp()).collect()
    }

    pub fn set_log_partition_estimates(&mut self, log_z: Vec<f64>) -> Result<()> {
        if log_z.len() != self.levels() {
            return Err(Error::LengthMismatch {
                what: "partition estimates",
                expected: self.levels(),
                got: log_z.len(),
            });
        }
        if log_z.iter().any(|z| !z.is_finite()) {
            return Err(invalid("partition_estimates", "must be positive and finite"));
        }
        self.log_partition_estimates = log_z;
        Ok(())
    }

    /// The first `levels` rungs with r renormalized uniformly. The top of a
    /// prefix need not be 1; used for the staged partition estimation.
    pub fn prefix(&self, levels: usize) -> Result<Self> {
        if levels == 0 || levels > self.levels() {
            return Err(invalid(
                "levels",
                format!("prefix length {levels} outside 1..={}", self.levels()),
            ));
        }
        let out = Self {
            betas: self.betas[..levels].to_vec(),
            rel_probs: vec![1.0 / levels as f64; levels],
            log_partition_estimates: self.log_partition_estimates[..levels].to_vec(),
            ratio_bound: self.ratio_bound,
        };
        out.validate_prefix()?;
        Ok(out)
    }

    /// Consecutive ratios β_{i+1}/β_i.
    pub fn ratios(&self) -> Vec<f64> {
        self.betas.windows(2).map(|w| w[1] / w[0]).collect()
    }

    /// Rows of (level, β, r, Ẑ) with 1-based levels.
    pub fn table(&self) -> String {
        let mut out = String::from("level  beta            r               Z_hat\n");
        for i in 0..self.levels() {
            out.push_str(&format!(
                "{:<6} {:<15.9e} {:<15.9e} {:.9e}\n",
                i + 1,
                self.betas[i],
                self.rel_probs[i],
                self.log_partition_estimates[i].exp()
            ));
        }
        out
    }
}

/// Rate, step size, horizon and initialization for one tempering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    /// Poisson rate λ of level-swap events.
    pub swap_rate: f64,
    /// Langevin step size η.
    pub step_size: f64,
    /// Continuous time horizon T.
    pub total_time: f64,
    /// σ₀ of the initial draw `x₀ ~ N(0, σ₀² I)` at level 1.
    pub init_std: f64,
    /// Target accuracy ε.
    pub target_accuracy: f64,
    pub constants: ScheduleConstants,
    pub step_bound: StepBound,
}

impl RunParams {
    /// Caller-specified parameters (no schedule).
    pub fn custom(swap_rate: f64, step_size: f64, total_time: f64, init_std: f64) -> Self {
        Self {
            swap_rate,
            step_size,
            total_time,
            init_std,
            target_accuracy: 0.1,
            constants: ScheduleConstants::default(),
            step_bound: StepBound::Override,
        }
    }

    /// Checks `η ≤ T` and `λT ≥ 1` along with positivity.
    pub fn validate(&self) -> Result<()> {
        self.validate_basic()?;
        if self.swap_rate * self.total_time < 1.0 {
            return Err(invalid(
                "swap_rate",
                format!(
                    "λ·T = {} < 1: fewer than one expected swap",
                    self.swap_rate * self.total_time
                ),
            ));
        }
        Ok(())
    }

    pub(crate) fn validate_basic(&self) -> Result<()> {
        for (name, v) in [
            ("swap_rate", self.swap_rate),
            ("step_size", self.step_size),
            ("total_time", self.total_time),
            ("init_std", self.init_std),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if self.step_size > self.total_time {
            return Err(invalid(
                "step_size",
                format!("η = {} exceeds T = {}", self.step_size, self.total_time),
            ));
        }
        Ok(())
    }
}

fn check_common(d: usize, w_min: f64, eps: f64) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "dimension must be positive"));
    }
    if !(w_min > 0.0 && w_min <= 1.0) {
        return Err(invalid("w_min", format!("must lie in (0, 1], got {w_min}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", format!("must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

fn argmin3(terms: [f64; 3]) -> (f64, StepBound) {
    let labels = [StepBound::Horizon, StepBound::CenterScale, StepBound::Accuracy];
    let mut best = 0;
    for i in 1..3 {
        if terms[i] < terms[best] {
            best = i;
        }
    }
    (terms[best], labels[best])
}

/// Ladder and schedule for an isotropic Gaussian mixture with common σ.
///
/// `center_bound` is `D = max{max‖μ_i‖, σ}`; passing `D < σ` is an error.
pub fn build_ladder_gaussian(
    d: usize,
    center_bound: f64,
    sigma: f64,
    w_min: f64,
    eps: f64,
    constants: &ScheduleConstants,
) -> Result<(TemperatureLadder, RunParams)> {
    check_common(d, w_min, eps)?;
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    if !(center_bound >= sigma) {
        return Err(invalid(
            "D",
            format!("D = {center_bound} is below σ = {sigma}; set D = σ"),
        ));
    }
    let dd = center_bound;
    let df = d as f64;
    let beta1 = (constants.c1 * sigma * sigma / (dd * dd)).min(1.0);
    let ratio = 1.0 + 1.0 / (df + (1.0 / w_min).ln());
    let ladder = TemperatureLadder::geometric(beta1, ratio)?;
    let l = ladder.levels() as f64;

    let swap_rate = constants.c2 / (dd * dd);
    let total_time = constants.c_t * l * l * dd * dd * (l / (eps * w_min)).ln()
        / w_min.powf(constants.wmin_exponent);
    let (eta_core, step_bound) = argmin3([
        sigma.powi(4) / ((dd / sigma + df.sqrt()) * total_time),
        1.0 / dd.sqrt(),
        sigma * eps / (df * total_time),
    ]);
    let step_size = constants.c_eta * sigma.powi(3) * eps / (dd * dd) * eta_core;
    let params = RunParams {
        swap_rate,
        step_size,
        total_time,
        init_std: sigma / beta1.sqrt(),
        target_accuracy: eps,
        constants: *constants,
        step_bound,
    };
    params.validate()?;
    Ok((ladder, params))
}

/// Ladder and schedule for a κ-strongly convex, K-smooth base.
pub fn build_ladder_logconcave(
    d: usize,
    center_bound: f64,
    kappa: f64,
    smoothness: f64,
    w_min: f64,
    eps: f64,
    constants: &ScheduleConstants,
) -> Result<(TemperatureLadder, RunParams)> {
    check_common(d, w_min, eps)?;
    if !(kappa > 0.0 && kappa <= smoothness) {
        return Err(invalid(
            "kappa",
            format!("need 0 < κ ≤ K, got κ={kappa}, K={smoothness}"),
        ));
    }
    let df = d as f64;
    let floor = kappa.sqrt() / (df.sqrt() * smoothness);
    if !(center_bound >= floor) {
        return Err(invalid(
            "D",
            format!("D = {center_bound} is below the floor √κ/(√d·K) = {floor}"),
        ));
    }
    let dd = center_bound;
    let cond_log = (smoothness / kappa).ln() + 1.0;
    let beta1 = (constants.c1 * kappa / (df * smoothness * smoothness * dd * dd)).min(1.0);
    let ratio = 1.0 + kappa / (smoothness * df * cond_log);
    let ladder = TemperatureLadder::geometric(beta1, ratio)?;
    let l = ladder.levels() as f64;

    let swap_rate = constants.c2 / (dd * dd);
    let total_time = constants.c_t * l * l * dd * dd / w_min.powf(constants.wmin_exponent)
        * df
        * (l / (eps * w_min)).ln()
        * cond_log;
    let k = smoothness;
    let (step_size, step_bound) = argmin3([
        eps / (dd * dd * k.powf(3.5) * (dd * k / kappa.sqrt() + df.sqrt()) * total_time),
        eps / (dd.powf(2.5) * k.powf(1.5) * ((k / kappa).sqrt() + 1.0)),
        eps / (dd * dd * k * k * df * total_time),
    ]);
    let params = RunParams {
        swap_rate,
        step_size: constants.c_eta * step_size,
        total_time,
        init_std: 1.0 / (kappa * beta1).sqrt(),
        target_accuracy: eps,
        constants: *constants,
        step_bound,
    };
    params.validate()?;
    Ok((ladder, params))
}

/// Outcome of the per-level partition-ratio interval check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub within: Vec<bool>,
    /// The normalized ratio `(Ẑ_i/Z_i)/(Ẑ₁/Z₁)` farthest from 1 in log terms.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks `(Ẑ_i/Z_i)/(Ẑ₁/Z₁) ∈ [(1−1/L)^{i−1}, (1+1/L)^{i−1}]` for every
/// level, with `exact_log_z[i] = ln Z_i` from an oracle. Bounds are inclusive.
pub fn validate_partition_estimates(
    ladder: &TemperatureLadder,
    exact_log_z: &[f64],
) -> Result<PartitionCheck> {
    let l = ladder.levels();
    if exact_log_z.len() != l {
        return Err(Error::LengthMismatch {
            what: "exact partition functions",
            expected: l,
            got: exact_log_z.len(),
        });
    }
    let est = ladder.log_partition_estimates();
    let base = est[0] - exact_log_z[0];
    let lf = l as f64;
    let lo_step = if l > 1 { (1.0 - 1.0 / lf).ln() } else { 0.0 };
    let hi_step = (1.0 + 1.0 / lf).ln();
    let mut within = Vec::with_capacity(l);
    let mut worst: f64 = 0.0;
    for i in 0..l {
        let log_ratio = est[i] - exact_log_z[i] - base;
        let lo = i as f64 * lo_step;
        let hi = i as f64 * hi_step;
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        within.push(log_ratio >= lo - slack && log_ratio <= hi + slack);
        if log_ratio.abs() > worst.abs() {
            worst = log_ratio;
        }
    }
    let pass = within.iter().all(|b| *b);
    Ok(PartitionCheck {
        within,
        worst_ratio: worst.exp(),
        pass,
    })
}
