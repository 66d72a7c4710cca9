//! The tempering chain: Langevin steps per level, Poisson-timed level swaps,
//! a single tempering run, and staged estimation of partition ratios.
//!
//! Levels are zero-based in memory (`0..L`) and one-based in every serialized
//! output (CSV rows and JSON sidecars).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ladder::{RunParams, TemperatureLadder};
use crate::math::log_sum_exp;
use crate::oracle::DensityOracle;
use crate::rng::RngStream;

/// Position together with the current (zero-based) ladder level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperingState {
    pub level: usize,
    pub position: Vec<f64>,
}

fn gradient_at<O: DensityOracle + ?Sized>(oracle: &O, x: &[f64]) -> Result<Vec<f64>> {
    let g = oracle.grad(x)?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient {
            position: x.to_vec(),
        });
    }
    Ok(g)
}

/// `x − η β ∇f(x) + √(2η) ξ` for a caller-supplied `ξ`.
pub fn langevin_step_with_noise<O: DensityOracle + ?Sized>(
    oracle: &O,
    beta: f64,
    x: &[f64],
    eta: f64,
    noise: &[f64],
) -> Result<Vec<f64>> {
    if !(eta > 0.0) {
        return Err(invalid("eta", "step size must be positive"));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "inverse temperature must be positive"));
    }
    if noise.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: noise.len(),
        });
    }
    let g = gradient_at(oracle, x)?;
    let scale = (2.0 * eta).sqrt();
    Ok(x.iter()
        .zip(&g)
        .zip(noise)
        .map(|((xi, gi), ni)| xi - eta * beta * gi + scale * ni)
        .collect())
}

/// One unadjusted Langevin step at inverse temperature `beta`.
pub fn langevin_step<O: DensityOracle + ?Sized>(
    oracle: &O,
    beta: f64,
    x: &[f64],
    eta: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let mut noise = vec![0.0; x.len()];
    rng.fill_normal(&mut noise);
    langevin_step_with_noise(oracle, beta, x, eta, &noise)
}

fn langevin_in_place<O: DensityOracle + ?Sized>(
    oracle: &O,
    beta: f64,
    x: &mut [f64],
    eta: f64,
    noise: &mut [f64],
    rng: &mut RngStream,
) -> Result<()> {
    let g = gradient_at(oracle, x)?;
    rng.fill_normal(noise);
    let scale = (2.0 * eta).sqrt();
    for ((xi, gi), ni) in x.iter_mut().zip(&g).zip(noise.iter()) {
        *xi += -eta * beta * gi + scale * ni;
    }
    Ok(())
}

/// Event times of a rate-λ Poisson process on (0, T).
pub fn draw_swap_times(lambda: f64, horizon: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if !(lambda > 0.0) || !(horizon > 0.0) {
        return Err(invalid("lambda", "rate and horizon must be positive"));
    }
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.exponential(lambda);
        if t >= horizon {
            return Ok(out);
        }
        out.push(t);
    }
}

/// Split of an inter-event interval into equal Langevin sub-steps.
///
/// Returns `(steps, η')` with `steps = ⌈ξ/η⌉` and `η' = ξ/steps ≤ η`.
pub fn substeps(xi: f64, eta: f64) -> (u64, f64) {
    let steps = ((xi / eta).ceil() as u64).max(1);
    (steps, xi / steps as f64)
}

/// What a single swap event did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapOutcome {
    /// Proposed level fell outside the ladder.
    OutOfBounds,
    Rejected { proposed: usize },
    Accepted { proposed: usize },
}

/// Log acceptance ratio `ln[(e^{−β_j f}/Ẑ_j)/(e^{−β_i f}/Ẑ_i)]`.
pub fn swap_log_ratio(ladder: &TemperatureLadder, from: usize, to: usize, f_x: f64) -> f64 {
    let lz = ladder.log_partition_estimates();
    let b = ladder.betas();
    (b[from] - b[to]) * f_x + lz[from] - lz[to]
}

/// Level proposal and Metropolis decision given `f(x)`.
pub fn swap_decision(
    ladder: &TemperatureLadder,
    level: usize,
    f_x: f64,
    rng: &mut RngStream,
) -> SwapOutcome {
    let up = rng.uniform() < 0.5;
    let proposed = if up {
        level + 1
    } else if level == 0 {
        return SwapOutcome::OutOfBounds;
    } else {
        level - 1
    };
    if proposed >= ladder.levels() {
        return SwapOutcome::OutOfBounds;
    }
    let log_ratio = swap_log_ratio(ladder, level, proposed, f_x);
    if rng.uniform().ln() < log_ratio {
        SwapOutcome::Accepted { proposed }
    } else {
        SwapOutcome::Rejected { proposed }
    }
}

/// A level-swap event: propose `i ± 1`, accept in log space, keep position.
pub fn swap_attempt<O: DensityOracle + ?Sized>(
    state: &TemperingState,
    ladder: &TemperatureLadder,
    oracle: &O,
    rng: &mut RngStream,
) -> Result<(TemperingState, SwapOutcome)> {
    if state.level >= ladder.levels() {
        return Err(invalid("level", "outside ladder"));
    }
    let f_x = oracle.value(&state.position)?;
    let outcome = swap_decision(ladder, state.level, f_x, rng);
    let level = match outcome {
        SwapOutcome::Accepted { proposed } => proposed,
        _ => state.level,
    };
    Ok((
        TemperingState {
            level,
            position: state.position.clone(),
        },
        outcome,
    ))
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Step,
    Swap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedState {
    pub step: u64,
    pub time: f64,
    pub level: usize,
    pub kind: RecordKind,
    pub position: Vec<f64>,
}

/// Swap statistics for the neighbouring pair (i, i+1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairStats {
    pub up_attempts: u64,
    pub up_accepts: u64,
    pub down_attempts: u64,
    pub down_accepts: u64,
}

impl PairStats {
    pub fn attempts(&self) -> u64 {
        self.up_attempts + self.down_attempts
    }

    pub fn accepts(&self) -> u64 {
        self.up_accepts + self.down_accepts
    }
}

/// What to keep from a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordOptions {
    /// Record every `thin`-th Langevin step; 0 disables step records.
    pub thin: u64,
    /// Record the state after every swap event.
    pub swaps: bool,
    /// Keep only states at this zero-based level.
    pub level: Option<usize>,
    /// Stop recording (not running) after this many states.
    pub max_states: Option<usize>,
}

impl Default for RecordOptions {
    fn default() -> Self {
        Self {
            thin: 10,
            swaps: true,
            level: None,
            max_states: None,
        }
    }
}

impl RecordOptions {
    /// Record nothing but the summary counters.
    pub fn none() -> Self {
        Self {
            thin: 0,
            swaps: false,
            level: None,
            max_states: None,
        }
    }
}

/// Trajectory summary and counters from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    #[serde(skip)]
    pub states: Vec<RecordedState>,
    /// Recorded states per level.
    pub occupancy: Vec<u64>,
    /// Langevin steps taken at each level.
    pub steps_per_level: Vec<u64>,
    /// Entry `i` covers levels `(i, i+1)`.
    pub swaps: Vec<PairStats>,
    /// Swap events whose proposal fell outside the ladder.
    pub null_proposals: u64,
    pub swap_events: u64,
    pub langevin_steps: u64,
    pub grad_evals: u64,
    pub value_evals: u64,
    pub final_state: TemperingState,
    /// Whether the run ended on the top level.
    pub accepted: bool,
}

impl RunRecord {
    fn new(seed: u64, levels: usize, start: TemperingState) -> Self {
        Self {
            seed,
            states: Vec::new(),
            occupancy: vec![0; levels],
            steps_per_level: vec![0; levels],
            swaps: vec![PairStats::default(); levels.saturating_sub(1)],
            null_proposals: 0,
            swap_events: 0,
            langevin_steps: 0,
            grad_evals: 0,
            value_evals: 0,
            final_state: start,
            accepted: false,
        }
    }

    fn push(&mut self, opts: &RecordOptions, state: RecordedState) {
        if opts.level.is_some_and(|l| l != state.level) {
            return;
        }
        if opts.max_states.is_some_and(|m| self.states.len() >= m) {
            return;
        }
        self.occupancy[state.level] += 1;
        self.states.push(state);
    }

    fn note_swap(&mut self, from: usize, outcome: SwapOutcome) {
        self.swap_events += 1;
        let (to, accepted) = match outcome {
            SwapOutcome::OutOfBounds => {
                self.null_proposals += 1;
                return;
            }
            SwapOutcome::Accepted { proposed } => (proposed, true),
            SwapOutcome::Rejected { proposed } => (proposed, false),
        };
        if to > from {
            let p = &mut self.swaps[from];
            p.up_attempts += 1;
            p.up_accepts += accepted as u64;
        } else {
            let p = &mut self.swaps[to];
            p.down_attempts += 1;
            p.down_accepts += accepted as u64;
        }
    }

    /// Positions of the recorded states.
    pub fn positions(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(|s| s.position.clone()).collect()
    }

    /// First coordinate of every recorded state.
    pub fn first_coordinates(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.position[0]).collect()
    }

    /// CSV rows `step,time,level,x1..xd` with one-based levels.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.final_state.position.len();
        let mut header = String::from("step,time,level");
        for i in 1..=d {
            header.push_str(&format!(",x{i}"));
        }
        writeln!(w, "{header}")?;
        for s in &self.states {
            write!(w, "{},{},{}", s.step, s.time, s.level + 1)?;
            for v in &s.position {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Mixed-in states of several records, in order.
    pub fn merge_states(records: &[RunRecord]) -> Vec<RecordedState> {
        records.iter().flat_map(|r| r.states.iter().cloned()).collect()
    }
}

/// JSON sidecar written next to a run's CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSidecar {
    pub seed: u64,
    pub params: RunParams,
    pub betas: Vec<f64>,
    pub log_partition_estimates: Vec<f64>,
    pub record: RunRecord,
}

// ---------------------------------------------------------------------------
// Single tempering run
// ---------------------------------------------------------------------------

/// One run of the tempering chain up to time `T`.
///
/// Starts at level 0 with `x₀ ~ N(0, σ₀² I)`. Between swap events the chain
/// takes `⌈ξ/η⌉` Langevin steps of size `ξ/⌈ξ/η⌉`; a swap is attempted at
/// every event strictly before `T`. `record.accepted` is false when the run
/// ends below the top level; the caller decides whether to re-run.
pub fn run_stlmc<O: DensityOracle + ?Sized>(
    oracle: &O,
    ladder: &TemperatureLadder,
    params: &RunParams,
    rng: &mut RngStream,
    opts: &RecordOptions,
) -> Result<RunRecord> {
    params.validate_basic()?;
    let d = oracle.dim();
    let mut x = vec![0.0; d];
    rng.fill_normal(&mut x);
    for v in &mut x {
        *v *= params.init_std;
    }
    let start = TemperingState {
        level: 0,
        position: x.clone(),
    };
    run_from(oracle, ladder, params, rng, opts, start)
}

/// [`run_stlmc`] from a given state instead of the level-0 Gaussian draw.
pub fn run_from<O: DensityOracle + ?Sized>(
    oracle: &O,
    ladder: &TemperatureLadder,
    params: &RunParams,
    rng: &mut RngStream,
    opts: &RecordOptions,
    start: TemperingState,
) -> Result<RunRecord> {
    params.validate_basic()?;
    let levels = ladder.levels();
    if start.level >= levels {
        return Err(invalid("level", "start level outside ladder"));
    }
    if start.position.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            got: start.position.len(),
        });
    }
    let mut rec = RunRecord::new(rng.seed(), levels, start.clone());
    let mut level = start.level;
    let mut x = start.position;
    let mut noise = vec![0.0; x.len()];
    let mut t = 0.0;
    let mut step: u64 = 0;
    let horizon = params.total_time;

    while t < horizon {
        let mut xi = rng.exponential(params.swap_rate);
        let swap = t + xi < horizon;
        if !swap {
            xi = horizon - t;
        }
        let (n, eta) = substeps(xi, params.step_size);
        let beta = ladder.beta(level);
        for j in 0..n {
            langevin_in_place(oracle, beta, &mut x, eta, &mut noise, rng).map_err(|e| {
                Error::AtStep {
                    step,
                    source: Box::new(e),
                }
            })?;
            step += 1;
            rec.grad_evals += 1;
            rec.steps_per_level[level] += 1;
            if opts.thin > 0 && step.is_multiple_of(opts.thin) {
                rec.push(
                    opts,
                    RecordedState {
                        step,
                        time: t + (j + 1) as f64 * eta,
                        level,
                        kind: RecordKind::Step,
                        position: x.clone(),
                    },
                );
            }
        }
        t = if swap { t + xi } else { horizon };
        if swap {
            let f_x = oracle.value(&x).map_err(|e| Error::AtStep {
                step,
                source: Box::new(e),
            })?;
            rec.value_evals += 1;
            let outcome = swap_decision(ladder, level, f_x, rng);
            rec.note_swap(level, outcome);
            if let SwapOutcome::Accepted { proposed } = outcome {
                level = proposed;
            }
            if opts.swaps {
                rec.push(
                    opts,
                    RecordedState {
                        step,
                        time: t,
                        level,
                        kind: RecordKind::Swap,
                        position: x.clone(),
                    },
                );
            }
        }
    }
    rec.langevin_steps = step;
    rec.accepted = level + 1 == levels;
    rec.final_state = TemperingState { level, position: x };
    Ok(rec)
}

/// Plain Langevin at a fixed inverse temperature; every `thin`-th state is
/// recorded at level 0.
pub fn run_plain_langevin<O: DensityOracle + ?Sized>(
    oracle: &O,
    beta: f64,
    eta: f64,
    steps: u64,
    x0: &[f64],
    rng: &mut RngStream,
    thin: u64,
) -> Result<RunRecord> {
    if steps == 0 {
        return Err(invalid("steps", "at least one step is required"));
    }
    if !(eta > 0.0) || !(beta > 0.0) {
        return Err(invalid("eta", "step size and beta must be positive"));
    }
    if x0.len() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            got: x0.len(),
        });
    }
    let start = TemperingState {
        level: 0,
        position: x0.to_vec(),
    };
    let mut rec = RunRecord::new(rng.seed(), 1, start);
    let opts = RecordOptions {
        thin,
        swaps: false,
        level: None,
        max_states: None,
    };
    let mut x = x0.to_vec();
    let mut noise = vec![0.0; x.len()];
    for step in 1..=steps {
        langevin_in_place(oracle, beta, &mut x, eta, &mut noise, rng).map_err(|e| {
            Error::AtStep {
                step: step - 1,
                source: Box::new(e),
            }
        })?;
        if thin > 0 && step % thin == 0 {
            rec.push(
                &opts,
                RecordedState {
                    step,
                    time: step as f64 * eta,
                    level: 0,
                    kind: RecordKind::Step,
                    position: x.clone(),
                },
            );
        }
    }
    rec.langevin_steps = steps;
    rec.grad_evals = steps;
    rec.steps_per_level[0] = steps;
    rec.accepted = true;
    rec.final_state = TemperingState {
        level: 0,
        position: x,
    };
    Ok(rec)
}

// ---------------------------------------------------------------------------
// Partition estimation
// ---------------------------------------------------------------------------

/// `ln[(1/n) Σ_j exp((β_lo − β_hi) f(x_j))]`.
pub fn estimate_log_partition_ratio<O: DensityOracle + ?Sized>(
    samples: &[Vec<f64>],
    oracle: &O,
    beta_lo: f64,
    beta_hi: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if beta_hi < beta_lo {
        return Err(invalid("beta_hi", "must not be below beta_lo"));
    }
    let delta = beta_lo - beta_hi;
    let mut terms = Vec::with_capacity(samples.len());
    for x in samples {
        terms.push(delta * oracle.value(x)?);
    }
    Ok(log_sum_exp(&terms) - (samples.len() as f64).ln())
}

/// `(1/n) Σ_j exp((β_lo − β_hi) f(x_j))`, an estimate of `Z_hi / Z_lo`.
pub fn estimate_partition_ratio<O: DensityOracle + ?Sized>(
    samples: &[Vec<f64>],
    oracle: &O,
    beta_lo: f64,
    beta_hi: f64,
) -> Result<f64> {
    Ok(estimate_log_partition_ratio(samples, oracle, beta_lo, beta_hi)?.exp())
}

/// Settings for [`run_main`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MainConfig {
    /// Failure probability δ in `n = c_n L² ln(1/δ)`.
    pub delta: f64,
    /// Abort a stage whose rejection rate exceeds this.
    pub rejection_ceiling: f64,
    /// Runs before the ceiling is enforced.
    pub ceiling_min_runs: u64,
    /// Hard cap on runs per stage.
    pub retry_budget: u64,
    /// Accepted full-ladder runs to return.
    pub final_samples: usize,
    /// Override of the per-stage sample count.
    pub samples_per_stage: Option<usize>,
}

impl Default for MainConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            rejection_ceiling: 0.999,
            ceiling_min_runs: 1000,
            retry_budget: 10_000_000,
            final_samples: 1,
            samples_per_stage: None,
        }
    }
}

impl MainConfig {
    pub fn samples_per_stage(&self, levels: usize, c_n: f64) -> usize {
        if let Some(n) = self.samples_per_stage {
            return n.max(1);
        }
        let l = levels as f64;
        ((c_n * l * l * (1.0 / self.delta).ln()).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    /// One-based level whose samples fed this stage.
    pub level: usize,
    pub runs: u64,
    pub accepted: u64,
    pub rejection_rate: f64,
    /// `ln r̄` for the ratio `Ẑ_{ℓ+1}/Ẑ_ℓ`; absent for the final stage.
    pub log_ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MainOutput {
    /// The ladder with the estimated `ln Ẑ` filled in.
    pub ladder: TemperatureLadder,
    pub samples: Vec<Vec<f64>>,
    pub stages: Vec<StageStats>,
}

/// Collects `n` top-level final states of independent runs on `ladder`.
///
/// Runs are seeded by `(stage, index)` children of `rng` and evaluated in
/// parallel batches; the first `n` accepted runs by index are kept, so the
/// result does not depend on the thread count.
pub fn collect_accepted<O: DensityOracle + ?Sized>(
    oracle: &O,
    ladder: &TemperatureLadder,
    params: &RunParams,
    rng: &RngStream,
    stage: usize,
    n: usize,
    cfg: &MainConfig,
) -> Result<(Vec<Vec<f64>>, StageStats)> {
    let mut samples = Vec::with_capacity(n);
    let mut runs: u64 = 0;
    let opts = RecordOptions::none();
    let stage_key = (stage as u64) << 40;
    while samples.len() < n {
        let want = n - samples.len();
        let batch = (want * ladder.levels()).clamp(16, 4096) as u64;
        let batch = batch.min(cfg.retry_budget.saturating_sub(runs)).max(1);
        let results: Vec<Result<RunRecord>> = (runs..runs + batch)
            .into_par_iter()
            .map(|i| {
                let mut r = rng.child(stage_key | i);
                run_stlmc(oracle, ladder, params, &mut r, &opts)
            })
            .collect();
        for res in results {
            let rec = res?;
            runs += 1;
            if rec.accepted {
                samples.push(rec.final_state.position);
                if samples.len() == n {
                    break;
                }
            }
            let rate = 1.0 - samples.len() as f64 / runs as f64;
            if runs >= cfg.ceiling_min_runs && rate > cfg.rejection_ceiling {
                return Err(Error::RejectionCeiling {
                    stage: stage + 1,
                    rate,
                    ceiling: cfg.rejection_ceiling,
                    runs,
                });
            }
        }
        if samples.len() < n && runs >= cfg.retry_budget {
            return Err(Error::RetryBudget {
                stage: stage + 1,
                budget: cfg.retry_budget,
            });
        }
    }
    let accepted = samples.len() as u64;
    Ok((
        samples,
        StageStats {
            level: stage + 1,
            runs,
            accepted,
            rejection_rate: 1.0 - accepted as f64 / runs as f64,
            log_ratio: None,
        },
    ))
}

/// Staged estimation of `Ẑ` followed by sampling on the full ladder.
///
/// Stage ℓ runs the chain on the first ℓ levels with the `Ẑ` of earlier
/// stages frozen, keeps `n` runs that end on level ℓ and sets
/// `ln Ẑ_{ℓ+1} = ln Ẑ_ℓ + ln r̄`. Rejected runs are discarded entirely.
pub fn run_main<O: DensityOracle + ?Sized>(
    oracle: &O,
    ladder: &TemperatureLadder,
    params: &RunParams,
    cfg: &MainConfig,
    rng: &RngStream,
) -> Result<MainOutput> {
    ladder.validate()?;
    params.validate_basic()?;
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(invalid("delta", "must lie in (0, 1)"));
    }
    let levels = ladder.levels();
    let n = cfg.samples_per_stage(levels, params.constants.c_n);
    let mut log_z = vec![0.0; levels];
    let mut stages = Vec::with_capacity(levels);
    let mut current = ladder.clone();
    for stage in 0..levels - 1 {
        current.set_log_partition_estimates(log_z.clone())?;
        let sub = current.prefix(stage + 1)?;
        let (samples, mut stats) = collect_accepted(oracle, &sub, params, rng, stage, n, cfg)?;
        let lr = estimate_log_partition_ratio(
            &samples,
            oracle,
            ladder.beta(stage),
            ladder.beta(stage + 1),
        )?;
        log_z[stage + 1] = log_z[stage] + lr;
        stats.log_ratio = Some(lr);
        log::debug!("stage {}: {} runs, ln ratio {lr}", stage + 1, stats.runs);
        stages.push(stats);
    }
    current.set_log_partition_estimates(log_z)?;
    let (samples, stats) = collect_accepted(
        oracle,
        &current,
        params,
        rng,
        levels - 1,
        cfg.final_samples,
        cfg,
    )?;
    stages.push(stats);
    Ok(MainOutput {
        ladder: current,
        samples,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::MixtureTarget;

    struct Flat(usize);

    impl DensityOracle for Flat {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
        fn grad(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.0])
        }
    }

    struct Quadratic;

    impl DensityOracle for Quadratic {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> Result<f64> {
            Ok(0.5 * (x[0] * x[0] + x[1] * x[1]))
        }
        fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.to_vec())
        }
    }

    struct Broken;

    impl DensityOracle for Broken {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
        fn grad(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![f64::NAN])
        }
    }

    #[test]
    fn gradient_descent_without_noise() {
        let y = langevin_step_with_noise(&Quadratic, 1.0, &[1.0, 0.0], 0.1, &[0.0, 0.0]).unwrap();
        assert!((y[0] - 0.9).abs() < 1e-15);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn pure_diffusion_variance() {
        let mut rng = RngStream::new(1);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| langevin_step(&Flat(1), 1.0, &[0.0], 0.5, &mut rng).unwrap()[0])
            .collect();
        let v = crate::math::variance(&xs);
        assert!((v - 1.0).abs() < 0.03, "variance {v}");
    }

    #[test]
    fn non_finite_gradient_reports_position() {
        let mut rng = RngStream::new(1);
        match langevin_step(&Broken, 1.0, &[3.0], 0.1, &mut rng) {
            Err(Error::NonFiniteGradient { position }) => assert_eq!(position, vec![3.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn swap_times_truncate() {
        let mut rng = RngStream::new(2);
        let t = draw_swap_times(1.0, 1e-12, &mut rng).unwrap();
        assert!(t.is_empty());
        let t = draw_swap_times(2.0, 50.0, &mut rng).unwrap();
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.iter().all(|v| *v > 0.0 && *v < 50.0));
    }

    #[test]
    fn substeps_divide_interval() {
        for (xi, eta) in [(1.0, 0.3), (0.05, 0.1), (7.25, 0.25), (1e-9, 0.01)] {
            let (n, e) = substeps(xi, eta);
            assert!(e <= eta);
            assert!((n as f64 * e - xi).abs() <= 1e-12 * xi.max(1.0));
        }
    }

    #[test]
    fn identical_levels_always_accept() {
        let ladder = TemperatureLadder::new(vec![0.5, 1.0], 2.0).unwrap();
        assert_eq!(swap_log_ratio(&ladder, 0, 0, 123.0), 0.0);
        let mut rng = RngStream::new(3);
        for _ in 0..1000 {
            assert!(rng.uniform().ln() < 0.0);
        }
    }

    #[test]
    fn flat_target_ratio_is_partition_ratio() {
        let mut ladder = TemperatureLadder::new(vec![0.5, 1.0], 2.0).unwrap();
        ladder.set_log_partition_estimates(vec![0.0, 2f64.ln()]).unwrap();
        assert!((swap_log_ratio(&ladder, 0, 1, 0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!((swap_log_ratio(&ladder, 1, 0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn swap_keeps_position() {
        let target = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0]], 1.0).unwrap();
        let ladder = TemperatureLadder::new(vec![0.25, 0.5, 1.0], 2.0).unwrap();
        let mut rng = RngStream::new(4);
        let mut s = TemperingState {
            level: 1,
            position: vec![0.7],
        };
        for _ in 0..200 {
            let (next, _) = swap_attempt(&s, &ladder, &target, &mut rng).unwrap();
            assert_eq!(next.position, vec![0.7]);
            assert!(next.level < 3);
            s = next;
        }
    }

    #[test]
    fn estimator_trivial_cases() {
        let t = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0]], 1.0).unwrap();
        let xs = vec![vec![0.3], vec![-2.0]];
        assert_eq!(estimate_partition_ratio(&xs, &t, 0.5, 0.5).unwrap(), 1.0);
        assert_eq!(estimate_partition_ratio(&[vec![0.0]], &t, 0.1, 1.0).unwrap(), 1.0);
        assert!(matches!(
            estimate_partition_ratio(&[], &t, 0.1, 1.0),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn plain_langevin_rejects_zero_steps() {
        let mut rng = RngStream::new(5);
        assert!(run_plain_langevin(&Quadratic, 1.0, 0.1, 0, &[0.0, 0.0], &mut rng, 1).is_err());
    }

    #[test]
    fn record_counters_consistent() {
        let target = MixtureTarget::gaussian(vec![0.5, 0.5], vec![vec![-3.0], vec![3.0]], 1.0).unwrap();
        let ladder = TemperatureLadder::geometric(0.1, 2.0).unwrap();
        let params = RunParams::custom(1.0, 0.05, 50.0, 1.0 / 0.1f64.sqrt());
        let mut rng = RngStream::new(6);
        let rec = run_stlmc(&target, &ladder, &params, &mut rng, &RecordOptions::default()).unwrap();
        assert_eq!(rec.occupancy.iter().sum::<u64>() as usize, rec.states.len());
        assert_eq!(rec.steps_per_level.iter().sum::<u64>(), rec.langevin_steps);
        for p in &rec.swaps {
            assert!(p.up_accepts <= p.up_attempts && p.down_accepts <= p.down_attempts);
        }
        let attempts: u64 = rec.swaps.iter().map(|p| p.attempts()).sum();
        assert_eq!(attempts + rec.null_proposals, rec.swap_events);
        assert_eq!(rec.accepted, rec.final_state.level + 1 == ladder.levels());
    }
}
