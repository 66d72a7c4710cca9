//! Batch experiment runner behind the `stlmc` binary.
//!
//! A run builds every artifact in memory, then writes them from one place
//! together with `manifest.json` (SHA-256 per file). Only the manifest's
//! `created_unix` field depends on the wall clock.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decomposition::DecompositionReport;
use crate::diagnostics::{
    histogram_tv, integrated_autocorr, mode_masses, swap_summary, Autocorrelation, HistogramConfig, SwapSummary,
};
use crate::divergences::CheckReport;
use crate::error::{Error, Result};
use crate::fixtures::{fixture, Fixture, FixtureTarget};
use crate::ladder::{RunParams, ScheduleConstants, StepBound, TemperatureLadder};
use crate::oracle::{DensityOracle, MixtureTarget};
use crate::rng::RngStream;
use crate::sampler::{
    run_from, run_main, run_plain_langevin, run_stlmc, MainConfig, RecordOptions, RunRecord, RunSidecar,
    StageStats,
};
use crate::suites::{
    canonical_path_suite, divergence_suite, simple_decomposition_suite, tempering_decomposition_suite, SuiteSizes,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Sample,
    VerifyDecomposition,
    VerifyDivergences,
    BaselineCompare,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("mode: unknown mode `{s}`")))
    }
}

/// `{"builtin": NAME}` or `{"path": FILE}`; relative paths resolve against
/// the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureRef {
    Builtin(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderOverrides {
    pub constants: ScheduleConstants,
    /// ε used by the schedule.
    pub target_accuracy: Option<f64>,
    /// Explicit β₁ < … < β_L = 1.
    pub betas: Option<Vec<f64>>,
    /// Known `ln Ẑ_i`; skips partition estimation.
    pub log_partition_estimates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOverrides {
    pub swap_rate: Option<f64>,
    pub step_size: Option<f64>,
    pub total_time: Option<f64>,
    pub init_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSettings {
    /// Independent long chains.
    pub chains: usize,
    /// Recorded top-level states per chain.
    pub records: usize,
    pub thin: u64,
    /// Cap on runs per chain.
    pub max_runs: u64,
    /// Start every run afresh at level 1 instead of continuing from the
    /// previous run's final state.
    pub restart: bool,
    pub partition: MainConfig,
    pub histogram_bins: usize,
    pub max_lag: usize,
}

impl Default for SampleSettings {
    fn default() -> Self {
        Self {
            chains: 1,
            records: 20_000,
            thin: 1,
            max_runs: 1_000_000,
            restart: false,
            partition: MainConfig::default(),
            histogram_bins: 40,
            max_lag: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    /// Start of the plain Langevin chain; the first center when absent.
    pub x0: Option<Vec<f64>>,
    /// Step size; the tempering step size when absent.
    pub step_size: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Assertions {
    /// Every mode mass of the tempering samples is at least this.
    pub min_mode_mass: Option<f64>,
    /// Histogram TV of the tempering samples is below this.
    pub max_tv: Option<f64>,
    /// The smallest mode mass of the plain Langevin chain is at most this.
    pub max_baseline_minority_mass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<FixtureRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub ladder: LadderOverrides,
    #[serde(default)]
    pub run: RunOverrides,
    #[serde(default)]
    pub sample: SampleSettings,
    #[serde(default)]
    pub baseline: BaselineSettings,
    #[serde(default)]
    pub suites: SuiteSizes,
    #[serde(default)]
    pub assertions: Assertions,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `path`, resolving a relative fixture path against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(FixtureRef::Path(p)) = &mut cfg.fixture {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        if matches!(self.mode, Mode::Sample | Mode::BaselineCompare) && self.fixture.is_none() {
            return Err(config_err(format!(
                "fixture: required for mode `{}`",
                serde_json::to_value(self.mode)?.as_str().unwrap_or_default()
            )));
        }
        if self.mode == Mode::BaselineCompare && self.sample.chains != 1 {
            return Err(config_err("sample.chains: baseline-compare uses exactly one chain"));
        }
        let s = &self.sample;
        if s.chains == 0 || s.records == 0 || s.thin == 0 || s.max_runs == 0 {
            return Err(config_err("sample: chains, records, thin and max_runs must be positive"));
        }
        for (name, v) in [
            ("run.swap_rate", self.run.swap_rate),
            ("run.step_size", self.run.step_size),
            ("run.total_time", self.run.total_time),
            ("run.init_std", self.run.init_std),
            ("ladder.target_accuracy", self.ladder.target_accuracy),
            ("baseline.step_size", self.baseline.step_size),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(config_err(format!("{name}: must be positive and finite, got {v}")));
                }
            }
        }
        Ok(())
    }

    fn resolve_fixture(&self) -> Result<Fixture> {
        match self.fixture.as_ref() {
            Some(FixtureRef::Builtin(name)) => {
                fixture(name).map_err(|_| config_err(format!("fixture.builtin: unknown fixture `{name}`")))
            }
            Some(FixtureRef::Path(p)) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| config_err(format!("fixture.path: cannot read {}: {e}", p.display())))?;
                let target = MixtureTarget::from_json(&text).map_err(|e| config_err(format!("fixture.path: {e}")))?;
                Ok(Fixture {
                    name: "file",
                    description: "fixture loaded from file",
                    target: FixtureTarget::Mixture(target),
                })
            }
            None => Err(config_err("fixture: missing")),
        }
    }

    fn ladder_and_params(&self, fx: &Fixture) -> Result<(TemperatureLadder, RunParams)> {
        let eps = self.ladder.target_accuracy.unwrap_or(0.1);
        let (mut ladder, mut params) = fx.ladder(eps, &self.ladder.constants)?;
        if let Some(betas) = &self.ladder.betas {
            let ratio = betas.windows(2).map(|w| w[1] / w[0]).fold(1.0, f64::max);
            ladder = TemperatureLadder::new(betas.clone(), ratio).map_err(|e| config_err(format!("ladder.betas: {e}")))?;
        }
        if let Some(lz) = &self.ladder.log_partition_estimates {
            ladder
                .set_log_partition_estimates(lz.clone())
                .map_err(|e| config_err(format!("ladder.log_partition_estimates: {e}")))?;
        }
        let r = &self.run;
        if let Some(v) = r.swap_rate {
            params.swap_rate = v;
        }
        if let Some(v) = r.step_size {
            params.step_size = v;
            params.step_bound = StepBound::Override;
        }
        if let Some(v) = r.total_time {
            params.total_time = v;
        }
        if let Some(v) = r.init_std {
            params.init_std = v;
        }
        params.validate().map_err(|e| config_err(format!("run: {e}")))?;
        Ok((ladder, params))
    }
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

/// In-memory artifact set keyed by relative file name.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn insert(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.insert(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.files.keys()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(|v| v.as_slice())
    }

    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.files
            .iter()
            .map(|(k, v)| (k.clone(), hex::encode(Sha256::digest(v))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub mode: Mode,
    pub seed: u64,
    /// Wall-clock creation time; not covered by any hash.
    pub created_unix: u64,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?)
    }

    /// Every listed file exists and matches its hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for (name, hash) in &self.files {
            let bytes = std::fs::read(dir.join(name))?;
            let got = hex::encode(Sha256::digest(&bytes));
            if &got != hash {
                return Err(Error::Config(format!("manifest: hash mismatch for {name}")));
            }
        }
        Ok(())
    }
}

/// One enabled assertion and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub artifacts: Artifacts,
    pub assertions: Vec<AssertionResult>,
    /// Report file to point at when an assertion fails.
    pub report: String,
    /// Ladder table for sampling modes.
    pub ladder_table: Option<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainMetrics {
    pub records: usize,
    pub runs: u64,
    pub grad_evals: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_masses: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub autocorrelation: Option<Autocorrelation>,
    pub swaps: SwapSummary,
}

/// Extends `acc` by `rec`, shifting step counts and times so the merged
/// record reads as one continuous chain.
fn append_record(acc: &mut RunRecord, rec: RunRecord, time_offset: f64) {
    let step_offset = acc.langevin_steps;
    acc.states.extend(rec.states.into_iter().map(|mut s| {
        s.step += step_offset;
        s.time += time_offset;
        s
    }));
    for (a, b) in acc.occupancy.iter_mut().zip(&rec.occupancy) {
        *a += b;
    }
    for (a, b) in acc.steps_per_level.iter_mut().zip(&rec.steps_per_level) {
        *a += b;
    }
    for (a, b) in acc.swaps.iter_mut().zip(&rec.swaps) {
        a.up_attempts += b.up_attempts;
        a.up_accepts += b.up_accepts;
        a.down_attempts += b.down_attempts;
        a.down_accepts += b.down_accepts;
    }
    acc.null_proposals += rec.null_proposals;
    acc.swap_events += rec.swap_events;
    acc.langevin_steps += rec.langevin_steps;
    acc.grad_evals += rec.grad_evals;
    acc.value_evals += rec.value_evals;
    acc.final_state = rec.final_state;
    acc.accepted = rec.accepted;
}

/// Chains tempering runs until `records` top-level states are collected.
/// Each run starts where the last ended, or afresh at level 1 with
/// `restart`. Returns the merged record and the number of runs.
pub fn collect_top_level<O: DensityOracle + ?Sized>(
    oracle: &O,
    ladder: &TemperatureLadder,
    params: &RunParams,
    rng: &mut RngStream,
    records: usize,
    thin: u64,
    max_runs: u64,
    restart: bool,
) -> Result<(RunRecord, u64)> {
    let opts = |have: usize| RecordOptions {
        thin,
        swaps: false,
        level: Some(ladder.levels() - 1),
        max_states: Some(records - have),
    };
    let mut acc = run_stlmc(oracle, ladder, params, rng, &opts(0))?;
    let mut runs = 1;
    while acc.states.len() < records {
        if runs >= max_runs {
            return Err(invalid_runtime(format!(
                "collected {} of {records} top-level states in {max_runs} runs",
                acc.states.len()
            )));
        }
        let rec = if restart {
            run_stlmc(oracle, ladder, params, rng, &opts(acc.states.len()))?
        } else {
            let start = acc.final_state.clone();
            run_from(oracle, ladder, params, rng, &opts(acc.states.len()), start)?
        };
        append_record(&mut acc, rec, runs as f64 * params.total_time);
        runs += 1;
    }
    Ok((acc, runs))
}

fn invalid_runtime(msg: String) -> Error {
    Error::InvalidParameter {
        name: "sample.max_runs",
        reason: msg,
    }
}

fn chain_metrics(
    record: &RunRecord,
    runs: u64,
    mixture: Option<&MixtureTarget>,
    settings: &SampleSettings,
    artifacts: &mut Artifacts,
    prefix: &str,
) -> Result<ChainMetrics> {
    let positions = record.positions();
    let (mut masses, mut tv) = (None, None);
    if let Some(m) = mixture {
        masses = Some(mode_masses(&positions, m)?);
        if m.dim() <= 2 {
            let cfg = HistogramConfig {
                bins: settings.histogram_bins,
                ..HistogramConfig::default()
            };
            let h = histogram_tv(&positions, m, &cfg)?;
            let mut csv = Vec::new();
            h.write_csv(&mut csv)?;
            artifacts.insert(format!("{prefix}-histogram.csv"), csv);
            tv = Some(h.tv);
        }
    }
    let series = record.first_coordinates();
    let autocorrelation = integrated_autocorr(&series, settings.max_lag).ok();
    Ok(ChainMetrics {
        records: positions.len(),
        runs,
        grad_evals: record.grad_evals,
        mode_masses: masses,
        tv,
        autocorrelation,
        swaps: swap_summary(record),
    })
}

#[derive(Debug, Clone, Serialize)]
struct SampleMetrics {
    fixture: String,
    levels: usize,
    partition_stages: Vec<StageStats>,
    chains: Vec<ChainMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<ChainMetrics>,
}

fn check(results: &mut Vec<AssertionResult>, name: &str, observed: f64, threshold: f64, pass: bool) {
    results.push(AssertionResult {
        name: name.to_string(),
        observed,
        threshold,
        pass,
    });
}

fn run_sampling(cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Outcome> {
    let fx = cfg.resolve_fixture()?;
    let oracle = fx.oracle();
    let (mut ladder, params) = cfg.ladder_and_params(&fx)?;
    let root = RngStream::new(cfg.seed);
    let mut artifacts = Artifacts::default();

    let mut stages = Vec::new();
    if cfg.ladder.log_partition_estimates.is_none() && ladder.levels() > 1 {
        let main = run_main(oracle.as_ref(), &ladder, &params, &cfg.sample.partition, &root)?;
        ladder = main.ladder;
        stages = main.stages;
    }
    artifacts.json(
        "ladder.json",
        &serde_json::json!({ "ladder": &ladder, "params": &params }),
    )?;
    artifacts.insert("ladder.txt", ladder.table().into_bytes());

    let s = &cfg.sample;
    let chains: Vec<(RunRecord, u64)> = {
        use rayon::prelude::*;
        (0..s.chains)
            .into_par_iter()
            .map(|c| {
                let mut rng = root.child((1 << 48) | c as u64);
                collect_top_level(
                    oracle.as_ref(),
                    &ladder,
                    &params,
                    &mut rng,
                    s.records,
                    s.thin,
                    s.max_runs,
                    s.restart,
                )
            })
            .collect::<Result<_>>()?
    };

    let mixture = fx.mixture();
    let mut metrics = SampleMetrics {
        fixture: fx.name.to_string(),
        levels: ladder.levels(),
        partition_stages: stages,
        chains: Vec::new(),
        baseline: None,
    };
    let mut results = Vec::new();
    for (c, (record, runs)) in chains.iter().enumerate() {
        let prefix = format!("chain-{c}");
        let mut csv = Vec::new();
        record.write_csv(&mut csv)?;
        artifacts.insert(format!("{prefix}.csv"), csv);
        let sidecar = RunSidecar {
            seed: cfg.seed,
            params: params.clone(),
            betas: ladder.betas().to_vec(),
            log_partition_estimates: ladder.log_partition_estimates().to_vec(),
            record: record.clone(),
        };
        artifacts.json(&format!("{prefix}.json"), &sidecar)?;
        let m = chain_metrics(record, *runs, mixture, s, &mut artifacts, &prefix)?;
        if let (Some(t), Some(masses)) = (cfg.assertions.min_mode_mass, &m.mode_masses) {
            let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
            check(&mut results, &format!("{prefix}.min_mode_mass"), lo, t, lo >= t);
        }
        if let (Some(t), Some(tv)) = (cfg.assertions.max_tv, m.tv) {
            check(&mut results, &format!("{prefix}.tv"), tv, t, tv < t);
        }
        metrics.chains.push(m);
    }

    if cfg.mode == Mode::BaselineCompare {
        let (record, _) = &chains[0];
        let x0 = match (&cfg.baseline.x0, mixture) {
            (Some(x), _) => x.clone(),
            (None, Some(m)) => m.centers()[0].clone(),
            (None, None) => vec![0.0; oracle.dim()],
        };
        let eta = cfg.baseline.step_size.unwrap_or(params.step_size);
        let steps = record.grad_evals.max(1);
        let mut rng = root.child(2 << 48);
        let thin = (steps / s.records as u64).max(1);
        let base = run_plain_langevin(oracle.as_ref(), 1.0, eta, steps, &x0, &mut rng, thin)?;
        let mut csv = Vec::new();
        base.write_csv(&mut csv)?;
        artifacts.insert("baseline.csv", csv);
        let m = chain_metrics(&base, 1, mixture, s, &mut artifacts, "baseline")?;
        if let (Some(t), Some(masses)) = (cfg.assertions.max_baseline_minority_mass, &m.mode_masses) {
            let lo = masses.iter().copied().fold(f64::INFINITY, f64::min);
            check(&mut results, "baseline.minority_mass", lo, t, lo <= t);
        }
        metrics.baseline = Some(m);
    }

    artifacts.json("metrics.json", &metrics)?;
    artifacts.json("assertions.json", &results)?;
    Ok(Outcome {
        out_dir,
        artifacts,
        assertions: results,
        report: "assertions.json".into(),
        ladder_table: Some(ladder.table()),
    })
}

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

fn decomposition_csv(reports: &[DecompositionReport]) -> Vec<u8> {
    let mut out = String::from("theorem,instance_hash,C,C_bar,C_star,bound,slack,pass\n");
    let rows = reports
        .iter()
        .flat_map(|r| std::iter::once(r).chain(r.overlap_variant.as_deref()));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.theorem, r.instance_hash, r.c, r.c_bar, r.c_star, r.bound, r.slack, r.pass
        ));
    }
    out.into_bytes()
}

fn run_decomposition(cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Outcome> {
    let sizes = &cfg.suites;
    let simple = simple_decomposition_suite(cfg.seed, sizes.simple)?;
    let tempering = tempering_decomposition_suite(cfg.seed, sizes.tempering)?;
    let paths = canonical_path_suite(cfg.seed, sizes.path_chains, sizes.path_functions)?;
    let mut artifacts = Artifacts::default();
    artifacts.json("decomposition-simple.json", &simple)?;
    artifacts.json("decomposition-tempering.json", &tempering)?;
    artifacts.json("canonical-paths.json", &paths)?;
    let mut all = simple.clone();
    all.extend(tempering.iter().cloned());
    artifacts.insert("decomposition.csv", decomposition_csv(&all));

    let mut results = Vec::new();
    for r in &all {
        let name = format!("{}:{}", r.theorem, r.instance_hash);
        check(&mut results, &name, r.slack, 1.0, r.all_pass());
    }
    check(&mut results, "canonical-paths", paths.worst_margin, 0.0, paths.pass);
    artifacts.json("assertions.json", &results)?;
    Ok(Outcome {
        out_dir,
        artifacts,
        assertions: results,
        report: "assertions.json".into(),
        ladder_table: None,
    })
}

fn run_divergences(cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Outcome> {
    let reports: Vec<CheckReport> = divergence_suite(cfg.seed, &cfg.suites)?;
    let mut artifacts = Artifacts::default();
    artifacts.json("divergences.json", &reports)?;
    let mut results = Vec::new();
    for r in &reports {
        check(&mut results, &r.check, r.worst_margin, 0.0, r.pass);
    }
    artifacts.json("assertions.json", &results)?;
    Ok(Outcome {
        out_dir,
        artifacts,
        assertions: results,
        report: "divergences.json".into(),
        ladder_table: None,
    })
}

/// Runs `cfg` and returns the artifact set without touching the disk.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Outcome> {
    cfg.validate()?;
    let mut outcome = match cfg.mode {
        Mode::Sample | Mode::BaselineCompare => run_sampling(cfg, out_dir)?,
        Mode::VerifyDecomposition => run_decomposition(cfg, out_dir)?,
        Mode::VerifyDivergences => run_divergences(cfg, out_dir)?,
    };
    outcome.artifacts.json("config.json", cfg)?;
    Ok(outcome)
}

/// Writes every artifact and the manifest under `outcome.out_dir`.
pub fn write_outcome(cfg: &ExperimentConfig, outcome: &Outcome) -> Result<Manifest> {
    std::fs::create_dir_all(&outcome.out_dir)?;
    for name in outcome.artifacts.names() {
        std::fs::write(outcome.out_dir.join(name), outcome.artifacts.get(name).unwrap_or_default())?;
    }
    let created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        mode: cfg.mode,
        seed: cfg.seed,
        created_unix,
        files: outcome.artifacts.hashes(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(outcome.out_dir.join("manifest.json"), bytes)?;
    Ok(manifest)
}
