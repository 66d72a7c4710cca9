//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use stlmc::divergences::chi2_gaussian;
use stlmc::experiment::{run_experiment, ExperimentConfig};
use stlmc::fixtures::fixture;
use stlmc::fixtures::FixtureTarget;
use stlmc::ladder::{build_ladder_gaussian, validate_partition_estimates, ScheduleConstants};
use stlmc::sampler::{run_main, MainConfig};
use stlmc::suites::{
    canonical_path_suite, change_of_measure_suite, chi2_gaussian_suite, kl_mixture_suite, overlap_chi_suite,
    random_simple_instance, random_tempering_instance, simple_decomposition_suite, temp_scaling_suite,
    tempering_decomposition_suite, SCALING_BETAS,
};
use stlmc::{DensityOracle, MixtureTarget, Result, RngStream};

const SEED: u64 = 20240601;

struct Line {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Line>;

fn line(pass: bool, detail: impl Into<String>) -> Line {
    Line {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn simple_decomposition() -> Result<Line> {
    let t = Instant::now();
    let reports = simple_decomposition_suite(SEED, 20)?;
    let elapsed = t.elapsed();
    let mut sizes_ok = true;
    for k in 0..20 {
        let inst = random_simple_instance(SEED, k)?;
        sizes_ok &= inst.chain.len() <= 64 && inst.components.len() <= 3;
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(line(
        passed == 20 && sizes_ok && within(elapsed, 60),
        format!("{passed}/20 instances, min bound/C* {min_slack:.4}, sizes ok {sizes_ok}, {elapsed:.2?} (limit 60s)"),
    ))
}

fn tempering_decomposition() -> Result<Line> {
    let t = Instant::now();
    let reports = tempering_decomposition_suite(SEED, 10)?;
    let elapsed = t.elapsed();
    let mut shape_ok = true;
    for k in 0..10 {
        let inst = random_tempering_instance(SEED, k)?;
        shape_ok &= inst.levels.len() == 3
            && inst.levels.iter().all(|l| l.chain.len() <= 64)
            && [0.5, 1.0, 2.0].contains(&inst.k);
    }
    let passed = reports.iter().filter(|r| r.pass).count();
    let min_slack = reports.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(line(
        passed == 10 && shape_ok && within(elapsed, 120),
        format!("{passed}/10 instances, min bound/C* {min_slack:.4}, shape ok {shape_ok}, {elapsed:.2?} (limit 120s)"),
    ))
}

fn canonical_paths() -> Result<Line> {
    let r = canonical_path_suite(SEED, 50, 100)?;
    Ok(line(
        r.pass && r.instances == 5000,
        format!("{} checks, worst relative margin {:.4}", r.instances, r.worst_margin),
    ))
}

fn chi2_closed_form() -> Result<Line> {
    let r = chi2_gaussian_suite(SEED, 50, 1e-5)?;
    let forced = chi2_gaussian(
        &DVector::from_element(1, 0.0),
        &DMatrix::identity(1, 1),
        &DVector::from_element(1, 1.0),
        &DMatrix::identity(1, 1),
    )?;
    let forced_err = (forced - (std::f64::consts::E - 1.0)).abs() / (std::f64::consts::E - 1.0);
    Ok(line(
        r.pass && r.instances >= 50 && forced_err < 1e-5,
        format!(
            "{} pairs, worst relative error {:.2e}, chi2(N(1,1)|N(0,1)) rel err {forced_err:.1e}",
            r.instances,
            r.values.get("worst_relative_error").copied().unwrap_or(f64::NAN)
        ),
    ))
}

fn temp_scaling() -> Result<Line> {
    let r = temp_scaling_suite(SEED, 10, &SCALING_BETAS, 1000)?;
    Ok(line(
        r.pass && r.instances >= 10_000,
        format!("{} probes over 10 mixtures x beta {:?}, worst log margin {:.2e}", r.instances, SCALING_BETAS, r.worst_margin),
    ))
}

fn partition_estimation() -> Result<Line> {
    let t = Instant::now();
    let target = MixtureTarget::gaussian(vec![1.0], vec![vec![5.0]], 1.0)?;
    let (ladder, mut params) = build_ladder_gaussian(1, 5.0, 1.0, 1.0, 0.1, &ScheduleConstants::default())?;
    params.swap_rate = 1.0;
    params.total_time = 30.0;
    params.step_size = 0.05;
    let cfg = MainConfig {
        delta: 0.05,
        ..MainConfig::default()
    };
    let exact: Vec<f64> = ladder
        .betas()
        .iter()
        .map(|b| 0.5 * (2.0 * std::f64::consts::PI / b).ln())
        .collect();
    let mut passes = 0;
    for s in 0..20u64 {
        let out = run_main(&target, &ladder, &params, &cfg, &RngStream::new(SEED + s))?;
        if validate_partition_estimates(&out.ladder, &exact)?.pass {
            passes += 1;
        }
    }
    let elapsed = t.elapsed();
    Ok(line(
        passes >= 18 && within(elapsed, 300),
        format!(
            "{passes}/20 seeds within the interval (need 18), L = {}, n = {}, {elapsed:.2?} (limit 300s)",
            ladder.levels(),
            cfg.samples_per_stage(ladder.levels(), params.constants.c_n)
        ),
    ))
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn headline() -> Result<Line> {
    let t = Instant::now();
    let cfg = ExperimentConfig::load(&config_dir().join("headline.json"))?;
    let dir = tempfile::tempdir()?;
    let outcome = run_experiment(&cfg, dir.path().to_path_buf())?;
    let elapsed = t.elapsed();
    let summary: Vec<String> = outcome
        .assertions
        .iter()
        .map(|a| format!("{} {:.4} ({})", a.name, a.observed, if a.pass { "ok" } else { "over" }))
        .collect();
    Ok(line(
        outcome.passed() && outcome.assertions.len() == 3 && within(elapsed, 600),
        format!("seed {}: {}, {elapsed:.2?} (limit 600s)", cfg.seed, summary.join(", ")),
    ))
}

fn adversarial() -> Result<Line> {
    let f = fixture("adversarial-two-variance")?;
    let FixtureTarget::Adversarial(a) = &f.target else {
        unreachable!("adversarial fixture");
    };
    let d = a.dim();
    let un = a.u_norm();
    let e1: Vec<f64> = a.u().iter().map(|v| v / un).collect();
    // complete e1 to an orthonormal basis
    let mut basis = vec![e1];
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 && basis.len() < d {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    let per_axis = 10;
    let ticks = |lo: f64, hi: f64| -> Vec<f64> {
        (0..per_axis)
            .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|k| if k == 0 { ticks(-0.5 * un, 3.6 * un) } else { ticks(-2.0 * un, 2.0 * un) })
        .collect();
    let ln2 = std::f64::consts::LN_2;
    let (mut worst, mut naive, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    let (mut outside, mut exact_ok, mut probes) = (0usize, true, 0usize);
    let mut idx = vec![0usize; d];
    loop {
        let mut x = vec![0.0; d];
        for (k, i) in idx.iter().enumerate() {
            for (xj, bj) in x.iter_mut().zip(&basis[k]) {
                *xj += axes[k][*i] * bj;
            }
        }
        let tilde = a.value(&x)?;
        let f = a.mixture_value(&x)?;
        naive = naive.max((tilde - f).abs());

        // f - f~ = g (f - f1) = g (ln 2 - ln(1 + e^{f1 - f2})), free of cancellation
        let sq = |v: &[f64], c: f64| v.iter().zip(a.u()).map(|(xi, ui)| (xi - c * ui).powi(2)).sum::<f64>();
        let f1_minus_f2 = sq(&x, 0.0) / 4.0 - sq(&x, 1.0) / 2.0 + 0.25 * d as f64 * ln2;
        let r = sq(&x, 2.0).sqrt();
        let s = (10.0 * (r / un - 1.5)).clamp(0.0, 1.0);
        let g = (s * (1.0 - s)).powi(2) + (1.0 - (1.0 - s).powi(2)).powi(2);
        let gap = g * (ln2 - f1_minus_f2.exp().ln_1p());
        worst = worst.max(gap.abs());
        let scale = f.abs().max(tilde.abs()).max(1.0);
        drift = drift.max(((f - tilde) - gap).abs() / (scale * f64::EPSILON));

        if r >= 1.6 * un {
            outside += 1;
            exact_ok &= tilde == a.wide_value(&x)?;
        }
        probes += 1;
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    Ok(line(
        probes == 10_000 && worst <= ln2 && drift <= 64.0 && exact_ok && outside > 0,
        format!(
            "{probes} probes, max |f - f~| {worst:.15} <= ln 2 {ln2:.15} (direct subtraction {naive:.15}, \
             agreement within {drift:.1} ulp), f~ == f1 on all {outside} probes outside 1.6|u|"
        ),
    ))
}

fn inequality_suites() -> Result<Line> {
    let reports = [
        change_of_measure_suite(SEED, 100, 1e-9)?,
        overlap_chi_suite(SEED, 100, 1e-6)?,
        kl_mixture_suite(SEED, 100, 1e-6)?,
    ];
    let pass = reports.iter().all(|r| r.pass && r.instances >= 100);
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{} margin {:.2e}", r.check, if r.pass { r.instances } else { 0 }, r.instances, r.worst_margin))
        .collect();
    Ok(line(pass, parts.join("; ")))
}

fn determinism() -> Result<Line> {
    let configs = [
        r#"{"schema_version": 1, "seed": 5, "mode": "sample", "fixture": {"builtin": "two-mode-asymmetric"},
            "run": {"swap_rate": 1.0, "step_size": 0.05, "total_time": 20.0},
            "sample": {"chains": 2, "records": 3000, "max_lag": 100}}"#,
        r#"{"schema_version": 1, "seed": 6, "mode": "baseline-compare", "fixture": {"builtin": "two-mode-symmetric"},
            "run": {"swap_rate": 1.0, "step_size": 0.05, "total_time": 20.0},
            "sample": {"records": 3000, "max_lag": 100, "restart": true}, "baseline": {"x0": [5.0]}}"#,
        r#"{"schema_version": 1, "seed": 7, "mode": "verify-decomposition"}"#,
        r#"{"schema_version": 1, "seed": 8, "mode": "verify-divergences"}"#,
    ];
    let mut files = 0;
    let mut identical = true;
    for text in configs {
        let cfg = ExperimentConfig::from_json(text)?;
        let dir = tempfile::tempdir()?;
        let a = run_experiment(&cfg, dir.path().to_path_buf())?.artifacts.hashes();
        let b = run_experiment(&cfg, dir.path().to_path_buf())?.artifacts.hashes();
        identical &= a == b && !a.is_empty();
        files += a.len();
    }
    Ok(line(identical, format!("4 modes run twice, {files} artifacts hash-identical: {identical}")))
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("simple-decomposition", simple_decomposition),
        ("tempering-decomposition", tempering_decomposition),
        ("canonical-paths", canonical_paths),
        ("chi2-gaussian", chi2_closed_form),
        ("temperature-scaling", temp_scaling),
        ("partition-estimation", partition_estimation),
        ("headline-multimodality", headline),
        ("adversarial-fixture", adversarial),
        ("inequality-checks", inequality_suites),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let l = run().unwrap_or_else(|e| line(false, format!("error: {e}")));
        if !l.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if l.pass { "PASS" } else { "FAIL" }, i + 1, l.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
