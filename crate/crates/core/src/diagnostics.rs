//! Post-hoc statistics over recorded samples: histogram TV against an exact
//! target, mode coverage, swap summaries and integrated autocorrelation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{gauss_legendre, log_sum_exp, mean};
use crate::oracle::{BaseFunction, MixtureTarget};
use crate::sampler::RunRecord;

/// Equal-width bins over `[min center − margin·σ, max center + margin·σ]`
/// on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub bins: usize,
    pub margin: f64,
    /// Gauss–Legendre nodes per bin and axis for the exact masses.
    pub order: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bins: 40,
            margin: 6.0,
            order: 16,
        }
    }
}

/// Counts and masses per bin plus an "outside" bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEstimate {
    pub dim: usize,
    /// Bin edges per axis.
    pub edges: Vec<Vec<f64>>,
    /// Row-major counts (axis 0 slowest).
    pub counts: Vec<u64>,
    pub outside: u64,
    /// Empirical masses, `counts / n`.
    pub masses: Vec<f64>,
    pub outside_mass: f64,
    /// Exact target masses per bin.
    pub exact: Vec<f64>,
    pub exact_outside: f64,
    pub tv: f64,
}

impl HistogramEstimate {
    /// CSV with bin centers, empirical and exact masses.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let centers: Vec<Vec<f64>> = self
            .edges
            .iter()
            .map(|e| e.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect())
            .collect();
        if self.dim == 1 {
            writeln!(w, "center,empirical,exact")?;
            for (i, c) in centers[0].iter().enumerate() {
                writeln!(w, "{c},{},{}", self.masses[i], self.exact[i])?;
            }
        } else {
            writeln!(w, "center1,center2,empirical,exact")?;
            let nb = centers[1].len();
            for (i, c0) in centers[0].iter().enumerate() {
                for (j, c1) in centers[1].iter().enumerate() {
                    let k = i * nb + j;
                    writeln!(w, "{c0},{c1},{},{}", self.masses[k], self.exact[k])?;
                }
            }
        }
        Ok(())
    }
}

fn base_scale(target: &MixtureTarget) -> f64 {
    match target.base() {
        BaseFunction::IsotropicGaussian { sigma } => *sigma,
        other => 1.0 / other.strong_convexity().sqrt(),
    }
}

fn bin_index(x: f64, lo: f64, width: f64, bins: usize) -> Option<usize> {
    let t = (x - lo) / width;
    if !(t >= 0.0) || t >= bins as f64 {
        return None;
    }
    Some((t as usize).min(bins - 1))
}

/// Histogram TV `½ Σ |empirical − exact|` (outside bucket included) for
/// targets in one or two dimensions.
pub fn histogram_tv(
    samples: &[Vec<f64>],
    target: &MixtureTarget,
    cfg: &HistogramConfig,
) -> Result<HistogramEstimate> {
    let d = target.dim();
    if d > 2 {
        return Err(Error::Unsupported(format!(
            "histogram TV is limited to d ≤ 2, got d = {d}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if cfg.bins < 20 {
        return Err(invalid("bins", "at least 20 bins per axis"));
    }
    if let Some(x) = samples.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let sigma = base_scale(target);
    let bins = cfg.bins;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for c in target.centers() {
        for a in 0..d {
            lo[a] = lo[a].min(c[a] - cfg.margin * sigma);
            hi[a] = hi[a].max(c[a] + cfg.margin * sigma);
        }
    }
    let width: Vec<f64> = (0..d).map(|a| (hi[a] - lo[a]) / bins as f64).collect();
    let edges: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..=bins).map(|k| lo[a] + k as f64 * width[a]).collect())
        .collect();
    let total_bins = bins.pow(d as u32);

    let mut counts = vec![0u64; total_bins];
    let mut outside = 0u64;
    for x in samples {
        let mut idx = 0;
        let mut inside = true;
        for a in 0..d {
            match bin_index(x[a], lo[a], width[a], bins) {
                Some(k) => idx = idx * bins + k,
                None => {
                    inside = false;
                    break;
                }
            }
        }
        if inside {
            counts[idx] += 1;
        } else {
            outside += 1;
        }
    }

    let (gx, gw) = gauss_legendre(cfg.order.max(1));
    // Per-axis quadrature nodes and log-weights for every bin.
    let axis_nodes = |a: usize, k: usize| -> Vec<(f64, f64)> {
        let half = 0.5 * width[a];
        let mid = lo[a] + (k as f64 + 0.5) * width[a];
        gx.iter()
            .zip(&gw)
            .map(|(x, w)| (mid + half * x, (half * w).ln()))
            .collect()
    };
    let mut exact = vec![0.0; total_bins];
    let mut terms = Vec::new();
    for (b, slot) in exact.iter_mut().enumerate() {
        terms.clear();
        if d == 1 {
            for (x, lw) in axis_nodes(0, b) {
                terms.push(lw + target.normalized_log_density(&[x])?);
            }
        } else {
            let inner = axis_nodes(1, b % bins);
            for (x0, lw0) in axis_nodes(0, b / bins) {
                for (x1, lw1) in &inner {
                    terms.push(lw0 + lw1 + target.normalized_log_density(&[x0, *x1])?);
                }
            }
        }
        *slot = log_sum_exp(&terms).exp();
    }
    let exact_inside: f64 = exact.iter().sum();
    let exact_outside = (1.0 - exact_inside).max(0.0);
    let n = samples.len() as f64;
    let masses: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
    let outside_mass = outside as f64 / n;
    let tv = 0.5
        * (masses.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>()
            + (outside_mass - exact_outside).abs());
    Ok(HistogramEstimate {
        dim: d,
        edges,
        counts,
        outside,
        masses,
        outside_mass,
        exact,
        exact_outside,
        tv: tv.clamp(0.0, 1.0),
    })
}

/// `½ ‖empirical − target‖₁` on the histogram of [`histogram_tv`].
pub fn empirical_tv(samples: &[Vec<f64>], target: &MixtureTarget, cfg: &HistogramConfig) -> Result<f64> {
    Ok(histogram_tv(samples, target, cfg)?.tv)
}

/// Fraction of samples nearest to each center.
pub fn mode_masses(samples: &[Vec<f64>], target: &MixtureTarget) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts = vec![0u64; target.components()];
    for x in samples {
        counts[target.nearest_center(x)] += 1;
    }
    let n = samples.len() as f64;
    Ok(counts.iter().map(|c| *c as f64 / n).collect())
}

/// Integrated autocorrelation time with its effective sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub tau: f64,
    pub ess: f64,
    /// Lags summed before the pair sums turned non-positive.
    pub lags: usize,
    /// Zero-variance series; τ is set to 1.
    pub degenerate: bool,
}

/// `τ = 1 + 2 Σ_k ρ_k`, truncated where the pair sums `ρ_{2k} + ρ_{2k+1}`
/// first become non-positive (or at `max_lag`). Reported `τ` is at least 1.
pub fn integrated_autocorr(series: &[f64], max_lag: usize) -> Result<Autocorrelation> {
    let n = series.len();
    let needed = 10 * max_lag.max(1);
    if n < needed {
        return Err(Error::SeriesTooShort {
            len: n,
            max_lag,
            needed,
        });
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(c0 > 0.0) {
        return Ok(Autocorrelation {
            tau: 1.0,
            ess: n as f64,
            lags: 0,
            degenerate: true,
        });
    }
    let rho = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
            / c0
    };
    let mut tau = -1.0;
    let mut lags = 0;
    let mut k = 0;
    while 2 * k < max_lag {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lags = 2 * k + 1;
        k += 1;
    }
    let tau = tau.max(1.0);
    Ok(Autocorrelation {
        tau,
        ess: n as f64 / tau,
        lags,
        degenerate: false,
    })
}

/// Per-run summary for the metrics JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapSummary {
    /// Fraction of recorded states at each level.
    pub occupancy: Vec<f64>,
    /// Fraction of Langevin steps at each level.
    pub time_fraction: Vec<f64>,
    /// Acceptance rate per neighbouring pair (NaN-free: 0 when unattempted).
    pub acceptance: Vec<f64>,
    pub null_fraction: f64,
}

pub fn swap_summary(record: &RunRecord) -> SwapSummary {
    let rec_total: u64 = record.occupancy.iter().sum();
    let step_total: u64 = record.steps_per_level.iter().sum();
    let frac = |v: u64, t: u64| if t == 0 { 0.0 } else { v as f64 / t as f64 };
    SwapSummary {
        occupancy: record.occupancy.iter().map(|c| frac(*c, rec_total)).collect(),
        time_fraction: record.steps_per_level.iter().map(|c| frac(*c, step_total)).collect(),
        acceptance: record.swaps.iter().map(|p| frac(p.accepts(), p.attempts())).collect(),
        null_fraction: frac(record.null_proposals, record.swap_events),
    }
}

/// Level trace CSV (`step,time,level`) with one-based levels.
pub fn write_level_trace<W: Write>(record: &RunRecord, mut w: W) -> Result<()> {
    writeln!(w, "step,time,level")?;
    for s in &record.states {
        writeln!(w, "{},{},{}", s.step, s.time, s.level + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn two_mode() -> MixtureTarget {
        MixtureTarget::gaussian(vec![0.5, 0.5], vec![vec![-5.0], vec![5.0]], 1.0).unwrap()
    }

    #[test]
    fn exact_masses_sum_to_one() {
        let t = two_mode();
        let h = histogram_tv(&[vec![0.0]], &t, &HistogramConfig::default()).unwrap();
        let total: f64 = h.exact.iter().sum::<f64>() + h.exact_outside;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((h.masses.iter().sum::<f64>() + h.outside_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_tv() {
        let t = two_mode();
        let samples = vec![vec![5.01]; 2000];
        let h = histogram_tv(&samples, &t, &HistogramConfig::default()).unwrap();
        let k = h.counts.iter().position(|c| *c > 0).unwrap();
        assert!((h.tv - (1.0 - h.exact[k])).abs() < 1e-12);
        let far = vec![vec![100.0]; 2000];
        assert!(empirical_tv(&far, &t, &HistogramConfig::default()).unwrap() > 0.999);
    }

    #[test]
    fn tv_rejects_high_dimension() {
        let t = MixtureTarget::gaussian(vec![1.0], vec![vec![0.0; 3]], 1.0).unwrap();
        assert!(matches!(
            empirical_tv(&[vec![0.0; 3]], &t, &HistogramConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn two_dimensional_exact_masses() {
        let t = MixtureTarget::gaussian(vec![0.3, 0.7], vec![vec![0.0, 0.0], vec![4.0, 1.0]], 1.0).unwrap();
        let cfg = HistogramConfig {
            bins: 20,
            ..Default::default()
        };
        let h = histogram_tv(&[vec![0.0, 0.0]], &t, &cfg).unwrap();
        assert_eq!(h.exact.len(), 400);
        assert!((h.exact.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn modes_sum_to_one() {
        let t = two_mode();
        let mut rng = RngStream::new(1);
        let xs: Vec<Vec<f64>> = (0..1001).map(|_| t.sample_exact(&mut rng)).collect();
        let m = mode_masses(&xs, &t).unwrap();
        assert_eq!(m.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn constant_series_degenerate() {
        let a = integrated_autocorr(&vec![3.0; 500], 10).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.tau, 1.0);
        assert!(matches!(
            integrated_autocorr(&[1.0; 50], 10),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}
