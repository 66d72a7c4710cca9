//! Built-in targets used by the CLI and the test suites.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ladder::{build_ladder_gaussian, build_ladder_logconcave, RunParams, ScheduleConstants, TemperatureLadder};
use crate::oracle::{
    AdversarialTwoGaussian, BaseFunction, DensityOracle, MixtureTarget, Perturbed, SinePerturbation,
};

/// Oracle behind a fixture.
#[derive(Debug, Clone)]
pub enum FixtureTarget {
    Mixture(MixtureTarget),
    Perturbed(Arc<Perturbed<MixtureTarget, SinePerturbation>>),
    Adversarial(AdversarialTwoGaussian),
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub target: FixtureTarget,
}

/// One row of the fixture listing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixtureInfo {
    pub name: String,
    pub dim: usize,
    pub components: usize,
    /// `D/σ`, with `σ = 1/√κ` for non-Gaussian bases.
    pub d_over_sigma: f64,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_norm: Option<f64>,
}

fn scale_of(base: &BaseFunction) -> f64 {
    base.sigma().unwrap_or_else(|| 1.0 / base.strong_convexity().sqrt())
}

impl Fixture {
    pub fn oracle(&self) -> Arc<dyn DensityOracle> {
        match &self.target {
            FixtureTarget::Mixture(m) => Arc::new(m.clone()),
            FixtureTarget::Perturbed(p) => p.clone(),
            FixtureTarget::Adversarial(a) => Arc::new(a.clone()),
        }
    }

    /// The exact mixture, when the fixture has one.
    pub fn mixture(&self) -> Option<&MixtureTarget> {
        match &self.target {
            FixtureTarget::Mixture(m) => Some(m),
            FixtureTarget::Perturbed(p) => Some(p.inner()),
            FixtureTarget::Adversarial(_) => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.oracle().dim()
    }

    pub fn info(&self) -> FixtureInfo {
        match &self.target {
            FixtureTarget::Adversarial(a) => FixtureInfo {
                name: self.name.into(),
                dim: a.dim(),
                components: 2,
                d_over_sigma: a.u_norm(),
                description: self.description.into(),
                u_norm: Some(a.u_norm()),
            },
            _ => {
                let m = self.mixture().expect("mixture fixture");
                let s = scale_of(m.base());
                FixtureInfo {
                    name: self.name.into(),
                    dim: m.dim(),
                    components: m.components(),
                    d_over_sigma: m.center_bound().max(s) / s,
                    description: self.description.into(),
                    u_norm: None,
                }
            }
        }
    }

    /// Ladder and schedule from the fixture's structural constants.
    pub fn ladder(&self, eps: f64, constants: &ScheduleConstants) -> Result<(TemperatureLadder, RunParams)> {
        match &self.target {
            FixtureTarget::Adversarial(a) => {
                // N(0, 2I) and N(u, I): κ = ½, K = 1
                build_ladder_logconcave(a.dim(), a.u_norm(), 0.5, 1.0, 0.5, eps, constants)
            }
            _ => mixture_ladder(self.mixture().expect("mixture fixture"), eps, constants),
        }
    }
}

/// Ladder and schedule for a mixture: the Gaussian construction for isotropic
/// Gaussian bases, the log-concave one otherwise.
pub fn mixture_ladder(
    m: &MixtureTarget,
    eps: f64,
    constants: &ScheduleConstants,
) -> Result<(TemperatureLadder, RunParams)> {
    match m.base() {
        BaseFunction::IsotropicGaussian { sigma } => build_ladder_gaussian(
            m.dim(),
            m.center_bound().max(*sigma),
            *sigma,
            m.w_min(),
            eps,
            constants,
        ),
        base => {
            let kappa = base.strong_convexity();
            let floor = kappa.sqrt() / ((m.dim() as f64).sqrt() * base.smoothness());
            build_ladder_logconcave(
                m.dim(),
                m.center_bound().max(floor),
                kappa,
                base.smoothness(),
                m.w_min(),
                eps,
                constants,
            )
        }
    }
}

/// Corners of a simplex with edge scale `s` in `d` dimensions: the origin and
/// `s·e_i`, shifted so the centroid sits at the origin.
pub fn simplex_centers(d: usize, s: f64) -> Vec<Vec<f64>> {
    let mut corners = vec![vec![0.0; d]];
    for i in 0..d {
        let mut c = vec![0.0; d];
        c[i] = s;
        corners.push(c);
    }
    let shift = s / (d as f64 + 1.0);
    for c in &mut corners {
        for v in c.iter_mut() {
            *v -= shift;
        }
    }
    corners
}

pub const FIXTURE_NAMES: [&str; 6] = [
    "single-gaussian",
    "two-mode-symmetric",
    "two-mode-asymmetric",
    "simplex-centers",
    "adversarial-two-variance",
    "perturbed-mixture",
];

pub fn fixture(name: &str) -> Result<Fixture> {
    let two_mode = |w: Vec<f64>| MixtureTarget::gaussian(w, vec![vec![-5.0], vec![5.0]], 1.0);
    Ok(match name {
        "single-gaussian" => Fixture {
            name: "single-gaussian",
            description: "standard normal in 1D",
            target: FixtureTarget::Mixture(MixtureTarget::gaussian(vec![1.0], vec![vec![0.0]], 1.0)?),
        },
        "two-mode-symmetric" => Fixture {
            name: "two-mode-symmetric",
            description: "equal mixture of N(-5,1) and N(5,1)",
            target: FixtureTarget::Mixture(two_mode(vec![0.5, 0.5])?),
        },
        "two-mode-asymmetric" => Fixture {
            name: "two-mode-asymmetric",
            description: "0.3 N(-5,1) + 0.7 N(5,1)",
            target: FixtureTarget::Mixture(two_mode(vec![0.3, 0.7])?),
        },
        "simplex-centers" => Fixture {
            name: "simplex-centers",
            description: "four unit-variance Gaussians on the corners of a 3D simplex (edge scale 6)",
            target: FixtureTarget::Mixture(MixtureTarget::gaussian(vec![0.25; 4], simplex_centers(3, 6.0), 1.0)?),
        },
        "adversarial-two-variance" => {
            let mut dir = vec![0.0; 4];
            dir[0] = 1.0;
            Fixture {
                name: "adversarial-two-variance",
                description: "N(0,2I)/N(u,I) mixture with the narrow mode hidden, d=4, |u| = 8d ln 2",
                target: FixtureTarget::Adversarial(AdversarialTwoGaussian::new(&dir)?),
            }
        }
        "perturbed-mixture" => {
            let base = two_mode(vec![0.5, 0.5])?;
            let p = SinePerturbation {
                amplitude: 0.1,
                axis: 0,
            };
            Fixture {
                name: "perturbed-mixture",
                description: "two-mode-symmetric plus 0.1 sin(x)",
                target: FixtureTarget::Perturbed(Arc::new(Perturbed::new(base, p, p.bounds()))),
            }
        }
        other => return Err(Error::UnknownFixture(other.to_string())),
    })
}

pub fn list_fixtures() -> Vec<FixtureInfo> {
    FIXTURE_NAMES
        .iter()
        .map(|n| fixture(n).expect("built-in fixture").info())
        .collect()
}

/// Plain-text table of [`list_fixtures`].
pub fn fixture_table() -> String {
    let mut out = format!("{:<26} {:>3} {:>3} {:>8}  {}\n", "name", "dim", "m", "D/sigma", "description");
    for f in list_fixtures() {
        out.push_str(&format!(
            "{:<26} {:>3} {:>3} {:>8.3}  {}\n",
            f.name, f.dim, f.components, f.d_over_sigma, f.description
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{mean, norm};

    #[test]
    fn simplex_is_centered_and_equilateral() {
        let c = simplex_centers(3, 6.0);
        assert_eq!(c.len(), 4);
        for a in 0..3 {
            assert!(mean(&c.iter().map(|v| v[a]).collect::<Vec<_>>()).abs() < 1e-12);
        }
        let d01: Vec<f64> = c[0].iter().zip(&c[1]).map(|(a, b)| a - b).collect();
        let d12: Vec<f64> = c[1].iter().zip(&c[2]).map(|(a, b)| a - b).collect();
        assert!((norm(&d01) - 6.0).abs() < 1e-12);
        assert!((norm(&d12) - 6.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn every_fixture_has_consistent_gradients() {
        let mut rng = crate::rng::RngStream::new(3);
        for name in FIXTURE_NAMES {
            let f = fixture(name).unwrap();
            let probes: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..f.dim()).map(|_| 4.0 * rng.normal()).collect())
                .collect();
            let err = crate::oracle::gradient_check(f.oracle().as_ref(), &probes).unwrap();
            assert!(err < 1e-4, "{name}: {err}");
            assert!(f.ladder(0.1, &ScheduleConstants::default()).is_ok(), "{name}");
        }
    }

    #[test]
    fn adversarial_listing_reports_u_norm() {
        let info = fixture("adversarial-two-variance").unwrap().info();
        assert_eq!(info.dim, 4);
        assert!((info.u_norm.unwrap() - 32.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(fixture("nope"), Err(Error::UnknownFixture(_))));
    }
}
