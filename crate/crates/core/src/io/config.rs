//! TOML run and simulation configuration.
//!
//! ```toml
//! format_version = 1
//! roster = ["A", "B", "C"]
//! lambda = 0.5
//!
//! [priors]          # either rho + gamma ...
//! rho = 0.2
//! gamma = 10.0
//! # [[priors.informant]]   # ... or explicit concentrations per informant
//! # id = "k1"
//! # alpha = 1.0
//! # beta = 1.0
//! # gamma = 8.0
//! # delta = 1.0
//! # epsilon = 9.0
//!
//! [sampler]
//! iterations = 20000
//! burn_in = 2000
//! thin = 10
//! chains = 2
//! seed = 42
//! ```
//!
//! Unknown keys are rejected.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{IoError, IoResult, FORMAT_VERSION};
use crate::error::Error;
use crate::graph::Roster;
use crate::model::{ErrorPriors, ErrorRates, GraphPrior};
use crate::sampler::SamplerConfig;
use crate::simulate::{RateSource, SimulationSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InformantPriorEntry {
    pub id: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub informant: Vec<InformantPriorEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub iterations: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "one_u64")]
    pub thin: u64,
    #[serde(default = "one_usize")]
    pub chains: usize,
    pub seed: u64,
}

fn one_u64() -> u64 {
    1
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InformantRatesEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub phi: f64,
    pub tau: f64,
    pub omega: f64,
}

/// Fixed error rates: shared `phi`/`tau`/`omega` or one `[[clamp.informant]]` per id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub informant: Vec<InformantRatesEntry>,
}

/// On-disk form of a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub format_version: u32,
    pub roster: Vec<String>,
    /// Informant order; defaults to first appearance in the reports file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informants: Option<Vec<String>>,
    pub lambda: f64,
    pub priors: PriorsSection,
    pub sampler: SamplerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<ClampSection>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PriorSpec {
    /// The same `(rho, gamma)` prior for every informant.
    RhoGamma {
        rho: f64,
        gamma: f64,
    },
    PerInformant(Vec<(String, ErrorPriors)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClampSpec {
    Shared(ErrorRates),
    PerInformant(Vec<(String, ErrorRates)>),
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub roster: Roster,
    pub informants: Option<Vec<String>>,
    pub prior: GraphPrior,
    pub priors: PriorSpec,
    /// Sampler settings; clamped rates are attached by [`RunConfig::sampler_for`].
    pub sampler: SamplerConfig,
    pub clamp: Option<ClampSpec>,
}

fn config_err(msg: impl Into<String>) -> IoError {
    IoError::Config(msg.into())
}

fn check_version(version: u32) -> IoResult<()> {
    if version != FORMAT_VERSION {
        return Err(config_err(format!(
            "unsupported format_version {version} (expected {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

fn unique_ids<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> IoResult<()> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(config_err(format!("duplicate {what} id {id:?}")));
        }
    }
    Ok(())
}

/// Matches per-informant entries to `informants`, requiring an exact cover.
fn resolve<T: Copy>(
    entries: &[(String, T)],
    informants: &[String],
    what: &str,
) -> IoResult<Vec<T>> {
    let known: HashSet<&str> = informants.iter().map(String::as_str).collect();
    if let Some((id, _)) = entries.iter().find(|(id, _)| !known.contains(id.as_str())) {
        return Err(config_err(format!(
            "{what} given for unknown informant {id:?}"
        )));
    }
    informants
        .iter()
        .map(|id| {
            entries
                .iter()
                .find(|(e, _)| e == id)
                .map(|(_, v)| *v)
                .ok_or_else(|| config_err(format!("no {what} for informant {id:?}")))
        })
        .collect()
}

impl RunConfig {
    pub fn from_toml(text: &str) -> IoResult<Self> {
        let file: RunConfigFile = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        RunConfig::from_file(file)
    }

    pub fn from_file(file: RunConfigFile) -> IoResult<Self> {
        check_version(file.format_version)?;
        let roster = Roster::new(file.roster)?;
        if let Some(ids) = &file.informants {
            unique_ids(ids.iter().map(String::as_str), "informant")?;
        }
        let prior = GraphPrior::new(file.lambda)?;
        let p = file.priors;
        let priors = match (p.rho, p.gamma, p.informant.is_empty()) {
            (Some(rho), Some(gamma), true) => {
                ErrorPriors::from_rho_gamma(rho, gamma)?;
                PriorSpec::RhoGamma { rho, gamma }
            }
            (None, None, false) => {
                unique_ids(p.informant.iter().map(|e| e.id.as_str()), "prior")?;
                PriorSpec::PerInformant(
                    p.informant
                        .iter()
                        .map(|e| {
                            ErrorPriors::new(e.alpha, e.beta, e.gamma, e.delta, e.epsilon)
                                .map(|v| (e.id.clone(), v))
                        })
                        .collect::<Result<_, Error>>()?,
                )
            }
            _ => return Err(config_err(
                "[priors] needs exactly one of `rho` + `gamma` or `[[priors.informant]]` entries",
            )),
        };
        let s = file.sampler;
        let sampler = SamplerConfig::new(s.iterations, s.burn_in, s.thin, s.chains, s.seed);
        sampler.validate()?;
        let clamp = file.clamp.map(parse_clamp).transpose()?;
        Ok(RunConfig {
            roster,
            informants: file.informants,
            prior,
            priors,
            sampler,
            clamp,
        })
    }

    pub fn to_file(&self) -> RunConfigFile {
        let priors = match &self.priors {
            PriorSpec::RhoGamma { rho, gamma } => PriorsSection {
                rho: Some(*rho),
                gamma: Some(*gamma),
                informant: Vec::new(),
            },
            PriorSpec::PerInformant(entries) => PriorsSection {
                rho: None,
                gamma: None,
                informant: entries
                    .iter()
                    .map(|(id, p)| InformantPriorEntry {
                        id: id.clone(),
                        alpha: p.alpha,
                        beta: p.beta,
                        gamma: p.gamma,
                        delta: p.delta,
                        epsilon: p.epsilon,
                    })
                    .collect(),
            },
        };
        let clamp = self.clamp.as_ref().map(|c| match c {
            ClampSpec::Shared(r) => ClampSection {
                phi: Some(r.phi),
                tau: Some(r.tau),
                omega: Some(r.omega),
                informant: Vec::new(),
            },
            ClampSpec::PerInformant(entries) => ClampSection {
                informant: entries
                    .iter()
                    .map(|(id, r)| InformantRatesEntry {
                        id: Some(id.clone()),
                        phi: r.phi,
                        tau: r.tau,
                        omega: r.omega,
                    })
                    .collect(),
                ..Default::default()
            },
        });
        RunConfigFile {
            format_version: FORMAT_VERSION,
            roster: self.roster.labels().to_vec(),
            informants: self.informants.clone(),
            lambda: self.prior.lambda(),
            priors,
            sampler: SamplerSection {
                iterations: self.sampler.n_iterations,
                burn_in: self.sampler.burn_in,
                thin: self.sampler.thin,
                chains: self.sampler.n_chains,
                seed: self.sampler.seed,
            },
            clamp,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("run config serializes")
    }

    pub fn priors_for(&self, informants: &[String]) -> IoResult<Vec<ErrorPriors>> {
        match &self.priors {
            PriorSpec::RhoGamma { rho, gamma } => {
                Ok(vec![
                    ErrorPriors::from_rho_gamma(*rho, *gamma)?;
                    informants.len()
                ])
            }
            PriorSpec::PerInformant(entries) => resolve(entries, informants, "priors"),
        }
    }

    pub fn clamp_for(&self, informants: &[String]) -> IoResult<Option<Vec<ErrorRates>>> {
        match &self.clamp {
            None => Ok(None),
            Some(ClampSpec::Shared(r)) => Ok(Some(vec![*r; informants.len()])),
            Some(ClampSpec::PerInformant(entries)) => {
                resolve(entries, informants, "clamped rates").map(Some)
            }
        }
    }

    /// Sampler settings with any clamped rates resolved for `informants`.
    pub fn sampler_for(&self, informants: &[String]) -> IoResult<SamplerConfig> {
        let mut cfg = self.sampler.clone();
        cfg.clamp_error_rates = self.clamp_for(informants)?;
        Ok(cfg)
    }
}

fn parse_clamp(c: ClampSection) -> IoResult<ClampSpec> {
    match (c.phi, c.tau, c.omega, c.informant.is_empty()) {
        (Some(phi), Some(tau), Some(omega), true) => {
            Ok(ClampSpec::Shared(ErrorRates::new(phi, tau, omega)?))
        }
        (None, None, None, false) => {
            let mut entries = Vec::with_capacity(c.informant.len());
            for e in c.informant {
                let id =
                    e.id.ok_or_else(|| config_err("every [[clamp.informant]] needs an `id`"))?;
                entries.push((id, ErrorRates::new(e.phi, e.tau, e.omega)?));
            }
            unique_ids(entries.iter().map(|(id, _)| id.as_str()), "clamp")?;
            Ok(ClampSpec::PerInformant(entries))
        }
        _ => Err(config_err(
            "[clamp] needs exactly one of `phi` + `tau` + `omega` or `[[clamp.informant]]` entries",
        )),
    }
}

/// Error-rate section of a simulation file: shared rates, prior parameters,
/// or one `[[rates.informant]]` entry per informant in order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRatesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub informant: Vec<InformantRatesEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfigFile {
    pub format_version: u32,
    pub n_vertices: usize,
    pub n_informants: usize,
    pub lambda: f64,
    #[serde(default)]
    pub missing_rate: f64,
    pub seed: u64,
    pub rates: SimulationRatesSection,
}

impl SimulationConfigFile {
    pub fn from_toml(text: &str) -> IoResult<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_spec(&self) -> IoResult<SimulationSpec> {
        check_version(self.format_version)?;
        let r = &self.rates;
        let rates = match (r.phi, r.tau, r.omega, r.rho, r.gamma, r.informant.is_empty()) {
            (Some(phi), Some(tau), Some(omega), None, None, true) => {
                RateSource::Shared(ErrorRates::new(phi, tau, omega)?)
            }
            (None, None, None, Some(rho), Some(gamma), true) => RateSource::FromPrior { rho, gamma },
            (None, None, None, None, None, false) => RateSource::PerInformant(
                r.informant
                    .iter()
                    .map(|e| ErrorRates::new(e.phi, e.tau, e.omega))
                    .collect::<Result<_, Error>>()?,
            ),
            _ => {
                return Err(config_err(
                    "[rates] needs exactly one of `phi`+`tau`+`omega`, `rho`+`gamma`, or `[[rates.informant]]`",
                ))
            }
        };
        let spec = SimulationSpec {
            n_vertices: self.n_vertices,
            n_informants: self.n_informants,
            lambda: self.lambda,
            rates,
            missing_rate: self.missing_rate,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}
