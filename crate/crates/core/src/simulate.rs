//! Synthetic data drawn from the generative model, with MCAR missingness.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{n_dyads, DyadState, DyadStateVector, InclusionMask, ReportMatrix, Roster};
use crate::model::{ErrorPriors, ErrorRates, GraphPrior};
use crate::sampler::{draw_dyad_state, update_decisive_errors, update_tie_errors};

/// Where the informants' true error rates come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RateSource {
    /// Same rates for every informant.
    Shared(ErrorRates),
    /// One entry per informant.
    PerInformant(Vec<ErrorRates>),
    /// Drawn from the `(rho, gamma)` Dirichlet priors.
    FromPrior { rho: f64, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_vertices: usize,
    pub n_informants: usize,
    pub lambda: f64,
    pub rates: RateSource,
    pub missing_rate: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_vertices < 2 {
            return Err(Error::RosterTooSmall(self.n_vertices));
        }
        if self.n_informants == 0 {
            return Err(Error::Invalid("at least one informant is required".into()));
        }
        GraphPrior::new(self.lambda)?;
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::OutOfRange {
                name: "missing_rate",
                range: "[0, 1)",
                value: self.missing_rate,
            });
        }
        match &self.rates {
            RateSource::Shared(r) => {
                ErrorRates::new(r.phi, r.tau, r.omega)?;
            }
            RateSource::PerInformant(rs) => {
                if rs.len() != self.n_informants {
                    return Err(Error::DimensionMismatch {
                        what: "per-informant rates",
                        expected: self.n_informants,
                        found: rs.len(),
                    });
                }
                for r in rs {
                    ErrorRates::new(r.phi, r.tau, r.omega)?;
                }
            }
            RateSource::FromPrior { rho, gamma } => {
                ErrorPriors::from_rho_gamma(*rho, *gamma)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedDataset {
    pub roster: Roster,
    pub truth: DyadStateVector,
    pub true_rates: Vec<ErrorRates>,
    /// Reports at hidden cells are generated too; the mask hides them.
    pub reports: ReportMatrix,
    pub mask: InclusionMask,
}

/// One report on a dyad whose true state is `truth`.
///
/// A falsely decisive report on a tied dyad picks either direction with
/// probability `omega / 2`.
pub fn draw_report<R: Rng + ?Sized>(
    truth: DyadState,
    rates: &ErrorRates,
    rng: &mut R,
) -> DyadState {
    let u: f64 = rng.random();
    if truth.is_decisive() {
        if u < rates.correct_decisive() {
            truth
        } else if u < 1.0 - rates.tau {
            truth.reversed()
        } else {
            DyadState::Tie
        }
    } else if u < rates.omega / 2.0 {
        DyadState::Plus
    } else if u < rates.omega {
        DyadState::Minus
    } else {
        DyadState::Tie
    }
}

/// Reports and MCAR mask for a given truth, informant by informant.
pub fn simulate_reports<R: Rng + ?Sized>(
    truth: &DyadStateVector,
    rates: &[ErrorRates],
    missing_rate: f64,
    rng: &mut R,
) -> Result<(ReportMatrix, InclusionMask)> {
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::OutOfRange {
            name: "missing_rate",
            range: "[0, 1)",
            value: missing_rate,
        });
    }
    let d = truth.len();
    let mut reports = ReportMatrix::filled(rates.len(), d);
    let mut mask = InclusionMask::all_observed(rates.len(), d);
    for (k, r) in rates.iter().enumerate() {
        for (dyad, &t) in truth.iter().enumerate() {
            reports.set(k, dyad, draw_report(t, r, rng));
            let observed = missing_rate == 0.0 || rng.random::<f64>() >= missing_rate;
            mask.set(k, dyad, observed);
        }
    }
    Ok((reports, mask))
}

pub fn simulate(spec: &SimulationSpec) -> Result<SimulatedDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let roster = Roster::numbered(spec.n_vertices)?;
    let prior = GraphPrior::new(spec.lambda)?.state_probs();
    let truth: DyadStateVector = (0..n_dyads(spec.n_vertices))
        .map(|_| draw_dyad_state(&prior, &mut rng))
        .collect();
    let true_rates = match &spec.rates {
        RateSource::Shared(r) => vec![*r; spec.n_informants],
        RateSource::PerInformant(rs) => rs.clone(),
        RateSource::FromPrior { rho, gamma } => {
            let p = ErrorPriors::from_rho_gamma(*rho, *gamma)?;
            let none = Default::default();
            (0..spec.n_informants)
                .map(|_| {
                    let (phi, tau) = update_decisive_errors(&none, &p, &mut rng)?;
                    let omega = update_tie_errors(&none, &p, &mut rng)?;
                    Ok(ErrorRates { phi, tau, omega })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let (reports, mask) = simulate_reports(&truth, &true_rates, spec.missing_rate, &mut rng)?;
    Ok(SimulatedDataset {
        roster,
        truth,
        true_rates,
        reports,
        mask,
    })
}
