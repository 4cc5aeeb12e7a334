//! Likelihood, priors and conjugate sufficient statistics.
//!
//! Each informant `k` has three error rates: `phi` (winner and loser swapped
//! on a truly decisive dyad), `tau` (tie reported on a truly decisive dyad)
//! and `omega` (some decisive outcome reported on a truly tied dyad).
//! `(phi, tau, 1 - phi - tau)` carries a Dirichlet prior with concentrations
//! `(alpha, beta, gamma)`; `(omega, 1 - omega)` carries `(delta, epsilon)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_dims, DyadState, DyadStateVector, InclusionMask, ReportMatrix};

/// Slack allowed when checking that `phi + tau` stays on the simplex.
const SIMPLEX_SLACK: f64 = 1e-12;

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            range: "[0, 1]",
            value,
        })
    }
}

fn check_concentration(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConcentration { name, value })
    }
}

/// Error rates of a single informant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub phi: f64,
    pub tau: f64,
    pub omega: f64,
}

impl ErrorRates {
    pub fn new(phi: f64, tau: f64, omega: f64) -> Result<Self> {
        check_probability("phi", phi)?;
        check_probability("tau", tau)?;
        check_probability("omega", omega)?;
        if phi + tau > 1.0 + SIMPLEX_SLACK {
            return Err(Error::OutOfRange {
                name: "phi + tau",
                range: "[0, 1]",
                value: phi + tau,
            });
        }
        Ok(ErrorRates { phi, tau, omega })
    }

    /// Probability of reporting a truly decisive dyad correctly.
    pub fn correct_decisive(&self) -> f64 {
        (1.0 - self.phi - self.tau).max(0.0)
    }
}

/// Dirichlet concentrations for one informant's error rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorPriors {
    /// Reversal.
    pub alpha: f64,
    /// False tie.
    pub beta: f64,
    /// Correct decisive report.
    pub gamma: f64,
    /// Falsely decisive report.
    pub delta: f64,
    /// Correct tie report.
    pub epsilon: f64,
}

impl ErrorPriors {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64, epsilon: f64) -> Result<Self> {
        check_concentration("alpha", alpha)?;
        check_concentration("beta", beta)?;
        check_concentration("gamma", gamma)?;
        check_concentration("delta", delta)?;
        check_concentration("epsilon", epsilon)?;
        Ok(ErrorPriors {
            alpha,
            beta,
            gamma,
            delta,
            epsilon,
        })
    }

    /// `Dir(rho*gamma/2, rho*gamma/2, gamma)` for decisive truths and
    /// `Dir(rho*gamma, gamma)` for tied truths.
    pub fn from_rho_gamma(rho: f64, gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::OutOfRange {
                name: "rho",
                range: "[0, 1)",
                value: rho,
            });
        }
        if rho == 0.0 {
            return Err(Error::InvalidConcentration {
                name: "rho * gamma (rho = 0 gives a degenerate Dirichlet)",
                value: 0.0,
            });
        }
        check_concentration("gamma", gamma)?;
        let err = rho * gamma;
        ErrorPriors::new(err / 2.0, err / 2.0, gamma, err, gamma)
    }

    /// Prior means of `(phi, tau, omega)`.
    pub fn mean_rates(&self) -> ErrorRates {
        let decisive = self.alpha + self.beta + self.gamma;
        ErrorRates {
            phi: self.alpha / decisive,
            tau: self.beta / decisive,
            omega: self.delta / (self.delta + self.epsilon),
        }
    }
}

/// The same `(rho, gamma)` prior for each of `m` informants.
pub fn build_error_priors(rho: f64, gamma: f64, m: usize) -> Result<Vec<ErrorPriors>> {
    let priors = ErrorPriors::from_rho_gamma(rho, gamma)?;
    Ok(vec![priors; m])
}

/// Prior tie probability `lambda`, split evenly between the two decisive states otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPrior {
    lambda: f64,
}

impl GraphPrior {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(GraphPrior { lambda })
        } else {
            Err(Error::OutOfRange {
                name: "lambda",
                range: "(0, 1)",
                value: lambda,
            })
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn state_probs(&self) -> StateProbs {
        graph_prior_probs(self)
    }
}

pub fn graph_prior_probs(prior: &GraphPrior) -> StateProbs {
    let decisive = (1.0 - prior.lambda) / 2.0;
    StateProbs {
        plus: decisive,
        minus: decisive,
        tie: prior.lambda,
    }
}

/// A distribution over the three dyad states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateProbs {
    pub plus: f64,
    pub minus: f64,
    pub tie: f64,
}

impl StateProbs {
    pub fn get(&self, state: DyadState) -> f64 {
        match state {
            DyadState::Plus => self.plus,
            DyadState::Minus => self.minus,
            DyadState::Tie => self.tie,
        }
    }

    /// Probabilities in `DyadState::ALL` order.
    pub fn as_array(&self) -> [f64; 3] {
        [self.plus, self.minus, self.tie]
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        StateProbs {
            plus: p[0],
            minus: p[1],
            tie: p[2],
        }
    }

    pub fn sum(&self) -> f64 {
        self.plus + self.minus + self.tie
    }

    /// Most probable state; exact ties resolve in the order `+1, -1, 0`.
    pub fn argmax(&self) -> DyadState {
        if self.plus >= self.minus && self.plus >= self.tie {
            DyadState::Plus
        } else if self.minus >= self.tie {
            DyadState::Minus
        } else {
            DyadState::Tie
        }
    }

    pub fn max_abs_diff(&self, other: &StateProbs) -> f64 {
        (self.plus - other.plus)
            .abs()
            .max((self.minus - other.minus).abs())
            .max((self.tie - other.tie).abs())
    }
}

/// Probability that an informant with `rates` reports `report` when the true state is `truth`.
///
/// Evaluates the branch-free mixture algebra
/// `|T|(|X|(1 - |T+X|/2) phi + (1 - |X|) tau + |X| |T+X|/2 (1 - phi - tau))
///  + (1 - |T|)(|X| omega + (1 - |X|)(1 - omega))`.
pub fn dyad_likelihood(report: DyadState, truth: DyadState, rates: &ErrorRates) -> f64 {
    let x = report.value() as f64;
    let t = truth.value() as f64;
    let ax = x.abs();
    let at = t.abs();
    let half_sum = 0.5 * (t + x).abs();
    at * (ax * (1.0 - half_sum) * rates.phi
        + (1.0 - ax) * rates.tau
        + ax * half_sum * rates.correct_decisive())
        + (1.0 - at) * (ax * rates.omega + (1.0 - ax) * (1.0 - rates.omega))
}

/// Log-likelihood of every observed report given the latent graph.
pub fn joint_log_likelihood(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    xi: &DyadStateVector,
    rates: &[ErrorRates],
) -> Result<f64> {
    check_dims(reports, mask, Some(xi.len()))?;
    check_rates_len(rates, reports.n_informants())?;
    let mut total = 0.0;
    for (k, r) in rates.iter().enumerate() {
        for (d, &truth) in xi.iter().enumerate() {
            if mask.is_observed(k, d) {
                total += dyad_likelihood(reports.get(k, d), truth, r).ln();
            }
        }
    }
    Ok(total)
}

pub(crate) fn check_rates_len<T>(rates: &[T], m: usize) -> Result<()> {
    if rates.len() != m {
        return Err(Error::DimensionMismatch {
            what: "per-informant parameters",
            expected: m,
            found: rates.len(),
        });
    }
    Ok(())
}

/// Report-outcome tallies for one informant over its observed dyads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InformantCounts {
    pub correct_decisive: u64,
    pub reversed: u64,
    pub false_tie: u64,
    pub false_decisive: u64,
    pub correct_tie: u64,
}

impl InformantCounts {
    pub fn record(&mut self, report: DyadState, truth: DyadState) {
        match (truth.is_decisive(), report) {
            (true, DyadState::Tie) => self.false_tie += 1,
            (true, r) if r == truth => self.correct_decisive += 1,
            (true, _) => self.reversed += 1,
            (false, DyadState::Tie) => self.correct_tie += 1,
            (false, _) => self.false_decisive += 1,
        }
    }

    /// Observed dyads whose true state is decisive.
    pub fn n_decisive(&self) -> u64 {
        self.correct_decisive + self.reversed + self.false_tie
    }

    /// Observed dyads whose true state is a tie.
    pub fn n_tied(&self) -> u64 {
        self.false_decisive + self.correct_tie
    }
}

/// Per-informant sufficient statistics of the conjugate rate updates.
pub type SufficientCounts = Vec<InformantCounts>;

pub fn sufficient_counts(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    xi: &DyadStateVector,
) -> Result<SufficientCounts> {
    check_dims(reports, mask, Some(xi.len()))?;
    Ok(tally(reports, mask, xi))
}

pub(crate) fn tally(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    xi: &[DyadState],
) -> SufficientCounts {
    (0..reports.n_informants())
        .map(|k| {
            let mut c = InformantCounts::default();
            for (d, &truth) in xi.iter().enumerate() {
                if mask.is_observed(k, d) {
                    c.record(reports.get(k, d), truth);
                }
            }
            c
        })
        .collect()
}
