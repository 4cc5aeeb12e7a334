//! Exact posteriors on small instances, used to validate the sampler.
//!
//! Two oracles:
//! - with error rates held fixed, dyads are conditionally independent, so each
//!   dyad's posterior is its closed-form conditional evaluated directly;
//! - with rates integrated out against their Dirichlet priors, the graph
//!   posterior is enumerated over all `3^D` graphs.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::{check_dims, DyadState, DyadStateVector, InclusionMask, ReportMatrix};
use crate::model::{
    check_rates_len, dyad_likelihood, tally, ErrorPriors, ErrorRates, GraphPrior, StateProbs,
};

/// Default cap on enumerated dyads (`3^10 = 59049` graphs).
pub const DEFAULT_MAX_DYADS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub xi: DyadStateVector,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    pub marginals: Vec<StateProbs>,
    /// Every graph with its posterior probability, when small enough to list.
    pub joint: Option<Vec<JointEntry>>,
}

impl ExactPosterior {
    pub fn joint_total(&self) -> Option<f64> {
        self.joint
            .as_ref()
            .map(|j| j.iter().map(|e| e.probability).sum())
    }
}

/// All `3^d` graphs, first dyad varying fastest, states in `DyadState::ALL` order.
pub fn enumerate_graphs(d: usize) -> impl Iterator<Item = DyadStateVector> {
    let total = 3usize.pow(d as u32);
    (0..total).map(move |mut code| {
        (0..d)
            .map(|_| {
                let s = DyadState::ALL[code % 3];
                code /= 3;
                s
            })
            .collect()
    })
}

/// Exact per-dyad posterior with the error rates fixed.
pub fn exact_fixed_error_posterior(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    rates: &[ErrorRates],
    prior: &GraphPrior,
) -> Result<ExactPosterior> {
    check_dims(reports, mask, None)?;
    check_rates_len(rates, reports.n_informants())?;
    let prior_probs = prior.state_probs();
    let mut marginals = Vec::with_capacity(reports.n_dyads());
    for d in 0..reports.n_dyads() {
        let mass = DyadState::ALL.map(|s| {
            rates
                .iter()
                .enumerate()
                .filter(|(k, _)| mask.is_observed(*k, d))
                .fold(prior_probs.get(s), |acc, (k, r)| {
                    acc * dyad_likelihood(reports.get(k, d), s, r)
                })
        });
        let psi: f64 = mass.iter().sum();
        if psi.is_nan() || psi <= 0.0 {
            return Err(Error::DegenerateConditional { dyad: d });
        }
        marginals.push(StateProbs::from_array(mass.map(|w| w / psi)));
    }
    let joint = (reports.n_dyads() <= DEFAULT_MAX_DYADS).then(|| {
        enumerate_graphs(reports.n_dyads())
            .map(|xi| {
                let probability = xi.iter().zip(&marginals).map(|(&s, m)| m.get(s)).product();
                JointEntry { xi, probability }
            })
            .collect()
    });
    Ok(ExactPosterior { marginals, joint })
}

/// `ln B(a) = sum ln Gamma(a_i) - ln Gamma(sum a_i)`.
fn ln_dirichlet_norm(a: &[f64]) -> f64 {
    a.iter().map(|&v| ln_gamma(v)).sum::<f64>() - ln_gamma(a.iter().sum())
}

/// `ln Pr(reports | xi)` with every informant's rates integrated out.
pub fn collapsed_log_marginal_likelihood(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    xi: &DyadStateVector,
    priors: &[ErrorPriors],
) -> Result<f64> {
    check_dims(reports, mask, Some(xi.len()))?;
    check_rates_len(priors, reports.n_informants())?;
    Ok(collapsed_from_counts(reports, mask, xi, priors))
}

fn collapsed_from_counts(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    xi: &[DyadState],
    priors: &[ErrorPriors],
) -> f64 {
    tally(reports, mask, xi)
        .iter()
        .zip(priors)
        .map(|(c, p)| {
            let decisive_prior = [p.alpha, p.beta, p.gamma];
            let decisive_post = [
                p.alpha + c.reversed as f64,
                p.beta + c.false_tie as f64,
                p.gamma + c.correct_decisive as f64,
            ];
            let tie_prior = [p.delta, p.epsilon];
            let tie_post = [
                p.delta + c.false_decisive as f64,
                p.epsilon + c.correct_tie as f64,
            ];
            ln_dirichlet_norm(&decisive_post) - ln_dirichlet_norm(&decisive_prior)
                + ln_dirichlet_norm(&tie_post)
                - ln_dirichlet_norm(&tie_prior)
        })
        .sum()
}

/// Exact graph posterior with rates integrated out, by enumeration of all `3^D` graphs.
pub fn collapsed_exact_posterior(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    prior: &GraphPrior,
    priors: &[ErrorPriors],
    max_dyads: usize,
) -> Result<ExactPosterior> {
    check_dims(reports, mask, None)?;
    check_rates_len(priors, reports.n_informants())?;
    let d = reports.n_dyads();
    if d > max_dyads {
        return Err(Error::TooManyDyads {
            dyads: d,
            max: max_dyads,
        });
    }
    let log_prior = prior.state_probs().as_array().map(f64::ln);
    let mut table: Vec<(DyadStateVector, f64)> = enumerate_graphs(d)
        .map(|xi| {
            let lp: f64 = xi.iter().map(|s| log_prior[s.slot()]).sum();
            let ll = collapsed_from_counts(reports, mask, &xi, priors);
            (xi, lp + ll)
        })
        .collect();
    let max = table
        .iter()
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (_, l) in table.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    let mut marginals = vec![[0.0; 3]; d];
    let joint: Vec<JointEntry> = table
        .into_iter()
        .map(|(xi, w)| {
            let probability = w / total;
            for (m, s) in marginals.iter_mut().zip(xi.iter()) {
                m[s.slot()] += probability;
            }
            JointEntry { xi, probability }
        })
        .collect();
    Ok(ExactPosterior {
        marginals: marginals.into_iter().map(StateProbs::from_array).collect(),
        joint: Some(joint),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_error_priors;
    use approx::assert_relative_eq;
    use DyadState::{Minus, Plus, Tie};

    fn priors_1_1_8_and_1_9() -> ErrorPriors {
        ErrorPriors::new(1.0, 1.0, 8.0, 1.0, 9.0).unwrap()
    }

    /// Midpoint rule over the simplex `{phi, tau >= 0, phi + tau <= 1}` for a Dir(a, b, c) density.
    fn simplex_expectation(a: f64, b: f64, c: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = 1200;
        let h = 1.0 / n as f64;
        let norm = (ln_gamma(a + b + c) - ln_gamma(a) - ln_gamma(b) - ln_gamma(c)).exp();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n - i {
                let phi = (i as f64 + 0.5) * h;
                let tau = (j as f64 + 0.5) * h;
                let rest = 1.0 - phi - tau;
                if rest <= 0.0 {
                    continue;
                }
                let dens = norm * phi.powf(a - 1.0) * tau.powf(b - 1.0) * rest.powf(c - 1.0);
                total += dens * f(phi, tau) * h * h;
            }
        }
        total
    }

    fn beta_expectation(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        let norm = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)).exp();
        (0..n)
            .map(|i| {
                let w = (i as f64 + 0.5) * h;
                norm * w.powf(a - 1.0) * (1.0 - w).powf(b - 1.0) * f(w) * h
            })
            .sum()
    }

    #[test]
    fn quadrature_checks_collapsed_marginals() {
        // E[1 - phi - tau] under Dir(1,1,8) and E[1 - omega] under Beta(1,9)
        let correct = simplex_expectation(1.0, 1.0, 8.0, |p, t| 1.0 - p - t);
        assert!((correct - 0.8).abs() < 2e-3, "{correct}");
        let tie = beta_expectation(1.0, 9.0, |w| 1.0 - w);
        assert!((tie - 0.9).abs() < 1e-6, "{tie}");
        let tau = simplex_expectation(1.0, 1.0, 8.0, |_, t| t);
        assert!((tau - 0.1).abs() < 2e-3, "{tau}");

        let p = [priors_1_1_8_and_1_9()];
        let x = ReportMatrix::new(1, 1, vec![Plus]).unwrap();
        let z = InclusionMask::all_observed(1, 1);
        let correct_ll =
            collapsed_log_marginal_likelihood(&x, &z, &DyadStateVector::new(vec![Plus]), &p)
                .unwrap();
        assert_relative_eq!(correct_ll.exp(), 0.8, epsilon = 1e-12);

        let x = ReportMatrix::new(1, 1, vec![Tie]).unwrap();
        let tie_ll =
            collapsed_log_marginal_likelihood(&x, &z, &DyadStateVector::new(vec![Tie]), &p)
                .unwrap();
        assert_relative_eq!(tie_ll.exp(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn collapsed_with_two_reports_matches_quadrature() {
        // one informant, two decisive dyads: one correct, one reversed
        let p = [priors_1_1_8_and_1_9()];
        let x = ReportMatrix::new(1, 2, vec![Plus, Plus]).unwrap();
        let z = InclusionMask::all_observed(1, 2);
        let xi = DyadStateVector::new(vec![Plus, Minus]);
        let exact = collapsed_log_marginal_likelihood(&x, &z, &xi, &p)
            .unwrap()
            .exp();
        let numeric = simplex_expectation(1.0, 1.0, 8.0, |phi, tau| phi * (1.0 - phi - tau));
        assert!((exact - numeric).abs() < 1e-3, "{exact} vs {numeric}");
    }

    #[test]
    fn no_counts_gives_zero_log_marginal() {
        let p = build_error_priors(0.2, 10.0, 2).unwrap();
        let x = ReportMatrix::filled(2, 3);
        let z = InclusionMask::none_observed(2, 3);
        let xi = DyadStateVector::new(vec![Plus, Tie, Minus]);
        assert_eq!(
            collapsed_log_marginal_likelihood(&x, &z, &xi, &p).unwrap(),
            0.0
        );
    }

    #[test]
    fn hand_checked_single_tie_report() {
        // numerators 0.25 * E[tau] = 0.025 twice, 0.5 * E[1 - omega] = 0.45
        let prior = GraphPrior::new(0.5).unwrap();
        let x = ReportMatrix::new(1, 1, vec![Tie]).unwrap();
        let z = InclusionMask::all_observed(1, 1);
        let post =
            collapsed_exact_posterior(&x, &z, &prior, &[priors_1_1_8_and_1_9()], 10).unwrap();
        let m = post.marginals[0];
        assert!((m.tie - 0.9).abs() < 1e-9);
        assert!((m.plus - 0.05).abs() < 1e-9);
        assert!((m.minus - 0.05).abs() < 1e-9);
    }

    #[test]
    fn fixed_error_examples() {
        let prior = GraphPrior::new(0.5).unwrap();
        let r = [ErrorRates::new(0.1, 0.1, 0.3).unwrap()];
        let x = ReportMatrix::new(1, 1, vec![Plus]).unwrap();
        let z = InclusionMask::all_observed(1, 1);
        let post = exact_fixed_error_posterior(&x, &z, &r, &prior).unwrap();
        assert_relative_eq!(post.marginals[0].plus, 8.0 / 15.0, epsilon = 1e-12);
        assert_relative_eq!(post.marginals[0].minus, 1.0 / 15.0, epsilon = 1e-12);
        assert_relative_eq!(post.marginals[0].tie, 6.0 / 15.0, epsilon = 1e-12);

        let none = InclusionMask::none_observed(1, 1);
        let post = exact_fixed_error_posterior(&x, &none, &r, &prior).unwrap();
        assert_eq!(post.marginals[0], prior.state_probs());

        let perfect = [ErrorRates::new(0.0, 0.0, 0.0).unwrap()];
        let post = exact_fixed_error_posterior(&x, &z, &perfect, &prior).unwrap();
        assert_eq!(post.marginals[0].as_array(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn fixed_error_joint_is_product_and_normalized() {
        let prior = GraphPrior::new(0.3).unwrap();
        let r = [
            ErrorRates::new(0.1, 0.1, 0.3).unwrap(),
            ErrorRates::new(0.2, 0.05, 0.1).unwrap(),
        ];
        let x = ReportMatrix::new(2, 3, vec![Plus, Tie, Minus, Minus, Tie, Plus]).unwrap();
        let mut z = InclusionMask::all_observed(2, 3);
        z.set(0, 1, false);
        let post = exact_fixed_error_posterior(&x, &z, &r, &prior).unwrap();
        assert!((post.joint_total().unwrap() - 1.0).abs() < 1e-9);
        for m in &post.marginals {
            assert!((m.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_data_returns_prior() {
        let prior = GraphPrior::new(0.5).unwrap();
        let p = build_error_priors(0.2, 10.0, 2).unwrap();
        let x = ReportMatrix::filled(2, 3);
        let z = InclusionMask::none_observed(2, 3);
        let post = collapsed_exact_posterior(&x, &z, &prior, &p, 10).unwrap();
        for m in post.marginals {
            assert!(m.max_abs_diff(&prior.state_probs()) < 1e-12);
        }
    }

    #[test]
    fn refuses_oversized_enumeration() {
        let prior = GraphPrior::new(0.5).unwrap();
        let p = build_error_priors(0.2, 10.0, 1).unwrap();
        let x = ReportMatrix::filled(1, 15);
        let z = InclusionMask::all_observed(1, 15);
        assert_eq!(
            collapsed_exact_posterior(&x, &z, &prior, &p, DEFAULT_MAX_DYADS),
            Err(Error::TooManyDyads { dyads: 15, max: 10 })
        );
    }

    #[test]
    fn disjoint_informants_factorize() {
        // informant 0 sees only dyad 0, informant 1 only dyad 1
        let prior = GraphPrior::new(0.5).unwrap();
        let p = [
            priors_1_1_8_and_1_9(),
            ErrorPriors::new(2.0, 1.0, 6.0, 1.5, 7.0).unwrap(),
        ];
        let x = ReportMatrix::new(2, 2, vec![Plus, Tie, Tie, Minus]).unwrap();
        let z = InclusionMask::new(2, 2, vec![true, false, false, true]).unwrap();
        let both = collapsed_exact_posterior(&x, &z, &prior, &p, 10).unwrap();

        let x0 = ReportMatrix::new(1, 1, vec![Plus]).unwrap();
        let x1 = ReportMatrix::new(1, 1, vec![Minus]).unwrap();
        let z1 = InclusionMask::all_observed(1, 1);
        let first = collapsed_exact_posterior(&x0, &z1, &prior, &p[..1], 10).unwrap();
        let second = collapsed_exact_posterior(&x1, &z1, &prior, &p[1..], 10).unwrap();
        assert!(both.marginals[0].max_abs_diff(&first.marginals[0]) < 1e-12);
        assert!(both.marginals[1].max_abs_diff(&second.marginals[0]) < 1e-12);
        for e in both.joint.as_ref().unwrap() {
            let product = first.marginals[0].get(e.xi[0]) * second.marginals[0].get(e.xi[1]);
            assert!((e.probability - product).abs() < 1e-12);
        }
    }

    #[test]
    fn concentrated_priors_approach_fixed_error_oracle() {
        let prior = GraphPrior::new(0.5).unwrap();
        let rates = [
            ErrorRates::new(0.1, 0.1, 0.3).unwrap(),
            ErrorRates::new(0.15, 0.05, 0.2).unwrap(),
        ];
        let scale = 1e6;
        let priors: Vec<ErrorPriors> = rates
            .iter()
            .map(|r| {
                ErrorPriors::new(
                    scale * r.phi,
                    scale * r.tau,
                    scale * r.correct_decisive(),
                    scale * r.omega,
                    scale * (1.0 - r.omega),
                )
                .unwrap()
            })
            .collect();
        let x = ReportMatrix::new(2, 3, vec![Plus, Tie, Minus, Plus, Plus, Tie]).unwrap();
        let z = InclusionMask::all_observed(2, 3);
        let fixed = exact_fixed_error_posterior(&x, &z, &rates, &prior).unwrap();
        let collapsed = collapsed_exact_posterior(&x, &z, &prior, &priors, 10).unwrap();
        assert!((collapsed.joint_total().unwrap() - 1.0).abs() < 1e-9);
        for (a, b) in fixed.marginals.iter().zip(&collapsed.marginals) {
            assert!(a.max_abs_diff(b) < 1e-3);
        }
    }

    #[test]
    fn informant_permutation_leaves_oracles_unchanged() {
        let prior = GraphPrior::new(0.4).unwrap();
        let p = [
            priors_1_1_8_and_1_9(),
            ErrorPriors::new(2.0, 1.0, 6.0, 1.5, 7.0).unwrap(),
        ];
        let r = [
            ErrorRates::new(0.1, 0.1, 0.3).unwrap(),
            ErrorRates::new(0.15, 0.05, 0.2).unwrap(),
        ];
        let x = ReportMatrix::new(2, 3, vec![Plus, Tie, Minus, Minus, Plus, Tie]).unwrap();
        let z = InclusionMask::new(2, 3, vec![true, true, false, true, true, true]).unwrap();
        let xs = ReportMatrix::new(2, 3, vec![Minus, Plus, Tie, Plus, Tie, Minus]).unwrap();
        let zs = InclusionMask::new(2, 3, vec![true, true, true, true, true, false]).unwrap();
        let ps = [p[1], p[0]];
        let rs = [r[1], r[0]];

        let a = collapsed_exact_posterior(&x, &z, &prior, &p, 10).unwrap();
        let b = collapsed_exact_posterior(&xs, &zs, &prior, &ps, 10).unwrap();
        for (u, v) in a.marginals.iter().zip(&b.marginals) {
            assert!(u.max_abs_diff(v) < 1e-12);
        }
        let a = exact_fixed_error_posterior(&x, &z, &r, &prior).unwrap();
        let b = exact_fixed_error_posterior(&xs, &zs, &rs, &prior).unwrap();
        for (u, v) in a.marginals.iter().zip(&b.marginals) {
            assert!(u.max_abs_diff(v) < 1e-12);
        }
    }
}
