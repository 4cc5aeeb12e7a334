//! Systematic-scan Gibbs sampler over the latent graph and informant error rates.
//!
//! One scan draws every dyad state from its categorical full conditional
//! given the current rates (in canonical dyad order), then redraws every
//! informant's `(phi, tau)` and `omega` from their Dirichlet full conditionals
//! given the freshly drawn graph.
//!
//! Randomness: each chain owns a `ChaCha8Rng` seeded with
//! [`chain_seed`]`(root_seed, chain_index)`, a SplitMix64 mix of the two.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    check_dims, DyadIndex, DyadState, DyadStateVector, InclusionMask, ReportMatrix,
};
use crate::model::{
    check_rates_len, dyad_likelihood, tally, ErrorPriors, ErrorRates, GraphPrior, InformantCounts,
    StateProbs,
};

/// Full conditional of one dyad's state, `(p_plus, p_minus, p_zero)`.
pub type DyadConditional = StateProbs;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of chain `chain` under root seed `root`.
pub fn chain_seed(root: u64, chain: usize) -> u64 {
    splitmix64(root ^ splitmix64(chain as u64))
}

pub fn chain_rng(root: u64, chain: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(chain_seed(root, chain))
}

/// Normalizes log masses in `DyadState::ALL` order.
fn normalize_log_masses(log_mass: [f64; 3], dyad: usize) -> Result<DyadConditional> {
    let max = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::DegenerateConditional { dyad });
    }
    let w = log_mass.map(|l| (l - max).exp());
    let psi: f64 = w.iter().sum();
    Ok(StateProbs::from_array(w.map(|v| v / psi)))
}

/// Full conditional of a dyad's state given every informant's report on it.
///
/// Unobserved reports contribute a factor of one.
pub fn dyad_conditional(
    dyad: DyadIndex,
    reports: &[DyadState],
    observed: &[bool],
    rates: &[ErrorRates],
    prior: &GraphPrior,
) -> Result<DyadConditional> {
    if reports.len() != observed.len() {
        return Err(Error::DimensionMismatch {
            what: "observedness column",
            expected: reports.len(),
            found: observed.len(),
        });
    }
    check_rates_len(rates, reports.len())?;
    let prior_probs = prior.state_probs();
    let mut log_mass = [0.0; 3];
    for (slot, &state) in DyadState::ALL.iter().enumerate() {
        let mut l = prior_probs.get(state).ln();
        for ((&x, &z), r) in reports.iter().zip(observed).zip(rates) {
            if z {
                l += dyad_likelihood(x, state, r).ln();
            }
        }
        log_mass[slot] = l;
    }
    normalize_log_masses(log_mass, dyad.flat)
}

/// Inverse-CDF draw over `(plus, minus, tie)` in that order.
pub fn draw_dyad_state<R: Rng + ?Sized>(cond: &DyadConditional, rng: &mut R) -> DyadState {
    let u: f64 = rng.random();
    if u < cond.plus {
        DyadState::Plus
    } else if u < cond.plus + cond.minus {
        DyadState::Minus
    } else if cond.tie > 0.0 || (cond.plus + cond.minus) == 0.0 {
        DyadState::Tie
    } else if cond.minus > 0.0 {
        // rounding left u beyond plus + minus with no tie mass
        DyadState::Minus
    } else {
        DyadState::Plus
    }
}

fn check_concentrations(concentrations: &[f64]) -> Result<()> {
    for &a in concentrations {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidConcentration {
                name: "dirichlet",
                value: a,
            });
        }
    }
    Ok(())
}

/// Fills `out` with a Dirichlet draw by normalizing independent gamma variates.
///
/// Works on the log scale, with `G(a) = G(a + 1) * U^(1/a)` for `a < 1`,
/// so very small shapes do not underflow to an all-zero vector.
fn fill_dirichlet<R: Rng + ?Sized>(
    concentrations: &[f64],
    out: &mut [f64],
    rng: &mut R,
) -> Result<()> {
    check_concentrations(concentrations)?;
    for (a, o) in concentrations.iter().zip(out.iter_mut()) {
        *o = if *a < 1.0 {
            let g = Gamma::new(a + 1.0, 1.0)
                .map_err(|_| Error::InvalidConcentration {
                    name: "dirichlet",
                    value: *a,
                })?
                .sample(rng);
            let u: f64 = rng.random();
            g.ln() + u.ln() / a
        } else {
            Gamma::new(*a, 1.0)
                .map_err(|_| Error::InvalidConcentration {
                    name: "dirichlet",
                    value: *a,
                })?
                .sample(rng)
                .ln()
        };
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

/// One draw from `Dirichlet(concentrations)`.
pub fn sample_dirichlet<R: Rng + ?Sized>(concentrations: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if concentrations.is_empty() {
        return Err(Error::Invalid(
            "dirichlet needs at least one concentration".into(),
        ));
    }
    let mut out = vec![0.0; concentrations.len()];
    fill_dirichlet(concentrations, &mut out, rng)?;
    Ok(out)
}

/// Posterior concentrations for `(phi, tau, 1 - phi - tau)`.
pub fn decisive_posterior(counts: &InformantCounts, priors: &ErrorPriors) -> [f64; 3] {
    [
        priors.alpha + counts.reversed as f64,
        priors.beta + counts.false_tie as f64,
        priors.gamma + counts.correct_decisive as f64,
    ]
}

/// Posterior concentrations for `(omega, 1 - omega)`.
pub fn tie_posterior(counts: &InformantCounts, priors: &ErrorPriors) -> [f64; 2] {
    [
        priors.delta + counts.false_decisive as f64,
        priors.epsilon + counts.correct_tie as f64,
    ]
}

/// Draws `(phi, tau)` from their conjugate Dirichlet full conditional.
pub fn update_decisive_errors<R: Rng + ?Sized>(
    counts: &InformantCounts,
    priors: &ErrorPriors,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut draw = [0.0; 3];
    fill_dirichlet(&decisive_posterior(counts, priors), &mut draw, rng)?;
    Ok((draw[0], draw[1]))
}

/// Draws `omega` from its conjugate Beta full conditional.
pub fn update_tie_errors<R: Rng + ?Sized>(
    counts: &InformantCounts,
    priors: &ErrorPriors,
    rng: &mut R,
) -> Result<f64> {
    let mut draw = [0.0; 2];
    fill_dirichlet(&tie_posterior(counts, priors), &mut draw, rng)?;
    Ok(draw[0])
}

fn draw_rates<R: Rng + ?Sized>(
    counts: &InformantCounts,
    priors: &ErrorPriors,
    rng: &mut R,
) -> Result<ErrorRates> {
    let (phi, tau) = update_decisive_errors(counts, priors, rng)?;
    let omega = update_tie_errors(counts, priors, rng)?;
    Ok(ErrorRates { phi, tau, omega })
}

/// One iterate of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub xi: DyadStateVector,
    pub rates: Vec<ErrorRates>,
    pub iteration: u64,
}

/// Draws the starting state from the priors: graph i.i.d. per dyad, then
/// each informant's `(phi, tau)` and `omega`.
pub fn init_chain<R: Rng + ?Sized>(
    n_dyads: usize,
    prior: &GraphPrior,
    priors: &[ErrorPriors],
    rng: &mut R,
) -> Result<ChainState> {
    let probs = prior.state_probs();
    let xi = (0..n_dyads).map(|_| draw_dyad_state(&probs, rng)).collect();
    let empty = InformantCounts::default();
    let rates = priors
        .iter()
        .map(|p| draw_rates(&empty, p, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainState {
        xi,
        rates,
        iteration: 0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub n_chains: usize,
    pub seed: u64,
    /// Holds the error rates fixed instead of sampling them.
    pub clamp_error_rates: Option<Vec<ErrorRates>>,
}

impl SamplerConfig {
    pub fn new(n_iterations: u64, burn_in: u64, thin: u64, n_chains: usize, seed: u64) -> Self {
        SamplerConfig {
            n_iterations,
            burn_in,
            thin,
            n_chains,
            seed,
            clamp_error_rates: None,
        }
    }

    pub fn with_clamped_rates(mut self, rates: Vec<ErrorRates>) -> Self {
        self.clamp_error_rates = Some(rates);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be positive".into()));
        }
        if self.burn_in >= self.n_iterations {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} must be smaller than iterations {}",
                self.burn_in, self.n_iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidConfig("thin must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("chains must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether scan `iteration` (1-based) is kept.
    pub fn retains(&self, iteration: u64) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in - 1).is_multiple_of(self.thin)
    }

    pub fn retained_per_chain(&self) -> u64 {
        (self.n_iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Log-likelihood lookup `[truth slot][report slot]` for one informant.
fn log_table(rates: &ErrorRates) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for truth in DyadState::ALL {
        for report in DyadState::ALL {
            t[truth.slot()][report.slot()] = dyad_likelihood(report, truth, rates).ln();
        }
    }
    t
}

/// A single chain bound to its data.
pub struct Chain<'a> {
    reports: &'a ReportMatrix,
    mask: &'a InclusionMask,
    log_prior: [f64; 3],
    priors: &'a [ErrorPriors],
    clamped: bool,
    state: ChainState,
    rng: ChaCha8Rng,
}

impl<'a> Chain<'a> {
    pub fn new(
        reports: &'a ReportMatrix,
        mask: &'a InclusionMask,
        prior: &GraphPrior,
        priors: &'a [ErrorPriors],
        clamp: Option<&[ErrorRates]>,
        mut rng: ChaCha8Rng,
    ) -> Result<Self> {
        check_dims(reports, mask, None)?;
        check_rates_len(priors, reports.n_informants())?;
        let mut state = init_chain(reports.n_dyads(), prior, priors, &mut rng)?;
        if let Some(rates) = clamp {
            check_rates_len(rates, reports.n_informants())?;
            state.rates = rates.to_vec();
        }
        Ok(Chain {
            reports,
            mask,
            log_prior: prior.state_probs().as_array().map(f64::ln),
            priors,
            clamped: clamp.is_some(),
            state,
            rng,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// One full systematic scan.
    pub fn step(&mut self) -> Result<()> {
        let tables: Vec<[[f64; 3]; 3]> = self.state.rates.iter().map(log_table).collect();
        let m = self.reports.n_informants();
        for d in 0..self.reports.n_dyads() {
            let mut log_mass = self.log_prior;
            for (k, table) in tables.iter().enumerate().take(m) {
                if self.mask.is_observed(k, d) {
                    let x = self.reports.get(k, d).slot();
                    for (slot, l) in log_mass.iter_mut().enumerate() {
                        *l += table[slot][x];
                    }
                }
            }
            let cond = normalize_log_masses(log_mass, d)?;
            self.state.xi.as_mut_slice()[d] = draw_dyad_state(&cond, &mut self.rng);
        }
        if !self.clamped {
            let counts = tally(self.reports, self.mask, &self.state.xi);
            let mut decisive = Vec::with_capacity(m);
            for (c, p) in counts.iter().zip(self.priors) {
                decisive.push(update_decisive_errors(c, p, &mut self.rng)?);
            }
            let mut omegas = Vec::with_capacity(m);
            for (c, p) in counts.iter().zip(self.priors) {
                omegas.push(update_tie_errors(c, p, &mut self.rng)?);
            }
            for ((r, (phi, tau)), omega) in self.state.rates.iter_mut().zip(decisive).zip(omegas) {
                *r = ErrorRates { phi, tau, omega };
            }
        }
        self.state.iteration += 1;
        Ok(())
    }
}

/// Runs every chain and returns the retained states of each, in chain order.
pub fn gibbs_run(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    prior: &GraphPrior,
    priors: &[ErrorPriors],
    config: &SamplerConfig,
) -> Result<Vec<Vec<ChainState>>> {
    config.validate()?;
    check_dims(reports, mask, None)?;
    check_rates_len(priors, reports.n_informants())?;
    if let Some(clamp) = &config.clamp_error_rates {
        check_rates_len(clamp, reports.n_informants())?;
    }
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut chain = Chain::new(
                reports,
                mask,
                prior,
                priors,
                config.clamp_error_rates.as_deref(),
                chain_rng(config.seed, c),
            )?;
            let mut kept = Vec::with_capacity(config.retained_per_chain() as usize);
            for it in 1..=config.n_iterations {
                chain.step()?;
                if config.retains(it) {
                    kept.push(chain.state().clone());
                }
            }
            Ok(kept)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_error_priors;
    use approx::assert_relative_eq;
    use DyadState::{Minus, Plus, Tie};

    fn rates(phi: f64, tau: f64, omega: f64) -> ErrorRates {
        ErrorRates::new(phi, tau, omega).unwrap()
    }

    fn dyad0() -> DyadIndex {
        DyadIndex::new(2, 0, 1).unwrap()
    }

    #[test]
    fn single_informant_conditional() {
        // masses 0.25*0.8, 0.25*0.1, 0.5*0.3 -> (8/15, 1/15, 6/15)
        let prior = GraphPrior::new(0.5).unwrap();
        let r = [rates(0.1, 0.1, 0.3)];
        let c = dyad_conditional(dyad0(), &[Plus], &[true], &r, &prior).unwrap();
        assert_relative_eq!(c.plus, 8.0 / 15.0, epsilon = 1e-12);
        assert_relative_eq!(c.minus, 1.0 / 15.0, epsilon = 1e-12);
        assert_relative_eq!(c.tie, 6.0 / 15.0, epsilon = 1e-12);
        assert!((c.sum() - 1.0).abs() < 1e-12);

        let unobserved = dyad_conditional(dyad0(), &[Plus], &[false], &r, &prior).unwrap();
        assert_relative_eq!(unobserved.plus, 0.25, epsilon = 1e-12);
        assert_relative_eq!(unobserved.minus, 0.25, epsilon = 1e-12);
        assert_relative_eq!(unobserved.tie, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn agreeing_informants_sharpen_conditional() {
        let prior = GraphPrior::new(0.5).unwrap();
        let r = rates(0.1, 0.1, 0.3);
        let one = dyad_conditional(dyad0(), &[Plus], &[true], &[r], &prior).unwrap();
        let two = dyad_conditional(dyad0(), &[Plus, Plus], &[true, true], &[r, r], &prior).unwrap();
        // masses 0.25*0.64, 0.25*0.01, 0.5*0.09
        let psi = 0.16 + 0.0025 + 0.045;
        assert_relative_eq!(two.plus, 0.16 / psi, epsilon = 1e-12);
        assert!(two.plus > one.plus);
    }

    #[test]
    fn conditional_rejects_degenerate_and_mismatched_input() {
        let prior = GraphPrior::new(0.5).unwrap();
        // a perfect informant reporting +1 and another reporting -1: no state survives
        let perfect = rates(0.0, 0.0, 0.0);
        let err = dyad_conditional(
            dyad0(),
            &[Plus, Minus],
            &[true, true],
            &[perfect, perfect],
            &prior,
        );
        assert_eq!(err, Err(Error::DegenerateConditional { dyad: 0 }));
        assert!(dyad_conditional(dyad0(), &[Plus], &[true, true], &[perfect], &prior).is_err());
        assert!(dyad_conditional(dyad0(), &[Plus], &[true], &[], &prior).is_err());
    }

    #[test]
    fn degenerate_draws() {
        let mut rng = chain_rng(1, 0);
        let plus = StateProbs::from_array([1.0, 0.0, 0.0]);
        let tie = StateProbs::from_array([0.0, 0.0, 1.0]);
        for _ in 0..1000 {
            assert_eq!(draw_dyad_state(&plus, &mut rng), Plus);
            assert_eq!(draw_dyad_state(&tie, &mut rng), Tie);
        }
    }

    #[test]
    fn draw_frequencies_match_conditional() {
        let cond = StateProbs::from_array([8.0 / 15.0, 1.0 / 15.0, 6.0 / 15.0]);
        let mut rng = chain_rng(7, 0);
        let mut hits = [0usize; 3];
        let n = 100_000;
        for _ in 0..n {
            hits[draw_dyad_state(&cond, &mut rng).slot()] += 1;
        }
        for (h, p) in hits.iter().zip(cond.as_array()) {
            assert!((*h as f64 / n as f64 - p).abs() < 0.01);
        }
    }

    #[test]
    fn dirichlet_moments() {
        let mut rng = chain_rng(11, 0);
        let n = 100_000;
        let mut mean = [0.0; 3];
        for _ in 0..n {
            let d = sample_dirichlet(&[1.0, 1.0, 1.0], &mut rng).unwrap();
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&v| v >= 0.0));
            for (m, v) in mean.iter_mut().zip(&d) {
                *m += v / n as f64;
            }
        }
        for m in mean {
            assert!((m - 1.0 / 3.0).abs() < 0.01, "{m}");
        }

        let (a, b) = (2.0, 10.0);
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_dirichlet(&[a, b], &mut rng).unwrap()[0])
            .collect();
        let mu = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expected = a * b / ((a + b).powi(2) * (a + b + 1.0));
        assert!((var / expected - 1.0).abs() < 0.10, "{var} vs {expected}");

        let big = sample_dirichlet(&[1e6, 1.0, 1.0], &mut rng).unwrap();
        assert!(big[0] > 0.999);

        let tiny = sample_dirichlet(&[1e-4, 1e-4], &mut rng).unwrap();
        assert!((tiny.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(tiny.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dirichlet_rejects_bad_concentrations() {
        let mut rng = chain_rng(0, 0);
        assert!(sample_dirichlet(&[1.0, 0.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[1.0, -2.0], &mut rng).is_err());
        assert!(sample_dirichlet(&[f64::NAN], &mut rng).is_err());
        assert!(sample_dirichlet(&[], &mut rng).is_err());
    }

    #[test]
    fn conjugate_updates() {
        let priors = ErrorPriors::new(1.0, 1.0, 10.0, 2.0, 10.0).unwrap();
        let counts = InformantCounts {
            correct_decisive: 5,
            reversed: 2,
            false_tie: 3,
            false_decisive: 1,
            correct_tie: 7,
        };
        let post = decisive_posterior(&counts, &priors);
        assert_eq!(post, [3.0, 4.0, 15.0]);
        assert_relative_eq!(post[0] / post.iter().sum::<f64>(), 3.0 / 22.0);
        assert_eq!(tie_posterior(&counts, &priors), [3.0, 17.0]);
        let zero = InformantCounts::default();
        assert_eq!(decisive_posterior(&zero, &priors), [1.0, 1.0, 10.0]);
        assert_eq!(tie_posterior(&zero, &priors), [2.0, 10.0]);

        // empirical means of the draws
        let mut rng = chain_rng(3, 0);
        let n = 50_000;
        let (mut phi, mut omega) = (0.0, 0.0);
        for _ in 0..n {
            phi += update_decisive_errors(&counts, &priors, &mut rng)
                .unwrap()
                .0;
            omega += update_tie_errors(&counts, &priors, &mut rng).unwrap();
        }
        assert!((phi / n as f64 - 3.0 / 22.0).abs() < 0.005);
        assert!((omega / n as f64 - 0.15).abs() < 0.005);
    }

    #[test]
    fn init_chain_behaviour() {
        let priors = build_error_priors(0.2, 10.0, 3).unwrap();
        let sticky = GraphPrior::new(1.0 - 1e-9).unwrap();
        let mut rng = chain_rng(5, 0);
        let s = init_chain(45, &sticky, &priors, &mut rng).unwrap();
        assert!(s.xi.iter().all(|&x| x == Tie));
        assert_eq!(s.rates.len(), 3);

        let prior = GraphPrior::new(0.5).unwrap();
        let a = init_chain(6, &prior, &priors, &mut chain_rng(9, 2)).unwrap();
        let b = init_chain(6, &prior, &priors, &mut chain_rng(9, 2)).unwrap();
        assert_eq!(a, b);

        let mut rng = chain_rng(13, 0);
        let (mut ties, mut total) = (0usize, 0usize);
        for _ in 0..10_000 {
            let s = init_chain(1, &prior, &priors, &mut rng).unwrap();
            ties += s.xi.iter().filter(|&&x| x == Tie).count();
            total += s.xi.len();
        }
        assert!((ties as f64 / total as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn config_validation_and_retention() {
        assert!(SamplerConfig::new(0, 0, 1, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(10, 10, 1, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(10, 0, 0, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(10, 0, 1, 0, 0).validate().is_err());
        let c = SamplerConfig::new(200_000, 20_000, 10, 2, 0);
        assert_eq!(c.retained_per_chain(), 18_000);
        let c = SamplerConfig::new(10, 3, 4, 1, 0);
        let kept: Vec<u64> = (1..=10).filter(|&i| c.retains(i)).collect();
        assert_eq!(kept, vec![4, 8]);
        assert_eq!(c.retained_per_chain(), 2);
    }

    fn toy_data() -> (ReportMatrix, InclusionMask) {
        let x = ReportMatrix::new(2, 3, vec![Plus, Tie, Minus, Plus, Plus, Tie]).unwrap();
        let mut z = InclusionMask::all_observed(2, 3);
        z.set(1, 2, false);
        (x, z)
    }

    #[test]
    fn run_bookkeeping_and_determinism() {
        let (x, z) = toy_data();
        let prior = GraphPrior::new(0.4).unwrap();
        let priors = build_error_priors(0.2, 10.0, 2).unwrap();
        let one = SamplerConfig::new(1, 0, 1, 3, 99);
        let runs = gibbs_run(&x, &z, &prior, &priors, &one).unwrap();
        assert_eq!(runs.len(), 3);
        assert!(runs.iter().all(|c| c.len() == 1 && c[0].iteration == 1));

        let cfg = SamplerConfig::new(500, 100, 7, 2, 42);
        let a = gibbs_run(&x, &z, &prior, &priors, &cfg).unwrap();
        let b = gibbs_run(&x, &z, &prior, &priors, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        for state in a.iter().flatten() {
            for r in &state.rates {
                assert!(ErrorRates::new(r.phi, r.tau, r.omega).is_ok());
            }
        }
    }

    #[test]
    fn hidden_cells_are_never_read() {
        let (x, z) = toy_data();
        let mut flipped = x.clone();
        flipped.set(1, 2, Plus);
        let prior = GraphPrior::new(0.4).unwrap();
        let priors = build_error_priors(0.2, 10.0, 2).unwrap();
        let cfg = SamplerConfig::new(300, 0, 1, 2, 8);
        assert_eq!(
            gibbs_run(&x, &z, &prior, &priors, &cfg).unwrap(),
            gibbs_run(&flipped, &z, &prior, &priors, &cfg).unwrap()
        );
    }

    #[test]
    fn clamped_rates_stay_fixed() {
        let (x, z) = toy_data();
        let prior = GraphPrior::new(0.4).unwrap();
        let priors = build_error_priors(0.2, 10.0, 2).unwrap();
        let clamp = vec![rates(0.1, 0.1, 0.3), rates(0.2, 0.0, 0.5)];
        let cfg = SamplerConfig::new(50, 0, 1, 1, 8).with_clamped_rates(clamp.clone());
        let run = gibbs_run(&x, &z, &prior, &priors, &cfg).unwrap();
        assert!(run[0].iter().all(|s| s.rates == clamp));

        let bad = SamplerConfig::new(50, 0, 1, 1, 8).with_clamped_rates(vec![clamp[0]]);
        assert!(gibbs_run(&x, &z, &prior, &priors, &bad).is_err());
    }

    #[test]
    fn clamped_dyad_marginals_match_conditional() {
        let (x, z) = toy_data();
        let prior = GraphPrior::new(0.4).unwrap();
        let priors = build_error_priors(0.2, 10.0, 2).unwrap();
        let clamp = vec![rates(0.1, 0.1, 0.3), rates(0.2, 0.05, 0.25)];
        let n = 50_000;
        let cfg = SamplerConfig::new(n, 0, 1, 1, 21).with_clamped_rates(clamp.clone());
        let run = gibbs_run(&x, &z, &prior, &priors, &cfg).unwrap();
        for d in 0..3 {
            let dyad = DyadIndex::new(3, [0, 0, 1][d], [1, 2, 2][d]).unwrap();
            let cond = dyad_conditional(dyad, &x.column(d), &z.column(d), &clamp, &prior).unwrap();
            for s in DyadState::ALL {
                let p = cond.get(s);
                let freq = run[0].iter().filter(|st| st.xi[d] == s).count() as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * se + 1e-12,
                    "dyad {d} {s}: {freq} vs {p}"
                );
            }
        }
    }

    #[test]
    fn chain_seeds_differ() {
        assert_ne!(chain_seed(0, 0), chain_seed(0, 1));
        assert_ne!(chain_seed(0, 1), chain_seed(1, 0));
    }
}
