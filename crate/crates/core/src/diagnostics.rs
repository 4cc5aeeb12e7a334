//! Post-processing of retained chain states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DyadState, DyadStateVector};
use crate::model::StateProbs;
use crate::sampler::ChainState;

/// Mean and 2.5/50/97.5% quantiles of one scalar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub mean: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub phi: ScalarSummary,
    pub tau: ScalarSummary,
    pub omega: ScalarSummary,
}

/// Split-chain R-hat per rate; `None` when there are too few draws.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRhat {
    pub phi: Option<f64>,
    pub tau: Option<f64>,
    pub omega: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub marginals: Vec<StateProbs>,
    pub map_graph: DyadStateVector,
    pub rates: Vec<RateSummary>,
    pub rhat: Vec<RateRhat>,
    /// Per-dyad cross-chain agreement, present with two or more chains.
    pub agreement: Option<Vec<f64>>,
    pub n_retained: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary of a pooled sample; the result does not depend on input order.
pub fn summarize_scalar(values: &[f64]) -> ScalarSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    ScalarSummary {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        q025: quantile(&sorted, 0.025),
        q50: quantile(&sorted, 0.5),
        q975: quantile(&sorted, 0.975),
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Classical split-chain potential scale reduction factor.
///
/// Each chain is truncated to the shortest length, an odd middle draw is
/// dropped, and the halves are treated as separate chains. Returns `None`
/// with fewer than two draws per half. Zero within-half variance with no
/// spread between halves gives exactly 1; results are floored at 1.
pub fn split_rhat(chains: &[Vec<f64>]) -> Option<f64> {
    let len = chains.iter().map(Vec::len).min()?;
    let half = len / 2;
    if half < 2 {
        return None;
    }
    let mut stats: Vec<(f64, f64)> = chains
        .iter()
        .flat_map(|c| {
            let c = &c[..len];
            [mean_var(&c[..half]), mean_var(&c[len - half..])]
        })
        .collect();
    // aggregate in a canonical order so chain order cannot change the bits
    stats.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let means: Vec<f64> = stats.iter().map(|s| s.0).collect();
    let n = half as f64;
    let within = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    let between = n * mean_var(&means).1;
    if within == 0.0 {
        return Some(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var_plus = (n - 1.0) / n * within + between / n;
    Some((var_plus / within).sqrt().max(1.0))
}

fn empirical_marginals<'a>(
    states: impl Iterator<Item = &'a ChainState>,
    d: usize,
) -> Vec<StateProbs> {
    let mut counts = vec![[0u64; 3]; d];
    let mut n = 0u64;
    for s in states {
        for (c, st) in counts.iter_mut().zip(s.xi.iter()) {
            c[st.slot()] += 1;
        }
        n += 1;
    }
    counts
        .into_iter()
        .map(|c| StateProbs::from_array(c.map(|v| v as f64 / n as f64)))
        .collect()
}

fn check_chains(chains: &[Vec<ChainState>]) -> Result<(usize, usize)> {
    let first = chains.iter().flatten().next().ok_or(Error::EmptyChains)?;
    if chains.iter().any(Vec::is_empty) {
        return Err(Error::EmptyChains);
    }
    let (d, m) = (first.xi.len(), first.rates.len());
    for s in chains.iter().flatten() {
        if s.xi.len() != d || s.rates.len() != m {
            return Err(Error::Invalid("chain states disagree in shape".into()));
        }
    }
    Ok((d, m))
}

/// Per-dyad agreement `1 - max_c TV(chain c marginal, pooled marginal)`.
pub fn dyad_agreement(chains: &[Vec<ChainState>]) -> Result<Vec<f64>> {
    let (d, _) = check_chains(chains)?;
    if chains.len() < 2 {
        return Err(Error::Invalid(
            "dyad agreement needs at least two chains".into(),
        ));
    }
    let pooled = empirical_marginals(chains.iter().flatten(), d);
    let per_chain: Vec<Vec<StateProbs>> = chains
        .iter()
        .map(|c| empirical_marginals(c.iter(), d))
        .collect();
    Ok((0..d)
        .map(|dyad| {
            let worst = per_chain
                .iter()
                .map(|m| {
                    let (a, b) = (m[dyad].as_array(), pooled[dyad].as_array());
                    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
                })
                .fold(0.0, f64::max);
            1.0 - worst
        })
        .collect())
}

pub fn summarize(chains: &[Vec<ChainState>]) -> Result<PosteriorSummary> {
    let (d, m) = check_chains(chains)?;
    let marginals = empirical_marginals(chains.iter().flatten(), d);
    let map_graph = marginals.iter().map(StateProbs::argmax).collect();

    let trace = |k: usize, pick: fn(&ChainState, usize) -> f64| -> Vec<Vec<f64>> {
        chains
            .iter()
            .map(|c| c.iter().map(|s| pick(s, k)).collect())
            .collect()
    };
    let picks: [fn(&ChainState, usize) -> f64; 3] = [
        |s, k| s.rates[k].phi,
        |s, k| s.rates[k].tau,
        |s, k| s.rates[k].omega,
    ];
    let mut rates = Vec::with_capacity(m);
    let mut rhat = Vec::with_capacity(m);
    for k in 0..m {
        let traces = picks.map(|p| trace(k, p));
        let summaries = traces.each_ref().map(|t| summarize_scalar(&t.concat()));
        let r = traces.each_ref().map(|t| split_rhat(t));
        rates.push(RateSummary {
            phi: summaries[0],
            tau: summaries[1],
            omega: summaries[2],
        });
        rhat.push(RateRhat {
            phi: r[0],
            tau: r[1],
            omega: r[2],
        });
    }
    let agreement = if chains.len() >= 2 {
        Some(dyad_agreement(chains)?)
    } else {
        None
    };
    Ok(PosteriorSummary {
        marginals,
        map_graph,
        rates,
        rhat,
        agreement,
        n_retained: chains.iter().map(Vec::len).sum(),
    })
}

/// Fraction of dyads on which two graphs agree.
pub fn graph_agreement(a: &[DyadState], b: &[DyadState]) -> f64 {
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ErrorRates;
    use approx::assert_relative_eq;
    use DyadState::{Minus, Plus, Tie};

    fn state(xi: &[DyadState], phi: f64, it: u64) -> ChainState {
        ChainState {
            xi: DyadStateVector::new(xi.to_vec()),
            rates: vec![ErrorRates::new(phi, 0.1, 0.2).unwrap()],
            iteration: it,
        }
    }

    #[test]
    fn hand_built_chain_frequencies() {
        let chain: Vec<ChainState> = [Plus, Plus, Tie, Minus]
            .iter()
            .enumerate()
            .map(|(i, &s)| state(&[s], 0.1, i as u64 + 1))
            .collect();
        let s = summarize(&[chain]).unwrap();
        assert_eq!(s.marginals[0].as_array(), [0.5, 0.25, 0.25]);
        assert_eq!(s.map_graph[0], Plus);
        assert_eq!(s.n_retained, 4);
        assert!(s.agreement.is_none());
    }

    #[test]
    fn constant_chains() {
        let chain: Vec<ChainState> = (0..10).map(|i| state(&[Minus, Tie], 0.3, i)).collect();
        let s = summarize(&[chain.clone(), chain]).unwrap();
        assert_eq!(s.marginals[0].as_array(), [0.0, 1.0, 0.0]);
        assert_eq!(s.marginals[1].as_array(), [0.0, 0.0, 1.0]);
        assert_eq!(s.rhat[0].phi, Some(1.0));
        assert_eq!(s.rhat[0].omega, Some(1.0));
        assert!((s.rates[0].phi.mean - 0.3).abs() < 1e-15);
        assert_eq!(s.agreement, Some(vec![1.0, 1.0]));
    }

    #[test]
    fn identical_chains_give_unit_rhat() {
        // halves share mean and variance, so the split chains are interchangeable
        let seq = [0.1, 0.2, 0.3, 0.3, 0.2, 0.1];
        let trace = seq.to_vec();
        assert_eq!(split_rhat(&[trace.clone(), trace]), Some(1.0));
    }

    #[test]
    fn rhat_detects_disagreement() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
        assert!(split_rhat(&[a, b]).unwrap() > 2.0);
        assert_eq!(split_rhat(&[vec![0.1, 0.2, 0.3]]), None);
        assert_eq!(split_rhat(&[]), None);
    }

    #[test]
    fn rhat_matches_hand_computation() {
        // one chain split into [1, 2] and [3, 5]:
        // within = (0.5 + 2) / 2 = 1.25, between = 2 * var(1.5, 4) = 6.25
        // var+ = 0.5 * 1.25 + 6.25 / 2 = 3.75, rhat = sqrt(3.75 / 1.25) = sqrt(3)
        let r = split_rhat(&[vec![1.0, 2.0, 3.0, 5.0]]).unwrap();
        assert_relative_eq!(r, 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn agreement_examples() {
        let locked_plus: Vec<ChainState> = (0..5).map(|i| state(&[Plus], 0.1, i)).collect();
        let locked_minus: Vec<ChainState> = (0..5).map(|i| state(&[Minus], 0.1, i)).collect();
        let a = dyad_agreement(&[locked_plus.clone(), locked_minus]).unwrap();
        // pooled (0.5, 0.5, 0): each chain is 0.5 away in TV
        assert_relative_eq!(a[0], 0.5, epsilon = 1e-12);

        // (0.6, 0.2, 0.2) and (0.4, 0.3, 0.3) -> pooled (0.5, 0.25, 0.25), TV 0.1
        let build = |counts: [usize; 3]| -> Vec<ChainState> {
            let mut v = Vec::new();
            for (slot, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    v.push(state(&[DyadState::ALL[slot]], 0.1, v.len() as u64));
                }
            }
            v
        };
        let a = dyad_agreement(&[build([6, 2, 2]), build([4, 3, 3])]).unwrap();
        assert_relative_eq!(a[0], 0.9, epsilon = 1e-12);

        assert_eq!(
            dyad_agreement(&[locked_plus.clone(), locked_plus.clone()]).unwrap(),
            vec![1.0]
        );
        assert!(dyad_agreement(&[locked_plus]).is_err());
    }

    #[test]
    fn two_locked_chains_have_zero_agreement_when_disjoint() {
        let plus: Vec<ChainState> = (0..4).map(|i| state(&[Plus], 0.1, i)).collect();
        let minus: Vec<ChainState> = (0..4).map(|i| state(&[Minus], 0.1, i)).collect();
        let tie: Vec<ChainState> = (0..4).map(|i| state(&[Tie], 0.1, i)).collect();
        // three chains: pooled is uniform, each chain is 2/3 away
        let a = dyad_agreement(&[plus, minus, tie]).unwrap();
        assert_relative_eq!(a[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn map_tie_break_order() {
        let p = StateProbs::from_array([0.4, 0.4, 0.2]);
        assert_eq!(p.argmax(), Plus);
        let p = StateProbs::from_array([0.2, 0.4, 0.4]);
        assert_eq!(p.argmax(), Minus);
        let p = StateProbs::from_array([0.3, 0.2, 0.5]);
        assert_eq!(p.argmax(), Tie);
        let p = StateProbs::from_array([1.0 / 3.0; 3]);
        assert_eq!(p.argmax(), Plus);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(summarize(&[]), Err(Error::EmptyChains));
        assert_eq!(summarize(&[vec![]]), Err(Error::EmptyChains));
    }

    #[test]
    fn quantiles_are_ordered() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let s = summarize_scalar(&xs);
        assert_relative_eq!(s.q025, 0.025, epsilon = 1e-12);
        assert_relative_eq!(s.q50, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.q975, 0.975, epsilon = 1e-12);
        assert!(s.q025 <= s.q50 && s.q50 <= s.q975);
    }
}
