//! Output tables: draws, marginals, graphs, rate summaries and R-hat.

use std::collections::BTreeMap;

use serde::Serialize;

use super::reports::Outcome;
use super::{IoError, IoResult};
use crate::diagnostics::{PosteriorSummary, RateRhat, RateSummary, ScalarSummary};
use crate::graph::{DyadState, DyadStateVector, Roster};
use crate::model::{ErrorRates, StateProbs};
use crate::sampler::ChainState;

pub const FORMAT_VERSION: u32 = 1;

fn version_line() -> String {
    format!("# tourney-format-version: {FORMAT_VERSION}\n")
}

/// Rates in draws files: 17 significant digits, enough to round-trip any f64.
fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn render(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> IoResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    let body = String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))?;
    Ok(version_line() + &body)
}

fn reader(text: &str) -> IoResult<csv::Reader<&[u8]>> {
    let first = text.lines().next().unwrap_or_default();
    if first.trim_end() != version_line().trim_end() {
        return Err(IoError::Format(format!(
            "expected `{}` as the first line, found `{first}`",
            version_line().trim_end()
        )));
    }
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes()))
}

fn strings<const N: usize>(cols: [&str; N]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn dyad_column(roster: &Roster, i: usize, j: usize) -> String {
    format!("{}:{}", roster.label(i), roster.label(j))
}

/// Raw retained states, one record per state:
/// `chain,iteration,<dyad states...>,phi:<k>,tau:<k>,omega:<k>,...`.
pub fn write_draws(
    chains: &[Vec<ChainState>],
    roster: &Roster,
    informants: &[String],
) -> IoResult<String> {
    let mut header = strings(["chain", "iteration"]);
    header.extend(roster.dyads().map(|d| dyad_column(roster, d.i, d.j)));
    for id in informants {
        header.extend([
            format!("phi:{id}"),
            format!("tau:{id}"),
            format!("omega:{id}"),
        ]);
    }
    let rows = chains.iter().enumerate().flat_map(|(c, states)| {
        states.iter().map(move |s| {
            let mut row = vec![c.to_string(), s.iteration.to_string()];
            row.extend(s.xi.iter().map(|x| x.value().to_string()));
            for r in &s.rates {
                row.extend([exact(r.phi), exact(r.tau), exact(r.omega)]);
            }
            row
        })
    });
    render(&header, rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrawsFile {
    pub informants: Vec<String>,
    pub chains: Vec<Vec<ChainState>>,
}

pub fn parse_draws(text: &str, roster: &Roster) -> IoResult<DrawsFile> {
    let mut rd = reader(text)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    let d = roster.n_dyads();
    let mut expected = strings(["chain", "iteration"]);
    expected.extend(roster.dyads().map(|dy| dyad_column(roster, dy.i, dy.j)));
    if header.len() < expected.len() || header[..expected.len()] != expected[..] {
        return Err(IoError::Header {
            expected: expected.join(","),
            found: header
                .iter()
                .take(expected.len())
                .cloned()
                .collect::<Vec<_>>()
                .join(","),
        });
    }
    let rate_cols = &header[expected.len()..];
    if !rate_cols.len().is_multiple_of(3) {
        return Err(IoError::Format(format!(
            "{} rate columns is not a multiple of three",
            rate_cols.len()
        )));
    }
    let mut informants = Vec::with_capacity(rate_cols.len() / 3);
    for group in rate_cols.chunks(3) {
        let id = group[0].strip_prefix("phi:").ok_or_else(|| {
            IoError::Format(format!(
                "expected a phi:<informant> column, found {}",
                group[0]
            ))
        })?;
        if group[1] != format!("tau:{id}") || group[2] != format!("omega:{id}") {
            return Err(IoError::Format(format!(
                "rate columns for {id:?} must be phi, tau, omega in that order"
            )));
        }
        informants.push(id.to_owned());
    }

    let mut by_chain: BTreeMap<usize, Vec<ChainState>> = BTreeMap::new();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |reason: String| IoError::Record {
            line,
            record: row.iter().take(4).collect::<Vec<_>>().join(",") + ",...",
            reason,
        };
        if row.len() != header.len() {
            return Err(fail(format!(
                "expected {} fields, found {}",
                header.len(),
                row.len()
            )));
        }
        let chain: usize = row[0].parse().map_err(|_| fail("bad chain index".into()))?;
        let iteration: u64 = row[1].parse().map_err(|_| fail("bad iteration".into()))?;
        let xi = (0..d)
            .map(|i| {
                row[2 + i]
                    .parse::<i64>()
                    .map_err(|_| fail(format!("bad dyad state {:?}", &row[2 + i])))
                    .and_then(|v| DyadState::from_value(v).map_err(|e| fail(e.to_string())))
            })
            .collect::<IoResult<DyadStateVector>>()?;
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| fail(format!("bad rate {s:?}")))
        };
        let rates = (0..informants.len())
            .map(|k| {
                let base = 2 + d + 3 * k;
                let (phi, tau, omega) =
                    (num(&row[base])?, num(&row[base + 1])?, num(&row[base + 2])?);
                ErrorRates::new(phi, tau, omega).map_err(|e| fail(e.to_string()))
            })
            .collect::<IoResult<Vec<_>>>()?;
        by_chain.entry(chain).or_default().push(ChainState {
            xi,
            rates,
            iteration,
        });
    }
    Ok(DrawsFile {
        informants,
        chains: by_chain.into_values().collect(),
    })
}

/// `ego,alter,p_ego,p_alter,p_tie` for every canonical dyad.
pub fn write_marginals(marginals: &[StateProbs], roster: &Roster) -> IoResult<String> {
    let header = strings(["ego", "alter", "p_ego", "p_alter", "p_tie"]);
    render(
        &header,
        roster.dyads().zip(marginals).map(|(d, m)| {
            vec![
                roster.label(d.i).to_owned(),
                roster.label(d.j).to_owned(),
                m.plus.to_string(),
                m.minus.to_string(),
                m.tie.to_string(),
            ]
        }),
    )
}

/// Graph edge list `ego,alter,outcome` using the reports vocabulary.
/// Shared by the truth sidecar and the MAP graph.
pub fn write_graph(xi: &DyadStateVector, roster: &Roster) -> IoResult<String> {
    let header = strings(["ego", "alter", "outcome"]);
    render(
        &header,
        roster.dyads().map(|d| {
            vec![
                roster.label(d.i).to_owned(),
                roster.label(d.j).to_owned(),
                Outcome::of_state(xi[d.flat]).as_str().to_owned(),
            ]
        }),
    )
}

pub fn parse_graph(text: &str, roster: &Roster) -> IoResult<DyadStateVector> {
    let mut rd = reader(text)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != ["ego", "alter", "outcome"] {
        return Err(IoError::Header {
            expected: "ego,alter,outcome".into(),
            found: header.join(","),
        });
    }
    let mut states: Vec<Option<DyadState>> = vec![None; roster.n_dyads()];
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |reason: String| IoError::Record {
            line,
            record: row.iter().collect::<Vec<_>>().join(","),
            reason,
        };
        if row.len() != 3 {
            return Err(fail("expected 3 fields".into()));
        }
        let ego = roster
            .position(&row[0])
            .ok_or_else(|| fail("unknown ego".into()))?;
        let alter = roster
            .position(&row[1])
            .ok_or_else(|| fail("unknown alter".into()))?;
        let dyad = crate::graph::DyadIndex::new(roster.len(), ego, alter)
            .map_err(|e| fail(e.to_string()))?;
        let state = match Outcome::parse(&row[2]) {
            Some(Outcome::Ego) => DyadState::Plus,
            Some(Outcome::Alter) => DyadState::Minus,
            Some(Outcome::Tie) => DyadState::Tie,
            _ => return Err(fail(format!("bad outcome {:?}", &row[2]))),
        };
        let state = if ego < alter { state } else { state.reversed() };
        if states[dyad.flat].replace(state).is_some() {
            return Err(fail("duplicate dyad".into()));
        }
    }
    states
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| IoError::Format(format!("graph file is missing dyad {i}"))))
        .collect()
}

/// `informant,parameter,mean,q025,q50,q975`.
pub fn write_rates(rates: &[RateSummary], informants: &[String]) -> IoResult<String> {
    let header = strings(["informant", "parameter", "mean", "q025", "q50", "q975"]);
    let row = |id: &str, name: &str, s: &ScalarSummary| {
        vec![
            id.to_owned(),
            name.to_owned(),
            s.mean.to_string(),
            s.q025.to_string(),
            s.q50.to_string(),
            s.q975.to_string(),
        ]
    };
    render(
        &header,
        informants.iter().zip(rates).flat_map(|(id, r)| {
            [
                row(id, "phi", &r.phi),
                row(id, "tau", &r.tau),
                row(id, "omega", &r.omega),
            ]
        }),
    )
}

/// `informant,parameter,rhat`, with `NA` when there were too few draws.
pub fn write_rhat(rhat: &[RateRhat], informants: &[String]) -> IoResult<String> {
    let header = strings(["informant", "parameter", "rhat"]);
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_owned(), |x| x.to_string());
    render(
        &header,
        informants.iter().zip(rhat).flat_map(|(id, r)| {
            [
                vec![id.clone(), "phi".into(), cell(r.phi)],
                vec![id.clone(), "tau".into(), cell(r.tau)],
                vec![id.clone(), "omega".into(), cell(r.omega)],
            ]
        }),
    )
}

/// `informant,phi,tau,omega` for the simulated true rates.
pub fn write_truth_rates(rates: &[ErrorRates], informants: &[String]) -> IoResult<String> {
    let header = strings(["informant", "phi", "tau", "omega"]);
    render(
        &header,
        informants
            .iter()
            .zip(rates)
            .map(|(id, r)| vec![id.clone(), exact(r.phi), exact(r.tau), exact(r.omega)]),
    )
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    format_version: u32,
    roster: &'a [String],
    informants: &'a [String],
    dyads: Vec<[&'a str; 2]>,
    summary: &'a PosteriorSummary,
}

/// The complete summary as pretty-printed JSON.
pub fn write_summary_json(
    summary: &PosteriorSummary,
    roster: &Roster,
    informants: &[String],
) -> IoResult<String> {
    let doc = SummaryDocument {
        format_version: FORMAT_VERSION,
        roster: roster.labels(),
        informants,
        dyads: roster
            .dyads()
            .map(|d| [roster.label(d.i), roster.label(d.j)])
            .collect(),
        summary,
    };
    serde_json::to_string_pretty(&doc)
        .map(|s| s + "\n")
        .map_err(|e| IoError::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roster() -> Roster {
        Roster::new(["A", "B", "C"]).unwrap()
    }

    #[test]
    fn graph_round_trip_and_orientation() {
        let r = roster();
        let xi = DyadStateVector::from_values(&[1, -1, 0]).unwrap();
        let text = write_graph(&xi, &r).unwrap();
        assert!(text.starts_with(
            "# tourney-format-version: 1\nego,alter,outcome\nA,B,ego\nA,C,alter\nB,C,tie\n"
        ));
        assert_eq!(parse_graph(&text, &r).unwrap(), xi);
        let flipped =
            "# tourney-format-version: 1\nego,alter,outcome\nB,A,alter\nC,A,ego\nC,B,tie\n";
        assert_eq!(parse_graph(flipped, &r).unwrap(), xi);
        let short = "# tourney-format-version: 1\nego,alter,outcome\nA,B,ego\n";
        assert!(parse_graph(short, &r).is_err());
        assert!(parse_graph("ego,alter,outcome\n", &r).is_err());
    }

    #[test]
    fn draws_reject_bad_headers() {
        let r = roster();
        let bad = "# tourney-format-version: 1\nchain,iteration,A:B,A:C\n";
        assert!(parse_draws(bad, &r).is_err());
        let bad_rates =
            "# tourney-format-version: 1\nchain,iteration,A:B,A:C,B:C,phi:k,omega:k,tau:k\n";
        assert!(parse_draws(bad_rates, &r).is_err());
    }

    fn arb_state() -> impl Strategy<Value = ChainState> {
        (
            prop::collection::vec(prop::sample::select(DyadState::ALL.to_vec()), 3),
            prop::collection::vec((0.0..0.5f64, 0.0..0.5f64, 0.0..=1.0f64), 2),
            any::<u64>(),
        )
            .prop_map(|(xi, rates, iteration)| ChainState {
                xi: DyadStateVector::new(xi),
                rates: rates
                    .into_iter()
                    .map(|(p, t, w)| ErrorRates::new(p, t, w).unwrap())
                    .collect(),
                iteration,
            })
    }

    proptest! {
        #[test]
        fn draws_round_trip_exactly(
            chains in prop::collection::vec(prop::collection::vec(arb_state(), 1..6), 1..4)
        ) {
            let r = roster();
            let ids = vec!["k:1".to_string(), "k2".to_string()];
            let text = write_draws(&chains, &r, &ids).unwrap();
            let back = parse_draws(&text, &r).unwrap();
            prop_assert_eq!(back.informants, ids);
            prop_assert_eq!(back.chains, chains);
        }
    }
}
