//! Long-format informant reports.
//!
//! One record per question asked: `informant,ego,alter,outcome`, where
//! `outcome` is `ego` (ego wins), `alter` (alter wins), `tie`, or `missing`.
//! Pairs an informant was never asked about are unobserved as well.

use std::collections::HashMap;
use std::path::Path;

use super::{read_text, IoError, IoResult};
use crate::graph::{DyadIndex, DyadState, InclusionMask, ReportMatrix, Roster};

pub const REPORTS_HEADER: [&str; 4] = ["informant", "ego", "alter", "outcome"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ego,
    Alter,
    Tie,
    Missing,
}

impl Outcome {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ego" => Some(Outcome::Ego),
            "alter" => Some(Outcome::Alter),
            "tie" => Some(Outcome::Tie),
            "missing" => Some(Outcome::Missing),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Ego => "ego",
            Outcome::Alter => "alter",
            Outcome::Tie => "tie",
            Outcome::Missing => "missing",
        }
    }

    /// Outcome of a canonical dyad `(ego < alter)` in state `state`.
    pub fn of_state(state: DyadState) -> Self {
        match state {
            DyadState::Plus => Outcome::Ego,
            DyadState::Minus => Outcome::Alter,
            DyadState::Tie => Outcome::Tie,
        }
    }
}

/// Parsed reports with informants in column order.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportData {
    pub informants: Vec<String>,
    pub reports: ReportMatrix,
    pub mask: InclusionMask,
}

struct Record {
    informant: String,
    dyad: DyadIndex,
    outcome: Outcome,
}

/// Parses a reports file. With `informants` given, that fixes the informant
/// order and any other informant id is an error; otherwise informants are
/// ordered by first appearance.
pub fn parse_reports(
    text: &str,
    roster: &Roster,
    informants: Option<&[String]>,
) -> IoResult<ReportData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != REPORTS_HEADER {
        return Err(IoError::Header {
            expected: REPORTS_HEADER.join(","),
            found: header.join(","),
        });
    }

    let mut order: Vec<String> = informants.map(<[String]>::to_vec).unwrap_or_default();
    let mut position: HashMap<String, usize> = order
        .iter()
        .enumerate()
        .map(|(i, k)| (k.clone(), i))
        .collect();
    let mut records = Vec::new();
    let mut seen: HashMap<(usize, usize), u64> = HashMap::new();

    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |reason: String| IoError::Record {
            line,
            record: row.iter().collect::<Vec<_>>().join(","),
            reason,
        };
        if row.len() != 4 {
            return Err(fail(format!("expected 4 fields, found {}", row.len())));
        }
        let (informant, ego, alter, outcome) = (&row[0], &row[1], &row[2], &row[3]);
        if informant.is_empty() {
            return Err(fail("empty informant id".into()));
        }
        let ego_pos = roster
            .position(ego)
            .ok_or_else(|| fail(format!("unknown vertex label {ego:?}")))?;
        let alter_pos = roster
            .position(alter)
            .ok_or_else(|| fail(format!("unknown vertex label {alter:?}")))?;
        if ego_pos == alter_pos {
            return Err(fail(format!("self-dyad on {ego:?}")));
        }
        let outcome = Outcome::parse(outcome).ok_or_else(|| {
            fail(format!(
                "unknown outcome {outcome:?} (expected ego, alter, tie or missing)"
            ))
        })?;
        let k = match position.get(informant) {
            Some(&k) => k,
            None if informants.is_some() => {
                return Err(fail(format!(
                    "informant {informant:?} is not listed in the config"
                )))
            }
            None => {
                order.push(informant.to_owned());
                position.insert(informant.to_owned(), order.len() - 1);
                order.len() - 1
            }
        };
        let dyad = DyadIndex::new(roster.len(), ego_pos, alter_pos)?;
        if let Some(first) = seen.insert((k, dyad.flat), line) {
            return Err(fail(format!(
                "duplicate report by {informant:?} on {{{ego}, {alter}}} (first on line {first})"
            )));
        }
        // outcomes are stated from ego's side; flip when ego is the higher ordinal
        let outcome = match (outcome, ego_pos < alter_pos) {
            (Outcome::Ego, false) => Outcome::Alter,
            (Outcome::Alter, false) => Outcome::Ego,
            (o, _) => o,
        };
        records.push(Record {
            informant: informant.to_owned(),
            dyad,
            outcome,
        });
    }

    let m = order.len();
    let d = roster.n_dyads();
    let mut reports = ReportMatrix::filled(m, d);
    let mut mask = InclusionMask::none_observed(m, d);
    for r in records {
        let k = position[&r.informant];
        let state = match r.outcome {
            Outcome::Ego => DyadState::Plus,
            Outcome::Alter => DyadState::Minus,
            Outcome::Tie => DyadState::Tie,
            Outcome::Missing => continue,
        };
        reports.set(k, r.dyad.flat, state);
        mask.set(k, r.dyad.flat, true);
    }
    Ok(ReportData {
        informants: order,
        reports,
        mask,
    })
}

pub fn load_reports(
    path: &Path,
    roster: &Roster,
    informants: Option<&[String]>,
) -> IoResult<ReportData> {
    parse_reports(&read_text(path)?, roster, informants)
}

/// Renders reports in canonical orientation; hidden cells become `missing` records.
pub fn write_reports(data: &ReportData, roster: &Roster) -> IoResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORTS_HEADER)?;
    for (k, id) in data.informants.iter().enumerate() {
        for dyad in roster.dyads() {
            let outcome = if data.mask.is_observed(k, dyad.flat) {
                Outcome::of_state(data.reports.get(k, dyad.flat))
            } else {
                Outcome::Missing
            };
            w.write_record([
                id.as_str(),
                roster.label(dyad.i),
                roster.label(dyad.j),
                outcome.as_str(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))
}
