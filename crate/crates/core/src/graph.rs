//! Tournament graphs with ties.
//!
//! A tournament with ties on `N` vertices is stored either as an `N x N`
//! binary adjacency matrix (`theta[i][j] = 1` when `i` dominates `j`) or,
//! more compactly, as one three-valued state per unordered pair of vertices.
//! Pairs are laid out lexicographically, `(0,1), (0,2), ..., (N-2,N-1)`, and
//! a state of `+1` always means the lower-ordinal vertex dominates.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of one unordered pair `{i, j}` with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum DyadState {
    /// `j` dominates `i`.
    Minus,
    /// Neither vertex dominates.
    Tie,
    /// `i` dominates `j`.
    Plus,
}

impl DyadState {
    /// Fixed state order used for categorical draws and argmax tie-breaks.
    pub const ALL: [DyadState; 3] = [DyadState::Plus, DyadState::Minus, DyadState::Tie];

    pub fn value(self) -> i8 {
        match self {
            DyadState::Minus => -1,
            DyadState::Tie => 0,
            DyadState::Plus => 1,
        }
    }

    pub fn from_value(value: i64) -> Result<Self> {
        match value {
            -1 => Ok(DyadState::Minus),
            0 => Ok(DyadState::Tie),
            1 => Ok(DyadState::Plus),
            other => Err(Error::InvalidState(other)),
        }
    }

    /// `|state| = 1`.
    pub fn is_decisive(self) -> bool {
        self != DyadState::Tie
    }

    /// The same relation seen from the other vertex.
    pub fn reversed(self) -> Self {
        match self {
            DyadState::Minus => DyadState::Plus,
            DyadState::Tie => DyadState::Tie,
            DyadState::Plus => DyadState::Minus,
        }
    }

    /// Position of the state in [`DyadState::ALL`].
    pub(crate) fn slot(self) -> usize {
        match self {
            DyadState::Plus => 0,
            DyadState::Minus => 1,
            DyadState::Tie => 2,
        }
    }
}

impl From<DyadState> for i8 {
    fn from(state: DyadState) -> i8 {
        state.value()
    }
}

impl TryFrom<i8> for DyadState {
    type Error = Error;

    fn try_from(value: i8) -> Result<Self> {
        DyadState::from_value(value as i64)
    }
}

impl fmt::Display for DyadState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Number of unordered pairs on `n` vertices.
pub fn n_dyads(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Flat index of the pair `(i, j)`, `i < j < n`.
pub fn dyad_flat(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// A canonical unordered pair together with its flat position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DyadIndex {
    pub i: usize,
    pub j: usize,
    pub flat: usize,
}

impl DyadIndex {
    /// Canonicalizes an arbitrary ordered pair of distinct vertices.
    pub fn new(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::Invalid(format!("self-dyad on vertex {a}")));
        }
        if a >= n || b >= n {
            return Err(Error::Invalid(format!(
                "vertex ({a}, {b}) out of range for {n} vertices"
            )));
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Ok(DyadIndex {
            i,
            j,
            flat: dyad_flat(n, i, j),
        })
    }
}

/// All canonical pairs on `n` vertices in flat order.
pub fn dyads(n: usize) -> impl Iterator<Item = DyadIndex> {
    let mut flat = 0;
    (0..n)
        .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
        .map(move |(i, j)| {
            let d = DyadIndex { i, j, flat };
            flat += 1;
            d
        })
}

/// Vertex set with unique labels; the label order fixes vertex ordinals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Roster {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::RosterTooSmall(labels.len()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (pos, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), pos).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Roster { labels, index })
    }

    /// Roster labelled `v1..vN`.
    pub fn numbered(n: usize) -> Result<Self> {
        Roster::new((1..=n).map(|v| format!("v{v}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_dyads(&self) -> usize {
        n_dyads(self.len())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, vertex: usize) -> &str {
        &self.labels[vertex]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn dyads(&self) -> impl Iterator<Item = DyadIndex> {
        dyads(self.len())
    }
}

/// Binary `N x N` dominance matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    /// Builds a matrix from rows of 0/1 values, rejecting loops and mutual domination.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "adjacency row",
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => entries.push(false),
                    1 => entries.push(true),
                    _ => {
                        return Err(Error::InvalidAdjacency(format!(
                            "entry ({i}, {j}) = {v} is not binary"
                        )))
                    }
                }
            }
        }
        let theta = AdjacencyMatrix { n, entries };
        theta.validate()?;
        Ok(theta)
    }

    pub fn zeros(n: usize) -> Self {
        AdjacencyMatrix {
            n,
            entries: vec![false; n * n],
        }
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) {
                return Err(Error::InvalidAdjacency(format!("loop at vertex {i}")));
            }
            for j in i + 1..self.n {
                if self.get(i, j) && self.get(j, i) {
                    return Err(Error::InvalidAdjacency(format!(
                        "mutual domination between {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `true` when `i` dominates `j`.
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries
            .chunks(self.n.max(1))
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }
}

/// The latent graph as one state per canonical pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyadStateVector(Vec<DyadState>);

impl DyadStateVector {
    pub fn new(states: Vec<DyadState>) -> Self {
        DyadStateVector(states)
    }

    pub fn from_values(values: &[i64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| DyadState::from_value(v))
            .collect::<Result<Vec<_>>>()
            .map(DyadStateVector)
    }

    pub fn ties(d: usize) -> Self {
        DyadStateVector(vec![DyadState::Tie; d])
    }

    pub fn values(&self) -> Vec<i8> {
        self.0.iter().map(|s| s.value()).collect()
    }

    pub fn as_mut_slice(&mut self) -> &mut [DyadState] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<DyadState> {
        self.0
    }
}

impl Deref for DyadStateVector {
    type Target = [DyadState];

    fn deref(&self) -> &[DyadState] {
        &self.0
    }
}

impl FromIterator<DyadState> for DyadStateVector {
    fn from_iter<I: IntoIterator<Item = DyadState>>(iter: I) -> Self {
        DyadStateVector(iter.into_iter().collect())
    }
}

/// Informant-by-dyad report states. Cells hidden by the companion
/// [`InclusionMask`] hold an arbitrary placeholder that inference never reads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportMatrix {
    n_informants: usize,
    n_dyads: usize,
    cells: Vec<DyadState>,
}

impl ReportMatrix {
    pub fn new(n_informants: usize, n_dyads: usize, cells: Vec<DyadState>) -> Result<Self> {
        if cells.len() != n_informants * n_dyads {
            return Err(Error::DimensionMismatch {
                what: "report cells",
                expected: n_informants * n_dyads,
                found: cells.len(),
            });
        }
        Ok(ReportMatrix {
            n_informants,
            n_dyads,
            cells,
        })
    }

    /// All cells set to the tie placeholder.
    pub fn filled(n_informants: usize, n_dyads: usize) -> Self {
        ReportMatrix {
            n_informants,
            n_dyads,
            cells: vec![DyadState::Tie; n_informants * n_dyads],
        }
    }

    pub fn from_rows(rows: &[DyadStateVector]) -> Result<Self> {
        let n_dyads = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(rows.len() * n_dyads);
        for row in rows {
            if row.len() != n_dyads {
                return Err(Error::DimensionMismatch {
                    what: "report row",
                    expected: n_dyads,
                    found: row.len(),
                });
            }
            cells.extend_from_slice(row);
        }
        ReportMatrix::new(rows.len(), n_dyads, cells)
    }

    pub fn n_informants(&self) -> usize {
        self.n_informants
    }

    pub fn n_dyads(&self) -> usize {
        self.n_dyads
    }

    pub fn get(&self, informant: usize, dyad: usize) -> DyadState {
        self.cells[informant * self.n_dyads + dyad]
    }

    pub fn set(&mut self, informant: usize, dyad: usize, state: DyadState) {
        self.cells[informant * self.n_dyads + dyad] = state;
    }

    pub fn row(&self, informant: usize) -> &[DyadState] {
        &self.cells[informant * self.n_dyads..(informant + 1) * self.n_dyads]
    }

    /// Reports of every informant on one dyad.
    pub fn column(&self, dyad: usize) -> Vec<DyadState> {
        (0..self.n_informants).map(|k| self.get(k, dyad)).collect()
    }
}

/// Observedness `z` of each informant-dyad cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InclusionMask {
    n_informants: usize,
    n_dyads: usize,
    cells: Vec<bool>,
}

impl InclusionMask {
    pub fn all_observed(n_informants: usize, n_dyads: usize) -> Self {
        InclusionMask {
            n_informants,
            n_dyads,
            cells: vec![true; n_informants * n_dyads],
        }
    }

    pub fn none_observed(n_informants: usize, n_dyads: usize) -> Self {
        InclusionMask {
            n_informants,
            n_dyads,
            cells: vec![false; n_informants * n_dyads],
        }
    }

    pub fn new(n_informants: usize, n_dyads: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != n_informants * n_dyads {
            return Err(Error::DimensionMismatch {
                what: "mask cells",
                expected: n_informants * n_dyads,
                found: cells.len(),
            });
        }
        Ok(InclusionMask {
            n_informants,
            n_dyads,
            cells,
        })
    }

    pub fn n_informants(&self) -> usize {
        self.n_informants
    }

    pub fn n_dyads(&self) -> usize {
        self.n_dyads
    }

    pub fn is_observed(&self, informant: usize, dyad: usize) -> bool {
        self.cells[informant * self.n_dyads + dyad]
    }

    pub fn set(&mut self, informant: usize, dyad: usize, observed: bool) {
        self.cells[informant * self.n_dyads + dyad] = observed;
    }

    pub fn column(&self, dyad: usize) -> Vec<bool> {
        (0..self.n_informants)
            .map(|k| self.is_observed(k, dyad))
            .collect()
    }

    pub fn n_observed(&self) -> usize {
        self.cells.iter().filter(|&&z| z).count()
    }
}

/// Checks that reports, mask and (optionally) a latent graph agree in shape.
pub(crate) fn check_dims(
    reports: &ReportMatrix,
    mask: &InclusionMask,
    n_dyads: Option<usize>,
) -> Result<()> {
    if mask.n_informants() != reports.n_informants() {
        return Err(Error::DimensionMismatch {
            what: "mask informants",
            expected: reports.n_informants(),
            found: mask.n_informants(),
        });
    }
    if mask.n_dyads() != reports.n_dyads() {
        return Err(Error::DimensionMismatch {
            what: "mask dyads",
            expected: reports.n_dyads(),
            found: mask.n_dyads(),
        });
    }
    if let Some(d) = n_dyads {
        if d != reports.n_dyads() {
            return Err(Error::DimensionMismatch {
                what: "dyad states",
                expected: reports.n_dyads(),
                found: d,
            });
        }
    }
    Ok(())
}

pub fn adjacency_to_dyads(theta: &AdjacencyMatrix) -> Result<DyadStateVector> {
    theta.validate()?;
    Ok(dyads(theta.n())
        .map(|d| match (theta.get(d.i, d.j), theta.get(d.j, d.i)) {
            (true, false) => DyadState::Plus,
            (false, true) => DyadState::Minus,
            _ => DyadState::Tie,
        })
        .collect())
}

pub fn dyads_to_adjacency(xi: &DyadStateVector, roster: &Roster) -> Result<AdjacencyMatrix> {
    if xi.len() != roster.n_dyads() {
        return Err(Error::DimensionMismatch {
            what: "dyad states",
            expected: roster.n_dyads(),
            found: xi.len(),
        });
    }
    let n = roster.len();
    let mut theta = AdjacencyMatrix::zeros(n);
    for d in roster.dyads() {
        match xi[d.flat] {
            DyadState::Plus => theta.entries[d.i * n + d.j] = true,
            DyadState::Minus => theta.entries[d.j * n + d.i] = true,
            DyadState::Tie => {}
        }
    }
    Ok(theta)
}

/// Converts one reported adjacency matrix per informant into a report matrix.
pub fn report_array_to_matrix(slices: &[AdjacencyMatrix]) -> Result<ReportMatrix> {
    let rows = slices
        .iter()
        .map(adjacency_to_dyads)
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = slices.first() {
        if let Some(bad) = slices.iter().find(|s| s.n() != first.n()) {
            return Err(Error::DimensionMismatch {
                what: "report slice",
                expected: first.n(),
                found: bad.n(),
            });
        }
    }
    ReportMatrix::from_rows(&rows)
}

/// Wins minus losses per vertex; ties count zero.
pub fn copeland_score(xi: &DyadStateVector, roster: &Roster) -> Result<Vec<i64>> {
    if xi.len() != roster.n_dyads() {
        return Err(Error::DimensionMismatch {
            what: "dyad states",
            expected: roster.n_dyads(),
            found: xi.len(),
        });
    }
    let mut score = vec![0i64; roster.len()];
    for d in roster.dyads() {
        let v = xi[d.flat].value() as i64;
        score[d.i] += v;
        score[d.j] -= v;
    }
    Ok(score)
}
