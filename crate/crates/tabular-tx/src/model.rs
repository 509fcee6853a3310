//! Core domain types shared by every stage of the pipeline.
//!
//! Everything here is a plain immutable value: construction happens in
//! `ingest` (corpus records) and `preprocess` (grids), and all downstream
//! stages only read. That makes every type safe to share across worker
//! threads without locking.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A `(row, col)` grid coordinate, 0-based. Serialized as a two-element
/// array `[row, col]` to match the corpus file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }
}

impl From<(usize, usize)> for Coord {
    fn from((row, col): (usize, usize)) -> Self {
        Coord { row, col }
    }
}

impl From<Coord> for (usize, usize) {
    fn from(c: Coord) -> Self {
        (c.row, c.col)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// One source cell as it appears in a corpus record. `(row, col)` is the
/// top-left anchor of the span; `rowspan`/`colspan` are always ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCell {
    pub row: usize,
    pub col: usize,
    pub rowspan: usize,
    pub colspan: usize,
    pub value: String,
    pub is_header: bool,
}

impl RawCell {
    /// Iterate every coordinate covered by this cell's span.
    pub fn covered(&self) -> impl Iterator<Item = Coord> + '_ {
        let (r0, c0) = (self.row, self.col);
        (r0..r0 + self.rowspan)
            .flat_map(move |r| (c0..c0 + self.colspan).map(move |c| Coord::new(r, c)))
    }
}

/// Document-level metadata carried by every corpus record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableMetadata {
    pub document_title: String,
    pub table_title: String,
    pub publication_date: String,
    pub publishing_org: String,
    pub source_url: String,
}

/// One corpus record: a table, the cells a summary must describe, and an
/// optional reference summary for scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDocument {
    pub id: String,
    pub metadata: TableMetadata,
    pub cells: Vec<RawCell>,
    pub highlighted_cells: Vec<Coord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_summary: Option<String>,
}

/// One slot of a [`NormalizedGrid`]. Coordinates covered by a merged cell
/// all carry the anchor's value and `origin`; coordinates covered by no
/// source cell are padding (empty value, `origin` = the slot itself).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridEntry {
    pub value: String,
    pub is_header: bool,
    pub origin: Coord,
    pub is_padding: bool,
}

impl GridEntry {
    pub(crate) fn padding(at: Coord) -> Self {
        GridEntry {
            value: String::new(),
            is_header: false,
            origin: at,
            is_padding: true,
        }
    }
}

/// Dense rectangular grid produced by merged-cell expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedGrid {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<GridEntry>,
}

impl NormalizedGrid {
    /// Build a grid from a row-major entry list. Panics if the entry count
    /// does not match the dimensions; callers construct via `preprocess`.
    pub(crate) fn from_entries(n_rows: usize, n_cols: usize, entries: Vec<GridEntry>) -> Self {
        assert_eq!(entries.len(), n_rows * n_cols, "entry count must be dense");
        NormalizedGrid {
            n_rows,
            n_cols,
            entries,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entry(&self, row: usize, col: usize) -> &GridEntry {
        &self.entries[row * self.n_cols + col]
    }

    pub(crate) fn entry_mut(&mut self, row: usize, col: usize) -> &mut GridEntry {
        &mut self.entries[row * self.n_cols + col]
    }

    /// Row-major iteration over `(coord, entry)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Coord, &GridEntry)> {
        let n_cols = self.n_cols;
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, e)| (Coord::new(i / n_cols, i % n_cols), e))
    }

    pub fn contains(&self, coord: Coord) -> bool {
        coord.row < self.n_rows && coord.col < self.n_cols
    }
}

/// Flattened `(header chain → value)` view of one data cell: the
/// representation prompts consume. `key_chain` holds row headers first,
/// then column headers, outermost first within each group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyValueRecord {
    pub key_chain: Vec<String>,
    pub value: String,
    pub coordinate: Coord,
    pub highlighted: bool,
}

/// Surface classification of a cell value, decided by an ordered marker
/// rule table in `analysis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellType {
    Monetary,
    Percentage,
    PlainNumeric,
    Categorical,
    Textual,
}

impl CellType {
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            CellType::Monetary | CellType::Percentage | CellType::PlainNumeric
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellType::Monetary => "monetary",
            CellType::Percentage => "percentage",
            CellType::PlainNumeric => "plain_numeric",
            CellType::Categorical => "categorical",
            CellType::Textual => "textual",
        }
    }

    pub const ALL: [CellType; 5] = [
        CellType::Monetary,
        CellType::Percentage,
        CellType::PlainNumeric,
        CellType::Categorical,
        CellType::Textual,
    ];
}

impl fmt::Display for CellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the explanation clause treats the highlighted values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMethod {
    Enumeration,
    MagnitudeComparison,
    TrendAnalysis,
}

impl AnalysisMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisMethod::Enumeration => "enumeration",
            AnalysisMethod::MagnitudeComparison => "magnitude_comparison",
            AnalysisMethod::TrendAnalysis => "trend_analysis",
        }
    }
}

impl fmt::Display for AnalysisMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output language for prompts, citation markers, and summary grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locale {
    En,
    Ko,
}

impl Locale {
    pub fn as_str(self) -> &'static str {
        match self {
            Locale::En => "en",
            Locale::Ko => "ko",
        }
    }
}

impl fmt::Display for Locale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Locale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Locale::En),
            "ko" => Ok(Locale::Ko),
            other => Err(format!(
                "unknown locale {other:?}, expected \"en\" or \"ko\""
            )),
        }
    }
}

/// The sentence-initial adverbial phrase anchoring a summary to its table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemePart {
    /// The locale's citation marker, e.g. `According to` / `에 따르면`.
    pub citation_expression: String,
    /// The table-title noun phrase embedded in the theme.
    pub title_phrase: String,
    /// The full adverbial phrase including its trailing delimiter.
    pub rendered: String,
}

/// A summary split into its Theme Part and Explanation Part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TXSummary {
    pub theme: ThemePart,
    /// The predicative clause following the theme.
    pub explanation: String,
    pub full_text: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coord_serializes_as_pair() {
        let c = Coord::new(2, 3);
        assert_eq!(serde_json::to_string(&c).unwrap(), "[2,3]");
        let back: Coord = serde_json::from_str("[2,3]").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn raw_cell_covered_spans() {
        let cell = RawCell {
            row: 0,
            col: 2,
            rowspan: 1,
            colspan: 2,
            value: "2020".into(),
            is_header: true,
        };
        let covered: Vec<_> = cell.covered().collect();
        assert_eq!(covered, vec![Coord::new(0, 2), Coord::new(0, 3)]);
    }

    #[test]
    fn document_round_trips_through_corpus_format() {
        let doc = TableDocument {
            id: "doc-1".into(),
            metadata: TableMetadata {
                document_title: "Annual report".into(),
                table_title: "the refugee status by nationality".into(),
                publication_date: "2024-01-15".into(),
                publishing_org: "Ministry of Justice".into(),
                source_url: "https://example.org/t/1".into(),
            },
            cells: vec![RawCell {
                row: 0,
                col: 0,
                rowspan: 1,
                colspan: 1,
                value: "Applications".into(),
                is_header: true,
            }],
            highlighted_cells: vec![Coord::new(0, 0)],
            reference_summary: Some("text".into()),
        };
        let line = serde_json::to_string(&doc).unwrap();
        let back: TableDocument = serde_json::from_str(&line).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn reference_summary_omitted_when_absent() {
        let doc = TableDocument {
            id: "d".into(),
            metadata: TableMetadata {
                document_title: String::new(),
                table_title: "t".into(),
                publication_date: String::new(),
                publishing_org: String::new(),
                source_url: String::new(),
            },
            cells: vec![],
            highlighted_cells: vec![],
            reference_summary: None,
        };
        let line = serde_json::to_string(&doc).unwrap();
        assert!(!line.contains("reference_summary"));
    }
}
