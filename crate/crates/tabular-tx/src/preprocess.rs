//! Table structure normalization: merged-cell expansion, header inference,
//! key-value flattening, and related-cell filtering.
//!
//! All operations are pure functions over [`model`](crate::model) types, so
//! documents can be preprocessed in parallel without coordination.

use crate::model::{Coord, GridEntry, KeyValueRecord, NormalizedGrid, RawCell};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    /// Two source cells cover the same grid coordinate.
    #[error("cell spans overlap at {0}")]
    SpanOverlap(Coord),
    /// No highlighted coordinate maps to a data record.
    #[error("no highlighted data cell produced a record")]
    EmptyResult,
}

/// A retained record together with its related header cells: every header
/// entry sharing the record's row or column, keyed by span anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedRecord {
    #[serde(flatten)]
    pub record: KeyValueRecord,
    pub context: Vec<RelatedHeader>,
}

/// One related header cell: its text and the anchor coordinate of the span
/// it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedHeader {
    pub value: String,
    pub origin: Coord,
}

/// Replicate merged cells across their spans, yielding a dense grid.
///
/// Grid dimensions are `(max covered row + 1, max covered col + 1)`.
/// Every coordinate covered by a span carries the anchor's value, header
/// flag, and origin; coordinates covered by no cell become padding.
pub fn expand_merged_cells(cells: &[RawCell]) -> Result<NormalizedGrid, PreprocessError> {
    let mut n_rows = 0;
    let mut n_cols = 0;
    for cell in cells {
        n_rows = n_rows.max(cell.row + cell.rowspan);
        n_cols = n_cols.max(cell.col + cell.colspan);
    }

    let mut slots: Vec<Option<GridEntry>> = vec![None; n_rows * n_cols];
    for cell in cells {
        for coord in cell.covered() {
            let slot = &mut slots[coord.row * n_cols + coord.col];
            if slot.is_some() {
                return Err(PreprocessError::SpanOverlap(coord));
            }
            *slot = Some(GridEntry {
                value: cell.value.clone(),
                is_header: cell.is_header,
                origin: Coord::new(cell.row, cell.col),
                is_padding: false,
            });
        }
    }

    let entries = slots
        .into_iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.unwrap_or_else(|| {
                GridEntry::padding(Coord::new(i / n_cols.max(1), i % n_cols.max(1)))
            })
        })
        .collect();

    Ok(NormalizedGrid::from_entries(n_rows, n_cols, entries))
}

/// Ensure the grid has header flags: if any entry is already flagged the
/// grid is returned unchanged, otherwise row 0 and column 0 are marked.
/// Padding slots are never marked (they are not cells).
pub fn infer_headers(mut grid: NormalizedGrid) -> NormalizedGrid {
    if grid.iter().any(|(_, e)| e.is_header) {
        return grid;
    }
    for row in 0..grid.n_rows() {
        for col in 0..grid.n_cols() {
            if row == 0 || col == 0 {
                let entry = grid.entry_mut(row, col);
                if !entry.is_padding {
                    entry.is_header = true;
                }
            }
        }
    }
    grid
}

/// Flatten the grid into key-value records, one per non-header,
/// non-padding, non-empty entry.
///
/// The key chain collects header values sharing the entry's row (left of
/// it, outermost first) followed by header values sharing its column
/// (above it, outermost first). A merged header replicated across the
/// scan path contributes its value once.
pub fn to_key_value_records(grid: &NormalizedGrid, highlights: &[Coord]) -> Vec<KeyValueRecord> {
    let highlight_set: HashSet<Coord> = highlights.iter().copied().collect();
    let mut records = Vec::new();

    for (coord, entry) in grid.iter() {
        if entry.is_header || entry.is_padding || entry.value.is_empty() {
            continue;
        }
        records.push(KeyValueRecord {
            key_chain: key_chain_for(grid, coord),
            value: entry.value.clone(),
            coordinate: coord,
            highlighted: highlight_set.contains(&coord),
        });
    }

    records
}

fn key_chain_for(grid: &NormalizedGrid, coord: Coord) -> Vec<String> {
    let mut chain = Vec::new();
    let mut seen_origins = HashSet::new();

    // Row headers left of the cell, then column headers above it.
    for col in 0..coord.col {
        push_header(grid.entry(coord.row, col), &mut chain, &mut seen_origins);
    }
    for row in 0..coord.row {
        push_header(grid.entry(row, coord.col), &mut chain, &mut seen_origins);
    }

    chain
}

fn push_header(entry: &GridEntry, chain: &mut Vec<String>, seen: &mut HashSet<Coord>) {
    if entry.is_header && !entry.is_padding && !entry.value.is_empty() && seen.insert(entry.origin)
    {
        chain.push(entry.value.clone());
    }
}

/// Keep exactly the highlighted records and attach each one's related
/// header cells: every header entry sharing its row or column, deduplicated
/// by span anchor (row scan first, then column scan).
pub fn filter_related(
    records: &[KeyValueRecord],
    grid: &NormalizedGrid,
    highlights: &[Coord],
) -> Result<Vec<RelatedRecord>, PreprocessError> {
    let highlight_set: HashSet<Coord> = highlights.iter().copied().collect();
    let retained: Vec<RelatedRecord> = records
        .iter()
        .filter(|r| r.highlighted && highlight_set.contains(&r.coordinate))
        .map(|r| RelatedRecord {
            record: r.clone(),
            context: related_headers(grid, r.coordinate),
        })
        .collect();

    if retained.is_empty() {
        return Err(PreprocessError::EmptyResult);
    }
    Ok(retained)
}

/// All header entries sharing `coord`'s row or column.
pub fn related_headers(grid: &NormalizedGrid, coord: Coord) -> Vec<RelatedHeader> {
    let mut seen = HashSet::new();
    let mut headers = Vec::new();

    let mut push = |entry: &GridEntry| {
        if entry.is_header && !entry.is_padding && seen.insert(entry.origin) {
            headers.push(RelatedHeader {
                value: entry.value.clone(),
                origin: entry.origin,
            });
        }
    };

    for col in 0..grid.n_cols() {
        push(grid.entry(coord.row, col));
    }
    for row in 0..grid.n_rows() {
        push(grid.entry(row, coord.col));
    }

    headers
}

/// Re-encode a grid as unit-span cells, one per non-padding coordinate.
pub fn to_unit_cells(grid: &NormalizedGrid) -> Vec<RawCell> {
    grid.iter()
        .filter(|(_, e)| !e.is_padding)
        .map(|(coord, e)| RawCell {
            row: coord.row,
            col: coord.col,
            rowspan: 1,
            colspan: 1,
            value: e.value.clone(),
            is_header: e.is_header,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(
        row: usize,
        col: usize,
        rowspan: usize,
        colspan: usize,
        value: &str,
        is_header: bool,
    ) -> RawCell {
        RawCell {
            row,
            col,
            rowspan,
            colspan,
            value: value.into(),
            is_header,
        }
    }

    /// Simple 3x3 layout: header row 0, header col 0, four data cells.
    fn plain_3x3() -> Vec<RawCell> {
        vec![
            cell(0, 0, 1, 1, "", true),
            cell(0, 1, 1, 1, "A", true),
            cell(0, 2, 1, 1, "B", true),
            cell(1, 0, 1, 1, "X", true),
            cell(1, 1, 1, 1, "1", false),
            cell(1, 2, 1, 1, "2", false),
            cell(2, 0, 1, 1, "Y", true),
            cell(2, 1, 1, 1, "3", false),
            cell(2, 2, 1, 1, "4", false),
        ]
    }

    #[test]
    fn merged_header_replicates_across_its_columns() {
        let cells = vec![cell(0, 2, 1, 2, "2020", true)];
        let grid = expand_merged_cells(&cells).unwrap();
        assert_eq!((grid.n_rows(), grid.n_cols()), (1, 4));
        for col in [2, 3] {
            let e = grid.entry(0, col);
            assert_eq!(e.value, "2020");
            assert_eq!(e.origin, Coord::new(0, 2));
            assert!(!e.is_padding);
        }
        assert!(grid.entry(0, 0).is_padding);
        assert!(grid.entry(0, 1).is_padding);
    }

    #[test]
    fn unit_spans_reproduce_input_layout() {
        let cells = plain_3x3();
        let grid = expand_merged_cells(&cells).unwrap();
        assert_eq!((grid.n_rows(), grid.n_cols()), (3, 3));
        for c in &cells {
            let e = grid.entry(c.row, c.col);
            assert_eq!(e.value, c.value);
            assert_eq!(e.is_header, c.is_header);
            assert_eq!(e.origin, Coord::new(c.row, c.col));
        }
    }

    #[test]
    fn overlapping_spans_are_rejected() {
        let cells = vec![cell(0, 0, 1, 2, "a", false), cell(0, 1, 1, 1, "b", false)];
        let err = expand_merged_cells(&cells).unwrap_err();
        assert_eq!(err, PreprocessError::SpanOverlap(Coord::new(0, 1)));
    }

    #[test]
    fn infer_headers_no_op_when_flags_present() {
        let grid = expand_merged_cells(&plain_3x3()).unwrap();
        let inferred = infer_headers(grid.clone());
        assert_eq!(inferred, grid);
    }

    #[test]
    fn infer_headers_marks_first_row_and_column() {
        let cells: Vec<RawCell> = plain_3x3()
            .into_iter()
            .map(|mut c| {
                c.is_header = false;
                c
            })
            .collect();
        let grid = infer_headers(expand_merged_cells(&cells).unwrap());
        let marked: Vec<Coord> = grid
            .iter()
            .filter(|(_, e)| e.is_header)
            .map(|(c, _)| c)
            .collect();
        assert_eq!(marked.len(), 5);
        assert!(marked.iter().all(|c| c.row == 0 || c.col == 0));
    }

    #[test]
    fn infer_headers_single_cell_grid() {
        let grid = infer_headers(expand_merged_cells(&[cell(0, 0, 1, 1, "only", false)]).unwrap());
        assert!(grid.entry(0, 0).is_header);
    }

    #[test]
    fn exam_table_key_chains() {
        // Row-header layout: "Exam number" keys "10021", "Result" keys "pass".
        let cells = vec![
            cell(0, 0, 1, 1, "Exam number", true),
            cell(0, 1, 1, 1, "10021", false),
            cell(1, 0, 1, 1, "Result", true),
            cell(1, 1, 1, 1, "pass", false),
        ];
        let grid = infer_headers(expand_merged_cells(&cells).unwrap());
        let records = to_key_value_records(&grid, &[Coord::new(0, 1), Coord::new(1, 1)]);

        let number = records.iter().find(|r| r.value == "10021").unwrap();
        assert!(number.key_chain.contains(&"Exam number".to_string()));
        let result = records.iter().find(|r| r.value == "pass").unwrap();
        assert!(result.key_chain.contains(&"Result".to_string()));
        assert!(records.iter().all(|r| r.highlighted));
    }

    #[test]
    fn all_header_grid_yields_no_records() {
        let cells = vec![cell(0, 0, 1, 1, "h1", true), cell(0, 1, 1, 1, "h2", true)];
        let grid = expand_merged_cells(&cells).unwrap();
        assert!(to_key_value_records(&grid, &[]).is_empty());
    }

    #[test]
    fn replicated_merged_header_appears_once_per_chain() {
        // "2020" spans two columns above two data cells; each chain carries
        // it exactly once even though the scan crosses both replicas.
        let cells = vec![
            cell(0, 0, 1, 1, "Division", true),
            cell(0, 1, 1, 2, "2020", true),
            cell(1, 0, 1, 1, "Budget", true),
            cell(1, 1, 1, 1, "10", false),
            cell(1, 2, 1, 1, "20", false),
        ];
        let grid = expand_merged_cells(&cells).unwrap();
        let records = to_key_value_records(&grid, &[]);
        for record in &records {
            let occurrences = record
                .key_chain
                .iter()
                .filter(|k| k.as_str() == "2020")
                .count();
            assert_eq!(occurrences, 1, "chain {:?}", record.key_chain);
        }
    }

    #[test]
    fn filter_related_single_highlight_context() {
        // 4x4, headers on row 0 / col 0; highlight (2,3): context must be
        // exactly the two headers sharing its row and column.
        let mut cells = Vec::new();
        for i in 0..4 {
            cells.push(cell(0, i, 1, 1, &format!("c{i}"), true));
            if i > 0 {
                cells.push(cell(i, 0, 1, 1, &format!("r{i}"), true));
            }
        }
        for r in 1..4 {
            for c in 1..4 {
                cells.push(cell(r, c, 1, 1, &format!("v{r}{c}"), false));
            }
        }
        let grid = expand_merged_cells(&cells).unwrap();
        let highlight = [Coord::new(2, 3)];
        let records = to_key_value_records(&grid, &highlight);
        let filtered = filter_related(&records, &grid, &highlight).unwrap();

        assert_eq!(filtered.len(), 1);
        let origins: Vec<Coord> = filtered[0].context.iter().map(|h| h.origin).collect();
        assert_eq!(origins, vec![Coord::new(2, 0), Coord::new(0, 3)]);
    }

    #[test]
    fn filter_related_keeps_everything_when_all_highlighted() {
        let grid = expand_merged_cells(&plain_3x3()).unwrap();
        let highlights: Vec<Coord> = grid
            .iter()
            .filter(|(_, e)| !e.is_header && !e.is_padding)
            .map(|(c, _)| c)
            .collect();
        let records = to_key_value_records(&grid, &highlights);
        let filtered = filter_related(&records, &grid, &highlights).unwrap();
        assert_eq!(filtered.len(), records.len());
    }

    #[test]
    fn filter_related_empty_result() {
        let grid = expand_merged_cells(&plain_3x3()).unwrap();
        let records = to_key_value_records(&grid, &[]);
        let err = filter_related(&records, &grid, &[]).unwrap_err();
        assert_eq!(err, PreprocessError::EmptyResult);
    }
}
