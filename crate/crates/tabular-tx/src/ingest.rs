//! Corpus loading, validation, and result persistence.
//!
//! Corpora are line-delimited JSON, one [`TableDocument`] per line. Loading
//! is strict by default: any malformed or invariant-violating record fails
//! the whole load with a line-numbered error. The lenient variant drops bad
//! records instead and reports what was dropped, for batch runs where one
//! broken table should not sink the corpus.

use crate::eval::ScoreTriple;
use crate::model::{Coord, TableDocument};
use crate::preprocess::{self, PreprocessError};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate document id {id:?}")]
    DuplicateId { id: String },
    #[error("document {id:?}: cell spans overlap at {coord}")]
    SpanOverlap { id: String, coord: Coord },
    #[error("document {id:?}: highlighted cell {coord} outside the grid")]
    HighlightOutOfBounds { id: String, coord: Coord },
}

/// A single document's invariant violation, independent of file position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentViolation {
    #[error("cell at ({row}, {col}) has a zero row or column span")]
    ZeroSpan { row: usize, col: usize },
    #[error("table_title is empty")]
    EmptyTableTitle,
    #[error("highlighted_cells is empty")]
    NoHighlights,
    #[error("cell spans overlap at {0}")]
    SpanOverlap(Coord),
    #[error("highlighted cell {0} outside the grid")]
    HighlightOutOfBounds(Coord),
}

/// An ordered set of validated documents read from one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<TableDocument>,
    pub source_path: String,
}

/// Check every [`TableDocument`] invariant: positive spans, non-empty
/// table title, non-empty highlights, non-overlapping spans, and
/// highlights inside the expanded grid bounds.
pub fn validate_document(doc: &TableDocument) -> Result<(), DocumentViolation> {
    for cell in &doc.cells {
        if cell.rowspan == 0 || cell.colspan == 0 {
            return Err(DocumentViolation::ZeroSpan {
                row: cell.row,
                col: cell.col,
            });
        }
    }
    if doc.metadata.table_title.trim().is_empty() {
        return Err(DocumentViolation::EmptyTableTitle);
    }
    if doc.highlighted_cells.is_empty() {
        return Err(DocumentViolation::NoHighlights);
    }
    let grid = match preprocess::expand_merged_cells(&doc.cells) {
        Ok(grid) => grid,
        Err(PreprocessError::SpanOverlap(coord)) => {
            return Err(DocumentViolation::SpanOverlap(coord))
        }
        Err(PreprocessError::EmptyResult) => unreachable!("expansion never returns EmptyResult"),
    };
    for &coord in &doc.highlighted_cells {
        if !grid.contains(coord) {
            return Err(DocumentViolation::HighlightOutOfBounds(coord));
        }
    }
    Ok(())
}

fn violation_to_error(id: &str, line: usize, violation: DocumentViolation) -> IngestError {
    match violation {
        DocumentViolation::SpanOverlap(coord) => IngestError::SpanOverlap {
            id: id.to_string(),
            coord,
        },
        DocumentViolation::HighlightOutOfBounds(coord) => IngestError::HighlightOutOfBounds {
            id: id.to_string(),
            coord,
        },
        other => IngestError::MalformedRecord {
            line,
            reason: format!("document {id:?}: {other}"),
        },
    }
}

/// Load and validate a corpus, failing on the first bad record.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, IngestError> {
    let (corpus, dropped) = load_lines(path, true)?;
    debug_assert!(dropped.is_empty());
    Ok(corpus)
}

/// Load a corpus, dropping invalid records instead of failing. Returns the
/// surviving corpus and the `(line, error)` pairs that were dropped; the
/// caller decides how to report them.
pub fn load_corpus_lenient(
    path: impl AsRef<Path>,
) -> Result<(Corpus, Vec<(usize, IngestError)>), IngestError> {
    load_lines(path, false)
}

fn load_lines(
    path: impl AsRef<Path>,
    strict: bool,
) -> Result<(Corpus, Vec<(usize, IngestError)>), IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut documents = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut dropped = Vec::new();

    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }

        let result = parse_record(&line, line_no, &mut seen_ids);
        match result {
            Ok(doc) => documents.push(doc),
            Err(err) if strict => return Err(err),
            Err(err) => dropped.push((line_no, err)),
        }
    }

    Ok((
        Corpus {
            documents,
            source_path: path.display().to_string(),
        },
        dropped,
    ))
}

fn parse_record(
    line: &str,
    line_no: usize,
    seen_ids: &mut HashSet<String>,
) -> Result<TableDocument, IngestError> {
    let doc: TableDocument =
        serde_json::from_str(line).map_err(|e| IngestError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
    if !seen_ids.insert(doc.id.clone()) {
        return Err(IngestError::DuplicateId { id: doc.id });
    }
    validate_document(&doc).map_err(|violation| violation_to_error(&doc.id, line_no, violation))?;
    Ok(doc)
}

/// Write a corpus back out, one JSON record per line.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = BufWriter::new(File::create(path).map_err(io_err)?);
    for doc in &corpus.documents {
        let json = serde_json::to_string(doc).expect("document serialization cannot fail");
        writeln!(writer, "{json}").map_err(io_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// One output line of a generation or pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub step1_output: String,
    pub final_summary: String,
    pub tx_valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ScoreTriple>,
}

/// Persist result records, one JSON line each.
pub fn write_results(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = BufWriter::new(File::create(path).map_err(io_err)?);
    for record in records {
        let json = serde_json::to_string(record).expect("record serialization cannot fail");
        writeln!(writer, "{json}").map_err(io_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// Read back a results file written by [`write_results`].
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| IngestError::MalformedRecord {
            line: index + 1,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
