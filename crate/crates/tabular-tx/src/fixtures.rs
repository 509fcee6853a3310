//! Built-in fixture corpus and mock script for reproducible runs.
//!
//! The corpus mixes documents lifted from the worked summarization
//! examples (refugee status, net fiscal cost, exam results, a merged-header
//! budget table) with synthetic tables covering each analysis method and
//! the structural edge cases: ragged rows, empty values, a single-cell
//! table, and an all-header table. Metadata values on synthetic documents
//! are invented for testing. The mock script answers both pipeline steps
//! for every document that reaches the backend, with each generation
//! response echoing the document's reference summary so fixture runs
//! produce valid TX structures and perfect scores end to end.

use crate::backend::{DocScript, FallbackMode, MockScript};
use crate::ingest::Corpus;
use crate::model::{Coord, RawCell, TableDocument, TableMetadata};
use std::collections::BTreeMap;
use std::io;
use std::path::Path;

fn cell(row: usize, col: usize, value: &str, is_header: bool) -> RawCell {
    RawCell {
        row,
        col,
        rowspan: 1,
        colspan: 1,
        value: value.into(),
        is_header,
    }
}

fn span(row: usize, col: usize, rowspan: usize, colspan: usize, value: &str) -> RawCell {
    RawCell {
        row,
        col,
        rowspan,
        colspan,
        value: value.into(),
        is_header: true,
    }
}

fn metadata(document_title: &str, table_title: &str, org: &str) -> TableMetadata {
    TableMetadata {
        document_title: document_title.into(),
        table_title: table_title.into(),
        publication_date: "2024-05-10".into(),
        publishing_org: org.into(),
        source_url: format!(
            "https://data.example.test/{}",
            table_title.replace(' ', "-")
        ),
    }
}

fn document(
    id: &str,
    meta: TableMetadata,
    cells: Vec<RawCell>,
    highlights: &[(usize, usize)],
    reference: Option<&str>,
) -> TableDocument {
    TableDocument {
        id: id.into(),
        metadata: meta,
        cells,
        highlighted_cells: highlights.iter().map(|&(r, c)| Coord::new(r, c)).collect(),
        reference_summary: reference.map(String::from),
    }
}

pub const REFUGEE_REFERENCE: &str = "According to the refugee status by nationality, the \
total number of refugee applications is 2,437, and among them, only 147 have been approved, \
indicating a very low approval rate.";

pub const FISCAL_REFERENCE: &str = "According to the status of net fiscal cost, the net \
fiscal cost increased by 9.435 trillion KRW from the previous year, reaching a total of \
61.301 trillion KRW.";

const EXAM_REFERENCE: &str =
    "According to the exam results by applicant, exam number 10021 resulted in a pass.";

const BUDGET_REFERENCE: &str = "According to the departmental budget execution, operations \
recorded an actual of 1,450 against a plan of 1,500 in 2020.";

const APPROVAL_REFERENCE: &str = "According to the approval rates by region, Incheon \
recorded the highest approval rate at 45.9%, followed by Seoul at 42.5% and Busan at 38.1%.";

const VISITORS_REFERENCE: &str = "According to the quarterly visitor count, visitors \
increased steadily from 12,400 in Q1 to 19,200 in Q3.";

const DEEP_REFERENCE: &str = "According to the regional budget by year and category, the \
southern region executed 280 against its 2023 plan.";

const POPULATION_REFERENCE: &str = "According to the population by city, Daegu's population \
of 2,385,412 exceeds Daejeon's 1,442,216.";

const RAGGED_REFERENCE: &str =
    "According to the incomplete survey returns, the northern district sent 54 surveys.";

const EMPTY_REFERENCE: &str = "According to the partially reported totals, 88 cases were verified.";

const REFUGEE_KO_REFERENCE: &str = "국적별 난민 현황에 따르면 전체 난민 신청 2,437건 가운데 \
147건만 인정되어 인정률이 매우 낮다.";

/// The English fixture corpus. The last two documents exercise the
/// no-extractable-records path and so carry no reference summary.
pub fn fixture_documents() -> Vec<TableDocument> {
    vec![
        document(
            "refugee-status",
            metadata(
                "Annual asylum report",
                "the refugee status by nationality",
                "Ministry of Justice",
            ),
            vec![
                cell(0, 0, "Nationality", true),
                cell(0, 1, "Applications", true),
                cell(0, 2, "Approved", true),
                cell(1, 0, "Total", true),
                cell(1, 1, "2,437", false),
                cell(1, 2, "147", false),
            ],
            &[(1, 1), (1, 2)],
            Some(REFUGEE_REFERENCE),
        ),
        document(
            "fiscal-cost",
            metadata(
                "Fiscal balance bulletin",
                "the status of net fiscal cost",
                "Ministry of Economy and Finance",
            ),
            vec![
                cell(0, 0, "Item", true),
                cell(0, 1, "2020", true),
                cell(0, 2, "2021", true),
                cell(1, 0, "Net fiscal cost", true),
                cell(1, 1, "51.866 trillion KRW", false),
                cell(1, 2, "61.301 trillion KRW", false),
            ],
            &[(1, 1), (1, 2)],
            Some(FISCAL_REFERENCE),
        ),
        document(
            "exam-results",
            metadata(
                "Licensing exam bulletin",
                "the exam results by applicant",
                "Examination Office",
            ),
            vec![
                cell(0, 0, "Exam number", true),
                cell(0, 1, "10021", false),
                cell(1, 0, "Result", true),
                cell(1, 1, "pass", false),
            ],
            &[(0, 1), (1, 1)],
            Some(EXAM_REFERENCE),
        ),
        document(
            "budget-2020",
            metadata(
                "Budget execution review",
                "the departmental budget execution",
                "Budget Office",
            ),
            vec![
                span(0, 0, 2, 1, "Division"),
                span(0, 1, 2, 1, "2019"),
                span(0, 2, 1, 2, "2020"),
                cell(1, 2, "Plan", true),
                cell(1, 3, "Actual", true),
                cell(2, 0, "Operations", true),
                cell(2, 1, "1,200", false),
                cell(2, 2, "1,500", false),
                cell(2, 3, "1,450", false),
            ],
            &[(2, 2), (2, 3)],
            Some(BUDGET_REFERENCE),
        ),
        document(
            "regional-approval",
            metadata(
                "Permit statistics digest",
                "the approval rates by region",
                "Regional Affairs Bureau",
            ),
            vec![
                cell(0, 0, "Region", true),
                cell(0, 1, "Approval rate", true),
                cell(1, 0, "Seoul", true),
                cell(1, 1, "42.5%", false),
                cell(2, 0, "Busan", true),
                cell(2, 1, "38.1%", false),
                cell(3, 0, "Incheon", true),
                cell(3, 1, "45.9%", false),
            ],
            &[(1, 1), (2, 1), (3, 1)],
            Some(APPROVAL_REFERENCE),
        ),
        document(
            "quarterly-visitors",
            metadata(
                "Tourism statistics brief",
                "the quarterly visitor count",
                "Tourism Board",
            ),
            vec![
                cell(0, 0, "Quarter", true),
                cell(0, 1, "Q1", true),
                cell(0, 2, "Q2", true),
                cell(0, 3, "Q3", true),
                cell(1, 0, "Visitors", true),
                cell(1, 1, "12,400", false),
                cell(1, 2, "15,800", false),
                cell(1, 3, "19,200", false),
            ],
            &[(1, 1), (1, 2), (1, 3)],
            Some(VISITORS_REFERENCE),
        ),
        document(
            "deep-headers",
            metadata(
                "Regional budget tables",
                "the regional budget by year and category",
                "Budget Office",
            ),
            vec![
                span(0, 0, 2, 1, "Region"),
                span(0, 1, 1, 2, "2023"),
                cell(1, 1, "Plan", true),
                cell(1, 2, "Actual", true),
                cell(2, 0, "South", true),
                cell(2, 1, "300", false),
                cell(2, 2, "280", false),
            ],
            &[(2, 2)],
            Some(DEEP_REFERENCE),
        ),
        document(
            "city-population",
            metadata(
                "Demographic yearbook",
                "the population by city",
                "Statistics Agency",
            ),
            vec![
                cell(0, 0, "City", true),
                cell(0, 1, "Population", true),
                cell(1, 0, "Daegu", true),
                cell(1, 1, "2,385,412", false),
                cell(2, 0, "Daejeon", true),
                cell(2, 1, "1,442,216", false),
            ],
            &[(1, 1), (2, 1)],
            Some(POPULATION_REFERENCE),
        ),
        document(
            "ragged-rows",
            // Row 1 stops after two cells, leaving (1, 2) as padding.
            metadata(
                "Survey operations log",
                "the incomplete survey returns",
                "Field Survey Team",
            ),
            vec![
                cell(0, 0, "District", true),
                cell(0, 1, "Sent", true),
                cell(0, 2, "Returned", true),
                cell(1, 0, "North", true),
                cell(1, 1, "54", false),
            ],
            &[(1, 1)],
            Some(RAGGED_REFERENCE),
        ),
        document(
            "empty-values",
            // The empty reported value must drop out of the records.
            metadata(
                "Case verification memo",
                "the partially reported totals",
                "Audit Unit",
            ),
            vec![
                cell(0, 0, "Metric", true),
                cell(0, 1, "Value", true),
                cell(1, 0, "Reported", true),
                cell(1, 1, "", false),
                cell(2, 0, "Verified", true),
                cell(2, 1, "88", false),
            ],
            &[(2, 1)],
            Some(EMPTY_REFERENCE),
        ),
        document(
            "single-cell",
            // A lone cell becomes a header under inference: no data cells.
            metadata("Standalone figure", "the standalone figure", "Archive"),
            vec![cell(0, 0, "42", false)],
            &[(0, 0)],
            None,
        ),
        document(
            "all-headers",
            // Every cell is a header: nothing to summarize.
            metadata("Header-only sheet", "the header-only sheet", "Archive"),
            vec![
                cell(0, 0, "A", true),
                cell(0, 1, "B", true),
                cell(1, 0, "C", true),
                cell(1, 1, "D", true),
            ],
            &[(0, 0)],
            None,
        ),
    ]
}

/// The Korean fixture corpus.
pub fn fixture_documents_ko() -> Vec<TableDocument> {
    vec![document(
        "refugee-status-ko",
        metadata("연례 난민 보고서", "국적별 난민 현황", "법무부"),
        vec![
            cell(0, 0, "구분", true),
            cell(0, 1, "신청", true),
            cell(0, 2, "인정", true),
            cell(1, 0, "전체", true),
            cell(1, 1, "2,437", false),
            cell(1, 2, "147", false),
        ],
        &[(1, 1), (1, 2)],
        Some(REFUGEE_KO_REFERENCE),
    )]
}

/// Scripted backend responses for every fixture document that reaches the
/// backend. Generation responses repeat the reference summaries, so the
/// whole corpus round-trips to valid TX structures.
pub fn fixture_mock_script() -> MockScript {
    let entries: Vec<(&str, &str, &str)> = vec![
        (
            "refugee-status",
            "Total applications: 2,437 (plain number). Total approved: 147 (plain number). \
             Magnitude comparison: applications far exceed approvals.",
            REFUGEE_REFERENCE,
        ),
        (
            "fiscal-cost",
            "Net fiscal cost 2020: 51.866 trillion KRW. Net fiscal cost 2021: 61.301 \
             trillion KRW. Trend along years: an increase of 9.435 trillion KRW.",
            FISCAL_REFERENCE,
        ),
        (
            "exam-results",
            "Exam number: 10021 (identifier). Result: pass (categorical). Enumeration of \
             both values.",
            EXAM_REFERENCE,
        ),
        (
            "budget-2020",
            "Operations 2020 plan: 1,500. Operations 2020 actual: 1,450. Magnitude \
             comparison within the same year.",
            BUDGET_REFERENCE,
        ),
        (
            "regional-approval",
            "Approval rates: Incheon 45.9%, Seoul 42.5%, Busan 38.1%. Magnitude \
             comparison, Incheon highest.",
            APPROVAL_REFERENCE,
        ),
        (
            "quarterly-visitors",
            "Visitors: Q1 12,400, Q2 15,800, Q3 19,200. Trend along quarters, rising \
             every quarter.",
            VISITORS_REFERENCE,
        ),
        (
            "deep-headers",
            "South 2023 actual: 280 against plan 300. Single value, enumeration.",
            DEEP_REFERENCE,
        ),
        (
            "city-population",
            "Population: Daegu 2,385,412, Daejeon 1,442,216. Magnitude comparison, Daegu \
             larger.",
            POPULATION_REFERENCE,
        ),
        (
            "ragged-rows",
            "North district sent: 54 surveys. Single value, enumeration.",
            RAGGED_REFERENCE,
        ),
        (
            "empty-values",
            "Verified cases: 88. The reported value is missing. Single value, enumeration.",
            EMPTY_REFERENCE,
        ),
        (
            "refugee-status-ko",
            "전체 신청: 2,437건. 전체 인정: 147건. 크기 비교: 신청이 인정을 크게 웃돈다.",
            REFUGEE_KO_REFERENCE,
        ),
    ];
    let documents: BTreeMap<String, DocScript> = entries
        .into_iter()
        .map(|(id, notes, sentence)| {
            (
                id.to_string(),
                DocScript {
                    recognition: vec![notes.to_string()],
                    generation: vec![sentence.to_string()],
                },
            )
        })
        .collect();
    MockScript {
        fallback: FallbackMode::Error,
        documents,
    }
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const CORPUS_KO_FILE: &str = "corpus_ko.jsonl";
pub const MOCK_SCRIPT_FILE: &str = "mock_responses.json";

/// Write the fixture corpus files and mock script into a directory,
/// byte-identically on every call.
pub fn write_fixture_files(dir: impl AsRef<Path>) -> io::Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let as_io = |e: crate::ingest::IngestError| io::Error::other(e);

    let corpus = Corpus {
        documents: fixture_documents(),
        source_path: String::new(),
    };
    crate::ingest::write_corpus(&corpus, dir.join(CORPUS_FILE)).map_err(as_io)?;

    let corpus_ko = Corpus {
        documents: fixture_documents_ko(),
        source_path: String::new(),
    };
    crate::ingest::write_corpus(&corpus_ko, dir.join(CORPUS_KO_FILE)).map_err(as_io)?;

    let script = serde_json::to_string_pretty(&fixture_mock_script())
        .expect("mock script serialization cannot fail");
    std::fs::write(dir.join(MOCK_SCRIPT_FILE), format!("{script}\n"))?;
    Ok(())
}
