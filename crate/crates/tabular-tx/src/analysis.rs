//! Cell-type classification, numeric normalization, and analysis-method
//! selection for highlighted records.
//!
//! Classification applies an ordered rule table so that more specific
//! surface markers win: percent markers, then currency markers, then bare
//! numbers, then short labels, then free text. Numeric parsing folds Korean
//! magnitude words and English scale words into exact decimal shifts so
//! "61.301 trillion" and its digit expansion compare equal as floats.

use crate::model::{AnalysisMethod, CellType, KeyValueRecord};
use crate::preprocess::RelatedRecord;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cell value {value:?} classified {cell_type} but no number could be extracted")]
    NumericParseFailure { value: String, cell_type: CellType },
}

/// A key-value record with its classification and, for numeric types, the
/// normalized magnitude and residual unit token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedCell {
    pub record: KeyValueRecord,
    pub cell_type: CellType,
    pub numeric_value: Option<f64>,
    pub unit: Option<String>,
}

/// The selected analysis method plus the cells ordered for presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisPlan {
    pub method: AnalysisMethod,
    pub ordered_cells: Vec<TypedCell>,
    /// Header text of the earliest point on the temporal axis, when one
    /// drives a trend analysis.
    pub axis: Option<String>,
}

const PERCENT_MARKERS: [&str; 3] = ["%", "퍼센트", "percent"];
const CURRENCY_MARKERS: [&str; 6] = ["KRW", "USD", "₩", "$", "€", "£"];

/// Classify a raw cell value by its surface form. Rules apply in order;
/// the first match wins, so "12.5%" is a percentage rather than a plain
/// number and "3,500원" is monetary rather than categorical.
pub fn classify_cell_type(value: &str) -> CellType {
    let trimmed = value.trim();
    if PERCENT_MARKERS.iter().any(|m| trimmed.contains(m)) {
        return CellType::Percentage;
    }
    // Bare "원" also ends ordinary words (병원, 유치원), so it only counts
    // as a currency marker alongside a digit.
    let has_digit = trimmed.chars().any(|c| c.is_ascii_digit());
    if CURRENCY_MARKERS.iter().any(|m| trimmed.contains(m)) || (has_digit && trimmed.contains('원'))
    {
        return CellType::Monetary;
    }
    if parses_as_bare_number(trimmed) {
        return CellType::PlainNumeric;
    }
    if trimmed.chars().count() <= 20 && !ends_with_sentence_punctuation(trimmed) {
        return CellType::Categorical;
    }
    CellType::Textual
}

fn ends_with_sentence_punctuation(text: &str) -> bool {
    matches!(text.chars().last(), Some('.' | '!' | '?'))
}

/// True when the whole value, after separator removal and magnitude-word
/// folding, is a single number with nothing left over.
fn parses_as_bare_number(text: &str) -> bool {
    match scan_number(text) {
        Some(scan) => scan.leading.trim().is_empty() && scan.residual.trim().is_empty(),
        None => false,
    }
}

/// Extract the normalized numeric value and residual unit token from a cell
/// already classified as numeric. Returns `Ok(None)` for non-numeric types.
pub fn parse_numeric(
    value: &str,
    cell_type: CellType,
) -> Result<Option<(f64, Option<String>)>, AnalysisError> {
    if !cell_type.is_numeric() {
        return Ok(None);
    }
    let scan = scan_number(value).ok_or_else(|| AnalysisError::NumericParseFailure {
        value: value.to_string(),
        cell_type,
    })?;
    let unit = scan
        .residual
        .split_whitespace()
        .next()
        .map(|token| token.to_string());
    Ok(Some((scan.value, unit)))
}

struct NumberScan {
    value: f64,
    /// Text before the first digit run.
    leading: String,
    /// Text after the last consumed segment, where the unit token lives.
    residual: String,
}

/// Exponent contributed by one magnitude word. Korean single-character
/// multipliers compose additively within a run (백만 = 10^6), so each
/// character carries its own exponent.
fn korean_multiplier(c: char) -> Option<u32> {
    match c {
        '십' => Some(1),
        '백' => Some(2),
        '천' => Some(3),
        '만' => Some(4),
        '억' => Some(8),
        '조' => Some(12),
        _ => None,
    }
}

fn english_multiplier(word: &str) -> Option<u32> {
    match word.to_ascii_lowercase().as_str() {
        "thousand" => Some(3),
        "million" => Some(6),
        "billion" => Some(9),
        "trillion" => Some(12),
        _ => None,
    }
}

/// Find the first number in the text and fold any magnitude words attached
/// to it. Compound segments like "2조 3400억" accumulate as long as each
/// later segment sits at a strictly smaller scale than the one before it.
fn scan_number(text: &str) -> Option<NumberScan> {
    let chars: Vec<char> = text.chars().collect();
    let start = chars.iter().position(|c| c.is_ascii_digit())?;

    // A sign directly before the first digit belongs to the number.
    let (sign, leading_end) = match start.checked_sub(1).map(|i| chars[i]) {
        Some('-') => (-1.0, start - 1),
        Some('+') => (1.0, start - 1),
        _ => (1.0, start),
    };
    let leading: String = chars[..leading_end].iter().collect();

    let mut pos = start;
    let mut total = 0.0;
    let mut prev_exponent: Option<u32> = None;
    let mut first = true;

    loop {
        if !first {
            // Later segments continue the same compound number only when
            // separated by at most whitespace.
            let mut probe = pos;
            while probe < chars.len() && chars[probe].is_whitespace() {
                probe += 1;
            }
            if probe >= chars.len() || !chars[probe].is_ascii_digit() {
                break;
            }
            pos = probe;
        }

        let (digits, after_digits) = read_digit_run(&chars, pos)?;
        let (exponent, after_unit) = read_magnitude(&chars, after_digits);

        match (first, prev_exponent) {
            (true, _) => {}
            // "1만 2345": a bare tail after a scaled segment is allowed.
            (false, Some(prev)) if exponent < prev => {}
            (false, _) => break,
        }

        total += shifted_value(&digits, exponent)?;
        prev_exponent = Some(exponent);
        pos = after_unit;
        first = false;

        if exponent == 0 {
            // Nothing smaller can follow a bare segment.
            break;
        }
    }

    let residual: String = chars[pos..].iter().collect();
    Some(NumberScan {
        value: sign * total,
        leading,
        residual,
    })
}

/// Read a digit run with optional thousands separators and one decimal
/// point, returning the cleaned digit string. Separators must sit between
/// digits, so a trailing comma stays in the residual.
fn read_digit_run(chars: &[char], start: usize) -> Option<(String, usize)> {
    let mut digits = String::new();
    let mut pos = start;
    let mut seen_point = false;
    while pos < chars.len() {
        let c = chars[pos];
        if c.is_ascii_digit() {
            digits.push(c);
            pos += 1;
        } else if c == ',' && !seen_point {
            let next_is_digit = chars.get(pos + 1).is_some_and(|n| n.is_ascii_digit());
            if next_is_digit {
                pos += 1;
            } else {
                break;
            }
        } else if c == '.' && !seen_point {
            let next_is_digit = chars.get(pos + 1).is_some_and(|n| n.is_ascii_digit());
            if next_is_digit {
                digits.push('.');
                seen_point = true;
                pos += 1;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    if digits.is_empty() || digits == "." {
        None
    } else {
        Some((digits, pos))
    }
}

/// Consume magnitude words directly after a digit run (whitespace allowed
/// before each) and return their combined exponent.
fn read_magnitude(chars: &[char], start: usize) -> (u32, usize) {
    let mut exponent = 0u32;
    let mut pos = start;
    loop {
        let mut probe = pos;
        while probe < chars.len() && chars[probe].is_whitespace() {
            probe += 1;
        }
        if probe < chars.len() {
            if let Some(exp) = korean_multiplier(chars[probe]) {
                // A run of multiplier characters composes one scale word.
                let mut run_exp = exp;
                let mut run_end = probe + 1;
                while run_end < chars.len() {
                    match korean_multiplier(chars[run_end]) {
                        Some(e) => {
                            run_exp += e;
                            run_end += 1;
                        }
                        None => break,
                    }
                }
                exponent += run_exp;
                pos = run_end;
                continue;
            }
            let word_end = (probe..chars.len())
                .find(|&i| !chars[i].is_ascii_alphabetic())
                .unwrap_or(chars.len());
            if word_end > probe {
                let word: String = chars[probe..word_end].iter().collect();
                if let Some(exp) = english_multiplier(&word) {
                    exponent += exp;
                    pos = word_end;
                    continue;
                }
            }
        }
        return (exponent, pos);
    }
}

/// Multiply a decimal digit string by 10^exponent via string shifting, so
/// the result is the f64 nearest the exact decimal rather than a product
/// of two roundings.
fn shifted_value(digits: &str, exponent: u32) -> Option<f64> {
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    let exponent = exponent as usize;
    let shifted = if frac_part.len() <= exponent {
        format!(
            "{int_part}{frac_part}{}",
            "0".repeat(exponent - frac_part.len())
        )
    } else {
        format!(
            "{int_part}{}.{}",
            &frac_part[..exponent],
            &frac_part[exponent..]
        )
    };
    shifted.parse::<f64>().ok()
}

/// Classify and normalize one record. A numeric classification whose value
/// yields no extractable number falls back to the text rules instead of
/// failing, so a stray "KRW" label cannot abort a whole document.
pub fn type_cell(record: &KeyValueRecord) -> TypedCell {
    let cell_type = classify_cell_type(&record.value);
    match parse_numeric(&record.value, cell_type) {
        Ok(Some((value, unit))) => TypedCell {
            record: record.clone(),
            cell_type,
            numeric_value: Some(value),
            unit,
        },
        Ok(None) => TypedCell {
            record: record.clone(),
            cell_type,
            numeric_value: None,
            unit: None,
        },
        Err(_) => {
            let trimmed = record.value.trim();
            let fallback =
                if trimmed.chars().count() <= 20 && !ends_with_sentence_punctuation(trimmed) {
                    CellType::Categorical
                } else {
                    CellType::Textual
                };
            TypedCell {
                record: record.clone(),
                cell_type: fallback,
                numeric_value: None,
                unit: None,
            }
        }
    }
}

/// Classify every filtered record in order.
pub fn type_cells(records: &[RelatedRecord]) -> Vec<TypedCell> {
    records.iter().map(|r| type_cell(&r.record)).collect()
}

/// A sortable point on a temporal axis. Ordering is by year, then month,
/// then quarter, so mixed granularities still order sensibly.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TemporalKey {
    pub year: i32,
    pub month: u8,
    pub quarter: u8,
}

/// Parse a header as a temporal expression: a four-digit year, a
/// year-month, a quarter marker, or their Korean suffixed forms.
pub fn temporal_key(text: &str) -> Option<TemporalKey> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return None;
    }

    if let Some(key) = parse_quarter(trimmed) {
        return Some(key);
    }

    // Strip Korean year suffixes: "2020년", "2020년도".
    let without_suffix = trimmed
        .strip_suffix("년도")
        .or_else(|| trimmed.strip_suffix('년'))
        .unwrap_or(trimmed)
        .trim();

    if let Some((year, month)) = parse_year_month(without_suffix) {
        return Some(TemporalKey {
            year,
            month,
            quarter: 0,
        });
    }
    if let Some(year) = parse_year(without_suffix) {
        return Some(TemporalKey {
            year,
            month: 0,
            quarter: 0,
        });
    }
    None
}

fn parse_year(text: &str) -> Option<i32> {
    let text = text
        .strip_suffix("년도")
        .or_else(|| text.strip_suffix('년'))
        .unwrap_or(text);
    if text.len() == 4 && text.chars().all(|c| c.is_ascii_digit()) {
        text.parse().ok()
    } else {
        None
    }
}

fn parse_year_month(text: &str) -> Option<(i32, u8)> {
    // "2020-03", "2020.3", "2020/03", "2020년 3월" (년 stripped upstream).
    let cleaned = text.strip_suffix('월').unwrap_or(text);
    for sep in ['-', '.', '/', ' '] {
        if let Some((y, m)) = cleaned.split_once(sep) {
            let year = parse_year(y.trim())?;
            let month: u8 = m.trim().parse().ok()?;
            if (1..=12).contains(&month) {
                return Some((year, month));
            }
        }
    }
    None
}

fn parse_quarter(text: &str) -> Option<TemporalKey> {
    let mut year = 0i32;
    let mut quarter = 0u8;
    for token in text.split_whitespace() {
        if let Some(y) = parse_year(token) {
            year = y;
        } else if let Some(rest) = token.strip_prefix('Q').or_else(|| token.strip_prefix('q')) {
            quarter = rest.parse().ok().filter(|q| (1..=4).contains(q))?;
        } else {
            let num = token.strip_suffix("분기")?;
            quarter = num.trim().parse().ok().filter(|q| (1..=4).contains(q))?;
        }
    }
    if quarter == 0 {
        return None;
    }
    Some(TemporalKey {
        year,
        month: 0,
        quarter,
    })
}

/// First temporal entry in a record's key chain, with its header text.
fn chain_temporal(record: &KeyValueRecord) -> Option<(TemporalKey, String)> {
    record
        .key_chain
        .iter()
        .find_map(|key| temporal_key(key).map(|t| (t, key.clone())))
}

/// Pick the analysis method for a set of typed cells and order them for
/// presentation: trend points in time order, magnitudes largest first with
/// ties keeping input order, enumerations as given.
pub fn select_analysis_method(cells: Vec<TypedCell>) -> AnalysisPlan {
    assert!(!cells.is_empty(), "analysis requires at least one cell");

    if cells.len() == 1 {
        return AnalysisPlan {
            method: AnalysisMethod::Enumeration,
            ordered_cells: cells,
            axis: None,
        };
    }

    let first_type = cells[0].cell_type;
    let uniform_numeric =
        first_type.is_numeric() && cells.iter().all(|c| c.cell_type == first_type);
    if !uniform_numeric {
        return AnalysisPlan {
            method: AnalysisMethod::Enumeration,
            ordered_cells: cells,
            axis: None,
        };
    }

    let temporals: Vec<Option<(TemporalKey, String)>> =
        cells.iter().map(|c| chain_temporal(&c.record)).collect();
    let all_temporal = temporals.iter().all(Option::is_some);
    let distinct = {
        let mut keys: Vec<&TemporalKey> = temporals.iter().flatten().map(|(key, _)| key).collect();
        keys.sort();
        keys.windows(2).all(|w| w[0] != w[1])
    };

    if all_temporal && distinct {
        let mut indexed: Vec<(TemporalKey, String, TypedCell)> = cells
            .into_iter()
            .zip(temporals)
            .map(|(cell, t)| {
                let (key, header) = t.expect("all cells carry a temporal key");
                (key, header, cell)
            })
            .collect();
        indexed.sort_by(|a, b| a.0.cmp(&b.0));
        let axis = indexed.first().map(|(_, header, _)| header.clone());
        return AnalysisPlan {
            method: AnalysisMethod::TrendAnalysis,
            ordered_cells: indexed.into_iter().map(|(_, _, cell)| cell).collect(),
            axis,
        };
    }

    let mut ordered = cells;
    // Stable sort keeps input order for equal magnitudes.
    ordered.sort_by(|a, b| {
        let av = a.numeric_value.unwrap_or(f64::NEG_INFINITY);
        let bv = b.numeric_value.unwrap_or(f64::NEG_INFINITY);
        bv.partial_cmp(&av).unwrap_or(std::cmp::Ordering::Equal)
    });
    AnalysisPlan {
        method: AnalysisMethod::MagnitudeComparison,
        ordered_cells: ordered,
        axis: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Coord;

    fn record(keys: &[&str], value: &str) -> KeyValueRecord {
        KeyValueRecord {
            key_chain: keys.iter().map(|k| k.to_string()).collect(),
            value: value.to_string(),
            coordinate: Coord::new(1, 1),
            highlighted: true,
        }
    }

    fn typed(keys: &[&str], value: &str) -> TypedCell {
        type_cell(&record(keys, value))
    }

    #[test]
    fn classification_rule_order() {
        assert_eq!(classify_cell_type("12.5%"), CellType::Percentage);
        assert_eq!(classify_cell_type("45 퍼센트"), CellType::Percentage);
        assert_eq!(
            classify_cell_type("61.301 trillion KRW"),
            CellType::Monetary
        );
        assert_eq!(classify_cell_type("3,500원"), CellType::Monetary);
        assert_eq!(classify_cell_type("$120"), CellType::Monetary);
        assert_eq!(classify_cell_type("2,437"), CellType::PlainNumeric);
        assert_eq!(classify_cell_type("-3.5"), CellType::PlainNumeric);
        assert_eq!(classify_cell_type("Seoul"), CellType::Categorical);
        assert_eq!(classify_cell_type("유치원"), CellType::Categorical);
        assert_eq!(
            classify_cell_type("Applications rose sharply in March."),
            CellType::Textual
        );
    }

    #[test]
    fn plain_numbers_normalize() {
        let (value, unit) = parse_numeric("2,437", CellType::PlainNumeric)
            .unwrap()
            .unwrap();
        assert_eq!(value, 2437.0);
        assert_eq!(unit, None);
    }

    #[test]
    fn english_scale_words_fold_exactly() {
        let (value, unit) = parse_numeric("9.435 trillion KRW", CellType::Monetary)
            .unwrap()
            .unwrap();
        assert_eq!(value, 9.435e12);
        assert_eq!(unit.as_deref(), Some("KRW"));

        let (value, _) = parse_numeric("61.301 trillion KRW", CellType::Monetary)
            .unwrap()
            .unwrap();
        assert_eq!(value, "61301000000000".parse::<f64>().unwrap());
    }

    #[test]
    fn korean_scale_words_fold() {
        let (value, unit) = parse_numeric("3천만원", CellType::Monetary)
            .unwrap()
            .unwrap();
        assert_eq!(value, 30_000_000.0);
        assert_eq!(unit.as_deref(), Some("원"));

        let (value, _) = parse_numeric("2조 3400억원", CellType::Monetary)
            .unwrap()
            .unwrap();
        assert_eq!(value, 2_340_000_000_000.0);

        let (value, _) = parse_numeric("1만 2345", CellType::PlainNumeric)
            .unwrap()
            .unwrap();
        assert_eq!(value, 12_345.0);
    }

    #[test]
    fn percent_values_keep_marker_as_unit() {
        let (value, unit) = parse_numeric("12.5%", CellType::Percentage)
            .unwrap()
            .unwrap();
        assert_eq!(value, 12.5);
        assert_eq!(unit.as_deref(), Some("%"));
    }

    #[test]
    fn numberless_numeric_value_fails_to_parse() {
        assert!(matches!(
            parse_numeric("KRW only", CellType::Monetary),
            Err(AnalysisError::NumericParseFailure { .. })
        ));
    }

    #[test]
    fn non_numeric_types_skip_parsing() {
        assert_eq!(parse_numeric("Seoul", CellType::Categorical).unwrap(), None);
    }

    #[test]
    fn single_cell_enumerates() {
        let plan = select_analysis_method(vec![typed(&["Result"], "pass")]);
        assert_eq!(plan.method, AnalysisMethod::Enumeration);
        assert_eq!(plan.axis, None);
    }

    #[test]
    fn mixed_types_enumerate() {
        let plan = select_analysis_method(vec![
            typed(&["Exam number"], "10021"),
            typed(&["Result"], "pass"),
        ]);
        assert_eq!(plan.method, AnalysisMethod::Enumeration);
        assert_eq!(plan.ordered_cells[0].record.value, "10021");
    }

    #[test]
    fn temporal_axis_selects_trend_in_time_order() {
        let plan = select_analysis_method(vec![
            typed(&["Cost", "2021"], "61.301 trillion KRW"),
            typed(&["Cost", "2020"], "51.866 trillion KRW"),
        ]);
        assert_eq!(plan.method, AnalysisMethod::TrendAnalysis);
        assert_eq!(plan.axis.as_deref(), Some("2020"));
        assert_eq!(plan.ordered_cells[0].record.key_chain[1], "2020");
        assert_eq!(plan.ordered_cells[1].record.key_chain[1], "2021");
    }

    #[test]
    fn uniform_numeric_without_axis_compares_magnitudes() {
        let plan = select_analysis_method(vec![
            typed(&["Seoul"], "42.5%"),
            typed(&["Incheon"], "45.9%"),
            typed(&["Busan"], "38.1%"),
        ]);
        assert_eq!(plan.method, AnalysisMethod::MagnitudeComparison);
        let order: Vec<&str> = plan
            .ordered_cells
            .iter()
            .map(|c| c.record.key_chain[0].as_str())
            .collect();
        assert_eq!(order, ["Incheon", "Seoul", "Busan"]);
    }

    #[test]
    fn repeated_years_break_the_axis() {
        let plan = select_analysis_method(vec![
            typed(&["Plan", "2020"], "1,500"),
            typed(&["Actual", "2020"], "1,450"),
        ]);
        assert_eq!(plan.method, AnalysisMethod::MagnitudeComparison);
    }

    #[test]
    fn equal_magnitudes_keep_input_order() {
        let plan = select_analysis_method(vec![
            typed(&["A"], "100"),
            typed(&["B"], "100"),
            typed(&["C"], "200"),
        ]);
        let order: Vec<&str> = plan
            .ordered_cells
            .iter()
            .map(|c| c.record.key_chain[0].as_str())
            .collect();
        assert_eq!(order, ["C", "A", "B"]);
    }

    #[test]
    fn temporal_header_forms() {
        assert_eq!(
            temporal_key("2020"),
            Some(TemporalKey {
                year: 2020,
                month: 0,
                quarter: 0
            })
        );
        assert_eq!(
            temporal_key("2020년"),
            Some(TemporalKey {
                year: 2020,
                month: 0,
                quarter: 0
            })
        );
        assert_eq!(
            temporal_key("2020-03"),
            Some(TemporalKey {
                year: 2020,
                month: 3,
                quarter: 0
            })
        );
        assert_eq!(
            temporal_key("2020년 3월"),
            Some(TemporalKey {
                year: 2020,
                month: 3,
                quarter: 0
            })
        );
        assert_eq!(
            temporal_key("Q1"),
            Some(TemporalKey {
                year: 0,
                month: 0,
                quarter: 1
            })
        );
        assert_eq!(
            temporal_key("2024 Q3"),
            Some(TemporalKey {
                year: 2024,
                month: 0,
                quarter: 3
            })
        );
        assert_eq!(
            temporal_key("1분기"),
            Some(TemporalKey {
                year: 0,
                month: 0,
                quarter: 1
            })
        );
        assert_eq!(temporal_key("Total"), None);
        assert_eq!(temporal_key("2020-13"), None);
    }

    #[test]
    fn unit_is_first_residual_token() {
        let (_, unit) = parse_numeric("1,200 KRW per month", CellType::Monetary)
            .unwrap()
            .unwrap();
        assert_eq!(unit.as_deref(), Some("KRW"));
    }
}
