//! Theme-Explanation structure: composing theme parts, splitting generated
//! sentences, and checking structural validity.
//!
//! A TX summary opens with an adverbial theme that cites the table title
//! ("According to the refugee status by nationality," / "국적별 난민
//! 현황에 따르면") and continues with a single explanatory clause. English
//! markers precede the title and end at a comma; Korean markers follow the
//! title, so the split lands after the marker itself.

use crate::model::{Locale, TXSummary, ThemePart};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TxError {
    #[error("table title is empty")]
    EmptyTitle,
}

/// Citation markers recognized per locale, most common first. The first
/// marker is the one used when composing.
pub fn citation_markers(locale: Locale) -> &'static [&'static str] {
    match locale {
        Locale::En => &["According to", "Based on"],
        Locale::Ko => &["에 따르면", "에 의하면"],
    }
}

/// Build the canonical theme part for a table title.
pub fn compose_theme_part(table_title: &str, locale: Locale) -> Result<ThemePart, TxError> {
    let title = table_title.trim();
    if title.is_empty() {
        return Err(TxError::EmptyTitle);
    }
    let marker = citation_markers(locale)[0];
    let rendered = match locale {
        Locale::En => format!("{marker} {title},"),
        Locale::Ko => format!("{title}{marker}"),
    };
    Ok(ThemePart {
        citation_expression: marker.to_string(),
        title_phrase: title.to_string(),
        rendered,
    })
}

/// Earliest citation-marker occurrence in the text, as (byte offset,
/// canonical marker). English markers match case-insensitively.
fn find_marker(text: &str, locale: Locale) -> Option<(usize, &'static str)> {
    let mut best: Option<(usize, &'static str)> = None;
    for &marker in citation_markers(locale) {
        let found = match locale {
            Locale::En => find_ascii_case_insensitive(text, marker),
            Locale::Ko => text.find(marker),
        };
        if let Some(pos) = found {
            let better = match best {
                Some((best_pos, _)) => pos < best_pos,
                None => true,
            };
            if better {
                best = Some((pos, marker));
            }
        }
    }
    best
}

fn find_ascii_case_insensitive(haystack: &str, needle: &str) -> Option<usize> {
    let haystack_lower = haystack.to_ascii_lowercase();
    haystack_lower.find(&needle.to_ascii_lowercase())
}

/// Split a generated sentence into theme and explanation. Total: a text
/// without any citation marker comes back with an empty theme and the whole
/// text as explanation, never an error. `full_text` always preserves the
/// input, and theme plus delimiter whitespace plus explanation reconstructs
/// it exactly.
pub fn parse_tx_summary(text: &str, locale: Locale) -> TXSummary {
    let Some((pos, marker)) = find_marker(text, locale) else {
        return TXSummary {
            theme: ThemePart {
                citation_expression: String::new(),
                title_phrase: String::new(),
                rendered: String::new(),
            },
            explanation: text.to_string(),
            full_text: text.to_string(),
        };
    };

    let (theme_end, title_phrase) = match locale {
        Locale::En => {
            // Theme runs through the first comma after the marker; the
            // title sits between marker and comma.
            let after_marker = pos + marker.len();
            match text[after_marker..].find(',') {
                Some(rel) => {
                    let comma = after_marker + rel;
                    let title = text[after_marker..comma].trim().to_string();
                    (comma + 1, title)
                }
                None => {
                    // Marker without its closing comma: no theme boundary.
                    return TXSummary {
                        theme: ThemePart {
                            citation_expression: String::new(),
                            title_phrase: String::new(),
                            rendered: String::new(),
                        },
                        explanation: text.to_string(),
                        full_text: text.to_string(),
                    };
                }
            }
        }
        Locale::Ko => {
            // Theme runs through the marker, plus a directly following comma.
            let marker_end = pos + marker.len();
            let end = match text[marker_end..].chars().next() {
                Some(',') => marker_end + 1,
                _ => marker_end,
            };
            let title = text[..pos].trim().to_string();
            (end, title)
        }
    };

    let rendered = text[..theme_end].to_string();
    let explanation = text[theme_end..].trim_start().to_string();
    TXSummary {
        theme: ThemePart {
            citation_expression: marker.to_string(),
            title_phrase,
            rendered,
        },
        explanation,
        full_text: text.to_string(),
    }
}

/// One structural check's outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The verdict of [`validate_tx`]: overall validity plus each check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TXValidationReport {
    pub valid: bool,
    pub checks: Vec<TxCheck>,
}

impl TXValidationReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

/// Trailing particles stripped from a Korean title when checking whether
/// the theme contains it: a title cited in prose often changes or drops
/// its final particle. Longest match wins; one strip only.
const KOREAN_PARTICLES: [&str; 17] = [
    "으로", "에서", "에게", "부터", "까지", "은", "는", "이", "가", "을", "를", "와", "과", "의",
    "도", "만", "로",
];

/// Casefold and collapse whitespace so containment checks ignore spacing
/// and letter case.
fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn strip_trailing_particle(text: &str) -> Option<String> {
    let trimmed = text.trim_end();
    KOREAN_PARTICLES
        .iter()
        .find_map(|p| trimmed.strip_suffix(p))
        .map(|stem| stem.trim_end().to_string())
}

fn contains_hangul(text: &str) -> bool {
    text.chars().any(|c| ('\u{AC00}'..='\u{D7A3}').contains(&c))
}

/// Normalized containment of the table title in the theme, with a Korean
/// title retried minus its trailing particle.
fn theme_contains_title(theme: &str, table_title: &str) -> bool {
    let theme_norm = normalize(theme);
    let title_norm = normalize(table_title);
    if !title_norm.is_empty() && theme_norm.contains(&title_norm) {
        return true;
    }
    if contains_hangul(table_title) {
        if let Some(stem) = strip_trailing_particle(&title_norm) {
            if !stem.is_empty() && theme_norm.contains(&stem) {
                return true;
            }
        }
    }
    false
}

/// Count sentence terminators (. ! ?), skipping periods that sit between
/// digits so decimals and thousands groupings do not count as boundaries.
pub fn sentence_terminator_count(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '!' | '?' => count += 1,
            '.' => {
                let prev_digit = i.checked_sub(1).is_some_and(|p| chars[p].is_ascii_digit());
                let next_digit = chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if !(prev_digit && next_digit) {
                    count += 1;
                }
            }
            _ => {}
        }
    }
    count
}

/// Run every structural check against a parsed summary. The summary is
/// valid only when all checks pass; each check reports independently so
/// regeneration prompts can name what failed.
pub fn validate_tx(summary: &TXSummary, table_title: &str) -> TXValidationReport {
    let mut checks = Vec::new();

    let has_citation =
        !summary.theme.rendered.trim().is_empty() && !summary.theme.citation_expression.is_empty();
    checks.push(TxCheck {
        name: "has_citation_expression",
        passed: has_citation,
        detail: if has_citation {
            format!("found {:?}", summary.theme.citation_expression)
        } else {
            "no citation marker found".to_string()
        },
    });

    let contains_title = theme_contains_title(&summary.theme.rendered, table_title);
    checks.push(TxCheck {
        name: "theme_contains_title_phrase",
        passed: contains_title,
        detail: if contains_title {
            "title phrase present in theme".to_string()
        } else {
            format!("theme does not contain {table_title:?}")
        },
    });

    let is_prefix = summary.full_text.starts_with(&summary.theme.rendered);
    checks.push(TxCheck {
        name: "theme_is_prefix",
        passed: is_prefix,
        detail: if is_prefix {
            "theme opens the sentence".to_string()
        } else {
            "theme is not sentence-initial".to_string()
        },
    });

    let explanation_nonempty = !summary.explanation.trim().is_empty();
    checks.push(TxCheck {
        name: "explanation_nonempty",
        passed: explanation_nonempty,
        detail: if explanation_nonempty {
            "explanation present".to_string()
        } else {
            "explanation is empty".to_string()
        },
    });

    let terminators = sentence_terminator_count(&summary.full_text);
    checks.push(TxCheck {
        name: "single_sentence",
        passed: terminators == 1,
        detail: format!("{terminators} sentence terminator(s)"),
    });

    TXValidationReport {
        valid: checks.iter().all(|c| c.passed),
        checks,
    }
}
