//! Summary scoring: ROUGE-1, ROUGE-L, BLEU, and corpus aggregation.
//!
//! Tokenization runs in two modes. Word mode splits on whitespace, detaches
//! punctuation at token edges, and casefolds, so "The cat sat." becomes
//! [the, cat, sat, .]. Character mode treats every non-space character as a
//! token, which suits Korean where word boundaries are unreliable. Auto
//! mode picks per reference: Hangul present means character mode.
//!
//! Scores are kept at full precision internally; rounding to two decimals
//! happens only at presentation time.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot aggregate an empty corpus")]
    EmptyCorpus,
}

/// How to tokenize texts for scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    Word,
    Char,
}

/// A tokenized text. Construct through [`tokenize`] so candidate and
/// reference always share one normalization; [`TokenSeq::from_raw`] exists
/// for pre-tokenized input such as oracle tests and FFI callers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    pub fn from_raw(tokens: Vec<String>) -> Self {
        TokenSeq { tokens }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_hangul(c: char) -> bool {
    ('\u{AC00}'..='\u{D7A3}').contains(&c) || ('\u{1100}'..='\u{11FF}').contains(&c)
}

/// Mode for a reference text: character mode when Hangul is present.
pub fn detect_mode(reference: &str) -> TokenizeMode {
    if reference.chars().any(is_hangul) {
        TokenizeMode::Char
    } else {
        TokenizeMode::Word
    }
}

/// Punctuation detaches at token edges; interior punctuation (decimals,
/// apostrophes, hyphens) stays inside the token.
fn is_edge_punctuation(c: char) -> bool {
    !c.is_alphanumeric()
}

pub fn tokenize(text: &str, mode: TokenizeMode) -> TokenSeq {
    let tokens = match mode {
        TokenizeMode::Word => tokenize_words(text),
        TokenizeMode::Char => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_string())
            .collect(),
    };
    TokenSeq { tokens }
}

fn tokenize_words(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_edge_punctuation(chars[start]) {
            start += 1;
        }
        while end > start && is_edge_punctuation(chars[end - 1]) {
            end -= 1;
        }
        let leading: Vec<String> = chars[..start].iter().map(|c| c.to_string()).collect();
        let trailing: Vec<String> = chars[end..].iter().map(|c| c.to_string()).collect();
        tokens.extend(leading);
        if start < end {
            let core: String = chars[start..end].iter().collect();
            tokens.push(core.to_lowercase());
        }
        tokens.extend(trailing);
    }
    tokens
}

fn token_counts(seq: &TokenSeq) -> HashMap<&str, usize> {
    let mut counts = HashMap::new();
    for token in seq.tokens() {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Unigram F1 with multiset (clipped) matching: each reference token can
/// be matched at most as many times as it appears.
pub fn rouge1(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let cand_counts = token_counts(candidate);
    let ref_counts = token_counts(reference);
    let matched: usize = cand_counts
        .iter()
        .map(|(token, &count)| count.min(*ref_counts.get(token).unwrap_or(&0)))
        .sum();
    f1(matched, candidate.len(), reference.len())
}

fn f1(matched: usize, cand_len: usize, ref_len: usize) -> f64 {
    if matched == 0 {
        return 0.0;
    }
    let precision = matched as f64 / cand_len as f64;
    let recall = matched as f64 / ref_len as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Length of the longest common subsequence, by dynamic programming over
/// a (m+1) x (n+1) table.
pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    let (m, n) = (a.len(), b.len());
    let mut table = vec![0usize; (m + 1) * (n + 1)];
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    for i in 1..=m {
        for j in 1..=n {
            table[idx(i, j)] = if a[i - 1] == b[j - 1] {
                table[idx(i - 1, j - 1)] + 1
            } else {
                table[idx(i - 1, j)].max(table[idx(i, j - 1)])
            };
        }
    }
    table[idx(m, n)]
}

/// LCS-based F1.
pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(candidate.tokens(), reference.tokens());
    f1(lcs, candidate.len(), reference.len())
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU with uniform weights over n-gram orders 1..=max_n.
///
/// The exact formula, pinned so scores are reproducible:
/// modified precision p_n clips each candidate n-gram's count at its
/// reference count. p_1 is unsmoothed, so zero unigram matches score 0.
/// For n >= 2 a zero match count is smoothed to 1/(total_n + 1) where
/// total_n is the candidate's n-gram total; orders with no candidate
/// n-grams at all (candidate shorter than n) are skipped. The brevity
/// penalty is exp(1 - |ref|/|cand|) when the candidate is shorter than
/// the reference, else 1. An empty candidate scores 0.
pub fn bleu(candidate: &TokenSeq, reference: &TokenSeq, max_n: usize) -> f64 {
    assert!(max_n >= 1, "bleu requires max_n >= 1");
    if candidate.is_empty() {
        return 0.0;
    }

    let mut log_sum = 0.0;
    let mut orders_used = 0usize;
    for n in 1..=max_n {
        let total = candidate.len().saturating_sub(n - 1);
        if candidate.len() < n {
            break;
        }
        let cand_grams = ngram_counts(candidate.tokens(), n);
        let ref_grams = ngram_counts(reference.tokens(), n);
        let matched: usize = cand_grams
            .iter()
            .map(|(gram, &count)| count.min(*ref_grams.get(*gram).unwrap_or(&0)))
            .sum();
        let precision = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += precision.ln();
        orders_used += 1;
    }

    let geo_mean = (log_sum / orders_used as f64).exp();
    let brevity = if candidate.len() < reference.len() {
        (1.0 - reference.len() as f64 / candidate.len() as f64).exp()
    } else {
        1.0
    };
    brevity * geo_mean
}

/// The three metrics for one candidate-reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub rouge1: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub bleu: f64,
}

/// Tokenize and score one pair. `mode` overrides auto-detection from the
/// reference when given.
pub fn score_pair(candidate: &str, reference: &str, mode: Option<TokenizeMode>) -> ScoreTriple {
    let mode = mode.unwrap_or_else(|| detect_mode(reference));
    let cand = tokenize(candidate, mode);
    let reference = tokenize(reference, mode);
    ScoreTriple {
        rouge1: rouge1(&cand, &reference),
        rouge_l: rouge_l(&cand, &reference),
        bleu: bleu(&cand, &reference, 4),
    }
}

/// Scores for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocScore {
    pub id: String,
    pub scores: ScoreTriple,
}

/// Corpus-level aggregation: per-document scores, per-metric means, and
/// the mean of the three means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_document: Vec<DocScore>,
    pub corpus_means: ScoreTriple,
    pub overall_average: f64,
}

pub fn aggregate(per_document: Vec<DocScore>) -> Result<EvalReport, EvalError> {
    if per_document.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let n = per_document.len() as f64;
    let sum = per_document.iter().fold((0.0, 0.0, 0.0), |acc, doc| {
        (
            acc.0 + doc.scores.rouge1,
            acc.1 + doc.scores.rouge_l,
            acc.2 + doc.scores.bleu,
        )
    });
    let corpus_means = ScoreTriple {
        rouge1: sum.0 / n,
        rouge_l: sum.1 / n,
        bleu: sum.2 / n,
    };
    let overall_average = (corpus_means.rouge1 + corpus_means.rouge_l + corpus_means.bleu) / 3.0;
    Ok(EvalReport {
        per_document,
        corpus_means,
        overall_average,
    })
}

/// Round half away from zero to two decimals, for presentation only.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}
