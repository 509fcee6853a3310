//! Independent reference implementations ("oracles") and random input
//! generators shared by the integration tests. Everything here is written
//! against the documented behaviour with deliberately different algorithms
//! and data structures than the library, so agreement is evidence rather
//! than tautology.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::Rng;
use tabular_tx::model::{Coord, NormalizedGrid, RawCell};

// ---------------------------------------------------------------------------
// Metric oracles
// ---------------------------------------------------------------------------

/// Greedy multiset unigram matching: each candidate token consumes at most
/// one unused reference token. F1 computed in the folded 2m/(|c|+|r|) form.
pub fn oracle_rouge1(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let matched = greedy_match_count(cand, reference);
    folded_f1(matched, cand.len(), reference.len())
}

fn greedy_match_count<T: PartialEq>(cand: &[T], reference: &[T]) -> usize {
    let mut used = vec![false; reference.len()];
    let mut matched = 0;
    for c in cand {
        let slot = reference
            .iter()
            .enumerate()
            .position(|(i, r)| !used[i] && r == c);
        if let Some(i) = slot {
            used[i] = true;
            matched += 1;
        }
    }
    matched
}

fn folded_f1(matched: usize, cand_len: usize, ref_len: usize) -> f64 {
    if matched == 0 {
        0.0
    } else {
        2.0 * matched as f64 / (cand_len + ref_len) as f64
    }
}

/// Longest common subsequence by exhaustive enumeration: every subsequence
/// of the shorter side (2^n of them) is tested for being a subsequence of
/// the longer side. Only usable for sequences up to 12 tokens.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(
        short.len() <= 12,
        "exhaustive LCS is limited to 12 tokens, got {}",
        short.len()
    );
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let picked: Vec<&String> = short
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| t)
            .collect();
        if picked.len() > best && is_subsequence(&picked, long) {
            best = picked.len();
        }
    }
    best
}

fn is_subsequence(needle: &[&String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

pub fn oracle_rouge_l(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = oracle_lcs(cand, reference);
    folded_f1(lcs, cand.len(), reference.len())
}

/// BLEU per the pinned formula, computed with list scans instead of hash
/// counting: clipped matches come from greedy n-gram consumption and the
/// geometric mean is a direct k-th root of the precision product.
pub fn oracle_bleu(cand: &[String], reference: &[String], max_n: usize) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let mut precisions = Vec::new();
    for n in 1..=max_n {
        if cand.len() < n {
            break;
        }
        let cand_grams: Vec<&[String]> = cand.windows(n).collect();
        let ref_grams: Vec<&[String]> = reference.windows(n).collect();
        let matched = greedy_match_count(&cand_grams, &ref_grams);
        let total = cand_grams.len();
        let p = if matched > 0 {
            matched as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            1.0 / (total as f64 + 1.0)
        };
        precisions.push(p);
    }
    let product: f64 = precisions.iter().product();
    let geo_mean = product.powf(1.0 / precisions.len() as f64);
    let brevity = if cand.len() < reference.len() {
        (1.0 - reference.len() as f64 / cand.len() as f64).exp()
    } else {
        1.0
    };
    brevity * geo_mean
}

// ---------------------------------------------------------------------------
// Grid oracles
// ---------------------------------------------------------------------------

/// One occupied slot of the stamp-fill oracle grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stamp {
    pub value: String,
    pub is_header: bool,
    pub origin: Coord,
}

/// Naive merged-cell expansion: stamp every covered coordinate of every
/// cell into a matrix, failing on the first doubly-claimed slot. `None`
/// slots are the padding the real expansion must also produce.
#[allow(clippy::needless_range_loop)]
pub fn stamp_fill(cells: &[RawCell]) -> Result<Vec<Vec<Option<Stamp>>>, Coord> {
    let n_rows = cells.iter().map(|c| c.row + c.rowspan).max().unwrap_or(0);
    let n_cols = cells.iter().map(|c| c.col + c.colspan).max().unwrap_or(0);
    let mut grid: Vec<Vec<Option<Stamp>>> = vec![vec![None; n_cols]; n_rows];
    for cell in cells {
        for r in cell.row..cell.row + cell.rowspan {
            for c in cell.col..cell.col + cell.colspan {
                let slot = &mut grid[r][c];
                if slot.is_some() {
                    return Err(Coord::new(r, c));
                }
                *slot = Some(Stamp {
                    value: cell.value.clone(),
                    is_header: cell.is_header,
                    origin: Coord::new(cell.row, cell.col),
                });
            }
        }
    }
    Ok(grid)
}

/// Check a real expansion against the stamp-fill picture, slot by slot.
pub fn grids_agree(grid: &NormalizedGrid, oracle: &[Vec<Option<Stamp>>]) -> bool {
    if grid.n_rows() != oracle.len() {
        return false;
    }
    if grid.n_rows() > 0 && grid.n_cols() != oracle[0].len() {
        return false;
    }
    for (coord, entry) in grid.iter() {
        match &oracle[coord.row][coord.col] {
            None => {
                if !entry.is_padding {
                    return false;
                }
            }
            Some(stamp) => {
                if entry.is_padding
                    || entry.value != stamp.value
                    || entry.is_header != stamp.is_header
                    || entry.origin != stamp.origin
                {
                    return false;
                }
            }
        }
    }
    true
}

/// Brute-force related-header scan: walk the whole grid and keep every
/// header span sharing the target's row or column, keyed by anchor.
pub fn brute_force_related(
    grid: &NormalizedGrid,
    target: Coord,
) -> BTreeSet<(usize, usize, String)> {
    let mut related = BTreeSet::new();
    for (coord, entry) in grid.iter() {
        if entry.is_header
            && !entry.is_padding
            && (coord.row == target.row || coord.col == target.col)
        {
            related.insert((entry.origin.row, entry.origin.col, entry.value.clone()));
        }
    }
    related
}

// ---------------------------------------------------------------------------
// Random input generators
// ---------------------------------------------------------------------------

const TOKEN_POOL: [&str; 6] = ["the", "cat", "sat", "mat", "7", "rain"];

/// Random token sequence of length 0..=12 over a small pool, so collisions
/// and repeats actually occur.
pub fn random_tokens(rng: &mut StdRng) -> Vec<String> {
    let len = rng.gen_range(0..=12);
    (0..len)
        .map(|_| TOKEN_POOL[rng.gen_range(0..TOKEN_POOL.len())].to_string())
        .collect()
}

const VALUE_POOL: [&str; 8] = [
    "2,437",
    "147",
    "12.5%",
    "61.301 trillion KRW",
    "approved",
    "pending",
    "2020",
    "total",
];

/// Random non-overlapping layout on a grid of up to 8x8, with spans up to
/// 3x3, occasional gaps (padding), occasional empty values, and a mix of
/// explicit header flags.
#[allow(clippy::needless_range_loop)]
pub fn random_layout(rng: &mut StdRng) -> Vec<RawCell> {
    let n_rows = rng.gen_range(1..=8);
    let n_cols = rng.gen_range(1..=8);
    let mut claimed = vec![vec![false; n_cols]; n_rows];
    let mut cells = Vec::new();

    for r in 0..n_rows {
        for c in 0..n_cols {
            if claimed[r][c] || rng.gen_bool(0.12) {
                continue;
            }
            let want_cols = rng.gen_range(1..=3.min(n_cols - c));
            let mut colspan = 0;
            while colspan < want_cols && !claimed[r][c + colspan] {
                colspan += 1;
            }
            let want_rows = rng.gen_range(1..=3.min(n_rows - r));
            let mut rowspan = 1;
            'grow: while rowspan < want_rows {
                for cc in c..c + colspan {
                    if claimed[r + rowspan][cc] {
                        break 'grow;
                    }
                }
                rowspan += 1;
            }
            for rr in r..r + rowspan {
                for cc in c..c + colspan {
                    claimed[rr][cc] = true;
                }
            }
            let is_header = if r == 0 || c == 0 {
                rng.gen_bool(0.7)
            } else {
                rng.gen_bool(0.05)
            };
            let value = if rng.gen_bool(0.08) {
                String::new()
            } else {
                VALUE_POOL[rng.gen_range(0..VALUE_POOL.len())].to_string()
            };
            cells.push(RawCell {
                row: r,
                col: c,
                rowspan,
                colspan,
                value,
                is_header,
            });
        }
    }
    cells
}
