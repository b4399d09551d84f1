//! Class-level text anomaly scoring: retrieve the most similar stored
//! description, compare per-class fields, and reverse-localize every
//! violation into the pixel score map `S_T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::SceneBundle;
use crate::score::ScoreMap;
use crate::text::ImageText;
use crate::textbank::{serialize_text, TextBank};

/// What went wrong for one class when comparing the query against the
/// retrieved description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    ExtraClass,
    Count,
    Position,
    SizeOver,
    SizeUnder,
    MissingClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub class_name: String,
    pub kind: ViolationKind,
    /// Score weight written into the map: 1 for categorical violations,
    /// the normalized size deviation for size violations.
    pub alpha: f64,
}

/// Diagnostic companion to `S_T`: which stored image matched and which
/// classes violated the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched_image_id: String,
    pub similarity: f64,
    pub violations: Vec<Violation>,
}

/// Ratcliff–Obershelp similarity over characters: twice the total matched
/// count from recursive longest-common-substring decomposition, divided by
/// the combined length. Two empty strings compare as 1.
pub fn gestalt_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    let matched = matched_chars(&a, &b);
    2.0 * matched as f64 / total as f64
}

fn matched_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (ai, bi, len) = longest_common_block(a, b);
    if len == 0 {
        return 0;
    }
    len + matched_chars(&a[..ai], &b[..bi]) + matched_chars(&a[ai + len..], &b[bi + len..])
}

/// Longest contiguous common block, ties resolved to the smallest start in
/// `a`, then the smallest start in `b`.
fn longest_common_block(a: &[char], b: &[char]) -> (usize, usize, usize) {
    // row[j+1] = length of the common suffix of a[..=i] and b[..=j].
    let mut row = vec![0usize; b.len() + 1];
    let (mut best_a, mut best_b, mut best_len) = (0usize, 0usize, 0usize);
    for (i, &ca) in a.iter().enumerate() {
        let mut new_row = vec![0usize; b.len() + 1];
        for (j, &cb) in b.iter().enumerate() {
            if ca == cb {
                let len = row[j] + 1;
                new_row[j + 1] = len;
                // Strict '>' keeps the earliest maximal block in scan order,
                // which is the smallest start in a, then in b.
                if len > best_len {
                    best_len = len;
                    best_a = i + 1 - len;
                    best_b = j + 1 - len;
                }
            }
        }
        row = new_row;
    }
    (best_a, best_b, best_len)
}

/// Finds the stored description with the highest gestalt similarity to the
/// query over canonical serializations. Ties go to the lexicographically
/// smallest image id.
pub fn find_most_similar<'b>(bank: &'b TextBank, query: &ImageText) -> Result<(&'b ImageText, f64)> {
    if bank.is_empty() {
        return Err(Error::EmptyInput("text bank has no entries"));
    }
    let query_str = serialize_text(query);
    let mut best: Option<(&ImageText, f64)> = None;
    for entry in bank.entries() {
        let ratio = gestalt_ratio(&query_str, &serialize_text(entry));
        let better = match best {
            None => true,
            Some((cur, cur_ratio)) => {
                ratio > cur_ratio || (ratio == cur_ratio && entry.image_id() < cur.image_id())
            }
        };
        if better {
            best = Some((entry, ratio));
        }
    }
    Ok(best.expect("bank is nonempty"))
}

/// Normalized deviation of a size from `[s_min, s_max]`, clamped to `[0, 1]`.
/// Inside the range the deviation is 0; a degenerate range scores any other
/// size as 1.
pub fn size_alpha(size: f64, s_min: f64, s_max: f64) -> f64 {
    debug_assert!(s_min <= s_max);
    if (s_min..=s_max).contains(&size) {
        return 0.0;
    }
    let span = s_max - s_min;
    if span == 0.0 {
        return 1.0;
    }
    let deviation = if size > s_max {
        size - s_max
    } else {
        s_min - size
    };
    (deviation / span).clamp(0.0, 1.0)
}

/// Computes the class-level text anomaly map `S_T` for a query scene.
///
/// Per query class: a class absent from the retrieved description, or a
/// count/position mismatch, scores 1 over the class mask; an out-of-range
/// size scores `alpha` over the class mask. Classes of the retrieved
/// description missing from the query score 1 over the bank's occurrence
/// region. With `relaxed` set, only class presence is compared and the
/// count/position/size branches are skipped.
pub fn text_anomaly_map(
    query: &SceneBundle,
    bank: &TextBank,
    relaxed: bool,
) -> Result<(ScoreMap, MatchReport)> {
    let (similar, similarity) = find_most_similar(bank, &query.text)?;
    let mut map = ScoreMap::zeros(query.width, query.height);
    let mut violations = Vec::new();

    for entry in query.text.entries() {
        let mask = query
            .category_masks
            .get(&entry.class_name)
            .ok_or_else(|| Error::MissingCategoryMask(entry.class_name.clone()))?;
        match similar.entry(&entry.class_name) {
            None => {
                violations.push(Violation {
                    class_name: entry.class_name.clone(),
                    kind: ViolationKind::ExtraClass,
                    alpha: 1.0,
                });
                map.max_with_mask(mask, 1.0)?;
            }
            Some(stored) if !relaxed => {
                if entry.count != stored.count || entry.position != stored.position {
                    let kind = if entry.count != stored.count {
                        ViolationKind::Count
                    } else {
                        ViolationKind::Position
                    };
                    violations.push(Violation {
                        class_name: entry.class_name.clone(),
                        kind,
                        alpha: 1.0,
                    });
                    map.max_with_mask(mask, 1.0)?;
                } else {
                    // Size compares against the bank-global extremes, not the
                    // retrieved entry's own size.
                    let (s_min, s_max) = bank.size_range(&entry.class_name)?;
                    if entry.size > s_max || entry.size < s_min {
                        let alpha = size_alpha(entry.size, s_min, s_max);
                        violations.push(Violation {
                            class_name: entry.class_name.clone(),
                            kind: if entry.size > s_max {
                                ViolationKind::SizeOver
                            } else {
                                ViolationKind::SizeUnder
                            },
                            alpha,
                        });
                        map.max_with_mask(mask, alpha)?;
                    }
                }
            }
            Some(_) => {}
        }
    }

    // Detect missing categories: classes of the retrieved description absent
    // from the query light up the bank's occurrence region.
    for stored in similar.entries() {
        if !query.text.contains_class(&stored.class_name) {
            violations.push(Violation {
                class_name: stored.class_name.clone(),
                kind: ViolationKind::MissingClass,
                alpha: 1.0,
            });
            if let Some(occ) = bank.occurrence(&stored.class_name) {
                let resampled = occ.resize_nearest(query.width, query.height)?;
                map.max_with_mask(&resampled, 1.0)?;
            }
        }
    }

    let report = MatchReport {
        matched_image_id: similar.image_id().to_string(),
        similarity,
        violations,
    };
    Ok((map, report))
}
