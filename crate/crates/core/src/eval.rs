//! Scoring predicted vectors against gold standards: correlation
//! nearest-neighbor rank, accuracy@k under type and token weighting, and
//! per-class breakdowns.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Dataset, EmbeddingTable};
use crate::error::{Error, Result};
use crate::form::FormMatrix;
use crate::linalg::{normalize_rows, normalize_vec, standardize_rows, standardize_vec};

/// Similarity used for nearest-neighbor ranking. Pearson is the default;
/// cosine is available for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Pearson,
    Cosine,
}

impl std::str::FromStr for Similarity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" | "correlation" => Ok(Similarity::Pearson),
            "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::Argument(format!("unknown similarity {other:?}"))),
        }
    }
}

fn prepare_rows(m: &Array2<f64>, sim: Similarity) -> (Array2<f64>, Vec<bool>) {
    match sim {
        Similarity::Pearson => standardize_rows(m),
        Similarity::Cosine => normalize_rows(m),
    }
}

/// Rank of the gold target among candidates, and the correlation with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankResult {
    /// 1-based; 1 + number of candidates strictly more correlated than the
    /// target, ties broken lexicographically (earlier word ranks better).
    pub rank: usize,
    pub r_target: f64,
    /// Zero-variance prediction or target; its correlations never win.
    pub degenerate: bool,
}

fn rank_in_row(
    corr: &[f64],
    target: usize,
    words: &[String],
    target_word: &str,
) -> usize {
    let rt = corr[target];
    let mut rank = 1;
    for (j, &r) in corr.iter().enumerate() {
        if j == target {
            continue;
        }
        if r > rt || (r == rt && words[j].as_str() < target_word) {
            rank += 1;
        }
    }
    rank
}

/// Correlate a predicted vector with every candidate and locate the target.
/// Zero-variance vectors on either side yield a correlation of negative
/// infinity for that pair, so they never outrank anything.
pub fn rank_target(
    predicted: ArrayView1<f64>,
    target: &str,
    candidates: &EmbeddingTable,
) -> Result<RankResult> {
    rank_target_with(predicted, target, candidates, Similarity::Pearson)
}

pub fn rank_target_with(
    predicted: ArrayView1<f64>,
    target: &str,
    candidates: &EmbeddingTable,
    sim: Similarity,
) -> Result<RankResult> {
    if predicted.len() != candidates.dim() {
        return Err(Error::Dimension(format!(
            "prediction has {} components, candidates have {}",
            predicted.len(),
            candidates.dim()
        )));
    }
    let target_idx = candidates
        .position(target)
        .ok_or_else(|| Error::Argument(format!("target {target:?} not among candidates")))?;
    let (zc, flags) = prepare_rows(candidates.vectors(), sim);
    let zp = match sim {
        Similarity::Pearson => standardize_vec(predicted),
        Similarity::Cosine => normalize_vec(predicted),
    };
    let degenerate_pred = zp.is_none();
    let corr: Vec<f64> = match &zp {
        Some(zp) => zc
            .axis_iter(Axis(0))
            .zip(flags.iter())
            .map(|(row, &flag)| if flag { f64::NEG_INFINITY } else { row.dot(zp) })
            .collect(),
        None => vec![f64::NEG_INFINITY; candidates.len()],
    };
    let rank = rank_in_row(&corr, target_idx, candidates.words(), target);
    Ok(RankResult {
        rank,
        r_target: corr[target_idx],
        degenerate: degenerate_pred || flags[target_idx],
    })
}

/// Per-word outcome inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct WordScore {
    pub word: String,
    pub class: String,
    pub frequency: u64,
    pub rank: usize,
    /// Correlation with the word's own gold vector; negative infinity when
    /// degenerate.
    pub r_target: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassAccuracy {
    pub types: usize,
    pub tokens: u64,
    pub type_acc: Vec<f64>,
    pub token_acc: Vec<f64>,
}

/// Accuracy@k evaluation with type- and token-weighted variants and an
/// optional per-class breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct AccuracyReport {
    pub ks: Vec<usize>,
    pub type_acc: Vec<f64>,
    pub token_acc: Vec<f64>,
    pub total_types: usize,
    pub total_tokens: u64,
    pub per_class: BTreeMap<String, ClassAccuracy>,
    pub records: Vec<WordScore>,
}

impl AccuracyReport {
    pub fn from_records(records: Vec<WordScore>, ks: Vec<usize>) -> AccuracyReport {
        let total_types = records.len();
        let total_tokens: u64 = records.iter().map(|r| r.frequency).sum();
        let acc_pair = |recs: &[&WordScore]| -> (Vec<f64>, Vec<f64>) {
            let types = recs.len() as f64;
            let tokens: u64 = recs.iter().map(|r| r.frequency).sum();
            let mut type_acc = Vec::with_capacity(ks.len());
            let mut token_acc = Vec::with_capacity(ks.len());
            for &k in &ks {
                let correct_types = recs.iter().filter(|r| r.rank <= k).count() as f64;
                type_acc.push(if types > 0.0 { correct_types / types } else { 0.0 });
                let correct_tokens: u64 =
                    recs.iter().filter(|r| r.rank <= k).map(|r| r.frequency).sum();
                token_acc.push(if tokens > 0 {
                    correct_tokens as f64 / tokens as f64
                } else if types > 0.0 {
                    // No token mass: fall back to type weighting.
                    correct_types / types
                } else {
                    0.0
                });
            }
            (type_acc, token_acc)
        };

        let all: Vec<&WordScore> = records.iter().collect();
        let (type_acc, token_acc) = acc_pair(&all);

        let mut by_class: BTreeMap<String, Vec<&WordScore>> = BTreeMap::new();
        for r in &records {
            by_class.entry(r.class.clone()).or_default().push(r);
        }
        let per_class = by_class
            .into_iter()
            .map(|(class, recs)| {
                let (ta, ka) = acc_pair(&recs);
                (
                    class,
                    ClassAccuracy {
                        types: recs.len(),
                        tokens: recs.iter().map(|r| r.frequency).sum(),
                        type_acc: ta,
                        token_acc: ka,
                    },
                )
            })
            .collect();

        AccuracyReport { ks, type_acc, token_acc, total_types, total_tokens, per_class, records }
    }

    pub fn type_acc_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&kk| kk == k).map(|i| self.type_acc[i])
    }

    pub fn token_acc_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&kk| kk == k).map(|i| self.token_acc[i])
    }
}

fn validate_ks(ks: &[usize], n_candidates: usize) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::Argument("at least one k is required".into()));
    }
    for &k in ks {
        if k == 0 || k > n_candidates {
            return Err(Error::Argument(format!(
                "k must lie in 1..={n_candidates}, got {k}"
            )));
        }
    }
    Ok(())
}

const BLOCK: usize = 256;

/// Rank every prediction against the candidate table and assemble a report.
/// Prediction row i corresponds to `gold.entries[i]`.
pub fn accuracy_report(
    predictions: &Array2<f64>,
    gold: &Dataset,
    candidates: &EmbeddingTable,
    ks: &[usize],
    class_tag: Option<&str>,
) -> Result<AccuracyReport> {
    accuracy_report_with(predictions, gold, candidates, ks, class_tag, Similarity::Pearson)
}

pub fn accuracy_report_with(
    predictions: &Array2<f64>,
    gold: &Dataset,
    candidates: &EmbeddingTable,
    ks: &[usize],
    class_tag: Option<&str>,
    sim: Similarity,
) -> Result<AccuracyReport> {
    if predictions.nrows() != gold.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} gold entries",
            predictions.nrows(),
            gold.len()
        )));
    }
    if predictions.ncols() != candidates.dim() {
        return Err(Error::Dimension(format!(
            "predictions have {} components, candidates have {}",
            predictions.ncols(),
            candidates.dim()
        )));
    }
    validate_ks(ks, candidates.len())?;

    let targets: Vec<usize> = gold
        .entries
        .iter()
        .map(|e| {
            candidates.position(&e.form).ok_or_else(|| {
                Error::Argument(format!("gold word {:?} not among candidates", e.form))
            })
        })
        .collect::<Result<_>>()?;

    let (zc, cand_flags) = prepare_rows(candidates.vectors(), sim);
    let (zp, pred_flags) = prepare_rows(predictions, sim);
    let words = candidates.words();

    let mut records: Vec<WordScore> = Vec::with_capacity(gold.len());
    let mut block_start = 0;
    while block_start < zp.nrows() {
        let block_end = (block_start + BLOCK).min(zp.nrows());
        let block = zp.slice(ndarray::s![block_start..block_end, ..]);
        let mut corr = block.dot(&zc.t());
        // Degenerate pairs never win.
        for (bi, mut row) in corr.axis_iter_mut(Axis(0)).enumerate() {
            if pred_flags[block_start + bi] {
                row.fill(f64::NEG_INFINITY);
            } else {
                for (j, v) in row.iter_mut().enumerate() {
                    if cand_flags[j] {
                        *v = f64::NEG_INFINITY;
                    }
                }
            }
        }
        let block_records: Vec<WordScore> = (block_start..block_end)
            .into_par_iter()
            .map(|i| {
                let entry = &gold.entries[i];
                let row = corr.row(i - block_start);
                let row = row.as_slice().expect("correlation rows are contiguous");
                let t = targets[i];
                let rank = rank_in_row(row, t, words, &entry.form);
                WordScore {
                    word: entry.form.clone(),
                    class: class_tag
                        .and_then(|tag| entry.tag(tag))
                        .unwrap_or("")
                        .to_string(),
                    frequency: entry.frequency,
                    rank,
                    r_target: row[t],
                    degenerate: pred_flags[i] || cand_flags[t],
                }
            })
            .collect();
        records.extend(block_records);
        block_start = block_end;
    }

    Ok(AccuracyReport::from_records(records, ks.to_vec()))
}

/// Production-side evaluation: candidates are the rows of the gold form
/// matrix, correlations computed between real-valued predictions and the
/// binary rows. Prediction row i corresponds to gold row i.
pub fn production_accuracy(
    predictions: &Array2<f64>,
    gold_forms: &FormMatrix,
    gold: &Dataset,
    ks: &[usize],
    class_tag: Option<&str>,
) -> Result<AccuracyReport> {
    production_accuracy_with(predictions, gold_forms, gold, ks, class_tag, Similarity::Pearson)
}

pub fn production_accuracy_with(
    predictions: &Array2<f64>,
    gold_forms: &FormMatrix,
    gold: &Dataset,
    ks: &[usize],
    class_tag: Option<&str>,
    sim: Similarity,
) -> Result<AccuracyReport> {
    if predictions.nrows() != gold.len() || gold_forms.nrows() != gold.len() {
        return Err(Error::Dimension(format!(
            "{} predictions, {} form rows, {} gold entries",
            predictions.nrows(),
            gold_forms.nrows(),
            gold.len()
        )));
    }
    if predictions.ncols() != gold_forms.ncols() {
        return Err(Error::Dimension(format!(
            "predictions have {} components, form matrix has {} columns",
            predictions.ncols(),
            gold_forms.ncols()
        )));
    }
    validate_ks(ks, gold_forms.nrows())?;

    let p = gold_forms.ncols() as f64;
    let (zp, pred_flags) = prepare_rows(predictions, sim);
    // With a standardized prediction x, Pearson(x, binary row with a ones)
    // = sum_{active} z_x / sqrt(a - a^2/p); for cosine the denominator is
    // the row norm sqrt(a).
    let denom: Vec<f64> = gold_forms
        .rows()
        .map(|row| {
            let a = row.len() as f64;
            let v = match sim {
                Similarity::Pearson => a - a * a / p,
                Similarity::Cosine => a,
            };
            if v > 0.0 {
                v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let words: Vec<String> = gold.entries.iter().map(|e| e.form.clone()).collect();

    let records: Vec<WordScore> = (0..gold.len())
        .into_par_iter()
        .map(|i| {
            let entry = &gold.entries[i];
            let zrow = zp.row(i);
            let corr: Vec<f64> = if pred_flags[i] {
                vec![f64::NEG_INFINITY; gold.len()]
            } else {
                gold_forms
                    .rows()
                    .enumerate()
                    .map(|(j, cues)| {
                        if denom[j] == 0.0 {
                            f64::NEG_INFINITY
                        } else {
                            let s: f64 = cues.iter().map(|&c| zrow[c as usize]).sum();
                            (s / denom[j]).clamp(-1.0, 1.0)
                        }
                    })
                    .collect()
            };
            let rank = rank_in_row(&corr, i, &words, &entry.form);
            WordScore {
                word: entry.form.clone(),
                class: class_tag.and_then(|tag| entry.tag(tag)).unwrap_or("").to_string(),
                frequency: entry.frequency,
                rank,
                r_target: corr[i],
                degenerate: pred_flags[i] || denom[i] == 0.0,
            }
        })
        .collect();

    Ok(AccuracyReport::from_records(records, ks.to_vec()))
}
