//! Category centroids in semantic space and their correlation structure with
//! the cue vectors of a trained mapping: which sublexical cues have converged
//! on the prototypical meaning of a morphological category.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::form::{extract_ngrams, CueIndex};
use crate::linalg::pearson;
use crate::mapping::LinearMapping;

/// Mean embedding of all words sharing a category label.
#[derive(Debug, Clone, Serialize)]
pub struct Centroid {
    /// Tag values joined by '+', in tag-key order (e.g. "ess+sg").
    pub tag: String,
    pub vector: Array1<f64>,
    pub count: usize,
}

/// Category label of an entry under the given tag keys.
fn category_label(entry: &crate::corpus::WordEntry, tag_keys: &[String]) -> Result<String> {
    let mut parts = Vec::with_capacity(tag_keys.len());
    for key in tag_keys {
        match entry.tag(key) {
            Some(v) => parts.push(v),
            None => {
                return Err(Error::Argument(format!(
                    "word {:?} is missing tag {key:?}",
                    entry.form
                )))
            }
        }
    }
    Ok(parts.join("+"))
}

/// One centroid per distinct tag-value combination, unweighted type mean.
/// Set `frequency_weighted` for a token-weighted variant.
pub fn compute_centroids(
    dataset: &Dataset,
    tag_keys: &[String],
    frequency_weighted: bool,
) -> Result<Vec<Centroid>> {
    if dataset.is_empty() {
        return Err(Error::Argument("cannot compute centroids of an empty dataset".into()));
    }
    if tag_keys.is_empty() {
        return Err(Error::Argument("at least one tag key is required".into()));
    }
    let dim = dataset.dim();
    let mut sums: BTreeMap<String, (Array1<f64>, f64, usize)> = BTreeMap::new();
    for (i, entry) in dataset.entries.iter().enumerate() {
        let label = category_label(entry, tag_keys)?;
        let weight = if frequency_weighted { entry.frequency as f64 } else { 1.0 };
        let slot = sums.entry(label).or_insert_with(|| (Array1::zeros(dim), 0.0, 0));
        slot.0.scaled_add(weight, &dataset.vector(i));
        slot.1 += weight;
        slot.2 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(tag, (sum, weight, count))| Centroid {
            tag,
            vector: if weight > 0.0 { sum / weight } else { sum },
            count,
        })
        .collect())
}

/// Which side of the mapping carries cue-specific semantic vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingSide {
    /// Comprehension: cue vectors are the rows of F.
    Rows,
    /// Production: cue vectors are the columns of G.
    Columns,
}

/// Centroids-by-cues Pearson correlation matrix. Undefined entries
/// (zero-variance cue vectors) are stored as NaN.
#[derive(Debug, Clone)]
pub struct CueCentroidMatrix {
    pub tags: Vec<String>,
    pub cues: Vec<String>,
    pub values: Array2<f64>,
}

impl CueCentroidMatrix {
    pub fn get(&self, tag: &str, cue: &str) -> Option<f64> {
        let i = self.tags.iter().position(|t| t == tag)?;
        let j = self.cues.iter().position(|c| c == cue)?;
        Some(self.values[[i, j]])
    }
}

/// Correlate every centroid with every cue vector of the mapping.
pub fn cue_centroid_correlations(
    mapping: &LinearMapping,
    cue_index: &CueIndex,
    centroids: &[Centroid],
    side: MappingSide,
) -> Result<CueCentroidMatrix> {
    if centroids.is_empty() {
        return Err(Error::Argument("no centroids given".into()));
    }
    let dim = centroids[0].vector.len();
    let n_cues = cue_index.len();
    match side {
        MappingSide::Rows => {
            if mapping.out_dim() != dim || mapping.in_dim() != n_cues {
                return Err(Error::Dimension(format!(
                    "mapping is {}x{}, expected {}x{} for row-side correlations",
                    mapping.in_dim(),
                    mapping.out_dim(),
                    n_cues,
                    dim
                )));
            }
        }
        MappingSide::Columns => {
            if mapping.in_dim() != dim || mapping.out_dim() != n_cues {
                return Err(Error::Dimension(format!(
                    "mapping is {}x{}, expected {}x{} for column-side correlations",
                    mapping.in_dim(),
                    mapping.out_dim(),
                    dim,
                    n_cues
                )));
            }
        }
    }
    let mut values = Array2::from_elem((centroids.len(), n_cues), f64::NAN);
    for (i, c) in centroids.iter().enumerate() {
        for j in 0..n_cues {
            let r = match side {
                MappingSide::Rows => pearson(c.vector.view(), mapping.weights.row(j)),
                MappingSide::Columns => pearson(c.vector.view(), mapping.weights.column(j)),
            };
            if let Some(r) = r {
                values[[i, j]] = r;
            }
        }
    }
    Ok(CueCentroidMatrix {
        tags: centroids.iter().map(|c| c.tag.clone()).collect(),
        cues: cue_index.cues().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedCue {
    pub cue: String,
    pub r: f64,
    pub rank: usize,
}

/// Whether ranks count all cues or only those passing the restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankScope {
    Global,
    Restricted,
}

/// Cues ordered by descending correlation with one centroid, ties broken by
/// cue string. `restrict` filters the cues listed; with `RankScope::Global`
/// the rank numbers still count every cue. Undefined entries are skipped.
pub fn rank_cues(
    matrix: &CueCentroidMatrix,
    tag: &str,
    restrict: Option<&dyn Fn(&str) -> bool>,
    scope: RankScope,
) -> Result<Vec<RankedCue>> {
    let row = matrix
        .tags
        .iter()
        .position(|t| t == tag)
        .ok_or_else(|| Error::Argument(format!("no centroid tagged {tag:?}")))?;
    let mut all: Vec<(usize, f64)> = matrix
        .values
        .row(row)
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_nan())
        .map(|(j, &r)| (j, r))
        .collect();
    all.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| matrix.cues[a.0].cmp(&matrix.cues[b.0]))
    });
    let keep = |cue: &str| restrict.is_none_or(|f| f(cue));
    let mut out = Vec::new();
    let mut restricted_rank = 0;
    for (global_rank0, (j, r)) in all.iter().enumerate() {
        let cue = &matrix.cues[*j];
        if keep(cue) {
            restricted_rank += 1;
            let rank = match scope {
                RankScope::Global => global_rank0 + 1,
                RankScope::Restricted => restricted_rank,
            };
            out.push(RankedCue { cue: cue.clone(), r: *r, rank });
        }
    }
    Ok(out)
}

/// Per-category digest of how well its own position-extreme cues correlate
/// with its centroid: inventory size, best correlation, mean of the top five
/// correlations, and how many of the category's own cues sit in the top ten.
/// The top-five and top-ten figures are reported both over all cues and over
/// the restricted (e.g. word-final) cues only.
#[derive(Debug, Clone, Serialize)]
pub struct CategoryCueSummary {
    pub tag: String,
    /// Distinct position-extreme cues carried by the category's members.
    pub own_cues: usize,
    /// Best correlation among the category's own cues; NaN when undefined.
    pub max_r_own: f64,
    /// Mean of the five highest correlations over all cues.
    pub mean_top5_all: f64,
    /// Mean of the five highest correlations over restricted cues.
    pub mean_top5_restricted: f64,
    /// Of the ten best-ranked cues overall, how many are the category's own.
    pub own_in_top10_all: usize,
    /// Of the ten best-ranked restricted cues, how many are the category's
    /// own.
    pub own_in_top10_restricted: usize,
}

/// Summarize each centroid's correlation row against the category's own cue
/// inventory (as produced by [`exponent_inventory`]).
pub fn category_cue_summary(
    matrix: &CueCentroidMatrix,
    inventory: &BTreeMap<String, BTreeMap<String, usize>>,
    restrict: &dyn Fn(&str) -> bool,
) -> Result<Vec<CategoryCueSummary>> {
    let mean_top = |ranked: &[RankedCue], k: usize| -> f64 {
        if ranked.is_empty() {
            return f64::NAN;
        }
        let take = k.min(ranked.len());
        ranked[..take].iter().map(|rc| rc.r).sum::<f64>() / take as f64
    };
    let mut out = Vec::new();
    for tag in &matrix.tags {
        let own: &BTreeMap<String, usize> = match inventory.get(tag) {
            Some(m) => m,
            None => continue,
        };
        let all = rank_cues(matrix, tag, None, RankScope::Global)?;
        let restricted = rank_cues(matrix, tag, Some(restrict), RankScope::Restricted)?;
        let max_r_own = own
            .keys()
            .filter_map(|cue| matrix.get(tag, cue))
            .filter(|r| !r.is_nan())
            .fold(f64::NAN, f64::max);
        let own_in = |ranked: &[RankedCue]| {
            ranked.iter().take(10).filter(|rc| own.contains_key(&rc.cue)).count()
        };
        out.push(CategoryCueSummary {
            tag: tag.clone(),
            own_cues: own.len(),
            max_r_own,
            mean_top5_all: mean_top(&all, 5),
            mean_top5_restricted: mean_top(&restricted, 5),
            own_in_top10_all: own_in(&all),
            own_in_top10_restricted: own_in(&restricted),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordPosition {
    Final,
    Initial,
}

/// The set of word-final (or word-initial) n-grams per category, with the
/// number of member words carrying each.
pub fn exponent_inventory(
    dataset: &Dataset,
    tag_keys: &[String],
    position: WordPosition,
    n: usize,
    boundary: char,
) -> Result<BTreeMap<String, BTreeMap<String, usize>>> {
    if dataset.is_empty() {
        return Err(Error::Argument("empty dataset".into()));
    }
    let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for entry in &dataset.entries {
        let label = category_label(entry, tag_keys)?;
        let cues = extract_ngrams(&entry.form, n, boundary)?;
        let cue = match position {
            WordPosition::Final => cues.last().unwrap().clone(),
            WordPosition::Initial => cues.first().unwrap().clone(),
        };
        *out.entry(label).or_default().entry(cue).or_insert(0) += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransparencyScore {
    pub word: String,
    pub tag: String,
    pub r: f64,
    /// Singleton category or zero-variance pair: the value is not informative.
    pub degenerate: bool,
}

/// Correlation of each word's embedding with the centroid of its own
/// category — the per-word semantic transparency measure.
pub fn word_transparency(
    dataset: &Dataset,
    centroids: &[Centroid],
    tag_keys: &[String],
) -> Result<Vec<TransparencyScore>> {
    let by_tag: BTreeMap<&str, &Centroid> =
        centroids.iter().map(|c| (c.tag.as_str(), c)).collect();
    let mut out = Vec::with_capacity(dataset.len());
    for (i, entry) in dataset.entries.iter().enumerate() {
        let label = category_label(entry, tag_keys)?;
        let centroid = by_tag.get(label.as_str()).ok_or_else(|| {
            Error::Argument(format!("no centroid for category {label:?} of {:?}", entry.form))
        })?;
        let r = pearson(dataset.vector(i), centroid.vector.view());
        out.push(TransparencyScore {
            word: entry.form.clone(),
            tag: label,
            r: r.unwrap_or(f64::NAN),
            degenerate: centroid.count == 1 || r.is_none(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_dataset, EmbeddingTable, JoinKey, WordEntry};
    use crate::form::build_form_matrix;
    use crate::mapping::{solve_endstate_sparse, Direction};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn dataset(words: &[(&str, &str, Vec<f64>)]) -> Dataset {
        let lex: Vec<WordEntry> = words
            .iter()
            .map(|(w, tag, _)| WordEntry::new(*w, 1).with_tag("cat", tag))
            .collect();
        let table = EmbeddingTable::from_rows(
            words[0].2.len(),
            words.iter().map(|(w, _, v)| (*w, v.clone())),
        )
        .unwrap();
        assemble_dataset(&lex, &table, JoinKey::Form).unwrap()
    }

    #[test]
    fn centroid_is_componentwise_mean() {
        let ds = dataset(&[
            ("a", "x", vec![1.0, 0.0]),
            ("b", "x", vec![0.0, 1.0]),
            ("c", "y", vec![3.0, 3.0]),
        ]);
        let cents = compute_centroids(&ds, &["cat".into()], false).unwrap();
        assert_eq!(cents.len(), 2);
        let x = cents.iter().find(|c| c.tag == "x").unwrap();
        assert_abs_diff_eq!(x.vector[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x.vector[1], 0.5, epsilon = 1e-12);
        assert_eq!(x.count, 2);
        let y = cents.iter().find(|c| c.tag == "y").unwrap();
        assert_eq!(y.vector, array![3.0, 3.0]);
        assert_eq!(y.count, 1);
    }

    #[test]
    fn centroid_matches_summation_oracle_and_ignores_order() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(6);
        let vecs: Vec<Vec<f64>> =
            (0..5).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let words: Vec<(String, Vec<f64>)> =
            vecs.iter().enumerate().map(|(i, v)| (format!("w{i}"), v.clone())).collect();
        let make = |order: &[usize]| {
            let rows: Vec<(&str, &str, Vec<f64>)> =
                order.iter().map(|&i| (words[i].0.as_str(), "g", words[i].1.clone())).collect();
            compute_centroids(&dataset(&rows), &["cat".into()], false).unwrap()
        };
        let a = make(&[0, 1, 2, 3, 4]);
        let b = make(&[4, 2, 0, 3, 1]);
        let mut oracle = [0.0; 4];
        for v in &vecs {
            for (o, x) in oracle.iter_mut().zip(v) {
                *o += x / 5.0;
            }
        }
        for (d, want) in oracle.iter().enumerate() {
            assert_abs_diff_eq!(a[0].vector[d], want, epsilon = 1e-12);
            assert_abs_diff_eq!(a[0].vector[d], b[0].vector[d], epsilon = 1e-12);
        }
    }

    #[test]
    fn adding_the_centroid_leaves_it_unchanged() {
        let ds = dataset(&[("a", "x", vec![1.0, 0.0]), ("b", "x", vec![0.0, 1.0])]);
        let before = compute_centroids(&ds, &["cat".into()], false).unwrap();
        let ds2 = dataset(&[
            ("a", "x", vec![1.0, 0.0]),
            ("b", "x", vec![0.0, 1.0]),
            ("m", "x", vec![0.5, 0.5]),
        ]);
        let after = compute_centroids(&ds2, &["cat".into()], false).unwrap();
        assert_abs_diff_eq!(before[0].vector[0], after[0].vector[0], epsilon = 1e-12);
        assert_abs_diff_eq!(before[0].vector[1], after[0].vector[1], epsilon = 1e-12);
    }

    #[test]
    fn missing_tag_names_the_word() {
        let mut ds = dataset(&[("a", "x", vec![1.0, 0.0])]);
        ds.entries[0].tags.clear();
        let err = compute_centroids(&ds, &["cat".into()], false).unwrap_err();
        assert!(err.to_string().contains("\"a\""), "{err}");
    }

    fn mapping_from_rows(rows: Vec<Vec<f64>>) -> (LinearMapping, CueIndex) {
        let mut index = CueIndex::new(4, '#');
        for i in 0..rows.len() {
            index.intern(&format!("cue{i}"));
        }
        let dim = rows[0].len();
        let weights =
            Array2::from_shape_vec((rows.len(), dim), rows.into_iter().flatten().collect())
                .unwrap();
        (
            LinearMapping {
                weights,
                direction: Direction::Comprehension,
                method: crate::mapping::Method::Eol,
                hyperparams: Default::default(),
            },
            index,
        )
    }

    #[test]
    fn identical_and_negated_cue_vectors() {
        let centroid = Centroid { tag: "x".into(), vector: array![1.0, 2.0, 0.5], count: 3 };
        let (mapping, index) = mapping_from_rows(vec![
            vec![1.0, 2.0, 0.5],
            vec![-1.0, -2.0, -0.5],
            vec![7.0, 7.0, 7.0],
        ]);
        let m =
            cue_centroid_correlations(&mapping, &index, &[centroid], MappingSide::Rows).unwrap();
        assert_abs_diff_eq!(m.get("x", "cue0").unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.get("x", "cue1").unwrap(), -1.0, epsilon = 1e-12);
        assert!(m.get("x", "cue2").unwrap().is_nan()); // zero variance, flagged
    }

    #[test]
    fn rank_cues_orders_by_r_descending() {
        let centroid = Centroid { tag: "x".into(), vector: array![1.0, 0.0, 0.0], count: 1 };
        let (mapping, index) = mapping_from_rows(vec![
            vec![0.9, 0.5, 0.1],
            vec![0.5, 0.9, 0.1],
            vec![0.1, 0.5, 0.9],
        ]);
        let m =
            cue_centroid_correlations(&mapping, &index, &[centroid], MappingSide::Rows).unwrap();
        let ranked = rank_cues(&m, "x", None, RankScope::Global).unwrap();
        assert_eq!(ranked[0].cue, "cue0");
        assert_eq!(ranked[0].rank, 1);
        assert!(ranked.windows(2).all(|w| w[0].r >= w[1].r));
        assert_eq!(ranked.last().unwrap().cue, "cue2");
    }

    #[test]
    fn hand_ranked_values() {
        let mut index = CueIndex::new(4, '#');
        for c in ["a", "b", "c"] {
            index.intern(c);
        }
        let mut values = Array2::from_elem((1, 3), f64::NAN);
        values[[0, 0]] = 0.9;
        values[[0, 1]] = 0.5;
        values[[0, 2]] = 0.7;
        let m = CueCentroidMatrix {
            tags: vec!["x".into()],
            cues: index.cues().to_vec(),
            values,
        };
        let ranked = rank_cues(&m, "x", None, RankScope::Global).unwrap();
        let as_pairs: Vec<(&str, usize)> =
            ranked.iter().map(|r| (r.cue.as_str(), r.rank)).collect();
        assert_eq!(as_pairs, vec![("a", 1), ("c", 2), ("b", 3)]);
    }

    #[test]
    fn restricted_ranks_and_global_ranks() {
        let centroid = Centroid { tag: "x".into(), vector: array![2.0, 1.0, 0.0], count: 1 };
        let weights = array![[2.0, 1.0, 0.0], [2.0, 1.5, 0.5], [0.0, 1.0, 2.0]];
        let mapping = LinearMapping {
            weights,
            direction: Direction::Comprehension,
            method: crate::mapping::Method::Eol,
            hyperparams: Default::default(),
        };
        let mut index = CueIndex::new(4, '#');
        index.intern("aaa1");
        index.intern("bb1#");
        index.intern("ccc1");
        let m =
            cue_centroid_correlations(&mapping, &index, &[centroid], MappingSide::Rows).unwrap();
        let is_final = |c: &str| c.ends_with('#');
        let global = rank_cues(&m, "x", Some(&is_final), RankScope::Global).unwrap();
        assert_eq!(global.len(), 1);
        assert_eq!(global[0].cue, "bb1#");
        assert_eq!(global[0].rank, 2); // beaten by aaa1 globally
        let restricted = rank_cues(&m, "x", Some(&is_final), RankScope::Restricted).unwrap();
        assert_eq!(restricted[0].rank, 1);
    }

    #[test]
    fn production_side_uses_columns() {
        let centroid = Centroid { tag: "x".into(), vector: array![1.0, 2.0], count: 1 };
        let mut index = CueIndex::new(4, '#');
        index.intern("c0");
        index.intern("c1");
        // G is dim x cues = 2x2; column 1 equals the centroid.
        let g = array![[5.0, 1.0], [1.0, 2.0]];
        let mapping = LinearMapping {
            weights: g,
            direction: Direction::Production,
            method: crate::mapping::Method::Eol,
            hyperparams: Default::default(),
        };
        let m = cue_centroid_correlations(&mapping, &index, &[centroid], MappingSide::Columns)
            .unwrap();
        assert_abs_diff_eq!(m.get("x", "c1").unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn inventory_counts_final_ngrams() {
        let ds = dataset(&[
            ("kivinä", "ess", vec![1.0, 0.0]),
            ("puuna", "ess", vec![0.0, 1.0]),
            ("vuonna", "ess", vec![0.5, 0.5]),
            ("kello", "nom", vec![0.2, 0.8]),
        ]);
        let inv =
            exponent_inventory(&ds, &["cat".into()], WordPosition::Final, 4, '#').unwrap();
        let ess = &inv["ess"];
        assert_eq!(ess.len(), 3);
        assert_eq!(ess["inä#"], 1);
        assert_eq!(ess["una#"], 1);
        assert_eq!(ess["nna#"], 1);
        assert_eq!(ess.values().sum::<usize>(), 3);
        assert_eq!(inv["nom"].values().sum::<usize>(), 1);
    }

    #[test]
    fn inventory_collapses_shared_endings() {
        let ds = dataset(&[
            ("talona", "ess", vec![1.0, 0.0]),
            ("kotona", "ess", vec![0.0, 1.0]),
        ]);
        let inv =
            exponent_inventory(&ds, &["cat".into()], WordPosition::Final, 4, '#').unwrap();
        assert_eq!(inv["ess"].len(), 1);
        assert_eq!(inv["ess"]["ona#"], 2);
    }

    #[test]
    fn transparency_of_the_centroid_itself_is_one() {
        let ds = dataset(&[
            ("a", "x", vec![1.0, 0.0, 0.5]),
            ("b", "x", vec![1.0, 0.0, 0.5]),
        ]);
        let cents = compute_centroids(&ds, &["cat".into()], false).unwrap();
        let scores = word_transparency(&ds, &cents, &["cat".into()]).unwrap();
        assert_abs_diff_eq!(scores[0].r, 1.0, epsilon = 1e-12);
        assert!(!scores[0].degenerate);
    }

    #[test]
    fn transparency_matches_hand_oracle() {
        let ds = dataset(&[
            ("a", "x", vec![1.0, 0.0, 0.2]),
            ("b", "x", vec![0.0, 1.0, 0.6]),
        ]);
        let cents = compute_centroids(&ds, &["cat".into()], false).unwrap();
        let scores = word_transparency(&ds, &cents, &["cat".into()]).unwrap();
        let centroid = array![0.5, 0.5, 0.4];
        let oracle = pearson(array![1.0, 0.0, 0.2].view(), centroid.view()).unwrap();
        assert_abs_diff_eq!(scores[0].r, oracle, epsilon = 1e-12);
    }

    #[test]
    fn singleton_category_flagged_degenerate() {
        let ds = dataset(&[("a", "x", vec![1.0, 0.0, 0.3])]);
        let cents = compute_centroids(&ds, &["cat".into()], false).unwrap();
        let scores = word_transparency(&ds, &cents, &["cat".into()]).unwrap();
        assert_abs_diff_eq!(scores[0].r, 1.0, epsilon = 1e-12);
        assert!(scores[0].degenerate);
    }

    #[test]
    fn category_cue_summary_hand_checked() {
        // Two categories over four cues, two of them "final".
        let mut index = CueIndex::new(4, '#');
        for c in ["aaa1", "bb1#", "ccc1", "dd2#"] {
            index.intern(c);
        }
        let mut values = Array2::from_elem((2, 4), f64::NAN);
        // Category x: bb1# is its own exponent and correlates best overall.
        values[[0, 0]] = 0.5;
        values[[0, 1]] = 0.9;
        values[[0, 2]] = 0.2;
        values[[0, 3]] = 0.4;
        // Category y: its exponent dd2# is beaten by a non-final cue.
        values[[1, 0]] = 0.8;
        values[[1, 1]] = 0.1;
        values[[1, 2]] = 0.3;
        values[[1, 3]] = 0.6;
        let matrix = CueCentroidMatrix {
            tags: vec!["x".into(), "y".into()],
            cues: index.cues().to_vec(),
            values,
        };
        let inventory = BTreeMap::from([
            ("x".to_string(), BTreeMap::from([("bb1#".to_string(), 3usize)])),
            ("y".to_string(), BTreeMap::from([("dd2#".to_string(), 2usize)])),
        ]);
        let is_final = |c: &str| c.ends_with('#');
        let summary = category_cue_summary(&matrix, &inventory, &is_final).unwrap();
        let x = &summary[0];
        assert_eq!(x.own_cues, 1);
        assert_abs_diff_eq!(x.max_r_own, 0.9, epsilon = 1e-12);
        // Top five over all four cues: mean of all entries.
        assert_abs_diff_eq!(x.mean_top5_all, (0.5 + 0.9 + 0.2 + 0.4) / 4.0, epsilon = 1e-12);
        // Restricted to finals: bb1#, dd2#.
        assert_abs_diff_eq!(x.mean_top5_restricted, (0.9 + 0.4) / 2.0, epsilon = 1e-12);
        assert_eq!(x.own_in_top10_all, 1);
        let y = &summary[1];
        assert_abs_diff_eq!(y.max_r_own, 0.6, epsilon = 1e-12);
        assert_eq!(y.own_in_top10_all, 1);
        assert_eq!(y.own_in_top10_restricted, 1);
    }

    #[test]
    fn synthetic_prefix_language_initial_cue_ranks_first() {
        // Mirror image of the suffixing case: exponents realized as prefixes,
        // the word-initial cue should rank first for each prefix centroid.
        use rand::{Rng, SeedableRng};
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let normal = rand_distr::StandardNormal;
        let dim = 20;
        let prefixes = ["ber", "men", "pen", "ter", "kes", "pra"];
        let stems: Vec<String> = {
            let consonants = b"kltnspmvrj";
            let vowels = b"aeiouy";
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::new();
            while out.len() < 20 {
                let s: String = (0..4)
                    .map(|i| {
                        let set: &[u8] = if i % 2 == 0 { consonants } else { vowels };
                        set[rng.gen_range(0..set.len())] as char
                    })
                    .collect();
                if seen.insert(s.clone()) {
                    out.push(s);
                }
            }
            out
        };
        let mut entries = Vec::new();
        let mut table = EmbeddingTable::new(dim).unwrap();
        let prefix_vecs: Vec<Vec<f64>> = prefixes
            .iter()
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        let stem_vecs: Vec<Vec<f64>> = stems
            .iter()
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        for (j, prefix) in prefixes.iter().enumerate() {
            for (i, stem) in stems.iter().enumerate() {
                let word = format!("{prefix}{stem}");
                let v: Vec<f64> = (0..dim)
                    .map(|d| {
                        let noise: f64 = normal.sample(&mut rng);
                        prefix_vecs[j][d] + stem_vecs[i][d] + 0.05 * noise
                    })
                    .collect();
                table.insert(word.clone(), &v).unwrap();
                entries.push(WordEntry::new(word, 1).with_tag("prefix", prefix));
            }
        }
        let ds = assemble_dataset(&entries, &table, JoinKey::Form).unwrap();
        let (index, matrix) = build_form_matrix(&ds, 4, '#').unwrap();
        let targets = ds.embeddings.clone();
        let mapping =
            solve_endstate_sparse(&matrix, &targets, 0.0, Direction::Comprehension).unwrap();
        let cents = compute_centroids(&ds, &["prefix".into()], false).unwrap();
        let m = cue_centroid_correlations(&mapping, &index, &cents, MappingSide::Rows).unwrap();
        for cent in &cents {
            let expected = format!("#{}", cent.tag);
            let top5 = rank_cues(&m, &cent.tag, None, RankScope::Global).unwrap();
            assert_eq!(
                top5[0].cue, expected,
                "prefix {}: top cues {:?}",
                cent.tag,
                &top5[..5.min(top5.len())]
            );
        }
        // The initial-position inventory has exactly the prefix cue per
        // category.
        let inv =
            exponent_inventory(&ds, &["prefix".into()], WordPosition::Initial, 4, '#').unwrap();
        for prefix in prefixes {
            assert_eq!(inv[prefix].len(), 1);
            assert_eq!(inv[prefix][&format!("#{prefix}")], stems.len());
        }
    }

    #[test]
    fn synthetic_language_final_cue_ranks_first() {
        // Categories = centroid + iid noise with unique final cues: the
        // trained comprehension mapping should place each exponent's final
        // cue at rank 1 for its own centroid.
        let corpus = crate::synth::inflection_corpus(&crate::synth::InflectionSpec {
            n_lexemes: 30,
            n_exponents: 10,
            dim: 24,
            noise: 0.01,
            seed: 99,
        });
        let ds = assemble_dataset(&corpus.entries, &corpus.table, JoinKey::Form).unwrap();
        let (index, matrix) = build_form_matrix(&ds, 4, '#').unwrap();
        let targets = ds.embeddings.clone();
        let mapping =
            solve_endstate_sparse(&matrix, &targets, 0.0, Direction::Comprehension).unwrap();
        let cents = compute_centroids(&ds, &["exponent".into()], false).unwrap();
        let m = cue_centroid_correlations(&mapping, &index, &cents, MappingSide::Rows).unwrap();
        for cent in &cents {
            let final_cue = &corpus.final_cues[&cent.tag];
            let ranked = rank_cues(&m, &cent.tag, None, RankScope::Global).unwrap();
            assert_eq!(
                &ranked[0].cue, final_cue,
                "exponent {} expected final cue {final_cue} first, got {:?}",
                cent.tag,
                &ranked[..3.min(ranked.len())]
            );
        }
    }
}
