//! Form space: boundary-marked letter n-grams and the binary incidence
//! matrix over them.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_N: usize = 4;
pub const DEFAULT_BOUNDARY: char = '#';

/// All n-grams of `boundary + word + boundary`, in order, duplicates kept.
/// A word whose padded form is shorter than `n` yields the padded form as a
/// single cue.
pub fn extract_ngrams(word: &str, n: usize, boundary: char) -> Result<Vec<String>> {
    if word.is_empty() {
        return Err(Error::Argument("cannot extract n-grams from an empty word".into()));
    }
    if n < 2 {
        return Err(Error::Argument(format!("n-gram length must be at least 2, got {n}")));
    }
    let mut padded: Vec<char> = Vec::with_capacity(word.chars().count() + 2);
    padded.push(boundary);
    padded.extend(word.chars());
    padded.push(boundary);
    if padded.len() < n {
        return Ok(vec![padded.into_iter().collect()]);
    }
    Ok(padded.windows(n).map(|w| w.iter().collect()).collect())
}

/// Dense, insertion-ordered bijection between cue strings and column ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CueIndex {
    pub n: usize,
    pub boundary: char,
    cues: Vec<String>,
    #[serde(skip)]
    ids: HashMap<String, u32>,
}

impl CueIndex {
    pub fn new(n: usize, boundary: char) -> Self {
        CueIndex { n, boundary, cues: Vec::new(), ids: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.cues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }

    pub fn id_of(&self, cue: &str) -> Option<u32> {
        self.ids.get(cue).copied()
    }

    pub fn cue(&self, id: u32) -> &str {
        &self.cues[id as usize]
    }

    pub fn cues(&self) -> &[String] {
        &self.cues
    }

    pub fn intern(&mut self, cue: &str) -> u32 {
        match self.ids.get(cue) {
            Some(&id) => id,
            None => {
                let id = self.cues.len() as u32;
                self.cues.push(cue.to_string());
                self.ids.insert(cue.to_string(), id);
                id
            }
        }
    }

    /// Cue carries the trailing boundary marker (word-final material).
    pub fn is_final(&self, cue: &str) -> bool {
        cue.ends_with(self.boundary)
    }

    /// Cue carries the leading boundary marker (word-initial material).
    pub fn is_initial(&self, cue: &str) -> bool {
        cue.starts_with(self.boundary)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("cue index serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut idx: CueIndex =
            serde_json::from_str(s).map_err(|e| Error::Other(format!("bad cue index: {e}")))?;
        idx.ids = idx.cues.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect();
        Ok(idx)
    }
}

/// Binary words-by-cues incidence matrix, stored as sorted column ids per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    cols: usize,
    rows: Vec<Vec<u32>>,
}

impl FormMatrix {
    pub fn new(cols: usize) -> Self {
        FormMatrix { cols, rows: Vec::new() }
    }

    pub fn push_row(&mut self, mut ids: Vec<u32>) {
        ids.sort_unstable();
        ids.dedup();
        debug_assert!(ids.last().is_none_or(|&m| (m as usize) < self.cols));
        self.rows.push(ids);
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Sorted distinct cue ids present in row `i`.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    /// Number of distinct cues in row `i`.
    pub fn row_sum(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.nrows(), self.cols));
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                m[[i, j as usize]] = 1.0;
            }
        }
        m
    }

    pub fn subset(&self, indices: &[usize]) -> FormMatrix {
        FormMatrix {
            cols: self.cols,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// One text line per row: sorted column ids, comma-separated.
    pub fn write_rows<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for row in &self.rows {
            let mut first = true;
            for id in row {
                if !first {
                    write!(w, ",")?;
                }
                write!(w, "{id}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Build the cue index (first-occurrence order) and the presence matrix for
/// the given words.
pub fn build_form_matrix_from_words<'a, I>(
    words: I,
    n: usize,
    boundary: char,
) -> Result<(CueIndex, FormMatrix)>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut index = CueIndex::new(n, boundary);
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for word in words {
        let cues = extract_ngrams(word, n, boundary)?;
        let ids = cues.iter().map(|c| index.intern(c)).collect();
        rows.push(ids);
    }
    if rows.is_empty() {
        return Err(Error::Argument("cannot build a form matrix from no words".into()));
    }
    let mut matrix = FormMatrix::new(index.len());
    for ids in rows {
        matrix.push_row(ids);
    }
    Ok((index, matrix))
}

pub fn build_form_matrix(dataset: &Dataset, n: usize, boundary: char) -> Result<(CueIndex, FormMatrix)> {
    build_form_matrix_from_words(dataset.forms(), n, boundary)
}

/// Encode a word against an existing cue index. Cues absent from the index
/// are reported back so callers can decide whether that is fatal.
pub fn encode_word(index: &CueIndex, word: &str) -> Result<(Vec<u32>, Vec<String>)> {
    let cues = extract_ngrams(word, index.n, index.boundary)?;
    let mut ids = Vec::with_capacity(cues.len());
    let mut unknown = Vec::new();
    for c in cues {
        match index.id_of(&c) {
            Some(id) => ids.push(id),
            None => unknown.push(c),
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok((ids, unknown))
}

/// How the initial train/test split is drawn, before coverage repair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitPolicy {
    /// Test = words with frequency <= threshold.
    FrequencyThreshold(u64),
    /// Seeded per-word uniform draw into the test set.
    RandomFraction { fraction: f64, seed: u64 },
}

#[derive(Debug)]
pub struct SplitOutcome {
    pub train: Dataset,
    pub test: Dataset,
    /// Words moved from test to train during coverage repair, with reasons.
    pub moved: Vec<(String, String)>,
    /// Set when the test set ended up empty; not an error.
    pub warning: Option<String>,
}

/// Split a dataset so that every cue and every configured tag value occurring
/// in the test set also occurs in the training set. Words violating coverage
/// are moved to train until a fixed point is reached.
pub fn coverage_split(
    dataset: &Dataset,
    policy: SplitPolicy,
    n: usize,
    boundary: char,
    tag_keys: &[String],
) -> Result<SplitOutcome> {
    if dataset.is_empty() {
        return Err(Error::Argument("cannot split an empty dataset".into()));
    }

    let mut in_test: Vec<bool> = match policy {
        SplitPolicy::FrequencyThreshold(t) => {
            dataset.entries.iter().map(|e| e.frequency <= t).collect()
        }
        SplitPolicy::RandomFraction { fraction, seed } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::Argument(format!(
                    "test fraction must be within [0, 1], got {fraction}"
                )));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            dataset.entries.iter().map(|_| rng.gen::<f64>() < fraction).collect()
        }
    };

    let word_cues: Vec<Vec<String>> = dataset
        .entries
        .iter()
        .map(|e| extract_ngrams(&e.form, n, boundary))
        .collect::<Result<_>>()?;

    let mut moved = Vec::new();
    loop {
        let mut train_cues: HashSet<&str> = HashSet::new();
        let mut train_tags: HashSet<(usize, &str)> = HashSet::new();
        for i in 0..dataset.len() {
            if !in_test[i] {
                train_cues.extend(word_cues[i].iter().map(|c| c.as_str()));
                for (k, key) in tag_keys.iter().enumerate() {
                    if let Some(v) = dataset.entries[i].tag(key) {
                        train_tags.insert((k, v));
                    }
                }
            }
        }
        let mut changed = false;
        for i in 0..dataset.len() {
            if !in_test[i] {
                continue;
            }
            let entry = &dataset.entries[i];
            let missing_cue = word_cues[i].iter().find(|c| !train_cues.contains(c.as_str()));
            let reason = if let Some(c) = missing_cue {
                Some(format!("cue {c:?} not in training set"))
            } else {
                tag_keys.iter().enumerate().find_map(|(k, key)| {
                    entry.tag(key).and_then(|v| {
                        (!train_tags.contains(&(k, v)))
                            .then(|| format!("tag {key}={v:?} not in training set"))
                    })
                })
            };
            if let Some(reason) = reason {
                in_test[i] = false;
                moved.push((entry.form.clone(), reason));
                // Newly trained cues/tags become available immediately.
                train_cues.extend(word_cues[i].iter().map(|c| c.as_str()));
                for (k, key) in tag_keys.iter().enumerate() {
                    if let Some(v) = entry.tag(key) {
                        train_tags.insert((k, v));
                    }
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let train_idx: Vec<usize> = (0..dataset.len()).filter(|&i| !in_test[i]).collect();
    let test_idx: Vec<usize> = (0..dataset.len()).filter(|&i| in_test[i]).collect();
    let warning = if test_idx.is_empty() {
        Some("test set is empty after coverage repair".to_string())
    } else {
        None
    };
    Ok(SplitOutcome {
        train: dataset.subset(&train_idx),
        test: dataset.subset(&test_idx),
        moved,
        warning,
    })
}
