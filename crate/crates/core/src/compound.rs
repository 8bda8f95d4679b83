//! Compound-specific analyses: the functional load of boundary-straddling
//! cues, constituent-based composition with learned block matrices, and
//! per-pivot islands of reliability with intruder counts and the
//! hapax-to-token productivity estimate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, Axis};
use serde::Serialize;

use crate::corpus::EmbeddingTable;
use crate::error::{Error, Result};
use crate::form::{extract_ngrams, CueIndex};
use crate::linalg::{self, pearson};
use crate::mapping::LinearMapping;

/// A two-constituent parse. The concatenation of the constituent spellings
/// must equal the compound spelling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompoundParse {
    pub compound: String,
    pub left: String,
    pub right: String,
}

impl CompoundParse {
    pub fn new(
        compound: impl Into<String>,
        left: impl Into<String>,
        right: impl Into<String>,
    ) -> Result<Self> {
        let parse = CompoundParse {
            compound: compound.into(),
            left: left.into(),
            right: right.into(),
        };
        if format!("{}{}", parse.left, parse.right) != parse.compound {
            return Err(Error::Argument(format!(
                "constituents {:?}+{:?} do not spell {:?}",
                parse.left, parse.right, parse.compound
            )));
        }
        Ok(parse)
    }
}

/// Read parses from a TSV file with header columns compound, left, right.
pub fn load_parses(path: impl AsRef<Path>, lowercase: bool) -> Result<Vec<CompoundParse>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader =
        csv::ReaderBuilder::new().delimiter(b'\t').from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let (ci, li, ri) = (col("compound")?, col("left")?, col("right")?);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Row { line, msg: e.to_string() })?;
        let norm = |s: &str| if lowercase { s.trim().to_lowercase() } else { s.trim().to_string() };
        let parse = CompoundParse::new(
            norm(record.get(ci).unwrap_or("")),
            norm(record.get(li).unwrap_or("")),
            norm(record.get(ri).unwrap_or("")),
        )
        .map_err(|e| Error::Row { line, msg: e.to_string() })?;
        out.push(parse);
    }
    Ok(out)
}

/// The cues of a compound split by their position relative to the
/// constituent seam. A cue straddles the seam iff it covers at least one
/// character on each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueGroups {
    pub boundary: Vec<String>,
    pub left: Vec<String>,
    pub right: Vec<String>,
}

pub fn classify_cues(parse: &CompoundParse, n: usize, boundary: char) -> Result<CueGroups> {
    let cues = extract_ngrams(&parse.compound, n, boundary)?;
    let left_len = parse.left.chars().count();
    let word_len = parse.compound.chars().count();
    let mut groups = CueGroups { boundary: Vec::new(), left: Vec::new(), right: Vec::new() };
    for (start, cue) in cues.iter().enumerate() {
        // Cue spans padded positions [start, start + len); subtracting the
        // leading marker gives the raw character span, clipped to the word.
        let len = cue.chars().count(); // the whole padded word when short
        let raw_start = start.saturating_sub(1);
        let raw_end = (start + len - 1).min(word_len); // exclusive
        if raw_start < left_len && raw_end > left_len {
            groups.boundary.push(cue.clone());
        } else if raw_end <= left_len {
            groups.left.push(cue.clone());
        } else {
            groups.right.push(cue.clone());
        }
    }
    Ok(groups)
}

/// Per-compound proportions of cues whose correlation with the compound
/// embedding exceeds the correlations with both constituent embeddings,
/// broken down by cue position.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCueReport {
    pub compound: String,
    pub boundary_prop: f64,
    pub left_prop: f64,
    pub right_prop: f64,
    pub boundary_cues: usize,
    pub left_cues: usize,
    pub right_cues: usize,
}

/// r(cue, word): Pearson correlation between the cue's row in the
/// comprehension mapping and the word's embedding.
pub fn cue_word_correlation(
    mapping: &LinearMapping,
    cue_index: &CueIndex,
    cue: &str,
    embeddings: &EmbeddingTable,
    word: &str,
) -> Result<Option<f64>> {
    let id = cue_index
        .id_of(cue)
        .ok_or_else(|| Error::Argument(format!("cue {cue:?} not in the trained index")))?;
    let vec = embeddings
        .get(word)
        .ok_or_else(|| Error::Argument(format!("no embedding for {word:?}")))?;
    Ok(pearson(mapping.cue_row(id), vec))
}

pub struct BoundaryCueOutcome {
    pub reports: Vec<BoundaryCueReport>,
    /// Compounds skipped with the reason (missing embedding or cue).
    pub skipped: Vec<(String, String)>,
}

pub fn boundary_cue_proportions(
    parses: &[CompoundParse],
    mapping: &LinearMapping,
    cue_index: &CueIndex,
    embeddings: &EmbeddingTable,
) -> Result<BoundaryCueOutcome> {
    let n = cue_index.n;
    let marker = cue_index.boundary;
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    'parses: for parse in parses {
        let mut vecs = Vec::with_capacity(3);
        for w in [&parse.compound, &parse.left, &parse.right] {
            match embeddings.get(w) {
                Some(v) => vecs.push(v),
                None => {
                    skipped.push((parse.compound.clone(), format!("no embedding for {w:?}")));
                    continue 'parses;
                }
            }
        }
        let groups = classify_cues(parse, n, marker)?;
        let mut props = [0.0_f64; 3];
        let mut counts = [0_usize; 3];
        for (g, cues) in [&groups.boundary, &groups.left, &groups.right].iter().enumerate() {
            counts[g] = cues.len();
            let mut wins = 0_usize;
            for cue in cues.iter() {
                let id = match cue_index.id_of(cue) {
                    Some(id) => id,
                    None => {
                        skipped.push((
                            parse.compound.clone(),
                            format!("cue {cue:?} not in the trained index"),
                        ));
                        continue 'parses;
                    }
                };
                let row = mapping.cue_row(id);
                let r_compound = pearson(row, vecs[0]).unwrap_or(f64::NEG_INFINITY);
                let r_left = pearson(row, vecs[1]).unwrap_or(f64::NEG_INFINITY);
                let r_right = pearson(row, vecs[2]).unwrap_or(f64::NEG_INFINITY);
                if r_compound > r_left && r_compound > r_right {
                    wins += 1;
                }
            }
            props[g] = if cues.is_empty() { 0.0 } else { wins as f64 / counts[g] as f64 };
        }
        reports.push(BoundaryCueReport {
            compound: parse.compound.clone(),
            boundary_prop: props[0],
            left_prop: props[1],
            right_prop: props[2],
            boundary_cues: counts[0],
            left_cues: counts[1],
            right_cues: counts[2],
        });
    }
    Ok(BoundaryCueOutcome { reports, skipped })
}

/// Constituent-composition mapping: the stacked solution of
/// [L R] M = C, split into its two d x d blocks.
#[derive(Debug, Clone)]
pub struct CaossMapping {
    pub m_left: Array2<f64>,
    pub m_right: Array2<f64>,
    pub lambda: f64,
}

pub fn caoss_fit(
    l: &Array2<f64>,
    r: &Array2<f64>,
    c: &Array2<f64>,
    lambda: f64,
) -> Result<CaossMapping> {
    if l.nrows() != r.nrows() || l.nrows() != c.nrows() {
        return Err(Error::Dimension(format!(
            "row counts differ: L {}, R {}, C {}",
            l.nrows(),
            r.nrows(),
            c.nrows()
        )));
    }
    let d = l.ncols();
    if r.ncols() != d || c.ncols() != d {
        return Err(Error::Dimension(format!(
            "embedding dims differ: L {}, R {}, C {}",
            d,
            r.ncols(),
            c.ncols()
        )));
    }
    let design = concatenate![Axis(1), l.view(), r.view()];
    let stacked = linalg::lstsq(&design, c, lambda)?;
    Ok(CaossMapping {
        m_left: stacked.slice(s![..d, ..]).to_owned(),
        m_right: stacked.slice(s![d.., ..]).to_owned(),
        lambda,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// L M_L + R M_R with the fitted blocks.
    Caoss,
    /// Plain vector addition L + R.
    Additive,
}

pub fn caoss_predict(
    mapping: &CaossMapping,
    l: &Array2<f64>,
    r: &Array2<f64>,
    mode: CompositionMode,
) -> Result<Array2<f64>> {
    if l.nrows() != r.nrows() || l.ncols() != r.ncols() {
        return Err(Error::Dimension("constituent matrices must match".into()));
    }
    match mode {
        CompositionMode::Additive => Ok(l + r),
        CompositionMode::Caoss => {
            if l.ncols() != mapping.m_left.nrows() {
                return Err(Error::Dimension(format!(
                    "constituents have dim {}, blocks expect {}",
                    l.ncols(),
                    mapping.m_left.nrows()
                )));
            }
            Ok(l.dot(&mapping.m_left) + r.dot(&mapping.m_right))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PivotPosition {
    Left,
    Right,
}

impl std::str::FromStr for PivotPosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(PivotPosition::Left),
            "right" => Ok(PivotPosition::Right),
            other => Err(Error::Argument(format!("unknown pivot position {other:?}"))),
        }
    }
}

/// How the interval over compound-centroid correlations is formed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalMethod {
    /// Empirical 2.5th and 97.5th percentiles (linear interpolation between
    /// order statistics).
    Percentile,
    /// mean +/- 1.96 standard deviations.
    Normal,
}

/// A pivot's island of reliability.
#[derive(Debug, Clone, Serialize)]
pub struct PivotIsland {
    pub pivot: String,
    pub position: PivotPosition,
    pub centroid: Array1<f64>,
    /// Interval bounds over the member correlations (lo <= hi).
    pub ci: (f64, f64),
    /// Compounds of the pivot whose centroid correlation lies inside the
    /// interval.
    pub members: Vec<String>,
    pub compound_count: usize,
    /// Supplied candidate compounds falling inside the interval.
    pub intruders: Vec<String>,
    /// Hapax compound types of the pivot divided by its compound tokens.
    pub p_good_turing: f64,
    pub hapax_types: usize,
    pub total_tokens: u64,
    /// Single-compound pivot or undefined correlations encountered.
    pub degenerate: bool,
}

/// Empirical percentile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - h.floor()) * (sorted[hi] - sorted[lo])
    }
}

#[allow(clippy::too_many_arguments)]
pub fn pivot_island(
    pivot: &str,
    position: PivotPosition,
    parses: &[CompoundParse],
    embeddings: &EmbeddingTable,
    frequencies: &BTreeMap<String, u64>,
    intruder_candidates: &[String],
    method: IntervalMethod,
) -> Result<PivotIsland> {
    fn constituent(p: &CompoundParse, position: PivotPosition) -> &str {
        match position {
            PivotPosition::Left => p.left.as_str(),
            PivotPosition::Right => p.right.as_str(),
        }
    }
    let own: Vec<&CompoundParse> = parses
        .iter()
        .filter(|p| constituent(p, position) == pivot && embeddings.contains(&p.compound))
        .collect();
    if own.is_empty() {
        return Err(Error::Argument(format!(
            "pivot {pivot:?} has no compounds with embeddings at position {position:?}"
        )));
    }

    let dim = embeddings.dim();
    let mut centroid = Array1::<f64>::zeros(dim);
    for p in &own {
        centroid += &embeddings.get(&p.compound).unwrap();
    }
    centroid /= own.len() as f64;

    let corr_with_centroid = |word: &str| -> Option<f64> {
        embeddings.get(word).and_then(|v| pearson(v, centroid.view()))
    };

    let mut rs: Vec<(String, f64)> = Vec::with_capacity(own.len());
    let mut any_undefined = false;
    for p in &own {
        match corr_with_centroid(&p.compound) {
            Some(r) => rs.push((p.compound.clone(), r)),
            None => any_undefined = true,
        }
    }
    if rs.is_empty() {
        return Err(Error::Argument(format!(
            "all centroid correlations for pivot {pivot:?} are undefined"
        )));
    }

    let mut sorted: Vec<f64> = rs.iter().map(|(_, r)| *r).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci = match method {
        IntervalMethod::Percentile => (percentile(&sorted, 0.025), percentile(&sorted, 0.975)),
        IntervalMethod::Normal => {
            let n = sorted.len() as f64;
            let mean = sorted.iter().sum::<f64>() / n;
            let var = sorted.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            (mean - 1.96 * sd, mean + 1.96 * sd)
        }
    };

    let members: Vec<String> = rs
        .iter()
        .filter(|(_, r)| *r >= ci.0 && *r <= ci.1)
        .map(|(w, _)| w.clone())
        .collect();

    let mut intruders = Vec::new();
    for cand in intruder_candidates {
        if let Some(r) = corr_with_centroid(cand) {
            if r >= ci.0 && r <= ci.1 {
                intruders.push(cand.clone());
            }
        }
    }

    // Category-conditioned productivity over the pivot's compounds.
    let mut hapax_types = 0usize;
    let mut total_tokens = 0u64;
    for p in &own {
        let f = frequencies.get(&p.compound).copied().unwrap_or(0);
        total_tokens += f;
        if f == 1 {
            hapax_types += 1;
        }
    }
    let p_good_turing =
        if total_tokens > 0 { hapax_types as f64 / total_tokens as f64 } else { 0.0 };

    Ok(PivotIsland {
        pivot: pivot.to_string(),
        position,
        centroid,
        ci,
        compound_count: own.len(),
        members,
        intruders,
        p_good_turing,
        hapax_types,
        total_tokens,
        degenerate: own.len() == 1 || any_undefined,
    })
}
