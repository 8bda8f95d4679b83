//! Time-indexed input/output corpus statistics: growth curves, new-type
//! detection, the per-pattern-per-year predictor table, and rank
//! correlation.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use ndarray::Array1;
use serde::Serialize;

use crate::corpus::{EmbeddingTable, WordEntry};
use crate::error::{Error, Result};

/// Membership rule for a derivational pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum PatternFilter {
    /// Entry carries this tag value under the given key.
    Tag { key: String, value: String },
    /// Form ends with the suffix and is not on the stoplist.
    Suffix { suffix: String, stoplist: BTreeSet<String> },
    /// Every entry matches (whole-corpus statistics).
    All,
}

impl PatternFilter {
    pub fn matches(&self, entry: &WordEntry) -> bool {
        match self {
            PatternFilter::Tag { key, value } => entry.tag(key) == Some(value.as_str()),
            PatternFilter::Suffix { suffix, stoplist } => {
                entry.form.ends_with(suffix.as_str()) && !stoplist.contains(&entry.form)
            }
            PatternFilter::All => true,
        }
    }

    /// Parse "key=value" as a tag rule, "-suffix" or bare text as a suffix
    /// rule.
    pub fn parse(spec: &str) -> Result<PatternFilter> {
        let spec = spec.trim();
        if spec.is_empty() {
            return Err(Error::Argument("empty pattern spec".into()));
        }
        if let Some((key, value)) = spec.split_once('=') {
            return Ok(PatternFilter::Tag { key: key.trim().into(), value: value.trim().into() });
        }
        let suffix = spec.strip_prefix('-').unwrap_or(spec);
        Ok(PatternFilter::Suffix { suffix: suffix.to_string(), stoplist: BTreeSet::new() })
    }
}

fn entry_year(entry: &WordEntry) -> Result<i32> {
    entry
        .period
        .ok_or_else(|| Error::Argument(format!("entry {:?} has no year", entry.form)))
}

/// Per-year cumulative count of distinct types among the matching entries.
pub fn growth_curve(
    entries: &[WordEntry],
    filter: &PatternFilter,
) -> Result<BTreeMap<i32, usize>> {
    let mut by_year: BTreeMap<i32, Vec<&WordEntry>> = BTreeMap::new();
    for e in entries.iter().filter(|e| filter.matches(e)) {
        by_year.entry(entry_year(e)?).or_default().push(e);
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut curve = BTreeMap::new();
    for (year, year_entries) in by_year {
        for e in year_entries {
            seen.insert(e.form.as_str());
        }
        curve.insert(year, seen.len());
    }
    Ok(curve)
}

/// Types that first appear in the output in a given year and were never part
/// of the input up to and including that year nor of earlier output. Within
/// a year, input counts as read before the output was written.
pub fn detect_new_types(
    input: &[WordEntry],
    output: &[WordEntry],
    filter: &PatternFilter,
) -> Result<BTreeMap<i32, Vec<String>>> {
    let mut input_by_year: BTreeMap<i32, HashSet<&str>> = BTreeMap::new();
    for e in input.iter().filter(|e| filter.matches(e)) {
        input_by_year.entry(entry_year(e)?).or_default().insert(e.form.as_str());
    }
    let mut output_by_year: BTreeMap<i32, Vec<&str>> = BTreeMap::new();
    for e in output.iter().filter(|e| filter.matches(e)) {
        output_by_year.entry(entry_year(e)?).or_default().push(e.form.as_str());
    }

    let mut known: HashSet<&str> = HashSet::new();
    let mut input_iter = input_by_year.iter().peekable();
    let mut new_by_year = BTreeMap::new();
    for (&year, words) in &output_by_year {
        // Everything read up to and including this output year counts.
        while let Some((&iy, _)) = input_iter.peek() {
            if iy <= year {
                let (_, set) = input_iter.next().unwrap();
                known.extend(set.iter().copied());
            } else {
                break;
            }
        }
        let mut new_here = Vec::new();
        for &w in words {
            if !known.contains(w) {
                new_here.push(w.to_string());
                known.insert(w);
            }
        }
        new_by_year.insert(year, new_here);
    }
    Ok(new_by_year)
}

/// One row of the predictor table: a pattern in one output year.
#[derive(Debug, Clone, Serialize)]
pub struct PatternYearStats {
    pub pattern: String,
    pub year: i32,
    // Input side, that year.
    pub input_types: usize,
    pub input_tokens: u64,
    pub input_hapaxes: usize,
    pub new_input_types: usize,
    pub cumulative_input_types: usize,
    // Output side, that year.
    pub output_types: usize,
    pub output_tokens: u64,
    /// Output types that year already seen in the input up to that year.
    pub known_output_types: usize,
    /// First-ever uses per the new-type rule.
    pub new_output_types: usize,
    // Ratios.
    /// Input hapaxes that year / input tokens that year.
    pub p_narrow: f64,
    /// New input types that year / input types that year.
    pub p_neo: f64,
    /// Cumulative reused types / cumulative input types.
    pub recycle_rate: f64,
    /// Mean Euclidean distance of this year's input-type embeddings from the
    /// running centroid of all input types seen so far.
    pub centroid_distance: f64,
    /// Input types with embeddings contributing to `centroid_distance`.
    pub embedded_types: usize,
    /// Zero-token or zero-type denominators were encountered.
    pub degenerate: bool,
}

/// How far a word's embedding lies from the running centroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    /// 1 - Pearson correlation with the centroid.
    Correlation,
}

impl std::str::FromStr for DistanceMetric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(DistanceMetric::Euclidean),
            "correlation" => Ok(DistanceMetric::Correlation),
            other => Err(Error::Argument(format!("unknown distance metric {other:?}"))),
        }
    }
}

/// Build the per-(pattern, output-year) table. A row is produced for every
/// year in which the output corpus has any entries, for every pattern.
pub fn pattern_year_table(
    input: &[WordEntry],
    output: &[WordEntry],
    patterns: &[(String, PatternFilter)],
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<PatternYearStats>> {
    pattern_year_table_with(input, output, patterns, embeddings, DistanceMetric::Euclidean)
}

pub fn pattern_year_table_with(
    input: &[WordEntry],
    output: &[WordEntry],
    patterns: &[(String, PatternFilter)],
    embeddings: Option<&EmbeddingTable>,
    metric: DistanceMetric,
) -> Result<Vec<PatternYearStats>> {
    let mut output_years: BTreeSet<i32> = BTreeSet::new();
    for e in output {
        output_years.insert(entry_year(e)?);
    }
    for e in input {
        entry_year(e)?; // validate up front
    }

    let mut rows = Vec::new();
    for (name, filter) in patterns {
        let p_input: Vec<&WordEntry> = input.iter().filter(|e| filter.matches(e)).collect();
        let p_output: Vec<&WordEntry> = output.iter().filter(|e| filter.matches(e)).collect();

        // Per-year aggregation: type -> tokens that year.
        let mut input_years: BTreeMap<i32, HashMap<&str, u64>> = BTreeMap::new();
        for e in &p_input {
            *input_years
                .entry(e.period.unwrap())
                .or_default()
                .entry(e.form.as_str())
                .or_insert(0) += e.frequency;
        }
        let mut output_years_map: BTreeMap<i32, HashMap<&str, u64>> = BTreeMap::new();
        for e in &p_output {
            *output_years_map
                .entry(e.period.unwrap())
                .or_default()
                .entry(e.form.as_str())
                .or_insert(0) += e.frequency;
        }
        let new_output = detect_new_types(input, output, filter)?;

        let mut cumulative_input: HashSet<&str> = HashSet::new();
        let mut cumulative_output: HashSet<&str> = HashSet::new();
        let mut centroid_sum: Option<Array1<f64>> = None;
        let mut centroid_count = 0usize;
        let mut input_iter = input_years.iter().peekable();

        for &year in &output_years {
            // Fold in all input years up to and including this one.
            let mut this_year_types: Vec<&str> = Vec::new();
            let mut this_year_tokens = 0u64;
            let mut this_year_hapaxes = 0usize;
            let mut this_year_new = 0usize;
            while let Some((&iy, _)) = input_iter.peek() {
                if iy > year {
                    break;
                }
                let (&iy, types) = input_iter.next().unwrap();
                let counting_year = iy == year;
                for (&form, &tokens) in types {
                    if counting_year {
                        this_year_types.push(form);
                        this_year_tokens += tokens;
                        if tokens == 1 {
                            this_year_hapaxes += 1;
                        }
                        if !cumulative_input.contains(form) {
                            this_year_new += 1;
                        }
                    }
                    if cumulative_input.insert(form) {
                        if let Some(table) = embeddings {
                            if let Some(v) = table.get(form) {
                                match centroid_sum.as_mut() {
                                    Some(sum) => *sum += &v,
                                    None => centroid_sum = Some(v.to_owned()),
                                }
                                centroid_count += 1;
                            }
                        }
                    }
                }
            }
            // Note: input years strictly before the next output year but
            // after this one are folded when that year is reached.

            let empty = HashMap::new();
            let out_map = output_years_map.get(&year).unwrap_or(&empty);
            let output_types = out_map.len();
            let output_tokens: u64 = out_map.values().sum();
            let known_output_types =
                out_map.keys().filter(|w| cumulative_input.contains(**w)).count();
            for w in out_map.keys() {
                cumulative_output.insert(*w);
            }
            let new_output_types = new_output.get(&year).map_or(0, |v| v.len());

            let reused = cumulative_input.intersection(&cumulative_output).count();
            let recycle_rate = if cumulative_input.is_empty() {
                0.0
            } else {
                reused as f64 / cumulative_input.len() as f64
            };
            let p_narrow = if this_year_tokens > 0 {
                this_year_hapaxes as f64 / this_year_tokens as f64
            } else {
                0.0
            };
            let p_neo = if this_year_types.is_empty() {
                0.0
            } else {
                this_year_new as f64 / this_year_types.len() as f64
            };

            let mut centroid_distance = 0.0;
            let mut embedded_types = 0usize;
            if let (Some(table), Some(sum)) = (embeddings, centroid_sum.as_ref()) {
                if centroid_count > 0 {
                    let centroid = sum / centroid_count as f64;
                    let mut total = 0.0;
                    for &form in &this_year_types {
                        if let Some(v) = table.get(form) {
                            let d = match metric {
                                DistanceMetric::Euclidean => {
                                    let diff = &v - &centroid;
                                    diff.dot(&diff).sqrt()
                                }
                                DistanceMetric::Correlation => {
                                    match crate::linalg::pearson(v, centroid.view()) {
                                        Some(r) => 1.0 - r,
                                        None => continue,
                                    }
                                }
                            };
                            total += d;
                            embedded_types += 1;
                        }
                    }
                    if embedded_types > 0 {
                        centroid_distance = total / embedded_types as f64;
                    }
                }
            }

            rows.push(PatternYearStats {
                pattern: name.clone(),
                year,
                input_types: this_year_types.len(),
                input_tokens: this_year_tokens,
                input_hapaxes: this_year_hapaxes,
                new_input_types: this_year_new,
                cumulative_input_types: cumulative_input.len(),
                output_types,
                output_tokens,
                known_output_types,
                new_output_types,
                p_narrow,
                p_neo,
                recycle_rate,
                centroid_distance,
                embedded_types,
                degenerate: this_year_tokens == 0 || output_tokens == 0,
            });
        }
    }
    Ok(rows)
}

/// Pooled whole-corpus statistics for one pattern.
#[derive(Debug, Clone, Serialize)]
pub struct PooledPatternStats {
    pub pattern: String,
    pub input_types: usize,
    pub input_tokens: u64,
    /// Within-year hapax events summed over years (one type can contribute
    /// in several years). For undated corpora this equals
    /// `input_hapax_types`.
    pub input_hapaxes: usize,
    /// Types whose total input token count over the whole corpus is one.
    pub input_hapax_types: usize,
    pub output_types: usize,
    pub output_tokens: u64,
    /// Input types that also occur anywhere in the output.
    pub reused_types: usize,
    pub new_output_types: usize,
    /// reused / input types.
    pub recycle_rate: f64,
    /// input hapaxes (year-summed) / input tokens.
    pub p_narrow: f64,
}

pub fn pooled_pattern_stats(
    input: &[WordEntry],
    output: &[WordEntry],
    pattern: &str,
    filter: &PatternFilter,
) -> Result<PooledPatternStats> {
    let mut input_tokens_by_type: HashMap<&str, u64> = HashMap::new();
    let mut tokens_by_type_year: HashMap<(&str, Option<i32>), u64> = HashMap::new();
    for e in input.iter().filter(|e| filter.matches(e)) {
        *input_tokens_by_type.entry(e.form.as_str()).or_insert(0) += e.frequency;
        *tokens_by_type_year.entry((e.form.as_str(), e.period)).or_insert(0) += e.frequency;
    }
    let mut output_tokens_by_type: HashMap<&str, u64> = HashMap::new();
    for e in output.iter().filter(|e| filter.matches(e)) {
        *output_tokens_by_type.entry(e.form.as_str()).or_insert(0) += e.frequency;
    }
    let input_types = input_tokens_by_type.len();
    let input_tokens: u64 = input_tokens_by_type.values().sum();
    let input_hapaxes = tokens_by_type_year.values().filter(|&&t| t == 1).count();
    let input_hapax_types = input_tokens_by_type.values().filter(|&&t| t == 1).count();
    let output_types = output_tokens_by_type.len();
    let output_tokens: u64 = output_tokens_by_type.values().sum();
    let reused_types = output_tokens_by_type
        .keys()
        .filter(|w| input_tokens_by_type.contains_key(**w))
        .count();
    let new_output_types = if input.iter().any(|e| e.period.is_none())
        || output.iter().any(|e| e.period.is_none())
    {
        // Without years, new = output types never seen in the input.
        output_types - reused_types
    } else {
        detect_new_types(input, output, filter)?.values().map(|v| v.len()).sum()
    };
    Ok(PooledPatternStats {
        pattern: pattern.to_string(),
        input_types,
        input_tokens,
        input_hapaxes,
        input_hapax_types,
        output_types,
        output_tokens,
        reused_types,
        new_output_types,
        recycle_rate: if input_types > 0 {
            reused_types as f64 / input_types as f64
        } else {
            0.0
        },
        p_narrow: if input_tokens > 0 {
            input_hapaxes as f64 / input_tokens as f64
        } else {
            0.0
        },
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "series lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Argument("need at least two observations".into()));
    }
    let rx = average_ranks(xs)?;
    let ry = average_ranks(ys)?;
    crate::linalg::pearson(Array1::from(rx).view(), Array1::from(ry).view())
        .ok_or_else(|| Error::Argument("constant series: rank correlation undefined".into()))
}

fn average_ranks(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|v| v.is_nan()) {
        return Err(Error::Argument("NaN in series".into()));
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Average of 1-based ranks i+1 ..= j+1.
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Role;
    use approx::assert_abs_diff_eq;

    fn entry(form: &str, year: i32, freq: u64, role: Role) -> WordEntry {
        WordEntry::new(form, freq).with_period(year).with_role(role)
    }

    #[test]
    fn growth_curve_accumulates_types() {
        let entries = vec![
            entry("a", 1890, 1, Role::Input),
            entry("b", 1890, 2, Role::Input),
            entry("b", 1891, 1, Role::Input),
            entry("c", 1891, 1, Role::Input),
        ];
        let curve = growth_curve(&entries, &PatternFilter::All).unwrap();
        assert_eq!(curve, BTreeMap::from([(1890, 2), (1891, 3)]));
    }

    #[test]
    fn growth_curve_empty_stream() {
        let curve = growth_curve(&[], &PatternFilter::All).unwrap();
        assert!(curve.is_empty());
    }

    #[test]
    fn growth_curve_matches_set_union_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let entries: Vec<WordEntry> = (0..200)
            .map(|_| {
                entry(
                    &format!("w{}", rng.gen_range(0..50)),
                    1890 + rng.gen_range(0..10),
                    1,
                    Role::Input,
                )
            })
            .collect();
        let curve = growth_curve(&entries, &PatternFilter::All).unwrap();
        let years: BTreeSet<i32> = entries.iter().map(|e| e.period.unwrap()).collect();
        for &y in &years {
            let oracle: HashSet<&str> = entries
                .iter()
                .filter(|e| e.period.unwrap() <= y)
                .map(|e| e.form.as_str())
                .collect();
            assert_eq!(curve[&y], oracle.len(), "year {y}");
        }
        // Monotone, final value = total distinct types.
        let values: Vec<usize> = curve.values().copied().collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let total: HashSet<&str> = entries.iter().map(|e| e.form.as_str()).collect();
        assert_eq!(*values.last().unwrap(), total.len());
    }

    #[test]
    fn new_type_detection_first_use_rule() {
        let input = vec![
            entry("bekanntes", 1890, 3, Role::Input),
            entry("später", 1895, 1, Role::Input),
        ];
        let output = vec![
            entry("bajazzotum", 1897, 1, Role::Output),
            entry("bekanntes", 1895, 1, Role::Output),
            entry("selbst", 1893, 1, Role::Output),
            entry("selbst", 1895, 1, Role::Output),
        ];
        let new = detect_new_types(&input, &output, &PatternFilter::All).unwrap();
        // Never in input nor prior output -> new in 1897.
        assert_eq!(new[&1897], vec!["bajazzotum".to_string()]);
        // Read in 1890, written 1895 -> not new.
        assert!(new[&1895].is_empty());
        // Written 1893 and again 1895 -> new only in 1893.
        assert_eq!(new[&1893], vec!["selbst".to_string()]);
    }

    #[test]
    fn same_year_input_counts_as_seen() {
        let input = vec![entry("neu", 1900, 1, Role::Input)];
        let output = vec![entry("neu", 1900, 1, Role::Output)];
        let new = detect_new_types(&input, &output, &PatternFilter::All).unwrap();
        assert!(new[&1900].is_empty());
    }

    #[test]
    fn new_type_detection_is_prefix_stable() {
        let input = vec![entry("alt", 1890, 1, Role::Input)];
        let mut output = vec![
            entry("eins", 1891, 1, Role::Output),
            entry("zwei", 1893, 1, Role::Output),
        ];
        let before = detect_new_types(&input, &output, &PatternFilter::All).unwrap();
        output.push(entry("drei", 1899, 1, Role::Output));
        let after = detect_new_types(&input, &output, &PatternFilter::All).unwrap();
        for (year, words) in &before {
            assert_eq!(&after[year], words);
        }
    }

    #[test]
    fn suffix_filter_with_stoplist() {
        let f = PatternFilter::Suffix {
            suffix: "nis".into(),
            stoplist: BTreeSet::from(["tennis".to_string()]),
        };
        assert!(f.matches(&WordEntry::new("ergebnis", 1)));
        assert!(!f.matches(&WordEntry::new("tennis", 1)));
        assert!(!f.matches(&WordEntry::new("arbeit", 1)));
        let parsed = PatternFilter::parse("-nis").unwrap();
        assert!(parsed.matches(&WordEntry::new("ergebnis", 1)));
        let tag = PatternFilter::parse("pattern=nis").unwrap();
        assert!(tag.matches(&WordEntry::new("x", 1).with_tag("pattern", "nis")));
    }

    #[test]
    fn recycle_rate_reproduces_known_ratios() {
        // 79 input types, 41 of them reused in the output: 41/79.
        let mut input = Vec::new();
        let mut output = Vec::new();
        for i in 0..79 {
            input.push(entry(&format!("w{i:03}nis"), 1890 + (i % 5), 2, Role::Input));
        }
        for i in 0..41 {
            output.push(entry(&format!("w{i:03}nis"), 1900, 1, Role::Output));
        }
        let filter = PatternFilter::parse("-nis").unwrap();
        let pooled = pooled_pattern_stats(&input, &output, "-nis", &filter).unwrap();
        assert_eq!(pooled.input_types, 79);
        assert_eq!(pooled.reused_types, 41);
        assert_abs_diff_eq!(pooled.recycle_rate, 41.0 / 79.0, epsilon = 1e-12);
        assert_eq!(pooled.new_output_types, 0);

        let rows = pattern_year_table(
            &input,
            &output,
            &[("-nis".to_string(), filter)],
            None,
        )
        .unwrap();
        let last = rows.last().unwrap();
        assert_eq!(last.cumulative_input_types, 79);
        assert_abs_diff_eq!(last.recycle_rate, 41.0 / 79.0, epsilon = 1e-12);
    }

    #[test]
    fn p_narrow_pooled_ratio() {
        // 3 hapaxes among 10 tokens.
        let input = vec![
            entry("alos", 1890, 1, Role::Input),
            entry("blos", 1890, 1, Role::Input),
            entry("clos", 1891, 1, Role::Input),
            entry("dlos", 1891, 7, Role::Input),
        ];
        let filter = PatternFilter::parse("-los").unwrap();
        let pooled = pooled_pattern_stats(&input, &[], "-los", &filter).unwrap();
        assert_eq!(pooled.input_hapaxes, 3);
        assert_eq!(pooled.input_tokens, 10);
        assert_abs_diff_eq!(pooled.p_narrow, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn year_hapax_events_exceed_whole_corpus_hapax_types() {
        // One token of the same type in each of two years: two within-year
        // hapax events, but the type is not a whole-corpus hapax. Summed
        // hapax columns can therefore exceed the type count, as in corpus
        // tables where 676 types carry 2,082 hapax events.
        let input = vec![
            entry("alos", 1890, 1, Role::Input),
            entry("alos", 1891, 1, Role::Input),
            entry("blos", 1891, 1, Role::Input),
        ];
        let filter = PatternFilter::parse("-los").unwrap();
        let pooled = pooled_pattern_stats(&input, &[], "-los", &filter).unwrap();
        assert_eq!(pooled.input_hapaxes, 3);
        assert_eq!(pooled.input_hapax_types, 1);
        assert_abs_diff_eq!(pooled.p_narrow, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn year_table_ratios_and_flags() {
        let input = vec![
            entry("anis", 1890, 1, Role::Input),
            entry("bnis", 1890, 3, Role::Input),
            entry("anis", 1891, 2, Role::Input),
            entry("cnis", 1891, 1, Role::Input),
        ];
        let output = vec![
            entry("anis", 1890, 1, Role::Output),
            entry("dnis", 1891, 1, Role::Output),
        ];
        let filter = PatternFilter::parse("-nis").unwrap();
        let rows =
            pattern_year_table(&input, &output, &[("-nis".to_string(), filter)], None).unwrap();
        assert_eq!(rows.len(), 2);
        let y1890 = &rows[0];
        assert_eq!(y1890.input_types, 2);
        assert_eq!(y1890.input_tokens, 4);
        assert_eq!(y1890.input_hapaxes, 1); // "anis" once that year
        assert_eq!(y1890.new_input_types, 2);
        assert_abs_diff_eq!(y1890.p_narrow, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(y1890.p_neo, 1.0, epsilon = 1e-12);
        assert_eq!(y1890.known_output_types, 1);
        assert_eq!(y1890.new_output_types, 0);
        assert_abs_diff_eq!(y1890.recycle_rate, 0.5, epsilon = 1e-12);

        let y1891 = &rows[1];
        assert_eq!(y1891.input_types, 2); // anis again + cnis
        assert_eq!(y1891.new_input_types, 1);
        assert_abs_diff_eq!(y1891.p_neo, 0.5, epsilon = 1e-12);
        assert_eq!(y1891.new_output_types, 1); // dnis never read
        assert_eq!(y1891.cumulative_input_types, 3);
        // reused so far: anis only.
        assert_abs_diff_eq!(y1891.recycle_rate, 1.0 / 3.0, epsilon = 1e-12);
        // No new types in a year without them.
        assert!(!y1890.degenerate && !y1891.degenerate);
    }

    #[test]
    fn year_without_pattern_tokens_is_degenerate_zero() {
        let input = vec![entry("xnis", 1890, 1, Role::Input)];
        let output = vec![
            entry("xnis", 1890, 1, Role::Output),
            entry("other", 1895, 1, Role::Output),
        ];
        let filter = PatternFilter::parse("-nis").unwrap();
        let rows =
            pattern_year_table(&input, &output, &[("-nis".to_string(), filter)], None).unwrap();
        let y1895 = rows.iter().find(|r| r.year == 1895).unwrap();
        assert!(y1895.degenerate);
        assert_eq!(y1895.p_narrow, 0.0);
        assert_eq!(y1895.p_neo, 0.0);
    }

    #[test]
    fn centroid_distance_uses_running_centroid() {
        let mut table = EmbeddingTable::new(2).unwrap();
        table.insert("aa".into(), &[0.0, 0.0]).unwrap();
        table.insert("bb".into(), &[2.0, 0.0]).unwrap();
        table.insert("cc".into(), &[0.0, 2.0]).unwrap();
        let input = vec![
            entry("aa", 1890, 1, Role::Input),
            entry("bb", 1890, 1, Role::Input),
            entry("cc", 1891, 1, Role::Input),
        ];
        let output = vec![
            entry("aa", 1890, 1, Role::Output),
            entry("aa", 1891, 1, Role::Output),
        ];
        let rows = pattern_year_table(
            &input,
            &output,
            &[("all".to_string(), PatternFilter::All)],
            Some(&table),
        )
        .unwrap();
        // 1890: centroid of {aa, bb} = (1, 0); distances 1 and 1 -> mean 1.
        assert_abs_diff_eq!(rows[0].centroid_distance, 1.0, epsilon = 1e-12);
        assert_eq!(rows[0].embedded_types, 2);
        // 1891: running centroid of {aa, bb, cc} = (2/3, 2/3); only cc is new
        // that year: distance = |(0,2)-(2/3,2/3)| = sqrt(4/9 + 16/9).
        let expect = (4.0f64 / 9.0 + 16.0 / 9.0).sqrt();
        assert_abs_diff_eq!(rows[1].centroid_distance, expect, epsilon = 1e-12);
        assert_eq!(rows[1].embedded_types, 1);
    }

    #[test]
    fn correlation_distance_variant() {
        let mut table = EmbeddingTable::new(3).unwrap();
        table.insert("aa".into(), &[1.0, 2.0, 3.0]).unwrap();
        table.insert("bb".into(), &[3.0, 2.0, 1.0]).unwrap();
        let input = vec![
            entry("aa", 1890, 1, Role::Input),
            entry("bb", 1890, 1, Role::Input),
        ];
        let output = vec![entry("aa", 1890, 1, Role::Output)];
        let rows = pattern_year_table_with(
            &input,
            &output,
            &[("all".to_string(), PatternFilter::All)],
            Some(&table),
            DistanceMetric::Correlation,
        )
        .unwrap();
        // Centroid (2,2,2) has zero variance, so correlations with it are
        // undefined and no word contributes.
        assert_eq!(rows[0].embedded_types, 0);

        table.insert("cc".into(), &[1.0, 1.0, 4.0]).unwrap();
        let input = vec![
            entry("aa", 1890, 1, Role::Input),
            entry("cc", 1890, 1, Role::Input),
        ];
        let rows = pattern_year_table_with(
            &input,
            &output,
            &[("all".to_string(), PatternFilter::All)],
            Some(&table),
            DistanceMetric::Correlation,
        )
        .unwrap();
        // Centroid (1, 1.5, 3.5); distance = mean of 1 - r over both words.
        let centroid = ndarray::array![1.0, 1.5, 3.5];
        let r_aa =
            crate::linalg::pearson(ndarray::array![1.0, 2.0, 3.0].view(), centroid.view())
                .unwrap();
        let r_cc =
            crate::linalg::pearson(ndarray::array![1.0, 1.0, 4.0].view(), centroid.view())
                .unwrap();
        let want = ((1.0 - r_aa) + (1.0 - r_cc)) / 2.0;
        assert_abs_diff_eq!(rows[0].centroid_distance, want, epsilon = 1e-12);
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_abs_diff_eq!(spearman(&xs, &xs).unwrap(), 1.0, epsilon = 1e-12);
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        assert_abs_diff_eq!(spearman(&xs, &rev).unwrap(), -1.0, epsilon = 1e-12);
        assert!(spearman(&xs, &[1.0, 1.0, 1.0, 1.0]).is_err());
        // Invariance under strictly monotone transforms.
        let ys: [f64; 4] = [3.0, 1.0, 4.0, 1.5];
        let transformed: Vec<f64> = ys.iter().map(|v| v.exp()).collect();
        assert_abs_diff_eq!(
            spearman(&xs, &ys).unwrap(),
            spearman(&xs, &transformed).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn spearman_with_ties_hand_ranked() {
        // Input type counts vs new output types across seven patterns; the
        // two zero values share rank (1.5 + 1.5).
        let xs = [991.0, 676.0, 335.0, 404.0, 88.0, 79.0, 12.0];
        let ys = [17.0, 11.0, 9.0, 5.0, 1.0, 0.0, 0.0];
        // Hand computation with tie-averaged ranks gives 26.5 / sqrt(770).
        let expect = 26.5 / 770.0_f64.sqrt();
        assert_abs_diff_eq!(spearman(&xs, &ys).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(spearman(&xs, &ys).unwrap(), 0.955, epsilon = 0.001);
    }
}
