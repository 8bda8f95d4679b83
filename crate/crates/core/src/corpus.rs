//! Lexicon and embedding ingestion.
//!
//! Lexicons are UTF-8 tab-separated files with a header row; the column
//! layout is supplied by a [`LexiconSchema`] so differently shaped sources
//! all map onto [`WordEntry`]. Embeddings use the word2vec text format
//! (`count dim` header, then `word v1 .. vd` per line).

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether an entry belongs to the intake or the production side of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Output,
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "input" | "in" => Ok(Role::Input),
            "output" | "out" => Ok(Role::Output),
            other => Err(Error::Argument(format!("unknown role {other:?}"))),
        }
    }
}

/// One lexical record: a surface form with its token frequency and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEntry {
    pub form: String,
    pub lemma: String,
    pub frequency: u64,
    /// Free-form labels, e.g. case, number, prefix, pattern, left, right.
    pub tags: BTreeMap<String, String>,
    pub period: Option<i32>,
    pub role: Role,
}

impl WordEntry {
    pub fn new(form: impl Into<String>, frequency: u64) -> Self {
        let form = form.into();
        WordEntry {
            lemma: form.clone(),
            form,
            frequency,
            tags: BTreeMap::new(),
            period: None,
            role: Role::Input,
        }
    }

    pub fn with_tag(mut self, key: &str, value: &str) -> Self {
        self.tags.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_period(mut self, year: i32) -> Self {
        self.period = Some(year);
        self
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn tag(&self, key: &str) -> Option<&str> {
        self.tags.get(key).map(|s| s.as_str())
    }
}

/// Column mapping for lexicon files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LexiconSchema {
    pub form_col: String,
    pub frequency_col: String,
    pub lemma_col: Option<String>,
    pub period_col: Option<String>,
    pub role_col: Option<String>,
    /// Columns ingested verbatim as tags, keyed by column name.
    pub tag_cols: Vec<String>,
    /// Lowercase forms and lemmas on load. German sources want this off.
    pub lowercase: bool,
}

impl Default for LexiconSchema {
    fn default() -> Self {
        LexiconSchema {
            form_col: "form".into(),
            frequency_col: "frequency".into(),
            lemma_col: None,
            period_col: None,
            role_col: None,
            tag_cols: Vec::new(),
            lowercase: true,
        }
    }
}

/// Load a lexicon from a TSV file, preserving row order.
///
/// Duplicate rows for the same (form, lemma, period, role) are merged by
/// summing frequencies; their tags must agree or the row is rejected.
pub fn load_lexicon(path: impl AsRef<Path>, schema: &LexiconSchema) -> Result<Vec<WordEntry>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(false)
        .from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .clone();
    let col = |name: &str| -> Option<usize> { headers.iter().position(|h| h == name) };

    let form_idx = col(&schema.form_col)
        .ok_or_else(|| Error::Schema(format!("missing required column {:?}", schema.form_col)))?;
    let freq_idx = col(&schema.frequency_col).ok_or_else(|| {
        Error::Schema(format!("missing required column {:?}", schema.frequency_col))
    })?;
    let lemma_idx = match &schema.lemma_col {
        Some(c) => Some(col(c).ok_or_else(|| Error::Schema(format!("missing column {c:?}")))?),
        None => None,
    };
    let period_idx = match &schema.period_col {
        Some(c) => Some(col(c).ok_or_else(|| Error::Schema(format!("missing column {c:?}")))?),
        None => None,
    };
    let role_idx = match &schema.role_col {
        Some(c) => Some(col(c).ok_or_else(|| Error::Schema(format!("missing column {c:?}")))?),
        None => None,
    };
    let mut tag_idx = Vec::new();
    for c in &schema.tag_cols {
        tag_idx.push((
            c.clone(),
            col(c).ok_or_else(|| Error::Schema(format!("missing tag column {c:?}")))?,
        ));
    }

    let mut entries: Vec<WordEntry> = Vec::new();
    // Merge key -> position in `entries`.
    let mut seen: HashMap<(String, String, Option<i32>, bool), usize> = HashMap::new();

    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Row { line, msg: format!("bad row: {e}") })?;
        let raw_form = record.get(form_idx).unwrap_or("").trim();
        if raw_form.is_empty() {
            return Err(Error::Row { line, msg: "empty form".into() });
        }
        let form = if schema.lowercase { raw_form.to_lowercase() } else { raw_form.to_string() };

        let raw_freq = record.get(freq_idx).unwrap_or("").trim();
        let frequency: u64 = raw_freq.parse().map_err(|_| Error::Row {
            line,
            msg: format!("non-integer frequency {raw_freq:?}"),
        })?;

        let lemma = match lemma_idx {
            Some(idx) => {
                let l = record.get(idx).unwrap_or("").trim();
                let l = if l.is_empty() { raw_form } else { l };
                if schema.lowercase { l.to_lowercase() } else { l.to_string() }
            }
            None => form.clone(),
        };
        let period = match period_idx {
            Some(idx) => {
                let p = record.get(idx).unwrap_or("").trim();
                if p.is_empty() {
                    None
                } else {
                    Some(p.parse::<i32>().map_err(|_| Error::Row {
                        line,
                        msg: format!("non-integer period {p:?}"),
                    })?)
                }
            }
            None => None,
        };
        let role = match role_idx {
            Some(idx) => record.get(idx).unwrap_or("input").trim().parse::<Role>().map_err(
                |e| Error::Row { line, msg: e.to_string() },
            )?,
            None => Role::Input,
        };
        let mut tags = BTreeMap::new();
        for (name, idx) in &tag_idx {
            let v = record.get(*idx).unwrap_or("").trim();
            if !v.is_empty() {
                tags.insert(name.clone(), v.to_string());
            }
        }

        let key = (form.clone(), lemma.clone(), period, role == Role::Output);
        match seen.get(&key) {
            Some(&pos) => {
                if entries[pos].tags != tags {
                    return Err(Error::Row {
                        line,
                        msg: format!("duplicate row for {form:?} with conflicting tags"),
                    });
                }
                entries[pos].frequency += frequency;
            }
            None => {
                seen.insert(key, entries.len());
                entries.push(WordEntry { form, lemma, frequency, tags, period, role });
            }
        }
    }
    Ok(entries)
}

/// Word -> d-dimensional semantic vector, insertion-ordered.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
    duplicates: usize,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("embedding dim must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Array2::zeros((0, dim)),
            duplicates: 0,
        })
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut t = EmbeddingTable::new(dim)?;
        for (w, v) in rows {
            t.insert(w.into(), &v)?;
        }
        Ok(t)
    }

    /// Insert a vector; the first occurrence of a word wins.
    pub fn insert(&mut self, word: String, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector for {word:?} has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(bad) = vector.iter().find(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("non-finite component {bad} for {word:?}")));
        }
        if self.index.contains_key(&word) {
            self.duplicates += 1;
            log::warn!("duplicate embedding for {word:?}; first occurrence kept");
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.vectors
            .push_row(ArrayView1::from(vector))
            .map_err(|e| Error::Linalg(e.to_string()))?;
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(word).map(|&i| self.vectors.row(i))
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ArrayView1<'_, f64>)> {
        self.words.iter().map(|w| w.as_str()).zip(self.vectors.rows())
    }
}

/// Read a word2vec text file: first line `count dim`, then one word per line.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty embeddings file".into() })?;
    let header = header.map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut parts = header.split_whitespace();
    let declared: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { line: 1, msg: "header must be `count dim`".into() })?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { line: 1, msg: "header must be `count dim`".into() })?;
    if parts.next().is_some() {
        return Err(Error::Parse { line: 1, msg: "header must be exactly `count dim`".into() });
    }

    let mut table = EmbeddingTable::new(dim)?;
    let mut buf = Vec::with_capacity(dim);
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::Parse { line: line_no, msg: "missing word".into() })?;
        buf.clear();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad component {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite component for {word:?}"),
                });
            }
            buf.push(v);
        }
        if buf.len() != dim {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("row for {word:?} has {} components, expected {dim}", buf.len()),
            });
        }
        table.insert(word.to_string(), &buf)?;
    }
    if table.len() + table.duplicates() != declared {
        log::warn!(
            "embeddings header declared {declared} rows, found {} (+{} duplicates)",
            table.len(),
            table.duplicates()
        );
    }
    Ok(table)
}

/// Write a table in word2vec text format. Full precision, stable order.
pub fn save_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "{} {}", table.len(), table.dim()).map_err(io_err)?;
    for (word, vec) in table.iter() {
        write!(w, "{word}").map_err(io_err)?;
        for v in vec {
            write!(w, " {v}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    Ok(())
}

/// Write entries back out as a TSV lexicon under the given schema's column
/// names, so split artifacts can be fed back in as inputs.
pub fn save_lexicon(
    path: impl AsRef<Path>,
    entries: &[WordEntry],
    schema: &LexiconSchema,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(BufWriter::new(file));
    let mut header = vec![schema.form_col.clone(), schema.frequency_col.clone()];
    if let Some(c) = &schema.lemma_col {
        header.push(c.clone());
    }
    if let Some(c) = &schema.period_col {
        header.push(c.clone());
    }
    if let Some(c) = &schema.role_col {
        header.push(c.clone());
    }
    header.extend(schema.tag_cols.iter().cloned());
    w.write_record(&header).map_err(|e| Error::Other(e.to_string()))?;
    for e in entries {
        let mut row = vec![e.form.clone(), e.frequency.to_string()];
        if schema.lemma_col.is_some() {
            row.push(e.lemma.clone());
        }
        if schema.period_col.is_some() {
            row.push(e.period.map(|y| y.to_string()).unwrap_or_default());
        }
        if schema.role_col.is_some() {
            row.push(match e.role {
                Role::Input => "input".into(),
                Role::Output => "output".into(),
            });
        }
        for tag in &schema.tag_cols {
            row.push(e.tag(tag).unwrap_or("").to_string());
        }
        w.write_record(&row).map_err(|e| Error::Other(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Which lexicon field is matched against embedding keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinKey {
    Form,
    Lemma,
}

impl std::str::FromStr for JoinKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "form" => Ok(JoinKey::Form),
            "lemma" => Ok(JoinKey::Lemma),
            other => Err(Error::Argument(format!("unknown join key {other:?}"))),
        }
    }
}

/// A lexicon joined with its embedding vectors, row-aligned.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub entries: Vec<WordEntry>,
    /// Row i is the vector for `entries[i]`.
    pub embeddings: Array2<f64>,
    /// Excluded words with the reason for exclusion.
    pub dropped: Vec<(String, String)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.form.as_str())
    }

    pub fn vector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.embeddings.row(i)
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let entries = indices.iter().map(|&i| self.entries[i].clone()).collect();
        let mut embeddings = Array2::zeros((indices.len(), self.dim()));
        for (r, &i) in indices.iter().enumerate() {
            embeddings.row_mut(r).assign(&self.embeddings.row(i));
        }
        Dataset { entries, embeddings, dropped: Vec::new() }
    }

    /// Embedding table over this dataset's own words (first occurrence wins).
    pub fn to_embedding_table(&self) -> Result<EmbeddingTable> {
        let mut t = EmbeddingTable::new(self.dim())?;
        for (i, e) in self.entries.iter().enumerate() {
            t.insert(e.form.clone(), self.embeddings.row(i).as_slice().unwrap())?;
        }
        Ok(t)
    }
}

/// Join a lexicon with an embedding table, accounting for coverage losses.
pub fn assemble_dataset(
    lexicon: &[WordEntry],
    table: &EmbeddingTable,
    join: JoinKey,
) -> Result<Dataset> {
    let mut entries = Vec::new();
    let mut rows: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    for e in lexicon {
        let key = match join {
            JoinKey::Form => e.form.as_str(),
            JoinKey::Lemma => e.lemma.as_str(),
        };
        match table.position(key) {
            Some(pos) => {
                rows.push(pos);
                entries.push(e.clone());
            }
            None => dropped.push((e.form.clone(), "no embedding".to_string())),
        }
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "none of the {} lexicon words have embeddings",
            lexicon.len()
        )));
    }
    let mut embeddings = Array2::zeros((entries.len(), table.dim()));
    for (r, &pos) in rows.iter().enumerate() {
        embeddings.row_mut(r).assign(&table.row(pos));
    }
    Ok(Dataset { entries, embeddings, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn finnish_schema() -> LexiconSchema {
        LexiconSchema {
            tag_cols: vec!["case".into(), "number".into()],
            ..LexiconSchema::default()
        }
    }

    #[test]
    fn loads_tagged_rows_in_order() {
        let f = write_tmp(
            "form\tfrequency\tcase\tnumber\nvuonna\t120\tess\tsg\nkello\t80\tnom\tsg\n",
        );
        let entries = load_lexicon(f.path(), &finnish_schema()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].form, "vuonna");
        assert_eq!(entries[0].frequency, 120);
        assert_eq!(entries[0].tag("case"), Some("ess"));
        assert_eq!(entries[1].tag("number"), Some("sg"));
    }

    #[test]
    fn header_only_file_is_empty() {
        let f = write_tmp("form\tfrequency\n");
        let entries = load_lexicon(f.path(), &LexiconSchema::default()).unwrap();
        assert!(entries.is_empty());
    }

    #[test]
    fn bad_frequency_names_line() {
        let f = write_tmp("form\tfrequency\na\t1\nb\tabc\n");
        let err = load_lexicon(f.path(), &LexiconSchema::default()).unwrap_err();
        match err {
            Error::Row { line, .. } => assert_eq!(line, 3),
            other => panic!("expected row error, got {other}"),
        }
    }

    #[test]
    fn missing_required_column_is_schema_error() {
        let f = write_tmp("word\tcount\na\t1\n");
        assert!(matches!(
            load_lexicon(f.path(), &LexiconSchema::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn duplicate_rows_merge_frequencies() {
        let f = write_tmp("form\tfrequency\ta\na\t3\tx\nb\t1\ty\na\t4\tx\n");
        let schema = LexiconSchema { tag_cols: vec!["a".into()], ..LexiconSchema::default() };
        let entries = load_lexicon(f.path(), &schema).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].form, "a");
        assert_eq!(entries[0].frequency, 7);
    }

    #[test]
    fn duplicate_rows_with_conflicting_tags_rejected() {
        let f = write_tmp("form\tfrequency\tt\na\t3\tx\na\t4\ty\n");
        let schema = LexiconSchema { tag_cols: vec!["t".into()], ..LexiconSchema::default() };
        assert!(matches!(load_lexicon(f.path(), &schema), Err(Error::Row { line: 3, .. })));
    }

    #[test]
    fn embeddings_basic_and_arity_error() {
        let f = write_tmp("2 3\na 1 0 0\nb 0 1 0\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("a").unwrap()[0], 1.0);

        let f = write_tmp("1 3\nc 1 2\n");
        assert!(matches!(load_embeddings(f.path()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn embeddings_duplicate_first_wins() {
        let f = write_tmp("3 2\na 1 0\na 9 9\nb 0 1\n");
        let t = load_embeddings(f.path()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.duplicates(), 1);
        assert_eq!(t.get("a").unwrap()[0], 1.0);
    }

    #[test]
    fn embeddings_round_trip_reproduces_values() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let mut table = EmbeddingTable::new(50).unwrap();
        for i in 0..10 {
            let v: Vec<f64> = (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect();
            table.insert(format!("w{i}"), &v).unwrap();
        }
        let f = tempfile::NamedTempFile::new().unwrap();
        save_embeddings(f.path(), &table).unwrap();
        let back = load_embeddings(f.path()).unwrap();
        assert_eq!(back.len(), 10);
        for (w, v) in table.iter() {
            let u = back.get(w).unwrap();
            for (a, b) in v.iter().zip(u.iter()) {
                assert!((a - b).abs() < 5e-7, "{w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn assemble_accounts_for_losses() {
        let lex = vec![WordEntry::new("a", 1), WordEntry::new("b", 2), WordEntry::new("c", 3)];
        let table =
            EmbeddingTable::from_rows(2, [("a", vec![1.0, 0.0]), ("c", vec![0.0, 1.0])]).unwrap();
        let ds = assemble_dataset(&lex, &table, JoinKey::Form).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dropped, vec![("b".to_string(), "no embedding".to_string())]);
        assert_eq!(ds.len() + ds.dropped.len(), lex.len());
        assert_eq!(ds.entries[1].form, "c");
        assert_eq!(ds.vector(1)[1], 1.0);
    }

    #[test]
    fn assemble_all_present_drops_nothing() {
        let lex = vec![WordEntry::new("a", 1)];
        let table = EmbeddingTable::from_rows(1, [("a", vec![0.5])]).unwrap();
        let ds = assemble_dataset(&lex, &table, JoinKey::Form).unwrap();
        assert!(ds.dropped.is_empty());
    }

    #[test]
    fn assemble_by_lemma_shares_vectors() {
        let mut a = WordEntry::new("vuonna", 5);
        a.lemma = "vuosi".into();
        let mut b = WordEntry::new("vuotta", 2);
        b.lemma = "vuosi".into();
        let table = EmbeddingTable::from_rows(2, [("vuosi", vec![0.25, -1.0])]).unwrap();
        let ds = assemble_dataset(&[a, b], &table, JoinKey::Lemma).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.vector(0), ds.vector(1));
    }

    #[test]
    fn assemble_empty_is_error() {
        let lex = vec![WordEntry::new("a", 1)];
        let table = EmbeddingTable::from_rows(1, [("z", vec![0.5])]).unwrap();
        assert!(matches!(
            assemble_dataset(&lex, &table, JoinKey::Form),
            Err(Error::EmptyDataset(_))
        ));
    }
}
