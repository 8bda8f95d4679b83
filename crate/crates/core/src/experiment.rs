//! End-to-end experiment orchestration from a declarative config: ingest,
//! form space, split, training, evaluation, optional analyses, and a
//! manifest with content hashes so reruns can be verified byte-for-byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::centroid::{
    category_cue_summary, compute_centroids, cue_centroid_correlations, exponent_inventory,
    word_transparency, MappingSide, WordPosition,
};
use crate::compound::{
    boundary_cue_proportions, caoss_fit, caoss_predict, load_parses, CompositionMode,
};
use crate::config::Config;
use crate::corpus::{
    assemble_dataset, load_embeddings, load_lexicon, Dataset, EmbeddingTable, JoinKey,
    LexiconSchema, Role, WordEntry,
};
use crate::deep::{train_deep, DeepConfig, DeepLoss};
use crate::derive_seed;
use crate::diachronic::{
    growth_curve, pattern_year_table_with, pooled_pattern_stats, DistanceMetric, PatternFilter,
};
use crate::error::{Error, Result};
use crate::eval::{accuracy_report_with, AccuracyReport, Similarity};
use crate::form::{
    build_form_matrix, coverage_split, encode_word, CueIndex, FormMatrix, SplitPolicy,
    DEFAULT_BOUNDARY, DEFAULT_N,
};
use crate::mapping::{
    solve_endstate_sparse, train_frequency_informed, Direction, LinearMapping,
};
use crate::report;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainMethod {
    Eol { lambda: f64 },
    Fil { eta: f64, epochs: usize },
    Deep { width: usize, learning_rate: f64, max_epochs: usize, patience: usize },
}

impl TrainMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TrainMethod::Eol { .. } => "eol",
            TrainMethod::Fil { .. } => "fil",
            TrainMethod::Deep { .. } => "deep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidatePolicy {
    /// All words of the joined experiment dataset (train and test).
    TrainTest,
    /// Training words only.
    Train,
    /// Explicit word list, one word per line; vectors from the embedding
    /// table.
    File(PathBuf),
}

/// Everything a pipeline run needs, validated up front.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub lexicon: PathBuf,
    pub embeddings: PathBuf,
    pub schema: LexiconSchema,
    pub join: JoinKey,
    pub n: usize,
    pub boundary: char,
    pub split: Option<SplitPolicy>,
    pub coverage_tags: Vec<String>,
    pub methods: Vec<TrainMethod>,
    pub eval_ks: Vec<usize>,
    pub candidates: CandidatePolicy,
    pub class_tag: Option<String>,
    pub similarity: Similarity,
    /// Entries whose tag matches any (key, value) rule are excluded on load.
    pub exclude_tags: Vec<(String, String)>,
    pub analyses: Vec<String>,
    pub centroid_tags: Vec<String>,
    pub centroids_frequency_weighted: bool,
    pub compound_parses: Option<PathBuf>,
    pub compound_lambda: f64,
    pub diachronic_patterns: Vec<(String, PatternFilter)>,
    pub distance_metric: DistanceMetric,
    pub out_dir: PathBuf,
    pub seed: u64,
}

pub fn schema_from_config(cfg: &Config) -> LexiconSchema {
    LexiconSchema {
        form_col: cfg.get_or("col.form", "form").to_string(),
        frequency_col: cfg.get_or("col.frequency", "frequency").to_string(),
        lemma_col: cfg.get("col.lemma").map(str::to_string),
        period_col: cfg.get("col.period").map(str::to_string),
        role_col: cfg.get("col.role").map(str::to_string),
        tag_cols: cfg.get_list("tags"),
        lowercase: cfg.get_bool("lowercase", true).unwrap_or(true),
    }
}

impl ExperimentConfig {
    pub fn from_config(cfg: &Config) -> Result<ExperimentConfig> {
        let lexicon = PathBuf::from(cfg.require("lexicon")?);
        let embeddings = PathBuf::from(cfg.require("embeddings")?);
        let schema = schema_from_config(cfg);
        let join: JoinKey = cfg.get_or("join", "form").parse()?;
        let n = cfg.get_usize("ngram.n", DEFAULT_N)?;
        let boundary = cfg.get_char("ngram.boundary", DEFAULT_BOUNDARY)?;
        let seed = cfg.get_u64("seed", 0)?;

        let split = match cfg.get_or("split.policy", "none") {
            "none" => None,
            "threshold" => {
                Some(SplitPolicy::FrequencyThreshold(cfg.get_u64("split.threshold", 5)?))
            }
            "random" => Some(SplitPolicy::RandomFraction {
                fraction: cfg.get_f64("split.fraction", 0.1)?,
                seed: cfg.get_u64("split.seed", derive_seed(seed, "split"))?,
            }),
            other => {
                return Err(Error::Config(format!("unknown split policy {other:?}")))
            }
        };
        let coverage_tags = if cfg.get("coverage.tags").is_some() {
            cfg.get_list("coverage.tags")
        } else {
            cfg.get_list("tags")
        };

        let mut methods = Vec::new();
        for m in cfg.get_list("train.methods") {
            match m.as_str() {
                "eol" => methods.push(TrainMethod::Eol {
                    lambda: cfg.get_f64("train.lambda", 0.0)?,
                }),
                "fil" => methods.push(TrainMethod::Fil {
                    eta: cfg.get_f64("train.eta", 0.001)?,
                    epochs: cfg.get_usize("train.epochs", 1)?,
                }),
                "deep" => methods.push(TrainMethod::Deep {
                    width: cfg.get_usize("deep.width", 1000)?,
                    learning_rate: cfg.get_f64("deep.lr", 0.1)?,
                    max_epochs: cfg.get_usize("deep.max_epochs", 200)?,
                    patience: cfg.get_usize("deep.patience", 10)?,
                }),
                other => {
                    return Err(Error::Config(format!("unknown training method {other:?}")))
                }
            }
        }
        if methods.is_empty() {
            methods.push(TrainMethod::Eol { lambda: cfg.get_f64("train.lambda", 0.0)? });
        }

        let eval_ks: Vec<usize> = {
            let ks = cfg.get_list("eval.ks");
            if ks.is_empty() {
                vec![1, 10]
            } else {
                ks.iter()
                    .map(|k| {
                        k.parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad k {k:?}")))
                    })
                    .collect::<Result<_>>()?
            }
        };
        let candidates = match cfg.get_or("eval.candidates", "train+test") {
            "train+test" | "all" => CandidatePolicy::TrainTest,
            "train" => CandidatePolicy::Train,
            other => match other.strip_prefix("file:") {
                Some(path) => CandidatePolicy::File(PathBuf::from(path)),
                None => {
                    return Err(Error::Config(format!("unknown candidate policy {other:?}")))
                }
            },
        };

        let similarity: Similarity = cfg.get_or("eval.similarity", "pearson").parse()?;
        let mut exclude_tags = Vec::new();
        for rule in cfg.get_list("filter.exclude") {
            let (key, value) = rule.split_once('=').ok_or_else(|| {
                Error::Config(format!("filter.exclude rule {rule:?} must be key=value"))
            })?;
            exclude_tags.push((key.trim().to_string(), value.trim().to_string()));
        }
        let analyses = cfg.get_list("analyses");
        let centroid_tags = cfg.get_list("centroids.tags");
        let distance_metric: DistanceMetric =
            cfg.get_or("diachronic.distance", "euclidean").parse()?;
        let compound_parses = cfg.get("compounds.parses").map(PathBuf::from);
        let mut diachronic_patterns = Vec::new();
        for spec in cfg.get_list("diachronic.patterns") {
            diachronic_patterns.push((spec.clone(), PatternFilter::parse(&spec)?));
        }

        let out_dir = PathBuf::from(cfg.get_or("out", "."));
        let config = ExperimentConfig {
            lexicon,
            embeddings,
            schema,
            join,
            n,
            boundary,
            split,
            coverage_tags,
            methods,
            eval_ks,
            candidates,
            class_tag: cfg.get("eval.class_tag").map(str::to_string),
            similarity,
            exclude_tags,
            analyses,
            centroid_tags,
            centroids_frequency_weighted: cfg.get_bool("centroids.frequency_weighted", false)?,
            compound_parses,
            compound_lambda: cfg.get_f64("compounds.lambda", 0.0)?,
            diachronic_patterns,
            distance_metric,
            out_dir,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, path) in [("lexicon", &self.lexicon), ("embeddings", &self.embeddings)] {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "{what} file {} does not exist",
                    path.display()
                )));
            }
        }
        if let CandidatePolicy::File(path) = &self.candidates {
            if !path.is_file() {
                return Err(Error::Config(format!(
                    "candidate list {} does not exist",
                    path.display()
                )));
            }
        }
        for analysis in &self.analyses {
            match analysis.as_str() {
                "centroids" | "exponents" | "transparency" => {
                    if self.centroid_tags.is_empty() {
                        return Err(Error::Config(format!(
                            "analysis {analysis:?} requires centroids.tags"
                        )));
                    }
                }
                "compounds" => match &self.compound_parses {
                    Some(path) if path.is_file() => {}
                    Some(path) => {
                        return Err(Error::Config(format!(
                            "parse file {} does not exist",
                            path.display()
                        )))
                    }
                    None => {
                        return Err(Error::Config(
                            "analysis \"compounds\" requires compounds.parses".into(),
                        ))
                    }
                },
                "diachronic" => {
                    if self.diachronic_patterns.is_empty() {
                        return Err(Error::Config(
                            "analysis \"diachronic\" requires diachronic.patterns".into(),
                        ));
                    }
                    if self.schema.period_col.is_none() {
                        return Err(Error::Config(
                            "analysis \"diachronic\" requires col.period".into(),
                        ));
                    }
                }
                other => {
                    return Err(Error::Config(format!("unknown analysis {other:?}")))
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: String,
    pub detail: String,
}

/// What a run produced. Report bodies are deterministic; only
/// `created_unix` varies between identical reruns.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub created_unix: u64,
    pub complete: bool,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stages: Vec<StageRecord>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

struct RunState<'a> {
    cfg: &'a ExperimentConfig,
    manifest: Manifest,
}

impl<'a> RunState<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        RunState {
            cfg,
            manifest: Manifest {
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed: cfg.seed,
                created_unix: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                complete: false,
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
            },
        }
    }

    fn record_input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn record_output(&mut self, path: &Path) -> Result<()> {
        self.manifest.outputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn stage_ok(&mut self, stage: &str, detail: String) {
        self.manifest.stages.push(StageRecord {
            stage: stage.to_string(),
            status: "ok".into(),
            detail,
        });
    }

    fn finish(mut self, result: Result<()>) -> Result<Manifest> {
        match result {
            Ok(()) => {
                self.manifest.complete = true;
                self.write_manifest()?;
                Ok(self.manifest)
            }
            Err(e) => {
                let stage = match &e {
                    Error::Stage { stage, .. } => stage.clone(),
                    _ => "unknown".into(),
                };
                self.manifest.stages.push(StageRecord {
                    stage,
                    status: "failed".into(),
                    detail: e.to_string(),
                });
                self.manifest.complete = false;
                // Best effort: still leave a manifest behind.
                let _ = self.write_manifest();
                Err(e)
            }
        }
    }

    fn write_manifest(&mut self) -> Result<()> {
        let path = self.out_path("manifest.json");
        let mut w = report::create(&path)?;
        report::write_json(
            &mut w,
            &serde_json::to_value(&self.manifest).map_err(|e| Error::Other(e.to_string()))?,
        )?;
        Ok(())
    }
}

fn in_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

/// Drop entries whose tags match any exclusion rule, reporting each removal.
pub fn apply_exclusions(
    lexicon: Vec<WordEntry>,
    rules: &[(String, String)],
) -> (Vec<WordEntry>, Vec<(String, String)>) {
    if rules.is_empty() {
        return (lexicon, Vec::new());
    }
    let mut kept = Vec::with_capacity(lexicon.len());
    let mut removed = Vec::new();
    'entries: for e in lexicon {
        for (key, value) in rules {
            if e.tag(key) == Some(value.as_str()) {
                removed.push((e.form.clone(), format!("excluded by filter {key}={value}")));
                continue 'entries;
            }
        }
        kept.push(e);
    }
    (kept, removed)
}

/// Encode words against a trained cue index; words with no known cues are
/// reported back.
pub fn encode_dataset(
    index: &CueIndex,
    dataset: &Dataset,
) -> Result<(FormMatrix, Vec<(String, String)>)> {
    let mut matrix = FormMatrix::new(index.len());
    let mut missing = Vec::new();
    for entry in &dataset.entries {
        let (ids, unknown) = encode_word(index, &entry.form)?;
        if ids.is_empty() {
            missing.push((entry.form.clone(), "no known cues".to_string()));
        } else if !unknown.is_empty() {
            missing.push((
                entry.form.clone(),
                format!("{} unseen cues (prediction uses the rest)", unknown.len()),
            ));
        }
        matrix.push_row(ids);
    }
    Ok((matrix, missing))
}

fn candidate_table(
    policy: &CandidatePolicy,
    full: &Dataset,
    train: &Dataset,
    table: &EmbeddingTable,
) -> Result<EmbeddingTable> {
    match policy {
        CandidatePolicy::TrainTest => full.to_embedding_table(),
        CandidatePolicy::Train => train.to_embedding_table(),
        CandidatePolicy::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            let mut out = EmbeddingTable::new(table.dim())?;
            for word in text.lines().map(str::trim).filter(|w| !w.is_empty()) {
                let v = table.get(word).ok_or_else(|| {
                    Error::Argument(format!("candidate {word:?} has no embedding"))
                })?;
                out.insert(word.to_string(), v.as_slice().unwrap())?;
            }
            Ok(out)
        }
    }
}

fn train_one(
    method: &TrainMethod,
    matrix: &FormMatrix,
    targets: &Array2<f64>,
    freqs: &[u64],
    seed: u64,
) -> Result<TrainedMapping> {
    match method {
        TrainMethod::Eol { lambda } => Ok(TrainedMapping::Linear(solve_endstate_sparse(
            matrix,
            targets,
            *lambda,
            Direction::Comprehension,
        )?)),
        TrainMethod::Fil { eta, epochs } => Ok(TrainedMapping::Linear(train_frequency_informed(
            matrix,
            targets,
            freqs,
            *eta,
            *epochs,
            derive_seed(seed, "fil"),
            Direction::Comprehension,
        )?)),
        TrainMethod::Deep { width, learning_rate, max_epochs, patience } => {
            let cfg = DeepConfig {
                width: *width,
                loss: DeepLoss::SquaredError,
                seed: derive_seed(seed, "deep"),
                learning_rate: *learning_rate,
                batch: 64,
                max_epochs: *max_epochs,
                patience: *patience,
                val_fraction: 0.1,
                early_stopping: true,
            };
            Ok(TrainedMapping::Deep(Box::new(train_deep(&matrix.to_dense(), targets, &cfg)?)))
        }
    }
}

pub enum TrainedMapping {
    Linear(LinearMapping),
    Deep(Box<crate::deep::DeepMapping>),
}

impl TrainedMapping {
    pub fn predict(&self, matrix: &FormMatrix) -> Result<Array2<f64>> {
        match self {
            TrainedMapping::Linear(m) => m.apply_sparse(matrix),
            TrainedMapping::Deep(m) => m.predict_sparse(matrix),
        }
    }
}

/// Open either mapping container, dispatching on the header magic.
pub fn load_trained(path: &Path) -> Result<TrainedMapping> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut first = String::new();
    std::io::BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    if first.contains("lexmorph-deep/") {
        Ok(TrainedMapping::Deep(Box::new(crate::deep::load_deep(path)?)))
    } else {
        Ok(TrainedMapping::Linear(crate::mapping::load_mapping(path)?))
    }
}

/// Run the configured pipeline and write all reports plus `manifest.json`
/// into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    let mut state = RunState::new(cfg);
    let result = run_stages(cfg, &mut state);
    state.finish(result)
}

fn run_stages(cfg: &ExperimentConfig, state: &mut RunState) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e).in_stage("ingest"))?;

    // ingest
    let loaded = in_stage("ingest", load_lexicon(&cfg.lexicon, &cfg.schema))?;
    let (lexicon, filtered) = apply_exclusions(loaded, &cfg.exclude_tags);
    let table = in_stage("ingest", load_embeddings(&cfg.embeddings))?;
    in_stage("ingest", state.record_input(&cfg.lexicon))?;
    in_stage("ingest", state.record_input(&cfg.embeddings))?;
    let dataset = in_stage("ingest", assemble_dataset(&lexicon, &table, cfg.join))?;
    {
        let path = state.out_path("dropped.csv");
        let mut w = in_stage("ingest", report::create(&path))?;
        let mut reasons = filtered.clone();
        reasons.extend(dataset.dropped.iter().cloned());
        in_stage("ingest", report::write_reasons_csv(&mut w, ["word", "reason"], &reasons))?;
        drop(w);
        in_stage("ingest", state.record_output(&path))?;
    }
    state.stage_ok(
        "ingest",
        format!(
            "{} entries joined, {} dropped, {} filtered",
            dataset.len(),
            dataset.dropped.len(),
            filtered.len()
        ),
    );

    // split
    let (train, test) = match cfg.split {
        Some(policy) => {
            let outcome = in_stage(
                "split",
                coverage_split(&dataset, policy, cfg.n, cfg.boundary, &cfg.coverage_tags),
            )?;
            let path = state.out_path("moved.csv");
            let mut w = in_stage("split", report::create(&path))?;
            in_stage("split", report::write_reasons_csv(&mut w, ["word", "reason"], &outcome.moved))?;
            drop(w);
            in_stage("split", state.record_output(&path))?;
            state.stage_ok(
                "split",
                format!(
                    "{} train, {} test, {} moved{}",
                    outcome.train.len(),
                    outcome.test.len(),
                    outcome.moved.len(),
                    outcome.warning.as_deref().map(|w| format!(" ({w})")).unwrap_or_default()
                ),
            );
            (outcome.train, outcome.test)
        }
        None => {
            state.stage_ok("split", "no split policy: all data trains".into());
            (dataset.clone(), dataset.subset(&[]))
        }
    };

    // form space over the training vocabulary
    let (index, train_matrix) = in_stage("form", build_form_matrix(&train, cfg.n, cfg.boundary))?;
    {
        let path = state.out_path("cues.json");
        let mut w = in_stage("form", report::create(&path))?;
        use std::io::Write as _;
        in_stage(
            "form",
            w.write_all(index.to_json().as_bytes())
                .and_then(|_| w.write_all(b"\n"))
                .map_err(|e| Error::io(path.display().to_string(), e)),
        )?;
        drop(w);
        in_stage("form", state.record_output(&path))?;
        let rows_path = state.out_path("form_rows.txt");
        let mut w = in_stage("form", report::create(&rows_path))?;
        in_stage(
            "form",
            train_matrix
                .write_rows(&mut w)
                .map_err(|e| Error::io(rows_path.display().to_string(), e)),
        )?;
        drop(w);
        in_stage("form", state.record_output(&rows_path))?;
    }
    state.stage_ok("form", format!("{} cues over {} words", index.len(), train.len()));

    let (test_matrix, test_missing) = in_stage("form", encode_dataset(&index, &test))?;
    if !test_missing.is_empty() {
        log::warn!("{} test words had unseen cues", test_missing.len());
    }

    // train + evaluate per method
    let candidates = in_stage(
        "evaluate",
        candidate_table(&cfg.candidates, &dataset, &train, &table),
    )?;
    let eval_ks: Vec<usize> =
        cfg.eval_ks.iter().copied().filter(|&k| k <= candidates.len()).collect();
    if eval_ks.len() < cfg.eval_ks.len() {
        log::warn!(
            "dropping accuracy cutoffs above the candidate count {}",
            candidates.len()
        );
    }
    if eval_ks.is_empty() {
        return Err(Error::Argument(format!(
            "no usable accuracy cutoff: candidate set has {} words",
            candidates.len()
        ))
        .in_stage("evaluate"));
    }
    let train_targets = train.embeddings.clone();
    let freqs: Vec<u64> = train.entries.iter().map(|e| e.frequency).collect();
    let mut first_eol: Option<LinearMapping> = None;
    for method in &cfg.methods {
        let name = method.name();
        let trained = in_stage(
            "train",
            train_one(method, &train_matrix, &train_targets, &freqs, cfg.seed),
        )?;
        if let TrainedMapping::Linear(m) = &trained {
            let path = state.out_path(&format!("mapping_{name}.bin"));
            in_stage("train", crate::mapping::save_mapping(&path, m))?;
            in_stage("train", state.record_output(&path))?;
            if first_eol.is_none() && matches!(method, TrainMethod::Eol { .. }) {
                first_eol = Some(m.clone());
            }
        }
        state.stage_ok("train", format!("{name} trained on {} words", train.len()));

        for (split_name, ds, matrix) in
            [("train", &train, &train_matrix), ("test", &test, &test_matrix)]
        {
            if ds.is_empty() {
                continue;
            }
            let preds = in_stage("evaluate", trained.predict(matrix))?;
            let rep = in_stage(
                "evaluate",
                accuracy_report_with(
                    &preds,
                    ds,
                    &candidates,
                    &eval_ks,
                    cfg.class_tag.as_deref(),
                    cfg.similarity,
                ),
            )?;
            write_accuracy_outputs(state, &format!("accuracy_{name}_{split_name}"), &rep)?;
        }
    }

    // analyses
    for analysis in &cfg.analyses {
        match analysis.as_str() {
            "centroids" => {
                let centroids =
                    in_stage(
                    "centroids",
                    compute_centroids(&dataset, &cfg.centroid_tags, cfg.centroids_frequency_weighted),
                )?;
                let path = state.out_path("centroids.csv");
                let mut w = in_stage("centroids", report::create(&path))?;
                in_stage("centroids", report::write_centroids_csv(&mut w, &centroids))?;
                drop(w);
                in_stage("centroids", state.record_output(&path))?;
                if let Some(mapping) = &first_eol {
                    let matrix = in_stage(
                        "centroids",
                        cue_centroid_correlations(mapping, &index, &centroids, MappingSide::Rows),
                    )?;
                    let path = state.out_path("cue_centroid.csv");
                    let mut w = in_stage("centroids", report::create(&path))?;
                    let boundary = cfg.boundary;
                    let is_final = move |cue: &str| cue.ends_with(boundary);
                    in_stage(
                        "centroids",
                        report::write_cue_centroid_csv(&mut w, &matrix, &is_final),
                    )?;
                    drop(w);
                    in_stage("centroids", state.record_output(&path))?;
                    // Per-category digest over the categories' own final cues.
                    let inventory = in_stage(
                        "centroids",
                        exponent_inventory(
                            &dataset,
                            &cfg.centroid_tags,
                            WordPosition::Final,
                            cfg.n,
                            cfg.boundary,
                        ),
                    )?;
                    let summary = in_stage(
                        "centroids",
                        category_cue_summary(&matrix, &inventory, &is_final),
                    )?;
                    let path = state.out_path("centroid_cue_summary.csv");
                    let mut w = in_stage("centroids", report::create(&path))?;
                    in_stage(
                        "centroids",
                        report::write_category_cue_summary_csv(&mut w, &summary),
                    )?;
                    drop(w);
                    in_stage("centroids", state.record_output(&path))?;
                }
                state.stage_ok("centroids", format!("{} centroids", centroids.len()));
            }
            "exponents" => {
                let inv = in_stage(
                    "exponents",
                    exponent_inventory(
                        &dataset,
                        &cfg.centroid_tags,
                        WordPosition::Final,
                        cfg.n,
                        cfg.boundary,
                    ),
                )?;
                let path = state.out_path("exponents.csv");
                let mut w = in_stage("exponents", report::create(&path))?;
                in_stage("exponents", report::write_inventory_csv(&mut w, &inv))?;
                drop(w);
                in_stage("exponents", state.record_output(&path))?;
                state.stage_ok("exponents", format!("{} categories", inv.len()));
            }
            "transparency" => {
                let centroids = in_stage(
                    "transparency",
                    compute_centroids(&dataset, &cfg.centroid_tags, cfg.centroids_frequency_weighted),
                )?;
                let scores = in_stage(
                    "transparency",
                    word_transparency(&dataset, &centroids, &cfg.centroid_tags),
                )?;
                let path = state.out_path("transparency.csv");
                let mut w = in_stage("transparency", report::create(&path))?;
                in_stage("transparency", report::write_transparency_csv(&mut w, &scores))?;
                drop(w);
                in_stage("transparency", state.record_output(&path))?;
                state.stage_ok("transparency", format!("{} words", scores.len()));
            }
            "compounds" => {
                run_compound_analysis(cfg, state, &dataset, &table, &index, &first_eol)?;
            }
            "diachronic" => {
                run_diachronic_analysis(cfg, state, &lexicon, &table)?;
            }
            _ => unreachable!("validated"),
        }
    }
    Ok(())
}

fn write_accuracy_outputs(
    state: &mut RunState,
    stem: &str,
    rep: &AccuracyReport,
) -> Result<()> {
    let csv_path = state.out_path(&format!("{stem}.csv"));
    let mut w = in_stage("evaluate", report::create(&csv_path))?;
    in_stage("evaluate", report::write_accuracy_csv(&mut w, rep))?;
    drop(w);
    in_stage("evaluate", state.record_output(&csv_path))?;
    let json_path = state.out_path(&format!("{stem}.json"));
    let mut w = in_stage("evaluate", report::create(&json_path))?;
    in_stage("evaluate", report::write_json(&mut w, &report::accuracy_summary_json(rep)))?;
    drop(w);
    in_stage("evaluate", state.record_output(&json_path))?;
    state.stage_ok(
        "evaluate",
        format!("{stem}: type@first-k {}", report::fmt_f64(rep.type_acc[0])),
    );
    Ok(())
}

fn run_compound_analysis(
    cfg: &ExperimentConfig,
    state: &mut RunState,
    dataset: &Dataset,
    table: &EmbeddingTable,
    index: &CueIndex,
    first_eol: &Option<LinearMapping>,
) -> Result<()> {
    let stage = "compounds";
    let parses_path = cfg.compound_parses.as_ref().expect("validated");
    in_stage(stage, state.record_input(parses_path))?;
    let parses = in_stage(stage, load_parses(parses_path, cfg.schema.lowercase))?;

    if let Some(mapping) = first_eol {
        let outcome =
            in_stage(stage, boundary_cue_proportions(&parses, mapping, index, table))?;
        let path = state.out_path("boundary_cues.csv");
        let mut w = in_stage(stage, report::create(&path))?;
        in_stage(stage, report::write_boundary_csv(&mut w, &outcome.reports))?;
        drop(w);
        in_stage(stage, state.record_output(&path))?;
        if !outcome.skipped.is_empty() {
            let path = state.out_path("boundary_skipped.csv");
            let mut w = in_stage(stage, report::create(&path))?;
            in_stage(stage, report::write_reasons_csv(&mut w, ["compound", "reason"], &outcome.skipped))?;
            drop(w);
            in_stage(stage, state.record_output(&path))?;
        }
    }

    // Composition model over parses with full embedding coverage.
    let covered: Vec<_> = parses
        .iter()
        .filter(|p| {
            table.contains(&p.compound) && table.contains(&p.left) && table.contains(&p.right)
        })
        .collect();
    if covered.len() >= 2 {
        let d = table.dim();
        let mut l = Array2::zeros((covered.len(), d));
        let mut r = Array2::zeros((covered.len(), d));
        let mut c = Array2::zeros((covered.len(), d));
        for (i, p) in covered.iter().enumerate() {
            l.row_mut(i).assign(&table.get(&p.left).unwrap());
            r.row_mut(i).assign(&table.get(&p.right).unwrap());
            c.row_mut(i).assign(&table.get(&p.compound).unwrap());
        }
        let fit = in_stage(stage, caoss_fit(&l, &r, &c, cfg.compound_lambda))?;
        let pred = in_stage(stage, caoss_predict(&fit, &l, &r, CompositionMode::Caoss))?;
        let additive = in_stage(stage, caoss_predict(&fit, &l, &r, CompositionMode::Additive))?;
        let sse = |p: &Array2<f64>| (p - &c).iter().map(|v| v * v).sum::<f64>();
        // Accuracy of composed predictions against the compound embeddings.
        let compound_entries: Vec<WordEntry> = covered
            .iter()
            .map(|p| {
                dataset
                    .entries
                    .iter()
                    .find(|e| e.form == p.compound)
                    .cloned()
                    .unwrap_or_else(|| WordEntry::new(p.compound.clone(), 1))
            })
            .collect();
        let gold = assemble_dataset(&compound_entries, table, JoinKey::Form)
            .map_err(|e| e.in_stage(stage))?;
        let candidates = gold.to_embedding_table().map_err(|e| e.in_stage(stage))?;
        let ks: Vec<usize> =
            cfg.eval_ks.iter().copied().filter(|&k| k <= candidates.len()).collect();
        let mut summary = json!({
            "parses": parses.len(),
            "covered": covered.len(),
            "sse_caoss": report::round_sig(sse(&pred), 6),
            "sse_additive": report::round_sig(sse(&additive), 6),
        });
        if !ks.is_empty() {
            let rep_caoss =
                accuracy_report_with(&pred, &gold, &candidates, &ks, None, cfg.similarity)
                    .map_err(|e| e.in_stage(stage))?;
            let rep_add =
                accuracy_report_with(&additive, &gold, &candidates, &ks, None, cfg.similarity)
                    .map_err(|e| e.in_stage(stage))?;
            let obj = summary.as_object_mut().unwrap();
            obj.insert("accuracy_caoss".into(), report::accuracy_summary_json(&rep_caoss));
            obj.insert("accuracy_additive".into(), report::accuracy_summary_json(&rep_add));
        }
        let path = state.out_path("caoss.json");
        let mut w = in_stage(stage, report::create(&path))?;
        in_stage(stage, report::write_json(&mut w, &summary))?;
        drop(w);
        in_stage(stage, state.record_output(&path))?;
    }
    state.stage_ok(stage, format!("{} parses", parses.len()));
    Ok(())
}

fn run_diachronic_analysis(
    cfg: &ExperimentConfig,
    state: &mut RunState,
    lexicon: &[WordEntry],
    table: &EmbeddingTable,
) -> Result<()> {
    let stage = "diachronic";
    let input: Vec<WordEntry> =
        lexicon.iter().filter(|e| e.role == Role::Input).cloned().collect();
    let output: Vec<WordEntry> =
        lexicon.iter().filter(|e| e.role == Role::Output).cloned().collect();

    let rows = in_stage(
        stage,
        pattern_year_table_with(
            &input,
            &output,
            &cfg.diachronic_patterns,
            Some(table),
            cfg.distance_metric,
        ),
    )?;
    let path = state.out_path("productivity_years.csv");
    let mut w = in_stage(stage, report::create(&path))?;
    in_stage(stage, report::write_pattern_year_csv(&mut w, &rows))?;
    drop(w);
    in_stage(stage, state.record_output(&path))?;

    let mut pooled = Vec::new();
    let mut curves = Vec::new();
    for (name, filter) in &cfg.diachronic_patterns {
        pooled.push(in_stage(stage, pooled_pattern_stats(&input, &output, name, filter))?);
        curves.push((name.clone(), in_stage(stage, growth_curve(&input, filter))?));
    }
    let path = state.out_path("productivity_pooled.csv");
    let mut w = in_stage(stage, report::create(&path))?;
    in_stage(stage, report::write_pooled_csv(&mut w, &pooled))?;
    drop(w);
    in_stage(stage, state.record_output(&path))?;

    let path = state.out_path("growth.csv");
    let mut w = in_stage(stage, report::create(&path))?;
    in_stage(stage, report::write_growth_csv(&mut w, &curves))?;
    drop(w);
    in_stage(stage, state.record_output(&path))?;

    state.stage_ok(stage, format!("{} pattern-year rows", rows.len()));
    Ok(())
}

/// One evaluation row of a time-sliced run.
#[derive(Debug, Clone, Serialize)]
pub struct SliceRow {
    pub slice: i32,
    pub method: String,
    pub pattern: String,
    pub words: usize,
    pub type_acc: Vec<f64>,
    pub token_acc: Vec<f64>,
}

/// Train one model per slice year on everything read up to and including
/// that year, and evaluate per pattern on the types first read afterwards.
pub fn run_time_slices(cfg: &ExperimentConfig, slice_years: &[i32]) -> Result<Manifest> {
    let mut state = RunState::new(cfg);
    let result = run_time_slice_stages(cfg, slice_years, &mut state);
    state.finish(result)
}

fn run_time_slice_stages(
    cfg: &ExperimentConfig,
    slice_years: &[i32],
    state: &mut RunState,
) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Error::io(cfg.out_dir.display().to_string(), e).in_stage("ingest"))?;
    if cfg.schema.period_col.is_none() {
        return Err(Error::Config("time slices require col.period".into()).in_stage("ingest"));
    }
    let loaded = in_stage("ingest", load_lexicon(&cfg.lexicon, &cfg.schema))?;
    let (lexicon, _) = apply_exclusions(loaded, &cfg.exclude_tags);
    let table = in_stage("ingest", load_embeddings(&cfg.embeddings))?;
    in_stage("ingest", state.record_input(&cfg.lexicon))?;
    in_stage("ingest", state.record_input(&cfg.embeddings))?;

    let input: Vec<&WordEntry> = lexicon.iter().filter(|e| e.role == Role::Input).collect();
    for e in &input {
        if e.period.is_none() {
            return Err(Error::Argument(format!("entry {:?} has no year", e.form))
                .in_stage("ingest"));
        }
    }
    state.stage_ok("ingest", format!("{} input entries", input.len()));

    // First year each type was read, and its token mass per slice.
    let mut first_year: BTreeMap<&str, i32> = BTreeMap::new();
    for e in &input {
        let y = e.period.unwrap();
        first_year
            .entry(e.form.as_str())
            .and_modify(|cur| {
                if y < *cur {
                    *cur = y;
                }
            })
            .or_insert(y);
    }

    let mut rows: Vec<SliceRow> = Vec::new();
    for &slice in slice_years {
        // Cumulative training lexicon: types read up to the slice year,
        // frequencies summed across years.
        let mut merged: BTreeMap<&str, WordEntry> = BTreeMap::new();
        for e in input.iter().filter(|e| e.period.unwrap() <= slice) {
            merged
                .entry(e.form.as_str())
                .and_modify(|m| m.frequency += e.frequency)
                .or_insert_with(|| (*e).clone());
        }
        let train_lexicon: Vec<WordEntry> = merged.into_values().collect();
        if train_lexicon.is_empty() {
            state.stage_ok("train", format!("slice {slice}: no data, skipped"));
            log::warn!("slice {slice} has no training data");
            continue;
        }
        let train = match assemble_dataset(&train_lexicon, &table, cfg.join) {
            Ok(ds) => ds,
            Err(Error::EmptyDataset(msg)) => {
                state.stage_ok("train", format!("slice {slice}: {msg}, skipped"));
                continue;
            }
            Err(e) => return Err(e.in_stage("train")),
        };
        let (index, train_matrix) =
            in_stage("form", build_form_matrix(&train, cfg.n, cfg.boundary))?;
        let freqs: Vec<u64> = train.entries.iter().map(|e| e.frequency).collect();

        // Held-out sets: per pattern, the types first read after the slice.
        let mut heldout: Vec<(String, Dataset, FormMatrix)> = Vec::new();
        let mut all_heldout_entries: Vec<WordEntry> = Vec::new();
        for (name, filter) in &cfg.diachronic_patterns {
            let mut seen = std::collections::HashSet::new();
            let entries: Vec<WordEntry> = input
                .iter()
                .filter(|e| {
                    first_year[e.form.as_str()] > slice
                        && filter.matches(e)
                        && seen.insert(e.form.clone())
                })
                .map(|e| (*e).clone())
                .collect();
            if entries.is_empty() {
                continue;
            }
            match assemble_dataset(&entries, &table, cfg.join) {
                Ok(ds) => {
                    let (matrix, _) = in_stage("form", encode_dataset(&index, &ds))?;
                    all_heldout_entries.extend(ds.entries.iter().cloned());
                    heldout.push((name.clone(), ds, matrix));
                }
                Err(Error::EmptyDataset(_)) => continue,
                Err(e) => return Err(e.in_stage("form")),
            }
        }

        // Candidates: the slice vocabulary plus the held-out targets.
        let mut candidates = in_stage("evaluate", train.to_embedding_table())?;
        for e in &all_heldout_entries {
            if !candidates.contains(&e.form) {
                if let Some(v) = table.get(&e.form) {
                    in_stage(
                        "evaluate",
                        candidates.insert(e.form.clone(), v.as_slice().unwrap()),
                    )?;
                }
            }
        }
        let ks: Vec<usize> =
            cfg.eval_ks.iter().copied().filter(|&k| k <= candidates.len()).collect();
        if ks.is_empty() {
            return Err(Error::Argument(format!(
                "no usable k for slice {slice}: candidate set has {} words",
                candidates.len()
            ))
            .in_stage("evaluate"));
        }

        for method in &cfg.methods {
            let trained = in_stage(
                "train",
                train_one(
                    method,
                    &train_matrix,
                    &train.embeddings.clone(),
                    &freqs,
                    derive_seed(cfg.seed, &format!("slice-{slice}")),
                ),
            )?;
            // Training-set row, then one row per pattern's held-out set.
            let preds = in_stage("evaluate", trained.predict(&train_matrix))?;
            let rep = in_stage(
                "evaluate",
                accuracy_report_with(&preds, &train, &candidates, &ks, None, cfg.similarity),
            )?;
            rows.push(SliceRow {
                slice,
                method: method.name().to_string(),
                pattern: "(train)".into(),
                words: train.len(),
                type_acc: rep.type_acc.clone(),
                token_acc: rep.token_acc.clone(),
            });
            for (pattern, ds, matrix) in &heldout {
                let preds = in_stage("evaluate", trained.predict(matrix))?;
                let rep = in_stage(
                    "evaluate",
                    accuracy_report_with(&preds, ds, &candidates, &ks, None, cfg.similarity),
                )?;
                rows.push(SliceRow {
                    slice,
                    method: method.name().to_string(),
                    pattern: pattern.clone(),
                    words: ds.len(),
                    type_acc: rep.type_acc.clone(),
                    token_acc: rep.token_acc.clone(),
                });
            }
            state.stage_ok(
                "evaluate",
                format!("slice {slice} {}: {} lexemes", method.name(), train.len()),
            );
        }
    }

    let path = state.out_path("slices.csv");
    let mut w = in_stage("evaluate", report::create(&path))?;
    {
        let mut writer = csv::Writer::from_writer(&mut w);
        let mut header =
            vec!["slice".to_string(), "method".to_string(), "pattern".to_string(), "words".to_string()];
        for k in &cfg.eval_ks {
            header.push(format!("type@{k}"));
        }
        for k in &cfg.eval_ks {
            header.push(format!("token@{k}"));
        }
        writer
            .write_record(&header)
            .map_err(|e| Error::Other(e.to_string()).in_stage("evaluate"))?;
        for row in &rows {
            let mut rec = vec![
                row.slice.to_string(),
                row.method.clone(),
                row.pattern.clone(),
                row.words.to_string(),
            ];
            for (i, _) in cfg.eval_ks.iter().enumerate() {
                rec.push(row.type_acc.get(i).map(|v| report::fmt_f64(*v)).unwrap_or_default());
            }
            for (i, _) in cfg.eval_ks.iter().enumerate() {
                rec.push(row.token_acc.get(i).map(|v| report::fmt_f64(*v)).unwrap_or_default());
            }
            writer
                .write_record(&rec)
                .map_err(|e| Error::Other(e.to_string()).in_stage("evaluate"))?;
        }
        writer.flush().map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    drop(w);
    in_stage("evaluate", state.record_output(&path))?;
    Ok(())
}
