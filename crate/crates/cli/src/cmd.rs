//! Subcommand handlers. Each one loads what it needs from the config,
//! delegates to the library, and writes reports into the output directory.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array2;

use lexmorph_core::centroid::{
    category_cue_summary, compute_centroids, cue_centroid_correlations, exponent_inventory,
    word_transparency, MappingSide, WordPosition,
};
use lexmorph_core::compound::{
    boundary_cue_proportions, caoss_fit, caoss_predict, load_parses, pivot_island,
    CompositionMode, IntervalMethod, PivotPosition,
};
use lexmorph_core::config::Config;
use lexmorph_core::corpus::{
    assemble_dataset, load_embeddings, load_lexicon, save_lexicon, Dataset, JoinKey, Role,
    WordEntry,
};
use lexmorph_core::diachronic::{growth_curve, pattern_year_table_with, pooled_pattern_stats, spearman};
use lexmorph_core::experiment::{
    encode_dataset, load_trained, run_experiment, run_time_slices, ExperimentConfig, TrainMethod,
};
use lexmorph_core::form::{build_form_matrix, coverage_split, CueIndex};
use lexmorph_core::mapping::{save_mapping, solve_endstate_sparse, Direction};
use lexmorph_core::report;

fn load_experiment(config: &Path, out: PathBuf, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = Config::load(config).context("loading config")?;
    if let Some(s) = seed {
        cfg.set("seed", s.to_string());
    }
    cfg.set("out", out.display().to_string());
    Ok(ExperimentConfig::from_config(&cfg)?)
}

pub fn ingest(config: &Path, out: PathBuf) -> Result<()> {
    let exp = load_experiment(config, out.clone(), None)?;
    let lexicon = load_lexicon(&exp.lexicon, &exp.schema)?;
    let table = load_embeddings(&exp.embeddings)?;
    let dataset = assemble_dataset(&lexicon, &table, exp.join)?;
    std::fs::create_dir_all(&out)?;
    let dropped = out.join("dropped.csv");
    let mut w = report::create(&dropped)?;
    report::write_reasons_csv(&mut w, ["word", "reason"], &dataset.dropped)?;
    let summary = serde_json::json!({
        "lexicon_rows": lexicon.len(),
        "embeddings": table.len(),
        "embedding_dim": table.dim(),
        "joined": dataset.len(),
        "dropped": dataset.dropped.len(),
    });
    let mut w = report::create(out.join("ingest.json"))?;
    report::write_json(&mut w, &summary)?;
    println!(
        "joined {} of {} lexicon rows ({} dropped), dim {}",
        dataset.len(),
        lexicon.len(),
        dataset.dropped.len(),
        table.dim()
    );
    Ok(())
}

/// Full dataset, train and test subsets, and the coverage moves.
type SplitParts = (Dataset, Dataset, Dataset, Vec<(String, String)>);

/// Load, join and split exactly as the config prescribes.
fn prepared_split(exp: &ExperimentConfig) -> Result<SplitParts> {
    let lexicon = load_lexicon(&exp.lexicon, &exp.schema)?;
    let table = load_embeddings(&exp.embeddings)?;
    let dataset = assemble_dataset(&lexicon, &table, exp.join)?;
    match exp.split {
        Some(policy) => {
            let outcome =
                coverage_split(&dataset, policy, exp.n, exp.boundary, &exp.coverage_tags)?;
            if let Some(warning) = &outcome.warning {
                log::warn!("{warning}");
            }
            Ok((dataset, outcome.train, outcome.test, outcome.moved))
        }
        None => {
            let empty = dataset.subset(&[]);
            Ok((dataset.clone(), dataset, empty, Vec::new()))
        }
    }
}

pub fn split(config: &Path, out: PathBuf, seed: Option<u64>) -> Result<()> {
    let exp = load_experiment(config, out.clone(), seed)?;
    if exp.split.is_none() {
        bail!("split: config has no split.policy");
    }
    let (_, train, test, moved) = prepared_split(&exp)?;
    std::fs::create_dir_all(&out)?;
    save_lexicon(out.join("train.tsv"), &train.entries, &exp.schema)?;
    save_lexicon(out.join("test.tsv"), &test.entries, &exp.schema)?;
    let mut w = report::create(out.join("moved.csv"))?;
    report::write_reasons_csv(&mut w, ["word", "reason"], &moved)?;
    println!("train {} test {} moved {}", train.len(), test.len(), moved.len());
    Ok(())
}

pub fn train(config: &Path, out: PathBuf, method: Option<&str>, seed: Option<u64>) -> Result<()> {
    let exp = load_experiment(config, out.clone(), seed)?;
    let (_, train, _, _) = prepared_split(&exp)?;
    let (index, matrix) = build_form_matrix(&train, exp.n, exp.boundary)?;
    std::fs::create_dir_all(&out)?;
    let cues_path = out.join("cues.json");
    std::fs::write(&cues_path, format!("{}\n", index.to_json()))?;
    let freqs: Vec<u64> = train.entries.iter().map(|e| e.frequency).collect();
    let targets = train.embeddings.clone();
    let mut trained_any = false;
    for m in &exp.methods {
        if let Some(filter) = method {
            if m.name() != filter {
                continue;
            }
        }
        trained_any = true;
        match m {
            TrainMethod::Eol { lambda } => {
                let mapping =
                    solve_endstate_sparse(&matrix, &targets, *lambda, Direction::Comprehension)?;
                save_mapping(out.join("mapping_eol.bin"), &mapping)?;
                println!("eol: {} cues -> {} dims", mapping.in_dim(), mapping.out_dim());
            }
            TrainMethod::Fil { eta, epochs } => {
                let mapping = lexmorph_core::mapping::train_frequency_informed(
                    &matrix,
                    &targets,
                    &freqs,
                    *eta,
                    *epochs,
                    lexmorph_core::derive_seed(exp.seed, "fil"),
                    Direction::Comprehension,
                )?;
                save_mapping(out.join("mapping_fil.bin"), &mapping)?;
                println!("fil: eta {eta}, {epochs} epoch(s) over {} tokens", freqs.iter().sum::<u64>());
            }
            TrainMethod::Deep { width, learning_rate, max_epochs, patience } => {
                let cfg = lexmorph_core::deep::DeepConfig {
                    width: *width,
                    loss: lexmorph_core::deep::DeepLoss::SquaredError,
                    seed: lexmorph_core::derive_seed(exp.seed, "deep"),
                    learning_rate: *learning_rate,
                    batch: 64,
                    max_epochs: *max_epochs,
                    patience: *patience,
                    val_fraction: 0.1,
                    early_stopping: true,
                };
                let mapping = lexmorph_core::deep::train_deep(&matrix.to_dense(), &targets, &cfg)?;
                lexmorph_core::deep::save_deep(out.join("mapping_deep.bin"), &mapping)?;
                println!(
                    "deep: width {width}, stopped after epoch {} (best {})",
                    mapping.record.epochs_run, mapping.record.best_epoch
                );
            }
        }
    }
    if !trained_any {
        bail!("train: no configured method matched {method:?}");
    }
    Ok(())
}

pub fn predict(
    config: &Path,
    out: PathBuf,
    mapping: &Path,
    cues: &Path,
    subset: &str,
    seed: Option<u64>,
) -> Result<()> {
    let exp = load_experiment(config, out.clone(), seed)?;
    let (all, train, test, _) = prepared_split(&exp)?;
    let dataset = match subset {
        "train" => train,
        "test" => test,
        "all" => all,
        other => bail!("predict: unknown subset {other:?} (use train, test or all)"),
    };
    if dataset.is_empty() {
        bail!("predict: subset {subset:?} is empty");
    }
    let index = CueIndex::from_json(&std::fs::read_to_string(cues)?)?;
    let (matrix, missing) = encode_dataset(&index, &dataset)?;
    for (word, why) in &missing {
        log::warn!("{word}: {why}");
    }
    let trained = load_trained(mapping)?;
    let preds = trained.predict(&matrix)?;
    std::fs::create_dir_all(&out)?;
    let path = out.join("predictions.tsv");
    let mut w = report::create(&path)?;
    for (i, entry) in dataset.entries.iter().enumerate() {
        write!(w, "{}", entry.form)?;
        for v in preds.row(i) {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    println!("wrote {} predictions to {}", dataset.len(), path.display());
    Ok(())
}

fn read_predictions(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading predictions {}", path.display()))?;
    let mut words = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let word = fields.next().context("empty prediction row")?;
        let row: Vec<f64> = fields
            .map(|f| f.parse::<f64>().with_context(|| format!("line {}: bad value {f:?}", i + 1)))
            .collect::<Result<_>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                bail!("line {}: expected {} components, got {}", i + 1, d, row.len())
            }
            _ => {}
        }
        words.push(word.to_string());
        values.extend(row);
    }
    let dim = dim.context("no prediction rows")?;
    let matrix = Array2::from_shape_vec((words.len(), dim), values)?;
    Ok((words, matrix))
}

pub fn eval(pred: &Path, gold: &Path, ks: &[usize], similarity: &str, out: PathBuf) -> Result<()> {
    let (words, preds) = read_predictions(pred)?;
    let table = load_embeddings(gold)?;
    let entries: Vec<WordEntry> = words.iter().map(|w| WordEntry::new(w.clone(), 1)).collect();
    let dataset = assemble_dataset(&entries, &table, JoinKey::Form)?;
    if !dataset.dropped.is_empty() {
        bail!(
            "eval: {} predicted words have no gold embedding (first: {})",
            dataset.dropped.len(),
            dataset.dropped[0].0
        );
    }
    let sim: lexmorph_core::eval::Similarity = similarity.parse()?;
    let report_data =
        lexmorph_core::eval::accuracy_report_with(&preds, &dataset, &table, ks, None, sim)?;
    std::fs::create_dir_all(&out)?;
    let csv_path = out.join("accuracy.csv");
    let mut w = report::create(&csv_path)?;
    report::write_accuracy_csv(&mut w, &report_data)?;
    let mut w = report::create(out.join("accuracy.json"))?;
    report::write_json(&mut w, &report::accuracy_summary_json(&report_data))?;
    for (i, k) in report_data.ks.iter().enumerate() {
        println!(
            "acc@{k}: type {} token {}",
            report::fmt_f64(report_data.type_acc[i]),
            report::fmt_f64(report_data.token_acc[i])
        );
    }
    Ok(())
}

pub fn centroids(config: &Path, out: PathBuf, production: bool) -> Result<()> {
    let exp = load_experiment(config, out.clone(), None)?;
    if exp.centroid_tags.is_empty() {
        bail!("centroids: config needs centroids.tags");
    }
    let lexicon = load_lexicon(&exp.lexicon, &exp.schema)?;
    let table = load_embeddings(&exp.embeddings)?;
    let dataset = assemble_dataset(&lexicon, &table, exp.join)?;
    let (index, matrix) = build_form_matrix(&dataset, exp.n, exp.boundary)?;
    let lambda = exp
        .methods
        .iter()
        .find_map(|m| match m {
            TrainMethod::Eol { lambda } => Some(*lambda),
            _ => None,
        })
        .unwrap_or(0.0);
    let targets = dataset.embeddings.clone();
    let mapping = solve_endstate_sparse(&matrix, &targets, lambda, Direction::Comprehension)?;
    let cents =
        compute_centroids(&dataset, &exp.centroid_tags, exp.centroids_frequency_weighted)?;
    let corr = cue_centroid_correlations(&mapping, &index, &cents, MappingSide::Rows)?;

    std::fs::create_dir_all(&out)?;
    let mut w = report::create(out.join("centroids.csv"))?;
    report::write_centroids_csv(&mut w, &cents)?;
    let boundary = exp.boundary;
    let is_final = move |cue: &str| cue.ends_with(boundary);
    let mut w = report::create(out.join("cue_centroid.csv"))?;
    report::write_cue_centroid_csv(&mut w, &corr, &is_final)?;
    if production {
        // Production mapping: semantic vectors to binary form rows; its
        // columns carry the cue-supporting vectors.
        let g = lexmorph_core::mapping::solve_endstate(
            &targets,
            &matrix.to_dense(),
            lambda,
            Direction::Production,
        )?;
        let corr_g = cue_centroid_correlations(&g, &index, &cents, MappingSide::Columns)?;
        let mut w = report::create(out.join("cue_centroid_production.csv"))?;
        report::write_cue_centroid_csv(&mut w, &corr_g, &is_final)?;
    }
    let scores = word_transparency(&dataset, &cents, &exp.centroid_tags)?;
    let mut w = report::create(out.join("transparency.csv"))?;
    report::write_transparency_csv(&mut w, &scores)?;
    let inv = exponent_inventory(
        &dataset,
        &exp.centroid_tags,
        WordPosition::Final,
        exp.n,
        exp.boundary,
    )?;
    let mut w = report::create(out.join("exponents.csv"))?;
    report::write_inventory_csv(&mut w, &inv)?;
    let summary = category_cue_summary(&corr, &inv, &is_final)?;
    let mut w = report::create(out.join("centroid_cue_summary.csv"))?;
    report::write_category_cue_summary_csv(&mut w, &summary)?;
    println!("{} centroids over {} words, {} cues", cents.len(), dataset.len(), index.len());
    Ok(())
}

pub fn compounds_boundary(config: &Path, out: PathBuf) -> Result<()> {
    let exp = load_experiment(config, out.clone(), None)?;
    let parses_path = exp
        .compound_parses
        .clone()
        .context("compounds boundary: config needs compounds.parses")?;
    let lexicon = load_lexicon(&exp.lexicon, &exp.schema)?;
    let table = load_embeddings(&exp.embeddings)?;
    let dataset = assemble_dataset(&lexicon, &table, exp.join)?;
    let (index, matrix) = build_form_matrix(&dataset, exp.n, exp.boundary)?;
    let targets = dataset.embeddings.clone();
    let mapping =
        solve_endstate_sparse(&matrix, &targets, exp.compound_lambda, Direction::Comprehension)?;
    let parses = load_parses(&parses_path, exp.schema.lowercase)?;
    let outcome = boundary_cue_proportions(&parses, &mapping, &index, &table)?;
    std::fs::create_dir_all(&out)?;
    let mut w = report::create(out.join("boundary_cues.csv"))?;
    report::write_boundary_csv(&mut w, &outcome.reports)?;
    let mut w = report::create(out.join("boundary_skipped.csv"))?;
    report::write_reasons_csv(&mut w, ["compound", "reason"], &outcome.skipped)?;
    println!("{} compounds scored, {} skipped", outcome.reports.len(), outcome.skipped.len());
    Ok(())
}

pub fn compounds_caoss(
    embeddings: &Path,
    parses: &Path,
    lambda: f64,
    ks: &[usize],
    out: PathBuf,
) -> Result<()> {
    let table = load_embeddings(embeddings)?;
    let parses = load_parses(parses, true)?;
    let covered: Vec<_> = parses
        .iter()
        .filter(|p| {
            table.contains(&p.compound) && table.contains(&p.left) && table.contains(&p.right)
        })
        .collect();
    if covered.len() < 2 {
        bail!("caoss: only {} parses have full embedding coverage", covered.len());
    }
    let d = table.dim();
    let mut l = Array2::zeros((covered.len(), d));
    let mut r = Array2::zeros((covered.len(), d));
    let mut c = Array2::zeros((covered.len(), d));
    for (i, p) in covered.iter().enumerate() {
        l.row_mut(i).assign(&table.get(&p.left).unwrap());
        r.row_mut(i).assign(&table.get(&p.right).unwrap());
        c.row_mut(i).assign(&table.get(&p.compound).unwrap());
    }
    let fit = caoss_fit(&l, &r, &c, lambda)?;
    let pred = caoss_predict(&fit, &l, &r, CompositionMode::Caoss)?;
    let additive = caoss_predict(&fit, &l, &r, CompositionMode::Additive)?;
    let sse = |p: &Array2<f64>| (p - &c).iter().map(|v| v * v).sum::<f64>();

    let entries: Vec<WordEntry> =
        covered.iter().map(|p| WordEntry::new(p.compound.clone(), 1)).collect();
    let gold = assemble_dataset(&entries, &table, JoinKey::Form)?;
    let candidates = gold.to_embedding_table()?;
    let ks: Vec<usize> = ks.iter().copied().filter(|&k| k <= candidates.len()).collect();
    let mut summary = serde_json::json!({
        "parses": parses.len(),
        "covered": covered.len(),
        "lambda": lambda,
        "sse_caoss": report::round_sig(sse(&pred), 6),
        "sse_additive": report::round_sig(sse(&additive), 6),
    });
    if !ks.is_empty() {
        let rep_caoss = lexmorph_core::eval::accuracy_report(&pred, &gold, &candidates, &ks, None)?;
        let rep_add =
            lexmorph_core::eval::accuracy_report(&additive, &gold, &candidates, &ks, None)?;
        let obj = summary.as_object_mut().unwrap();
        obj.insert("accuracy_caoss".into(), report::accuracy_summary_json(&rep_caoss));
        obj.insert("accuracy_additive".into(), report::accuracy_summary_json(&rep_add));
    }
    std::fs::create_dir_all(&out)?;
    let mut w = report::create(out.join("caoss.json"))?;
    report::write_json(&mut w, &summary)?;
    println!(
        "caoss SSE {} vs additive {} over {} compounds",
        report::fmt_f64(sse(&pred)),
        report::fmt_f64(sse(&additive)),
        covered.len()
    );
    Ok(())
}

pub struct PivotsArgs {
    pub embeddings: PathBuf,
    pub parses: PathBuf,
    pub pivots: Vec<String>,
    pub position: String,
    pub lexicon: Option<PathBuf>,
    pub candidates: Option<PathBuf>,
    pub interval: String,
    pub include_centroid: bool,
    pub out: PathBuf,
}

pub fn compounds_pivots(args: PivotsArgs) -> Result<()> {
    let table = load_embeddings(&args.embeddings)?;
    let parses = load_parses(&args.parses, true)?;
    let position: PivotPosition = args.position.parse()?;
    let method = match args.interval.as_str() {
        "percentile" => IntervalMethod::Percentile,
        "normal" => IntervalMethod::Normal,
        other => bail!("unknown interval method {other:?}"),
    };
    let frequencies: BTreeMap<String, u64> = match &args.lexicon {
        Some(path) => {
            let schema = lexmorph_core::corpus::LexiconSchema::default();
            load_lexicon(path, &schema)?
                .into_iter()
                .map(|e| (e.form, e.frequency))
                .collect()
        }
        // One token per type when no frequencies are supplied.
        None => parses.iter().map(|p| (p.compound.clone(), 1)).collect(),
    };
    let candidates: Vec<String> = match &args.candidates {
        Some(path) => std::fs::read_to_string(path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    let mut islands = Vec::new();
    for pivot in &args.pivots {
        islands.push(pivot_island(
            pivot,
            position,
            &parses,
            &table,
            &frequencies,
            &candidates,
            method,
        )?);
    }
    std::fs::create_dir_all(&args.out)?;
    let mut w = report::create(args.out.join("islands.csv"))?;
    report::write_islands_csv(&mut w, &islands)?;
    let json: Vec<serde_json::Value> =
        islands.iter().map(|i| report::island_json(i, args.include_centroid)).collect();
    let mut w = report::create(args.out.join("islands.json"))?;
    report::write_json(&mut w, &serde_json::Value::Array(json))?;
    for i in &islands {
        println!(
            "{}: V={} members={} intruders={} P={}",
            i.pivot,
            i.compound_count,
            i.members.len(),
            i.intruders.len(),
            report::fmt_f64(i.p_good_turing)
        );
    }
    Ok(())
}

fn roles_split(lexicon: Vec<WordEntry>) -> (Vec<WordEntry>, Vec<WordEntry>) {
    lexicon.into_iter().partition(|e| e.role == Role::Input)
}

fn patterns_from_config(cfg: &ExperimentConfig) -> Result<Vec<(String, lexmorph_core::diachronic::PatternFilter)>> {
    if cfg.diachronic_patterns.is_empty() {
        bail!("config needs diachronic.patterns");
    }
    Ok(cfg.diachronic_patterns.clone())
}

pub fn productivity_growth(config: &Path, out: PathBuf) -> Result<()> {
    let exp = load_experiment(config, out.clone(), None)?;
    let patterns = patterns_from_config(&exp)?;
    let (input, _) = roles_split(load_lexicon(&exp.lexicon, &exp.schema)?);
    let mut curves = Vec::new();
    for (name, filter) in &patterns {
        curves.push((name.clone(), growth_curve(&input, filter)?));
    }
    std::fs::create_dir_all(&out)?;
    let mut w = report::create(out.join("growth.csv"))?;
    report::write_growth_csv(&mut w, &curves)?;
    for (name, curve) in &curves {
        let last = curve.values().last().copied().unwrap_or(0);
        println!("{name}: {last} cumulative types over {} years", curve.len());
    }
    Ok(())
}

pub fn productivity_table(config: &Path, out: PathBuf) -> Result<()> {
    let exp = load_experiment(config, out.clone(), None)?;
    let patterns = patterns_from_config(&exp)?;
    let (input, output) = roles_split(load_lexicon(&exp.lexicon, &exp.schema)?);
    let table = load_embeddings(&exp.embeddings).ok();
    let rows = pattern_year_table_with(
        &input,
        &output,
        &patterns,
        table.as_ref(),
        exp.distance_metric,
    )?;
    std::fs::create_dir_all(&out)?;
    let mut w = report::create(out.join("productivity_years.csv"))?;
    report::write_pattern_year_csv(&mut w, &rows)?;
    let mut pooled = Vec::new();
    for (name, filter) in &patterns {
        pooled.push(pooled_pattern_stats(&input, &output, name, filter)?);
    }
    let mut w = report::create(out.join("productivity_pooled.csv"))?;
    report::write_pooled_csv(&mut w, &pooled)?;
    for p in &pooled {
        println!(
            "{}: recycle {} p_narrow {}",
            p.pattern,
            report::fmt_f64(p.recycle_rate),
            report::fmt_f64(p.p_narrow)
        );
    }
    Ok(())
}

/// Read a numeric series from a CSV column, or from a single-column file
/// (a non-numeric first line is treated as a header and skipped).
fn read_series(path: &Path, col: Option<&str>) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading series {}", path.display()))?;
    match col {
        Some(name) => {
            let mut reader = csv::Reader::from_reader(text.as_bytes());
            let headers = reader.headers()?.clone();
            let idx = headers
                .iter()
                .position(|h| h == name)
                .with_context(|| format!("no column {name:?} in {}", path.display()))?;
            let mut out = Vec::new();
            for record in reader.records() {
                let record = record?;
                let field = record.get(idx).unwrap_or("");
                out.push(
                    field
                        .parse::<f64>()
                        .with_context(|| format!("bad value {field:?} in column {name:?}"))?,
                );
            }
            Ok(out)
        }
        None => {
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                match line.parse::<f64>() {
                    Ok(v) => out.push(v),
                    Err(_) if i == 0 => continue, // header
                    Err(_) => bail!("line {}: bad value {line:?}", i + 1),
                }
            }
            Ok(out)
        }
    }
}

pub fn productivity_spearman(
    x: &Path,
    y: &Path,
    x_col: Option<&str>,
    y_col: Option<&str>,
) -> Result<()> {
    let xs = read_series(x, x_col)?;
    let ys = read_series(y, y_col)?;
    let rho = spearman(&xs, &ys)?;
    println!("{}", report::fmt_f64(rho));
    Ok(())
}

pub fn run(config: &Path, out: PathBuf, seed: Option<u64>) -> Result<()> {
    let exp = load_experiment(config, out, seed)?;
    let manifest = run_experiment(&exp)?;
    for stage in &manifest.stages {
        println!("{}: {} ({})", stage.stage, stage.status, stage.detail);
    }
    println!("{} outputs, manifest at {}", manifest.outputs.len(), exp.out_dir.join("manifest.json").display());
    Ok(())
}

pub fn slices(config: &Path, out: PathBuf, years: &[i32], seed: Option<u64>) -> Result<()> {
    let exp = load_experiment(config, out, seed)?;
    let manifest = run_time_slices(&exp, years)?;
    for stage in &manifest.stages {
        println!("{}: {} ({})", stage.stage, stage.status, stage.detail);
    }
    Ok(())
}
