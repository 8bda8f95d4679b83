//! Report emission. CSV columns are stable, floats are printed with six
//! significant digits, undefined values print as NA, and identical inputs
//! produce byte-identical files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::centroid::{Centroid, CueCentroidMatrix, RankScope, TransparencyScore};
use crate::compound::{BoundaryCueReport, PivotIsland};
use crate::diachronic::{PatternYearStats, PooledPatternStats};
use crate::error::{Error, Result};
use crate::eval::AccuracyReport;

/// Round to six significant digits and print the shortest representation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "NA".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{}", round_sig(v, 6))
}

pub fn round_sig(v: f64, sig: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let exp = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(sig - 1 - exp);
    (v * factor).round() / factor
}

fn json_rounded(v: f64) -> Value {
    if v.is_finite() {
        json!(round_sig(v, 6))
    } else {
        Value::Null
    }
}

pub fn create(path: impl AsRef<Path>) -> Result<BufWriter<File>> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
        }
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?,
    ))
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io { path: "<report>".into(), source: e }
}

/// Per-word accuracy rows: word, class, frequency, rank, r_target, then one
/// correct@k flag column per requested k.
pub fn write_accuracy_csv<W: Write>(w: &mut W, report: &AccuracyReport) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    let mut header = vec![
        "word".to_string(),
        "class".to_string(),
        "frequency".to_string(),
        "rank".to_string(),
        "r_target".to_string(),
    ];
    for k in &report.ks {
        header.push(format!("correct@{k}"));
    }
    writer.write_record(&header).map_err(|e| Error::Other(e.to_string()))?;
    for rec in &report.records {
        let mut row = vec![
            rec.word.clone(),
            rec.class.clone(),
            rec.frequency.to_string(),
            rec.rank.to_string(),
            fmt_f64(rec.r_target),
        ];
        for k in &report.ks {
            row.push(if rec.rank <= *k { "1".into() } else { "0".into() });
        }
        writer.write_record(&row).map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// Summary JSON: overall and per-class accuracy at each k.
pub fn accuracy_summary_json(report: &AccuracyReport) -> Value {
    let accs = |type_acc: &[f64], token_acc: &[f64]| -> Value {
        let mut m = Map::new();
        for (i, k) in report.ks.iter().enumerate() {
            m.insert(format!("type@{k}"), json_rounded(type_acc[i]));
            m.insert(format!("token@{k}"), json_rounded(token_acc[i]));
        }
        Value::Object(m)
    };
    let per_class: Map<String, Value> = report
        .per_class
        .iter()
        .map(|(class, ca)| {
            (
                class.clone(),
                json!({
                    "types": ca.types,
                    "tokens": ca.tokens,
                    "accuracy": accs(&ca.type_acc, &ca.token_acc),
                }),
            )
        })
        .collect();
    json!({
        "ks": report.ks,
        "types": report.total_types,
        "tokens": report.total_tokens,
        "accuracy": accs(&report.type_acc, &report.token_acc),
        "per_class": Value::Object(per_class),
    })
}

pub fn write_json<W: Write>(w: &mut W, value: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Other(e.to_string()))?;
    w.write_all(b"\n").map_err(io_err)?;
    Ok(())
}

/// Long-format cue/centroid table: tag, cue, r, global rank, restricted rank
/// (the restricted column is empty for cues outside the restriction).
pub fn write_cue_centroid_csv<W: Write>(
    w: &mut W,
    matrix: &CueCentroidMatrix,
    restrict: &dyn Fn(&str) -> bool,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["tag", "cue", "r", "global_rank", "restricted_rank"])
        .map_err(|e| Error::Other(e.to_string()))?;
    for tag in &matrix.tags {
        let global = crate::centroid::rank_cues(matrix, tag, None, RankScope::Global)?;
        let restricted =
            crate::centroid::rank_cues(matrix, tag, Some(restrict), RankScope::Restricted)?;
        let restricted_by_cue: BTreeMap<&str, usize> =
            restricted.iter().map(|rc| (rc.cue.as_str(), rc.rank)).collect();
        for rc in global {
            let rr = restricted_by_cue
                .get(rc.cue.as_str())
                .map(|r| r.to_string())
                .unwrap_or_default();
            writer
                .write_record([
                    tag.as_str(),
                    rc.cue.as_str(),
                    &fmt_f64(rc.r),
                    &rc.rank.to_string(),
                    &rr,
                ])
                .map_err(|e| Error::Other(e.to_string()))?;
        }
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_category_cue_summary_csv<W: Write>(
    w: &mut W,
    rows: &[crate::centroid::CategoryCueSummary],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "tag",
            "own_cues",
            "max_r_own",
            "mean_top5_all",
            "mean_top5_restricted",
            "own_in_top10_all",
            "own_in_top10_restricted",
        ])
        .map_err(|e| Error::Other(e.to_string()))?;
    for r in rows {
        writer
            .write_record([
                r.tag.as_str(),
                &r.own_cues.to_string(),
                &fmt_f64(r.max_r_own),
                &fmt_f64(r.mean_top5_all),
                &fmt_f64(r.mean_top5_restricted),
                &r.own_in_top10_all.to_string(),
                &r.own_in_top10_restricted.to_string(),
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_centroids_csv<W: Write>(w: &mut W, centroids: &[Centroid]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["tag", "members", "norm"]).map_err(|e| Error::Other(e.to_string()))?;
    for c in centroids {
        let norm = c.vector.dot(&c.vector).sqrt();
        writer
            .write_record([c.tag.as_str(), &c.count.to_string(), &fmt_f64(norm)])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_transparency_csv<W: Write>(
    w: &mut W,
    scores: &[TransparencyScore],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["word", "tag", "r", "degenerate"])
        .map_err(|e| Error::Other(e.to_string()))?;
    for s in scores {
        writer
            .write_record([
                s.word.as_str(),
                s.tag.as_str(),
                &fmt_f64(s.r),
                if s.degenerate { "1" } else { "0" },
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_inventory_csv<W: Write>(
    w: &mut W,
    inventory: &BTreeMap<String, BTreeMap<String, usize>>,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["tag", "cue", "members"])
        .map_err(|e| Error::Other(e.to_string()))?;
    for (tag, cues) in inventory {
        for (cue, count) in cues {
            writer
                .write_record([tag.as_str(), cue.as_str(), &count.to_string()])
                .map_err(|e| Error::Other(e.to_string()))?;
        }
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_boundary_csv<W: Write>(w: &mut W, reports: &[BoundaryCueReport]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "compound",
            "boundary_prop",
            "left_prop",
            "right_prop",
            "boundary_cues",
            "left_cues",
            "right_cues",
        ])
        .map_err(|e| Error::Other(e.to_string()))?;
    for r in reports {
        writer
            .write_record([
                r.compound.as_str(),
                &fmt_f64(r.boundary_prop),
                &fmt_f64(r.left_prop),
                &fmt_f64(r.right_prop),
                &r.boundary_cues.to_string(),
                &r.left_cues.to_string(),
                &r.right_cues.to_string(),
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// One-line-per-pivot summary: pivot, V (compound types), N (tokens),
/// V1 (hapaxes), P, members, intruders.
pub fn write_islands_csv<W: Write>(w: &mut W, islands: &[PivotIsland]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "pivot",
            "position",
            "V",
            "N",
            "V1",
            "P",
            "ci_lo",
            "ci_hi",
            "members",
            "intruders",
            "degenerate",
        ])
        .map_err(|e| Error::Other(e.to_string()))?;
    for i in islands {
        writer
            .write_record([
                i.pivot.as_str(),
                match i.position {
                    crate::compound::PivotPosition::Left => "left",
                    crate::compound::PivotPosition::Right => "right",
                },
                &i.compound_count.to_string(),
                &i.total_tokens.to_string(),
                &i.hapax_types.to_string(),
                &fmt_f64(i.p_good_turing),
                &fmt_f64(i.ci.0),
                &fmt_f64(i.ci.1),
                &i.members.len().to_string(),
                &i.intruders.len().to_string(),
                if i.degenerate { "1" } else { "0" },
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn island_json(island: &PivotIsland, include_centroid: bool) -> Value {
    let mut v = json!({
        "pivot": island.pivot,
        "position": island.position,
        "compound_count": island.compound_count,
        "ci": [json_rounded(island.ci.0), json_rounded(island.ci.1)],
        "members": island.members,
        "intruders": island.intruders,
        "hapax_types": island.hapax_types,
        "total_tokens": island.total_tokens,
        "p_good_turing": json_rounded(island.p_good_turing),
        "degenerate": island.degenerate,
    });
    if include_centroid {
        let rounded: Vec<Value> =
            island.centroid.iter().map(|&x| json_rounded(x)).collect();
        v.as_object_mut().unwrap().insert("centroid".into(), Value::Array(rounded));
    }
    v
}

fn fmt_log(v: f64) -> String {
    if v > 0.0 {
        fmt_f64(v.ln())
    } else {
        "NA".into()
    }
}

/// The per-pattern-per-year predictor table. Count predictors are exported
/// raw and log-transformed; the response is the new-output-type count and
/// the offset column is the log known-output-type count.
pub fn write_pattern_year_csv<W: Write>(
    w: &mut W,
    rows: &[PatternYearStats],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "pattern",
            "year",
            "input_types",
            "log_input_types",
            "cumulative_input_types",
            "log_cumulative_input_types",
            "input_tokens",
            "log_input_tokens",
            "input_hapaxes",
            "log_input_hapaxes",
            "new_input_types",
            "log_new_input_types",
            "known_output_types",
            "log_known_output_types",
            "centroid_distance",
            "p_narrow",
            "p_neo",
            "recycle_rate",
            "new_output_types",
            "output_types",
            "output_tokens",
            "degenerate",
        ])
        .map_err(|e| Error::Other(e.to_string()))?;
    for r in rows {
        writer
            .write_record([
                r.pattern.as_str(),
                &r.year.to_string(),
                &r.input_types.to_string(),
                &fmt_log(r.input_types as f64),
                &r.cumulative_input_types.to_string(),
                &fmt_log(r.cumulative_input_types as f64),
                &r.input_tokens.to_string(),
                &fmt_log(r.input_tokens as f64),
                &r.input_hapaxes.to_string(),
                &fmt_log(r.input_hapaxes as f64),
                &r.new_input_types.to_string(),
                &fmt_log(r.new_input_types as f64),
                &r.known_output_types.to_string(),
                &fmt_log(r.known_output_types as f64),
                &fmt_f64(r.centroid_distance),
                &fmt_f64(r.p_narrow),
                &fmt_f64(r.p_neo),
                &fmt_f64(r.recycle_rate),
                &r.new_output_types.to_string(),
                &r.output_types.to_string(),
                &r.output_tokens.to_string(),
                if r.degenerate { "1" } else { "0" },
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_pooled_csv<W: Write>(w: &mut W, rows: &[PooledPatternStats]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record([
            "pattern",
            "input_types",
            "input_tokens",
            "input_hapaxes",
            "input_hapax_types",
            "output_types",
            "output_tokens",
            "reused_types",
            "new_output_types",
            "recycle_rate",
            "p_narrow",
        ])
        .map_err(|e| Error::Other(e.to_string()))?;
    for r in rows {
        writer
            .write_record([
                r.pattern.as_str(),
                &r.input_types.to_string(),
                &r.input_tokens.to_string(),
                &r.input_hapaxes.to_string(),
                &r.input_hapax_types.to_string(),
                &r.output_types.to_string(),
                &r.output_tokens.to_string(),
                &r.reused_types.to_string(),
                &r.new_output_types.to_string(),
                &fmt_f64(r.recycle_rate),
                &fmt_f64(r.p_narrow),
            ])
            .map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

pub fn write_growth_csv<W: Write>(
    w: &mut W,
    curves: &[(String, BTreeMap<i32, usize>)],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer
        .write_record(["pattern", "year", "cumulative_types"])
        .map_err(|e| Error::Other(e.to_string()))?;
    for (pattern, curve) in curves {
        for (year, count) in curve {
            writer
                .write_record([pattern.as_str(), &year.to_string(), &count.to_string()])
                .map_err(|e| Error::Other(e.to_string()))?;
        }
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

/// Two-column CSV (word, reason) used for dropped words and split moves.
pub fn write_reasons_csv<W: Write>(
    w: &mut W,
    header: [&str; 2],
    rows: &[(String, String)],
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(header).map_err(|e| Error::Other(e.to_string()))?;
    for (a, b) in rows {
        writer.write_record([a, b]).map_err(|e| Error::Other(e.to_string()))?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}
