//! Batch stages over a manifest. Each isolates per-item failures, writes its
//! reports under the output directory and a run record under `logs/`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::report::{csv_body, now_ms};
use super::{config_hash, write_csv_report, write_json_report, PipelineConfig, PipelineError, RunRecord, StageOutcome, StageStatus};
use crate::features::FeatureMatrix;
use crate::models::{label_os, run_sl, run_ssl, ExperimentResult, LabeledSet, Paradigm, METRIC_NAMES};
use crate::preprocess::{prepare_image, prepare_mask, preprocess_pair, CropRegion};
use crate::radiomics::{extract_all, registry};
use crate::seg_metrics::{score_pair, GeometricScores, MeanStd};
use crate::stats::stability::{stability_report, StabilityReport};
use crate::volume::{load_manifest_with, load_volume, read_raw, write_raw, write_raw_mask, CaseManifest, MissingFilePolicy, RawVolume};

pub const GT_SOURCE: &str = "gt";

fn load_cases(cfg: &PipelineConfig) -> Result<Vec<CaseManifest>, PipelineError> {
    let (cases, issues) = load_manifest_with(&cfg.manifest_path(), MissingFilePolicy::Report)?;
    for i in &issues {
        log::warn!("case {}: missing file {}", i.case_id, i.path.display());
    }
    Ok(cases)
}

/// `gt` followed by every model name in the manifest, sorted.
fn source_names(cases: &[CaseManifest]) -> Vec<String> {
    let models: BTreeSet<&String> = cases.iter().flat_map(|c| c.model_masks.keys()).collect();
    std::iter::once(GT_SOURCE.to_string()).chain(models.into_iter().cloned()).collect()
}

fn mask_path<'a>(case: &'a CaseManifest, source: &str) -> Option<&'a Path> {
    if source == GT_SOURCE {
        Some(case.gt_mask_path.as_path())
    } else {
        case.model_masks.get(source).map(PathBuf::as_path)
    }
}

fn store_stem(out: &Path, case_id: &str, source: &str, kind: &str) -> PathBuf {
    out.join("preprocessed").join(case_id).join(format!("{source}_{kind}"))
}

fn finish(
    cfg: &PipelineConfig,
    stage: &'static str,
    started: u128,
    failed: usize,
    total: usize,
    warnings: Vec<String>,
) -> Result<StageOutcome, PipelineError> {
    let outcome = StageOutcome::from_counts(stage, failed, total);
    let label = match &outcome {
        Ok(StageOutcome::Success) => "success",
        Ok(StageOutcome::Partial { .. }) => "partial",
        Err(_) => "failed",
    };
    let status = StageStatus { outcome: label.into(), items_ok: total - failed, items_failed: failed, warnings };
    RunRecord::write(&cfg.output_path(), stage, &config_hash(cfg), started, status)?;
    outcome
}

fn row(fields: impl IntoIterator<Item = String>) -> Vec<String> {
    fields.into_iter().collect()
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "NA".into()
    }
}

// ---------------------------------------------------------------- preprocess

struct PreprocessRow {
    case_id: String,
    source: String,
    result: Result<(CropRegion, bool), String>,
}

fn preprocess_case(cfg: &PipelineConfig, out: &Path, case: &CaseManifest, sources: &[String]) -> Vec<PreprocessRow> {
    let opts = &cfg.preprocess;
    let image = load_volume(&case.image_path)
        .map_err(|e| e.to_string())
        .and_then(|v| prepare_image(&v.into_image(), opts).map_err(|e| e.to_string()));
    let dir = out.join("preprocessed").join(&case.case_id);
    let image = image.and_then(|i| std::fs::create_dir_all(&dir).map(|_| i).map_err(|e| format!("creating {}: {e}", dir.display())));
    sources
        .iter()
        .filter_map(|source| {
            let path = mask_path(case, source)?;
            let result = image.clone().and_then(|(img, constant)| {
                let mask = load_volume(path).map_err(|e| e.to_string())?.into_image();
                let mask = prepare_mask(&mask, opts).map_err(|e| e.to_string())?;
                let pair = preprocess_pair(&img, &mask, constant, opts).map_err(|e| e.to_string())?;
                write_raw(&pair.cropped.image, &store_stem(out, &case.case_id, source, "image")).map_err(|e| e.to_string())?;
                write_raw_mask(&pair.cropped.mask, &store_stem(out, &case.case_id, source, "mask")).map_err(|e| e.to_string())?;
                Ok((pair.cropped.region, pair.constant_intensity))
            });
            Some(PreprocessRow { case_id: case.case_id.clone(), source: source.clone(), result })
        })
        .collect()
}

/// Resample, binarize, crop and normalize every (case, mask source) pair
/// into `preprocessed/`, with one provenance row per pair.
pub fn cmd_preprocess(cfg: &PipelineConfig) -> Result<StageOutcome, PipelineError> {
    let started = now_ms();
    let cases = load_cases(cfg)?;
    let out = cfg.output_path();
    let sources = source_names(&cases);
    let rows: Vec<PreprocessRow> = cases.par_iter().flat_map_iter(|c| preprocess_case(cfg, &out, c, &sources)).collect();

    let hdr = header(&[
        "case_id",
        "source",
        "status",
        "lo_x",
        "lo_y",
        "lo_z",
        "hi_x",
        "hi_y",
        "hi_z",
        "source_dim_x",
        "source_dim_y",
        "source_dim_z",
        "margin",
        "constant_intensity",
        "error",
    ]);
    let mut failed = 0;
    let mut warnings = Vec::new();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match &r.result {
            Ok((reg, constant)) => {
                let mut v = vec![r.case_id.clone(), r.source.clone(), "ok".into()];
                v.extend(reg.lo.iter().chain(&reg.hi).chain(&reg.source_dims).map(usize::to_string));
                v.extend([reg.margin.to_string(), constant.to_string(), String::new()]);
                v
            }
            Err(e) => {
                failed += 1;
                warnings.push(format!("{}/{}: {e}", r.case_id, r.source));
                let mut v = vec![r.case_id.clone(), r.source.clone(), "error".into()];
                v.extend(std::iter::repeat_n(String::new(), 11));
                v.push(e.clone());
                v
            }
        })
        .collect();
    write_csv_report(&out.join("preprocessed").join("provenance.csv"), &config_hash(cfg), &hdr, &table)?;
    finish(cfg, "preprocess", started, failed, rows.len(), warnings)
}

// ---------------------------------------------------------------- segmetrics

#[derive(Serialize)]
struct SegSummary {
    model: String,
    valid_cases: usize,
    failed_cases: usize,
    dice: MeanStd,
    iou: MeanStd,
    hausdorff: MeanStd,
    hd95: MeanStd,
}

/// Dice, IoU and Hausdorff of every model mask against the ground truth on
/// the target grid.
pub fn cmd_segmetrics(cfg: &PipelineConfig) -> Result<StageOutcome, PipelineError> {
    let started = now_ms();
    let cases = load_cases(cfg)?;
    let out = cfg.output_path().join("segmetrics");
    let models: Vec<String> = source_names(&cases).into_iter().skip(1).collect();
    let load = |p: &Path| -> Result<_, String> {
        let v = load_volume(p).map_err(|e| e.to_string())?.into_image();
        prepare_mask(&v, &cfg.preprocess).map_err(|e| e.to_string())
    };
    let rows: Vec<(String, String, Result<GeometricScores, String>)> = cases
        .par_iter()
        .flat_map_iter(|c| {
            let gt = load(&c.gt_mask_path);
            models
                .iter()
                .filter(|m| c.model_masks.contains_key(*m))
                .map(|m| {
                    let scores = gt.clone().and_then(|g| {
                        let cand = load(&c.model_masks[m])?;
                        let spacing = cfg.physical_hausdorff.then_some(g.header.spacing);
                        score_pair(&g, &cand, spacing).map_err(|e| e.to_string())
                    });
                    (c.case_id.clone(), m.clone(), scores)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let hdr = header(&["case_id", "model", "status", "dice", "iou", "hausdorff", "hd95", "error"]);
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|(c, m, s)| match s {
            Ok(s) => row([c.clone(), m.clone(), "ok".into(), fmt(s.dice), fmt(s.iou), fmt(s.hausdorff), fmt(s.hd95), String::new()]),
            Err(e) => row([c.clone(), m.clone(), "error".into(), String::new(), String::new(), String::new(), String::new(), e.clone()]),
        })
        .collect();
    let hash = config_hash(cfg);
    write_csv_report(&out.join("segmetrics.csv"), &hash, &hdr, &table)?;

    let summaries: Vec<SegSummary> = models
        .iter()
        .map(|m| {
            let ok: Vec<&GeometricScores> = rows.iter().filter(|r| &r.1 == m).filter_map(|r| r.2.as_ref().ok()).collect();
            let failed = rows.iter().filter(|r| &r.1 == m && r.2.is_err()).count();
            let col = |f: fn(&GeometricScores) -> f64| MeanStd::of(&ok.iter().map(|s| f(s)).collect::<Vec<_>>());
            SegSummary {
                model: m.clone(),
                valid_cases: ok.len(),
                failed_cases: failed,
                dice: col(|s| s.dice),
                iou: col(|s| s.iou),
                hausdorff: col(|s| s.hausdorff),
                hd95: col(|s| s.hd95),
            }
        })
        .collect();
    write_json_report(&out.join("summary.json"), "segmetrics", &hash, &summaries)?;
    let failed = rows.iter().filter(|r| r.2.is_err()).count();
    let warnings = rows.iter().filter_map(|r| r.2.as_ref().err().map(|e| format!("{}/{}: {e}", r.0, r.1))).collect();
    finish(cfg, "segmetrics", started, failed, rows.len(), warnings)
}

// ---------------------------------------------------------------- radiomics

#[derive(Serialize)]
struct ExtractionRow {
    case_id: String,
    source: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    degenerate: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn features_path(out: &Path, source: &str) -> PathBuf {
    out.join("features").join(format!("{source}.csv"))
}

/// Reads a feature CSV written by the radiomics stage.
pub fn read_features(path: &Path) -> Result<FeatureMatrix, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput(path.to_path_buf()));
    }
    Ok(FeatureMatrix::read_csv(csv_body(path)?.as_slice())?)
}

/// Extracts the full registry from every preprocessed pair; one feature
/// table per mask source.
pub fn cmd_radiomics(cfg: &PipelineConfig) -> Result<StageOutcome, PipelineError> {
    let started = now_ms();
    let cases = load_cases(cfg)?;
    let out = cfg.output_path();
    let hash = config_hash(cfg);
    let ids = registry().ids();
    let mut log_rows = Vec::new();
    let mut total = 0;
    let mut failed = 0;
    let mut warnings = Vec::new();
    for source in source_names(&cases) {
        let with_source: Vec<&CaseManifest> = cases.iter().filter(|c| mask_path(c, &source).is_some()).collect();
        let results: Vec<Result<_, String>> = with_source
            .par_iter()
            .map(|c| {
                let read = |kind: &str| {
                    let stem = store_stem(&out, &c.case_id, &source, kind);
                    read_raw(&stem.with_extension("vol"), &stem.with_extension("json")).map_err(|e| e.to_string())
                };
                let (RawVolume::Image(img), RawVolume::Mask(mask)) = (read("image")?, read("mask")?) else {
                    return Err("unexpected volume kind in preprocessed store".to_string());
                };
                extract_all(&c.case_id, &img, &mask, &cfg.radiomics).map_err(|e| e.to_string())
            })
            .collect();
        let mut case_ids = Vec::new();
        let mut rows = Vec::new();
        for (c, r) in with_source.iter().zip(results) {
            total += 1;
            match r {
                Ok(fv) => {
                    case_ids.push(c.case_id.clone());
                    rows.push(fv.values);
                    log_rows.push(ExtractionRow {
                        case_id: c.case_id.clone(),
                        source: source.clone(),
                        status: "ok",
                        degenerate: fv.degenerate,
                        error: None,
                    });
                }
                Err(e) => {
                    failed += 1;
                    warnings.push(format!("{}/{source}: {e}", c.case_id));
                    log_rows.push(ExtractionRow {
                        case_id: c.case_id.clone(),
                        source: source.clone(),
                        status: "error",
                        degenerate: Vec::new(),
                        error: Some(e),
                    });
                }
            }
        }
        let mut hdr = vec!["case_id".to_string()];
        hdr.extend(ids.iter().cloned());
        let table: Vec<Vec<String>> = case_ids
            .iter()
            .zip(&rows)
            .map(|(c, vals)| std::iter::once(c.clone()).chain(vals.iter().map(|v| v.to_string())).collect())
            .collect();
        write_csv_report(&features_path(&out, &source), &hash, &hdr, &table)?;
    }
    write_json_report(&out.join("features").join("extraction.json"), "radiomics", &hash, &log_rows)?;
    finish(cfg, "radiomics", started, failed, total, warnings)
}

// ---------------------------------------------------------------- stability

pub const TABLE1_COLUMNS: [&str; 11] = [
    "Model",
    "Shapiro (N/NN)",
    "Spearman",
    "ICC",
    "Wilcoxon",
    "Wilks",
    "Pillai",
    "Hotelling-Lawley",
    "Roy",
    "Decision",
    "Significant/Total",
];

pub fn table1_row(r: &StabilityReport) -> Vec<String> {
    let two = |v: f64| if v.is_finite() { format!("{v:.2}") } else { "NA".into() };
    let four = |v: Option<f64>| v.filter(|x| x.is_finite()).map_or("NA".into(), |x| format!("{x:.4}"));
    let m = r.manova.as_ref();
    vec![
        r.model_name.clone(),
        r.shapiro_cell(),
        two(r.mean_spearman),
        two(r.mean_icc),
        if r.wilcoxon.tested > 0 { two(r.wilcoxon.mean_w) } else { "NA".into() },
        four(m.map(|m| m.wilks)),
        four(m.map(|m| m.pillai)),
        four(m.map(|m| m.hotelling_lawley)),
        four(m.map(|m| m.roy)),
        m.map_or("NA".into(), |m| m.decision.as_str().to_string()),
        r.significance_cell(),
    ]
}

/// One stability report per model mask against the ground truth, plus the
/// GT-vs-GT identity row.
pub fn cmd_stability(cfg: &PipelineConfig) -> Result<StageOutcome, PipelineError> {
    let started = now_ms();
    let cases = load_cases(cfg)?;
    let out = cfg.output_path();
    let hash = config_hash(cfg);
    let gt = read_features(&features_path(&out, GT_SOURCE))?;
    let dir = out.join("stability");
    let hdr = header(&TABLE1_COLUMNS);
    let mut table = Vec::new();
    let mut warnings = Vec::new();
    let mut failed = 0;
    let sources = source_names(&cases);
    for source in &sources {
        let result = read_features(&features_path(&out, source)).and_then(|m| {
            let shared = gt.aligned_rows(&m).len();
            if shared < cfg.min_cases_per_model {
                return Err(PipelineError::Config(format!("skipped model `{source}`: {shared} cases, need {}", cfg.min_cases_per_model)));
            }
            stability_report(&gt, &m, source).map_err(|e| PipelineError::Config(e.to_string()))
        });
        match result {
            Ok(report) => {
                let r = table1_row(&report);
                write_json_report(&dir.join(format!("{source}.json")), "stability", &hash, &report)?;
                write_csv_report(&dir.join(format!("{source}.csv")), &hash, &hdr, std::slice::from_ref(&r))?;
                table.push(r);
            }
            Err(e) => {
                failed += 1;
                warnings.push(format!("{source}: {e}"));
            }
        }
    }
    write_csv_report(&dir.join("stability.csv"), &hash, &hdr, &table)?;
    finish(cfg, "stability", started, failed, sources.len(), warnings)
}

// ---------------------------------------------------------------- predict

#[derive(Serialize)]
struct PredictionCell {
    mask_source: String,
    reducer: String,
    classifier: String,
    paradigm: Paradigm,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ExperimentResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct Cohorts {
    labeled: LabeledSet,
    pool: Option<FeatureMatrix>,
    externals: Vec<LabeledSet>,
}

fn cohorts(cfg: &PipelineConfig, cases: &[CaseManifest], features: &FeatureMatrix) -> Result<Cohorts, PipelineError> {
    let by_id: BTreeMap<&str, &CaseManifest> = cases.iter().map(|c| (c.case_id.as_str(), c)).collect();
    let label = |c: &CaseManifest| -> Result<u8, PipelineError> {
        let s = c.survival_years.ok_or_else(|| PipelineError::Config(format!("case `{}` has no survival", c.case_id)))?;
        label_os(s).map_err(|e| PipelineError::Config(e.to_string()))
    };
    let is_labeled_tag = |t: &str| {
        if cfg.labeled_tags.is_empty() {
            !cfg.external_tags.iter().any(|e| e == t) && !cfg.unlabeled_tags.iter().any(|u| u == t)
        } else {
            cfg.labeled_tags.iter().any(|l| l == t)
        }
    };
    let select = |pred: &dyn Fn(&CaseManifest) -> bool| -> Vec<usize> {
        (0..features.n_rows()).filter(|&i| by_id.get(features.case_ids[i].as_str()).is_some_and(|c| pred(c))).collect()
    };
    let labeled_rows = select(&|c| c.labeled && is_labeled_tag(&c.dataset_tag));
    let y = labeled_rows.iter().map(|&i| label(by_id[features.case_ids[i].as_str()])).collect::<Result<Vec<_>, _>>()?;
    let labeled =
        LabeledSet::new("validation", features.select_rows(&labeled_rows), y).map_err(|e| PipelineError::Config(e.to_string()))?;
    let pool_rows = select(&|c| cfg.unlabeled_tags.contains(&c.dataset_tag));
    let pool = (!pool_rows.is_empty()).then(|| features.select_rows(&pool_rows));
    let mut externals = Vec::new();
    for tag in &cfg.external_tags {
        let rows = select(&|c| c.labeled && &c.dataset_tag == tag);
        let y = rows.iter().map(|&i| label(by_id[features.case_ids[i].as_str()])).collect::<Result<Vec<_>, _>>()?;
        externals.push(LabeledSet::new(tag.clone(), features.select_rows(&rows), y).map_err(|e| PipelineError::Config(e.to_string()))?);
    }
    Ok(Cohorts { labeled, pool, externals })
}

fn prediction_header(external_tags: &[String]) -> Vec<String> {
    let mut h = header(&["mask_source", "reducer", "classifier", "paradigm", "status"]);
    for split in std::iter::once("validation").chain(external_tags.iter().map(String::as_str)) {
        for m in METRIC_NAMES {
            h.push(format!("{split}_{m}_mean"));
            h.push(format!("{split}_{m}_std"));
        }
    }
    h.push("error".into());
    h
}

/// The SL/SSL grid over mask sources × reducers × classifiers.
pub fn cmd_predict(cfg: &PipelineConfig) -> Result<StageOutcome, PipelineError> {
    let started = now_ms();
    let cases = load_cases(cfg)?;
    let tags: BTreeSet<&str> = cases.iter().map(|c| c.dataset_tag.as_str()).collect();
    for t in cfg.labeled_tags.iter().chain(&cfg.external_tags).chain(&cfg.unlabeled_tags) {
        if !tags.contains(t.as_str()) {
            return Err(PipelineError::Config(format!("tag `{t}` does not occur in the manifest")));
        }
    }
    let out = cfg.output_path();
    let hash = config_hash(cfg);
    let sources = if cfg.predict_sources.is_empty() { source_names(&cases) } else { cfg.predict_sources.clone() };

    let data: Vec<Result<Cohorts, String>> = sources
        .iter()
        .map(|s| read_features(&features_path(&out, s)).and_then(|f| cohorts(cfg, &cases, &f)).map_err(|e| e.to_string()))
        .collect();
    let mut cells = Vec::new();
    for (source, data) in sources.iter().zip(&data) {
        for reducer in &cfg.reducers {
            for classifier in &cfg.classifiers {
                for &paradigm in &cfg.paradigms {
                    cells.push((source, data, reducer, classifier, paradigm));
                }
            }
        }
    }
    let results: Vec<PredictionCell> = cells
        .par_iter()
        .map(|&(source, data, reducer, classifier, paradigm)| {
            let result = match data {
                Err(e) => Err(e.clone()),
                Ok(d) => match (paradigm, &d.pool) {
                    (Paradigm::Sl, _) => run_sl(&cfg.experiment, reducer, classifier, &d.labeled, &d.externals).map_err(|e| e.to_string()),
                    (Paradigm::Ssl, Some(pool)) => {
                        run_ssl(&cfg.experiment, reducer, classifier, &d.labeled, pool, &d.externals).map_err(|e| e.to_string())
                    }
                    (Paradigm::Ssl, None) => Err("no unlabeled pool configured".to_string()),
                },
            };
            let (result, error) = match result {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            PredictionCell {
                mask_source: source.clone(),
                reducer: reducer.label(),
                classifier: classifier.label(),
                paradigm,
                result,
                error,
            }
        })
        .collect();

    let hdr = prediction_header(&cfg.external_tags);
    let n_metric_cols = 2 * METRIC_NAMES.len() * (1 + cfg.external_tags.len());
    let table: Vec<Vec<String>> = results
        .iter()
        .map(|c| {
            let mut r = vec![c.mask_source.clone(), c.reducer.clone(), c.classifier.clone(), c.paradigm.as_str().to_string()];
            match &c.result {
                Some(res) => {
                    r.push("ok".into());
                    for summary in std::iter::once(&res.validation).chain(res.externals.iter().map(|e| &e.metrics)) {
                        for ms in summary.values() {
                            r.push(fmt(ms.mean));
                            r.push(fmt(ms.std));
                        }
                    }
                    r.push(String::new());
                }
                None => {
                    r.push("error".into());
                    r.extend(std::iter::repeat_n(String::new(), n_metric_cols));
                    r.push(c.error.clone().unwrap_or_default());
                }
            }
            r
        })
        .collect();
    let dir = out.join("predictions");
    write_csv_report(&dir.join("predictions.csv"), &hash, &hdr, &table)?;
    write_json_report(&dir.join("predictions.json"), "predictions", &hash, &results)?;
    let failed = results.iter().filter(|c| c.error.is_some()).count();
    let mut warnings: Vec<String> = results
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| format!("{}/{}/{}/{}: {e}", c.mask_source, c.reducer, c.classifier, c.paradigm.as_str())))
        .collect();
    for c in &results {
        if let Some(r) = &c.result {
            if !r.leakage_clean() {
                warnings.push(format!("{}/{}/{}: leakage check failed", c.mask_source, c.reducer, c.classifier));
            }
        }
    }
    finish(cfg, "predict", started, failed, results.len(), warnings)
}
