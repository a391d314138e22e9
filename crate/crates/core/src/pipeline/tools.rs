//! Stand-alone subcommands: phantom generation, format conversion, ratings
//! analysis, registry dump and report verification.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::now_ms;
use super::{
    config_hash, io_context, read_csv_report_header, write_csv_report, write_json_report, PipelineConfig, PipelineError, RunRecord,
    StageStatus,
};
use crate::phantom::{perturb_mask, PhantomSpec};
use crate::radiomics::{registry, FeatureRegistry, REGISTRY_VERSION};
use crate::stats::friedman::{friedman, FriedmanResult};
use crate::stats::StatsError;
use crate::volume::{load_volume, write_raw, write_raw_mask, AnyVolume, CaseManifest};

// ---------------------------------------------------------------- phantom

/// Writes a synthetic cohort as internal-format volumes under `out/cases/`
/// plus `out/manifest.json`. Returns the manifest path.
pub fn cmd_phantom(spec: &PhantomSpec, out: &Path) -> Result<PathBuf, PipelineError> {
    spec.validate()?;
    let cases_dir = out.join("cases");
    std::fs::create_dir_all(&cases_dir).map_err(io_context(format!("creating {}", cases_dir.display())))?;
    let records: Vec<Result<(CaseManifest, Vec<String>), PipelineError>> = (0..spec.n_cases())
        .into_par_iter()
        .map(|i| {
            let case = spec.generate_case(i);
            let id = &case.case_id;
            let rel = |suffix: &str| PathBuf::from("cases").join(format!("{id}_{suffix}.vol"));
            write_raw(&case.image, &out.join(rel("image")).with_extension(""))?;
            write_raw_mask(&case.mask, &out.join(rel("gt")).with_extension(""))?;
            let mut model_masks = std::collections::BTreeMap::new();
            let mut warnings = Vec::new();
            for source in &spec.mask_sources {
                match perturb_mask(&case.mask, &source.for_case(i)) {
                    Ok(m) => {
                        write_raw_mask(&m, &out.join(rel(&source.name)).with_extension(""))?;
                        model_masks.insert(source.name.clone(), rel(&source.name));
                    }
                    Err(e) => warnings.push(format!("{id}/{}: {e}", source.name)),
                }
            }
            let record = CaseManifest {
                case_id: id.clone(),
                image_path: rel("image"),
                gt_mask_path: rel("gt"),
                model_masks,
                survival_years: case.labeled.then(|| case.survival_years()),
                dataset_tag: case.dataset_tag.clone(),
                labeled: case.labeled,
            };
            Ok((record, warnings))
        })
        .collect();
    let mut manifest = Vec::with_capacity(records.len());
    for r in records {
        let (rec, warnings) = r?;
        warnings.iter().for_each(|w| log::warn!("{w}"));
        manifest.push(rec);
    }
    let path = out.join("manifest.json");
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(io_context(format!("writing {}", path.display())))?;
    let mut spec_bytes = serde_json::to_vec_pretty(spec)?;
    spec_bytes.push(b'\n');
    std::fs::write(out.join("phantom_spec.json"), spec_bytes).map_err(io_context("writing phantom_spec.json"))?;
    Ok(path)
}

// ---------------------------------------------------------------- convert

/// Converts any readable volume into the internal `.vol` + `.json` pair.
/// Masks stay masks; everything else is written as an image.
pub fn cmd_convert(input: &Path, output_stem: &Path) -> Result<(), PipelineError> {
    match load_volume(input)? {
        AnyVolume::Image(v) => write_raw(&v, output_stem)?,
        AnyVolume::Mask(m) => write_raw_mask(&m, output_stem)?,
    }
    Ok(())
}

// ---------------------------------------------------------------- ratings

/// `scores[question][rater][model]`, with labels in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratings {
    pub raters: Vec<String>,
    pub models: Vec<String>,
    pub questions: Vec<String>,
    pub scores: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RatingRow {
    rater: String,
    model: String,
    question: String,
    score: f64,
}

fn intern(list: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    *index.entry(key.to_string()).or_insert_with(|| {
        list.push(key.to_string());
        list.len() - 1
    })
}

/// Parses `rater,model,question,score`. Every (rater, model, question)
/// must appear exactly once.
pub fn parse_ratings<R: std::io::Read>(r: R) -> Result<Ratings, PipelineError> {
    let bad = |m: String| PipelineError::MalformedRatings(m);
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["rater", "model", "question", "score"] {
        return Err(bad(format!("header must be rater,model,question,score, got {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let (mut raters, mut models, mut questions) = (Vec::new(), Vec::new(), Vec::new());
    let (mut ri, mut mi, mut qi) = (HashMap::new(), HashMap::new(), HashMap::new());
    let mut cells: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for (line, rec) in rd.deserialize::<RatingRow>().enumerate() {
        let row = rec.map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        if !row.score.is_finite() {
            return Err(bad(format!("row {}: non-finite score", line + 1)));
        }
        let key = (
            intern(&mut questions, &mut qi, &row.question),
            intern(&mut raters, &mut ri, &row.rater),
            intern(&mut models, &mut mi, &row.model),
        );
        if cells.insert(key, row.score).is_some() {
            return Err(bad(format!("duplicate rating for rater `{}`, model `{}`, question `{}`", row.rater, row.model, row.question)));
        }
    }
    if raters.len() < 2 {
        return Err(bad(format!("need at least 2 raters, got {}", raters.len())));
    }
    if models.len() < 2 {
        return Err(bad(format!("need at least 2 models, got {}", models.len())));
    }
    let mut scores = vec![vec![vec![0.0; models.len()]; raters.len()]; questions.len()];
    for (q, block) in scores.iter_mut().enumerate() {
        for (r, row) in block.iter_mut().enumerate() {
            for (m, cell) in row.iter_mut().enumerate() {
                *cell = *cells.get(&(q, r, m)).ok_or_else(|| {
                    bad(format!("missing rating for rater `{}`, model `{}`, question `{}`", raters[r], models[m], questions[q]))
                })?;
            }
        }
    }
    Ok(Ratings { raters, models, questions, scores })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionResult {
    pub question: String,
    pub friedman: FriedmanResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingsReport {
    pub raters: Vec<String>,
    pub models: Vec<String>,
    pub questions: Vec<QuestionResult>,
    /// On each rater's mean score per model over all questions.
    pub overall: FriedmanResult,
}

fn friedman_or_degenerate(m: &[Vec<f64>]) -> Result<FriedmanResult, PipelineError> {
    match friedman(m) {
        Ok(r) => Ok(r),
        Err(StatsError::DegenerateRanks) => Ok(FriedmanResult::degenerate(m.len(), m[0].len())),
        Err(e) => Err(PipelineError::MalformedRatings(e.to_string())),
    }
}

pub fn analyze_ratings(r: &Ratings) -> Result<RatingsReport, PipelineError> {
    let questions = r
        .questions
        .iter()
        .zip(&r.scores)
        .map(|(q, m)| Ok(QuestionResult { question: q.clone(), friedman: friedman_or_degenerate(m)? }))
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let nq = r.questions.len() as f64;
    let means: Vec<Vec<f64>> =
        (0..r.raters.len()).map(|i| (0..r.models.len()).map(|j| r.scores.iter().map(|q| q[i][j]).sum::<f64>() / nq).collect()).collect();
    Ok(RatingsReport { raters: r.raters.clone(), models: r.models.clone(), questions, overall: friedman_or_degenerate(&means)? })
}

/// Friedman tests per question and overall; writes `ratings/ratings.json`
/// and `ratings/ratings.csv` under the configured output directory.
pub fn cmd_ratings(cfg: &PipelineConfig, ratings_csv: &Path) -> Result<RatingsReport, PipelineError> {
    let started = now_ms();
    let file = std::fs::File::open(ratings_csv).map_err(io_context(format!("opening {}", ratings_csv.display())))?;
    let report = analyze_ratings(&parse_ratings(file)?)?;
    let out = cfg.output_path();
    let hash = config_hash(cfg);
    let header: Vec<String> = ["question", "n_raters", "n_models", "chi2", "df", "p", "exact_p"].iter().map(|s| s.to_string()).collect();
    let row = |q: &str, f: &FriedmanResult| {
        vec![
            q.to_string(),
            f.n_raters.to_string(),
            f.n_treatments.to_string(),
            format!("{:.3}", f.chi2),
            f.df.to_string(),
            format!("{:.3}", f.p),
            f.exact_p.map_or(String::new(), |p| format!("{p:.3}")),
        ]
    };
    let mut rows: Vec<Vec<String>> = report.questions.iter().map(|q| row(&q.question, &q.friedman)).collect();
    rows.push(row("overall", &report.overall));
    write_csv_report(&out.join("ratings").join("ratings.csv"), &hash, &header, &rows)?;
    write_json_report(&out.join("ratings").join("ratings.json"), "ratings", &hash, &report)?;
    let status = StageStatus { outcome: "success".into(), items_ok: report.questions.len(), items_failed: 0, warnings: Vec::new() };
    RunRecord::write(&out, "ratings", &hash, started, status)?;
    Ok(report)
}

// ---------------------------------------------------------------- registry

#[derive(Serialize)]
pub struct RegistryDump {
    pub version: &'static str,
    pub size: usize,
    pub family_counts: std::collections::BTreeMap<String, usize>,
    #[serde(flatten)]
    pub registry: FeatureRegistry,
}

pub fn cmd_registry() -> RegistryDump {
    let registry = registry();
    let family_counts = registry.family_counts().into_iter().map(|(f, n)| (f.as_str().to_string(), n)).collect();
    RegistryDump { version: REGISTRY_VERSION, size: registry.len(), family_counts, registry }
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub registry_version: String,
    pub checked: Vec<PathBuf>,
    /// Reports whose embedded hash or registry version disagree, or lack one.
    pub mismatches: Vec<(PathBuf, String)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty() && !self.checked.is_empty()
    }
}

fn report_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_context(format!("listing {}", dir.display())))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_context(format!("listing {}", dir.display())))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            // Per-case folders of the preprocessed store hold volumes, not reports.
            if dir.file_name().is_some_and(|n| n == "preprocessed") {
                continue;
            }
            report_files(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "csv" || e == "json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Re-hashes the configuration and checks every report under the output
/// directory against it.
pub fn cmd_verify(cfg: &PipelineConfig) -> Result<VerifyReport, PipelineError> {
    let hash = config_hash(cfg);
    let out = cfg.output_path();
    if !out.is_dir() {
        return Err(PipelineError::MissingInput(out));
    }
    let mut files = Vec::new();
    report_files(&out, &mut files)?;
    let mut mismatches = Vec::new();
    for f in &files {
        let embedded = if f.extension().is_some_and(|e| e == "csv") {
            read_csv_report_header(f)?
        } else {
            let bytes = std::fs::read(f).map_err(io_context(format!("reading {}", f.display())))?;
            serde_json::from_slice::<serde_json::Value>(&bytes).ok().and_then(|v| {
                let h = v.get("config_hash")?.as_str()?.to_string();
                let r = v.get("registry_version")?.as_str()?.to_string();
                Some((h, r))
            })
        };
        let rel = f.strip_prefix(&out).unwrap_or(f).to_path_buf();
        match embedded {
            None => mismatches.push((rel, "no embedded config hash".into())),
            Some((h, _)) if h != hash => mismatches.push((rel, format!("config hash {h}"))),
            Some((_, r)) if r != REGISTRY_VERSION => mismatches.push((rel, format!("registry version {r}"))),
            Some(_) => {}
        }
    }
    let checked = files.iter().map(|f| f.strip_prefix(&out).unwrap_or(f).to_path_buf()).collect();
    Ok(VerifyReport { config_hash: hash, registry_version: REGISTRY_VERSION.into(), checked, mismatches })
}
