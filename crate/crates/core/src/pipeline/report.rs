use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{io_context, PipelineError, TOOL_VERSION};
use crate::radiomics::REGISTRY_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope<T> {
    pub config_hash: String,
    pub registry_version: String,
    pub tool_version: String,
    pub kind: String,
    pub report: T,
}

fn create_parent(path: &Path) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_context(format!("creating {}", dir.display())))?;
    }
    Ok(())
}

pub fn write_json_report<T: Serialize>(path: &Path, kind: &str, config_hash: &str, report: &T) -> Result<(), PipelineError> {
    create_parent(path)?;
    let env = ReportEnvelope {
        config_hash: config_hash.to_string(),
        registry_version: REGISTRY_VERSION.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        kind: kind.to_string(),
        report,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(io_context(format!("writing {}", path.display())))
}

/// CSV preceded by `# config_hash=… registry_version=… tool_version=…`.
pub fn write_csv_report(path: &Path, config_hash: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), PipelineError> {
    create_parent(path)?;
    let mut buf = Vec::new();
    writeln!(buf, "# config_hash={config_hash} registry_version={REGISTRY_VERSION} tool_version={TOOL_VERSION}").expect("vec write");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(io_context("flushing csv"))?;
    }
    std::fs::write(path, buf).map_err(io_context(format!("writing {}", path.display())))
}

/// `(config_hash, registry_version)` from a CSV report's comment line.
pub fn read_csv_report_header(path: &Path) -> Result<Option<(String, String)>, PipelineError> {
    let f = std::fs::File::open(path).map_err(io_context(format!("opening {}", path.display())))?;
    let mut first = String::new();
    BufReader::new(f).read_line(&mut first).map_err(io_context(format!("reading {}", path.display())))?;
    let Some(rest) = first.trim_end().strip_prefix("# ") else { return Ok(None) };
    let mut hash = None;
    let mut version = None;
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("config_hash", v)) => hash = Some(v.to_string()),
            Some(("registry_version", v)) => version = Some(v.to_string()),
            _ => {}
        }
    }
    Ok(hash.zip(version))
}

/// Reads a CSV report body, skipping the comment line.
pub(crate) fn csv_body(path: &Path) -> Result<Vec<u8>, PipelineError> {
    let bytes = std::fs::read(path).map_err(io_context(format!("reading {}", path.display())))?;
    Ok(match bytes.first() {
        Some(b'#') => bytes.iter().position(|&b| b == b'\n').map_or(Vec::new(), |i| bytes[i + 1..].to_vec()),
        _ => bytes,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageStatus {
    pub outcome: String,
    pub items_ok: usize,
    pub items_failed: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Per-invocation provenance; the only artifact with wall-clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub stage: String,
    pub config_hash: String,
    pub registry_version: String,
    pub tool_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub status: StageStatus,
}

pub(crate) fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

impl RunRecord {
    pub(crate) fn write(out_dir: &Path, stage: &str, config_hash: &str, started: u128, status: StageStatus) -> Result<(), PipelineError> {
        let rec = RunRecord {
            stage: stage.to_string(),
            config_hash: config_hash.to_string(),
            registry_version: REGISTRY_VERSION.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            started_unix_ms: started,
            finished_unix_ms: now_ms(),
            status,
        };
        let path = out_dir.join("logs").join(format!("{stage}_run.json"));
        create_parent(&path)?;
        std::fs::write(&path, serde_json::to_vec_pretty(&rec)?).map_err(io_context(format!("writing {}", path.display())))
    }
}
