//! Ablation runs: every (retrieval mode, abbreviation knowledge) arm is
//! answered over a question/answer dataset and scored with ROUGE-Lsum.

use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::fusion::RetrievalMode;
use crate::rouge::{rouge_lsum, RougeScore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub question: String,
    pub answer: String,
}

/// Reads a JSON Lines dataset of `{"question", "answer"}` objects.
pub fn load_dataset(path: &Path) -> Result<Vec<QaExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn parse_dataset<R: BufRead>(input: R, uri: &str) -> Result<Vec<QaExample>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        uri: uri.to_string(),
        format: "dataset",
        message: format!("line {line}: {message}"),
    };
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| parse_err(n + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: QaExample = serde_json::from_str(&line).map_err(|e| parse_err(n + 1, e.to_string()))?;
        if ex.question.trim().is_empty() || ex.answer.trim().is_empty() {
            return Err(parse_err(n + 1, "question and answer must be non-empty".into()));
        }
        out.push(ex);
    }
    if out.is_empty() {
        return Err(parse_err(0, "dataset is empty".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm {
    pub mode: RetrievalMode,
    pub adh: bool,
}

impl Arm {
    pub fn new(mode: RetrievalMode, adh: bool) -> Self {
        Self { mode, adh }
    }

    /// All eight mode x abbreviation combinations.
    pub fn full_grid() -> Vec<Arm> {
        RetrievalMode::ALL
            .into_iter()
            .flat_map(|m| [Arm::new(m, false), Arm::new(m, true)])
            .collect()
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.mode, on_off(self.adh))
    }
}

impl FromStr for Arm {
    type Err = Error;

    /// `mode` or `mode:on|off` (abbreviation knowledge defaults to off).
    fn from_str(s: &str) -> Result<Self> {
        let (mode, adh) = s.split_once(':').unwrap_or((s, "off"));
        let adh = match adh {
            "on" | "true" | "adh" => true,
            "off" | "false" | "noadh" => false,
            other => {
                return Err(Error::UnknownVariant {
                    kind: "abbreviation switch",
                    value: other.to_string(),
                })
            }
        };
        Ok(Arm::new(mode.parse()?, adh))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub question: String,
    pub reference: String,
    pub answer: String,
    pub score: RougeScore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub mode: RetrievalMode,
    pub adh: bool,
    pub mean: RougeScore,
    pub errors: usize,
    pub records: Vec<EvalRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub dataset: String,
    pub arms: Vec<ArmReport>,
}

impl AblationReport {
    pub fn arm(&self, mode: RetrievalMode, adh: bool) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.mode == mode && a.adh == adh)
    }

    pub fn error_count(&self) -> usize {
        self.arms.iter().map(|a| a.errors).sum()
    }
}

fn mean_score(records: &[EvalRecord]) -> RougeScore {
    if records.is_empty() {
        return RougeScore::ZERO;
    }
    let n = records.len() as f64;
    let sum = |f: fn(&RougeScore) -> f64| records.iter().map(|r| f(&r.score)).sum::<f64>() / n;
    RougeScore {
        precision: sum(|s| s.precision),
        recall: sum(|s| s.recall),
        f1: sum(|s| s.f1),
    }
}

fn evaluate_one(engine: &Engine, arm: Arm, ex: &QaExample) -> EvalRecord {
    let opts = engine.options(arm.mode, arm.adh);
    match engine.ask(&ex.question, &[], &opts) {
        Ok(outcome) => EvalRecord {
            score: rouge_lsum(&ex.answer, &outcome.envelope.answer),
            question: ex.question.clone(),
            reference: ex.answer.clone(),
            answer: outcome.envelope.answer,
            error: None,
        },
        Err(e) => EvalRecord {
            question: ex.question.clone(),
            reference: ex.answer.clone(),
            answer: String::new(),
            score: RougeScore::ZERO,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every arm over every example. Failed examples score zero and are
/// counted; results are ordered by arm then example regardless of
/// `parallelism`.
pub fn run_eval(
    engine: &Engine,
    dataset: &str,
    examples: &[QaExample],
    arms: &[Arm],
    parallelism: usize,
) -> Result<AblationReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let arms = arms
        .iter()
        .map(|&arm| {
            let records: Vec<EvalRecord> =
                pool.install(|| examples.par_iter().map(|ex| evaluate_one(engine, arm, ex)).collect());
            ArmReport {
                mode: arm.mode,
                adh: arm.adh,
                mean: mean_score(&records),
                errors: records.iter().filter(|r| r.error.is_some()).count(),
                records,
            }
        })
        .collect();
    Ok(AblationReport {
        dataset: dataset.to_string(),
        arms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    MarkdownTable,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "markdown_table" | "md" => Ok(ReportFormat::MarkdownTable),
            other => Err(Error::UnknownVariant {
                kind: "report format",
                value: other.to_string(),
            }),
        }
    }
}

pub fn render_report(report: &AblationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["dataset", "mode", "adh", "f1", "recall"]).expect("in-memory write");
            for arm in &report.arms {
                w.write_record([
                    report.dataset.as_str(),
                    arm.mode.as_str(),
                    on_off(arm.adh),
                    &arm.mean.f1.to_string(),
                    &arm.mean.recall.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
        }
        ReportFormat::MarkdownTable => {
            let mut s = String::from("| dataset | mode | adh | F1 | Recall |\n|---|---|---|---|---|\n");
            for arm in &report.arms {
                s.push_str(&format!(
                    "| {} | {} | {} | {:.4} | {:.4} |\n",
                    report.dataset,
                    arm.mode,
                    on_off(arm.adh),
                    arm.mean.f1,
                    arm.mean.recall
                ));
            }
            s
        }
    }
}
