use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use tracing::{info, warn};

use super::manifest::{write_manifest, ManifestEntry};
use super::rng::SelectionRng;
use super::{synthesize_keys, SynthError};
use crate::align::is_valid_utt_id;
use crate::audio::write_wav;
use crate::db::FragmentDb;
use crate::outdir::prepare_empty_dir;
use crate::parallel::with_pool;
use crate::pinyin::{text_to_keys, CharPinyinTable, PinyinError, TextKeys, TextPolicy};

pub const WAV_DIR: &str = "wav";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnMissingKey {
    /// Check everything up front and write nothing if any utterance fails.
    #[default]
    Error,
    SkipUtterance,
}

impl FromStr for OnMissingKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(Self::Error),
            "skip" | "skip-utterance" => Ok(Self::SkipUtterance),
            other => Err(format!(
                "unknown missing-key policy {other:?} (expected error or skip)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisJob {
    /// `(utt_id, text)` pairs; ids must be unique.
    pub texts: Vec<(String, String)>,
    pub seed: u64,
    pub variants: u32,
    pub gap_ms: f64,
    pub on_missing_key: OnMissingKey,
    pub text_policy: TextPolicy,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    pub jobs: usize,
}

impl SynthesisJob {
    pub fn new(texts: Vec<(String, String)>, seed: u64) -> Self {
        Self {
            texts,
            seed,
            variants: 1,
            gap_ms: 0.0,
            on_missing_key: OnMissingKey::Error,
            text_policy: TextPolicy::SYNTH,
            jobs: 0,
        }
    }

    /// Parse a text corpus of `<utt_id>\t<text>` lines. Blank lines are skipped.
    pub fn parse_texts(corpus: &str) -> Result<Vec<(String, String)>, SynthError> {
        let mut out = Vec::new();
        for (i, line) in corpus.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (id, text) = line.split_once('\t').ok_or_else(|| {
                SynthError::InvalidJob(format!("text line {}: expected <utt_id>\\t<text>", i + 1))
            })?;
            out.push((id.to_string(), text.to_string()));
        }
        Ok(out)
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.variants == 0 {
            return Err(SynthError::InvalidJob("variants must be at least 1".into()));
        }
        if !(self.gap_ms.is_finite() && self.gap_ms >= 0.0) {
            return Err(SynthError::InvalidJob(format!(
                "gap_ms must be finite and non-negative, got {}",
                self.gap_ms
            )));
        }
        let mut seen = HashSet::new();
        for (id, _) in &self.texts {
            if !is_valid_utt_id(id) {
                return Err(SynthError::InvalidJob(format!("invalid utterance id {id:?}")));
            }
            if !seen.insert(id.as_str()) {
                return Err(SynthError::InvalidJob(format!("duplicate utterance id {id:?}")));
            }
        }
        Ok(())
    }
}

pub fn out_id(utt_id: &str, variant: u32) -> String {
    format!("{utt_id}-v{variant}")
}

/// Deterministic summary of a job; contains counters and sorted lists only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct JobReport {
    pub requested: usize,
    pub written: usize,
    pub skipped: usize,
    /// Skipped outputs per reason.
    pub skip_reasons: BTreeMap<String, usize>,
    /// Sorted out_ids that were not written.
    pub skipped_outputs: Vec<String>,
}

fn skip_reason(err: &SynthError) -> Option<&'static str> {
    match err {
        SynthError::MissingKey(_) => Some("missing_key"),
        SynthError::NothingToSynthesize => Some("nothing_to_synthesize"),
        SynthError::Pinyin(PinyinError::UnmappedInText(_)) => Some("unmapped_character"),
        _ => None,
    }
}

/// Resolve text and check every key exists, without touching audio.
fn plan_utterance(
    db: &FragmentDb,
    table: &CharPinyinTable,
    text: &str,
    policy: TextPolicy,
) -> Result<TextKeys, SynthError> {
    let keys = text_to_keys(table, text, policy)?;
    if keys.is_empty() {
        return Err(SynthError::NothingToSynthesize);
    }
    if let Some(missing) = keys.keys().find(|k| !db.contains_key(k)) {
        return Err(SynthError::MissingKey(missing.clone()));
    }
    Ok(keys)
}

fn preflight_failures(
    db: &FragmentDb,
    job: &SynthesisJob,
    plans: &[Result<TextKeys, SynthError>],
    table: &CharPinyinTable,
) -> Vec<String> {
    let mut failures = Vec::new();
    let mut missing: BTreeMap<String, (usize, Vec<&str>)> = BTreeMap::new();
    for ((utt_id, text), plan) in job.texts.iter().zip(plans) {
        match plan {
            Ok(_) => {}
            Err(SynthError::MissingKey(_)) => {
                // Report every missing key of the utterance, not just the first.
                let keys = text_to_keys(table, text, job.text_policy).unwrap_or_default();
                for key in keys.keys().filter(|k| !db.contains_key(k)) {
                    let entry = missing.entry(key.to_string()).or_default();
                    entry.0 += 1;
                    if entry.1.last() != Some(&utt_id.as_str()) && entry.1.len() < 3 {
                        entry.1.push(utt_id);
                    }
                }
            }
            Err(e) => failures.push(format!("{utt_id}: {e}")),
        }
    }
    for (key, (count, utts)) in missing {
        failures.push(format!(
            "missing key {key}: needed {count} time(s), e.g. by {}",
            utts.join(", ")
        ));
    }
    failures
}

/// Generate every `(utterance, variant)` output of `job` into `out`:
/// `wav/<out_id>.wav`, `manifest.tsv` and `report.json`.
///
/// Each output's fragment choice comes from its own stream seeded by
/// `(job.seed, utt_id, variant)`, so results are identical for any worker
/// count or execution order.
pub fn run_job(
    db: &FragmentDb,
    table: &CharPinyinTable,
    job: &SynthesisJob,
    out: &Path,
) -> Result<JobReport, SynthError> {
    job.validate()?;

    let plans: Vec<Result<TextKeys, SynthError>> = job
        .texts
        .iter()
        .map(|(_, text)| plan_utterance(db, table, text, job.text_policy))
        .collect();

    if job.on_missing_key == OnMissingKey::Error {
        let failures = preflight_failures(db, job, &plans, table);
        if !failures.is_empty() {
            return Err(SynthError::Preflight(failures));
        }
    }

    prepare_empty_dir(out)?;
    let wav_dir = out.join(WAV_DIR);
    fs::create_dir_all(&wav_dir).map_err(|source| SynthError::Io {
        path: wav_dir.display().to_string(),
        source,
    })?;

    let mut report = JobReport {
        requested: job.texts.len() * job.variants as usize,
        ..Default::default()
    };
    let mut items = Vec::new();
    for ((utt_id, _), plan) in job.texts.iter().zip(&plans) {
        match plan {
            Ok(keys) => items.extend((1..=job.variants).map(|k| (utt_id.as_str(), k, keys))),
            Err(e) => {
                let reason = skip_reason(e).expect("plan errors are all skippable");
                *report.skip_reasons.entry(reason.into()).or_default() += job.variants as usize;
                report
                    .skipped_outputs
                    .extend((1..=job.variants).map(|k| out_id(utt_id, k)));
            }
        }
    }

    let results: Vec<Result<ManifestEntry, SynthError>> = with_pool(job.jobs, || {
        items
            .par_iter()
            .map(|&(utt_id, variant, keys)| {
                let id = out_id(utt_id, variant);
                let mut rng = SelectionRng::for_output(job.seed, utt_id, variant);
                let utt = synthesize_keys(db, &id, keys, &mut rng, job.gap_ms)?;
                let rel = format!("{WAV_DIR}/{id}.wav");
                write_wav(&utt.clip, out.join(&rel))?;
                Ok(ManifestEntry {
                    out_id: id,
                    wav_path: rel,
                    transcript: utt.transcript,
                })
            })
            .collect()
    });

    let mut entries = Vec::with_capacity(results.len());
    for result in results {
        match result {
            Ok(entry) => entries.push(entry),
            Err(e) => {
                warn!(out = %out.display(), "synthesis aborted; partial output left behind");
                return Err(e);
            }
        }
    }

    report.written = entries.len();
    report.skipped = report.skipped_outputs.len();
    report.skipped_outputs.sort();

    write_manifest(&entries, &out.join(MANIFEST_FILE))?;
    let report_path = out.join(REPORT_FILE);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    fs::write(&report_path, json + "\n").map_err(|source| SynthError::Io {
        path: report_path.display().to_string(),
        source,
    })?;

    info!(
        written = report.written,
        skipped = report.skipped,
        "synthesis job finished"
    );
    Ok(report)
}
