use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use tracing::info;

use camp::align::{parse_alignment, UtteranceAudioStore};
use camp::db::{
    db_stats, load_db, merge_dbs, validate_db, BuildOptions, BuildReport, FragmentDb, OnMissingAudio,
    StatsReport, ValidationReport,
};
use camp::demo::write_demo_corpus;
use camp::pinyin::{CharPinyinTable, OnUnmapped, TextPolicy};
use camp::synth::{check_coverage, run_job, CoverageReport, JobReport, OnMissingKey, SynthesisJob};
use camp::{clear_dir, prepare_empty_dir};

use crate::config::Config;
use crate::{
    BuildDbArgs, CliError, CoverageArgs, DemoCorpusArgs, MergeArgs, StatsArgs, SynthArgs, ValidateArgs,
};

/// Name of the pinyin table copy kept next to a database's index.
pub const DB_TABLE_FILE: &str = "pinyin.tsv";
pub const BUILD_REPORT_FILE: &str = "build-report.json";

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION_FAILED: u8 = 3;

fn need<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn policy<T: std::str::FromStr<Err = String>>(value: Option<String>, flag: &str) -> Result<Option<T>, CliError> {
    value
        .map(|v| v.parse().map_err(|e: String| CliError::Usage(format!("--{flag}: {e}"))))
        .transpose()
}

fn parse_missing_audio(value: Option<String>) -> Result<OnMissingAudio, CliError> {
    match value.as_deref() {
        None | Some("error") => Ok(OnMissingAudio::Error),
        Some("skip") => Ok(OnMissingAudio::Skip),
        Some(other) => Err(CliError::Usage(format!(
            "--on-missing-audio: unknown policy {other:?} (expected error or skip)"
        ))),
    }
}

fn jobs(cli: Option<usize>, cfg: &Config) -> Result<usize, CliError> {
    Ok(cli.or(cfg.uint("jobs")?.map(|n| n as usize)).unwrap_or(0))
}

/// `--force` empties the output directory, so it must not hold any input.
fn force_clear(out: &Path, inputs: &[&Path]) -> Result<(), CliError> {
    if !out.exists() {
        return Ok(());
    }
    let out_abs = out
        .canonicalize()
        .with_context(|| format!("resolving {}", out.display()))?;
    for input in inputs {
        if let Ok(input_abs) = input.canonicalize() {
            if input_abs.starts_with(&out_abs) {
                return Err(CliError::Usage(format!(
                    "--force would delete input {} inside output {}",
                    input.display(),
                    out.display()
                )));
            }
        }
    }
    clear_dir(out).with_context(|| format!("clearing {}", out.display()))?;
    Ok(())
}

/// Empty `out` when `force` is set, otherwise fail early if it has content.
fn prepare_out(out: &Path, force: bool, inputs: &[&Path]) -> Result<(), CliError> {
    if force {
        return force_clear(out, inputs);
    }
    let non_empty = fs::read_dir(out).map(|mut d| d.next().is_some()).unwrap_or(false);
    if non_empty {
        return Err(CliError::Data(anyhow::anyhow!(
            "output directory {} is not empty (pass --force to clear it)",
            out.display()
        )));
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Write results to stdout. A closed pipe (`camp stats | head`) is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(value: &impl Serialize) {
    emit(&(serde_json::to_string_pretty(value).expect("report serializes") + "\n"));
}

fn load_table(path: &Path) -> anyhow::Result<CharPinyinTable> {
    CharPinyinTable::load(path).with_context(|| format!("loading pinyin table {}", path.display()))
}

fn open_db(path: &Path) -> anyhow::Result<FragmentDb> {
    load_db(path).with_context(|| format!("loading database {}", path.display()))
}

/// The explicit table, or the copy stored in the database.
fn table_for_db(explicit: Option<PathBuf>, db: &Path) -> anyhow::Result<CharPinyinTable> {
    let path = explicit.unwrap_or_else(|| db.join(DB_TABLE_FILE));
    if !path.exists() {
        anyhow::bail!(
            "{} not found; pass --pinyin-table",
            path.display()
        );
    }
    load_table(&path)
}

fn text_policy(on_unmapped: Option<OnUnmapped>, keep_non_cjk: bool) -> TextPolicy {
    TextPolicy {
        on_unmapped: on_unmapped.unwrap_or(OnUnmapped::Skip),
        strip_non_cjk: !keep_non_cjk,
    }
}

fn read_texts(path: &Path) -> anyhow::Result<Vec<(String, String)>> {
    let corpus = fs::read_to_string(path).with_context(|| format!("reading text corpus {}", path.display()))?;
    SynthesisJob::parse_texts(&corpus).with_context(|| format!("parsing {}", path.display()))
}

fn build_table(report: &BuildReport) -> String {
    let rows = [
        ("segments", report.segments_total),
        ("fragments kept", report.fragments_kept),
        ("silent rejected", report.silent_rejected),
        ("unmapped dropped", report.unmapped_dropped),
        ("missing audio", report.segments_missing_audio),
        ("utterances", report.utterances_total),
        ("utterances missing", report.utterances_missing),
        ("distinct keys", report.distinct_keys),
    ];
    let mut out = String::new();
    for (label, value) in rows {
        let _ = writeln!(out, "{label:<20}{value:>8}");
    }
    if !report.unmapped_chars.is_empty() {
        let chars: String = report.unmapped_chars.iter().collect();
        let _ = writeln!(out, "{:<20}{chars}", "unmapped chars");
    }
    out
}

pub fn build_db(args: BuildDbArgs, cfg: &Config) -> Result<u8, CliError> {
    let align = need(args.align.or(cfg.path("align")?), "align")?;
    let audio_dir = need(args.audio_dir.or(cfg.path("audio-dir")?), "audio-dir")?;
    let table_path = need(args.pinyin_table.or(cfg.path("pinyin-table")?), "pinyin-table")?;
    let out = need(args.out.or(cfg.path("out")?), "out")?;
    let on_unmapped = policy(args.on_unmapped.or(cfg.string("on-unmapped")?), "on-unmapped")?
        .unwrap_or(OnUnmapped::Error);
    let on_missing_audio = parse_missing_audio(args.on_missing_audio.or(cfg.string("on-missing-audio")?))?;
    let opts = BuildOptions {
        on_unmapped,
        on_missing_audio,
        jobs: jobs(args.jobs, cfg)?,
    };
    prepare_out(&out, args.force || cfg.flag("force")?, &[&align, &audio_dir, &table_path])?;

    let segments = parse_alignment(&align).with_context(|| format!("reading alignment {}", align.display()))?;
    let table = load_table(&table_path)?;
    let store = UtteranceAudioStore::new(&audio_dir);
    let (_, report) = camp::db::build_db(&segments, &store, &table, &out, &opts)
        .with_context(|| format!("building database in {}", out.display()))?;

    fs::copy(&table_path, out.join(DB_TABLE_FILE))
        .with_context(|| format!("copying {} into the database", table_path.display()))?;
    write_json(&out.join(BUILD_REPORT_FILE), &report)?;
    emit(&build_table(&report));
    info!(out = %out.display(), "database written");
    Ok(EXIT_OK)
}

fn synth_summary(report: &JobReport, out: &Path) -> String {
    let mut s = format!(
        "requested {}  written {}  skipped {}\n",
        report.requested, report.written, report.skipped
    );
    for (reason, n) in &report.skip_reasons {
        let _ = writeln!(s, "  skipped ({reason}): {n}");
    }
    let _ = writeln!(s, "manifest: {}", out.join(camp::synth::MANIFEST_FILE).display());
    s
}

pub fn synth(args: SynthArgs, cfg: &Config) -> Result<u8, CliError> {
    let db_path = need(args.db.or(cfg.path("db")?), "db")?;
    let text_path = need(args.text.or(cfg.path("text")?), "text")?;
    let out = need(args.out.or(cfg.path("out")?), "out")?;
    let seed = need(args.seed.or(cfg.uint("seed")?), "seed")?;
    let variants = match args.variants {
        Some(v) => v,
        None => match cfg.uint("variants")? {
            Some(v) => u32::try_from(v).map_err(|_| CliError::Usage(format!("variants {v} is too large")))?,
            None => 1,
        },
    };
    let gap_ms = args.gap_ms.or(cfg.float("gap-ms")?).unwrap_or(0.0);
    let on_missing_key: OnMissingKey =
        policy(args.on_missing.or(cfg.string("on-missing")?), "on-missing")?.unwrap_or_default();
    let on_unmapped = policy(args.on_unmapped.or(cfg.string("on-unmapped")?), "on-unmapped")?;
    let keep_non_cjk = args.keep_non_cjk || cfg.flag("keep-non-cjk")?;
    let table_path = args.pinyin_table.or(cfg.path("pinyin-table")?);
    if variants == 0 {
        return Err(CliError::Usage("--variants must be at least 1".into()));
    }
    if !(gap_ms.is_finite() && gap_ms >= 0.0) {
        return Err(CliError::Usage(format!("--gap-ms must be a non-negative number, got {gap_ms}")));
    }
    let jobs = jobs(args.jobs, cfg)?;
    let mut inputs = vec![db_path.as_path(), text_path.as_path()];
    inputs.extend(table_path.as_deref());
    prepare_out(&out, args.force || cfg.flag("force")?, &inputs)?;

    let db = open_db(&db_path)?;
    let table = table_for_db(table_path, &db_path)?;
    let texts = read_texts(&text_path)?;
    let job = SynthesisJob {
        variants,
        gap_ms,
        on_missing_key,
        text_policy: text_policy(on_unmapped, keep_non_cjk),
        jobs,
        ..SynthesisJob::new(texts, seed)
    };
    let report = run_job(&db, &table, &job, &out).context("synthesis failed")?;
    emit(&synth_summary(&report, &out));
    Ok(EXIT_OK)
}

fn stats_text(s: &StatsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sample rate        {} Hz", s.sample_rate_hz);
    let _ = writeln!(out, "distinct keys      {}", s.distinct_keys);
    let _ = writeln!(out, "fragments          {}", s.total_fragments);
    let _ = writeln!(
        out,
        "per key            min {}  median {}  max {}",
        s.min_fragments_per_key, s.median_fragments_per_key, s.max_fragments_per_key
    );
    let _ = writeln!(out, "total duration     {:.3} s", s.total_duration_sec);
    if !s.duration_histogram.is_empty() {
        let _ = writeln!(out, "durations:");
        for bin in &s.duration_histogram {
            let _ = writeln!(out, "  {:>5}-{:<5} ms {:>6}", bin.lower_ms, bin.upper_ms, bin.count);
        }
    }
    if !s.fragments_per_key.is_empty() {
        let _ = writeln!(out, "fragments per key:");
        for (key, n) in &s.fragments_per_key {
            let _ = writeln!(out, "  {key:<10}{n:>6}");
        }
    }
    out
}

pub fn stats(args: StatsArgs, cfg: &Config) -> Result<u8, CliError> {
    let db_path = need(args.db.or(cfg.path("db")?), "db")?;
    let json = args.json || cfg.flag("json")?;
    let report = db_stats(&open_db(&db_path)?);
    if json {
        print_json(&report);
    } else {
        emit(&stats_text(&report));
    }
    Ok(EXIT_OK)
}

fn validation_text(report: &ValidationReport) -> String {
    let mut out = format!("checked {}  failures {}\n", report.checked, report.failures.len());
    for failure in &report.failures {
        let _ = writeln!(out, "{}\t{}", failure.frag_id, failure.reasons.join("; "));
    }
    out
}

pub fn validate(args: ValidateArgs, cfg: &Config) -> Result<u8, CliError> {
    let db_path = need(args.db.or(cfg.path("db")?), "db")?;
    let json = args.json || cfg.flag("json")?;
    let report = validate_db(&open_db(&db_path)?);
    if json {
        print_json(&report);
    } else {
        emit(&validation_text(&report));
    }
    Ok(if report.is_ok() { EXIT_OK } else { EXIT_VALIDATION_FAILED })
}

fn coverage_text(report: &CoverageReport) -> String {
    let mut out = format!(
        "texts {}  characters {}  missing keys {}  unmapped characters {}\n",
        report.texts_checked,
        report.characters_checked,
        report.missing.len(),
        report.unmapped.len()
    );
    for m in &report.missing {
        let examples: String = m.example_chars.iter().collect();
        let _ = writeln!(out, "missing\t{}\t{}\t{examples}", m.key, m.count);
    }
    for u in &report.unmapped {
        let _ = writeln!(out, "unmapped\t{}\t{}", u.ch, u.count);
    }
    out
}

pub fn coverage(args: CoverageArgs, cfg: &Config) -> Result<u8, CliError> {
    let db_path = need(args.db.or(cfg.path("db")?), "db")?;
    let text_path = need(args.text.or(cfg.path("text")?), "text")?;
    let table_path = args.pinyin_table.or(cfg.path("pinyin-table")?);
    let keep_non_cjk = args.keep_non_cjk || cfg.flag("keep-non-cjk")?;
    let json = args.json || cfg.flag("json")?;

    let db = open_db(&db_path)?;
    let table = table_for_db(table_path, &db_path)?;
    let texts = read_texts(&text_path)?;
    let report = check_coverage(
        &db,
        texts.iter().map(|(_, t)| t.as_str()),
        &table,
        text_policy(None, keep_non_cjk),
    );
    if json {
        print_json(&report);
    } else {
        emit(&coverage_text(&report));
    }
    Ok(EXIT_OK)
}

pub fn merge(args: MergeArgs, cfg: &Config) -> Result<u8, CliError> {
    let first = need(args.first.or(cfg.path("first")?), "first")?;
    let second = need(args.second.or(cfg.path("second")?), "second")?;
    let out = need(args.out.or(cfg.path("out")?), "out")?;
    let json = args.json || cfg.flag("json")?;
    prepare_out(&out, args.force || cfg.flag("force")?, &[&first, &second])?;

    let a = open_db(&first)?;
    let b = open_db(&second)?;
    let merged = merge_dbs(&a, &b, &out).with_context(|| format!("merging into {}", out.display()))?;
    // Keep a table with the result so synth can find one.
    if let Some(table) = [&first, &second]
        .iter()
        .map(|db| db.join(DB_TABLE_FILE))
        .find(|p| p.exists())
    {
        fs::copy(&table, out.join(DB_TABLE_FILE)).with_context(|| format!("copying {}", table.display()))?;
    }

    let stats = db_stats(&merged);
    if json {
        print_json(&stats);
    } else {
        emit(&format!(
            "merged {} + {} fragments into {} ({} keys)\n",
            a.fragment_count(),
            b.fragment_count(),
            out.display(),
            stats.distinct_keys
        ));
    }
    Ok(EXIT_OK)
}

pub fn demo_corpus(args: DemoCorpusArgs, cfg: &Config) -> Result<u8, CliError> {
    let out = need(args.out.or(cfg.path("out")?), "out")?;
    prepare_out(&out, args.force || cfg.flag("force")?, &[])?;
    prepare_empty_dir(&out).with_context(|| format!("preparing {}", out.display()))?;
    let corpus = write_demo_corpus(&out).with_context(|| format!("writing demo corpus to {}", out.display()))?;
    emit(&format!(
        "audio          {}\nalignment      {}\npinyin table   {}\ntexts          {}\n",
        corpus.audio_dir.display(),
        corpus.alignment.display(),
        corpus.pinyin_table.display(),
        corpus.texts.display()
    ));
    Ok(EXIT_OK)
}
