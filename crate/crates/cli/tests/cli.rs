use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn camp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_camp")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Setup {
    tmp: tempfile::TempDir,
    corpus: PathBuf,
    db: PathBuf,
}

impl Setup {
    fn path(&self, rel: &str) -> PathBuf {
        self.tmp.path().join(rel)
    }
}

fn build_args(corpus: &Path, out: &Path) -> Vec<String> {
    vec![
        "build-db".into(),
        "--align".into(),
        s(&corpus.join("align.txt")).into(),
        "--audio-dir".into(),
        s(&corpus.join("audio")).into(),
        "--pinyin-table".into(),
        s(&corpus.join("pinyin.tsv")).into(),
        "--out".into(),
        s(out).into(),
    ]
}

fn camp_owned(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    camp(&refs)
}

fn setup() -> Setup {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let db = tmp.path().join("db");
    assert_eq!(code(&camp(&["demo-corpus", "--out", s(&corpus)])), 0);
    let out = camp_owned(&build_args(&corpus, &db));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    Setup { tmp, corpus, db }
}

fn write_texts(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn build_db_reports_kept_fragments() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    camp(&["demo-corpus", "--out", s(&corpus)]);
    let db = tmp.path().join("db");
    let out = camp_owned(&build_args(&corpus, &db));
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("fragments kept") && l.trim_end().ends_with("40")), "{text}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(db.join("build-report.json")).unwrap()).unwrap();
    assert_eq!(report["fragments_kept"], 40);
    assert_eq!(report["distinct_keys"], 8);
    assert_eq!(fs::read(db.join("pinyin.tsv")).unwrap(), fs::read(corpus.join("pinyin.tsv")).unwrap());
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = camp(&["build-db", "--align", "a.txt", "--audio-dir", "x", "--pinyin-table", "t.tsv"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("--out") && err.contains("Usage: camp build-db"), "{err}");
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());

    let no_seed = camp(&["synth", "--db", "d", "--text", "t", "--out", "o"]);
    assert_eq!(code(&no_seed), 1);
    assert!(stderr(&no_seed).contains("--seed"));
}

#[test]
fn unknown_flags_and_bad_values_are_usage_errors() {
    assert_eq!(code(&camp(&["synth", "--bogus"])), 1);
    assert_eq!(code(&camp(&["frobnicate"])), 1);
    assert_eq!(code(&camp(&["synth", "--seed", "minus-one"])), 1);
    let out = camp(&["synth", "--db", "d", "--text", "t", "--out", "o", "--seed", "1", "--on-missing", "maybe"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("maybe"));
}

#[test]
fn help_and_version_succeed() {
    let help = camp(&["--help"]);
    assert_eq!(code(&help), 0);
    for sub in ["build-db", "synth", "stats", "validate", "coverage", "merge", "demo-corpus"] {
        assert!(stdout(&help).contains(sub), "{sub}");
        assert_eq!(code(&camp(&[sub, "--help"])), 0);
    }
    assert_eq!(code(&camp(&["--version"])), 0);
}

#[test]
fn absent_recording_is_a_data_error_naming_the_utterance() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    camp(&["demo-corpus", "--out", s(&corpus)]);
    fs::remove_file(corpus.join("audio/utt04.wav")).unwrap();
    let out = camp_owned(&build_args(&corpus, &tmp.path().join("db")));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("utt04"), "{}", stderr(&out));
}

#[test]
fn malformed_alignment_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    camp(&["demo-corpus", "--out", s(&corpus)]);
    let align = corpus.join("align.txt");
    let mut text = fs::read_to_string(&align).unwrap();
    text.push_str("utt01 oops 0.1 家\n");
    fs::write(&align, text).unwrap();
    let out = camp_owned(&build_args(&corpus, &tmp.path().join("db")));
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 42"), "{}", stderr(&out));
}

fn synth(st: &Setup, text: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--db", s(&st.db), "--text", s(text), "--out", s(out), "--seed", "42"];
    args.extend_from_slice(extra);
    camp(&args)
}

#[test]
fn synth_is_deterministic_and_writes_variants() {
    let st = setup();
    let texts = st.corpus.join("texts.tsv");
    let a = st.path("a");
    let b = st.path("b");
    assert_eq!(code(&synth(&st, &texts, &a, &["--variants", "3"])), 0);
    assert_eq!(code(&synth(&st, &texts, &b, &["--variants", "3"])), 0);
    let manifest = fs::read_to_string(a.join("manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 300);
    assert_eq!(manifest, fs::read_to_string(b.join("manifest.tsv")).unwrap());
    for line in manifest.lines() {
        let wav = line.split('\t').nth(1).unwrap();
        assert_eq!(fs::read(a.join(wav)).unwrap(), fs::read(b.join(wav)).unwrap(), "{wav}");
    }
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(b.join("report.json")).unwrap()
    );
}

#[test]
fn synth_error_mode_lists_missing_keys() {
    let st = setup();
    let texts = write_texts(st.tmp.path(), "gap.tsv", "x1\t家女\nx2\t中国\n");
    let out = st.path("out");
    let res = synth(&st, &texts, &out, &[]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("nv3"), "{}", stderr(&res));
    assert!(!out.exists());

    let res = synth(&st, &texts, &out, &["--on-missing", "skip"]);
    assert_eq!(code(&res), 0);
    assert!(stdout(&res).contains("skipped 1"), "{}", stdout(&res));
    assert_eq!(fs::read_to_string(out.join("manifest.tsv")).unwrap().lines().count(), 1);
}

#[test]
fn synth_refuses_non_empty_output_without_force() {
    let st = setup();
    let texts = st.corpus.join("texts.tsv");
    let out = st.path("out");
    assert_eq!(code(&synth(&st, &texts, &out, &[])), 0);
    let again = synth(&st, &texts, &out, &[]);
    assert_eq!(code(&again), 2);
    assert!(stderr(&again).contains("--force"));
    let forced = synth(&st, &texts, &out, &["--force", "--variants", "2"]);
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));
    assert_eq!(fs::read_to_string(out.join("manifest.tsv")).unwrap().lines().count(), 200);
}

#[test]
fn force_never_deletes_inputs() {
    let st = setup();
    let texts = write_texts(&st.db, "texts.tsv", "x\t家\n");
    let res = synth(&st, &texts, &st.db, &["--force"]);
    assert_eq!(code(&res), 1);
    assert!(st.db.join("index.jsonl").exists());
}

#[test]
fn synth_needs_a_table_when_the_database_has_none() {
    let st = setup();
    fs::remove_file(st.db.join("pinyin.tsv")).unwrap();
    let texts = st.corpus.join("texts.tsv");
    let res = synth(&st, &texts, &st.path("out"), &[]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("--pinyin-table"));
    let table = st.corpus.join("pinyin.tsv");
    let res = synth(&st, &texts, &st.path("out"), &["--pinyin-table", s(&table)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
}

#[test]
fn validate_exit_codes() {
    let st = setup();
    assert_eq!(code(&camp(&["validate", "--db", s(&st.db)])), 0);

    let victim = fs::read_dir(st.db.join("frag/ren2")).unwrap().next().unwrap().unwrap().path();
    fs::write(&victim, b"RIFF").unwrap();
    let out = camp(&["validate", "--db", s(&st.db)]);
    assert_eq!(code(&out), 3);
    let text = stdout(&out);
    assert!(text.starts_with("checked 40  failures 1\n"), "{text}");
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn json_outputs_parse_and_are_stable() {
    let st = setup();
    let stats1 = stdout(&camp(&["stats", "--db", s(&st.db), "--json"]));
    let stats2 = stdout(&camp(&["stats", "--db", s(&st.db), "--json"]));
    assert_eq!(stats1, stats2);
    let stats: serde_json::Value = serde_json::from_str(&stats1).unwrap();
    assert_eq!(stats["total_fragments"], 40);
    let keys: Vec<&String> = stats["fragments_per_key"].as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);

    let v: serde_json::Value =
        serde_json::from_str(&stdout(&camp(&["validate", "--db", s(&st.db), "--json"]))).unwrap();
    assert_eq!(v["checked"], 40);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn coverage_json_lists_missing_keys() {
    let st = setup();
    let texts = write_texts(st.tmp.path(), "t.tsv", "a\t女人\nb\t绿女龙\n");
    let out = camp(&["coverage", "--db", s(&st.db), "--text", s(&texts), "--json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let missing = report["missing"].as_array().unwrap();
    let keys: Vec<(&str, u64)> = missing
        .iter()
        .map(|m| (m["key"].as_str().unwrap(), m["count"].as_u64().unwrap()))
        .collect();
    assert_eq!(keys, [("lv4", 1), ("nv3", 2)]);
    assert_eq!(report["unmapped"][0]["ch"], "龙");

    let human = stdout(&camp(&["coverage", "--db", s(&st.db), "--text", s(&texts)]));
    assert!(human.contains("missing\tnv3\t2\t女"), "{human}");
}

#[test]
fn merge_combines_two_databases() {
    let st = setup();
    let other = st.path("db2");
    camp_owned(&build_args(&st.corpus, &other));
    let merged = st.path("merged");
    let out = camp(&["merge", "--first", s(&st.db), "--second", s(&other), "--out", s(&merged), "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["total_fragments"], 80);
    assert_eq!(stats["distinct_keys"], 8);
    assert!(merged.join("pinyin.tsv").exists());
    assert_eq!(code(&camp(&["validate", "--db", s(&merged)])), 0);
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let st = setup();
    let config = st.path("camp.toml");
    fs::write(
        &config,
        format!(
            "db = {:?}\ntext = {:?}\nseed = 42\nvariants = 2\njobs = 2\n",
            s(&st.db),
            s(&st.corpus.join("texts.tsv"))
        ),
    )
    .unwrap();
    let a = st.path("a");
    let res = camp(&["synth", "--config", s(&config), "--out", s(&a)]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert_eq!(fs::read_to_string(a.join("manifest.tsv")).unwrap().lines().count(), 200);

    let b = st.path("b");
    let res = camp(&["synth", "--config", s(&config), "--out", s(&b), "--variants", "1"]);
    assert_eq!(code(&res), 0);
    assert_eq!(fs::read_to_string(b.join("manifest.tsv")).unwrap().lines().count(), 100);

    // Same seed and ids: variant 1 files agree between the runs.
    assert_eq!(fs::read(a.join("wav/line007-v1.wav")).unwrap(), fs::read(b.join("wav/line007-v1.wav")).unwrap());

    fs::write(&config, "sede = 42\n").unwrap();
    let res = camp(&["stats", "--config", s(&config), "--db", s(&st.db)]);
    assert_eq!(code(&res), 1);
    assert!(stderr(&res).contains("sede"));
}

#[test]
fn logs_go_to_stderr_and_data_to_stdout() {
    let st = setup();
    let out = camp(&["-v", "stats", "--db", s(&st.db), "--json"]);
    assert_eq!(code(&out), 0);
    serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap();
}
