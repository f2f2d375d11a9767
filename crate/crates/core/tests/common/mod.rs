#![allow(dead_code)]

pub mod oracle;

use std::path::Path;

use camp::align::{AlignmentSegment, UtteranceAudioStore};
use camp::audio::{write_wav, AudioClip};
use camp::db::{build_db, BuildOptions, BuildReport, FragmentDb};
use camp::demo::write_demo_corpus;
use camp::pinyin::CharPinyinTable;
use camp::synth::SynthesisJob;

pub const RATE: u32 = 16_000;

/// Zero samples before the first character and after each one.
const LEAD: usize = 160;

pub const MINI_TABLE: &str = "\
家\tjia1
佳\tjia1
颊\tjia2
中\tzhong1,zhong4
国\tguo2
人\tren2
好\thao3,hao4
";

pub fn mini_table() -> CharPinyinTable {
    CharPinyinTable::parse(MINI_TABLE).unwrap()
}

/// A windowed sine that survives PCM16 quantization with non-zero energy.
pub fn tone(len: usize, hz: f64, amp: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * (i as f64 + 0.5) / len as f64).cos();
            amp * w * (2.0 * std::f64::consts::PI * hz * (i as f64 + 0.5) / f64::from(RATE)).sin()
        })
        .collect()
}

pub type Utterance<'a> = (&'a str, Vec<(char, Vec<f64>)>);

/// Write one WAV per utterance with the given character audio laid out in
/// order (separated by silence) and return the matching alignment.
pub fn write_corpus(audio_dir: &Path, utts: &[Utterance]) -> (UtteranceAudioStore, Vec<AlignmentSegment>) {
    std::fs::create_dir_all(audio_dir).unwrap();
    let mut segments = Vec::new();
    for (utt_id, chars) in utts {
        let mut samples = vec![0.0; LEAD];
        for (ch, audio) in chars {
            segments.push(AlignmentSegment {
                utt_id: utt_id.to_string(),
                ch: *ch,
                start_sec: samples.len() as f64 / f64::from(RATE),
                dur_sec: audio.len() as f64 / f64::from(RATE),
            });
            samples.extend_from_slice(audio);
            samples.resize(samples.len() + LEAD, 0.0);
        }
        let clip = AudioClip::new(samples, RATE).unwrap();
        write_wav(&clip, audio_dir.join(format!("{utt_id}.wav"))).unwrap();
    }
    (UtteranceAudioStore::new(audio_dir), segments)
}

/// Build a database at `<root>/db` from `utts`, corpus audio in `<root>/audio`.
pub fn build_mini(root: &Path, utts: &[Utterance], table: &CharPinyinTable) -> (FragmentDb, BuildReport) {
    let (store, segments) = write_corpus(&root.join("audio"), utts);
    build_db(&segments, &store, table, &root.join("db"), &BuildOptions::default()).unwrap()
}

/// One utterance per fragment: `count` recordings of `ch`, each a different tone.
pub fn repeated(ch: char, count: usize, prefix: &str) -> Vec<(String, Vec<(char, Vec<f64>)>)> {
    (0..count)
        .map(|i| {
            let audio = tone(200 + 37 * i, 180.0 + 40.0 * i as f64, 0.2 + 0.1 * i as f64);
            (format!("{prefix}{i}"), vec![(ch, audio)])
        })
        .collect()
}

pub fn as_utts(owned: &[(String, Vec<(char, Vec<f64>)>)]) -> Vec<Utterance<'_>> {
    owned.iter().map(|(id, c)| (id.as_str(), c.clone())).collect()
}

pub struct Demo {
    pub db: FragmentDb,
    pub table: CharPinyinTable,
    pub texts: Vec<(String, String)>,
    pub table_path: std::path::PathBuf,
}

/// The bundled demo corpus built into `<root>/db`.
pub fn demo_db(root: &Path) -> Demo {
    let corpus = write_demo_corpus(&root.join("corpus")).unwrap();
    let table = CharPinyinTable::load(&corpus.pinyin_table).unwrap();
    let segments = camp::align::parse_alignment(&corpus.alignment).unwrap();
    let store = UtteranceAudioStore::new(&corpus.audio_dir);
    let (db, _) = build_db(&segments, &store, &table, &root.join("db"), &BuildOptions::default()).unwrap();
    let texts = SynthesisJob::parse_texts(&std::fs::read_to_string(&corpus.texts).unwrap()).unwrap();
    Demo {
        db,
        table,
        texts,
        table_path: corpus.pinyin_table,
    }
}

/// Every file under `dir` with its contents, keyed by relative path.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
