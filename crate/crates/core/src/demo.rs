//! A small synthetic corpus for tutorials and end-to-end tests.
//!
//! Ten 16 kHz utterances of four characters each, covering eight pinyin keys
//! (including the tone pair `jia1`/`jia2` and two characters sharing `jia1`
//! and `shi4`). Each character is a Hann-windowed tone whose pitch depends on
//! its key and whose loudness depends on the utterance, so energy
//! normalization has something to do. Everything is generated
//! deterministically; no files are shipped.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::align::{serialize_alignment, AlignmentSegment};
use crate::audio::{write_wav, AudioClip};
use crate::pinyin::CharPinyinTable;
use crate::synth::SelectionRng;

pub const DEMO_SAMPLE_RATE_HZ: u32 = 16_000;

pub const DEMO_UTTERANCES: [(&str, &str); 10] = [
    ("utt01", "家中国人"),
    ("utt02", "佳人好吗"),
    ("utt03", "中国是家"),
    ("utt04", "好事是吗"),
    ("utt05", "颊中佳事"),
    ("utt06", "人是好家"),
    ("utt07", "国事好吗"),
    ("utt08", "颊佳人中"),
    ("utt09", "是家国事"),
    ("utt10", "吗好颊人"),
];

/// Characters available in the demo database.
pub const DEMO_CHARS: [char; 10] = ['家', '佳', '颊', '中', '国', '人', '好', '吗', '是', '事'];

/// Bundled pinyin table, as written by [`write_demo_corpus`].
pub const DEMO_TABLE: &str = include_str!("../data/pinyin_mini.tsv");

/// Paths of a materialized demo corpus.
#[derive(Debug, Clone)]
pub struct DemoCorpus {
    pub root: PathBuf,
    pub audio_dir: PathBuf,
    pub alignment: PathBuf,
    pub pinyin_table: PathBuf,
    pub texts: PathBuf,
}

const LEAD_SEC: f64 = 0.10;
const PAUSE_SEC: f64 = 0.05;

fn tone_hz(table: &CharPinyinTable, ch: char) -> f64 {
    let key = table.primary_reading(ch).expect("demo character is in the bundled table");
    let base: u32 = key.base().bytes().map(u32::from).sum();
    140.0 + f64::from(base % 23) * 12.0 + f64::from(key.tone()) * 35.0
}

/// Audio and alignment for one demo utterance.
pub fn demo_utterance(index: usize) -> (AudioClip, Vec<AlignmentSegment>) {
    let (utt_id, text) = DEMO_UTTERANCES[index];
    let table = CharPinyinTable::bundled();
    let rate = f64::from(DEMO_SAMPLE_RATE_HZ);
    let amplitude = 0.15 + 0.07 * index as f64;

    let mut samples = vec![0.0; (LEAD_SEC * rate) as usize];
    let mut segments = Vec::new();
    for (pos, ch) in text.chars().enumerate() {
        // Durations in whole centiseconds: 0.18 .. 0.30 s.
        let dur_sec = f64::from(18 + ((index * 7 + pos * 5) % 13) as u32) / 100.0;
        let start = samples.len();
        let n = (dur_sec * rate).round() as usize;
        let hz = tone_hz(&table, ch) * (1.0 + 0.01 * index as f64);
        samples.extend((0..n).map(|i| {
            let t = i as f64 / rate;
            let window = 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos();
            amplitude * window * (2.0 * PI * hz * t).sin()
        }));
        segments.push(AlignmentSegment {
            utt_id: utt_id.to_string(),
            ch,
            start_sec: start as f64 / rate,
            dur_sec,
        });
        samples.resize(samples.len() + (PAUSE_SEC * rate) as usize, 0.0);
    }
    samples.resize(samples.len() + (LEAD_SEC * rate) as usize, 0.0);

    let clip = AudioClip::new(samples, DEMO_SAMPLE_RATE_HZ).expect("finite samples");
    (clip, segments)
}

/// `count` synthesis lines (`line001\t...`) built from [`DEMO_CHARS`], 2 to 8
/// characters long, some with punctuation that the default policy strips.
pub fn demo_texts(count: usize) -> Vec<(String, String)> {
    let mut rng = SelectionRng::from_seed(2024);
    (1..=count)
        .map(|i| {
            let len = 2 + rng.below(7);
            let mut text: String = (0..len).map(|_| DEMO_CHARS[rng.below(DEMO_CHARS.len())]).collect();
            match i % 5 {
                0 => text.push('。'),
                3 => text.insert(text.chars().next().map_or(0, char::len_utf8), '，'),
                _ => {}
            }
            (format!("line{i:03}"), text)
        })
        .collect()
}

/// Write the demo corpus under `root`:
/// `audio/<utt>.wav`, `align.txt`, `pinyin.tsv` and `texts.tsv` (100 lines).
pub fn write_demo_corpus(root: &Path) -> io::Result<DemoCorpus> {
    let corpus = DemoCorpus {
        root: root.to_path_buf(),
        audio_dir: root.join("audio"),
        alignment: root.join("align.txt"),
        pinyin_table: root.join("pinyin.tsv"),
        texts: root.join("texts.tsv"),
    };
    fs::create_dir_all(&corpus.audio_dir)?;

    let mut segments = Vec::new();
    for (i, (utt_id, _)) in DEMO_UTTERANCES.iter().enumerate() {
        let (clip, segs) = demo_utterance(i);
        write_wav(&clip, corpus.audio_dir.join(format!("{utt_id}.wav")))
            .map_err(|e| io::Error::other(e.to_string()))?;
        segments.extend(segs);
    }
    let header = "# utt_id start_sec dur_sec char\n";
    fs::write(&corpus.alignment, format!("{header}{}", serialize_alignment(&segments)))?;
    fs::write(&corpus.pinyin_table, DEMO_TABLE)?;

    let texts: String = demo_texts(100)
        .into_iter()
        .map(|(id, text)| format!("{id}\t{text}\n"))
        .collect();
    fs::write(&corpus.texts, texts)?;
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn corpus_shape() {
        let table = CharPinyinTable::bundled();
        let mut keys = BTreeSet::new();
        let mut n_segments = 0;
        for i in 0..DEMO_UTTERANCES.len() {
            let (clip, segs) = demo_utterance(i);
            n_segments += segs.len();
            for s in &segs {
                let (a, b) = s.sample_range(DEMO_SAMPLE_RATE_HZ);
                assert!(b <= clip.len());
                assert!(clip.samples()[a..b].iter().any(|&x| x != 0.0));
                keys.insert(table.primary_reading(s.ch).unwrap().to_string());
            }
        }
        assert_eq!(n_segments, 40);
        assert_eq!(
            keys.into_iter().collect::<Vec<_>>(),
            ["guo2", "hao3", "jia1", "jia2", "ma5", "ren2", "shi4", "zhong1"]
        );
    }

    #[test]
    fn texts_are_deterministic_and_covered() {
        let a = demo_texts(100);
        assert_eq!(a, demo_texts(100));
        assert_eq!(a.len(), 100);
        for (_, text) in &a {
            let n = text.chars().filter(|c| DEMO_CHARS.contains(c)).count();
            assert!((2..=8).contains(&n));
        }
    }
}
