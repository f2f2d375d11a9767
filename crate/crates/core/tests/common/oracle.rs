//! Straight-line reference synthesizer used to cross-check the library.
//!
//! Reads the database files directly, with its own WAV and index handling and
//! only `SelectionRng` borrowed from the library. Deliberately simple: no
//! error handling beyond panics, no parallelism, no shared helpers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use camp::synth::SelectionRng;

pub struct NaiveDb {
    pub root: std::path::PathBuf,
    pub rate: u32,
    /// key -> fragment paths, in index order.
    pub lists: BTreeMap<String, Vec<String>>,
}

pub fn load_naive_db(root: &Path) -> NaiveDb {
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("meta.json")).unwrap()).unwrap();
    let rate = meta["sample_rate_hz"].as_u64().unwrap() as u32;
    let mut lists: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in fs::read_to_string(root.join("index.jsonl")).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        lists
            .entry(v["key"].as_str().unwrap().to_string())
            .or_default()
            .push(v["path"].as_str().unwrap().to_string());
    }
    NaiveDb {
        root: root.to_path_buf(),
        rate,
        lists,
    }
}

/// First reading of every character in a `char<TAB>reading[,reading]` table.
pub fn load_naive_table(path: &Path) -> BTreeMap<char, String> {
    let mut table = BTreeMap::new();
    for line in fs::read_to_string(path).unwrap().lines() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let ch = parts.next().unwrap().chars().next().unwrap();
        let reading = parts.next().unwrap().split(',').next().unwrap().trim();
        table.insert(ch, reading.to_string());
    }
    table
}

fn read_pcm16(path: &Path) -> Vec<f64> {
    // Files written by the library have a plain 44-byte header.
    let bytes = fs::read(path).unwrap();
    bytes[44..]
        .chunks(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
        .collect()
}

fn write_pcm16(samples: &[f64], rate: u32) -> Vec<u8> {
    let n = samples.len() as u32;
    let mut out = Vec::new();
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + 2 * n).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&[16, 0, 0, 0, 1, 0, 1, 0]);
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(2 * rate).to_le_bytes());
    out.extend_from_slice(&[2, 0, 16, 0]);
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(2 * n).to_le_bytes());
    for &s in samples {
        let mut x = s;
        if x > 32767.0 / 32768.0 {
            x = 32767.0 / 32768.0;
        }
        if x < -1.0 {
            x = -1.0;
        }
        let q = (x * 32768.0).round() as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// WAV bytes and transcript for output `variant` of `utt_id`, or `None` when
/// no character of `text` can be voiced. Non-CJK and unmapped characters are
/// dropped, matching the default synthesis policy.
pub fn naive_synthesize(
    db: &NaiveDb,
    table: &BTreeMap<char, String>,
    seed: u64,
    utt_id: &str,
    variant: u32,
    text: &str,
    gap_ms: f64,
) -> Option<(Vec<u8>, String)> {
    let mut rng = SelectionRng::for_output(seed, utt_id, variant);
    let mut pieces: Vec<Vec<f64>> = Vec::new();
    let mut transcript = String::new();
    for ch in text.chars() {
        let code = ch as u32;
        // The test corpora only use the basic block and extension A.
        let cjk = (0x4E00..=0x9FFF).contains(&code) || (0x3400..=0x4DBF).contains(&code);
        if !cjk {
            continue;
        }
        let Some(key) = table.get(&ch) else { continue };
        let list = &db.lists[key];
        let pick = rng.below(list.len());
        pieces.push(read_pcm16(&db.root.join(&list[pick])));
        transcript.push(ch);
    }
    if pieces.is_empty() {
        return None;
    }

    let mut norms = Vec::new();
    for p in &pieces {
        let mut sum = 0.0;
        for x in p {
            sum += x * x;
        }
        norms.push(sum.sqrt());
    }
    let mut total = 0.0;
    for n in &norms {
        total += n;
    }
    let mean = total / norms.len() as f64;

    let gap = (gap_ms * db.rate as f64 / 1000.0).round() as usize;
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        if i > 0 {
            out.extend(std::iter::repeat(0.0).take(gap));
        }
        let scale = mean / norms[i];
        for x in p {
            out.push(x * scale);
        }
    }
    Some((write_pcm16(&out, db.rate), transcript))
}
