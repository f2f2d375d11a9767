//! Training manifest: `<out_id>\t<wav path>\t<transcript>` per line, sorted by
//! out_id, no header.
//!
//! Converting to Kaldi-style `wav.scp` + `text`:
//!
//! ```sh
//! awk -F'\t' '{print $1, $2}' manifest.tsv > wav.scp
//! awk -F'\t' '{print $1, $3}' manifest.tsv > text
//! ```

use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest entry {out_id:?}: field {field} contains a tab, newline or is empty")]
    BadField { out_id: String, field: &'static str },
    #[error("manifest line {line}: expected 3 tab-separated fields")]
    Parse { line: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestEntry {
    pub out_id: String,
    /// Relative to the job output directory.
    pub wav_path: String,
    pub transcript: String,
}

fn clean(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\t', '\n', '\r'])
}

/// Write entries sorted by out_id.
pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<(), ManifestError> {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.out_id.cmp(&b.out_id));

    let mut text = String::new();
    for e in sorted {
        for (field, value) in [
            ("out_id", &e.out_id),
            ("wav_path", &e.wav_path),
            ("transcript", &e.transcript),
        ] {
            if !clean(value) {
                return Err(ManifestError::BadField {
                    out_id: e.out_id.clone(),
                    field,
                });
            }
        }
        text.push_str(&format!("{}\t{}\t{}\n", e.out_id, e.wav_path, e.transcript));
    }
    fs::write(path, text).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ManifestError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[..] {
                [out_id, wav_path, transcript] => Ok(ManifestEntry {
                    out_id: out_id.into(),
                    wav_path: wav_path.into(),
                    transcript: transcript.into(),
                }),
                _ => Err(ManifestError::Parse { line: i + 1 }),
            }
        })
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_manifest(&text)
}
