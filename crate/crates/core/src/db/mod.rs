//! Pinyin-keyed fragment database.
//!
//! Character fragments sharing a pronunciation are pooled under one key, so a
//! single key serves every character with that reading. On disk:
//!
//! ```text
//! <root>/meta.json                       {"format_version":1,"sample_rate_hz":16000}
//! <root>/index.jsonl                     one Fragment record per line, sorted by frag_id
//! <root>/frag/<key>/<frag_id>.wav        PCM16 mono fragment audio
//! ```

mod build;
mod merge;
mod report;

pub use build::{build_db, BuildOptions, BuildReport, OnMissingAudio};
pub use merge::merge_dbs;
pub use report::{db_stats, validate_db, HistogramBin, StatsReport, ValidationFailure, ValidationReport};

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::AlignError;
use crate::audio::{read_wav, AudioClip, WavError};
use crate::outdir::OutDirError;
use crate::pinyin::{PinyinError, PinyinSyllable};

pub const FORMAT_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.jsonl";
pub const META_FILE: &str = "meta.json";
/// Sample rate recorded for a database with no fragments.
pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 16_000;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    CorruptIndex {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    CorruptMeta { path: String, message: String },
    #[error("unsupported database format_version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("sample rate mismatch: {what} is {found} Hz, expected {expected} Hz")]
    RateMismatch {
        what: String,
        expected: u32,
        found: u32,
    },
    #[error("fragment {frag_id}: {source}")]
    Fragment {
        frag_id: String,
        #[source]
        source: WavError,
    },
    #[error(transparent)]
    OutDir(#[from] OutDirError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Pinyin(#[from] PinyinError),
}

impl DbError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DbError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One character-length clip, as recorded in `index.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub frag_id: String,
    pub key: PinyinSyllable,
    pub source_utt: String,
    pub source_char: char,
    pub n_samples: usize,
    pub l2_norm: f64,
    /// Relative to the database root.
    pub path: String,
}

/// Canonical relative path of a fragment's audio.
pub fn fragment_path(key: &PinyinSyllable, frag_id: &str) -> String {
    format!("frag/{key}/{frag_id}.wav")
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    sample_rate_hz: u32,
}

/// A loaded database. Immutable; the index is in memory, audio stays on disk.
#[derive(Debug, Clone)]
pub struct FragmentDb {
    root: PathBuf,
    sample_rate_hz: u32,
    index: BTreeMap<PinyinSyllable, Vec<Fragment>>,
}

impl PartialEq for FragmentDb {
    /// Index and sample-rate equality; the storage root is not compared.
    fn eq(&self, other: &Self) -> bool {
        self.sample_rate_hz == other.sample_rate_hz && self.index == other.index
    }
}

impl FragmentDb {
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn index(&self) -> &BTreeMap<PinyinSyllable, Vec<Fragment>> {
        &self.index
    }

    pub fn keys(&self) -> impl Iterator<Item = &PinyinSyllable> {
        self.index.keys()
    }

    pub fn contains_key(&self, key: &PinyinSyllable) -> bool {
        self.index.contains_key(key)
    }

    /// Fragments stored under `key` in build order; empty when absent.
    pub fn lookup(&self, key: &PinyinSyllable) -> &[Fragment] {
        self.index.get(key).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn fragments(&self) -> impl Iterator<Item = &Fragment> {
        self.index.values().flatten()
    }

    pub fn fragment_count(&self) -> usize {
        self.index.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn fragment_file(&self, frag: &Fragment) -> PathBuf {
        self.root.join(&frag.path)
    }

    /// Decode a fragment's audio from disk.
    pub fn load_clip(&self, frag: &Fragment) -> Result<AudioClip, DbError> {
        read_wav(self.fragment_file(frag)).map_err(|source| DbError::Fragment {
            frag_id: frag.frag_id.clone(),
            source,
        })
    }

    /// Parse `meta.json` and `index.jsonl`. Fragment audio is not touched;
    /// use [`validate_db`] for that.
    pub fn load(root: impl AsRef<Path>) -> Result<Self, DbError> {
        let root = root.as_ref();
        let meta_path = root.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| DbError::io(&meta_path, e))?;
        let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| DbError::CorruptMeta {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        if meta.format_version != FORMAT_VERSION {
            return Err(DbError::Version {
                found: meta.format_version,
            });
        }
        if meta.sample_rate_hz == 0 {
            return Err(DbError::CorruptMeta {
                path: meta_path.display().to_string(),
                message: "sample_rate_hz must be positive".into(),
            });
        }

        let index_path = root.join(INDEX_FILE);
        let text = fs::read_to_string(&index_path).map_err(|e| DbError::io(&index_path, e))?;
        let mut seen = HashSet::new();
        let mut fragments = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| DbError::CorruptIndex {
                path: index_path.display().to_string(),
                line: i + 1,
                message,
            };
            let frag: Fragment = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            if frag.n_samples == 0 {
                return Err(corrupt(format!("fragment {} has n_samples = 0", frag.frag_id)));
            }
            if !(frag.l2_norm.is_finite() && frag.l2_norm > 0.0) {
                return Err(corrupt(format!(
                    "fragment {} has non-positive l2_norm {}",
                    frag.frag_id, frag.l2_norm
                )));
            }
            if !seen.insert(frag.frag_id.clone()) {
                return Err(corrupt(format!("duplicate frag_id {}", frag.frag_id)));
            }
            fragments.push(frag);
        }
        Ok(Self::from_parts(root.to_path_buf(), meta.sample_rate_hz, fragments))
    }

    pub(crate) fn from_parts(root: PathBuf, sample_rate_hz: u32, fragments: Vec<Fragment>) -> Self {
        let mut index: BTreeMap<PinyinSyllable, Vec<Fragment>> = BTreeMap::new();
        for frag in fragments {
            index.entry(frag.key.clone()).or_default().push(frag);
        }
        Self {
            root,
            sample_rate_hz,
            index,
        }
    }

    /// Write `meta.json` and `index.jsonl` for `fragments` (sorted here by
    /// frag_id) and return the resulting database.
    pub(crate) fn persist(
        root: &Path,
        sample_rate_hz: u32,
        mut fragments: Vec<Fragment>,
    ) -> Result<Self, DbError> {
        fragments.sort_by(|a, b| a.frag_id.cmp(&b.frag_id));

        let meta = Meta {
            format_version: FORMAT_VERSION,
            sample_rate_hz,
        };
        let meta_path = root.join(META_FILE);
        let meta_json = serde_json::to_string(&meta).expect("meta serializes");
        fs::write(&meta_path, meta_json + "\n").map_err(|e| DbError::io(&meta_path, e))?;

        let index_path = root.join(INDEX_FILE);
        let mut buf = Vec::new();
        for frag in &fragments {
            serde_json::to_writer(&mut buf, frag).expect("fragment serializes");
            buf.push(b'\n');
        }
        let mut file = fs::File::create(&index_path).map_err(|e| DbError::io(&index_path, e))?;
        file.write_all(&buf).map_err(|e| DbError::io(&index_path, e))?;

        Ok(Self::from_parts(root.to_path_buf(), sample_rate_hz, fragments))
    }
}

/// Free-function form of [`FragmentDb::load`].
pub fn load_db(root: impl AsRef<Path>) -> Result<FragmentDb, DbError> {
    FragmentDb::load(root)
}

/// Free-function form of [`FragmentDb::lookup`].
pub fn lookup<'a>(db: &'a FragmentDb, key: &PinyinSyllable) -> &'a [Fragment] {
    db.lookup(key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_schema_field_names() {
        let frag = Fragment {
            frag_id: "utt1-0000".into(),
            key: "jia1".parse().unwrap(),
            source_utt: "utt1".into(),
            source_char: '家',
            n_samples: 10,
            l2_norm: 0.5,
            path: "frag/jia1/utt1-0000.wav".into(),
        };
        let json = serde_json::to_string(&frag).unwrap();
        assert_eq!(
            json,
            r#"{"frag_id":"utt1-0000","key":"jia1","source_utt":"utt1","source_char":"家","n_samples":10,"l2_norm":0.5,"path":"frag/jia1/utt1-0000.wav"}"#
        );
        let back: Fragment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, frag);
    }

    #[test]
    fn load_rejects_missing_and_bad_files() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(FragmentDb::load(tmp.path()).unwrap_err(), DbError::Io { .. }));

        fs::write(tmp.path().join(META_FILE), r#"{"format_version":2,"sample_rate_hz":16000}"#)
            .unwrap();
        fs::write(tmp.path().join(INDEX_FILE), "").unwrap();
        assert!(matches!(
            FragmentDb::load(tmp.path()).unwrap_err(),
            DbError::Version { found: 2 }
        ));

        fs::write(tmp.path().join(META_FILE), r#"{"format_version":1,"sample_rate_hz":16000}"#)
            .unwrap();
        assert!(FragmentDb::load(tmp.path()).unwrap().is_empty());

        fs::write(tmp.path().join(INDEX_FILE), "{not json}\n").unwrap();
        assert!(matches!(
            FragmentDb::load(tmp.path()).unwrap_err(),
            DbError::CorruptIndex { line: 1, .. }
        ));

        let rec = r#"{"frag_id":"a","key":"jia1","source_utt":"u","source_char":"家","n_samples":3,"l2_norm":0.1,"path":"frag/jia1/a.wav"}"#;
        fs::write(tmp.path().join(INDEX_FILE), format!("{rec}\n{rec}\n")).unwrap();
        let err = FragmentDb::load(tmp.path()).unwrap_err();
        assert!(err.to_string().contains("duplicate frag_id"), "{err}");

        let bad_key = rec.replace("jia1\",\"source", "JIA\",\"source");
        fs::write(tmp.path().join(INDEX_FILE), bad_key).unwrap();
        assert!(FragmentDb::load(tmp.path()).is_err());
    }
}
