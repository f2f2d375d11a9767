//! Pseudo-speech synthesis from text.
//!
//! For each labelled character the pinyin key is looked up, one fragment is
//! drawn uniformly from that key's list, the utterance's fragments are
//! rescaled to their mean L2 norm and the results are spliced in order.

mod coverage;
mod job;
mod manifest;
mod rng;

pub use coverage::{check_coverage, CoverageReport, MissingKey, UnmappedChar};
pub use job::{run_job, JobReport, OnMissingKey, SynthesisJob, MANIFEST_FILE, REPORT_FILE, WAV_DIR};
pub use manifest::{parse_manifest, read_manifest, write_manifest, ManifestEntry, ManifestError};
pub use rng::{stream_seed, SelectionRng};

use thiserror::Error;

use crate::audio::{concatenate, gap_samples, normalize_energy, AudioClip, AudioError, WavError};
use crate::db::{DbError, Fragment, FragmentDb};
use crate::outdir::OutDirError;
use crate::pinyin::{text_to_keys, CharPinyinTable, PinyinError, PinyinSyllable, TextKeys, TextPolicy};

/// Length of the pause spliced in for a character under
/// [`OnUnmapped::SubstituteSilence`](crate::pinyin::OnUnmapped::SubstituteSilence).
pub const SUBSTITUTE_SILENCE_MS: f64 = 200.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("nothing to synthesize: no labelled characters remain after the text policy")]
    NothingToSynthesize,
    #[error("pinyin key {0} has no fragments in the database")]
    MissingKey(PinyinSyllable),
    #[error("fragment {frag_id} is silent; the database is corrupt (run validate)")]
    SilentFragment { frag_id: String },
    #[error("fragment {frag_id} has {found} samples but the index records {expected}")]
    FragmentLength {
        frag_id: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("preflight failed, nothing was written:\n  {}", .0.join("\n  "))]
    Preflight(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pinyin(#[from] PinyinError),
    #[error(transparent)]
    Db(#[from] DbError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    OutDir(#[from] OutDirError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

/// One generated output.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoUtterance {
    /// `<utt_id>-v<k>` when produced by [`run_job`].
    pub out_id: String,
    pub clip: AudioClip,
    /// Characters actually voiced, one per entry of `fragment_trace`.
    pub transcript: String,
    pub fragment_trace: Vec<String>,
}

/// Draw one fragment per key, uniformly and independently.
pub fn select_fragments<'a>(
    db: &'a FragmentDb,
    keys: impl IntoIterator<Item = &'a PinyinSyllable>,
    rng: &mut SelectionRng,
) -> Result<Vec<&'a Fragment>, SynthError> {
    keys.into_iter()
        .map(|key| {
            let list = db.lookup(key);
            if list.is_empty() {
                return Err(SynthError::MissingKey(key.clone()));
            }
            Ok(&list[rng.below(list.len())])
        })
        .collect()
}

/// Synthesize one utterance from already-resolved keys.
pub fn synthesize_keys(
    db: &FragmentDb,
    out_id: &str,
    keys: &TextKeys,
    rng: &mut SelectionRng,
    gap_ms: f64,
) -> Result<PseudoUtterance, SynthError> {
    if keys.is_empty() {
        return Err(SynthError::NothingToSynthesize);
    }
    let rate = db.sample_rate_hz();
    // Validate before any decoding work.
    gap_samples(gap_ms, rate)?;

    let fragments = select_fragments(db, keys.keys(), rng)?;
    let mut clips = Vec::with_capacity(fragments.len());
    for frag in &fragments {
        let clip = db.load_clip(frag)?;
        if clip.len() != frag.n_samples {
            return Err(SynthError::FragmentLength {
                frag_id: frag.frag_id.clone(),
                expected: frag.n_samples,
                found: clip.len(),
            });
        }
        clips.push(clip);
    }

    let normalized = normalize_energy(&clips).map_err(|e| match e {
        AudioError::SilentFragment { index } => SynthError::SilentFragment {
            frag_id: fragments[index].frag_id.clone(),
        },
        other => other.into(),
    })?;

    let pieces = if keys.pauses.is_empty() {
        normalized.clips
    } else {
        let pause = AudioClip::silence(gap_samples(SUBSTITUTE_SILENCE_MS, rate)?, rate)?;
        let mut pieces = Vec::with_capacity(normalized.clips.len() + keys.pauses.len());
        let mut pauses = keys.pauses.iter().peekable();
        for (i, clip) in normalized.clips.into_iter().enumerate() {
            while pauses.next_if(|&&p| p == i).is_some() {
                pieces.push(pause.clone());
            }
            pieces.push(clip);
        }
        pieces.extend(pauses.map(|_| pause.clone()));
        pieces
    };

    Ok(PseudoUtterance {
        out_id: out_id.to_string(),
        clip: concatenate(&pieces, gap_ms)?,
        transcript: keys.transcript(),
        fragment_trace: fragments.iter().map(|f| f.frag_id.clone()).collect(),
    })
}

/// Resolve `text` through `table` and synthesize it.
pub fn synthesize_one(
    db: &FragmentDb,
    out_id: &str,
    text: &str,
    table: &CharPinyinTable,
    rng: &mut SelectionRng,
    gap_ms: f64,
    policy: TextPolicy,
) -> Result<PseudoUtterance, SynthError> {
    let keys = text_to_keys(table, text, policy)?;
    synthesize_keys(db, out_id, &keys, rng, gap_ms)
}
