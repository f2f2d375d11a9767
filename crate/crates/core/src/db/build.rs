use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tracing::{debug, info};

use super::{fragment_path, DbError, Fragment, FragmentDb, DEFAULT_SAMPLE_RATE_HZ};
use crate::align::{check_overlaps, group_by_utterance, slice_fragment, AlignmentSegment, UtteranceAudioStore};
use crate::audio::{l2_norm, write_wav};
use crate::outdir::prepare_empty_dir;
use crate::parallel::with_pool;
use crate::pinyin::{CharPinyinTable, OnUnmapped, PinyinError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnMissingAudio {
    #[default]
    Error,
    Skip,
}

#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// `Error` aborts before writing anything; `Skip` and `SubstituteSilence`
    /// both drop the segment and count it.
    pub on_unmapped: OnUnmapped,
    pub on_missing_audio: OnMissingAudio,
    /// Worker threads; 0 uses all cores. Output does not depend on it.
    pub jobs: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            on_unmapped: OnUnmapped::Error,
            on_missing_audio: OnMissingAudio::Error,
            jobs: 0,
        }
    }
}

/// Counts from one build. `fragments_kept + silent_rejected +
/// unmapped_dropped + segments_missing_audio == segments_total`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub segments_total: usize,
    pub fragments_kept: usize,
    pub silent_rejected: usize,
    pub unmapped_dropped: usize,
    pub utterances_total: usize,
    pub utterances_missing: usize,
    pub segments_missing_audio: usize,
    pub distinct_keys: usize,
    /// Distinct unmapped characters, sorted.
    pub unmapped_chars: Vec<char>,
}

#[derive(Default)]
struct UttOutcome {
    fragments: Vec<Fragment>,
    silent: usize,
    unmapped: usize,
}

/// Slice every aligned character out of its utterance, key it by its primary
/// pinyin reading and write the database to `out` (which must be empty or
/// absent).
pub fn build_db(
    segments: &[AlignmentSegment],
    store: &UtteranceAudioStore,
    table: &CharPinyinTable,
    out: &Path,
    opts: &BuildOptions,
) -> Result<(FragmentDb, BuildReport), DbError> {
    prepare_empty_dir(out)?;
    check_overlaps(segments, |i| {
        let s = &segments[i];
        format!("segment {i}: {} +{}", s.start_sec, s.dur_sec)
    })?;

    let unmapped: BTreeSet<char> = segments
        .iter()
        .map(|s| s.ch)
        .filter(|&c| table.primary_reading(c).is_err())
        .collect();
    if opts.on_unmapped == OnUnmapped::Error && !unmapped.is_empty() {
        return Err(PinyinError::UnmappedInText(unmapped.into_iter().collect()).into());
    }

    let groups = group_by_utterance(segments);
    let mut report = BuildReport {
        segments_total: segments.len(),
        utterances_total: groups.len(),
        unmapped_chars: unmapped.into_iter().collect(),
        ..Default::default()
    };

    let mut work = Vec::with_capacity(groups.len());
    for (utt_id, indices) in &groups {
        if store.contains(utt_id) {
            work.push((*utt_id, indices.as_slice()));
            continue;
        }
        match opts.on_missing_audio {
            OnMissingAudio::Error => {
                return Err(crate::align::AlignError::MissingAudio {
                    utt_id: utt_id.to_string(),
                    path: store.path(utt_id).display().to_string(),
                }
                .into())
            }
            OnMissingAudio::Skip => {
                report.utterances_missing += 1;
                report.segments_missing_audio += indices.len();
            }
        }
    }

    // The first readable utterance fixes the database sample rate.
    let sample_rate_hz = match work.first() {
        Some((utt_id, _)) => store.load(utt_id)?.sample_rate_hz(),
        None => DEFAULT_SAMPLE_RATE_HZ,
    };

    let outcomes: Vec<Result<UttOutcome, DbError>> = with_pool(opts.jobs, || {
        work.par_iter()
            .map(|(utt_id, indices)| {
                build_utterance(utt_id, indices, segments, store, table, out, sample_rate_hz)
            })
            .collect()
    });

    let mut fragments = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        report.silent_rejected += outcome.silent;
        report.unmapped_dropped += outcome.unmapped;
        fragments.extend(outcome.fragments);
    }
    report.fragments_kept = fragments.len();

    let db = FragmentDb::persist(out, sample_rate_hz, fragments)?;
    report.distinct_keys = db.index().len();
    info!(
        kept = report.fragments_kept,
        keys = report.distinct_keys,
        silent = report.silent_rejected,
        unmapped = report.unmapped_dropped,
        "built fragment database"
    );
    Ok((db, report))
}

fn build_utterance(
    utt_id: &str,
    indices: &[usize],
    segments: &[AlignmentSegment],
    store: &UtteranceAudioStore,
    table: &CharPinyinTable,
    out: &Path,
    sample_rate_hz: u32,
) -> Result<UttOutcome, DbError> {
    let audio = store.load(utt_id)?;
    if audio.sample_rate_hz() != sample_rate_hz {
        return Err(DbError::RateMismatch {
            what: format!("utterance {utt_id}"),
            expected: sample_rate_hz,
            found: audio.sample_rate_hz(),
        });
    }

    let mut outcome = UttOutcome::default();
    for (position, &i) in indices.iter().enumerate() {
        let seg = &segments[i];
        let Ok(key) = table.primary_reading(seg.ch) else {
            outcome.unmapped += 1;
            continue;
        };
        let clip = slice_fragment(&audio, seg)?;
        let norm = l2_norm(&clip);
        if norm == 0.0 {
            debug!(utt_id, ch = %seg.ch, "rejecting silent fragment");
            outcome.silent += 1;
            continue;
        }

        let frag_id = format!("{utt_id}-{position:04}");
        let rel = fragment_path(key, &frag_id);
        let file = out.join(&rel);
        let parent = file.parent().expect("fragment path has a parent");
        fs::create_dir_all(parent).map_err(|e| DbError::io(parent, e))?;
        write_wav(&clip, &file).map_err(|source| DbError::Fragment {
            frag_id: frag_id.clone(),
            source,
        })?;

        outcome.fragments.push(Fragment {
            frag_id,
            key: key.clone(),
            source_utt: utt_id.to_string(),
            source_char: seg.ch,
            n_samples: clip.len(),
            l2_norm: norm,
            path: rel,
        });
    }
    Ok(outcome)
}
