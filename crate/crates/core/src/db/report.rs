use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{fragment_path, DbError, Fragment, FragmentDb};
use crate::audio::l2_norm;

/// Width of one fragment-duration histogram bin.
pub const HISTOGRAM_BIN_MS: u32 = 50;

/// Relative tolerance between a cached and a recomputed L2 norm.
pub const NORM_REL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower_ms: u32,
    pub upper_ms: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub sample_rate_hz: u32,
    pub distinct_keys: usize,
    pub total_fragments: usize,
    pub min_fragments_per_key: usize,
    pub median_fragments_per_key: f64,
    pub max_fragments_per_key: usize,
    pub total_duration_sec: f64,
    /// Contiguous 50 ms bins from 0 up to the longest fragment.
    pub duration_histogram: Vec<HistogramBin>,
    pub fragments_per_key: BTreeMap<String, usize>,
}

pub fn db_stats(db: &FragmentDb) -> StatsReport {
    let mut counts: Vec<usize> = db.index().values().map(Vec::len).collect();
    counts.sort_unstable();
    let median = match counts.len() {
        0 => 0.0,
        n if n % 2 == 1 => counts[n / 2] as f64,
        n => (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0,
    };

    let rate = f64::from(db.sample_rate_hz());
    let total_samples: usize = db.fragments().map(|f| f.n_samples).sum();

    let mut bins: Vec<usize> = Vec::new();
    for frag in db.fragments() {
        let ms = frag.n_samples as f64 * 1000.0 / rate;
        let bin = (ms / f64::from(HISTOGRAM_BIN_MS)).floor() as usize;
        if bins.len() <= bin {
            bins.resize(bin + 1, 0);
        }
        bins[bin] += 1;
    }
    let duration_histogram = bins
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower_ms: i as u32 * HISTOGRAM_BIN_MS,
            upper_ms: (i as u32 + 1) * HISTOGRAM_BIN_MS,
            count,
        })
        .collect();

    StatsReport {
        sample_rate_hz: db.sample_rate_hz(),
        distinct_keys: counts.len(),
        total_fragments: counts.iter().sum(),
        min_fragments_per_key: counts.first().copied().unwrap_or(0),
        median_fragments_per_key: median,
        max_fragments_per_key: counts.last().copied().unwrap_or(0),
        total_duration_sec: total_samples as f64 / rate,
        duration_histogram,
        fragments_per_key: db
            .index()
            .iter()
            .map(|(k, v)| (k.to_string(), v.len()))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationFailure {
    pub frag_id: String,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    /// One entry per failing fragment, in index order.
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_fragment(db: &FragmentDb, frag: &Fragment) -> Vec<String> {
    let mut reasons = Vec::new();
    let canonical = fragment_path(&frag.key, &frag.frag_id);
    if frag.path != canonical {
        reasons.push(format!("path {} is not the canonical {canonical}", frag.path));
    }
    let clip = match db.load_clip(frag) {
        Ok(clip) => clip,
        Err(DbError::Fragment { source, .. }) => {
            reasons.push(format!("unreadable: {source}"));
            return reasons;
        }
        Err(other) => {
            reasons.push(format!("unreadable: {other}"));
            return reasons;
        }
    };
    if clip.sample_rate_hz() != db.sample_rate_hz() {
        reasons.push(format!(
            "sample rate {} Hz, database is {} Hz",
            clip.sample_rate_hz(),
            db.sample_rate_hz()
        ));
    }
    if clip.len() != frag.n_samples {
        reasons.push(format!(
            "n_samples mismatch: index says {}, file has {}",
            frag.n_samples,
            clip.len()
        ));
    }
    let norm = l2_norm(&clip);
    if (norm - frag.l2_norm).abs() > NORM_REL_TOLERANCE * frag.l2_norm.abs().max(norm) {
        reasons.push(format!(
            "l2_norm mismatch: index says {}, recomputed {norm}",
            frag.l2_norm
        ));
    }
    reasons
}

/// Check every fragment against its audio file. Never fails; problems are
/// report entries.
pub fn validate_db(db: &FragmentDb) -> ValidationReport {
    let fragments: Vec<&Fragment> = db.fragments().collect();
    let failures = fragments
        .par_iter()
        .filter_map(|frag| {
            let reasons = check_fragment(db, frag);
            (!reasons.is_empty()).then(|| ValidationFailure {
                frag_id: frag.frag_id.clone(),
                reasons,
            })
        })
        .collect();
    ValidationReport {
        checked: fragments.len(),
        failures,
    }
}
