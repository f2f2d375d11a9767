//! Pseudo-speech generation for Mandarin ASR data augmentation.
//!
//! Two stages:
//!
//! 1. **Database build.** Forced-alignment output slices real recordings into
//!    character-length fragments. Each fragment is filed under the
//!    tone-numbered pinyin of its character, so every character sharing a
//!    reading shares the pool of recordings ([`db::build_db`]).
//! 2. **Synthesis.** For a line of text, each character's reading selects a
//!    pool and one fragment is drawn at random. The fragments are rescaled to
//!    a common L2 norm (their mean) and spliced, giving an audio file whose
//!    transcript is exactly the voiced characters ([`synth::run_job`]).
//!
//! ```
//! use camp::audio::{normalize_energy, AudioClip};
//!
//! let loud = AudioClip::new(vec![0.6, 0.8], 16_000)?;
//! let quiet = AudioClip::new(vec![0.3, 0.4], 16_000)?;
//! let out = normalize_energy(&[loud, quiet])?;
//! assert!((out.target_energy - 0.75).abs() < 1e-12);
//! # Ok::<(), camp::audio::AudioError>(())
//! ```
//!
//! The guide in `book/` walks through the whole pipeline.

pub mod align;
pub mod audio;
pub mod db;
pub mod demo;
pub mod pinyin;
pub mod synth;

mod outdir;
mod parallel;

pub use outdir::{clear_dir, prepare_empty_dir, OutDirError};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/audio.md")]
    mod audio {}
    #[doc = include_str!("../../../book/src/pinyin.md")]
    mod pinyin {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/database.md")]
    mod database {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
