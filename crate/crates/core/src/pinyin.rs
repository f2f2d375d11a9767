//! Character to pinyin resolution.
//!
//! Keys are tone-numbered ASCII syllables (`jia1`, `lv4`, `ma5`); each tone is
//! a distinct key. Polyphonic characters always resolve to their first listed
//! reading, which tables must order by frequency.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PinyinError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pinyin table starts with a byte-order mark")]
    Bom,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate entry for {ch:?} (first seen on line {first_line})")]
    DuplicateChar {
        line: usize,
        ch: char,
        first_line: usize,
    },
    #[error("line {line}: {ch:?} (U+{:04X}) is not a CJK unified ideograph", *ch as u32)]
    NonCjk { line: usize, ch: char },
    #[error("unmapped character {ch:?} (U+{:04X})", *ch as u32)]
    Unmapped { ch: char },
    #[error("unmapped characters in text: {}", format_chars(.0))]
    UnmappedInText(Vec<char>),
}

fn format_chars(chars: &[char]) -> String {
    chars
        .iter()
        .map(|c| format!("{c:?} (U+{:04X})", *c as u32))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid pinyin syllable {token:?}: {reason}")]
pub struct SyllableError {
    pub token: String,
    pub reason: &'static str,
}

/// Tone-numbered pinyin syllable. Tone 5 is the neutral tone; `v` spells ü.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PinyinSyllable {
    base: String,
    tone: u8,
}

impl PinyinSyllable {
    pub fn new(base: impl Into<String>, tone: u8) -> Result<Self, SyllableError> {
        let base = base.into();
        if base.is_empty() || !base.bytes().all(|b| b.is_ascii_lowercase()) {
            return Err(SyllableError {
                token: format!("{base}{tone}"),
                reason: "base must be non-empty lowercase ASCII letters",
            });
        }
        if !(1..=5).contains(&tone) {
            return Err(SyllableError {
                token: format!("{base}{tone}"),
                reason: "tone must be 1..=5",
            });
        }
        Ok(Self { base, tone })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn tone(&self) -> u8 {
        self.tone
    }

    /// Parse either numbered (`jia1`) or tone-marked (`jiā`, `lǜ`) spelling.
    /// Marked spellings without a tone mark are read as neutral tone.
    pub fn parse_lenient(token: &str) -> Result<Self, SyllableError> {
        if token.is_ascii() {
            return token.parse();
        }
        let err = |reason| SyllableError {
            token: token.to_string(),
            reason,
        };
        let mut base = String::with_capacity(token.len());
        let mut tone = None;
        for ch in token.chars() {
            let (letter, mark) = match ch {
                'a'..='z' => (ch, None),
                'ü' => ('v', None),
                _ => strip_tone_mark(ch).ok_or_else(|| err("unexpected character"))?,
            };
            if let Some(t) = mark {
                if tone.replace(t).is_some() {
                    return Err(err("more than one tone mark"));
                }
            }
            base.push(letter);
        }
        Self::new(base, tone.unwrap_or(5)).map_err(|e| err(e.reason))
    }
}

fn strip_tone_mark(ch: char) -> Option<(char, Option<u8>)> {
    const MARKED: [(char, [char; 4]); 6] = [
        ('a', ['ā', 'á', 'ǎ', 'à']),
        ('e', ['ē', 'é', 'ě', 'è']),
        ('i', ['ī', 'í', 'ǐ', 'ì']),
        ('o', ['ō', 'ó', 'ǒ', 'ò']),
        ('u', ['ū', 'ú', 'ǔ', 'ù']),
        ('v', ['ǖ', 'ǘ', 'ǚ', 'ǜ']),
    ];
    MARKED.iter().find_map(|(letter, marks)| {
        marks
            .iter()
            .position(|&m| m == ch)
            .map(|i| (*letter, Some(i as u8 + 1)))
    })
}

impl FromStr for PinyinSyllable {
    type Err = SyllableError;

    /// Strict form: `[a-z]+[1-5]`.
    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let err = |reason| SyllableError {
            token: token.to_string(),
            reason,
        };
        let (base, tone) = match token.as_bytes() {
            [base @ .., t] if !base.is_empty() => (base, *t),
            _ => return Err(err("expected letters followed by a tone digit")),
        };
        if !base.iter().all(u8::is_ascii_lowercase) {
            return Err(err("base must be lowercase ASCII letters"));
        }
        if !(b'1'..=b'5').contains(&tone) {
            return Err(err("tone digit must be 1..=5"));
        }
        Ok(Self {
            base: String::from_utf8(base.to_vec()).expect("ascii"),
            tone: tone - b'0',
        })
    }
}

impl fmt::Display for PinyinSyllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.base, self.tone)
    }
}

impl Serialize for PinyinSyllable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PinyinSyllable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// True for code points in the CJK Unified Ideographs block and its
/// extensions A through I.
pub fn is_cjk_ideograph(ch: char) -> bool {
    matches!(ch as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EE5F
        | 0x30000..=0x323AF)
}

/// Character to readings map; the first reading is the most common one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CharPinyinTable {
    entries: HashMap<char, Vec<PinyinSyllable>>,
}

const BUNDLED_TABLE: &str = include_str!("../data/pinyin_mini.tsv");

impl CharPinyinTable {
    /// The small table shipped with the crate (about fifty common characters).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled pinyin table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PinyinError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PinyinError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parse TSV rows of `<char>\t<reading>,<reading>...`. `#` lines and blank
    /// lines are ignored.
    pub fn parse(text: &str) -> Result<Self, PinyinError> {
        if text.starts_with('\u{feff}') {
            return Err(PinyinError::Bom);
        }
        let mut entries = HashMap::new();
        let mut first_seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let row = raw.trim_end_matches('\r');
            if row.trim().is_empty() || row.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| PinyinError::Parse { line, message };
            let (key, readings) = row
                .split_once('\t')
                .ok_or_else(|| parse_err("expected <char>\\t<readings>".into()))?;
            let mut chars = key.chars();
            let ch = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(parse_err(format!("key {key:?} is not a single character"))),
            };
            if !is_cjk_ideograph(ch) {
                return Err(PinyinError::NonCjk { line, ch });
            }
            let list = readings
                .split(',')
                .map(|tok| PinyinSyllable::parse_lenient(tok.trim()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(e.to_string()))?;
            if let Some(&first_line) = first_seen.get(&ch) {
                return Err(PinyinError::DuplicateChar {
                    line,
                    ch,
                    first_line,
                });
            }
            first_seen.insert(ch, line);
            entries.insert(ch, list);
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All readings of `ch`, most common first.
    pub fn readings(&self, ch: char) -> Option<&[PinyinSyllable]> {
        self.entries.get(&ch).map(Vec::as_slice)
    }

    pub fn primary_reading(&self, ch: char) -> Result<&PinyinSyllable, PinyinError> {
        self.entries
            .get(&ch)
            .and_then(|list| list.first())
            .ok_or(PinyinError::Unmapped { ch })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnUnmapped {
    #[default]
    Error,
    Skip,
    /// Drop the character from the label and put a pause in the audio.
    SubstituteSilence,
}

impl FromStr for OnUnmapped {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "error" => Ok(Self::Error),
            "skip" => Ok(Self::Skip),
            "silence" | "substitute-silence" => Ok(Self::SubstituteSilence),
            other => Err(format!(
                "unknown unmapped-character policy {other:?} (expected error, skip or silence)"
            )),
        }
    }
}

/// How text characters without a table entry are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextPolicy {
    pub on_unmapped: OnUnmapped,
    /// Drop punctuation, digits, Latin letters and whitespace before lookup.
    pub strip_non_cjk: bool,
}

impl TextPolicy {
    /// Policy used while building a database: any unmapped character fails.
    pub const BUILD: TextPolicy = TextPolicy {
        on_unmapped: OnUnmapped::Error,
        strip_non_cjk: true,
    };

    /// Policy used for synthesis: unmapped characters are skipped.
    pub const SYNTH: TextPolicy = TextPolicy {
        on_unmapped: OnUnmapped::Skip,
        strip_non_cjk: true,
    };
}

impl Default for TextPolicy {
    fn default() -> Self {
        Self::SYNTH
    }
}

/// Result of resolving a text: the labelled characters with their keys, plus
/// any pause positions introduced by [`OnUnmapped::SubstituteSilence`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextKeys {
    pub labeled: Vec<(char, PinyinSyllable)>,
    /// Each entry is the number of labelled characters preceding a pause.
    pub pauses: Vec<usize>,
}

impl TextKeys {
    pub fn transcript(&self) -> String {
        self.labeled.iter().map(|(c, _)| *c).collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &PinyinSyllable> {
        self.labeled.iter().map(|(_, k)| k)
    }

    pub fn is_empty(&self) -> bool {
        self.labeled.is_empty()
    }
}

pub fn text_to_keys(
    table: &CharPinyinTable,
    text: &str,
    policy: TextPolicy,
) -> Result<TextKeys, PinyinError> {
    let mut out = TextKeys::default();
    let mut unmapped = Vec::new();
    for ch in text.chars() {
        if policy.strip_non_cjk && !is_cjk_ideograph(ch) {
            continue;
        }
        match table.primary_reading(ch) {
            Ok(key) => out.labeled.push((ch, key.clone())),
            Err(_) => match policy.on_unmapped {
                OnUnmapped::Error => {
                    if !unmapped.contains(&ch) {
                        unmapped.push(ch);
                    }
                }
                OnUnmapped::Skip => {}
                OnUnmapped::SubstituteSilence => out.pauses.push(out.labeled.len()),
            },
        }
    }
    if !unmapped.is_empty() {
        return Err(PinyinError::UnmappedInText(unmapped));
    }
    Ok(out)
}
