use std::collections::BTreeMap;

use serde::Serialize;

use crate::db::FragmentDb;
use crate::pinyin::{is_cjk_ideograph, CharPinyinTable, PinyinSyllable, TextPolicy};

/// Examples kept per missing key.
const MAX_EXAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingKey {
    pub key: PinyinSyllable,
    /// Character occurrences across all texts that need this key.
    pub count: usize,
    /// Distinct characters needing it, first-seen order, at most five.
    pub example_chars: Vec<char>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnmappedChar {
    pub ch: char,
    pub count: usize,
}

/// Keys (and characters) the texts need that the database or table lacks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub texts_checked: usize,
    pub characters_checked: usize,
    /// Sorted by key.
    pub missing: Vec<MissingKey>,
    /// Characters with no table entry, sorted by character.
    pub unmapped: Vec<UnmappedChar>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.unmapped.is_empty()
    }
}

/// Never fails: every gap becomes a report entry. Unmapped characters are
/// reported whatever `policy.on_unmapped` says.
pub fn check_coverage<'a>(
    db: &FragmentDb,
    texts: impl IntoIterator<Item = &'a str>,
    table: &CharPinyinTable,
    policy: TextPolicy,
) -> CoverageReport {
    let mut report = CoverageReport::default();
    let mut missing: BTreeMap<PinyinSyllable, MissingKey> = BTreeMap::new();
    let mut unmapped: BTreeMap<char, usize> = BTreeMap::new();

    for text in texts {
        report.texts_checked += 1;
        for ch in text.chars() {
            if policy.strip_non_cjk && !is_cjk_ideograph(ch) {
                continue;
            }
            report.characters_checked += 1;
            let Ok(key) = table.primary_reading(ch) else {
                *unmapped.entry(ch).or_default() += 1;
                continue;
            };
            if db.contains_key(key) {
                continue;
            }
            let entry = missing.entry(key.clone()).or_insert_with(|| MissingKey {
                key: key.clone(),
                count: 0,
                example_chars: Vec::new(),
            });
            entry.count += 1;
            if entry.example_chars.len() < MAX_EXAMPLES && !entry.example_chars.contains(&ch) {
                entry.example_chars.push(ch);
            }
        }
    }

    report.missing = missing.into_values().collect();
    report.unmapped = unmapped
        .into_iter()
        .map(|(ch, count)| UnmappedChar { ch, count })
        .collect();
    report
}
