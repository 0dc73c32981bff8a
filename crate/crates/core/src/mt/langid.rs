//! Small character-trigram language detector for the eight in-scope languages.
//!
//! Text is first classed by script: kana means Japanese, other Han means
//! Chinese, Cyrillic means Russian. Latin-script text is matched against
//! trigram profiles by cosine similarity. Profiles are plain TSV files
//! (`trigram<TAB>count`) compiled into the binary.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use super::Lang;

/// Trigrams kept per language profile.
pub const PROFILE_SIZE: usize = 300;
/// Minimum cosine similarity for a Latin-script verdict.
pub const DEFAULT_MIN_SIMILARITY: f64 = 0.05;

const EMBEDDED: [(Lang, &str); 8] = [
    (Lang::En, include_str!("../../data/langid/en.tsv")),
    (Lang::Cs, include_str!("../../data/langid/cs.tsv")),
    (Lang::De, include_str!("../../data/langid/de.tsv")),
    (Lang::Zh, include_str!("../../data/langid/zh.tsv")),
    (Lang::Ru, include_str!("../../data/langid/ru.tsv")),
    (Lang::Ja, include_str!("../../data/langid/ja.tsv")),
    (Lang::Es, include_str!("../../data/langid/es.tsv")),
    (Lang::Tr, include_str!("../../data/langid/tr.tsv")),
];

/// Letter-run trigram counts. Each run of letters is lowercased and padded
/// with one space on each side.
pub fn trigram_counts(text: &str) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    let lower = text.to_lowercase();
    for word in lower.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once(' ').chain(word.chars()).chain(std::iter::once(' ')).collect();
        for w in padded.windows(3) {
            *counts.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sublinear count weight, so a handful of very common trigrams do not
/// decide short inputs on their own.
fn weight(count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        1.0 + (count as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    counts: BTreeMap<String, u64>,
    norm: f64,
}

impl Profile {
    fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let norm = counts.values().map(|&c| weight(c).powi(2)).sum::<f64>().sqrt();
        Self { counts, norm }
    }

    /// Profile of `text`, optionally truncated to the `top` most frequent
    /// trigrams (ties broken by trigram order).
    pub fn from_text(text: &str, top: Option<usize>) -> Self {
        let counts = trigram_counts(text);
        match top {
            Some(k) if counts.len() > k => {
                let mut ranked: Vec<_> = counts.into_iter().collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                ranked.truncate(k);
                Self::from_counts(ranked.into_iter().collect())
            }
            _ => Self::from_counts(counts),
        }
    }

    pub fn parse_tsv(text: &str) -> Result<Self, String> {
        let mut counts = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (gram, count) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected trigram<TAB>count", n + 1))?;
            let count: u64 = count.parse().map_err(|e| format!("line {}: {e}", n + 1))?;
            counts.insert(gram.to_string(), count);
        }
        Ok(Self::from_counts(counts))
    }

    /// Most frequent first, ties in trigram order.
    pub fn to_tsv(&self) -> String {
        let mut ranked: Vec<_> = self.counts.iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        ranked.into_iter().map(|(g, c)| format!("{g}\t{c}\n")).collect()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn cosine(&self, other: &Profile) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let dot: f64 = small
            .counts
            .iter()
            .filter_map(|(g, &a)| large.counts.get(g).map(|&b| weight(a) * weight(b)))
            .sum();
        (dot / (self.norm * other.norm)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// `None` means unknown.
    pub lang: Option<Lang>,
    pub confidence: f64,
}

impl Detection {
    pub const UNKNOWN: Detection = Detection {
        lang: None,
        confidence: 0.0,
    };
}

#[derive(Debug, Default, Clone, Copy)]
struct ScriptCounts {
    han: usize,
    kana: usize,
    cyrillic: usize,
    latin: usize,
    other: usize,
}

impl ScriptCounts {
    fn of(text: &str) -> Self {
        let mut s = Self::default();
        for c in text.chars().filter(|c| c.is_alphabetic()) {
            match c as u32 {
                0x3040..=0x30FF | 0x31F0..=0x31FF | 0xFF66..=0xFF9F => s.kana += 1,
                0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F => s.han += 1,
                0x0400..=0x052F => s.cyrillic += 1,
                0x0041..=0x024F | 0x1E00..=0x1EFF => s.latin += 1,
                _ => s.other += 1,
            }
        }
        s
    }

    fn letters(&self) -> usize {
        self.han + self.kana + self.cyrillic + self.latin + self.other
    }
}

#[derive(Debug, Clone)]
pub struct LanguageDetector {
    profiles: Vec<(Lang, Profile)>,
    pub min_similarity: f64,
}

impl LanguageDetector {
    pub fn new(profiles: Vec<(Lang, Profile)>, min_similarity: f64) -> Self {
        Self {
            profiles,
            min_similarity,
        }
    }

    /// Detector over the shipped profiles.
    pub fn embedded() -> Self {
        let profiles = EMBEDDED
            .iter()
            .map(|(lang, tsv)| (*lang, Profile::parse_tsv(tsv).expect("embedded profile is well formed")))
            .collect();
        Self::new(profiles, DEFAULT_MIN_SIMILARITY)
    }

    /// Cosine similarity of `text` against every profile.
    pub fn similarities(&self, text: &str) -> Vec<(Lang, f64)> {
        let p = Profile::from_text(text, None);
        self.profiles.iter().map(|(l, prof)| (*l, p.cosine(prof))).collect()
    }

    pub fn detect(&self, text: &str) -> Detection {
        let scripts = ScriptCounts::of(text);
        let letters = scripts.letters();
        if letters == 0 {
            return Detection::UNKNOWN;
        }
        let share = |n: usize| n as f64 / letters as f64;
        let cjk = scripts.han + scripts.kana;
        let top = *[cjk, scripts.cyrillic, scripts.latin, scripts.other].iter().max().unwrap_or(&0);
        if top == scripts.other && scripts.other > 0 && cjk < top && scripts.cyrillic < top && scripts.latin < top {
            return Detection::UNKNOWN;
        }
        if cjk == top && cjk > 0 {
            let lang = if scripts.kana > 0 { Lang::Ja } else { Lang::Zh };
            return Detection {
                lang: Some(lang),
                confidence: share(cjk),
            };
        }
        if scripts.cyrillic == top {
            return Detection {
                lang: Some(Lang::Ru),
                confidence: share(scripts.cyrillic),
            };
        }
        let best = self
            .similarities(text)
            .into_iter()
            .filter(|(l, _)| l.is_latin_script())
            .fold(None::<(Lang, f64)>, |acc, (l, s)| match acc {
                Some((_, b)) if b >= s => acc,
                _ => Some((l, s)),
            });
        match best {
            Some((lang, sim)) if sim >= self.min_similarity => Detection {
                lang: Some(lang),
                confidence: sim,
            },
            Some((_, sim)) => Detection {
                lang: None,
                confidence: sim,
            },
            None => Detection::UNKNOWN,
        }
    }
}

/// Shared detector over the embedded profiles.
pub fn default_detector() -> &'static LanguageDetector {
    static DETECTOR: OnceLock<LanguageDetector> = OnceLock::new();
    DETECTOR.get_or_init(LanguageDetector::embedded)
}

pub fn detect_language(text: &str) -> Detection {
    default_detector().detect(text)
}

/// Sample texts the shipped profiles are built from.
pub const SAMPLES: [(Lang, &str); 8] = [
    (Lang::En, include_str!("../../data/langid/samples/en.txt")),
    (Lang::Cs, include_str!("../../data/langid/samples/cs.txt")),
    (Lang::De, include_str!("../../data/langid/samples/de.txt")),
    (Lang::Zh, include_str!("../../data/langid/samples/zh.txt")),
    (Lang::Ru, include_str!("../../data/langid/samples/ru.txt")),
    (Lang::Ja, include_str!("../../data/langid/samples/ja.txt")),
    (Lang::Es, include_str!("../../data/langid/samples/es.txt")),
    (Lang::Tr, include_str!("../../data/langid/samples/tr.txt")),
];

/// Rebuild every profile from its sample text.
pub fn build_profiles() -> HashMap<Lang, Profile> {
    SAMPLES
        .iter()
        .map(|(lang, text)| (*lang, Profile::from_text(text, Some(PROFILE_SIZE))))
        .collect()
}
