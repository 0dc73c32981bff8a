//! Rule-based VMWE candidate extraction and control-set construction.
//!
//! Verbal idioms are found by sliding windows over sentence lemmas and scoring
//! each window with sentence BLEU-4 against the idiom's canonical lemmas.
//! Verb-particle and light verb candidates come straight off the dependency
//! arcs. All three extractors are recall-oriented; disambiguation happens
//! later in [`crate::llm`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Sentence, Token};
use crate::lexicon::{IdiomEntry, IdiomLexicon, LightVerbSet};
use crate::stats::bleu4;

/// Relations that mark a verb particle (`prt` in the older tagset,
/// `compound:prt` in Universal Dependencies).
pub const PARTICLE_RELATIONS: [&str; 2] = ["prt", "compound:prt"];
pub const OBJECT_RELATIONS: [&str; 2] = ["obj", "dobj"];
/// Extra window length allowed beyond the idiom length.
pub const MAX_INSERTIONS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("sentence {0} has no dependency annotation")]
    NoDependencies(String),
    #[error("idiom threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Vid,
    Vpc,
    Lvc,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Vid, Category::Vpc, Category::Lvc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Vid => "VID",
            Self::Vpc => "VPC",
            Self::Lvc => "LVC",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "vid" => Ok(Self::Vid),
            "vpc" => Ok(Self::Vpc),
            "lvc" => Ok(Self::Lvc),
            _ => Err(ExtractError::UnknownCategory(s.to_string())),
        }
    }
}

/// BLEU-4 acceptance threshold for idiom windows, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(value: f64) -> Result<Self, ExtractError> {
        if value > 0.0 && value <= 1.0 {
            Ok(Self(value))
        } else {
            Err(ExtractError::InvalidThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self(0.6)
    }
}

impl TryFrom<f64> for Threshold {
    type Error = ExtractError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Evidence {
    Vid { idiom: IdiomEntry },
    Vpc { verb_index: usize, particle_index: usize },
    Lvc { verb_index: usize, noun_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmweCandidate {
    pub sentence_id: String,
    pub category: Category,
    /// Sorted 1-based token indices.
    pub span: Vec<usize>,
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_score: Option<f64>,
}

impl VmweCandidate {
    /// Stable identifier: `<sentence>:<category>:<first>-<last>`.
    pub fn id(&self) -> String {
        let first = self.span.first().copied().unwrap_or(0);
        let last = self.span.last().copied().unwrap_or(0);
        format!("{}:{}:{}-{}", self.sentence_id, self.category.as_str().to_lowercase(), first, last)
    }

    pub fn verb_index(&self) -> Option<usize> {
        match self.evidence {
            Evidence::Vpc { verb_index, .. } | Evidence::Lvc { verb_index, .. } => Some(verb_index),
            Evidence::Vid { .. } => None,
        }
    }
}

fn match_form(t: &Token) -> String {
    let lemma = if t.lemma.is_empty() || t.lemma == "_" {
        &t.surface
    } else {
        &t.lemma
    };
    lemma.to_lowercase().replace('\u{2019}', "'")
}

/// Best BLEU-4 window per idiom, kept when it reaches `threshold`.
///
/// Windows span `len(idiom) ..= len(idiom) + 2` tokens. A token is compared
/// by its lowercased surface when that surface is one of the idiom's words,
/// otherwise by its lemma. Ties go to the
/// shorter, then earlier, window. Output is sorted by span start.
pub fn match_idioms(s: &Sentence, lex: &IdiomLexicon, threshold: Threshold) -> Vec<VmweCandidate> {
    let lemmas: Vec<String> = s.tokens.iter().map(match_form).collect();
    let surfaces: Vec<String> = s
        .tokens
        .iter()
        .map(|t| t.surface.to_lowercase().replace('\u{2019}', "'"))
        .collect();
    let n = lemmas.len();
    let mut out = Vec::new();

    for idiom in &lex.entries {
        let words: HashSet<&str> = idiom.canonical.iter().map(String::as_str).collect();
        // idiom lists are not lemmatized, so a surface that is itself an idiom
        // word ("beans") is matched as is; anything else by its lemma
        let forms: Vec<&str> = (0..n)
            .map(|i| {
                if words.contains(surfaces[i].as_str()) {
                    surfaces[i].as_str()
                } else {
                    lemmas[i].as_str()
                }
            })
            .collect();
        // no shared unigram means BLEU is exactly zero everywhere
        if !forms.iter().any(|f| words.contains(f)) {
            continue;
        }
        let canonical: Vec<&str> = idiom.canonical.iter().map(String::as_str).collect();
        let k = idiom.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for len in k..=k + MAX_INSERTIONS {
            if len > n {
                break;
            }
            for start in 0..=n - len {
                let score: f64 = bleu4(&forms[start..start + len], &canonical)
                    .expect("windows and idioms are non-empty");
                if best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, start, len));
                }
            }
        }
        if let Some((score, start, len)) = best {
            if score >= threshold.value() {
                out.push(VmweCandidate {
                    sentence_id: s.id.clone(),
                    category: Category::Vid,
                    span: (start + 1..=start + len).collect(),
                    evidence: Evidence::Vid { idiom: idiom.clone() },
                    match_score: Some(score),
                });
            }
        }
    }
    out.sort_by_key(|c| c.span[0]);
    out
}

fn require_dependencies(s: &Sentence) -> Result<(), ExtractError> {
    if s.has_dependencies() {
        Ok(())
    } else {
        Err(ExtractError::NoDependencies(s.id.clone()))
    }
}

fn pair_span(a: usize, b: usize) -> Vec<usize> {
    vec![a.min(b), a.max(b)]
}

/// One candidate per particle-relation token whose head is a VERB.
pub fn extract_vpc(s: &Sentence, allowlist: Option<&HashSet<String>>) -> Result<Vec<VmweCandidate>, ExtractError> {
    require_dependencies(s)?;
    let mut out = Vec::new();
    for t in &s.tokens {
        let Some(rel) = t.deprel.as_deref() else { continue };
        if !PARTICLE_RELATIONS.contains(&rel) {
            continue;
        }
        let Some(verb) = t.head.and_then(|h| s.token(h)) else { continue };
        if verb.upos != "VERB" {
            continue;
        }
        if let Some(allowed) = allowlist {
            if !allowed.contains(&t.surface.to_lowercase()) {
                continue;
            }
        }
        out.push(VmweCandidate {
            sentence_id: s.id.clone(),
            category: Category::Vpc,
            span: pair_span(verb.index, t.index),
            evidence: Evidence::Vpc {
                verb_index: verb.index,
                particle_index: t.index,
            },
            match_score: None,
        });
    }
    Ok(out)
}

/// One candidate per NOUN object of a light VERB.
pub fn extract_lvc(s: &Sentence, lv: &LightVerbSet) -> Result<Vec<VmweCandidate>, ExtractError> {
    require_dependencies(s)?;
    let mut out = Vec::new();
    for noun in &s.tokens {
        if noun.upos != "NOUN" {
            continue;
        }
        let Some(rel) = noun.deprel.as_deref() else { continue };
        if !OBJECT_RELATIONS.contains(&rel) {
            continue;
        }
        let Some(verb) = noun.head.and_then(|h| s.token(h)) else { continue };
        if verb.upos != "VERB" || !lv.contains(&match_form(verb)) {
            continue;
        }
        out.push(VmweCandidate {
            sentence_id: s.id.clone(),
            category: Category::Lvc,
            span: pair_span(verb.index, noun.index),
            evidence: Evidence::Lvc {
                verb_index: verb.index,
                noun_index: noun.index,
            },
            match_score: None,
        });
    }
    Ok(out)
}

/// Everything needed to run all three extractors.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub idioms: IdiomLexicon,
    pub light_verbs: LightVerbSet,
    pub threshold: Threshold,
    pub particle_allowlist: Option<HashSet<String>>,
}

/// Seeded control sample; `short` is set when fewer sentences qualified than requested.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    pub sentences: Vec<Sentence>,
    pub requested: usize,
    pub short: bool,
}

impl Extractor {
    pub fn new(idioms: IdiomLexicon, light_verbs: LightVerbSet) -> Self {
        Self {
            idioms,
            light_verbs,
            threshold: Threshold::default(),
            particle_allowlist: None,
        }
    }

    pub fn with_threshold(mut self, threshold: Threshold) -> Self {
        self.threshold = threshold;
        self
    }

    /// All candidates for the requested categories, VID then VPC then LVC.
    pub fn candidates(&self, s: &Sentence, categories: &[Category]) -> Result<Vec<VmweCandidate>, ExtractError> {
        let mut out = Vec::new();
        for category in Category::ALL {
            if !categories.contains(&category) {
                continue;
            }
            match category {
                Category::Vid => out.extend(match_idioms(s, &self.idioms, self.threshold)),
                Category::Vpc => out.extend(extract_vpc(s, self.particle_allowlist.as_ref())?),
                Category::Lvc => out.extend(extract_lvc(s, &self.light_verbs)?),
            }
        }
        Ok(out)
    }

    /// True iff no extractor fires on the sentence.
    pub fn is_non_vmwe(&self, s: &Sentence) -> Result<bool, ExtractError> {
        require_dependencies(s)?;
        Ok(match_idioms(s, &self.idioms, self.threshold).is_empty()
            && extract_vpc(s, None)?.is_empty()
            && extract_lvc(s, &self.light_verbs)?.is_empty())
    }

    /// Uniform sample without replacement from the VMWE-free sentences,
    /// returned in corpus order.
    pub fn sample_non_vmwe(&self, corpus: &Corpus, n: usize, seed: u64) -> Result<ControlSample, ExtractError> {
        let mut clean = Vec::new();
        for s in &corpus.sentences {
            if self.is_non_vmwe(s)? {
                clean.push(s);
            }
        }
        if clean.len() <= n {
            let short = clean.len() < n;
            if short {
                log::warn!("only {} VMWE-free sentences available, {} requested", clean.len(), n);
            }
            return Ok(ControlSample {
                sentences: clean.into_iter().cloned().collect(),
                requested: n,
                short,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, clean.len(), n).into_vec();
        picked.sort_unstable();
        Ok(ControlSample {
            sentences: picked.into_iter().map(|i| clean[i].clone()).collect(),
            requested: n,
            short: false,
        })
    }
}

pub fn is_non_vmwe(
    s: &Sentence,
    lex: &IdiomLexicon,
    lv: &LightVerbSet,
    threshold: Threshold,
) -> Result<bool, ExtractError> {
    Extractor::new(lex.clone(), lv.clone()).with_threshold(threshold).is_non_vmwe(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{light_verb_set, LightVerbVariant};

    fn sent(id: &str, rows: &[(&str, &str, &str, usize, &str)]) -> Sentence {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (form, lemma, upos, head, rel))| Token::parsed(i + 1, *form, *lemma, *upos, *head, *rel))
            .collect();
        Sentence::from_tokens(id, tokens)
    }

    fn lexicon(lines: &[&[&str]]) -> IdiomLexicon {
        IdiomLexicon::new(
            "t",
            lines.iter().map(|l| IdiomEntry {
                canonical: l.iter().map(|s| s.to_string()).collect(),
                surface_form: l.join(" "),
                contains_verb: true,
            }),
        )
    }

    fn give_up() -> Sentence {
        sent(
            "g",
            &[
                ("She", "she", "PRON", 2, "nsubj"),
                ("gave", "give", "VERB", 0, "root"),
                ("up", "up", "ADP", 2, "prt"),
                (".", ".", "PUNCT", 2, "punct"),
            ],
        )
    }

    #[test]
    fn exact_idiom_scores_one() {
        let s = sent(
            "s",
            &[
                ("He", "he", "PRON", 2, "nsubj"),
                ("spilled", "spill", "VERB", 0, "root"),
                ("the", "the", "DET", 4, "det"),
                ("beans", "bean", "NOUN", 2, "obj"),
            ],
        );
        // lemma "bean" differs from the idiom's "beans": not an exact match
        let lex = lexicon(&[&["spill", "the", "bean"]]);
        let got = match_idioms(&s, &lex, Threshold::default());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].match_score, Some(1.0));
        assert_eq!(got[0].span, [2, 3, 4]);
    }

    #[test]
    fn no_overlap_no_candidates() {
        let lex = lexicon(&[&["kick", "the", "bucket"]]);
        assert!(match_idioms(&give_up(), &lex, Threshold::default()).is_empty());
    }

    #[test]
    fn threshold_bounds() {
        assert!(Threshold::new(0.0).is_err());
        assert!(Threshold::new(1.0).is_ok());
        assert!(Threshold::new(1.01).is_err());
        assert_eq!(Threshold::default().value(), 0.6);
    }

    #[test]
    fn give_up_is_a_vpc() {
        let got = extract_vpc(&give_up(), None).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(
            got[0].evidence,
            Evidence::Vpc {
                verb_index: 2,
                particle_index: 3
            }
        );
        assert_eq!(got[0].id(), "g:vpc:2-3");
    }

    #[test]
    fn allowlist_filters_particles() {
        let only_off: HashSet<String> = ["off".to_string()].into();
        assert!(extract_vpc(&give_up(), Some(&only_off)).unwrap().is_empty());
    }

    #[test]
    fn preposition_is_not_a_particle() {
        let s = sent(
            "c",
            &[
                ("climbed", "climb", "VERB", 0, "root"),
                ("up", "up", "ADP", 4, "case"),
                ("the", "the", "DET", 4, "det"),
                ("hill", "hill", "NOUN", 1, "obl"),
            ],
        );
        assert!(extract_vpc(&s, None).unwrap().is_empty());
    }

    #[test]
    fn take_a_walk_and_take_the_bus() {
        let lv = light_verb_set(LightVerbVariant::DatasetSix);
        for noun in ["walk", "bus"] {
            let s = sent(
                noun,
                &[
                    ("He", "he", "PRON", 2, "nsubj"),
                    ("took", "take", "VERB", 0, "root"),
                    ("a", "a", "DET", 4, "det"),
                    (noun, noun, "NOUN", 2, "obj"),
                ],
            );
            let got = extract_lvc(&s, &lv).unwrap();
            assert_eq!(got.len(), 1);
            assert_eq!(
                got[0].evidence,
                Evidence::Lvc {
                    verb_index: 2,
                    noun_index: 4
                }
            );
            assert_eq!(got[0].span, [2, 4]);
        }
    }

    #[test]
    fn passive_without_object_is_not_lvc() {
        let s = sent(
            "p",
            &[
                ("have", "have", "AUX", 3, "aux"),
                ("been", "be", "AUX", 3, "aux:pass"),
                ("seen", "see", "VERB", 0, "root"),
            ],
        );
        let lv = light_verb_set(LightVerbVariant::WmtTen);
        assert!(extract_lvc(&s, &lv).unwrap().is_empty());
    }

    #[test]
    fn plain_sentences_are_rejected() {
        let s = Sentence::from_tokens("x", vec![Token::plain(1, "hi")]);
        assert_eq!(extract_vpc(&s, None), Err(ExtractError::NoDependencies("x".into())));
        let lv = light_verb_set(LightVerbVariant::WmtTen);
        assert!(extract_lvc(&s, &lv).is_err());
    }

    #[test]
    fn non_vmwe_definition() {
        let lv = light_verb_set(LightVerbVariant::DatasetSix);
        let lex = lexicon(&[&["kick", "the", "bucket"]]);
        assert!(!is_non_vmwe(&give_up(), &lex, &lv, Threshold::default()).unwrap());
        let clean = sent("k", &[("It", "it", "PRON", 2, "nsubj"), ("rained", "rain", "VERB", 0, "root")]);
        assert!(is_non_vmwe(&clean, &lex, &lv, Threshold::default()).unwrap());
    }

    #[test]
    fn candidate_json_shape() {
        let c = &extract_vpc(&give_up(), None).unwrap()[0];
        let json = serde_json::to_string(c).unwrap();
        assert_eq!(
            json,
            r#"{"sentence_id":"g","category":"VPC","span":[2,3],"evidence":{"type":"vpc","verb_index":2,"particle_index":3}}"#
        );
        let back: VmweCandidate = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, c);
    }
}
