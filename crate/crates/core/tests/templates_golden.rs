//! Rendered prompts must be byte-identical to the golden files.

use std::fs::{self, File};
use std::io::BufReader;

use vmwe_core::corpus::{parse_conllu, Corpus};
use vmwe_core::extract::{Category, Extractor, VmweCandidate};
use vmwe_core::lexicon::{default_verb_lemmas, light_verb_set, load_idiom_lexicon, LightVerbVariant};
use vmwe_core::llm::{classification_request, paraphrase_request, render_classification_prompt, render_paraphrase_prompt, LlmError};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

fn setup() -> (Corpus, Extractor) {
    let corpus = parse_conllu(BufReader::new(File::open(format!("{FIXTURES}/corpus.conllu")).unwrap()), "f").unwrap();
    let lex = load_idiom_lexicon(
        BufReader::new(File::open(format!("{FIXTURES}/idioms.txt")).unwrap()),
        &default_verb_lemmas(),
        "idioms",
    )
    .unwrap();
    (corpus, Extractor::new(lex, light_verb_set(LightVerbVariant::DatasetSix)))
}

fn candidate(corpus: &Corpus, ex: &Extractor, sid: &str, cat: Category) -> VmweCandidate {
    ex.candidates(corpus.get(sid).unwrap(), &[cat]).unwrap().remove(0)
}

fn golden(name: &str) -> String {
    fs::read_to_string(format!("{FIXTURES}/golden/prompts/{name}.txt")).unwrap()
}

const CASES: [(Category, &str, &str); 3] = [
    (Category::Vid, "s10", "vid"),
    (Category::Vpc, "s03", "vpc"),
    (Category::Lvc, "s05", "lvc"),
];

#[test]
fn classification_prompts_match_golden() {
    let (corpus, ex) = setup();
    for (cat, sid, slug) in CASES {
        let c = candidate(&corpus, &ex, sid, cat);
        let s = corpus.get(sid).unwrap();
        let rendered = render_classification_prompt(cat, &c, s).unwrap();
        assert_eq!(rendered, golden(&format!("classify_{slug}")), "classify {slug}");
    }
}

#[test]
fn paraphrase_prompts_match_golden() {
    let (corpus, ex) = setup();
    for (cat, sid, slug) in CASES {
        let c = candidate(&corpus, &ex, sid, cat);
        let s = corpus.get(sid).unwrap();
        let rendered = render_paraphrase_prompt(cat, &c, s).unwrap();
        assert_eq!(rendered, golden(&format!("paraphrase_{slug}")), "paraphrase {slug}");
    }
}

#[test]
fn requests_carry_rendered_prompt_and_sampling() {
    let (corpus, ex) = setup();
    let c = candidate(&corpus, &ex, "s05", Category::Lvc);
    let s = corpus.get("s05").unwrap();
    let r = classification_request("m", Category::Lvc, &c, s).unwrap();
    assert_eq!(r.messages.len(), 1);
    assert_eq!(r.messages[0].content, golden("classify_lvc"));
    assert_eq!((r.temperature, r.top_p), (0.0, 1.0));
    assert_eq!(r.key.as_deref(), Some("classify:s05:lvc:2-4"));
    let p = paraphrase_request("m", &c, s).unwrap();
    assert_eq!(p.messages[0].content, golden("paraphrase_lvc"));
    assert_eq!((p.temperature, p.top_p), (0.9, 0.9));
    // identical inputs give an identical request hash
    assert_eq!(r.hash(), classification_request("m", Category::Lvc, &c, s).unwrap().hash());
    assert_ne!(r.hash(), p.hash());
}

#[test]
fn wrong_category_template_is_rejected() {
    let (corpus, ex) = setup();
    let c = candidate(&corpus, &ex, "s05", Category::Lvc);
    let s = corpus.get("s05").unwrap();
    assert!(matches!(
        render_classification_prompt(Category::Vpc, &c, s),
        Err(LlmError::CategoryMismatch { .. })
    ));
}

#[test]
fn candidate_from_other_sentence_is_rejected() {
    let (corpus, ex) = setup();
    let c = candidate(&corpus, &ex, "s05", Category::Lvc);
    let other = corpus.get("s06").unwrap();
    assert!(matches!(
        render_classification_prompt(Category::Lvc, &c, other),
        Err(LlmError::SentenceMismatch { .. })
    ));
}
