//! Sentence model and corpus readers (CoNLL-U, plain text, JSON Lines).

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sentence {id}: {message}")]
    InvalidSentence { id: String, message: String },
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// One token; `head` and `deprel` are absent for text without a parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    pub head: Option<usize>,
    pub deprel: Option<String>,
}

impl Token {
    /// Token without dependency information; lemma is the lowercased surface.
    pub fn plain(index: usize, surface: impl Into<String>) -> Self {
        let surface = surface.into();
        Self {
            index,
            lemma: surface.to_lowercase(),
            surface,
            upos: "_".into(),
            head: None,
            deprel: None,
        }
    }

    pub fn parsed(
        index: usize,
        surface: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Self {
            index,
            surface: surface.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            head: Some(head),
            deprel: Some(deprel.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Build a sentence whose text is the detokenized token sequence.
    pub fn from_tokens(id: impl Into<String>, tokens: Vec<Token>) -> Self {
        let text = sentence_text(&tokens);
        Self {
            id: id.into(),
            text,
            tokens,
        }
    }

    pub fn has_dependencies(&self) -> bool {
        !self.tokens.is_empty() && self.tokens.iter().all(|t| t.head.is_some())
    }

    /// Token at a 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn lemmas(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.lemma.as_str()).collect()
    }

    /// Surface text of the contiguous stretch covering `span` (1-based, sorted).
    pub fn span_text(&self, span: &[usize]) -> String {
        match (span.iter().min(), span.iter().max()) {
            (Some(&lo), Some(&hi)) if lo >= 1 && hi <= self.tokens.len() => {
                sentence_text(&self.tokens[lo - 1..hi])
            }
            _ => String::new(),
        }
    }

    /// Check the structural invariants of a dependency-annotated sentence.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::InvalidSentence {
            id: self.id.clone(),
            message,
        };
        let n = self.tokens.len();
        let mut roots = 0;
        for (pos, t) in self.tokens.iter().enumerate() {
            if t.index != pos + 1 {
                return Err(invalid(format!(
                    "token indices not contiguous: expected {}, found {}",
                    pos + 1,
                    t.index
                )));
            }
            let Some(head) = t.head else { continue };
            if head == t.index {
                return Err(invalid(format!("token {} is its own head", t.index)));
            }
            if head > n {
                return Err(invalid(format!("token {} has head {head} beyond sentence end", t.index)));
            }
            if head == 0 {
                roots += 1;
            } else if t.deprel.as_deref().is_none_or(|d| d.is_empty() || d == "_") {
                return Err(invalid(format!("token {} has a head but no relation", t.index)));
            }
        }
        if self.has_dependencies() && roots != 1 {
            return Err(invalid(format!("expected exactly one root, found {roots}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub source_label: String,
    pub sentences: Vec<Sentence>,
    pub has_dependencies: bool,
}

impl Corpus {
    pub fn new(source_label: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        let has_dependencies = sentences.iter().all(Sentence::has_dependencies);
        Ok(Self {
            source_label: source_label.into(),
            sentences,
            has_dependencies,
        })
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

const CONLLU_COLUMNS: usize = 10;

/// Read CoNLL-U. Multiword-token ranges and empty nodes are skipped; only
/// id, form, lemma, upos, head and deprel are kept.
pub fn parse_conllu(reader: impl BufRead, source_label: &str) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut started = false;

    let mut flush = |tokens: &mut Vec<Token>, sent_id: &mut Option<String>, started: &mut bool| {
        if !*started {
            return Ok(());
        }
        *started = false;
        // comment-only blocks (e.g. `# newdoc`) carry no sentence
        if tokens.is_empty() {
            sent_id.take();
            return Ok(());
        }
        let id = sent_id.take().unwrap_or_else(|| format!("s{}", sentences.len() + 1));
        let sentence = Sentence::from_tokens(id, std::mem::take(tokens));
        sentence.validate()?;
        sentences.push(sentence);
        Ok::<(), CorpusError>(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_id, &mut started)?;
            continue;
        }
        started = true;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        if let Some(token) = parse_token_line(line, lineno)? {
            tokens.push(token);
        }
    }
    flush(&mut tokens, &mut sent_id, &mut started)?;

    let mut corpus = Corpus::new(source_label, sentences)?;
    corpus.has_dependencies = true;
    Ok(corpus)
}

fn parse_token_line(line: &str, lineno: usize) -> Result<Option<Token>, CorpusError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != CONLLU_COLUMNS {
        return Err(CorpusError::Parse {
            line: lineno,
            message: format!("expected {CONLLU_COLUMNS} tab-separated columns, found {}", cols.len()),
        });
    }
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let index: usize = cols[0].parse().map_err(|_| CorpusError::Parse {
        line: lineno,
        message: format!("non-integer token id {:?}", cols[0]),
    })?;
    let head: usize = cols[6].parse().map_err(|_| CorpusError::Parse {
        line: lineno,
        message: format!("non-integer head {:?}", cols[6]),
    })?;
    if index == 0 {
        return Err(CorpusError::Parse {
            line: lineno,
            message: "token ids start at 1".into(),
        });
    }
    Ok(Some(Token::parsed(index, cols[1], cols[2], cols[3], head, cols[7])))
}

/// Write the retained columns back out as CoNLL-U.
pub fn write_conllu(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for s in &corpus.sentences {
        writeln!(out, "# sent_id = {}", s.id)?;
        writeln!(out, "# text = {}", s.text)?;
        for t in &s.tokens {
            let head = t.head.map_or_else(|| "_".to_string(), |h| h.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t_",
                t.index,
                t.surface,
                t.lemma,
                t.upos,
                head,
                t.deprel.as_deref().unwrap_or("_")
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One sentence per line; blank lines are skipped and the sentence id is the
/// 1-based line number. The text field keeps the line as written.
pub fn load_plain(reader: impl BufRead, source_label: &str) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let tokens = tokenize_plain(text)
            .into_iter()
            .enumerate()
            .map(|(i, surface)| Token::plain(i + 1, surface))
            .collect();
        sentences.push(Sentence {
            id: (lineno + 1).to_string(),
            text: text.to_string(),
            tokens,
        });
    }
    let mut corpus = Corpus::new(source_label, sentences)?;
    corpus.has_dependencies = false;
    Ok(corpus)
}

/// Whitespace split, then leading/trailing ASCII punctuation peeled off one
/// character at a time. Apostrophes attached to letters stay (`'s`, `dogs'`).
pub fn tokenize_plain(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut lo = 0;
        let mut hi = chars.len();
        let mut leading = Vec::new();
        let mut trailing = Vec::new();
        while lo < hi && chars[lo].is_ascii_punctuation() {
            if chars[lo] == '\'' && lo + 1 < hi && chars[lo + 1].is_alphabetic() {
                break;
            }
            leading.push(chars[lo].to_string());
            lo += 1;
        }
        while hi > lo && chars[hi - 1].is_ascii_punctuation() {
            if chars[hi - 1] == '\'' && hi - 1 > lo && chars[hi - 2].is_alphabetic() {
                break;
            }
            trailing.push(chars[hi - 1].to_string());
            hi -= 1;
        }
        out.extend(leading);
        if lo < hi {
            out.push(chars[lo..hi].iter().collect());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

fn is_closing(surface: &str) -> bool {
    !surface.is_empty()
        && surface
            .chars()
            .all(|c| matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']' | '}' | '%'))
}

/// Detokenize: a single space between tokens, none before closing ASCII
/// punctuation. Other spacing (`He 's`, `‘ Warm ’`) is kept as tokenized.
pub fn sentence_text(tokens: &[Token]) -> String {
    let mut text = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 && !is_closing(&t.surface) {
            text.push(' ');
        }
        text.push_str(&t.surface);
    }
    text
}

/// Corpus as JSON Lines, one sentence object per line.
pub fn write_jsonl(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for s in &corpus.sentences {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(reader: impl BufRead, source_label: &str) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: Sentence =
            serde_json::from_str(&line).map_err(|source| CorpusError::Json { line: lineno + 1, source })?;
        sentence.validate()?;
        sentences.push(sentence);
    }
    Corpus::new(source_label, sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(s: &Sentence) -> Vec<&str> {
        s.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    const HE_LEFT: &str = "# sent_id = a1\n1\tHe\the\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n2\tleft\tleave\tVERB\tVBD\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn minimal_conllu() {
        let c = parse_conllu(HE_LEFT.as_bytes(), "t").unwrap();
        assert!(c.has_dependencies);
        assert_eq!(c.len(), 1);
        let s = &c.sentences[0];
        assert_eq!(s.id, "a1");
        assert_eq!(s.tokens.len(), 2);
        assert_eq!(s.tokens[1].lemma, "leave");
        assert_eq!(s.tokens[0].head, Some(2));
        assert_eq!(s.text, "He left");
    }

    #[test]
    fn nine_columns_names_the_line() {
        let doc = "# sent_id = x\n1\tHe\the\tPRON\t_\t_\t2\tnsubj\t_\n";
        match parse_conllu(doc.as_bytes(), "t") {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_head() {
        let doc = "1\tHe\the\tPRON\t_\t_\tX\tnsubj\t_\t_\n";
        assert!(matches!(
            parse_conllu(doc.as_bytes(), "t"),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn ranges_and_empty_nodes_are_skipped() {
        let doc = "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n1\tdo\tdo\tAUX\t_\t_\t0\troot\t_\t_\n2\tn't\tnot\tPART\t_\t_\t1\tadvmod\t_\t_\n2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n";
        let c = parse_conllu(doc.as_bytes(), "t").unwrap();
        assert_eq!(surfaces(&c.sentences[0]), ["do", "n't"]);
        assert_eq!(c.sentences[0].id, "s1");
    }

    #[test]
    fn two_roots_rejected() {
        let doc = "1\tA\ta\tX\t_\t_\t0\troot\t_\t_\n2\tB\tb\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(
            parse_conllu(doc.as_bytes(), "t"),
            Err(CorpusError::InvalidSentence { .. })
        ));
    }

    #[test]
    fn conllu_round_trip() {
        let c = parse_conllu(HE_LEFT.as_bytes(), "t").unwrap();
        let mut buf = Vec::new();
        write_conllu(&c, &mut buf).unwrap();
        let again = parse_conllu(buf.as_slice(), "t").unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn plain_hello_world() {
        let c = load_plain("Hello world.\n".as_bytes(), "p").unwrap();
        assert!(!c.has_dependencies);
        assert_eq!(surfaces(&c.sentences[0]), ["Hello", "world", "."]);
        assert_eq!(c.sentences[0].tokens[0].lemma, "hello");
    }

    #[test]
    fn plain_skips_blank_lines() {
        let c = load_plain("a\n\nb\n   \nc\n".as_bytes(), "p").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(
            c.sentences.iter().map(|s| s.id.as_str()).collect::<Vec<_>>(),
            ["1", "3", "5"]
        );
    }

    #[test]
    fn plain_empty_stream() {
        assert!(load_plain("".as_bytes(), "p").unwrap().is_empty());
    }

    #[test]
    fn plain_keeps_cjk_text() {
        let line = "我们今天去公园散步。";
        let c = load_plain(format!("{line}\n").as_bytes(), "p").unwrap();
        assert_eq!(c.sentences[0].text.as_bytes(), line.as_bytes());
    }

    #[test]
    fn tokenizer_edges() {
        assert_eq!(tokenize_plain("(hi)."), ["(", "hi", ")", "."]);
        assert_eq!(tokenize_plain("He 's dead"), ["He", "'s", "dead"]);
        assert_eq!(tokenize_plain("don't stop..."), ["don't", "stop", ".", ".", "."]);
    }

    #[test]
    fn detokenize() {
        let toks = |xs: &[&str]| xs.iter().enumerate().map(|(i, s)| Token::plain(i + 1, *s)).collect::<Vec<_>>();
        assert_eq!(sentence_text(&toks(&["He", "left", "."])), "He left.");
        assert_eq!(sentence_text(&toks(&["‘", "Warm", "’"])), "‘ Warm ’");
        assert_eq!(sentence_text(&toks(&["He", "'s", "dead"])), "He 's dead");
        assert_eq!(sentence_text(&[]), "");
    }

    #[test]
    fn jsonl_round_trip() {
        let c = parse_conllu(HE_LEFT.as_bytes(), "t").unwrap();
        let mut buf = Vec::new();
        write_jsonl(&c, &mut buf).unwrap();
        let line = std::str::from_utf8(&buf).unwrap();
        assert!(line.starts_with("{\"id\":\"a1\",\"text\":\"He left\",\"tokens\":[{\"index\":1,"));
        assert_eq!(read_jsonl(buf.as_slice(), "t").unwrap(), c);
    }

    #[test]
    fn span_text_covers_gaps() {
        let s = Sentence::from_tokens(
            "x",
            ["He", "took", "a", "walk", "."]
                .iter()
                .enumerate()
                .map(|(i, w)| Token::plain(i + 1, *w))
                .collect(),
        );
        assert_eq!(s.span_text(&[2, 4]), "took a walk");
        assert_eq!(s.span_text(&[]), "");
    }
}
