//! Prompt templates and single-pass placeholder substitution.

use std::collections::BTreeMap;

use crate::corpus::Sentence;
use crate::extract::{Category, Evidence, VmweCandidate};

use super::LlmError;

pub const CLASSIFY_LVC: &str = include_str!("../../data/templates/classify_lvc.txt");
pub const CLASSIFY_VPC: &str = include_str!("../../data/templates/classify_vpc.txt");
pub const CLASSIFY_VID: &str = include_str!("../../data/templates/classify_vid.txt");
pub const PARAPHRASE_LVC: &str = include_str!("../../data/templates/paraphrase_lvc.txt");
pub const PARAPHRASE_VPC: &str = include_str!("../../data/templates/paraphrase_vpc.txt");
pub const PARAPHRASE_VID: &str = include_str!("../../data/templates/paraphrase_vid.txt");

/// Names recognised inside `{...}`; any other braced text is literal.
pub const PLACEHOLDERS: [&str; 5] = ["sentence", "verb_lemma", "noun_lemma", "particle", "candidate"];

pub fn classification_template(category: Category) -> &'static str {
    match category {
        Category::Lvc => CLASSIFY_LVC,
        Category::Vpc => CLASSIFY_VPC,
        Category::Vid => CLASSIFY_VID,
    }
}

pub fn paraphrase_template(category: Category) -> &'static str {
    match category {
        Category::Lvc => PARAPHRASE_LVC,
        Category::Vpc => PARAPHRASE_VPC,
        Category::Vid => PARAPHRASE_VID,
    }
}

/// Substitute placeholders in one left-to-right pass. Substituted values are
/// never rescanned, so a sentence containing `{candidate}` stays as typed.
pub fn render(template: &str, values: &BTreeMap<&str, String>) -> Result<String, LlmError> {
    let mut out = String::with_capacity(template.len() + 128);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name = after.find('}').map(|close| &after[..close]);
        match name {
            Some(name) if PLACEHOLDERS.contains(&name) => {
                let value = values
                    .get(name)
                    .ok_or_else(|| LlmError::MissingPlaceholder(name.to_string()))?;
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Placeholder values available for a candidate in its sentence.
pub fn placeholder_values(c: &VmweCandidate, s: &Sentence) -> Result<BTreeMap<&'static str, String>, LlmError> {
    if c.sentence_id != s.id {
        return Err(LlmError::SentenceMismatch {
            candidate: c.id(),
            sentence: s.id.clone(),
        });
    }
    let lemma = |i: usize| {
        s.token(i)
            .map(|t| t.lemma.clone())
            .ok_or_else(|| LlmError::MissingPlaceholder(format!("token {i} of {}", s.id)))
    };
    let mut values = BTreeMap::new();
    values.insert("sentence", s.text.clone());
    let candidate = s.span_text(&c.span);
    if !candidate.is_empty() {
        values.insert("candidate", candidate);
    }
    match &c.evidence {
        Evidence::Vpc {
            verb_index,
            particle_index,
        } => {
            values.insert("verb_lemma", lemma(*verb_index)?);
            values.insert("particle", lemma(*particle_index)?);
        }
        Evidence::Lvc { verb_index, noun_index } => {
            values.insert("verb_lemma", lemma(*verb_index)?);
            values.insert("noun_lemma", lemma(*noun_index)?);
        }
        Evidence::Vid { .. } => {}
    }
    Ok(values)
}

fn check_category(category: Category, c: &VmweCandidate) -> Result<(), LlmError> {
    if c.category != category {
        return Err(LlmError::CategoryMismatch {
            expected: category,
            found: c.category,
        });
    }
    Ok(())
}

pub fn render_classification_prompt(category: Category, c: &VmweCandidate, s: &Sentence) -> Result<String, LlmError> {
    check_category(category, c)?;
    render(classification_template(category), &placeholder_values(c, s)?)
}

pub fn render_paraphrase_prompt(category: Category, c: &VmweCandidate, s: &Sentence) -> Result<String, LlmError> {
    check_category(category, c)?;
    render(paraphrase_template(category), &placeholder_values(c, s)?)
}
