//! Pulling verdicts and rewrites out of free-form model output.

use crate::extract::Category;

use super::LlmError;

pub const FINAL_ANSWER_MARKER: &str = "final answer";
pub const REPHRASED_MARKER: &str = "rephrased sentence:";

/// Allowed choices per category, in canonical spelling.
pub fn answer_alphabet(category: Category) -> &'static [&'static str] {
    match category {
        Category::Lvc => &["A", "B", "C", "D", "E", "F"],
        Category::Vpc => &["A", "B", "C", "D"],
        Category::Vid => &["Yes", "No"],
    }
}

/// The choice that means "this is a VMWE of the category".
pub fn positive_choice(category: Category) -> &'static str {
    match category {
        Category::Lvc => "C",
        Category::Vpc => "D",
        Category::Vid => "Yes",
    }
}

pub fn verdict_for(category: Category, choice: &str) -> bool {
    choice == positive_choice(category)
}

/// Byte offset just past the last case-insensitive occurrence of `marker`.
fn after_last(haystack: &str, marker: &str) -> Option<usize> {
    // ASCII lowercasing keeps byte offsets aligned with the original.
    haystack
        .to_ascii_lowercase()
        .rfind(marker)
        .map(|i| i + marker.len())
}

/// `(verdict, canonical choice)` from the last "Final Answer" in `response`.
pub fn parse_final_answer(response: &str, category: Category) -> Result<(bool, String), LlmError> {
    let start = after_last(response, FINAL_ANSWER_MARKER)
        .ok_or_else(|| LlmError::Unparseable("no final answer marker".into()))?;
    let line = response[start..].lines().next().unwrap_or("");
    let token = line
        .split(|c: char| c.is_whitespace() || c == ':')
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .find(|w| !w.is_empty())
        .ok_or_else(|| LlmError::Unparseable("final answer has no choice".into()))?;
    let choice = answer_alphabet(category)
        .iter()
        .find(|a| a.eq_ignore_ascii_case(token))
        .ok_or_else(|| LlmError::Unparseable(format!("{token:?} is not a {category} choice")))?;
    Ok((verdict_for(category, choice), choice.to_string()))
}

/// Text after the last "Rephrased Sentence:" up to the end of that line.
pub fn parse_rephrased(response: &str) -> Result<String, LlmError> {
    let start = after_last(response, REPHRASED_MARKER)
        .ok_or_else(|| LlmError::Unparseable("no rephrased sentence marker".into()))?;
    let text = response[start..].lines().next().unwrap_or("").trim();
    if text.is_empty() {
        return Err(LlmError::Unparseable("empty rephrased sentence".into()));
    }
    Ok(text.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lvc_choice_c_is_positive() {
        let (v, c) = parse_final_answer("The noun is predicative... Final Answer: C", Category::Lvc).unwrap();
        assert!(v);
        assert_eq!(c, "C");
    }

    #[test]
    fn bracketed_no_for_vid() {
        let (v, c) = parse_final_answer("Final Answer: [No]", Category::Vid).unwrap();
        assert!(!v);
        assert_eq!(c, "No");
    }

    #[test]
    fn last_occurrence_wins() {
        let (v, c) = parse_final_answer("Final Answer: A\nthinking again\nFinal Answer: D", Category::Vpc).unwrap();
        assert!(v);
        assert_eq!(c, "D");
    }

    #[test]
    fn markup_and_case_are_tolerated() {
        assert_eq!(parse_final_answer("**FINAL ANSWER:** **yes**.", Category::Vid).unwrap().1, "Yes");
        assert_eq!(parse_final_answer("final answer - c: all tests pass", Category::Lvc).unwrap().1, "C");
    }

    #[test]
    fn rejects_choices_outside_the_alphabet() {
        assert!(parse_final_answer("Final Answer: E", Category::Vpc).is_err());
        assert!(parse_final_answer("Final Answer: Maybe", Category::Vid).is_err());
        assert!(parse_final_answer("Final Answer: [Choice]", Category::Lvc).is_err());
        assert!(parse_final_answer("Final Answer:", Category::Lvc).is_err());
        assert!(parse_final_answer("The answer is C", Category::Lvc).is_err());
    }

    #[test]
    fn rephrased_takes_last_marker_to_end_of_line() {
        let r = "Rephrased Sentence: [Sentence without VMWE]\n...\nRephrased Sentence: She smiled before walking away.\nDone.";
        assert_eq!(parse_rephrased(r).unwrap(), "She smiled before walking away.");
        assert!(parse_rephrased("no marker here").is_err());
        assert!(parse_rephrased("Rephrased Sentence:   \nnext").is_err());
    }
}
