//! LLM-driven disambiguation and literal paraphrasing.
//!
//! Classification runs deterministically (temperature 0, top-p 1); paraphrasing
//! samples with temperature 0.9 and top-p 0.9.

pub mod parse;
pub mod templates;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backend::{with_retry, BackendError, ChatBackend};
use crate::corpus::Sentence;
use crate::extract::{Category, VmweCandidate};

pub use parse::{answer_alphabet, parse_final_answer, parse_rephrased, positive_choice, verdict_for};
pub use templates::{render_classification_prompt, render_paraphrase_prompt};

pub const CLASSIFY_TEMPERATURE: f64 = 0.0;
pub const CLASSIFY_TOP_P: f64 = 1.0;
pub const PARAPHRASE_TEMPERATURE: f64 = 0.9;
pub const PARAPHRASE_TOP_P: f64 = 0.9;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no value for placeholder {{{0}}}")]
    MissingPlaceholder(String),
    #[error("template for {expected} used with a {found} candidate")]
    CategoryMismatch { expected: Category, found: Category },
    #[error("candidate {candidate} does not belong to sentence {sentence}")]
    SentenceMismatch { candidate: String, sentence: String },
    #[error("unparseable response: {0}")]
    Unparseable(String),
    #[error("invalid chat request: {0}")]
    InvalidRequest(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    /// Lookup key for scripted backends; never sent over the wire.
    #[serde(skip)]
    pub key: Option<String>,
}

impl ChatRequest {
    /// Single user-message request.
    pub fn user(model_id: impl Into<String>, content: impl Into<String>, temperature: f64, top_p: f64) -> Self {
        Self {
            model_id: model_id.into(),
            messages: vec![ChatMessage {
                role: Role::User,
                content: content.into(),
            }],
            temperature,
            top_p,
            key: None,
        }
    }

    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }

    /// Hex SHA-256 of the serialized message list.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.messages).expect("messages serialize");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(LlmError::InvalidRequest("no user message"));
        }
        if !(self.temperature >= 0.0 && self.top_p >= 0.0) {
            return Err(LlmError::InvalidRequest("negative sampling parameter"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Decided,
    /// The response had no recognisable final answer.
    Undecided,
    /// The backend failed after retrying.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub candidate_ref: String,
    pub category: Category,
    pub status: Decision,
    /// Present only when `status` is `decided`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_choice: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ClassificationResult {
    pub fn failed(c: &VmweCandidate, error: &LlmError) -> Self {
        Self {
            candidate_ref: c.id(),
            category: c.category,
            status: Decision::Failed,
            verdict: None,
            raw_choice: None,
            raw_response: None,
            error: Some(error.to_string()),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.status == Decision::Decided && self.verdict == Some(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseResult {
    pub sentence_id: String,
    pub candidate_ref: String,
    pub original: String,
    pub paraphrased: String,
    pub raw_response: String,
    /// The rewrite still contains the candidate span verbatim.
    pub retains_phrase: bool,
}

pub fn classification_request(model_id: &str, category: Category, c: &VmweCandidate, s: &Sentence) -> Result<ChatRequest, LlmError> {
    let prompt = render_classification_prompt(category, c, s)?;
    Ok(ChatRequest::user(model_id, prompt, CLASSIFY_TEMPERATURE, CLASSIFY_TOP_P).with_key(format!("classify:{}", c.id())))
}

pub fn paraphrase_request(model_id: &str, c: &VmweCandidate, s: &Sentence) -> Result<ChatRequest, LlmError> {
    let prompt = render_paraphrase_prompt(c.category, c, s)?;
    Ok(ChatRequest::user(model_id, prompt, PARAPHRASE_TEMPERATURE, PARAPHRASE_TOP_P).with_key(format!("paraphrase:{}", c.id())))
}

/// Render, send and parse. Backend failures are errors; an unparseable reply
/// is kept as an `undecided` result.
pub fn classify_candidate(
    client: &dyn ChatBackend,
    category: Category,
    c: &VmweCandidate,
    s: &Sentence,
) -> Result<ClassificationResult, LlmError> {
    let request = classification_request(client.model_id(), category, c, s)?;
    request.validate()?;
    let response = with_retry(|| client.complete(&request))?;
    let mut result = ClassificationResult {
        candidate_ref: c.id(),
        category,
        status: Decision::Decided,
        verdict: None,
        raw_choice: None,
        raw_response: None,
        error: None,
    };
    match parse_final_answer(&response, category) {
        Ok((verdict, choice)) => {
            result.verdict = Some(verdict);
            result.raw_choice = Some(choice);
        }
        Err(e) => {
            result.status = Decision::Undecided;
            result.error = Some(e.to_string());
        }
    }
    result.raw_response = Some(response);
    Ok(result)
}

pub fn paraphrase_candidate(client: &dyn ChatBackend, c: &VmweCandidate, s: &Sentence) -> Result<ParaphraseResult, LlmError> {
    let request = paraphrase_request(client.model_id(), c, s)?;
    request.validate()?;
    let response = with_retry(|| client.complete(&request))?;
    let paraphrased = parse_rephrased(&response)?;
    let span = s.span_text(&c.span);
    Ok(ParaphraseResult {
        sentence_id: s.id.clone(),
        candidate_ref: c.id(),
        original: s.text.clone(),
        retains_phrase: !span.is_empty() && paraphrased.contains(&span),
        paraphrased,
        raw_response: response,
    })
}
