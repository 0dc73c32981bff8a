//! JSON-over-HTTP clients.
//!
//! * chat: `POST {model, messages, temperature, top_p}`, reply in the
//!   chat-completion shape (`choices[0].message.content`).
//! * MT: `POST {text, source_lang: "en", target_lang}` -> `{translation}`.
//! * QE: `POST {source, hypothesis}` -> `{score}`.

use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use super::{BackendError, ChatBackend, MtBackend, QeBackend};
use crate::llm::ChatRequest;
use crate::mt::Lang;
use crate::qe::Orientation;

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
struct Endpoint {
    agent: ureq::Agent,
    url: String,
    credential: Option<String>,
}

impl Endpoint {
    fn new(url: impl Into<String>, credential: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(DEFAULT_TIMEOUT))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            url: url.into(),
            credential,
        }
    }

    fn post(&self, body: &impl Serialize) -> Result<Value, BackendError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.credential {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", self.url)))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(format!("{}: {e}", self.url)))?;
        if !status.is_success() {
            return Err(BackendError::Transport(format!("{}: HTTP {}", self.url, status.as_u16())));
        }
        serde_json::from_str(&text).map_err(|e| BackendError::Protocol(format!("{}: {e}", self.url)))
    }
}

pub struct HttpChat {
    endpoint: Endpoint,
    model_id: String,
}

impl HttpChat {
    pub fn new(url: impl Into<String>, model_id: impl Into<String>, credential: Option<String>) -> Self {
        Self {
            endpoint: Endpoint::new(url, credential),
            model_id: model_id.into(),
        }
    }
}

/// Pull the assistant text out of a chat-completion style reply.
pub fn assistant_text(reply: &Value) -> Option<&str> {
    reply
        .pointer("/choices/0/message/content")
        .or_else(|| reply.pointer("/message/content"))
        .or_else(|| reply.get("content"))
        .and_then(Value::as_str)
}

impl ChatBackend for HttpChat {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = json!({
            "model": request.model_id,
            "messages": request.messages,
            "temperature": request.temperature,
            "top_p": request.top_p,
        });
        let reply = self.endpoint.post(&body)?;
        assistant_text(&reply)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("reply has no assistant message".into()))
    }
}

pub struct HttpMt {
    endpoint: Endpoint,
    system_id: String,
}

impl HttpMt {
    pub fn new(url: impl Into<String>, system_id: impl Into<String>, credential: Option<String>) -> Self {
        Self {
            endpoint: Endpoint::new(url, credential),
            system_id: system_id.into(),
        }
    }
}

impl MtBackend for HttpMt {
    fn system_id(&self) -> &str {
        &self.system_id
    }

    fn translate(&self, text: &str, target: Lang) -> Result<String, BackendError> {
        let body = json!({"text": text, "source_lang": "en", "target_lang": target.code()});
        let reply = self.endpoint.post(&body)?;
        reply
            .get("translation")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("reply has no translation field".into()))
    }
}

pub struct HttpQe {
    endpoint: Endpoint,
    metric_id: String,
    orientation: Orientation,
}

impl HttpQe {
    pub fn new(
        url: impl Into<String>,
        metric_id: impl Into<String>,
        orientation: Orientation,
        credential: Option<String>,
    ) -> Self {
        Self {
            endpoint: Endpoint::new(url, credential),
            metric_id: metric_id.into(),
            orientation,
        }
    }
}

impl QeBackend for HttpQe {
    fn metric_id(&self) -> &str {
        &self.metric_id
    }

    fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn score(&self, source: &str, hypothesis: &str) -> Result<f64, BackendError> {
        let reply = self.endpoint.post(&json!({"source": source, "hypothesis": hypothesis}))?;
        reply
            .get("score")
            .and_then(Value::as_f64)
            .ok_or_else(|| BackendError::Protocol("reply has no numeric score field".into()))
    }
}
