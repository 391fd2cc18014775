use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ExplainError, ImpactContext};

pub const PROMPT_TEMPLATE: &str = include_str!("../../assets/impact_prompt_v1.txt");
pub const PROMPT_VERSION: &str = "v1";

const DEFAULT_MODEL: &str = "gpt-4";
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Connection settings for an OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

fn default_timeout_secs() -> u64 {
    DEFAULT_TIMEOUT.as_secs()
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: default_model(),
            api_key: None,
            timeout_secs: default_timeout_secs(),
        }
    }

    /// Reads `PDP_LLM_ENDPOINT`, `PDP_LLM_MODEL` and `PDP_LLM_API_KEY`.
    /// Returns `None` when no endpoint is set.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("PDP_LLM_ENDPOINT").ok().filter(|s| !s.is_empty())?;
        let mut cfg = Self::new(endpoint);
        if let Ok(model) = std::env::var("PDP_LLM_MODEL") {
            if !model.is_empty() {
                cfg.model = model;
            }
        }
        cfg.api_key = std::env::var("PDP_LLM_API_KEY").ok().filter(|s| !s.is_empty());
        Some(cfg)
    }
}

/// Blocking client for the external provider. The HTTP client is built per
/// call so the provider can be held inside async code and invoked from a
/// blocking thread.
#[derive(Debug, Clone)]
pub struct LlmProvider {
    config: LlmConfig,
}

impl LlmProvider {
    pub fn new(config: LlmConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Sends the rendered prompt, retrying once on failure, and returns the
    /// assistant message text.
    pub fn complete(&self, context: &ImpactContext) -> Result<String, ExplainError> {
        let prompt = render_prompt(context);
        match self.request(&prompt) {
            Ok(text) => Ok(text),
            Err(first) => {
                tracing::debug!(error = %first, "external provider failed, retrying once");
                self.request(&prompt)
            }
        }
    }

    fn request(&self, prompt: &str) -> Result<String, ExplainError> {
        let unavailable = |e: reqwest::Error| ExplainError::ProviderUnavailable(e.to_string());
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.config.timeout_secs))
            .build()
            .map_err(unavailable)?;
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut req = client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(unavailable)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ExplainError::ProviderUnavailable(format!("HTTP {status}")));
        }
        let value: serde_json::Value = resp
            .json()
            .map_err(|e| ExplainError::MalformedProviderResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| {
                ExplainError::MalformedProviderResponse("missing choices[0].message.content".into())
            })
    }
}

pub fn render_prompt(ctx: &ImpactContext) -> String {
    let cap = ctx
        .cap_applied
        .map_or_else(|| "none".to_string(), |c| format!("epsilon <= {c}"));
    let p = &ctx.profile;
    let pairs = [
        ("epsilon", ctx.epsilon.to_string()),
        ("delta_f", ctx.delta_f.to_string()),
        ("unit_label", ctx.dataset_summary.unit_label.clone()),
        ("scale", format!("{:.4}", ctx.delta_f / ctx.epsilon)),
        ("mae", format!("{:.4}", ctx.mae)),
        ("expected_mae", format!("{:.4}", ctx.expected_mae)),
        ("series_count", ctx.dataset_summary.series_count.to_string()),
        ("timestamp_count", ctx.dataset_summary.timestamp_count.to_string()),
        ("privacy", p.privacy.to_string()),
        ("accuracy", p.accuracy.to_string()),
        ("compliance_required", p.compliance_required.to_string()),
        ("sensitivity", p.sensitivity.to_string()),
        ("cap_applied", cap),
        ("remaining_budget", format!("{:.4}", ctx.remaining_budget)),
    ];
    let mut out = PROMPT_TEMPLATE.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{{{key}}}}}"), &value);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub privacy_score: Option<f64>,
    pub narrative: String,
    pub caveats: Vec<String>,
}

/// Parses the `PRIVACY_SCORE` / `NARRATIVE` / `CAVEATS` layout. Labels are
/// matched case-insensitively and may carry markdown emphasis; a missing
/// or unparsable score yields `None`. Errors only when no narrative and no
/// score can be recovered.
pub fn parse_response(raw: &str) -> Result<ParsedResponse, ExplainError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Narrative,
        Caveats,
    }
    let mut score = None;
    let mut narrative = Vec::new();
    let mut caveats = Vec::new();
    let mut section = Section::None;

    for line in raw.lines() {
        let cleaned = line.trim().trim_start_matches(['*', '#', ' ']).to_string();
        let upper = cleaned.to_ascii_uppercase();
        if let Some(rest) = label_value(&cleaned, &upper, "PRIVACY_SCORE") {
            score = leading_number(rest);
            section = Section::None;
        } else if let Some(rest) = label_value(&cleaned, &upper, "NARRATIVE") {
            section = Section::Narrative;
            if !rest.is_empty() {
                narrative.push(rest.to_string());
            }
        } else if let Some(rest) = label_value(&cleaned, &upper, "CAVEATS") {
            section = Section::Caveats;
            if !rest.is_empty() {
                caveats.push(rest.to_string());
            }
        } else if !cleaned.is_empty() {
            match section {
                Section::Narrative => narrative.push(cleaned),
                Section::Caveats => {
                    let item = line.trim().trim_start_matches(['-', '*', '•', ' ']).trim();
                    if !item.is_empty() {
                        caveats.push(item.to_string());
                    }
                }
                Section::None => {}
            }
        }
    }
    let narrative = narrative.join(" ");
    if score.is_none() && narrative.is_empty() {
        return Err(ExplainError::MalformedProviderResponse(
            "no PRIVACY_SCORE or NARRATIVE found".into(),
        ));
    }
    Ok(ParsedResponse {
        privacy_score: score,
        narrative,
        caveats,
    })
}

fn label_value<'a>(cleaned: &'a str, upper: &str, label: &str) -> Option<&'a str> {
    let rest = upper.strip_prefix(label)?;
    let rest = rest.trim_start_matches('*');
    if !rest.starts_with(':') {
        return None;
    }
    let offset = cleaned.len() - rest.len() + 1;
    Some(cleaned[offset..].trim().trim_start_matches('*').trim())
}

fn leading_number(s: &str) -> Option<f64> {
    let end = s
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'))
        .unwrap_or(s.len());
    s[..end].parse::<f64>().ok().filter(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::super::tests::context;
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn prompt_has_no_unfilled_placeholders() {
        let prompt = render_prompt(&context(0.5));
        assert!(!prompt.contains("{{"), "{prompt}");
        assert!(prompt.contains("epsilon: 0.5"));
        assert!(prompt.contains("20.0000 W"));
    }

    #[test]
    fn parses_canonical_layout() {
        let raw = "PRIVACY_SCORE: 3.5\nNARRATIVE: Readings are blurred.\nDaily shapes survive.\nCAVEATS:\n- Peaks leak.\n- Correlation ignored.\n";
        let p = parse_response(raw).unwrap();
        assert_eq!(p.privacy_score, Some(3.5));
        assert_eq!(p.narrative, "Readings are blurred. Daily shapes survive.");
        assert_eq!(p.caveats, vec!["Peaks leak.", "Correlation ignored."]);
    }

    #[test]
    fn tolerates_markdown_and_case() {
        let raw = "**Privacy_Score:** 4/5\n**Narrative:** Strong.\n**Caveats:**\n* one\n";
        let p = parse_response(raw).unwrap();
        assert_eq!(p.privacy_score, Some(4.0));
        assert_eq!(p.narrative, "Strong.");
        assert_eq!(p.caveats, vec!["one"]);
    }

    #[test]
    fn missing_score_is_none_and_garbage_is_error() {
        let p = parse_response("NARRATIVE: fine").unwrap();
        assert_eq!(p.privacy_score, None);
        assert!(matches!(
            parse_response("I cannot help with that."),
            Err(ExplainError::MalformedProviderResponse(_))
        ));
    }

    /// Serves `responses` in order, one per connection, and counts requests.
    fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let Ok((mut stream, _)) = listener.accept() else { return };
                counter.fetch_add(1, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut buf = vec![0; len];
                let _ = reader.read_exact(&mut buf);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        (format!("http://{addr}/v1/chat/completions"), hits)
    }

    fn chat_body(content: &str) -> String {
        json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
    }

    #[test]
    fn completes_against_mock_endpoint() {
        let (url, hits) = mock_server(vec![(200, chat_body("PRIVACY_SCORE: 3\nNARRATIVE: ok"))]);
        let text = LlmProvider::new(LlmConfig::new(url)).complete(&context(1.0)).unwrap();
        assert!(text.starts_with("PRIVACY_SCORE: 3"));
        assert_eq!(hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_once_after_failure() {
        let (url, hits) = mock_server(vec![
            (500, "{}".into()),
            (200, chat_body("PRIVACY_SCORE: 2\nNARRATIVE: ok")),
        ]);
        let text = LlmProvider::new(LlmConfig::new(url)).complete(&context(1.0)).unwrap();
        assert!(text.contains("PRIVACY_SCORE: 2"));
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn generator_falls_back_after_two_failures() {
        use super::super::{ProviderKind, ReportGenerator};
        let (url, hits) = mock_server(vec![(503, "{}".into()), (503, "{}".into())]);
        let g = ReportGenerator::new(Some(LlmProvider::new(LlmConfig::new(url))), true);
        let r = g.generate_report(&context(2.0), ProviderKind::ExternalLlm).unwrap();
        assert_eq!(r.provider, ProviderKind::Template);
        assert_eq!(r.privacy_score, 2.1);
        assert_eq!(hits.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn generator_uses_external_text() {
        use super::super::{ProviderKind, ReportGenerator};
        let (url, _) = mock_server(vec![(
            200,
            chat_body("PRIVACY_SCORE: 4.2\nNARRATIVE: Individual peaks are masked.\nCAVEATS:\n- Aggregates remain visible."),
        )]);
        let g = ReportGenerator::new(Some(LlmProvider::new(LlmConfig::new(url))), false);
        let r = g.generate_report(&context(0.5), ProviderKind::ExternalLlm).unwrap();
        assert_eq!(r.provider, ProviderKind::ExternalLlm);
        assert_eq!(r.privacy_score, 4.2);
        assert_eq!(r.narrative, "Individual peaks are masked.");
        assert!(r.caveats.iter().any(|c| c == "Aggregates remain visible."));
    }
}
