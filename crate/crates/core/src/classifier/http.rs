//! Remote model backend: POSTs each probe to a configurable endpoint as a
//! structured-output request and validates the response against the probe's
//! enum schema.
//!
//! Prompt templates are external text files with `{premises}`,
//! `{hypothesis}`, and `{lambda}` placeholders (the adjudication template
//! additionally sees `{label_h}` and `{label_neg_h}`); built-in defaults are
//! used when no template directory is configured. Malformed responses are
//! retried up to the configured count; a final malformed classify or fix
//! response degrades to Unknown, while binary and adjudication probes have no
//! abstain value and surface an error instead.

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use super::{
    Backend, BackendError, BinaryAnswer, ClassifierConfig, FixOutcome, Label, ProbeKind, Query,
};
use crate::decoder::neg_map;

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token, if the
    /// endpoint needs one.
    pub token_env: Option<String>,
    pub timeout_secs: u64,
    /// Retries after a malformed response (total attempts = retries + 1).
    pub retries: usize,
    pub max_in_flight: usize,
    pub template_dir: Option<PathBuf>,
    pub classifier_cfg: ClassifierConfig,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            token_env: None,
            timeout_secs: 30,
            retries: 2,
            max_in_flight: 4,
            template_dir: None,
            classifier_cfg: ClassifierConfig::default(),
        }
    }
}

#[derive(Debug)]
struct Templates {
    classify: String,
    fix_unknown: String,
    entails: String,
    adjudicate: String,
}

impl Templates {
    fn load(dir: Option<&PathBuf>) -> Result<Self, BackendError> {
        match dir {
            None => Ok(Self {
                classify: include_str!("templates/classify.txt").to_string(),
                fix_unknown: include_str!("templates/fix_unknown.txt").to_string(),
                entails: include_str!("templates/entails.txt").to_string(),
                adjudicate: include_str!("templates/adjudicate.txt").to_string(),
            }),
            Some(dir) => {
                let read = |name: &str| {
                    std::fs::read_to_string(dir.join(name)).map_err(|e| {
                        BackendError::Config(format!(
                            "cannot read template {}: {e}",
                            dir.join(name).display()
                        ))
                    })
                };
                Ok(Self {
                    classify: read("classify.txt")?,
                    fix_unknown: read("fix_unknown.txt")?,
                    entails: read("entails.txt")?,
                    adjudicate: read("adjudicate.txt")?,
                })
            }
        }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    permits: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            permits: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.cv.wait(permits).unwrap();
        }
        *permits -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.permits.lock().unwrap() += 1;
        self.gate.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpBackend {
    cfg: HttpConfig,
    agent: ureq::Agent,
    token: Option<String>,
    templates: Templates,
    gate: Gate,
}

impl HttpBackend {
    pub fn new(cfg: HttpConfig) -> Result<Self, BackendError> {
        if cfg.endpoint.is_empty() {
            return Err(BackendError::Config(
                "http backend requires an endpoint".into(),
            ));
        }
        let token = match &cfg.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                BackendError::Config(format!("environment variable `{var}` is not set"))
            })?),
            None => None,
        };
        let agent = ureq::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build();
        let templates = Templates::load(cfg.template_dir.as_ref())?;
        let gate = Gate::new(cfg.max_in_flight);
        Ok(Self {
            cfg,
            agent,
            token,
            templates,
            gate,
        })
    }

    fn prompt(&self, kind: ProbeKind, query: &Query, labels: Option<(Label, Label)>) -> String {
        let template = match kind {
            ProbeKind::Classify => &self.templates.classify,
            ProbeKind::FixUnknown => &self.templates.fix_unknown,
            ProbeKind::Entails => &self.templates.entails,
            ProbeKind::Adjudicate => &self.templates.adjudicate,
        };
        let mut text = template
            .replace("{premises}", &query.premise_texts.join("\n"))
            .replace("{hypothesis}", &query.hypothesis.prompt_text)
            .replace(
                "{lambda}",
                &format!("{}", self.cfg.classifier_cfg.unknown_penalty),
            );
        if let Some((y_h, y_neg_h)) = labels {
            text = text
                .replace("{label_h}", y_h.as_str())
                .replace("{label_neg_h}", neg_map(y_neg_h).as_str());
        }
        text
    }

    fn post(&self, prompt: &str, schema: serde_json::Value) -> Result<String, BackendError> {
        let _slot = self.gate.acquire();
        let mut request = self.agent.post(&self.cfg.endpoint);
        if let Some(token) = &self.token {
            request = request.set("Authorization", &format!("Bearer {token}"));
        }
        let body = serde_json::json!({
            "model": self.cfg.model,
            "temperature": self.cfg.classifier_cfg.temperature,
            "prompt": prompt,
            "schema": schema,
        });
        match request.send_json(body) {
            Ok(response) => response
                .into_string()
                .map_err(|e| BackendError::Transport(format!("reading response body: {e}"))),
            Err(ureq::Error::Status(code, _)) => Err(BackendError::Transport(format!(
                "endpoint returned status {code}"
            ))),
            Err(ureq::Error::Transport(t)) => {
                let message = t.to_string();
                if message.contains("timed out") || message.contains("timeout") {
                    Err(BackendError::Timeout(message))
                } else {
                    Err(BackendError::Transport(message))
                }
            }
        }
    }

    /// Sends one probe and validates the body as a single enum token,
    /// retrying malformed responses.
    fn invoke_token(
        &self,
        kind: ProbeKind,
        query: &Query,
        labels: Option<(Label, Label)>,
        allowed: &[&str],
    ) -> Result<String, BackendError> {
        let prompt = self.prompt(kind, query, labels);
        let schema = serde_json::json!({ "type": "enum", "values": allowed });
        let mut last = String::new();
        let attempts = self.cfg.retries + 1;
        for _ in 0..attempts {
            let body = self.post(&prompt, schema.clone())?;
            if let Some(token) = match_token(&body, allowed) {
                return Ok(token);
            }
            last = body;
        }
        Err(BackendError::Schema { attempts, last })
    }
}

/// Trims, strips trailing punctuation, and matches case-insensitively
/// against the allowed tokens; returns the canonical spelling.
fn match_token(body: &str, allowed: &[&str]) -> Option<String> {
    let trimmed = body
        .trim()
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .trim();
    allowed
        .iter()
        .find(|candidate| candidate.eq_ignore_ascii_case(trimmed))
        .map(|s| s.to_string())
}

fn parse_label(token: &str) -> Label {
    match token {
        "True" => Label::True,
        "False" => Label::False,
        _ => Label::Unknown,
    }
}

#[derive(Deserialize)]
struct FixResponse {
    label: String,
    #[serde(default)]
    witness: Option<String>,
    #[serde(default)]
    missing_premise: Option<String>,
}

impl Backend for HttpBackend {
    fn classify(&self, query: &Query) -> Result<Label, BackendError> {
        match self.invoke_token(
            ProbeKind::Classify,
            query,
            None,
            &["True", "False", "Unknown"],
        ) {
            Ok(token) => Ok(parse_label(&token)),
            // A 3-way probe has a safe abstention: persistent schema
            // failures become Unknown rather than a fabricated label.
            Err(BackendError::Schema { .. }) => Ok(Label::Unknown),
            Err(other) => Err(other),
        }
    }

    fn fix_unknown(&self, query: &Query) -> Result<FixOutcome, BackendError> {
        let prompt = self.prompt(ProbeKind::FixUnknown, query, None);
        let schema = serde_json::json!({
            "type": "fix_outcome",
            "label_values": ["True", "False", "Unknown"],
        });
        let attempts = self.cfg.retries + 1;
        for _ in 0..attempts {
            let body = self.post(&prompt, schema.clone())?;
            let parsed: Option<(Label, Option<String>, Option<String>)> =
                match serde_json::from_str::<FixResponse>(&body) {
                    Ok(fix) => match_token(&fix.label, &["True", "False", "Unknown"])
                        .map(|token| (parse_label(&token), fix.witness, fix.missing_premise)),
                    // Accept a bare token as a label with no witness.
                    Err(_) => match_token(&body, &["True", "False", "Unknown"])
                        .map(|token| (parse_label(&token), None, None)),
                };
            if let Some((label, witness, note)) = parsed {
                let witness = witness.filter(|w| !w.trim().is_empty());
                return Ok(match (label, witness) {
                    (Label::Unknown, _) => FixOutcome::unknown(note),
                    (decisive, Some(witness)) => FixOutcome {
                        label: decisive,
                        witness: Some(witness),
                        missing_premise_note: note,
                    },
                    // Decisive without a witness violates the contract:
                    // coerce to Unknown instead of trusting it.
                    (_, None) => FixOutcome::unknown(note),
                });
            }
        }
        Ok(FixOutcome::unknown(None))
    }

    fn entails_yes_no(&self, query: &Query) -> Result<BinaryAnswer, BackendError> {
        let token = self.invoke_token(ProbeKind::Entails, query, None, &["Yes", "No"])?;
        Ok(if token == "Yes" {
            BinaryAnswer::Yes
        } else {
            BinaryAnswer::No
        })
    }

    fn adjudicate(&self, query: &Query, y_h: Label, y_neg_h: Label) -> Result<Label, BackendError> {
        let token = self.invoke_token(
            ProbeKind::Adjudicate,
            query,
            Some((y_h, y_neg_h)),
            &["True", "False"],
        )?;
        let chosen = parse_label(&token);
        // The response must be one of the two offered assignments; since the
        // pair conflicts, those are exactly {True, False}.
        debug_assert!(chosen == y_h || chosen == neg_map(y_neg_h));
        Ok(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Hypothesis;
    use crate::fol::{parse_formula, Formula};
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;

    /// Serves one scripted body per connection. Returns the endpoint URL and
    /// a channel yielding the request bodies.
    fn serve(responses: Vec<String>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for response in responses {
                let (mut stream, _) = match listener.accept() {
                    Ok(pair) => pair,
                    Err(_) => return,
                };
                let mut buf = Vec::new();
                let mut byte = [0u8; 1];
                // Read headers.
                while !buf.ends_with(b"\r\n\r\n") {
                    if stream.read(&mut byte).unwrap_or(0) == 0 {
                        break;
                    }
                    buf.push(byte[0]);
                }
                let header = String::from_utf8_lossy(&buf).to_string();
                let length: usize = header
                    .lines()
                    .find_map(|l| {
                        l.to_ascii_lowercase()
                            .strip_prefix("content-length:")
                            .map(str::trim)
                            .map(String::from)
                    })
                    .and_then(|v| v.parse().ok())
                    .unwrap_or(0);
                let mut body = vec![0u8; length];
                stream.read_exact(&mut body).ok();
                tx.send(String::from_utf8_lossy(&body).to_string()).ok();
                let payload = format!(
                    "HTTP/1.1 200 OK\r\ncontent-length: {}\r\ncontent-type: text/plain\r\n\r\n{}",
                    response.len(),
                    response
                );
                stream.write_all(payload.as_bytes()).ok();
            }
        });
        (format!("http://{addr}"), rx)
    }

    fn backend(endpoint: String, retries: usize) -> HttpBackend {
        HttpBackend::new(HttpConfig {
            endpoint,
            model: "test-model".into(),
            retries,
            ..HttpConfig::default()
        })
        .unwrap()
    }

    struct Fixture {
        premises: Vec<Formula>,
        texts: Vec<String>,
        hypothesis: Hypothesis,
    }

    impl Fixture {
        fn new() -> Self {
            Self {
                premises: vec![parse_formula("P(a)").unwrap()],
                texts: vec!["P(a)".to_string()],
                hypothesis: Hypothesis::positive(parse_formula("Q(a)").unwrap(), "Q(a)"),
            }
        }

        fn query(&self) -> Query<'_> {
            Query {
                example_id: "http-test",
                premises: &self.premises,
                premise_texts: &self.texts,
                hypothesis: &self.hypothesis,
            }
        }
    }

    #[test]
    fn classify_passes_schema_token_through() {
        let (endpoint, requests) = serve(vec!["Unknown".into()]);
        let fx = Fixture::new();
        let label = backend(endpoint, 0).classify(&fx.query()).unwrap();
        assert_eq!(label, Label::Unknown);
        let body: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["temperature"], 0.0);
        let prompt = body["prompt"].as_str().unwrap();
        assert!(prompt.contains("P(a)"));
        assert!(prompt.contains("Q(a)"));
        assert!(prompt.contains("0.5"));
    }

    #[test]
    fn classify_normalizes_noisy_tokens() {
        let (endpoint, _requests) = serve(vec!["TRUE.".into()]);
        let fx = Fixture::new();
        assert_eq!(
            backend(endpoint, 0).classify(&fx.query()).unwrap(),
            Label::True
        );
    }

    #[test]
    fn classify_falls_back_to_unknown_after_retries() {
        let (endpoint, requests) = serve(vec!["maybe".into(), "maybe".into(), "maybe".into()]);
        let fx = Fixture::new();
        assert_eq!(
            backend(endpoint, 2).classify(&fx.query()).unwrap(),
            Label::Unknown
        );
        // All three attempts (1 + 2 retries) hit the wire.
        assert!(requests.recv().is_ok());
        assert!(requests.recv().is_ok());
        assert!(requests.recv().is_ok());
    }

    #[test]
    fn classify_retry_recovers_on_second_attempt() {
        let (endpoint, _requests) = serve(vec!["not-a-label".into(), "False".into()]);
        let fx = Fixture::new();
        assert_eq!(
            backend(endpoint, 1).classify(&fx.query()).unwrap(),
            Label::False
        );
    }

    #[test]
    fn entails_schema_failure_is_an_error() {
        let (endpoint, _requests) = serve(vec!["perhaps".into()]);
        let fx = Fixture::new();
        let err = backend(endpoint, 0)
            .entails_yes_no(&fx.query())
            .unwrap_err();
        assert!(matches!(err, BackendError::Schema { attempts: 1, .. }));
    }

    #[test]
    fn template_dir_overrides_built_in_prompts() {
        let dir = std::env::temp_dir().join(format!("cgdpd-templates-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for name in [
            "classify.txt",
            "fix_unknown.txt",
            "entails.txt",
            "adjudicate.txt",
        ] {
            std::fs::write(
                dir.join(name),
                format!("CUSTOM {name}: {{hypothesis}} / {{lambda}}"),
            )
            .unwrap();
        }
        let (endpoint, requests) = serve(vec!["Unknown".into()]);
        let backend = HttpBackend::new(HttpConfig {
            endpoint,
            model: "test-model".into(),
            template_dir: Some(dir.clone()),
            ..HttpConfig::default()
        })
        .unwrap();
        let fx = Fixture::new();
        backend.classify(&fx.query()).unwrap();
        let body: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
        assert_eq!(body["prompt"], "CUSTOM classify.txt: Q(a) / 0.5");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_template_file_is_a_config_error() {
        let dir = std::env::temp_dir().join(format!("cgdpd-empty-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let err = HttpBackend::new(HttpConfig {
            endpoint: "http://127.0.0.1:1".into(),
            template_dir: Some(dir.clone()),
            ..HttpConfig::default()
        })
        .unwrap_err();
        assert!(matches!(err, BackendError::Config(_)));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn fix_decisive_without_witness_is_coerced_to_unknown() {
        let (endpoint, _requests) = serve(vec!["{\"label\": \"True\", \"witness\": \"\"}".into()]);
        let fx = Fixture::new();
        let fix = backend(endpoint, 0).fix_unknown(&fx.query()).unwrap();
        assert_eq!(fix.label, Label::Unknown);
        assert!(fix.invariant_holds());
    }

    #[test]
    fn fix_with_witness_passes_through() {
        let (endpoint, _requests) =
            serve(vec!["{\"label\": \"True\", \"witness\": \"P(a)\"}".into()]);
        let fx = Fixture::new();
        let fix = backend(endpoint, 0).fix_unknown(&fx.query()).unwrap();
        assert_eq!(fix.label, Label::True);
        assert_eq!(fix.witness.as_deref(), Some("P(a)"));
    }

    #[test]
    fn adjudicate_returns_offered_label() {
        let (endpoint, requests) = serve(vec!["False".into()]);
        let fx = Fixture::new();
        let label = backend(endpoint, 0)
            .adjudicate(&fx.query(), Label::True, Label::True)
            .unwrap();
        assert_eq!(label, Label::False);
        let body: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
        let prompt = body["prompt"].as_str().unwrap();
        assert!(prompt.contains("Reading A: the hypothesis is True"));
        assert!(prompt.contains("Reading B (from the negated hypothesis): the hypothesis is False"));
    }

    #[test]
    fn transport_errors_surface() {
        // Nothing listens on this port.
        let fx = Fixture::new();
        let backend = backend("http://127.0.0.1:9".into(), 0);
        let err = backend.classify(&fx.query()).unwrap_err();
        assert!(matches!(
            err,
            BackendError::Transport(_) | BackendError::Timeout(_)
        ));
    }

    #[test]
    fn missing_token_env_is_a_config_error() {
        let err = HttpBackend::new(HttpConfig {
            endpoint: "http://127.0.0.1:1".into(),
            token_env: Some("DEFINITELY_NOT_SET_TOKEN_VAR".into()),
            ..HttpConfig::default()
        })
        .unwrap_err();
        assert!(matches!(err, BackendError::Config(_)));
    }

    #[test]
    fn not_wrapper_reaches_the_prompt() {
        let (endpoint, requests) = serve(vec!["Unknown".into()]);
        let fx = Fixture::new();
        let negated =
            crate::classifier::NegationStrategy::NotWrapper.negate_hypothesis(&fx.hypothesis);
        let query = Query {
            hypothesis: &negated,
            ..fx.query()
        };
        backend(endpoint, 0).classify(&query).unwrap();
        let body: serde_json::Value = serde_json::from_str(&requests.recv().unwrap()).unwrap();
        assert!(body["prompt"].as_str().unwrap().contains("NOT: Q(a)"));
    }
}
