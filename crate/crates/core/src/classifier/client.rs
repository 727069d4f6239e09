//! Chat-completions transport and option-probability extraction.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompt::{build_prompt, ClassificationRequest};
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for [`HttpEndpoint`].
pub const API_KEY_ENV: &str = "DISPLACE_LLM_API_KEY";

pub const MAX_TOKENS: u32 = 4;
pub const TOP_LOGPROBS: u32 = 5;

/// Anything that answers a chat-completions request body with a response body.
pub trait ChatEndpoint: Sync {
    fn complete(&self, body: &Value) -> Result<Value>;
}

impl<T: ChatEndpoint + ?Sized> ChatEndpoint for &T {
    fn complete(&self, body: &Value) -> Result<Value> {
        (**self).complete(body)
    }
}

pub struct HttpEndpoint {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpEndpoint {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpEndpoint {
            url: url.into(),
            api_key,
            agent,
        }
    }

    /// Reads the key from [`API_KEY_ENV`]; an unset or empty variable means no
    /// `Authorization` header.
    pub fn from_env(url: impl Into<String>, timeout: Duration) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(url, key, timeout)
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl ChatEndpoint for HttpEndpoint {
    fn complete(&self, body: &Value) -> Result<Value> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let body: String = text.chars().take(512).collect();
            return Err(Error::HttpStatus { status, body });
        }
        serde_json::from_str(&text).map_err(|e| Error::BadResponse(format!("response is not JSON: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 4,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_attempts: 1,
            ..RetryPolicy::default()
        }
    }

    /// Delay before retry number `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        self.initial_backoff.mul_f64(factor).min(self.max_backoff)
    }

    fn retryable(err: &Error) -> bool {
        match err {
            Error::Transport(_) => true,
            Error::HttpStatus { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    /// Probability mass on option 1 after renormalising over the options present.
    pub p_theory: f64,
    pub chosen_option: u8,
    /// Raw tokens seen at the answer position and their log-probabilities.
    pub raw_token_logprobs: BTreeMap<String, f64>,
    pub model_id: String,
}

/// The request body sent for `req`.
pub fn request_body(model: &str, req: &ClassificationRequest) -> Result<Value> {
    let prompt = build_prompt(req)?;
    Ok(json!({
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
        "max_tokens": MAX_TOKENS,
        "logprobs": true,
        "top_logprobs": TOP_LOGPROBS,
    }))
}

pub fn classify_pair(
    endpoint: &dyn ChatEndpoint,
    model: &str,
    req: &ClassificationRequest,
    retry: &RetryPolicy,
) -> Result<ClassificationResult> {
    let body = request_body(model, req)?;
    log::debug!("classify request: {body}");
    let mut attempt = 1;
    let response = loop {
        match endpoint.complete(&body) {
            Ok(v) => break v,
            Err(e) if attempt < retry.max_attempts && RetryPolicy::retryable(&e) => {
                let wait = retry.backoff(attempt);
                log::warn!("attempt {attempt} failed ({e}); retrying in {wait:?}");
                std::thread::sleep(wait);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    log::debug!("classify response: {response}");
    extract_result(&response, model, req.prompt_mode.options())
}

/// Trims whitespace and the punctuation `( ) : .` around a token, so
/// `" 1"`, `"(1"`, `"1)"` and `"1."` all read as `"1"`.
pub fn normalize_token(token: &str) -> &str {
    token
        .trim()
        .trim_matches(|c: char| matches!(c, '(' | ')' | ':' | '.') || c.is_whitespace())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenPosition {
    pub token: String,
    pub logprob: f64,
    pub top: Vec<(String, f64)>,
}

/// Per-position logprobs from either the chat (`logprobs.content`) or the
/// legacy completions (`tokens` / `token_logprobs` / `top_logprobs`) layout.
pub fn token_positions(response: &Value) -> Result<Vec<TokenPosition>> {
    let choice = response
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| Error::BadResponse("no choices in response".into()))?;
    let lp = match choice.get("logprobs") {
        None | Some(Value::Null) => return Err(Error::LogprobsUnavailable("response has no logprobs field")),
        Some(v) => v,
    };
    let bad = |what: &str| Error::BadResponse(format!("malformed logprobs: {what}"));

    let positions = if let Some(content) = lp.get("content") {
        let content = content
            .as_array()
            .ok_or(Error::LogprobsUnavailable("logprobs.content is not a list"))?;
        content
            .iter()
            .map(|entry| {
                let token = entry.get("token").and_then(Value::as_str).ok_or_else(|| bad("token"))?;
                let logprob = entry.get("logprob").and_then(Value::as_f64).ok_or_else(|| bad("logprob"))?;
                let top = match entry.get("top_logprobs") {
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|t| {
                            Ok((
                                t.get("token").and_then(Value::as_str).ok_or_else(|| bad("top token"))?.to_string(),
                                t.get("logprob").and_then(Value::as_f64).ok_or_else(|| bad("top logprob"))?,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()?,
                    _ => Vec::new(),
                };
                Ok(TokenPosition {
                    token: token.to_string(),
                    logprob,
                    top,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else if let Some(tokens) = lp.get("tokens").and_then(Value::as_array) {
        let lps = lp
            .get("token_logprobs")
            .and_then(Value::as_array)
            .ok_or(Error::LogprobsUnavailable("legacy logprobs without token_logprobs"))?;
        let tops = lp.get("top_logprobs").and_then(Value::as_array);
        tokens
            .iter()
            .zip(lps)
            .enumerate()
            .map(|(i, (t, l))| {
                let top = tops
                    .and_then(|t| t.get(i))
                    .and_then(Value::as_object)
                    .map(|m| {
                        m.iter()
                            .map(|(k, v)| v.as_f64().map(|v| (k.clone(), v)).ok_or_else(|| bad("top logprob")))
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?
                    .unwrap_or_default();
                Ok(TokenPosition {
                    token: t.as_str().ok_or_else(|| bad("token"))?.to_string(),
                    logprob: l.as_f64().ok_or_else(|| bad("token logprob"))?,
                    top,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        return Err(Error::LogprobsUnavailable("logprobs has neither content nor tokens"));
    };
    if positions.is_empty() {
        return Err(Error::LogprobsUnavailable("logprobs list is empty"));
    }
    Ok(positions)
}

fn logsumexp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Option probabilities at the answer position of a response.
///
/// The answer position is the first generated token that normalises to an
/// option; failing that, the first position whose alternatives contain one.
/// Each option's log-probability is the log-sum-exp over the distinct raw
/// tokens there that normalise to it.
pub fn extract_result(response: &Value, requested_model: &str, options: &[&str]) -> Result<ClassificationResult> {
    let positions = token_positions(response)?;
    let is_option = |t: &str| options.contains(&normalize_token(t));
    let pos = positions
        .iter()
        .find(|p| is_option(&p.token))
        .or_else(|| positions.iter().find(|p| p.top.iter().any(|(t, _)| is_option(t))))
        .ok_or_else(|| Error::BadResponse("no option token among the returned logprobs".into()))?;

    let mut raw: BTreeMap<String, f64> = BTreeMap::new();
    for (t, l) in std::iter::once((&pos.token, pos.logprob)).chain(pos.top.iter().map(|(t, l)| (t, *l))) {
        let e = raw.entry(t.clone()).or_insert(l);
        *e = e.max(l);
    }
    let per_option: Vec<Option<f64>> = options
        .iter()
        .map(|o| {
            let lps: Vec<f64> = raw.iter().filter(|(t, _)| normalize_token(t) == *o).map(|(_, l)| *l).collect();
            (!lps.is_empty()).then(|| logsumexp(lps.into_iter()))
        })
        .collect();
    let total = logsumexp(per_option.iter().flatten().copied());
    let p_theory = per_option[0].map_or(0.0, |l| (l - total).exp());
    let chosen = per_option
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|l| (i, l)))
        .fold(None, |best: Option<(usize, f64)>, (i, l)| match best {
            Some((_, b)) if b >= l => best,
            _ => Some((i, l)),
        })
        .map_or(0, |b| b.0);
    let model_id = response
        .get("model")
        .and_then(Value::as_str)
        .unwrap_or(requested_model)
        .to_string();
    Ok(ClassificationResult {
        p_theory,
        chosen_option: chosen as u8 + 1,
        raw_token_logprobs: raw,
        model_id,
    })
}

#[cfg(test)]
mod tests {
    use super::super::mock::{legacy_logprob_response, logprob_response, MockEndpoint, MockReply};
    use super::super::prompt::PromptMode;
    use super::*;

    fn req(mode: PromptMode) -> ClassificationRequest {
        ClassificationRequest::new("A", "a", "B", "b", mode)
    }

    #[test]
    fn option_one_probability() {
        let m = MockEndpoint::fixed(&[("1", 0.86f64.ln()), ("2", 0.14f64.ln())]);
        let r = classify_pair(&m, "m", &req(PromptMode::ZeroShot), &RetryPolicy::none()).unwrap();
        assert!((r.p_theory - 0.86).abs() < 1e-12);
        assert_eq!(r.chosen_option, 1);
        assert_eq!(r.raw_token_logprobs.len(), 2);
    }

    #[test]
    fn equal_logprobs_give_half() {
        let m = MockEndpoint::fixed(&[("1", -0.7), ("2", -0.7)]);
        let r = classify_pair(&m, "m", &req(PromptMode::ZeroShot), &RetryPolicy::none()).unwrap();
        assert!((r.p_theory - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_logprobs_is_an_error() {
        let m = MockEndpoint::from_fn(|_| MockReply::NoLogprobs);
        let err = classify_pair(&m, "m", &req(PromptMode::ZeroShot), &RetryPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::LogprobsUnavailable(_)));
        assert_eq!(m.calls(), 1);
    }

    #[test]
    fn surface_forms_are_pooled() {
        let resp = logprob_response("m", &[(" 1", 0.5f64.ln()), ("(1", 0.2f64.ln()), ("2.", 0.3f64.ln())]);
        let r = extract_result(&resp, "m", &["1", "2"]).unwrap();
        assert!((r.p_theory - 0.7).abs() < 1e-12);
        assert_eq!(r.model_id, "m");
    }

    #[test]
    fn three_options_renormalise() {
        let resp = logprob_response("m", &[("3", 0.5f64.ln()), ("1", 0.25f64.ln()), ("2", 0.125f64.ln())]);
        let r = extract_result(&resp, "x", &["1", "2", "3"]).unwrap();
        assert!((r.p_theory - 0.25 / 0.875).abs() < 1e-12);
        assert_eq!(r.chosen_option, 3);
        let two = extract_result(&resp, "x", &["1", "2"]).unwrap();
        assert!((two.p_theory - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn answer_position_skips_preamble() {
        let resp = json!({
            "model": "m",
            "choices": [{"logprobs": {"content": [
                {"token": "(", "logprob": -0.01, "top_logprobs": [{"token": "(", "logprob": -0.01}]},
                {"token": "2", "logprob": -0.2, "top_logprobs": [{"token": "2", "logprob": -0.2}, {"token": "1", "logprob": -1.8}]},
            ]}}]
        });
        let r = extract_result(&resp, "m", &["1", "2"]).unwrap();
        let (a, b) = ((-1.8f64).exp(), (-0.2f64).exp());
        assert!((r.p_theory - a / (a + b)).abs() < 1e-12);
        assert_eq!(r.chosen_option, 2);
    }

    #[test]
    fn legacy_layout() {
        let resp = legacy_logprob_response("m", &[("1", 0.6f64.ln()), ("2", 0.4f64.ln())]);
        let r = extract_result(&resp, "m", &["1", "2"]).unwrap();
        assert!((r.p_theory - 0.6).abs() < 1e-12);
    }

    #[test]
    fn no_option_token() {
        let resp = logprob_response("m", &[("yes", -0.1)]);
        assert!(matches!(extract_result(&resp, "m", &["1", "2"]), Err(Error::BadResponse(_))));
        let resp = json!({"choices": [{"logprobs": {"content": []}}]});
        assert!(matches!(extract_result(&resp, "m", &["1", "2"]), Err(Error::LogprobsUnavailable(_))));
    }

    #[test]
    fn transient_failures_are_retried() {
        let m = MockEndpoint::fixed(&[("1", -0.1), ("2", -2.0)]).failing_first(2);
        let policy = RetryPolicy {
            initial_backoff: Duration::from_millis(1),
            ..RetryPolicy::default()
        };
        assert!(classify_pair(&m, "m", &req(PromptMode::ZeroShot), &policy).is_ok());
        assert_eq!(m.calls(), 3);

        let m = MockEndpoint::fixed(&[("1", -0.1)]).failing_first(10);
        let err = classify_pair(&m, "m", &req(PromptMode::ZeroShot), &policy).unwrap_err();
        assert!(matches!(err, Error::HttpStatus { status: 503, .. }));
        assert_eq!(m.calls(), 4);
    }

    #[test]
    fn backoff_grows_and_caps() {
        let p = RetryPolicy::default();
        assert_eq!(p.backoff(1), Duration::from_millis(500));
        assert_eq!(p.backoff(3), Duration::from_secs(2));
        assert_eq!(p.backoff(10), Duration::from_secs(8));
    }

    #[test]
    fn request_body_shape() {
        let b = request_body("llm", &req(PromptMode::ZeroShot)).unwrap();
        assert_eq!(b["temperature"], 0);
        assert_eq!(b["logprobs"], true);
        assert!(b["max_tokens"].as_u64().unwrap() <= 4);
        assert!(b["messages"][0]["content"].as_str().unwrap().ends_with("Only give the option number."));
    }

    #[test]
    fn normalization() {
        for t in ["1", " 1", "(1)", "1:", "1.", "\n1 ", "(1):"] {
            assert_eq!(normalize_token(t), "1", "{t:?}");
        }
        assert_eq!(normalize_token("10"), "10");
    }
}
