//! HTTP client for the `/score` wire contract.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{ScoreRequest, ScoreResponse, Scorer};

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    pub timeout: Duration,
    pub max_inflight: usize,
    /// Divide each log-likelihood by the token count the server reports.
    pub length_normalize: bool,
    pub bearer_token: Option<String>,
    /// Extra attempts after a transport failure or 5xx.
    pub retries: u32,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        RemoteOptions {
            timeout: Duration::from_secs(30),
            max_inflight: 8,
            length_normalize: false,
            bearer_token: None,
            retries: 1,
        }
    }
}

/// Counting semaphore capping requests in flight.
#[derive(Debug)]
struct Gate {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(limit: usize) -> Self {
        Gate {
            limit: limit.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.active.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

pub struct RemoteScorer {
    url: String,
    agent: ureq::Agent,
    options: RemoteOptions,
    gate: Gate,
}

impl RemoteScorer {
    /// `endpoint` is either the full `/score` URL or the server base URL.
    pub fn new(endpoint: &str, options: RemoteOptions) -> Result<Self> {
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(Error::InvalidArgument(format!(
                "endpoint {endpoint:?} is not an http(s) URL"
            )));
        }
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/score") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/score")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(options.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteScorer {
            url,
            agent,
            gate: Gate::new(options.max_inflight),
            options,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn attempt(&self, request: &ScoreRequest) -> std::result::Result<ScoreResponse, (bool, String)> {
        let _permit = self.gate.acquire();
        let mut req = self.agent.post(&self.url);
        if let Some(token) = &self.options.bearer_token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(request).map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| (true, e.to_string()))?;
        if !status.is_success() {
            let reason = serde_json::from_str::<ErrorBody>(&body)
                .map(|b| b.error)
                .unwrap_or(body);
            return Err((status.is_server_error(), format!("HTTP {}: {reason}", status.as_u16())));
        }
        serde_json::from_str(&body).map_err(|e| (false, format!("malformed response: {e}")))
    }
}

impl Scorer for RemoteScorer {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        request.validate()?;
        let mut tries = 0;
        let mut response = loop {
            match self.attempt(request) {
                Ok(r) => break r,
                Err((retryable, reason)) => {
                    if !retryable || tries >= self.options.retries {
                        return Err(Error::Server(reason));
                    }
                    tries += 1;
                }
            }
        };
        response.check(request)?;
        if self.options.length_normalize {
            let counts = response.token_counts.as_ref().ok_or_else(|| {
                Error::Contract("length normalization needs token_counts in the response".into())
            })?;
            for (v, &n) in response.log_likelihoods.iter_mut().zip(counts) {
                if n == 0 {
                    return Err(Error::Contract("token count of zero".into()));
                }
                *v /= f64::from(n);
            }
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn endpoint_normalization() {
        let o = RemoteOptions::default();
        assert_eq!(RemoteScorer::new("http://h:1", o.clone()).unwrap().url(), "http://h:1/score");
        assert_eq!(RemoteScorer::new("http://h:1/score/", o.clone()).unwrap().url(), "http://h:1/score");
        assert!(RemoteScorer::new("h:1", o).is_err());
    }

    #[test]
    fn gate_caps_concurrency() {
        let gate = Arc::new(Gate::new(2));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (gate, live, peak) = (gate.clone(), live.clone(), peak.clone());
                std::thread::spawn(move || {
                    let _p = gate.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    live.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
