//! Issue and comment retrieval over the GitHub REST API.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{IngestError, IssueRef, RawComment};

type Thread = Result<Vec<RawComment>, IngestError>;

pub const DEFAULT_API_BASE: &str = "https://api.github.com";
pub const TOKEN_ENV_VAR: &str = "GH_TOKEN";
pub const DEFAULT_CONCURRENCY: usize = 4;

/// A response with lowercase header names.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    #[serde(default)]
    pub headers: HashMap<String, String>,
    pub body: String,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.get(&name.to_ascii_lowercase()).map(String::as_str)
    }
}

/// Performs GET requests.
pub trait Transport: Sync {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, IngestError>;
}

/// Serves recorded responses keyed by URL and never touches the network.
///
/// The fixture file is a JSON object mapping each URL to a response
/// `{"status": 200, "headers": {...}, "body": ...}` or to a list of responses
/// served in turn (the last one repeats). A `body` that is not a string is
/// re-serialized as JSON.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    responses: Mutex<HashMap<String, VecDeque<HttpResponse>>>,
    requests: AtomicUsize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RecordedEntry {
    One(RecordedResponse),
    Many(Vec<RecordedResponse>),
}

#[derive(Deserialize)]
struct RecordedResponse {
    status: u16,
    #[serde(default)]
    headers: HashMap<String, String>,
    #[serde(default)]
    body: serde_json::Value,
}

impl From<RecordedResponse> for HttpResponse {
    fn from(r: RecordedResponse) -> Self {
        let body = match r.body {
            serde_json::Value::String(s) => s,
            serde_json::Value::Null => String::new(),
            other => other.to_string(),
        };
        HttpResponse {
            status: r.status,
            headers: r.headers.into_iter().map(|(k, v)| (k.to_ascii_lowercase(), v)).collect(),
            body,
        }
    }
}

impl FixtureTransport {
    pub fn new() -> Self {
        FixtureTransport::default()
    }

    pub fn insert(&self, url: impl Into<String>, response: HttpResponse) {
        self.responses
            .lock()
            .expect("fixture lock")
            .entry(url.into())
            .or_default()
            .push_back(response);
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let map: HashMap<String, RecordedEntry> =
            serde_json::from_str(text).map_err(|e| IngestError::Parse(format!("fixture: {e}")))?;
        let t = FixtureTransport::new();
        for (url, entry) in map {
            let list = match entry {
                RecordedEntry::One(r) => vec![r],
                RecordedEntry::Many(v) => v,
            };
            for r in list {
                t.insert(url.clone(), r.into());
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        FixtureTransport::from_json(&text)
    }

    /// Number of requests served so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str, _token: Option<&str>) -> Result<HttpResponse, IngestError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut map = self.responses.lock().expect("fixture lock");
        let queue = map
            .get_mut(url)
            .ok_or_else(|| IngestError::Transport(format!("no recorded response for {url}")))?;
        if queue.len() > 1 {
            Ok(queue.pop_front().expect("non-empty"))
        } else {
            Ok(queue.front().cloned().expect("recorded entries are non-empty"))
        }
    }
}

/// HTTPS transport backed by `ureq`.
pub struct LiveTransport {
    agent: ureq::Agent,
}

impl Default for LiveTransport {
    fn default() -> Self {
        LiveTransport::new()
    }
}

impl LiveTransport {
    pub fn new() -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        LiveTransport { agent }
    }
}

impl Transport for LiveTransport {
    fn get(&self, url: &str, token: Option<&str>) -> Result<HttpResponse, IngestError> {
        let mut req = self
            .agent
            .get(url)
            .header("Accept", "application/vnd.github+json")
            .header("User-Agent", "dialogue-acts");
        if let Some(t) = token {
            req = req.header("Authorization", format!("Bearer {t}"));
        }
        let mut resp = req.call().map_err(|e| IngestError::Transport(e.to_string()))?;
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_ascii_lowercase(), v.to_str().ok()?.to_string())))
            .collect();
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(HttpResponse { status, headers, body })
    }
}

/// Retries for rate-limited responses, with exponential backoff.
pub struct RetryPolicy<'a> {
    pub attempts: u32,
    pub base_delay: Duration,
    pub sleep: &'a (dyn Fn(Duration) + Sync),
}

fn real_sleep(d: Duration) {
    std::thread::sleep(d)
}

impl Default for RetryPolicy<'_> {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_secs(1),
            sleep: &real_sleep,
        }
    }
}

/// Endpoint, credentials and retry settings for a fetch.
pub struct Client<'a> {
    pub transport: &'a dyn Transport,
    pub api_base: String,
    pub token: Option<String>,
    pub retry: RetryPolicy<'a>,
}

impl<'a> Client<'a> {
    pub fn new(transport: &'a dyn Transport) -> Self {
        Client {
            transport,
            api_base: DEFAULT_API_BASE.to_string(),
            token: None,
            retry: RetryPolicy::default(),
        }
    }

    /// Token from the `GH_TOKEN` environment variable, when set.
    pub fn with_env_token(mut self) -> Self {
        self.token = std::env::var(TOKEN_ENV_VAR).ok().filter(|t| !t.is_empty());
        self
    }

    fn is_rate_limited(resp: &HttpResponse) -> bool {
        resp.status == 429 || (resp.status == 403 && resp.header("x-ratelimit-remaining") == Some("0"))
    }

    /// GET with status mapping and rate-limit retries.
    pub fn get(&self, url: &str) -> Result<HttpResponse, IngestError> {
        let attempts = self.retry.attempts.max(1);
        for attempt in 0..attempts {
            let resp = self.transport.get(url, self.token.as_deref())?;
            if Self::is_rate_limited(&resp) {
                if attempt + 1 < attempts {
                    (self.retry.sleep)(self.retry.base_delay * 2u32.pow(attempt));
                }
                continue;
            }
            return match resp.status {
                200..=299 => Ok(resp),
                401 | 403 => Err(IngestError::Auth { url: url.to_string() }),
                404 => Err(IngestError::NotFound { url: url.to_string() }),
                status => Err(IngestError::Http {
                    url: url.to_string(),
                    status,
                }),
            };
        }
        Err(IngestError::RateLimited {
            url: url.to_string(),
            attempts,
        })
    }

    /// The issue body as turn 0 followed by every comment, across all pages.
    pub fn fetch_issue_comments(&self, issue: &IssueRef) -> Result<Vec<RawComment>, IngestError> {
        let base = format!(
            "{}/repos/{}/{}/issues/{}",
            self.api_base.trim_end_matches('/'),
            issue.owner,
            issue.repo,
            issue.number
        );
        let resp = self.get(&base)?;
        let body: ApiItem = parse_json(&resp.body, &base)?;
        let mut out = vec![body.into_comment(issue, true)];
        let mut next = Some(format!("{base}/comments?per_page=100"));
        while let Some(url) = next {
            let resp = self.get(&url)?;
            let page: Vec<ApiItem> = parse_json(&resp.body, &url)?;
            out.extend(page.into_iter().map(|c| c.into_comment(issue, false)));
            next = resp.header("link").and_then(next_link);
        }
        Ok(out)
    }

    /// Fetch several issues with at most `concurrency` in flight. Results
    /// keep the input order.
    pub fn fetch_issues(&self, issues: &[IssueRef], concurrency: usize) -> Result<Vec<Vec<RawComment>>, IngestError> {
        let slots: Vec<Mutex<Option<Thread>>> =
            issues.iter().map(|_| Mutex::new(None)).collect();
        let cursor = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..concurrency.max(1).min(issues.len()) {
                s.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::SeqCst);
                    if i >= issues.len() {
                        break;
                    }
                    let r = self.fetch_issue_comments(&issues[i]);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every issue fetched"))
            .collect()
    }
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &str, url: &str) -> Result<T, IngestError> {
    serde_json::from_str(body).map_err(|e| IngestError::Parse(format!("{url}: {e}")))
}

#[derive(Deserialize)]
struct ApiUser {
    login: String,
}

#[derive(Deserialize)]
struct ApiItem {
    id: u64,
    user: Option<ApiUser>,
    #[serde(default)]
    created_at: String,
    #[serde(default)]
    body: Option<String>,
}

impl ApiItem {
    fn into_comment(self, issue: &IssueRef, is_issue_body: bool) -> RawComment {
        RawComment {
            issue: issue.clone(),
            comment_id: if is_issue_body {
                format!("issue-{}", self.id)
            } else {
                self.id.to_string()
            },
            author: self.user.map_or_else(|| "ghost".to_string(), |u| u.login),
            created_at: self.created_at,
            body: self.body.unwrap_or_default(),
        }
    }
}

/// Target of the `rel="next"` entry of a `Link` header.
pub fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let (url, params) = part.split_once(';')?;
        params
            .split(';')
            .any(|p| matches!(p.trim(), "rel=\"next\"" | "rel=next"))
            .then(|| url.trim().trim_start_matches('<').trim_end_matches('>').to_string())
    })
}
