use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Extra attempts after the first one.
    pub retries: u32,
}

/// POSTs a JSON body, retrying transport errors, non-2xx statuses and
/// undecodable responses. On failure returns the attempt count and the last
/// error message.
pub(crate) fn post_json<B: Serialize, R: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    bearer: Option<&str>,
    body: &B,
    policy: RetryPolicy,
) -> Result<R, (u32, String)> {
    let mut last = String::new();
    let attempts = policy.retries + 1;
    for attempt in 1..=attempts {
        let mut req = client.post(url).json(body);
        if let Some(token) = bearer {
            req = req.bearer_auth(token);
        }
        match req.send() {
            Ok(resp) if resp.status().is_success() => match resp.json::<R>() {
                Ok(v) => return Ok(v),
                Err(e) => last = format!("invalid response body: {e}"),
            },
            Ok(resp) => last = format!("HTTP {}", resp.status()),
            Err(e) => last = e.to_string(),
        }
        log::warn!("POST {url} attempt {attempt}/{attempts} failed: {last}");
    }
    Err((attempts, last))
}
