//! Thin blocking HTTP client over the server wire types.

use anyhow::{anyhow, bail, Result};
use laminar_core::server::ApiError;
use reqwest::blocking::{Client, RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde_json::Value;

pub struct Api {
    base: String,
    token: Option<String>,
    http: Client,
}

impl Api {
    pub fn new(addr: &str, token: Option<String>) -> Self {
        let base = if addr.starts_with("http://") || addr.starts_with("https://") {
            addr.trim_end_matches('/').to_string()
        } else {
            format!("http://{}", addr.trim_end_matches('/'))
        };
        Api { base, token, http: Client::new() }
    }

    fn prepared(&self, builder: RequestBuilder) -> RequestBuilder {
        match &self.token {
            Some(token) => builder.header("Authorization", format!("Bearer {token}")),
            None => builder,
        }
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let response =
            self.prepared(self.http.get(format!("{}{path}", self.base))).send()?;
        decode(response)
    }

    pub fn post<T: DeserializeOwned>(&self, path: &str, body: &Value) -> Result<T> {
        let response = self
            .prepared(self.http.post(format!("{}{path}", self.base)))
            .json(body)
            .send()?;
        decode(response)
    }

    pub fn put<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let response =
            self.prepared(self.http.put(format!("{}{path}", self.base))).send()?;
        decode(response)
    }

    pub fn delete<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let response =
            self.prepared(self.http.delete(format!("{}{path}", self.base))).send()?;
        decode(response)
    }
}

fn decode<T: DeserializeOwned>(response: Response) -> Result<T> {
    let status = response.status();
    if status.is_success() {
        return response
            .json::<T>()
            .map_err(|e| anyhow!("malformed server response: {e}"));
    }
    match response.json::<ApiError>() {
        Ok(error) => {
            let parameters = if error.failed_parameters.is_empty() {
                String::new()
            } else {
                let list: Vec<String> = error
                    .failed_parameters
                    .iter()
                    .map(|(k, v)| format!("{k}: {v}"))
                    .collect();
                format!(" [{}]", list.join("; "))
            };
            bail!("{} ({}): {}{}", error.kind, error.code, error.details, parameters)
        }
        Err(_) => bail!("server returned {status} with an unreadable body"),
    }
}

/// Percent-encodes a path segment (query text may contain anything).
pub fn encode_segment(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for byte in text.bytes() {
        match byte {
            b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_encoding() {
        assert_eq!(encode_segment("random.randint(1, 1000)"), "random.randint%281%2C%201000%29");
        assert_eq!(encode_segment("prime"), "prime");
    }
}
