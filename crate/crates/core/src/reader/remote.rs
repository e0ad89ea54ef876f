use std::sync::{Condvar, Mutex};
use std::time::Duration;

use super::protocol::{candidates_from_reply, ErrorEnvelope, ReadReply, ReadRequest};
use super::{PassageRef, ReadOutput, Reader, ReaderError, ReaderKind, ReaderSpec};

/// Client for a reader served over HTTP. One request carries every passage
/// of a question so the model can normalize across them.
pub struct RemoteReader {
    model_id: String,
    url: String,
    max_answers: usize,
    agent: ureq::Agent,
    gate: Gate,
}

/// Counting gate bounding concurrent requests.
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

impl RemoteReader {
    pub fn new(spec: &ReaderSpec, max_in_flight: usize) -> Result<Self, ReaderError> {
        spec.validate()?;
        if spec.kind != ReaderKind::Remote {
            return Err(ReaderError::InvalidSpec("not a remote reader spec".into()));
        }
        let endpoint = spec.endpoint.as_deref().unwrap_or_default().trim_end_matches('/');
        let url = if endpoint.ends_with("/v1/read") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/v1/read")
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Ok(RemoteReader {
            model_id: spec.model_id.clone(),
            url,
            max_answers: spec.max_answers_per_passage,
            agent,
            gate: Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                limit: max_in_flight.max(1),
            },
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Reader for RemoteReader {
    fn identity(&self) -> String {
        format!("remote:{}@{}", self.model_id, self.url)
    }

    fn read(&self, question_id: &str, question: &str, passages: &[PassageRef<'_>]) -> Result<ReadOutput, ReaderError> {
        if passages.is_empty() {
            return Err(ReaderError::NoPassages(question_id.to_string()));
        }
        let request = ReadRequest::new(question_id, question, passages, self.max_answers);
        let unavailable = |message: String| ReaderError::ReaderUnavailable {
            question_id: question_id.to_string(),
            passage_ids: passages.iter().map(|p| p.passage_id.to_string()).collect(),
            message,
        };
        let protocol = |message: String| ReaderError::ReaderProtocolError {
            question_id: question_id.to_string(),
            passage_id: None,
            message,
        };

        let mut response = {
            let _permit = self.gate.acquire();
            self.agent
                .post(&self.url)
                .send_json(&request)
                .map_err(|e| unavailable(e.to_string()))?
        };
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| unavailable(format!("reading reply: {e}")))?;
        if !(200..300).contains(&status) {
            let detail = serde_json::from_str::<ErrorEnvelope>(&body)
                .map(|e| format!("{}: {}", e.error.code, e.error.message))
                .unwrap_or(body);
            let message = format!("HTTP {status}: {detail}");
            return Err(if status >= 500 { unavailable(message) } else { protocol(message) });
        }
        let reply: ReadReply = serde_json::from_str(&body).map_err(|e| protocol(format!("malformed reply: {e}")))?;
        let globally_normalized = reply.globally_normalized;
        let candidates = candidates_from_reply(&request, reply)?;
        Ok(ReadOutput {
            globally_normalized,
            candidates,
        })
    }
}
