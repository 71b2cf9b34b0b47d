use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{
    decode_vector, DetokenizeRequest, DetokenizeResponse, ErrorBody, LogprobsRequest,
    LogprobsResponse, ServerInfo, TokenizeRequest, TokenizeResponse,
};
use super::{check_context, LmError, LogProbVector, LogitSource, SpecialTokens, TokenId, TokenSeq};

/// Client for a logit server.
///
/// Vectors are renormalized client-side with log-sum-exp, so objectives
/// always see true log-probabilities whatever precision the server used.
pub struct RemoteSource {
    base_url: String,
    agent: ureq::Agent,
    info: ServerInfo,
    max_batch: usize,
}

impl RemoteSource {
    pub const DEFAULT_MAX_BATCH: usize = 32;

    /// Connects and fetches `/info`.
    pub fn connect(base_url: &str) -> Result<Self, LmError> {
        Self::connect_with(base_url, Duration::from_secs(300))
    }

    pub fn connect_with(base_url: &str, timeout: Duration) -> Result<Self, LmError> {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(timeout)
            .build();
        let base_url = base_url.trim_end_matches('/').to_string();
        let resp = agent
            .get(&format!("{base_url}/info"))
            .call()
            .map_err(map_ureq_error)?;
        let info: ServerInfo = read_json(resp)?;
        if info.vocab_size == 0 {
            return Err(LmError::Protocol("server reports an empty vocabulary".into()));
        }
        if info.special_tokens.eos as usize >= info.vocab_size {
            return Err(LmError::Protocol(format!(
                "eos id {} outside vocabulary of size {}",
                info.special_tokens.eos, info.vocab_size
            )));
        }
        Ok(Self {
            base_url,
            agent,
            info,
            max_batch: Self::DEFAULT_MAX_BATCH,
        })
    }

    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    pub fn info(&self) -> &ServerInfo {
        &self.info
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, LmError> {
        let resp = self
            .agent
            .post(&format!("{}{path}", self.base_url))
            .send_json(body)
            .map_err(map_ureq_error)?;
        read_json(resp)
    }
}

fn read_json<T: DeserializeOwned>(resp: ureq::Response) -> Result<T, LmError> {
    resp.into_json::<T>()
        .map_err(|e| LmError::Protocol(format!("malformed response body: {e}")))
}

fn map_ureq_error(err: ureq::Error) -> LmError {
    match err {
        ureq::Error::Status(code, resp) => {
            let message = resp
                .into_json::<ErrorBody>()
                .map(|b| match b.max_context_len {
                    Some(max) => format!("{} (max context length {max})", b.error),
                    None => b.error,
                })
                .unwrap_or_else(|_| "no error body".to_string());
            match code {
                400 => LmError::InvalidContext(message),
                500..=599 => LmError::Transport(format!("server returned {code}: {message}")),
                _ => LmError::Protocol(format!("unexpected status {code}: {message}")),
            }
        }
        ureq::Error::Transport(t) => LmError::Transport(t.to_string()),
    }
}

impl LogitSource for RemoteSource {
    fn vocab_size(&self) -> usize {
        self.info.vocab_size
    }

    fn special_tokens(&self) -> SpecialTokens {
        SpecialTokens {
            bos: self.info.special_tokens.bos,
            eos: self.info.special_tokens.eos,
            newline: self.info.special_tokens.newline,
        }
    }

    fn next_logprobs(&self, context: &[TokenId]) -> Result<LogProbVector, LmError> {
        let mut out = self.next_logprobs_batch(&[context.to_vec()])?;
        Ok(out.remove(0))
    }

    fn next_logprobs_batch(&self, contexts: &[TokenSeq]) -> Result<Vec<LogProbVector>, LmError> {
        for ctx in contexts {
            check_context(ctx, self.info.vocab_size)?;
        }
        let mut out = Vec::with_capacity(contexts.len());
        for chunk in contexts.chunks(self.max_batch) {
            let resp: LogprobsResponse = self.post(
                "/logprobs",
                &LogprobsRequest {
                    contexts: chunk.to_vec(),
                },
            )?;
            if resp.vectors.len() != chunk.len() {
                return Err(LmError::Protocol(format!(
                    "requested {} vectors, received {}",
                    chunk.len(),
                    resp.vectors.len()
                )));
            }
            for v in resp.vectors {
                if v.len() != self.info.vocab_size {
                    return Err(LmError::Protocol(format!(
                        "vector of length {} for vocabulary of size {}",
                        v.len(),
                        self.info.vocab_size
                    )));
                }
                out.push(LogProbVector::from_logits(decode_vector(&v)));
            }
        }
        Ok(out)
    }

    fn tokenize(&self, text: &str) -> Result<TokenSeq, LmError> {
        let resp: TokenizeResponse = self.post(
            "/tokenize",
            &TokenizeRequest {
                text: text.to_string(),
            },
        )?;
        Ok(resp.ids)
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String, LmError> {
        let resp: DetokenizeResponse = self.post(
            "/detokenize",
            &DetokenizeRequest { ids: ids.to_vec() },
        )?;
        Ok(resp.text)
    }
}
