use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tiny_http::{Header, Method, Response, Server};

use super::protocol::{
    encode_vector, DetokenizeRequest, DetokenizeResponse, ErrorBody, LogprobsRequest,
    LogprobsResponse, ServerInfo, SpecialTokenIds, TokenizeRequest, TokenizeResponse,
    NORMALIZATION_LOGPROB,
};
use super::{LmError, LogitSource};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub model_name: String,
    pub max_batch: usize,
    pub max_context_len: usize,
    pub workers: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            model_name: "toy-ngram".to_string(),
            max_batch: 64,
            max_context_len: 4096,
            workers: 4,
        }
    }
}

/// Serves a [`LogitSource`] over the logit-server protocol.
///
/// Used as the in-process mock of a real model server; the remote client
/// treats it exactly like one.
pub struct LogitServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

impl LogitServer {
    /// Binds an ephemeral port on the loopback interface.
    pub fn spawn<S: LogitSource + 'static>(source: S, config: ServerConfig) -> Result<Self, LmError> {
        Self::bind("127.0.0.1:0", source, config)
    }

    pub fn bind<S: LogitSource + 'static>(
        addr: &str,
        source: S,
        config: ServerConfig,
    ) -> Result<Self, LmError> {
        let server = Server::http(addr)
            .map_err(|e| LmError::Transport(format!("cannot bind {addr}: {e}")))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| LmError::Transport("server is not bound to an IP address".into()))?;
        let server = Arc::new(server);
        let app = Arc::new(App::new(source, config.clone()));
        let workers = (0..config.workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let app = Arc::clone(&app);
                std::thread::spawn(move || {
                    while let Ok(mut request) = server.recv() {
                        let mut body = String::new();
                        let (status, payload) = match request.as_reader().read_to_string(&mut body) {
                            Ok(_) => app.handle(request.method(), request.url(), &body),
                            Err(e) => error(400, format!("unreadable body: {e}"), None),
                        };
                        let header = Header::from_bytes("Content-Type", "application/json")
                            .expect("static header");
                        let response = Response::from_string(payload)
                            .with_status_code(status)
                            .with_header(header);
                        let _ = request.respond(response);
                    }
                })
            })
            .collect();
        Ok(Self {
            server,
            workers,
            addr,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the worker threads exit (they run until shutdown).
    pub fn wait(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    pub fn shutdown(self) {
        drop(self);
    }
}

impl Drop for LogitServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

struct App<S> {
    source: S,
    config: ServerConfig,
    info: ServerInfo,
}

fn error(status: u16, message: String, max_context_len: Option<usize>) -> (u16, String) {
    let body = ErrorBody {
        error: message,
        max_context_len,
    };
    (status, serde_json::to_string(&body).expect("error body serializes"))
}

fn ok<T: Serialize>(body: &T) -> (u16, String) {
    (200, serde_json::to_string(body).expect("response serializes"))
}

fn parse<T: DeserializeOwned>(body: &str) -> Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| error(400, format!("malformed request: {e}"), None))
}

fn lm_error(err: LmError) -> (u16, String) {
    match err {
        LmError::Transport(msg) => error(503, msg, None),
        other => error(400, other.to_string(), None),
    }
}

impl<S: LogitSource> App<S> {
    fn new(source: S, config: ServerConfig) -> Self {
        let special = source.special_tokens();
        let info = ServerInfo {
            model: config.model_name.clone(),
            vocab_size: source.vocab_size(),
            special_tokens: SpecialTokenIds {
                bos: special.bos,
                eos: special.eos,
                newline: special.newline,
            },
            normalization: NORMALIZATION_LOGPROB.to_string(),
        };
        Self {
            source,
            config,
            info,
        }
    }

    fn handle(&self, method: &Method, url: &str, body: &str) -> (u16, String) {
        let path = url.split('?').next().unwrap_or(url);
        let result = match (method, path) {
            (Method::Get, "/info") => Ok(ok(&self.info)),
            (Method::Post, "/tokenize") => self.tokenize(body),
            (Method::Post, "/detokenize") => self.detokenize(body),
            (Method::Post, "/logprobs") => self.logprobs(body),
            (_, "/info" | "/tokenize" | "/detokenize" | "/logprobs") => {
                Err(error(405, format!("method {method} not allowed on {path}"), None))
            }
            _ => Err(error(404, format!("no route for {path}"), None)),
        };
        result.unwrap_or_else(|e| e)
    }

    fn tokenize(&self, body: &str) -> Result<(u16, String), (u16, String)> {
        let req: TokenizeRequest = parse(body)?;
        let ids = self.source.tokenize(&req.text).map_err(lm_error)?;
        Ok(ok(&TokenizeResponse { ids }))
    }

    fn detokenize(&self, body: &str) -> Result<(u16, String), (u16, String)> {
        let req: DetokenizeRequest = parse(body)?;
        let text = self.source.detokenize(&req.ids).map_err(lm_error)?;
        Ok(ok(&DetokenizeResponse { text }))
    }

    fn logprobs(&self, body: &str) -> Result<(u16, String), (u16, String)> {
        let req: LogprobsRequest = parse(body)?;
        if req.contexts.len() > self.config.max_batch {
            return Err(error(
                400,
                format!(
                    "batch of {} exceeds the maximum of {}",
                    req.contexts.len(),
                    self.config.max_batch
                ),
                None,
            ));
        }
        for ctx in &req.contexts {
            if ctx.is_empty() {
                return Err(error(400, "empty context".into(), None));
            }
            if ctx.len() > self.config.max_context_len {
                return Err(error(
                    400,
                    format!("context of {} tokens is too long", ctx.len()),
                    Some(self.config.max_context_len),
                ));
            }
        }
        let vectors = self
            .source
            .next_logprobs_batch(&req.contexts)
            .map_err(lm_error)?;
        Ok(ok(&LogprobsResponse {
            vectors: vectors.iter().map(|v| encode_vector(v.values())).collect(),
        }))
    }
}
