use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::Mutex;

use lru::LruCache;

use super::{LmError, LogProbVector, LogitSource, SpecialTokens, TokenId, TokenSeq};

/// Aggregate lookup statistics of a [`CachedSource`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub lookups: u64,
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        if self.lookups == 0 {
            0.0
        } else {
            self.hits as f64 / self.lookups as f64
        }
    }
}

/// Per-context counters, recorded only when the query log is enabled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ContextQueries {
    /// Requests made through the wrapper for this context.
    pub lookups: u64,
    /// Calls forwarded to the wrapped source for this context.
    pub calls: u64,
}

/// LRU memo in front of a logit source, keyed by the exact context.
///
/// Lookups and insertions take a short lock; the wrapped source is queried
/// outside the lock, so two threads missing on the same context may both
/// forward it.
pub struct CachedSource<S> {
    inner: S,
    memo: Mutex<LruCache<TokenSeq, LogProbVector>>,
    stats: Mutex<CacheStats>,
    query_log: Option<Mutex<HashMap<TokenSeq, ContextQueries>>>,
}

impl<S: LogitSource> CachedSource<S> {
    pub const DEFAULT_CAPACITY: usize = 1 << 16;

    pub fn new(inner: S, capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        Self {
            inner,
            memo: Mutex::new(LruCache::new(capacity)),
            stats: Mutex::new(CacheStats::default()),
            query_log: None,
        }
    }

    /// Enables per-context counters. Memory grows with the number of
    /// distinct contexts, so this is meant for tests and small runs.
    pub fn with_query_log(mut self) -> Self {
        self.query_log = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn stats(&self) -> CacheStats {
        *self.stats.lock().unwrap()
    }

    /// Counters for one context; zero when the query log is disabled.
    pub fn queries_for(&self, context: &[TokenId]) -> ContextQueries {
        self.query_log
            .as_ref()
            .and_then(|log| log.lock().unwrap().get(context).copied())
            .unwrap_or_default()
    }

    /// Number of distinct contexts forwarded to the wrapped source.
    pub fn distinct_contexts_called(&self) -> usize {
        self.query_log
            .as_ref()
            .map_or(0, |log| log.lock().unwrap().values().filter(|q| q.calls > 0).count())
    }

    pub fn reset_counters(&self) {
        *self.stats.lock().unwrap() = CacheStats::default();
        if let Some(log) = &self.query_log {
            log.lock().unwrap().clear();
        }
    }

    fn record(&self, context: &[TokenId], hit: bool) {
        {
            let mut stats = self.stats.lock().unwrap();
            stats.lookups += 1;
            if hit {
                stats.hits += 1;
            } else {
                stats.misses += 1;
            }
        }
        if let Some(log) = &self.query_log {
            let mut log = log.lock().unwrap();
            let entry = log.entry(context.to_vec()).or_default();
            entry.lookups += 1;
            if !hit {
                entry.calls += 1;
            }
        }
    }
}

impl<S: LogitSource> LogitSource for CachedSource<S> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn special_tokens(&self) -> SpecialTokens {
        self.inner.special_tokens()
    }

    fn next_logprobs(&self, context: &[TokenId]) -> Result<LogProbVector, LmError> {
        let cached = self.memo.lock().unwrap().get(context).cloned();
        self.record(context, cached.is_some());
        if let Some(v) = cached {
            return Ok(v);
        }
        let v = self.inner.next_logprobs(context)?;
        self.memo.lock().unwrap().put(context.to_vec(), v.clone());
        Ok(v)
    }

    fn next_logprobs_batch(&self, contexts: &[TokenSeq]) -> Result<Vec<LogProbVector>, LmError> {
        let mut out: Vec<Option<LogProbVector>> = {
            let mut memo = self.memo.lock().unwrap();
            contexts.iter().map(|c| memo.get(c).cloned()).collect()
        };
        // Duplicate contexts inside one batch are forwarded once.
        let mut pending: Vec<TokenSeq> = Vec::new();
        let mut slot_of: HashMap<&TokenSeq, usize> = HashMap::new();
        for (ctx, hit) in contexts.iter().zip(&out) {
            let first_miss = hit.is_none() && !slot_of.contains_key(ctx);
            self.record(ctx, !first_miss);
            if first_miss {
                slot_of.insert(ctx, pending.len());
                pending.push(ctx.clone());
            }
        }
        if !pending.is_empty() {
            let fresh = self.inner.next_logprobs_batch(&pending)?;
            if fresh.len() != pending.len() {
                return Err(LmError::Protocol(format!(
                    "source returned {} vectors for {} contexts",
                    fresh.len(),
                    pending.len()
                )));
            }
            {
                let mut memo = self.memo.lock().unwrap();
                for (ctx, v) in pending.iter().zip(&fresh) {
                    memo.put(ctx.clone(), v.clone());
                }
            }
            for (ctx, slot) in contexts.iter().zip(out.iter_mut()) {
                if slot.is_none() {
                    *slot = Some(fresh[slot_of[ctx]].clone());
                }
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every slot filled")).collect())
    }

    fn tokenize(&self, text: &str) -> Result<TokenSeq, LmError> {
        self.inner.tokenize(text)
    }

    fn detokenize(&self, ids: &[TokenId]) -> Result<String, LmError> {
        self.inner.detokenize(ids)
    }
}
