//! Uniform `[-1, 1)` entropy streams.
//!
//! Three providers implement the same contract:
//!
//! * **Seeded** — a splitmix64 generator, fully specified below so that
//!   implementations in other languages reproduce the exact stream;
//! * **Entropy file** — raw little-endian unsigned 16-bit words, no
//!   header, each word `w` mapped to `2 w / 65536 - 1`;
//! * **Remote service** — a quantum random-number HTTP endpoint whose
//!   words are cached to an entropy file, after which runs replay from
//!   the cache byte-for-byte.
//!
//! Finite sources never wrap around: running out of words is always an
//! explicit error. `substream(i)` derives deterministic, pairwise
//! disjoint streams for independent experiment runs — reseeding for the
//! seeded provider, fixed-size word blocks for file-backed providers.
//!
//! # Seeded algorithm
//!
//! State advances by the 64-bit golden-ratio constant and is finalized
//! with the splitmix64 mixer:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! A draw takes the top 53 bits of the output as a dyadic rational in
//! `[0, 1)` and maps it affinely to `[-1, 1)`. `substream(i)` of a seeded
//! source with base seed `seed` is the seeded source with seed
//! `mix64(seed + GOLDEN * (i + 1))` where `mix64` is the finalizer above.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th substream derived from `seed`.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Map a 16-bit entropy word to `[-1, 1)`: `w -> 2 w / 65536 - 1`.
pub fn word_to_uniform(word: u16) -> f64 {
    2.0 * (word as f64 / 65536.0) - 1.0
}

/// The documented splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Next value in `[-1, 1)` using the top 53 bits.
    pub fn next_uniform(&mut self) -> f64 {
        let top53 = self.next_u64() >> 11;
        2.0 * (top53 as f64 / 9_007_199_254_740_992.0) - 1.0
    }
}

#[derive(Debug, Clone)]
enum Provider {
    Seeded {
        seed: u64,
        rng: SplitMix64,
    },
    Words {
        words: Arc<Vec<u16>>,
        cursor: usize,
        limit: usize,
        label: String,
    },
}

/// A single-consumer stream of uniform `[-1, 1)` values.
///
/// Cloning duplicates the stream position; substreams are the supported
/// way to hand independent portions to concurrent consumers.
#[derive(Debug, Clone)]
pub struct RandomSource {
    provider: Provider,
    /// Words per substream block for finite providers; `None` until the
    /// consumer (typically the experiment) decides the per-run budget.
    block_size: Option<usize>,
}

impl RandomSource {
    /// Deterministic pseudo-random source.
    pub fn seeded(seed: u64) -> Self {
        Self {
            provider: Provider::Seeded {
                seed,
                rng: SplitMix64::new(seed),
            },
            block_size: None,
        }
    }

    /// Source backed by an in-memory word buffer (tests, remote caches).
    pub fn from_words(words: Vec<u16>) -> Self {
        let limit = words.len();
        Self {
            provider: Provider::Words {
                words: Arc::new(words),
                cursor: 0,
                limit,
                label: "words".into(),
            },
            block_size: None,
        }
    }

    /// Source backed by a raw little-endian 16-bit entropy file.
    pub fn from_entropy_file(path: &Path) -> Result<Self> {
        let words = read_entropy_file(path)?;
        let limit = words.len();
        Ok(Self {
            provider: Provider::Words {
                words: Arc::new(words),
                cursor: 0,
                limit,
                label: path.display().to_string(),
            },
            block_size: None,
        })
    }

    /// Set the substream block size (number of words per block) for
    /// finite providers. Ignored by seeded sources.
    pub fn with_block_size(mut self, words_per_block: usize) -> Self {
        self.block_size = Some(words_per_block);
        self
    }

    pub fn block_size(&self) -> Option<usize> {
        self.block_size
    }

    /// True for providers with a finite word supply.
    pub fn is_finite(&self) -> bool {
        matches!(self.provider, Provider::Words { .. })
    }

    /// Words left before exhaustion, if the provider is finite.
    pub fn remaining(&self) -> Option<usize> {
        match &self.provider {
            Provider::Seeded { .. } => None,
            Provider::Words {
                words,
                cursor,
                limit,
                ..
            } => Some((*limit).min(words.len()).saturating_sub(*cursor)),
        }
    }

    /// Next value in `[-1, 1)`, advancing the stream by one position.
    pub fn next_uniform(&mut self) -> Result<f64> {
        match &mut self.provider {
            Provider::Seeded { rng, .. } => Ok(rng.next_uniform()),
            Provider::Words {
                words,
                cursor,
                limit,
                label,
            } => {
                if *cursor >= *limit {
                    return Err(Error::EntropyExhausted(format!(
                        "block of {label} exhausted after {limit} words"
                    )));
                }
                if *cursor >= words.len() {
                    return Err(Error::EntropyExhausted(format!(
                        "{label} exhausted after {} words",
                        words.len()
                    )));
                }
                let value = word_to_uniform(words[*cursor]);
                *cursor += 1;
                Ok(value)
            }
        }
    }

    /// Derive the `index`-th substream.
    ///
    /// Seeded sources reseed with [`substream_seed`]; finite sources
    /// expose the word block `[index * B, (index + 1) * B)` where `B` is
    /// the configured block size (the whole stream when unset, in which
    /// case only substream 0 is non-empty). Substreams are deterministic
    /// functions of the provider state at construction, independent of
    /// draws taken since.
    pub fn substream(&self, index: u64) -> RandomSource {
        match &self.provider {
            Provider::Seeded { seed, .. } => {
                let mut sub = RandomSource::seeded(substream_seed(*seed, index));
                sub.block_size = self.block_size;
                sub
            }
            Provider::Words { words, label, .. } => {
                let block = self.block_size.unwrap_or(words.len());
                let start = (index as usize).saturating_mul(block).min(words.len());
                let limit = start.saturating_add(block);
                RandomSource {
                    provider: Provider::Words {
                        words: Arc::clone(words),
                        cursor: start,
                        limit,
                        label: format!("{label}[block {index}]"),
                    },
                    block_size: self.block_size,
                }
            }
        }
    }

    /// One-line provenance string for run manifests.
    pub fn describe(&self) -> String {
        match &self.provider {
            Provider::Seeded { seed, .. } => format!("seeded({seed})"),
            Provider::Words { words, label, .. } => {
                format!("{label} ({} words)", words.len())
            }
        }
    }
}

/// Read a raw little-endian 16-bit entropy file.
pub fn read_entropy_file(path: &Path) -> Result<Vec<u16>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 2 != 0 {
        return Err(Error::Validation(format!(
            "entropy file {} has odd length {} (expects 16-bit words)",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|pair| u16::from_le_bytes([pair[0], pair[1]]))
        .collect())
}

/// Append words to an entropy cache file, creating it if missing.
pub fn append_entropy_file(path: &Path, words: &[u16]) -> Result<()> {
    use std::io::Write;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut bytes = Vec::with_capacity(words.len() * 2);
    for w in words {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}

/// Environment variable naming the default remote entropy endpoint.
pub const QRNG_URL_ENV: &str = "QTNN_QRNG_URL";
/// Environment variable overriding the request timeout in seconds.
pub const QRNG_TIMEOUT_ENV: &str = "QTNN_QRNG_TIMEOUT_SECS";
/// Environment variable overriding the per-request retry count.
pub const QRNG_RETRIES_ENV: &str = "QTNN_QRNG_RETRIES";

/// Client for a remote quantum random-number HTTP service.
///
/// The service contract: `GET <endpoint>?length=<count>&type=uint16`
/// answers with a JSON object containing a `data` array of integers in
/// `[0, 65535]`. Requests are chunked to `max_batch` words and retried a
/// bounded number of times; the client never blocks indefinitely.
#[derive(Debug, Clone)]
pub struct QrngClient {
    endpoint: String,
    timeout: Duration,
    retries: u32,
    max_batch: usize,
}

#[derive(serde::Deserialize)]
struct QrngPayload {
    data: Vec<i64>,
}

impl QrngClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let mut client = Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(10),
            retries: 2,
            max_batch: 1024,
        };
        if let Some(secs) = read_env_number(QRNG_TIMEOUT_ENV) {
            client.timeout = Duration::from_secs(secs);
        }
        if let Some(retries) = read_env_number(QRNG_RETRIES_ENV) {
            client.retries = retries as u32;
        }
        client
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    pub fn with_max_batch(mut self, max_batch: usize) -> Self {
        self.max_batch = max_batch.max(1);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Fetch exactly `count` words from the service.
    ///
    /// Transport failures (unreachable host, timeout, HTTP error status)
    /// map to [`Error::EntropyUnavailable`]; a reachable service answering
    /// garbage maps to [`Error::Protocol`].
    pub fn fetch(&self, count: usize) -> Result<Vec<u16>> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let mut words = Vec::with_capacity(count);
        while words.len() < count {
            let batch = (count - words.len()).min(self.max_batch);
            words.extend(self.fetch_batch(&agent, batch)?);
        }
        words.truncate(count);
        Ok(words)
    }

    fn fetch_batch(&self, agent: &ureq::Agent, batch: usize) -> Result<Vec<u16>> {
        let mut last_err = None;
        for _ in 0..=self.retries {
            match agent
                .get(&self.endpoint)
                .query("length", batch.to_string())
                .query("type", "uint16")
                .call()
            {
                Ok(mut response) => {
                    let payload: QrngPayload = response.body_mut().read_json().map_err(|e| {
                        Error::Protocol(format!("malformed response from {}: {e}", self.endpoint))
                    })?;
                    if payload.data.len() != batch {
                        return Err(Error::Protocol(format!(
                            "asked {} for {batch} words, got {}",
                            self.endpoint,
                            payload.data.len()
                        )));
                    }
                    return payload
                        .data
                        .iter()
                        .map(|&w| {
                            u16::try_from(w).map_err(|_| {
                                Error::Protocol(format!(
                                    "word {w} from {} outside [0, 65535]",
                                    self.endpoint
                                ))
                            })
                        })
                        .collect();
                }
                Err(err) => last_err = Some(err),
            }
        }
        Err(Error::EntropyUnavailable(format!(
            "{} unreachable after {} attempts: {}",
            self.endpoint,
            self.retries + 1,
            last_err.expect("at least one attempt")
        )))
    }
}

fn read_env_number(name: &str) -> Option<u64> {
    std::env::var(name).ok()?.trim().parse().ok()
}

/// Outcome of [`fetch_remote_entropy`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    /// Words fetched from the network in this call (0 when the cache
    /// absorbed a network failure).
    pub fetched: usize,
    /// Total words now present in the cache file.
    pub cached_total: usize,
    /// True when the network failed and the existing cache was used.
    pub used_cache_fallback: bool,
}

/// Fetch `count` words from a remote service and append them to `cache`.
///
/// Offline-first: on network failure with a non-empty cache the call
/// degrades to the cached words instead of failing; with an empty cache
/// it reports [`Error::EntropyUnavailable`]. Protocol violations are
/// always errors.
pub fn fetch_remote_entropy(
    client: &QrngClient,
    count: usize,
    cache: &Path,
) -> Result<FetchOutcome> {
    let existing = if cache.exists() {
        read_entropy_file(cache)?
    } else {
        Vec::new()
    };
    match client.fetch(count) {
        Ok(words) => {
            append_entropy_file(cache, &words)?;
            Ok(FetchOutcome {
                fetched: words.len(),
                cached_total: existing.len() + words.len(),
                used_cache_fallback: false,
            })
        }
        Err(Error::EntropyUnavailable(message)) => {
            if existing.is_empty() {
                Err(Error::EntropyUnavailable(format!(
                    "{message}; cache {} is empty",
                    cache.display()
                )))
            } else {
                Ok(FetchOutcome {
                    fetched: 0,
                    cached_total: existing.len(),
                    used_cache_fallback: true,
                })
            }
        }
        Err(other) => Err(other),
    }
}

/// Make sure `cache` holds at least `needed` words, fetching the shortfall
/// from the service, and return a source over the cache.
///
/// Never touches the network when the cache already suffices. On network
/// failure the unread cache contents are still used; exhaustion then
/// surfaces as an explicit error at draw time.
pub fn remote_source(client: &QrngClient, cache: &Path, needed: usize) -> Result<RandomSource> {
    let have = if cache.exists() {
        read_entropy_file(cache)?.len()
    } else {
        0
    };
    if have < needed {
        fetch_remote_entropy(client, needed - have, cache)?;
    }
    RandomSource::from_entropy_file(cache)
}
