//! Deterministic embeddings standing in for a pretrained encoder.
//!
//! Node features are one-hot category ⊕ one-hot state, so cosines between
//! node embeddings are exactly 0.0, 0.5 or 1.0: same category and state give
//! 1.0, agreement in exactly one of the two halves gives 0.5, disjoint pairs
//! give 0.0. Subtask text embeds as a hashed bag of tokens: FNV-1a 64-bit of
//! the token bytes modulo `text_dim` buckets, count-weighted. Bucket
//! collisions are tolerable by design (retrieval is threshold + top-k, and a
//! single collision between two-token strings caps the spurious cosine at
//! 0.5, below the 0.8 retrieval floor); the tokens that can actually occur in
//! subtask strings happen to be collision-free at the default 256 buckets,
//! which a test pins down.
//!
//! A remote encoder can replace the built-in provider behind
//! [`EmbeddingProvider`]; it must speak the request/response documents
//! defined by [`ProviderRequest`]/[`ProviderResponse`].

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::fnv1a;
use crate::vocab::{VocabError, Vocabulary};

/// Fixed-dimension real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Errors from embedding or cosine computation.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbedError {
    Vocab(VocabError),
    EmptyTokens,
    ZeroVector,
    DimensionMismatch { left: usize, right: usize },
    Provider(String),
}

impl core::fmt::Display for EmbedError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EmbedError::Vocab(e) => write!(f, "{e}"),
            EmbedError::EmptyTokens => write!(f, "cannot embed an empty token list"),
            EmbedError::ZeroVector => write!(f, "cosine of a zero vector is undefined"),
            EmbedError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            EmbedError::Provider(msg) => write!(f, "embedding provider error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EmbedError {}

impl From<VocabError> for EmbedError {
    fn from(e: VocabError) -> Self {
        EmbedError::Vocab(e)
    }
}

/// Configuration of the hashed text embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextEmbedConfig {
    /// Number of hash buckets; positive.
    pub dim: usize,
}

impl Default for TextEmbedConfig {
    fn default() -> Self {
        TextEmbedConfig { dim: 256 }
    }
}

/// Which provider backs the embedding calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    OnehotBuiltin,
    Remote,
}

/// Provider selection; remote mode requires an endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote_endpoint: Option<String>,
    pub text_dim: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::OnehotBuiltin,
            remote_endpoint: None,
            text_dim: 256,
        }
    }
}

/// Request document of the remote provider protocol:
/// `{"kind": "node"|"text", "payload": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum ProviderRequest {
    Node { category: String, state: String },
    Text { tokens: Vec<String> },
}

/// Response document of the remote provider protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub vector: Vec<f64>,
}


/// Anything that can produce node and text feature vectors.
pub trait EmbeddingProvider {
    fn node(&self, category: &str, state: &str) -> Result<EmbeddingVector, EmbedError>;
    fn text(&self, tokens: &[&str]) -> Result<EmbeddingVector, EmbedError>;
}

/// The built-in deterministic provider.
#[derive(Debug, Clone)]
pub struct OneHotProvider<'a> {
    vocab: &'a Vocabulary,
    text: TextEmbedConfig,
}

impl<'a> OneHotProvider<'a> {
    pub fn new(vocab: &'a Vocabulary, text: TextEmbedConfig) -> Self {
        OneHotProvider { vocab, text }
    }

    pub fn with_defaults(vocab: &'a Vocabulary) -> Self {
        Self::new(vocab, TextEmbedConfig::default())
    }
}

impl EmbeddingProvider for OneHotProvider<'_> {
    fn node(&self, category: &str, state: &str) -> Result<EmbeddingVector, EmbedError> {
        embed_node(self.vocab, category, state)
    }

    fn text(&self, tokens: &[&str]) -> Result<EmbeddingVector, EmbedError> {
        embed_text(tokens, &self.text)
    }
}

/// One-hot category half ⊕ one-hot state half; L2 norm is exactly √2.
pub fn embed_node(
    vocab: &Vocabulary,
    category: &str,
    state: &str,
) -> Result<EmbeddingVector, EmbedError> {
    vocab.check_state(category, state)?;
    let cat_index = vocab.category_index(category)?;
    let states = vocab.state_labels();
    let state_index = states
        .binary_search(&state)
        .map_err(|_| VocabError::InadmissibleState {
            category: category.to_string(),
            state: state.to_string(),
        })?;
    let mut values = vec![0.0; vocab.categories.len() + states.len()];
    values[cat_index] = 1.0;
    values[vocab.categories.len() + state_index] = 1.0;
    Ok(EmbeddingVector { values })
}

/// Hashed bag-of-tokens vector: FNV-1a(token) mod `dim`, count-weighted.
pub fn embed_text(tokens: &[&str], cfg: &TextEmbedConfig) -> Result<EmbeddingVector, EmbedError> {
    if tokens.is_empty() {
        return Err(EmbedError::EmptyTokens);
    }
    let mut values = vec![0.0; cfg.dim];
    for token in tokens {
        let bucket = (fnv1a(token.as_bytes()) % cfg.dim as u64) as usize;
        values[bucket] += 1.0;
    }
    Ok(EmbeddingVector { values })
}

/// Bucket index a token hashes to; exposed so tests can reason about
/// collisions explicitly.
pub fn text_bucket(token: &str, cfg: &TextEmbedConfig) -> usize {
    (fnv1a(token.as_bytes()) % cfg.dim as u64) as usize
}

/// Standard cosine similarity, clamped to `[-1, 1]` against rounding.
///
/// The denominator is computed as `sqrt(|a|² · |b|²)` so that cosines of
/// integer-valued vectors (all vectors produced in this crate) are exact:
/// identical inputs yield exactly 1.0, disjoint one-hots exactly 0.0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let norm_sq_a = a.norm_sq();
    let norm_sq_b = b.norm_sq();
    if norm_sq_a == 0.0 || norm_sq_b == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let value = dot / crate::sqrt(norm_sq_a * norm_sq_b);
    Ok(value.clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::builtin()
    }

    // Independent oracle: cosine by naive literal arithmetic over the raw
    // vectors, no shared code path with `cosine`.
    fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn node_embedding_norm_is_sqrt_two() {
        let v = vocab();
        let e = embed_node(&v, "pan", "clean").unwrap();
        assert_eq!(e.norm_sq(), 2.0);
        assert_eq!(e.dim(), v.categories.len() + v.state_labels().len());
    }

    #[test]
    fn node_cosines_are_discrete() {
        let v = vocab();
        let pan_clean = embed_node(&v, "pan", "clean").unwrap();
        let pan_clean2 = embed_node(&v, "pan", "clean").unwrap();
        let pan_dirty = embed_node(&v, "pan", "dirty").unwrap();
        let stove_off = embed_node(&v, "stove", "off").unwrap();

        assert_eq!(cosine(&pan_clean, &pan_clean2).unwrap(), 1.0);
        let c = cosine(&pan_clean, &pan_dirty).unwrap();
        assert_eq!(c, 0.5);
        assert!((c - cosine_oracle(&pan_clean.values, &pan_dirty.values)).abs() < 1e-12);
        assert_eq!(cosine(&pan_clean, &stove_off).unwrap(), 0.0);
    }

    #[test]
    fn inadmissible_pair_rejected() {
        assert!(matches!(
            embed_node(&vocab(), "pan", "open"),
            Err(EmbedError::Vocab(_))
        ));
    }

    #[test]
    fn text_embedding_examples() {
        let cfg = TextEmbedConfig::default();
        let a = embed_text(&["pick_up", "mug"], &cfg).unwrap();
        let b = embed_text(&["pick_up", "mug"], &cfg).unwrap();
        assert_eq!(cosine(&a, &b).unwrap(), 1.0);

        // Verify the no-collision assumption by listing buckets explicitly.
        let buckets: Vec<usize> = ["pick_up", "mug", "open", "fridge", "pan"]
            .iter()
            .map(|t| text_bucket(t, &cfg))
            .collect();
        let mut unique = buckets.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), buckets.len(), "tokens collide: {buckets:?}");

        let c = embed_text(&["open", "fridge"], &cfg).unwrap();
        assert_eq!(cosine(&a, &c).unwrap(), 0.0);

        let d = embed_text(&["pick_up", "pan"], &cfg).unwrap();
        let got = cosine(&a, &d).unwrap();
        assert_eq!(got, 0.5);
        assert!((got - cosine_oracle(&a.values, &d.values)).abs() < 1e-12);
    }

    #[test]
    fn empty_tokens_rejected() {
        assert_eq!(
            embed_text(&[], &TextEmbedConfig::default()),
            Err(EmbedError::EmptyTokens)
        );
    }

    #[test]
    fn cosine_errors() {
        let v = EmbeddingVector {
            values: alloc::vec![1.0, 0.0],
        };
        let w = EmbeddingVector {
            values: alloc::vec![1.0, 0.0, 0.0],
        };
        let z = EmbeddingVector {
            values: alloc::vec![0.0, 0.0],
        };
        assert!(matches!(
            cosine(&v, &w),
            Err(EmbedError::DimensionMismatch { .. })
        ));
        assert!(matches!(cosine(&v, &z), Err(EmbedError::ZeroVector)));
    }

    #[test]
    fn subtask_tokens_do_not_collide() {
        // Subtask strings are `verb arg...` where arguments are object
        // categories; the gripper category never appears in one (plans do
        // not manipulate the gripper itself), so it sits outside the
        // collision-free guarantee.
        let v = vocab();
        let cfg = TextEmbedConfig::default();
        let tokens: Vec<&str> = v
            .categories
            .iter()
            .map(|c| c.name.as_str())
            .filter(|c| *c != crate::vocab::GRIPPER_CATEGORY)
            .chain(v.verbs.iter().map(|w| w.name.as_str()))
            .collect();
        let mut buckets: Vec<(usize, &str)> =
            tokens.iter().map(|t| (text_bucket(t, &cfg), *t)).collect();
        buckets.sort_unstable();
        for w in buckets.windows(2) {
            assert_ne!(
                w[0].0, w[1].0,
                "tokens `{}` and `{}` share a bucket",
                w[0].1, w[1].1
            );
        }
    }

    #[test]
    fn cosine_scale_invariance() {
        let v = EmbeddingVector {
            values: alloc::vec![1.0, 2.0, 3.0],
        };
        let scaled = EmbeddingVector {
            values: alloc::vec![2.0, 4.0, 6.0],
        };
        assert!((cosine(&v, &scaled).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&v, &v).unwrap(), 1.0);
    }
}
