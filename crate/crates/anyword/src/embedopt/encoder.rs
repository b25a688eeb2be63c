//! Text-encoder handles: the trait the pipeline programs against, a
//! deterministic toy encoder for CI, and the low-rank adapted wrapper.

use sha2::{Digest, Sha256};
use std::collections::BTreeSet;

/// Frozen text encoder producing per-word embeddings.
pub trait TextEncoder: Send + Sync {
    fn width(&self) -> usize;
    /// Embedding for an in-vocabulary word, `None` when out of vocabulary.
    fn embed(&self, word: &str) -> Option<Vec<f64>>;
    /// Typical embedding magnitude, used to scale random OOV init.
    fn embedding_scale(&self) -> f64;
    /// Stable identity of the encoder weights, recorded in adapter files.
    fn fingerprint(&self) -> [u8; 32];
}

/// Deterministic toy encoder: any word in its vocabulary maps to a fixed
/// pseudo-random vector derived from the word itself, so equal words embed
/// equally across runs and processes.
#[derive(Debug, Clone)]
pub struct ToyTextEncoder {
    width: usize,
    scale: f64,
    vocab: BTreeSet<String>,
}

impl ToyTextEncoder {
    pub fn new(width: usize, vocab: &[&str]) -> Self {
        Self {
            width,
            scale: 0.1,
            vocab: vocab.iter().map(|w| w.to_lowercase()).collect(),
        }
    }

    /// Encoder that accepts every word; handy when a fixture should have no
    /// OOV tokens.
    pub fn open_vocabulary(width: usize) -> Self {
        Self {
            width,
            scale: 0.1,
            vocab: BTreeSet::new(),
        }
    }

    fn in_vocab(&self, word: &str) -> bool {
        self.vocab.is_empty() || self.vocab.contains(&word.to_lowercase())
    }

    fn derive(&self, word: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(b"toy-encoder:");
        hasher.update(word.to_lowercase().as_bytes());
        let digest = hasher.finalize();
        // Stretch the 32-byte digest into `width` floats in [-scale, scale].
        (0..self.width)
            .map(|i| {
                let b0 = digest[(2 * i) % 32] as u16;
                let b1 = digest[(2 * i + 1) % 32] as u16;
                let raw = (b0 << 8 | b1) as f64 / f64::from(u16::MAX);
                (raw * 2.0 - 1.0) * self.scale
            })
            .collect()
    }
}

impl TextEncoder for ToyTextEncoder {
    fn width(&self) -> usize {
        self.width
    }

    fn embed(&self, word: &str) -> Option<Vec<f64>> {
        self.in_vocab(word).then(|| self.derive(word))
    }

    fn embedding_scale(&self) -> f64 {
        self.scale
    }

    fn fingerprint(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"toy-encoder-v1:");
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update(self.scale.to_le_bytes());
        for w in &self.vocab {
            hasher.update(w.as_bytes());
            hasher.update([0u8]);
        }
        hasher.finalize().into()
    }
}
