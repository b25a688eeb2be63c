//! Low-rank text-encoder adapter: trains a rank-r correction on a small
//! sample set, persists it to a versioned file, and wraps an encoder so that
//! installed adapters license the short optimization schedule.

use super::{gaussian, OptimError, TextEncoder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"AWLA";
const VERSION: u32 = 1;

/// Rank-r additive correction: adapted(e) = e + U (V e).
#[derive(Debug, Clone, PartialEq)]
pub struct TextAdapter {
    rank: usize,
    width: usize,
    /// width x rank, row-major.
    up: Vec<f64>,
    /// rank x width, row-major.
    down: Vec<f64>,
    encoder_fingerprint: [u8; 32],
}

impl TextAdapter {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn encoder_fingerprint(&self) -> &[u8; 32] {
        &self.encoder_fingerprint
    }

    pub fn apply(&self, embedding: &[f64]) -> Vec<f64> {
        assert_eq!(embedding.len(), self.width, "adapter width mismatch");
        let mut mid = vec![0.0; self.rank];
        for r in 0..self.rank {
            let row = &self.down[r * self.width..(r + 1) * self.width];
            mid[r] = row.iter().zip(embedding).map(|(a, b)| a * b).sum();
        }
        embedding
            .iter()
            .enumerate()
            .map(|(d, &e)| {
                let row = &self.up[d * self.rank..(d + 1) * self.rank];
                e + row.iter().zip(&mid).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Persist atomically: write to a temp sibling, then rename over the
    /// destination.
    pub fn save(&self, path: &Path) -> Result<(), OptimError> {
        let tmp = path.with_extension("tmp-write");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(MAGIC)?;
            f.write_all(&VERSION.to_le_bytes())?;
            f.write_all(&(self.rank as u32).to_le_bytes())?;
            f.write_all(&(self.width as u32).to_le_bytes())?;
            f.write_all(&self.encoder_fingerprint)?;
            for x in self.up.iter().chain(&self.down) {
                f.write_all(&x.to_le_bytes())?;
            }
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, OptimError> {
        let mut f = std::fs::File::open(path)?;
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(OptimError::AdapterFormat(format!(
                "bad magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let mut u32buf = [0u8; 4];
        f.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != VERSION {
            return Err(OptimError::AdapterFormat(format!(
                "unsupported adapter version {version}"
            )));
        }
        f.read_exact(&mut u32buf)?;
        let rank = u32::from_le_bytes(u32buf) as usize;
        f.read_exact(&mut u32buf)?;
        let width = u32::from_le_bytes(u32buf) as usize;
        let mut encoder_fingerprint = [0u8; 32];
        f.read_exact(&mut encoder_fingerprint)?;

        let mut read_floats = |n: usize| -> Result<Vec<f64>, OptimError> {
            let mut out = Vec::with_capacity(n);
            let mut buf = [0u8; 8];
            for _ in 0..n {
                f.read_exact(&mut buf)?;
                out.push(f64::from_le_bytes(buf));
            }
            Ok(out)
        };
        let up = read_floats(width * rank)?;
        let down = read_floats(rank * width)?;

        Ok(Self {
            rank,
            width,
            up,
            down,
            encoder_fingerprint,
        })
    }
}

/// Encoder with an installed adapter.
pub struct AdaptedEncoder<E> {
    inner: E,
    adapter: TextAdapter,
}

impl<E: TextEncoder> AdaptedEncoder<E> {
    pub fn new(inner: E, adapter: TextAdapter) -> Result<Self, OptimError> {
        if adapter.width != inner.width() {
            return Err(OptimError::AdapterFormat(format!(
                "adapter width {} does not match encoder width {}",
                adapter.width,
                inner.width()
            )));
        }
        if adapter.encoder_fingerprint != inner.fingerprint() {
            return Err(OptimError::AdapterFormat(
                "adapter was trained for a different encoder".into(),
            ));
        }
        Ok(Self { inner, adapter })
    }

    pub fn adapter(&self) -> &TextAdapter {
        &self.adapter
    }
}

impl<E: TextEncoder> TextEncoder for AdaptedEncoder<E> {
    fn width(&self) -> usize {
        self.inner.width()
    }

    fn embed(&self, word: &str) -> Option<Vec<f64>> {
        self.inner.embed(word).map(|e| self.adapter.apply(&e))
    }

    fn embedding_scale(&self) -> f64 {
        self.inner.embedding_scale()
    }

    fn fingerprint(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(b"adapted:");
        hasher.update(self.inner.fingerprint());
        for x in self.adapter.up.iter().chain(&self.adapter.down) {
            hasher.update(x.to_le_bytes());
        }
        hasher.finalize().into()
    }
}

/// Fit a low-rank adapter on (image ref, text) samples: SGD pulls each
/// content word's adapted embedding toward its sample's word centroid, the
/// cheap stand-in for domain alignment when no gradient path through the
/// denoiser is available.
pub fn fast_adapt_text_encoder(
    samples: &[(String, String)],
    encoder: &dyn TextEncoder,
    rank: usize,
    steps: usize,
    seed: u64,
) -> Result<TextAdapter, OptimError> {
    if samples.is_empty() {
        return Err(OptimError::EmptySampleSet);
    }
    let width = encoder.width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Pre-embed every sample's in-vocabulary words and its centroid.
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for (_image, text) in samples {
        let words: Vec<Vec<f64>> = text
            .split_whitespace()
            .filter_map(|w| encoder.embed(w.trim_matches(|c: char| !c.is_alphanumeric())))
            .collect();
        if words.is_empty() {
            continue;
        }
        let mut centroid = vec![0.0; width];
        for w in &words {
            for d in 0..width {
                centroid[d] += w[d] / words.len() as f64;
            }
        }
        for w in words {
            pairs.push((w, centroid.clone()));
        }
    }
    if pairs.is_empty() {
        return Err(OptimError::EmptySampleSet);
    }

    let init = 0.01;
    let mut up: Vec<f64> = (0..width * rank)
        .map(|_| gaussian(&mut rng) * init)
        .collect();
    let mut down: Vec<f64> = (0..rank * width)
        .map(|_| gaussian(&mut rng) * init)
        .collect();

    let lr = 0.05;
    for _ in 0..steps {
        let (e, target) = &pairs[rng.gen_range(0..pairs.len())];
        // Forward: mid = down e, out = e + up mid.
        let mut mid = vec![0.0; rank];
        for r in 0..rank {
            let row = &down[r * width..(r + 1) * width];
            mid[r] = row.iter().zip(e).map(|(a, b)| a * b).sum();
        }
        let mut err = vec![0.0; width];
        for d in 0..width {
            let row = &up[d * rank..(d + 1) * rank];
            let out = e[d] + row.iter().zip(&mid).map(|(a, b)| a * b).sum::<f64>();
            err[d] = out - target[d];
        }
        // Backward through the two linear maps.
        for d in 0..width {
            for r in 0..rank {
                up[d * rank + r] -= lr * err[d] * mid[r];
            }
        }
        for r in 0..rank {
            let up_col: f64 = (0..width).map(|d| up[d * rank + r] * err[d]).sum();
            for d in 0..width {
                down[r * width + d] -= lr * up_col * e[d];
            }
        }
    }

    Ok(TextAdapter {
        rank,
        width,
        up,
        down,
        encoder_fingerprint: encoder.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedopt::ToyTextEncoder;

    fn samples(n: usize) -> Vec<(String, String)> {
        (0..n)
            .map(|i| (format!("img{i}.png"), format!("a red cat {i}")))
            .collect()
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let enc = ToyTextEncoder::open_vocabulary(8);
        assert!(matches!(
            fast_adapt_text_encoder(&[], &enc, 16, 10, 0),
            Err(OptimError::EmptySampleSet)
        ));
    }

    #[test]
    fn adapter_file_roundtrip() {
        let enc = ToyTextEncoder::open_vocabulary(8);
        let adapter = fast_adapt_text_encoder(&samples(10), &enc, 16, 50, 7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("encoder.adapter");
        adapter.save(&path).unwrap();
        let loaded = TextAdapter::load(&path).unwrap();
        assert_eq!(adapter, loaded);
    }

    #[test]
    fn adapter_rejects_foreign_encoder() {
        let enc = ToyTextEncoder::open_vocabulary(8);
        let other = ToyTextEncoder::new(8, &["cat"]);
        let adapter = fast_adapt_text_encoder(&samples(3), &enc, 4, 10, 0).unwrap();
        assert!(AdaptedEncoder::new(other, adapter).is_err());
    }

    #[test]
    fn adapted_encoder_changes_embeddings() {
        let enc = ToyTextEncoder::open_vocabulary(8);
        let adapter = fast_adapt_text_encoder(&samples(10), &enc, 4, 200, 3).unwrap();
        let plain = enc.embed("cat").unwrap();
        let adapted = AdaptedEncoder::new(enc.clone(), adapter).unwrap();
        assert_ne!(adapted.embed("cat").unwrap(), plain);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let enc = ToyTextEncoder::open_vocabulary(8);
        let a = fast_adapt_text_encoder(&samples(5), &enc, 4, 100, 11).unwrap();
        let b = fast_adapt_text_encoder(&samples(5), &enc, 4, 100, 11).unwrap();
        assert_eq!(a, b);
    }
}
