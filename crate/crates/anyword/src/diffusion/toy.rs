//! Deterministic affine denoiser for CI and the synthetic benchmark.
//!
//! The noise prediction is affine in both the latent and the embeddings:
//!
//! ```text
//! eps_hat(z, t, V) = gain ⊙ z + bias + Σ_i (w_i · v_i) P_i
//! ```
//!
//! which keeps the inversion/denoise round trip exactly checkable and the
//! denoising loss quadratic in the trainable vectors, with a closed-form
//! gradient for the optimizer.

use super::{DenoiserBackend, DiffusionError, Prediction};
use crate::embedopt::EmbeddingSet;
use crate::grid::{Grid, ImageBuf, Latent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct ToyDenoiser {
    shape: (usize, usize, usize),
    attention_res: (usize, usize),
    gain: Latent,
    bias: Latent,
    /// Per-token latent pattern P_i coupling embeddings into the prediction.
    token_patterns: Vec<Latent>,
    /// Per-token projection w_i of the embedding onto a scalar.
    token_weights: Vec<Vec<f64>>,
    /// Per-token attention bases, normalized across tokens at every cell.
    attention_base: Vec<Grid>,
    /// Uniform-mixing slope over time; keeps averaging non-trivial while
    /// preserving the per-cell token sum.
    time_mix: f64,
    steps: Option<usize>,
}

impl ToyDenoiser {
    /// Backend with seeded random affine parameters and centered blob
    /// attention fixtures, one blob per token on a diagonal layout.
    pub fn seeded(
        shape: (usize, usize, usize),
        attention_res: (usize, usize),
        token_count: usize,
        embed_width: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, h, w) = shape;
        let volume = c * h * w;

        let gain = Latent::from_values(
            c,
            h,
            w,
            (0..volume).map(|_| rng.gen_range(-0.2..0.2)).collect(),
        );
        let bias = Latent::from_values(
            c,
            h,
            w,
            (0..volume).map(|_| rng.gen_range(-0.1..0.1)).collect(),
        );

        // Unit-norm patterns scaled so a few hundred SGD steps at the
        // default learning rate converge.
        let pattern_norm = 8.0f64.sqrt();
        let token_patterns = (0..token_count)
            .map(|_| {
                let raw: Vec<f64> = (0..volume).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                Latent::from_values(
                    c,
                    h,
                    w,
                    raw.iter().map(|v| v / norm * pattern_norm).collect(),
                )
            })
            .collect();
        let token_weights = (0..token_count)
            .map(|_| {
                let raw: Vec<f64> = (0..embed_width).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
                raw.iter().map(|v| v / norm).collect()
            })
            .collect();

        let (ah, aw) = attention_res;
        let raw_fixtures: Vec<Grid> = (0..token_count)
            .map(|i| {
                let frac = (i as f64 + 0.5) / token_count as f64;
                let center_r = frac * ah as f64;
                let center_c = frac * aw as f64;
                gaussian_blob(ah, aw, center_r, center_c, ah as f64 / 6.0)
            })
            .collect();
        let attention_base = normalize_across_tokens(&raw_fixtures);

        Self {
            shape,
            attention_res,
            gain,
            bias,
            token_patterns,
            token_weights,
            attention_base,
            time_mix: 0.2,
            steps: None,
        }
    }

    /// Replace the attention fixtures with caller-supplied non-negative
    /// patterns, one per token; they are re-normalized across tokens.
    pub fn with_attention_fixtures(mut self, raw: &[Grid]) -> Self {
        assert_eq!(
            raw.len(),
            self.token_patterns.len(),
            "one fixture per token"
        );
        for g in raw {
            assert_eq!(g.shape(), self.attention_res, "fixture resolution");
        }
        self.attention_base = normalize_across_tokens(raw);
        self
    }

    /// Pin the backend to a fixed schedule length.
    pub fn with_schedule_steps(mut self, steps: usize) -> Self {
        self.steps = Some(steps);
        self
    }

    /// Disable the time modulation of attention (fixtures constant over t).
    pub fn with_constant_attention(mut self) -> Self {
        self.time_mix = 0.0;
        self
    }

    /// Derive attention fixtures from image intensity bands so the backend
    /// produces plausible token localization on arbitrary images: token i
    /// attends to the i-th brightness band.
    pub fn for_image(
        image: &ImageBuf,
        shape: (usize, usize, usize),
        attention_res: (usize, usize),
        token_count: usize,
        embed_width: usize,
        seed: u64,
    ) -> Self {
        let concept: Vec<usize> = (0..token_count).collect();
        Self::for_image_tokens(
            image,
            shape,
            attention_res,
            token_count,
            &concept,
            embed_width,
            seed,
        )
    }

    /// Like [`Self::for_image`], but only the given concept tokens receive
    /// localized bands. The non-background distinct luma levels are split
    /// into one contiguous band per concept token; everything else stays
    /// flat. Tokens whose band collapses produce degenerate maps downstream,
    /// which the mining stage reports as skips.
    pub fn for_image_tokens(
        image: &ImageBuf,
        shape: (usize, usize, usize),
        attention_res: (usize, usize),
        token_count: usize,
        concept_tokens: &[usize],
        embed_width: usize,
        seed: u64,
    ) -> Self {
        let backend = Self::seeded(shape, attention_res, token_count, embed_width, seed);
        let (ah, aw) = attention_res;
        let pooled = pool_image(image, ah, aw);

        let mut sorted: Vec<f64> = pooled.values().to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite luma"));
        // The most frequent pooled value is taken as background.
        let background = {
            let mut best = (sorted[0], 0usize);
            let mut i = 0;
            while i < sorted.len() {
                let mut j = i;
                while j < sorted.len() && sorted[j] == sorted[i] {
                    j += 1;
                }
                if j - i > best.1 {
                    best = (sorted[i], j - i);
                }
                i = j;
            }
            best.0
        };
        let mut distinct: Vec<f64> = sorted.clone();
        distinct.dedup();
        distinct.retain(|&v| v != background);

        let k = concept_tokens.len().max(1);
        let mut raw: Vec<Grid> = (0..token_count)
            .map(|_| Grid::from_fn(ah, aw, |_, _| 0.02))
            .collect();
        for (j, &token) in concept_tokens.iter().enumerate() {
            if token >= token_count || distinct.is_empty() {
                continue;
            }
            let lo_idx = (j * distinct.len()) / k;
            let hi_idx = ((j + 1) * distinct.len()) / k;
            if lo_idx >= hi_idx {
                continue;
            }
            let lo = distinct[lo_idx];
            let hi = distinct[hi_idx - 1];
            raw[token] = Grid::from_fn(ah, aw, |r, c| {
                let v = pooled.get(r, c);
                if v >= lo && v <= hi && v != background {
                    1.0
                } else {
                    0.05
                }
            });
        }
        backend.with_attention_fixtures(&raw)
    }

    fn embedding_drive(&self, embeddings: &EmbeddingSet) -> Latent {
        let (c, h, w) = self.shape;
        let mut drive = Latent::zeros(c, h, w);
        for (i, pattern) in self.token_patterns.iter().enumerate() {
            if i >= embeddings.token_count() {
                break;
            }
            let s: f64 = self.token_weights[i]
                .iter()
                .zip(embeddings.vector(i))
                .map(|(a, b)| a * b)
                .sum();
            drive.add_in_place(&pattern.scale(s));
        }
        drive
    }

    fn attention_at(&self, t: usize) -> Vec<Grid> {
        let steps = self.steps.unwrap_or(50) as f64;
        let lambda = self.time_mix * (t as f64 / steps.max(1.0)).min(1.0);
        let k = self.attention_base.len() as f64;
        self.attention_base
            .iter()
            .map(|g| {
                g.scale(1.0 - lambda)
                    .add(&Grid::from_fn(g.height(), g.width(), |_, _| lambda / k))
            })
            .collect()
    }
}

impl DenoiserBackend for ToyDenoiser {
    fn latent_shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    fn attention_resolution(&self) -> (usize, usize) {
        self.attention_res
    }

    fn schedule_steps(&self) -> Option<usize> {
        self.steps
    }

    fn encode(&self, image: &ImageBuf) -> Result<Latent, DiffusionError> {
        let (c, h, w) = self.shape;
        let pooled = pool_image(image, h, w);
        let mut data = Vec::with_capacity(c * h * w);
        for ch in 0..c {
            let scale = 1.0 / (ch + 1) as f64;
            data.extend(pooled.values().iter().map(|v| v * scale));
        }
        Ok(Latent::from_values(c, h, w, data))
    }

    fn predict(
        &self,
        z: &Latent,
        t: usize,
        embeddings: &EmbeddingSet,
    ) -> Result<Prediction, DiffusionError> {
        let noise = self.predict_noise(z, t, embeddings)?;
        let mut attention = self.attention_at(t);
        attention.truncate(embeddings.token_count());
        Ok(Prediction { noise, attention })
    }

    fn predict_noise(
        &self,
        z: &Latent,
        _t: usize,
        embeddings: &EmbeddingSet,
    ) -> Result<Latent, DiffusionError> {
        if z.shape() != self.shape {
            return Err(DiffusionError::ShapeMismatch(format!(
                "latent {:?} vs backend {:?}",
                z.shape(),
                self.shape
            )));
        }
        Ok(z.zip(&self.gain, |a, g| a * g)
            .add(&self.bias)
            .add(&self.embedding_drive(embeddings)))
    }

    fn vjp_embeddings(
        &self,
        _z: &Latent,
        _t: usize,
        embeddings: &EmbeddingSet,
        cotangent: &Latent,
    ) -> Result<Vec<Vec<f64>>, DiffusionError> {
        // d eps_hat / d v_i = P_i ⊗ w_i, so the pullback is
        // (cotangent · P_i) w_i.
        let width = embeddings.width();
        let mut grads = vec![vec![0.0; width]; embeddings.token_count()];
        for (i, grad) in grads.iter_mut().enumerate() {
            if i >= self.token_patterns.len() {
                break;
            }
            let s = cotangent.dot(&self.token_patterns[i]);
            for (g, w) in grad.iter_mut().zip(&self.token_weights[i]) {
                *g = s * w;
            }
        }
        Ok(grads)
    }
}

/// Isotropic Gaussian bump, peak 1 at the (fractional) center.
pub fn gaussian_blob(h: usize, w: usize, center_r: f64, center_c: f64, sigma: f64) -> Grid {
    let s2 = 2.0 * sigma * sigma;
    Grid::from_fn(h, w, |r, c| {
        let dr = r as f64 + 0.5 - center_r;
        let dc = c as f64 + 0.5 - center_c;
        (-(dr * dr + dc * dc) / s2).exp()
    })
}

/// Normalize raw per-token patterns so every cell sums to one across
/// tokens. A small floor keeps empty cells well defined.
pub fn normalize_across_tokens(raw: &[Grid]) -> Vec<Grid> {
    assert!(!raw.is_empty(), "at least one token pattern");
    let (h, w) = raw[0].shape();
    const FLOOR: f64 = 0.05;
    let mut out = vec![Grid::zeros(h, w); raw.len()];
    for r in 0..h {
        for c in 0..w {
            let total: f64 = raw.iter().map(|g| g.get(r, c) + FLOOR).sum();
            for (i, g) in raw.iter().enumerate() {
                out[i].set(r, c, (g.get(r, c) + FLOOR) / total);
            }
        }
    }
    out
}

/// Area mean-pool an image down to (h, w).
fn pool_image(image: &ImageBuf, h: usize, w: usize) -> Grid {
    Grid::from_fn(h, w, |r, c| {
        let y0 = r * image.height() / h;
        let y1 = (((r + 1) * image.height()).div_ceil(h)).max(y0 + 1);
        let x0 = c * image.width() / w;
        let x1 = (((c + 1) * image.width()).div_ceil(w)).max(x0 + 1);
        let mut sum = 0.0;
        let mut n = 0usize;
        for y in y0..y1.min(image.height()) {
            for x in x0..x1.min(image.width()) {
                sum += image.get(x, y);
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    })
}
