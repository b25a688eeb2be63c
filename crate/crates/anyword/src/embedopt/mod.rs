//! Test-time optimization of concept-token embeddings under the denoising
//! objective. Only entity roots, attribute nouns and linked adjectives are
//! trainable; every other token stays bit-identical.

mod adapter;
mod encoder;

pub use adapter::{fast_adapt_text_encoder, AdaptedEncoder, TextAdapter};
pub use encoder::{TextEncoder, ToyTextEncoder};

use crate::diffusion::{DenoiserBackend, NoiseSchedule};
use crate::grid::Latent;
use crate::textgraph::ParsedExpression;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("text encoder unavailable: {0}")]
    EncoderUnavailable(String),
    #[error("loss became non-finite at step {step} (rolled back to step {last_finite_step})")]
    NonFiniteLoss {
        step: usize,
        last_finite_step: usize,
    },
    #[error("denoiser backend failure: {0}")]
    BackendFailure(String),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("adapter io: {0}")]
    AdapterIo(#[from] std::io::Error),
    #[error("adapter format: {0}")]
    AdapterFormat(String),
}

/// Per-token embedding vectors plus the trainable mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSet {
    width: usize,
    vectors: Vec<Vec<f64>>,
    trainable: Vec<bool>,
}

impl EmbeddingSet {
    pub fn new(width: usize, vectors: Vec<Vec<f64>>, trainable: Vec<bool>) -> Self {
        assert_eq!(vectors.len(), trainable.len(), "mask length mismatch");
        for v in &vectors {
            assert_eq!(v.len(), width, "embedding width mismatch");
        }
        Self {
            width,
            vectors,
            trainable,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn token_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, token: usize) -> &[f64] {
        &self.vectors[token]
    }

    pub fn vector_mut(&mut self, token: usize) -> &mut Vec<f64> {
        &mut self.vectors[token]
    }

    pub fn is_trainable(&self, token: usize) -> bool {
        self.trainable[token]
    }

    pub fn trainable_indices(&self) -> Vec<usize> {
        (0..self.vectors.len())
            .filter(|&i| self.trainable[i])
            .collect()
    }

    /// Content hash covering vectors and mask; used in cache keys and
    /// adapter headers.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        for (v, t) in self.vectors.iter().zip(&self.trainable) {
            hasher.update([u8::from(*t)]);
            for x in v {
                hasher.update(x.to_le_bytes());
            }
        }
        hasher.finalize().into()
    }
}

/// Hyper-parameters of the embedding update.
///
/// `tau` and `gamma` are carried opaquely for backends implementing the
/// auxiliary contrastive losses of the underlying multi-concept inversion;
/// the core objective here is the plain denoising loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub fast_steps: usize,
    pub batch_size: usize,
    pub tau: f64,
    pub gamma: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            steps: 1100,
            fast_steps: 50,
            batch_size: 8,
            tau: 0.3,
            gamma: 0.000_75,
            momentum: 0.0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.learning_rate <= 0.0 {
            return Err(OptimError::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(OptimError::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Build the initial embedding set for a parsed expression: in-vocabulary
/// tokens take encoder embeddings, out-of-vocabulary tokens get a seeded
/// Gaussian draw at the encoder's scale. The trainable mask marks entity
/// roots, attribute nouns and linked adjectives.
pub fn init_embeddings(
    parsed: &ParsedExpression,
    encoder: &dyn TextEncoder,
    seed: u64,
) -> Result<EmbeddingSet, OptimError> {
    if parsed.tokens.is_empty() {
        return Err(OptimError::EncoderUnavailable(
            "empty parse has no tokens to embed".into(),
        ));
    }
    let width = encoder.width();
    let trainable_set = parsed.trainable_token_indices();

    let mut vectors = Vec::with_capacity(parsed.tokens.len());
    let mut trainable = Vec::with_capacity(parsed.tokens.len());
    for token in &parsed.tokens {
        let v = match encoder.embed(&token.surface) {
            Some(v) => v,
            None => oov_init(&token.surface, seed, width, encoder.embedding_scale()),
        };
        vectors.push(v);
        trainable.push(trainable_set.contains(&token.index));
    }
    Ok(EmbeddingSet::new(width, vectors, trainable))
}

/// Seeded Gaussian init for an out-of-vocabulary word. The draw depends on
/// (word, seed) only, so equal inputs give identical vectors.
fn oov_init(word: &str, seed: u64, width: usize, scale: f64) -> Vec<f64> {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(word.to_lowercase().as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 8];
    key.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(u64::from_le_bytes(key));
    (0..width).map(|_| gaussian(&mut rng) * scale).collect()
}

/// Standard normal draw via Box-Muller; keeps us independent of distribution
/// crates while staying reproducible under ChaCha streams.
pub(crate) fn gaussian(rng: &mut dyn RngCore) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gaussian_latent(rng: &mut dyn RngCore, like: &Latent) -> Latent {
    let (c, h, w) = like.shape();
    let data = (0..like.len()).map(|_| gaussian(rng)).collect();
    Latent::from_values(c, h, w, data)
}

/// Per-step record of the optimization run.
#[derive(Debug, Clone, Default)]
pub struct OptimizationTrace {
    pub losses: Vec<f64>,
}

impl OptimizationTrace {
    /// Means over consecutive windows of `window` steps (trailing partial
    /// window dropped).
    pub fn windowed_means(&self, window: usize) -> Vec<f64> {
        self.losses
            .chunks_exact(window)
            .map(|c| c.iter().sum::<f64>() / window as f64)
            .collect()
    }
}

/// Run the embedding update: at each step draw a mini-batch of (t, noise)
/// pairs, form the noised latent, and take an SGD step on the denoising
/// loss for trainable vectors only.
pub fn optimize_embeddings<B: DenoiserBackend + ?Sized>(
    z0: &Latent,
    embeddings: &EmbeddingSet,
    schedule: &NoiseSchedule,
    backend: &B,
    cfg: &OptimizerConfig,
) -> Result<EmbeddingSet, OptimError> {
    optimize_embeddings_traced(z0, embeddings, schedule, backend, cfg).map(|(set, _)| set)
}

/// Like [`optimize_embeddings`] but also returns the per-step loss trace.
pub fn optimize_embeddings_traced<B: DenoiserBackend + ?Sized>(
    z0: &Latent,
    embeddings: &EmbeddingSet,
    schedule: &NoiseSchedule,
    backend: &B,
    cfg: &OptimizerConfig,
) -> Result<(EmbeddingSet, OptimizationTrace), OptimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = embeddings.clone();
    let trainable = current.trainable_indices();
    let mut trace = OptimizationTrace::default();

    if cfg.steps == 0 || trainable.is_empty() {
        return Ok((current, trace));
    }

    let steps_t = schedule.steps();
    let width = current.width();
    let mut velocity: Vec<Vec<f64>> = trainable.iter().map(|_| vec![0.0; width]).collect();

    let mut checkpoint = current.clone();
    let mut last_finite_step = 0usize;
    let mut consecutive_bad = 0usize;

    for step in 0..cfg.steps {
        let mut grads: Vec<Vec<f64>> = trainable.iter().map(|_| vec![0.0; width]).collect();
        let mut loss = 0.0;

        for _ in 0..cfg.batch_size {
            let t = rng.gen_range(1..=steps_t);
            let noise = gaussian_latent(&mut rng, z0);
            let z_t = z0
                .scale(schedule.alpha(t).sqrt())
                .add(&noise.scale(schedule.sigma(t)));

            let predicted = backend
                .predict_noise(&z_t, t, &current)
                .map_err(|e| OptimError::BackendFailure(e.to_string()))?;
            let residual = predicted.sub(&noise);
            loss += residual.sum_squares();

            // d/dv of mean_b ||eps_b - eps_hat_b||^2.
            let cotangent = residual.scale(2.0 / cfg.batch_size as f64);
            let token_grads = backend
                .vjp_embeddings(&z_t, t, &current, &cotangent)
                .map_err(|e| OptimError::BackendFailure(e.to_string()))?;
            for (slot, &token) in trainable.iter().enumerate() {
                for d in 0..width {
                    grads[slot][d] += token_grads[token][d];
                }
            }
        }
        loss /= cfg.batch_size as f64;

        if !loss.is_finite() {
            consecutive_bad += 1;
            if consecutive_bad >= 3 {
                return Err(OptimError::NonFiniteLoss {
                    step,
                    last_finite_step,
                });
            }
            current = checkpoint.clone();
            trace.losses.push(loss);
            continue;
        }
        consecutive_bad = 0;
        last_finite_step = step;
        trace.losses.push(loss);

        for (slot, &token) in trainable.iter().enumerate() {
            let v = current.vector_mut(token);
            for d in 0..width {
                velocity[slot][d] =
                    cfg.momentum * velocity[slot][d] - cfg.learning_rate * grads[slot][d];
                v[d] += velocity[slot][d];
            }
        }
        checkpoint = current.clone();
    }

    Ok((current, trace))
}
