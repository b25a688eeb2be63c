//! Denoiser backend contract plus the deterministic chains built on it:
//! stepwise latent inversion, the additive reconstruction correction, the
//! denoise-and-collect loop, and cross-attention averaging.

pub mod protocol;
pub mod toy;

pub use toy::ToyDenoiser;

use crate::embedopt::EmbeddingSet;
use crate::grid::{Grid, ImageBuf, Latent};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("backend declares {backend} steps but schedule has {schedule}")]
    ScheduleMismatch { backend: usize, schedule: usize },
    #[error("non-finite latent at step {step}")]
    NonFiniteLatent { step: usize },
    #[error("chain shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("token index {index} out of range for {count} tokens")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("backend failure: {0}")]
    BackendFailure(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Noise schedule over steps 1..=T, with alpha(0) for the inversion
/// boundary. Alphas are in (0, 1] and non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    alpha0: f64,
    alphas: Vec<f64>,
    sigmas: Vec<f64>,
}

impl NoiseSchedule {
    pub fn new(alphas: Vec<f64>, sigmas: Vec<f64>) -> Result<Self, DiffusionError> {
        Self::with_alpha0(1.0, alphas, sigmas)
    }

    pub fn with_alpha0(
        alpha0: f64,
        alphas: Vec<f64>,
        sigmas: Vec<f64>,
    ) -> Result<Self, DiffusionError> {
        if alphas.is_empty() {
            return Err(DiffusionError::InvalidSchedule("empty schedule".into()));
        }
        if alphas.len() != sigmas.len() {
            return Err(DiffusionError::InvalidSchedule(format!(
                "{} alphas vs {} sigmas",
                alphas.len(),
                sigmas.len()
            )));
        }
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(DiffusionError::InvalidSchedule(format!(
                "alpha0 {alpha0} outside (0, 1]"
            )));
        }
        let mut prev = alpha0;
        for (i, &a) in alphas.iter().enumerate() {
            if !(a > 0.0 && a <= 1.0) {
                return Err(DiffusionError::InvalidSchedule(format!(
                    "alpha_{} = {a} outside (0, 1]",
                    i + 1
                )));
            }
            if a > prev {
                return Err(DiffusionError::InvalidSchedule(format!(
                    "alpha_{} = {a} increases over {prev}",
                    i + 1
                )));
            }
            prev = a;
        }
        if sigmas.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(DiffusionError::InvalidSchedule("negative sigma".into()));
        }
        Ok(Self {
            alpha0,
            alphas,
            sigmas,
        })
    }

    /// Linear ramp from `alpha_hi` down to `alpha_lo` with the variance-
    /// preserving sigma choice; convenient for tests and the toy pipeline.
    pub fn linear(steps: usize, alpha_hi: f64, alpha_lo: f64) -> Result<Self, DiffusionError> {
        let alphas: Vec<f64> = (0..steps)
            .map(|i| {
                let frac = if steps == 1 {
                    1.0
                } else {
                    i as f64 / (steps - 1) as f64
                };
                alpha_hi + (alpha_lo - alpha_hi) * frac
            })
            .collect();
        let sigmas = alphas.iter().map(|a| (1.0 - a).sqrt()).collect();
        Self::new(alphas, sigmas)
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    /// alpha(t) for t in 0..=T.
    pub fn alpha(&self, t: usize) -> f64 {
        if t == 0 {
            self.alpha0
        } else {
            self.alphas[t - 1]
        }
    }

    /// sigma(t) for t in 1..=T.
    pub fn sigma(&self, t: usize) -> f64 {
        self.sigmas[t - 1]
    }

    /// Stable byte serialization for cache keys.
    pub fn content_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.alphas.len() * 16);
        out.extend_from_slice(&self.alpha0.to_le_bytes());
        for (a, s) in self.alphas.iter().zip(&self.sigmas) {
            out.extend_from_slice(&a.to_le_bytes());
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    /// Forward-map coefficients of step t: z_t = a * z_{t-1} + b * eps.
    fn invert_coeffs(&self, t: usize) -> (f64, f64) {
        let at = self.alpha(t);
        let ap = self.alpha(t - 1);
        let a = at.sqrt() / ap.sqrt();
        // (1/alpha - 1) is non-negative for alpha in (0, 1]; the max guards
        // the alpha = 1 boundary against rounding below zero.
        let b = at.sqrt() * ((1.0 / at - 1.0).max(0.0).sqrt() - (1.0 / ap - 1.0).max(0.0).sqrt());
        (a, b)
    }

    /// Backward-map coefficients of step t: z_{t-1} = c1 * z_t + c2 * eps.
    /// Algebraic inverse of the forward affine map.
    fn denoise_coeffs(&self, t: usize) -> (f64, f64) {
        let at = self.alpha(t);
        let ap = self.alpha(t - 1);
        let c1 = ap.sqrt() / at.sqrt();
        let c2 = -ap.sqrt() * ((1.0 / at - 1.0).max(0.0).sqrt() - (1.0 / ap - 1.0).max(0.0).sqrt());
        (c1, c2)
    }
}

/// One denoiser evaluation: predicted noise plus the per-token
/// cross-attention grids at the backend's attention resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub noise: Latent,
    pub attention: Vec<Grid>,
}

/// Frozen denoising backend. `predict` must be deterministic in
/// (latent, step, embeddings); attention grids are non-negative and sum to
/// one across tokens at every spatial cell (within 1e-5).
pub trait DenoiserBackend: Send + Sync {
    fn latent_shape(&self) -> (usize, usize, usize);

    fn attention_resolution(&self) -> (usize, usize) {
        (16, 16)
    }

    /// Step count the backend was built for; `None` accepts any schedule.
    fn schedule_steps(&self) -> Option<usize> {
        None
    }

    /// Maximum concurrent in-flight requests a shared handle supports;
    /// `None` means freely shareable.
    fn max_concurrent_requests(&self) -> Option<usize> {
        None
    }

    /// Encode an image into the latent space.
    fn encode(&self, image: &ImageBuf) -> Result<Latent, DiffusionError>;

    fn predict(
        &self,
        z: &Latent,
        t: usize,
        embeddings: &EmbeddingSet,
    ) -> Result<Prediction, DiffusionError>;

    /// Noise prediction without materializing attention grids; the
    /// optimizer's hot loop. Must agree with `predict(..).noise`.
    fn predict_noise(
        &self,
        z: &Latent,
        t: usize,
        embeddings: &EmbeddingSet,
    ) -> Result<Latent, DiffusionError> {
        Ok(self.predict(z, t, embeddings)?.noise)
    }

    /// Vector-Jacobian product of the predicted noise with respect to each
    /// token embedding: returns, per token, cotangent^T d(noise)/d(v_i).
    /// The default falls back to central finite differences over `predict`
    /// for backends without an analytic gradient path.
    fn vjp_embeddings(
        &self,
        z: &Latent,
        t: usize,
        embeddings: &EmbeddingSet,
        cotangent: &Latent,
    ) -> Result<Vec<Vec<f64>>, DiffusionError> {
        let width = embeddings.width();
        let mut grads = vec![vec![0.0; width]; embeddings.token_count()];
        let mut probe = embeddings.clone();
        for token in 0..embeddings.token_count() {
            if !embeddings.is_trainable(token) {
                continue;
            }
            for d in 0..width {
                let orig = probe.vector(token)[d];
                let h = 1e-4 * orig.abs().max(1.0);
                probe.vector_mut(token)[d] = orig + h;
                let plus = self.predict_noise(z, t, &probe)?;
                probe.vector_mut(token)[d] = orig - h;
                let minus = self.predict_noise(z, t, &probe)?;
                probe.vector_mut(token)[d] = orig;
                grads[token][d] = plus.sub(&minus).scale(1.0 / (2.0 * h)).dot(cotangent);
            }
        }
        Ok(grads)
    }
}

/// Per-token, per-step cross-attention grids collected along a denoising
/// chain. `maps[t-1][token]` is the grid recorded at step t.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack {
    timesteps: usize,
    token_count: usize,
    maps: Vec<Vec<Grid>>,
}

impl AttentionStack {
    pub fn new(timesteps: usize, token_count: usize) -> Self {
        Self {
            timesteps,
            token_count,
            maps: Vec::with_capacity(timesteps),
        }
    }

    pub fn from_maps(maps: Vec<Vec<Grid>>) -> Self {
        let timesteps = maps.len();
        let token_count = maps.first().map_or(0, Vec::len);
        for row in &maps {
            assert_eq!(row.len(), token_count, "ragged attention stack");
        }
        Self {
            timesteps,
            token_count,
            maps,
        }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Grid recorded for `token` at step `t` (1-based).
    pub fn map(&self, t: usize, token: usize) -> &Grid {
        &self.maps[t - 1][token]
    }

    pub fn grid_count(&self) -> usize {
        self.maps.iter().map(Vec::len).sum()
    }

    fn push_step(&mut self, grids: Vec<Grid>) {
        debug_assert_eq!(grids.len(), self.token_count);
        self.maps.push(grids);
    }

    /// Steps are visited T..1 during denoising; this reorders the rows so
    /// `maps[t-1]` is the step-t record.
    fn finish_reversed(mut self) -> Self {
        self.maps.reverse();
        self
    }
}

/// Normalization applied to averaged attention maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionNormalization {
    Raw,
    #[default]
    MinMax,
}

/// Time-averaged cross-attention map for one token.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedAttentionMap {
    pub token_index: usize,
    pub grid: Grid,
    pub normalization: AttentionNormalization,
}

/// Reconstruction offsets pinning a denoising replay to the inverted chain.
/// `at(t)` is added to the running latent at time t before the step-t
/// denoiser call; `at(0)` lands on the final reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionOffsets {
    offsets: Vec<Latent>,
}

impl InversionOffsets {
    pub fn at(&self, t: usize) -> &Latent {
        &self.offsets[t]
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Run the stepwise inversion recursion from z0, returning the noised chain
/// [z*_1, ..., z*_T]. The denoiser is evaluated at (z*_{t-1}, t-1) exactly
/// as the recursion is written.
pub fn invert<B: DenoiserBackend + ?Sized>(
    z0: &Latent,
    schedule: &NoiseSchedule,
    embeddings: &EmbeddingSet,
    backend: &B,
) -> Result<Vec<Latent>, DiffusionError> {
    check_schedule(schedule, backend)?;
    if !z0.is_finite() {
        return Err(DiffusionError::NonFiniteLatent { step: 0 });
    }

    let steps = schedule.steps();
    let mut chain = Vec::with_capacity(steps);
    let mut prev = z0.clone();
    for t in 1..=steps {
        let (a, b) = schedule.invert_coeffs(t);
        let eps = backend.predict(&prev, t - 1, embeddings)?.noise;
        let z_t = prev.scale(a).add(&eps.scale(b));
        if !z_t.is_finite() {
            return Err(DiffusionError::NonFiniteLatent { step: t });
        }
        chain.push(z_t.clone());
        prev = z_t;
    }
    Ok(chain)
}

/// Per-step differences between an inverted chain and a denoised chain.
pub fn direct_inversion_offsets(
    inverted: &[Latent],
    denoised: &[Latent],
) -> Result<Vec<Latent>, DiffusionError> {
    if inverted.len() != denoised.len() {
        return Err(DiffusionError::ShapeMismatch(format!(
            "{} inverted vs {} denoised latents",
            inverted.len(),
            denoised.len()
        )));
    }
    inverted
        .iter()
        .zip(denoised)
        .map(|(a, b)| {
            if a.shape() != b.shape() {
                Err(DiffusionError::ShapeMismatch(format!(
                    "latent shapes {:?} vs {:?}",
                    a.shape(),
                    b.shape()
                )))
            } else {
                Ok(a.sub(b))
            }
        })
        .collect()
}

/// Build the full reconstruction correction for a chain inverted from z0:
/// one reference denoiser step from each inverted latent, subtracted from
/// the latent the step should have produced. Index t of the result is the
/// offset applied at time t during replay.
pub fn direct_inversion_correction<B: DenoiserBackend + ?Sized>(
    z0: &Latent,
    inverted: &[Latent],
    schedule: &NoiseSchedule,
    embeddings: &EmbeddingSet,
    backend: &B,
) -> Result<InversionOffsets, DiffusionError> {
    let steps = schedule.steps();
    if inverted.len() != steps {
        return Err(DiffusionError::ShapeMismatch(format!(
            "{} inverted latents for a {steps}-step schedule",
            inverted.len()
        )));
    }

    // reference[t] = one denoiser step down from z*_{t+1}; reference[T] is
    // the chain head itself so the top offset is exactly zero.
    let mut reference = Vec::with_capacity(steps + 1);
    for t in 1..=steps {
        let eps = backend.predict(&inverted[t - 1], t, embeddings)?.noise;
        let (c1, c2) = schedule.denoise_coeffs(t);
        reference.push(inverted[t - 1].scale(c1).add(&eps.scale(c2)));
    }
    reference.push(inverted[steps - 1].clone());

    let mut target = Vec::with_capacity(steps + 1);
    target.push(z0.clone());
    target.extend_from_slice(inverted);

    let offsets = direct_inversion_offsets(&target, &reference)?;
    Ok(InversionOffsets { offsets })
}

/// Run the backward chain t = T..1 from zT, recording every token's
/// attention grid at every step. Offsets, when given, are added to the
/// running latent before each denoiser call (and to the final output),
/// pinning the replay to the inverted chain.
pub fn denoise_collect<B: DenoiserBackend + ?Sized>(
    z_top: &Latent,
    embeddings: &EmbeddingSet,
    schedule: &NoiseSchedule,
    backend: &B,
    offsets: Option<&InversionOffsets>,
) -> Result<(Latent, AttentionStack), DiffusionError> {
    check_schedule(schedule, backend)?;
    let steps = schedule.steps();
    if let Some(off) = offsets {
        if off.len() != steps + 1 {
            return Err(DiffusionError::ShapeMismatch(format!(
                "{} offsets for a {steps}-step schedule (need T+1)",
                off.len()
            )));
        }
    }

    let mut stack = AttentionStack::new(steps, embeddings.token_count());
    let mut current = z_top.clone();
    for t in (1..=steps).rev() {
        if let Some(off) = offsets {
            current = current.add(off.at(t));
        }
        let pred = backend.predict(&current, t, embeddings)?;
        if pred.attention.len() != embeddings.token_count() {
            return Err(DiffusionError::BackendFailure(format!(
                "backend returned {} attention grids for {} tokens",
                pred.attention.len(),
                embeddings.token_count()
            )));
        }
        stack.push_step(pred.attention);
        let (c1, c2) = schedule.denoise_coeffs(t);
        current = current.scale(c1).add(&pred.noise.scale(c2));
        if !current.is_finite() {
            return Err(DiffusionError::NonFiniteLatent { step: t });
        }
    }
    if let Some(off) = offsets {
        current = current.add(off.at(0));
    }
    Ok((current, stack.finish_reversed()))
}

/// Arithmetic mean of one token's grids across all steps, then the
/// configured normalization.
pub fn average_attention(
    stack: &AttentionStack,
    token_index: usize,
    normalization: AttentionNormalization,
) -> Result<AveragedAttentionMap, DiffusionError> {
    if token_index >= stack.token_count() {
        return Err(DiffusionError::IndexOutOfRange {
            index: token_index,
            count: stack.token_count(),
        });
    }
    let mut sum = stack.map(1, token_index).clone();
    for t in 2..=stack.timesteps() {
        sum = sum.add(stack.map(t, token_index));
    }
    let mean = sum.scale(1.0 / stack.timesteps() as f64);
    let grid = match normalization {
        AttentionNormalization::Raw => mean,
        AttentionNormalization::MinMax => mean.minmax_normalized(),
    };
    Ok(AveragedAttentionMap {
        token_index,
        grid,
        normalization,
    })
}

fn check_schedule<B: DenoiserBackend + ?Sized>(
    schedule: &NoiseSchedule,
    backend: &B,
) -> Result<(), DiffusionError> {
    if let Some(t) = backend.schedule_steps() {
        if t != schedule.steps() {
            return Err(DiffusionError::ScheduleMismatch {
                backend: t,
                schedule: schedule.steps(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Backend returning a fixed noise value regardless of input.
    struct ConstantBackend {
        value: f64,
        shape: (usize, usize, usize),
        grids: Vec<Grid>,
    }

    impl ConstantBackend {
        fn new(value: f64) -> Self {
            Self {
                value,
                shape: (1, 1, 1),
                grids: vec![Grid::from_rows(&[vec![1.0]])],
            }
        }
    }

    impl DenoiserBackend for ConstantBackend {
        fn latent_shape(&self) -> (usize, usize, usize) {
            self.shape
        }

        fn encode(&self, _image: &ImageBuf) -> Result<Latent, DiffusionError> {
            Ok(Latent::scalar(0.0))
        }

        fn predict(
            &self,
            _z: &Latent,
            _t: usize,
            _v: &EmbeddingSet,
        ) -> Result<Prediction, DiffusionError> {
            Ok(Prediction {
                noise: Latent::scalar(self.value),
                attention: self.grids.clone(),
            })
        }
    }

    fn one_token_embeddings() -> EmbeddingSet {
        EmbeddingSet::new(2, vec![vec![0.0, 0.0]], vec![true])
    }

    #[test]
    fn scalar_toy_first_step() {
        // z0 = 1.0, alpha_0 = 1.0, alpha_1 = 0.5, eps = 0.2:
        // z1 = sqrt(0.5) * 1 + sqrt(0.5) * (1 - 0) * 0.2 = 0.8485281...
        let schedule = NoiseSchedule::new(vec![0.5], vec![0.5]).unwrap();
        let backend = ConstantBackend::new(0.2);
        let chain = invert(
            &Latent::scalar(1.0),
            &schedule,
            &one_token_embeddings(),
            &backend,
        )
        .unwrap();
        let expected = 0.5f64.sqrt() * 1.0 + 0.5f64.sqrt() * 0.2;
        assert!((chain[0].values()[0] - expected).abs() < 1e-12);
        assert!((expected - 0.84853).abs() < 5e-6);
    }

    #[test]
    fn zero_noise_prediction_is_pure_rescaling() {
        let schedule = NoiseSchedule::new(vec![0.9, 0.7, 0.4], vec![0.1, 0.2, 0.3]).unwrap();
        let backend = ConstantBackend::new(0.0);
        let z0 = Latent::scalar(2.0);
        let chain = invert(&z0, &schedule, &one_token_embeddings(), &backend).unwrap();
        for (i, z) in chain.iter().enumerate() {
            let t = i + 1;
            let expected = (schedule.alpha(t).sqrt() / schedule.alpha(0).sqrt()) * 2.0;
            assert!((z.values()[0] - expected).abs() < 1e-12, "step {t}");
        }
    }

    #[test]
    fn constant_backend_roundtrips_without_offsets() {
        // The backward map is the exact algebraic inverse when the noise
        // prediction does not depend on the latent.
        let schedule = NoiseSchedule::new(vec![0.95, 0.6, 0.33], vec![0.1, 0.4, 0.8]).unwrap();
        let backend = ConstantBackend::new(0.37);
        let v = one_token_embeddings();
        let z0 = Latent::scalar(1.25);
        let chain = invert(&z0, &schedule, &v, &backend).unwrap();
        let (recon, stack) = denoise_collect(&chain[2], &v, &schedule, &backend, None).unwrap();
        assert!(recon.linf_distance(&z0) < 1e-12);
        // Pass-through collection: T * token_count grids, each equal to the
        // backend's fixture.
        assert_eq!(stack.grid_count(), 3);
        for t in 1..=3 {
            assert_eq!(stack.map(t, 0), &backend.grids[0]);
        }
    }

    #[test]
    fn averaging_matches_brute_force_accumulator() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let steps = 5;
        let maps: Vec<Vec<Grid>> = (0..steps)
            .map(|_| vec![Grid::from_fn(16, 16, |_, _| rng.gen_range(0.0..1.0))])
            .collect();
        let stack = AttentionStack::from_maps(maps.clone());
        let avg = average_attention(&stack, 0, AttentionNormalization::Raw).unwrap();

        let mut expected = Grid::zeros(16, 16);
        for row in &maps {
            for r in 0..16 {
                for c in 0..16 {
                    expected.set(r, c, expected.get(r, c) + row[0].get(r, c) / steps as f64);
                }
            }
        }
        assert!(avg.grid.linf_distance(&expected) < 1e-12);
    }

    #[test]
    fn offsets_are_elementwise_differences() {
        let a = vec![Latent::scalar(1.0), Latent::scalar(0.5)];
        let b = vec![Latent::scalar(0.9), Latent::scalar(0.45)];
        let d = direct_inversion_offsets(&a, &b).unwrap();
        assert!((d[0].values()[0] - 0.1).abs() < 1e-15);
        assert!((d[1].values()[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn identical_chains_zero_offsets() {
        let a = vec![Latent::scalar(1.0), Latent::scalar(2.0)];
        let d = direct_inversion_offsets(&a, &a).unwrap();
        assert!(d.iter().all(|l| l.values()[0] == 0.0));
    }

    #[test]
    fn offset_length_mismatch_rejected() {
        let a = vec![Latent::scalar(1.0)];
        let b = vec![Latent::scalar(1.0), Latent::scalar(2.0)];
        assert!(matches!(
            direct_inversion_offsets(&a, &b),
            Err(DiffusionError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn single_step_chain_is_one_denoiser_step() {
        let schedule = NoiseSchedule::new(vec![0.8], vec![0.2]).unwrap();
        let backend = ConstantBackend::new(0.1);
        let v = one_token_embeddings();
        let z_top = Latent::scalar(0.9);
        let (recon, stack) = denoise_collect(&z_top, &v, &schedule, &backend, None).unwrap();
        let (c1, c2) = schedule.denoise_coeffs(1);
        assert!((recon.values()[0] - (c1 * 0.9 + c2 * 0.1)).abs() < 1e-15);
        assert_eq!(stack.timesteps(), 1);
    }

    #[test]
    fn averaging_matches_symmetric_example() {
        let s1 = vec![Grid::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])];
        let s2 = vec![Grid::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]])];
        let stack = AttentionStack::from_maps(vec![s1, s2]);
        let avg = average_attention(&stack, 0, AttentionNormalization::Raw).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(avg.grid.get(r, c), 0.5);
            }
        }
    }

    #[test]
    fn single_step_average_is_identity() {
        let g = Grid::from_rows(&[vec![0.2, 0.8], vec![0.4, 0.6]]);
        let stack = AttentionStack::from_maps(vec![vec![g.clone()]]);
        let avg = average_attention(&stack, 0, AttentionNormalization::Raw).unwrap();
        assert_eq!(avg.grid, g);
    }

    #[test]
    fn average_rejects_out_of_range_token() {
        let g = Grid::zeros(2, 2);
        let stack = AttentionStack::from_maps(vec![vec![g]]);
        assert!(matches!(
            average_attention(&stack, 1, AttentionNormalization::Raw),
            Err(DiffusionError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn schedule_validation() {
        assert!(NoiseSchedule::new(vec![], vec![]).is_err());
        assert!(NoiseSchedule::new(vec![0.5, 0.7], vec![0.1, 0.1]).is_err());
        assert!(NoiseSchedule::new(vec![1.2], vec![0.1]).is_err());
        assert!(NoiseSchedule::new(vec![0.5], vec![-0.1]).is_err());
        assert!(NoiseSchedule::new(vec![1.0, 1.0, 0.5], vec![0.0, 0.1, 0.2]).is_ok());
    }

    #[test]
    fn alpha_one_boundary_has_zero_coefficient() {
        let schedule = NoiseSchedule::new(vec![1.0, 0.5], vec![0.0, 0.5]).unwrap();
        let (a, b) = schedule.invert_coeffs(1);
        assert_eq!(a, 1.0);
        assert_eq!(b, 0.0);
        let (_, b2) = schedule.invert_coeffs(2);
        assert!(b2.is_finite());
    }

    #[test]
    fn schedule_mismatch_detected() {
        struct Fixed;
        impl DenoiserBackend for Fixed {
            fn latent_shape(&self) -> (usize, usize, usize) {
                (1, 1, 1)
            }
            fn schedule_steps(&self) -> Option<usize> {
                Some(5)
            }
            fn encode(&self, _image: &ImageBuf) -> Result<Latent, DiffusionError> {
                Ok(Latent::scalar(0.0))
            }
            fn predict(
                &self,
                _z: &Latent,
                _t: usize,
                _v: &EmbeddingSet,
            ) -> Result<Prediction, DiffusionError> {
                unreachable!("schedule check fires first")
            }
        }
        let schedule = NoiseSchedule::new(vec![0.5], vec![0.5]).unwrap();
        assert!(matches!(
            invert(
                &Latent::scalar(1.0),
                &schedule,
                &one_token_embeddings(),
                &Fixed
            ),
            Err(DiffusionError::ScheduleMismatch {
                backend: 5,
                schedule: 1
            })
        ));
    }
}
