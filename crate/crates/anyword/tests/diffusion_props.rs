//! Property tests for the diffusion chains and attention averaging.

use anyword::diffusion::{
    average_attention, denoise_collect, invert, AttentionNormalization, AttentionStack,
    DenoiserBackend, NoiseSchedule, ToyDenoiser,
};
use anyword::embedopt::EmbeddingSet;
use anyword::grid::{Grid, Latent};
use proptest::prelude::*;

fn grid_strategy(h: usize, w: usize) -> impl Strategy<Value = Grid> {
    proptest::collection::vec(0.0f64..1.0, h * w).prop_map(move |data| {
        let mut g = Grid::zeros(h, w);
        g.values_mut().copy_from_slice(&data);
        g
    })
}

fn stack_strategy(steps: usize, tokens: usize) -> impl Strategy<Value = AttentionStack> {
    proptest::collection::vec(grid_strategy(8, 8), steps * tokens).prop_map(move |grids| {
        let maps: Vec<Vec<Grid>> = grids.chunks(tokens).map(<[Grid]>::to_vec).collect();
        AttentionStack::from_maps(maps)
    })
}

proptest! {
    // Raw averaging is linear: avg(a + b) = avg(a) + avg(b), elementwise.
    #[test]
    fn raw_averaging_is_linear(
        a in stack_strategy(4, 2),
        b in stack_strategy(4, 2),
    ) {
        let summed = AttentionStack::from_maps(
            (1..=4)
                .map(|t| {
                    (0..2)
                        .map(|token| a.map(t, token).add(b.map(t, token)))
                        .collect()
                })
                .collect(),
        );
        for token in 0..2 {
            let avg_sum = average_attention(&summed, token, AttentionNormalization::Raw).unwrap();
            let avg_a = average_attention(&a, token, AttentionNormalization::Raw).unwrap();
            let avg_b = average_attention(&b, token, AttentionNormalization::Raw).unwrap();
            let recomposed = avg_a.grid.add(&avg_b.grid);
            prop_assert!(avg_sum.grid.linf_distance(&recomposed) < 1e-12);
        }
    }

    // Min-max normalization is idempotent and keeps the argmax location.
    #[test]
    fn minmax_is_idempotent_and_order_preserving(g in grid_strategy(8, 8)) {
        let once = g.minmax_normalized();
        let twice = once.minmax_normalized();
        prop_assert!(once.linf_distance(&twice) < 1e-15);
        prop_assert_eq!(g.argmax(), once.argmax());
        prop_assert!(once.min() >= 0.0 && once.max() <= 1.0);
    }

    // The backward chain replays the inverted chain within 1e-9 for a
    // constant-prediction backend, at every intermediate step.
    #[test]
    fn constant_backend_replay_tracks_the_inverted_chain(
        steps in 1usize..=12,
        alpha_lo in 0.05f64..0.6,
        eps_value in -0.5f64..0.5,
        z0_value in -1.0f64..1.0,
    ) {
        struct Constant(f64);
        impl anyword::diffusion::DenoiserBackend for Constant {
            fn latent_shape(&self) -> (usize, usize, usize) {
                (1, 1, 1)
            }
            fn encode(
                &self,
                _image: &anyword::grid::ImageBuf,
            ) -> Result<Latent, anyword::diffusion::DiffusionError> {
                Ok(Latent::scalar(0.0))
            }
            fn predict(
                &self,
                _z: &Latent,
                _t: usize,
                _v: &EmbeddingSet,
            ) -> Result<anyword::diffusion::Prediction, anyword::diffusion::DiffusionError>
            {
                Ok(anyword::diffusion::Prediction {
                    noise: Latent::scalar(self.0),
                    attention: vec![Grid::from_rows(&[vec![1.0]])],
                })
            }
        }

        let schedule = NoiseSchedule::linear(steps, 0.99, alpha_lo).unwrap();
        let backend = Constant(eps_value);
        let v = EmbeddingSet::new(1, vec![vec![0.0]], vec![true]);
        let z0 = Latent::scalar(z0_value);

        let chain = invert(&z0, &schedule, &v, &backend).unwrap();
        // Replay one step at a time and compare every visited latent.
        let mut current = chain.last().unwrap().clone();
        for t in (1..=steps).rev() {
            let reference = if t == 1 { &z0 } else { &chain[t - 2] };
            let single = NoiseSchedule::with_alpha0(
                schedule.alpha(t - 1),
                vec![schedule.alpha(t)],
                vec![schedule.sigma(t)],
            )
            .unwrap();
            let (stepped, _) = denoise_collect(&current, &v, &single, &backend, None).unwrap();
            prop_assert!(stepped.linf_distance(reference) < 1e-9, "step {t}");
            current = stepped;
        }
    }
}

#[test]
fn toy_attention_is_a_valid_softmax_family() {
    // Non-negative and summing to one across tokens at every cell, for
    // several token counts and steps.
    for tokens in 1..=5 {
        let backend = ToyDenoiser::seeded((1, 2, 2), (8, 8), tokens, 4, tokens as u64);
        let v = EmbeddingSet::new(
            4,
            (0..tokens).map(|i| vec![0.1 * i as f64; 4]).collect(),
            vec![true; tokens],
        );
        for t in [1usize, 7, 31] {
            let pred = backend.predict(&Latent::zeros(1, 2, 2), t, &v).unwrap();
            for r in 0..8 {
                for c in 0..8 {
                    let sum: f64 = pred.attention.iter().map(|g| g.get(r, c)).sum();
                    assert!((sum - 1.0).abs() < 1e-5);
                }
            }
        }
    }
}
