//! End-to-end pipeline behavior on synthetic scenes: determinism, the
//! attention cache, ablation flag semantics, benchmark routing and crash
//! containment.

use anyword::diffusion::DenoiserBackend;
use anyword::evalharness::cross_match;
use anyword::grid::ImageBuf;
use anyword::pipeline::{
    run_benchmark, run_pipeline, synthetic, BenchInput, BenchTask, DatasetRecord, ImageRef,
    PipelineConfig, SharedBackends,
};
use anyword::promptmine::MaskFrame;

fn scene_setup(
    index: usize,
) -> (
    synthetic::SyntheticScene,
    ImageBuf,
    PipelineConfig,
    SharedBackends,
) {
    let scene = synthetic::scene(index, 42);
    let image = scene.record.image.load().unwrap();
    let cfg = PipelineConfig::default();
    let shared = cfg.shared_backends().unwrap();
    (scene, image, cfg, shared)
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (scene, image, cfg, shared) = scene_setup(1);
    let run = || {
        let (grounded, _) = run_pipeline(
            &image,
            &scene.expression,
            &cfg,
            scene.denoiser.as_ref(),
            &shared,
        )
        .unwrap();
        serde_json::to_vec(&grounded).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn attention_cache_hit_skips_denoiser_calls() {
    // A denoiser wrapper that counts predict calls.
    struct Counting<'a> {
        inner: &'a dyn DenoiserBackend,
        calls: std::sync::atomic::AtomicUsize,
    }
    impl anyword::diffusion::DenoiserBackend for Counting<'_> {
        fn latent_shape(&self) -> (usize, usize, usize) {
            self.inner.latent_shape()
        }
        fn attention_resolution(&self) -> (usize, usize) {
            self.inner.attention_resolution()
        }
        fn encode(
            &self,
            image: &ImageBuf,
        ) -> Result<anyword::grid::Latent, anyword::diffusion::DiffusionError> {
            self.inner.encode(image)
        }
        fn predict(
            &self,
            z: &anyword::grid::Latent,
            t: usize,
            v: &anyword::embedopt::EmbeddingSet,
        ) -> Result<anyword::diffusion::Prediction, anyword::diffusion::DiffusionError> {
            self.calls
                .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            self.inner.predict(z, t, v)
        }
        fn predict_noise(
            &self,
            z: &anyword::grid::Latent,
            t: usize,
            v: &anyword::embedopt::EmbeddingSet,
        ) -> Result<anyword::grid::Latent, anyword::diffusion::DiffusionError> {
            self.calls
                .fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            self.inner.predict_noise(z, t, v)
        }
        fn vjp_embeddings(
            &self,
            z: &anyword::grid::Latent,
            t: usize,
            v: &anyword::embedopt::EmbeddingSet,
            cotangent: &anyword::grid::Latent,
        ) -> Result<Vec<Vec<f64>>, anyword::diffusion::DiffusionError> {
            self.inner.vjp_embeddings(z, t, v, cotangent)
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let (scene, image, mut cfg, shared) = scene_setup(2);
    cfg.cache_dir = Some(dir.path().to_path_buf());

    let counting = Counting {
        inner: scene.denoiser.as_ref(),
        calls: std::sync::atomic::AtomicUsize::new(0),
    };

    let (first, diag1) = run_pipeline(&image, &scene.expression, &cfg, &counting, &shared).unwrap();
    let cold_calls = counting.calls.load(std::sync::atomic::Ordering::Relaxed);
    assert!(!diag1.cache_hit);
    assert!(cold_calls > 0);

    let (second, diag2) =
        run_pipeline(&image, &scene.expression, &cfg, &counting, &shared).unwrap();
    let warm_calls = counting.calls.load(std::sync::atomic::Ordering::Relaxed);
    assert!(diag2.cache_hit, "second run must hit the cache");
    assert_eq!(
        cold_calls, warm_calls,
        "cache hit must issue zero denoiser calls"
    );
    assert_eq!(diag1.cache_key, diag2.cache_key);
    assert_eq!(
        serde_json::to_vec(&first).unwrap(),
        serde_json::to_vec(&second).unwrap(),
        "cached maps must reproduce identical output"
    );
}

#[test]
fn ablation_flags_produce_documented_behaviors() {
    // Scene 2 has three entities, at least one with an adjective.
    let (scene, image, base, shared) = scene_setup(2);

    // Baseline: everything off returns upscaled thresholded attention.
    let mut all_off = base.clone();
    all_off.flags.use_pl = false;
    all_off.flags.use_r1 = false;
    all_off.flags.use_r2 = false;
    all_off.flags.use_segmentor = false;
    let (grounded, diag) = run_pipeline(
        &image,
        &scene.expression,
        &all_off,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    assert_eq!(diag.optimization_steps, 0, "PL off skips optimization");
    for record in &grounded.records {
        assert_eq!(record.mask.frame(), MaskFrame::Image);
        // Single positive, no negatives when both regularizers are off.
        assert_eq!(record.prompt.positives.len(), 1);
        assert!(record.prompt.negatives.is_empty());
    }

    // R1 on: positives cluster adjective/attribute points (>= 2 per entity).
    let mut r1_on = all_off.clone();
    r1_on.flags.use_r1 = true;
    let (grounded_r1, _) = run_pipeline(
        &image,
        &scene.expression,
        &r1_on,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    for record in &grounded_r1.records {
        assert!(
            record.prompt.positives.len() >= 2,
            "clustering must add points for {:?}",
            record.label
        );
    }

    // R2 on: negatives appear and equal the union of other entities'
    // positives.
    let mut r2_on = all_off.clone();
    r2_on.flags.use_r2 = true;
    let (grounded_r2, _) = run_pipeline(
        &image,
        &scene.expression,
        &r2_on,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    let total_positives: usize = grounded_r2
        .records
        .iter()
        .map(|r| r.prompt.positives.len())
        .sum();
    for record in &grounded_r2.records {
        assert_eq!(
            record.prompt.negatives.len(),
            total_positives - record.prompt.positives.len()
        );
    }

    // Segmentor on: masks come from the mask generator, not the attention
    // threshold (on the plateau scene they recover the full blobs).
    let mut seg_on = all_off.clone();
    seg_on.flags.use_segmentor = true;
    let (grounded_seg, _) = run_pipeline(
        &image,
        &scene.expression,
        &seg_on,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    for (with_seg, without_seg) in grounded_seg.records.iter().zip(&grounded.records) {
        assert!(
            with_seg.mask.true_count() > without_seg.mask.true_count(),
            "segmentor must grow the coarse attention mask into the blob"
        );
    }

    // PL on: trainable embeddings move, frozen ones stay identical.
    let mut pl_on = all_off.clone();
    pl_on.flags.use_pl = true;
    let (_, diag_pl) = run_pipeline(
        &image,
        &scene.expression,
        &pl_on,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    assert_eq!(diag_pl.optimization_steps, 1100);
}

#[test]
fn grounded_benchmark_saturates_on_easy_scenes() {
    let inputs = synthetic::benchmark_inputs(8, 7);
    let cfg = PipelineConfig::default();
    let report = run_benchmark(&inputs, &cfg, BenchTask::Grounded).unwrap();
    assert_eq!(report.records_failed, 0);
    assert!(report.miou.unwrap() > 0.95, "mIoU {:?}", report.miou);
    assert!(report.ap50.unwrap() > 0.95, "AP50 {:?}", report.ap50);
    assert!(report.recall.unwrap() > 0.95, "Recall {:?}", report.recall);
}

#[test]
fn reference_benchmark_reports_ciou_giou() {
    let inputs = synthetic::benchmark_inputs(6, 3);
    let cfg = PipelineConfig::default();
    let report = run_benchmark(&inputs, &cfg, BenchTask::Reference).unwrap();
    assert!(report.ciou.unwrap() > 0.9);
    assert!(report.giou.unwrap() > 0.9);
    assert!(report.ap50.is_none());
}

#[test]
fn openvocab_concatenates_labels() {
    let inputs = synthetic::benchmark_inputs(4, 5);
    let cfg = PipelineConfig::default();
    let report = run_benchmark(&inputs, &cfg, BenchTask::OpenVocab).unwrap();
    assert!(report.miou.is_some());
    assert_eq!(report.records_failed, 0);
}

#[test]
fn benchmark_workers_do_not_change_results() {
    let inputs = synthetic::benchmark_inputs(6, 11);
    let cfg = PipelineConfig::default();
    let sequential = run_benchmark(&inputs, &cfg, BenchTask::Grounded).unwrap();
    let mut parallel_cfg = cfg.clone();
    parallel_cfg.workers = 4;
    let parallel = run_benchmark(&inputs, &parallel_cfg, BenchTask::Grounded).unwrap();
    assert_eq!(
        serde_json::to_string(&sequential).unwrap(),
        serde_json::to_string(&parallel).unwrap()
    );
}

#[test]
fn record_failures_are_contained() {
    let mut inputs = synthetic::benchmark_inputs(3, 13);
    // Break the middle record with an unreadable image path.
    inputs[1] = BenchInput {
        record: DatasetRecord {
            id: "broken".into(),
            image: ImageRef::Path("/nonexistent/missing.png".into()),
            expressions: vec!["a cat".into()],
            ground_truth: vec![],
            split: "synthetic".into(),
        },
        denoiser: None,
    };
    let cfg = PipelineConfig::default();
    let report = run_benchmark(&inputs, &cfg, BenchTask::Grounded).unwrap();
    assert_eq!(report.records_failed, 1);
    assert_eq!(report.records_evaluated, 2);
    assert!(report.miou.unwrap() > 0.95, "surviving records unaffected");
}

#[test]
fn stability_task_emits_per_image_rows() {
    let inputs = synthetic::benchmark_inputs(4, 9);
    let cfg = PipelineConfig::default();
    let report = run_benchmark(&inputs, &cfg, BenchTask::Stability).unwrap();
    assert_eq!(report.per_image.len(), 4);
    for row in &report.per_image {
        assert_eq!(row.captions, 1 + cfg.stability_variants);
        assert!(row.iou_mean >= 0.0 && row.iou_mean <= 1.0);
    }
    let csv = report.stability_csv();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn installed_adapter_selects_the_short_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let adapter_path = dir.path().join("encoder.adapter");

    // Train and persist an adapter against the default toy encoder.
    let encoder = anyword::embedopt::ToyTextEncoder::open_vocabulary(8);
    let samples: Vec<(String, String)> = (0..6)
        .map(|i| (format!("img{i}"), format!("a red cat {i}")))
        .collect();
    let adapter =
        anyword::embedopt::fast_adapt_text_encoder(&samples, &encoder, 16, 100, 5).unwrap();
    adapter.save(&adapter_path).unwrap();

    let (scene, image, mut cfg, _) = scene_setup(1);
    cfg.adapter_path = Some(adapter_path);
    let shared = cfg.shared_backends().unwrap();
    assert!(shared.adapter_installed);

    let (_, diag) = run_pipeline(
        &image,
        &scene.expression,
        &cfg,
        scene.denoiser.as_ref(),
        &shared,
    )
    .unwrap();
    assert_eq!(
        diag.optimization_steps, 50,
        "installed adapter licenses fast_steps"
    );

    // Without the adapter the full schedule runs.
    let (_, _, cfg_plain, shared_plain) = scene_setup(1);
    let (_, diag_plain) = run_pipeline(
        &image,
        &scene.expression,
        &cfg_plain,
        scene.denoiser.as_ref(),
        &shared_plain,
    )
    .unwrap();
    assert_eq!(diag_plain.optimization_steps, 1100);
}

#[test]
fn skipped_entities_survive_cross_matching() {
    // A backend whose "cat" map is exactly constant forces a degenerate-map
    // skip for entity 0; the "dog" entity still gets mined and matched.
    // Token layout of "a cat beside a dog": a(0) cat(1) beside(2) a(3) dog(4).
    struct HandAttention {
        inner: anyword::diffusion::ToyDenoiser,
    }
    impl anyword::diffusion::DenoiserBackend for HandAttention {
        fn latent_shape(&self) -> (usize, usize, usize) {
            self.inner.latent_shape()
        }
        fn encode(
            &self,
            image: &ImageBuf,
        ) -> Result<anyword::grid::Latent, anyword::diffusion::DiffusionError> {
            self.inner.encode(image)
        }
        fn predict(
            &self,
            z: &anyword::grid::Latent,
            t: usize,
            v: &anyword::embedopt::EmbeddingSet,
        ) -> Result<anyword::diffusion::Prediction, anyword::diffusion::DiffusionError> {
            let noise = self.inner.predict_noise(z, t, v)?;
            // Per-cell token shares that sum to one: cat constant 0.2, dog
            // bump over the right blob, fillers absorb the remainder.
            let bump = anyword::diffusion::toy::gaussian_blob(16, 16, 8.0, 12.0, 1.0);
            let cat = anyword::grid::Grid::from_fn(16, 16, |_, _| 0.2);
            let dog = anyword::grid::Grid::from_fn(16, 16, |r, c| 0.2 + 0.5 * bump.get(r, c));
            let filler =
                anyword::grid::Grid::from_fn(16, 16, |r, c| (1.0 - 0.2 - dog.get(r, c)) / 3.0);
            Ok(anyword::diffusion::Prediction {
                noise,
                attention: vec![filler.clone(), cat, filler.clone(), filler, dog],
            })
        }
    }

    let mut image = ImageBuf::new(64, 64);
    for y in 28..36 {
        for x in 44..52 {
            image.set(x, y, 0.5);
        }
    }
    let gt_left = {
        let mut m = anyword::promptmine::BinaryMask::new(64, 64, MaskFrame::Image);
        m.set(8, 8, true);
        m
    };
    let gt_right = {
        let mut m = anyword::promptmine::BinaryMask::new(64, 64, MaskFrame::Image);
        for r in 28..36 {
            for c in 44..52 {
                m.set(r, c, true);
            }
        }
        m
    };

    let cfg = PipelineConfig::default();
    let shared = cfg.shared_backends().unwrap();
    let backend = HandAttention {
        inner: anyword::diffusion::ToyDenoiser::seeded((2, 8, 8), (16, 16), 5, 8, 1),
    };
    let (grounded, _) =
        run_pipeline(&image, "a cat beside a dog", &cfg, &backend, &shared).unwrap();

    assert_eq!(grounded.skipped.len(), 1);
    assert_eq!(grounded.skipped[0].entity_id, 0);
    assert_eq!(grounded.records.len(), 1);
    assert_eq!(grounded.records[0].label, "a dog");

    let gts = vec![
        ("a cat".to_string(), gt_left),
        ("a dog".to_string(), gt_right),
    ];
    let assignment = cross_match(&grounded, &gts).unwrap();
    assert_eq!(assignment.pairs.len(), 1);
    assert_eq!(assignment.pairs[0].1, 1, "dog matches the right blob");
    assert!(assignment.pairs[0].2 > 0.9);
    assert_eq!(assignment.unmatched_ground_truths, vec![0]);
}
