//! Property and dominance tests for the evaluation metrics.

use anyword::evalharness::{
    ap50, ciou, cross_match, giou, iou, miou, recall50, EvalPair, MatchedPair,
};
use anyword::promptmine::{BinaryMask, MaskFrame, MaskPrompt};
use anyword::segmentor::{GroundedRecord, GroundedSegmentation};
use proptest::prelude::*;

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    proptest::collection::vec(any::<bool>(), 64)
        .prop_map(|cells| BinaryMask::from_cells(8, 8, MaskFrame::Image, cells))
}

fn grounded_from(masks: Vec<BinaryMask>) -> GroundedSegmentation {
    GroundedSegmentation {
        records: masks
            .into_iter()
            .enumerate()
            .map(|(i, mask)| GroundedRecord {
                entity_id: i,
                label: format!("p{i}"),
                source_tokens: vec![i],
                mask,
                prompt: MaskPrompt {
                    entity_id: i,
                    label: format!("p{i}"),
                    positives: vec![],
                    negatives: vec![],
                },
                confidence: 1.0,
            })
            .collect(),
        skipped: vec![],
    }
}

proptest! {
    #[test]
    fn metrics_stay_in_unit_interval(
        masks in proptest::collection::vec((mask_strategy(), mask_strategy()), 1..12),
    ) {
        let pairs: Vec<EvalPair> = masks
            .iter()
            .enumerate()
            .map(|(i, (p, g))| EvalPair {
                prediction: p.clone(),
                ground_truth: g.clone(),
                phrase: format!("p{i}"),
                image_id: format!("img{}", i / 3),
                caption_id: i,
            })
            .collect();
        let c = ciou(&pairs).unwrap();
        let g = giou(&pairs).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!((0.0..=1.0).contains(&g));
        for (p, gt) in &masks {
            let v = iou(p, gt).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    // For a single pair with non-empty ground truth, the three IoU views
    // coincide.
    #[test]
    fn singleton_pair_metrics_coincide(p in mask_strategy(), g in mask_strategy()) {
        prop_assume!(g.true_count() > 0);
        let v = iou(&p, &g).unwrap();
        let pair = EvalPair {
            prediction: p,
            ground_truth: g,
            phrase: "x".into(),
            image_id: "x".into(),
            caption_id: 0,
        };
        prop_assert_eq!(ciou(std::slice::from_ref(&pair)).unwrap(), v);
        prop_assert_eq!(giou(&[pair]).unwrap(), v);
    }

    // Dataset metrics must not depend on record order.
    #[test]
    fn metrics_are_permutation_invariant(
        masks in proptest::collection::vec((mask_strategy(), mask_strategy()), 2..10),
        seed in 0u64..1000,
    ) {
        let pairs: Vec<EvalPair> = masks
            .iter()
            .enumerate()
            .map(|(i, (p, g))| EvalPair {
                prediction: p.clone(),
                ground_truth: g.clone(),
                phrase: format!("p{i}"),
                image_id: "img".into(),
                caption_id: i,
            })
            .collect();
        let mut shuffled = pairs.clone();
        // Deterministic Fisher-Yates driven by the seed parameter.
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.swap(i, j);
        }
        prop_assert!((ciou(&pairs).unwrap() - ciou(&shuffled).unwrap()).abs() < 1e-12);
        prop_assert!((giou(&pairs).unwrap() - giou(&shuffled).unwrap()).abs() < 1e-12);

        let matches: Vec<MatchedPair> = pairs
            .iter()
            .map(|p| MatchedPair {
                iou: iou(&p.prediction, &p.ground_truth).unwrap(),
                confidence: 1.0,
            })
            .collect();
        let mut matches_rev: Vec<MatchedPair> = matches.clone();
        matches_rev.reverse();
        let gts = matches.len() + 1;
        prop_assert!((ap50(&matches, &[], gts).unwrap() - ap50(&matches_rev, &[], gts).unwrap()).abs() < 1e-12);
        prop_assert!((recall50(&matches, gts).unwrap() - recall50(&matches_rev, gts).unwrap()).abs() < 1e-12);
        prop_assert!((miou(&matches).unwrap() - miou(&matches_rev).unwrap()).abs() < 1e-12);
    }

    // The optimal assignment dominates the greedy row-by-row assignment.
    #[test]
    fn cross_match_dominates_greedy(
        preds in proptest::collection::vec(mask_strategy(), 1..6),
        gts in proptest::collection::vec(mask_strategy(), 1..6),
    ) {
        let gt_pairs: Vec<(String, BinaryMask)> = gts
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("g{i}"), m.clone()))
            .collect();
        let grounded = grounded_from(preds.clone());
        let assignment = cross_match(&grounded, &gt_pairs).unwrap();
        let optimal: f64 = assignment.pairs.iter().map(|&(_, _, v)| v).sum();

        // Greedy: each prediction takes the best remaining ground truth.
        let mut taken = vec![false; gts.len()];
        let mut greedy = 0.0;
        for p in &preds {
            let mut best: Option<(usize, f64)> = None;
            for (j, g) in gts.iter().enumerate() {
                if taken[j] {
                    continue;
                }
                let w = if p.union_count(g) == 0 { 0.0 } else { iou(p, g).unwrap() };
                if best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((j, w));
                }
            }
            if let Some((j, w)) = best {
                taken[j] = true;
                greedy += w;
            }
        }
        prop_assert!(optimal >= greedy - 1e-12, "optimal {optimal} vs greedy {greedy}");
    }
}
