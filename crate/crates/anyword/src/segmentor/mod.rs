//! Promptable mask generation behind a uniform interface: a deterministic
//! geometric mock for tests and an out-of-process adapter for real
//! checkpoint-backed models. Both are frozen: identical (image, prompt)
//! inputs yield identical masks.

mod mock;
mod remote;

pub use mock::MockSegmentor;
pub use remote::{handle_segment_request, RemoteSegmentor};

use crate::grid::ImageBuf;
use crate::promptmine::{BinaryMask, MaskPrompt, SkipReport};
use crate::textgraph::ParsedExpression;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("segmentor backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("invalid prompt: {0}")]
    InvalidPrompt(String),
    #[error("entity {entity_id} ({label:?}) has no mask and no skip report")]
    MissingEntityMask { entity_id: usize, label: String },
}

/// Backend description reported by `info`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentorInfo {
    pub name: String,
    /// Native input size when the model resizes internally.
    pub input_size: Option<(usize, usize)>,
}

/// Frozen promptable segmentation model.
pub trait PromptableSegmentor: Send + Sync {
    fn info(&self) -> SegmentorInfo;

    /// Maximum concurrent requests a shared handle supports; `None` means
    /// freely shareable.
    fn max_concurrent_requests(&self) -> Option<usize> {
        None
    }

    /// Confidence reported for generated masks, used for AP ranking.
    fn mask_confidence(&self) -> f64 {
        1.0
    }

    fn segment(&self, image: &ImageBuf, prompt: &MaskPrompt) -> Result<BinaryMask, SegmentError>;
}

/// Validate a prompt against the image, then run the backend. The mask
/// comes back in the image frame at image resolution.
pub fn segment<B: PromptableSegmentor + ?Sized>(
    image: &ImageBuf,
    prompt: &MaskPrompt,
    backend: &B,
) -> Result<BinaryMask, SegmentError> {
    if prompt.positives.is_empty() {
        return Err(SegmentError::InvalidPrompt(format!(
            "entity {} has no positive points",
            prompt.entity_id
        )));
    }
    let (w, h) = (image.width() as f64, image.height() as f64);
    for p in prompt.positives.iter().chain(&prompt.negatives) {
        if p.x < 0.0 || p.x >= w || p.y < 0.0 || p.y >= h {
            return Err(SegmentError::InvalidPrompt(format!(
                "point ({}, {}) outside {}x{} image",
                p.x,
                p.y,
                image.width(),
                image.height()
            )));
        }
    }
    for pos in &prompt.positives {
        for neg in &prompt.negatives {
            if pixel_of(pos.x, pos.y) == pixel_of(neg.x, neg.y) {
                return Err(SegmentError::InvalidPrompt(format!(
                    "positive and negative prompt share cell {:?}",
                    pixel_of(pos.x, pos.y)
                )));
            }
        }
    }
    backend.segment(image, prompt)
}

pub(crate) fn pixel_of(x: f64, y: f64) -> (usize, usize) {
    (x.floor().max(0.0) as usize, y.floor().max(0.0) as usize)
}

/// One grounded record: the mask plus the word provenance that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedRecord {
    pub entity_id: usize,
    pub label: String,
    pub source_tokens: Vec<usize>,
    pub mask: BinaryMask,
    pub prompt: MaskPrompt,
    pub confidence: f64,
}

/// Per-entity masks with word-index provenance, in parse order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedSegmentation {
    pub records: Vec<GroundedRecord>,
    pub skipped: Vec<SkipReport>,
}

impl GroundedSegmentation {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Assemble per-entity masks into the final grounded output. Labels are
/// copied verbatim from the entity phrases and entity order is preserved;
/// an entity that is neither masked nor reported as skipped is an error.
pub fn assemble_grounded(
    masks: &BTreeMap<usize, (BinaryMask, MaskPrompt, f64)>,
    parsed: &ParsedExpression,
    skipped: &[SkipReport],
) -> Result<GroundedSegmentation, SegmentError> {
    let mut records = Vec::with_capacity(masks.len());
    for (entity_id, entity) in parsed.entities.iter().enumerate() {
        let label = entity.label(&parsed.tokens);
        match masks.get(&entity_id) {
            Some((mask, prompt, confidence)) => {
                records.push(GroundedRecord {
                    entity_id,
                    label,
                    source_tokens: entity.concept_token_indices(),
                    mask: mask.clone(),
                    prompt: prompt.clone(),
                    confidence: *confidence,
                });
            }
            None => {
                if !skipped.iter().any(|s| s.entity_id == entity_id) {
                    return Err(SegmentError::MissingEntityMask { entity_id, label });
                }
            }
        }
    }
    Ok(GroundedSegmentation {
        records,
        skipped: skipped.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promptmine::{MaskFrame, Point, Polarity};
    use crate::textgraph::{parse_expression, ParserBackend};

    fn point(x: f64, y: f64, polarity: Polarity) -> Point {
        Point {
            x,
            y,
            polarity,
            source_token: Some(0),
        }
    }

    fn prompt(positives: Vec<Point>, negatives: Vec<Point>) -> MaskPrompt {
        MaskPrompt {
            entity_id: 0,
            label: "cat".into(),
            positives,
            negatives,
        }
    }

    #[test]
    fn empty_positives_rejected() {
        let img = ImageBuf::new(8, 8);
        let p = prompt(vec![], vec![]);
        let backend = MockSegmentor::default();
        assert!(matches!(
            segment(&img, &p, &backend),
            Err(SegmentError::InvalidPrompt(_))
        ));
    }

    #[test]
    fn out_of_image_point_rejected() {
        let img = ImageBuf::new(8, 8);
        let p = prompt(vec![point(9.0, 1.0, Polarity::Positive)], vec![]);
        assert!(matches!(
            segment(&img, &p, &MockSegmentor::default()),
            Err(SegmentError::InvalidPrompt(_))
        ));
    }

    #[test]
    fn contradictory_prompt_rejected() {
        let img = ImageBuf::new(8, 8);
        let p = prompt(
            vec![point(3.2, 3.7, Polarity::Positive)],
            vec![point(3.9, 3.1, Polarity::Negative)],
        );
        assert!(matches!(
            segment(&img, &p, &MockSegmentor::default()),
            Err(SegmentError::InvalidPrompt(_))
        ));
    }

    #[test]
    fn assemble_preserves_order_and_labels() {
        let parsed = parse_expression("a cat beside a dog", &ParserBackend::BuiltinRules).unwrap();
        let mask = BinaryMask::new(4, 4, MaskFrame::Image);
        let mut masks = BTreeMap::new();
        for id in 0..2usize {
            masks.insert(
                id,
                (
                    mask.clone(),
                    prompt(vec![point(1.0, 1.0, Polarity::Positive)], vec![]),
                    1.0,
                ),
            );
        }
        let out = assemble_grounded(&masks, &parsed, &[]).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].label, "a cat");
        assert_eq!(out.records[1].label, "a dog");
        assert!(out.records[0].source_tokens.contains(&1));
    }

    #[test]
    fn missing_mask_without_skip_report_is_an_error() {
        let parsed = parse_expression("a cat beside a dog", &ParserBackend::BuiltinRules).unwrap();
        let masks = BTreeMap::new();
        assert!(matches!(
            assemble_grounded(&masks, &parsed, &[]),
            Err(SegmentError::MissingEntityMask { entity_id: 0, .. })
        ));
    }

    #[test]
    fn all_skipped_yields_empty_output_with_reports() {
        let parsed = parse_expression("cat", &ParserBackend::BuiltinRules).unwrap();
        let skipped = vec![SkipReport {
            entity_id: 0,
            token: 0,
            reason: "degenerate attention map".into(),
        }];
        let out = assemble_grounded(&BTreeMap::new(), &parsed, &skipped).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.skipped.len(), 1);
    }
}
