//! Mining of point prompts from averaged attention maps, regularized by the
//! parsed linguistic structure: adjective/attribute clustering adds positive
//! points per entity, mutual-exclusion binding turns the other entities'
//! positives into negatives.

use crate::diffusion::AveragedAttentionMap;
use crate::grid::ImageSize;
use crate::textgraph::{Entity, ParsedExpression};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("attention map for token {token} is degenerate (constant or empty after threshold)")]
    DegenerateMap { token: usize },
    #[error("mask for token {token:?} has no true cells")]
    EmptyMask { token: Option<usize> },
    #[error("entity {entity} mask covers the whole frame, no exterior cells to sample")]
    NoExteriorCells { entity: usize },
    #[error("no attention map supplied for token {token}")]
    MissingMap { token: usize },
}

/// Coordinate frame a binary mask lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskFrame {
    /// Attention-resolution grid (h, w).
    Attention,
    /// Full-resolution image pixels (H_img, W_img).
    Image,
}

/// Boolean grid with an explicit frame; conversions between frames are
/// always spelled out, never implicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    h: usize,
    w: usize,
    frame: MaskFrame,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(h: usize, w: usize, frame: MaskFrame) -> Self {
        Self {
            h,
            w,
            frame,
            cells: vec![false; h * w],
        }
    }

    pub fn from_cells(h: usize, w: usize, frame: MaskFrame, cells: Vec<bool>) -> Self {
        assert_eq!(cells.len(), h * w, "mask cell count mismatch");
        Self { h, w, frame, cells }
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn frame(&self) -> MaskFrame {
        self.frame
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.cells[r * self.w + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.cells[r * self.w + c] = v;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn true_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// True cells in row-major order.
    pub fn true_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.h {
            for c in 0..self.w {
                if self.get(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Nearest-neighbor upscale into the image frame.
    pub fn upscale_nearest(&self, size: ImageSize) -> BinaryMask {
        let mut out = BinaryMask::new(size.height, size.width, MaskFrame::Image);
        for y in 0..size.height {
            let r = (y * self.h) / size.height;
            for x in 0..size.width {
                let c = (x * self.w) / size.width;
                out.set(y, x, self.get(r, c));
            }
        }
        out
    }

    /// Cells differing from `other` (same frame and shape required).
    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        assert_eq!(self.frame, other.frame, "mask frame mismatch");
        assert_eq!((self.h, self.w), (other.h, other.w), "mask shape mismatch");
        self.cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| **a && **b)
            .count()
    }

    pub fn union_count(&self, other: &BinaryMask) -> usize {
        assert_eq!(self.frame, other.frame, "mask frame mismatch");
        assert_eq!((self.h, self.w), (other.h, other.w), "mask shape mismatch");
        self.cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| **a || **b)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A prompt point in continuous image-frame coordinates. Points are only
/// ever constructed in the image frame, so a `MaskPrompt` cannot carry
/// attention-frame coordinates by type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub polarity: Polarity,
    /// Token the point was mined from; `None` for background samples.
    pub source_token: Option<usize>,
}

impl Point {
    pub fn with_polarity(&self, polarity: Polarity) -> Point {
        Point {
            polarity,
            ..self.clone()
        }
    }

    /// The attention-frame (or pixel-frame) cell this point falls into.
    pub fn cell(&self, grid_h: usize, grid_w: usize, size: ImageSize) -> (usize, usize) {
        let c = (self.x * grid_w as f64 / size.width as f64).floor() as usize;
        let r = (self.y * grid_h as f64 / size.height as f64).floor() as usize;
        (r.min(grid_h - 1), c.min(grid_w - 1))
    }
}

/// Positive/negative point sets plus the label inherited from the
/// expression, for one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrompt {
    pub entity_id: usize,
    pub label: String,
    pub positives: Vec<Point>,
    pub negatives: Vec<Point>,
}

/// An entity dropped during mining, with the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub entity_id: usize,
    pub token: usize,
    pub reason: String,
}

/// Knobs of the mining stage. Defaults reproduce the full method; the
/// cluster/bind switches are the R1/R2 ablation axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningOptions {
    pub threshold: f64,
    /// R1: cluster adjective/attribute points as positives.
    pub cluster_positives: bool,
    /// R2: bind other entities' positives as negatives.
    pub bind_negatives: bool,
    /// Resample other entities' maps instead of reusing their positive
    /// points when binding negatives.
    pub fresh_negative_sampling: bool,
    pub background_negatives: (usize, usize),
}

impl Default for MiningOptions {
    fn default() -> Self {
        Self {
            threshold: 0.7,
            cluster_positives: true,
            bind_negatives: true,
            fresh_negative_sampling: false,
            background_negatives: (1, 3),
        }
    }
}

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

/// Threshold an averaged attention map into an attention-frame mask. The
/// caller is expected to pass min-max-normalized maps; thresholding raw
/// softmax mass is allowed but on the caller's head. An empty result (for
/// example a constant map below the threshold) is surfaced as an error, not
/// passed downstream.
pub fn threshold_mask(
    avg: &AveragedAttentionMap,
    threshold: f64,
) -> Result<BinaryMask, PromptError> {
    let g = &avg.grid;
    let mut mask = BinaryMask::new(g.height(), g.width(), MaskFrame::Attention);
    for r in 0..g.height() {
        for c in 0..g.width() {
            mask.set(r, c, g.get(r, c) >= threshold);
        }
    }
    if mask.true_count() == 0 {
        return Err(PromptError::DegenerateMap {
            token: avg.token_index,
        });
    }
    Ok(mask)
}

/// Largest 4-connected component, ties broken by the smallest (row, col) of
/// the component's top-left cell.
pub fn largest_component(mask: &BinaryMask) -> Result<BinaryMask, PromptError> {
    if mask.true_count() == 0 {
        return Err(PromptError::EmptyMask { token: None });
    }
    let (h, w) = (mask.height(), mask.width());
    let mut visited = vec![false; h * w];
    let mut best: Option<(usize, Vec<usize>)> = None;

    // Row-major scan discovers each component at its top-left cell first,
    // so keeping the first maximum realizes the tie-break.
    for start in 0..h * w {
        if visited[start] || !mask.cells()[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut member = Vec::new();
        visited[start] = true;
        while let Some(idx) = stack.pop() {
            member.push(idx);
            let (r, c) = (idx / w, idx % w);
            let mut push = |rr: usize, cc: usize| {
                let j = rr * w + cc;
                if !visited[j] && mask.cells()[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                push(r - 1, c);
            }
            if r + 1 < h {
                push(r + 1, c);
            }
            if c > 0 {
                push(r, c - 1);
            }
            if c + 1 < w {
                push(r, c + 1);
            }
        }
        let better = match &best {
            Some((size, _)) => member.len() > *size,
            None => true,
        };
        if better {
            best = Some((member.len(), member));
        }
    }

    let (_, members) = best.expect("non-empty mask has a component");
    let mut out = BinaryMask::new(h, w, mask.frame());
    for idx in members {
        out.set(idx / w, idx % w, true);
    }
    Ok(out)
}

/// Uniform draw over the region's true cells, mapped to the image frame at
/// the cell center.
pub fn sample_point(
    region: &BinaryMask,
    size: ImageSize,
    polarity: Polarity,
    source_token: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<Point, PromptError> {
    let cells = region.true_cells();
    if cells.is_empty() {
        return Err(PromptError::EmptyMask {
            token: source_token,
        });
    }
    let (r, c) = cells[rng.gen_range(0..cells.len())];
    let (sx, sy) = match region.frame() {
        MaskFrame::Attention => (
            size.width as f64 / region.width() as f64,
            size.height as f64 / region.height() as f64,
        ),
        MaskFrame::Image => (1.0, 1.0),
    };
    Ok(Point {
        x: (c as f64 + 0.5) * sx,
        y: (r as f64 + 0.5) * sy,
        polarity,
        source_token,
    })
}

fn mined_token_point(
    token: usize,
    maps: &BTreeMap<usize, AveragedAttentionMap>,
    threshold: f64,
    size: ImageSize,
    rng: &mut dyn RngCore,
) -> Result<Point, PromptError> {
    let map = maps.get(&token).ok_or(PromptError::MissingMap { token })?;
    let mask = threshold_mask(map, threshold)?;
    let region =
        largest_component(&mask).map_err(|_| PromptError::EmptyMask { token: Some(token) })?;
    sample_point(&region, size, Polarity::Positive, Some(token), rng)
}

/// Positive set for one entity: one point from the root's largest region
/// plus one per attribute noun and adjective (the same threshold → largest
/// region → sample pipeline). A bare noun samples twice from its own map.
pub fn cluster_positive(
    entity: &Entity,
    maps: &BTreeMap<usize, AveragedAttentionMap>,
    options: &MiningOptions,
    size: ImageSize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Point>, PromptError> {
    let root = entity.root_token.index;
    let mut points = vec![mined_token_point(root, maps, options.threshold, size, rng)?];

    let mut companions: Vec<usize> = entity
        .attribute_nouns
        .iter()
        .map(|t| t.index)
        .chain(entity.adjectives.iter().map(|a| a.token.index))
        .collect();
    companions.sort_unstable();
    companions.dedup();

    if companions.is_empty() {
        points.push(mined_token_point(root, maps, options.threshold, size, rng)?);
    } else {
        for token in companions {
            points.push(mined_token_point(
                token,
                maps,
                options.threshold,
                size,
                rng,
            )?);
        }
    }
    Ok(points)
}

/// Negative set for one entity. With other entities present, their positive
/// points are reused (re-tagged negative) in entity order; alone, 1..=3
/// background points are drawn uniformly from image-frame cells outside the
/// entity's upscaled mask.
pub fn bind_negatives(
    positives_by_entity: &BTreeMap<usize, Vec<Point>>,
    target: usize,
    entity_masks: &BTreeMap<usize, BinaryMask>,
    size: ImageSize,
    background_range: (usize, usize),
    rng: &mut dyn RngCore,
) -> Result<Vec<Point>, PromptError> {
    let others: Vec<usize> = positives_by_entity
        .keys()
        .copied()
        .filter(|&j| j != target)
        .collect();

    if !others.is_empty() {
        let mut negatives = Vec::new();
        for j in others {
            for p in &positives_by_entity[&j] {
                negatives.push(p.with_polarity(Polarity::Negative));
            }
        }
        return Ok(negatives);
    }

    // Single-entity case: background negatives outside the object mask.
    let mask = entity_masks
        .get(&target)
        .ok_or(PromptError::EmptyMask { token: None })?;
    let image_mask = match mask.frame() {
        MaskFrame::Attention => mask.upscale_nearest(size),
        MaskFrame::Image => mask.clone(),
    };
    let exterior: Vec<(usize, usize)> = {
        let mut out = Vec::new();
        for r in 0..image_mask.height() {
            for c in 0..image_mask.width() {
                if !image_mask.get(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    };
    if exterior.is_empty() {
        return Err(PromptError::NoExteriorCells { entity: target });
    }

    let k = rng.gen_range(background_range.0..=background_range.1);
    let mut negatives = Vec::with_capacity(k);
    for _ in 0..k {
        let (r, c) = exterior[rng.gen_range(0..exterior.len())];
        negatives.push(Point {
            x: c as f64 + 0.5,
            y: r as f64 + 0.5,
            polarity: Polarity::Negative,
            source_token: None,
        });
    }
    Ok(negatives)
}

/// Mining outcome: prompts in entity order plus skip reports for entities
/// dropped on degenerate maps.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedPrompts {
    pub prompts: Vec<MaskPrompt>,
    pub skipped: Vec<SkipReport>,
}

/// Full prompt construction: positives per entity in parse order, then
/// recurrent negative binding. Entities with degenerate maps are skipped
/// and reported, never silently dropped.
pub fn build_mask_prompts(
    parsed: &ParsedExpression,
    maps: &BTreeMap<usize, AveragedAttentionMap>,
    options: &MiningOptions,
    size: ImageSize,
    rng: &mut dyn RngCore,
) -> Result<MinedPrompts, PromptError> {
    let mut positives: BTreeMap<usize, Vec<Point>> = BTreeMap::new();
    let mut masks: BTreeMap<usize, BinaryMask> = BTreeMap::new();
    let mut skipped = Vec::new();

    for (entity_id, entity) in parsed.entities.iter().enumerate() {
        let root = entity.root_token.index;
        let mined = if options.cluster_positives {
            cluster_positive(entity, maps, options, size, rng)
        } else {
            mined_token_point(root, maps, options.threshold, size, rng).map(|p| vec![p])
        };
        match mined {
            Ok(points) => {
                // Root mask is kept for background negative sampling.
                let map = maps
                    .get(&root)
                    .ok_or(PromptError::MissingMap { token: root })?;
                let mask = threshold_mask(map, options.threshold)?;
                masks.insert(entity_id, mask);
                positives.insert(entity_id, points);
            }
            Err(PromptError::DegenerateMap { token }) => skipped.push(SkipReport {
                entity_id,
                token,
                reason: "degenerate attention map".into(),
            }),
            Err(PromptError::EmptyMask { token }) => skipped.push(SkipReport {
                entity_id,
                token: token.unwrap_or(root),
                reason: "empty thresholded mask".into(),
            }),
            Err(e) => return Err(e),
        }
    }

    let mut prompts = Vec::with_capacity(positives.len());
    for (entity_id, entity) in parsed.entities.iter().enumerate() {
        let Some(pos) = positives.get(&entity_id) else {
            continue;
        };
        let negatives = if options.bind_negatives {
            if options.fresh_negative_sampling && positives.len() > 1 {
                let mut fresh = Vec::new();
                for (&j, _) in positives.iter().filter(|(&j, _)| j != entity_id) {
                    let other = &parsed.entities[j];
                    for p in cluster_positive(other, maps, options, size, rng)? {
                        fresh.push(p.with_polarity(Polarity::Negative));
                    }
                }
                fresh
            } else {
                bind_negatives(
                    &positives,
                    entity_id,
                    &masks,
                    size,
                    options.background_negatives,
                    rng,
                )?
            }
        } else {
            Vec::new()
        };
        prompts.push(MaskPrompt {
            entity_id,
            label: entity.label(&parsed.tokens),
            positives: pos.clone(),
            negatives,
        });
    }

    Ok(MinedPrompts { prompts, skipped })
}

/// One JSON record per prompt, the debugging/ablation dump format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptDumpRecord {
    pub entity_id: usize,
    pub label: String,
    pub positives: Vec<[f64; 2]>,
    pub negatives: Vec<[f64; 2]>,
    pub seed: u64,
}

impl PromptDumpRecord {
    pub fn from_prompt(prompt: &MaskPrompt, seed: u64) -> Self {
        Self {
            entity_id: prompt.entity_id,
            label: prompt.label.clone(),
            positives: prompt.positives.iter().map(|p| [p.x, p.y]).collect(),
            negatives: prompt.negatives.iter().map(|p| [p.x, p.y]).collect(),
            seed,
        }
    }
}
