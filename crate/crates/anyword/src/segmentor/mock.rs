//! Deterministic geometric mock: region growing from the positive points
//! under an intensity-similarity predicate, hard-clipped at the
//! perpendicular bisector to the nearest negative. Every positive pixel is
//! inside the output, every negative pixel outside, exactly.

use super::{pixel_of, PromptableSegmentor, SegmentError, SegmentorInfo};
use crate::grid::ImageBuf;
use crate::promptmine::{BinaryMask, MaskFrame, MaskPrompt};
use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct MockSegmentor {
    /// Maximum luma difference to the seed for a pixel to join its region.
    pub intensity_tolerance: f64,
}

impl Default for MockSegmentor {
    fn default() -> Self {
        Self {
            intensity_tolerance: 0.05,
        }
    }
}

impl MockSegmentor {
    pub fn new(intensity_tolerance: f64) -> Self {
        Self {
            intensity_tolerance,
        }
    }
}

fn dist2(x: f64, y: f64, px: f64, py: f64) -> f64 {
    (x - px) * (x - px) + (y - py) * (y - py)
}

impl PromptableSegmentor for MockSegmentor {
    fn info(&self) -> SegmentorInfo {
        SegmentorInfo {
            name: "mock-region-grow".into(),
            input_size: None,
        }
    }

    fn segment(&self, image: &ImageBuf, prompt: &MaskPrompt) -> Result<BinaryMask, SegmentError> {
        let (w, h) = (image.width(), image.height());
        let mut mask = BinaryMask::new(h, w, MaskFrame::Image);

        // A pixel is admissible when its center is strictly closer to some
        // positive than to every negative.
        let admissible = |x: usize, y: usize| -> bool {
            let cx = x as f64 + 0.5;
            let cy = y as f64 + 0.5;
            let dp = prompt
                .positives
                .iter()
                .map(|p| dist2(cx, cy, p.x, p.y))
                .fold(f64::INFINITY, f64::min);
            let dn = prompt
                .negatives
                .iter()
                .map(|p| dist2(cx, cy, p.x, p.y))
                .fold(f64::INFINITY, f64::min);
            dp < dn
        };

        let mut visited = vec![false; w * h];
        for seed_point in &prompt.positives {
            let (sx, sy) = pixel_of(seed_point.x, seed_point.y);
            if sx >= w || sy >= h {
                return Err(SegmentError::InvalidPrompt(format!(
                    "seed ({}, {}) outside image",
                    seed_point.x, seed_point.y
                )));
            }
            let seed_luma = image.get(sx, sy);

            let mut queue = VecDeque::new();
            let start = sy * w + sx;
            if !visited[start] {
                visited[start] = true;
                queue.push_back((sx, sy));
            }
            mask.set(sy, sx, true);

            while let Some((x, y)) = queue.pop_front() {
                let mut try_push = |nx: usize, ny: usize| {
                    let idx = ny * w + nx;
                    if visited[idx] {
                        return;
                    }
                    let similar = (image.get(nx, ny) - seed_luma).abs() <= self.intensity_tolerance;
                    if similar && admissible(nx, ny) {
                        visited[idx] = true;
                        queue.push_back((nx, ny));
                    }
                };
                if x > 0 {
                    try_push(x - 1, y);
                }
                if x + 1 < w {
                    try_push(x + 1, y);
                }
                if y > 0 {
                    try_push(x, y - 1);
                }
                if y + 1 < h {
                    try_push(x, y + 1);
                }
                mask.set(y, x, true);
            }
        }

        // The bisector clip guarantees negatives stay outside; enforce it
        // on the exact pixels too in case a negative sits on a grown seed's
        // own pixel ridge.
        for n in &prompt.negatives {
            let (nx, ny) = pixel_of(n.x, n.y);
            if nx < w && ny < h {
                mask.set(ny, nx, false);
            }
        }
        Ok(mask)
    }
}
