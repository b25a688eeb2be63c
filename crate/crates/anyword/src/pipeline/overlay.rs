//! Qualitative overlay emitter: per-entity masks in a fixed palette, label
//! text in a 5x7 bitmap font, and prompt points drawn filled (positive) or
//! hollow (negative).

use super::PipelineError;
use crate::grid::ImageBuf;
use crate::promptmine::Polarity;
use crate::segmentor::GroundedSegmentation;
use std::path::Path;

/// Fixed palette, one entry per entity in parse order (wrapping).
pub const PALETTE: [[u8; 3]; 8] = [
    [230, 60, 60],
    [80, 200, 100],
    [70, 120, 230],
    [240, 160, 50],
    [170, 90, 220],
    [60, 200, 210],
    [230, 80, 180],
    [210, 210, 70],
];

/// 5x7 glyphs, 5 low bits per row. Lowercase maps onto uppercase.
const FONT: &[(char, [u8; 7])] = &[
    ('A', [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('B', [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E]),
    ('C', [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E]),
    ('D', [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E]),
    ('E', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F]),
    ('F', [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10]),
    ('G', [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F]),
    ('H', [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11]),
    ('I', [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('J', [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C]),
    ('K', [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11]),
    ('L', [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F]),
    ('M', [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11]),
    ('N', [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11]),
    ('O', [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('P', [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10]),
    ('Q', [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D]),
    ('R', [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11]),
    ('S', [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E]),
    ('T', [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04]),
    ('U', [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E]),
    ('V', [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04]),
    ('W', [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A]),
    ('X', [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11]),
    ('Y', [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04]),
    ('Z', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F]),
    ('0', [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E]),
    ('1', [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E]),
    ('2', [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F]),
    ('3', [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E]),
    ('4', [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02]),
    ('5', [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E]),
    ('6', [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E]),
    ('7', [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08]),
    ('8', [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E]),
    ('9', [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C]),
    ('-', [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00]),
    ('\'', [0x04, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00]),
    (' ', [0x00; 7]),
];

fn glyph(c: char) -> [u8; 7] {
    let key = c.to_ascii_uppercase();
    FONT.iter()
        .find(|(g, _)| *g == key)
        .map(|(_, rows)| *rows)
        .unwrap_or([0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F])
}

/// RGB raster with simple drawing primitives.
pub struct Overlay {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Overlay {
    fn from_luma(image: &ImageBuf) -> Self {
        let mut rgb = Vec::with_capacity(image.width() * image.height() * 3);
        for y in 0..image.height() {
            for x in 0..image.width() {
                let v = (image.get(x, y).clamp(0.0, 1.0) * 255.0) as u8;
                rgb.extend_from_slice(&[v, v, v]);
            }
        }
        Self {
            width: image.width(),
            height: image.height(),
            rgb,
        }
    }

    fn blend(&mut self, x: usize, y: usize, color: [u8; 3], alpha: f64) {
        if x >= self.width || y >= self.height {
            return;
        }
        let i = (y * self.width + x) * 3;
        for ch in 0..3 {
            let old = f64::from(self.rgb[i + ch]);
            self.rgb[i + ch] = (old * (1.0 - alpha) + f64::from(color[ch]) * alpha) as u8;
        }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x < 0 || y < 0 {
            return;
        }
        self.blend(x as usize, y as usize, color, 1.0);
    }

    fn disk(&mut self, cx: f64, cy: f64, radius: f64, color: [u8; 3], filled: bool) {
        let r = radius.ceil() as i64;
        let (icx, icy) = (cx as i64, cy as i64);
        for dy in -r..=r {
            for dx in -r..=r {
                let d = ((dx * dx + dy * dy) as f64).sqrt();
                let on = if filled {
                    d <= radius
                } else {
                    (d - radius).abs() <= 0.8
                };
                if on {
                    self.put(icx + dx, icy + dy, color);
                }
            }
        }
    }

    fn text(&mut self, x: usize, y: usize, s: &str, color: [u8; 3]) {
        let mut cx = x as i64;
        for c in s.chars() {
            let rows = glyph(c);
            for (ry, row) in rows.iter().enumerate() {
                for rx in 0..5 {
                    if row & (1 << (4 - rx)) != 0 {
                        self.put(cx + rx as i64, y as i64 + ry as i64, color);
                    }
                }
            }
            cx += 6;
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<(), PipelineError> {
        let img =
            image::RgbImage::from_raw(self.width as u32, self.height as u32, self.rgb.clone())
                .expect("overlay buffer sized to dimensions");
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| PipelineError::Io(std::io::Error::other(e.to_string())))
    }

    pub fn rgb_bytes(&self) -> &[u8] {
        &self.rgb
    }
}

/// Render masks, labels and prompt points over the input image.
pub fn emit_overlay(image: &ImageBuf, grounded: &GroundedSegmentation) -> Overlay {
    let mut canvas = Overlay::from_luma(image);
    for record in &grounded.records {
        let color = PALETTE[record.entity_id % PALETTE.len()];
        let mask = &record.mask;
        let mut bbox: Option<(usize, usize)> = None;
        for r in 0..mask.height() {
            for c in 0..mask.width() {
                if mask.get(r, c) {
                    canvas.blend(c, r, color, 0.45);
                    if bbox.is_none() {
                        bbox = Some((r, c));
                    }
                }
            }
        }
        for p in &record.prompt.positives {
            canvas.disk(p.x, p.y, 3.0, color, true);
        }
        for p in &record.prompt.negatives {
            debug_assert_eq!(p.polarity, Polarity::Negative);
            canvas.disk(p.x, p.y, 3.0, color, false);
        }
        let (label_r, label_c) = bbox.unwrap_or((0, 0));
        let ty = label_r
            .saturating_sub(9)
            .min(image.height().saturating_sub(8));
        canvas.text(
            label_c.min(image.width().saturating_sub(1)),
            ty,
            &record.label,
            color,
        );
    }
    canvas
}
