//! Dataset ingestion: the column-major RLE mask codec, polygon
//! rasterization, and three JSON readers (COCO-style annotations, refs-style
//! referring expressions, grounded captions keyed by phrase spans), all
//! normalized into [`DatasetRecord`].

use super::PipelineError;
use crate::grid::ImageBuf;
use crate::promptmine::{BinaryMask, MaskFrame};
use crate::rle;
use serde_json::Value;
use std::path::{Path, PathBuf};

/// Image source of a record: a file on disk or an inline buffer (synthetic
/// scenes).
#[derive(Debug, Clone, PartialEq)]
pub enum ImageRef {
    Path(PathBuf),
    Inline(ImageBuf),
}

impl ImageRef {
    pub fn load(&self) -> Result<ImageBuf, PipelineError> {
        match self {
            ImageRef::Path(p) => ImageBuf::load(p).map_err(PipelineError::DatasetFormat),
            ImageRef::Inline(img) => Ok(img.clone()),
        }
    }
}

/// One evaluation unit: an image, its referring expressions, and the
/// ground-truth (phrase, mask) pairs at image resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub image: ImageRef,
    pub expressions: Vec<String>,
    pub ground_truth: Vec<(String, BinaryMask)>,
    pub split: String,
}

/// Expand column-major alternating run lengths (background first) into an
/// image-frame mask.
pub fn decode_rle(
    counts: &[usize],
    height: usize,
    width: usize,
) -> Result<BinaryMask, PipelineError> {
    let cells = rle::decode(counts, height, width)
        .map_err(|e| PipelineError::DatasetFormat(e.to_string()))?;
    let mut mask = BinaryMask::new(height, width, MaskFrame::Image);
    for (idx, &v) in cells.iter().enumerate() {
        let c = idx / height;
        let r = idx % height;
        mask.set(r, c, v);
    }
    Ok(mask)
}

/// Inverse of [`decode_rle`].
pub fn encode_rle(mask: &BinaryMask) -> Vec<usize> {
    let mut cells = Vec::with_capacity(mask.height() * mask.width());
    for c in 0..mask.width() {
        for r in 0..mask.height() {
            cells.push(mask.get(r, c));
        }
    }
    rle::encode(&cells)
}

/// Even-odd scanline fill of a polygon given as [x0, y0, x1, y1, ...] in
/// pixel coordinates.
pub fn rasterize_polygon(points: &[f64], height: usize, width: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(height, width, MaskFrame::Image);
    let n = points.len() / 2;
    if n < 3 {
        return mask;
    }
    for row in 0..height {
        let y = row as f64 + 0.5;
        let mut crossings: Vec<f64> = Vec::new();
        for i in 0..n {
            let (x1, y1) = (points[2 * i], points[2 * i + 1]);
            let j = (i + 1) % n;
            let (x2, y2) = (points[2 * j], points[2 * j + 1]);
            if (y1 <= y && y2 > y) || (y2 <= y && y1 > y) {
                let t = (y - y1) / (y2 - y1);
                crossings.push(x1 + t * (x2 - x1));
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).expect("finite crossing"));
        for span in crossings.chunks_exact(2) {
            let x_start = span[0].max(0.0).ceil() as usize;
            let x_end = span[1].min(width as f64);
            let mut x = x_start;
            while (x as f64 + 0.5) <= x_end && x < width {
                if (x as f64 + 0.5) >= span[0] {
                    mask.set(row, x, true);
                }
                x += 1;
            }
        }
    }
    mask
}

fn mask_from_segmentation(
    seg: &Value,
    height: usize,
    width: usize,
) -> Result<BinaryMask, PipelineError> {
    if let Some(obj) = seg.as_object() {
        let counts = obj
            .get("counts")
            .and_then(Value::as_array)
            .ok_or_else(|| PipelineError::DatasetFormat("rle segmentation lacks counts".into()))?;
        let counts: Vec<usize> = counts
            .iter()
            .map(|v| {
                v.as_u64()
                    .map(|c| c as usize)
                    .ok_or_else(|| PipelineError::DatasetFormat("non-integer run length".into()))
            })
            .collect::<Result<_, _>>()?;
        let (h, w) = match obj.get("size").and_then(Value::as_array) {
            Some(size) if size.len() == 2 => (
                size[0].as_u64().unwrap_or(height as u64) as usize,
                size[1].as_u64().unwrap_or(width as u64) as usize,
            ),
            _ => (height, width),
        };
        return decode_rle(&counts, h, w);
    }
    if let Some(polys) = seg.as_array() {
        // A list of polygons, OR-combined.
        let mut mask = BinaryMask::new(height, width, MaskFrame::Image);
        for poly in polys {
            let pts: Vec<f64> = poly
                .as_array()
                .ok_or_else(|| PipelineError::DatasetFormat("polygon must be an array".into()))?
                .iter()
                .map(|v| v.as_f64().unwrap_or(0.0))
                .collect();
            let part = rasterize_polygon(&pts, height, width);
            for r in 0..height {
                for c in 0..width {
                    if part.get(r, c) {
                        mask.set(r, c, true);
                    }
                }
            }
        }
        return Ok(mask);
    }
    Err(PipelineError::DatasetFormat(
        "segmentation must be an RLE object or polygon list".into(),
    ))
}

fn str_field(v: &Value, key: &str) -> Option<String> {
    v.get(key).and_then(Value::as_str).map(str::to_string)
}

fn usize_field(v: &Value, key: &str) -> Option<usize> {
    v.get(key).and_then(Value::as_u64).map(|x| x as usize)
}

/// Read any of the three supported dataset shapes, sniffing by top-level
/// keys: `images`+`annotations` (COCO-style), `refs` (referring
/// expressions), `items` (grounded captions).
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::DatasetFormat(format!("{path:?}: {e}")))?;
    let root: Value = serde_json::from_str(&text)
        .map_err(|e| PipelineError::DatasetFormat(format!("{path:?}: {e}")))?;
    let base = path.parent().unwrap_or(Path::new("."));

    if root.get("images").is_some() && root.get("annotations").is_some() {
        read_coco(&root, base)
    } else if root.get("refs").is_some() {
        read_refs(&root, base)
    } else if root.get("items").is_some() {
        read_grounded(&root, base)
    } else {
        Err(PipelineError::DatasetFormat(
            "unrecognized dataset shape: expected images+annotations, refs, or items".into(),
        ))
    }
}

fn read_coco(root: &Value, base: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    let images = root["images"]
        .as_array()
        .ok_or_else(|| PipelineError::DatasetFormat("images must be an array".into()))?;
    let annotations = root["annotations"]
        .as_array()
        .ok_or_else(|| PipelineError::DatasetFormat("annotations must be an array".into()))?;
    let split = str_field(root, "split").unwrap_or_else(|| "val".into());

    let mut records = Vec::with_capacity(images.len());
    for img in images {
        let id = img["id"]
            .as_u64()
            .ok_or_else(|| PipelineError::DatasetFormat("image lacks id".into()))?;
        let file = str_field(img, "file_name")
            .ok_or_else(|| PipelineError::DatasetFormat("image lacks file_name".into()))?;
        let width = usize_field(img, "width")
            .ok_or_else(|| PipelineError::DatasetFormat("image lacks width".into()))?;
        let height = usize_field(img, "height")
            .ok_or_else(|| PipelineError::DatasetFormat("image lacks height".into()))?;

        let mut ground_truth = Vec::new();
        for ann in annotations {
            if ann["image_id"].as_u64() != Some(id) {
                continue;
            }
            let phrase = str_field(ann, "phrase")
                .or_else(|| str_field(ann, "category"))
                .unwrap_or_default();
            let mask = mask_from_segmentation(&ann["segmentation"], height, width)?;
            ground_truth.push((phrase, mask));
        }
        let expressions = match img.get("caption").and_then(Value::as_str) {
            Some(c) => vec![c.to_string()],
            None => {
                let joined = ground_truth
                    .iter()
                    .map(|(p, _)| p.as_str())
                    .collect::<Vec<_>>()
                    .join(" and ");
                vec![joined]
            }
        };
        records.push(DatasetRecord {
            id: id.to_string(),
            image: ImageRef::Path(base.join(file)),
            expressions,
            ground_truth,
            split: split.clone(),
        });
    }
    Ok(records)
}

fn read_refs(root: &Value, base: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    let refs = root["refs"]
        .as_array()
        .ok_or_else(|| PipelineError::DatasetFormat("refs must be an array".into()))?;
    let split = str_field(root, "split").unwrap_or_else(|| "val".into());

    let mut records = Vec::with_capacity(refs.len());
    for (i, r) in refs.iter().enumerate() {
        let image = str_field(r, "image")
            .ok_or_else(|| PipelineError::DatasetFormat("ref lacks image".into()))?;
        let width = usize_field(r, "width")
            .ok_or_else(|| PipelineError::DatasetFormat("ref lacks width".into()))?;
        let height = usize_field(r, "height")
            .ok_or_else(|| PipelineError::DatasetFormat("ref lacks height".into()))?;
        let sentences: Vec<String> = r["sentences"]
            .as_array()
            .map(|a| {
                a.iter()
                    .filter_map(Value::as_str)
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default();
        if sentences.is_empty() {
            return Err(PipelineError::DatasetFormat("ref lacks sentences".into()));
        }
        // Empty-target references carry no segmentation.
        let ground_truth = match r.get("segmentation") {
            Some(seg) if !seg.is_null() => {
                let phrase = str_field(r, "phrase").unwrap_or_else(|| sentences[0].clone());
                vec![(phrase, mask_from_segmentation(seg, height, width)?)]
            }
            _ => vec![(
                sentences[0].clone(),
                BinaryMask::new(height, width, MaskFrame::Image),
            )],
        };
        records.push(DatasetRecord {
            id: format!("ref{i}"),
            image: ImageRef::Path(base.join(image)),
            expressions: sentences,
            ground_truth,
            split: split.clone(),
        });
    }
    Ok(records)
}

fn read_grounded(root: &Value, base: &Path) -> Result<Vec<DatasetRecord>, PipelineError> {
    let items = root["items"]
        .as_array()
        .ok_or_else(|| PipelineError::DatasetFormat("items must be an array".into()))?;
    let split = str_field(root, "split").unwrap_or_else(|| "val".into());

    let mut records = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let image = str_field(item, "image")
            .ok_or_else(|| PipelineError::DatasetFormat("item lacks image".into()))?;
        let width = usize_field(item, "width")
            .ok_or_else(|| PipelineError::DatasetFormat("item lacks width".into()))?;
        let height = usize_field(item, "height")
            .ok_or_else(|| PipelineError::DatasetFormat("item lacks height".into()))?;
        let caption = str_field(item, "caption")
            .ok_or_else(|| PipelineError::DatasetFormat("item lacks caption".into()))?;

        let mut ground_truth = Vec::new();
        if let Some(phrases) = item["phrases"].as_array() {
            for ph in phrases {
                // Phrase text comes either inline or via a caption span.
                let phrase = match str_field(ph, "phrase") {
                    Some(p) => p,
                    None => {
                        let span = ph["span"].as_array().ok_or_else(|| {
                            PipelineError::DatasetFormat("phrase lacks text and span".into())
                        })?;
                        let s = span[0].as_u64().unwrap_or(0) as usize;
                        let e = span[1].as_u64().unwrap_or(0) as usize;
                        caption.chars().skip(s).take(e.saturating_sub(s)).collect()
                    }
                };
                let mask = mask_from_segmentation(&ph["segmentation"], height, width)?;
                ground_truth.push((phrase, mask));
            }
        }
        records.push(DatasetRecord {
            id: format!("item{i}"),
            image: ImageRef::Path(base.join(image)),
            expressions: vec![caption],
            ground_truth,
            split: split.clone(),
        });
    }
    Ok(records)
}
