//! Out-of-process segmentor adapter: same byte framing as the denoiser
//! protocol, with the mask returned run-length encoded.

use super::{PromptableSegmentor, SegmentError, SegmentorInfo};
use crate::diffusion::protocol::{read_message, write_message, Message};
use crate::grid::ImageBuf;
use crate::promptmine::{BinaryMask, MaskFrame, MaskPrompt, Polarity};
use crate::rle;
use std::io::{Read, Write};

pub struct RemoteSegmentor<S: Read + Write + Send> {
    stream: std::sync::Mutex<S>,
    name: String,
    max_in_flight: Option<usize>,
}

impl<S: Read + Write + Send> RemoteSegmentor<S> {
    pub fn new(stream: S, name: impl Into<String>) -> Self {
        Self {
            stream: std::sync::Mutex::new(stream),
            name: name.into(),
            max_in_flight: Some(1),
        }
    }
}

impl<S: Read + Write + Send> PromptableSegmentor for RemoteSegmentor<S> {
    fn info(&self) -> SegmentorInfo {
        SegmentorInfo {
            name: self.name.clone(),
            input_size: None,
        }
    }

    fn max_concurrent_requests(&self) -> Option<usize> {
        self.max_in_flight
    }

    fn segment(&self, image: &ImageBuf, prompt: &MaskPrompt) -> Result<BinaryMask, SegmentError> {
        let points: Vec<(f32, f32, bool)> = prompt
            .positives
            .iter()
            .map(|p| (p.x as f32, p.y as f32, true))
            .chain(
                prompt
                    .negatives
                    .iter()
                    .map(|p| (p.x as f32, p.y as f32, false)),
            )
            .collect();

        let mut stream = self.stream.lock().expect("remote stream poisoned");
        write_message(
            &mut *stream,
            &Message::SegmentRequest {
                image: image.clone(),
                points,
            },
        )
        .map_err(|e| SegmentError::BackendUnavailable(e.to_string()))?;

        match read_message(&mut *stream)
            .map_err(|e| SegmentError::BackendUnavailable(e.to_string()))?
        {
            Message::SegmentResponse {
                height,
                width,
                runs,
            } => {
                let counts: Vec<usize> = runs.iter().map(|&r| r as usize).collect();
                let cells = rle::decode(&counts, height as usize, width as usize)
                    .map_err(|e| SegmentError::BackendUnavailable(e.to_string()))?;
                // Wire masks are column-major; rebuild row-major.
                let (h, w) = (height as usize, width as usize);
                let mut mask = BinaryMask::new(h, w, MaskFrame::Image);
                for (idx, &v) in cells.iter().enumerate() {
                    let c = idx / h;
                    let r = idx % h;
                    mask.set(r, c, v);
                }
                Ok(mask)
            }
            Message::Error(msg) => Err(SegmentError::BackendUnavailable(msg)),
            other => Err(SegmentError::BackendUnavailable(format!(
                "unexpected reply {other:?}"
            ))),
        }
    }
}

/// Serve a single segment request against a local backend; used by tests
/// and companion worker processes.
pub fn handle_segment_request<B: PromptableSegmentor + ?Sized>(
    payload: &[u8],
    backend: &B,
) -> Vec<u8> {
    let reply = match Message::decode(payload) {
        Ok(Message::SegmentRequest { image, points }) => {
            let prompt = MaskPrompt {
                entity_id: 0,
                label: String::new(),
                positives: points
                    .iter()
                    .filter(|(_, _, pos)| *pos)
                    .map(|&(x, y, _)| crate::promptmine::Point {
                        x: f64::from(x),
                        y: f64::from(y),
                        polarity: Polarity::Positive,
                        source_token: None,
                    })
                    .collect(),
                negatives: points
                    .iter()
                    .filter(|(_, _, pos)| !*pos)
                    .map(|&(x, y, _)| crate::promptmine::Point {
                        x: f64::from(x),
                        y: f64::from(y),
                        polarity: Polarity::Negative,
                        source_token: None,
                    })
                    .collect(),
            };
            match super::segment(&image, &prompt, backend) {
                Ok(mask) => {
                    // Column-major cells for the wire RLE.
                    let (h, w) = (mask.height(), mask.width());
                    let mut cells = Vec::with_capacity(h * w);
                    for c in 0..w {
                        for r in 0..h {
                            cells.push(mask.get(r, c));
                        }
                    }
                    let runs = rle::encode(&cells).iter().map(|&r| r as u32).collect();
                    Message::SegmentResponse {
                        height: h as u32,
                        width: w as u32,
                        runs,
                    }
                }
                Err(e) => Message::Error(e.to_string()),
            }
        }
        Ok(other) => Message::Error(format!("unexpected request {other:?}")),
        Err(e) => Message::Error(e.to_string()),
    };
    reply.encode()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::promptmine::Point;
    use crate::segmentor::MockSegmentor;

    #[test]
    fn loopback_segment_roundtrip_preserves_mask() {
        let mut img = ImageBuf::new(12, 10);
        for y in 2..6 {
            for x in 3..8 {
                img.set(x, y, 0.7);
            }
        }
        let prompt = MaskPrompt {
            entity_id: 0,
            label: "blob".into(),
            positives: vec![Point {
                x: 5.0,
                y: 4.0,
                polarity: Polarity::Positive,
                source_token: Some(0),
            }],
            negatives: vec![],
        };
        let backend = MockSegmentor::default();
        let local = backend.segment(&img, &prompt).unwrap();

        let request = Message::SegmentRequest {
            image: img,
            points: vec![(5.0, 4.0, true)],
        };
        let reply_bytes = handle_segment_request(&request.encode(), &backend);
        match Message::decode(&reply_bytes).unwrap() {
            Message::SegmentResponse {
                height,
                width,
                runs,
            } => {
                let counts: Vec<usize> = runs.iter().map(|&r| r as usize).collect();
                let cells = rle::decode(&counts, height as usize, width as usize).unwrap();
                let mut col_major = Vec::new();
                for c in 0..local.width() {
                    for r in 0..local.height() {
                        col_major.push(local.get(r, c));
                    }
                }
                assert_eq!(cells, col_major);
            }
            other => panic!("unexpected reply {other:?}"),
        }
    }

    #[test]
    fn invalid_prompts_come_back_as_errors() {
        let request = Message::SegmentRequest {
            image: ImageBuf::new(4, 4),
            points: vec![],
        };
        let reply = handle_segment_request(&request.encode(), &MockSegmentor::default());
        assert!(matches!(
            Message::decode(&reply).unwrap(),
            Message::Error(_)
        ));
    }
}
