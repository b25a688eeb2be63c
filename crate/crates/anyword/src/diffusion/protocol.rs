//! Length-prefixed request/response protocol for out-of-process backends.
//!
//! Every message is `[u32 LE length][payload]`; payloads start with a one-
//! byte tag. Tensors are little-endian 32-bit floats behind a shape header
//! (`[u8 ndim][u32 LE dim]* [f32 LE]*`). The same framing carries both the
//! denoiser exchange (latent, step, embedding set) -> (noise, attention)
//! and the segmentor exchange (image, prompt points) -> run-length mask.

use super::DiffusionError;
use crate::embedopt::EmbeddingSet;
use crate::grid::{Grid, ImageBuf, Latent};
use std::io::{Read, Write};

pub const TAG_DENOISE_REQUEST: u8 = 1;
pub const TAG_DENOISE_RESPONSE: u8 = 2;
pub const TAG_SEGMENT_REQUEST: u8 = 3;
pub const TAG_SEGMENT_RESPONSE: u8 = 4;
pub const TAG_ERROR: u8 = 255;

/// Hard cap on accepted frames; a corrupt length prefix must not trigger an
/// unbounded allocation.
const MAX_FRAME: u32 = 256 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    DenoiseRequest {
        latent: Latent,
        step: u32,
        embeddings: EmbeddingSet,
    },
    DenoiseResponse {
        noise: Latent,
        attention: Vec<Grid>,
    },
    SegmentRequest {
        image: ImageBuf,
        /// (x, y, positive) triples in image-frame coordinates.
        points: Vec<(f32, f32, bool)>,
    },
    SegmentResponse {
        height: u32,
        width: u32,
        /// Column-major alternating run lengths, background first.
        runs: Vec<u32>,
    },
    Error(String),
}

// --- primitive writers -----------------------------------------------------

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DiffusionError> {
        if self.pos + n > self.buf.len() {
            return Err(DiffusionError::Protocol(format!(
                "truncated frame: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DiffusionError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, DiffusionError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32(&mut self) -> Result<f32, DiffusionError> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn done(&self) -> Result<(), DiffusionError> {
        if self.pos != self.buf.len() {
            return Err(DiffusionError::Protocol(format!(
                "{} trailing bytes in frame",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, dims: &[usize], values: impl Iterator<Item = f64>) {
    out.push(dims.len() as u8);
    for &d in dims {
        put_u32(out, d as u32);
    }
    for v in values {
        put_f32(out, v as f32);
    }
}

fn read_tensor(c: &mut Cursor) -> Result<(Vec<usize>, Vec<f64>), DiffusionError> {
    let ndim = c.u8()? as usize;
    if ndim == 0 || ndim > 4 {
        return Err(DiffusionError::Protocol(format!("bad tensor rank {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    let mut total = 1usize;
    for _ in 0..ndim {
        let d = c.u32()? as usize;
        total = total.saturating_mul(d);
        dims.push(d);
    }
    if total > MAX_FRAME as usize {
        return Err(DiffusionError::Protocol("tensor too large".into()));
    }
    let mut values = Vec::with_capacity(total);
    for _ in 0..total {
        values.push(f64::from(c.f32()?));
    }
    Ok((dims, values))
}

// --- message codec ----------------------------------------------------------

impl Message {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::DenoiseRequest {
                latent,
                step,
                embeddings,
            } => {
                out.push(TAG_DENOISE_REQUEST);
                let (c, h, w) = latent.shape();
                put_tensor(&mut out, &[c, h, w], latent.values().iter().copied());
                put_u32(&mut out, *step);
                put_u32(&mut out, embeddings.token_count() as u32);
                put_u32(&mut out, embeddings.width() as u32);
                for i in 0..embeddings.token_count() {
                    for &v in embeddings.vector(i) {
                        put_f32(&mut out, v as f32);
                    }
                }
                for i in 0..embeddings.token_count() {
                    out.push(u8::from(embeddings.is_trainable(i)));
                }
            }
            Message::DenoiseResponse { noise, attention } => {
                out.push(TAG_DENOISE_RESPONSE);
                let (c, h, w) = noise.shape();
                put_tensor(&mut out, &[c, h, w], noise.values().iter().copied());
                put_u32(&mut out, attention.len() as u32);
                for g in attention {
                    put_tensor(
                        &mut out,
                        &[g.height(), g.width()],
                        g.values().iter().copied(),
                    );
                }
            }
            Message::SegmentRequest { image, points } => {
                out.push(TAG_SEGMENT_REQUEST);
                put_tensor(
                    &mut out,
                    &[image.height(), image.width()],
                    image.pixels().iter().copied(),
                );
                put_u32(&mut out, points.len() as u32);
                for &(x, y, positive) in points {
                    put_f32(&mut out, x);
                    put_f32(&mut out, y);
                    out.push(u8::from(positive));
                }
            }
            Message::SegmentResponse {
                height,
                width,
                runs,
            } => {
                out.push(TAG_SEGMENT_RESPONSE);
                put_u32(&mut out, *height);
                put_u32(&mut out, *width);
                put_u32(&mut out, runs.len() as u32);
                for &r in runs {
                    put_u32(&mut out, r);
                }
            }
            Message::Error(msg) => {
                out.push(TAG_ERROR);
                out.extend_from_slice(msg.as_bytes());
            }
        }
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self, DiffusionError> {
        let mut c = Cursor::new(payload);
        let tag = c.u8()?;
        let msg = match tag {
            TAG_DENOISE_REQUEST => {
                let (dims, values) = read_tensor(&mut c)?;
                if dims.len() != 3 {
                    return Err(DiffusionError::Protocol("latent must be rank 3".into()));
                }
                let latent = Latent::from_values(dims[0], dims[1], dims[2], values);
                let step = c.u32()?;
                let tokens = c.u32()? as usize;
                let width = c.u32()? as usize;
                let mut vectors = Vec::with_capacity(tokens);
                for _ in 0..tokens {
                    let mut v = Vec::with_capacity(width);
                    for _ in 0..width {
                        v.push(f64::from(c.f32()?));
                    }
                    vectors.push(v);
                }
                let mut trainable = Vec::with_capacity(tokens);
                for _ in 0..tokens {
                    trainable.push(c.u8()? != 0);
                }
                Message::DenoiseRequest {
                    latent,
                    step,
                    embeddings: EmbeddingSet::new(width, vectors, trainable),
                }
            }
            TAG_DENOISE_RESPONSE => {
                let (dims, values) = read_tensor(&mut c)?;
                if dims.len() != 3 {
                    return Err(DiffusionError::Protocol("noise must be rank 3".into()));
                }
                let noise = Latent::from_values(dims[0], dims[1], dims[2], values);
                let count = c.u32()? as usize;
                let mut attention = Vec::with_capacity(count);
                for _ in 0..count {
                    let (gd, gv) = read_tensor(&mut c)?;
                    if gd.len() != 2 {
                        return Err(DiffusionError::Protocol("attention must be rank 2".into()));
                    }
                    let mut g = Grid::zeros(gd[0], gd[1]);
                    g.values_mut().copy_from_slice(&gv);
                    attention.push(g);
                }
                Message::DenoiseResponse { noise, attention }
            }
            TAG_SEGMENT_REQUEST => {
                let (dims, values) = read_tensor(&mut c)?;
                if dims.len() != 2 {
                    return Err(DiffusionError::Protocol("image must be rank 2".into()));
                }
                let image = ImageBuf::from_pixels(dims[1], dims[0], values);
                let count = c.u32()? as usize;
                let mut points = Vec::with_capacity(count);
                for _ in 0..count {
                    let x = c.f32()?;
                    let y = c.f32()?;
                    let positive = c.u8()? != 0;
                    points.push((x, y, positive));
                }
                Message::SegmentRequest { image, points }
            }
            TAG_SEGMENT_RESPONSE => {
                let height = c.u32()?;
                let width = c.u32()?;
                let count = c.u32()? as usize;
                let mut runs = Vec::with_capacity(count);
                for _ in 0..count {
                    runs.push(c.u32()?);
                }
                Message::SegmentResponse {
                    height,
                    width,
                    runs,
                }
            }
            TAG_ERROR => {
                let rest = c.take(payload.len() - 1)?;
                Message::Error(String::from_utf8_lossy(rest).into_owned())
            }
            other => {
                return Err(DiffusionError::Protocol(format!("unknown tag {other}")));
            }
        };
        c.done()?;
        Ok(msg)
    }
}

/// Write one framed message.
pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> Result<(), DiffusionError> {
    let payload = msg.encode();
    let len = u32::try_from(payload.len())
        .map_err(|_| DiffusionError::Protocol("frame too large".into()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Read one framed message.
pub fn read_message<R: Read>(r: &mut R) -> Result<Message, DiffusionError> {
    let mut len_buf = [0u8; 4];
    r.read_exact(&mut len_buf)?;
    let len = u32::from_le_bytes(len_buf);
    if len > MAX_FRAME {
        return Err(DiffusionError::Protocol(format!(
            "frame of {len} bytes refused"
        )));
    }
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload)?;
    Message::decode(&payload)
}

/// Denoiser adapter speaking the protocol over any duplex byte stream.
/// The latent encode stays process-local (area pooling); only noise
/// prediction crosses the wire.
pub struct RemoteDenoiser<S: Read + Write + Send> {
    stream: std::sync::Mutex<S>,
    latent_shape: (usize, usize, usize),
    attention_resolution: (usize, usize),
    max_in_flight: Option<usize>,
}

impl<S: Read + Write + Send> RemoteDenoiser<S> {
    pub fn new(
        stream: S,
        latent_shape: (usize, usize, usize),
        attention_resolution: (usize, usize),
    ) -> Self {
        Self {
            stream: std::sync::Mutex::new(stream),
            latent_shape,
            attention_resolution,
            max_in_flight: Some(1),
        }
    }
}

impl<S: Read + Write + Send> super::DenoiserBackend for RemoteDenoiser<S> {
    fn latent_shape(&self) -> (usize, usize, usize) {
        self.latent_shape
    }

    fn attention_resolution(&self) -> (usize, usize) {
        self.attention_resolution
    }

    fn max_concurrent_requests(&self) -> Option<usize> {
        self.max_in_flight
    }

    fn encode(&self, image: &ImageBuf) -> Result<Latent, DiffusionError> {
        let (c, h, w) = self.latent_shape;
        let backend = super::ToyDenoiser::seeded((c, h, w), self.attention_resolution, 1, 1, 0);
        backend.encode(image)
    }

    fn predict(
        &self,
        z: &Latent,
        t: usize,
        embeddings: &EmbeddingSet,
    ) -> Result<super::Prediction, DiffusionError> {
        let mut stream = self.stream.lock().expect("remote stream poisoned");
        write_message(
            &mut *stream,
            &Message::DenoiseRequest {
                latent: z.clone(),
                step: t as u32,
                embeddings: embeddings.clone(),
            },
        )?;
        match read_message(&mut *stream)? {
            Message::DenoiseResponse { noise, attention } => {
                Ok(super::Prediction { noise, attention })
            }
            Message::Error(msg) => Err(DiffusionError::BackendFailure(msg)),
            other => Err(DiffusionError::Protocol(format!(
                "unexpected reply {other:?}"
            ))),
        }
    }
}

/// Serve a single denoise request against a local backend; the loopback
/// used by tests and by `anyword`'s companion worker processes.
pub fn handle_denoise_request<B: super::DenoiserBackend + ?Sized>(
    payload: &[u8],
    backend: &B,
) -> Vec<u8> {
    let reply = match Message::decode(payload) {
        Ok(Message::DenoiseRequest {
            latent,
            step,
            embeddings,
        }) => match backend.predict(&latent, step as usize, &embeddings) {
            Ok(pred) => Message::DenoiseResponse {
                noise: pred.noise,
                attention: pred.attention,
            },
            Err(e) => Message::Error(e.to_string()),
        },
        Ok(other) => Message::Error(format!("unexpected request {other:?}")),
        Err(e) => Message::Error(e.to_string()),
    };
    reply.encode()
}
