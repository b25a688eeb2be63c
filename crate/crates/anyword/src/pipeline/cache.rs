//! Content-addressed attention cache. The embedding optimization dominates
//! runtime, so (optimized embeddings, raw averaged maps) are persisted per
//! (image, text, initial-embedding fingerprint, schedule, optimizer) key;
//! a hit replays with zero denoiser calls.

use super::PipelineError;
use crate::diffusion::NoiseSchedule;
use crate::embedopt::{EmbeddingSet, OptimizerConfig};
use crate::grid::{Grid, ImageBuf};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"AWAC";
const VERSION: u32 = 1;

/// Cached outcome of the denoiser-heavy stages.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedAttention {
    pub embeddings: EmbeddingSet,
    /// Raw (un-normalized) averaged grids keyed by token index.
    pub maps: Vec<(usize, Grid)>,
}

/// Directory-backed cache; the key is a hex digest over every input that
/// influences the maps.
pub struct AttentionCache {
    dir: PathBuf,
}

impl AttentionCache {
    pub fn open(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn key(
        image: &ImageBuf,
        text: &str,
        init_embeddings: &EmbeddingSet,
        schedule: &NoiseSchedule,
        optimizer: &OptimizerConfig,
        effective_steps: usize,
        use_pl: bool,
    ) -> String {
        let mut hasher = Sha256::new();
        hasher.update(image.content_bytes());
        hasher.update(text.as_bytes());
        hasher.update(init_embeddings.fingerprint());
        hasher.update(schedule.content_bytes());
        hasher.update(optimizer.learning_rate.to_le_bytes());
        hasher.update((effective_steps as u64).to_le_bytes());
        hasher.update((optimizer.batch_size as u64).to_le_bytes());
        hasher.update(optimizer.seed.to_le_bytes());
        hasher.update([u8::from(use_pl)]);
        hex(&hasher.finalize())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.attn"))
    }

    pub fn load(&self, key: &str) -> Option<CachedAttention> {
        let path = self.path_for(key);
        let mut f = std::fs::File::open(path).ok()?;
        read_entry(&mut f).ok()
    }

    pub fn store(&self, key: &str, entry: &CachedAttention) -> Result<(), PipelineError> {
        let path = self.path_for(key);
        let tmp = path.with_extension("tmp-write");
        {
            let mut f = std::fs::File::create(&tmp)?;
            write_entry(&mut f, entry)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_entry<W: Write>(w: &mut W, entry: &CachedAttention) -> Result<(), PipelineError> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let e = &entry.embeddings;
    w.write_all(&(e.token_count() as u32).to_le_bytes())?;
    w.write_all(&(e.width() as u32).to_le_bytes())?;
    for i in 0..e.token_count() {
        w.write_all(&[u8::from(e.is_trainable(i))])?;
        for v in e.vector(i) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.write_all(&(entry.maps.len() as u32).to_le_bytes())?;
    for (token, grid) in &entry.maps {
        w.write_all(&(*token as u32).to_le_bytes())?;
        w.write_all(&(grid.height() as u32).to_le_bytes())?;
        w.write_all(&(grid.width() as u32).to_le_bytes())?;
        for v in grid.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_entry<R: Read>(r: &mut R) -> Result<CachedAttention, PipelineError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(PipelineError::Cache("bad cache magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    if u32::from_le_bytes(u32buf) != VERSION {
        return Err(PipelineError::Cache("unsupported cache version".into()));
    }
    r.read_exact(&mut u32buf)?;
    let tokens = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let width = u32::from_le_bytes(u32buf) as usize;

    let mut f64buf = [0u8; 8];
    let mut vectors = Vec::with_capacity(tokens);
    let mut trainable = Vec::with_capacity(tokens);
    for _ in 0..tokens {
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        trainable.push(flag[0] != 0);
        let mut v = Vec::with_capacity(width);
        for _ in 0..width {
            r.read_exact(&mut f64buf)?;
            v.push(f64::from_le_bytes(f64buf));
        }
        vectors.push(v);
    }
    let embeddings = EmbeddingSet::new(width, vectors, trainable);

    r.read_exact(&mut u32buf)?;
    let count = u32::from_le_bytes(u32buf) as usize;
    let mut maps = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u32buf)?;
        let token = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let h = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf)?;
        let w = u32::from_le_bytes(u32buf) as usize;
        let mut grid = Grid::zeros(h, w);
        for idx in 0..h * w {
            r.read_exact(&mut f64buf)?;
            grid.values_mut()[idx] = f64::from_le_bytes(f64buf);
        }
        maps.push((token, grid));
    }
    Ok(CachedAttention { embeddings, maps })
}
