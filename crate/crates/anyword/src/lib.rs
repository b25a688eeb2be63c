pub mod diffusion;
pub mod embedopt;
pub mod evalharness;
pub mod grid;
pub mod pipeline;
pub mod promptmine;
pub mod rle;
pub mod segmentor;
pub mod textgraph;
