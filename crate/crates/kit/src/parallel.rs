use qrng_core::extractor::{words_to_bytes, ExtractorConfig, ExtractorError};
use qrng_core::Joiner;
use rayon::prelude::*;

/// Runs both halves on the rayon pool.
#[derive(Debug, Clone, Copy, Default)]
pub struct RayonJoiner;

impl Joiner for RayonJoiner {
    fn join<A, B, FA, FB>(&self, a: FA, b: FB) -> (A, B)
    where
        A: Send,
        B: Send,
        FA: FnOnce() -> A + Send,
        FB: FnOnce() -> B + Send,
    {
        rayon::join(a, b)
    }
}

/// Same output as [`qrng_core::extractor::stream_extract`], with blocks
/// hashed on the rayon pool and emitted in input order.
pub fn par_stream_extract(cfg: &ExtractorConfig, samples: &[i16]) -> Result<Vec<u8>, ExtractorError> {
    let per = cfg.samples_per_block();
    let m = cfg.toeplitz.m_out();
    let blocks: Vec<Vec<u8>> = samples
        .par_chunks_exact(per)
        .map(|b| cfg.extract_block(b).map(|w| words_to_bytes(&w, m)))
        .collect::<Result<_, _>>()?;
    Ok(blocks.concat())
}
