//! Toeplitz-hashing strong extractor.
//!
//! The `m × n` matrix is `T[i,j] = seed[i + n − 1 − j]` for a seed of
//! `n + m − 1` bits. Bits are packed least-significant-first into `u64`
//! words (or bytes on the wire). Output bit `i` equals the parity of
//! `seed[i .. i+n] AND reverse(input)`, which the fast path evaluates over
//! 128-bit column slices against precomputed shifted copies of the seed.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractorError {
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(&'static str),
    #[error("matrix dimensions must be positive")]
    EmptyMatrix,
    #[error("seed must be {expected} bytes, got {got}")]
    SeedLength { expected: usize, got: usize },
    #[error("seed padding bits beyond bit {0} are not zero")]
    SeedPadding(usize),
}

/// Input bits per block in the reference configuration.
pub const DEFAULT_N_IN: usize = 1280;
/// Output bits per block in the reference configuration.
pub const DEFAULT_M_OUT: usize = 640;
pub const SAMPLE_BITS: usize = 16;

/// Bit `i` of an LSB-first word vector.
#[inline]
pub fn get_bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn set_bit(words: &mut [u64], i: usize, v: bool) {
    let (w, b) = (i / 64, i % 64);
    words[w] = (words[w] & !(1 << b)) | ((v as u64) << b);
}

pub fn pack_bits(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        set_bit(&mut words, i, b);
    }
    words
}

pub fn unpack_bits(words: &[u64], len: usize) -> Vec<bool> {
    (0..len).map(|i| get_bit(words, i)).collect()
}

/// Packs 16-bit samples little-endian, LSB-first: bit `16k + b` is bit `b`
/// of sample `k`.
pub fn pack_samples(samples: &[i16]) -> Vec<u64> {
    let mut words = vec![0u64; samples.len().div_ceil(4)];
    for (k, &s) in samples.iter().enumerate() {
        words[k / 4] |= (s as u16 as u64) << (16 * (k % 4));
    }
    words
}

/// LSB-first bytes of the first `len` bits of `words`.
pub fn words_to_bytes(words: &[u64], len: usize) -> Vec<u8> {
    let mut out: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).take(len.div_ceil(8)).collect();
    if !len.is_multiple_of(8) {
        if let Some(last) = out.last_mut() {
            *last &= (1u8 << (len % 8)) - 1;
        }
    }
    out
}

/// Seed of `len` bits from exactly `ceil(len/8)` LSB-first bytes whose pad
/// bits are zero.
pub fn seed_from_bytes(bytes: &[u8], len: usize) -> Result<Vec<u64>, ExtractorError> {
    let expected = len.div_ceil(8);
    if bytes.len() != expected {
        return Err(ExtractorError::SeedLength { expected, got: bytes.len() });
    }
    if !len.is_multiple_of(8) && bytes[expected - 1] >> (len % 8) != 0 {
        return Err(ExtractorError::SeedPadding(len));
    }
    let mut words = vec![0u64; len.div_ceil(64)];
    for (i, &b) in bytes.iter().enumerate() {
        words[i / 8] |= (b as u64) << (8 * (i % 8));
    }
    Ok(words)
}

/// A fixed Toeplitz matrix with its precomputed fast-path tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toeplitz {
    n_in: usize,
    m_out: usize,
    seed: Vec<u64>,
    /// `shifted[s][2q..2q + 2]` holds seed bits `128q + s .. 128q + s + 128`
    /// as low and high 64-bit halves.
    shifted: Vec<Vec<u64>>,
    slices: usize,
}

impl Toeplitz {
    /// `seed` holds `n_in + m_out − 1` bits LSB-first; bits beyond that are
    /// ignored.
    pub fn new(n_in: usize, m_out: usize, seed: &[u64]) -> Result<Self, ExtractorError> {
        if n_in == 0 || m_out == 0 {
            return Err(ExtractorError::EmptyMatrix);
        }
        let len = n_in + m_out - 1;
        let words = len.div_ceil(64);
        if seed.len() < words {
            return Err(ExtractorError::LengthMismatch { expected: len, got: seed.len() * 64 });
        }
        let mut seed = seed[..words].to_vec();
        if !len.is_multiple_of(64) {
            seed[words - 1] &= (1u64 << (len % 64)) - 1;
        }

        let slices = n_in.div_ceil(128);
        let copy_len = (m_out - 1) / 128 + slices + 1;
        let word = |k: usize| seed.get(k).copied().unwrap_or(0);
        // 128-bit chunk starting at an arbitrary bit offset.
        let chunk = |bit: usize| -> u128 {
            let (w, b) = (bit / 64, bit % 64);
            let parts = [word(w), word(w + 1), word(w + 2)];
            if b == 0 {
                parts[0] as u128 | (parts[1] as u128) << 64
            } else {
                let lo = parts[0] >> b | parts[1] << (64 - b);
                let hi = parts[1] >> b | parts[2] << (64 - b);
                lo as u128 | (hi as u128) << 64
            }
        };
        let shifted = (0..128)
            .map(|s| {
                (0..copy_len)
                    .flat_map(|q| {
                        let c = chunk(128 * q + s);
                        [c as u64, (c >> 64) as u64]
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n_in, m_out, seed, shifted, slices })
    }

    pub fn from_seed_bits(n_in: usize, m_out: usize, seed: &[bool]) -> Result<Self, ExtractorError> {
        let len = n_in + m_out - 1;
        if seed.len() != len {
            return Err(ExtractorError::LengthMismatch { expected: len, got: seed.len() });
        }
        Self::new(n_in, m_out, &pack_bits(seed))
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn m_out(&self) -> usize {
        self.m_out
    }

    pub fn seed_len(&self) -> usize {
        self.n_in + self.m_out - 1
    }

    pub fn seed_words(&self) -> &[u64] {
        &self.seed
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        get_bit(&self.seed, i + self.n_in - 1 - j)
    }

    /// Materialized matrix, row-major.
    pub fn matrix(&self) -> Vec<Vec<bool>> {
        (0..self.m_out).map(|i| (0..self.n_in).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// Naive `O(n·m)` GF(2) matrix-vector product over unpacked bits.
    pub fn reference(&self, input: &[bool]) -> Result<Vec<bool>, ExtractorError> {
        if input.len() != self.n_in {
            return Err(ExtractorError::LengthMismatch { expected: self.n_in, got: input.len() });
        }
        Ok((0..self.m_out)
            .map(|i| {
                let mut acc = false;
                for (j, &x) in input.iter().enumerate() {
                    acc ^= self.entry(i, j) & x;
                }
                acc
            })
            .collect())
    }

    /// Column-sliced product over packed bits. `input` must hold exactly
    /// `ceil(n_in/64)` words; bits beyond `n_in` are ignored.
    pub fn hash(&self, input: &[u64]) -> Result<Vec<u64>, ExtractorError> {
        let words = self.n_in.div_ceil(64);
        if input.len() != words {
            return Err(ExtractorError::LengthMismatch { expected: self.n_in, got: input.len() * 64 });
        }
        let rev: Vec<u64> = self.reversed_input(input).iter().flat_map(|&w| [w as u64, (w >> 64) as u64]).collect();
        let n = rev.len();
        let mut out = vec![0u64; self.m_out.div_ceil(64)];
        // Rows 2k and 2k + 1 share a 128-bit column offset.
        for i in (0..self.m_out).step_by(2) {
            let q = 2 * (i / 128);
            let row = &self.shifted[i % 128][q..q + n];
            if i + 1 < self.m_out {
                let next = &self.shifted[i % 128 + 1][q..q + n];
                let (a, b) = and_xor_reduce2(row, next, &rev);
                out[i / 64] |= (parity(a) | parity(b) << 1) << (i % 64);
            } else {
                out[i / 64] |= parity(and_xor_reduce2(row, row, &rev).0) << (i % 64);
            }
        }
        Ok(out)
    }

    /// 128-bit slices of `reverse(input)`, zero beyond `n_in`.
    fn reversed_input(&self, input: &[u64]) -> Vec<u128> {
        // Reverse the input zero-padded to 128·slices bits, then shift the
        // padding out.
        let total = 128 * self.slices;
        let slice = |q: usize| {
            let lo = input.get(2 * q).copied().unwrap_or(0);
            let hi = input.get(2 * q + 1).copied().unwrap_or(0);
            lo as u128 | (hi as u128) << 64
        };
        let mut padded: Vec<u128> = (0..self.slices).map(slice).collect();
        if !self.n_in.is_multiple_of(128) {
            padded[self.slices - 1] &= (1u128 << (self.n_in % 128)) - 1;
        }
        let full: Vec<u128> = padded.iter().rev().map(|w| w.reverse_bits()).collect();
        let shift = total - self.n_in;
        if shift == 0 {
            return full;
        }
        (0..self.slices)
            .map(|q| {
                let next = full.get(q + 1).copied().unwrap_or(0);
                full[q] >> shift | next << (128 - shift)
            })
            .collect()
    }
}

#[inline]
fn parity(mut x: u64) -> u64 {
    x ^= x >> 1;
    x ^= x >> 2;
    x = (x & 0x1111_1111_1111_1111).wrapping_mul(0x1111_1111_1111_1111);
    (x >> 60) & 1
}

/// XOR of `a[k] & x[k]` and of `b[k] & x[k]` over equal-length slices,
/// four lanes at a time.
#[inline]
fn and_xor_reduce2(a: &[u64], b: &[u64], x: &[u64]) -> (u64, u64) {
    let (mut la, mut lb) = ([0u64; 4], [0u64; 4]);
    let (a4, b4, x4) = (a.chunks_exact(4), b.chunks_exact(4), x.chunks_exact(4));
    let (mut ta, mut tb) = (0, 0);
    for ((p, q), y) in a4.remainder().iter().zip(b4.remainder()).zip(x4.remainder()) {
        ta ^= p & y;
        tb ^= q & y;
    }
    for ((p, q), y) in a4.zip(b4).zip(x4) {
        for l in 0..4 {
            la[l] ^= p[l] & y[l];
            lb[l] ^= q[l] & y[l];
        }
    }
    (la[0] ^ la[1] ^ la[2] ^ la[3] ^ ta, lb[0] ^ lb[1] ^ lb[2] ^ lb[3] ^ tb)
}

/// Naive extraction; see [`Toeplitz::reference`].
pub fn toeplitz_reference(t: &Toeplitz, input: &[bool]) -> Result<Vec<bool>, ExtractorError> {
    t.reference(input)
}

/// Fast extraction over unpacked bits; see [`Toeplitz::hash`].
pub fn toeplitz_fast(t: &Toeplitz, input: &[bool]) -> Result<Vec<bool>, ExtractorError> {
    if input.len() != t.n_in {
        return Err(ExtractorError::LengthMismatch { expected: t.n_in, got: input.len() });
    }
    Ok(unpack_bits(&t.hash(&pack_bits(input))?, t.m_out))
}

/// Extractor settings for a sample stream: the matrix plus the hashing
/// failure probability. The output length must be a multiple of 128 and
/// the input length a multiple of the 16-bit sample depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorConfig {
    pub toeplitz: Toeplitz,
    pub eps_hash: f64,
}

impl ExtractorConfig {
    pub fn new(toeplitz: Toeplitz, eps_hash: f64) -> Result<Self, ExtractorError> {
        if !toeplitz.m_out.is_multiple_of(128) {
            return Err(ExtractorError::ConfigMismatch("output length must be a multiple of 128 bits"));
        }
        if !toeplitz.n_in.is_multiple_of(SAMPLE_BITS) {
            return Err(ExtractorError::ConfigMismatch("input length must be a multiple of 16 bits"));
        }
        if !(eps_hash > 0.0 && eps_hash <= 1.0) {
            return Err(ExtractorError::ConfigMismatch("eps_hash must lie in (0, 1]"));
        }
        Ok(Self { toeplitz, eps_hash })
    }

    /// Configuration from a raw seed file's bytes.
    pub fn from_seed_bytes(n_in: usize, m_out: usize, bytes: &[u8], eps_hash: f64) -> Result<Self, ExtractorError> {
        if n_in == 0 || m_out == 0 {
            return Err(ExtractorError::EmptyMatrix);
        }
        let seed = seed_from_bytes(bytes, n_in + m_out - 1)?;
        Self::new(Toeplitz::new(n_in, m_out, &seed)?, eps_hash)
    }

    pub fn samples_per_block(&self) -> usize {
        self.toeplitz.n_in / SAMPLE_BITS
    }

    /// Hashes one block of exactly `samples_per_block` samples.
    pub fn extract_block(&self, block: &[i16]) -> Result<Vec<u64>, ExtractorError> {
        if block.len() != self.samples_per_block() {
            return Err(ExtractorError::LengthMismatch {
                expected: self.toeplitz.n_in,
                got: block.len() * SAMPLE_BITS,
            });
        }
        self.toeplitz.hash(&pack_samples(block))
    }
}

/// Hashes every complete block of the stream and concatenates the outputs
/// as LSB-first bytes. An incomplete final block is dropped.
pub fn stream_extract(cfg: &ExtractorConfig, samples: &[i16]) -> Result<Vec<u8>, ExtractorError> {
    let per = cfg.samples_per_block();
    let bytes_per = cfg.toeplitz.m_out / 8;
    let mut out = Vec::with_capacity(samples.len() / per * bytes_per);
    for block in samples.chunks_exact(per) {
        out.extend(words_to_bytes(&cfg.extract_block(block)?, cfg.toeplitz.m_out));
    }
    Ok(out)
}

/// Accumulated hashing failure probability `N′·ε_hash` after `n_runs` uses
/// of one seed.
pub fn seed_reuse_budget(n_runs: u64, eps_hash: f64) -> f64 {
    n_runs as f64 * eps_hash
}
