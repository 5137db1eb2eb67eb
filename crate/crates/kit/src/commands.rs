//! One function per CLI subcommand. Stages exchange data through files in
//! the output directory:
//!
//! | file | written by |
//! |------|------------|
//! | `samples.i16`, `truth.txt`, `sweep.csv`, `sweep/` | `simulate` |
//! | `transfer_function.csv`, `calibration.txt` | `calibrate` |
//! | `estimates.txt` | `estimate` |
//! | `bound.txt` | `bound` |
//! | `output.bin` | `extract` |
//! | `report.txt` plus all of the above | `pipeline` |
//! | `psd_signal.csv`, `psd_vacuum.csv`, `psd_excess.csv`, `autocorr.csv`, `qq.csv` | `report` |
//! | `figure2.csv` | `figure2` |
//! | `appendix_a.csv` | `appendix-a` |
//!
//! In ingest mode, samples and the sweep manifest come from `input.samples`
//! and `input.sweep` instead.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qrng_core::extractor::{stream_extract, ExtractorConfig};
use qrng_core::rng::CounterRng;
use qrng_core::simulator::dequantize;
use qrng_core::spectral::{autocorrelation, qq_data};
use rand::RngCore;

use crate::config::{Mode, PipelineConfig};
use crate::error::{KitError, Result};
use crate::figures;
use crate::formats;
use crate::pipeline::{self, PipelineOutcome};

pub const AUTOCORR_MAX_LAG: usize = 32;
pub const AUTOCORR_SEGMENTS: usize = 1000;
pub const QQ_QUANTILES: usize = 201;
/// Spectra: one row per one-sided bin, frequency in cycles per sample.
pub const SPECTRUM_HEADER: [&str; 2] = ["freq_normalized", "psd"];

fn samples_path(cfg: &PipelineConfig, out: &Path) -> PathBuf {
    match (cfg.mode, &cfg.input_samples) {
        (Mode::Ingest, Some(p)) => p.clone(),
        _ => out.join("samples.i16"),
    }
}

fn sweep_path(cfg: &PipelineConfig, out: &Path) -> PathBuf {
    match (cfg.mode, &cfg.input_sweep) {
        (Mode::Ingest, Some(p)) => p.clone(),
        _ => out.join("sweep.csv"),
    }
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| KitError::io(out, e))
}

pub fn simulate(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let sim = pipeline::simulate(cfg)?;
    formats::write_samples(&out.join("samples.i16"), &sim.codes)?;
    formats::write_bytes(&out.join("truth.txt"), formats::truth_text(&sim.truth).as_bytes())?;
    let sweep = pipeline::simulate_sweep(cfg, &sim.process)?;
    pipeline::write_sweep(out, &sweep, cfg.calib.p_sig)
}

pub fn calibrate(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    create_dir(out)?;
    let (sweep, p_sig) = pipeline::load_sweep(&sweep_path(cfg, out))?;
    let tf = pipeline::calibrate(cfg, &sweep, p_sig)?;
    formats::write_transfer_function(out, &tf, cfg.calib.photon_energy, cfg.calib.sample_rate)
}

pub fn estimate(cfg: &PipelineConfig, out: &Path) -> Result<pipeline::Estimates> {
    let codes = formats::read_samples(&samples_path(cfg, out))?;
    let (tf, photon_energy, _) = formats::read_transfer_function(out)?;
    let est = pipeline::estimate(cfg, &codes, &tf, photon_energy)?;
    formats::write_bytes(&out.join("estimates.txt"), est.to_text().as_bytes())?;
    Ok(est)
}

pub fn bound(cfg: &PipelineConfig, out: &Path) -> Result<String> {
    let model = pipeline::read_noise_model(&out.join("estimates.txt"), cfg.eps_pe)?;
    let report = pipeline::bound(cfg, &model)?.to_string();
    formats::write_bytes(&out.join("bound.txt"), report.as_bytes())?;
    Ok(report)
}

/// Hashes the samples with the seed file; the output length is checked
/// against `secure_len_bits` from `bound.txt`.
pub fn extract(cfg: &PipelineConfig, out: &Path) -> Result<u64> {
    let bound_path = out.join("bound.txt");
    let kv = formats::parse_kv(&formats::read_text(&bound_path)?);
    let secure = formats::kv_f64(&kv, "secure_len_bits", &bound_path)? as u64;
    if cfg.m_out as u64 > secure {
        return Err(KitError::OutputExceedsSecureLength { requested: cfg.m_out, secure });
    }
    let seed_path = cfg.seed_file.as_deref().ok_or_else(|| KitError::config(0, "extract needs a seed file"))?;
    let seed = formats::read_bytes(seed_path)?;
    let codes = formats::read_samples(&samples_path(cfg, out))?;
    let ext = ExtractorConfig::from_seed_bytes(cfg.n_in, cfg.m_out, &seed, cfg.eps_hash)?;
    let bytes = crate::parallel::par_stream_extract(&ext, &codes)?;
    formats::write_bytes(&out.join("output.bin"), &bytes)?;
    Ok(bytes.len() as u64 * 8)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub blocks: usize,
    pub seconds: f64,
    pub input_mbit_per_s: f64,
    pub output_mbit_per_s: f64,
}

/// Single-threaded extraction over `blocks` pseudo-random blocks.
pub fn bench_extractor(n_in: usize, m_out: usize, blocks: usize) -> Result<Benchmark> {
    let mut rng = CounterRng::new(0xbe4c);
    let mut seed = vec![0u8; (n_in + m_out - 1).div_ceil(8)];
    rng.fill_bytes(&mut seed);
    let pad = seed.len() * 8 - (n_in + m_out - 1);
    if pad > 0 {
        *seed.last_mut().expect("non-empty seed") &= 0xff >> pad;
    }
    let cfg = ExtractorConfig::from_seed_bytes(n_in, m_out, &seed, 1e-33)?;
    let samples: Vec<i16> = (0..blocks * cfg.samples_per_block()).map(|_| rng.next_u32() as i16).collect();
    let start = Instant::now();
    let out = stream_extract(&cfg, &samples)?;
    let seconds = start.elapsed().as_secs_f64().max(1e-9);
    std::hint::black_box(&out);
    Ok(Benchmark {
        blocks,
        seconds,
        input_mbit_per_s: (blocks * n_in) as f64 / seconds / 1e6,
        output_mbit_per_s: (blocks * m_out) as f64 / seconds / 1e6,
    })
}

pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<PipelineOutcome> {
    pipeline::run(cfg, out)
}

pub fn figure2(out: &Path) -> Result<Vec<figures::Figure2Point>> {
    create_dir(out)?;
    let points = figures::figure2(&figures::Figure2Grid::default());
    formats::write_csv(&out.join("figure2.csv"), &figures::FIGURE2_HEADER, points.iter().map(figures::figure2_row))?;
    Ok(points)
}

pub const APPENDIX_POINTS: usize = 121;
pub const APPENDIX_BIN_WIDTH: f64 = 1.0;

pub fn appendix_a(out: &Path) -> Result<Vec<figures::TightnessPoint>> {
    create_dir(out)?;
    let grid = figures::log_grid(1e-3, 1e3, APPENDIX_POINTS);
    let points = figures::tightness(&grid, APPENDIX_BIN_WIDTH);
    formats::write_csv(
        &out.join("appendix_a.csv"),
        &figures::TIGHTNESS_HEADER,
        points.iter().map(figures::tightness_row),
    )?;
    Ok(points)
}

/// Plot data from completed pipeline artifacts: signal, vacuum and excess
/// PSDs, autocorrelation and Q-Q pairs.
pub fn report(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let codes = formats::read_samples(&samples_path(cfg, out))?;
    let (tf, photon_energy, _) = formats::read_transfer_function(out)?;
    let est = pipeline::estimate(cfg, &codes, &tf, photon_energy)?;
    let freqs = est.signal.frequencies();
    let spectrum = |name: &str, psd: &[f64]| {
        formats::write_csv(&out.join(name), &SPECTRUM_HEADER, freqs.iter().zip(psd).map(|(f, v)| vec![*f, *v]))
    };
    spectrum("psd_signal.csv", &est.signal.psd)?;
    spectrum("psd_vacuum.csv", &est.vacuum)?;
    spectrum("psd_excess.csv", &est.excess_spectrum.spectrum.psd)?;

    let wide: Vec<i32> = codes.iter().map(|&c| c as i32).collect();
    let x = dequantize(&wide, &cfg.adc()?);
    let acf = autocorrelation(&x, AUTOCORR_MAX_LAG, AUTOCORR_SEGMENTS)?;
    formats::write_csv(
        &out.join("autocorr.csv"),
        &["lag", "autocorrelation"],
        acf.iter().enumerate().map(|(k, a)| vec![k as f64, *a]),
    )?;
    let qq = qq_data(&x, QQ_QUANTILES)?;
    formats::write_csv(&out.join("qq.csv"), &["theoretical", "empirical"], qq.iter().map(|(a, b)| vec![*a, *b]))
}
