//! The measurement chain: simulate or ingest → calibrate → estimate →
//! bound → extract → report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qrng_core::calibration::{build_transfer_function, vacuum_psd_bound_on_bins, TransferFunction};
use qrng_core::entropy::{worst_case_min_entropy, EntropyReport, NoiseModel};
use qrng_core::extractor::{seed_reuse_budget, ExtractorConfig};
use qrng_core::rng::CounterRng;
use qrng_core::simulator::{dequantize, gen_beat_record, quantize, synthesize_qrng_signal, GroundTruth, ProcessSpec};
use qrng_core::spectral::{
    conditional_variance, excess_psd, total_variance, welch_psd_with, ExcessSpectrum, SpectrumEstimate,
    VarianceEstimate,
};
use rayon::prelude::*;

use crate::config::{Mode, PipelineConfig};
use crate::error::{KitError, Result};
use crate::formats;
use crate::parallel::{par_stream_extract, RayonJoiner};

/// Beat records keyed by their line frequency in Hz.
pub type Sweep = Vec<(f64, Vec<f64>)>;

/// Substream of the simulation seed reserved for calibration sweeps.
const SWEEP_STREAM: u64 = 0xca1b;

pub struct Simulated {
    pub codes: Vec<i16>,
    pub truth: GroundTruth,
    pub process: ProcessSpec,
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Simulated> {
    let process = cfg.process_spec()?;
    let (x, truth) = synthesize_qrng_signal(&process, cfg.sim.samples)?;
    let codes = quantize(&x, &cfg.adc()?).into_iter().map(|c| c as i16).collect();
    Ok(Simulated { codes, truth, process })
}

/// Welch bins visited by a simulated sweep: every `calib.step`-th bin
/// above DC.
pub fn sweep_bins(cfg: &PipelineConfig) -> Vec<usize> {
    let n_bins = cfg.welch.block_len / 2;
    (cfg.calib.step..n_bins).step_by(cfg.calib.step).collect()
}

/// Beat records at the sweep frequencies, in frequency order.
pub fn simulate_sweep(cfg: &PipelineConfig, process: &ProcessSpec) -> Result<Sweep> {
    let base = cfg.beat_spec(process);
    let fs = cfg.calib.sample_rate;
    let root = CounterRng::new(cfg.sim.seed).substream(SWEEP_STREAM);
    sweep_bins(cfg)
        .into_par_iter()
        .map(|j| {
            let nu = j as f64 * fs / cfg.welch.block_len as f64;
            let spec = qrng_core::simulator::BeatSpec { nu, ..base.clone() };
            let record = gen_beat_record(&spec, cfg.calib.record_len, fs, &mut root.substream(j as u64))?;
            Ok((nu, record))
        })
        .collect()
}

pub fn calibrate(cfg: &PipelineConfig, sweep: &[(f64, Vec<f64>)], p_sig: f64) -> Result<TransferFunction> {
    let view: Vec<(f64, &[f64])> = sweep.iter().map(|(nu, r)| (*nu, r.as_slice())).collect();
    Ok(build_transfer_function(&view, p_sig, cfg.calib.sample_rate, cfg.calib.attenuator_db)?)
}

/// Loads the sweep manifest and its records; signal power must be the
/// same for every point.
pub fn load_sweep(path: &Path) -> Result<(Sweep, f64)> {
    let entries = formats::read_sweep_manifest(path)?;
    let p_sig = entries.first().map(|e| e.p_sig_watts).unwrap_or(0.0);
    if entries.iter().any(|e| e.p_sig_watts != p_sig) {
        return Err(KitError::format(path, "signal power must be constant across the sweep"));
    }
    let sweep = entries.iter().map(|e| Ok((e.nu_hz, formats::read_record(&e.record_path)?))).collect::<Result<_>>()?;
    Ok((sweep, p_sig))
}

/// Writes beat records under `dir/sweep/` and the manifest `dir/sweep.csv`.
pub fn write_sweep(dir: &Path, sweep: &[(f64, Vec<f64>)], p_sig: f64) -> Result<()> {
    let rec_dir = dir.join("sweep");
    std::fs::create_dir_all(&rec_dir).map_err(|e| KitError::io(&rec_dir, e))?;
    let mut entries = Vec::with_capacity(sweep.len());
    for (i, (nu, record)) in sweep.iter().enumerate() {
        let rel = PathBuf::from(format!("sweep/record_{i:05}.f64"));
        formats::write_record(&dir.join(&rel), record)?;
        entries.push(formats::SweepEntry { nu_hz: *nu, record_path: rel, p_sig_watts: p_sig });
    }
    formats::write_sweep_manifest(&dir.join("sweep.csv"), &entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub total: VarianceEstimate,
    pub conditional: VarianceEstimate,
    pub excess: VarianceEstimate,
    pub signal: SpectrumEstimate,
    pub vacuum: Vec<f64>,
    pub excess_spectrum: ExcessSpectrum,
}

impl Estimates {
    pub fn temporal_correlation(&self) -> f64 {
        self.conditional.point / self.total.point
    }

    /// `10·log10((σ_X²−σ_U²)/σ_U²)`.
    pub fn quantum_to_excess_db(&self) -> f64 {
        10.0 * ((self.conditional.point - self.excess.point) / self.excess.point).log10()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, v) in [
            ("total_variance", &self.total),
            ("conditional_variance", &self.conditional),
            ("excess_conditional_variance", &self.excess),
        ] {
            let _ = writeln!(s, "{name}: {}", v.point);
            let _ = writeln!(s, "{name}_lo: {}", v.lo);
            let _ = writeln!(s, "{name}_hi: {}", v.hi);
        }
        let _ = writeln!(s, "temporal_correlation: {}", self.temporal_correlation());
        let _ = writeln!(s, "quantum_to_excess_db: {}", self.quantum_to_excess_db());
        let _ = writeln!(s, "quantum_to_excess_definition: 10*log10((sigmaX2-sigmaU2)/sigmaU2)");
        let _ = writeln!(s, "effective_averages: {}", self.signal.effective_averages);
        let _ = writeln!(s, "spectral_bins: {}", self.signal.n_bins());
        let _ = writeln!(s, "floored_excess_bins: {}", self.excess_spectrum.floored_bins);
        let _ = writeln!(s, "eps_pe: {:e}", self.signal.epsilon);
        s
    }
}

pub fn estimate(cfg: &PipelineConfig, codes: &[i16], tf: &TransferFunction, photon_energy: f64) -> Result<Estimates> {
    let adc = cfg.adc()?;
    let wide: Vec<i32> = codes.iter().map(|&c| c as i32).collect();
    let x = dequantize(&wide, &adc);
    let signal = welch_psd_with(&x, &cfg.welch, cfg.eps_pe, &RayonJoiner)?;
    let vacuum = vacuum_psd_bound_on_bins(tf, photon_energy, cfg.calib.sample_rate, signal.n_bins());
    let excess_spectrum = excess_psd(&signal, &vacuum)?;
    Ok(Estimates {
        total: total_variance(&signal)?,
        conditional: conditional_variance(&signal)?,
        excess: conditional_variance(&excess_spectrum.spectrum)?,
        signal,
        vacuum,
        excess_spectrum,
    })
}

/// Rebuilds the noise model from an estimates file.
pub fn read_noise_model(path: &Path, eps_pe: f64) -> Result<NoiseModel> {
    let kv = formats::parse_kv(&formats::read_text(path)?);
    let get = |name: &str| -> Result<VarianceEstimate> {
        Ok(VarianceEstimate::new(
            formats::kv_f64(&kv, name, path)?,
            formats::kv_f64(&kv, &format!("{name}_lo"), path)?,
            formats::kv_f64(&kv, &format!("{name}_hi"), path)?,
            eps_pe,
        ))
    };
    Ok(NoiseModel::new(
        get("total_variance")?,
        get("conditional_variance")?,
        get("excess_conditional_variance")?,
        eps_pe,
    )?)
}

pub fn bound(cfg: &PipelineConfig, model: &NoiseModel) -> Result<EntropyReport> {
    let adc = cfg.adc()?;
    let worst = worst_case_min_entropy(model, &adc)?;
    Ok(EntropyReport::new(&worst, &adc, cfg.block_samples() as u64, cfg.eps_hash, model.eps_pe))
}

pub fn noise_model(cfg: &PipelineConfig, est: &Estimates) -> Result<NoiseModel> {
    Ok(NoiseModel::new(est.total, est.conditional, est.excess, cfg.eps_pe)?)
}

/// Declared seed failure probability from `<seed>.provenance`, a
/// `key = value` file with an `eps_seed` entry.
pub fn seed_provenance(seed_file: &Path) -> Option<f64> {
    let mut name = seed_file.as_os_str().to_owned();
    name.push(".provenance");
    let text = std::fs::read_to_string(PathBuf::from(name)).ok()?;
    text.lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == "eps_seed")
        .and_then(|(_, v)| v.trim().parse().ok())
}

/// Hashes the samples when the configured output fits the secure length.
pub fn extract(cfg: &PipelineConfig, codes: &[i16], seed: &[u8], report: &EntropyReport) -> Result<Vec<u8>> {
    if cfg.m_out as u64 > report.secure_len_bits {
        return Err(KitError::OutputExceedsSecureLength { requested: cfg.m_out, secure: report.secure_len_bits });
    }
    let ext = ExtractorConfig::from_seed_bytes(cfg.n_in, cfg.m_out, seed, cfg.eps_hash)?;
    Ok(par_stream_extract(&ext, codes)?)
}

pub struct PipelineOutcome {
    pub truth: Option<GroundTruth>,
    pub estimates: Estimates,
    pub report: Result<EntropyReport>,
    pub extracted_bits: u64,
    pub report_text: String,
}

/// Runs every stage and writes `report.txt` (always), plus samples, truth,
/// calibration, estimates and `output.bin` as they become available.
pub fn run(cfg: &PipelineConfig, out: &Path) -> Result<PipelineOutcome> {
    std::fs::create_dir_all(out).map_err(|e| KitError::io(out, e))?;
    let (codes, truth, sweep, p_sig) = match cfg.mode {
        Mode::Simulate => {
            let sim = simulate(cfg)?;
            formats::write_samples(&out.join("samples.i16"), &sim.codes)?;
            formats::write_bytes(&out.join("truth.txt"), formats::truth_text(&sim.truth).as_bytes())?;
            let sweep = simulate_sweep(cfg, &sim.process)?;
            (sim.codes, Some(sim.truth), sweep, cfg.calib.p_sig)
        }
        Mode::Ingest => {
            let samples = cfg.input_samples.as_deref().expect("validated");
            let (sweep, p_sig) = load_sweep(cfg.input_sweep.as_deref().expect("validated"))?;
            (formats::read_samples(samples)?, None, sweep, p_sig)
        }
    };
    let tf = calibrate(cfg, &sweep, p_sig)?;
    formats::write_transfer_function(out, &tf, cfg.calib.photon_energy, cfg.calib.sample_rate)?;
    let estimates = estimate(cfg, &codes, &tf, cfg.calib.photon_energy)?;
    formats::write_bytes(&out.join("estimates.txt"), estimates.to_text().as_bytes())?;

    let report = noise_model(cfg, &estimates).and_then(|m| bound(cfg, &m));
    let mut extracted_bits = 0;
    let mut hash_runs = 0;
    let mut extraction_note = String::from("no seed file configured");
    let eps_seed = cfg.seed_file.as_deref().and_then(seed_provenance);
    if let (Ok(rep), Some(seed_path)) = (&report, &cfg.seed_file) {
        let seed = formats::read_bytes(seed_path)?;
        match extract(cfg, &codes, &seed, rep) {
            Ok(bytes) => {
                hash_runs = (codes.len() / cfg.block_samples()) as u64;
                extracted_bits = bytes.len() as u64 * 8;
                formats::write_bytes(&out.join("output.bin"), &bytes)?;
                extraction_note = String::from("ok");
            }
            Err(e @ KitError::OutputExceedsSecureLength { .. }) => extraction_note = e.to_string(),
            Err(e) => return Err(e),
        }
    }

    let mut text = String::new();
    for line in cfg.to_string().lines() {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "samples: {}", codes.len());
    if let Some(t) = &truth {
        let _ = writeln!(text, "truth_total_variance: {}", t.total_variance);
        let _ = writeln!(text, "truth_conditional_variance: {}", t.conditional_variance);
        let _ = writeln!(text, "truth_excess_conditional_variance: {}", t.excess_conditional_variance);
    }
    text.push_str(&estimates.to_text());
    match &report {
        Ok(r) => {
            let _ = writeln!(text, "status: ok");
            text.push_str(&r.to_string());
        }
        Err(e) => {
            let _ = writeln!(text, "status: {e}");
            let _ = writeln!(text, "secure_len_bits: 0");
        }
    }
    let _ = writeln!(text, "extraction: {extraction_note}");
    let _ = writeln!(text, "extracted_len_bits: {extracted_bits}");
    let _ = writeln!(text, "hash_runs: {hash_runs}");
    let seed_term = eps_seed.map_or_else(|| "unbounded".to_string(), |e| format!("{e:e}"));
    let _ = writeln!(
        text,
        "failure_probability: N'*eps_hash + eps_pe + eps_seed = {:e} + {:e} + {seed_term}",
        seed_reuse_budget(hash_runs, cfg.eps_hash),
        cfg.eps_pe
    );
    formats::write_bytes(&out.join("report.txt"), text.as_bytes())?;

    Ok(PipelineOutcome { truth, estimates, report, extracted_bits, report_text: text })
}
