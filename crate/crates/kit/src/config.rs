//! Flat `key = value` configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Unknown keys are rejected. Every key and its default:
//!
//! ```text
//! mode = simulate              # simulate | ingest
//! adc.bits = 16
//! adc.range = 32768            # ADC counts; bin width is 2·range/(2^bits − 2)
//! welch.block_len = 4096
//! welch.overlap = 0.5
//! welch.window = rectangular   # rectangular | hann
//! eps_pe = 1e-10
//! eps_hash = 1e-33
//! extractor.n_in = 1280
//! extractor.m_out = 640
//! sim.samples = 4194304
//! sim.seed = 1
//! sim.total = 3.96e7           # target σ²
//! sim.conditional = 3.29e7     # target σ_X²
//! sim.excess = 2.49e7          # target σ_U²
//! sim.filter_taps = 63
//! sim.filter_cutoff = 0.4      # fraction of Nyquist
//! calib.sample_rate = 1e9
//! calib.step = 8               # sweep every step-th Welch bin
//! calib.record_len = 16384
//! calib.p_sig = 1e12
//! calib.p_lo = 1
//! calib.eta1 = 1
//! calib.eta2 = 1
//! calib.splitting = 0.5
//! calib.visibility = 1
//! calib.attenuator_db = 20
//! calib.photon_energy = 1
//! input.samples =              # ingest: signed 16-bit little-endian samples
//! input.sweep =                # ingest: manifest nu_hz,record_path,p_sig_watts
//! seed_file =
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qrng_core::entropy::AdcSpec;
use qrng_core::simulator::{windowed_sinc_lowpass, BeatSpec, GainProfile, ProcessSpec};
use qrng_core::spectral::{WelchConfig, Window};

use crate::error::{KitError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Ingest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub samples: usize,
    pub seed: u64,
    pub total: f64,
    pub conditional: f64,
    pub excess: f64,
    pub filter_taps: usize,
    pub filter_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibConfig {
    pub sample_rate: f64,
    pub step: usize,
    pub record_len: usize,
    pub p_sig: f64,
    pub p_lo: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub splitting: f64,
    pub visibility: f64,
    pub attenuator_db: f64,
    pub photon_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub adc_bits: u32,
    pub adc_range: f64,
    pub welch: WelchConfig,
    pub eps_pe: f64,
    pub eps_hash: f64,
    pub n_in: usize,
    pub m_out: usize,
    pub sim: SimConfig,
    pub calib: CalibConfig,
    pub input_samples: Option<PathBuf>,
    pub input_sweep: Option<PathBuf>,
    pub seed_file: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            adc_bits: 16,
            adc_range: 32768.0,
            welch: WelchConfig::default(),
            eps_pe: 1e-10,
            eps_hash: 1e-33,
            n_in: 1280,
            m_out: 640,
            sim: SimConfig {
                samples: 1 << 22,
                seed: 1,
                total: 3.96e7,
                conditional: 3.29e7,
                excess: 2.49e7,
                filter_taps: 63,
                filter_cutoff: 0.4,
            },
            calib: CalibConfig {
                sample_rate: 1e9,
                step: 8,
                record_len: 16384,
                p_sig: 1e12,
                p_lo: 1.0,
                eta1: 1.0,
                eta2: 1.0,
                splitting: 0.5,
                visibility: 1.0,
                attenuator_db: 20.0,
                photon_energy: 1.0,
            },
            input_samples: None,
            input_sweep: None,
            seed_file: None,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| KitError::config(line, format!("invalid value {value:?} for {key}")))
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) =
                content.split_once('=').ok_or_else(|| KitError::config(line, "expected `key = value`"))?;
            cfg.set(line, key.trim(), value.trim(), base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KitError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn set(&mut self, line: usize, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |v: &str| (!v.is_empty()).then(|| base.join(v));
        match key {
            "mode" => {
                self.mode = match value {
                    "simulate" => Mode::Simulate,
                    "ingest" => Mode::Ingest,
                    _ => return Err(KitError::config(line, format!("unknown mode {value:?}"))),
                }
            }
            "adc.bits" => self.adc_bits = parse(line, key, value)?,
            "adc.range" => self.adc_range = parse(line, key, value)?,
            "welch.block_len" => self.welch.block_len = parse(line, key, value)?,
            "welch.overlap" => self.welch.overlap = parse(line, key, value)?,
            "welch.window" => {
                self.welch.window = match value {
                    "rectangular" => Window::Rectangular,
                    "hann" => Window::Hann,
                    _ => return Err(KitError::config(line, format!("unknown window {value:?}"))),
                }
            }
            "eps_pe" => self.eps_pe = parse(line, key, value)?,
            "eps_hash" => self.eps_hash = parse(line, key, value)?,
            "extractor.n_in" => self.n_in = parse(line, key, value)?,
            "extractor.m_out" => self.m_out = parse(line, key, value)?,
            "sim.samples" => self.sim.samples = parse(line, key, value)?,
            "sim.seed" => self.sim.seed = parse(line, key, value)?,
            "sim.total" => self.sim.total = parse(line, key, value)?,
            "sim.conditional" => self.sim.conditional = parse(line, key, value)?,
            "sim.excess" => self.sim.excess = parse(line, key, value)?,
            "sim.filter_taps" => self.sim.filter_taps = parse(line, key, value)?,
            "sim.filter_cutoff" => self.sim.filter_cutoff = parse(line, key, value)?,
            "calib.sample_rate" => self.calib.sample_rate = parse(line, key, value)?,
            "calib.step" => self.calib.step = parse(line, key, value)?,
            "calib.record_len" => self.calib.record_len = parse(line, key, value)?,
            "calib.p_sig" => self.calib.p_sig = parse(line, key, value)?,
            "calib.p_lo" => self.calib.p_lo = parse(line, key, value)?,
            "calib.eta1" => self.calib.eta1 = parse(line, key, value)?,
            "calib.eta2" => self.calib.eta2 = parse(line, key, value)?,
            "calib.splitting" => self.calib.splitting = parse(line, key, value)?,
            "calib.visibility" => self.calib.visibility = parse(line, key, value)?,
            "calib.attenuator_db" => self.calib.attenuator_db = parse(line, key, value)?,
            "calib.photon_energy" => self.calib.photon_energy = parse(line, key, value)?,
            "input.samples" => self.input_samples = path(value),
            "input.sweep" => self.input_sweep = path(value),
            "seed_file" => self.seed_file = path(value),
            _ => return Err(KitError::config(line, format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(KitError::config(0, m));
        if !(2..=16).contains(&self.adc_bits) {
            return bad("adc.bits must be between 2 and 16 for 16-bit sample files");
        }
        if !(self.eps_pe > 0.0 && self.eps_pe < 1.0) || !(self.eps_hash > 0.0 && self.eps_hash < 1.0) {
            return bad("eps_pe and eps_hash must lie in (0, 1)");
        }
        if self.welch.block_len > qrng_core::calibration::BEAT_BLOCK
            || !qrng_core::calibration::BEAT_BLOCK.is_multiple_of(self.welch.block_len.max(1))
        {
            return bad("welch.block_len must be a power of two no larger than 4096");
        }
        if self.calib.step == 0 {
            return bad("calib.step must be positive");
        }
        if self.mode == Mode::Ingest {
            for (name, p) in [("input.samples", &self.input_samples), ("input.sweep", &self.input_sweep)] {
                match p {
                    None => return Err(KitError::config(0, format!("{name} is required in ingest mode"))),
                    Some(p) if !p.exists() => return Err(KitError::MissingArtifact(p.clone())),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn adc(&self) -> Result<AdcSpec> {
        Ok(AdcSpec::new(self.adc_bits, self.adc_range)?)
    }

    /// Samples per extractor block.
    pub fn block_samples(&self) -> usize {
        self.n_in / qrng_core::extractor::SAMPLE_BITS
    }

    pub fn vacuum_filter(&self) -> Vec<f64> {
        windowed_sinc_lowpass(self.sim.filter_taps.max(1), self.sim.filter_cutoff)
    }

    pub fn process_spec(&self) -> Result<ProcessSpec> {
        Ok(ProcessSpec::tuned(
            self.sim.total,
            self.sim.conditional,
            self.sim.excess,
            self.vacuum_filter(),
            self.sim.seed,
        )?)
    }

    /// Detector model for simulated calibration sweeps. Its gain profile is
    /// the vacuum filter scaled so that the detector's shot noise reproduces
    /// the simulated vacuum component in ADC counts².
    pub fn beat_spec(&self, process: &ProcessSpec) -> BeatSpec {
        let c = &self.calib;
        let mut spec = BeatSpec {
            nu: 0.0,
            p_sig: c.p_sig,
            p_lo: c.p_lo,
            eta1: c.eta1,
            eta2: c.eta2,
            splitting: c.splitting,
            visibility: c.visibility,
            gain: GainProfile::Flat,
            photon_energy: c.photon_energy,
            charge: 1.0,
            attenuator_db: c.attenuator_db,
        };
        let per_bin_shot = spec.shot_noise_psd() * c.sample_rate / 2.0;
        let k = process.vacuum_scale / per_bin_shot.sqrt();
        spec.gain = GainProfile::Fir(process.vacuum_filter.iter().map(|h| h * k).collect());
        spec
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let window = match self.welch.window {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        };
        let mode = match self.mode {
            Mode::Simulate => "simulate",
            Mode::Ingest => "ingest",
        };
        let opt = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        writeln!(f, "mode = {mode}")?;
        writeln!(f, "adc.bits = {}", self.adc_bits)?;
        writeln!(f, "adc.range = {}", self.adc_range)?;
        writeln!(f, "welch.block_len = {}", self.welch.block_len)?;
        writeln!(f, "welch.overlap = {}", self.welch.overlap)?;
        writeln!(f, "welch.window = {window}")?;
        writeln!(f, "eps_pe = {:e}", self.eps_pe)?;
        writeln!(f, "eps_hash = {:e}", self.eps_hash)?;
        writeln!(f, "extractor.n_in = {}", self.n_in)?;
        writeln!(f, "extractor.m_out = {}", self.m_out)?;
        writeln!(f, "sim.samples = {}", self.sim.samples)?;
        writeln!(f, "sim.seed = {}", self.sim.seed)?;
        writeln!(f, "sim.total = {:e}", self.sim.total)?;
        writeln!(f, "sim.conditional = {:e}", self.sim.conditional)?;
        writeln!(f, "sim.excess = {:e}", self.sim.excess)?;
        writeln!(f, "sim.filter_taps = {}", self.sim.filter_taps)?;
        writeln!(f, "sim.filter_cutoff = {}", self.sim.filter_cutoff)?;
        writeln!(f, "calib.sample_rate = {:e}", self.calib.sample_rate)?;
        writeln!(f, "calib.step = {}", self.calib.step)?;
        writeln!(f, "calib.record_len = {}", self.calib.record_len)?;
        writeln!(f, "calib.p_sig = {:e}", self.calib.p_sig)?;
        writeln!(f, "calib.p_lo = {:e}", self.calib.p_lo)?;
        writeln!(f, "calib.eta1 = {}", self.calib.eta1)?;
        writeln!(f, "calib.eta2 = {}", self.calib.eta2)?;
        writeln!(f, "calib.splitting = {}", self.calib.splitting)?;
        writeln!(f, "calib.visibility = {}", self.calib.visibility)?;
        writeln!(f, "calib.attenuator_db = {}", self.calib.attenuator_db)?;
        writeln!(f, "calib.photon_energy = {:e}", self.calib.photon_energy)?;
        writeln!(f, "input.samples = {}", opt(&self.input_samples))?;
        writeln!(f, "input.sweep = {}", opt(&self.input_sweep))?;
        write!(f, "seed_file = {}", opt(&self.seed_file))
    }
}
