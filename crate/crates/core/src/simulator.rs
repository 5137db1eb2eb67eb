//! Synthetic data with known ground truth.
//!
//! The QRNG signal is the sum of a colored vacuum component, a colored
//! excess-noise component and an optional slow classical drift. Ground-truth
//! variances are computed from the exact spectra of the generating filters.
//! Two-laser beat records for transfer-function calibration follow the
//! balanced-detector photocurrent model in "vacuum units" where the
//! elementary charge and the photon energy `ħω_L` default to 1.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::entropy::AdcSpec;
use crate::fft::{Complex, FftPlan};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SimulatorError {
    #[error("filter has no taps")]
    EmptyFilter,
    #[error("filter energy is zero or not finite")]
    ZeroEnergyFilter,
    #[error("record of {got} samples is too short; need more than {needed}")]
    RecordTooShort { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("detuning {nu} Hz is at or above the Nyquist frequency {nyquist} Hz")]
    AliasedDetuning { nu: f64, nyquist: f64 },
    #[error("target variances cannot be reached: {0}")]
    Unreachable(&'static str),
}

/// Drift cutoff as a fraction of the Nyquist frequency.
pub const DRIFT_CUTOFF: f64 = 1e-4;
/// Frequency grid (intervals over `[0, π]`) for ground-truth integration.
pub const TRUTH_GRID: usize = 1 << 16;

fn filter_energy(filter: &[f64]) -> Result<f64, SimulatorError> {
    if filter.is_empty() {
        return Err(SimulatorError::EmptyFilter);
    }
    let e: f64 = filter.iter().map(|h| h * h).sum();
    if !(e > 0.0 && e.is_finite()) {
        return Err(SimulatorError::ZeroEnergyFilter);
    }
    Ok(e)
}

/// `y[t] = Σ_k h[k]·x[t + L − 1 − k]` for every full window of `x`.
fn convolve_valid(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let l = taps.len();
    x.windows(l).map(|w| w.iter().rev().zip(taps).map(|(a, b)| a * b).sum()).collect()
}

/// White unit Gaussian noise convolved with `filter` and multiplied by
/// `scale`. The first `filter.len()` outputs are discarded as warm-up.
pub fn gen_colored_gaussian<R: Rng + ?Sized>(
    filter: &[f64],
    scale: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>, SimulatorError> {
    filter_energy(filter)?;
    let needed = 10 * filter.len();
    if n_samples <= needed {
        return Err(SimulatorError::RecordTooShort { needed, got: n_samples });
    }
    let l = filter.len();
    let white: Vec<f64> = (0..n_samples + 2 * l - 1).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut out = convolve_valid(&white, filter);
    out.drain(..l);
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}

/// Hamming-windowed sinc lowpass with unit DC gain. `cutoff` is a fraction
/// of the Nyquist frequency.
pub fn windowed_sinc_lowpass(taps: usize, cutoff: f64) -> Vec<f64> {
    let mid = (taps as f64 - 1.0) / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let x = i as f64 - mid;
            let sinc = if x == 0.0 { cutoff } else { libm::sin(PI * cutoff * x) / (PI * x) };
            let w = if taps > 1 { 0.54 - 0.46 * libm::cos(2.0 * PI * i as f64 / (taps as f64 - 1.0)) } else { 1.0 };
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    for v in h.iter_mut() {
        *v /= dc;
    }
    h
}

/// `|H(λ)|²` at `λ = πi/grid`, `i = 0..=grid`.
pub fn filter_power_response(filter: &[f64], grid: usize) -> Vec<f64> {
    let n = 2 * grid.next_power_of_two().max(filter.len().next_power_of_two());
    let plan = FftPlan::new(n).expect("power of two");
    let mut buf = vec![Complex::ZERO; n];
    for (b, &h) in buf.iter_mut().zip(filter) {
        b.re = h;
    }
    plan.forward(&mut buf);
    let stride = n / (2 * grid);
    (0..=grid).map(|i| buf[i * stride].norm_sqr()).collect()
}

/// `exp((1/π)∫₀^π ln S(λ) dλ)` by the trapezoidal rule on a uniform grid.
fn log_mean_exp(values: impl Iterator<Item = f64>, grid: usize) -> f64 {
    let mut sum = 0.0;
    for (i, v) in values.enumerate() {
        let w = if i == 0 || i == grid { 0.5 } else { 1.0 };
        sum += w * libm::log(v);
    }
    libm::exp(sum / grid as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Drift {
    pole: f64,
    innovation_sd: f64,
}

impl Drift {
    fn new(variance: f64) -> Self {
        let pole = libm::exp(-DRIFT_CUTOFF * PI);
        Self { pole, innovation_sd: libm::sqrt(variance * (1.0 - pole * pole)) }
    }

    fn spectrum(&self, lambda: f64) -> f64 {
        let a = self.pole;
        self.innovation_sd * self.innovation_sd / (1.0 - 2.0 * a * libm::cos(lambda) + a * a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub vacuum_filter: Vec<f64>,
    pub excess_filter: Vec<f64>,
    pub vacuum_scale: f64,
    pub excess_scale: f64,
    pub classical_variance: f64,
    pub rng_seed: u64,
}

/// Analytic variances of a [`ProcessSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    /// σ² of the full signal.
    pub total_variance: f64,
    /// σ_X², geometric mean of the full signal spectrum.
    pub conditional_variance: f64,
    /// σ_U², geometric mean of the excess-noise spectrum.
    pub excess_conditional_variance: f64,
    pub vacuum_variance: f64,
    pub excess_variance: f64,
    pub classical_variance: f64,
}

impl ProcessSpec {
    fn validate(&self) -> Result<(), SimulatorError> {
        filter_energy(&self.vacuum_filter)?;
        filter_energy(&self.excess_filter)?;
        if !(self.vacuum_scale > 0.0 && self.vacuum_scale.is_finite()) {
            return Err(SimulatorError::InvalidParameter("vacuum_scale must be positive"));
        }
        if !(self.excess_scale >= 0.0 && self.excess_scale.is_finite()) {
            return Err(SimulatorError::InvalidParameter("excess_scale must be non-negative"));
        }
        if !(self.classical_variance >= 0.0 && self.classical_variance.is_finite()) {
            return Err(SimulatorError::InvalidParameter("classical_variance must be non-negative"));
        }
        Ok(())
    }

    /// Spec whose ground truth matches the target variances: white excess
    /// noise with `σ_U²`, a vacuum component shaped by `vacuum_filter` and
    /// scaled so the full spectrum has geometric mean `σ_X²`, and classical
    /// drift making up the rest of `σ²`.
    pub fn tuned(
        total: f64,
        conditional: f64,
        excess: f64,
        vacuum_filter: Vec<f64>,
        rng_seed: u64,
    ) -> Result<Self, SimulatorError> {
        let energy = filter_energy(&vacuum_filter)?;
        if !(excess > 0.0 && conditional > excess && total >= conditional) {
            return Err(SimulatorError::Unreachable("need total >= conditional > excess > 0"));
        }
        let response = filter_power_response(&vacuum_filter, TRUTH_GRID);
        let classical = |v2: f64| (total - v2 * energy - excess).max(0.0);
        let geo = |v2: f64| {
            let drift = Drift::new(classical(v2));
            let spectrum = response.iter().enumerate().map(|(i, &r)| {
                let lambda = PI * i as f64 / TRUTH_GRID as f64;
                v2 * r + excess + drift.spectrum(lambda)
            });
            log_mean_exp(spectrum, TRUTH_GRID)
        };

        let (mut lo, mut hi) = (0.0, (total - excess) / energy);
        if geo(hi) < conditional {
            return Err(SimulatorError::Unreachable("vacuum passband too narrow for the conditional variance"));
        }
        if geo(lo) >= conditional {
            return Err(SimulatorError::Unreachable("drift alone exceeds the conditional variance"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if geo(mid) < conditional {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        let v2 = 0.5 * (lo + hi);
        let classical = classical(v2);
        Ok(Self {
            vacuum_filter,
            excess_filter: vec![1.0],
            vacuum_scale: libm::sqrt(v2),
            excess_scale: libm::sqrt(excess),
            classical_variance: classical,
            rng_seed,
        })
    }

    /// Desk-scale default: 63-tap lowpass at 0.4 × Nyquist, tuned to
    /// σ² = 3.96e7, σ_X² = 3.29e7, σ_U² = 2.49e7 ADC counts².
    pub fn reference_point(rng_seed: u64) -> Self {
        Self::tuned(3.96e7, 3.29e7, 2.49e7, windowed_sinc_lowpass(63, 0.4), rng_seed)
            .expect("default profile is reachable")
    }

    /// Vacuum-component PSD `vacuum_scale²·|H(λ)|²` at normalized frequency
    /// `f` (cycles/sample) in the bin convention of the spectral module.
    pub fn vacuum_psd_at(&self, f: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &h) in self.vacuum_filter.iter().enumerate() {
            let a = -2.0 * PI * f * k as f64;
            re += h * libm::cos(a);
            im += h * libm::sin(a);
        }
        self.vacuum_scale * self.vacuum_scale * (re * re + im * im)
    }

    pub fn ground_truth(&self) -> Result<GroundTruth, SimulatorError> {
        self.validate()?;
        let vac = filter_power_response(&self.vacuum_filter, TRUTH_GRID);
        let exc = filter_power_response(&self.excess_filter, TRUTH_GRID);
        let vs2 = self.vacuum_scale * self.vacuum_scale;
        let es2 = self.excess_scale * self.excess_scale;
        let drift = (self.classical_variance > 0.0).then(|| Drift::new(self.classical_variance));

        let total_spectrum = (0..=TRUTH_GRID).map(|i| {
            let lambda = PI * i as f64 / TRUTH_GRID as f64;
            vs2 * vac[i] + es2 * exc[i] + drift.map_or(0.0, |d| d.spectrum(lambda))
        });
        let conditional_variance = log_mean_exp(total_spectrum, TRUTH_GRID);
        let excess_conditional_variance =
            if es2 > 0.0 { log_mean_exp(exc.iter().map(|&r| es2 * r), TRUTH_GRID) } else { 0.0 };

        let vacuum_variance = vs2 * filter_energy(&self.vacuum_filter)?;
        let excess_variance = es2 * filter_energy(&self.excess_filter)?;
        Ok(GroundTruth {
            total_variance: vacuum_variance + excess_variance + self.classical_variance,
            conditional_variance,
            excess_conditional_variance,
            vacuum_variance,
            excess_variance,
            classical_variance: self.classical_variance,
        })
    }
}

/// Signal = vacuum + excess + drift, each from its own substream of
/// `spec.rng_seed`.
pub fn synthesize_qrng_signal(spec: &ProcessSpec, n_samples: usize) -> Result<(Vec<f64>, GroundTruth), SimulatorError> {
    let truth = spec.ground_truth()?;
    let root = CounterRng::new(spec.rng_seed);
    let mut signal = gen_colored_gaussian(&spec.vacuum_filter, spec.vacuum_scale, n_samples, &mut root.substream(0))?;
    if spec.excess_scale > 0.0 {
        let excess = gen_colored_gaussian(&spec.excess_filter, spec.excess_scale, n_samples, &mut root.substream(1))?;
        for (s, e) in signal.iter_mut().zip(&excess) {
            *s += e;
        }
    }
    if spec.classical_variance > 0.0 {
        let drift = Drift::new(spec.classical_variance);
        let mut rng = root.substream(2);
        let mut level = libm::sqrt(spec.classical_variance) * rng.sample::<f64, _>(StandardNormal);
        for s in signal.iter_mut() {
            level = drift.pole * level + drift.innovation_sd * rng.sample::<f64, _>(StandardNormal);
            *s += level;
        }
    }
    Ok((signal, truth))
}

/// Signed ADC codes of `x`.
pub fn quantize(x: &[f64], adc: &AdcSpec) -> Vec<i32> {
    x.iter().map(|&v| adc.code_of_bin(adc.bin_index(v)) as i32).collect()
}

/// Bin centers of ADC codes.
pub fn dequantize(codes: &[i32], adc: &AdcSpec) -> Vec<f64> {
    codes.iter().map(|&c| adc.code_center(c as i64)).collect()
}

/// Frequency-dependent power gain `G(ν)` of the detection chain.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum GainProfile {
    #[default]
    Flat,
    /// FIR response; `G(ν) = |H(ν)|²`.
    Fir(Vec<f64>),
}

impl GainProfile {
    pub fn power_gain(&self, nu: f64, sample_rate: f64) -> f64 {
        match self {
            GainProfile::Flat => 1.0,
            GainProfile::Fir(h) => {
                let (mut re, mut im) = (0.0, 0.0);
                for (k, &c) in h.iter().enumerate() {
                    let a = -2.0 * PI * nu / sample_rate * k as f64;
                    re += c * libm::cos(a);
                    im += c * libm::sin(a);
                }
                re * re + im * im
            }
        }
    }
}

/// Two-laser beat measurement on a balanced detector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatSpec {
    /// Detuning ν between signal laser and local oscillator (Hz).
    pub nu: f64,
    pub p_sig: f64,
    pub p_lo: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Beam-splitter reflectivity R(ν).
    pub splitting: f64,
    /// Interference visibility χ.
    pub visibility: f64,
    pub gain: GainProfile,
    /// `ħω_L` of the local oscillator.
    pub photon_energy: f64,
    /// Elementary charge.
    pub charge: f64,
    /// Electrical attenuation inserted during calibration (dB, power).
    pub attenuator_db: f64,
}

impl Default for BeatSpec {
    fn default() -> Self {
        Self {
            nu: 0.0,
            p_sig: 1.0,
            p_lo: 1.0,
            eta1: 1.0,
            eta2: 1.0,
            splitting: 0.5,
            visibility: 1.0,
            gain: GainProfile::Flat,
            photon_energy: 1.0,
            charge: 1.0,
            attenuator_db: 0.0,
        }
    }
}

impl BeatSpec {
    pub fn validate(&self) -> Result<(), SimulatorError> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        if !(unit(self.eta1) && unit(self.eta2)) {
            return Err(SimulatorError::InvalidParameter("quantum efficiencies must lie in (0, 1]"));
        }
        if !(self.splitting > 0.0 && self.splitting < 1.0) {
            return Err(SimulatorError::InvalidParameter("splitting ratio must lie in (0, 1)"));
        }
        if !unit(self.visibility) {
            return Err(SimulatorError::InvalidParameter("visibility must lie in (0, 1]"));
        }
        if !(self.p_sig >= 0.0 && self.p_lo >= 0.0 && self.photon_energy > 0.0 && self.charge > 0.0) {
            return Err(SimulatorError::InvalidParameter("powers, photon energy and charge must be positive"));
        }
        if !(self.nu >= 0.0 && self.attenuator_db.is_finite()) {
            return Err(SimulatorError::InvalidParameter("detuning and attenuation must be finite and non-negative"));
        }
        Ok(())
    }

    /// Peak beat current `2χ²(η₁+η₂)√(R(1−R))·(e/ħω)·√(P_LO·P_sig)`.
    pub fn beat_amplitude(&self) -> f64 {
        let r = self.splitting;
        2.0 * self.visibility
            * self.visibility
            * (self.eta1 + self.eta2)
            * libm::sqrt(r * (1.0 - r))
            * (self.charge / self.photon_energy)
            * libm::sqrt(self.p_lo * self.p_sig)
    }

    /// One-sided shot-noise PSD (per Hz) before the gain profile,
    /// `2e(i_dc1 + i_dc2)`.
    pub fn shot_noise_psd(&self) -> f64 {
        let r = self.splitting;
        let responsivity = self.charge / self.photon_energy;
        let i_dc = responsivity * (self.eta1 * (1.0 - r) + self.eta2 * r) * self.p_lo;
        2.0 * self.charge * i_dc
    }

    /// True vacuum PSD at `nu` after the gain profile, without attenuator.
    pub fn vacuum_psd(&self, nu: f64, sample_rate: f64) -> f64 {
        self.shot_noise_psd() * self.gain.power_gain(nu, sample_rate)
    }

    pub fn attenuation(&self) -> f64 {
        libm::pow(10.0, -self.attenuator_db / 10.0)
    }
}

/// Beat note at `spec.nu` plus shot noise, passed through the gain profile
/// and the attenuator.
pub fn gen_beat_record<R: Rng + ?Sized>(
    spec: &BeatSpec,
    n_samples: usize,
    sample_rate: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SimulatorError> {
    spec.validate()?;
    let nyquist = sample_rate / 2.0;
    if !(spec.nu < nyquist) {
        return Err(SimulatorError::AliasedDetuning { nu: spec.nu, nyquist });
    }
    let taps: &[f64] = match &spec.gain {
        GainProfile::Flat => &[1.0],
        GainProfile::Fir(h) => {
            filter_energy(h)?;
            h
        }
    };
    let l = taps.len();
    let amplitude = spec.beat_amplitude();
    let noise_sd = libm::sqrt(spec.shot_noise_psd() * sample_rate / 2.0);
    let omega = 2.0 * PI * spec.nu / sample_rate;
    let warmup = l - 1;
    let raw: Vec<f64> = (0..n_samples + warmup)
        .map(|i| {
            let t = i as f64 - warmup as f64;
            amplitude * libm::cos(omega * t) + noise_sd * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let mut out = convolve_valid(&raw, taps);
    let scale = libm::sqrt(spec.attenuation());
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(out)
}
