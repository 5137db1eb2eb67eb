//! Welch power spectral density estimation and the variance, entropy-rate
//! and conditional-variance estimates derived from it.
//!
//! Spectra are one-sided with `block_len/2` bins. Bin `j` sits at normalized
//! frequency `j/block_len` cycles per sample, except that the first bin also
//! carries the Nyquist term, and the bins are scaled so that their
//! arithmetic mean is the mean square of the data. With this convention the
//! variance is the mean of the bins and the conditional variance is their
//! geometric mean.
//!
//! Confidence intervals come from the per-bin tail bound
//! `P(|f₀/f − 1| > t) ≤ 2·exp(−γM·t²/8)` combined over all `n` bins with a
//! union bound, i.e. `t = √(8·ln(2n/ε)/(γM))`, where `γM` is the effective
//! number of averaged periodograms.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use crate::fft::{Complex, FftPlan};
use crate::reduce::{pairwise, Joiner, Sequential};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("block length {0} is not a power of two >= 8")]
    BadBlockLength(usize),
    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("overlap fraction {0} outside [0, 1)")]
    InvalidOverlap(f64),
    #[error("failure probability {0} outside (0, 1)")]
    InvalidEpsilon(f64),
    #[error("spectral bin {0} is zero; entropy rate is unbounded below")]
    ZeroBin(usize),
    #[error("bin count mismatch: signal has {signal}, vacuum has {vacuum}")]
    BinCountMismatch { signal: usize, vacuum: usize },
    #[error("relative interval half-width {0} >= 1; average more periodograms")]
    InsufficientAveraging(f64),
    #[error("data has zero variance")]
    ZeroVariance,
    #[error("need at least 3 quantiles, got {0}")]
    BadQuantileCount(usize),
}

/// Point estimate with a two-sided confidence interval holding except with
/// probability `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
}

impl VarianceEstimate {
    pub fn new(point: f64, lo: f64, hi: f64, epsilon: f64) -> Self {
        Self { point, lo, hi, epsilon }
    }

    /// Zero-width interval.
    pub fn exact(point: f64) -> Self {
        Self { point, lo: point, hi: point, epsilon: 0.0 }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    /// Periodic Hann, normalized by its power `Σw²`.
    Hann,
}

impl Window {
    fn coefficients(self, len: usize) -> Option<Vec<f64>> {
        match self {
            Window::Rectangular => None,
            Window::Hann => Some((0..len).map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / len as f64)).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub block_len: usize,
    /// Fraction of each block shared with the next, in `[0, 1)`.
    pub overlap: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self { block_len: 4096, overlap: 0.5, window: Window::Rectangular }
    }
}

impl WelchConfig {
    fn hop(&self) -> usize {
        (libm::round(self.block_len as f64 * (1.0 - self.overlap)) as usize).max(1)
    }

    fn validate(&self) -> Result<(), SpectralError> {
        if self.block_len < 8 || !self.block_len.is_power_of_two() {
            return Err(SpectralError::BadBlockLength(self.block_len));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(SpectralError::InvalidOverlap(self.overlap));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// One-sided PSD per bin.
    pub psd: Vec<f64>,
    /// Effective number of independent periodograms `γM`.
    pub effective_averages: f64,
    /// Target failure probability of intervals derived from this spectrum.
    pub epsilon: f64,
}

impl SpectrumEstimate {
    pub fn n_bins(&self) -> usize {
        self.psd.len()
    }

    /// Relative per-bin deviation `t` that holds jointly for all bins except
    /// with probability `epsilon`.
    pub fn tail_width(&self) -> f64 {
        let n = self.n_bins() as f64;
        libm::sqrt(8.0 * libm::log(2.0 * n / self.epsilon) / self.effective_averages)
    }

    /// Normalized frequency (cycles/sample) of each bin, in `[0, 0.5)`.
    pub fn frequencies(&self) -> Vec<f64> {
        bin_frequencies(self.n_bins())
    }

    fn check_epsilon(&self) -> Result<(), SpectralError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SpectralError::InvalidEpsilon(self.epsilon));
        }
        Ok(())
    }

    fn check_positive(&self) -> Result<(), SpectralError> {
        match self.psd.iter().position(|&v| !(v > 0.0)) {
            Some(j) => Err(SpectralError::ZeroBin(j)),
            None => Ok(()),
        }
    }
}

/// Normalized frequencies `j/(2·n_bins)` of a one-sided spectrum.
pub fn bin_frequencies(n_bins: usize) -> Vec<f64> {
    (0..n_bins).map(|j| j as f64 / (2 * n_bins) as f64).collect()
}

fn check_block(len: usize) -> Result<(), SpectralError> {
    if len < 8 || !len.is_power_of_two() {
        return Err(SpectralError::BadBlockLength(len));
    }
    Ok(())
}

fn raw_periodogram(block: &[f64], window: Option<&[f64]>, plan: &FftPlan) -> Vec<f64> {
    let mut buf: Vec<Complex> = match window {
        Some(w) => block.iter().zip(w).map(|(&x, &w)| Complex::new(x * w, 0.0)).collect(),
        None => block.iter().map(|&x| Complex::new(x, 0.0)).collect(),
    };
    plan.forward(&mut buf);
    let power = match window {
        Some(w) => w.iter().map(|w| w * w).sum::<f64>(),
        None => block.len() as f64,
    };
    buf.iter().map(|z| z.norm_sqr() / power).collect()
}

/// Two-sided periodogram `|X_j|²/N`, whose bin mean is the block's mean
/// square.
pub fn periodogram(block: &[f64]) -> Result<Vec<f64>, SpectralError> {
    windowed_periodogram(block, Window::Rectangular)
}

pub fn windowed_periodogram(block: &[f64], window: Window) -> Result<Vec<f64>, SpectralError> {
    check_block(block.len())?;
    let plan = FftPlan::new(block.len()).ok_or(SpectralError::BadBlockLength(block.len()))?;
    let w = window.coefficients(block.len());
    Ok(raw_periodogram(block, w.as_deref(), &plan))
}

/// Folds a two-sided periodogram of even length `N` onto `N/2` bins,
/// preserving the bin mean.
pub fn fold_one_sided(two_sided: &[f64]) -> Vec<f64> {
    let n = two_sided.len();
    let half = n / 2;
    let mut out = Vec::with_capacity(half);
    out.push(0.5 * (two_sided[0] + two_sided[half]));
    out.extend((1..half).map(|j| 0.5 * (two_sided[j] + two_sided[n - j])));
    out
}

/// Welch estimate with the sequential reducer.
pub fn welch_psd(samples: &[f64], config: &WelchConfig, epsilon: f64) -> Result<SpectrumEstimate, SpectralError> {
    welch_psd_with(samples, config, epsilon, &Sequential)
}

/// Welch estimate: mean of the one-sided periodograms of all full blocks.
///
/// Block periodograms are summed along a fixed pairwise tree, so the result
/// does not depend on how `joiner` schedules the work. The effective average
/// count is `γM` with `γ` the hop fraction (1 without overlap, 1/2 at 50%
/// overlap).
pub fn welch_psd_with<J: Joiner>(
    samples: &[f64],
    config: &WelchConfig,
    epsilon: f64,
    joiner: &J,
) -> Result<SpectrumEstimate, SpectralError> {
    config.validate()?;
    let len = config.block_len;
    if samples.len() < 2 * len {
        return Err(SpectralError::InsufficientData { needed: 2 * len, got: samples.len() });
    }
    let hop = config.hop();
    let blocks = (samples.len() - len) / hop + 1;
    let plan = FftPlan::new(len).ok_or(SpectralError::BadBlockLength(len))?;
    let window = config.window.coefficients(len);

    let leaf = |b: usize| {
        let start = b * hop;
        fold_one_sided(&raw_periodogram(&samples[start..start + len], window.as_deref(), &plan))
    };
    let combine = |mut a: Vec<f64>, b: Vec<f64>| {
        for (x, y) in a.iter_mut().zip(&b) {
            *x += y;
        }
        a
    };
    let mut psd = pairwise(joiner, 0, blocks, &leaf, &combine);
    let scale = 1.0 / blocks as f64;
    for v in psd.iter_mut() {
        *v *= scale;
    }
    let gamma = (hop as f64 / len as f64).min(1.0);
    Ok(SpectrumEstimate { psd, effective_averages: gamma * blocks as f64, epsilon })
}

/// Entropy rate `h = ½·mean_j log2(2πe·f₀_j)` in bits per sample, with
/// half-width `½·log2(e)·t`.
pub fn entropy_rate(spec: &SpectrumEstimate) -> Result<VarianceEstimate, SpectralError> {
    spec.check_positive()?;
    spec.check_epsilon()?;
    let n = spec.n_bins() as f64;
    let mean_log = spec.psd.iter().map(|&f| libm::log2(2.0 * PI * E * f)).sum::<f64>() / n;
    let point = 0.5 * mean_log;
    let half = 0.5 * core::f64::consts::LOG2_E * spec.tail_width();
    Ok(VarianceEstimate::new(point, point - half, point + half, spec.epsilon))
}

/// Conditional variance `σ_X² = 2^{2h}/(2πe)`, the geometric mean of the
/// bins. The interval follows from the entropy-rate interval, giving a
/// multiplicative factor `e^{±t}`.
pub fn conditional_variance(spec: &SpectrumEstimate) -> Result<VarianceEstimate, SpectralError> {
    let h = entropy_rate(spec)?;
    let to_var = |h: f64| libm::exp2(2.0 * h) / (2.0 * PI * E);
    Ok(VarianceEstimate::new(to_var(h.point), to_var(h.lo), to_var(h.hi), spec.epsilon))
}

/// Total variance `σ²`, the arithmetic mean of the bins, with interval
/// `(1 ± t)·σ²`.
pub fn total_variance(spec: &SpectrumEstimate) -> Result<VarianceEstimate, SpectralError> {
    spec.check_epsilon()?;
    let point = spec.psd.iter().sum::<f64>() / spec.n_bins() as f64;
    let t = spec.tail_width();
    if !(t < 1.0) {
        return Err(SpectralError::InsufficientAveraging(t));
    }
    Ok(VarianceEstimate::new(point, (1.0 - t) * point, (1.0 + t) * point, spec.epsilon))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessSpectrum {
    pub spectrum: SpectrumEstimate,
    /// Bins where the vacuum level met or exceeded the signal and the floor
    /// was applied.
    pub floored_bins: usize,
}

/// Relative floor applied to non-positive excess bins.
pub const EXCESS_FLOOR_RELATIVE: f64 = 1e-6;

/// Signal PSD minus the calibrated vacuum PSD, bin by bin.
///
/// Bins that would be at or below `1e-6 ×` the signal bin are raised to
/// that floor (or to the smallest positive normal number). The excess
/// spectrum inherits the signal's averaging count and failure probability.
pub fn excess_psd(signal: &SpectrumEstimate, vacuum: &[f64]) -> Result<ExcessSpectrum, SpectralError> {
    if signal.n_bins() != vacuum.len() {
        return Err(SpectralError::BinCountMismatch { signal: signal.n_bins(), vacuum: vacuum.len() });
    }
    let mut floored_bins = 0;
    let psd = signal
        .psd
        .iter()
        .zip(vacuum)
        .map(|(&s, &v)| {
            let floor = (EXCESS_FLOOR_RELATIVE * s).max(f64::MIN_POSITIVE);
            let d = s - v;
            if d > floor {
                d
            } else {
                floored_bins += 1;
                floor
            }
        })
        .collect();
    Ok(ExcessSpectrum {
        spectrum: SpectrumEstimate { psd, effective_averages: signal.effective_averages, epsilon: signal.epsilon },
        floored_bins,
    })
}

/// Normalized autocorrelation for lags `0..=max_lag`, averaged over
/// `n_segments` disjoint, individually mean-removed segments.
pub fn autocorrelation(samples: &[f64], max_lag: usize, n_segments: usize) -> Result<Vec<f64>, SpectralError> {
    let needed = n_segments.max(1) * (max_lag + 1);
    if n_segments == 0 || samples.len() < needed {
        return Err(SpectralError::InsufficientData { needed, got: samples.len() });
    }
    let seg_len = samples.len() / n_segments;
    let mut acc = vec![0.0; max_lag + 1];
    let mut centered = vec![0.0; seg_len];
    for seg in samples.chunks_exact(seg_len).take(n_segments) {
        let mean = seg.iter().sum::<f64>() / seg_len as f64;
        for (c, &x) in centered.iter_mut().zip(seg) {
            *c = x - mean;
        }
        let energy: f64 = centered.iter().map(|c| c * c).sum();
        if !(energy > 0.0) {
            return Err(SpectralError::ZeroVariance);
        }
        for (lag, a) in acc.iter_mut().enumerate() {
            let s: f64 = centered[..seg_len - lag].iter().zip(&centered[lag..]).map(|(x, y)| x * y).sum();
            *a += s / energy;
        }
    }
    for a in acc.iter_mut() {
        *a /= n_segments as f64;
    }
    acc[0] = 1.0;
    Ok(acc)
}

/// Q-Q pairs `(theoretical, empirical)` of the standardized samples against
/// the standard normal, at probabilities `(i + ½)/n_quantiles`.
pub fn qq_data(samples: &[f64], n_quantiles: usize) -> Result<Vec<(f64, f64)>, SpectralError> {
    if n_quantiles < 3 {
        return Err(SpectralError::BadQuantileCount(n_quantiles));
    }
    if samples.len() < 2 {
        return Err(SpectralError::InsufficientData { needed: 2, got: samples.len() });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(SpectralError::ZeroVariance);
    }
    let sd = libm::sqrt(var);
    let mut sorted: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    sorted.sort_unstable_by(f64::total_cmp);

    let last = sorted.len() - 1;
    Ok((0..n_quantiles)
        .map(|i| {
            let p = (i as f64 + 0.5) / n_quantiles as f64;
            // sample i sits at probability (i + ½)/N
            let pos = (p * n - 0.5).clamp(0.0, last as f64);
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(last);
            let frac = pos - lo as f64;
            let empirical = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
            (crate::normal::quantile(p), empirical)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn white(n: usize, seed: u64, sd: f64) -> Vec<f64> {
        let mut rng = CounterRng::new(seed);
        (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn flat(v: f64, bins: usize, m: f64, eps: f64) -> SpectrumEstimate {
        SpectrumEstimate { psd: vec![v; bins], effective_averages: m, epsilon: eps }
    }

    #[test]
    fn periodogram_rejects_bad_lengths() {
        assert_eq!(periodogram(&[0.0; 4]), Err(SpectralError::BadBlockLength(4)));
        assert_eq!(periodogram(&[0.0; 12]), Err(SpectralError::BadBlockLength(12)));
    }

    #[test]
    fn periodogram_of_zeros() {
        assert!(periodogram(&[0.0; 64]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn periodogram_sinusoid() {
        let n = 256;
        let (k, a) = (17, 3.0);
        let x: Vec<f64> = (0..n).map(|t| a * libm::cos(2.0 * PI * (k * t) as f64 / n as f64)).collect();
        let p = periodogram(&x).unwrap();
        let mean = p.iter().sum::<f64>() / n as f64;
        assert!((mean - a * a / 2.0).abs() < 1e-10);
        let line = (p[k] + p[n - k]) / n as f64;
        assert!((line - a * a / 2.0).abs() < 1e-10);
    }

    #[test]
    fn periodogram_white_noise_level() {
        let x = white(4096, 3, 2.0);
        let p = periodogram(&x).unwrap();
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        assert!((mean - 4.0).abs() < 0.2, "{mean}");
    }

    #[test]
    fn fold_preserves_mean() {
        let p: Vec<f64> = (0..16).map(|i| (i * i) as f64).collect();
        let f = fold_one_sided(&p);
        assert_eq!(f.len(), 8);
        let a = p.iter().sum::<f64>() / 16.0;
        let b = f.iter().sum::<f64>() / 8.0;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn welch_overlap_counts() {
        let x = white(8 * 64, 1, 1.0);
        let none = WelchConfig { block_len: 64, overlap: 0.0, window: Window::Rectangular };
        let s = welch_psd(&x, &none, 0.01).unwrap();
        assert_eq!(s.effective_averages, 8.0);
        let half = WelchConfig { overlap: 0.5, ..none };
        let s = welch_psd(&x, &half, 0.01).unwrap();
        // 15 blocks at hop 32
        assert_eq!(s.effective_averages, 7.5);
        assert!(matches!(welch_psd(&x[..100], &none, 0.01), Err(SpectralError::InsufficientData { .. })));
        let bad = WelchConfig { overlap: 1.0, ..none };
        assert!(matches!(welch_psd(&x, &bad, 0.01), Err(SpectralError::InvalidOverlap(_))));
    }

    #[test]
    fn welch_parseval_rectangular() {
        let mut x = white(64 * 1024, 9, 1.5);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let cfg = WelchConfig { block_len: 1024, overlap: 0.0, window: Window::Rectangular };
        let s = welch_psd(&x, &cfg, 0.01).unwrap();
        let bin_mean = s.psd.iter().sum::<f64>() / s.n_bins() as f64;
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((bin_mean - var).abs() < 1e-9 * var);
    }

    #[test]
    fn welch_hann_white_level() {
        let x = white(1 << 16, 4, 1.0);
        let cfg = WelchConfig { block_len: 512, overlap: 0.5, window: Window::Hann };
        let s = welch_psd(&x, &cfg, 0.01).unwrap();
        let bin_mean = s.psd.iter().sum::<f64>() / s.n_bins() as f64;
        assert!((bin_mean - 1.0).abs() < 0.02, "{bin_mean}");
    }

    #[test]
    fn entropy_rate_flat_and_limits() {
        let s = flat(3.0, 128, 100.0, 0.01);
        let h = entropy_rate(&s).unwrap();
        assert!((h.point - 0.5 * libm::log2(2.0 * PI * E * 3.0)).abs() < 1e-12);
        let wide = entropy_rate(&flat(3.0, 128, 100.0, 1e-300)).unwrap();
        assert!(wide.half_width() > h.half_width());
        let narrow = entropy_rate(&flat(3.0, 128, 1e12, 0.01)).unwrap();
        assert!(narrow.half_width() < 1e-3);
    }

    #[test]
    fn two_level_spectrum() {
        let mut psd = vec![1.0; 64];
        psd.extend(vec![4.0; 64]);
        let s = SpectrumEstimate { psd, effective_averages: 1e6, epsilon: 0.01 };
        let h = entropy_rate(&s).unwrap();
        assert!((h.point - 0.5 * libm::log2(2.0 * PI * E * 2.0)).abs() < 1e-12);
        assert!((conditional_variance(&s).unwrap().point - 2.0).abs() < 1e-12);
        assert!((total_variance(&s).unwrap().point - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_bin_is_rejected() {
        let mut s = flat(1.0, 16, 10.0, 0.1);
        s.psd[3] = 0.0;
        assert_eq!(entropy_rate(&s), Err(SpectralError::ZeroBin(3)));
        assert_eq!(conditional_variance(&s), Err(SpectralError::ZeroBin(3)));
    }

    #[test]
    fn interval_formulas() {
        let s = flat(2.0, 2048, 1024.0, 1e-3);
        let t = libm::sqrt(8.0 * libm::log(2.0 * 2048.0 / 1e-3) / 1024.0);
        let tot = total_variance(&s).unwrap();
        assert!((tot.lo - 2.0 * (1.0 - t)).abs() < 1e-12 && (tot.hi - 2.0 * (1.0 + t)).abs() < 1e-12);
        let cond = conditional_variance(&s).unwrap();
        assert!((cond.lo - 2.0 * libm::exp(-t)).abs() < 1e-12);
        assert!((cond.hi - 2.0 * libm::exp(t)).abs() < 1e-12);
        assert!(matches!(total_variance(&flat(2.0, 2048, 4.0, 1e-3)), Err(SpectralError::InsufficientAveraging(_))));
    }

    #[test]
    fn excess_subtraction() {
        let s = SpectrumEstimate { psd: vec![5.0, 6.0, 7.0], effective_averages: 10.0, epsilon: 0.1 };
        let e = excess_psd(&s, &[0.0; 3]).unwrap();
        assert_eq!(e.spectrum.psd, s.psd);
        assert_eq!(e.floored_bins, 0);
        let e = excess_psd(&s, &s.psd).unwrap();
        assert_eq!(e.floored_bins, 3);
        for (a, b) in e.spectrum.psd.iter().zip([5e-6, 6e-6, 7e-6]) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!(matches!(excess_psd(&s, &[1.0]), Err(SpectralError::BinCountMismatch { .. })));
    }

    #[test]
    fn autocorrelation_white_and_errors() {
        let x = white(200_000, 5, 1.0);
        let c = autocorrelation(&x, 10, 100).unwrap();
        assert_eq!(c[0], 1.0);
        let bound = 4.0 / libm::sqrt(200_000.0);
        assert!(c[1..].iter().all(|v| v.abs() < bound), "{c:?}");
        assert!(matches!(autocorrelation(&x[..50], 10, 10), Err(SpectralError::InsufficientData { .. })));
        assert_eq!(autocorrelation(&[1.0; 100], 2, 2), Err(SpectralError::ZeroVariance));
    }

    #[test]
    fn qq_uniform_is_s_shaped() {
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let qq = qq_data(&x, 101).unwrap();
        for &(theory, emp) in &qq {
            let p = 0.5 * libm::erfc(-theory / core::f64::consts::SQRT_2);
            let expected = libm::sqrt(3.0) * (2.0 * p - 1.0);
            assert!((emp - expected).abs() < 1e-3);
        }
        // tails compressed relative to the Gaussian
        assert!(qq[0].1 > qq[0].0 && qq[100].1 < qq[100].0);
        assert!(matches!(qq_data(&x, 2), Err(SpectralError::BadQuantileCount(2))));
    }
}
