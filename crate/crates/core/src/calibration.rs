//! Transfer-function extraction from beat-note sweeps and the conservative
//! lower bound on the vacuum-fluctuation PSD.

use alloc::vec::Vec;

use crate::spectral::{fold_one_sided, windowed_periodogram, SpectralError, Window};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("no spectral line above background at {nu} Hz (peak/background = {ratio})")]
    LineNotFound { nu: f64, ratio: f64 },
    #[error("frequency {nu} Hz is not resolvable in a record of {len} samples at {sample_rate} Hz")]
    Unresolvable { nu: f64, len: usize, sample_rate: f64 },
    #[error("need at least 3 sweep points, got {0}")]
    TooFewPoints(usize),
    #[error("duplicate sweep frequency {0} Hz")]
    DuplicateFrequency(f64),
    #[error("argument outside its domain: {0}")]
    DomainError(&'static str),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Largest block length used for line-power estimation.
pub const BEAT_BLOCK: usize = 4096;
/// Minimum line-to-background power ratio (10 dB).
pub const MIN_LINE_SNR: f64 = 10.0;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean-square power of the spectral line at `nu`.
///
/// The record is cut into non-overlapping blocks of up to [`BEAT_BLOCK`]
/// samples whose Hann-windowed periodograms are averaged; the window keeps
/// broadband leakage out of bins where the gain is small. The line power is
/// the excess over background of the three bins nearest `nu`, where the
/// background is the median of the bins two to eight positions away on
/// either side. A sinusoid at a bin center is captured exactly.
pub fn beat_power(record: &[f64], nu: f64, sample_rate: f64) -> Result<f64, CalibrationError> {
    let unresolvable = CalibrationError::Unresolvable { nu, len: record.len(), sample_rate };
    if !(sample_rate > 0.0 && nu > 0.0 && nu < sample_rate / 2.0) {
        return Err(unresolvable);
    }
    if nu * record.len() as f64 / sample_rate < 2.0 || record.len() < 32 {
        return Err(unresolvable);
    }
    let block = BEAT_BLOCK.min(1 << (usize::BITS - 1 - record.len().leading_zeros()));
    let n_bins = block / 2;
    let mut avg = alloc::vec![0.0; n_bins];
    let blocks = record.len() / block;
    for chunk in record.chunks_exact(block) {
        for (a, v) in avg.iter_mut().zip(fold_one_sided(&windowed_periodogram(chunk, Window::Hann)?)) {
            *a += v;
        }
    }
    for a in avg.iter_mut() {
        *a /= blocks as f64;
    }

    let kc = libm::round(nu / sample_rate * block as f64) as usize;
    if kc == 0 || kc >= n_bins {
        return Err(unresolvable);
    }
    let neighbors: Vec<f64> = (kc.saturating_sub(8)..=(kc + 8).min(n_bins - 1))
        .filter(|&j| j != 0 && j.abs_diff(kc) >= 2)
        .map(|j| avg[j])
        .collect();
    let background = if neighbors.is_empty() { 0.0 } else { median(neighbors) };
    let line = (kc - 1)..=(kc + 1).min(n_bins - 1);
    let peak = line.clone().map(|j| avg[j]).fold(f64::MIN, f64::max);
    let ratio = (peak - background) / background;
    if !(ratio >= MIN_LINE_SNR) {
        return Err(CalibrationError::LineNotFound { nu, ratio });
    }
    let excess: f64 = line.map(|j| (avg[j] - background).max(0.0)).sum();
    Ok(excess / n_bins as f64)
}

/// Measured gain of the detection chain versus frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    /// Sweep frequencies in Hz, strictly increasing.
    pub freqs: Vec<f64>,
    /// Gain normalized to a maximum of 1.
    pub tf: Vec<f64>,
    pub p_sig_used: f64,
    /// `TF̃ = tf·peak_power` is the attenuator-corrected beat power.
    peak_power: f64,
}

impl TransferFunction {
    /// Builds a transfer function from already measured beat powers
    /// (attenuator-corrected).
    pub fn from_powers(mut points: Vec<(f64, f64)>, p_sig: f64) -> Result<Self, CalibrationError> {
        if points.len() < 3 {
            return Err(CalibrationError::TooFewPoints(points.len()));
        }
        if !(p_sig > 0.0 && p_sig.is_finite()) {
            return Err(CalibrationError::DomainError("signal power must be positive"));
        }
        if points.iter().any(|&(f, p)| !(f.is_finite() && p >= 0.0 && p.is_finite())) {
            return Err(CalibrationError::DomainError(
                "sweep frequencies and powers must be finite, powers non-negative",
            ));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = points.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CalibrationError::DuplicateFrequency(w[0].0));
        }
        let peak_power = points.iter().map(|p| p.1).fold(0.0, f64::max);
        if peak_power <= 0.0 {
            return Err(CalibrationError::DomainError("all beat powers are zero"));
        }
        Ok(Self {
            freqs: points.iter().map(|p| p.0).collect(),
            tf: points.iter().map(|p| p.1 / peak_power).collect(),
            p_sig_used: p_sig,
            peak_power,
        })
    }

    /// Un-normalized beat powers `TF̃(ν)`.
    pub fn beat_powers(&self) -> Vec<f64> {
        self.tf.iter().map(|t| t * self.peak_power).collect()
    }

    /// Normalized gain at `nu` by linear interpolation, 0 outside the sweep.
    pub fn gain_at(&self, nu: f64) -> f64 {
        interpolate(&self.freqs, &self.tf, nu)
    }

    /// First frequency above the peak where the gain falls to one half.
    pub fn minus_3db_frequency(&self) -> Option<f64> {
        let peak = self.tf.iter().position(|&t| t == 1.0)?;
        (peak + 1..self.tf.len()).find(|&i| self.tf[i] <= 0.5).map(|i| {
            let (f0, f1, t0, t1) = (self.freqs[i - 1], self.freqs[i], self.tf[i - 1], self.tf[i]);
            f0 + (t0 - 0.5) / (t0 - t1) * (f1 - f0)
        })
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if !(x >= first && x <= last) {
        return 0.0;
    }
    let i = xs.partition_point(|&f| f <= x);
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}

/// Transfer function from a frequency sweep of beat records taken at
/// constant signal power through an attenuator of `attenuator_db`.
pub fn build_transfer_function(
    sweep: &[(f64, &[f64])],
    p_sig: f64,
    sample_rate: f64,
    attenuator_db: f64,
) -> Result<TransferFunction, CalibrationError> {
    if sweep.len() < 3 {
        return Err(CalibrationError::TooFewPoints(sweep.len()));
    }
    let undo = libm::pow(10.0, attenuator_db / 10.0);
    let points = sweep
        .iter()
        .map(|&(nu, record)| Ok((nu, beat_power(record, nu, sample_rate)? * undo)))
        .collect::<Result<Vec<_>, CalibrationError>>()?;
    TransferFunction::from_powers(points, p_sig)
}

/// Lower bound `ħω_L·TF̃(ν)/P_sig` on the one-sided vacuum PSD (per Hz) at
/// each sweep frequency.
pub fn vacuum_psd_bound(tf: &TransferFunction, photon_energy: f64) -> Vec<f64> {
    let scale = photon_energy / tf.p_sig_used;
    tf.beat_powers().into_iter().map(|p| p * scale).collect()
}

/// The vacuum PSD bound resampled onto the `n_bins` one-sided Welch bins of
/// a capture at `sample_rate`, in per-sample bin units (per-Hz value times
/// `sample_rate/2`).
///
/// A bin that coincides with a sweep frequency takes that point's bound. A
/// bin between two sweep points takes the smaller of the two, and bins
/// outside the swept range get 0. Only bins that were swept directly are
/// guaranteed to stay below the true vacuum PSD.
pub fn vacuum_psd_bound_on_bins(
    tf: &TransferFunction,
    photon_energy: f64,
    sample_rate: f64,
    n_bins: usize,
) -> Vec<f64> {
    let per_hz = vacuum_psd_bound(tf, photon_energy);
    let (first, last) = (tf.freqs[0], tf.freqs[tf.freqs.len() - 1]);
    let tol = 1e-9 * sample_rate;
    (0..n_bins)
        .map(|j| {
            let nu = j as f64 * sample_rate / (2 * n_bins) as f64;
            if nu < first - tol || nu > last + tol {
                return 0.0;
            }
            let i = tf.freqs.partition_point(|&f| f < nu - tol);
            let value = if (tf.freqs[i] - nu).abs() <= tol { per_hz[i] } else { per_hz[i - 1].min(per_hz[i]) };
            value * sample_rate / 2.0
        })
        .collect()
}

/// `(η₁(1−r) + η₂r) / ((η₁+η₂)²·r(1−r))`, the ratio between the true vacuum
/// PSD and its calibrated bound at unit visibility. At least 1 on the
/// physical domain.
pub fn cmrr_factor(eta1: f64, eta2: f64, r: f64) -> Result<f64, CalibrationError> {
    if !(eta1 > 0.0 && eta1 <= 1.0 && eta2 > 0.0 && eta2 <= 1.0) {
        return Err(CalibrationError::DomainError("quantum efficiencies must lie in (0, 1]"));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(CalibrationError::DomainError("splitting ratio must lie in (0, 1)"));
    }
    let s = eta1 + eta2;
    Ok((eta1 * (1.0 - r) + eta2 * r) / (s * s * r * (1.0 - r)))
}
