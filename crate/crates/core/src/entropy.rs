//! Min-entropy of a digitized homodyne signal against quantum side
//! information.
//!
//! A correlated (finite-bandwidth) Gaussian source is mapped onto an
//! effective iid model with gain `g` and mean photon number `n`, obtained
//! from three measured variances: the total signal variance σ², the
//! conditional signal variance σ_X² and the conditional excess-noise
//! variance σ_U². The iid model then feeds a closed-form family of lower
//! bounds parameterized by `δ > 0`, which is maximized numerically.
//!
//! All entropies are in bits. All of `g`, Δx, R and the variances share one
//! unit (ADC counts in practice); only the ratios Δx/g and R/g matter.

use core::f64::consts::{PI, SQRT_2};
use core::fmt;

use crate::spectral::VarianceEstimate;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("invalid ADC: need 2..=31 bits and a positive finite range")]
    InvalidAdc,
    #[error("degenerate model: conditional variance {conditional} does not exceed excess variance {excess}")]
    DegenerateModel { conditional: f64, excess: f64 },
    #[error("inconsistent model: total variance {total} is below conditional variance {conditional}")]
    InconsistentModel { total: f64, conditional: f64 },
    #[error("delta must be positive, got {0}")]
    InvalidDelta(f64),
    #[error("classical noise variance must be non-negative, got {0}")]
    NegativeNoise(f64),
    #[error("invalid iid parameters: gain {gain}, photon number {photon_number}")]
    InvalidParams { gain: f64, photon_number: f64 },
    #[error("confidence interval [{lo}, {hi}] does not bracket the estimate {point}")]
    InvalidInterval { point: f64, lo: f64, hi: f64 },
}

/// ADC with `d = 2^bits` output bins over the range `[-R, R]`.
///
/// Bin 1 collects everything at or below `-R`, bin `d` everything above `R`,
/// and bins `2..=d-1` are right-closed intervals of width
/// `Δx = 2R/(d-2)` tiling `(-R, R]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcSpec {
    bits: u32,
    range: f64,
    bin_width: f64,
}

impl AdcSpec {
    pub fn new(bits: u32, range: f64) -> Result<Self, EntropyError> {
        if !(2..=31).contains(&bits) || !(range.is_finite() && range > 0.0) {
            return Err(EntropyError::InvalidAdc);
        }
        let d = (1u64 << bits) as f64;
        Ok(Self { bits, range, bin_width: 2.0 * range / (d - 2.0) })
    }

    /// ADC whose range is chosen so that interior bins have width `bin_width`.
    pub fn from_bin_width(bits: u32, bin_width: f64) -> Result<Self, EntropyError> {
        if !(2..=31).contains(&bits) || !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(EntropyError::InvalidAdc);
        }
        let d = (1u64 << bits) as f64;
        Self::new(bits, bin_width * (d - 2.0) / 2.0)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Number of bins `d`.
    pub fn bins(&self) -> u64 {
        1u64 << self.bits
    }

    /// One-based bin index `k` of `x`.
    pub fn bin_index(&self, x: f64) -> u64 {
        let d = self.bins();
        if x <= -self.range || x.is_nan() {
            return 1;
        }
        if x > self.range {
            return d;
        }
        let k = 1.0 + libm::ceil((x + self.range) / self.bin_width);
        (k as u64).clamp(2, d - 1)
    }

    /// Signed output code of bin `k`: `k - 1 - 2^(bits-1)`.
    pub fn code_of_bin(&self, k: u64) -> i64 {
        k as i64 - 1 - (1i64 << (self.bits - 1))
    }

    pub fn bin_of_code(&self, code: i64) -> u64 {
        (code + 1 + (1i64 << (self.bits - 1))) as u64
    }

    /// Center `a_k` of the bin with the given code. Saturation bins map to
    /// `∓(R + Δx/2)`.
    pub fn code_center(&self, code: i64) -> f64 {
        (code as f64 + 0.5) * self.bin_width
    }
}

/// Effective iid model: gain `g` and mean photon number `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidParams {
    pub gain: f64,
    pub photon_number: f64,
}

impl IidParams {
    pub fn new(gain: f64, photon_number: f64) -> Result<Self, EntropyError> {
        if !(gain.is_finite() && gain > 0.0 && photon_number.is_finite() && photon_number >= 0.0) {
            return Err(EntropyError::InvalidParams { gain, photon_number });
        }
        Ok(Self { gain, photon_number })
    }

    /// Solves `σ_X² = g²(1+2n)`, `σ_U² = 2g²n` and folds the classical part
    /// `ζ = σ² − σ_X²` into `n`, giving `g = √(σ_X²−σ_U²)` and
    /// `n = σ²/(2(σ_X²−σ_U²)) − 1/2`.
    pub fn from_variances(total: f64, conditional: f64, excess: f64) -> Result<Self, EntropyError> {
        if !(conditional > excess) {
            return Err(EntropyError::DegenerateModel { conditional, excess });
        }
        if !(total >= conditional) {
            return Err(EntropyError::InconsistentModel { total, conditional });
        }
        let g2 = conditional - excess;
        let n = total / (2.0 * g2) - 0.5;
        Self::new(libm::sqrt(g2), n.max(0.0))
    }
}

/// `n + ζ/(2g²)`: classical noise of variance `ζ` treated as quantum noise.
pub fn fold_classical_noise(photon_number: f64, gain: f64, zeta: f64) -> Result<f64, EntropyError> {
    if !(zeta >= 0.0) {
        return Err(EntropyError::NegativeNoise(zeta));
    }
    Ok(photon_number + zeta / (2.0 * gain * gain))
}

/// Characterized variances with their confidence intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub total: VarianceEstimate,
    pub conditional: VarianceEstimate,
    pub excess: VarianceEstimate,
    pub eps_pe: f64,
}

impl NoiseModel {
    pub fn new(
        total: VarianceEstimate,
        conditional: VarianceEstimate,
        excess: VarianceEstimate,
        eps_pe: f64,
    ) -> Result<Self, EntropyError> {
        for v in [&total, &conditional, &excess] {
            if !(v.lo <= v.point && v.point <= v.hi) {
                return Err(EntropyError::InvalidInterval { point: v.point, lo: v.lo, hi: v.hi });
            }
        }
        if !(conditional.point > excess.point) {
            return Err(EntropyError::DegenerateModel { conditional: conditional.point, excess: excess.point });
        }
        if !(total.point >= conditional.point) {
            return Err(EntropyError::InconsistentModel { total: total.point, conditional: conditional.point });
        }
        Ok(Self { total, conditional, excess, eps_pe })
    }

    /// Point-estimate model with zero-width intervals.
    pub fn from_points(total: f64, conditional: f64, excess: f64, eps_pe: f64) -> Result<Self, EntropyError> {
        Self::new(
            VarianceEstimate::exact(total),
            VarianceEstimate::exact(conditional),
            VarianceEstimate::exact(excess),
            eps_pe,
        )
    }

    pub fn iid_params(&self) -> Result<IidParams, EntropyError> {
        IidParams::from_variances(self.total.point, self.conditional.point, self.excess.point)
    }

    /// `σ_X²/σ²`; 1 for an iid source.
    pub fn temporal_correlation(&self) -> f64 {
        self.conditional.point / self.total.point
    }

    /// Conditional quantum-to-excess noise ratio `10·log10((σ_X²−σ_U²)/σ_U²)`.
    pub fn quantum_to_excess_db(&self) -> f64 {
        10.0 * libm::log10((self.conditional.point - self.excess.point) / self.excess.point)
    }
}

#[inline]
fn erf_scale(n: f64, delta: f64) -> f64 {
    libm::sqrt(delta / (4.0 * n * (n + 1.0 + delta) + 2.0 * delta))
}

fn bound_unchecked(p: &IidParams, adc: &AdcSpec, delta: f64) -> f64 {
    let n = p.photon_number;
    let a = erf_scale(n, delta);
    let prefactor = (n + delta) * (1.0 + n + delta) / delta;
    let interior = libm::erf(a * adc.bin_width / (2.0 * p.gain));
    let tail = 0.5 * libm::erfc(a * adc.range / p.gain);
    -libm::log2(prefactor * interior.max(tail))
}

/// Lower bound on `H_min(X̄|E)` for a given `δ`. The value may be negative
/// for a poor choice of `δ`; it is not clamped here.
pub fn min_entropy_lower_bound(p: &IidParams, adc: &AdcSpec, delta: f64) -> Result<f64, EntropyError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(EntropyError::InvalidDelta(delta));
    }
    Ok(bound_unchecked(p, adc, delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaOptimum {
    pub delta: f64,
    pub h_min: f64,
}

const SCAN_POINTS: usize = 96;
const DECADES: f64 = 6.0;

/// Maximizes the lower bound over `δ`.
///
/// A coarse scan over `log10 δ ∈ [log10 n − 6, log10 n + 6]` (centered at
/// `10⁻⁶` when `n = 0`) brackets the maximum, which is then refined by
/// golden-section search to a relative tolerance of 1e-6 in `δ`. The result
/// is never worse than `δ = n`.
pub fn optimize_delta(p: &IidParams, adc: &AdcSpec) -> DeltaOptimum {
    let n = p.photon_number;
    let center = if n > 0.0 { libm::log10(n) } else { -6.0 };
    let lo = center - DECADES;
    let step = 2.0 * DECADES / SCAN_POINTS as f64;
    let eval = |t: f64| {
        let h = bound_unchecked(p, adc, libm::pow(10.0, t));
        if h.is_nan() {
            f64::NEG_INFINITY
        } else {
            h
        }
    };

    let (best_i, best_h) = (0..=SCAN_POINTS)
        .map(|i| (i, eval(lo + i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut a = lo + best_i.saturating_sub(1) as f64 * step;
    let mut b = lo + (best_i + 1).min(SCAN_POINTS) as f64 * step;
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let tol = libm::log10(1.0 + 1e-6);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }

    let mut best = DeltaOptimum { delta: libm::pow(10.0, lo + best_i as f64 * step), h_min: best_h };
    for t in [c, d, 0.5 * (a + b)] {
        let h = eval(t);
        if h > best.h_min {
            best = DeltaOptimum { delta: libm::pow(10.0, t), h_min: h };
        }
    }
    if n > 0.0 {
        let h = bound_unchecked(p, adc, n);
        if h > best.h_min {
            best = DeltaOptimum { delta: n, h_min: h };
        }
    }
    best
}

/// Min-entropy of the discretized signal conditioned on the outcome of an
/// ideal homodyne measurement by the adversary, with the ADC range chosen
/// optimally. An upper bound on the quantum-side-information lower bound.
pub fn homodyne_upper_bound(p: &IidParams, adc: &AdcSpec) -> f64 {
    let n = p.photon_number;
    -libm::log2(libm::erf(adc.bin_width / p.gain * libm::sqrt(2.0 + 4.0 * n) / 4.0))
}

/// Leading-order (small Δx) lower bound at `δ = n` with optimal range.
pub fn lower_bound_fine_resolution(p: &IidParams, bin_width: f64) -> f64 {
    let n = p.photon_number;
    -libm::log2(bin_width / p.gain) - libm::log2(SQRT_2 * (2.0 * n + 1.0) / libm::sqrt(PI * (4.0 * n + 3.0)))
}

/// Leading-order (small Δx) homodyne upper bound.
pub fn homodyne_upper_fine_resolution(p: &IidParams, bin_width: f64) -> f64 {
    let n = p.photon_number;
    -libm::log2(bin_width / p.gain) - libm::log2(libm::sqrt((1.0 + 2.0 * n) / (2.0 * PI)))
}

/// Extractable bits `⌊N·h − 2·log2(1/ε_hash)⌋`, clamped at zero.
///
/// `eps_hash` above 1 is treated as 1; a NaN input extracts nothing.
pub fn secure_length(samples: u64, h_min: f64, eps_hash: f64) -> u64 {
    let eps = eps_hash.min(1.0);
    let len = samples as f64 * h_min - 2.0 * libm::log2(1.0 / eps);
    if len.is_nan() || len <= 0.0 {
        return 0;
    }
    libm::floor(len) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    fn pick(self, v: &VarianceEstimate) -> f64 {
        match self {
            Side::Lower => v.lo,
            Side::Upper => v.hi,
        }
    }

    fn sign(self) -> char {
        match self {
            Side::Lower => '-',
            Side::Upper => '+',
        }
    }
}

/// Which interval endpoint was used for σ², σ_X² and σ_U².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner {
    pub total: Side,
    pub conditional: Side,
    pub excess: Side,
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sigma2{},sigmaX2{},sigmaU2{}", self.total.sign(), self.conditional.sign(), self.excess.sign())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub corner: Corner,
    pub params: IidParams,
    pub optimum: DeltaOptimum,
    pub upper_bound: f64,
}

/// Minimum of the optimized bound over all eight corners of the confidence
/// box. Corners with `σ² < σ_X²` cannot occur and are skipped; any corner
/// with `σ_X² ≤ σ_U²` makes the whole model degenerate.
pub fn worst_case_min_entropy(model: &NoiseModel, adc: &AdcSpec) -> Result<WorstCase, EntropyError> {
    let sides = [Side::Lower, Side::Upper];
    let mut worst: Option<WorstCase> = None;
    for total in sides {
        for conditional in sides {
            for excess in sides {
                let corner = Corner { total, conditional, excess };
                let s2 = total.pick(&model.total);
                let sx2 = conditional.pick(&model.conditional);
                let su2 = excess.pick(&model.excess);
                let params = match IidParams::from_variances(s2, sx2, su2) {
                    Ok(p) => p,
                    Err(EntropyError::InconsistentModel { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let optimum = optimize_delta(&params, adc);
                if worst.is_none_or(|w| optimum.h_min < w.optimum.h_min) {
                    worst =
                        Some(WorstCase { corner, params, optimum, upper_bound: homodyne_upper_bound(&params, adc) });
                }
            }
        }
    }
    // The (σ²⁺, σ_X²⁻) corner is always consistent because the point
    // estimates are, so at least one corner was evaluated.
    worst.ok_or(EntropyError::InconsistentModel { total: model.total.hi, conditional: model.conditional.lo })
}

/// Outcome of the entropy stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// Worst-case bound clamped to `[0, bits]`.
    pub h_min_bits: f64,
    pub raw_h_min: f64,
    pub delta_star: f64,
    pub corner: Corner,
    pub params: IidParams,
    pub upper_bound_homodyne: f64,
    pub block_samples: u64,
    pub secure_len_bits: u64,
    pub eps_hash: f64,
    pub eps_pe: f64,
}

impl EntropyReport {
    pub fn new(worst: &WorstCase, adc: &AdcSpec, block_samples: u64, eps_hash: f64, eps_pe: f64) -> Self {
        let h = worst.optimum.h_min.clamp(0.0, adc.bits() as f64);
        Self {
            h_min_bits: h,
            raw_h_min: worst.optimum.h_min,
            delta_star: worst.optimum.delta,
            corner: worst.corner,
            params: worst.params,
            upper_bound_homodyne: worst.upper_bound,
            block_samples,
            secure_len_bits: secure_length(block_samples, h, eps_hash),
            eps_hash,
            eps_pe,
        }
    }

    /// `2·log2(1/ε_hash)`, the leftover-hash penalty.
    pub fn hash_penalty_bits(&self) -> f64 {
        2.0 * libm::log2(1.0 / self.eps_hash.min(1.0))
    }
}

impl fmt::Display for EntropyReport {
    /// `key: value` lines with stable key names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "h_min_bits: {}", self.h_min_bits)?;
        writeln!(f, "h_min_raw_bits: {}", self.raw_h_min)?;
        writeln!(f, "delta_star: {}", self.delta_star)?;
        writeln!(f, "corner: {}", self.corner)?;
        writeln!(f, "gain: {}", self.params.gain)?;
        writeln!(f, "photon_number: {}", self.params.photon_number)?;
        writeln!(f, "upper_bound_homodyne_bits: {}", self.upper_bound_homodyne)?;
        writeln!(f, "block_samples: {}", self.block_samples)?;
        writeln!(f, "secure_len_bits: {}", self.secure_len_bits)?;
        writeln!(f, "eps_hash: {:e}", self.eps_hash)?;
        writeln!(f, "eps_pe: {:e}", self.eps_pe)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_point() -> NoiseModel {
        NoiseModel::new(
            VarianceEstimate::new(3.96e7, 3.96e7 - 0.09e7, 3.96e7 + 0.09e7, 1e-10),
            VarianceEstimate::new(3.29e7, 3.29e7 - 0.07e7, 3.29e7 + 0.07e7, 1e-10),
            VarianceEstimate::new(2.49e7, 2.49e7 - 0.06e7, 2.49e7 + 0.06e7, 1e-10),
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn adc_partition() {
        let adc = AdcSpec::new(3, 3.0).unwrap();
        assert_eq!(adc.bins(), 8);
        assert!((adc.bin_width() - 1.0).abs() < 1e-15);
        assert_eq!(adc.bin_index(-4.0), 1);
        assert_eq!(adc.bin_index(-3.0), 1);
        assert_eq!(adc.bin_index(-2.9), 2);
        assert_eq!(adc.bin_index(-2.0), 2);
        assert_eq!(adc.bin_index(3.0), 7);
        assert_eq!(adc.bin_index(3.0001), 8);
        assert!(AdcSpec::new(1, 1.0).is_err());
        assert!(AdcSpec::new(8, 0.0).is_err());
        // centers land in their own bin
        for k in 2..8 {
            let code = adc.code_of_bin(k);
            assert_eq!(adc.bin_index(adc.code_center(code)), k);
            assert_eq!(adc.bin_of_code(code), k);
        }
    }

    #[test]
    fn iid_params_from_reference_point_points() {
        let p = IidParams::from_variances(3.96e7, 3.29e7, 2.49e7).unwrap();
        // g = sqrt(0.8e7), n = 3.96/(2*0.8) - 0.5
        assert!((p.gain - 2_828.427_124_746_19).abs() < 1e-9);
        assert!((p.photon_number - 1.975).abs() < 1e-12);
    }

    #[test]
    fn iid_params_pure_vacuum_and_errors() {
        let p = IidParams::from_variances(1.0, 1.0, 0.0).unwrap();
        assert_eq!((p.gain, p.photon_number), (1.0, 0.0));
        assert!(matches!(IidParams::from_variances(2.0, 1.0, 1.0), Err(EntropyError::DegenerateModel { .. })));
        assert!(matches!(IidParams::from_variances(0.5, 1.0, 0.1), Err(EntropyError::InconsistentModel { .. })));
    }

    #[test]
    fn fold_examples() {
        assert_eq!(fold_classical_noise(0.7, 3.0, 0.0).unwrap(), 0.7);
        assert_eq!(fold_classical_noise(0.0, 1.0, 2.0).unwrap(), 1.0);
        assert!(matches!(fold_classical_noise(0.0, 1.0, -1.0), Err(EntropyError::NegativeNoise(_))));
    }

    #[test]
    fn fold_matches_one_step_formula_on_reference_point() {
        let (s2, sx2, su2) = (3.96e7, 3.29e7, 2.49e7);
        let g2: f64 = sx2 - su2;
        let raw_n = su2 / (2.0 * g2);
        let two_step = fold_classical_noise(raw_n, g2.sqrt(), s2 - sx2).unwrap();
        let one_step = IidParams::from_variances(s2, sx2, su2).unwrap().photon_number;
        assert!((two_step - one_step).abs() < 1e-14 * one_step);
    }

    #[test]
    fn bound_rejects_bad_delta() {
        let p = IidParams::new(1.0, 1.0).unwrap();
        let adc = AdcSpec::new(8, 10.0).unwrap();
        assert!(matches!(min_entropy_lower_bound(&p, &adc, 0.0), Err(EntropyError::InvalidDelta(_))));
        assert!(min_entropy_lower_bound(&p, &adc, -1.0).is_err());
    }

    #[test]
    fn vacuum_limit_small_delta() {
        // n = 0: prefactor (1+δ), erf argument Δx/(2√2 g)
        let p = IidParams::new(2.0, 0.0).unwrap();
        let adc = AdcSpec::from_bin_width(16, 0.5).unwrap();
        let h = min_entropy_lower_bound(&p, &adc, 1e-12).unwrap();
        let expected = -libm::log2(libm::erf(0.5 / (2.0 * SQRT_2 * 2.0)));
        assert!((h - expected).abs() < 1e-9, "{h} vs {expected}");
    }

    #[test]
    fn fine_resolution_asymptote_at_delta_equal_n() {
        let p = IidParams::new(1.0, 1.0).unwrap();
        let adc = AdcSpec::from_bin_width(31, 0.001).unwrap();
        let h = min_entropy_lower_bound(&p, &adc, 1.0).unwrap();
        let asymptote = -libm::log2(0.001) - libm::log2(SQRT_2 * 3.0 / libm::sqrt(7.0 * PI));
        assert!((h - asymptote).abs() < 1e-3);
        assert!((lower_bound_fine_resolution(&p, 0.001) - asymptote).abs() < 1e-12);
    }

    #[test]
    fn optimum_beats_delta_equal_n_and_grid() {
        let p = IidParams::new(1.0, 100.0).unwrap();
        let adc = AdcSpec::new(14, 100.0).unwrap();
        let adc = AdcSpec { bin_width: 0.01, ..adc };
        let opt = optimize_delta(&p, &adc);
        for k in -3..=3 {
            let d = 100.0 * libm::pow(10.0, k as f64);
            assert!(opt.h_min >= bound_unchecked(&p, &adc, d) - 1e-12);
        }
    }

    #[test]
    fn homodyne_bound_values() {
        let p = IidParams::new(1.0, 0.0).unwrap();
        let adc = AdcSpec::from_bin_width(8, 1.0).unwrap();
        // erf(√2/4) = erf(0.3535533905932738) = 0.38292492254802624
        let expected = -libm::log2(0.382_924_922_548_026_2);
        assert!((homodyne_upper_bound(&p, &adc) - expected).abs() < 1e-12);
        let coarse = AdcSpec::from_bin_width(8, 1e6).unwrap();
        assert!(homodyne_upper_bound(&p, &coarse).abs() < 1e-12);
    }

    #[test]
    fn secure_length_examples() {
        assert_eq!(secure_length(80, 10.5, 1.0), 840);
        assert_eq!(secure_length(1, 8.0, libm::pow(2.0, -16.0)), 0);
        assert_eq!(secure_length(0, 8.0, 0.5), 0);
        assert_eq!(secure_length(10, f64::NAN, 0.5), 0);
        // 80·10.75 − 219.3 = 640.7
        let eps = libm::pow(2.0, -219.3 / 2.0);
        assert_eq!(secure_length(80, 10.75, eps), 640);
    }

    #[test]
    fn worst_case_zero_width_equals_point() {
        let model = NoiseModel::from_points(3.96e7, 3.29e7, 2.49e7, 1e-10).unwrap();
        let adc = AdcSpec::new(16, 32768.0).unwrap();
        let worst = worst_case_min_entropy(&model, &adc).unwrap();
        let point = optimize_delta(&model.iid_params().unwrap(), &adc);
        assert_eq!(worst.optimum.h_min, point.h_min);
    }

    #[test]
    fn worst_case_reference_point_corner() {
        let adc = AdcSpec::new(16, 32768.0).unwrap();
        let worst = worst_case_min_entropy(&reference_point(), &adc).unwrap();
        assert_eq!(worst.corner, Corner { total: Side::Upper, conditional: Side::Lower, excess: Side::Upper });
        assert!((10.4..=11.0).contains(&worst.optimum.h_min));
        assert!(worst.optimum.h_min <= worst.upper_bound);
    }

    #[test]
    fn worst_case_degenerate() {
        let model = NoiseModel::new(
            VarianceEstimate::new(4.0, 3.0, 5.0, 0.1),
            VarianceEstimate::new(3.0, 2.0, 4.0, 0.1),
            VarianceEstimate::new(1.0, 0.5, 2.5, 0.1),
            0.1,
        )
        .unwrap();
        let adc = AdcSpec::new(12, 100.0).unwrap();
        assert!(matches!(worst_case_min_entropy(&model, &adc), Err(EntropyError::DegenerateModel { .. })));
    }

    #[test]
    fn report_clamps_and_formats() {
        let adc = AdcSpec::new(16, 32768.0).unwrap();
        let worst = worst_case_min_entropy(&reference_point(), &adc).unwrap();
        let report = EntropyReport::new(&worst, &adc, 80, 1e-33, 1e-10);
        assert!(report.h_min_bits <= 16.0 && report.h_min_bits >= 0.0);
        let text = alloc::format!("{report}");
        for key in ["h_min_bits: ", "delta_star: ", "corner: ", "secure_len_bits: ", "eps_hash: ", "eps_pe: "] {
            assert!(text.lines().any(|l| l.starts_with(key)), "missing {key}");
        }
    }

    #[test]
    fn model_derived_ratios() {
        let m = NoiseModel::from_points(3.96e7, 3.29e7, 2.49e7, 1e-10).unwrap();
        assert!((m.temporal_correlation() - 0.8308).abs() < 1e-4);
        assert!((m.quantum_to_excess_db() + 4.93).abs() < 0.01);
    }
}
