//! Curve data for the min-entropy-versus-noise-ratio figure and the
//! fine-resolution tightness comparison.

use qrng_core::entropy::{
    homodyne_upper_fine_resolution, lower_bound_fine_resolution, optimize_delta, AdcSpec, IidParams,
};

pub const FIGURE2_BITS: [u32; 3] = [8, 12, 16];
pub const FIGURE2_CORRELATIONS: [f64; 2] = [0.99, 0.1];

#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Grid {
    pub ratio_db_min: f64,
    pub ratio_db_max: f64,
    pub ratio_points: usize,
    pub fill_min: f64,
    pub fill_max: f64,
    pub fill_points: usize,
}

impl Default for Figure2Grid {
    fn default() -> Self {
        Self {
            ratio_db_min: -10.0,
            ratio_db_max: 30.0,
            ratio_points: 40,
            fill_min: 0.05,
            fill_max: 0.5,
            fill_points: 64,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure2Point {
    pub bits: u32,
    pub correlation: f64,
    pub ratio_db: f64,
    pub h_min: f64,
    /// Optimal `σ/R`.
    pub fill: f64,
}

/// Best min-entropy over the signal fill factor `σ/R` for one ADC
/// resolution, correlation `σ_X²/σ²` and ratio `(σ_X²−σ_U²)/σ_U²` in dB.
pub fn optimized_min_entropy(bits: u32, correlation: f64, ratio_db: f64, grid: &Figure2Grid) -> Figure2Point {
    let range = (1u64 << (bits - 1)) as f64;
    let adc = AdcSpec::new(bits, range).expect("bits in 2..=16");
    let ratio = 10f64.powf(ratio_db / 10.0);
    let mut best = Figure2Point { bits, correlation, ratio_db, h_min: f64::NEG_INFINITY, fill: f64::NAN };
    for s in linspace(grid.fill_min, grid.fill_max, grid.fill_points) {
        let total = (s * range).powi(2);
        let conditional = correlation * total;
        let excess = conditional / (1.0 + ratio);
        let Ok(p) = IidParams::from_variances(total, conditional, excess) else { continue };
        let h = optimize_delta(&p, &adc).h_min;
        if h > best.h_min {
            best.h_min = h;
            best.fill = s;
        }
    }
    best
}

/// Every `(bits, correlation, ratio)` combination of the grid.
pub fn figure2(grid: &Figure2Grid) -> Vec<Figure2Point> {
    let mut out = Vec::new();
    for bits in FIGURE2_BITS {
        for c in FIGURE2_CORRELATIONS {
            for r in linspace(grid.ratio_db_min, grid.ratio_db_max, grid.ratio_points) {
                out.push(optimized_min_entropy(bits, c, r, grid));
            }
        }
    }
    out
}

pub const FIGURE2_HEADER: [&str; 5] = ["bits", "correlation", "ratio_db", "h_min_bits", "fill_sigma_over_range"];

pub fn figure2_row(p: &Figure2Point) -> Vec<f64> {
    vec![p.bits as f64, p.correlation, p.ratio_db, p.h_min, p.fill]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessPoint {
    pub photon_number: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TightnessPoint {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Log-spaced photon numbers over `[n_min, n_max]`.
pub fn log_grid(n_min: f64, n_max: f64, points: usize) -> Vec<f64> {
    linspace(n_min.log10(), n_max.log10(), points).map(|t| 10f64.powf(t)).collect()
}

/// Fine-resolution lower and homodyne upper bounds at unit gain.
pub fn tightness(photon_numbers: &[f64], bin_width: f64) -> Vec<TightnessPoint> {
    photon_numbers
        .iter()
        .map(|&n| {
            let p = IidParams::new(1.0, n).expect("positive photon number");
            TightnessPoint {
                photon_number: n,
                lower: lower_bound_fine_resolution(&p, bin_width),
                upper: homodyne_upper_fine_resolution(&p, bin_width),
            }
        })
        .collect()
}

/// Closed form of the gap: `1 + ½·log2((2n+1)/(4n+3))`.
pub fn tightness_gap(photon_number: f64) -> f64 {
    1.0 + 0.5 * ((2.0 * photon_number + 1.0) / (4.0 * photon_number + 3.0)).log2()
}

pub const TIGHTNESS_HEADER: [&str; 4] = ["photon_number", "lower_bits", "upper_bits", "gap_bits"];

pub fn tightness_row(p: &TightnessPoint) -> Vec<f64> {
    vec![p.photon_number, p.lower, p.upper, p.gap()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_matches_closed_form_and_limits() {
        let ns = log_grid(1e-6, 1e6, 25);
        for p in tightness(&ns, 1e-3) {
            assert!((p.gap() - tightness_gap(p.photon_number)).abs() < 1e-9);
        }
        assert!((tightness_gap(0.0) - (1.0 - 0.5 * 3f64.log2())).abs() < 1e-15);
        assert!((tightness_gap(1e12) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn linspace_endpoints() {
        let v: Vec<f64> = linspace(-10.0, 30.0, 40).collect();
        assert_eq!((v[0], v[39], v.len()), (-10.0, 30.0, 40));
    }

    #[test]
    fn fill_optimum_is_interior_for_sixteen_bits() {
        let p = optimized_min_entropy(16, 0.99, 10.0, &Figure2Grid::default());
        assert!(p.h_min > 10.0 && p.h_min < 16.0, "{p:?}");
    }
}
