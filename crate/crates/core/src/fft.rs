//! Iterative radix-2 FFT.
//!
//! Only power-of-two lengths are supported. A plan precomputes the twiddle
//! factors and the bit-reversal permutation so repeated transforms of the
//! same length (Welch blocks) do not recompute them.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }
}

impl Add for Complex {
    type Output = Complex;
    #[inline]
    fn add(self, rhs: Complex) -> Complex {
        Complex::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, rhs: Complex) -> Complex {
        Complex::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, rhs: Complex) -> Complex {
        Complex::new(self.re * rhs.re - self.im * rhs.im, self.re * rhs.im + self.im * rhs.re)
    }
}

/// Precomputed radix-2 transform of a fixed length.
#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    // twiddles[k] = exp(-2πik/len) for k < len/2
    twiddles: Vec<Complex>,
    rev: Vec<u32>,
}

impl FftPlan {
    /// Returns `None` unless `len` is a power of two.
    pub fn new(len: usize) -> Option<Self> {
        if len == 0 || !len.is_power_of_two() || len > u32::MAX as usize {
            return None;
        }
        let half = len / 2;
        let twiddles = (0..half)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = len.trailing_zeros();
        let rev = (0..len as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        Some(Self { len, twiddles, rev })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X[k] = Σ x[t]·exp(-2πikt/N)`.
    pub fn forward(&self, data: &mut [Complex]) {
        self.transform(data, false);
    }

    /// In-place inverse transform including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex]) {
        self.transform(data, true);
        let scale = 1.0 / self.len as f64;
        for z in data.iter_mut() {
            z.re *= scale;
            z.im *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex], inverse: bool) {
        assert_eq!(data.len(), self.len, "buffer length does not match plan");
        for (i, &r) in self.rev.iter().enumerate() {
            let r = r as usize;
            if i < r {
                data.swap(i, r);
            }
        }
        let mut size = 2;
        while size <= self.len {
            let half = size / 2;
            let stride = self.len / size;
            for start in (0..self.len).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex]) -> Vec<Complex> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(Complex::ZERO, |acc, (t, &v)| {
                    let angle = -2.0 * PI * (k * t) as f64 / n as f64;
                    acc + v * Complex::new(libm::cos(angle), libm::sin(angle))
                })
            })
            .collect()
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(FftPlan::new(0).is_none());
        assert!(FftPlan::new(12).is_none());
        assert!(FftPlan::new(1).is_some());
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex> =
            (0..64).map(|i| Complex::new(libm::sin(i as f64 * 0.37) + 0.1 * i as f64, libm::cos(i as f64))).collect();
        let expected = naive_dft(&x);
        let mut y = x.clone();
        FftPlan::new(64).unwrap().forward(&mut y);
        for (a, b) in y.iter().zip(&expected) {
            assert!((a.re - b.re).abs() < 1e-9 && (a.im - b.im).abs() < 1e-9);
        }
    }

    #[test]
    fn round_trip_error_is_tiny() {
        let plan = FftPlan::new(4096).unwrap();
        let x: Vec<Complex> = (0..4096).map(|i| Complex::new(libm::sin(i as f64 * 1.3) * 1e3, 0.0)).collect();
        let mut y = x.clone();
        plan.forward(&mut y);
        plan.inverse(&mut y);
        let num: f64 = x.iter().zip(&y).map(|(a, b)| (*a - *b).norm_sqr()).sum();
        let den: f64 = x.iter().map(|a| a.norm_sqr()).sum();
        assert!(libm::sqrt(num / den) < 1e-10);
    }
}
