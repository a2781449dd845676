//! Fixed-point arithmetic on the circle group.
//!
//! A phase is stored as a `u128` holding `t * 2^128` for `t` in `[0, 1)`.
//! Integer multiples and polynomial values of phases are then computed
//! exactly with wrapping arithmetic, so the reduction `P(n) mod 1` never
//! loses precision regardless of how large `n^d` grows.

use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::OnceLock;

/// `2^-128`.
const INV_2_128: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// Converts a finite real to its fixed-point residue mod 1.
///
/// Every `f64` is a dyadic rational, so the result is exact whenever the
/// fractional part has no bits below `2^-128` (true for every input of
/// magnitude at least `2^-75`). Smaller inputs are truncated toward zero.
pub fn fixed_from_f64(x: f64) -> u128 {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return 0;
    }
    let bits = x.abs().to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, exp) = if raw_exp == 0 {
        (bits & ((1u64 << 52) - 1), -1074)
    } else {
        ((bits & ((1u64 << 52) - 1)) | (1u64 << 52), raw_exp - 1075)
    };
    // x = mant * 2^exp; we want mant * 2^(exp + 128) mod 2^128
    let shift = exp + 128;
    let mag: u128 = if shift >= 128 {
        0
    } else if shift >= 0 {
        (mant as u128) << shift
    } else if shift > -128 {
        (mant as u128) >> (-shift)
    } else {
        0
    };
    if x < 0.0 {
        mag.wrapping_neg()
    } else {
        mag
    }
}

/// Fixed-point residue of the rational `num / den` mod 1, truncated.
pub fn fixed_from_ratio(num: u64, den: u64) -> u128 {
    assert!(den > 0, "zero denominator");
    let num = num % den;
    // two 64-bit long-division digits of num/den
    let n = (num as u128) << 64;
    let hi = n / den as u128;
    let rem = n % den as u128;
    let lo = (rem << 64) / den as u128;
    (hi << 64) | lo
}

/// Fixed-point phase as a real in `[0, 1)`, never rounding up to 1.
pub fn fixed_to_unit(v: u128) -> f64 {
    (v >> 75) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Fixed-point phase as the signed representative in `[-1/2, 1/2)`.
#[inline]
pub fn fixed_to_signed(v: u128) -> f64 {
    (v as i128) as f64 * INV_2_128
}

/// `e(t) = exp(2 pi i t)` for a fixed-point phase.
#[inline]
pub fn expi_fixed(v: u128) -> Complex64 {
    let (s, c) = (TAU * fixed_to_signed(v)).sin_cos();
    Complex64::new(c, s)
}

/// `e(t) = exp(2 pi i t)` for a real phase, reduced mod 1 first.
#[inline]
pub fn expi(t: f64) -> Complex64 {
    let r = t - t.round();
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

const TABLE_BITS: u32 = 11;
const TABLE_LEN: usize = 1 << TABLE_BITS;

/// Lookup tables for [`ExpTables::expi`].
pub struct ExpTables {
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
}

/// `2 pi * 2^-63 * 2^-22`: converts the 63-bit remainder to radians.
const FINE_ANGLE_SCALE: f64 = TAU / 9_223_372_036_854_775_808.0 / (TABLE_LEN * TABLE_LEN) as f64;

impl ExpTables {
    /// `e(t)` for a fixed-point phase via two 11-bit table lookups and a
    /// Taylor polynomial on the remaining `< 2^-22` turn. Absolute error is a
    /// few ulp.
    #[inline(always)]
    pub fn expi(&self, v: u128) -> Complex64 {
        let hi = (v >> (128 - TABLE_BITS)) as usize;
        let mid = ((v >> (128 - 2 * TABLE_BITS)) as usize) & (TABLE_LEN - 1);
        // top 63 of the remaining 106 bits; i64 converts in one instruction
        let rest = ((v << (2 * TABLE_BITS)) >> 65) as i64;
        let a = rest as f64 * FINE_ANGLE_SCALE;
        let a2 = a * a;
        let tail = Complex64::new(1.0 - 0.5 * a2, a * (1.0 - a2 * (1.0 / 6.0)));
        self.coarse[hi & (TABLE_LEN - 1)] * self.fine[mid] * tail
    }
}

pub fn exp_tables() -> &'static ExpTables {
    static TABLES: OnceLock<ExpTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let coarse = (0..TABLE_LEN)
            .map(|i| expi(i as f64 / TABLE_LEN as f64))
            .collect();
        let fine = (0..TABLE_LEN)
            .map(|i| expi(i as f64 / (TABLE_LEN * TABLE_LEN) as f64))
            .collect();
        ExpTables { coarse, fine }
    })
}

/// `e(t)` for a fixed-point phase using the shared lookup tables.
#[inline]
pub fn expi_table(v: u128) -> Complex64 {
    exp_tables().expi(v)
}

/// `sum_j coeffs[j] * n^(j+1) mod 2^128` by Horner's rule.
#[inline]
pub fn poly_phase(coeffs: &[u128], n: u128) -> u128 {
    let mut acc: u128 = 0;
    for &c in coeffs.iter().rev() {
        acc = acc.wrapping_add(c).wrapping_mul(n);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_and_quarters_are_exact() {
        assert_eq!(fixed_from_f64(0.5), 1u128 << 127);
        assert_eq!(fixed_from_f64(0.25), 1u128 << 126);
        assert_eq!(fixed_from_f64(1.25), 1u128 << 126);
        assert_eq!(fixed_from_f64(-0.25), 3u128 << 126);
        assert_eq!(fixed_from_f64(3.0), 0);
    }

    #[test]
    fn ratio_matches_dyadic_f64() {
        assert_eq!(fixed_from_ratio(3, 8), fixed_from_f64(0.375));
        assert_eq!(fixed_from_ratio(9, 8), fixed_from_f64(0.125));
        // 1/3 truncated: pattern 0101...
        let third = fixed_from_ratio(1, 3);
        assert_eq!(third, u128::MAX / 3);
    }

    #[test]
    fn unit_round_trip() {
        for &x in &[0.0, 0.1, 0.5, 0.999_999_999_999, 1e-30, 0.123_456_789] {
            let back = fixed_to_unit(fixed_from_f64(x));
            assert!(back < 1.0);
            assert!((back - x).abs() <= 1e-16, "{x} -> {back}");
        }
        assert!(fixed_to_unit(u128::MAX) < 1.0);
    }

    #[test]
    fn horner_matches_integer_polynomial() {
        // P(n) = n/8 + 3 n^2 / 8 at n = 5: 5/8 + 75/8 = 80/8 = 10 -> 0 mod 1
        let c = [fixed_from_f64(0.125), fixed_from_f64(0.375)];
        assert_eq!(poly_phase(&c, 5), 0);
        assert_eq!(poly_phase(&c, 1), fixed_from_f64(0.5));
    }

    #[test]
    fn table_exponential_matches_libm() {
        let mut v: u128 = 0x0123_4567_89ab_cdef_fedc_ba98_7654_3210;
        for _ in 0..10_000 {
            v = v.wrapping_mul(0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c835).wrapping_add(1);
            let err = (expi_table(v) - expi_fixed(v)).norm();
            assert!(err < 1e-15, "error {err} at {v:x}");
        }
        assert_eq!(expi_table(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn expi_basic_values() {
        let z = expi_fixed(fixed_from_f64(0.25));
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-16);
        let w = expi(2.5);
        assert!((w + Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
