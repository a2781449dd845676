//! Integer certificates that complete rational Weyl sums vanish.
//!
//! For a rational point `a/m` the sum `S_d(a/m; N)` depends only on how many
//! of the values `P(k) = sum_j a_j k^j mod m` land in each residue class.
//! Two shapes of that histogram force the sum to be exactly zero:
//!
//! * half-period pairing: `m` even and `c_r = c_{r + m/2}`, so each class is
//!   cancelled by its antipode `e(r/m + 1/2) = -e(r/m)`;
//! * residue permutation: all `c_r` equal, so the sum is a multiple of the
//!   sum of all `m`-th roots of unity.
//!
//! Both checks are pure integer comparisons.

use crate::compensated::ComplexAccumulator;
use crate::error::{Result, WeylError};
use crate::phase::{expi_fixed, fixed_from_ratio};
use crate::sumcore::{TorusPoint, MAX_TERMS};
use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest supported modulus.
pub const MAX_MODULUS: u64 = (1 << 31) - 1;

/// A rational point `(a_1, ..., a_d) / m` of the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    numerators: Vec<u64>,
    modulus: u64,
}

impl RationalPoint {
    /// Numerators are reduced mod `modulus`.
    pub fn new(numerators: &[u64], modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(WeylError::invalid(
                "modulus",
                format!("must be at least 2, got {modulus}"),
            ));
        }
        if modulus > MAX_MODULUS {
            return Err(WeylError::invalid(
                "modulus",
                format!("{modulus} exceeds the cap 2^31 - 1"),
            ));
        }
        if numerators.is_empty() {
            return Err(WeylError::invalid("numerators", "degree must be at least 1"));
        }
        Ok(Self {
            numerators: numerators.iter().map(|a| a % modulus).collect(),
            modulus,
        })
    }

    /// Signed numerators, reduced into `[0, m)`.
    pub fn from_signed(numerators: &[i64], modulus: u64) -> Result<Self> {
        let m = modulus as i64;
        if modulus < 2 || modulus > MAX_MODULUS {
            return Self::new(&[0], modulus);
        }
        let reduced: Vec<u64> = numerators.iter().map(|a| a.rem_euclid(m) as u64).collect();
        Self::new(&reduced, modulus)
    }

    /// The monomial point `(0, ..., 0, b) / m` of degree `d`.
    pub fn monomial(d: usize, b: u64, modulus: u64) -> Result<Self> {
        if d == 0 {
            return Err(WeylError::invalid("degree", "must be at least 1"));
        }
        let mut nums = vec![0; d];
        nums[d - 1] = b;
        Self::new(&nums, modulus)
    }

    pub fn degree(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The same point as a [`TorusPoint`], to 128-bit fixed-point accuracy.
    pub fn to_torus(&self) -> TorusPoint {
        TorusPoint::from_fixed(
            self.numerators
                .iter()
                .map(|&a| fixed_from_ratio(a, self.modulus))
                .collect(),
        )
        .expect("degree is at least 1")
    }

    /// `P(k) mod m`.
    pub fn value_at(&self, k: u64) -> u64 {
        let m = self.modulus;
        let k = k % m;
        let mut acc = 0u64;
        for &a in self.numerators.iter().rev() {
            acc = ((acc + a) % m) * k % m;
        }
        acc
    }

    /// Values `P(1), P(2), ..., P(count)` mod `m`, computed by forward
    /// differences with additions only.
    pub(crate) fn values(&self, count: u64) -> impl Iterator<Item = u64> + '_ {
        let m = self.modulus;
        let d = self.degree();
        let mut diffs: Vec<u64> = (0..=d as u64).map(|i| self.value_at(1 + i)).collect();
        for j in 1..=d {
            for i in (j..=d).rev() {
                diffs[i] = (diffs[i] + m - diffs[i - 1]) % m;
            }
        }
        (0..count).map(move |_| {
            let v = diffs[0];
            for j in 0..d {
                let s = diffs[j] + diffs[j + 1];
                diffs[j] = if s >= m { s - m } else { s };
            }
            v
        })
    }
}

impl fmt::Display for RationalPoint {
    /// `a_1,...,a_d/m`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nums: Vec<String> = self.numerators.iter().map(|a| a.to_string()).collect();
        write!(f, "{}/{}", nums.join(","), self.modulus)
    }
}

impl FromStr for RationalPoint {
    type Err = WeylError;

    /// Accepts either a common denominator, `a_1,...,a_d/m`, or one fraction
    /// per coordinate, `a_1/m_1,...,a_d/m_d` (brought to the lcm).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(',').map(str::trim).collect();
        let bad = |why: &str| WeylError::Parse(format!("rational point `{s}`: {why}"));
        let int = |t: &str| -> Result<i64> {
            t.parse::<i64>()
                .map_err(|_| bad(&format!("`{t}` is not an integer")))
        };
        let slashes = parts.iter().filter(|p| p.contains('/')).count();
        if slashes == 0 {
            return Err(bad("missing `/m`"));
        }
        if slashes == 1 && parts.last().is_some_and(|p| p.contains('/')) && parts.len() > 1
            || parts.len() == 1
        {
            let (last_num, m) = parts[parts.len() - 1]
                .split_once('/')
                .ok_or_else(|| bad("missing `/m`"))?;
            let m = int(m)?;
            if m < 2 {
                return Err(bad("modulus must be at least 2"));
            }
            let mut nums = parts[..parts.len() - 1]
                .iter()
                .map(|t| int(t))
                .collect::<Result<Vec<_>>>()?;
            nums.push(int(last_num)?);
            return Self::from_signed(&nums, m as u64);
        }
        if slashes != parts.len() {
            return Err(bad("mix of plain and fractional coordinates"));
        }
        let fracs = parts
            .iter()
            .map(|p| {
                let (a, m) = p.split_once('/').ok_or_else(|| bad("missing `/`"))?;
                let m = int(m)?;
                if m < 1 {
                    return Err(bad("denominator must be positive"));
                }
                Ok((int(a)?, m))
            })
            .collect::<Result<Vec<_>>>()?;
        let lcm = fracs.iter().fold(1i64, |acc, &(_, m)| acc.lcm(&m));
        if lcm < 2 {
            return Err(bad("common denominator must be at least 2"));
        }
        let nums: Vec<i64> = fracs.iter().map(|&(a, m)| a * (lcm / m)).collect();
        Self::from_signed(&nums, lcm as u64)
    }
}

/// Counts of polynomial values per residue class mod `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueHistogram {
    pub modulus: u64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ResidueHistogram {
    /// `sum_r c_r e(r/m)`, one transcendental per residue class.
    pub fn sum(&self) -> Complex64 {
        let mut acc = ComplexAccumulator::new();
        for (r, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                acc.add(expi_fixed(fixed_from_ratio(r as u64, self.modulus)) * c as f64);
            }
        }
        acc.value()
    }

    /// `m` even and `c_r = c_{r + m/2}` for every `r`.
    pub fn is_half_period_paired(&self) -> bool {
        if self.modulus % 2 != 0 {
            return false;
        }
        let half = (self.modulus / 2) as usize;
        (0..half).all(|r| self.counts[r] == self.counts[r + half])
    }

    /// All residue classes hit equally often.
    pub fn is_flat(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }
}

/// Histogram of `P(k) mod m` over `1 <= k <= n`.
///
/// One full period is tabulated and scaled by `n / m`; the remaining
/// `n mod m` terms are counted explicitly.
pub fn residue_histogram(point: &RationalPoint, n: u64) -> Result<ResidueHistogram> {
    if n == 0 {
        return Err(WeylError::invalid("n", "must be at least 1"));
    }
    let m = point.modulus;
    let periods = n / m;
    let rem = n % m;
    let mut counts = vec![0u64; m as usize];
    if periods > 0 {
        for v in point.values(m) {
            counts[v as usize] += 1;
        }
        for c in counts.iter_mut() {
            *c *= periods;
        }
    }
    for v in point.values(rem) {
        counts[v as usize] += 1;
    }
    Ok(ResidueHistogram {
        modulus: m,
        counts,
        total: n,
    })
}

/// Why a complete sum is known to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    HalfPeriodPairing,
    ResiduePermutation,
    NumericOnly,
}

impl Mechanism {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::HalfPeriodPairing => "half-period-pairing",
            Mechanism::ResiduePermutation => "residue-permutation",
            Mechanism::NumericOnly => "numeric-only",
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Mechanism::NumericOnly)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = WeylError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-period-pairing" => Ok(Mechanism::HalfPeriodPairing),
            "residue-permutation" => Ok(Mechanism::ResiduePermutation),
            "numeric-only" => Ok(Mechanism::NumericOnly),
            other => Err(WeylError::Parse(format!("unknown mechanism `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingCertificate {
    pub point: RationalPoint,
    pub span: u64,
    pub mechanism: Mechanism,
    pub verified: bool,
    /// `|S(point; span)|` from the histogram, for reference.
    pub residual: f64,
}

/// Tolerance per summed term for the numeric fallback.
pub const NUMERIC_ZERO_TOL: f64 = 1e-9;

/// Certify that `S_d(point; span) = 0`.
///
/// Exact mechanisms are tried first; otherwise the histogram sum is compared
/// against `1e-9 * span`.
pub fn certify_zero(point: &RationalPoint, span: u64) -> Result<VanishingCertificate> {
    if span > MAX_TERMS {
        return Err(WeylError::invalid("span", "exceeds 2^53 - 1"));
    }
    let hist = residue_histogram(point, span)?;
    let residual = hist.sum().norm();
    // a flat histogram is reported as a permutation even when it is also paired
    let (mechanism, verified) = if hist.is_flat() {
        (Mechanism::ResiduePermutation, true)
    } else if hist.is_half_period_paired() {
        (Mechanism::HalfPeriodPairing, true)
    } else {
        (
            Mechanism::NumericOnly,
            residual < NUMERIC_ZERO_TOL * span as f64,
        )
    };
    Ok(VanishingCertificate {
        point: point.clone(),
        span,
        mechanism,
        verified,
        residual,
    })
}

/// `S_d(point; n)` through the residue histogram: `m` transcendental calls
/// regardless of `n`.
pub fn eval_rational_exactly(point: &RationalPoint, n: u64) -> Result<Complex64> {
    Ok(residue_histogram(point, n)?.sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(nums: &[u64], m: u64) -> RationalPoint {
        RationalPoint::new(nums, m).unwrap()
    }

    /// Brute-force histogram, independent of the period/remainder split.
    fn brute_histogram(nums: &[u64], m: u64, n: u64) -> Vec<u64> {
        let mut counts = vec![0u64; m as usize];
        for k in 1..=n {
            let mut v: u128 = 0;
            let mut pow: u128 = 1;
            for &a in nums {
                pow = pow * k as u128 % m as u128;
                v = (v + a as u128 * pow) % m as u128;
            }
            counts[v as usize] += 1;
        }
        counts
    }

    #[test]
    fn squares_mod_six() {
        let h = residue_histogram(&rp(&[0, 1], 6), 6).unwrap();
        assert_eq!(h.counts, brute_histogram(&[0, 1], 6, 6));
        assert_eq!(h.counts, vec![1, 2, 0, 1, 2, 0]);
        assert_eq!(h.total, 6);
    }

    #[test]
    fn linear_mod_two() {
        let h = residue_histogram(&rp(&[1], 2), 2).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
    }

    #[test]
    fn cubes_mod_five_are_a_permutation() {
        let h = residue_histogram(&rp(&[0, 0, 1], 5), 5).unwrap();
        assert_eq!(h.counts, vec![1; 5]);
    }

    #[test]
    fn partial_periods_match_brute_force() {
        for &(ref nums, m, n) in &[
            (vec![3u64, 5, 7], 11u64, 100u64),
            (vec![1, 1], 12, 7),
            (vec![2, 0, 9, 4], 30, 1234),
            (vec![5], 9, 1),
        ] {
            let h = residue_histogram(&rp(nums, m), n).unwrap();
            assert_eq!(h.counts, brute_histogram(nums, m, n), "{nums:?}/{m} n={n}");
            assert_eq!(h.counts.iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn modulus_bounds() {
        assert!(RationalPoint::new(&[1], 1).is_err());
        assert!(RationalPoint::new(&[1], MAX_MODULUS + 1).is_err());
        assert!(RationalPoint::new(&[1], MAX_MODULUS).is_ok());
        assert!(residue_histogram(&rp(&[1], 3), 0).is_err());
    }

    #[test]
    fn large_modulus_does_not_overflow() {
        let p = rp(&[MAX_MODULUS - 1, MAX_MODULUS - 2, MAX_MODULUS - 3], MAX_MODULUS);
        // (-1)k + (-2)k^2 + (-3)k^3 at k = m - 1 = -1: 1 - 2 + 3 = 2
        assert_eq!(p.value_at(MAX_MODULUS - 1), 2);
    }

    #[test]
    fn certificate_quadratic_mod_4p() {
        let c = certify_zero(&rp(&[1, 1], 12), 12).unwrap();
        assert_eq!(c.mechanism, Mechanism::HalfPeriodPairing);
        assert!(c.verified);
    }

    #[test]
    fn certificate_gauss_mod_2p() {
        let c = certify_zero(&rp(&[0, 1], 6), 6).unwrap();
        assert_eq!(c.mechanism, Mechanism::HalfPeriodPairing);
        assert!(c.verified);
    }

    #[test]
    fn certificate_cubic_monomial() {
        let c = certify_zero(&rp(&[0, 0, 1], 5), 5).unwrap();
        assert_eq!(c.mechanism, Mechanism::ResiduePermutation);
        assert!(c.verified);
    }

    #[test]
    fn nonvanishing_sum_is_numeric_and_unverified() {
        // full Gauss sum mod 5 has modulus sqrt(5)
        let c = certify_zero(&rp(&[0, 1], 5), 5).unwrap();
        assert_eq!(c.mechanism, Mechanism::NumericOnly);
        assert!(!c.verified);
        assert!((c.residual - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_evaluation_examples() {
        assert!(eval_rational_exactly(&rp(&[1, 1], 12), 12).unwrap().norm() < 1e-12);
        assert!(eval_rational_exactly(&rp(&[1], 2), 4).unwrap().norm() < 1e-12);
        let p = rp(&[1, 1], 12);
        let direct = crate::sumcore::eval_direct(&p.to_torus(), 7).unwrap();
        let exact = eval_rational_exactly(&p, 7).unwrap();
        assert!((direct - exact).norm() < 1e-9);
    }

    #[test]
    fn parse_and_display() {
        let p: RationalPoint = "1,1/12".parse().unwrap();
        assert_eq!(p, rp(&[1, 1], 12));
        assert_eq!(p.to_string(), "1,1/12");
        let q: RationalPoint = "1/4,1/6".parse().unwrap();
        assert_eq!(q, rp(&[3, 2], 12));
        let r: RationalPoint = "-1/5".parse().unwrap();
        assert_eq!(r, rp(&[4], 5));
        assert!("1,2".parse::<RationalPoint>().is_err());
        assert!("1/x".parse::<RationalPoint>().is_err());
        assert!("1/1".parse::<RationalPoint>().is_err());
        assert!("1/2,3".parse::<RationalPoint>().is_err());
    }
}
