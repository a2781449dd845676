//! Evaluation of Weyl sums `S_d(x; N) = sum_{n=1}^N e(x_1 n + ... + x_d n^d)`.
//!
//! Two evaluators are provided. [`eval_direct`] computes every phase exactly
//! in 128-bit fixed point and calls the transcendental once per term; it is
//! the reference. [`eval_incremental`] walks the forward differences of the
//! phase polynomial in the same fixed point and evaluates `e(.)` from
//! lookup tables; it is the production kernel.
//!
//! Monomial sums `G_d(x; N)` are the special case `x = (0, ..., 0, x)`, see
//! [`TorusPoint::monomial`].

use crate::compensated::ComplexAccumulator;
use crate::error::{Result, WeylError};
use crate::phase::{exp_tables, expi_fixed, fixed_from_f64, fixed_to_unit, poly_phase, ExpTables};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest summation length accepted by the evaluators.
pub const MAX_TERMS: u64 = (1u64 << 53) - 1;

/// Largest number of stored checkpoints in a [`PartialSumTrace`].
pub const TRACE_CAPACITY: u64 = 1 << 24;

/// A point of the torus `T_d`: the coefficients of the phase polynomial.
///
/// Coordinates are held in 128-bit fixed point; the `f64` view is derived
/// from it and always lies in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    fixed: Vec<u128>,
}

impl TorusPoint {
    /// Builds a point from real coordinates, reducing each mod 1.
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() {
            return Err(WeylError::invalid("coords", "degree must be at least 1"));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(WeylError::invalid(
                "coords",
                format!("non-finite coordinate {bad}"),
            ));
        }
        Ok(Self {
            fixed: coords.iter().map(|&c| fixed_from_f64(c)).collect(),
        })
    }

    /// Builds a point directly from fixed-point residues (`t * 2^128`).
    pub fn from_fixed(fixed: Vec<u128>) -> Result<Self> {
        if fixed.is_empty() {
            return Err(WeylError::invalid("coords", "degree must be at least 1"));
        }
        Ok(Self { fixed })
    }

    /// The point `(0, ..., 0, x)` of degree `d`, whose Weyl sum is the
    /// monomial sum `G_d(x; N)`.
    pub fn monomial(d: usize, x: f64) -> Result<Self> {
        if d == 0 {
            return Err(WeylError::invalid("degree", "must be at least 1"));
        }
        let mut coords = vec![0.0; d];
        coords[d - 1] = x;
        Self::new(&coords)
    }

    pub fn zero(d: usize) -> Self {
        assert!(d >= 1);
        Self { fixed: vec![0; d] }
    }

    pub fn degree(&self) -> usize {
        self.fixed.len()
    }

    pub fn fixed(&self) -> &[u128] {
        &self.fixed
    }

    pub fn coords(&self) -> Vec<f64> {
        self.fixed.iter().map(|&v| fixed_to_unit(v)).collect()
    }

    pub fn coord(&self, j: usize) -> f64 {
        fixed_to_unit(self.fixed[j])
    }

    /// Translate by real offsets, coordinate-wise mod 1.
    pub fn translated(&self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.degree() {
            return Err(WeylError::invalid(
                "offsets",
                format!("expected {} offsets, got {}", self.degree(), offsets.len()),
            ));
        }
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err(WeylError::invalid("offsets", "non-finite offset"));
        }
        Ok(Self {
            fixed: self
                .fixed
                .iter()
                .zip(offsets)
                .map(|(&v, &o)| v.wrapping_add(fixed_from_f64(o)))
                .collect(),
        })
    }

    /// Exact phase `P(n) mod 1` in fixed point.
    #[inline]
    pub fn phase_at(&self, n: u64) -> u128 {
        poly_phase(&self.fixed, n as u128)
    }
}

impl std::fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coords().iter().map(|c| format!("{c}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

fn check_terms(n: u64) -> Result<()> {
    if n > MAX_TERMS {
        return Err(WeylError::invalid(
            "n",
            format!("{n} exceeds the supported maximum 2^53 - 1"),
        ));
    }
    Ok(())
}

/// Reference evaluator: exact phase reduction, one transcendental per term,
/// compensated accumulation.
pub fn eval_direct(x: &TorusPoint, n: u64) -> Result<Complex64> {
    check_terms(n)?;
    let mut acc = ComplexAccumulator::new();
    for k in 1..=n {
        acc.add(expi_fixed(x.phase_at(k)));
    }
    Ok(acc.value())
}

/// Streaming partial sums `S(1), S(2), ...`.
///
/// The forward differences `P(n), dP(n), ..., d^d P` of the phase polynomial
/// are carried in 128-bit fixed point and advanced with `d` wrapping
/// additions per term (`d^d P = d! x_d` is constant), so every phase is
/// exact. Each term `e(P(n))` then costs two table lookups and a short
/// polynomial instead of a libm call.
#[derive(Debug, Clone)]
pub struct PartialSums {
    /// `diffs[j] = Delta^j P(n)` for the next term index `n`.
    diffs: Vec<u128>,
    acc: ComplexAccumulator,
    n: u64,
}

impl PartialSums {
    pub fn new(point: &TorusPoint) -> Self {
        let d = point.degree();
        let mut diffs: Vec<u128> = (0..=d as u64).map(|i| point.phase_at(1 + i)).collect();
        for j in 1..=d {
            for i in (j..=d).rev() {
                diffs[i] = diffs[i].wrapping_sub(diffs[i - 1]);
            }
        }
        Self {
            diffs,
            acc: ComplexAccumulator::new(),
            n: 1,
        }
    }

    /// Index of the last term summed so far.
    pub fn index(&self) -> u64 {
        self.n - 1
    }

    pub fn value(&self) -> Complex64 {
        self.acc.value()
    }

    /// Add the next term and return `(N, S(N))`.
    #[inline]
    pub fn advance(&mut self) -> (u64, Complex64) {
        self.advance_by(1);
        (self.n - 1, self.acc.value())
    }

    /// Sum `count` further terms and return the new partial sum.
    pub fn advance_by(&mut self, count: u64) -> Complex64 {
        self.run(count, |_, _| {});
        self.acc.value()
    }

    /// Sum `count` further terms, calling `visit(N, S(N))` after each one.
    pub fn visit<F: FnMut(u64, Complex64)>(&mut self, count: u64, visit: F) {
        self.run(count, visit);
    }

    fn run<F: FnMut(u64, Complex64)>(&mut self, count: u64, visit: F) {
        let tables = exp_tables();
        let (diffs, acc, start) = (&mut self.diffs[..], &mut self.acc, self.n);
        match diffs.len() - 1 {
            1 => run_fixed::<1, F>(diffs, acc, tables, start, count, visit),
            2 => run_fixed::<2, F>(diffs, acc, tables, start, count, visit),
            3 => run_fixed::<3, F>(diffs, acc, tables, start, count, visit),
            4 => run_fixed::<4, F>(diffs, acc, tables, start, count, visit),
            5 => run_fixed::<5, F>(diffs, acc, tables, start, count, visit),
            6 => run_fixed::<6, F>(diffs, acc, tables, start, count, visit),
            _ => run_dyn(diffs, acc, tables, start, count, visit),
        }
        self.n += count;
    }
}

/// Terms per plain-summed block; block error stays near `BLOCK * eps`.
const BLOCK: u64 = 32;

#[inline(always)]
fn run_fixed<const D: usize, F: FnMut(u64, Complex64)>(
    diffs: &mut [u128],
    acc: &mut ComplexAccumulator,
    tables: &ExpTables,
    start: u64,
    count: u64,
    mut visit: F,
) {
    let mut local = [0u128; 8];
    local[..=D].copy_from_slice(&diffs[..=D]);
    // terms are summed plainly in short blocks, blocks are added compensated
    let mut done = 0;
    while done < count {
        let block = (count - done).min(BLOCK);
        let base = acc.value();
        let mut part = Complex64::new(0.0, 0.0);
        for k in 0..block {
            part += tables.expi(local[0]);
            for j in 0..D {
                local[j] = local[j].wrapping_add(local[j + 1]);
            }
            visit(start + done + k, base + part);
        }
        acc.add(part);
        done += block;
    }
    diffs[..=D].copy_from_slice(&local[..=D]);
}

fn run_dyn<F: FnMut(u64, Complex64)>(
    diffs: &mut [u128],
    acc: &mut ComplexAccumulator,
    tables: &ExpTables,
    start: u64,
    count: u64,
    mut visit: F,
) {
    let d = diffs.len() - 1;
    for k in 0..count {
        acc.add(tables.expi(diffs[0]));
        for j in 0..d {
            diffs[j] = diffs[j].wrapping_add(diffs[j + 1]);
        }
        visit(start + k, acc.value());
    }
}

impl Iterator for PartialSums {
    type Item = (u64, Complex64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.n > MAX_TERMS {
            return None;
        }
        Some(self.advance())
    }
}

/// Production evaluator of `S_d(x; n)`.
pub fn eval_incremental(x: &TorusPoint, n: u64) -> Result<Complex64> {
    check_terms(n)?;
    Ok(PartialSums::new(x).advance_by(n))
}

/// Partial sums recorded at checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSumTrace {
    pub point: Vec<f64>,
    pub n_max: u64,
    pub checkpoints: Vec<u64>,
    pub values: Vec<(f64, f64)>,
    pub full: bool,
}

impl PartialSumTrace {
    pub fn len(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkpoints.is_empty()
    }

    pub fn complex_values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.values.iter().map(|&(re, im)| Complex64::new(re, im))
    }
}

/// Record `S(N)` at `N = stride, 2 stride, ...` and at `N = n_max`.
pub fn trace(x: &TorusPoint, n_max: u64, stride: u64) -> Result<PartialSumTrace> {
    if n_max == 0 {
        return Err(WeylError::invalid("n_max", "must be at least 1"));
    }
    if stride == 0 {
        return Err(WeylError::invalid("stride", "must be at least 1"));
    }
    check_terms(n_max)?;
    let count = n_max / stride + u64::from(n_max % stride != 0);
    if count > TRACE_CAPACITY {
        return Err(WeylError::Capacity(format!(
            "{count} checkpoints exceed the trace capacity {TRACE_CAPACITY}; \
             use a stride of at least {}",
            n_max.div_ceil(TRACE_CAPACITY)
        )));
    }
    let mut checkpoints = Vec::with_capacity(count as usize);
    let mut values = Vec::with_capacity(count as usize);
    let mut sums = PartialSums::new(x);
    let mut done = 0;
    while done < n_max {
        let step = stride.min(n_max - done);
        let v = sums.advance_by(step);
        done += step;
        checkpoints.push(done);
        values.push((v.re, v.im));
    }
    Ok(PartialSumTrace {
        point: x.coords(),
        n_max,
        checkpoints,
        values,
        full: stride == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn zero_point_counts_terms() {
        let x = TorusPoint::new(&[0.0, 0.0]).unwrap();
        assert_eq!(eval_direct(&x, 10).unwrap(), Complex64::new(10.0, 0.0));
        assert_eq!(eval_incremental(&x, 10).unwrap(), Complex64::new(10.0, 0.0));
    }

    #[test]
    fn half_turn_cancels() {
        let x = TorusPoint::new(&[0.5]).unwrap();
        assert!(eval_direct(&x, 2).unwrap().norm() < 1e-15);
    }

    #[test]
    fn quadratic_point_with_denominator_twelve_vanishes() {
        let x = TorusPoint::new(&[1.0 / 12.0, 1.0 / 12.0]).unwrap();
        assert!(eval_direct(&x, 12).unwrap().norm() < 1e-10);
        assert!(eval_incremental(&x, 12).unwrap().norm() < 1e-8);
    }

    #[test]
    fn single_term_matches_exactly() {
        let x = TorusPoint::new(&[0.1234, 0.777, 0.31]).unwrap();
        let a = eval_incremental(&x, 1).unwrap();
        let b = eval_direct(&x, 1).unwrap();
        assert!(close(a, b, 1e-15), "{a} vs {b}");
    }

    #[test]
    fn coordinates_reduce_mod_one() {
        let x = TorusPoint::new(&[1.25, -0.25]).unwrap();
        assert_eq!(x.coords(), vec![0.25, 0.75]);
        assert!(TorusPoint::new(&[f64::NAN]).is_err());
        assert!(TorusPoint::new(&[]).is_err());
    }

    #[test]
    fn oversized_n_is_rejected() {
        let x = TorusPoint::zero(1);
        assert!(eval_direct(&x, MAX_TERMS + 1).is_err());
    }

    #[test]
    fn trace_records_checkpoints() {
        let x = TorusPoint::zero(2);
        let t = trace(&x, 3, 1).unwrap();
        assert!(t.full);
        assert_eq!(t.checkpoints, vec![1, 2, 3]);
        assert_eq!(t.values, vec![(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);

        let t = trace(&x, 10, 4).unwrap();
        assert_eq!(t.checkpoints, vec![4, 8, 10]);
        assert!(!t.full);
    }

    #[test]
    fn trace_single_checkpoint_at_period() {
        let x = TorusPoint::new(&[1.0 / 12.0, 1.0 / 12.0]).unwrap();
        let t = trace(&x, 12, 12).unwrap();
        assert_eq!(t.checkpoints, vec![12]);
        let (re, im) = t.values[0];
        assert!(re.hypot(im) < 1e-8);
    }

    #[test]
    fn cubic_monomial_mod_five_vanishes() {
        let x = TorusPoint::monomial(3, 0.2).unwrap();
        let t = trace(&x, 5, 1).unwrap();
        let last = t.complex_values().last().unwrap();
        assert!(last.norm() < 1e-9);
    }

    #[test]
    fn trace_capacity_is_enforced() {
        let x = TorusPoint::zero(1);
        let err = trace(&x, TRACE_CAPACITY + 1, 1).unwrap_err();
        assert!(matches!(err, WeylError::Capacity(_)));
        assert!(trace(&x, 10, 0).is_err());
    }

    #[test]
    fn incremental_tracks_direct_over_long_runs() {
        let x = TorusPoint::new(&[0.314_159_265_358_979, 0.271_828_182_845_904]).unwrap();
        let n = 100_000;
        let a = eval_direct(&x, n).unwrap();
        let b = eval_incremental(&x, n).unwrap();
        assert!(close(a, b, 1e-8), "{a} vs {b}");
    }
}
