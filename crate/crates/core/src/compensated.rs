//! Two-term compensated accumulation.

use num_complex::Complex64;

/// Error-free transformation `a + b = s + e`.
#[inline(always)]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let e = (a - (s - bp)) + (b - bp);
    (s, e)
}

/// Running real sum carrying its rounding error in a second word.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    err: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline(always)]
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.err += e;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// Compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexAccumulator {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline(always)]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        s.extend(iter);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn complex_sum_of_roots_of_unity() {
        let mut acc = ComplexAccumulator::new();
        for k in 0..1000 {
            acc.add(crate::phase::expi(k as f64 / 1000.0));
        }
        assert!(acc.value().norm() < 1e-13);
    }
}
