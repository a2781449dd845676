//! Empirical checks of incomplete-sum bounds and of the continuity of Weyl
//! sums under small perturbations of a rational anchor.
//!
//! Implied constants are never assumed: scans report the worst observed
//! ratio against each bound shape, and continuity checks first fit the
//! hypothesis constant on the anchor's prefix sums.

use crate::compensated::ComplexAccumulator;
use crate::error::{Result, WeylError};
use crate::exactzero::RationalPoint;
use crate::phase::{expi_fixed, fixed_from_ratio};
use crate::primes::sieve;
use crate::sumcore::eval_direct;
use num_complex::Complex64;
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest `tau` accepted by [`tau_scaling_probe`].
pub const TAU_CAP: f64 = 4.0;

/// `e(r/m)` for `r = 0..m`.
fn roots_of_unity(m: u64) -> Vec<Complex64> {
    (0..m).map(|r| expi_fixed(fixed_from_ratio(r, m))).collect()
}

/// `max_{1 <= M <= n} |S(point; M)|`, walking exact residues.
pub fn prefix_max_abs(point: &RationalPoint, n: u64) -> f64 {
    let roots = roots_of_unity(point.modulus());
    let mut acc = ComplexAccumulator::new();
    let mut best: f64 = 0.0;
    for r in point.values(n) {
        acc.add(roots[r as usize]);
        best = best.max(acc.value().norm());
    }
    best
}

/// `|S(point; M)|` for `M = 1..=n`.
pub fn prefix_abs(point: &RationalPoint, n: u64) -> Vec<f64> {
    let roots = roots_of_unity(point.modulus());
    let mut acc = ComplexAccumulator::new();
    point
        .values(n)
        .map(|r| {
            acc.add(roots[r as usize]);
            acc.value().norm()
        })
        .collect()
}

/// The incomplete sums that are scanned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundKind {
    /// `max_{b != 0, N <= p} |sum_{n <= N} e_p(b n^2)| / sqrt(p)`.
    GaussP,
    /// `max_{a, b != 0, M, N <= p} |sum_{M < n <= M+N} e_p(a n + b n^2)| / sqrt(p)`.
    ShiftedGaussP,
    /// `max_{a != 0, M, N <= p} |sum_{M < n <= M+N} e_p(a n^d)| / (sqrt(p) log p)`.
    MonomialP,
    /// `max_{gcd(ab, 2p) = 1, N <= 4p} |sum_{n <= N} e_4p(a n + b n^2)| / (sqrt(p) log p)`.
    Quadratic4P,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::GaussP => "gauss-p",
            BoundKind::ShiftedGaussP => "shifted-gauss-p",
            BoundKind::MonomialP => "monomial-p",
            BoundKind::Quadratic4P => "quadratic-4p",
        }
    }

    /// Normalising bound shape at prime `p`.
    pub fn shape(&self, p: u64) -> f64 {
        let pf = p as f64;
        match self {
            BoundKind::GaussP | BoundKind::ShiftedGaussP => pf.sqrt(),
            BoundKind::MonomialP | BoundKind::Quadratic4P => pf.sqrt() * pf.ln(),
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = WeylError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss-p" => Ok(BoundKind::GaussP),
            "shifted-gauss-p" => Ok(BoundKind::ShiftedGaussP),
            "monomial-p" => Ok(BoundKind::MonomialP),
            "quadratic-4p" => Ok(BoundKind::Quadratic4P),
            other => Err(WeylError::Parse(format!(
                "unknown bound kind `{other}` (expected gauss-p, shifted-gauss-p, monomial-p or quadratic-4p)"
            ))),
        }
    }
}

/// Options for [`incomplete_bound_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Degree for `monomial-p`.
    pub d: u32,
    /// Coefficient choices per prime above which a sample is scanned instead.
    pub exhaustive_limit: usize,
    /// Sample size when not exhaustive.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            d: 3,
            exhaustive_limit: 2_000,
            samples: 64,
            seed: 0,
        }
    }
}

/// Worst case found at one prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub kind: BoundKind,
    pub p: u64,
    pub worst_abs: f64,
    pub worst_ratio: f64,
    /// Coefficients attaining the worst case.
    pub coeffs: Vec<u64>,
    /// Window start `M` (0 for prefix sums).
    pub start: u64,
    /// Window length `N`.
    pub len: u64,
    pub scanned: usize,
    pub exhaustive: bool,
}

/// Largest ratio over a scan: the fitted constant for that bound.
pub fn fitted_constant(rows: &[ScanRow]) -> f64 {
    rows.iter().map(|r| r.worst_ratio).fold(0.0, f64::max)
}

/// Pick coefficient choices: all of them, or a seeded sample.
fn choose<T: Clone>(all: Vec<T>, opts: &ScanOptions, p: u64) -> (Vec<T>, bool) {
    if all.len() <= opts.exhaustive_limit {
        return (all, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let picked = (0..opts.samples)
        .map(|_| all[rng.random_range(0..all.len())].clone())
        .collect();
    (picked, false)
}

/// Largest `|sum_{s < n <= s + N} z_n|` over all starts `s` and lengths
/// `1 <= N <= p` of the `p`-periodic sequence with one period `z`.
/// Returns `(value, start, len)`.
fn max_window(z: &[Complex64]) -> (f64, u64, u64) {
    let p = z.len();
    // prefix sums over two periods, split into real and imaginary parts
    let mut re = vec![0.0f64; 2 * p + 1];
    let mut im = vec![0.0f64; 2 * p + 1];
    for k in 0..2 * p {
        re[k + 1] = re[k] + z[k % p].re;
        im[k + 1] = im[k] + z[k % p].im;
    }
    let mut best = (0.0f64, 0u64, 0u64);
    for s in 0..p {
        let (r0, i0) = (re[s], im[s]);
        let window_re = &re[s + 1..=s + p];
        let window_im = &im[s + 1..=s + p];
        let mut local = 0.0f64;
        for (a, b) in window_re.iter().zip(window_im) {
            let dr = a - r0;
            let di = b - i0;
            local = local.max(dr * dr + di * di);
        }
        if local > best.0 {
            let len = window_re
                .iter()
                .zip(window_im)
                .position(|(a, b)| (a - r0) * (a - r0) + (b - i0) * (b - i0) == local)
                .unwrap() as u64
                + 1;
            best = (local, s as u64, len);
        }
    }
    (best.0.sqrt(), best.1, best.2)
}

/// Largest prefix modulus `max_{N <= len} |sum_{n <= N} roots[P(n)]|`.
fn max_prefix(roots: &[Complex64], values: impl Iterator<Item = u64>) -> (f64, u64) {
    let (mut re, mut im) = (0.0f64, 0.0f64);
    let mut best = (0.0f64, 0u64);
    for (k, r) in values.enumerate() {
        let z = roots[r as usize];
        re += z.re;
        im += z.im;
        let v = re * re + im * im;
        if v > best.0 {
            best = (v, k as u64 + 1);
        }
    }
    (best.0.sqrt(), best.1)
}

fn scan_prime(kind: BoundKind, p: u64, opts: &ScanOptions) -> ScanRow {
    let shape = kind.shape(p);
    let mut row = ScanRow {
        kind,
        p,
        worst_abs: 0.0,
        worst_ratio: 0.0,
        coeffs: Vec::new(),
        start: 0,
        len: 0,
        scanned: 0,
        exhaustive: true,
    };
    let mut record = |abs: f64, coeffs: Vec<u64>, start: u64, len: u64| {
        if abs > row.worst_abs {
            row.worst_abs = abs;
            row.coeffs = coeffs;
            row.start = start;
            row.len = len;
        }
    };
    let (scanned, exhaustive) = match kind {
        BoundKind::GaussP => {
            let roots = roots_of_unity(p);
            let (bs, ex) = choose((1..p).collect::<Vec<_>>(), opts, p);
            for &b in &bs {
                let pt = RationalPoint::monomial(2, b, p).expect("valid modulus");
                let (v, n) = max_prefix(&roots, pt.values(p));
                record(v, vec![b], 0, n);
            }
            (bs.len(), ex)
        }
        BoundKind::ShiftedGaussP if p == 2 => {
            // completing the square needs 2 invertible; enumerate directly
            let roots = roots_of_unity(2);
            for a in 0..2 {
                let z: Vec<Complex64> = (1..=2u64).map(|n| roots[((a * n + n * n) % 2) as usize]).collect();
                let (v, s, len) = max_window(&z);
                record(v, vec![a, 1], s, len);
            }
            (2, true)
        }
        BoundKind::ShiftedGaussP => {
            // a n + b n^2 = b (n + h)^2 - b h^2 with h = a / 2b, so every
            // shift a is a window of e_p(b m^2) at another start
            let roots = roots_of_unity(p);
            let (bs, ex) = choose((1..p).collect::<Vec<_>>(), opts, p);
            for &b in &bs {
                // conj symmetry: b and p - b give the same moduli
                if ex && b > p - b {
                    continue;
                }
                let z: Vec<Complex64> = (0..p).map(|m| roots[(b * (m * m % p) % p) as usize]).collect();
                let (v, s, len) = max_window(&z);
                record(v, vec![b], s, len);
            }
            (bs.len(), ex)
        }
        BoundKind::MonomialP => {
            let roots = roots_of_unity(p);
            let (as_, ex) = choose((1..p).collect::<Vec<_>>(), opts, p);
            let d = opts.d.max(1) as usize;
            for &a in &as_ {
                let pt = RationalPoint::monomial(d, a, p).expect("valid modulus");
                let z: Vec<Complex64> = pt.values(p).map(|r| roots[r as usize]).collect();
                let (v, s, len) = max_window(&z);
                record(v, vec![a], s, len);
            }
            (as_.len(), ex)
        }
        BoundKind::Quadratic4P => {
            let m = 4 * p;
            let roots = roots_of_unity(m);
            let units: Vec<u64> = (1..m).filter(|v| v.gcd(&(2 * p)) == 1).collect();
            let pairs: Vec<(u64, u64)> = units
                .iter()
                .flat_map(|&a| units.iter().map(move |&b| (a, b)))
                .collect();
            let (pairs, ex) = choose(pairs, opts, p);
            for &(a, b) in &pairs {
                let pt = RationalPoint::new(&[a, b], m).expect("valid modulus");
                let (v, n) = max_prefix(&roots, pt.values(m));
                record(v, vec![a, b], 0, n);
            }
            (pairs.len(), ex)
        }
    };
    row.scanned = scanned;
    row.exhaustive = exhaustive;
    row.worst_ratio = row.worst_abs / shape;
    row
}

/// Worst ratio of incomplete sums to the bound shape, per prime `p <= p_max`.
///
/// Primes start at 2 for the Gauss kinds and at 3 otherwise. Rows come back
/// in increasing `p` regardless of how the work is scheduled.
pub fn incomplete_bound_scan(kind: BoundKind, p_max: u64, opts: &ScanOptions) -> Result<Vec<ScanRow>> {
    if kind == BoundKind::MonomialP && opts.d < 2 {
        return Err(WeylError::invalid("d", "monomial scans need d >= 2"));
    }
    if opts.samples == 0 {
        return Err(WeylError::invalid("samples", "must be at least 1"));
    }
    let min_p = match kind {
        BoundKind::GaussP | BoundKind::ShiftedGaussP => 2,
        _ => 3,
    };
    let primes: Vec<u64> = sieve(p_max).into_iter().filter(|&p| p >= min_p).collect();
    Ok(primes
        .par_iter()
        .with_max_len(1)
        .map(|&p| scan_prime(kind, p, opts))
        .collect())
}

/// Bound shape `kappa M^alpha + K` and perturbation size `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundProfile {
    pub alpha: f64,
    pub kappa: f64,
    pub k: f64,
    pub tau: f64,
    pub description: String,
    /// Largest hypothesis constant accepted before reporting a violation.
    pub c_max: f64,
    /// Perturb only the top-degree coordinate (monomial sums).
    pub leading_only: bool,
}

/// Default cap on the fitted hypothesis constant.
pub const DEFAULT_C_MAX: f64 = 10.0;

impl BoundProfile {
    pub fn new(alpha: f64, kappa: f64, k: f64, tau: f64, description: impl Into<String>) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("kappa", kappa), ("K", k)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(WeylError::invalid("profile", format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(WeylError::invalid("tau", format!("must be finite and >= 0, got {tau}")));
        }
        Ok(Self {
            alpha,
            kappa,
            k,
            tau,
            description: description.into(),
            c_max: DEFAULT_C_MAX,
            leading_only: false,
        })
    }

    /// `K = sqrt(p)`, no growth term: complete Gauss sums mod `2p`.
    pub fn gauss(p: u64, tau: f64) -> Result<Self> {
        let mut prof = Self::new(0.0, 0.0, (p as f64).sqrt(), tau, format!("gauss K=sqrt({p})"))?;
        prof.leading_only = true;
        Ok(prof)
    }

    /// `K = sqrt(p) log p`: quadratic sums mod `4p`.
    pub fn quadratic_4p(p: u64, tau: f64) -> Result<Self> {
        let pf = p as f64;
        Self::new(0.0, 0.0, pf.sqrt() * pf.ln(), tau, format!("quadratic-4p K=sqrt({p})log({p})"))
    }

    fn shape(&self, m: f64) -> f64 {
        self.kappa * m.powf(self.alpha) + self.k
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub profile: BoundProfile,
    pub n: u64,
    /// Worst `|S(y; n) - S(x; n)|` over the samples.
    pub lhs: f64,
    /// `tau (kappa n^alpha + K)`.
    pub rhs_unit: f64,
    pub ratio: f64,
    /// Fitted hypothesis constant `max_M |S(x; M)| / (kappa M^alpha + K)`.
    pub fitted_c: f64,
    /// `ratio / fitted_c`.
    pub relative_ratio: f64,
    pub samples: usize,
    /// Difference at the deterministic upper-corner offset.
    pub corner_lhs: f64,
}

/// Fits the hypothesis constant on the anchor's prefix sums up to `n`.
pub fn fit_hypothesis(anchor: &RationalPoint, profile: &BoundProfile, n: u64) -> Result<f64> {
    let mut c: f64 = 0.0;
    for (i, s) in prefix_abs(anchor, n).into_iter().enumerate() {
        let m = i as u64 + 1;
        let shape = profile.shape(m as f64);
        let bound = profile.c_max * shape;
        if s > bound + 1e-9 {
            return Err(WeylError::Hypothesis { m, measured: s, bound });
        }
        if shape > 0.0 {
            c = c.max(s / shape);
        }
    }
    Ok(c)
}

/// Worst `|S(y; n) - S(x; n)|` over uniform offsets `0 <= y_i - x_i < tau n^-i`
/// plus the upper-corner offset.
pub fn continuity_check(
    anchor: &RationalPoint,
    profile: &BoundProfile,
    n: u64,
    samples: usize,
    seed: u64,
) -> Result<BoundReport> {
    if n == 0 {
        return Err(WeylError::invalid("n", "must be at least 1"));
    }
    if samples == 0 {
        return Err(WeylError::invalid("samples", "must be at least 1"));
    }
    if !(profile.tau >= 0.0) || !profile.tau.is_finite() {
        return Err(WeylError::invalid("tau", "must be finite and >= 0"));
    }
    let fitted_c = fit_hypothesis(anchor, profile, n)?;
    let x = anchor.to_torus();
    let d = x.degree();
    let sx = eval_direct(&x, n)?;
    let limits: Vec<f64> = (1..=d)
        .map(|i| {
            if profile.leading_only && i < d {
                0.0
            } else {
                profile.tau * (n as f64).powi(-(i as i32))
            }
        })
        .collect();
    let diff = |offsets: &[f64]| -> Result<f64> {
        let y = x.translated(offsets)?;
        Ok((eval_direct(&y, n)? - sx).norm())
    };
    // largest double below each limit
    let corner: Vec<f64> = limits.iter().map(|&l| l * (1.0 - f64::EPSILON)).collect();
    let corner_lhs = diff(&corner)?;
    let mut lhs = corner_lhs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let offsets: Vec<f64> = limits.iter().map(|&l| rng.random::<f64>() * l).collect();
        lhs = lhs.max(diff(&offsets)?);
    }
    let rhs_unit = profile.tau * profile.shape(n as f64);
    let ratio = if rhs_unit > 0.0 {
        lhs / rhs_unit
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(BoundReport {
        profile: profile.clone(),
        n,
        lhs,
        rhs_unit,
        ratio,
        fitted_c,
        relative_ratio: if fitted_c > 0.0 { ratio / fitted_c } else { ratio },
        samples,
        corner_lhs,
    })
}

/// One [`continuity_check`] per `tau`, all with the same seed.
pub fn tau_scaling_probe(
    anchor: &RationalPoint,
    profile: &BoundProfile,
    n: u64,
    taus: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if taus.is_empty() {
        return Err(WeylError::invalid("taus", "at least one tau is required"));
    }
    if let Some(&bad) = taus.iter().find(|&&t| !(t > 0.0 && t <= TAU_CAP)) {
        return Err(WeylError::invalid(
            "taus",
            format!("each tau must lie in (0, {TAU_CAP}], got {bad}"),
        ));
    }
    taus.iter()
        .map(|&t| continuity_check(anchor, &profile.with_tau(t), n, samples, seed))
        .collect()
}
