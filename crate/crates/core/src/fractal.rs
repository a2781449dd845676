//! Box-counting dimension and the random Cantor set.
//!
//! A realization starts from the unit square; at every level each surviving
//! square is split into four quadrants and one of them, chosen uniformly and
//! independently, is removed. After `n` levels `3^n` squares of side `2^-n`
//! survive and the natural measure gives each of them mass `3^-n`.

use crate::compensated::CompensatedSum;
use crate::error::{Result, WeylError};
use crate::explore::ls_slope;
use crate::sumcore::{PartialSums, TorusPoint};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Finest box-counting scale, in bits.
pub const MAX_SCALE_BITS: u32 = 30;

/// Deepest supported realization (`3^15` surviving squares).
pub const MAX_CANTOR_DEPTH: u32 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountResult {
    /// Scale exponents `k` (box side `2^-k`).
    pub scales: Vec<u32>,
    pub counts: Vec<u64>,
    /// Least-squares slope of `log2(count)` against `k`.
    pub slope: f64,
    pub r2: f64,
}

fn to_fixed(c: f64) -> u32 {
    let v = (c * (1u64 << MAX_SCALE_BITS) as f64) as u64;
    v.min((1 << MAX_SCALE_BITS) - 1) as u32
}

/// Scales up to this many key bits are counted with a bitmap.
const BITMAP_BITS: u32 = 28;

/// Streaming box counter. Coarse scales are tracked with bitmaps as points
/// arrive; fixed-point coordinates are kept only if some scale is too fine
/// for a bitmap, and those scales are counted by sorting.
#[derive(Debug, Clone)]
pub struct BoxCounter {
    dim: usize,
    k_min: u32,
    k_max: u32,
    bitmaps: Vec<Vec<u64>>,
    bitmap_counts: Vec<u64>,
    fixed: Vec<u32>,
    keep_fixed: bool,
    points: u64,
}

impl BoxCounter {
    pub fn new(dim: usize, k_min: u32, k_max: u32) -> Result<Self> {
        if dim == 0 {
            return Err(WeylError::invalid("points", "points need at least one coordinate"));
        }
        if k_min > k_max || k_max > MAX_SCALE_BITS {
            return Err(WeylError::invalid(
                "scales",
                format!("need k_min <= k_max <= {MAX_SCALE_BITS}, got {k_min}..{k_max}"),
            ));
        }
        let mut bitmaps = Vec::new();
        let mut keep_fixed = false;
        for k in k_min..=k_max {
            match (dim as u32).checked_mul(k) {
                Some(bits) if bits <= BITMAP_BITS => bitmaps.push(vec![0u64; (1usize << bits).div_ceil(64)]),
                _ => keep_fixed = true,
            }
        }
        let n = bitmaps.len();
        Ok(Self {
            dim,
            k_min,
            k_max,
            bitmaps,
            bitmap_counts: vec![0; n],
            fixed: Vec::new(),
            keep_fixed,
            points: 0,
        })
    }

    pub fn add(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(WeylError::invalid("points", "points of mixed dimension"));
        }
        if point.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(WeylError::invalid("points", "coordinates must lie in [0, 1]"));
        }
        let mut fx = [0u32; 8];
        let fixed: Vec<u32>;
        let coords: &[u32] = if self.dim <= 8 {
            for (slot, &c) in fx.iter_mut().zip(point) {
                *slot = to_fixed(c);
            }
            &fx[..self.dim]
        } else {
            fixed = point.iter().map(|&c| to_fixed(c)).collect();
            &fixed
        };
        for (i, map) in self.bitmaps.iter_mut().enumerate() {
            let k = self.k_min + i as u32;
            let shift = MAX_SCALE_BITS - k;
            let idx = coords.iter().fold(0usize, |acc, &c| (acc << k) | (c >> shift) as usize);
            let (w, b) = (idx / 64, idx % 64);
            if map[w] & (1 << b) == 0 {
                map[w] |= 1 << b;
                self.bitmap_counts[i] += 1;
            }
        }
        if self.keep_fixed {
            self.fixed.extend_from_slice(coords);
        }
        self.points += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<BoxCountResult> {
        if self.points == 0 {
            return Err(WeylError::invalid("points", "at least one point is required"));
        }
        let mut scales = Vec::new();
        let mut counts = self.bitmap_counts.clone();
        for k in self.k_min..=self.k_max {
            scales.push(k);
            if (k - self.k_min) as usize >= self.bitmaps.len() {
                counts.push(self.sorted_count(k));
            }
        }
        let xs: Vec<f64> = scales.iter().map(|&k| k as f64).collect();
        let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).log2()).collect();
        let (slope, r2) = ls_slope(&xs, &ys).unwrap_or((0.0, 1.0));
        Ok(BoxCountResult {
            scales,
            counts,
            slope,
            r2,
        })
    }

    fn sorted_count(&self, k: u32) -> u64 {
        let shift = MAX_SCALE_BITS - k;
        let rows = self.fixed.chunks_exact(self.dim);
        if self.dim as u32 * k <= 128 {
            let mut keys: Vec<u128> = rows
                .map(|p| p.iter().fold(0u128, |acc, &c| (acc << k) | (c >> shift) as u128))
                .collect();
            keys.sort_unstable();
            keys.dedup();
            keys.len() as u64
        } else {
            let mut keys: Vec<Vec<u32>> = rows.map(|p| p.iter().map(|&c| c >> shift).collect()).collect();
            keys.sort_unstable();
            keys.dedup();
            keys.len() as u64
        }
    }
}

/// Occupied dyadic boxes of side `2^-k` for `k = k_min..=k_max`.
///
/// Coordinates must lie in `[0, 1]`; they are truncated to 30-bit fixed
/// point and boxes are identified by bit shifts.
pub fn box_count<P: AsRef<[f64]>>(points: &[P], k_min: u32, k_max: u32) -> Result<BoxCountResult> {
    let first = points
        .first()
        .ok_or_else(|| WeylError::invalid("points", "at least one point is required"))?;
    let mut counter = BoxCounter::new(first.as_ref().len(), k_min, k_max)?;
    for p in points {
        counter.add(p.as_ref())?;
    }
    counter.finish()
}

/// A depth-`n` random Cantor set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CantorRealization {
    pub depth: u32,
    pub seed: u64,
    /// Removed quadrant (0-3) of every surviving square, level by level in
    /// breadth-first order. Quadrant `q` has offsets `(q & 1, q >> 1)`.
    pub removals: Vec<u8>,
}

fn pow3(k: u32) -> u64 {
    3u64.pow(k)
}

/// Index of the first removal digit of level `level`.
fn level_offset(level: u32) -> usize {
    ((pow3(level) - 1) / 2) as usize
}

impl CantorRealization {
    pub fn kept_count(&self) -> u64 {
        pow3(self.depth)
    }

    fn removed(&self, level: u32, index: u64) -> u8 {
        self.removals[level_offset(level) + index as usize]
    }

    /// The three kept quadrants of square `index` at `level`, in order.
    fn kept(&self, level: u32, index: u64) -> [u8; 3] {
        let r = self.removed(level, index);
        let mut out = [0u8; 3];
        let mut k = 0;
        for q in 0..4u8 {
            if q != r {
                out[k] = q;
                k += 1;
            }
        }
        out
    }

    /// Surviving squares at the final depth as `(ix, iy)` in units of `2^-depth`.
    pub fn squares(&self) -> Vec<(u64, u64)> {
        let mut level = vec![(0u64, 0u64)];
        for l in 0..self.depth {
            let mut next = Vec::with_capacity(level.len() * 3);
            for (i, &(x, y)) in level.iter().enumerate() {
                for q in self.kept(l, i as u64) {
                    next.push((2 * x + (q & 1) as u64, 2 * y + (q >> 1) as u64));
                }
            }
            level = next;
        }
        level
    }

    /// Compact text form: depth, seed and the base-4 removal string.
    pub fn to_text(&self) -> String {
        let digits: String = self.removals.iter().map(|&d| (b'0' + d) as char).collect();
        format!("{}\t{}\t{}", self.depth, self.seed, digits)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim_end_matches(['\n', '\r']).split('\t').collect();
        if parts.len() != 3 && !(parts.len() == 2 && parts[0] == "0") {
            return Err(WeylError::Parse("realization needs depth, seed and digits".into()));
        }
        let depth: u32 = parts[0]
            .parse()
            .map_err(|_| WeylError::Parse(format!("bad depth `{}`", parts[0])))?;
        let seed: u64 = parts[1]
            .parse()
            .map_err(|_| WeylError::Parse(format!("bad seed `{}`", parts[1])))?;
        let digits = parts.get(2).copied().unwrap_or("");
        if depth > MAX_CANTOR_DEPTH {
            return Err(WeylError::Parse(format!("depth {depth} exceeds {MAX_CANTOR_DEPTH}")));
        }
        let removals = digits
            .bytes()
            .map(|b| match b {
                b'0'..=b'3' => Ok(b - b'0'),
                _ => Err(WeylError::Parse(format!("`{}` is not a base-4 digit", b as char))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if removals.len() != level_offset(depth) {
            return Err(WeylError::Parse(format!(
                "depth {depth} needs {} digits, got {}",
                level_offset(depth),
                removals.len()
            )));
        }
        Ok(Self {
            depth,
            seed,
            removals,
        })
    }
}

impl fmt::Display for CantorRealization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Expands a realization from `seed`, drawing removal digits breadth first.
pub fn cantor_sample(depth: u32, seed: u64) -> Result<CantorRealization> {
    if depth > MAX_CANTOR_DEPTH {
        return Err(WeylError::Capacity(format!(
            "depth {depth} exceeds the cap {MAX_CANTOR_DEPTH}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let removals = (0..level_offset(depth)).map(|_| rng.random_range(0..4u8)).collect();
    Ok(CantorRealization {
        depth,
        seed,
        removals,
    })
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let r = Self { x0, y0, x1, y1 };
        if ![x0, y0, x1, y1].iter().all(|c| (0.0..=1.0).contains(c)) || x0 > x1 || y0 > y1 {
            return Err(WeylError::invalid(
                "rect",
                format!("need 0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1, got {x0},{y0},{x1},{y1}"),
            ));
        }
        Ok(r)
    }

    pub fn unit() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

impl FromStr for Rect {
    type Err = WeylError;

    /// `x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| WeylError::Parse(format!("bad rectangle coordinate `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != 4 {
            return Err(WeylError::Parse(format!("rectangle needs 4 numbers, got {}", v.len())));
        }
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

/// Length of `[a0, a1] ∩ [b0, b1]`.
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// `mu_n(rect)`: total of `area(rect ∩ Q) (4/3)^n` over surviving depth-`n`
/// squares `Q`, by tree descent. Squares inside the rectangle contribute
/// their full mass `3^-level` without further descent.
pub fn cantor_measure(real: &CantorRealization, rect: &Rect) -> f64 {
    let n = real.depth;
    let density = (4.0f64 / 3.0).powi(n as i32);
    let mut acc = CompensatedSum::new();
    // (level, index, ix, iy)
    let mut stack = vec![(0u32, 0u64, 0u64, 0u64)];
    while let Some((level, index, ix, iy)) = stack.pop() {
        let side = 0.5f64.powi(level as i32);
        let (sx0, sy0) = (ix as f64 * side, iy as f64 * side);
        let (sx1, sy1) = (sx0 + side, sy0 + side);
        let w = overlap(sx0, sx1, rect.x0, rect.x1);
        let h = overlap(sy0, sy1, rect.y0, rect.y1);
        if w == 0.0 || h == 0.0 {
            continue;
        }
        if w == side && h == side {
            acc.add(1.0 / pow3(level) as f64);
            continue;
        }
        if level == n {
            acc.add(w * h * density);
            continue;
        }
        for (rank, q) in real.kept(level, index).into_iter().enumerate() {
            stack.push((
                level + 1,
                3 * index + rank as u64,
                2 * ix + (q & 1) as u64,
                2 * iy + (q >> 1) as u64,
            ));
        }
    }
    acc.value()
}

/// Rectangle with exact rational corners.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalRect {
    pub x0: BigRational,
    pub y0: BigRational,
    pub x1: BigRational,
    pub y1: BigRational,
}

impl RationalRect {
    /// The exact dyadic rectangle represented by floating corners.
    pub fn from_rect(r: &Rect) -> Self {
        let q = |v: f64| BigRational::from_float(v).expect("finite");
        Self {
            x0: q(r.x0),
            y0: q(r.y0),
            x1: q(r.x1),
            y1: q(r.y1),
        }
    }

    pub fn area(&self) -> BigRational {
        (&self.x1 - &self.x0) * (&self.y1 - &self.y0)
    }
}

fn overlap_exact(a0: &BigRational, a1: &BigRational, b0: &BigRational, b1: &BigRational) -> BigRational {
    let hi = if a1 < b1 { a1 } else { b1 };
    let lo = if a0 > b0 { a0 } else { b0 };
    if hi > lo {
        hi - lo
    } else {
        BigRational::zero()
    }
}

/// [`cantor_measure`] in exact rational arithmetic.
pub fn cantor_measure_exact(real: &CantorRealization, rect: &RationalRect) -> BigRational {
    let n = real.depth;
    let density = BigRational::new(BigInt::from(4u64.pow(n)), BigInt::from(pow3(n)));
    let mut total = BigRational::zero();
    let mut stack = vec![(0u32, 0u64, 0u64, 0u64)];
    while let Some((level, index, ix, iy)) = stack.pop() {
        let side = BigRational::new(BigInt::one(), BigInt::from(1u64 << level));
        let sx0 = &side * BigInt::from(ix);
        let sy0 = &side * BigInt::from(iy);
        let sx1 = &sx0 + &side;
        let sy1 = &sy0 + &side;
        let w = overlap_exact(&sx0, &sx1, &rect.x0, &rect.x1);
        let h = overlap_exact(&sy0, &sy1, &rect.y0, &rect.y1);
        if w.is_zero() || h.is_zero() {
            continue;
        }
        if w == side && h == side {
            total += BigRational::new(BigInt::one(), BigInt::from(pow3(level)));
            continue;
        }
        if level == n {
            total += w * h * &density;
            continue;
        }
        for (rank, q) in real.kept(level, index).into_iter().enumerate() {
            stack.push((
                level + 1,
                3 * index + rank as u64,
                2 * ix + (q & 1) as u64,
                2 * iy + (q >> 1) as u64,
            ));
        }
    }
    total
}

/// SplitMix64 finaliser: decorrelated per-trial seeds from `(seed, trial)`.
pub fn derive_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed
        .wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub mean: f64,
    pub stderr: f64,
    pub lebesgue_area: f64,
    pub trials: usize,
    pub depth: u32,
}

/// Monte Carlo mean of `mu_n(rect)` over independent realizations.
///
/// Trial `t` uses seed `derive_seed(seed, t)`; values are reduced in trial
/// order, so the result does not depend on scheduling.
pub fn cantor_expectation_test(rect: &Rect, depth: u32, trials: usize, seed: u64) -> Result<ExpectationResult> {
    if trials < 100 {
        return Err(WeylError::invalid("trials", format!("must be at least 100, got {trials}")));
    }
    if depth > MAX_CANTOR_DEPTH {
        return Err(WeylError::Capacity(format!("depth {depth} exceeds the cap {MAX_CANTOR_DEPTH}")));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let real = cantor_sample(depth, derive_seed(seed, t)).expect("depth checked");
            cantor_measure(&real, rect)
        })
        .collect();
    let n = trials as f64;
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value()
        / (n - 1.0);
    Ok(ExpectationResult {
        mean,
        stderr: (var / n).sqrt(),
        lebesgue_area: rect.area(),
        trials,
        depth,
    })
}

/// Points distributed by the depth-`n` natural measure: descend choosing one
/// of the three children uniformly, then draw uniformly in the final square.
pub fn cantor_draw(real: &CantorRealization, seed: u64, count: usize) -> Result<Vec<(f64, f64)>> {
    if count == 0 {
        return Err(WeylError::invalid("count", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 0.5f64.powi(real.depth as i32);
    Ok((0..count)
        .map(|_| {
            let (mut index, mut ix, mut iy) = (0u64, 0u64, 0u64);
            for level in 0..real.depth {
                let rank = rng.random_range(0..3usize);
                let q = real.kept(level, index)[rank];
                index = 3 * index + rank as u64;
                ix = 2 * ix + (q & 1) as u64;
                iy = 2 * iy + (q >> 1) as u64;
            }
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            ((ix as f64 + u) * side, (iy as f64 + v) * side)
        })
        .collect())
}

/// Normalisations `g(ln N)` for the Weyl statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GFunction {
    One,
    Ln,
    LnCubeRoot,
    LnSixthRoot,
}

impl GFunction {
    pub const ALL: [GFunction; 4] = [
        GFunction::One,
        GFunction::Ln,
        GFunction::LnCubeRoot,
        GFunction::LnSixthRoot,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GFunction::One => "1",
            GFunction::Ln => "ln",
            GFunction::LnCubeRoot => "ln^(1/3)",
            GFunction::LnSixthRoot => "ln^(1/6)",
        }
    }

    /// `g(t)` at `t = ln N`.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            GFunction::One => 1.0,
            GFunction::Ln => t,
            GFunction::LnCubeRoot => t.cbrt(),
            GFunction::LnSixthRoot => t.powf(1.0 / 6.0),
        }
    }
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GFunction {
    type Err = WeylError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "one" => Ok(GFunction::One),
            "ln" | "log" => Ok(GFunction::Ln),
            "ln^(1/3)" | "ln1/3" | "cbrt-ln" => Ok(GFunction::LnCubeRoot),
            "ln^(1/6)" | "ln1/6" => Ok(GFunction::LnSixthRoot),
            other => Err(WeylError::Parse(format!(
                "unknown g `{other}` (expected 1, ln, ln^(1/3) or ln^(1/6))"
            ))),
        }
    }
}

/// Smallest `N` in the statistic, so that `ln N > 1`.
pub const WEYL_STAT_MIN_N: u64 = 3;

/// `max_{3 <= N <= n_max} |S_2(x; N)| / (sqrt(N) g(ln N))` for every `g` in
/// [`GFunction::ALL`], in one pass.
pub fn weyl_statistic(x: &TorusPoint, n_max: u64) -> Result<[f64; 4]> {
    if n_max < WEYL_STAT_MIN_N {
        return Err(WeylError::invalid("n_max", format!("must be at least {WEYL_STAT_MIN_N}")));
    }
    let mut best = [0.0f64; 4];
    let mut sums = PartialSums::new(x);
    sums.advance_by(WEYL_STAT_MIN_N - 1);
    sums.visit(n_max - WEYL_STAT_MIN_N + 1, |n, s| {
        let nf = n as f64;
        let base = s.norm() / nf.sqrt();
        let t = nf.ln();
        for (slot, g) in best.iter_mut().zip(GFunction::ALL) {
            *slot = slot.max(base / g.eval(t));
        }
    });
    Ok(best)
}

/// Distribution summary of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub g: GFunction,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(g: GFunction, values: &[f64]) -> StatSummary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    StatSummary {
        g,
        count: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    }
}

/// Samples points from `realizations` independent depth-`depth` Cantor
/// sets (`per_realization` points each) and summarises the Weyl statistic
/// for every normalisation. `forced` points are included as extra samples.
pub fn cantor_weyl_statistic(
    depth: u32,
    realizations: usize,
    per_realization: usize,
    n_max: u64,
    seed: u64,
    forced: &[(f64, f64)],
) -> Result<Vec<StatSummary>> {
    if realizations == 0 && forced.is_empty() {
        return Err(WeylError::invalid("realizations", "no samples requested"));
    }
    if realizations > 0 && per_realization == 0 {
        return Err(WeylError::invalid("per_realization", "must be at least 1"));
    }
    if n_max < WEYL_STAT_MIN_N {
        return Err(WeylError::invalid("n_max", format!("must be at least {WEYL_STAT_MIN_N}")));
    }
    let mut points = forced.to_vec();
    for r in 0..realizations as u64 {
        let real = cantor_sample(depth, derive_seed(seed, 2 * r))?;
        points.extend(cantor_draw(&real, derive_seed(seed, 2 * r + 1), per_realization)?);
    }
    let stats: Vec<[f64; 4]> = points
        .par_iter()
        .map(|&(a, b)| weyl_statistic(&TorusPoint::new(&[a, b]).expect("finite"), n_max))
        .collect::<Result<_>>()?;
    Ok(GFunction::ALL
        .iter()
        .enumerate()
        .map(|(i, &g)| summarize(g, &stats.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_has_dimension_zero() {
        let r = box_count(&[vec![0.3, 0.7]], 0, 10).unwrap();
        assert!(r.counts.iter().all(|&c| c == 1));
        assert_eq!(r.slope, 0.0);
    }

    #[test]
    fn full_grid_has_dimension_two() {
        let k = 8;
        let side = 1u32 << k;
        let pts: Vec<Vec<f64>> = (0..side)
            .flat_map(|i| (0..side).map(move |j| vec![i as f64 / side as f64, j as f64 / side as f64]))
            .collect();
        let r = box_count(&pts, 0, k).unwrap();
        for (s, c) in r.scales.iter().zip(&r.counts) {
            assert_eq!(*c, 4u64.pow(*s));
        }
        assert!((r.slope - 2.0).abs() < 1e-12);
        // sort-based path agrees with the bitmap path
        let fine = box_count(&pts, 15, 16).unwrap();
        assert_eq!(fine.counts, vec![(side * side) as u64; 2]);
    }

    #[test]
    fn box_count_contract() {
        assert!(box_count::<Vec<f64>>(&[], 0, 3).is_err());
        assert!(box_count(&[vec![0.5]], 3, 31).is_err());
        assert!(box_count(&[vec![1.5]], 0, 3).is_err());
        assert!(box_count(&[vec![0.5], vec![0.1, 0.2]], 0, 3).is_err());
        let r = box_count(&[vec![1.0], vec![0.0]], 1, 1).unwrap();
        assert_eq!(r.counts, vec![2]);
    }

    #[test]
    fn realization_shapes() {
        let r0 = cantor_sample(0, 1).unwrap();
        assert_eq!(r0.kept_count(), 1);
        assert_eq!(r0.squares(), vec![(0, 0)]);
        let r1 = cantor_sample(1, 1).unwrap();
        assert_eq!(r1.squares().len(), 3);
        let r2 = cantor_sample(2, 9).unwrap();
        assert_eq!(r2.squares().len(), 9);
        assert_eq!(r2, cantor_sample(2, 9).unwrap());
        assert!(cantor_sample(16, 0).is_err());
        // every square lies inside a surviving parent
        let r5 = cantor_sample(5, 3).unwrap();
        let mut sq = r5.squares();
        sq.sort();
        sq.dedup();
        assert_eq!(sq.len(), 243);
    }

    #[test]
    fn text_round_trip() {
        for depth in [0, 1, 4] {
            let r = cantor_sample(depth, 77).unwrap();
            assert_eq!(CantorRealization::from_text(&r.to_text()).unwrap(), r);
        }
        assert!(CantorRealization::from_text("2\t0\t000").is_err());
        assert!(CantorRealization::from_text("1\t0\t4").is_err());
    }

    #[test]
    fn measure_exact_values() {
        let r = cantor_sample(6, 42).unwrap();
        assert_eq!(cantor_measure(&r, &Rect::unit()), 1.0);
        let unit = RationalRect::from_rect(&Rect::unit());
        assert_eq!(cantor_measure_exact(&r, &unit), BigRational::one());
        let side = 1.0 / 64.0;
        for &(ix, iy) in r.squares().iter().take(20) {
            let q = Rect::new(ix as f64 * side, iy as f64 * side, (ix + 1) as f64 * side, (iy + 1) as f64 * side).unwrap();
            let m = cantor_measure_exact(&r, &RationalRect::from_rect(&q));
            assert_eq!(m, BigRational::new(BigInt::one(), BigInt::from(729)));
            assert!((cantor_measure(&r, &q) - 1.0 / 729.0).abs() < 1e-18);
        }
        // removed level-1 quadrant
        let q = r.removals[0];
        let (ox, oy) = ((q & 1) as f64 * 0.5, (q >> 1) as f64 * 0.5);
        let removed = Rect::new(ox, oy, ox + 0.5, oy + 0.5).unwrap();
        assert_eq!(cantor_measure(&r, &removed), 0.0);
    }

    #[test]
    fn measure_is_additive_and_bounded() {
        let r = cantor_sample(7, 5).unwrap();
        let whole = Rect::new(0.125, 0.25, 0.875, 0.625).unwrap();
        let left = Rect::new(0.125, 0.25, 0.375, 0.625).unwrap();
        let right = Rect::new(0.375, 0.25, 0.875, 0.625).unwrap();
        let m = |rect: &Rect| cantor_measure_exact(&r, &RationalRect::from_rect(rect));
        assert_eq!(m(&left) + m(&right), m(&whole));
        let density = BigRational::new(BigInt::from(4u64.pow(7)), BigInt::from(3u64.pow(7)));
        assert!(m(&whole) <= RationalRect::from_rect(&whole).area() * density);
        // float and exact agree for a non-dyadic rectangle
        let odd = Rect::new(0.1, 0.2, 0.3, 0.7).unwrap();
        let exact: f64 = num_traits::ToPrimitive::to_f64(&m(&odd)).unwrap();
        assert!((cantor_measure(&r, &odd) - exact).abs() < 1e-12);
    }

    #[test]
    fn refinement_preserves_square_mass() {
        // a deeper realization with the same leading digits
        let deep = cantor_sample(6, 8).unwrap();
        let shallow = CantorRealization {
            depth: 4,
            seed: 8,
            removals: deep.removals[..level_offset(4)].to_vec(),
        };
        let side = 1.0 / 16.0;
        for &(ix, iy) in &shallow.squares() {
            let q = Rect::new(ix as f64 * side, iy as f64 * side, (ix + 1) as f64 * side, (iy + 1) as f64 * side).unwrap();
            let a = cantor_measure_exact(&shallow, &RationalRect::from_rect(&q));
            let b = cantor_measure_exact(&deep, &RationalRect::from_rect(&q));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn expectation_unit_and_depth_one() {
        let e = cantor_expectation_test(&Rect::unit(), 3, 100, 0).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        // enumeration oracle: each of the four removals is equally likely
        let quarter = Rect::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let exact: f64 = (0..4u8)
            .map(|q| {
                let r = CantorRealization { depth: 1, seed: 0, removals: vec![q] };
                cantor_measure(&r, &quarter)
            })
            .sum::<f64>()
            / 4.0;
        assert_eq!(exact, 0.25);
        let e = cantor_expectation_test(&quarter, 1, 20_000, 3).unwrap();
        assert!((e.mean - 0.25).abs() <= 3.0 * e.stderr);
        assert_eq!(e, cantor_expectation_test(&quarter, 1, 20_000, 3).unwrap());
        assert!(cantor_expectation_test(&quarter, 1, 99, 3).is_err());
    }

    #[test]
    fn drawn_points_stay_in_surviving_squares() {
        let r = cantor_sample(5, 12).unwrap();
        let pts = cantor_draw(&r, 1, 30_000).unwrap();
        let squares: std::collections::HashSet<(u64, u64)> = r.squares().into_iter().collect();
        let mut freq = std::collections::HashMap::new();
        for &(x, y) in &pts {
            let key = ((x * 32.0) as u64, (y * 32.0) as u64);
            assert!(squares.contains(&key));
            *freq.entry(key).or_insert(0u32) += 1;
        }
        // 243 squares, expected 123.5 hits each; binomial sd about 11
        let expect = 30_000.0 / 243.0;
        for (_, &c) in &freq {
            assert!((c as f64 - expect).abs() < 6.0 * expect.sqrt(), "{c}");
        }
        let uniform = cantor_draw(&cantor_sample(0, 0).unwrap(), 2, 1000).unwrap();
        assert!(uniform.iter().all(|&(x, y)| (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)));
    }

    #[test]
    fn weyl_statistic_on_zero_point() {
        let s = weyl_statistic(&TorusPoint::zero(2), 10_000).unwrap();
        assert!((s[0] - 100.0).abs() < 1e-9);
        let table = cantor_weyl_statistic(3, 2, 5, 2000, 4, &[(0.0, 0.0)]).unwrap();
        assert_eq!(table.len(), 4);
        assert!((table[0].max - 2000f64.sqrt()).abs() < 1e-9);
        for row in &table {
            assert_eq!(row.count, 11);
            assert!(row.max.is_finite());
            assert!(row.min <= row.q1 && row.q1 <= row.median && row.median <= row.q3 && row.q3 <= row.max);
        }
        assert!(weyl_statistic(&TorusPoint::zero(2), 2).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|t| derive_seed(7, t)).collect();
        assert_eq!(s.len(), 1000);
    }
}
