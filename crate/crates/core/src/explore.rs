//! Finite-horizon probes of small values, orbit shape and growth of Weyl
//! sums. Every output is a statistic of a finite scan and records its
//! horizon; none of them decides membership in a limit set.

use crate::error::{Result, WeylError};
use crate::exactzero::RationalPoint;
use crate::families::lambda_numerators;
use crate::primes::{permutes_residues, sieve};
use crate::sumcore::{PartialSums, TorusPoint, MAX_TERMS};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn check_horizon(n: u64, name: &'static str) -> Result<()> {
    if n == 0 {
        return Err(WeylError::invalid(name, "must be at least 1"));
    }
    if n > MAX_TERMS {
        return Err(WeylError::invalid(name, "exceeds 2^53 - 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfEstimate {
    pub point: Vec<f64>,
    pub n_max: u64,
    pub min_abs: f64,
    pub argmin_n: u64,
    /// Running minimum at powers of two and at `n_max`.
    pub record_curve: Vec<(u64, f64)>,
}

/// `min_{N <= n_max} |S(x; N)|`, examining every `N`.
pub fn liminf_estimate(x: &TorusPoint, n_max: u64) -> Result<LiminfEstimate> {
    check_horizon(n_max, "n_max")?;
    let mut min_abs = f64::INFINITY;
    let mut argmin_n = 0;
    let mut curve = Vec::new();
    let mut next_mark = 1u64;
    PartialSums::new(x).visit(n_max, |n, s| {
        let a = s.norm();
        if a < min_abs {
            min_abs = a;
            argmin_n = n;
        }
        if n == next_mark || n == n_max {
            curve.push((n, min_abs));
            if n == next_mark {
                next_mark = next_mark.saturating_mul(2);
            }
        }
    });
    Ok(LiminfEstimate {
        point: x.coords(),
        n_max,
        min_abs,
        argmin_n,
        record_curve: curve,
    })
}

/// Best small value found by [`search_small`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub success: bool,
    pub point: Vec<f64>,
    pub n: u64,
    pub abs: f64,
    pub evaluations: usize,
    /// The vanishing anchor the point was taken at or refined toward.
    pub anchor: Option<String>,
}

/// Exact anchors of degree `d` whose sum vanishes over at most `n_cap`
/// terms, in order of increasing span, restricted to the region.
fn anchors_in_region(region: &[(f64, f64)], d: usize, n_cap: u64, limit: usize) -> Vec<(RationalPoint, u64)> {
    let inside = |pt: &RationalPoint| {
        pt.numerators().iter().zip(region).all(|(&a, &(lo, hi))| {
            let x = a as f64 / pt.modulus() as f64;
            lo <= x && x <= hi
        })
    };
    let mut out = Vec::new();
    let push = |out: &mut Vec<(RationalPoint, u64)>, pt: RationalPoint, span: u64| {
        if out.len() < limit && inside(&pt) {
            out.push((pt, span));
        }
    };
    match d {
        1 => {
            // e(a n / m) sums to zero over m terms when m does not divide a
            for m in 2..=n_cap.min(1 << 20) {
                let lo = (region[0].0 * m as f64).ceil().max(0.0) as u64;
                let hi = ((region[0].1 * m as f64).floor() as u64).min(m - 1);
                for a in lo..=hi {
                    if a % m != 0 && a.gcd(&m) == 1 {
                        push(&mut out, RationalPoint::new(&[a], m).unwrap(), m);
                    }
                }
                if out.len() >= limit {
                    break;
                }
            }
        }
        2 => {
            for p in sieve((n_cap / 4).min(1 << 20)).into_iter().filter(|&p| p >= 3) {
                let m = 4 * p;
                let range = |j: usize| {
                    let lo = (region[j].0 * m as f64).ceil().max(1.0) as u64;
                    let hi = ((region[j].1 * m as f64).floor() as u64).min(m - 1);
                    (lo..=hi).filter(move |v| v % 2 == 1 && v % p != 0)
                };
                for a in range(0) {
                    for b in range(1) {
                        push(&mut out, RationalPoint::new(&[a, b], m).unwrap(), m);
                    }
                }
                if out.len() >= limit {
                    break;
                }
            }
        }
        _ => {
            for p in sieve(n_cap.min(1 << 20)).into_iter().filter(|&p| p > d as u64) {
                if !permutes_residues(d as u64, p) {
                    continue;
                }
                for l in 1..p {
                    push(
                        &mut out,
                        RationalPoint::new(&lambda_numerators(d, p, l), p).unwrap(),
                        p,
                    );
                }
                if out.len() >= limit {
                    break;
                }
            }
        }
    }
    out
}

/// `(min_{N <= n_cap} |S(x; N)|, argmin)`.
fn scan_min(x: &TorusPoint, n_cap: u64) -> (f64, u64) {
    let mut best = (f64::INFINITY, 0);
    PartialSums::new(x).visit(n_cap, |n, s| {
        let a = s.norm();
        if a < best.0 {
            best = (a, n);
        }
    });
    best
}

/// Seeded multi-start search for `x` in the region and `N <= n_cap` with
/// `|S(x; N)| <= eps`.
///
/// Vanishing anchors inside the region are tried first (smallest span
/// first); then random points, each refined by halving its offset from the
/// nearest anchor. One evaluation is one scan of `N = 1..n_cap`.
pub fn search_small(
    region: &[(f64, f64)],
    d: usize,
    eps: f64,
    n_cap: u64,
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(WeylError::invalid("eps", format!("must be positive, got {eps}")));
    }
    if d == 0 || region.len() != d {
        return Err(WeylError::invalid(
            "region",
            format!("expected {d} intervals, got {}", region.len()),
        ));
    }
    if region
        .iter()
        .any(|&(lo, hi)| !(lo < hi) || lo < 0.0 || hi > 1.0 || !lo.is_finite() || !hi.is_finite())
    {
        return Err(WeylError::invalid("region", "each interval needs 0 <= lo < hi <= 1"));
    }
    check_horizon(n_cap, "n_cap")?;
    if budget == 0 {
        return Err(WeylError::invalid("budget", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluations = 0usize;
    let mut best = SearchOutcome {
        success: false,
        point: Vec::new(),
        n: 0,
        abs: f64::INFINITY,
        evaluations: 0,
        anchor: None,
    };
    let consider = |x: &TorusPoint, anchor: Option<&RationalPoint>, best: &mut SearchOutcome| {
        let (abs, n) = scan_min(x, n_cap);
        if abs < best.abs {
            *best = SearchOutcome {
                success: abs <= eps,
                point: x.coords(),
                n,
                abs,
                evaluations: 0,
                anchor: anchor.map(|a| a.to_string()),
            };
        }
        abs <= eps
    };
    let anchors = anchors_in_region(region, d, n_cap, budget.div_ceil(2).max(1));
    for (a, _) in &anchors {
        if evaluations >= budget {
            break;
        }
        evaluations += 1;
        if consider(&a.to_torus(), Some(a), &mut best) {
            best.evaluations = evaluations;
            return Ok(best);
        }
    }
    while evaluations < budget {
        let coords: Vec<f64> = region.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let x = TorusPoint::new(&coords)?;
        evaluations += 1;
        if consider(&x, None, &mut best) {
            break;
        }
        let nearest = anchors.iter().min_by(|(a, _), (b, _)| {
            let dist = |p: &RationalPoint| -> f64 {
                p.numerators()
                    .iter()
                    .zip(&coords)
                    .map(|(&v, &c)| (v as f64 / p.modulus() as f64 - c).powi(2))
                    .sum()
            };
            dist(a).total_cmp(&dist(b))
        });
        if let Some((a, _)) = nearest {
            let base: Vec<f64> = a
                .numerators()
                .iter()
                .map(|&v| v as f64 / a.modulus() as f64)
                .collect();
            let mut offset: Vec<f64> = coords.iter().zip(&base).map(|(c, b)| c - b).collect();
            let mut found = false;
            while evaluations < budget && offset.iter().any(|o| o.abs() > 1e-300) {
                offset.iter_mut().for_each(|o| *o *= 0.5);
                let y = a.to_torus().translated(&offset)?;
                evaluations += 1;
                if consider(&y, Some(a), &mut best) {
                    found = true;
                    break;
                }
            }
            if found {
                break;
            }
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

/// Orthogonal-regression line `{z : <z, normal> = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// Unit direction of the line.
    pub direction: (f64, f64),
    pub offset: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitStats {
    pub point: Vec<f64>,
    pub n_max: u64,
    pub max_abs: f64,
    pub argmax_n: u64,
    pub window: f64,
    pub grid: usize,
    pub cells_visited: u64,
    pub visited_fraction: f64,
    pub line_fit: LineFit,
    /// Log-log slope of the running maximum; `None` with fewer than two
    /// distinct checkpoints.
    pub growth_exponent: Option<f64>,
    pub checkpoints: Vec<(u64, f64)>,
}

/// Geometric checkpoints over the upper four decades of `[1, n_max]`.
fn growth_checkpoints(n_max: u64) -> Vec<u64> {
    let lo = (n_max as f64 / 1e4).max(1.0);
    let count = 32;
    let ratio = (n_max as f64 / lo).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<u64> = (0..count)
        .map(|i| ((lo * ratio.powi(i)).round() as u64).clamp(1, n_max))
        .collect();
    out.push(n_max);
    out.sort_unstable();
    out.dedup();
    out
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2))
}

/// Streaming statistics of the orbit `{S(x; N) : N <= n_max}`: maximum
/// modulus, grid occupancy of `[-W, W)^2`, orthogonal line fit with its
/// largest residual, and the growth exponent of the running maximum.
pub fn orbit_stats(x: &TorusPoint, n_max: u64, window: f64, grid: usize) -> Result<OrbitStats> {
    check_horizon(n_max, "n_max")?;
    if grid < 2 {
        return Err(WeylError::invalid("grid", "must be at least 2"));
    }
    if grid > 1 << 14 {
        return Err(WeylError::Capacity(format!("grid {grid} exceeds 16384 cells per side")));
    }
    if !(window > 0.0) || !window.is_finite() {
        return Err(WeylError::invalid("window", "must be positive"));
    }
    let marks = growth_checkpoints(n_max);
    let mut next = 0usize;
    let mut occupied = vec![false; grid * grid];
    let mut cells_visited = 0u64;
    let (mut max_abs, mut argmax_n) = (0.0f64, 0u64);
    // Welford means and co-moments
    let (mut mx, mut my, mut cxx, mut cyy, mut cxy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut checkpoints = Vec::with_capacity(marks.len());
    let scale = grid as f64 / (2.0 * window);
    PartialSums::new(x).visit(n_max, |n, s| {
        let a = s.norm();
        if a > max_abs {
            max_abs = a;
            argmax_n = n;
        }
        if s.re >= -window && s.re < window && s.im >= -window && s.im < window {
            let i = (((s.re + window) * scale) as usize).min(grid - 1);
            let j = (((s.im + window) * scale) as usize).min(grid - 1);
            let cell = &mut occupied[j * grid + i];
            if !*cell {
                *cell = true;
                cells_visited += 1;
            }
        }
        let k = n as f64;
        let dx = s.re - mx;
        let dy = s.im - my;
        mx += dx / k;
        my += dy / k;
        cxx += dx * (s.re - mx);
        cyy += dy * (s.im - my);
        cxy += dx * (s.im - my);
        if next < marks.len() && n == marks[next] {
            checkpoints.push((n, max_abs));
            next += 1;
        }
    });
    let theta = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    let (dir_x, dir_y) = (theta.cos(), theta.sin());
    let (nx, ny) = (-dir_y, dir_x);
    let offset = mx * nx + my * ny;
    let mut max_residual = 0.0f64;
    PartialSums::new(x).visit(n_max, |_, s| {
        max_residual = max_residual.max((s.re * nx + s.im * ny - offset).abs());
    });
    let usable: Vec<&(u64, f64)> = checkpoints.iter().filter(|(_, m)| *m > 0.0).collect();
    let growth_exponent = ls_slope(
        &usable.iter().map(|(n, _)| (*n as f64).ln()).collect::<Vec<_>>(),
        &usable.iter().map(|(_, m)| m.ln()).collect::<Vec<_>>(),
    )
    .map(|(s, _)| s);
    Ok(OrbitStats {
        point: x.coords(),
        n_max,
        max_abs,
        argmax_n,
        window,
        grid,
        cells_visited,
        visited_fraction: cells_visited as f64 / (grid * grid) as f64,
        line_fit: LineFit {
            direction: (dir_x, dir_y),
            offset,
            max_residual,
        },
        growth_exponent,
        checkpoints,
    })
}

/// Hits `|S(x; N)| >= N^alpha` for one point over `N in [n_min, n_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictedHits {
    pub point: Vec<f64>,
    pub hits: u64,
    pub largest_n: Option<u64>,
}

/// Finite-horizon proxy for membership in
/// `{x : |S_d(x; N)| >= N^alpha for infinitely many N}`.
pub fn restricted_membership_scan(
    d: usize,
    alpha: f64,
    points: &[TorusPoint],
    n_min: u64,
    n_max: u64,
) -> Result<Vec<RestrictedHits>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(WeylError::invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if n_min == 0 || n_min >= n_max {
        return Err(WeylError::invalid("n_min", "need 1 <= n_min < n_max"));
    }
    check_horizon(n_max, "n_max")?;
    if let Some(bad) = points.iter().find(|p| p.degree() != d) {
        return Err(WeylError::invalid(
            "points",
            format!("point of degree {} in a degree-{d} scan", bad.degree()),
        ));
    }
    Ok(points
        .par_iter()
        .map(|x| {
            let mut hits = 0;
            let mut largest_n = None;
            let mut sums = PartialSums::new(x);
            if n_min > 1 {
                sums.advance_by(n_min - 1);
            }
            sums.visit(n_max - n_min + 1, |n, s| {
                if s.norm_sqr() >= (n as f64).powf(2.0 * alpha) {
                    hits += 1;
                    largest_n = Some(n);
                }
            });
            RestrictedHits {
                point: x.coords(),
                hits,
                largest_n,
            }
        })
        .collect())
}

/// Points `(t, t^2)` for `t = i / count`, `i = 0..count`.
pub fn parabola_points(count: usize) -> Vec<TorusPoint> {
    (0..count)
        .map(|i| {
            let t = i as f64 / count as f64;
            TorusPoint::new(&[t, t * t]).expect("finite")
        })
        .collect()
}

/// Fraction of records with at least one hit.
pub fn hit_fraction(records: &[RestrictedHits]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.hits > 0).count() as f64 / records.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthBand {
    pub x: f64,
    pub y: f64,
    pub n_max: u64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub argmin_n: u64,
    pub argmax_n: u64,
}

/// `min` and `max` over `N <= n_max` of `|S_2((y, x); N)| / sqrt(N)`.
pub fn growth_band_check(x: f64, y: f64, n_max: u64) -> Result<GrowthBand> {
    check_horizon(n_max, "n_max")?;
    let pt = TorusPoint::new(&[y, x])?;
    let mut band = GrowthBand {
        x,
        y,
        n_max,
        c_lower: f64::INFINITY,
        c_upper: 0.0,
        argmin_n: 0,
        argmax_n: 0,
    };
    PartialSums::new(&pt).visit(n_max, |n, s| {
        let r = s.norm() / (n as f64).sqrt();
        if r < band.c_lower {
            band.c_lower = r;
            band.argmin_n = n;
        }
        if r > band.c_upper {
            band.c_upper = r;
            band.argmax_n = n;
        }
    });
    Ok(band)
}

/// Largest expansion depth accepted by [`cf_expand`].
pub const CF_MAX_DEPTH: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct CfExpansion {
    /// Partial quotients `a_1, a_2, ...` of `x = 1/(a_1 + 1/(a_2 + ...))`.
    pub quotients: Vec<BigUint>,
    /// Convergents `p_k / q_k`.
    pub convergents: Vec<(BigUint, BigUint)>,
    /// Number of leading quotients shared by every real within four ulps of
    /// the input (the rounding error of a few floating operations).
    pub reliable_depth: usize,
}

/// Continued fraction of the fractional part of `x`, to depth `k`.
///
/// The `f64` input is a dyadic rational and is expanded exactly; the
/// expansion stops early when it terminates.
pub fn cf_expand(x: f64, k: usize) -> Result<CfExpansion> {
    if !x.is_finite() {
        return Err(WeylError::invalid("x", "must be finite"));
    }
    if k == 0 || k > CF_MAX_DEPTH {
        return Err(WeylError::invalid(
            "k",
            format!("depth must lie in 1..={CF_MAX_DEPTH} (double-precision horizon), got {k}"),
        ));
    }
    let exact = BigRational::from_float(x).expect("finite");
    let frac = &exact - exact.floor();
    let slack = {
        let u = x.abs().max(f64::MIN_POSITIVE);
        let next = f64::from_bits(u.to_bits() + 1);
        BigRational::from_float(next - u).expect("finite") * BigInt::from(4)
    };
    let mut num = frac.numer().to_biguint().unwrap();
    let mut den = frac.denom().to_biguint().unwrap();
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    // p_{-1} = 1, q_{-1} = 0; p_0 = 0, q_0 = 1
    let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
    let (mut p, mut q) = (BigUint::zero(), BigUint::one());
    let mut reliable_depth = 0;
    let mut still_reliable = true;
    while quotients.len() < k && !num.is_zero() {
        let (a, r) = den.div_rem(&num);
        den = std::mem::replace(&mut num, r);
        let p_next = &a * &p + &p_prev;
        let q_next = &a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        quotients.push(a);
        convergents.push((p.clone(), q.clone()));
        if still_reliable {
            // reals whose expansion starts with a_1..a_k lie between p_k/q_k
            // and (p_k + p_{k-1}) / (q_k + q_{k-1})
            let ends = [
                BigRational::new(BigInt::from(p.clone()), BigInt::from(q.clone())),
                BigRational::new(
                    BigInt::from(&p + &p_prev),
                    BigInt::from(&q + &q_prev),
                ),
            ];
            let (lo, hi) = if ends[0] < ends[1] {
                (&ends[0], &ends[1])
            } else {
                (&ends[1], &ends[0])
            };
            if *lo < &frac - &slack && &frac + &slack < *hi {
                reliable_depth += 1;
            } else {
                still_reliable = false;
            }
        }
    }
    Ok(CfExpansion {
        quotients,
        convergents,
        reliable_depth,
    })
}

/// Empirical tail function of `N^{-1/2} |G(x; N)|` over a uniform x-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiCurve {
    pub n: u64,
    pub grid: usize,
    pub alphas: Vec<f64>,
    pub tail: Vec<f64>,
}

/// `alpha = 0, 0.05, ..., 3`.
pub fn psi_alphas() -> Vec<f64> {
    (0..=60).map(|i| i as f64 * 0.05).collect()
}

/// `Psi_N(alpha)`: fraction of `x = i / grid` with `N^{-1/2} |G(x; N)| >= alpha`.
pub fn psi_distribution(n: u64, grid: usize) -> Result<PsiCurve> {
    check_horizon(n, "n")?;
    if grid < 10 {
        return Err(WeylError::invalid("grid", "must be at least 10"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut values: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = TorusPoint::monomial(2, i as f64 / grid as f64).expect("finite");
            PartialSums::new(&x).advance_by(n).norm() * scale
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let alphas = psi_alphas();
    let tail = alphas
        .iter()
        .map(|&a| {
            let below = values.partition_point(|&v| v < a);
            (grid - below) as f64 / grid as f64
        })
        .collect();
    Ok(PsiCurve {
        n,
        grid,
        alphas,
        tail,
    })
}

/// `sup_alpha |Psi_a(alpha) - Psi_b(alpha)|` on the shared grid.
pub fn psi_sup_distance(a: &PsiCurve, b: &PsiCurve) -> f64 {
    a.tail
        .iter()
        .zip(&b.tail)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Convergent `p/q` as floats, for display.
pub fn convergent_value(c: &(BigUint, BigUint)) -> f64 {
    let r = BigRational::new(BigInt::from(c.0.clone()), BigInt::from(c.1.clone()));
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumcore::eval_direct;

    #[test]
    fn liminf_examples() {
        let x = TorusPoint::new(&[1.0 / 12.0, 1.0 / 12.0]).unwrap();
        let est = liminf_estimate(&x, 12).unwrap();
        assert!(est.min_abs < 1e-9);
        // the sum also vanishes at N = 4, so either index is a minimiser
        assert!(est.argmin_n == 4 || est.argmin_n == 12);
        assert!(est.record_curve.last().unwrap() == &(12, est.min_abs));
        assert!(eval_direct(&x, 12).unwrap().norm() < 1e-12);

        let zero = TorusPoint::zero(2);
        let est = liminf_estimate(&zero, 100).unwrap();
        assert_eq!(est.min_abs, 1.0);
        assert_eq!(est.argmin_n, 1);
        let ns: Vec<u64> = est.record_curve.iter().map(|c| c.0).collect();
        assert_eq!(ns, vec![1, 2, 4, 8, 16, 32, 64, 100]);
    }

    #[test]
    fn liminf_is_monotone_in_horizon() {
        let x = TorusPoint::new(&[0.3172, 0.2718]).unwrap();
        let mut last = f64::INFINITY;
        for n in [10, 100, 1000, 10_000] {
            let est = liminf_estimate(&x, n).unwrap();
            assert!(est.min_abs <= last);
            last = est.min_abs;
            let brute = (1..=n)
                .map(|m| eval_direct(&x, m).unwrap().norm())
                .fold(f64::INFINITY, f64::min);
            assert!((est.min_abs - brute).abs() < 1e-9);
        }
        let curve = liminf_estimate(&x, 10_000).unwrap().record_curve;
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn search_finds_anchor_on_whole_torus() {
        let out = search_small(&[(0.0, 1.0), (0.0, 1.0)], 2, 0.1, 1000, 50, 0).unwrap();
        assert!(out.success);
        assert!(out.abs <= 0.1);
        assert!(out.anchor.is_some());
    }

    #[test]
    fn search_in_subsquare_uses_family_anchor() {
        let out = search_small(&[(0.4, 0.6), (0.4, 0.6)], 2, 0.5, 1000, 50, 1).unwrap();
        assert!(out.success);
        assert!(out.point.iter().all(|&c| (0.4..=0.6).contains(&c)));
        let y = TorusPoint::new(&out.point).unwrap();
        assert!(eval_direct(&y, out.n).unwrap().norm() <= 0.5);
    }

    #[test]
    fn search_trivial_eps_and_failure_status() {
        let out = search_small(&[(0.31, 0.32)], 1, 25.0, 10, 3, 2).unwrap();
        assert!(out.success);
        // no anchor with span <= 2 in a tiny box, eps far below reach
        let out = search_small(&[(0.3001, 0.3002), (0.7001, 0.7002)], 2, 1e-12, 2, 4, 2).unwrap();
        assert!(!out.success);
        assert!(out.abs > 1e-12);
        assert!(search_small(&[(0.5, 0.4)], 1, 0.1, 10, 3, 0).is_err());
        assert!(search_small(&[(0.0, 1.0)], 2, 0.1, 10, 3, 0).is_err());
    }

    #[test]
    fn zero_orbit_lies_on_the_real_axis() {
        let st = orbit_stats(&TorusPoint::zero(1), 50, 100.0, 20).unwrap();
        assert_eq!(st.line_fit.max_residual, 0.0);
        assert_eq!(st.max_abs, 50.0);
        // cells of width 10 on row 10; N = 1..50 fills columns 10..15
        assert_eq!(st.cells_visited, 6);
        assert_eq!(st.visited_fraction, 6.0 / 400.0);
        let g = st.growth_exponent.unwrap();
        assert!((g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bounded_and_drifting_orbits() {
        let bounded = TorusPoint::new(&[1.0 / 52.0, 1.0 / 52.0]).unwrap();
        let a = orbit_stats(&bounded, 10_000, 20.0, 64).unwrap();
        let b = orbit_stats(&bounded, 100_000, 20.0, 64).unwrap();
        assert!((a.max_abs - b.max_abs).abs() / a.max_abs < 0.01);

        let drift = TorusPoint::new(&[1.0 / 5.0, 2.0 / 5.0]).unwrap();
        let st = orbit_stats(&drift, 100_000, 20.0, 64).unwrap();
        let g = st.growth_exponent.unwrap();
        assert!((0.9..=1.1).contains(&g), "growth {g}");
        assert!(st.line_fit.max_residual <= 4.0 * 5f64.sqrt());
    }

    #[test]
    fn restricted_scan_examples() {
        let zero = TorusPoint::zero(2);
        let recs = restricted_membership_scan(2, 0.5, &[zero], 10, 100).unwrap();
        assert_eq!(recs[0].hits, 91);
        assert_eq!(recs[0].largest_n, Some(100));

        let fam = TorusPoint::new(&[1.0 / 12.0, 1.0 / 12.0]).unwrap();
        let recs = restricted_membership_scan(2, 0.9, &[fam], 100, 10_000).unwrap();
        assert_eq!(recs[0].hits, 0);

        let par = parabola_points(50);
        let recs = restricted_membership_scan(2, 0.5, &par, 10, 1000).unwrap();
        let f = hit_fraction(&recs);
        assert!((0.0..=1.0).contains(&f));
        // brute-force oracle on one parabola point
        let x = &par[7];
        let hits = (10..=1000u64)
            .filter(|&n| eval_direct(x, n).unwrap().norm() >= (n as f64).sqrt())
            .count() as u64;
        assert_eq!(recs[7].hits, hits);
        assert!(restricted_membership_scan(2, 1.0, &par, 10, 100).is_err());
        assert!(restricted_membership_scan(2, 0.5, &par, 100, 100).is_err());
    }

    #[test]
    fn growth_band_examples() {
        let band = growth_band_check(2f64.sqrt() - 1.0, 0.0, 100_000).unwrap();
        assert!(band.c_lower > 0.0);
        assert!(band.c_upper < 10.0);
        let shifted = growth_band_check(2f64.sqrt() - 1.0, 0.377, 100_000).unwrap();
        assert!(shifted.c_lower > 0.0 && shifted.c_upper < 10.0);
        // rational leading coefficient with a nonzero period sum: linear drift
        let rat = growth_band_check(0.2, 0.0, 100_000).unwrap();
        assert!(rat.c_upper > 0.3 * 100_000f64.sqrt());
    }

    #[test]
    fn continued_fractions() {
        let half = cf_expand(0.5, 10).unwrap();
        assert_eq!(half.quotients, vec![BigUint::from(2u32)]);

        let s = cf_expand(2f64.sqrt() - 1.0, 40).unwrap();
        assert!(s.reliable_depth >= 15, "{}", s.reliable_depth);
        for a in &s.quotients[..s.reliable_depth] {
            assert_eq!(*a, BigUint::from(2u32));
        }
        // convergent oracle: q_k^2 - 2 p'_k^2 alternates for sqrt 2 - 1
        for (p, q) in s.convergents.iter().take(s.reliable_depth) {
            let (p, q) = (BigInt::from(p.clone()), BigInt::from(q.clone()));
            let pell = (&p + &q) * (&p + &q) - BigInt::from(2) * &q * &q;
            assert!(pell == BigInt::from(1) || pell == BigInt::from(-1));
        }

        let g = cf_expand((5f64.sqrt() - 1.0) / 2.0, 40).unwrap();
        assert!(g.reliable_depth >= 20);
        assert!(g.quotients[..g.reliable_depth].iter().all(|a| *a == BigUint::one()));

        assert!(cf_expand(0.3, 41).is_err());
        assert!(cf_expand(f64::NAN, 3).is_err());
        assert_eq!(cf_expand(1.25, 5).unwrap().quotients, vec![BigUint::from(4u32)]);
    }

    #[test]
    fn psi_tail_examples() {
        let c = psi_distribution(256, 400).unwrap();
        assert_eq!(c.tail[0], 1.0);
        assert_eq!(c.alphas.len(), 61);
        assert!(c.tail.windows(2).all(|w| w[1] <= w[0]));
        let small = psi_distribution(4, 100).unwrap();
        // alpha > sqrt(N) = 2 is never reached
        let idx = small.alphas.iter().position(|&a| a > 2.0).unwrap();
        assert!(small.tail[idx..].iter().all(|&t| t == 0.0));
        assert!(psi_distribution(10, 5).is_err());
    }
}
