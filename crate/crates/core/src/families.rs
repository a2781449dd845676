//! Structured point families whose sums vanish exactly, their
//! neighbourhood thresholds, and nested-interval constructions of points
//! that are approximated infinitely often by such families.

use crate::error::{Result, WeylError};
use crate::exactzero::{certify_zero, RationalPoint};
use crate::perturb::prefix_max_abs;
use crate::phase::fixed_from_ratio;
use crate::primes::{is_prime, permutes_residues, PRIME_SEARCH_CAP};
use crate::sumcore::{eval_direct, TorusPoint};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest prime for which [`enumerate_family`] lists every point.
pub const FULL_ENUMERATION_MAX_P: u64 = 200;

/// The vanishing families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `(a/4p, b/4p)` with `gcd(ab, 2p) = 1`; quadratic Weyl sum over `4p` terms.
    P,
    /// `b/2p` with `gcd(b, 2p) = 1`; Gauss sum over `2p` terms.
    Q,
    /// `b/p` with `1 <= b <= p`; degree-`d` monomial sum over `p` terms.
    R,
    /// `(C(d,1) l, ..., C(d,d) l^d) / p`; degree-`d` Weyl sum over `p` terms.
    LambdaBinomial,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::P => "P_p",
            Family::Q => "Q_p",
            Family::R => "R_p",
            Family::LambdaBinomial => "lambda-binomial",
        }
    }

    /// Number of terms over which the family's sums vanish.
    pub fn span(&self, p: u64) -> u64 {
        match self {
            Family::P => 4 * p,
            Family::Q => 2 * p,
            Family::R | Family::LambdaBinomial => p,
        }
    }

    /// Degree of the summed polynomial (`d` is ignored for quadratic families).
    pub fn sum_degree(&self, d: usize) -> usize {
        match self {
            Family::P | Family::Q => 2,
            Family::R | Family::LambdaBinomial => d,
        }
    }

    /// Shape of the incomplete-sum bound: `sqrt(p)` for Gauss sums,
    /// `sqrt(p) log p` otherwise.
    pub fn incomplete_bound(&self, p: u64) -> f64 {
        let p = p as f64;
        match self {
            Family::Q => p.sqrt(),
            _ => p.sqrt() * p.ln(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = WeylError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p_p" | "p" | "pp" => Ok(Family::P),
            "q_p" | "q" | "qp" => Ok(Family::Q),
            "r_p" | "r" | "rp" => Ok(Family::R),
            "lambda-binomial" | "lambda" | "binomial" => Ok(Family::LambdaBinomial),
            _ => Err(WeylError::Parse(format!(
                "unknown family `{s}` (expected P_p, Q_p, R_p or lambda-binomial)"
            ))),
        }
    }
}

/// One member of a vanishing family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub family: Family,
    pub prime: u64,
    /// `(a, b)` for `P_p`, `(b)` for `Q_p` and `R_p`, `(lambda)` for the
    /// binomial family.
    pub params: Vec<u64>,
    /// Coefficient vector of the summed polynomial.
    pub point: RationalPoint,
    pub vanishing_span: u64,
    /// Set only for the `b = p` member of `R_p`, whose sum is `p`, not 0.
    pub degenerate: bool,
}

impl FamilyPoint {
    /// Tab-separated record: family, prime, params, point, span, flag.
    pub fn to_line(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|v| v.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.family,
            self.prime,
            params.join(","),
            self.point,
            self.vanishing_span,
            if self.degenerate { "degenerate" } else { "vanishing" }
        )
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if fields.len() != 6 {
            return Err(WeylError::Parse(format!(
                "family record needs 6 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| WeylError::Parse(format!("`{s}` is not an integer")))
        };
        let params = fields[2]
            .split(',')
            .map(int)
            .collect::<Result<Vec<_>>>()?;
        let degenerate = match fields[5] {
            "degenerate" => true,
            "vanishing" => false,
            other => return Err(WeylError::Parse(format!("unknown flag `{other}`"))),
        };
        Ok(Self {
            family: fields[0].parse()?,
            prime: int(fields[1])?,
            params,
            point: fields[3].parse()?,
            vanishing_span: int(fields[4])?,
            degenerate,
        })
    }
}

fn inadmissible(family: Family, p: u64, constraint: &str) -> WeylError {
    WeylError::Inadmissible {
        family: family.to_string(),
        p,
        constraint: constraint.to_string(),
    }
}

/// Checks the family's constraints on `(p, d)`.
pub fn check_admissible(family: Family, p: u64, d: usize) -> Result<()> {
    if !is_prime(p) {
        return Err(inadmissible(family, p, "p must be prime"));
    }
    match family {
        Family::P | Family::Q => {
            if p < 3 {
                return Err(inadmissible(family, p, "p >= 3"));
            }
        }
        Family::R => {
            if d < 3 {
                return Err(inadmissible(family, p, "degree d >= 3"));
            }
            if p < 3 {
                return Err(inadmissible(family, p, "p >= 3"));
            }
            if !permutes_residues(d as u64, p) {
                return Err(inadmissible(family, p, "gcd(d, p - 1) = 1"));
            }
        }
        Family::LambdaBinomial => {
            if d < 3 {
                return Err(inadmissible(family, p, "degree d >= 3"));
            }
            if p <= d as u64 {
                return Err(inadmissible(family, p, "p > d"));
            }
            if !permutes_residues(d as u64, p) {
                return Err(inadmissible(family, p, "gcd(d, p - 1) = 1"));
            }
        }
    }
    Ok(())
}

/// Binomial coefficients `C(d, j) mod p` for `j = 1..=d`.
fn binomials_mod(d: usize, p: u64) -> Vec<u64> {
    let mut row = vec![1u64];
    for _ in 0..d {
        let mut next = vec![1u64; row.len() + 1];
        for j in 1..row.len() {
            next[j] = (row[j - 1] + row[j]) % p;
        }
        row = next;
    }
    row[1..].to_vec()
}

/// `(C(d,1) l, C(d,2) l^2, ..., C(d,d) l^d) mod p`.
pub fn lambda_numerators(d: usize, p: u64, lambda: u64) -> Vec<u64> {
    let mut pow = 1u64;
    binomials_mod(d, p)
        .into_iter()
        .map(|c| {
            pow = pow * (lambda % p) % p;
            c * pow % p
        })
        .collect()
}

/// Builds one family member after validating its parameters.
pub fn family_point(family: Family, p: u64, d: usize, params: &[u64]) -> Result<FamilyPoint> {
    check_admissible(family, p, d)?;
    let want = if family == Family::P { 2 } else { 1 };
    if params.len() != want {
        return Err(WeylError::invalid(
            "params",
            format!("{family} takes {want} parameter(s), got {}", params.len()),
        ));
    }
    let span = family.span(p);
    let (point, degenerate) = match family {
        Family::P => {
            let (a, b) = (params[0], params[1]);
            if !(1..=4 * p).contains(&a) || !(1..=4 * p).contains(&b) {
                return Err(inadmissible(family, p, "1 <= a, b <= 4p"));
            }
            if (a * b).gcd(&(2 * p)) != 1 {
                return Err(inadmissible(family, p, "gcd(ab, 2p) = 1"));
            }
            (RationalPoint::new(&[a, b], 4 * p)?, false)
        }
        Family::Q => {
            let b = params[0];
            if !(1..=2 * p).contains(&b) || b.gcd(&(2 * p)) != 1 {
                return Err(inadmissible(family, p, "1 <= b <= 2p, gcd(b, 2p) = 1"));
            }
            (RationalPoint::monomial(2, b, 2 * p)?, false)
        }
        Family::R => {
            let b = params[0];
            if !(1..=p).contains(&b) {
                return Err(inadmissible(family, p, "1 <= b <= p"));
            }
            (RationalPoint::monomial(d, b, p)?, b == p)
        }
        Family::LambdaBinomial => {
            let l = params[0];
            if !(1..p).contains(&l) {
                return Err(inadmissible(family, p, "1 <= lambda <= p - 1"));
            }
            (RationalPoint::new(&lambda_numerators(d, p, l), p)?, false)
        }
    };
    Ok(FamilyPoint {
        family,
        prime: p,
        params: params.to_vec(),
        point,
        vanishing_span: span,
        degenerate,
    })
}

/// Every member of the family at prime `p` (requires `p <= 200`).
pub fn enumerate_family(family: Family, p: u64, d: usize) -> Result<Vec<FamilyPoint>> {
    check_admissible(family, p, d)?;
    if p > FULL_ENUMERATION_MAX_P {
        return Err(WeylError::Capacity(format!(
            "full enumeration is limited to p <= {FULL_ENUMERATION_MAX_P}; use sampling for p = {p}"
        )));
    }
    let coprime = |v: u64, m: u64| v.gcd(&m) == 1;
    let params: Vec<Vec<u64>> = match family {
        Family::P => {
            let units: Vec<u64> = (1..=4 * p).filter(|&a| coprime(a, 2 * p)).collect();
            units
                .iter()
                .flat_map(|&a| units.iter().map(move |&b| vec![a, b]))
                .collect()
        }
        Family::Q => (1..=2 * p).filter(|&b| coprime(b, 2 * p)).map(|b| vec![b]).collect(),
        Family::R => (1..=p).map(|b| vec![b]).collect(),
        Family::LambdaBinomial => (1..p).map(|l| vec![l]).collect(),
    };
    params
        .iter()
        .map(|ps| family_point(family, p, d, ps))
        .collect()
}

/// A uniformly random non-degenerate family member.
pub fn random_family_point<R: Rng>(
    family: Family,
    p: u64,
    d: usize,
    rng: &mut R,
) -> Result<FamilyPoint> {
    check_admissible(family, p, d)?;
    let mut unit = |m: u64| loop {
        let v = rng.random_range(1..=m);
        if v.gcd(&m) == 1 || (m == p && v % p != 0) {
            return v;
        }
    };
    let params = match family {
        Family::P => vec![unit(4 * p), unit(4 * p)],
        Family::Q => vec![unit(2 * p)],
        Family::R | Family::LambdaBinomial => vec![unit(p)],
    };
    family_point(family, p, d, &params)
}

/// `count` independent uniform members, deterministic in `seed`.
pub fn sample_family(
    family: Family,
    p: u64,
    d: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<FamilyPoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_family_point(family, p, d, &mut rng))
        .collect()
}

/// Outcome of [`estimate_delta`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    /// Analytic starting value before halving.
    pub candidate: f64,
    pub halvings: u32,
    /// Fitted `max_M |S(anchor; M)| / K` over the sampled anchors.
    pub fitted_c: f64,
    /// Largest `|S|` seen among the accepted samples.
    pub max_sampled: f64,
    pub samples: usize,
}

/// Radius `delta` such that sampled points within `delta` of the family
/// all have `|S(.; span)| <= eta`.
///
/// The start value is `eta * N^-d / (c K)`, with `K` the family's
/// incomplete-sum bound and `c` fitted from the anchors' prefix maxima.
/// It is halved until every sample passes.
pub fn estimate_delta(
    family: Family,
    p: u64,
    d: usize,
    eta: f64,
    sample_budget: usize,
    seed: u64,
) -> Result<DeltaEstimate> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(WeylError::invalid("eta", format!("must be positive, got {eta}")));
    }
    if sample_budget == 0 {
        return Err(WeylError::invalid("sample_budget", "must be at least 1"));
    }
    check_admissible(family, p, d)?;
    let span = family.span(p);
    if eta >= span as f64 {
        return Ok(DeltaEstimate {
            delta: 1.0,
            candidate: 1.0,
            halvings: 0,
            fitted_c: 0.0,
            max_sampled: span as f64,
            samples: 0,
        });
    }
    let deg = family.sum_degree(d);
    let k_bound = family.incomplete_bound(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // monomial families only move their single free coordinate
    let free: Vec<usize> = match family {
        Family::Q | Family::R => vec![deg - 1],
        _ => (0..deg).collect(),
    };
    let mut draws = Vec::with_capacity(sample_budget);
    let mut fitted_c: f64 = 0.0;
    for _ in 0..sample_budget {
        let fp = random_family_point(family, p, d, &mut rng)?;
        fitted_c = fitted_c.max(prefix_max_abs(&fp.point, span) / k_bound);
        // uniform direction in the free coordinates, radius u^(1/k)
        let mut dir: Vec<f64> = free.iter().map(|_| gaussian(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let radius = rng.random::<f64>().powf(1.0 / free.len() as f64);
        dir.iter_mut().for_each(|v| *v *= radius / norm);
        draws.push((fp.point.to_torus(), dir));
    }
    let c = fitted_c.max(1e-3);
    let candidate = eta * (span as f64).powi(-(deg as i32)) / (c * k_bound);
    let mut delta = candidate.min(1.0);
    let mut halvings = 0;
    loop {
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for (anchor, dir) in &draws {
            let mut offsets = vec![0.0; deg];
            for (slot, &j) in free.iter().enumerate() {
                offsets[j] = dir[slot] * delta;
            }
            let s = eval_direct(&anchor.translated(&offsets)?, span)?.norm();
            worst = worst.max(s);
            if s > eta {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(DeltaEstimate {
                delta,
                candidate,
                halvings,
                fitted_c,
                max_sampled: worst,
                samples: sample_budget,
            });
        }
        delta *= 0.5;
        halvings += 1;
        if delta < 1e-300 {
            return Err(WeylError::Numeric(format!(
                "delta underflowed below 1e-300; eta = {eta} is not achievable numerically"
            )));
        }
    }
}

/// Standard normal deviate (Box-Muller).
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Families of points approximated infinitely often by vanishing anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DioFamily {
    /// `0 <= x_j - a_j/4p < 1/(p^{5/2} log^2 p)` for both coordinates.
    PStar,
    /// `0 <= x - a/2p < 1/(p^{5/2} log p)`.
    QStar,
    /// `0 <= x - a/p < 1/(p^{d+1/2} log^2 p)` with `gcd(d, p - 1) = 1`.
    RStar,
    /// First coordinate relaxed to `1/(p^{3/2} log^2 p)`.
    Rectangle,
}

impl DioFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            DioFamily::PStar => "P*",
            DioFamily::QStar => "Q*",
            DioFamily::RStar => "R*",
            DioFamily::Rectangle => "rectangle",
        }
    }

    /// Anchor denominator as a multiple of `p`.
    fn modulus_factor(&self) -> u64 {
        match self {
            DioFamily::PStar | DioFamily::Rectangle => 4,
            DioFamily::QStar => 2,
            DioFamily::RStar => 1,
        }
    }

    fn dims(&self) -> usize {
        match self {
            DioFamily::PStar | DioFamily::Rectangle => 2,
            _ => 1,
        }
    }

    /// Allowed offset per free coordinate at prime `p`.
    pub fn bounds(&self, p: u64, d: usize) -> Vec<f64> {
        let pf = p as f64;
        let l = pf.ln();
        match self {
            DioFamily::PStar => vec![1.0 / (pf.powf(2.5) * l * l); 2],
            DioFamily::QStar => vec![1.0 / (pf.powf(2.5) * l)],
            DioFamily::RStar => vec![1.0 / (pf.powf(d as f64 + 0.5) * l * l)],
            DioFamily::Rectangle => vec![
                1.0 / (pf.powf(1.5) * l * l),
                1.0 / (pf.powf(2.5) * l * l),
            ],
        }
    }

    fn prime_ok(&self, p: u64, d: usize) -> bool {
        p >= 3 && (*self != DioFamily::RStar || permutes_residues(d as u64, p))
    }

    fn numerator_ok(&self, a: u64, p: u64) -> bool {
        match self {
            DioFamily::RStar => a % p != 0,
            _ => a % 2 == 1 && a % p != 0,
        }
    }

    /// Vanishing family of the anchors.
    pub fn anchor_family(&self) -> Family {
        match self {
            DioFamily::PStar | DioFamily::Rectangle => Family::P,
            DioFamily::QStar => Family::Q,
            DioFamily::RStar => Family::R,
        }
    }
}

impl fmt::Display for DioFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DioFamily {
    type Err = WeylError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p*" | "pstar" => Ok(DioFamily::PStar),
            "q*" | "qstar" => Ok(DioFamily::QStar),
            "r*" | "rstar" => Ok(DioFamily::RStar),
            "rectangle" | "rect" => Ok(DioFamily::Rectangle),
            _ => Err(WeylError::Parse(format!(
                "unknown Diophantine family `{s}` (expected P*, Q*, R* or rectangle)"
            ))),
        }
    }
}

/// Safety factor applied to every allowed offset.
pub const DIO_MARGIN: f64 = 0.99;

/// One approximation step `x ~ a / (c p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub prime: u64,
    pub modulus: u64,
    pub numerators: Vec<u64>,
    /// Exact interval width per coordinate, below `0.99 * bound`.
    pub widths: Vec<BigRational>,
    /// `sup (x - a/m) / bound` over the final interval, worst coordinate.
    pub margin: f64,
}

impl Witness {
    fn left(&self, j: usize) -> BigRational {
        BigRational::new(BigInt::from(self.numerators[j]), BigInt::from(self.modulus))
    }
}

/// A finite-depth approximation to a point of a Diophantine family.
#[derive(Debug, Clone, PartialEq)]
pub struct DioPoint {
    pub family: DioFamily,
    /// Degree of the summed polynomial.
    pub degree: usize,
    /// Left endpoint of the final interval, as the summed coefficient vector.
    pub approx: TorusPoint,
    pub witnesses: Vec<Witness>,
    /// Final interval per free coordinate, `[lo, hi)`.
    pub interval: Vec<(BigRational, BigRational)>,
}

impl DioPoint {
    pub fn depth(&self) -> usize {
        self.witnesses.len()
    }

    /// The free coordinates (one for `Q*` and `R*`, two otherwise).
    pub fn coords(&self) -> Vec<f64> {
        let c = self.approx.coords();
        match self.family {
            DioFamily::QStar | DioFamily::RStar => vec![c[self.degree - 1]],
            _ => c,
        }
    }

    /// Midpoint of the final interval as a summed coefficient vector. Unlike
    /// `approx` it is not itself one of the anchors.
    pub fn midpoint(&self) -> TorusPoint {
        let two = BigRational::from_integer(BigInt::from(2));
        let mid: Vec<f64> = self
            .interval
            .iter()
            .map(|(lo, hi)| ((lo + hi) / &two).to_f64().expect("finite"))
            .collect();
        let coords = match self.family {
            DioFamily::QStar | DioFamily::RStar => {
                let mut v = vec![0.0; self.degree];
                v[self.degree - 1] = mid[0];
                v
            }
            _ => mid,
        };
        TorusPoint::new(&coords).expect("finite")
    }

    /// Re-checks every witness with exact rational comparisons: primes
    /// increase, the final interval lies in every witness interval, and each
    /// used offset stays within `0.99` of the bound.
    pub fn verify(&self) -> Result<()> {
        let dims = self.family.dims();
        let mut last_p = 0;
        for (i, w) in self.witnesses.iter().enumerate() {
            let fail = |why: String| {
                WeylError::Numeric(format!("witness {i} (p = {}): {why}", w.prime))
            };
            if w.prime <= last_p {
                return Err(fail("primes are not strictly increasing".into()));
            }
            last_p = w.prime;
            if !is_prime(w.prime) || !self.family.prime_ok(w.prime, self.degree) {
                return Err(fail("prime is not admissible".into()));
            }
            if w.modulus != self.family.modulus_factor() * w.prime {
                return Err(fail("wrong modulus".into()));
            }
            let bounds = self.family.bounds(w.prime, self.degree);
            for j in 0..dims {
                if !self.family.numerator_ok(w.numerators[j], w.prime) {
                    return Err(fail(format!("numerator {} inadmissible", w.numerators[j])));
                }
                let left = w.left(j);
                let right = &left + &w.widths[j];
                let (lo, hi) = &self.interval[j];
                if *lo < left || *hi > right {
                    return Err(fail(format!("final interval escapes coordinate {j}")));
                }
                let allowed = BigRational::from_float(DIO_MARGIN * bounds[j] * (1.0 - 1e-12))
                    .expect("finite bound");
                if w.widths[j] > allowed {
                    return Err(fail(format!("coordinate {j} exceeds the 0.99 margin")));
                }
            }
        }
        let left = self.witnesses.last().map(|w| w.left(0));
        if left.as_ref() != Some(&self.interval[0].0) {
            return Err(WeylError::Numeric("approximation is not the final left endpoint".into()));
        }
        Ok(())
    }

    /// Tab-separated record: family, degree, depth, approx coordinates,
    /// witnesses as `p:a[,b]:margin` joined by `;`.
    pub fn to_line(&self) -> String {
        let coords: Vec<String> = self.coords().iter().map(|c| format!("{c:.17e}")).collect();
        let wit: Vec<String> = self
            .witnesses
            .iter()
            .map(|w| {
                let nums: Vec<String> = w
                    .numerators
                    .iter()
                    .map(|a| format!("{a}/{}", w.modulus))
                    .collect();
                format!("{}:{}:{:.6}", w.prime, nums.join(","), w.margin)
            })
            .collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.family,
            self.degree,
            self.depth(),
            coords.join(","),
            wit.join(";")
        )
    }
}

fn ratio(n: u64, m: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(m))
}

/// Greedy nested-interval construction of a depth-`depth` approximation.
///
/// Each step takes the smallest admissible prime above the previous one for
/// which some admissible anchor `a/m` has its whole interval
/// `[a/m, a/m + 0.99 B(p))` inside the current interval; the anchor is chosen
/// uniformly (seeded) among those that fit.
pub fn build_dio_point(family: DioFamily, d: usize, depth: usize, seed: u64) -> Result<DioPoint> {
    if depth == 0 {
        return Err(WeylError::invalid("depth", "must be at least 1"));
    }
    let degree = match family {
        DioFamily::RStar => {
            if d < 3 {
                return Err(WeylError::invalid("d", "R* needs degree d >= 3"));
            }
            d
        }
        _ => 2,
    };
    let dims = family.dims();
    let factor = family.modulus_factor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interval: Vec<(BigRational, BigRational)> =
        vec![(BigRational::zero(), BigRational::from_integer(BigInt::from(1))); dims];
    let mut witnesses: Vec<Witness> = Vec::with_capacity(depth);
    let mut p = 2u64;
    for _ in 0..depth {
        let lo_f: Vec<f64> = interval.iter().map(|(lo, _)| lo.to_f64().unwrap()).collect();
        let hi_f: Vec<f64> = interval.iter().map(|(_, hi)| hi.to_f64().unwrap()).collect();
        let found = loop {
            p += 1;
            if p > PRIME_SEARCH_CAP {
                let shown: Vec<String> = interval
                    .iter()
                    .map(|(lo, hi)| format!("[{:.17e}, {:.17e})", lo.to_f64().unwrap(), hi.to_f64().unwrap()))
                    .collect();
                return Err(WeylError::SearchCap(format!(
                    "no admissible prime up to {PRIME_SEARCH_CAP} has an anchor inside {}",
                    shown.join(" x ")
                )));
            }
            if p % 2 == 0 && p > 2 {
                continue;
            }
            let m = factor * p;
            let bounds = family.bounds(p, degree);
            let widths_f: Vec<f64> = bounds
                .iter()
                .map(|b| DIO_MARGIN * b * (1.0 - 1e-12))
                .collect();
            // cheap floating filter with one numerator of slack on each side
            let coarse: Vec<(f64, f64)> = (0..dims)
                .map(|j| {
                    let amin = (lo_f[j] * m as f64).floor() - 1.0;
                    let amax = ((hi_f[j] - widths_f[j]) * m as f64).ceil() + 1.0;
                    (amin.max(0.0), amax)
                })
                .collect();
            if coarse.iter().any(|&(a, b)| b < a) {
                continue;
            }
            if !is_prime(p) || !family.prime_ok(p, degree) {
                continue;
            }
            let widths: Vec<BigRational> = widths_f
                .iter()
                .map(|&w| BigRational::from_float(w).expect("finite width"))
                .collect();
            let mut choices = Vec::with_capacity(dims);
            for j in 0..dims {
                let (amin, amax) = (coarse[j].0 as u64, (coarse[j].1 as u64).min(m - 1));
                let (lo, hi) = &interval[j];
                let fits: Vec<u64> = (amin..=amax)
                    .filter(|&a| family.numerator_ok(a, p))
                    .filter(|&a| {
                        let left = ratio(a, m);
                        left >= *lo && &left + &widths[j] <= *hi
                    })
                    .collect();
                if fits.is_empty() {
                    break;
                }
                choices.push(fits[rng.random_range(0..fits.len())]);
            }
            if choices.len() == dims {
                break (m, choices, widths, bounds);
            }
        };
        let (m, numerators, widths, _) = found;
        interval = (0..dims)
            .map(|j| {
                let left = ratio(numerators[j], m);
                let right = &left + &widths[j];
                (left, right)
            })
            .collect();
        witnesses.push(Witness {
            prime: p,
            modulus: m,
            numerators,
            widths,
            margin: 0.0,
        });
    }
    // margins against the final interval
    for w in witnesses.iter_mut() {
        let bounds = family.bounds(w.prime, degree);
        w.margin = (0..dims)
            .map(|j| {
                let used = &interval[j].1 - w.left(j);
                used.to_f64().unwrap() / bounds[j]
            })
            .fold(0.0, f64::max);
    }
    let last = witnesses.last().expect("depth >= 1");
    let fixed: Vec<u128> = match family {
        DioFamily::PStar | DioFamily::Rectangle => last
            .numerators
            .iter()
            .map(|&a| fixed_from_ratio(a, last.modulus))
            .collect(),
        _ => {
            let mut v = vec![0u128; degree];
            v[degree - 1] = fixed_from_ratio(last.numerators[0], last.modulus);
            v
        }
    };
    let out = DioPoint {
        family,
        degree,
        approx: TorusPoint::from_fixed(fixed)?,
        witnesses,
        interval,
    };
    out.verify()?;
    Ok(out)
}

/// First `lambda` whose binomial point lies in the half-open box
/// `prod [lo_j, hi_j)`, or `None`.
pub fn find_lambda_point_in_box(d: usize, p: u64, bx: &[(f64, f64)]) -> Result<Option<FamilyPoint>> {
    check_admissible(Family::LambdaBinomial, p, d)?;
    if bx.len() != d {
        return Err(WeylError::invalid(
            "box",
            format!("expected {d} intervals, got {}", bx.len()),
        ));
    }
    if bx.iter().any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
        return Err(WeylError::invalid("box", "each interval needs lo <= hi"));
    }
    for l in 1..p {
        let nums = lambda_numerators(d, p, l);
        let inside = nums
            .iter()
            .zip(bx)
            .all(|(&c, &(lo, hi))| {
                let x = c as f64 / p as f64;
                lo <= x && x < hi
            });
        if inside {
            let fp = family_point(Family::LambdaBinomial, p, d, &[l])?;
            debug_assert!(certify_zero(&fp.point, p).map(|c| c.verified).unwrap_or(false));
            return Ok(Some(fp));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactzero::Mechanism;

    #[test]
    fn q_family_at_three() {
        let pts = enumerate_family(Family::Q, 3, 2).unwrap();
        let bs: Vec<u64> = pts.iter().map(|f| f.params[0]).collect();
        assert_eq!(bs, vec![1, 5]);
        assert_eq!(pts[0].point.to_string(), "0,1/6");
    }

    #[test]
    fn p_family_at_three_has_sixteen_points() {
        let units: Vec<u64> = (1..12u64).filter(|a| a.gcd(&6) == 1).collect();
        assert_eq!(units, vec![1, 5, 7, 11]);
        let pts = enumerate_family(Family::P, 3, 2).unwrap();
        assert_eq!(pts.len(), units.len() * units.len());
    }

    #[test]
    fn lambda_point_from_binomials() {
        let fp = family_point(Family::LambdaBinomial, 5, 3, &[1]).unwrap();
        assert_eq!(fp.point.numerators(), &[3, 3, 1]);
        assert_eq!(fp.point.modulus(), 5);
        // l = 2: (3*2, 3*4, 8) mod 5 = (1, 2, 3)
        assert_eq!(lambda_numerators(3, 5, 2), vec![1, 2, 3]);
    }

    #[test]
    fn enumerated_points_vanish() {
        for &p in &[3u64, 5, 7, 11, 13] {
            for fp in enumerate_family(Family::P, p, 2)
                .unwrap()
                .into_iter()
                .chain(enumerate_family(Family::Q, p, 2).unwrap())
            {
                let c = certify_zero(&fp.point, fp.vanishing_span).unwrap();
                assert_eq!(c.mechanism, Mechanism::HalfPeriodPairing, "{}", fp.to_line());
            }
        }
        for &p in &[5u64, 11, 17, 23] {
            for fp in enumerate_family(Family::R, p, 3).unwrap() {
                let c = certify_zero(&fp.point, p).unwrap();
                if fp.degenerate {
                    assert_eq!(fp.params[0], p);
                    assert!(!c.verified);
                } else {
                    assert_eq!(c.mechanism, Mechanism::ResiduePermutation);
                }
            }
            for fp in enumerate_family(Family::LambdaBinomial, p, 3).unwrap() {
                let c = certify_zero(&fp.point, p).unwrap();
                assert_eq!(c.mechanism, Mechanism::ResiduePermutation);
            }
        }
    }

    #[test]
    fn inadmissible_primes_name_the_constraint() {
        match enumerate_family(Family::R, 7, 3) {
            Err(WeylError::Inadmissible { constraint, .. }) => {
                assert!(constraint.contains("gcd(d, p - 1)"))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(enumerate_family(Family::P, 9, 2).is_err());
        assert!(enumerate_family(Family::LambdaBinomial, 3, 3).is_err());
        assert!(matches!(
            enumerate_family(Family::Q, 211, 2),
            Err(WeylError::Capacity(_))
        ));
        assert!(family_point(Family::P, 3, 2, &[2, 1]).is_err());
    }

    #[test]
    fn sampling_is_seeded_and_admissible() {
        let a = sample_family(Family::P, 1009, 2, 20, 4).unwrap();
        let b = sample_family(Family::P, 1009, 2, 20, 4).unwrap();
        assert_eq!(a, b);
        for fp in &a {
            assert_eq!((fp.params[0] * fp.params[1]).gcd(&2018), 1);
        }
    }

    #[test]
    fn record_round_trip() {
        for fp in enumerate_family(Family::R, 5, 3)
            .unwrap()
            .into_iter()
            .chain(enumerate_family(Family::P, 3, 2).unwrap())
        {
            assert_eq!(FamilyPoint::from_line(&fp.to_line()).unwrap(), fp);
        }
    }

    #[test]
    fn delta_whole_torus_for_large_eta() {
        let est = estimate_delta(Family::P, 3, 2, 12.0, 10, 0).unwrap();
        assert_eq!(est.delta, 1.0);
    }

    #[test]
    fn delta_samples_stay_below_eta() {
        for fam in [Family::P, Family::Q] {
            let est = estimate_delta(fam, 13, 2, 0.5, 200, 1).unwrap();
            assert!(est.delta > 0.0);
            assert!(est.max_sampled <= 0.5);
            // independent check at fresh random points of the neighbourhood
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..200 {
                let fp = random_family_point(fam, 13, 2, &mut rng).unwrap();
                let mut off = vec![0.0; 2];
                for (j, o) in off.iter_mut().enumerate() {
                    if fam == Family::P || j == 1 {
                        *o = (rng.random::<f64>() - 0.5) * est.delta;
                    }
                }
                let y = fp.point.to_torus().translated(&off).unwrap();
                let s = eval_direct(&y, fam.span(13)).unwrap().norm();
                assert!(s <= 0.5, "{fam} |S| = {s}");
            }
        }
    }

    #[test]
    fn delta_rejects_bad_eta() {
        assert!(estimate_delta(Family::Q, 13, 2, 0.0, 10, 0).is_err());
        assert!(estimate_delta(Family::Q, 13, 2, 1e-320, 10, 0).is_err());
    }

    fn check_dio(dp: &DioPoint) {
        dp.verify().unwrap();
        let x = dp.coords();
        for w in &dp.witnesses {
            let bounds = dp.family.bounds(w.prime, dp.degree);
            for (j, &xj) in x.iter().enumerate() {
                let off = xj - w.numerators[j] as f64 / w.modulus as f64;
                assert!(off >= -1e-15 && off < 0.99 * bounds[j], "offset {off} bound {}", bounds[j]);
            }
            assert!(w.margin <= 0.99);
        }
    }

    #[test]
    fn dio_constructions() {
        let q = build_dio_point(DioFamily::QStar, 2, 1, 0).unwrap();
        assert_eq!(q.depth(), 1);
        check_dio(&q);
        for fam in [DioFamily::PStar, DioFamily::Rectangle, DioFamily::QStar] {
            let dp = build_dio_point(fam, 2, 2, 5).unwrap();
            check_dio(&dp);
            assert!(dp.witnesses[0].prime < dp.witnesses[1].prime);
        }
        let r = build_dio_point(DioFamily::RStar, 3, 2, 1).unwrap();
        check_dio(&r);
        for w in &r.witnesses {
            assert!(permutes_residues(3, w.prime));
        }
    }

    #[test]
    fn dio_is_seeded() {
        let a = build_dio_point(DioFamily::PStar, 2, 2, 11).unwrap();
        let b = build_dio_point(DioFamily::PStar, 2, 2, 11).unwrap();
        assert_eq!(a, b);
        assert!(build_dio_point(DioFamily::QStar, 2, 0, 0).is_err());
        assert!(build_dio_point(DioFamily::RStar, 2, 1, 0).is_err());
    }

    #[test]
    fn rectangle_bounds_exponents() {
        let b = DioFamily::Rectangle.bounds(101, 2);
        let l = 101f64.ln();
        assert!((b[0] * 101f64.powf(1.5) * l * l - 1.0).abs() < 1e-12);
        assert!((b[1] * 101f64.powf(2.5) * l * l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_box_scan() {
        let whole = vec![(0.0, 1.0); 3];
        let fp = find_lambda_point_in_box(3, 5, &whole).unwrap().unwrap();
        assert_eq!(fp.params, vec![1]);
        assert_eq!(fp.point.numerators(), &[3, 3, 1]);
        // exhaustive oracle: no lambda lands in [0, 0.05)^3 for p = 5
        let small = vec![(0.0, 0.05); 3];
        assert!((1..5u64).all(|l| lambda_numerators(3, 5, l).iter().any(|&c| c as f64 / 5.0 >= 0.05)));
        assert!(find_lambda_point_in_box(3, 5, &small).unwrap().is_none());
        let half = vec![(0.0, 0.5); 3];
        let fp = find_lambda_point_in_box(3, 101, &half).unwrap().unwrap();
        assert!(certify_zero(&fp.point, 101).unwrap().verified);
        assert!(fp.point.numerators().iter().all(|&c| (c as f64) < 50.5));
    }
}
