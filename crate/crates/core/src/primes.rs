//! Prime sieving and primality testing.

use crate::error::{Result, WeylError};
use num_integer::Integer;

/// Primes are never searched beyond this bound.
pub const PRIME_SEARCH_CAP: u64 = 1_000_000_000;

/// All primes `<= limit` (sieve of Eratosthenes, odd numbers only).
pub fn sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let half = ((limit - 1) / 2) as usize; // index i stands for 2i + 1
    let mut composite = vec![false; half + 1];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) <= limit as usize {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = (p * p - 1) / 2;
            while j <= half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2];
    out.extend(
        (1..=half)
            .filter(|&i| !composite[i])
            .map(|i| 2 * i as u64 + 1),
    );
    out
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// True when `x -> x^d` permutes the residues mod `p`, i.e. `gcd(d, p - 1) = 1`.
pub fn permutes_residues(d: u64, p: u64) -> bool {
    d.gcd(&(p - 1)) == 1
}

/// Smallest prime `p > lower`, with `gcd(d, p - 1) = 1` when required.
///
/// For `d = 2` the coprimality requirement cannot hold for odd `p` and is not
/// imposed; quadratic families only need `p` odd.
pub fn next_admissible_prime(lower: u64, d: u64, require_coprime_order: bool) -> Result<u64> {
    if lower < 2 {
        return Err(WeylError::invalid("lower", format!("must be at least 2, got {lower}")));
    }
    if d < 2 {
        return Err(WeylError::invalid("d", format!("must be at least 2, got {d}")));
    }
    let require = require_coprime_order && d != 2;
    if require && d % 2 == 0 {
        return Err(WeylError::invalid(
            "d",
            format!("gcd({d}, p - 1) = 1 has no solution p > 2 for even d"),
        ));
    }
    let mut n = lower + 1;
    while n <= PRIME_SEARCH_CAP {
        if is_prime(n) && (!require || permutes_residues(d, n)) {
            return Ok(n);
        }
        n += 1;
    }
    Err(WeylError::SearchCap(format!(
        "no admissible prime for d = {d} in ({lower}, {PRIME_SEARCH_CAP}]"
    )))
}
