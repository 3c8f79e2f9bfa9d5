//! Small exact-integer helpers shared across the crate: floor nth roots,
//! Möbius values, prime sieves, fraction-free determinants.

use num::bigint::BigInt;
use num::integer::gcd;
use num::{One, Zero};

/// gcd of a slice of signed integers (absolute values); 0 for the empty or
/// all-zero slice.
pub fn gcd_slice(v: &[i64]) -> u64 {
    v.iter()
        .fold(0u64, |g, &x| gcd(g, x.unsigned_abs()))
}

/// ⌊a^(1/k)⌋ for a ≥ 0, k ≥ 1.  Seeded from floating point, then fixed by
/// exact comparisons, so the answer is exact for all u128 inputs.
pub fn nth_root_floor(a: u128, k: u32) -> u128 {
    assert!(k >= 1);
    if k == 1 || a <= 1 {
        return a;
    }
    let mut r = (a as f64).powf(1.0 / k as f64) as u128;
    // float seed can be off by a couple in either direction
    while r > 0 && checked_pow_u128(r, k).map_or(true, |p| p > a) {
        r -= 1;
    }
    while checked_pow_u128(r + 1, k).is_some_and(|p| p <= a) {
        r += 1;
    }
    r
}

/// r^k in u128, None on overflow.
pub fn checked_pow_u128(mut r: u128, mut k: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.checked_mul(r)?;
        }
        k >>= 1;
        if k > 0 {
            r = r.checked_mul(r)?;
        }
    }
    Some(acc)
}

/// Möbius μ(n) by trial division (n ≥ 1).
pub fn moebius(n: u64) -> i64 {
    assert!(n >= 1);
    let mut n = n;
    let mut mu = 1i64;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// Primes ≤ n, by sieve.
pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            out.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    out
}

/// (prime, exponent) factorization by trial division.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1);
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// p-adic valuation and cofactor: n = p^v · u with p ∤ u.
pub fn val_p(mut n: u64, p: u64) -> (u32, u64) {
    assert!(n >= 1 && p >= 2);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// Exact determinant of a square integer matrix (Bareiss fraction-free
/// elimination over BigInt; the matrices here are tiny).
pub fn det_exact(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|row| {
            assert_eq!(row.len(), n, "determinant of a non-square matrix");
            row.iter().map(|&x| BigInt::from(x)).collect()
        })
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev; // exact division (Bareiss)
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Ramanujan sum c_q(c) = Σ_{δ | gcd(c,q)} δ·μ(q/δ), with c taken mod q.
pub fn ramanujan_sum(q: u64, c: u64) -> i64 {
    assert!(q >= 1);
    let c = c % q;
    let g = if c == 0 { q } else { gcd(c, q) };
    let mut s = 0i64;
    for d in 1..=g {
        if g % d == 0 && q % d == 0 {
            s += d as i64 * moebius(q / d);
        }
    }
    s
}

/// FNV-1a over a byte stream; used for stable content identifiers.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// n.signum()·|n| decomposition helper: |v|_∞ of an integer vector.
pub fn sup_norm(v: &[i64]) -> u64 {
    v.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}
