//! Local solution counting modulo prime powers and the resulting densities.
//!
//! The basic objects, for a bidegree form F in the (x, y, z) variables:
//!
//! * M_p(N)  = #{(x,y,z) mod p^N : x ≢ 0 (p), F ≡ 0 (p^N)}, and the starred
//!   M*_p(N) which additionally requires (y,z) ≢ 0 (p);
//! * the local density σ′_p = lim M_p(N) / p^{N(n+1)} (n+2 variables, one
//!   equation), approximated by its value at a finite level with a
//!   stabilization flag (Hensel plateau: two consecutive levels agree);
//! * complete exponential sums S_{a,q,d} = Σ_{b mod q} e(a·F(d·b₁,b₂,b₃)/q)
//!   and their unit-averaged A_d(q) = q^{−(n+2)} Σ_{a ∈ (Z/q)*} S_{a,q,d},
//!   a multiplicative function of q;
//! * the partial-sum identity Σ_{k≤N} (A_1(p^k) − A_p(p^k)/p^{r+1})
//!   = M_p(N)/p^{N(n+1)}, which ties the two viewpoints together exactly;
//! * truncated singular-series products over p ≤ p_max.
//!
//! Everything here is exact integer / rational arithmetic; the only floats
//! are the complex return of [`complete_sum`].

use crate::arith::{factorize, primes_upto, ramanujan_sum};
use crate::counting::{beta_pair, CountError};
use crate::forms::BidegreeForm;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use thiserror::Error;

/// Residue enumerations larger than this are refused (desk scale).
const ENUM_CAP: u128 = 100_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PadicError {
    #[error("modulus base {0} is not prime")]
    CompositeModulus(u64),
    #[error("p^N = {0}^{1} does not fit the machine word")]
    ModulusOverflow(u64, u32),
    #[error("residue enumeration of size {0} exceeds the desk-scale cap {ENUM_CAP}")]
    CapExceeded(u128),
    #[error(transparent)]
    Count(#[from] CountError),
}

fn is_prime(p: u64) -> bool {
    p >= 2 && factorize(p) == vec![(p, 1)]
}

fn pow_u64(p: u64, n: u32) -> Result<u64, PadicError> {
    p.checked_pow(n).ok_or(PadicError::ModulusOverflow(p, n))
}

/// A truncated density: exact rational from residue counting, or a sampled
/// real with a standard error (the archimedean side).
#[derive(Clone, Debug)]
pub enum DensityEstimate {
    Exact {
        value: BigRational,
        p_max: u64,
        n_max: u32,
        /// last two refinement levels agreed exactly
        stabilized: bool,
    },
    Sampled {
        value: f64,
        stderr: f64,
        eps: f64,
        samples: u64,
    },
}

impl DensityEstimate {
    pub fn value_f64(&self) -> f64 {
        match self {
            DensityEstimate::Exact { value, .. } => {
                value.numer().to_f64().unwrap_or(f64::NAN)
                    / value.denom().to_f64().unwrap_or(f64::NAN)
            }
            DensityEstimate::Sampled { value, .. } => *value,
        }
    }

    pub fn stabilized(&self) -> bool {
        match self {
            DensityEstimate::Exact { stabilized, .. } => *stabilized,
            DensityEstimate::Sampled { .. } => false,
        }
    }
}

// ---------------------------------------------------------------------------
// residue counting

/// Evaluate a term list mod q at a residue tuple.
fn eval_terms(terms: &[(Vec<u32>, u64)], point: &[u64], q: u64) -> u64 {
    let qq = q as u128;
    let mut acc: u128 = 0;
    for (exps, coeff) in terms {
        let mut term = *coeff as u128;
        for (v, &e) in exps.iter().enumerate() {
            let base = point[v] as u128;
            for _ in 0..e {
                term = term * base % qq;
            }
        }
        acc = (acc + term) % qq;
    }
    acc as u64
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// #{(x,y,z) mod q : x ≢ 0 (p), F ≡ 0 (q)} for q a power of p.
///
/// The x-block is always enumerated (the filter needs it).  Non-x variables
/// the reduced form does not use contribute a factor q each; a variable of
/// reduced degree 1 is solved per prefix as a linear congruence
/// (gcd(G₁, q) solutions when gcd(G₁, q) | G₀, none otherwise).
fn m_count(form: &BidegreeForm, p: u64, q: u64) -> Result<u64, PadicError> {
    let (n, r, _) = form.fan_params();
    let nv = n + 2;
    let nx = r + 1;
    let red = form.reduced_mod(q);
    let deg_in = |v: usize| -> u32 { red.monos.iter().map(|(e, _)| e[v]).max().unwrap_or(0) };

    let mut active: Vec<usize> = Vec::new();
    let mut nfree: u32 = 0;
    for v in nx..nv {
        if deg_in(v) > 0 {
            active.push(v);
        } else {
            nfree += 1;
        }
    }
    let pivot = active
        .iter()
        .rposition(|&v| deg_in(v) == 1)
        .map(|i| active.remove(i));

    let slots: Vec<usize> = (0..nx).chain(active.iter().copied()).collect();
    let cost = (q as u128).pow(slots.len() as u32);
    if cost > ENUM_CAP {
        return Err(PadicError::CapExceeded(cost));
    }

    // split off the pivot-linear part: F = G₁·t + G₀
    let (lin, cst): (Vec<_>, Vec<_>) = match pivot {
        Some(t) => {
            let mut lin = Vec::new();
            let mut cst = Vec::new();
            for (exps, c) in &red.monos {
                if exps[t] == 1 {
                    let mut e = exps.clone();
                    e[t] = 0;
                    lin.push((e, *c));
                } else {
                    cst.push((exps.clone(), *c));
                }
            }
            (lin, cst)
        }
        None => (Vec::new(), red.monos.clone()),
    };

    let mut point = vec![0u64; nv];
    let mut total: u128 = 0;
    loop {
        if !point[..nx].iter().all(|&c| c % p == 0) {
            let add = if pivot.is_some() {
                let g1 = eval_terms(&lin, &point, q);
                let g0 = eval_terms(&cst, &point, q);
                let g = gcd_u64(g1, q); // gcd(0, q) = q
                if g0 % g == 0 {
                    g
                } else {
                    0
                }
            } else if eval_terms(&cst, &point, q) == 0 {
                1
            } else {
                0
            };
            total += add as u128;
        }
        // odometer step
        let mut i = 0;
        loop {
            if i == slots.len() {
                let total = total
                    .checked_mul((q as u128).pow(nfree))
                    .ok_or(PadicError::CapExceeded(u128::MAX))?;
                return u64::try_from(total).map_err(|_| PadicError::CapExceeded(total));
            }
            point[slots[i]] += 1;
            if point[slots[i]] < q {
                break;
            }
            point[slots[i]] = 0;
            i += 1;
        }
    }
}

/// #{(x,y,z) mod p^N : x ≢ 0 (p), y ≡ 0 (p), z ≡ 0 (p), F ≡ 0 (p^N)}.
///
/// Every monomial of a bidegree-(d₁,d₂) form has total (y,z)-degree exactly
/// d₂, so F(x, p·u, p·v) = p^{d₂}·F(x, u, v) and the condition transfers to
/// level N − d₂ with an explicit lift multiplicity — no extra enumeration.
fn yz_zero_count(form: &BidegreeForm, p: u64, n: u32) -> Result<u64, PadicError> {
    let (nn, r, _) = form.fan_params();
    let nv = nn + 2;
    let nx = (r + 1) as u32;
    let nyz = nv as u32 - nx;
    let (_, d2) = form.bidegree();
    let big = |e: u32| -> Result<u128, PadicError> {
        (p as u128)
            .checked_pow(e)
            .ok_or(PadicError::ModulusOverflow(p, e))
    };
    let total: u128 = if n <= d2 {
        // the congruence is vacuous after the p^{d₂} extraction
        (big(n * nx)? - big((n - 1) * nx)?) * big((n - 1) * nyz)?
    } else {
        let inner = m_count(form, p, pow_u64(p, n - d2)?)?;
        big(d2 * nx + (d2 - 1) * nyz)? * inner as u128
    };
    u64::try_from(total).map_err(|_| PadicError::CapExceeded(total))
}

/// M_p(N) (star = false) or M*_p(N) (star = true): solutions of F ≡ 0 mod
/// p^N with x ≢ 0 (p), and for the starred count also (y,z) ≢ 0 (p).
pub fn count_mod(form: &BidegreeForm, p: u64, n: u32, star: bool) -> Result<u64, PadicError> {
    if !is_prime(p) {
        return Err(PadicError::CompositeModulus(p));
    }
    assert!(n >= 1, "level must be at least 1");
    let q = pow_u64(p, n)?;
    let m = m_count(form, p, q)?;
    if !star {
        return Ok(m);
    }
    Ok(m - yz_zero_count(form, p, n)?)
}

/// One refinement level of the local density at p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityRow {
    pub n: u32,
    pub m: u64,
    pub mstar: u64,
    pub density: BigRational,
    pub density_star: BigRational,
}

/// The density sequence M_p(N)/p^{N(n+1)} for N = 1..n_max.
#[derive(Clone, Debug)]
pub struct LocalDensityTable {
    pub p: u64,
    pub rows: Vec<DensityRow>,
    /// the last two levels agree exactly
    pub stabilized: bool,
}

impl LocalDensityTable {
    pub fn last_density(&self) -> &BigRational {
        &self.rows.last().expect("n_max ≥ 1").density
    }
    pub fn last_density_star(&self) -> &BigRational {
        &self.rows.last().expect("n_max ≥ 1").density_star
    }
}

pub fn local_density_table(
    form: &BidegreeForm,
    p: u64,
    n_max: u32,
) -> Result<LocalDensityTable, PadicError> {
    assert!(n_max >= 1);
    let (nn, _, _) = form.fan_params();
    let nv = nn + 2;
    let mut rows = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let m = count_mod(form, p, n, false)?;
        let mstar = count_mod(form, p, n, true)?;
        let denom = BigInt::from(p).pow(n * (nv as u32 - 1));
        rows.push(DensityRow {
            n,
            m,
            mstar,
            density: BigRational::new(BigInt::from(m), denom.clone()),
            density_star: BigRational::new(BigInt::from(mstar), denom),
        });
    }
    let k = rows.len();
    let stabilized = k >= 2 && rows[k - 1].density == rows[k - 2].density;
    Ok(LocalDensityTable {
        p,
        rows,
        stabilized,
    })
}

/// σ′_p truncated at level n_max, with the Hensel-plateau flag.
pub fn local_density(
    form: &BidegreeForm,
    p: u64,
    n_max: u32,
) -> Result<DensityEstimate, PadicError> {
    let table = local_density_table(form, p, n_max)?;
    Ok(DensityEstimate::Exact {
        value: table.last_density().clone(),
        p_max: p,
        n_max,
        stabilized: table.stabilized,
    })
}

// ---------------------------------------------------------------------------
// complete sums and their unit averages

/// Residue-class histogram of F(d·b₁, b₂, b₃) mod q over all b mod q.
/// Returns counts[c] = #{b : F(db₁,b₂,b₃) ≡ c (q)}.
fn value_buckets(form: &BidegreeForm, d: u64, q: u64) -> Result<Vec<u64>, PadicError> {
    assert!(q >= 1);
    let (n, _, _) = form.fan_params();
    let nv = n + 2;
    let full_cost = (q as u128).checked_pow(nv as u32).unwrap_or(u128::MAX);
    if full_cost > ENUM_CAP {
        return Err(PadicError::CapExceeded(full_cost));
    }
    let scaled = form.scale_x(d);
    let red = scaled.reduced_mod(q);
    let deg_in = |v: usize| -> u32 { red.monos.iter().map(|(e, _)| e[v]).max().unwrap_or(0) };
    let slots: Vec<usize> = (0..nv).filter(|&v| deg_in(v) > 0).collect();
    let mult = (q as u128).pow((nv - slots.len()) as u32);

    let mut counts = vec![0u128; q as usize];
    let mut point = vec![0u64; nv];
    'outer: loop {
        let c = eval_terms(&red.monos, &point, q);
        counts[c as usize] += 1;
        let mut i = 0;
        loop {
            if i == slots.len() {
                break 'outer;
            }
            point[slots[i]] += 1;
            if point[slots[i]] < q {
                continue 'outer;
            }
            point[slots[i]] = 0;
            i += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| u64::try_from(c * mult).map_err(|_| PadicError::CapExceeded(c * mult)))
        .collect()
}

/// S_{a,q,d} as a complex number; `exact` carries the value as a rational
/// when q ≤ 4 and the bucket histogram is conjugate-symmetric (the
/// imaginary part then cancels exactly and every cosine is rational).
#[derive(Clone, Debug)]
pub struct CompleteSum {
    pub re: f64,
    pub im: f64,
    pub exact: Option<BigRational>,
}

pub fn complete_sum(form: &BidegreeForm, d: u64, a: u64, q: u64) -> Result<CompleteSum, PadicError> {
    let buckets = value_buckets(form, d, q)?;
    // fold the phase multiplier a into the classes: e(a·c/q) = e((ac mod q)/q)
    let mut folded = vec![0u64; q as usize];
    for (c, &cnt) in buckets.iter().enumerate() {
        let j = (a as u128 * c as u128 % q as u128) as usize;
        folded[j] += cnt;
    }
    let tau = std::f64::consts::TAU;
    let mut re = 0.0;
    let mut im = 0.0;
    for (j, &cnt) in folded.iter().enumerate() {
        let phase = tau * j as f64 / q as f64;
        re += cnt as f64 * phase.cos();
        im += cnt as f64 * phase.sin();
    }
    let symmetric = (1..q as usize).all(|j| folded[j] == folded[q as usize - j]);
    let exact = if q <= 4 && symmetric {
        // rational cosines: q=1: [1]; q=2: [1,−1]; q=3: [1,−½,−½];
        // q=4: [1,0,−1,0]
        let cos_rat = |j: usize| -> BigRational {
            let r = |num: i64, den: i64| BigRational::new(BigInt::from(num), BigInt::from(den));
            match (q, j) {
                (_, 0) => r(1, 1),
                (2, 1) => r(-1, 1),
                (3, _) => r(-1, 2),
                (4, 1) | (4, 3) => r(0, 1),
                (4, 2) => r(-1, 1),
                _ => unreachable!("q ≤ 4"),
            }
        };
        let mut acc = BigRational::zero();
        for (j, &cnt) in folded.iter().enumerate() {
            acc += BigRational::from(BigInt::from(cnt)) * cos_rat(j);
        }
        Some(acc)
    } else {
        None
    };
    Ok(CompleteSum { re, im, exact })
}

/// A_d(q) = q^{−(n+2)} Σ_{a ∈ (Z/q)*} S_{a,q,d}, exactly, via Ramanujan
/// sums: Σ_{a unit} e(a·c/q) = c_q(c).
pub fn a_d(form: &BidegreeForm, d: u64, q: u64) -> Result<BigRational, PadicError> {
    let (n, _, _) = form.fan_params();
    let nv = n + 2;
    let buckets = value_buckets(form, d, q)?;
    let mut num: i128 = 0;
    for (c, &cnt) in buckets.iter().enumerate() {
        if cnt != 0 {
            num += cnt as i128 * ramanujan_sum(q, c as u64) as i128;
        }
    }
    let denom = BigInt::from(q).pow(nv as u32);
    Ok(BigRational::new(BigInt::from(num), denom))
}

/// Both sides of the exact finite-level identity
/// Σ_{k=0}^{N} (A_1(p^k) − A_p(p^k)/p^{r+1}) = M_p(N)/p^{N(n+1)}
/// (level 0 means the bare unit-fraction 1 − p^{−(r+1)} on both sides).
pub fn partial_sum_identity(
    form: &BidegreeForm,
    p: u64,
    n: u32,
) -> Result<(BigRational, BigRational), PadicError> {
    if !is_prime(p) {
        return Err(PadicError::CompositeModulus(p));
    }
    let (nn, r, _) = form.fan_params();
    let nv = nn + 2;
    let punit = BigRational::new(BigInt::one(), BigInt::from(p).pow(r as u32 + 1));
    let mut lhs = BigRational::zero();
    for k in 0..=n {
        let q = pow_u64(p, k)?;
        lhs += a_d(form, 1, q)? - a_d(form, p, q)? * &punit;
    }
    let rhs = if n == 0 {
        BigRational::one() - punit
    } else {
        let m = count_mod(form, p, n, false)?;
        BigRational::new(
            BigInt::from(m),
            BigInt::from(p).pow(n * (nv as u32 - 1)),
        )
    };
    Ok((lhs, rhs))
}

// ---------------------------------------------------------------------------
// truncated singular series

/// Truncated Euler products over p ≤ p_max at density level n_max.
#[derive(Clone, Debug)]
pub struct SingularSeries {
    /// per-prime σ′_p(n_max)
    pub factors: Vec<(u64, BigRational)>,
    /// ∏ σ′_p
    pub product: DensityEstimate,
    /// ∏ (1 − p^{−β₂}) σ′_p — the combination entering the leading constant
    pub weighted: DensityEstimate,
}

pub fn singular_series(
    form: &BidegreeForm,
    p_max: u64,
    n_max: u32,
) -> Result<SingularSeries, PadicError> {
    let (_, b2) = beta_pair(form)?;
    let mut factors = Vec::new();
    let mut product = BigRational::one();
    let mut weighted = BigRational::one();
    let mut all_stable = true;
    for p in primes_upto(p_max) {
        let table = local_density_table(form, p, n_max)?;
        let sigma = table.last_density().clone();
        all_stable &= table.stabilized;
        product *= &sigma;
        let unit =
            BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(p).pow(b2));
        weighted *= unit * &sigma;
        factors.push((p, sigma));
    }
    Ok(SingularSeries {
        factors,
        product: DensityEstimate::Exact {
            value: product,
            p_max,
            n_max,
            stabilized: all_stable,
        },
        weighted: DensityEstimate::Exact {
            value: weighted,
            p_max,
            n_max,
            stabilized: all_stable,
        },
    })
}
