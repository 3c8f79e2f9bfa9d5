//! Torsor heights and exact bounded-height point counts.
//!
//! Points live on the rank-2 torsor: integer tuples (x, y, z) split by
//! variable block, with x ≠ 0 and (y, z) ≠ 0.  The height of such a tuple
//! (with exponents β₁, β₂ read off the hypersurface class) is
//!
//! ```text
//! H(x, y, z) = |x|^{β₁} · max(|y|/|x|, |z|)^{β₂}        (sup-norms)
//! ```
//!
//! and its d-scaled companion H_d replaces |y|/|x| by |y|/(d|x|).  Counting
//! is exact: height comparisons are integer cross-multiplications, per-x
//! enumeration bounds come from integer k-th roots, and the solution scan
//! uses machine integers under a certified no-overflow bound (big integers
//! otherwise).
//!
//! The sign group {±1}² acts freely via (x,y,z) ↦ (−x,−y,z), (x,−y,−z);
//! every count enumerates one canonical representative per orbit (first
//! nonzero coordinate of x, and of (y,z), positive) and reports
//! `raw = 4 · orbits`, the number of actual integer tuples.

use crate::arith::{factorize, gcd_slice, moebius, sup_norm};
use crate::forms::BidegreeForm;
use crate::toric::{Block, DivisorClass, KleinschmidtFan};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CountError {
    #[error("hypersurface class not in the effective-cone interior: β = ({0}, {1}) must be ≥ (1, 1)")]
    NotInterior(i64, i64),
    #[error("count is infinite without a cap: {0}; pass an x-cap to truncate")]
    CapRequired(String),
    #[error("inverting primitivity needs a scaling-invariant open set; `{0}` is not")]
    NotScalingInvariant(String),
    #[error("unknown open-set id `{0}`")]
    UnknownOpenSet(String),
    #[error("enumeration bound {0} too large for desk-scale exact counting")]
    BoundTooLarge(u64),
}

/// A torsor point, kept split by variable block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsorPoint {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub z: Vec<i64>,
}

impl TorsorPoint {
    pub fn new(x: Vec<i64>, y: Vec<i64>, z: Vec<i64>) -> Self {
        TorsorPoint { x, y, z }
    }

    pub fn from_flat(blocks: (usize, usize, usize), flat: &[i64]) -> Self {
        let (nx, ny, nz) = blocks;
        assert_eq!(flat.len(), nx + ny + nz);
        TorsorPoint {
            x: flat[..nx].to_vec(),
            y: flat[nx..nx + ny].to_vec(),
            z: flat[nx + ny..].to_vec(),
        }
    }

    pub fn flat(&self) -> Vec<i64> {
        let mut v = Vec::with_capacity(self.x.len() + self.y.len() + self.z.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v.extend_from_slice(&self.z);
        v
    }

    pub fn x_norm(&self) -> u64 {
        sup_norm(&self.x)
    }
    pub fn y_norm(&self) -> u64 {
        sup_norm(&self.y)
    }
    pub fn z_norm(&self) -> u64 {
        sup_norm(&self.z)
    }
}

/// x primitive and (y, z) jointly primitive (both nonzero in particular).
pub fn admissible(pt: &TorsorPoint) -> bool {
    if gcd_slice(&pt.x) != 1 {
        return false;
    }
    let mut yz = pt.y.clone();
    yz.extend_from_slice(&pt.z);
    gcd_slice(&yz) == 1
}

/// Height exponents (β₁, β₂) = (m+1−d₁, n−r+1−d₂) of the hypersurface cut
/// out by `form`; errors unless both are ≥ 1 (class interior to the
/// effective cone).
pub fn beta_pair(form: &BidegreeForm) -> Result<(u32, u32), CountError> {
    let (n, r, m) = form.fan_params();
    let (d1, d2) = form.bidegree();
    let b1 = m as i64 + 1 - d1 as i64;
    let b2 = (n - r) as i64 + 1 - d2 as i64;
    if b1 < 1 || b2 < 1 {
        return Err(CountError::NotInterior(b1, b2));
    }
    Ok((b1 as u32, b2 as u32))
}

fn big_pow(base: u64, e: u32) -> BigInt {
    let mut acc = BigInt::one();
    for _ in 0..e {
        acc *= base;
    }
    acc
}

/// H_d(x, y, z) = |x|^{β₁} · max(|y|/(d|x|), |z|)^{β₂} as an exact rational.
/// Requires x ≠ 0.
pub fn height_scaled(pt: &TorsorPoint, b1: u32, b2: u32, d: u64) -> BigRational {
    let k = pt.x_norm();
    assert!(k >= 1, "height needs x ≠ 0");
    assert!(d >= 1);
    let kpow = big_pow(k, b1);
    // candidates |x|^{β1}|z|^{β2} and |x|^{β1}·(|y|/(d|x|))^{β2}
    let c1 = BigRational::from(&kpow * big_pow(pt.z_norm(), b2));
    let c2 = BigRational::new(&kpow * big_pow(pt.y_norm(), b2), big_pow(d * k, b2));
    c1.max(c2)
}

/// H = H_1.
pub fn height(pt: &TorsorPoint, b1: u32, b2: u32) -> BigRational {
    height_scaled(pt, b1, b2, 1)
}

/// Exact comparison H_d(pt) ≤ B by integer cross-multiplication.
pub fn height_scaled_leq(pt: &TorsorPoint, b1: u32, b2: u32, d: u64, bound: &BigRational) -> bool {
    let k = pt.x_norm();
    assert!(k >= 1, "height needs x ≠ 0");
    let num = bound.numer();
    let den = bound.denom();
    let kpow = big_pow(k, b1);
    // |x|^{β1}|z|^{β2} ≤ B
    if &kpow * big_pow(pt.z_norm(), b2) * den > *num {
        return false;
    }
    // |x|^{β1}|y|^{β2} ≤ B·(d|x|)^{β2}
    kpow * big_pow(pt.y_norm(), b2) * den <= num * big_pow(d * k, b2)
}

pub fn height_leq(pt: &TorsorPoint, b1: u32, b2: u32, bound: &BigRational) -> bool {
    height_scaled_leq(pt, b1, b2, 1, bound)
}

/// max |monomial of class (β₁, β₂)| at the point, as a rational (an
/// integer).  Agrees with [`height`] exactly when β₁ ≥ β₂ or the y-block is
/// empty; for β₁ < β₂ with y present the closed form can exceed every
/// monomial (the extremal weight |x|^{β₁−β₂}|y|^{β₂} is not a monomial
/// weight there).
pub fn height_monomial(pt: &TorsorPoint, fan: &KleinschmidtFan, b1: u32, b2: u32) -> BigRational {
    let class = DivisorClass::new(b1 as i64, b2 as i64);
    let flat = pt.flat();
    let mut best = BigInt::from(0);
    for u in fan.section_polytope(class) {
        let exps = fan.monomial_of(class, &u).expect("polytope point maps");
        let mut v = BigInt::one();
        for (i, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                v *= flat[i];
            }
        }
        let v = v.abs();
        if v > best {
            best = v;
        }
    }
    BigRational::from(best)
}

/// Does the closed-form height provably equal the monomial maximum on this
/// (fan, class) combination?
pub fn heights_agree(fan: &KleinschmidtFan, b1: u32, b2: u32) -> bool {
    b1 >= b2 || fan.block_sizes().1 == 0
}

// ---------------------------------------------------------------------------
// open subsets

/// The open subset of the variety on which points are counted, named by a
/// stable id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpenSet {
    /// whole variety
    All,
    /// some partial of F along the x- or y-block does not vanish at the
    /// point (NOT invariant under coordinate scalings — direct counts only)
    GradXY,
    /// F stays a nonzero polynomial after plugging in the point's x-values
    /// (resp. z-values); scaling-invariant, so valid under inversion
    SpecializeNonzero,
}

impl OpenSet {
    pub fn parse(id: &str) -> Result<Self, CountError> {
        match id {
            "all" => Ok(OpenSet::All),
            "grad-xy" => Ok(OpenSet::GradXY),
            "specialize-nonzero" => Ok(OpenSet::SpecializeNonzero),
            other => Err(CountError::UnknownOpenSet(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            OpenSet::All => "all",
            OpenSet::GradXY => "grad-xy",
            OpenSet::SpecializeNonzero => "specialize-nonzero",
        }
    }

    /// Invariant under the torus scalings (hence under the d/e rescaling
    /// built into the inversion identity)?
    pub fn scaling_invariant(&self) -> bool {
        !matches!(self, OpenSet::GradXY)
    }

    pub fn contains(&self, form: &BidegreeForm, pt: &TorsorPoint) -> bool {
        match self {
            OpenSet::All => true,
            OpenSet::GradXY => {
                let flat = pt.flat();
                let nxy = pt.x.len() + pt.y.len();
                (0..nxy).any(|v| !form.partial(v).evaluate_big(&flat).is_zero())
            }
            OpenSet::SpecializeNonzero => {
                !form.substitute_block(Block::X, &pt.x).is_zero()
                    && !form.substitute_block(Block::Z, &pt.z).is_zero()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// z = 0 stratum analysis (drives finiteness / cap decisions)

/// What is known about solutions with z = 0 (the stratum that can make
/// counts infinite when β₁ ≤ β₂).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Z0Stratum {
    /// no y-block, or F restricted to z = 0 is a single monomial that can
    /// only vanish where (y, z) = 0 — the stratum carries no solutions
    Empty,
    /// F vanishes identically on z = 0: every tuple (x, y, 0) solves
    Full,
    /// restriction is a nontrivial polynomial; solutions possible
    Unknown,
}

pub fn z0_stratum(form: &BidegreeForm) -> Z0Stratum {
    let (n, r, m) = form.fan_params();
    let ny = m - r;
    if ny == 0 {
        // z = 0 would force (y, z) = 0
        return Z0Stratum::Empty;
    }
    let zrange = m + 1..=n + 1;
    let restricted: Vec<_> = form
        .monomials()
        .iter()
        .filter(|mo| zrange.clone().all(|v| mo.exps[v] == 0))
        .collect();
    if restricted.is_empty() {
        return Z0Stratum::Full;
    }
    if restricted.len() == 1 && ny == 1 {
        let mo = restricted[0];
        let xdeg: u32 = mo.exps[..=r].iter().sum();
        if xdeg == 0 {
            // restriction is c·y^{d1} in the single y-variable: vanishing
            // forces y = 0
            return Z0Stratum::Empty;
        }
    }
    Z0Stratum::Unknown
}

// ---------------------------------------------------------------------------
// results

#[derive(Clone, Copy, Debug, Default)]
pub struct CountCaps {
    /// truncate enumeration at |x| ≤ cap (needed when the exact count is
    /// infinite); `cap_hit` reports whether it actually bound
    pub x_cap: Option<u64>,
    /// worker threads (0 and 1 both mean serial); results are identical for
    /// any value
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountReport {
    /// number of sign-orbits = number of rational points counted
    pub count: u64,
    /// number of integer tuples = 4 · count
    pub raw: u64,
    pub cap_hit: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RawCount {
    pub raw: u64,
    pub cap_hit: bool,
}

/// Cell counts h_d(k, l) of solutions at |x| = k,
/// l = max(⌊|y|/(d|x|)⌋, |z|) ≥ 1, plus the l = 0 row kept apart (its
/// points sit below height k^{β₁}, and the hyperbola summation must not see
/// them as weight-l cells).
#[derive(Clone, Debug, Default)]
pub struct Histogram {
    pub d: u64,
    pub p1: u64,
    pub p2: u64,
    pub cells: BTreeMap<(u64, u64), u64>,
    pub zero_row: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn total_raw(&self) -> u64 {
        self.cells.values().sum::<u64>() + self.zero_row.values().sum::<u64>()
    }
}

// ---------------------------------------------------------------------------
// the scan engine

#[derive(Clone, Debug)]
enum Mode {
    /// H_d ≤ bound
    Height(BigRational),
    /// |x| ≤ p1, |y| ≤ d|x|·p2, |z| ≤ p2;  `widen` relaxes the y-bound to
    /// d|x|(p2+1)−1 so that every cell ⌊|y|/(d|x|)⌋ ≤ p2 is filled
    Box { p1: u64, p2: u64, widen: bool },
}

trait Scalar: Clone + Send {
    fn zero_() -> Self;
    fn from_bigint(b: &BigInt) -> Self;
    /// self += a · v^e
    fn mac_pow(&mut self, a: &Self, v: i64, e: u32);
    fn is_zero_(&self) -> bool;
    /// exact −g0/g1 if it is an integer fitting i64
    fn neg_ratio(g0: &Self, g1: &Self) -> Option<i64>;
    fn horner(coeffs: &[(u32, Self)], t: i64) -> Self;
}

impl Scalar for i128 {
    fn zero_() -> Self {
        0
    }
    fn from_bigint(b: &BigInt) -> Self {
        b.to_i128().expect("certified to fit i128")
    }
    fn mac_pow(&mut self, a: &Self, v: i64, e: u32) {
        let mut term = *a;
        for _ in 0..e {
            term *= v as i128;
        }
        *self += term;
    }
    fn is_zero_(&self) -> bool {
        *self == 0
    }
    fn neg_ratio(g0: &Self, g1: &Self) -> Option<i64> {
        debug_assert!(*g1 != 0);
        if g0 % g1 != 0 {
            return None;
        }
        (-(g0 / g1)).to_i64()
    }
    fn horner(coeffs: &[(u32, Self)], t: i64) -> Self {
        let mut acc: i128 = 0;
        let mut prev_e: u32 = coeffs.last().map(|&(e, _)| e).unwrap_or(0);
        for &(e, ref c) in coeffs.iter().rev() {
            for _ in e..prev_e {
                acc *= t as i128;
            }
            acc += *c;
            prev_e = e;
        }
        for _ in 0..prev_e {
            acc *= t as i128;
        }
        acc
    }
}

impl Scalar for BigInt {
    fn zero_() -> Self {
        Zero::zero()
    }
    fn from_bigint(b: &BigInt) -> Self {
        b.clone()
    }
    fn mac_pow(&mut self, a: &Self, v: i64, e: u32) {
        let mut term = a.clone();
        for _ in 0..e {
            term *= v;
        }
        *self += term;
    }
    fn is_zero_(&self) -> bool {
        self.is_zero()
    }
    fn neg_ratio(g0: &Self, g1: &Self) -> Option<i64> {
        if (g0 % g1).is_zero() {
            (-(g0 / g1)).to_i64()
        } else {
            None
        }
    }
    fn horner(coeffs: &[(u32, Self)], t: i64) -> Self {
        let mut acc: BigInt = Zero::zero();
        let mut prev_e: u32 = coeffs.last().map(|&(e, _)| e).unwrap_or(0);
        for (e, c) in coeffs.iter().rev() {
            for _ in *e..prev_e {
                acc *= t;
            }
            acc += c;
            prev_e = *e;
        }
        for _ in 0..prev_e {
            acc *= t;
        }
        acc
    }
}

/// Per-variable collapse table: entry i of the current coefficient vector
/// contributes `coeff · v^exp` to entry `target` of the next one.
struct Level {
    steps: Vec<(u32, usize)>,
    next_len: usize,
}

/// Count of integer vectors w in the centered box Π[−bᵢ, bᵢ] subject to the
/// admissibility constraints delegated to the closed-off tail of the scan:
///
/// * `seen = true` (the enumerated part of (y,z) is nonzero with first
///   nonzero positive): w is free except for the optional joint-gcd
///   condition gcd(g0, w) = 1.
/// * `seen = false` (enumerated part all zero): w itself must be nonzero
///   with first nonzero positive — one representative per ±w pair — and,
///   under the gcd condition, primitive.
///
/// An empty `bounds` list degenerates correctly (1 or 0).
fn box_orbit_count(g0: u64, bounds: &[u64], seen: bool, require_gcd: bool) -> u64 {
    let prod = |div: u64| -> u128 {
        bounds
            .iter()
            .map(|&b| 2 * (b / div) as u128 + 1)
            .product()
    };
    let total: u128 = if seen {
        if !require_gcd || g0 == 1 {
            prod(1)
        } else {
            debug_assert!(g0 >= 2);
            // Σ_{δ | g0, δ squarefree} μ(δ) · #{w : δ | w}
            let mut divisors = vec![1u64];
            for (p, _) in factorize(g0) {
                let prev = divisors.clone();
                divisors.extend(prev.into_iter().map(|q| q * p));
            }
            let mut acc: i128 = 0;
            for dd in divisors {
                acc += moebius(dd) as i128 * prod(dd) as i128;
            }
            debug_assert!(acc >= 0);
            acc as u128
        }
    } else if bounds.is_empty() {
        return 0; // (y, z) = 0 is inadmissible
    } else if !require_gcd {
        (prod(1) - 1) / 2
    } else {
        // primitive w ≠ 0, one per sign pair
        let maxb = bounds.iter().copied().max().unwrap_or(0);
        let mut acc: i128 = 0;
        for delta in 1..=maxb {
            let mu = moebius(delta);
            if mu != 0 {
                acc += mu as i128 * (prod(delta) as i128 - 1);
            }
        }
        debug_assert!(acc >= 0 && acc % 2 == 0);
        (acc / 2) as u128
    };
    u64::try_from(total).expect("orbit count fits u64")
}

/// Polynomial in a subset of the variables: one ((var, exp) factor list,
/// coefficient) entry per term.
type PlanPoly = Vec<(Vec<(usize, u32)>, BigInt)>;

/// Open-set membership compiled to accept-time polynomial tests (the
/// generic [`OpenSet::contains`] allocates; the scan cannot afford that).
enum OpensetPlan {
    /// everything passes
    Accept,
    /// some polynomial of the family is nonzero at the point
    AnyNonzero(Vec<PlanPoly>),
    /// each of the two families has a nonzero polynomial at the point
    BothFamilies(Vec<PlanPoly>, Vec<PlanPoly>),
}

fn plan_any_nonzero<S: Scalar>(polys: &[PlanPoly], coeffs: &[Vec<S>], point: &[i64]) -> bool {
    polys.iter().zip(coeffs).any(|(poly, cs)| {
        let mut acc = S::zero_();
        for (i, (vars, _)) in poly.iter().enumerate() {
            let mut term = cs[i].clone();
            for &(v, e) in vars.iter() {
                let mut next = S::zero_();
                next.mac_pow(&term, point[v], e);
                term = next;
            }
            acc.mac_pow(&term, 1, 0); // acc += term
        }
        !acc.is_zero_()
    })
}

struct Engine<'a> {
    form: &'a BidegreeForm,
    nx: usize,
    ny: usize,
    nv: usize,
    d: u64,
    b1: u32,
    b2: u32,
    mode: Mode,
    require_gcd: bool,
    openset: OpenSet,
    collect_hist: bool,
    workers: usize,
    xmax: u64,
    cap_hit: bool,
    /// variables in scan order: the x-block, then the (y,z)-variables the
    /// form actually uses — a degree-1 variable moved last when one exists,
    /// so the innermost step is root-solving
    evars: Vec<usize>,
    /// (y,z)-variables the form does not use; never enumerated, counted in
    /// bulk by `box_orbit_count`
    frees: Vec<usize>,
    levels: Vec<Level>,
    /// pivot exponent for each slot of the final coefficient vector
    pivot_exps: Vec<u32>,
    init_coeffs: Vec<BigInt>,
    oplan: OpensetPlan,
    /// inner bounds per |x| = k, precomputed when the range is modest (the
    /// big-integer root extraction would otherwise dominate the scan)
    bounds_table: Option<Vec<(i64, i64)>>,
}

struct WorkerOut {
    raw: u64,
    cells: BTreeMap<(u64, u64), u64>,
    zero_row: BTreeMap<u64, u64>,
}

impl WorkerOut {
    fn new() -> Self {
        WorkerOut {
            raw: 0,
            cells: BTreeMap::new(),
            zero_row: BTreeMap::new(),
        }
    }
    fn absorb(&mut self, o: WorkerOut) {
        self.raw += o.raw;
        for (k, v) in o.cells {
            *self.cells.entry(k).or_insert(0) += v;
        }
        for (k, v) in o.zero_row {
            *self.zero_row.entry(k).or_insert(0) += v;
        }
    }
}

struct WorkerSt<S: Scalar> {
    /// current assignment, indexed by ORIGINAL variable id (free variables
    /// stay 0)
    point: Vec<i64>,
    vals: Vec<Vec<S>>,
    ymax: i64,
    zmax: i64,
    /// open-set plan coefficients in the scan scalar, per family
    oplan_a: Vec<Vec<S>>,
    oplan_b: Vec<Vec<S>>,
    /// scratch: nonzero pivot coefficients of the current prefix
    pivot_coeffs: Vec<(u32, S)>,
    /// scratch: box bounds handed to `box_orbit_count`
    fb: Vec<u64>,
    out: WorkerOut,
}

impl<'a> Engine<'a> {
    fn new(
        form: &'a BidegreeForm,
        d: u64,
        mode: Mode,
        require_gcd: bool,
        openset: OpenSet,
        collect_hist: bool,
        caps: &CountCaps,
    ) -> Result<Self, CountError> {
        let (n, r, m) = form.fan_params();
        let (nx, ny) = (r + 1, m - r);
        let nv = n + 2;
        let (b1, b2) = beta_pair(form)?;

        // enumeration range for |x|
        let (xmax_theory, needs_cap_reason) = match &mode {
            Mode::Box { p1, .. } => (Some(*p1), None),
            Mode::Height(bound) => {
                if bound.numer().is_negative() || bound.numer().is_zero() {
                    (Some(0), None)
                } else {
                    let num = bound.numer();
                    let den = bound.denom();
                    // stratum z ≠ 0: k^{β1} ≤ B
                    let x1 = (num / den).nth_root(b1);
                    let x1 = x1.to_u64().ok_or(CountError::BoundTooLarge(u64::MAX))?;
                    match z0_stratum(form) {
                        Z0Stratum::Empty => (Some(x1), None),
                        s => {
                            if b1 > b2 {
                                // live z = 0 stratum: k^{β1−β2} ≤ B·d^{β2}
                                let x2 = ((num * big_pow(d, b2)) / den).nth_root(b1 - b2);
                                let x2 =
                                    x2.to_u64().ok_or(CountError::BoundTooLarge(u64::MAX))?;
                                (Some(x1.max(x2)), None)
                            } else {
                                let why = match s {
                                    Z0Stratum::Full => {
                                        "the form vanishes identically on z = 0 and β₁ ≤ β₂"
                                    }
                                    _ => "solutions with z = 0 may exist and β₁ ≤ β₂",
                                };
                                (None, Some(why.to_string()))
                            }
                        }
                    }
                }
            }
        };

        let (xmax, cap_hit) = match (xmax_theory, caps.x_cap) {
            (Some(t), Some(c)) => (t.min(c), c < t),
            (Some(t), None) => (t, false),
            (None, Some(c)) => (c, true),
            (None, None) => {
                return Err(CountError::CapRequired(
                    needs_cap_reason.unwrap_or_else(|| "unbounded enumeration".into()),
                ))
            }
        };
        if xmax > (1 << 40) {
            return Err(CountError::BoundTooLarge(xmax));
        }

        // scan order: x-block first (original order), then the active
        // (y,z)-variables with a degree-1 pivot moved last when available;
        // unused (y,z)-variables are bulk-counted, except in histogram mode
        // where cell labels need their actual values
        let mut active: Vec<usize> = Vec::new();
        let mut frees: Vec<usize> = Vec::new();
        for v in nx..nv {
            if collect_hist || form.degree_in(v) > 0 {
                active.push(v);
            } else {
                frees.push(v);
            }
        }
        assert!(
            !active.is_empty(),
            "a form of bidegree (≥1, ≥1) uses some (y,z) variable"
        );
        if let Some(pos) = active.iter().rposition(|&v| form.degree_in(v) == 1) {
            let pivot = active.remove(pos);
            active.push(pivot);
        }
        let mut evars: Vec<usize> = (0..nx).collect();
        evars.extend_from_slice(&active);

        // collapse tables: level j keys are exponent vectors restricted to
        // evars[j..] in scan order (free variables have exponent 0 in every
        // monomial, so dropping them is lossless)
        let monos = form.monomials();
        let proj =
            |exps: &[u32], j: usize| -> Vec<u32> { evars[j..].iter().map(|&v| exps[v]).collect() };
        let nlev = evars.len();
        let mut key_lists: Vec<Vec<Vec<u32>>> = Vec::with_capacity(nlev);
        for j in 0..nlev {
            let mut keys: Vec<Vec<u32>> = monos.iter().map(|mo| proj(&mo.exps, j)).collect();
            keys.sort();
            keys.dedup();
            key_lists.push(keys);
        }
        let find = |list: &Vec<Vec<u32>>, key: &[u32]| -> usize {
            list.binary_search_by(|probe| probe.as_slice().cmp(key))
                .expect("key present by construction")
        };
        let mut levels = Vec::with_capacity(nlev - 1);
        for j in 0..nlev - 1 {
            let steps = key_lists[j]
                .iter()
                .map(|key| (key[0], find(&key_lists[j + 1], &key[1..])))
                .collect();
            levels.push(Level {
                steps,
                next_len: key_lists[j + 1].len(),
            });
        }
        let pivot_exps: Vec<u32> = key_lists[nlev - 1].iter().map(|k| k[0]).collect();
        // distinct monomials stay distinct under the projection (free
        // variables carry exponent 0 everywhere)
        assert_eq!(key_lists[0].len(), monos.len());
        let mut init_coeffs = vec![BigInt::from(0); monos.len()];
        for mo in monos {
            init_coeffs[find(&key_lists[0], &proj(&mo.exps, 0))] = mo.coeff.clone();
        }

        // compile the open-set membership test
        let oplan = match openset {
            OpenSet::All => OpensetPlan::Accept,
            OpenSet::GradXY => {
                let mut polys = Vec::new();
                for v in 0..nx + ny {
                    let p = form.partial(v);
                    let poly: PlanPoly = p
                        .monomials()
                        .iter()
                        .map(|mo| {
                            let vars: Vec<(usize, u32)> = mo
                                .exps
                                .iter()
                                .enumerate()
                                .filter(|&(_, &e)| e > 0)
                                .map(|(w, &e)| (w, e))
                                .collect();
                            (vars, mo.coeff.clone())
                        })
                        .collect();
                    if !poly.is_empty() {
                        polys.push(poly);
                    }
                }
                OpensetPlan::AnyNonzero(polys)
            }
            OpenSet::SpecializeNonzero => {
                // substituting a block leaves a polynomial in the kept
                // variables per residual exponent pattern; the block
                // specialization is nonzero iff some pattern's coefficient
                // polynomial is nonzero at the point
                let group = |keep: &dyn Fn(usize) -> bool| -> Vec<PlanPoly> {
                    let mut map: BTreeMap<Vec<u32>, PlanPoly> = BTreeMap::new();
                    for mo in monos {
                        let key: Vec<u32> =
                            (0..nv).filter(|&w| !keep(w)).map(|w| mo.exps[w]).collect();
                        let vars: Vec<(usize, u32)> = (0..nv)
                            .filter(|&w| keep(w) && mo.exps[w] > 0)
                            .map(|w| (w, mo.exps[w]))
                            .collect();
                        map.entry(key).or_default().push((vars, mo.coeff.clone()));
                    }
                    map.into_values().collect()
                };
                let x_side = group(&|w| w < nx);
                let z_side = group(&|w| w >= nx + ny);
                OpensetPlan::BothFamilies(x_side, z_side)
            }
        };

        let mut eng = Engine {
            form,
            nx,
            ny,
            nv,
            d,
            b1,
            b2,
            mode,
            require_gcd,
            openset,
            collect_hist,
            workers: caps.workers.max(1),
            xmax,
            cap_hit,
            evars,
            frees,
            levels,
            pivot_exps,
            init_coeffs,
            oplan,
            bounds_table: None,
        };
        // inner bounds are monotone in |x| between the endpoints; checking
        // both ends up front turns any too-large-bound overflow into an
        // error instead of a silent skip
        if eng.xmax >= 1 {
            eng.inner_bounds(1)?;
            eng.inner_bounds(eng.xmax)?;
            if matches!(eng.mode, Mode::Height(_)) && eng.xmax <= 1_000_000 {
                let mut tab = Vec::with_capacity(eng.xmax as usize + 1);
                tab.push((-1, -1)); // k = 0 unused
                for k in 1..=eng.xmax {
                    tab.push(eng.inner_bounds(k)?);
                }
                eng.bounds_table = Some(tab);
            }
        }
        Ok(eng)
    }

    /// Per-x inner bounds (ymax, zmax) for |x| = k ≥ 1.
    fn inner_bounds(&self, k: u64) -> Result<(i64, i64), CountError> {
        match &self.mode {
            Mode::Box { p1: _, p2, widen } => {
                let z = *p2;
                let y = if self.ny == 0 {
                    0
                } else if *widen {
                    self.d * k * (p2 + 1) - 1
                } else {
                    self.d * k * p2
                };
                let conv = |v: u64| -> Result<i64, CountError> {
                    i64::try_from(v).map_err(|_| CountError::BoundTooLarge(v))
                };
                Ok((conv(y)?, conv(z)?))
            }
            Mode::Height(bound) => {
                let num = bound.numer();
                let den = bound.denom();
                if num.is_negative() || num.is_zero() {
                    return Ok((-1, -1));
                }
                let kpow = big_pow(k, self.b1) * den;
                let zc = (num / &kpow).nth_root(self.b2);
                let yc = if self.ny == 0 {
                    BigInt::from(0)
                } else {
                    ((num * big_pow(self.d * k, self.b2)) / &kpow).nth_root(self.b2)
                };
                let conv = |v: BigInt| -> Result<i64, CountError> {
                    v.to_i64().ok_or(CountError::BoundTooLarge(u64::MAX))
                };
                Ok((conv(yc)?, conv(zc)?))
            }
        }
    }

    /// Certified bound on every intermediate collapse coefficient; if it
    /// fits comfortably in i128 the machine-integer path is safe.
    fn fits_i128(&self) -> bool {
        let (ymax, zmax) = match &self.mode {
            Mode::Box { p1, p2, widen } => {
                let y = if *widen {
                    self.d * (*p1).max(1) * (p2 + 1)
                } else {
                    self.d * (*p1).max(1) * p2
                };
                (y.max(1), (*p2).max(1))
            }
            Mode::Height(bound) => {
                if bound.numer().is_negative() || bound.numer().is_zero() {
                    (1, 1)
                } else {
                    // ymax(k) is monotone in k between the endpoints; zmax
                    // is largest at k = 1
                    let at = |k: u64| -> (u64, u64) {
                        match self.inner_bounds(k) {
                            Ok((y, z)) => (y.max(1) as u64, z.max(1) as u64),
                            Err(_) => (u64::MAX, u64::MAX),
                        }
                    };
                    let (y1, z1) = at(1);
                    let (y2, _) = at(self.xmax.max(1));
                    (y1.max(y2), z1)
                }
            }
        };
        if ymax == u64::MAX || zmax == u64::MAX {
            return false;
        }
        let mut per_var = vec![self.xmax.max(1); self.nv];
        for (v, slot) in per_var.iter_mut().enumerate() {
            if v >= self.nx + self.ny {
                *slot = zmax;
            } else if v >= self.nx {
                *slot = ymax;
            }
        }
        let mut cert = self.form.abs_bound(&per_var);
        if matches!(self.oplan, OpensetPlan::AnyNonzero(_)) {
            // gradient coefficients carry an extra exponent factor
            let (d1, d2) = self.form.bidegree();
            cert *= d1 as i64 + d2 as i64;
        }
        cert < (BigInt::one() << 124)
    }

    fn run(&self) -> WorkerOut {
        if self.xmax == 0 {
            return WorkerOut::new();
        }
        if self.fits_i128() {
            self.run_typed::<i128>()
        } else {
            self.run_typed::<BigInt>()
        }
    }

    fn run_typed<S: Scalar>(&self) -> WorkerOut {
        let make_state = || {
            let mut vals = Vec::with_capacity(self.levels.len() + 1);
            vals.push(
                self.init_coeffs
                    .iter()
                    .map(|c| S::from_bigint(c))
                    .collect::<Vec<S>>(),
            );
            for lvl in &self.levels {
                vals.push(vec![S::zero_(); lvl.next_len]);
            }
            let conv = |polys: &[PlanPoly]| -> Vec<Vec<S>> {
                polys
                    .iter()
                    .map(|p| p.iter().map(|(_, c)| S::from_bigint(c)).collect())
                    .collect()
            };
            let (oplan_a, oplan_b) = match &self.oplan {
                OpensetPlan::Accept => (Vec::new(), Vec::new()),
                OpensetPlan::AnyNonzero(a) => (conv(a), Vec::new()),
                OpensetPlan::BothFamilies(a, b) => (conv(a), conv(b)),
            };
            WorkerSt {
                point: vec![0i64; self.nv],
                vals,
                ymax: 0,
                zmax: 0,
                oplan_a,
                oplan_b,
                pivot_coeffs: Vec::new(),
                fb: Vec::new(),
                out: WorkerOut::new(),
            }
        };

        // canonical x: first nonzero coordinate positive, so x_0 ∈ [0, xmax]
        let chunks = self.xmax + 1;
        if self.workers <= 1 || chunks <= 1 {
            let mut st = make_state();
            for x0 in 0..=self.xmax as i64 {
                self.scan_chunk(&mut st, x0);
            }
            return st.out;
        }

        let next = AtomicU64::new(0);
        let nworkers = self.workers.min(chunks.min(1 << 16) as usize);
        let outs: Vec<WorkerOut> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..nworkers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut st = make_state();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= chunks {
                                break;
                            }
                            self.scan_chunk(&mut st, i as i64);
                        }
                        st.out
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut total = WorkerOut::new();
        for o in outs {
            total.absorb(o);
        }
        total
    }

    fn collapse<S: Scalar>(&self, st: &mut WorkerSt<S>, j: usize, v: i64) {
        let (head, tail) = st.vals.split_at_mut(j + 1);
        let src = &head[j];
        let dst = &mut tail[0];
        for slot in dst.iter_mut() {
            *slot = S::zero_();
        }
        let lvl = &self.levels[j];
        for (i, &(e, target)) in lvl.steps.iter().enumerate() {
            dst[target].mac_pow(&src[i], v, e);
        }
    }

    fn scan_chunk<S: Scalar>(&self, st: &mut WorkerSt<S>, x0: i64) {
        st.point[0] = x0;
        self.collapse(st, 0, x0);
        // nx = r + 1 ≥ 2, so the x-block is never complete after x_0
        self.descend(st, 1, x0 != 0, false);
    }

    fn level_bound<S: Scalar>(&self, st: &WorkerSt<S>, var: usize) -> i64 {
        if var < self.nx {
            self.xmax as i64
        } else if var < self.nx + self.ny {
            st.ymax
        } else {
            st.zmax
        }
    }

    fn descend<S: Scalar>(&self, st: &mut WorkerSt<S>, j: usize, seen_x: bool, seen_yz: bool) {
        if j == self.evars.len() - 1 {
            self.handle_pivot(st, seen_yz);
            return;
        }
        let var = self.evars[j];
        let in_x = var < self.nx;
        let bound = self.level_bound(st, var);
        if bound < 0 {
            return;
        }
        let lo = if (in_x && !seen_x) || (!in_x && !seen_yz) {
            0
        } else {
            -bound
        };
        for v in lo..=bound {
            st.point[var] = v;
            let seen_x2 = seen_x || (in_x && v != 0);
            let seen_yz2 = seen_yz || (!in_x && v != 0);
            if j == self.nx - 1 {
                // x-block complete
                if !seen_x2 {
                    continue;
                }
                if self.require_gcd && gcd_slice(&st.point[..self.nx]) != 1 {
                    continue;
                }
                let k = sup_norm(&st.point[..self.nx]);
                let yz = if let Some(tab) = &self.bounds_table {
                    tab[k as usize]
                } else {
                    match self.inner_bounds(k) {
                        Ok(p) => p,
                        Err(_) => continue, // endpoints were validated up front
                    }
                };
                st.ymax = yz.0;
                st.zmax = yz.1;
                if st.zmax < 0 {
                    continue;
                }
            }
            self.collapse(st, j, v);
            self.descend(st, j + 1, seen_x2, seen_yz2);
        }
        st.point[var] = 0;
    }

    /// Innermost enumerated variable: the final coefficient vector is a
    /// polynomial in it alone.  Root-solve / walk / bulk-count depending on
    /// its effective degree at this prefix.
    fn handle_pivot<S: Scalar>(&self, st: &mut WorkerSt<S>, seen_yz: bool) {
        let pivot = *self.evars.last().unwrap();
        let pbound = self.level_bound(st, pivot);
        if pbound < 0 {
            return;
        }
        let last = self.evars.len() - 1;
        {
            let WorkerSt {
                vals, pivot_coeffs, ..
            } = st;
            pivot_coeffs.clear();
            for (&e, c) in self.pivot_exps.iter().zip(vals[last].iter()) {
                if !c.is_zero_() {
                    pivot_coeffs.push((e, c.clone()));
                }
            }
        }
        let deg = st.pivot_coeffs.last().map(|&(e, _)| e).unwrap_or(0);

        if deg == 0 {
            if !st.pivot_coeffs.is_empty() {
                return; // constant ≠ 0 along the pivot line
            }
            // F ≡ 0 along the pivot line (and along the free variables);
            // open sets other than `all` vary along the line, so only `all`
            // may bulk-count it
            if self.openset == OpenSet::All && !self.collect_hist {
                let mut g0 = 0u64;
                for &v in &self.evars[self.nx..last] {
                    g0 = gcd_slice(&[g0 as i64, st.point[v]]);
                }
                self.fill_free_bounds(st);
                st.fb.push(pbound as u64);
                let add = box_orbit_count(g0, &st.fb, seen_yz, self.require_gcd);
                st.out.raw += 4 * add;
                return;
            }
            let lo = if seen_yz { -pbound } else { 0 };
            for t in lo..=pbound {
                st.point[pivot] = t;
                self.accept(st);
            }
            st.point[pivot] = 0;
            return;
        }

        if deg == 1 {
            // at most one integer root
            let (g0, g1) = {
                let cs = &st.pivot_coeffs;
                let g1 = cs.last().unwrap().1.clone();
                let g0 = if cs.len() == 2 {
                    cs[0].1.clone()
                } else {
                    S::zero_()
                };
                (g0, g1)
            };
            if let Some(t) = S::neg_ratio(&g0, &g1) {
                if t.unsigned_abs() <= pbound as u64 {
                    st.point[pivot] = t;
                    self.accept(st);
                    st.point[pivot] = 0;
                }
            }
            return;
        }

        let lo = if seen_yz { -pbound } else { 0 };
        for t in lo..=pbound {
            if S::horner(&st.pivot_coeffs, t).is_zero_() {
                st.point[pivot] = t;
                self.accept(st);
            }
        }
        st.point[pivot] = 0;
    }

    fn fill_free_bounds<S: Scalar>(&self, st: &mut WorkerSt<S>) {
        let mut fb = std::mem::take(&mut st.fb);
        fb.clear();
        fb.extend(
            self.frees
                .iter()
                .map(|&v| self.level_bound(st, v).max(0) as u64),
        );
        st.fb = fb;
    }

    /// Full acceptance of the current assignment (F = 0 is already
    /// established; free variables contribute via the box formula, which is
    /// valid because neither F nor the open-set predicates depend on them).
    fn accept<S: Scalar>(&self, st: &mut WorkerSt<S>) {
        let mut g0 = 0u64;
        let mut first = 0i64;
        for &v in &self.evars[self.nx..] {
            let c = st.point[v];
            if first == 0 {
                first = c.signum();
            }
            g0 = gcd_slice(&[g0 as i64, c]);
        }
        if first < 0 {
            return; // sign-canonical representative has first nonzero > 0
        }
        let seen = first != 0;
        if !self.openset_check(st) {
            return;
        }
        self.fill_free_bounds(st);
        let add = box_orbit_count(g0, &st.fb, seen, self.require_gcd);
        if add == 0 {
            return;
        }
        st.out.raw += 4 * add;
        if self.collect_hist {
            // histogram mode enumerates every (y,z) variable, so add = 1
            let k = sup_norm(&st.point[..self.nx]);
            let ynorm = sup_norm(&st.point[self.nx..self.nx + self.ny]);
            let znorm = sup_norm(&st.point[self.nx + self.ny..]);
            let l = (ynorm / (self.d * k)).max(znorm);
            if l == 0 {
                *st.out.zero_row.entry(k).or_insert(0) += 4;
            } else {
                *st.out.cells.entry((k, l)).or_insert(0) += 4;
            }
        }
    }

    fn openset_check<S: Scalar>(&self, st: &WorkerSt<S>) -> bool {
        match &self.oplan {
            OpensetPlan::Accept => true,
            OpensetPlan::AnyNonzero(polys) => plan_any_nonzero(polys, &st.oplan_a, &st.point),
            OpensetPlan::BothFamilies(a, b) => {
                plan_any_nonzero(a, &st.oplan_a, &st.point)
                    && plan_any_nonzero(b, &st.oplan_b, &st.point)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// public counting API

/// 𝒩_U(B): rational points of the open set with H ≤ B, counted exactly via
/// primitive integer tuples modulo the sign action.
pub fn count_points(
    form: &BidegreeForm,
    bound: &BigRational,
    openset: OpenSet,
    caps: &CountCaps,
) -> Result<CountReport, CountError> {
    let engine = Engine::new(
        form,
        1,
        Mode::Height(bound.clone()),
        true,
        openset,
        false,
        caps,
    )?;
    let cap_hit = engine.cap_hit;
    let out = engine.run();
    Ok(CountReport {
        count: out.raw / 4,
        raw: out.raw,
        cap_hit,
    })
}

/// N_d(T): integer tuples (no primitivity) with F(d·x, y, z) = 0 and
/// H_d ≤ T, on the open set.  This is the summand of the inversion
/// identity.
pub fn count_scaled(
    form: &BidegreeForm,
    d: u64,
    bound: &BigRational,
    openset: OpenSet,
    caps: &CountCaps,
) -> Result<RawCount, CountError> {
    assert!(d >= 1);
    let scaled = form.scale_x(d);
    let engine = Engine::new(
        &scaled,
        d,
        Mode::Height(bound.clone()),
        false,
        openset,
        false,
        caps,
    )?;
    let cap_hit = engine.cap_hit;
    let out = engine.run();
    Ok(RawCount {
        raw: out.raw,
        cap_hit,
    })
}

/// 𝒩_U(B) through double Möbius inversion over the two primitivity
/// conditions: ¼ Σ_{d,e} μ(d) μ(e) N_d(B / (d^{β₁} e^{β₂})).  Exactly equal
/// to [`count_points`] for scaling-invariant open sets (an x-cap, if any,
/// transfers as ⌊cap/d⌋ and the equality stays exact).
pub fn count_moebius(
    form: &BidegreeForm,
    bound: &BigRational,
    openset: OpenSet,
    caps: &CountCaps,
) -> Result<CountReport, CountError> {
    if !openset.scaling_invariant() {
        return Err(CountError::NotScalingInvariant(openset.id().to_string()));
    }
    let (b1, b2) = beta_pair(form)?;
    let (_, r, m) = form.fan_params();
    let ny = m - r;
    let live_z0 = ny > 0 && z0_stratum(form) != Z0Stratum::Empty;
    if live_z0 && b1 <= b2 && caps.x_cap.is_none() {
        return Err(CountError::CapRequired(
            "inverted sum over scalings does not terminate when β₁ ≤ β₂ and \
             the z = 0 stratum is live"
                .into(),
        ));
    }
    let one = BigRational::one();

    // least possible H_d of a counted point, cutting the e-loop: 1 on the
    // z ≠ 0 stratum; on a live z = 0 stratum k^{β1−β2}/d^{β2} minimized
    // over the admissible k-range
    let tmin = |d: u64| -> BigRational {
        if !live_z0 {
            return one.clone();
        }
        if b1 > b2 {
            return BigRational::new(BigInt::one(), big_pow(d, b2));
        }
        let c = caps.x_cap.unwrap().max(1);
        BigRational::new(big_pow(c, b1), big_pow(c, b2) * big_pow(d, b2))
    };

    let mut total: i128 = 0;
    let mut cap_hit = false;
    let mut d = 1u64;
    loop {
        let best = bound / BigRational::from(big_pow(d, b1));
        // d is exhausted once both strata are dead even at e = 1 (each
        // condition below is monotone in d, so breaking is safe)
        let d_dead = if !live_z0 {
            best < one
        } else if b1 > b2 {
            best < tmin(d)
        } else {
            best < one && d > caps.x_cap.unwrap()
        };
        if d_dead {
            break;
        }
        if moebius(d) != 0 {
            let td = tmin(d);
            let mut e = 1u64;
            loop {
                let t = &best / BigRational::from(big_pow(e, b2));
                if t < td {
                    break;
                }
                let sub_caps = CountCaps {
                    x_cap: caps.x_cap.map(|c| c / d),
                    workers: caps.workers,
                };
                let rc = count_scaled(form, d, &t, openset, &sub_caps)?;
                cap_hit |= rc.cap_hit;
                total += moebius(d) as i128 * moebius(e) as i128 * rc.raw as i128;
                e += 1;
            }
        }
        d += 1;
    }
    assert!(total >= 0, "inverted sum must be a nonnegative count");
    assert!(total % 4 == 0, "inverted sum must count whole sign orbits");
    Ok(CountReport {
        count: (total / 4) as u64,
        raw: total as u64,
        cap_hit,
    })
}

/// Box count: tuples with |x| ≤ P₁, |y| ≤ d|x|P₂, |z| ≤ P₂,
/// F(d·x, y, z) = 0, x ≠ 0 ≠ (y,z), on the open set (no primitivity).
pub fn count_box(
    form: &BidegreeForm,
    d: u64,
    p1: u64,
    p2: u64,
    openset: OpenSet,
    caps: &CountCaps,
) -> Result<u64, CountError> {
    let scaled = form.scale_x(d);
    let engine = Engine::new(
        &scaled,
        d,
        Mode::Box {
            p1,
            p2,
            widen: false,
        },
        false,
        openset,
        false,
        caps,
    )?;
    Ok(engine.run().raw)
}

/// Solution histogram h_d(k, l) over 1 ≤ k ≤ P₁, 0 ≤ l ≤ P₂ (the l = 0 row
/// kept apart).
pub fn histogram(
    form: &BidegreeForm,
    d: u64,
    p1: u64,
    p2: u64,
    openset: OpenSet,
    caps: &CountCaps,
) -> Result<Histogram, CountError> {
    let scaled = form.scale_x(d);
    let engine = Engine::new(
        &scaled,
        d,
        Mode::Box {
            p1,
            p2,
            widen: true,
        },
        false,
        openset,
        true,
        caps,
    )?;
    let out = engine.run();
    Ok(Histogram {
        d,
        p1,
        p2,
        cells: out.cells,
        zero_row: out.zero_row,
    })
}

/// Sandwich bounds on N_d(B) from a histogram: cell (k, l ≥ 1) holds points
/// with k^{β₁} l^{β₂} ≤ H_d < k^{β₁} (l+1)^{β₂} (the l = 0 row sits below
/// k^{β₁}), so
/// Σ_{k^{β₁}(l+1)^{β₂} ≤ B} h  ≤  N_d(B)  ≤  Σ_{k^{β₁}l^{β₂} ≤ B} h,
/// valid whenever the histogram box covers the full height-B ball.
pub fn sandwich_bounds(hist: &Histogram, b1: u32, b2: u32, bound: &BigRational) -> (u64, u64) {
    let num = bound.numer();
    let den = bound.denom();
    let fits = |k: u64, l: u64| -> bool { big_pow(k, b1) * big_pow(l, b2) * den <= *num };
    let mut lower = 0u64;
    let mut upper = 0u64;
    for (&(k, l), &h) in &hist.cells {
        if fits(k, l + 1) {
            lower += h;
        }
        if fits(k, l) {
            upper += h;
        }
    }
    for (&k, &h) in &hist.zero_row {
        if fits(k, 1) {
            lower += h;
        }
        upper += h; // heights in the zero row lie strictly below k^{β₁}
    }
    (lower, upper)
}
