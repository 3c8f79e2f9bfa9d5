//! Two-parameter hyperbola summation: Σ f(k,l) over k^{β₁} l^{β₂} ≤ P.
//!
//! Three exact traversals of the same lattice region back each other up:
//!
//! * [`direct_sum`] — the plain double loop;
//! * [`split_identity`] — the three-part split into the l-heavy wing
//!   (l^{β₂} > √P), the k-heavy wing (k^{β₁} > √P), and the √P × √P box;
//!   the parts partition the region, so they must resum to the direct
//!   value;
//! * [`scheme_sum`] — the wing traversal that drives the C·P·log P
//!   extraction: a head piece T₁ over k ≤ d^{−1}P^μ and a tail piece T₂
//!   walked in multiplicative blocks K_j = d^{−1}P^μ(1+θ)^j with
//!   (1+θ)^J = d·P^{1/(2β₁)−μ}; T₁ + T₂ retraces the l-heavy wing
//!   index-for-index.
//!
//! Boundary membership is decided by exact integer arithmetic
//! (cross-multiplied BigInt powers), never by floating-point comparison;
//! floats only accumulate the summand values.

use crate::counting::Histogram;
use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::{Integer, ToPrimitive};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HypersumError {
    #[error("μ must satisfy 0 < β₁·μ < 1/2, got β₁ = {0}, μ = {1}")]
    BadMu(u32, f64),
    #[error("declared (D, α, δ) profile violates condition {0}")]
    ProfileViolated(&'static str),
    #[error("dyadic scheme needs at least 8 steps, got {0}")]
    TooFewSteps(usize),
    #[error("degenerate dyadic step: d·P^(1/(2β₁)−μ) = {0} ≤ 1")]
    DegenerateTheta(f64),
    #[error("fit needs at least 4 grid points, got {0}")]
    TooFewPoints(usize),
    #[error("fit grid must span at least two decades, got ratio {0}")]
    NarrowGrid(f64),
    #[error("normal equations are ill-conditioned")]
    IllConditioned,
}

/// Where the summand values come from.
#[derive(Clone, Debug)]
pub enum SummandSource {
    /// f ≡ 1: pure lattice-point counting
    Ones,
    /// arbitrary nonnegative table; absent keys are 0
    Table(BTreeMap<(u64, u64), f64>),
    /// the (k, l) cells of a counting histogram (the l = 0 stratum is
    /// kept out of the hyperbola region by construction: l ≥ 1 here)
    Histogram(Histogram),
}

impl SummandSource {
    /// Σ f(k, l) for l in lo..=hi at fixed k.
    fn row_sum(&self, k: u64, lo: u64, hi: u64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        match self {
            SummandSource::Ones => (hi - lo + 1) as f64,
            SummandSource::Table(t) => t.range((k, lo)..=(k, hi)).map(|(_, &v)| v).sum(),
            SummandSource::Histogram(h) => h
                .cells
                .range((k, lo)..=(k, hi))
                .map(|(_, &v)| v as f64)
                .sum(),
        }
    }
}

/// Declared exponent profile for the uniformity conditions the scheme's
/// asymptotic rests on (the artifact checks the declared inequalities,
/// it does not derive the exponents).
#[derive(Clone, Copy, Debug)]
pub struct MuProfile {
    pub big_d: f64,
    pub alpha: f64,
    pub delta: f64,
}

/// A weighted hyperbola-summation instance: summand source, weights
/// (β₁, β₂), scaling parameter d, and the head-cutoff exponent μ.
#[derive(Clone, Debug)]
pub struct SummationInstance {
    pub source: SummandSource,
    pub beta1: u32,
    pub beta2: u32,
    pub d: u64,
    pub mu: f64,
    pub profile: Option<MuProfile>,
}

impl SummationInstance {
    pub fn new(
        source: SummandSource,
        beta1: u32,
        beta2: u32,
        d: u64,
        mu: f64,
    ) -> Result<Self, HypersumError> {
        assert!(beta1 >= 1 && beta2 >= 1 && d >= 1);
        let b1mu = beta1 as f64 * mu;
        if !(b1mu > 0.0 && b1mu < 0.5) {
            return Err(HypersumError::BadMu(beta1, mu));
        }
        Ok(SummationInstance {
            source,
            beta1,
            beta2,
            d,
            mu,
            profile: None,
        })
    }

    /// Attach a profile; the declared inequalities must hold.
    pub fn with_profile(mut self, profile: MuProfile) -> Result<Self, HypersumError> {
        let diag = mu_profile_diagnostics(self.beta1, self.beta2, self.mu, &profile);
        if !diag.head_range_ok {
            return Err(HypersumError::ProfileViolated("head-range"));
        }
        if !diag.tail_error_ok {
            return Err(HypersumError::ProfileViolated("tail-error"));
        }
        self.profile = Some(profile);
        Ok(self)
    }
}

/// The three μ-inequalities, evaluated numerically on declared exponents:
/// size: 0 < β₁μ < 1/2; head-range: μ(1 + αβ₁/β₂) ≤ α/β₂;
/// tail-error: μ(D − β₁ + 1 + δβ₁/β₂) < δ/(2β₂).
#[derive(Clone, Copy, Debug)]
pub struct MuDiagnostics {
    pub size_ok: bool,
    pub head_range_ok: bool,
    pub tail_error_ok: bool,
}

impl MuDiagnostics {
    pub fn all_ok(&self) -> bool {
        self.size_ok && self.head_range_ok && self.tail_error_ok
    }
}

pub fn mu_profile_diagnostics(
    beta1: u32,
    beta2: u32,
    mu: f64,
    profile: &MuProfile,
) -> MuDiagnostics {
    let (b1, b2) = (beta1 as f64, beta2 as f64);
    let size = b1 * mu;
    MuDiagnostics {
        size_ok: size > 0.0 && size < 0.5,
        head_range_ok: mu * (1.0 + profile.alpha * b1 / b2) <= profile.alpha / b2,
        tail_error_ok: mu * (profile.big_d - b1 + 1.0 + profile.delta * b1 / b2)
            < profile.delta / (2.0 * b2),
    }
}

// ---------------------------------------------------------------------------
// exact region boundaries

/// Largest t ≥ 0 with t^e ≤ P (0 when P < 1).  Exact: ⌊P^{1/e}⌋ = ⌊⌊P⌋^{1/e}⌋.
fn root_floor(p: &BigRational, e: u32) -> u64 {
    let q = p.numer().div_floor(p.denom());
    if q.sign() == Sign::Minus {
        return 0;
    }
    q.nth_root(e)
        .to_u64()
        .expect("hyperbola bound out of desk range")
}

/// Largest l with k^{β₁}·l^{β₂} ≤ P (0 when no l ≥ 1 fits).
fn lmax_for_k(p: &BigRational, k: u64, beta1: u32, beta2: u32) -> u64 {
    let kb = BigInt::from(k).pow(beta1);
    let q = p.numer().div_floor(&(p.denom() * kb));
    if q.sign() == Sign::Minus {
        return 0;
    }
    q.nth_root(beta2)
        .to_u64()
        .expect("hyperbola bound out of desk range")
}

/// Exact double loop over the region.
pub fn direct_sum(inst: &SummationInstance, p: &BigRational) -> f64 {
    let mut sum = 0.0;
    for k in 1..=root_floor(p, inst.beta1) {
        sum += inst
            .source
            .row_sum(k, 1, lmax_for_k(p, k, inst.beta1, inst.beta2));
    }
    sum
}

/// The three-part split: `wing_l` has l^{β₂} > √P, `wing_k` has
/// k^{β₁} > √P, `boxed` has both ≤ √P.  Under the hyperbola constraint
/// the two wing conditions are mutually exclusive, so the parts
/// partition the region and resum to [`direct_sum`] exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitParts {
    pub wing_l: f64,
    pub wing_k: f64,
    pub boxed: f64,
}

impl SplitParts {
    pub fn total(&self) -> f64 {
        self.wing_l + self.wing_k + self.boxed
    }
}

pub fn split_identity(inst: &SummationInstance, p: &BigRational) -> SplitParts {
    // t > ksplit ⇔ t^{2β₁} > P, and likewise for l
    let ksplit = root_floor(p, 2 * inst.beta1);
    let lsplit = root_floor(p, 2 * inst.beta2);
    let mut out = SplitParts {
        wing_l: 0.0,
        wing_k: 0.0,
        boxed: 0.0,
    };
    for k in 1..=root_floor(p, inst.beta1) {
        let lm = lmax_for_k(p, k, inst.beta1, inst.beta2);
        if k > ksplit {
            out.wing_k += inst.source.row_sum(k, 1, lm);
        } else {
            out.boxed += inst.source.row_sum(k, 1, lm.min(lsplit));
            if lm > lsplit {
                out.wing_l += inst.source.row_sum(k, lsplit + 1, lm);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// the dyadic scheme

#[derive(Clone, Copy, Debug)]
pub struct SchemeReport {
    /// head: k ≤ d^{−1}P^μ, restricted to the l-heavy wing
    pub t1: f64,
    /// tail: the dyadic block walk over d^{−1}P^μ < k ≤ P^{1/(2β₁)}
    pub t2: f64,
    /// the full hyperbola sum at P
    pub total: f64,
    /// one-parameter least squares of the total against C·P·log P over
    /// the halving grid P, P/2, …, P/64
    pub c_hat: f64,
    /// the multiplicative step of the block walk
    pub theta: f64,
}

/// Sum of the l-heavy wing at column k.
fn wing_row(inst: &SummationInstance, p: &BigRational, lsplit: u64, k: u64) -> f64 {
    let lm = lmax_for_k(p, k, inst.beta1, inst.beta2);
    if lm > lsplit {
        inst.source.row_sum(k, lsplit + 1, lm)
    } else {
        0.0
    }
}

pub fn scheme_sum(
    inst: &SummationInstance,
    p: &BigRational,
    j_steps: usize,
) -> Result<SchemeReport, HypersumError> {
    if j_steps < 8 {
        return Err(HypersumError::TooFewSteps(j_steps));
    }
    let pf = p.numer().to_f64().unwrap_or(f64::INFINITY) / p.denom().to_f64().unwrap_or(1.0);
    let b1 = inst.beta1 as f64;
    let ratio = inst.d as f64 * pf.powf(1.0 / (2.0 * b1) - inst.mu);
    if !(ratio > 1.0) {
        return Err(HypersumError::DegenerateTheta(ratio));
    }
    let theta = ratio.powf(1.0 / j_steps as f64) - 1.0;

    let lsplit = root_floor(p, 2 * inst.beta2);
    // head cutoff: the real number d^{−1}P^μ, floored once and shared by
    // both pieces so they partition the k-range whatever the rounding
    let kcut_real = pf.powf(inst.mu) / inst.d as f64;
    let kcut = kcut_real.floor().max(0.0) as u64;
    let mut t1 = 0.0;
    for k in 1..=kcut {
        t1 += wing_row(inst, p, lsplit, k);
    }

    // block walk; the last block is pinned to the exact end of the wing's
    // k-range so float rounding of (1+θ)^j can never drop a column
    let wing_k_end = root_floor(p, 2 * inst.beta1);
    let mut t2 = 0.0;
    let mut prev = kcut;
    for j in 1..=j_steps {
        let mut hi = (kcut_real * (1.0 + theta).powi(j as i32)).floor() as u64;
        if j == j_steps {
            hi = hi.max(wing_k_end);
        }
        for k in prev + 1..=hi.max(prev) {
            t2 += wing_row(inst, p, lsplit, k);
        }
        prev = prev.max(hi);
    }

    // Ĉ from the halving grid (columns with P_i ≤ 1 carry no log weight)
    let mut num = 0.0;
    let mut den = 0.0;
    let mut total = 0.0;
    for i in 0..=6u32 {
        let pi = p / BigRational::from(BigInt::from(1u64 << i));
        let y = direct_sum(inst, &pi);
        if i == 0 {
            total = y;
        }
        let pif = pf / (1u64 << i) as f64;
        let w = pif * pif.ln();
        if w > 0.0 {
            num += w * y;
            den += w * w;
        }
    }
    let c_hat = if den > 0.0 { num / den } else { 0.0 };

    Ok(SchemeReport {
        t1,
        t2,
        total,
        c_hat,
        theta,
    })
}

// ---------------------------------------------------------------------------
// asymptotic-model fitting

/// Least-squares fits of a count series against a·B·log B + b·B (and,
/// for reference, against a·B·log B alone).
#[derive(Clone, Copy, Debug)]
pub struct BlogBFit {
    /// the B·log B coefficient of the two-parameter model — the headline Ĉ
    pub c_hat: f64,
    /// the linear coefficient of the two-parameter model
    pub linear: f64,
    pub rms: f64,
    /// one-parameter alternative (no linear term)
    pub c_hat_pure: f64,
    pub rms_pure: f64,
}

pub fn fit_blogb(series: &[(f64, f64)]) -> Result<BlogBFit, HypersumError> {
    if series.len() < 4 {
        return Err(HypersumError::TooFewPoints(series.len()));
    }
    let bmin = series.iter().map(|&(b, _)| b).fold(f64::INFINITY, f64::min);
    let bmax = series.iter().map(|&(b, _)| b).fold(0.0, f64::max);
    if !(bmin > 0.0) || bmax / bmin < 100.0 {
        return Err(HypersumError::NarrowGrid(bmax / bmin));
    }
    let (mut suu, mut suv, mut svv, mut suy, mut svy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(b, y) in series {
        let u = b * b.ln();
        let v = b;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        suy += u * y;
        svy += v * y;
    }
    let det = suu * svv - suv * suv;
    if !(det.abs() > 1e-12 * suu * svv) {
        return Err(HypersumError::IllConditioned);
    }
    let c_hat = (suy * svv - svy * suv) / det;
    let linear = (svy * suu - suy * suv) / det;
    let c_hat_pure = suy / suu;
    let mut ss = 0.0;
    let mut ss_pure = 0.0;
    for &(b, y) in series {
        let u = b * b.ln();
        ss += (y - c_hat * u - linear * b).powi(2);
        ss_pure += (y - c_hat_pure * u).powi(2);
    }
    let n = series.len() as f64;
    Ok(BlogBFit {
        c_hat,
        linear,
        rms: (ss / n).sqrt(),
        c_hat_pure,
        rms_pure: (ss_pure / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::{histogram, CountCaps, OpenSet};
    use crate::toric::KleinschmidtFan;
    use crate::BidegreeForm;

    fn rat(n: u64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    fn ones(beta1: u32, beta2: u32) -> SummationInstance {
        let mu = 0.25 / beta1 as f64;
        SummationInstance::new(SummandSource::Ones, beta1, beta2, 1, mu).unwrap()
    }

    #[test]
    fn direct_sum_hand_counts() {
        // kl ≤ 4: 4 + 2 + 1 + 1
        assert_eq!(direct_sum(&ones(1, 1), &rat(4)), 8.0);
        // k²l ≤ 4: k=1 → l ≤ 4; k=2 → l ≤ 1
        assert_eq!(direct_sum(&ones(2, 1), &rat(4)), 5.0);
        // below the first lattice point
        assert_eq!(
            direct_sum(&ones(1, 1), &BigRational::new(BigInt::from(1), BigInt::from(2))),
            0.0
        );
        assert_eq!(direct_sum(&ones(1, 1), &rat(0)), 0.0);
    }

    #[test]
    fn split_parts_partition_the_region() {
        let inst = ones(1, 1);
        let s = split_identity(&inst, &rat(4));
        assert_eq!((s.wing_l, s.wing_k, s.boxed), (2.0, 2.0, 4.0));
        assert_eq!(s.total(), direct_sum(&inst, &rat(4)));
        // P = 1: only (1,1), sitting in the box
        let s = split_identity(&inst, &rat(1));
        assert_eq!((s.wing_l, s.wing_k, s.boxed), (0.0, 0.0, 1.0));
        // asymmetric weights, many scales
        for (b1, b2) in [(1u32, 1u32), (2, 1), (1, 2), (3, 2)] {
            let inst = ones(b1, b2);
            for p in [2u64, 10, 100, 1000, 65536, 1_000_000] {
                let s = split_identity(&inst, &rat(p));
                assert_eq!(
                    s.total(),
                    direct_sum(&inst, &rat(p)),
                    "b1={b1} b2={b2} P={p}"
                );
            }
        }
    }

    #[test]
    fn split_holds_on_table_and_histogram_sources() {
        // a lumpy integer table
        let mut t = BTreeMap::new();
        for k in 1..=20u64 {
            for l in 1..=20u64 {
                if (k * 7 + l * 11) % 3 != 1 {
                    t.insert((k, l), ((k * l) % 5 + 1) as f64);
                }
            }
        }
        let inst =
            SummationInstance::new(SummandSource::Table(t), 1, 2, 1, 0.25).unwrap();
        for p in [1u64, 3, 17, 100, 400] {
            let s = split_identity(&inst, &rat(p));
            assert_eq!(s.total(), direct_sum(&inst, &rat(p)), "P={p}");
        }

        // histogram h₁(k,l) of a genuine instance
        let fan = KleinschmidtFan::build(4, 1, 1).unwrap();
        let form = BidegreeForm::new(
            &fan,
            1,
            1,
            vec![
                (vec![1, 0, 1, 0, 0, 0], BigInt::from(1)),
                (vec![0, 1, 0, 1, 0, 0], BigInt::from(1)),
            ],
        )
        .unwrap();
        let hist = histogram(
            &form,
            1,
            30,
            10,
            OpenSet::SpecializeNonzero,
            &CountCaps::default(),
        )
        .unwrap();
        let inst =
            SummationInstance::new(SummandSource::Histogram(hist), 1, 3, 1, 0.25).unwrap();
        for p in [8u64, 64, 512, 4096] {
            let s = split_identity(&inst, &rat(p));
            assert_eq!(s.total(), direct_sum(&inst, &rat(p)), "P={p}");
        }
    }

    #[test]
    fn scheme_retraces_the_wing_exactly() {
        for p in [16u64, 64, 256, 65536] {
            let inst = ones(1, 1);
            let rep = scheme_sum(&inst, &rat(p), 16).unwrap();
            let s = split_identity(&inst, &rat(p));
            assert_eq!(rep.t1 + rep.t2, s.wing_l, "P={p}");
            assert_eq!(rep.total, direct_sum(&inst, &rat(p)));
            assert!(rep.theta > 0.0);
        }
        // and on weighted instances with d > 1
        let mut t = BTreeMap::new();
        for k in 1..=40u64 {
            for l in 1..=40u64 {
                t.insert((k, l), ((k + l) % 4) as f64);
            }
        }
        let inst = SummationInstance::new(SummandSource::Table(t), 2, 1, 3, 0.2).unwrap();
        let rep = scheme_sum(&inst, &rat(1000), 12).unwrap();
        let s = split_identity(&inst, &rat(1000));
        assert_eq!(rep.t1 + rep.t2, s.wing_l);
    }

    #[test]
    fn scheme_rejects_degenerate_setups() {
        assert!(matches!(
            scheme_sum(&ones(1, 1), &rat(100), 4),
            Err(HypersumError::TooFewSteps(4))
        ));
        // P = 1 → d·P^{1/2−μ} = 1: no multiplicative room
        assert!(matches!(
            scheme_sum(&ones(1, 1), &rat(1), 8),
            Err(HypersumError::DegenerateTheta(_))
        ));
    }

    #[test]
    fn chat_vanishes_without_log_growth() {
        // f supported on l = 1 only: Σ = ⌊P^{1/β₁}⌋, pure linear growth,
        // so the P·log P coefficient drifts to 0 as P grows
        let mut t = BTreeMap::new();
        for k in 1..=(1u64 << 18) {
            t.insert((k, 1), 1.0);
        }
        let inst = SummationInstance::new(SummandSource::Table(t), 1, 1, 1, 0.25).unwrap();
        let small = scheme_sum(&inst, &rat(1 << 10), 8).unwrap();
        let large = scheme_sum(&inst, &rat(1 << 18), 8).unwrap();
        assert!(large.c_hat > 0.0);
        assert!(large.c_hat < small.c_hat);
        assert!(large.c_hat < 0.2, "c_hat {}", large.c_hat);
    }

    #[test]
    fn mu_validation_and_profile() {
        assert!(matches!(
            SummationInstance::new(SummandSource::Ones, 2, 1, 1, 0.3),
            Err(HypersumError::BadMu(2, _))
        ));
        assert!(matches!(
            SummationInstance::new(SummandSource::Ones, 1, 1, 1, 0.0),
            Err(HypersumError::BadMu(1, _))
        ));
        let profile = MuProfile {
            big_d: 1.0,
            alpha: 1.0,
            delta: 0.5,
        };
        // μ = 0.1: head-range 0.1·2 ≤ 1 ✓; tail-error 0.1·1.5 < 0.25 ✓
        let inst = SummationInstance::new(SummandSource::Ones, 1, 1, 1, 0.1)
            .unwrap()
            .with_profile(profile)
            .unwrap();
        assert!(inst.profile.is_some());
        // μ = 0.25: tail-error 0.375 ≥ 0.25 ✗
        assert!(matches!(
            SummationInstance::new(SummandSource::Ones, 1, 1, 1, 0.25)
                .unwrap()
                .with_profile(profile),
            Err(HypersumError::ProfileViolated("tail-error"))
        ));
        let d = mu_profile_diagnostics(1, 1, 0.1, &profile);
        assert!(d.all_ok());
    }

    #[test]
    fn fit_recovers_planted_constants() {
        let grid: Vec<f64> = (0..8).map(|i| 100.0 * 2.75f64.powi(i)).collect();
        // pure model
        let series: Vec<(f64, f64)> = grid.iter().map(|&b| (b, 3.0 * b * b.ln())).collect();
        let fit = fit_blogb(&series).unwrap();
        assert!((fit.c_hat - 3.0).abs() < 1e-9, "c={}", fit.c_hat);
        assert!((fit.c_hat_pure - 3.0).abs() < 1e-9);
        // with a linear nuisance term
        let series: Vec<(f64, f64)> = grid
            .iter()
            .map(|&b| (b, 3.0 * b * b.ln() + 5.0 * b))
            .collect();
        let fit = fit_blogb(&series).unwrap();
        assert!((fit.c_hat - 3.0).abs() < 3e-6, "c={}", fit.c_hat);
        assert!((fit.linear - 5.0).abs() < 1e-4, "b={}", fit.linear);
        assert!(fit.rms < 1e-6 * series.last().unwrap().1);
    }

    #[test]
    fn fit_rejects_bad_grids() {
        let short = [(100.0, 1.0), (200.0, 2.0), (400.0, 3.0)];
        assert!(matches!(
            fit_blogb(&short),
            Err(HypersumError::TooFewPoints(3))
        ));
        let narrow = [(100.0, 1.0), (150.0, 2.0), (200.0, 3.0), (300.0, 4.0)];
        assert!(matches!(
            fit_blogb(&narrow),
            Err(HypersumError::NarrowGrid(_))
        ));
    }

    #[test]
    fn direct_sum_swap_symmetry() {
        // swapping the two axes together with transposing f fixes the sum
        let mut t = BTreeMap::new();
        let mut tt = BTreeMap::new();
        for k in 1..=15u64 {
            for l in 1..=15u64 {
                let v = ((3 * k + l) % 7) as f64;
                t.insert((k, l), v);
                tt.insert((l, k), v);
            }
        }
        let a = SummationInstance::new(SummandSource::Table(t), 2, 3, 1, 0.2).unwrap();
        let b = SummationInstance::new(SummandSource::Table(tt), 3, 2, 1, 0.15).unwrap();
        for p in [10u64, 50, 200, 3000] {
            assert_eq!(
                direct_sum(&a, &rat(p)),
                direct_sum(&b, &rat(p)),
                "P={p}"
            );
        }
        // monotone in P
        let inst = ones(1, 2);
        let mut prev = -1.0;
        for p in 1..=40u64 {
            let s = direct_sum(&inst, &rat(p));
            assert!(s >= prev);
            prev = s;
        }
    }
}
