//! Leading-constant assembly and applicability diagnostics.
//!
//! Two independent groupings of the same data must reproduce the constant
//! in 𝒩_U(B) ≈ σ·B·log B:
//!
//! * route 1, the counting-side product σ = ¼·J·∏_p σ′_p·∏_p (1 − p^{−β₂});
//! * route 2, the measure-side product α·β·τ_∞·∏_p τ_p with
//!   α = 1/(β₁β₂), β = 1, τ_∞ = (β₁β₂/4)·J and
//!   τ_p = (1 − p^{−β₂})·σ′_p.
//!
//! The two are algebraically identical; both are assembled here in exact
//! rational arithmetic (the J factor enters once, as the same float), so
//! the final values must agree bit for bit — a cheap end-to-end audit of
//! every factor.
//!
//! The applicability side evaluates the variable-count thresholds of the
//! asymptotic theorem: the number m of good variables demanded by the
//! Weyl-differencing machinery (a minimax in an auxiliary exponent b resp.
//! u, solved numerically here), the exponents μ, λ cut from the minimizing
//! b₁, u₁, and the derived capacities K, K₁, K₂.  Desk-scale instances
//! always fail these thresholds — the diagnostics name the first inequality
//! that breaks.

use crate::arch::{oscillatory_j, slab_sigma_inf, ArchError, JEstimate, SlabReport};
use crate::arith::primes_upto;
use crate::config::{ConfigError, InstanceConfig};
use crate::counting::{beta_pair, count_points, CountError, CountReport, OpenSet};
use crate::hypersum::{fit_blogb, BlogBFit, HypersumError};
use crate::padic::{
    local_density_table, singular_series, DensityEstimate, LocalDensityTable, PadicError,
    SingularSeries,
};
use crate::toric::KleinschmidtFan;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive};
use thiserror::Error;

/// ε in the capacity K = (n + 2 − max dim V* − ε)/2^{d̃}; the source takes
/// it arbitrarily small.
pub const DEFAULT_EPS: f64 = 1e-6;
/// δ in the minimax objectives and the ceilings μ, λ; arbitrarily small in
/// the source, fixed here so the diagnostics are reproducible.
pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("the truncated Euler product needs at least one local factor")]
    EmptyLocalFactors,
    #[error("anticanonical weights must be positive: β₁ = {0}, β₂ = {1}")]
    NonPositiveBeta(i64, i64),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Count(#[from] CountError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Hypersum(#[from] HypersumError),
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// σ_d and the two-route constant

/// σ_d = d^{m−r−d₁}·𝔖_d·J, the per-d leading constant of the scaled count.
/// The exponent m − r − d₁ may well be negative (it is −1 on the bilinear
/// P¹×P¹ instance).
pub fn sigma_d(d: u64, s_d: &BigRational, j: f64, fan: &KleinschmidtFan, d1: u32) -> f64 {
    assert!(d >= 1);
    let e = fan.m() as i32 - fan.r() as i32 - d1 as i32;
    (d as f64).powi(e) * rat_f64(s_d) * j
}

/// The constant σ decomposed along Peyre's prediction, assembled twice.
#[derive(Clone, Debug)]
pub struct PeyreBreakdown {
    /// α(Y) = 1/(β₁β₂), the effective-cone integral in closed form
    pub alpha: BigRational,
    /// β(Y) = #H¹(Q, Pic Ȳ) = 1: the Galois action on Pic Ȳ ≅ Z³ is
    /// trivial, so the group is trivial; hard-coded, not computed
    pub beta_cohom: u32,
    /// the archimedean factor used by both routes
    pub j_est: DensityEstimate,
    /// ∏_p (1 − p^{−β₂})·σ′_p, exact over the included primes
    pub local_product: BigRational,
    /// truncation metadata: largest prime included and factor count
    pub p_max: u64,
    pub n_factors: usize,
    /// ¼·J·∏σ′_p·∏(1−p^{−β₂})
    pub sigma_route1: f64,
    /// α·β·(β₁β₂/4)·J·∏[(1−p^{−β₂})σ′_p]
    pub sigma_route2: f64,
    /// bit-for-bit equality of the two routes
    pub agree: bool,
}

/// Assemble the leading constant both ways from an archimedean estimate and
/// per-prime local densities σ′_p.  Each route keeps its own grouping of
/// the factors in exact rational arithmetic and multiplies by the same
/// float J once at the end, so `agree` failing would expose a real defect
/// in one of the factor computations, not a rounding artifact.
pub fn peyre_constant(
    j_est: &DensityEstimate,
    local_factors: &[(u64, BigRational)],
    fan: &KleinschmidtFan,
    d1: u32,
    d2: u32,
) -> Result<PeyreBreakdown, AssembleError> {
    if local_factors.is_empty() {
        return Err(AssembleError::EmptyLocalFactors);
    }
    let b1 = fan.m() as i64 + 1 - d1 as i64;
    let b2 = fan.n() as i64 - fan.r() as i64 + 1 - d2 as i64;
    if b1 < 1 || b2 < 1 {
        return Err(AssembleError::NonPositiveBeta(b1, b2));
    }
    let j = j_est.value_f64();
    let euler = |p: u64| -> BigRational {
        BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(p).pow(b2 as u32))
    };

    // route 1: ¼ · J · ∏σ′_p · ∏(1−p^{−β₂})
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let mut prod_sigma = BigRational::one();
    let mut prod_euler = BigRational::one();
    for (p, s) in local_factors {
        prod_sigma *= s;
        prod_euler *= euler(*p);
    }
    let sigma_route1 = rat_f64(&(quarter * prod_sigma * prod_euler)) * j;

    // route 2: α · β · τ_∞ · ∏τ_p with τ_∞ = (β₁β₂/4)·J and
    // τ_p = (1−p^{−β₂})·σ′_p
    let b1b2 = BigInt::from(b1) * BigInt::from(b2);
    let alpha = BigRational::new(BigInt::one(), b1b2.clone());
    let beta_cohom = 1u32;
    let tau_inf_rat = BigRational::new(b1b2, BigInt::from(4));
    let mut tau_fin = BigRational::one();
    for (p, s) in local_factors {
        tau_fin *= euler(*p) * s;
    }
    let route2_rat =
        alpha.clone() * BigRational::from_integer(BigInt::from(beta_cohom)) * tau_inf_rat
            * &tau_fin;
    let sigma_route2 = rat_f64(&route2_rat) * j;

    Ok(PeyreBreakdown {
        alpha,
        beta_cohom,
        j_est: j_est.clone(),
        local_product: tau_fin,
        p_max: local_factors.iter().map(|&(p, _)| p).max().unwrap_or(0),
        n_factors: local_factors.len(),
        sigma_route1,
        sigma_route2,
        agree: sigma_route1.to_bits() == sigma_route2.to_bits(),
    })
}

// ---------------------------------------------------------------------------
// applicability diagnostics

/// The variable-count thresholds and uniformity exponents of the asymptotic
/// theorem, evaluated numerically.  Declared constants (ε, δ) are recorded
/// alongside; nothing here is validated against a closed form — the
/// minimax values exist only through their defining optimization.
#[derive(Clone, Debug)]
pub struct RegimeDiagnostics {
    /// d̃ = d₁ + d₂ − 2
    pub d_tilde: u32,
    /// K = (n + 2 − max(dim V*₁, dim V*₂) − ε)/2^{d̃}
    pub k: f64,
    /// K₁ = (n + 2 − dim V*₁ − μ)/2^{d₁−1}
    pub k1: f64,
    /// K₂ = (n + 2 − dim V*₂ − λ)/2^{d₂−1}
    pub k2: f64,
    /// μ = ⌈b₁d₁ + d₂ + δ⌉ at the minimizing b₁
    pub mu: u32,
    /// λ = ⌈d₁ + u₁d₂ + δ⌉ at the minimizing u₁ (for d₂ = 1 the variant
    /// u₁′ = d₁ + δ)
    pub lambda: u32,
    /// minimizer of the first minimax objective
    pub b1: f64,
    /// minimizer of the second (d₂ = 1: the pinned u₁′)
    pub u1: f64,
    pub m1: f64,
    /// for d₂ = 1 this is the closed-form variant 7d₁·2^{d₁−1}
    pub m2: f64,
    /// m = max{m₁, m₂}: good variables demanded by the differencing step
    pub m_required: f64,
    /// a-priori window for m: 2^{d₁+d₂} ≤ m ≤ 13d₂(d₁+d₂)2^{d₁+d₂}
    pub m_lower: f64,
    pub m_upper_bound: f64,
    /// D = max{m + 1 + 4d₁, n − r + 1 + 4d₂} (fan parameters m, n, r)
    pub big_d: u32,
    /// υ = m − r + max{(r+1)(d₁−1)/2^{d₁−1} + ε, 5d₁}
    pub upsilon: f64,
    /// α = min{(d₂−1)/(2d₁), (d₁−1)/(2d₂)}, the aspect-ratio exponent
    pub alpha_exp: f64,
    pub eps: f64,
    pub delta: f64,
    pub degrees_ok: bool,
    pub m_lower_ok: bool,
    /// n + 2 − max dim V* > m
    pub head_ok: bool,
    /// r ≥ 6d₁ − 3
    pub r_ok: bool,
    pub applies: bool,
    /// the failed inequalities, in check order
    pub failing: Vec<&'static str>,
}

fn g1(b: f64, d1: u32, d2: u32, delta: f64) -> f64 {
    let den = 1.0 - 5.0 * d2 as f64 / b - delta;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    5.0 * (d1 as f64 - 1.0) * (4.0 * d2 as f64 / b + 2.0 * delta) / den
}

fn g1_prime(b: f64, d1: u32, d2: u32, delta: f64) -> f64 {
    let den = 1.0 - 5.0 * d2 as f64 / b - delta;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    5.0 * (d1 as f64 - 1.0) * (10.0 * d2 as f64 / (3.0 * b) + 2.0 * delta) / den
}

fn g2(u: f64, d1: u32, d2: u32, delta: f64) -> f64 {
    let den = 1.0 - 5.0 * d1 as f64 / u - delta;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    5.0 * (d2 as f64 - 1.0) * (3.0 * d1 as f64 / u + 2.0 * delta) / den
}

/// max of the four b-side expressions whose minimum over b defines m₁
fn m1_objective(b: f64, d1: u32, d2: u32, delta: f64) -> f64 {
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    let dt = d1f + d2f - 2.0;
    let p_dt = dt.exp2();
    let p_d1 = (d1f - 1.0).exp2();
    let ceil_term = (b * d1f + d2f + delta).ceil();
    let t1 = p_dt * (b * d1f + d2f);
    let t2 = p_dt * (5.0 * b + 2.0) * (dt + 1.0);
    let t3 = p_d1 * (4.0 * (d1f - 1.0) + 2.0 * g1(b, d1, d2, delta) + ceil_term);
    let t4 = p_d1 * (7.0 * (d1f - 1.0) + 3.0 * g1_prime(b, d1, d2, delta) + ceil_term);
    t1.max(t2).max(t3).max(t4)
}

/// max of the three u-side expressions whose minimum over u defines m₂
fn m2_objective(u: f64, d1: u32, d2: u32, delta: f64) -> f64 {
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    let dt = d1f + d2f - 2.0;
    let p_dt = dt.exp2();
    let p_d2 = (d2f - 1.0).exp2();
    let t1 = p_dt * (d1f + u * d2f);
    let t2 = 7.0 * p_dt * (dt + 1.0);
    let t3 = p_d2 * (2.0 * (d2f - 1.0) + g2(u, d1, d2, delta) + (d1f + u * d2f + delta).ceil());
    t1.max(t2).max(t3)
}

/// Grid minimization with two refinement passes.  The objectives are
/// piecewise-continuous (ceiling jumps) and blow up at the left domain
/// edge, so a V-shaped coarse scan plus local refinement is reliable: the
/// final resolution is ~(hi−lo)·10⁻⁹.
fn minimize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    const STEPS: usize = 2000;
    let mut best_x = hi;
    let mut best = f64::INFINITY;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..3 {
        let w = (b - a) / STEPS as f64;
        for i in 0..=STEPS {
            let x = a + w * i as f64;
            let v = f(x);
            if v < best {
                best = v;
                best_x = x;
            }
        }
        a = (best_x - 2.0 * w).max(lo);
        b = (best_x + 2.0 * w).min(hi);
    }
    (best_x, best)
}

/// Fan-level entry point; delegates to [`check_hypotheses_params`].
pub fn check_hypotheses(
    fan: &KleinschmidtFan,
    d1: u32,
    d2: u32,
    dim_v1: usize,
    dim_v2: usize,
    eps: f64,
) -> RegimeDiagnostics {
    check_hypotheses_params(fan.n(), fan.r(), fan.m(), d1, d2, dim_v1, dim_v2, eps)
}

/// Evaluate every threshold of the asymptotic theorem on raw parameters
/// (n, r, m): the theorem's regime starts far beyond the desk-scale fan
/// cap, so the diagnostics must not require a constructed fan.  Pure
/// arithmetic; never fails.
#[allow(clippy::too_many_arguments)]
pub fn check_hypotheses_params(
    n: usize,
    r: usize,
    m: usize,
    d1: u32,
    d2: u32,
    dim_v1: usize,
    dim_v2: usize,
    eps: f64,
) -> RegimeDiagnostics {
    let delta = DEFAULT_DELTA;
    let (d1f, d2f) = (d1 as f64, d2 as f64);
    let d_tilde = (d1 + d2).saturating_sub(2);

    // first minimax: the b-side objective on b > 5d₂/(1−δ)
    let b_lo = 5.0 * d2f / (1.0 - delta);
    let b_hi = 40.0 * d2f + 40.0;
    let (b1, m1) = minimize_scalar(|b| m1_objective(b, d1, d2, delta), b_lo, b_hi);
    let mu = (b1 * d1f + d2f + delta).ceil().max(0.0) as u32;

    // second minimax: the u-side objective on u > 5d₁/(1−δ); for d₂ = 1
    // the source pins u₁′ = d₁ + δ and the closed form m₂′ = 7d₁·2^{d₁−1}
    let (u1, m2) = if d2 >= 2 {
        let u_lo = 5.0 * d1f / (1.0 - delta);
        let u_hi = 40.0 * d1f + 40.0;
        minimize_scalar(|u| m2_objective(u, d1, d2, delta), u_lo, u_hi)
    } else {
        (d1f + delta, 7.0 * d1f * (d1f - 1.0).exp2())
    };
    let lambda = (d1f + u1 * d2f + delta).ceil().max(0.0) as u32;

    let m_required = m1.max(m2);
    let m_lower = (d1f + d2f).exp2();
    let m_upper_bound = 13.0 * d2f * (d1f + d2f) * (d1f + d2f).exp2();

    let max_dim = dim_v1.max(dim_v2);
    let nv = n as f64 + 2.0;
    let k = (nv - max_dim as f64 - eps) / (d_tilde as f64).exp2();
    let k1 = (nv - dim_v1 as f64 - mu as f64) / (d1f - 1.0).exp2();
    let k2 = (nv - dim_v2 as f64 - lambda as f64) / (d2f - 1.0).exp2();

    let big_d = ((m + 1 + 4 * d1 as usize).max(n - r + 1 + 4 * d2 as usize)) as u32;
    let upsilon = (m - r) as f64
        + (((r + 1) as f64 * (d1f - 1.0)) / (d1f - 1.0).exp2() + eps).max(5.0 * d1f);
    let alpha_exp = ((d2f - 1.0) / (2.0 * d1f)).min((d1f - 1.0) / (2.0 * d2f));

    let mut failing = Vec::new();
    let degrees_ok = d1 >= 2 && d2 >= 1;
    if d1 < 2 {
        failing.push("d1 >= 2");
    }
    if d2 < 1 {
        failing.push("d2 >= 1");
    }
    let m_lower_ok = m_required >= m_lower;
    if !m_lower_ok {
        failing.push("m_required >= 2^(d1+d2)");
    }
    let head_ok = nv - max_dim as f64 > m_required;
    if !head_ok {
        failing.push("n+2 - max dim V* > m_required");
    }
    let r_ok = r as i64 >= 6 * d1 as i64 - 3;
    if !r_ok {
        failing.push("r >= 6*d1 - 3");
    }
    let applies = degrees_ok && m_lower_ok && head_ok && r_ok;

    RegimeDiagnostics {
        d_tilde,
        k,
        k1,
        k2,
        mu,
        lambda,
        b1,
        u1,
        m1,
        m2,
        m_required,
        m_lower,
        m_upper_bound,
        big_d,
        upsilon,
        alpha_exp,
        eps,
        delta,
        degrees_ok,
        m_lower_ok,
        head_ok,
        r_ok,
        applies,
        failing,
    }
}

// ---------------------------------------------------------------------------
// the end-to-end report

/// Everything the pipeline produced for one instance, with the CSV bodies
/// and the text summary already rendered (deterministic, no timestamps);
/// writing files is the caller's business.
#[derive(Clone, Debug)]
pub struct EndToEndReport {
    pub grid: Vec<u64>,
    pub counts: Vec<CountReport>,
    pub fit: Option<BlogBFit>,
    pub fit_note: String,
    pub tables: Vec<LocalDensityTable>,
    pub series: SingularSeries,
    pub slab: SlabReport,
    /// `None` when the instance exceeds the oscillatory-grid dimension cap
    pub oscillatory: Option<JEstimate>,
    pub breakdown: PeyreBreakdown,
    pub diagnostics: RegimeDiagnostics,
    pub c_hat_over_sigma: Option<f64>,
    pub summary: String,
    /// (file name, body) pairs: counts.csv, density_p.csv, density_inf.csv,
    /// constant.csv
    pub csv: Vec<(&'static str, String)>,
}

/// CSV of height-grid counts.
pub fn counts_csv(grid: &[u64], counts: &[CountReport], openset: OpenSet) -> String {
    let mut out = String::from("B,count,raw_count,openset_id,cap_hit\n");
    for (b, c) in grid.iter().zip(counts) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            b,
            c.count,
            c.raw,
            openset.id(),
            c.cap_hit
        ));
    }
    out
}

/// CSV of the p-adic density tables (one row per prime and level).
pub fn density_p_csv(tables: &[LocalDensityTable]) -> String {
    let mut out = String::from("p,N,M,Mstar,density,stabilized\n");
    for t in tables {
        for row in &t.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.p, row.n, row.m, row.mstar, row.density, t.stabilized
            ));
        }
    }
    out
}

/// CSV of the slab estimate at its three nested widths.
pub fn density_inf_csv(slab: &SlabReport) -> String {
    let mut out = String::from("eps,samples,estimate,stderr,seed\n");
    for level in &slab.levels {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            level.eps, slab.samples, level.estimate, level.stderr, slab.seed
        ));
    }
    out
}

/// CSV of the constant's breakdown, one quantity per row.
pub fn constant_csv(b: &PeyreBreakdown) -> String {
    let mut out = String::from("quantity,value\n");
    out.push_str(&format!("alpha,{}\n", b.alpha));
    out.push_str(&format!("beta_cohom,{}\n", b.beta_cohom));
    out.push_str(&format!("j,{}\n", b.j_est.value_f64()));
    out.push_str(&format!("local_product,{}\n", b.local_product));
    out.push_str(&format!("p_max,{}\n", b.p_max));
    out.push_str(&format!("sigma_route1,{}\n", b.sigma_route1));
    out.push_str(&format!("sigma_route2,{}\n", b.sigma_route2));
    out.push_str(&format!("routes_agree,{}\n", b.agree));
    out
}

/// Run the whole pipeline on one configured instance: exact counts over the
/// B-grid, the B·log B fit, p-adic density tables and the truncated Euler
/// products, the archimedean slab estimate (plus the oscillatory
/// cross-check when the dimension allows), the two-route constant, and the
/// regime diagnostics.
pub fn end_to_end_report(
    cfg: &InstanceConfig,
    workers: usize,
) -> Result<EndToEndReport, AssembleError> {
    cfg.validate()?;
    let fan = cfg.fan()?;
    let form = cfg.build_form()?;
    let openset = cfg.openset()?;
    let caps = cfg.count_caps(workers);
    let (b1, b2) = beta_pair(&form)?;

    let grid = cfg.b_grid_values();
    let mut counts = Vec::with_capacity(grid.len());
    for &b in &grid {
        let bound = BigRational::from_integer(BigInt::from(b));
        counts.push(count_points(&form, &bound, openset, &caps)?);
    }
    let series_points: Vec<(f64, f64)> = grid
        .iter()
        .zip(&counts)
        .map(|(&b, c)| (b as f64, c.count as f64))
        .collect();
    let (fit, fit_note) = match fit_blogb(&series_points) {
        Ok(f) => (Some(f), String::from("ok")),
        Err(e) => (None, format!("not fitted: {e}")),
    };

    let dens = &cfg.density;
    let mut tables = Vec::new();
    for p in primes_upto(dens.p_max) {
        tables.push(local_density_table(&form, p, dens.n_max)?);
    }
    let series = singular_series(&form, dens.p_max, dens.n_max)?;

    let slab = slab_sigma_inf(&form, dens.eps, dens.samples, dens.seed, workers)?;
    let oscillatory = match oscillatory_j(&form, 4.0, 128, 16) {
        Ok(j) => Some(j),
        Err(ArchError::DimensionCap(_)) => None,
        Err(e) => return Err(e.into()),
    };

    let breakdown = peyre_constant(
        &slab.estimate(),
        &series.factors,
        &fan,
        cfg.d1,
        cfg.d2,
    )?;
    let diagnostics = check_hypotheses(&fan, cfg.d1, cfg.d2, 0, 0, DEFAULT_EPS);

    let c_hat_over_sigma = fit.as_ref().and_then(|f| {
        let s = breakdown.sigma_route1;
        (s != 0.0).then(|| f.c_hat / s)
    });

    let mut s = String::new();
    s.push_str(&format!(
        "instance: fan({}, {}, {}), bidegree ({}, {}), open set {}\n",
        cfg.n,
        cfg.r,
        cfg.m,
        cfg.d1,
        cfg.d2,
        openset.id()
    ));
    s.push_str(&format!(
        "form: {} monomials, weights beta1 = {}, beta2 = {}\n",
        form.monomials().len(),
        b1,
        b2
    ));
    s.push_str(&format!("grid: {:?}\n", grid));
    for (b, c) in grid.iter().zip(&counts) {
        s.push_str(&format!(
            "count: B = {} -> {} points ({} tuples{})\n",
            b,
            c.count,
            c.raw,
            if c.cap_hit { ", cap hit" } else { "" }
        ));
    }
    match &fit {
        Some(f) => {
            s.push_str(&format!(
                "fit: C_hat = {} (linear {}, rms {}); pure C_hat = {} (rms {})\n",
                f.c_hat, f.linear, f.rms, f.c_hat_pure, f.rms_pure
            ));
        }
        None => s.push_str(&format!("fit: {fit_note}\n")),
    }
    for t in &tables {
        s.push_str(&format!(
            "local density: sigma'_{} = {}{}\n",
            t.p,
            t.last_density(),
            if t.stabilized { " (stabilized)" } else { "" }
        ));
    }
    s.push_str(&format!(
        "euler products (p <= {}, N = {}): plain = {}, weighted = {}\n",
        dens.p_max,
        dens.n_max,
        series.product.value_f64(),
        series.weighted.value_f64()
    ));
    let l0 = &slab.levels[0];
    s.push_str(&format!(
        "slab sigma_inf: {} +/- {} (eps = {}, samples = {}, seed = {})\n",
        l0.estimate, l0.stderr, l0.eps, slab.samples, slab.seed
    ));
    match &oscillatory {
        Some(j) => s.push_str(&format!(
            "oscillatory J: {} +/- {} (phi = {})\n",
            j.value,
            j.err(),
            j.phi
        )),
        None => s.push_str("oscillatory J: skipped (dimension above the grid cap)\n"),
    }
    s.push_str(&format!(
        "constant: alpha = {}, beta = {}, route1 = {}, route2 = {}, agree = {}\n",
        breakdown.alpha,
        breakdown.beta_cohom,
        breakdown.sigma_route1,
        breakdown.sigma_route2,
        breakdown.agree
    ));
    match c_hat_over_sigma {
        Some(ratio) => s.push_str(&format!("C_hat / sigma = {}\n", ratio)),
        None => s.push_str("C_hat / sigma = n/a\n"),
    }
    s.push_str(&format!(
        "regime: applies = {}, m_required = {} (window [{}, {}]), K = {}, K1 = {}, K2 = {}\n",
        diagnostics.applies,
        diagnostics.m_required,
        diagnostics.m_lower,
        diagnostics.m_upper_bound,
        diagnostics.k,
        diagnostics.k1,
        diagnostics.k2
    ));
    if !diagnostics.failing.is_empty() {
        s.push_str(&format!("regime: failing {:?}\n", diagnostics.failing));
    }
    s.push_str(&format!(
        "profile: mu = {}, lambda = {}, D = {}, upsilon = {}, alpha_exp = {}, eps = {}, delta = {}\n",
        diagnostics.mu,
        diagnostics.lambda,
        diagnostics.big_d,
        diagnostics.upsilon,
        diagnostics.alpha_exp,
        diagnostics.eps,
        diagnostics.delta
    ));

    let csv = vec![
        ("counts.csv", counts_csv(&grid, &counts, openset)),
        ("density_p.csv", density_p_csv(&tables)),
        ("density_inf.csv", density_inf_csv(&slab)),
        ("constant.csv", constant_csv(&breakdown)),
    ];

    Ok(EndToEndReport {
        grid,
        counts,
        fit,
        fit_note,
        tables,
        series,
        slab,
        oscillatory,
        breakdown,
        diagnostics,
        c_hat_over_sigma,
        summary: s,
        csv,
    })
}
