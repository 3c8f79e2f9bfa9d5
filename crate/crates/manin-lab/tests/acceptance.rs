//! Acceptance gate: ten independent checks over the whole pipeline, one
//! pass/fail line each.  Run via `cargo test --test acceptance` (the target
//! has no harness; it is a plain binary that exits nonzero on any failure).
//!
//! Every tolerance and time budget is pinned as a constant next to the
//! check that uses it.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use manin_lab::arch::{oscillatory_j, slab_sigma_inf};
use manin_lab::assemble::{end_to_end_report, peyre_constant};
use manin_lab::config::InstanceConfig;
use manin_lab::counting::{
    beta_pair, count_moebius, count_points, height, height_monomial, heights_agree, histogram,
    CountCaps, OpenSet,
};
use manin_lab::forms::BidegreeForm;
use manin_lab::hypersum::{direct_sum, fit_blogb, scheme_sum, split_identity, SummandSource,
    SummationInstance};
use manin_lab::padic::{a_d, local_density_table, partial_sum_identity, singular_series};
use manin_lab::rng::CounterRng;
use manin_lab::toric::{DivisorClass, KleinschmidtFan};
use manin_lab::TorsorPoint;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;

type Check = (&'static str, fn() -> Result<String, String>);

fn main() {
    let checks: Vec<Check> = vec![
        ("1 moebius-inversion", c1_moebius),
        ("2 monomial-basis", c2_monomials),
        ("3 height-consistency", c3_heights),
        ("4 padic-partial-sums", c4_partial_sums),
        ("5 mstar-relation", c5_mstar),
        ("6 a_d-multiplicativity", c6_multiplicative),
        ("7 archimedean-crosscheck", c7_archimedean),
        ("8 hyperbola-identities", c8_hyperbola),
        ("9 end-to-end-trend", c9_trend),
        ("10 determinism", c10_determinism),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {name}: PASS ({detail}; {secs:.1} s)"),
            Err(why) => {
                failures += 1;
                println!("acceptance {name}: FAIL ({why}; {secs:.1} s)");
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}

fn fan(n: usize, r: usize, m: usize) -> KleinschmidtFan {
    KleinschmidtFan::build(n, r, m).unwrap()
}

fn form(
    f: &KleinschmidtFan,
    d1: u32,
    d2: u32,
    monos: &[(&[u32], i64)],
) -> BidegreeForm {
    BidegreeForm::new(
        f,
        d1,
        d2,
        monos
            .iter()
            .map(|(e, c)| (e.to_vec(), BigInt::from(*c)))
            .collect(),
    )
    .unwrap()
}

fn big(b: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(b))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The P¹×P¹ bilinear hypersurface x₀z₂ − x₁z₃ = 0 (a rational curve).
fn bilinear_p1p1() -> BidegreeForm {
    let f = fan(2, 1, 1);
    form(&f, 1, 1, &[(&[1, 0, 1, 0], 1), (&[0, 1, 0, 1], -1)])
}

/// The smooth 3-fold x₀z₂ + x₁z₃ = 0 in the P³-bundle fan(4, 1, 1),
/// weights β = (1, 3).
fn threefold_411() -> BidegreeForm {
    let f = fan(4, 1, 1);
    form(
        &f,
        1,
        1,
        &[(&[1, 0, 1, 0, 0, 0], 1), (&[0, 1, 0, 1, 0, 0], 1)],
    )
}

/// y₂ + x₀z₃ + x₁z₄ = 0 in fan(3, 1, 2), weights β = (2, 2).  Solving for
/// y₂ identifies the surface with P¹×P¹ carrying its anticanonical height,
/// so the count genuinely grows like B·log B and the leading constant is a
/// theorem, not just a heuristic — the honest end-to-end trend instance.
fn graph_surface_312() -> BidegreeForm {
    let f = fan(3, 1, 2);
    form(
        &f,
        1,
        1,
        &[
            (&[0, 0, 1, 0, 0], 1),
            (&[1, 0, 0, 1, 0], 1),
            (&[0, 1, 0, 0, 1], 1),
        ],
    )
}

// ---------------------------------------------------------------------------

/// Exact equality of the Möbius-inverted count with the direct count on
/// six instances (two of them of bidegree (2, 2)) for all B in
/// {1, 2, 4, …, 64}, within a time budget.
const C1_BUDGET_SECS: f64 = 60.0;

fn c1_moebius() -> Result<String, String> {
    let start = Instant::now();
    let f212 = fan(3, 1, 2);
    let f322 = fan(3, 2, 2);
    let instances: Vec<(BidegreeForm, OpenSet)> = vec![
        (bilinear_p1p1(), OpenSet::All),
        (
            {
                let f = fan(2, 1, 1);
                form(
                    &f,
                    1,
                    1,
                    &[(&[1, 0, 1, 0], 1), (&[0, 1, 1, 0], 1), (&[0, 1, 0, 1], 1)],
                )
            },
            OpenSet::All,
        ),
        // bidegree (2, 2) with a y-variable; vanishing locus of y₂² forces
        // the z = 0 stratum empty, so no cap is needed
        (
            form(
                &f212,
                2,
                2,
                &[
                    (&[1, 1, 0, 1, 1], 1),
                    (&[0, 0, 2, 0, 0], 1),
                    (&[2, 0, 0, 2, 0], -1),
                ],
            ),
            OpenSet::All,
        ),
        (
            form(
                &f212,
                2,
                2,
                &[
                    (&[2, 0, 0, 0, 2], 1),
                    (&[0, 2, 0, 2, 0], 1),
                    (&[0, 0, 2, 0, 0], -1),
                ],
            ),
            OpenSet::SpecializeNonzero,
        ),
        (
            form(
                &f322,
                1,
                1,
                &[(&[1, 0, 0, 1, 0], 1), (&[0, 1, 0, 0, 1], 1), (&[0, 0, 1, 1, 0], 1)],
            ),
            OpenSet::All,
        ),
        (threefold_411(), OpenSet::SpecializeNonzero),
    ];
    let caps = CountCaps::default();
    let mut checked = 0u32;
    for (i, (f, openset)) in instances.iter().enumerate() {
        for b in [1u64, 2, 4, 8, 16, 32, 64] {
            let direct = count_points(f, &big(b), *openset, &caps)
                .map_err(|e| format!("instance {i} direct B={b}: {e}"))?;
            let inverted = count_moebius(f, &big(b), *openset, &caps)
                .map_err(|e| format!("instance {i} inverted B={b}: {e}"))?;
            if direct.count != inverted.count {
                return Err(format!(
                    "instance {i} B={b}: direct {} != inverted {}",
                    direct.count, inverted.count
                ));
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= C1_BUDGET_SECS {
        return Err(format!("took {secs:.1} s >= {C1_BUDGET_SECS} s"));
    }
    Ok(format!("{checked} equalities on 6 instances"))
}

/// The section-polytope monomial basis equals the brute-force set of all
/// exponent vectors of the right bidegree, for every fan with n ≤ 5 and
/// every bidegree (d₁, d₂) ≤ (3, 3), as exact sets.
fn c2_monomials() -> Result<String, String> {
    let mut fans = Vec::new();
    for n in 2..=5usize {
        for r in 1..n {
            for m in r..n {
                if let Ok(f) = KleinschmidtFan::build(n, r, m) {
                    fans.push(f);
                }
            }
        }
    }
    if fans.len() < 10 {
        return Err(format!("only {} fans built", fans.len()));
    }
    let mut cases = 0u32;
    for f in &fans {
        // per-variable exponent bounds justified by the class types
        // (1,0) / (1,1) / (0,1) of the three blocks
        for v in 0..f.num_vars() {
            let c = f.picard_class(v);
            if !matches!((c.a, c.b), (1, 0) | (1, 1) | (0, 1)) {
                return Err(format!("unexpected variable class ({}, {})", c.a, c.b));
            }
        }
        for d1 in 1i64..=3 {
            for d2 in 1i64..=3 {
                let class = DivisorClass::new(d1, d2);
                let mut from_polytope: Vec<Vec<u32>> = f
                    .section_polytope(class)
                    .iter()
                    .map(|u| f.monomial_of(class, u).expect("lattice point maps"))
                    .collect();
                from_polytope.sort();

                let nv = f.num_vars();
                let bound = |v: usize| -> u32 {
                    let c = f.picard_class(v);
                    match (c.a, c.b) {
                        (1, 0) => d1 as u32,
                        (1, 1) => d1.min(d2) as u32,
                        _ => d2 as u32,
                    }
                };
                let mut brute: Vec<Vec<u32>> = Vec::new();
                let mut e = vec![0u32; nv];
                loop {
                    if f.class_of_monomial(&e) == class {
                        brute.push(e.clone());
                    }
                    // odometer over the bounded exponent box
                    let mut v = 0;
                    loop {
                        if v == nv {
                            break;
                        }
                        if e[v] < bound(v) {
                            e[v] += 1;
                            break;
                        }
                        e[v] = 0;
                        v += 1;
                    }
                    if v == nv {
                        break;
                    }
                }
                brute.sort();
                if from_polytope != brute {
                    return Err(format!(
                        "fan({}, {}, {}) bidegree ({d1}, {d2}): {} polytope vs {} brute monomials",
                        f.n(),
                        f.r(),
                        f.m(),
                        from_polytope.len(),
                        brute.len()
                    ));
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{} (fan, bidegree) cases, {} fans", cases, fans.len()))
}

/// Closed-form height equals the monomial maximum, exactly, on 10⁴ random
/// points per instance (instances chosen where the two routes provably
/// agree: β₁ ≥ β₂ or no y-block).
const C3_POINTS: u64 = 10_000;

fn c3_heights() -> Result<String, String> {
    let instances = [
        (fan(2, 1, 1), 1u32, 1u32),
        (fan(3, 2, 2), 1, 1),
        (fan(3, 1, 2), 2, 2),
        (fan(4, 2, 3), 1, 1),
    ];
    let mut total = 0u64;
    for (f, d1, d2) in &instances {
        let b1 = (f.m() + 1) as u32 - d1;
        let b2 = (f.n() - f.r() + 1) as u32 - d2;
        if !heights_agree(f, b1, b2) {
            return Err(format!(
                "fan({}, {}, {}) with β = ({b1}, {b2}) is outside the equality regime",
                f.n(),
                f.r(),
                f.m()
            ));
        }
        let (nx, ny, nz) = f.block_sizes();
        let rng = CounterRng::new(0xACC3);
        let mut idx = 0u64;
        let mut draw = |lo: i64, hi: i64| {
            let v = rng.int_in_at(idx, lo, hi);
            idx += 1;
            v
        };
        for _ in 0..C3_POINTS {
            let mut x: Vec<i64> = (0..nx).map(|_| draw(-20, 20)).collect();
            if x.iter().all(|&v| v == 0) {
                x[0] = 1;
            }
            let y: Vec<i64> = (0..ny).map(|_| draw(-20, 20)).collect();
            let z: Vec<i64> = (0..nz).map(|_| draw(-20, 20)).collect();
            let pt = TorsorPoint::new(x, y, z);
            let lhs = height(&pt, b1, b2);
            let rhs = height_monomial(&pt, f, b1, b2);
            if lhs != rhs {
                return Err(format!(
                    "height {lhs} != monomial max {rhs} at {pt:?} on fan({}, {}, {})",
                    f.n(),
                    f.r(),
                    f.m()
                ));
            }
            total += 1;
        }
    }
    Ok(format!("{total} exact equalities on 4 instances"))
}

/// The finite-level identity Σ_k (A₁(p^k) − A_p(p^k)/p^{r+1}) =
/// M_p(N)/p^{N(n+1)} holds exactly at (p, N) ∈ {(2,1), (3,1), (2,2)} on
/// three forms, and the bilinear instance reproduces the pinned value 3/4.
fn c4_partial_sums() -> Result<String, String> {
    let f211 = fan(2, 1, 1);
    let forms = [
        bilinear_p1p1(),
        form(&f211, 1, 1, &[(&[1, 0, 1, 0], 1), (&[0, 1, 1, 0], 2), (&[0, 1, 0, 1], 1)]),
        form(&f211, 1, 1, &[(&[1, 0, 0, 1], 3), (&[0, 1, 1, 0], -1)]),
    ];
    let mut checked = 0;
    for (i, f) in forms.iter().enumerate() {
        for (p, n) in [(2u64, 1u32), (3, 1), (2, 2)] {
            let (lhs, rhs) =
                partial_sum_identity(f, p, n).map_err(|e| format!("form {i} ({p},{n}): {e}"))?;
            if lhs != rhs {
                return Err(format!("form {i} ({p},{n}): {lhs} != {rhs}"));
            }
            checked += 1;
        }
    }
    let (_, rhs) = partial_sum_identity(&bilinear_p1p1(), 2, 1).unwrap();
    if rhs != rat(3, 4) {
        return Err(format!("pinned density at (2,1): got {rhs}, want 3/4"));
    }
    Ok(format!("{checked} identities, pinned 3/4 at (p,N)=(2,1)"))
}

/// M*ₚ(N)/p^{N(n+1)} = (1 − p^{−β₂})·Mₚ(N)/p^{N(n+1)} exactly once the
/// density has stabilized, including the pinned 3/8 = ½·3/4 at (2, 1).
fn c5_mstar() -> Result<String, String> {
    let f211 = fan(2, 1, 1);
    let forms = [
        bilinear_p1p1(),
        form(&f211, 1, 1, &[(&[1, 0, 1, 0], 1), (&[0, 1, 0, 1], 1)]),
        // unimodular coefficient matrix [[1,0],[1,1]]: stays nondegenerate
        // mod every prime, which the level-by-level relation needs
        form(&f211, 1, 1, &[(&[1, 0, 1, 0], 1), (&[0, 1, 1, 0], 1), (&[0, 1, 0, 1], 1)]),
    ];
    let mut checked = 0;
    for (i, f) in forms.iter().enumerate() {
        let (_, b2) = beta_pair(f).map_err(|e| e.to_string())?;
        for p in [2u64, 3, 5] {
            let table = local_density_table(f, p, 2).map_err(|e| format!("form {i} p={p}: {e}"))?;
            if !table.stabilized {
                return Err(format!("form {i} p={p}: density not stabilized at N=2"));
            }
            let euler = BigRational::one()
                - BigRational::new(BigInt::one(), BigInt::from(p).pow(b2));
            for row in &table.rows {
                if row.density_star != euler.clone() * &row.density {
                    return Err(format!(
                        "form {i} p={p} N={}: {} != (1 - p^-{b2})·{}",
                        row.n, row.density_star, row.density
                    ));
                }
                checked += 1;
            }
        }
    }
    let table = local_density_table(&bilinear_p1p1(), 2, 1).unwrap();
    let row = &table.rows[0];
    if row.density != rat(3, 4) || row.density_star != rat(3, 8) {
        return Err(format!(
            "pinned (2,1) values: got ({}, {}), want (3/4, 3/8)",
            row.density, row.density_star
        ));
    }
    Ok(format!("{checked} level relations, pinned 3/8 = (1/2)(3/4)"))
}

/// A_d(q) is multiplicative: A_d(q₁q₂) = A_d(q₁)·A_d(q₂) exactly on every
/// coprime pair with q₁q₂ ≤ 12, for three forms and d ∈ {1, 2}.
fn c6_multiplicative() -> Result<String, String> {
    let f211 = fan(2, 1, 1);
    let f322 = fan(3, 2, 2);
    let forms = [
        bilinear_p1p1(),
        form(&f211, 1, 1, &[(&[1, 0, 1, 0], 1), (&[0, 1, 1, 0], 1), (&[0, 1, 0, 1], -2)]),
        form(&f322, 1, 1, &[(&[1, 0, 0, 1, 0], 1), (&[0, 1, 0, 0, 1], 1)]),
    ];
    let mut pairs = Vec::new();
    for q1 in 2u64..=6 {
        for q2 in (q1 + 1)..=12 {
            if q1 * q2 <= 12 && gcd(q1, q2) == 1 {
                pairs.push((q1, q2));
            }
        }
    }
    let mut checked = 0;
    for (i, f) in forms.iter().enumerate() {
        for d in [1u64, 2] {
            for &(q1, q2) in &pairs {
                let a1 = a_d(f, d, q1).map_err(|e| e.to_string())?;
                let a2 = a_d(f, d, q2).map_err(|e| e.to_string())?;
                let a12 = a_d(f, d, q1 * q2).map_err(|e| e.to_string())?;
                if a12 != a1.clone() * &a2 {
                    return Err(format!(
                        "form {i} d={d}: A({q1}·{q2}) = {a12} != {a1}·{a2}"
                    ));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} coprime factorizations on 3 forms"))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// On the bilinear P¹×P¹ instance the slab estimate must hit the
/// closed-form σ_∞ = 16 within 3 standard errors, and the oscillatory
/// route must agree within 3 combined errors, in under two minutes.
const C7_EPS: f64 = 1e-3;
const C7_SAMPLES: u64 = 10_000_000;
const C7_BUDGET_SECS: f64 = 120.0;

fn c7_archimedean() -> Result<String, String> {
    let start = Instant::now();
    let f = bilinear_p1p1();
    let slab = slab_sigma_inf(&f, C7_EPS, C7_SAMPLES, 1, 1).map_err(|e| e.to_string())?;
    let (est, se) = (slab.levels[0].estimate, slab.levels[0].stderr);
    if (est - 16.0).abs() > 3.0 * se {
        return Err(format!("slab {est} misses 16 by more than 3·{se}"));
    }
    let j = oscillatory_j(&f, 4.0, 128, 16).map_err(|e| e.to_string())?;
    let combined = se.hypot(j.err());
    if (est - j.value).abs() > 3.0 * combined {
        return Err(format!(
            "slab {est} vs oscillatory {} differ by more than 3·{combined}",
            j.value
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= C7_BUDGET_SECS {
        return Err(format!("took {secs:.1} s >= {C7_BUDGET_SECS} s"));
    }
    Ok(format!(
        "slab {est:.4} ± {se:.4} vs closed-form 16 and oscillatory {:.4} ± {:.4}",
        j.value,
        j.err()
    ))
}

/// Hyperbola identities: the three-part split and the dyadic scheme both
/// resum the direct sum exactly (integer-valued summands), for f ≡ 1 up to
/// P = 10⁶ and for real histogram data; and the B·log B fit recovers
/// planted constants to 10⁻⁶ relative error.
const C8_FIT_RTOL: f64 = 1e-6;

fn c8_hyperbola() -> Result<String, String> {
    let mut checked = 0;
    for (b1, b2) in [(1u32, 1u32), (2, 1)] {
        let inst =
            SummationInstance::new(SummandSource::Ones, b1, b2, 1, 0.25 / b1 as f64).unwrap();
        for p in [10_000u64, 100_000, 1_000_000] {
            let direct = direct_sum(&inst, &big(p));
            let parts = split_identity(&inst, &big(p));
            if parts.total() != direct {
                return Err(format!(
                    "β=({b1},{b2}) P={p}: split {} != direct {direct}",
                    parts.total()
                ));
            }
            // T1 (head) + T2 (dyadic tail) re-splits the l-heavy wing; the
            // scheme total then re-assembles the whole sum.
            let scheme = scheme_sum(&inst, &big(p), 16).map_err(|e| e.to_string())?;
            if scheme.t1 + scheme.t2 != parts.wing_l {
                return Err(format!(
                    "β=({b1},{b2}) P={p}: T1+T2 = {} != wing {}",
                    scheme.t1 + scheme.t2,
                    parts.wing_l
                ));
            }
            if scheme.total != direct {
                return Err(format!(
                    "β=({b1},{b2}) P={p}: scheme total {} != direct {direct}",
                    scheme.total
                ));
            }
            checked += 3;
        }
    }

    // real counting data as the summand
    let f = bilinear_p1p1();
    let caps = CountCaps::default();
    let hist = histogram(&f, 1, 64, 64, OpenSet::All, &caps).map_err(|e| e.to_string())?;
    let inst = SummationInstance::new(SummandSource::Histogram(hist), 1, 1, 1, 0.25).unwrap();
    for p in [256u64, 4096, 1_000_000] {
        let direct = direct_sum(&inst, &big(p));
        let parts = split_identity(&inst, &big(p));
        let scheme = scheme_sum(&inst, &big(p), 16).map_err(|e| e.to_string())?;
        if parts.total() != direct
            || scheme.t1 + scheme.t2 != parts.wing_l
            || scheme.total != direct
        {
            return Err(format!("histogram summand at P={p}: resummation mismatch"));
        }
        checked += 3;
    }

    // planted-constant recovery
    let (c, a) = (std::f64::consts::E / 2.0, std::f64::consts::PI / 3.0);
    let series: Vec<(f64, f64)> = (0..8)
        .map(|i| {
            let b = 100.0 * (1000.0f64).powf(i as f64 / 7.0);
            (b, c * b * b.ln() + a * b)
        })
        .collect();
    let fit = fit_blogb(&series).map_err(|e| e.to_string())?;
    let rel = ((fit.c_hat - c) / c).abs();
    if rel > C8_FIT_RTOL {
        return Err(format!(
            "planted {c} recovered {} (rel err {rel:.2e} > {C8_FIT_RTOL:.0e})",
            fit.c_hat
        ));
    }
    Ok(format!("{checked} exact resummations, fit rel err {rel:.1e}"))
}

/// End-to-end consistency over B ∈ [10², 10⁵]: the fitted Ĉ must be
/// finite, positive, and within a factor of 2 of the assembled σ — on a
/// desk instance whose count genuinely grows like B·log B.
///
/// Instance choice, honestly: every bidegree-(1,1) hypersurface of P¹×P¹
/// is a rational curve, so on the bilinear instance the count grows like
/// c·B and the fitted log-coefficient tends to 0 — no bracket around σ can
/// hold there (that fit is still run below as a diagnostic).  Forms such
/// as x₀z₂ + x₁z₃ on higher fans pin z to a sublattice whose shortest
/// vector has length |x|, which cuts the k-range of the hyperbola to
/// k ≤ B^{1/4} and quarters the leading constant — measured Ĉ/σ ≈ 0.21 on
/// fan(4,1,1), again structurally outside any honest bracket.  The graph
/// surface of `graph_surface_312` has neither defect: one y per (x,z), the
/// full hyperbola mass survives, and the measured ratio sits within a few
/// percent of 1.
const C9_FACTOR: f64 = 2.0;
const C9_BUDGET_SECS: f64 = 600.0;

fn c9_trend() -> Result<String, String> {
    let start = Instant::now();
    let f = graph_surface_312();
    let fanref = fan(3, 1, 2);
    let caps = CountCaps::default();

    // geometric grid of 7 points spanning [1e2, 1e5]
    let grid: Vec<u64> = (0..7)
        .map(|i| (100.0 * (1000.0f64).powf(i as f64 / 6.0)).round() as u64)
        .collect();
    let mut series = Vec::new();
    for &b in &grid {
        let c = count_points(&f, &big(b), OpenSet::All, &caps).map_err(|e| e.to_string())?;
        series.push((b as f64, c.count as f64));
    }
    let fit = fit_blogb(&series).map_err(|e| e.to_string())?;
    if !fit.c_hat.is_finite() || fit.c_hat <= 0.0 {
        return Err(format!("C_hat = {} is not finite positive", fit.c_hat));
    }

    // assembled prediction: slab σ_∞ and the weighted Euler product
    // (p ≤ 7: the level-2 residue enumeration for this 5-variable form is
    // p^8, so 11 would blow the desk-scale cap)
    let series_p = singular_series(&f, 7, 2).map_err(|e| e.to_string())?;
    let slab = slab_sigma_inf(&f, 1e-3, 1_000_000, 1, 1).map_err(|e| e.to_string())?;
    let breakdown = peyre_constant(&slab.estimate(), &series_p.factors, &fanref, 1, 1)
        .map_err(|e| e.to_string())?;
    let sigma = breakdown.sigma_route1;
    if !breakdown.agree {
        return Err("constant routes disagree".into());
    }
    let ratio = fit.c_hat / sigma;
    if !(1.0 / C9_FACTOR..=C9_FACTOR).contains(&ratio) {
        return Err(format!(
            "C_hat {} vs sigma {sigma}: ratio {ratio:.3} outside [1/{C9_FACTOR}, {C9_FACTOR}]",
            fit.c_hat
        ));
    }

    // diagnostic: the rational-curve instance grows linearly, so its
    // fitted log-coefficient must be small against its linear one
    let p1p1 = bilinear_p1p1();
    let mut lin = Vec::new();
    for &b in &grid[..5] {
        let c = count_points(&p1p1, &big(b), OpenSet::All, &caps).map_err(|e| e.to_string())?;
        lin.push((b as f64, c.count as f64));
    }
    let linfit = fit_blogb(&lin).map_err(|e| e.to_string())?;

    let secs = start.elapsed().as_secs_f64();
    if secs >= C9_BUDGET_SECS {
        return Err(format!("took {secs:.1} s >= {C9_BUDGET_SECS} s"));
    }
    Ok(format!(
        "C_hat/sigma = {ratio:.3} on the graph surface; rational-curve diagnostic C_hat = {:.4}",
        linfit.c_hat
    ))
}

/// Byte-identical pipeline reruns, and counts invariant across worker
/// counts {1, 2, 8}.
fn c10_determinism() -> Result<String, String> {
    let cfg = InstanceConfig::from_json(
        r#"{
        "n": 2, "r": 1, "m": 1, "d1": 1, "d2": 1,
        "form": {"monomials": [
            {"exponents": [1, 0, 1, 0], "coeff": 1},
            {"exponents": [0, 1, 0, 1], "coeff": -1}
        ]},
        "b_grid": {"b_min": 1, "b_max": 64, "points": 7},
        "density": {"p_max": 3, "n_max": 2, "eps": 0.001,
                    "samples": 5000, "seed": 1}
    }"#,
    )
    .map_err(|e| e.to_string())?;
    let a = end_to_end_report(&cfg, 1).map_err(|e| e.to_string())?;
    let b = end_to_end_report(&cfg, 2).map_err(|e| e.to_string())?;
    if a.summary != b.summary {
        return Err("summaries differ between reruns".into());
    }
    for ((name_a, body_a), (name_b, body_b)) in a.csv.iter().zip(&b.csv) {
        if name_a != name_b || body_a != body_b {
            return Err(format!("CSV {name_a} differs between reruns"));
        }
    }

    let f = bilinear_p1p1();
    for b in [16u64, 64] {
        let baseline = count_points(
            &f,
            &big(b),
            OpenSet::All,
            &CountCaps { x_cap: None, workers: 1 },
        )
        .map_err(|e| e.to_string())?;
        for w in [2usize, 8] {
            let c = count_points(
                &f,
                &big(b),
                OpenSet::All,
                &CountCaps { x_cap: None, workers: w },
            )
            .map_err(|e| e.to_string())?;
            if c.count != baseline.count {
                return Err(format!("B={b}: workers {w} changed the count"));
            }
        }
    }
    Ok("pipeline reruns byte-identical, counts worker-invariant".into())
}
