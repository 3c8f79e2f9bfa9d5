//! Archimedean density: slab volumes by Monte-Carlo and oscillatory
//! integrals by quadrature.
//!
//! The density σ_∞ attached to a bidegree form F is the Leray measure of
//! {F = 0} inside the region {(x,y,z) ∈ [−1,1]^{n+2} : |y| ≤ |x|} (sup
//! norms).  Two independent routes approximate it:
//!
//! * slab: (1/2ε)·vol{|F| ≤ ε} over the region, estimated by rejection
//!   sampling in the box, converging as ε → 0;
//! * oscillatory: J = ∫_ℝ I(β) dβ with I(β) = ∫_region e(β·F), truncated
//!   to |β| ≤ φ with an O(φ^{−1}) tail.
//!
//! On the bilinear four-variable instance both converge to the closed-form
//! value 16 = 8·∫∫ −ln|ac| da dc, which the tests pin.

use crate::forms::BidegreeForm;
use crate::padic::DensityEstimate;
use crate::rng::CounterRng;
use num::bigint::BigInt;
use num::rational::BigRational;
use std::f64::consts::TAU;
use thiserror::Error;

/// Oscillatory quadrature is tensor-grid; beyond six variables the cell
/// count is out of desk range.
const MAX_OSC_VARS: usize = 6;
const MIN_GRID: usize = 8;
const MIN_SAMPLES: u64 = 1_000;

#[derive(Debug, Error, PartialEq)]
pub enum ArchError {
    #[error("oscillatory quadrature is capped at {MAX_OSC_VARS} variables, form has {0}")]
    DimensionCap(usize),
    #[error("quadrature grid needs at least {MIN_GRID} points per axis, got {0}")]
    GridTooCoarse(usize),
    #[error("trapezoid rule needs at least 2 intervals, got {0}")]
    BetaGridTooCoarse(usize),
    #[error("Monte-Carlo needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(u64),
    #[error("slab half-width must be positive and finite, got {0}")]
    BadEps(f64),
}

// ---------------------------------------------------------------------------
// slab route

/// One slab width: estimate = 2^{n+2}·(hits/samples)/(2ε), binomial stderr.
#[derive(Clone, Copy, Debug)]
pub struct SlabLevel {
    pub eps: f64,
    pub hits: u64,
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte-Carlo slab report at widths ε, ε/2, ε/4 — all three measured on
/// the same sample stream, so the consistency of the levels is an
/// ε-bias check, not a statistical one.  No extrapolation is performed.
#[derive(Clone, Debug)]
pub struct SlabReport {
    pub seed: u64,
    pub samples: u64,
    pub levels: [SlabLevel; 3],
}

impl SlabReport {
    /// The requested-width level, packaged as a density estimate.
    pub fn estimate(&self) -> DensityEstimate {
        DensityEstimate::Sampled {
            value: self.levels[0].estimate,
            stderr: self.levels[0].stderr,
            eps: self.levels[0].eps,
            samples: self.samples,
        }
    }
}

/// σ_∞ by rejection sampling: uniform points in [−1,1]^{n+2}, keeping
/// |y| ≤ |x|, counting |F| ≤ ε.  The sample stream is indexed by sample
/// id, so the result is identical for every worker count.
pub fn slab_sigma_inf(
    form: &BidegreeForm,
    eps: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<SlabReport, ArchError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ArchError::BadEps(eps));
    }
    if samples < MIN_SAMPLES {
        return Err(ArchError::TooFewSamples(samples));
    }
    let (n, r, m) = form.fan_params();
    let nv = n + 2;
    let nx = r + 1;
    let ny = m - r;
    let rng = CounterRng::new(seed);

    let scan = |lo: u64, hi: u64| -> [u64; 3] {
        let mut hits = [0u64; 3];
        let mut point = vec![0.0f64; nv];
        for i in lo..hi {
            let base = i * nv as u64;
            for (j, c) in point.iter_mut().enumerate() {
                *c = rng.f64_signed_at(base + j as u64);
            }
            let xmax = point[..nx].iter().fold(0.0f64, |a, &c| a.max(c.abs()));
            let ymax = point[nx..nx + ny]
                .iter()
                .fold(0.0f64, |a, &c| a.max(c.abs()));
            if ymax > xmax {
                continue;
            }
            let v = form.evaluate_f64(&point).abs();
            if v <= eps {
                hits[0] += 1;
                if v <= eps / 2.0 {
                    hits[1] += 1;
                    if v <= eps / 4.0 {
                        hits[2] += 1;
                    }
                }
            }
        }
        hits
    };

    let nworkers = workers.max(1).min(samples as usize);
    let mut hits = [0u64; 3];
    if nworkers <= 1 {
        hits = scan(0, samples);
    } else {
        let chunk = samples.div_ceil(nworkers as u64);
        let parts = std::thread::scope(|s| {
            let handles: Vec<_> = (0..nworkers as u64)
                .map(|w| {
                    let scan = &scan;
                    let lo = w * chunk;
                    let hi = (lo + chunk).min(samples);
                    s.spawn(move || scan(lo, hi))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("slab worker"))
                .collect::<Vec<_>>()
        });
        for part in parts {
            for (t, v) in hits.iter_mut().zip(part) {
                *t += v;
            }
        }
    }

    let box_vol = (2.0f64).powi(nv as i32);
    let mk = |hits: u64, eps_k: f64| -> SlabLevel {
        let p = hits as f64 / samples as f64;
        SlabLevel {
            eps: eps_k,
            hits,
            estimate: box_vol * p / (2.0 * eps_k),
            stderr: box_vol * (p * (1.0 - p) / samples as f64).sqrt() / (2.0 * eps_k),
        }
    };
    Ok(SlabReport {
        seed,
        samples,
        levels: [
            mk(hits[0], eps),
            mk(hits[1], eps / 2.0),
            mk(hits[2], eps / 4.0),
        ],
    })
}

// ---------------------------------------------------------------------------
// oscillatory route

/// One value of I(β) = ∫_region e(β·F); the imaginary part is a
/// diagnostic — it cancels for forms with a sign symmetry.
#[derive(Clone, Copy, Debug)]
pub struct OscValue {
    pub re: f64,
    pub im: f64,
}

impl OscValue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Midpoint tensor quadrature of e(β·F) over the region.  Axes the form
/// never touches outside the (x, y) blocks integrate to an exact factor 2
/// and are not enumerated; (x, y) axes always are — the region constraint
/// |y| ≤ |x| lives there.
pub fn oscillatory_i(form: &BidegreeForm, beta: f64, grid: usize) -> Result<OscValue, ArchError> {
    let (n, r, m) = form.fan_params();
    let nv = n + 2;
    if nv > MAX_OSC_VARS {
        return Err(ArchError::DimensionCap(nv));
    }
    if grid < MIN_GRID {
        return Err(ArchError::GridTooCoarse(grid));
    }
    let nx = r + 1;
    let ny = m - r;
    let axes: Vec<usize> = (0..nv)
        .filter(|&v| v < nx + ny || form.degree_in(v) > 0)
        .collect();
    let nfree = nv - axes.len();
    let delta = 2.0 / grid as f64;
    let weight = delta.powi(axes.len() as i32) * (2.0f64).powi(nfree as i32);

    let mut point = vec![0.0f64; nv];
    let mut idx = vec![0usize; axes.len()];
    let coord = |k: usize| -> f64 { -1.0 + delta * (k as f64 + 0.5) };
    for (&a, &k) in axes.iter().zip(&idx) {
        point[a] = coord(k);
    }
    let mut re = 0.0;
    let mut im = 0.0;
    'outer: loop {
        let xmax = point[..nx].iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let ymax = point[nx..nx + ny]
            .iter()
            .fold(0.0f64, |a, &c| a.max(c.abs()));
        if ymax <= xmax {
            let phase = TAU * beta * form.evaluate_f64(&point);
            re += phase.cos();
            im += phase.sin();
        }
        let mut i = 0;
        loop {
            if i == axes.len() {
                break 'outer;
            }
            idx[i] += 1;
            if idx[i] < grid {
                point[axes[i]] = coord(idx[i]);
                continue 'outer;
            }
            idx[i] = 0;
            point[axes[i]] = coord(0);
            i += 1;
        }
    }
    Ok(OscValue {
        re: re * weight,
        im: im * weight,
    })
}

/// Truncated oscillatory integral J(φ) = ∫_{|β| ≤ φ} I(β) dβ with face-value
/// error indicators: `tail` = 2φ|I(φ)| (the O(φ^{−1}) tail of an |I| ≍ β^{−2}
/// decay taken at face value) and `disc` = sensitivity to halving both the
/// β-resolution and the spatial grid.
#[derive(Clone, Debug)]
pub struct JEstimate {
    pub value: f64,
    /// accumulated imaginary part (diagnostic; ≈ 0 by conjugate symmetry)
    pub im: f64,
    pub phi: f64,
    pub tail: f64,
    pub disc: f64,
}

impl JEstimate {
    pub fn err(&self) -> f64 {
        self.tail + self.disc
    }
}

fn trapezoid_j(
    form: &BidegreeForm,
    phi: f64,
    beta_grid: usize,
    grid: usize,
) -> Result<(f64, f64), ArchError> {
    let h = 2.0 * phi / beta_grid as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for t in 0..=beta_grid {
        let beta = -phi + h * t as f64;
        let v = oscillatory_i(form, beta, grid)?;
        let w = if t == 0 || t == beta_grid { 0.5 } else { 1.0 };
        re += w * v.re;
        im += w * v.im;
    }
    Ok((re * h, im * h))
}

pub fn oscillatory_j(
    form: &BidegreeForm,
    phi: f64,
    beta_grid: usize,
    grid: usize,
) -> Result<JEstimate, ArchError> {
    if beta_grid < 2 {
        return Err(ArchError::BetaGridTooCoarse(beta_grid));
    }
    if !(phi >= 0.0 && phi.is_finite()) {
        return Err(ArchError::BadEps(phi));
    }
    let (value, im) = trapezoid_j(form, phi, beta_grid, grid)?;
    let (coarse_beta, _) = trapezoid_j(form, phi, (beta_grid / 2).max(2), grid)?;
    let half_grid = if grid / 2 >= MIN_GRID { grid / 2 } else { grid };
    let (coarse_grid, _) = trapezoid_j(form, phi, beta_grid, half_grid)?;
    let tail = 2.0 * phi * oscillatory_i(form, phi, grid)?.modulus();
    Ok(JEstimate {
        value,
        im,
        phi,
        tail,
        disc: (value - coarse_beta).abs() + (value - coarse_grid).abs(),
    })
}

// ---------------------------------------------------------------------------
// the τ_∞ rescaling

/// τ_∞ = (β₁·β₂/4)·σ_∞ — a pure rescaling of the stored estimate; the
/// standard error scales along with the value.
pub fn tau_inf(sigma: &DensityEstimate, b1: u32, b2: u32) -> DensityEstimate {
    match sigma {
        DensityEstimate::Sampled {
            value,
            stderr,
            eps,
            samples,
        } => {
            let c = (b1 as f64) * (b2 as f64) / 4.0;
            DensityEstimate::Sampled {
                value: value * c,
                stderr: stderr * c,
                eps: *eps,
                samples: *samples,
            }
        }
        DensityEstimate::Exact {
            value,
            p_max,
            n_max,
            stabilized,
        } => {
            let c = BigRational::new(BigInt::from(b1 as u64 * b2 as u64), BigInt::from(4));
            DensityEstimate::Exact {
                value: value * c,
                p_max: *p_max,
                n_max: *n_max,
                stabilized: *stabilized,
            }
        }
    }
}
