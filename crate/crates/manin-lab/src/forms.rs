//! Exact multihomogeneous forms in the Cox coordinates `(x, y, z)` of a
//! rank-2 fan.
//!
//! A form of bidegree (d₁, d₂) is a Z-linear combination of monomials whose
//! Pic-grading is (d₁, d₂): x-variables weigh (1,0), y-variables (1,1),
//! z-variables (0,1).  Equivalently F(λx, λμy, μz) = λ^{d₁} μ^{d₂} F(x,y,z).
//! Coefficients are arbitrary-precision; the machine-integer evaluation path
//! is only used together with a certified bound (see `abs_bound`).

use crate::arith::fnv1a;
use crate::rng::CounterRng;
use crate::toric::{Block, DivisorClass, KleinschmidtFan};
use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormError {
    #[error("bidegree must have d1 ≥ 1 and d2 ≥ 1 (got ({0}, {1}))")]
    BadBidegree(u32, u32),
    #[error("monomial #{index} has {got} exponents, the fan has {expected} variables")]
    WrongArity {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("monomial #{index} has class {got} ≠ ({d1}, {d2})")]
    WrongClass {
        index: usize,
        got: DivisorClass,
        d1: u32,
        d2: u32,
    },
    #[error("the zero form does not cut out a hypersurface")]
    ZeroForm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub exps: Vec<u32>,
    pub coeff: BigInt,
}

/// A nonzero form of fixed bidegree on the fan Σ(n, r, m), stored as a
/// sorted, duplicate-free monomial list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BidegreeForm {
    n: usize,
    r: usize,
    m: usize,
    d1: u32,
    d2: u32,
    monomials: Vec<Monomial>,
}

impl BidegreeForm {
    /// Validating constructor: every term must have the declared bidegree;
    /// duplicate exponent vectors are merged; a form that collapses to zero
    /// is rejected.
    pub fn new(
        fan: &KleinschmidtFan,
        d1: u32,
        d2: u32,
        terms: Vec<(Vec<u32>, BigInt)>,
    ) -> Result<Self, FormError> {
        if d1 < 1 || d2 < 1 {
            return Err(FormError::BadBidegree(d1, d2));
        }
        let nv = fan.num_vars();
        for (i, (exps, _)) in terms.iter().enumerate() {
            if exps.len() != nv {
                return Err(FormError::WrongArity {
                    index: i,
                    expected: nv,
                    got: exps.len(),
                });
            }
            let cls = fan.class_of_monomial(exps);
            if cls != DivisorClass::new(d1 as i64, d2 as i64) {
                return Err(FormError::WrongClass {
                    index: i,
                    got: cls,
                    d1,
                    d2,
                });
            }
        }
        let form = Self::raw(fan.n(), fan.r(), fan.m(), d1, d2, terms);
        if form.is_zero() {
            return Err(FormError::ZeroForm);
        }
        Ok(form)
    }

    /// Non-validating constructor used internally (derivatives may be zero
    /// or live in shifted degrees).
    pub(crate) fn raw(
        n: usize,
        r: usize,
        m: usize,
        d1: u32,
        d2: u32,
        terms: Vec<(Vec<u32>, BigInt)>,
    ) -> Self {
        let mut merged: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (exps, coeff) in terms {
            *merged.entry(exps).or_insert_with(BigInt::zero) += coeff;
        }
        let monomials = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(exps, coeff)| Monomial { exps, coeff })
            .collect();
        BidegreeForm {
            n,
            r,
            m,
            d1,
            d2,
            monomials,
        }
    }

    /// Uniform random form: each monomial of bidegree (d₁, d₂) gets a
    /// coefficient in [−bound, bound].  If the draw collapses to the zero
    /// form it is redrawn once from a derived seed before giving up.
    pub fn random(
        fan: &KleinschmidtFan,
        d1: u32,
        d2: u32,
        coeff_bound: u64,
        seed: u64,
    ) -> Result<Self, FormError> {
        assert!(coeff_bound >= 1, "coefficient bound must be positive");
        if d1 < 1 || d2 < 1 {
            return Err(FormError::BadBidegree(d1, d2));
        }
        let class = DivisorClass::new(d1 as i64, d2 as i64);
        let monos: Vec<Vec<u32>> = fan
            .section_polytope(class)
            .iter()
            .map(|u| fan.monomial_of(class, u).expect("polytope point maps"))
            .collect();
        for attempt in 0..2u64 {
            let rng = CounterRng::new(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9)));
            let b = coeff_bound as i64;
            let terms: Vec<(Vec<u32>, BigInt)> = monos
                .iter()
                .enumerate()
                .map(|(i, e)| (e.clone(), BigInt::from(rng.int_in_at(i as u64, -b, b))))
                .collect();
            let f = Self::raw(fan.n(), fan.r(), fan.m(), d1, d2, terms);
            if !f.is_zero() {
                return Ok(f);
            }
        }
        Err(FormError::ZeroForm)
    }

    pub fn fan_params(&self) -> (usize, usize, usize) {
        (self.n, self.r, self.m)
    }

    pub fn fan(&self) -> KleinschmidtFan {
        KleinschmidtFan::build(self.n, self.r, self.m).expect("stored fan parameters are valid")
    }

    pub fn bidegree(&self) -> (u32, u32) {
        (self.d1, self.d2)
    }

    pub fn num_vars(&self) -> usize {
        self.n + 2
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Total degree of the form in one variable.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.monomials
            .iter()
            .map(|m| m.exps[var])
            .max()
            .unwrap_or(0)
    }

    /// Exact evaluation.
    pub fn evaluate_big(&self, point: &[i64]) -> BigInt {
        assert_eq!(point.len(), self.num_vars());
        let mut acc = BigInt::zero();
        for mono in &self.monomials {
            let mut term = mono.coeff.clone();
            for (v, &e) in mono.exps.iter().enumerate() {
                for _ in 0..e {
                    term *= point[v];
                }
            }
            acc += term;
        }
        acc
    }

    /// Machine-integer evaluation; `None` on (potential) overflow.  Callers
    /// that need speed certify a bound once via [`abs_bound`] and then use
    /// the unchecked arithmetic knowing it cannot wrap.
    ///
    /// [`abs_bound`]: BidegreeForm::abs_bound
    pub fn evaluate_i128(&self, point: &[i64]) -> Option<i128> {
        assert_eq!(point.len(), self.num_vars());
        let mut acc: i128 = 0;
        for mono in &self.monomials {
            let mut term: i128 = mono.coeff.to_i128()?;
            for (v, &e) in mono.exps.iter().enumerate() {
                for _ in 0..e {
                    term = term.checked_mul(point[v] as i128)?;
                }
            }
            acc = acc.checked_add(term)?;
        }
        Some(acc)
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.num_vars());
        let mut acc = 0.0;
        for mono in &self.monomials {
            let mut term = self.coeff_f64(mono);
            for (v, &e) in mono.exps.iter().enumerate() {
                term *= point[v].powi(e as i32);
            }
            acc += term;
        }
        acc
    }

    fn coeff_f64(&self, mono: &Monomial) -> f64 {
        mono.coeff.to_f64().expect("coefficient convertible to f64")
    }

    /// Σ |coeff| · Π bound_v^{e_v}: a certified bound on |F| over the box
    /// |coord_v| ≤ bound_v.
    pub fn abs_bound(&self, var_bounds: &[u64]) -> BigInt {
        assert_eq!(var_bounds.len(), self.num_vars());
        let mut acc = BigInt::zero();
        for mono in &self.monomials {
            let mut term = mono.coeff.abs();
            for (v, &e) in mono.exps.iter().enumerate() {
                for _ in 0..e {
                    term *= var_bounds[v];
                }
            }
            acc += term;
        }
        acc
    }

    /// ∂F/∂var, as a raw form (possibly zero) in the shifted bidegree.
    pub fn partial(&self, var: usize) -> BidegreeForm {
        assert!(var < self.num_vars());
        let fan = self.fan();
        let cls = fan.picard_class(var);
        let terms: Vec<(Vec<u32>, BigInt)> = self
            .monomials
            .iter()
            .filter(|mo| mo.exps[var] >= 1)
            .map(|mo| {
                let mut e = mo.exps.clone();
                let k = e[var];
                e[var] -= 1;
                (e, &mo.coeff * BigInt::from(k))
            })
            .collect();
        BidegreeForm::raw(
            self.n,
            self.r,
            self.m,
            self.d1.saturating_sub(cls.a as u32),
            self.d2.saturating_sub(cls.b as u32),
            terms,
        )
    }

    /// Full gradient, one raw form per variable.
    pub fn gradient(&self) -> Vec<BidegreeForm> {
        (0..self.num_vars()).map(|v| self.partial(v)).collect()
    }

    /// F(d·x, y, z): multiplies each coefficient by d^(x-degree of the term).
    pub fn scale_x(&self, d: u64) -> BidegreeForm {
        let terms: Vec<(Vec<u32>, BigInt)> = self
            .monomials
            .iter()
            .map(|mo| {
                let xdeg: u32 = mo.exps[..=self.r].iter().sum();
                let mut c = mo.coeff.clone();
                for _ in 0..xdeg {
                    c *= d;
                }
                (mo.exps.clone(), c)
            })
            .collect();
        BidegreeForm::raw(self.n, self.r, self.m, self.d1, self.d2, terms)
    }

    /// Substitute concrete values for one whole variable block; the result
    /// is an exact polynomial in the remaining variables (exponent vectors
    /// keep their full length with the substituted block zeroed out).
    pub fn substitute_block(&self, block: Block, values: &[i64]) -> BlockSubstitution {
        let fan = self.fan();
        let idx: Vec<usize> = (0..self.num_vars())
            .filter(|&v| fan.block_of(v) == block)
            .collect();
        assert_eq!(values.len(), idx.len(), "block value count mismatch");
        let mut terms: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for mono in &self.monomials {
            let mut coeff = mono.coeff.clone();
            let mut exps = mono.exps.clone();
            for (slot, &v) in idx.iter().enumerate() {
                for _ in 0..mono.exps[v] {
                    coeff *= values[slot];
                }
                exps[v] = 0;
            }
            if !coeff.is_zero() {
                let entry = terms.entry(exps).or_insert_with(BigInt::zero);
                *entry += coeff;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        BlockSubstitution { terms }
    }

    /// The form with coefficients reduced mod q, ready for fast modular
    /// evaluation.
    pub fn reduced_mod(&self, q: u64) -> ModForm {
        assert!(q >= 1);
        let qq = BigInt::from(q);
        let monos = self
            .monomials
            .iter()
            .map(|mo| {
                let c = ((&mo.coeff % &qq) + &qq) % &qq;
                (mo.exps.clone(), c.to_u64().expect("reduced coefficient fits"))
            })
            .filter(|(_, c)| *c != 0)
            .collect();
        ModForm { q, monos }
    }

    /// Stable content identifier (hash of the canonical text form).
    pub fn id_hash(&self) -> u64 {
        fnv1a(self.canonical_string().as_bytes())
    }

    fn canonical_string(&self) -> String {
        let mut s = format!("{},{},{}|{},{}", self.n, self.r, self.m, self.d1, self.d2);
        for mono in &self.monomials {
            s.push('|');
            for (i, e) in mono.exps.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                s.push_str(&e.to_string());
            }
            s.push(':');
            s.push_str(&mono.coeff.to_string());
        }
        s
    }
}

impl fmt::Display for BidegreeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let fan = self.fan();
        for (k, mono) in self.monomials.iter().enumerate() {
            let neg = mono.coeff.is_negative();
            let mag = mono.coeff.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || mono.exps.iter().all(|&e| e == 0) {
                parts.push(mag.to_string());
            }
            for (v, &e) in mono.exps.iter().enumerate() {
                if e == 1 {
                    parts.push(fan.var_name(v));
                } else if e > 1 {
                    parts.push(format!("{}^{}", fan.var_name(v), e));
                }
            }
            write!(f, "{}", parts.join("·"))?;
        }
        Ok(())
    }
}

/// Result of substituting numbers for one variable block.
#[derive(Clone, Debug)]
pub struct BlockSubstitution {
    pub terms: BTreeMap<Vec<u32>, BigInt>,
}

impl BlockSubstitution {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A form with coefficients in Z/q, for fast residue arithmetic.
#[derive(Clone, Debug)]
pub struct ModForm {
    pub q: u64,
    pub monos: Vec<(Vec<u32>, u64)>,
}

impl ModForm {
    /// Evaluate at a residue tuple (entries reduced mod q by the caller).
    pub fn eval(&self, point: &[u64]) -> u64 {
        let q = self.q as u128;
        let mut acc: u128 = 0;
        for (exps, coeff) in &self.monos {
            let mut term = *coeff as u128;
            for (v, &e) in exps.iter().enumerate() {
                let base = point[v] as u128;
                for _ in 0..e {
                    term = term * base % q;
                }
            }
            acc = (acc + term) % q;
        }
        acc as u64
    }
}
