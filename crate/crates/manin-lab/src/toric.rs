//! Rank-2 smooth complete fans and their divisor combinatorics.
//!
//! The fan `Σ(n, r, m)` lives in Z^n and has n+2 rays indexed like the Cox
//! variables they correspond to:
//!
//! ```text
//! index 0        : v_0     = −(e_1 + … + e_m)        x-block
//! index 1 ≤ i ≤ n: v_i     = e_i                     x for i ≤ r,
//!                                                    y for r+1 ≤ i ≤ m,
//!                                                    z for m+1 ≤ i ≤ n
//! index n+1      : v_{n+1} = −(e_{r+1} + … + e_n)    z-block
//! ```
//!
//! with 1 ≤ r ≤ m ≤ n.  Maximal cones are σ_{i,j} = cone(all rays except
//! v_i, v_j) for i in the x-block and j in the (y∪z)-block index ranges
//! {0,…,r} × {r+1,…,n+1}, giving (r+1)(n−r+1) smooth full-dimensional cones.
//! The variety is the projectivization of a split bundle over P^r; its
//! Picard group is Z², generated by the two ray classes below.

use crate::arith::det_exact;
use crate::rng::CounterRng;
use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FanError {
    #[error("fan parameters must satisfy 1 ≤ r ≤ m ≤ n (got n={n}, r={r}, m={m})")]
    BadParameters { n: usize, r: usize, m: usize },
    #[error("dimension too large for desk use (n={0} > 16)")]
    TooLarge(usize),
}

/// Which of the three Cox-coordinate blocks a ray (equivalently a variable)
/// belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    X,
    Y,
    Z,
}

/// A divisor class in Pic ≅ Z², written in the basis ([x-ray], [z-ray]).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DivisorClass {
    pub a: i64,
    pub b: i64,
}

impl DivisorClass {
    pub fn new(a: i64, b: i64) -> Self {
        DivisorClass { a, b }
    }

    /// Lies in the effective cone (generated by the two ray classes).
    pub fn effective(&self) -> bool {
        self.a >= 0 && self.b >= 0
    }
}

impl std::ops::Add for DivisorClass {
    type Output = DivisorClass;
    fn add(self, o: DivisorClass) -> DivisorClass {
        DivisorClass::new(self.a + o.a, self.b + o.b)
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KleinschmidtFan {
    n: usize,
    r: usize,
    m: usize,
    rays: Vec<Vec<i64>>,
    max_cones: Vec<Vec<usize>>,
}

impl KleinschmidtFan {
    /// Build Σ(n, r, m).  Errors if the parameters are out of range.
    pub fn build(n: usize, r: usize, m: usize) -> Result<Self, FanError> {
        if !(1 <= r && r <= m && m <= n) {
            return Err(FanError::BadParameters { n, r, m });
        }
        if n > 16 {
            return Err(FanError::TooLarge(n));
        }

        let mut rays = Vec::with_capacity(n + 2);
        let mut v0 = vec![0i64; n];
        for k in 0..m {
            v0[k] = -1;
        }
        rays.push(v0);
        for i in 1..=n {
            let mut e = vec![0i64; n];
            e[i - 1] = 1;
            rays.push(e);
        }
        let mut vlast = vec![0i64; n];
        for k in r..n {
            vlast[k] = -1;
        }
        rays.push(vlast);

        let mut max_cones = Vec::with_capacity((r + 1) * (n - r + 1));
        for i in 0..=r {
            for j in r + 1..=n + 1 {
                let cone: Vec<usize> = (0..=n + 1).filter(|&k| k != i && k != j).collect();
                max_cones.push(cone);
            }
        }

        Ok(KleinschmidtFan {
            n,
            r,
            m,
            rays,
            max_cones,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of rays = number of Cox variables.
    pub fn num_vars(&self) -> usize {
        self.n + 2
    }

    pub fn rays(&self) -> &[Vec<i64>] {
        &self.rays
    }

    pub fn max_cones(&self) -> &[Vec<usize>] {
        &self.max_cones
    }

    /// Sizes of the three variable blocks: (#x, #y, #z) = (r+1, m−r, n−m+1).
    pub fn block_sizes(&self) -> (usize, usize, usize) {
        (self.r + 1, self.m - self.r, self.n - self.m + 1)
    }

    pub fn block_of(&self, var: usize) -> Block {
        assert!(var <= self.n + 1, "variable index out of range");
        if var <= self.r {
            Block::X
        } else if var <= self.m {
            Block::Y
        } else {
            Block::Z
        }
    }

    /// Display name of a Cox variable: x0..xr, then y, then z, numbered by
    /// the global ray index.
    pub fn var_name(&self, var: usize) -> String {
        match self.block_of(var) {
            Block::X => format!("x{var}"),
            Block::Y => format!("y{var}"),
            Block::Z => format!("z{var}"),
        }
    }

    /// Class of the prime divisor attached to ray `var`.
    pub fn picard_class(&self, var: usize) -> DivisorClass {
        match self.block_of(var) {
            Block::X => DivisorClass::new(1, 0),
            Block::Y => DivisorClass::new(1, 1),
            Block::Z => DivisorClass::new(0, 1),
        }
    }

    /// −K = Σ classes of all rays = (m+1, n−r+1).
    pub fn anticanonical_class(&self) -> DivisorClass {
        let mut c = DivisorClass::new(0, 0);
        for v in 0..self.num_vars() {
            c = c + self.picard_class(v);
        }
        debug_assert_eq!(c, DivisorClass::new(self.m as i64 + 1, (self.n - self.r) as i64 + 1));
        c
    }

    /// Lattice points of the section polytope of a divisor of class (a, b):
    /// u ∈ Z^n with u ≥ 0, Σ_{i ≤ m} u_i ≤ a, Σ_{i > r} u_i ≤ b.  Each point
    /// corresponds to one monomial of bidegree (a, b) via [`monomial_of`].
    ///
    /// [`monomial_of`]: KleinschmidtFan::monomial_of
    pub fn section_polytope(&self, class: DivisorClass) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        if class.a < 0 || class.b < 0 {
            return out;
        }
        let mut u = vec![0i64; self.n];
        self.polytope_walk(&mut u, 0, class.a, class.b, &mut out);
        out
    }

    fn polytope_walk(
        &self,
        u: &mut Vec<i64>,
        idx: usize,
        a_left: i64,
        b_left: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        if idx == self.n {
            out.push(u.clone());
            return;
        }
        // coordinate u_{idx+1} in 1-based terms: counts toward the a-budget
        // iff idx+1 ≤ m, toward the b-budget iff idx+1 ≥ r+1
        let in_a = idx + 1 <= self.m;
        let in_b = idx + 1 >= self.r + 1;
        let mut cap = i64::MAX;
        if in_a {
            cap = cap.min(a_left);
        }
        if in_b {
            cap = cap.min(b_left);
        }
        for v in 0..=cap {
            u[idx] = v;
            self.polytope_walk(
                u,
                idx + 1,
                if in_a { a_left - v } else { a_left },
                if in_b { b_left - v } else { b_left },
                out,
            );
        }
        u[idx] = 0;
    }

    /// The monomial exponent vector (one entry per Cox variable) attached to
    /// a lattice point of the section polytope of class (a, b):
    /// var 0 gets a + ⟨u, v_0⟩, var i gets u_i, var n+1 gets b + ⟨u, v_{n+1}⟩.
    pub fn monomial_of(&self, class: DivisorClass, u: &[i64]) -> Option<Vec<u32>> {
        assert_eq!(u.len(), self.n, "lattice point of wrong dimension");
        let mut exps = vec![0u32; self.n + 2];
        let sum_a: i64 = u[..self.m].iter().sum();
        let sum_b: i64 = u[self.r..self.n].iter().sum();
        let e0 = class.a - sum_a;
        let elast = class.b - sum_b;
        if e0 < 0 || elast < 0 || u.iter().any(|&c| c < 0) {
            return None;
        }
        exps[0] = e0 as u32;
        for i in 1..=self.n {
            exps[i] = u[i - 1] as u32;
        }
        exps[self.n + 1] = elast as u32;
        Some(exps)
    }

    /// Exponent vector → section-polytope point (inverse of `monomial_of`
    /// wherever the exponents really have class (a, b)).
    pub fn lattice_point_of(&self, exps: &[u32]) -> Vec<i64> {
        assert_eq!(exps.len(), self.n + 2);
        exps[1..=self.n].iter().map(|&e| e as i64).collect()
    }

    /// Bidegree of a single exponent vector under the Pic grading.
    pub fn class_of_monomial(&self, exps: &[u32]) -> DivisorClass {
        assert_eq!(exps.len(), self.n + 2);
        let mut c = DivisorClass::new(0, 0);
        for (v, &e) in exps.iter().enumerate() {
            let cls = self.picard_class(v);
            c = c + DivisorClass::new(cls.a * e as i64, cls.b * e as i64);
        }
        c
    }

    fn cone_matrix(&self, cone: &[usize]) -> Vec<Vec<i64>> {
        cone.iter().map(|&k| self.rays[k].clone()).collect()
    }

    /// Exact membership test: does `q` lie in the cone spanned by the
    /// (unimodular) generator set `cone`?  Uses Cramer's rule: with |det|=1
    /// the coordinates of q in the generator basis are ± minors.
    fn cone_contains(&self, cone: &[usize], q: &[i64]) -> bool {
        let g = self.cone_matrix(cone);
        // solve c·G = q, i.e. Gᵀ c = q; c_i = det(Gᵀ with col i ← q)/det(Gᵀ),
        // and col i of Gᵀ is row i of G, so replace rows (det is transpose-blind)
        let det = det_exact(&g);
        debug_assert!(det.abs() == BigInt::one());
        for i in 0..self.n {
            let mut mat = g.clone();
            mat[i] = q.to_vec(); // replacing row i of G = col i of Gᵀ
            let ci = det_exact(&mat);
            // sign of c_i = sign(ci)·sign(det); det = ±1
            let coord = if det.is_negative() { -ci } else { ci };
            if coord.is_negative() {
                return false;
            }
        }
        true
    }

    /// Structural validation: unimodularity of every maximal cone, the
    /// nonpositive-orthant containment of the two non-basis rays, and a
    /// randomized completeness check (every sampled lattice vector lies in
    /// at least one maximal cone).
    pub fn validate(&self, samples: u64, seed: u64) -> FanValidation {
        let dets: Vec<i64> = self
            .max_cones
            .iter()
            .map(|c| {
                det_exact(&self.cone_matrix(c))
                    .to_i64()
                    .expect("cone determinant overflow")
            })
            .collect();
        let unimodular = dets.iter().all(|&d| d.abs() == 1);

        let containment_ok = self.rays[0].iter().all(|&c| c <= 0)
            && self.rays[self.n + 1].iter().all(|&c| c <= 0);

        let rng = CounterRng::new(seed);
        let mut min_hits = usize::MAX;
        let mut max_hits = 0usize;
        let mut covered = true;
        for s in 0..samples {
            let q: Vec<i64> = (0..self.n)
                .map(|k| rng.int_in_at(s * self.n as u64 + k as u64, -9, 9))
                .collect();
            let hits = self
                .max_cones
                .iter()
                .filter(|c| self.cone_contains(c, &q))
                .count();
            min_hits = min_hits.min(hits);
            max_hits = max_hits.max(hits);
            if hits == 0 {
                covered = false;
            }
        }
        if samples == 0 {
            min_hits = 0;
        }

        FanValidation {
            cone_dets: dets,
            unimodular,
            containment_ok,
            samples,
            min_hits,
            max_hits,
            covered,
        }
    }
}

impl fmt::Display for KleinschmidtFan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "fan Σ({}, {}, {}) in Z^{}: {} rays, {} maximal cones",
            self.n,
            self.r,
            self.m,
            self.n,
            self.num_vars(),
            self.max_cones.len()
        )?;
        for (k, ray) in self.rays.iter().enumerate() {
            writeln!(f, "  {} ↦ {:?}", self.var_name(k), ray)?;
        }
        Ok(())
    }
}

/// Result of [`KleinschmidtFan::validate`].
#[derive(Clone, Debug)]
pub struct FanValidation {
    pub cone_dets: Vec<i64>,
    pub unimodular: bool,
    pub containment_ok: bool,
    pub samples: u64,
    pub min_hits: usize,
    pub max_hits: usize,
    pub covered: bool,
}

impl FanValidation {
    pub fn ok(&self) -> bool {
        self.unimodular && self.containment_ok && self.covered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn p1_cross_p1() {
        // Σ(2,1,1): the four rays of P¹×P¹
        let f = KleinschmidtFan::build(2, 1, 1).unwrap();
        assert_eq!(f.rays(), &[vec![-1, 0], vec![1, 0], vec![0, 1], vec![0, -1]]);
        assert_eq!(f.max_cones().len(), 4);
        assert_eq!(f.block_sizes(), (2, 0, 2));
        let v = f.validate(200, 1);
        assert!(v.ok(), "{v:?}");
        assert!(v.cone_dets.iter().all(|&d| d.abs() == 1));
    }

    #[test]
    fn hirzebruch_f1() {
        // Σ(2,1,2): P(O ⊕ O(1)) over P¹
        let f = KleinschmidtFan::build(2, 1, 2).unwrap();
        assert_eq!(
            f.rays(),
            &[vec![-1, -1], vec![1, 0], vec![0, 1], vec![0, -1]]
        );
        assert_eq!(f.max_cones().len(), 4);
        assert_eq!(f.block_sizes(), (2, 1, 1));
        assert!(f.validate(200, 2).ok());
        // cone(v_0, v_1) is NOT a cone of this fan: it strictly contains v_3
        // (σ_{i,j} only ever omits one x-ray and one y/z-ray)
        for cone in f.max_cones() {
            assert_eq!(cone.len(), 2);
            assert!(!(cone == &vec![0, 1]));
        }
    }

    #[test]
    fn threefold_312() {
        let f = KleinschmidtFan::build(3, 1, 2).unwrap();
        assert_eq!(f.rays()[0], vec![-1, -1, 0]);
        assert_eq!(f.rays()[4], vec![0, -1, -1]);
        assert_eq!(f.max_cones().len(), 6); // (r+1)(n−r+1) = 2·3
        assert!(f.validate(300, 3).ok());
        assert_eq!(f.anticanonical_class(), DivisorClass::new(3, 3));
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(KleinschmidtFan::build(2, 0, 1).is_err());
        assert!(KleinschmidtFan::build(2, 2, 1).is_err());
        assert!(KleinschmidtFan::build(2, 1, 3).is_err());
        assert!(KleinschmidtFan::build(40, 1, 1).is_err());
    }

    #[test]
    fn picard_classes_sum_to_anticanonical() {
        for (n, r, m) in [(2, 1, 1), (2, 1, 2), (3, 1, 2), (4, 1, 1), (5, 2, 3)] {
            let f = KleinschmidtFan::build(n, r, m).unwrap();
            let total = (0..f.num_vars())
                .map(|v| f.picard_class(v))
                .fold(DivisorClass::new(0, 0), |acc, c| acc + c);
            assert_eq!(total, f.anticanonical_class());
            assert_eq!(
                f.anticanonical_class(),
                DivisorClass::new(m as i64 + 1, (n - r) as i64 + 1)
            );
        }
    }

    #[test]
    fn section_polytope_small_counts() {
        let f = KleinschmidtFan::build(2, 1, 1).unwrap();
        // class (1,0): monomials x0, x1
        assert_eq!(f.section_polytope(DivisorClass::new(1, 0)).len(), 2);
        // class (0,1): z2, z3
        assert_eq!(f.section_polytope(DivisorClass::new(0, 1)).len(), 2);
        // class (1,1): x_i z_j
        assert_eq!(f.section_polytope(DivisorClass::new(1, 1)).len(), 4);

        let f1 = KleinschmidtFan::build(2, 1, 2).unwrap();
        // bidegree (1,1) on the Hirzebruch surface: x0z3, x1z3, y2
        assert_eq!(f1.section_polytope(DivisorClass::new(1, 1)).len(), 3);

        let f312 = KleinschmidtFan::build(3, 1, 2).unwrap();
        // x0z3, x0z4, x1z3, x1z4, y2
        assert_eq!(f312.section_polytope(DivisorClass::new(1, 1)).len(), 5);

        // degenerate classes
        assert_eq!(f.section_polytope(DivisorClass::new(-1, 0)).len(), 0);
        assert_eq!(f.section_polytope(DivisorClass::new(0, 0)).len(), 1); // the constant
    }

    #[test]
    fn monomial_map_worked_values() {
        let f = KleinschmidtFan::build(2, 1, 1).unwrap();
        let c = DivisorClass::new(1, 1);
        // u = (0,0) ↦ x0·z3
        assert_eq!(f.monomial_of(c, &[0, 0]), Some(vec![1, 0, 0, 1]));
        // u = (1,0) ↦ x1·z3
        assert_eq!(f.monomial_of(c, &[1, 0]), Some(vec![0, 1, 0, 1]));
        // u = (0,1) ↦ x0·z2
        assert_eq!(f.monomial_of(c, &[0, 1]), Some(vec![1, 0, 1, 0]));
        // outside the polytope
        assert_eq!(f.monomial_of(c, &[2, 0]), None);
    }

    #[test]
    fn polytope_monomial_bijection() {
        // every polytope point maps to a distinct valid exponent vector of
        // the right class, and the lattice point can be read back off
        for (n, r, m, a, b) in [(2, 1, 1, 2, 2), (2, 1, 2, 2, 1), (3, 1, 2, 2, 2), (4, 2, 3, 1, 2)] {
            let f = KleinschmidtFan::build(n, r, m).unwrap();
            let c = DivisorClass::new(a, b);
            let pts = f.section_polytope(c);
            let mut seen = BTreeSet::new();
            for u in &pts {
                let e = f.monomial_of(c, u).expect("polytope point must map");
                assert_eq!(f.class_of_monomial(&e), c);
                assert_eq!(&f.lattice_point_of(&e), u);
                assert!(seen.insert(e));
            }
            assert_eq!(seen.len(), pts.len());
        }
    }

    #[test]
    fn cone_membership_is_exact() {
        let f = KleinschmidtFan::build(2, 1, 1).unwrap();
        // first quadrant cone = cone(e1, e2) = rays 1,2 (σ_{0,3})
        let cone: Vec<usize> = vec![1, 2];
        assert!(f.cone_contains(&cone, &[3, 5]));
        assert!(f.cone_contains(&cone, &[0, 0]));
        assert!(f.cone_contains(&cone, &[0, 7]));
        assert!(!f.cone_contains(&cone, &[-1, 5]));
        assert!(!f.cone_contains(&cone, &[1, -1]));
    }
}
