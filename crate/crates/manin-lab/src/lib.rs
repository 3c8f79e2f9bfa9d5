//! Desk-scale arithmetic for hypersurfaces in smooth projective toric
//! varieties of Picard rank two.
//!
//! The toolkit walks the whole pipeline that sits behind the asymptotic
//! count of rational points of bounded height on such a hypersurface:
//!
//! * [`toric`] — the rank-2 smooth fans, their divisor classes, and the
//!   lattice polytopes of global sections;
//! * [`forms`] — exact multihomogeneous forms in the Cox coordinates
//!   `(x, y, z)` and their specializations;
//! * [`counting`] — torsor heights and exact bounded-height point counts,
//!   including the Möbius-inverted route through the auxiliary counts
//!   `N_{d}(·)`;
//! * [`padic`] — densities mod `p^N`, complete exponential sums, and the
//!   singular series assembled from exact rationals;
//! * [`arch`] — Monte-Carlo and oscillatory-integral estimates of the
//!   archimedean density;
//! * [`hypersum`] — the two-parameter hyperbola method over weighted
//!   lattice regions `k^{β₁} l^{β₂} ≤ P`;
//! * [`assemble`] — the predicted leading constant, the regime
//!   diagnostics, and the end-to-end comparison `N(B) / (B log B)`.
//!
//! Everything that can be exact is exact (`BigInt` / `BigRational`);
//! floating point enters only where an integral is genuinely being
//! estimated, and every estimator is deterministic for a fixed seed,
//! independent of the number of worker threads.

pub mod arch;
pub mod arith;
pub mod assemble;
pub mod config;
pub mod counting;
pub mod forms;
pub mod hypersum;
pub mod padic;
pub mod rng;
pub mod toric;

pub use counting::TorsorPoint;
pub use forms::BidegreeForm;
pub use toric::KleinschmidtFan;

/// Re-export of the numeric crate whose types appear in this API
/// (`BigInt`, `BigRational`), so downstream crates match versions for free.
pub use num;
