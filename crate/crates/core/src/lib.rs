//! Construction and numerical verification of proper binary scoring rules.
//!
//! A binary scoring rule is a pair `(T, F)` of functions on `[0, 1]`: a
//! forecaster who reports probability `q` for an event receives score `T(q)`
//! if the event occurs and `F(q)` if it does not. The rule is *proper* when
//! reporting the true probability maximizes expected score,
//!
//! ```text
//! p*T(p) + (1-p)*F(p) >= p*T(q) + (1-p)*F(q)    for all p, q in [0, 1],
//! ```
//!
//! with the convention `0 * (-inf) = 0` so that the inequality stays
//! meaningful when a component takes the value minus infinity at an endpoint.
//!
//! The centerpiece of this crate is an integral representation that completes
//! any monotone non-decreasing truth-score `T` (finite on the open interval)
//! to a proper rule:
//!
//! ```text
//! F(x) = C - x*T(x)/(1-x) + integral from 1/2 to x of T(u)/(1-u)^2 du
//! ```
//!
//! for `x < 1`, with `F(1)` equal to `-c` plus the left limit when `T` is
//! continuous at 1 and `-inf` otherwise (`C` real, `c >= 0` free constants).
//! The dual construction recovers `T` from a non-increasing `F`. Everything
//! else in the crate exists to make that constructor exact and to test its
//! consequences numerically: propriety scans on deterministic grids,
//! uniqueness of completions up to a constant, reflection duality,
//! difference rules, the layer-cake decomposition into indicator building
//! blocks, and the convex-function/subgradient view.
//!
//! Modules:
//!
//! * [`extreal`]: score values in `[-inf, inf)` and the `0 * (-inf) = 0`
//!   arithmetic convention.
//! * [`scorefn`]: exact piecewise representation of score functions with
//!   evaluation, monotonicity analysis, endpoint continuity and reflection.
//! * [`quadrature`]: exact and adaptive integration against the singular
//!   weights `1/(1-u)^2` and `1/u^2`.
//! * [`represent`]: the constructors `derive_false_score` /
//!   `derive_truth_score`, indicator building blocks, level-set
//!   decomposition, and the convex representation.
//! * [`verify`]: probe grids, propriety reports, uniqueness gaps and
//!   difference-rule checks.
//! * [`catalog`]: canonical rules (log, Brier, spherical) and the text
//!   format for rule-spec documents.
//! * [`random`]: seeded generators of random monotone score functions used
//!   by the test suites.

pub mod catalog;
pub mod extreal;
mod poly;
pub mod quadrature;
pub mod random;
pub mod represent;
pub mod scorefn;
pub mod verify;

pub use extreal::{ExtReal, Extended};
pub use represent::{Provenance, ScoringRule};
pub use scorefn::{Direction, ScoreFn, Segment, SegmentForm};
pub use verify::{GridSpec, ProprietyReport};
