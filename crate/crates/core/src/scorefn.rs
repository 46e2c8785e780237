//! Exact piecewise representation of score functions on `[0, 1]`.
//!
//! A [`ScoreFn`] is an ordered list of segments partitioning `[0, 1]` plus
//! explicit values at the two endpoints. Endpoint values are data, not
//! limits: they override the segment formulas at `x = 0` and `x = 1`, which
//! is what makes discontinuous completions (`F(1) = -inf`) representable
//! exactly.
//!
//! Segment formulas are drawn from a small closed grammar: constant,
//! affine, log-form, quadratic, a mixed form spanning all of them together
//! with `1/u` and `1/(1-u)` terms, and an opaque escape hatch carrying an
//! evaluator plus declared monotonicity and endpoint limits. The mixed form
//! is the closure of the four basic forms under the representation
//! integral, so functions derived from closed-form inputs stay closed-form.

use std::fmt;
use std::sync::Arc;

use crate::extreal::{ExtReal, Extended};
use crate::poly;

/// Slack for monotonicity comparisons, relative to the local value scale.
/// Absorbs the ulp-level rounding of folded segment constants without
/// affecting decisions on genuinely non-monotone inputs.
const MONO_SLACK: f64 = 1e-10;

/// Monotonicity direction of a score function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
    Unconstrained,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::NonDecreasing => Direction::NonIncreasing,
            Direction::NonIncreasing => Direction::NonDecreasing,
            Direction::Unconstrained => Direction::Unconstrained,
        }
    }
}

/// Coefficients of the mixed closed form
/// `sq*u^2 + lin*u + cst + log_u*ln(u) + log_omu*ln(1-u) + inv_u/u + inv_omu/(1-u)`.
///
/// `omu` is short for "one minus u".
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MixedCoeffs {
    pub sq: f64,
    pub lin: f64,
    pub cst: f64,
    pub log_u: f64,
    pub log_omu: f64,
    pub inv_u: f64,
    pub inv_omu: f64,
}

impl MixedCoeffs {
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = (self.sq * x + self.lin) * x + self.cst;
        if self.log_u != 0.0 {
            v += self.log_u * x.ln();
        }
        if self.log_omu != 0.0 {
            v += self.log_omu * (1.0 - x).ln();
        }
        if self.inv_u != 0.0 {
            v += self.inv_u / x;
        }
        if self.inv_omu != 0.0 {
            v += self.inv_omu / (1.0 - x);
        }
        v
    }

    /// One-sided limit as `u -> 0+`. The `1/u` term dominates the log term.
    pub fn limit_at_zero(&self) -> Extended {
        if self.inv_u != 0.0 {
            return if self.inv_u > 0.0 { Extended::PosInf } else { Extended::NegInf };
        }
        if self.log_u != 0.0 {
            return if self.log_u > 0.0 { Extended::NegInf } else { Extended::PosInf };
        }
        Extended::Finite(self.cst + self.inv_omu)
    }

    /// One-sided limit as `u -> 1-`.
    pub fn limit_at_one(&self) -> Extended {
        if self.inv_omu != 0.0 {
            return if self.inv_omu > 0.0 { Extended::PosInf } else { Extended::NegInf };
        }
        if self.log_omu != 0.0 {
            return if self.log_omu > 0.0 { Extended::NegInf } else { Extended::PosInf };
        }
        Extended::Finite(((self.sq + self.lin) + self.cst) + self.inv_u)
    }

    /// Substitution `u -> 1 - u`, exact on coefficients.
    pub fn reflected(&self) -> MixedCoeffs {
        MixedCoeffs {
            sq: self.sq,
            lin: -2.0 * self.sq - self.lin,
            cst: ((self.sq + self.lin) + self.cst),
            log_u: self.log_omu,
            log_omu: self.log_u,
            inv_u: self.inv_omu,
            inv_omu: self.inv_u,
        }
    }

    pub fn sub(&self, other: &MixedCoeffs) -> MixedCoeffs {
        MixedCoeffs {
            sq: self.sq - other.sq,
            lin: self.lin - other.lin,
            cst: self.cst - other.cst,
            log_u: self.log_u - other.log_u,
            log_omu: self.log_omu - other.log_omu,
            inv_u: self.inv_u - other.inv_u,
            inv_omu: self.inv_omu - other.inv_omu,
        }
    }

    /// Collapses to the simplest equivalent basic form where coefficients
    /// permit, so derived functions serialize with familiar form names.
    pub fn simplified(self) -> SegmentForm {
        let no_logs = self.log_u == 0.0 && self.log_omu == 0.0;
        let no_invs = self.inv_u == 0.0 && self.inv_omu == 0.0;
        if no_logs && no_invs {
            if self.sq == 0.0 {
                if self.lin == 0.0 {
                    return SegmentForm::Constant(self.cst);
                }
                return SegmentForm::Affine { slope: self.lin, intercept: self.cst };
            }
            return SegmentForm::Quadratic { sq: self.sq, lin: self.lin, cst: self.cst };
        }
        if no_invs && self.sq == 0.0 && self.lin == 0.0 {
            return SegmentForm::LogForm {
                log_u: self.log_u,
                log_omu: self.log_omu,
                cst: self.cst,
            };
        }
        SegmentForm::Mixed(self)
    }

    /// Coefficients `c[0..=5]` of the derivative multiplied by
    /// `u^2 (1-u)^2`, a polynomial whose sign decides monotonicity.
    fn derivative_poly(&self) -> [f64; 6] {
        let s = self.sq;
        let l = self.lin;
        [
            -self.inv_u,
            self.log_u + 2.0 * self.inv_u,
            l - 2.0 * self.log_u - self.log_omu - self.inv_u + self.inv_omu,
            2.0 * s - 2.0 * l + self.log_u + self.log_omu,
            l - 4.0 * s,
            2.0 * s,
        ]
    }
}

/// Evaluator and declarations for a segment with no closed form.
///
/// Black-box monotonicity and limits cannot be inferred soundly, so opaque
/// segments declare them; the declarations are cross-checked against probe
/// grids wherever they are relied on.
#[derive(Clone)]
pub struct OpaqueSeg {
    evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    monotonicity: Option<Direction>,
    lo_limit: Extended,
    hi_limit: Extended,
}

impl OpaqueSeg {
    pub fn new(
        evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        monotonicity: Option<Direction>,
        lo_limit: Extended,
        hi_limit: Extended,
    ) -> Self {
        OpaqueSeg { evaluator, monotonicity, lo_limit, hi_limit }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn monotonicity(&self) -> Option<Direction> {
        self.monotonicity
    }

    pub fn lo_limit(&self) -> Extended {
        self.lo_limit
    }

    pub fn hi_limit(&self) -> Extended {
        self.hi_limit
    }

    fn reflected(&self) -> OpaqueSeg {
        let inner = Arc::clone(&self.evaluator);
        OpaqueSeg {
            evaluator: Arc::new(move |x| inner(1.0 - x)),
            monotonicity: self.monotonicity.map(Direction::flipped),
            lo_limit: self.hi_limit,
            hi_limit: self.lo_limit,
        }
    }

    fn shifted(&self, k: f64) -> OpaqueSeg {
        let inner = Arc::clone(&self.evaluator);
        let shift_lim = |l: Extended| match l {
            Extended::Finite(v) => Extended::Finite(v + k),
            inf => inf,
        };
        OpaqueSeg {
            evaluator: Arc::new(move |x| inner(x) + k),
            monotonicity: self.monotonicity,
            lo_limit: shift_lim(self.lo_limit),
            hi_limit: shift_lim(self.hi_limit),
        }
    }
}

impl fmt::Debug for OpaqueSeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OpaqueSeg")
            .field("monotonicity", &self.monotonicity)
            .field("lo_limit", &self.lo_limit)
            .field("hi_limit", &self.hi_limit)
            .finish_non_exhaustive()
    }
}

/// The formula attached to one segment.
#[derive(Debug, Clone)]
pub enum SegmentForm {
    /// `c`
    Constant(f64),
    /// `slope*u + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `log_u*ln(u) + log_omu*ln(1-u) + cst`
    LogForm { log_u: f64, log_omu: f64, cst: f64 },
    /// `sq*u^2 + lin*u + cst`
    Quadratic { sq: f64, lin: f64, cst: f64 },
    /// General closed form; see [`MixedCoeffs`].
    Mixed(MixedCoeffs),
    /// Black box with declared monotonicity and endpoint limits.
    Opaque(OpaqueSeg),
}

impl SegmentForm {
    /// The mixed-form coefficients, when the form is closed.
    pub fn as_mixed(&self) -> Option<MixedCoeffs> {
        match *self {
            SegmentForm::Constant(c) => Some(MixedCoeffs { cst: c, ..Default::default() }),
            SegmentForm::Affine { slope, intercept } => {
                Some(MixedCoeffs { lin: slope, cst: intercept, ..Default::default() })
            }
            SegmentForm::LogForm { log_u, log_omu, cst } => {
                Some(MixedCoeffs { log_u, log_omu, cst, ..Default::default() })
            }
            SegmentForm::Quadratic { sq, lin, cst } => {
                Some(MixedCoeffs { sq, lin, cst, ..Default::default() })
            }
            SegmentForm::Mixed(m) => Some(m),
            SegmentForm::Opaque(_) => None,
        }
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self, SegmentForm::Opaque(_))
    }

    /// Raw formula value; callers keep `x` strictly inside `(0, 1)` unless
    /// the form is finite at the endpoint in question.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SegmentForm::Constant(c) => *c,
            SegmentForm::Affine { slope, intercept } => slope * x + intercept,
            SegmentForm::LogForm { log_u, log_omu, cst } => {
                let mut v = *cst;
                if *log_u != 0.0 {
                    v += log_u * x.ln();
                }
                if *log_omu != 0.0 {
                    v += log_omu * (1.0 - x).ln();
                }
                v
            }
            SegmentForm::Quadratic { sq, lin, cst } => (sq * x + lin) * x + cst,
            SegmentForm::Mixed(m) => m.eval(x),
            SegmentForm::Opaque(o) => o.eval(x),
        }
    }

    /// One-sided limit as `u` approaches `at` from inside the segment.
    /// `at` is an end of the segment; for interior ends this is plain
    /// evaluation, the closed forms being continuous there.
    fn limit_at(&self, at: f64, from_above: bool) -> Extended {
        if let SegmentForm::Opaque(o) = self {
            return if from_above { o.lo_limit() } else { o.hi_limit() };
        }
        if at == 0.0 {
            self.as_mixed().unwrap().limit_at_zero()
        } else if at == 1.0 {
            self.as_mixed().unwrap().limit_at_one()
        } else {
            Extended::Finite(self.eval(at))
        }
    }

    fn reflected(&self) -> SegmentForm {
        match self {
            SegmentForm::Constant(c) => SegmentForm::Constant(*c),
            SegmentForm::Affine { slope, intercept } => SegmentForm::Affine {
                slope: -slope,
                intercept: slope + intercept,
            },
            SegmentForm::LogForm { log_u, log_omu, cst } => SegmentForm::LogForm {
                log_u: *log_omu,
                log_omu: *log_u,
                cst: *cst,
            },
            SegmentForm::Quadratic { sq, lin, cst } => SegmentForm::Quadratic {
                sq: *sq,
                lin: -2.0 * sq - lin,
                cst: ((sq + lin) + cst),
            },
            SegmentForm::Mixed(m) => SegmentForm::Mixed(m.reflected()),
            SegmentForm::Opaque(o) => SegmentForm::Opaque(o.reflected()),
        }
    }

    fn shifted(&self, k: f64) -> SegmentForm {
        match self {
            SegmentForm::Constant(c) => SegmentForm::Constant(c + k),
            SegmentForm::Affine { slope, intercept } => {
                SegmentForm::Affine { slope: *slope, intercept: intercept + k }
            }
            SegmentForm::LogForm { log_u, log_omu, cst } => {
                SegmentForm::LogForm { log_u: *log_u, log_omu: *log_omu, cst: cst + k }
            }
            SegmentForm::Quadratic { sq, lin, cst } => {
                SegmentForm::Quadratic { sq: *sq, lin: *lin, cst: cst + k }
            }
            SegmentForm::Mixed(m) => SegmentForm::Mixed(MixedCoeffs { cst: m.cst + k, ..*m }),
            SegmentForm::Opaque(o) => SegmentForm::Opaque(o.shifted(k)),
        }
    }

    fn params_finite(&self) -> bool {
        match self {
            SegmentForm::Constant(c) => c.is_finite(),
            SegmentForm::Affine { slope, intercept } => slope.is_finite() && intercept.is_finite(),
            SegmentForm::LogForm { log_u, log_omu, cst } => {
                log_u.is_finite() && log_omu.is_finite() && cst.is_finite()
            }
            SegmentForm::Quadratic { sq, lin, cst } => {
                sq.is_finite() && lin.is_finite() && cst.is_finite()
            }
            SegmentForm::Mixed(m) => {
                [m.sq, m.lin, m.cst, m.log_u, m.log_omu, m.inv_u, m.inv_omu]
                    .iter()
                    .all(|v| v.is_finite())
            }
            SegmentForm::Opaque(_) => true,
        }
    }

    /// Whether the formula is non-decreasing (`dir` up) or non-increasing
    /// over `[lo, hi]`, decided per form. Opaque forms answer from their
    /// declaration alone; grid cross-checks happen at the function level.
    fn monotone_within(&self, lo: f64, hi: f64, dir: Direction) -> bool {
        let up = match dir {
            Direction::NonDecreasing => true,
            Direction::NonIncreasing => false,
            Direction::Unconstrained => return true,
        };
        match self {
            SegmentForm::Constant(_) => true,
            SegmentForm::Affine { slope, .. } => {
                if up {
                    *slope >= 0.0
                } else {
                    *slope <= 0.0
                }
            }
            SegmentForm::LogForm { log_u, log_omu, .. } => {
                // derivative log_u/u - log_omu/(1-u); times u(1-u) > 0 it is
                // the line log_u - (log_u + log_omu) u, so the ends decide.
                let line = |u: f64| log_u - (log_u + log_omu) * u;
                let scale = 1.0 + log_u.abs().max(log_omu.abs());
                let (a, b) = (line(lo), line(hi));
                if up {
                    a >= -MONO_SLACK * scale && b >= -MONO_SLACK * scale
                } else {
                    a <= MONO_SLACK * scale && b <= MONO_SLACK * scale
                }
            }
            SegmentForm::Quadratic { sq, lin, .. } => {
                // derivative 2*sq*u + lin is linear: check the ends.
                let d = |u: f64| 2.0 * sq * u + lin;
                let scale = 1.0 + sq.abs().max(lin.abs());
                let (a, b) = (d(lo), d(hi));
                if up {
                    a >= -MONO_SLACK * scale && b >= -MONO_SLACK * scale
                } else {
                    a <= MONO_SLACK * scale && b <= MONO_SLACK * scale
                }
            }
            SegmentForm::Mixed(m) => {
                let p = m.derivative_poly();
                let scale = 1.0 + p.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
                if up {
                    poly::min_on(&p, lo, hi) >= -MONO_SLACK * scale
                } else {
                    let neg: Vec<f64> = p.iter().map(|c| -c).collect();
                    poly::min_on(&neg, lo, hi) >= -MONO_SLACK * scale
                }
            }
            SegmentForm::Opaque(o) => match o.monotonicity() {
                Some(d) => d == dir,
                None => true, // decided by the grid cross-check
            },
        }
    }
}

/// One piece of the partition, carrying its interval, closure flags and
/// formula.
#[derive(Debug, Clone)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub form: SegmentForm,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool, form: SegmentForm) -> Self {
        Segment { lo, hi, lo_closed, hi_closed, form }
    }

    /// Closed interval `[lo, hi]` with both ends included.
    pub fn closed(lo: f64, hi: f64, form: SegmentForm) -> Self {
        Segment::new(lo, hi, true, true, form)
    }

    /// Half-open `[lo, hi)`.
    pub fn half_open(lo: f64, hi: f64, form: SegmentForm) -> Self {
        Segment::new(lo, hi, true, false, form)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    fn contains(&self, x: f64) -> bool {
        let above = x > self.lo || (x == self.lo && self.lo_closed);
        let below = x < self.hi || (x == self.hi && self.hi_closed);
        above && below
    }

    /// Limit of the formula approaching `lo` from inside the segment.
    pub(crate) fn start_limit(&self) -> Extended {
        if self.is_point() {
            return Extended::Finite(self.form.eval(self.lo));
        }
        self.form.limit_at(self.lo, true)
    }

    /// Limit of the formula approaching `hi` from inside the segment.
    pub(crate) fn end_limit(&self) -> Extended {
        if self.is_point() {
            return Extended::Finite(self.form.eval(self.hi));
        }
        self.form.limit_at(self.hi, false)
    }
}

/// Errors from score-function construction.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ScoreFnError {
    #[error("a score function needs at least one segment")]
    Empty,
    #[error("segment interval [{lo}, {hi}] is invalid")]
    BadInterval { lo: f64, hi: f64 },
    #[error("segments do not partition [0,1] cleanly at {at}")]
    BadPartition { at: f64 },
    #[error("non-finite parameter in a segment form")]
    NonFiniteParam,
    #[error("non-finite endpoint value")]
    NonFiniteEndpoint,
    #[error(
        "segment touching {endpoint} has a singular term there; \
         the endpoint value must be -inf"
    )]
    SingularEndpoint { endpoint: f64 },
    #[error("function is not monotone in the declared direction")]
    NotMonotone,
}

/// A score function: segments partitioning `[0, 1]`, explicit endpoint
/// values, and a declared monotonicity direction.
///
/// Invariants enforced at construction: the segments tile `[0, 1]` with no
/// gap or overlap, every interior evaluation is finite, segments with
/// log/inverse terms at an endpoint carry a `-inf` value there, and when a
/// direction is declared the function actually is monotone that way
/// (including the endpoint values).
#[derive(Debug, Clone)]
pub struct ScoreFn {
    segments: Vec<Segment>,
    value_at_0: ExtReal,
    value_at_1: ExtReal,
    direction: Direction,
}

impl ScoreFn {
    pub fn new(
        segments: Vec<Segment>,
        value_at_0: ExtReal,
        value_at_1: ExtReal,
        direction: Direction,
    ) -> Result<ScoreFn, ScoreFnError> {
        if segments.is_empty() {
            return Err(ScoreFnError::Empty);
        }
        if let ExtReal::Finite(v) = value_at_0 {
            if !v.is_finite() {
                return Err(ScoreFnError::NonFiniteEndpoint);
            }
        }
        if let ExtReal::Finite(v) = value_at_1 {
            if !v.is_finite() {
                return Err(ScoreFnError::NonFiniteEndpoint);
            }
        }
        for s in &segments {
            if !s.lo.is_finite() || !s.hi.is_finite() || s.lo < 0.0 || s.hi > 1.0 || s.lo > s.hi {
                return Err(ScoreFnError::BadInterval { lo: s.lo, hi: s.hi });
            }
            if s.is_point() && !(s.lo_closed && s.hi_closed) {
                return Err(ScoreFnError::BadInterval { lo: s.lo, hi: s.hi });
            }
            if !s.form.params_finite() {
                return Err(ScoreFnError::NonFiniteParam);
            }
        }
        let first = &segments[0];
        if first.lo != 0.0 || !first.lo_closed {
            return Err(ScoreFnError::BadPartition { at: 0.0 });
        }
        let last = segments.last().unwrap();
        if last.hi != 1.0 || !last.hi_closed {
            return Err(ScoreFnError::BadPartition { at: 1.0 });
        }
        for w in segments.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.hi != b.lo || a.hi_closed == b.lo_closed {
                return Err(ScoreFnError::BadPartition { at: a.hi });
            }
        }
        // Segments with singular terms at an endpoint force the stored
        // endpoint value to -inf; finite-on-(0,1) holds for closed forms by
        // construction.
        for s in &segments {
            if s.is_point() {
                continue;
            }
            if s.lo == 0.0 {
                let singular = match &s.form {
                    SegmentForm::LogForm { log_u, .. } => *log_u != 0.0,
                    SegmentForm::Mixed(m) => m.log_u != 0.0 || m.inv_u != 0.0,
                    _ => false,
                };
                if singular && value_at_0 != ExtReal::NegInf {
                    return Err(ScoreFnError::SingularEndpoint { endpoint: 0.0 });
                }
            }
            if s.hi == 1.0 {
                let singular = match &s.form {
                    SegmentForm::LogForm { log_omu, .. } => *log_omu != 0.0,
                    SegmentForm::Mixed(m) => m.log_omu != 0.0 || m.inv_omu != 0.0,
                    _ => false,
                };
                if singular && value_at_1 != ExtReal::NegInf {
                    return Err(ScoreFnError::SingularEndpoint { endpoint: 1.0 });
                }
            }
        }
        let f = ScoreFn { segments, value_at_0, value_at_1, direction };
        if direction != Direction::Unconstrained && !f.is_monotone(direction) {
            return Err(ScoreFnError::NotMonotone);
        }
        Ok(f)
    }

    /// A single formula over all of `[0, 1]`.
    pub fn single(
        form: SegmentForm,
        value_at_0: ExtReal,
        value_at_1: ExtReal,
        direction: Direction,
    ) -> Result<ScoreFn, ScoreFnError> {
        ScoreFn::new(vec![Segment::closed(0.0, 1.0, form)], value_at_0, value_at_1, direction)
    }

    /// A step function from breakpoints: `levels[i]` holds on
    /// `[cuts[i-1], cuts[i])`, the final level on `[cuts[last], 1]`.
    /// Endpoint values default to the adjacent level.
    pub fn step(cuts: &[f64], levels: &[f64], direction: Direction) -> Result<ScoreFn, ScoreFnError> {
        assert_eq!(levels.len(), cuts.len() + 1, "need one more level than cuts");
        let mut segments = Vec::with_capacity(levels.len());
        let mut lo = 0.0;
        for (i, &level) in levels.iter().enumerate() {
            let hi = if i < cuts.len() { cuts[i] } else { 1.0 };
            let hi_closed = i == cuts.len();
            segments.push(Segment::new(lo, hi, true, hi_closed, SegmentForm::Constant(level)));
            lo = hi;
        }
        ScoreFn::new(
            segments,
            ExtReal::finite(levels[0]),
            ExtReal::finite(*levels.last().unwrap()),
            direction,
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn value_at_0(&self) -> ExtReal {
        self.value_at_0
    }

    pub fn value_at_1(&self) -> ExtReal {
        self.value_at_1
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn has_opaque(&self) -> bool {
        self.segments.iter().any(|s| s.form.is_opaque())
    }

    /// Index of the segment containing interior point `x`.
    fn segment_index(&self, x: f64) -> usize {
        let idx = self
            .segments
            .partition_point(|s| s.hi < x || (s.hi == x && !s.hi_closed));
        debug_assert!(idx < self.segments.len() && self.segments[idx].contains(x), "lookup {x}");
        idx
    }

    pub fn segment_at(&self, x: f64) -> &Segment {
        &self.segments[self.segment_index(x)]
    }

    /// Evaluates the function. The stored endpoint values override segment
    /// formulas at `x = 0` and `x = 1`; the domain is total on `[0, 1]`.
    pub fn eval(&self, x: f64) -> ExtReal {
        assert!((0.0..=1.0).contains(&x), "eval outside [0,1]: {x}");
        if x == 0.0 {
            return self.value_at_0;
        }
        if x == 1.0 {
            return self.value_at_1;
        }
        let v = self.segments[self.segment_index(x)].form.eval(x);
        debug_assert!(v.is_finite(), "interior evaluation must be finite at {x}: {v}");
        ExtReal::Finite(v)
    }

    /// Interior evaluation as a plain float (`x` strictly inside `(0,1)`).
    pub fn eval_interior(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0 && x < 1.0);
        self.segments[self.segment_index(x)].form.eval(x)
    }

    /// One-sided limit as `x -> 0+`, from the first interval segment.
    pub fn limit_at_zero(&self) -> Extended {
        let seg = self.segments.iter().find(|s| !s.is_point()).expect("interval segment");
        seg.start_limit()
    }

    /// One-sided limit as `x -> 1-`, from the last interval segment.
    pub fn limit_at_one(&self) -> Extended {
        let seg = self.segments.iter().rev().find(|s| !s.is_point()).expect("interval segment");
        seg.end_limit()
    }

    /// Whether the left limit at 1 equals the stored value there.
    /// Equality is exact, in the extended sense (`-inf` matches `-inf`).
    pub fn continuous_at_one(&self) -> bool {
        self.limit_at_one() == Extended::from(self.value_at_1)
    }

    /// Whether the right limit at 0 equals the stored value there.
    pub fn continuous_at_zero(&self) -> bool {
        self.limit_at_zero() == Extended::from(self.value_at_0)
    }

    /// Decides monotonicity in direction `dir`, per segment form and across
    /// segment boundaries including the endpoint values. Closed forms are
    /// analyzed exactly; opaque declarations are cross-checked on the
    /// default probe grid.
    pub fn is_monotone(&self, dir: Direction) -> bool {
        if dir == Direction::Unconstrained {
            return true;
        }
        if !monotone_chain(&self.segments, self.value_at_0.into(), self.value_at_1.into(), dir) {
            return false;
        }
        if self.has_opaque() {
            let pts = crate::verify::default_probe_points();
            let mut prev: Option<Extended> = None;
            for &x in pts {
                let v: Extended = self.eval(x).into();
                if let Some(p) = prev {
                    if !pair_ordered(p, v, dir) {
                        return false;
                    }
                }
                prev = Some(v);
            }
        }
        true
    }

    /// The reflected function `x -> f(1-x)`: segment forms transformed
    /// exactly, interval closures mirrored, endpoint values swapped, and
    /// the declared direction flipped.
    pub fn reflect(&self) -> ScoreFn {
        let mut segments: Vec<Segment> = self
            .segments
            .iter()
            .map(|s| Segment {
                lo: 1.0 - s.hi,
                hi: 1.0 - s.lo,
                lo_closed: s.hi_closed,
                hi_closed: s.lo_closed,
                form: s.form.reflected(),
            })
            .collect();
        segments.reverse();
        ScoreFn {
            segments,
            value_at_0: self.value_at_1,
            value_at_1: self.value_at_0,
            direction: self.direction.flipped(),
        }
    }

    /// Adds the constant `k` to the whole function (`-inf` endpoints stay).
    pub fn shift(&self, k: f64) -> ScoreFn {
        assert!(k.is_finite());
        let shift_ext = |v: ExtReal| match v {
            ExtReal::Finite(x) => ExtReal::Finite(x + k),
            ExtReal::NegInf => ExtReal::NegInf,
        };
        ScoreFn {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { form: s.form.shifted(k), ..s.clone() })
                .collect(),
            value_at_0: shift_ext(self.value_at_0),
            value_at_1: shift_ext(self.value_at_1),
            direction: self.direction,
        }
    }
}

fn pair_ordered(a: Extended, b: Extended, dir: Direction) -> bool {
    let slack = |a: Extended, b: Extended| match (a, b) {
        (Extended::Finite(x), Extended::Finite(y)) => {
            MONO_SLACK * (1.0 + x.abs().max(y.abs()))
        }
        _ => 0.0,
    };
    match dir {
        Direction::NonDecreasing => a.to_f64() <= b.to_f64() + slack(a, b),
        Direction::NonIncreasing => b.to_f64() <= a.to_f64() + slack(a, b),
        Direction::Unconstrained => true,
    }
}

/// Within-segment monotonicity plus the boundary chain: each segment's
/// entry limit must not back up against the previous exit limit, and the
/// endpoint values must sit consistently at the ends.
pub(crate) fn monotone_chain(
    segments: &[Segment],
    at0: Extended,
    at1: Extended,
    dir: Direction,
) -> bool {
    let mut prev_exit = at0;
    for s in segments {
        if !s.form.monotone_within(s.lo.max(0.0), s.hi.min(1.0), dir) {
            return false;
        }
        if !pair_ordered(prev_exit, s.start_limit(), dir) {
            return false;
        }
        prev_exit = s.end_limit();
    }
    pair_ordered(prev_exit, at1, dir)
}

/// Pointwise difference of two score functions over a merged partition.
///
/// Differences escape the score codomain: `finite - (-inf)` is `+inf`, and
/// where both endpoint values are `-inf` the difference is completed by its
/// one-sided limit. Hence a dedicated type over [`Extended`] rather than a
/// `ScoreFn`.
#[derive(Debug, Clone)]
pub struct FnDiff {
    segments: Vec<Segment>,
    at0: Extended,
    at1: Extended,
}

impl FnDiff {
    pub fn new(f: &ScoreFn, g: &ScoreFn) -> FnDiff {
        let mut bounds: Vec<f64> = Vec::new();
        for s in f.segments().iter().chain(g.segments()) {
            bounds.push(s.lo);
            bounds.push(s.hi);
        }
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bounds.dedup();

        let mut segments = Vec::new();
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if lo >= hi {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let form = diff_form(f.segment_at(mid), g.segment_at(mid), lo, hi);
            segments.push(Segment::new(lo, hi, false, false, form));
            if hi < 1.0 {
                let d = f.eval_interior(hi) - g.eval_interior(hi);
                segments.push(Segment::closed(hi, hi, SegmentForm::Constant(d)));
            }
        }
        // Re-anchor outer closures so the chain logic sees a full cover.
        if let Some(first) = segments.first_mut() {
            first.lo_closed = true;
        }
        if let Some(last) = segments.last_mut() {
            last.hi_closed = true;
        }

        let at0 = endpoint_diff(f.value_at_0().into(), g.value_at_0().into(), || {
            segments.first().unwrap().start_limit()
        });
        let at1 = endpoint_diff(f.value_at_1().into(), g.value_at_1().into(), || {
            segments.last().unwrap().end_limit()
        });
        FnDiff { segments, at0, at1 }
    }

    pub fn value_at_0(&self) -> Extended {
        self.at0
    }

    pub fn value_at_1(&self) -> Extended {
        self.at1
    }

    pub fn eval(&self, x: f64) -> Extended {
        assert!((0.0..=1.0).contains(&x));
        if x == 0.0 {
            return self.at0;
        }
        if x == 1.0 {
            return self.at1;
        }
        let idx = self
            .segments
            .partition_point(|s| s.hi < x || (s.hi == x && !s.hi_closed));
        Extended::Finite(self.segments[idx].form.eval(x))
    }

    pub fn has_opaque(&self) -> bool {
        self.segments.iter().any(|s| s.form.is_opaque())
    }

    pub fn is_monotone(&self, dir: Direction) -> bool {
        if !monotone_chain(&self.segments, self.at0, self.at1, dir) {
            return false;
        }
        if self.has_opaque() {
            let pts = crate::verify::default_probe_points();
            let mut prev: Option<Extended> = None;
            for &x in pts {
                let v = self.eval(x);
                if let Some(p) = prev {
                    if !pair_ordered(p, v, dir) {
                        return false;
                    }
                }
                prev = Some(v);
            }
        }
        true
    }
}

/// Difference of two component segments restricted to the merged interval
/// `[lo, hi]`. Closed forms subtract coefficient-wise; anything opaque
/// yields an opaque difference whose declared limits are the component
/// limits subtracted where determinate, and numerically probed where both
/// components blow up the same way at a domain endpoint.
fn diff_form(a: &Segment, b: &Segment, lo: f64, hi: f64) -> SegmentForm {
    match (a.form.as_mixed(), b.form.as_mixed()) {
        (Some(ma), Some(mb)) => ma.sub(&mb).simplified(),
        _ => {
            let fa = a.form.clone();
            let fb = b.form.clone();
            let eval = {
                let (fa, fb) = (fa.clone(), fb.clone());
                move |x: f64| fa.eval(x) - fb.eval(x)
            };
            let lo_limit = if lo > 0.0 {
                Extended::Finite(eval(lo))
            } else {
                // lo = 0 is a boundary of both component segments.
                a.start_limit()
                    .checked_sub(b.start_limit())
                    .unwrap_or_else(|| probe_diff_limit(&eval, false))
            };
            let hi_limit = if hi < 1.0 {
                Extended::Finite(eval(hi))
            } else {
                a.end_limit()
                    .checked_sub(b.end_limit())
                    .unwrap_or_else(|| probe_diff_limit(&eval, true))
            };
            SegmentForm::Opaque(OpaqueSeg::new(Arc::new(eval), None, lo_limit, hi_limit))
        }
    }
}

/// Dyadic probe into a domain endpoint for a difference whose components
/// both blow up there: the deepest stable value stands in for the limit,
/// with magnitude blow-ups mapped to infinities. Chain comparisons and the
/// grid cross-check both guard the result, so a wobbling tail only ever
/// makes the monotonicity verdict more conservative.
fn probe_diff_limit(eval: &dyn Fn(f64) -> f64, toward_one: bool) -> Extended {
    let mut last = 0.0;
    for k in 10..=40 {
        let x = if toward_one { 1.0 - 0.5f64.powi(k) } else { 0.5f64.powi(k) };
        last = eval(x);
        if last < -1e12 {
            return Extended::NegInf;
        }
        if last > 1e12 {
            return Extended::PosInf;
        }
    }
    Extended::Finite(last)
}

/// `a - b` on endpoint values; when both are `-inf` the difference is
/// completed by the adjacent one-sided limit of the difference formula.
fn endpoint_diff(a: Extended, b: Extended, limit: impl Fn() -> Extended) -> Extended {
    match a.checked_sub(b) {
        Some(d) => d,
        None => limit(),
    }
}
