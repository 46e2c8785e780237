//! The constructive core: completing a monotone component to a proper
//! scoring rule through the representation integral, and the structures
//! that explain why it works: indicator building blocks, level-set
//! decomposition, and the convex/subgradient view.
//!
//! For a non-decreasing truth-score `T` finite on `(0, 1)`, the companion
//!
//! ```text
//! F(x) = C - x*T(x)/(1-x) + integral from 1/2 to x of T(u)/(1-u)^2 du
//! ```
//!
//! is materialized segment by segment. On each segment the antiderivative
//! combines with the rational term so that the singular parts cancel:
//! constants map to constants, and affine/quadratic/log forms land in the
//! mixed closed form. Only two cases leave the closed basis (a `1/(1-u)`
//! term in `T` on the singular side, and opaque segments), and those fall
//! back to an opaque companion segment carrying an exact formula or a
//! memoized adaptive integral.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::extreal::{ExtReal, Extended};
use crate::quadrature::{self, QuadratureError, Weight};
use crate::scorefn::{
    Direction, MixedCoeffs, OpaqueSeg, ScoreFn, ScoreFnError, Segment, SegmentForm,
};
use crate::verify::GridSpec;

/// How a rule came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    DerivedFromT,
    DerivedFromF,
    Catalog,
    UserSupplied,
}

/// A scoring rule: the truth-score / false-score pair together with the
/// free constants used to obtain it.
///
/// Invariants: `drop_at_one >= 0`; when the rule was derived from a `T`
/// discontinuous at 1, `false_score` takes the value `-inf` there.
#[derive(Debug, Clone)]
pub struct ScoringRule {
    /// Score when the event occurs; non-decreasing.
    pub truth_score: ScoreFn,
    /// Score when it does not; non-increasing.
    pub false_score: ScoreFn,
    /// The additive constant `C` of the representation.
    pub offset: f64,
    /// The extra endpoint drop `c >= 0`.
    pub drop_at_one: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RepresentError {
    #[error("input component is not monotone in the required direction")]
    NotMonotone,
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error("the derived companion is unbounded above at {at}")]
    UnrepresentableEndpoint { at: f64 },
    #[error("endpoint limit probe did not stabilize near {at}")]
    LimitProbeFailed { at: f64 },
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("function must be non-positive; maximum value {max} exceeds tolerance")]
    NotNonPositive { max: f64 },
    #[error("function value at {x} is -inf; no finite reconstruction exists")]
    InfiniteAt { x: f64 },
    #[error("sampled combination is not midpoint-convex: defect {defect} at {at}")]
    NotConvex { defect: f64, at: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("derived companion failed validation: {0}")]
    Construction(#[from] ScoreFnError),
}

/// Tolerance for the layer-cake non-positivity precondition.
const NONPOS_TOL: f64 = 1e-12;

/// Absolute tolerance of the midpoint-convexity audit.
const CONVEX_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Derivation machinery
// ---------------------------------------------------------------------------

/// Which endpoint carries the weight singularity during a derivation.
#[derive(Clone, Copy, PartialEq)]
enum Singular {
    AtOne,  // completing T -> F, weight 1/(1-u)^2
    AtZero, // completing F -> T, weight 1/u^2
}

impl Singular {
    fn weight(self) -> Weight {
        match self {
            Singular::AtOne => Weight::OneOver1MinusUSq,
            Singular::AtZero => Weight::OneOverUSq,
        }
    }

    /// Orientation of the integral term: completing toward 1 integrates
    /// from the base point up (`+ acc`), toward 0 integrates from the
    /// argument up to the base point (`- acc`).
    fn acc_sign(self) -> f64 {
        match self {
            Singular::AtOne => 1.0,
            Singular::AtZero => -1.0,
        }
    }
}

/// Completes a non-decreasing truth-score to a proper rule.
///
/// `offset` is the free constant `C`; `drop_at_one` is `c >= 0`, the extra
/// drop of `F` at 1 when `T` is continuous there. The derived companion is
/// non-increasing, anchored by `F(1/2) = C - T(1/2)`, and the returned pair
/// passes the grid propriety check.
pub fn derive_false_score(
    truth: &ScoreFn,
    offset: f64,
    drop_at_one: f64,
) -> Result<ScoringRule, RepresentError> {
    check_constants(offset, drop_at_one)?;
    if !truth.is_monotone(Direction::NonDecreasing) {
        return Err(RepresentError::NotMonotone);
    }
    let false_score = derive_companion(truth, offset, drop_at_one, Singular::AtOne)?;
    Ok(ScoringRule {
        truth_score: truth.clone(),
        false_score,
        offset,
        drop_at_one,
        provenance: Provenance::DerivedFromT,
    })
}

/// Recovers a truth-score from a non-increasing false-score, the roles of
/// the endpoints exchanged: `T(0)` is `-c` plus the right limit when `F` is
/// continuous at 0, and `-inf` otherwise.
pub fn derive_truth_score(
    falsity: &ScoreFn,
    offset: f64,
    drop_at_zero: f64,
) -> Result<ScoringRule, RepresentError> {
    check_constants(offset, drop_at_zero)?;
    if !falsity.is_monotone(Direction::NonIncreasing) {
        return Err(RepresentError::NotMonotone);
    }
    let truth_score = derive_companion(falsity, offset, drop_at_zero, Singular::AtZero)?;
    Ok(ScoringRule {
        truth_score,
        false_score: falsity.clone(),
        offset,
        drop_at_one: drop_at_zero,
        provenance: Provenance::DerivedFromF,
    })
}

/// The same recovery routed through reflection duality:
/// `T = reflect(derive_false_score(reflect(F)).F)`. Kept callable so the
/// two routes can be tested against each other.
pub fn derive_truth_score_via_reflection(
    falsity: &ScoreFn,
    offset: f64,
    drop_at_zero: f64,
) -> Result<ScoringRule, RepresentError> {
    let mirrored = derive_false_score(&falsity.reflect(), offset, drop_at_zero)?;
    Ok(ScoringRule {
        truth_score: mirrored.false_score.reflect(),
        false_score: falsity.clone(),
        offset,
        drop_at_one: drop_at_zero,
        provenance: Provenance::DerivedFromF,
    })
}

/// Swaps outcome roles: `(T, F) -> (F*, T*)` with `g*(x) = g(1-x)`.
/// Propriety is preserved (and tested, not assumed).
pub fn reflect_rule(rule: &ScoringRule) -> ScoringRule {
    ScoringRule {
        truth_score: rule.false_score.reflect(),
        false_score: rule.truth_score.reflect(),
        offset: rule.offset,
        drop_at_one: rule.drop_at_one,
        provenance: rule.provenance,
    }
}

fn check_constants(offset: f64, drop: f64) -> Result<(), RepresentError> {
    if !offset.is_finite() {
        return Err(RepresentError::InvalidConstant(format!("C must be finite, got {offset}")));
    }
    if !drop.is_finite() || drop < 0.0 {
        return Err(RepresentError::InvalidConstant(format!("c must be >= 0, got {drop}")));
    }
    Ok(())
}

/// Closed-form image of a mixed segment under the derivation, or `None`
/// when the inverse term on the singular side escapes the basis.
fn companion_form(m: &MixedCoeffs, d: f64, singular: Singular) -> Option<SegmentForm> {
    match singular {
        Singular::AtOne => {
            if m.inv_omu != 0.0 {
                return None;
            }
            Some(
                MixedCoeffs {
                    sq: m.sq,
                    lin: 2.0 * m.sq + m.lin,
                    cst: d + (m.lin + m.cst),
                    log_u: m.inv_u,
                    log_omu: (2.0 * m.sq + m.lin) + (m.log_u + m.log_omu) - m.inv_u,
                    inv_u: 0.0,
                    inv_omu: m.log_omu,
                }
                .simplified(),
            )
        }
        Singular::AtZero => {
            if m.inv_u != 0.0 {
                return None;
            }
            Some(
                MixedCoeffs {
                    sq: m.sq,
                    lin: m.lin - 2.0 * m.sq,
                    cst: d + (m.cst - m.lin),
                    log_u: (m.log_u + m.log_omu) - m.lin - m.inv_omu,
                    log_omu: m.inv_omu,
                    inv_u: m.log_u,
                    inv_omu: 0.0,
                }
                .simplified(),
            )
        }
    }
}

/// The rational term of the representation formula.
fn rational_term(phi: &SegmentForm, x: f64, singular: Singular) -> f64 {
    match singular {
        Singular::AtOne => x * phi.eval(x) / (1.0 - x),
        Singular::AtZero => (1.0 - x) * phi.eval(x) / x,
    }
}

/// Integral of `seg.form * w` over `[a, b]` inside the segment. The
/// weight's own singular point never lies in `[a, b]` here; a divergence
/// at the opposite domain boundary means the companion's endpoint value
/// would be unbounded above.
fn piece_integral(
    seg: &Segment,
    a: f64,
    b: f64,
    singular: Singular,
) -> Result<f64, RepresentError> {
    let weight = singular.weight();
    let map_err = |e: QuadratureError| match e {
        QuadratureError::Divergent { .. } => RepresentError::UnrepresentableEndpoint {
            at: if a == 0.0 { 0.0 } else { 1.0 },
        },
        other => RepresentError::Quadrature(other),
    };
    if let Some(m) = seg.form.as_mixed() {
        return quadrature::closed_piece(&m, a, b, weight).map_err(map_err);
    }
    let eval = |u: f64| seg.form.eval(u);
    let (v, _) = quadrature::adaptive_piece(&eval, a, b, weight).map_err(map_err)?;
    Ok(v)
}

/// Dyadic probe for the one-sided limit of a black-box function: values at
/// `1 - 2^-k` (resp. `2^-k`) for k up to 40 must go Cauchy below 1e-9, and
/// the deepest value is returned. Returning the deepest probe rather than
/// the first converged one keeps the declared limit consistent (to ~1e-12)
/// with evaluations at the grid's own endpoint-accumulating points, which
/// sit closer to the endpoint than the first Cauchy hit.
fn probe_limit(f: &dyn Fn(f64) -> f64, toward_one: bool) -> Result<Extended, RepresentError> {
    let at = if toward_one { 1.0 } else { 0.0 };
    let mut prev: Option<f64> = None;
    let mut converged = false;
    for k in 10..=40 {
        let x = if toward_one { 1.0 - 0.5f64.powi(k) } else { 0.5f64.powi(k) };
        let v = f(x);
        if v < -1e12 {
            return Ok(Extended::NegInf);
        }
        if v > 1e12 {
            return Ok(Extended::PosInf);
        }
        if let Some(p) = prev {
            converged = converged || (v - p).abs() <= 1e-9 * (1.0 + v.abs());
        }
        prev = Some(v);
    }
    if converged {
        Ok(Extended::Finite(prev.unwrap()))
    } else {
        Err(RepresentError::LimitProbeFailed { at })
    }
}

/// One derived companion segment before assembly.
struct CompanionSeg {
    lo: f64,
    hi: f64,
    lo_closed: bool,
    hi_closed: bool,
    form: SegmentForm,
}

/// Builds the companion of `source` for the given orientation. For
/// `Singular::AtOne` this is the false-score of a truth-score; for
/// `Singular::AtZero` the truth-score of a false-score, by the mirrored
/// formula with base point 1/2 in both cases.
fn derive_companion(
    source: &ScoreFn,
    offset: f64,
    drop: f64,
    singular: Singular,
) -> Result<ScoreFn, RepresentError> {
    let segs = source.segments();
    let weight = singular.weight();

    // Interval segments carry the measure; point segments only pin values.
    let intervals: Vec<usize> =
        (0..segs.len()).filter(|&j| !segs[j].is_point()).collect();
    let anchor_pos = intervals
        .iter()
        .position(|&j| segs[j].lo <= 0.5 && segs[j].hi >= 0.5)
        .expect("some interval segment contains the base point");

    // Signed integral from the base point 1/2 to each interval boundary.
    // acc_lo[k] = integral(1/2 -> lo of interval k); acc_hi[k] likewise.
    let n = intervals.len();
    let mut acc_lo = vec![f64::NAN; n];
    let mut acc_hi = vec![f64::NAN; n];
    {
        let aseg = &segs[intervals[anchor_pos]];
        if aseg.lo > 0.0 {
            acc_lo[anchor_pos] = -piece_integral(aseg, aseg.lo, 0.5, singular)?;
        }
        if aseg.hi < 1.0 {
            acc_hi[anchor_pos] = piece_integral(aseg, 0.5, aseg.hi, singular)?;
        }
        for k in (0..anchor_pos).rev() {
            let seg = &segs[intervals[k]];
            acc_hi[k] = acc_lo[k + 1];
            if seg.lo > 0.0 || k > 0 {
                acc_lo[k] = acc_hi[k] - piece_integral(seg, seg.lo, seg.hi, singular)?;
            }
        }
        for k in anchor_pos + 1..n {
            let seg = &segs[intervals[k]];
            acc_lo[k] = acc_hi[k - 1];
            if seg.hi < 1.0 || k < n - 1 {
                acc_hi[k] = acc_lo[k] + piece_integral(seg, seg.lo, seg.hi, singular)?;
            }
        }
    }

    let dsign = singular.acc_sign();
    let mut out: Vec<CompanionSeg> = Vec::with_capacity(segs.len());
    for (k, &j) in intervals.iter().enumerate() {
        let seg = &segs[j];
        // Base constant at a convenient interior reference; the combination
        // of accumulated integral and antiderivative is the same at every
        // point of the segment, so any reference works.
        let (i_ref, x_ref) = if seg.lo <= 0.5 && seg.hi >= 0.5 {
            (0.0, 0.5)
        } else if seg.hi < 0.5 {
            (acc_hi[k], seg.hi)
        } else {
            (acc_lo[k], seg.lo)
        };
        let form = match seg.form.as_mixed() {
            Some(m) => {
                let d =
                    offset + dsign * (i_ref - quadrature::antiderivative(&m, x_ref, weight));
                match companion_form(&m, d, singular) {
                    Some(f) => f,
                    None => exact_escape_segment(&m, d, seg, singular)?,
                }
            }
            None => memoized_opaque_segment(seg, offset, i_ref, x_ref, singular)?,
        };
        out.push(CompanionSeg {
            lo: seg.lo,
            hi: seg.hi,
            lo_closed: seg.lo_closed,
            hi_closed: seg.hi_closed,
            form,
        });
        // Interior point segment following this interval: pin its value
        // from the formula directly.
        if let Some(next) = segs.get(j + 1) {
            if next.is_point() && next.lo > 0.0 && next.lo < 1.0 {
                let b = next.lo;
                let v = offset + dsign * acc_hi[k] - rational_term(&next.form, b, singular);
                out.push(CompanionSeg {
                    lo: b,
                    hi: b,
                    lo_closed: true,
                    hi_closed: true,
                    form: SegmentForm::Constant(v),
                });
            }
        }
    }
    // Absorb dropped endpoint point segments into the outer closures.
    if let Some(s) = out.first_mut() {
        s.lo_closed = true;
    }
    if let Some(s) = out.last_mut() {
        s.hi_closed = true;
    }

    let segments: Vec<Segment> = out
        .into_iter()
        .map(|c| Segment::new(c.lo, c.hi, c.lo_closed, c.hi_closed, c.form))
        .collect();

    // Endpoint away from the singularity. The companion is continuous
    // there (the rational term is annihilated by the zero weight and the
    // integral converges or the derivation has already failed), so the
    // value IS the adjacent segment's one-sided limit, taken from the
    // materialized form itself, which keeps the continuity comparison
    // exact. An infinite limit means the formula's endpoint value escapes
    // the score codomain.
    let far_limit = match singular {
        Singular::AtOne => segments.first().unwrap().start_limit(),
        Singular::AtZero => segments.last().unwrap().end_limit(),
    };
    let far_value = match far_limit {
        Extended::Finite(v) => v,
        _ => {
            return Err(RepresentError::UnrepresentableEndpoint {
                at: if singular == Singular::AtOne { 0.0 } else { 1.0 },
            })
        }
    };

    // Endpoint at the singularity: the continuity rule.
    let continuous = match singular {
        Singular::AtOne => source.continuous_at_one(),
        Singular::AtZero => source.continuous_at_zero(),
    };
    let near_value = if !continuous {
        ExtReal::NegInf
    } else {
        let last = segments.last().unwrap();
        let first = segments.first().unwrap();
        let lim = match singular {
            Singular::AtOne => match &last.form {
                SegmentForm::Opaque(o) => o.hi_limit(),
                form => form.as_mixed().unwrap().limit_at_one(),
            },
            Singular::AtZero => match &first.form {
                SegmentForm::Opaque(o) => o.lo_limit(),
                form => form.as_mixed().unwrap().limit_at_zero(),
            },
        };
        match lim {
            Extended::NegInf => ExtReal::NegInf,
            Extended::Finite(v) => ExtReal::finite(v - drop),
            Extended::PosInf => {
                return Err(RepresentError::UnrepresentableEndpoint {
                    at: if singular == Singular::AtOne { 1.0 } else { 0.0 },
                })
            }
        }
    };

    let (at0, at1, dir) = match singular {
        Singular::AtOne => (ExtReal::finite(far_value), near_value, Direction::NonIncreasing),
        Singular::AtZero => (near_value, ExtReal::finite(far_value), Direction::NonDecreasing),
    };
    Ok(ScoreFn::new(segments, at0, at1, dir)?)
}

/// Exact opaque fallback for a mixed segment whose inverse term on the
/// singular side escapes the closed basis: the evaluator computes the
/// representation formula from the antiderivative table directly.
fn exact_escape_segment(
    m: &MixedCoeffs,
    d: f64,
    seg: &Segment,
    singular: Singular,
) -> Result<SegmentForm, RepresentError> {
    let weight = singular.weight();
    let dsign = singular.acc_sign();
    let m = *m;
    let form = SegmentForm::Mixed(m);
    let eval = move |x: f64| {
        let a = quadrature::antiderivative(&m, x, weight);
        d + dsign * a - rational_term(&form, x, singular)
    };
    // Monotone inputs cannot carry the escaping inverse term out to the
    // weight's singular endpoint, but the opposite domain boundary is
    // reachable and needs the antiderivative limit there.
    let lo_limit = if seg.lo > 0.0 {
        Extended::Finite(eval(seg.lo))
    } else {
        match quadrature::antiderivative_limit_at_zero(&m) {
            // x * phi(x) -> 0 here, so the rational term drops out.
            Some(a0) => Extended::Finite(d + dsign * a0),
            None => return Err(RepresentError::UnrepresentableEndpoint { at: 0.0 }),
        }
    };
    let hi_limit = if seg.hi < 1.0 {
        Extended::Finite(eval(seg.hi))
    } else {
        match quadrature::antiderivative_limit_at_one(&m) {
            Some(a1) => Extended::Finite(d + dsign * a1),
            None => return Err(RepresentError::UnrepresentableEndpoint { at: 1.0 }),
        }
    };
    let dir = if singular == Singular::AtOne {
        Direction::NonIncreasing
    } else {
        Direction::NonDecreasing
    };
    Ok(SegmentForm::Opaque(OpaqueSeg::new(Arc::new(eval), Some(dir), lo_limit, hi_limit)))
}

/// Companion segment over an opaque source segment: the representation
/// formula evaluated with a memoized adaptive integral from the reference
/// point.
fn memoized_opaque_segment(
    seg: &Segment,
    offset: f64,
    i_ref: f64,
    x_ref: f64,
    singular: Singular,
) -> Result<SegmentForm, RepresentError> {
    let weight = singular.weight();
    let dsign = singular.acc_sign();
    let source = seg.form.clone();
    let base = offset + dsign * i_ref;
    let cache: Mutex<HashMap<u64, f64>> = Mutex::new(HashMap::new());
    let (seg_lo, seg_hi) = (seg.lo, seg.hi);
    let eval = move |x: f64| -> f64 {
        if let Some(v) = cache.lock().unwrap().get(&x.to_bits()) {
            return *v;
        }
        let f = |u: f64| source.eval(u);
        let (a, b, sign) = if x >= x_ref { (x_ref, x, 1.0) } else { (x, x_ref, -1.0) };
        let int = quadrature::adaptive_piece(&f, a, b, weight)
            .expect("validated at derivation time")
            .0;
        let v = base + dsign * sign * int - rational_term(&source, x, singular);
        cache.lock().unwrap().insert(x.to_bits(), v);
        v
    };
    let eval: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(eval);
    // Declared limits: evaluate at interior ends; probe dyadically into a
    // domain endpoint.
    let lo_limit = if seg_lo > 0.0 {
        Extended::Finite(eval(seg_lo))
    } else {
        probe_limit(&*eval, false)?
    };
    let hi_limit = if seg_hi < 1.0 {
        Extended::Finite(eval(seg_hi))
    } else {
        probe_limit(&*eval, true)?
    };
    let dir = if singular == Singular::AtOne {
        Direction::NonIncreasing
    } else {
        Direction::NonDecreasing
    };
    Ok(SegmentForm::Opaque(OpaqueSeg::new(eval, Some(dir), lo_limit, hi_limit)))
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// The two indicator families from which every monotone truth-score is
/// rebuilt by the layer-cake decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuildingBlock {
    /// `T = 1_A` for an interval `A = [a, 1]` (closed) or `(a, 1]` with
    /// `a` in `(0, 1]`. The degenerate `(1, 1]` is the empty set, whose
    /// companion is identically zero by convention.
    IndicatorA { a: f64, closed: bool },
    /// `T = -1_B` for `B = [0, b]` (closed) or `[0, b)` with `b` in `[0, 1]`.
    NegIndicatorB { b: f64, closed: bool },
}

/// The closed-form proper pair attached to a building block.
///
/// For `IndicatorA` the companion is `-(a/(1-a)) * 1_A(x)` below 1, with
/// value `-inf` at 1 exactly when `A = {1}`. For `NegIndicatorB` the pair
/// is completed through the representation formula with `C = c = 0`, so
/// `F_B(1) = -inf` exactly when `B = [0, 1)`.
pub fn building_block_rule(kind: BuildingBlock) -> Result<ScoringRule, RepresentError> {
    match kind {
        BuildingBlock::IndicatorA { a, closed } => indicator_rule(a, closed),
        BuildingBlock::NegIndicatorB { b, closed } => {
            let truth = neg_indicator_fn(b, closed)?;
            derive_false_score(&truth, 0.0, 0.0)
        }
    }
}

fn indicator_rule(a: f64, closed: bool) -> Result<ScoringRule, RepresentError> {
    if !a.is_finite() || a <= 0.0 || a > 1.0 {
        return Err(RepresentError::InvalidInterval(format!(
            "indicator interval needs a in (0, 1], got {a}"
        )));
    }
    let (truth, companion) = if a == 1.0 && !closed {
        // (1, 1] is empty: both components are identically zero.
        let zero = constant_fn(0.0, Direction::NonDecreasing)?;
        let zero_down = constant_fn(0.0, Direction::NonIncreasing)?;
        (zero, zero_down)
    } else if a == 1.0 {
        // A = {1}: T jumps at 1 and the companion drops to -inf there.
        let truth = ScoreFn::new(
            vec![
                Segment::half_open(0.0, 1.0, SegmentForm::Constant(0.0)),
                Segment::closed(1.0, 1.0, SegmentForm::Constant(1.0)),
            ],
            ExtReal::finite(0.0),
            ExtReal::finite(1.0),
            Direction::NonDecreasing,
        )?;
        let companion = ScoreFn::new(
            vec![Segment::closed(0.0, 1.0, SegmentForm::Constant(0.0))],
            ExtReal::finite(0.0),
            ExtReal::NegInf,
            Direction::NonIncreasing,
        )?;
        (truth, companion)
    } else {
        let level = -(a / (1.0 - a));
        let (pre_hi_closed, post_lo_closed) = if closed { (false, true) } else { (true, false) };
        let step_pair = |off_val: f64, on_val: f64, dir| {
            ScoreFn::new(
                vec![
                    Segment::new(0.0, a, true, pre_hi_closed, SegmentForm::Constant(off_val)),
                    Segment::new(a, 1.0, post_lo_closed, true, SegmentForm::Constant(on_val)),
                ],
                ExtReal::finite(off_val),
                ExtReal::finite(on_val),
                dir,
            )
        };
        (
            step_pair(0.0, 1.0, Direction::NonDecreasing)?,
            step_pair(0.0, level, Direction::NonIncreasing)?,
        )
    };
    // The representation's base-point identity pins the constant this pair
    // corresponds to: C = F(1/2) + T(1/2).
    let offset = companion.eval(0.5).to_f64() + truth.eval(0.5).to_f64();
    Ok(ScoringRule {
        truth_score: truth,
        false_score: companion,
        offset,
        drop_at_one: 0.0,
        provenance: Provenance::Catalog,
    })
}

fn neg_indicator_fn(b: f64, closed: bool) -> Result<ScoreFn, RepresentError> {
    if !b.is_finite() || !(0.0..=1.0).contains(&b) {
        return Err(RepresentError::InvalidInterval(format!(
            "down-set interval needs b in [0, 1], got {b}"
        )));
    }
    let f = if b == 0.0 && !closed {
        // [0, 0) is empty: T = 0.
        constant_fn(0.0, Direction::NonDecreasing)?
    } else if b == 0.0 {
        // B = {0}
        ScoreFn::new(
            vec![
                Segment::closed(0.0, 0.0, SegmentForm::Constant(-1.0)),
                Segment::new(0.0, 1.0, false, true, SegmentForm::Constant(0.0)),
            ],
            ExtReal::finite(-1.0),
            ExtReal::finite(0.0),
            Direction::NonDecreasing,
        )?
    } else if b == 1.0 && closed {
        constant_fn(-1.0, Direction::NonDecreasing)?
    } else {
        let (pre_hi_closed, post_lo_closed) = if closed { (true, false) } else { (false, true) };
        ScoreFn::new(
            vec![
                Segment::new(0.0, b, true, pre_hi_closed, SegmentForm::Constant(-1.0)),
                Segment::new(b, 1.0, post_lo_closed, true, SegmentForm::Constant(0.0)),
            ],
            ExtReal::finite(-1.0),
            ExtReal::finite(0.0),
            Direction::NonDecreasing,
        )?
    };
    Ok(f)
}

fn constant_fn(v: f64, dir: Direction) -> Result<ScoreFn, ScoreFnError> {
    ScoreFn::single(SegmentForm::Constant(v), ExtReal::finite(v), ExtReal::finite(v), dir)
}

// ---------------------------------------------------------------------------
// Level sets
// ---------------------------------------------------------------------------

/// A sublevel set `B_t = {x : f(x) <= t}` of a non-decreasing function:
/// always a downward-closed interval `[0, b]` or `[0, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSet {
    pub threshold: f64,
    pub boundary: f64,
    pub closed_right: bool,
}

/// Locates the sublevel set of a non-decreasing function at threshold `t`
/// by bisection on the membership predicate.
pub fn level_set(f: &ScoreFn, t: f64) -> Result<LevelSet, RepresentError> {
    if !f.is_monotone(Direction::NonDecreasing) {
        return Err(RepresentError::NotMonotone);
    }
    let member = |x: f64| f.eval(x) <= ExtReal::Finite(t);
    if !member(0.0) {
        return Ok(LevelSet { threshold: t, boundary: 0.0, closed_right: false });
    }
    if member(1.0) {
        return Ok(LevelSet { threshold: t, boundary: 1.0, closed_right: true });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if member(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // A jump at a stored segment boundary is the true edge of the set;
    // snap to it so half-open sets report their exact boundary.
    let boundary = f
        .segments()
        .iter()
        .map(|s| s.lo)
        .find(|&v| v > lo && v <= hi)
        .unwrap_or(if member(hi) { hi } else { lo });
    Ok(LevelSet { threshold: t, boundary, closed_right: member(boundary) })
}

/// Rebuilds `f(x)` for a non-positive non-decreasing `f` from its sublevel
/// sets alone: the value is minus the measure of `{t <= 0 : x in B_t}`,
/// and membership `x in B_t` is the only question asked of `f`.
///
/// For step functions the thresholds where membership flips are among the
/// finitely many function levels, making the reconstruction exact; for
/// continuous functions the flip point is bisected, accurate well below
/// 1e-8. Callers normalize by subtracting the supremum first.
pub fn level_set_decomposition(f: &ScoreFn, x: f64) -> Result<f64, RepresentError> {
    if !f.is_monotone(Direction::NonDecreasing) {
        return Err(RepresentError::NotMonotone);
    }
    let sup = match f.value_at_1() {
        ExtReal::Finite(v) => v,
        ExtReal::NegInf => f64::NEG_INFINITY,
    };
    if sup > NONPOS_TOL {
        return Err(RepresentError::NotNonPositive { max: sup });
    }
    if f.eval(x).is_neg_inf() {
        return Err(RepresentError::InfiniteAt { x });
    }
    let member = |t: f64| f.eval(x) <= ExtReal::Finite(t);

    let is_step = f
        .segments()
        .iter()
        .all(|s| matches!(s.form, SegmentForm::Constant(_)));
    if is_step {
        // Candidate thresholds: every level the function takes. Membership
        // is monotone in t, so the flip happens at the smallest level that
        // contains x, and the measure of [t*, 0] is read off in one
        // subtraction: the reconstruction is exact.
        let mut levels: Vec<f64> = f
            .segments()
            .iter()
            .filter_map(|s| match s.form {
                SegmentForm::Constant(c) => Some(c),
                _ => None,
            })
            .collect();
        for v in [f.value_at_0(), f.value_at_1()] {
            if let ExtReal::Finite(fv) = v {
                levels.push(fv);
            }
        }
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        let t_star = levels
            .into_iter()
            .find(|&t| member(t))
            .expect("the top level always contains x");
        return Ok(-(0.0 - t_star));
    }

    // Continuous case: bracket downward until membership fails, then bisect
    // the flip threshold.
    let mut lo = -1.0f64;
    while member(lo) {
        lo *= 2.0;
        if lo < -1e15 {
            return Err(RepresentError::InfiniteAt { x });
        }
    }
    let mut hi = 0.0f64;
    if !member(hi) {
        // Value sits within the non-positivity tolerance above zero.
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if member(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(-(0.0 - hi))
}

// ---------------------------------------------------------------------------
// Convex representation
// ---------------------------------------------------------------------------

/// Samples of the convex function and subgradient a rule arises from:
/// `G(p) = p*T(p) + (1-p)*F(p)` and `G'(p) = T(p) - F(p)`.
///
/// `G` is finite at every grid point (zero weights annihilate infinite
/// endpoint scores); the subgradient samples may be infinite at the two
/// boundary points and are stored as IEEE infinities there.
#[derive(Debug, Clone)]
pub struct ConvexRep {
    pub grid: GridSpec,
    pub g: Vec<f64>,
    pub g_prime: Vec<f64>,
    /// Largest observed midpoint-convexity defect of the `G` samples.
    pub max_midpoint_defect: f64,
}

/// Samples the convex representation on a grid, auditing midpoint
/// convexity between adjacent grid points against an absolute 1e-9
/// tolerance. Improper input surfaces as a convexity defect.
pub fn convex_rep(rule: &ScoringRule, grid: &GridSpec) -> Result<ConvexRep, RepresentError> {
    let g_at = |p: f64| -> f64 {
        ExtReal::weighted_sum(p, rule.truth_score.eval(p), 1.0 - p, rule.false_score.eval(p))
            .as_finite()
            .expect("G is finite on [0,1]")
    };
    let pts = grid.points();
    let g: Vec<f64> = pts.iter().map(|&p| g_at(p)).collect();
    let g_prime: Vec<f64> = pts
        .iter()
        .map(|&p| {
            Extended::from(rule.truth_score.eval(p))
                .checked_sub(rule.false_score.eval(p).into())
                .expect("T and F are never both infinite at one point")
                .to_f64()
        })
        .collect();
    let mut max_defect = 0.0f64;
    let mut defect_at = 0.0f64;
    for (w, pair) in pts.windows(2).zip(g.windows(2)) {
        let mid = 0.5 * (w[0] + w[1]);
        let defect = g_at(mid) - 0.5 * (pair[0] + pair[1]);
        if defect > max_defect {
            max_defect = defect;
            defect_at = mid;
        }
    }
    if max_defect > CONVEX_TOL {
        return Err(RepresentError::NotConvex { defect: max_defect, at: defect_at });
    }
    Ok(ConvexRep {
        grid: grid.clone(),
        g,
        g_prime,
        max_midpoint_defect: max_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{propriety_check, DEFAULT_TOL};

    fn log_t() -> ScoreFn {
        ScoreFn::single(
            SegmentForm::LogForm { log_u: 1.0, log_omu: 0.0, cst: 0.0 },
            ExtReal::NegInf,
            ExtReal::finite(0.0),
            Direction::NonDecreasing,
        )
        .unwrap()
    }

    fn brier_t() -> ScoreFn {
        ScoreFn::single(
            SegmentForm::Quadratic { sq: -1.0, lin: 2.0, cst: -1.0 },
            ExtReal::finite(-1.0),
            ExtReal::finite(0.0),
            Direction::NonDecreasing,
        )
        .unwrap()
    }

    const TWO_LN_2: f64 = 2.0 * std::f64::consts::LN_2;

    #[test]
    fn log_companion_is_log_one_minus_plus_constant() {
        // F(x) = ln(1-x) + 2 ln 2 for C = 0; the integral's closed form was
        // cross-checked against adaptive quadrature before freezing.
        let rule = derive_false_score(&log_t(), 0.0, 0.0).unwrap();
        for i in 1..40 {
            let x = i as f64 / 40.0;
            let got = rule.false_score.eval(x).as_finite().unwrap();
            let want = (1.0 - x).ln() + TWO_LN_2;
            assert!((got - want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
        let half = rule.false_score.eval(0.5).as_finite().unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-14);
        assert_eq!(rule.false_score.eval(1.0), ExtReal::NegInf);
    }

    #[test]
    fn base_point_anchor() {
        // F(1/2) = C - T(1/2): the integral term vanishes at the base point.
        for (t, c) in [(log_t(), 0.0), (brier_t(), 1.25), (log_t(), -3.0)] {
            let rule = derive_false_score(&t, c, 0.0).unwrap();
            let f_half = rule.false_score.eval(0.5).as_finite().unwrap();
            let t_half = rule.truth_score.eval(0.5).as_finite().unwrap();
            assert!((f_half - (c - t_half)).abs() < 1e-12);
        }
    }

    #[test]
    fn brier_companion_closed_form() {
        // T = -(1-x)^2, C = 0 gives F = 1/2 - x^2 on [0, 1).
        let rule = derive_false_score(&brier_t(), 0.0, 0.0).unwrap();
        for i in 0..100 {
            let x = i as f64 / 100.0;
            let got = rule.false_score.eval(x).as_finite().unwrap();
            assert!((got - (0.5 - x * x)).abs() < 1e-13, "x={x}");
        }
        assert!(matches!(
            rule.false_score.segments()[0].form,
            SegmentForm::Quadratic { .. }
        ));
    }

    #[test]
    fn discontinuous_truth_forces_neg_inf_endpoint() {
        let step_at_one = ScoreFn::new(
            vec![
                Segment::half_open(0.0, 1.0, SegmentForm::Constant(0.0)),
                Segment::closed(1.0, 1.0, SegmentForm::Constant(1.0)),
            ],
            ExtReal::finite(0.0),
            ExtReal::finite(1.0),
            Direction::NonDecreasing,
        )
        .unwrap();
        for c in [0.0, 5.0, -2.5] {
            let rule = derive_false_score(&step_at_one, c, 0.0).unwrap();
            assert_eq!(rule.false_score.eval(1.0), ExtReal::NegInf);
        }
    }

    #[test]
    fn constants_shift_linearly() {
        let base = derive_false_score(&log_t(), 0.0, 0.0).unwrap();
        let moved = derive_false_score(&log_t(), 3.0, 0.25).unwrap();
        for i in 0..=40 {
            let x = i as f64 / 41.0;
            let d = moved.false_score.eval(x).as_finite().unwrap()
                - base.false_score.eval(x).as_finite().unwrap();
            assert!((d - 3.0).abs() < 1e-12, "x={x}: delta {d}");
        }
        // both -inf at 1 for the log truth-score
        assert_eq!(moved.false_score.eval(1.0), ExtReal::NegInf);

        // With a finite endpoint the difference at 1 is C - c.
        let base = derive_false_score(&brier_t(), 0.0, 0.0).unwrap();
        let moved = derive_false_score(&brier_t(), 3.0, 0.25).unwrap();
        let d1 = moved.false_score.eval(1.0).as_finite().unwrap()
            - base.false_score.eval(1.0).as_finite().unwrap();
        assert!((d1 - (3.0 - 0.25)).abs() < 1e-12);
    }

    #[test]
    fn drop_applies_at_continuous_endpoint() {
        let rule0 = derive_false_score(&brier_t(), 0.0, 0.0).unwrap();
        let rule = derive_false_score(&brier_t(), 0.0, 0.75).unwrap();
        let lim = rule0.false_score.eval(1.0).as_finite().unwrap();
        let got = rule.false_score.eval(1.0).as_finite().unwrap();
        assert!((got - (lim - 0.75)).abs() < 1e-13);
        assert!(!rule.false_score.continuous_at_one());
        assert!(rule0.false_score.continuous_at_one());
    }

    #[test]
    fn rejects_negative_drop_and_non_monotone_input() {
        assert!(matches!(
            derive_false_score(&log_t(), 0.0, -1.0),
            Err(RepresentError::InvalidConstant(_))
        ));
        let decreasing = log_t().reflect();
        assert!(matches!(
            derive_false_score(&decreasing, 0.0, 0.0),
            Err(RepresentError::NotMonotone)
        ));
    }

    #[test]
    fn truth_recovery_from_log_false_score() {
        // F = ln(1-x), C = 0: T = ln x + 2 ln 2, and T(1/2) = C - F(1/2).
        let f = log_t().reflect();
        let rule = derive_truth_score(&f, 0.0, 0.0).unwrap();
        let t_half = rule.truth_score.eval(0.5).as_finite().unwrap();
        assert!((t_half - std::f64::consts::LN_2).abs() < 1e-13);
        for i in 1..40 {
            let x = i as f64 / 40.0;
            let got = rule.truth_score.eval(x).as_finite().unwrap();
            let want = x.ln() + TWO_LN_2;
            assert!((got - want).abs() < 1e-12, "x={x}");
        }
        assert_eq!(rule.truth_score.eval(0.0), ExtReal::NegInf);
    }

    #[test]
    fn truth_recovery_endpoint_rule_mirrors() {
        // F discontinuous at 0 forces T(0) = -inf.
        let f = ScoreFn::new(
            vec![
                Segment::closed(0.0, 0.0, SegmentForm::Constant(1.0)),
                Segment::new(0.0, 1.0, false, true, SegmentForm::Constant(0.0)),
            ],
            ExtReal::finite(1.0),
            ExtReal::finite(0.0),
            Direction::NonIncreasing,
        )
        .unwrap();
        let rule = derive_truth_score(&f, 0.0, 0.0).unwrap();
        assert_eq!(rule.truth_score.eval(0.0), ExtReal::NegInf);
    }

    #[test]
    fn reflection_route_matches_direct_route() {
        let f = log_t().reflect();
        let direct = derive_truth_score(&f, 0.5, 0.25).unwrap();
        let routed = derive_truth_score_via_reflection(&f, 0.5, 0.25).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let a = direct.truth_score.eval(x);
            let b = routed.truth_score.eval(x);
            match (a.as_finite(), b.as_finite()) {
                (Some(va), Some(vb)) => assert!((va - vb).abs() < 1e-10, "x={x}"),
                _ => assert_eq!(a, b, "x={x}"),
            }
        }
    }

    #[test]
    fn reflect_rule_is_involutive_and_fixes_symmetric_rules() {
        let rule = derive_false_score(&brier_t(), -0.5, 0.0).unwrap();
        // Brier with C = -1/2 is the symmetric pair (-(1-x)^2, -x^2).
        let reflected = reflect_rule(&rule);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(reflected.truth_score.eval(x), rule.truth_score.eval(x));
            assert_eq!(reflected.false_score.eval(x), rule.false_score.eval(x));
        }
        let twice = reflect_rule(&reflect_rule(&rule));
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(twice.truth_score.eval(x), rule.truth_score.eval(x));
        }
        // The log pair (ln x, ln(1-x)) is likewise a fixed point of the
        // swap-and-reflect transform.
        let log = crate::catalog::catalog_rule(crate::catalog::CatalogName::Log);
        let reflected = reflect_rule(&log);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(reflected.truth_score.eval(x), log.truth_score.eval(x));
            assert_eq!(reflected.false_score.eval(x), log.false_score.eval(x));
        }
    }

    #[test]
    fn indicator_companion_closed_form() {
        // companion = -(a/(1-a)) on A, 0 off A, exactly.
        let rule =
            building_block_rule(BuildingBlock::IndicatorA { a: 0.5, closed: true }).unwrap();
        assert_eq!(rule.false_score.eval(0.75), ExtReal::finite(-1.0));
        assert_eq!(rule.false_score.eval(0.25), ExtReal::finite(0.0));
        assert_eq!(rule.truth_score.eval(0.75), ExtReal::finite(1.0));
    }

    #[test]
    fn indicator_empty_set_convention() {
        let rule =
            building_block_rule(BuildingBlock::IndicatorA { a: 1.0, closed: false }).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert_eq!(rule.false_score.eval(x), ExtReal::finite(0.0));
            assert_eq!(rule.truth_score.eval(x), ExtReal::finite(0.0));
        }
    }

    #[test]
    fn indicator_singleton_has_infinite_companion_drop() {
        let rule =
            building_block_rule(BuildingBlock::IndicatorA { a: 1.0, closed: true }).unwrap();
        assert_eq!(rule.false_score.eval(1.0), ExtReal::NegInf);
        assert_eq!(rule.false_score.eval(0.999), ExtReal::finite(0.0));
    }

    #[test]
    fn neg_indicator_full_interval_is_constant_pair() {
        let rule =
            building_block_rule(BuildingBlock::NegIndicatorB { b: 1.0, closed: true }).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert_eq!(rule.truth_score.eval(x), ExtReal::finite(-1.0));
            assert_eq!(rule.false_score.eval(x), ExtReal::finite(1.0));
        }
    }

    #[test]
    fn neg_indicator_half_open_full_drops_companion_at_one() {
        let rule =
            building_block_rule(BuildingBlock::NegIndicatorB { b: 1.0, closed: false }).unwrap();
        assert_eq!(rule.false_score.eval(1.0), ExtReal::NegInf);
        // constant 1 below 1
        assert_eq!(rule.false_score.eval(0.3), ExtReal::finite(1.0));
    }

    #[test]
    fn neg_indicator_companion_value() {
        // F_B = (b/(1-b)) * 1_B
        let rule =
            building_block_rule(BuildingBlock::NegIndicatorB { b: 0.25, closed: true }).unwrap();
        let on = rule.false_score.eval(0.1).as_finite().unwrap();
        assert!((on - 0.25 / 0.75).abs() < 1e-12);
        let off = rule.false_score.eval(0.9).as_finite().unwrap();
        assert!(off.abs() < 1e-12);
    }

    #[test]
    fn invalid_intervals_rejected() {
        assert!(building_block_rule(BuildingBlock::IndicatorA { a: 0.0, closed: true }).is_err());
        assert!(building_block_rule(BuildingBlock::IndicatorA { a: 1.5, closed: true }).is_err());
        assert!(
            building_block_rule(BuildingBlock::NegIndicatorB { b: -0.1, closed: true }).is_err()
        );
    }

    #[test]
    fn level_set_location() {
        let t = ScoreFn::step(&[0.3, 0.7], &[-2.0, -1.0, 0.0], Direction::NonDecreasing).unwrap();
        let ls = level_set(&t, -1.5).unwrap();
        assert!((ls.boundary - 0.3).abs() < 1e-12);
        assert!(!ls.closed_right); // f(0.3) = -1 > -1.5
        let ls = level_set(&t, -1.0).unwrap();
        assert!((ls.boundary - 0.7).abs() < 1e-12);
    }

    #[test]
    fn layer_cake_exact_on_steps() {
        let t = ScoreFn::step(&[0.3, 0.7], &[-2.0, -1.0, 0.0], Direction::NonDecreasing).unwrap();
        assert_eq!(level_set_decomposition(&t, 0.5).unwrap(), -1.0);
        assert_eq!(level_set_decomposition(&t, 0.1).unwrap(), -2.0);
        assert_eq!(level_set_decomposition(&t, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn layer_cake_close_on_clipped_log() {
        // ln clipped to [1e-6, 1]: non-positive and non-decreasing.
        let delta = 1e-6f64;
        let t = ScoreFn::new(
            vec![
                Segment::half_open(0.0, delta, SegmentForm::Constant(delta.ln())),
                Segment::closed(delta, 1.0, SegmentForm::LogForm {
                    log_u: 1.0,
                    log_omu: 0.0,
                    cst: 0.0,
                }),
            ],
            ExtReal::finite(delta.ln()),
            ExtReal::finite(0.0),
            Direction::NonDecreasing,
        )
        .unwrap();
        let got = level_set_decomposition(&t, 0.5).unwrap();
        assert!((got - 0.5f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn layer_cake_requires_non_positive_input() {
        let t = ScoreFn::step(&[0.5], &[0.0, 1.0], Direction::NonDecreasing).unwrap();
        assert!(matches!(
            level_set_decomposition(&t, 0.2),
            Err(RepresentError::NotNonPositive { .. })
        ));
    }

    #[test]
    fn convex_rep_log_rule_entropy() {
        let rule = derive_false_score(&log_t(), -TWO_LN_2, 0.0).unwrap();
        let grid = GridSpec::default_grid();
        let rep = convex_rep(&rule, &grid).unwrap();
        // G(p) = p ln p + (1-p) ln(1-p); G(1/2) = -ln 2; G'(1/2) = 0.
        for (i, &p) in grid.points().iter().enumerate() {
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            let want = p * p.ln() + (1.0 - p) * (1.0 - p).ln();
            assert!((rep.g[i] - want).abs() < 1e-12, "p={p}");
        }
        let at_half = grid.points().iter().position(|&p| p == 0.5).unwrap();
        assert!((rep.g[at_half] + std::f64::consts::LN_2).abs() < 1e-14);
        assert!(rep.g_prime[at_half].abs() < 1e-12);
        // Boundary subgradients blow up for the log rule; stored as IEEE.
        assert_eq!(rep.g_prime[0], f64::NEG_INFINITY);
        assert_eq!(*rep.g_prime.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn convex_rep_reconstruction_identity() {
        let rule = derive_false_score(&brier_t(), -0.5, 0.0).unwrap();
        let grid = GridSpec::default_grid();
        let rep = convex_rep(&rule, &grid).unwrap();
        for (i, &p) in grid.points().iter().enumerate() {
            if p <= 0.0 || p >= 1.0 {
                continue;
            }
            let t_hat = rep.g[i] + (1.0 - p) * rep.g_prime[i];
            let f_hat = rep.g[i] - p * rep.g_prime[i];
            let t = rule.truth_score.eval(p).as_finite().unwrap();
            let f = rule.false_score.eval(p).as_finite().unwrap();
            assert!((t_hat - t).abs() < 1e-12 && (f_hat - f).abs() < 1e-12, "p={p}");
        }
        // G(p) = -p(1-p) for the Brier pair.
        let at_half = grid.points().iter().position(|&p| p == 0.5).unwrap();
        assert!((rep.g[at_half] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn derived_rules_pass_propriety() {
        let grid = GridSpec::default_grid();
        for (t, c, drop) in [
            (log_t(), 0.0, 0.0),
            (brier_t(), 2.0, 0.5),
            (
                ScoreFn::step(&[0.25, 0.6], &[-3.0, -1.0, 2.0], Direction::NonDecreasing).unwrap(),
                -1.0,
                0.0,
            ),
        ] {
            let rule = derive_false_score(&t, c, drop).unwrap();
            let report = propriety_check(&rule, &grid, DEFAULT_TOL);
            assert!(report.passed, "violation {:?}", report.witness);
            assert!(rule.false_score.is_monotone(Direction::NonIncreasing));
        }
    }

    #[test]
    fn interior_point_segment_passes_through_derivation() {
        // T jumps through an isolated value at 0.4; the companion picks up
        // a matching point value from the formula and the pair stays
        // proper.
        let t = ScoreFn::new(
            vec![
                Segment::half_open(0.0, 0.4, SegmentForm::Constant(-2.0)),
                Segment::closed(0.4, 0.4, SegmentForm::Constant(-1.5)),
                Segment::new(0.4, 1.0, false, true, SegmentForm::Constant(-1.0)),
            ],
            ExtReal::finite(-2.0),
            ExtReal::finite(-1.0),
            Direction::NonDecreasing,
        )
        .unwrap();
        let rule = derive_false_score(&t, 0.0, 0.0).unwrap();
        assert_eq!(rule.false_score.segments().len(), 3);
        // F(0.4) = I(0.4) - 0.4*T(0.4)/0.6 with the point value of T.
        let acc = crate::quadrature::integrate_weighted(
            &t,
            0.4,
            0.5,
            crate::quadrature::Weight::OneOver1MinusUSq,
        )
        .unwrap()
        .value;
        let want = -acc - 0.4 * (-1.5) / 0.6;
        let got = rule.false_score.eval(0.4).as_finite().unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        let report = propriety_check(&rule, &GridSpec::default_grid(), DEFAULT_TOL);
        assert!(report.passed, "witness {:?}", report.witness);
    }

    #[test]
    fn derivation_anchors_cleanly_when_half_is_a_boundary() {
        let t = ScoreFn::step(&[0.5], &[-1.0, 0.0], Direction::NonDecreasing).unwrap();
        let rule = derive_false_score(&t, 0.0, 0.0).unwrap();
        // F(1/2) = C - T(1/2) = 0 - 0 = 0 at the base point itself.
        assert_eq!(rule.false_score.eval(0.5), ExtReal::finite(0.0));
        let report = propriety_check(&rule, &GridSpec::default_grid(), DEFAULT_TOL);
        assert!(report.passed);
    }

    #[test]
    fn affine_truth_gets_mixed_companion() {
        // T = x: F picks up a ln(1-x) term and stays exactly representable.
        let t = ScoreFn::single(
            SegmentForm::Affine { slope: 1.0, intercept: 0.0 },
            ExtReal::finite(0.0),
            ExtReal::finite(1.0),
            Direction::NonDecreasing,
        )
        .unwrap();
        let rule = derive_false_score(&t, 0.0, 0.0).unwrap();
        // F(x) = x + ln(1-x) + const with F(1/2) = -1/2: const = -ln(1/2) - 1.
        let konst = -0.5f64.ln() - 1.0;
        for i in 1..50 {
            let x = i as f64 / 50.0;
            let want = x + (1.0 - x).ln() + konst;
            let got = rule.false_score.eval(x).as_finite().unwrap();
            assert!((got - want).abs() < 1e-12, "x={x}");
        }
        assert_eq!(rule.false_score.eval(1.0), ExtReal::NegInf);
        let report = propriety_check(&rule, &GridSpec::default_grid(), DEFAULT_TOL);
        assert!(report.passed);
    }
}
