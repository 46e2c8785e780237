//! Numerical verification of the propriety inequality and its consequences
//! on deterministic probe grids.
//!
//! Grid checks are evidence, not proof: for the closed segment forms a
//! fine-enough grid cannot hide a violation between its points, while for
//! opaque segments the report is explicitly labelled grid-supported.

use std::sync::OnceLock;

use crate::extreal::{ExtReal, Extended};
use crate::represent::ScoringRule;
use crate::scorefn::{Direction, FnDiff, ScoreFn};

/// Default tolerance for propriety scans.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance deciding whether two completions differ by a constant.
pub const UNIQUENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum VerifyError {
    #[error("a probe grid needs at least 3 points, got {0}")]
    GridTooCoarse(usize),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

/// A deterministic probe grid on `[0, 1]`.
///
/// The points are a uniform ladder of resolution `n` merged with
/// geometrically accumulating points `2^-k` and `1 - 2^-k` (k up to 20),
/// since the delicate behavior of scoring rules lives at the endpoints and
/// uniform grids under-sample it. The base point `1/2` is always present.
#[derive(Debug, Clone)]
pub struct GridSpec {
    n: usize,
    include_endpoints: bool,
    points: Vec<f64>,
}

impl GridSpec {
    pub fn new(n: usize, include_endpoints: bool) -> Result<GridSpec, VerifyError> {
        if n < 3 {
            return Err(VerifyError::GridTooCoarse(n));
        }
        let mut points = Vec::with_capacity(n + 40);
        if include_endpoints {
            for i in 0..n {
                points.push(i as f64 / (n - 1) as f64);
            }
        } else {
            for i in 0..n {
                points.push((i + 1) as f64 / (n + 1) as f64);
            }
        }
        for k in 2..=20u32 {
            let lo = 0.5f64.powi(k as i32);
            points.push(lo);
            points.push(1.0 - lo);
        }
        points.push(0.5);
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        Ok(GridSpec { n, include_endpoints, points })
    }

    /// The 201-point uniform ladder with endpoints, plus the geometric
    /// accumulation points. The default for every check in this crate.
    pub fn default_grid() -> GridSpec {
        GridSpec::new(201, true).expect("default grid is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn include_endpoints(&self) -> bool {
        self.include_endpoints
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Grid points strictly inside `(0, 1)`.
    pub fn interior(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied().filter(|&x| x > 0.0 && x < 1.0)
    }
}

/// Shared probe points for declared-monotonicity cross-checks.
pub(crate) fn default_probe_points() -> &'static [f64] {
    static PROBE: OnceLock<Vec<f64>> = OnceLock::new();
    PROBE.get_or_init(|| GridSpec::default_grid().points().to_vec())
}

/// The offending pair of a failed propriety check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    /// True probability.
    pub p: f64,
    /// Reported probability that beats truthful reporting.
    pub q: f64,
    /// Expected score of the truthful report.
    pub lhs: Extended,
    /// Expected score of reporting `q`.
    pub rhs: Extended,
}

/// Outcome of a grid propriety scan.
#[derive(Debug, Clone)]
pub struct ProprietyReport {
    pub passed: bool,
    /// Worst scale-normalized violation `max(0, (rhs - lhs) / (1 + |lhs|))`
    /// over all grid pairs; infinite when a finite truthful score loses to
    /// an infinite one.
    pub worst_violation: f64,
    /// Present exactly when the check failed; the maximal violation under
    /// lexicographic `(violation, p, q)` order, which makes the report
    /// deterministic.
    pub witness: Option<Witness>,
    pub checked_pairs: usize,
    /// True when an opaque segment was involved, in which case the grid
    /// cannot certify behavior between its points.
    pub grid_supported_only: bool,
}

/// Expected score under true probability `p` of reporting `q`:
/// `p*T(q) + (1-p)*F(q)` with `0 * (-inf) = 0`.
pub fn expected_score(rule: &ScoringRule, p: f64, q: f64) -> ExtReal {
    assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    ExtReal::weighted_sum(p, rule.truth_score.eval(q), 1.0 - p, rule.false_score.eval(q))
}

/// The pair scan shared by rule checks and difference checks. For valid
/// rules the truthful expected score is finite (zero weights annihilate
/// infinite endpoint scores), but deliberately broken inputs can push it
/// to `-inf`; the scale falls back to 1 there, and a finite reported score
/// beating an infinitely bad truthful one is an infinite violation.
pub(crate) fn scan_pairs(
    points: &[f64],
    tvals: &[Extended],
    fvals: &[Extended],
    tol: f64,
    grid_supported_only: bool,
) -> ProprietyReport {
    assert!(tol >= 0.0);
    let lhs: Vec<Extended> = points
        .iter()
        .zip(tvals.iter().zip(fvals))
        .map(|(&p, (&t, &f))| t.scaled(p) + f.scaled(1.0 - p))
        .collect();
    let mut worst = 0.0f64;
    let mut witness: Option<Witness> = None;
    for (i, &p) in points.iter().enumerate() {
        let scale = match lhs[i] {
            Extended::Finite(l) => 1.0 + l.abs(),
            _ => 1.0,
        };
        for (j, &q) in points.iter().enumerate() {
            let rhs = tvals[j].scaled(p) + fvals[j].scaled(1.0 - p);
            let violation = match (lhs[i], rhs) {
                // -inf comparisons are exact, never tolerance-based.
                (_, Extended::NegInf) => 0.0,
                (Extended::PosInf, _) => 0.0,
                (Extended::NegInf, _) => f64::INFINITY,
                (Extended::Finite(_), Extended::PosInf) => f64::INFINITY,
                (Extended::Finite(l), Extended::Finite(r)) => ((r - l) / scale).max(0.0),
            };
            if violation > 0.0 {
                let beats = match &witness {
                    None => true,
                    Some(w) => (violation, p, q) > (worst, w.p, w.q),
                };
                if beats {
                    worst = violation;
                    witness = Some(Witness { p, q, lhs: lhs[i], rhs });
                }
            }
        }
    }
    let passed = worst <= tol;
    ProprietyReport {
        passed,
        worst_violation: worst,
        witness: if passed { None } else { witness },
        checked_pairs: points.len() * points.len(),
        grid_supported_only,
    }
}

fn component_values(f: &ScoreFn, points: &[f64]) -> Vec<Extended> {
    points.iter().map(|&x| f.eval(x).into()).collect()
}

/// Checks the propriety inequality over all ordered grid pairs `(p, q)`.
///
/// A pair counts as violated when `lhs < rhs - tol * (1 + |lhs|)`.
/// Comparisons against `-inf` are exact, never tolerance-based.
pub fn propriety_check(rule: &ScoringRule, grid: &GridSpec, tol: f64) -> ProprietyReport {
    let pts = grid.points();
    let tvals = component_values(&rule.truth_score, pts);
    let fvals = component_values(&rule.false_score, pts);
    let opaque = rule.truth_score.has_opaque() || rule.false_score.has_opaque();
    scan_pairs(pts, &tvals, &fvals, tol, opaque)
}

/// Result of comparing two completions of the same truth-score.
#[derive(Debug, Clone, Copy)]
pub struct UniquenessGap {
    /// Whether `F - K` is constant across grid points below 1.
    pub is_constant: bool,
    /// The common constant (mean of the differences).
    pub gap: f64,
    /// The extra drop of `K` at 1 beyond the constant gap,
    /// `(K(1) - F(1)) + gap`; this is `-c` for a completion lowered by
    /// `c >= 0` at the endpoint, and `-inf` when the endpoint values are
    /// both `-inf` (the drop is then unidentifiable).
    pub c_at_1: ExtReal,
}

/// Compares two completions `F`, `K` of the same `T`. Both pairs must pass
/// the propriety check on the grid first; completions of a common
/// truth-score can then only differ by a constant below 1.
pub fn uniqueness_gap(
    truth: &ScoreFn,
    f: &ScoreFn,
    k: &ScoreFn,
    grid: &GridSpec,
) -> Result<UniquenessGap, VerifyError> {
    let pts = grid.points();
    let tvals = component_values(truth, pts);
    for (name, comp) in [("(T,F)", f), ("(T,K)", k)] {
        let vals = component_values(comp, pts);
        let opaque = truth.has_opaque() || comp.has_opaque();
        let report = scan_pairs(pts, &tvals, &vals, DEFAULT_TOL, opaque);
        if !report.passed {
            return Err(VerifyError::PreconditionFailed(format!(
                "{name} is not proper on the grid (worst violation {:.3e})",
                report.worst_violation
            )));
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &x in pts.iter().filter(|&&x| x < 1.0) {
        let (fv, kv) = (f.eval(x), k.eval(x));
        let d = match (fv.as_finite(), kv.as_finite()) {
            (Some(a), Some(b)) => a - b,
            _ => {
                return Err(VerifyError::PreconditionFailed(format!(
                    "completions must be finite below 1; found -inf at {x}"
                )))
            }
        };
        lo = lo.min(d);
        hi = hi.max(d);
        sum += d;
        count += 1;
    }
    let gap = sum / count as f64;
    let is_constant = hi - lo <= UNIQUENESS_TOL;
    let c_at_1 = match Extended::from(k.eval(1.0)).checked_sub(f.eval(1.0).into()) {
        None => ExtReal::NegInf, // both -inf: drop size unidentifiable
        Some(Extended::Finite(d)) => ExtReal::finite(d + gap),
        Some(Extended::NegInf) => ExtReal::NegInf,
        Some(Extended::PosInf) => {
            return Err(VerifyError::PreconditionFailed(
                "K(1) finite while F(1) = -inf; such a pair cannot be proper".into(),
            ))
        }
    };
    Ok(UniquenessGap { is_constant, gap, c_at_1 })
}

/// Both verdicts on the difference of two rules.
#[derive(Debug, Clone)]
pub struct DifferenceReport {
    /// `T1-T2` non-decreasing, decided by monotonicity analysis.
    pub t_diff_nondecreasing: bool,
    /// `F1-F2` non-increasing.
    pub f_diff_nonincreasing: bool,
    /// The characterization's verdict: the difference pair is proper iff
    /// either monotonicity holds.
    pub monotone_verdict: bool,
    /// Direct grid propriety scan of the difference pair.
    pub grid_verdict: ProprietyReport,
}

/// Checks the difference pair `(T1-T2, F1-F2)` two independent ways: by the
/// monotonicity characterization and by a direct grid scan. Both rules must
/// be continuous at 0 and 1 (in the extended sense, `-inf` limits
/// matching `-inf` values); the verdicts are expected to agree and a
/// disagreement is a finding worth failing loudly on.
pub fn difference_propriety(
    r1: &ScoringRule,
    r2: &ScoringRule,
    grid: &GridSpec,
) -> Result<DifferenceReport, VerifyError> {
    for (name, rule) in [("first rule", r1), ("second rule", r2)] {
        for (comp, f) in [("T", &rule.truth_score), ("F", &rule.false_score)] {
            if !f.continuous_at_zero() || !f.continuous_at_one() {
                return Err(VerifyError::HypothesisViolated(format!(
                    "{name}: component {comp} is discontinuous at an endpoint"
                )));
            }
        }
    }
    let dt = FnDiff::new(&r1.truth_score, &r2.truth_score);
    let df = FnDiff::new(&r1.false_score, &r2.false_score);
    let t_diff_nondecreasing = dt.is_monotone(Direction::NonDecreasing);
    let f_diff_nonincreasing = df.is_monotone(Direction::NonIncreasing);
    let pts = grid.points();
    let tvals: Vec<Extended> = pts.iter().map(|&x| dt.eval(x)).collect();
    let fvals: Vec<Extended> = pts.iter().map(|&x| df.eval(x)).collect();
    // Opposite infinities of the two difference components at one report
    // probability would make its expected score indeterminate; the
    // difference pair is not a scoring rule there.
    for ((&t, &f), &q) in tvals.iter().zip(&fvals).zip(pts) {
        if matches!(
            (t, f),
            (Extended::PosInf, Extended::NegInf) | (Extended::NegInf, Extended::PosInf)
        ) {
            return Err(VerifyError::HypothesisViolated(format!(
                "difference components take opposite infinite values at q = {q}"
            )));
        }
    }
    let grid_verdict = scan_pairs(
        pts,
        &tvals,
        &fvals,
        DEFAULT_TOL,
        dt.has_opaque() || df.has_opaque(),
    );
    Ok(DifferenceReport {
        t_diff_nondecreasing,
        f_diff_nonincreasing,
        monotone_verdict: t_diff_nondecreasing || f_diff_nonincreasing,
        grid_verdict,
    })
}
