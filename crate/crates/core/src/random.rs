//! Seeded generators of random monotone score functions.
//!
//! The test suites fuzz the constructors with mixtures of step, affine,
//! log-form and quadratic segments. Everything is driven by a caller-owned
//! seeded RNG, so failures reproduce.

use rand::rngs::StdRng;
use rand::Rng;

use crate::extreal::ExtReal;
use crate::scorefn::{Direction, ScoreFn, Segment, SegmentForm};

/// Shape controls for the generator.
#[derive(Debug, Clone)]
pub struct GenOptions {
    pub max_segments: usize,
    /// Force the value at 1 to equal the left limit.
    pub continuous_at_one: bool,
    /// Force the value at 0 to equal the right limit.
    pub continuous_at_zero: bool,
    /// Permit a log term on the first segment (value `-inf` at 0).
    pub allow_log_at_zero: bool,
    /// Force the last segment to be constant. A flat tail keeps the
    /// derived companion finite at 1, which makes endpoint drops
    /// identifiable.
    pub flat_tail: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            max_segments: 4,
            continuous_at_one: true,
            continuous_at_zero: true,
            allow_log_at_zero: false,
            flat_tail: false,
        }
    }
}

/// A random non-decreasing score function: monotone segment forms chained
/// with non-negative jumps at the cut points.
pub fn monotone_nondecreasing(rng: &mut StdRng, opts: &GenOptions) -> ScoreFn {
    let n_segs = rng.random_range(1..=opts.max_segments.max(1));
    let cuts = random_cuts(rng, n_segs - 1);

    let mut segments = Vec::with_capacity(n_segs);
    let mut prev_end: Option<f64> = None; // None while the start is -inf
    let mut at0 = None;
    for i in 0..n_segs {
        let lo = if i == 0 { 0.0 } else { cuts[i - 1] };
        let hi = if i == n_segs - 1 { 1.0 } else { cuts[i] };
        let start_target = prev_end.map(|v| v + random_jump(rng));
        let last = i == n_segs - 1;

        let kind = if last && opts.flat_tail { 0 } else { rng.random_range(0..4u8) };
        let (form, start_value, end_value) = match kind {
            0 => {
                let level = start_target.unwrap_or_else(|| rng.random_range(-4.0..0.0));
                (SegmentForm::Constant(level), Some(level), level)
            }
            1 => {
                let slope = rng.random_range(0.0..3.0);
                let start = start_target.unwrap_or_else(|| rng.random_range(-4.0..0.0));
                let intercept = start - slope * lo;
                (
                    SegmentForm::Affine { slope, intercept },
                    Some(start),
                    slope * hi + intercept,
                )
            }
            2 => {
                let sq: f64 = rng.random_range(-1.5..1.5);
                // derivative 2*sq*u + lin must be >= 0 at both ends
                let lin = (-2.0 * sq * lo).max(-2.0 * sq * hi) + rng.random_range(0.01..2.0);
                let start = start_target.unwrap_or_else(|| rng.random_range(-4.0..0.0));
                let cst = start - (sq * lo + lin) * lo;
                (
                    SegmentForm::Quadratic { sq, lin, cst },
                    Some(start),
                    (sq * hi + lin) * hi + cst,
                )
            }
            _ => {
                // log_u >= 0 and log_omu <= 0 keep the derivative
                // log_u/u - log_omu/(1-u) non-negative.
                let mut log_u = rng.random_range(0.0..1.5);
                let mut log_omu = rng.random_range(-1.5..0.0);
                if hi >= 1.0 {
                    log_omu = 0.0; // would blow up at 1 otherwise
                }
                if lo == 0.0 && !opts.allow_log_at_zero {
                    log_u = 0.0;
                }
                let bare = |u: f64| {
                    let mut v = 0.0;
                    if log_u != 0.0 {
                        v += log_u * u.ln();
                    }
                    if log_omu != 0.0 {
                        v += log_omu * (1.0 - u).ln();
                    }
                    v
                };
                if lo == 0.0 && log_u != 0.0 {
                    // Unbounded below at 0: the constant floats freely.
                    let cst = rng.random_range(-2.0..2.0);
                    (
                        SegmentForm::LogForm { log_u, log_omu, cst },
                        None,
                        bare(hi) + cst,
                    )
                } else {
                    let start = start_target.unwrap_or_else(|| rng.random_range(-4.0..0.0));
                    let cst = start - bare(lo);
                    (
                        SegmentForm::LogForm { log_u, log_omu, cst },
                        Some(start),
                        bare(hi) + cst,
                    )
                }
            }
        };

        if i == 0 {
            at0 = Some(match start_value {
                None => ExtReal::NegInf,
                Some(v) => {
                    if opts.continuous_at_zero || rng.random_bool(0.5) {
                        ExtReal::finite(v)
                    } else {
                        ExtReal::finite(v - rng.random_range(0.05..1.0))
                    }
                }
            });
        }
        let hi_closed = last || rng.random_bool(0.5);
        let lo_closed = if i == 0 {
            true
        } else {
            !segments.last().map(|s: &Segment| s.hi_closed).unwrap()
        };
        segments.push(Segment::new(lo, hi, lo_closed, hi_closed, form));
        prev_end = Some(end_value);
    }
    // Fix up interior closures: each boundary owned exactly once.
    for i in 1..segments.len() {
        segments[i].lo_closed = !segments[i - 1].hi_closed;
    }
    segments[0].lo_closed = true;
    segments.last_mut().unwrap().hi_closed = true;

    let lim1 = prev_end.unwrap();
    let at1 = if opts.continuous_at_one {
        ExtReal::finite(lim1)
    } else {
        ExtReal::finite(lim1 + rng.random_range(0.05..1.0))
    };
    ScoreFn::new(segments, at0.unwrap(), at1, Direction::NonDecreasing)
        .expect("generator invariant: output is monotone non-decreasing")
}

/// A random non-increasing function, as the reflection of a non-decreasing
/// one; the continuity options apply after reflection.
pub fn monotone_nonincreasing(rng: &mut StdRng, opts: &GenOptions) -> ScoreFn {
    let mirrored = GenOptions {
        continuous_at_one: opts.continuous_at_zero,
        continuous_at_zero: opts.continuous_at_one,
        ..opts.clone()
    };
    monotone_nondecreasing(rng, &mirrored).reflect()
}

/// A random non-decreasing step function with up to `max_cuts` interior
/// cuts, continuous at both endpoints.
pub fn step_nondecreasing(rng: &mut StdRng, max_cuts: usize) -> ScoreFn {
    let n_cuts = rng.random_range(1..=max_cuts.max(1));
    let cuts = random_cuts(rng, n_cuts);
    let mut levels = Vec::with_capacity(cuts.len() + 1);
    let mut v = rng.random_range(-5.0..-2.0);
    for _ in 0..=cuts.len() {
        levels.push(v);
        v += rng.random_range(0.1..1.5);
    }
    ScoreFn::step(&cuts, &levels, Direction::NonDecreasing)
        .expect("sorted levels give a monotone step function")
}

fn random_cuts(rng: &mut StdRng, n: usize) -> Vec<f64> {
    // Jittered uniform partition keeps the cut points well separated.
    (0..n)
        .map(|i| {
            let base = (i + 1) as f64 / (n + 1) as f64;
            let jitter = 0.3 / (n + 1) as f64;
            base + rng.random_range(-jitter..jitter)
        })
        .collect()
}

fn random_jump(rng: &mut StdRng) -> f64 {
    if rng.random_bool(0.4) {
        0.0
    } else {
        rng.random_range(0.05..1.0)
    }
}
