//! Extended-real score values.
//!
//! Score functions map into `[-inf, inf)`: minus infinity is a legitimate
//! score (the log rule assigns it to a certain forecast that turns out
//! wrong) but plus infinity is never representable. Expected-score
//! arithmetic uses the convention `0 * (-inf) = 0`, which is what makes the
//! propriety inequality meaningful at `p = 0` and `p = 1`.

use std::fmt;

/// A score value: a finite real or minus infinity.
///
/// Positive infinity is unrepresentable by construction; [`ExtReal::finite`]
/// rejects non-finite floats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    /// Minus infinity. Declared first so the derived order puts it below
    /// every finite value.
    NegInf,
    /// An ordinary finite value.
    Finite(f64),
}

impl ExtReal {
    /// Wraps a finite value. Panics on NaN or infinities: those indicate a
    /// bug upstream, not a representable score.
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "ExtReal::finite needs a finite value, got {v}");
        ExtReal::Finite(v)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    /// The finite payload, if any.
    pub fn as_finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::NegInf => None,
        }
    }

    /// Collapses to an IEEE float (`-inf` for [`ExtReal::NegInf`]).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

    /// Multiplication by a non-negative scalar with `0 * (-inf) = 0`.
    ///
    /// For `k > 0` the result is `-inf` when `self` is; for `k = 0` it is
    /// exactly zero regardless of `self`.
    pub fn scaled(self, k: f64) -> Self {
        assert!(k >= 0.0, "scaled expects a non-negative factor, got {k}");
        if k == 0.0 {
            return ExtReal::Finite(0.0);
        }
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(k * v),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }

    /// `p*a + q*b` under the `0 * (-inf) = 0` convention. This is the shape
    /// of every expected-score computation.
    pub fn weighted_sum(p: f64, a: ExtReal, q: f64, b: ExtReal) -> ExtReal {
        a.scaled(p) + b.scaled(q)
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl From<ExtReal> for Extended {
    fn from(v: ExtReal) -> Extended {
        match v {
            ExtReal::NegInf => Extended::NegInf,
            ExtReal::Finite(x) => Extended::Finite(x),
        }
    }
}

/// A two-sided extended real.
///
/// Score values themselves never reach `+inf`, but derived quantities do:
/// one-sided limits of score functions, differences of two rules
/// (`finite - (-inf)`), and subgradient samples at the boundary. Those
/// computations run over `Extended` and convert back to [`ExtReal`] only
/// where the contract guarantees the positive branch is unreachable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Extended {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Extended {
    pub fn finite(v: f64) -> Self {
        assert!(v.is_finite(), "Extended::finite needs a finite value, got {v}");
        Extended::Finite(v)
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    /// Collapses to IEEE semantics.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInf => f64::NEG_INFINITY,
            Extended::Finite(v) => v,
            Extended::PosInf => f64::INFINITY,
        }
    }

    /// Converts to a score value; panics on `+inf`, which no score may take.
    pub fn expect_ext_real(self, what: &str) -> ExtReal {
        match self {
            Extended::NegInf => ExtReal::NegInf,
            Extended::Finite(v) => ExtReal::Finite(v),
            Extended::PosInf => panic!("{what}: +inf is outside the score codomain"),
        }
    }

    /// Multiplication by a non-negative scalar with `0 * (+/-inf) = 0`.
    pub fn scaled(self, k: f64) -> Self {
        assert!(k >= 0.0, "scaled expects a non-negative factor, got {k}");
        if k == 0.0 {
            return Extended::Finite(0.0);
        }
        match self {
            Extended::NegInf => Extended::NegInf,
            Extended::Finite(v) => Extended::Finite(k * v),
            Extended::PosInf => Extended::PosInf,
        }
    }

    /// `a - b` with the indeterminate case `inf - inf` returned as `None`.
    pub fn checked_sub(self, rhs: Extended) -> Option<Extended> {
        use Extended::*;
        match (self, rhs) {
            (NegInf, NegInf) | (PosInf, PosInf) => None,
            _ => Some(self + (-rhs)),
        }
    }
}

impl std::ops::Neg for Extended {
    type Output = Extended;

    fn neg(self) -> Extended {
        match self {
            Extended::NegInf => Extended::PosInf,
            Extended::Finite(v) => Extended::Finite(-v),
            Extended::PosInf => Extended::NegInf,
        }
    }
}

impl std::ops::Add for Extended {
    type Output = Extended;

    /// Panics on `(+inf) + (-inf)`; callers arrange never to mix opposite
    /// infinities (at most one component of a difference rule is infinite
    /// at any probe point).
    fn add(self, rhs: Extended) -> Extended {
        use Extended::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (NegInf, PosInf) | (PosInf, NegInf) => {
                panic!("indeterminate sum (+inf) + (-inf)")
            }
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => write!(f, "-inf"),
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::PosInf => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_neg_inf_is_zero() {
        assert_eq!(ExtReal::NegInf.scaled(0.0), ExtReal::Finite(0.0));
    }

    #[test]
    fn one_times_neg_inf_is_neg_inf() {
        assert_eq!(ExtReal::NegInf.scaled(1.0), ExtReal::NegInf);
        assert_eq!(ExtReal::NegInf.scaled(0.5), ExtReal::NegInf);
    }

    #[test]
    fn weighted_sum_drops_zero_weighted_infinity() {
        // p = 1 against F(1) = -inf: the (1-p) term vanishes exactly.
        let s = ExtReal::weighted_sum(1.0, ExtReal::finite(-2.0), 0.0, ExtReal::NegInf);
        assert_eq!(s, ExtReal::finite(-2.0));
        // p = 0.5 against -inf propagates.
        let s = ExtReal::weighted_sum(0.5, ExtReal::finite(-2.0), 0.5, ExtReal::NegInf);
        assert_eq!(s, ExtReal::NegInf);
    }

    #[test]
    fn ordering_puts_neg_inf_below_everything() {
        assert!(ExtReal::NegInf < ExtReal::finite(-1e300));
        assert!(ExtReal::finite(-1.0) < ExtReal::finite(0.0));
        assert!(Extended::NegInf < Extended::finite(0.0));
        assert!(Extended::finite(1e300) < Extended::PosInf);
    }

    #[test]
    #[should_panic]
    fn finite_rejects_nan() {
        let _ = ExtReal::finite(f64::NAN);
    }

    #[test]
    #[should_panic]
    fn finite_rejects_pos_inf() {
        let _ = ExtReal::finite(f64::INFINITY);
    }

    #[test]
    fn display_tokens() {
        assert_eq!(ExtReal::NegInf.to_string(), "-inf");
        assert_eq!(ExtReal::finite(0.25).to_string(), "0.25");
        assert_eq!(Extended::PosInf.to_string(), "+inf");
    }

    #[test]
    fn extended_difference_rules() {
        use Extended::*;
        assert_eq!(Finite(1.0).checked_sub(NegInf), Some(PosInf));
        assert_eq!(NegInf.checked_sub(Finite(1.0)), Some(NegInf));
        assert_eq!(NegInf.checked_sub(NegInf), None);
    }
}
