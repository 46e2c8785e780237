//! Small dense polynomials over f64, used for exact-as-possible sign
//! analysis of segment derivatives.
//!
//! The derivative of a mixed segment form, multiplied by `u^2 (1-u)^2`,
//! is a polynomial of degree at most five. Monotonicity over an interval
//! reduces to the sign of that polynomial's minimum, which we find by
//! recursive critical-point isolation: the roots of the derivative split
//! the interval into monotone pieces, and bisection finds any sign change
//! inside a piece.

/// Evaluates `c[0] + c[1] x + c[2] x^2 + ...` by Horner's rule.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Coefficients of the derivative polynomial.
pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

/// Drops trailing coefficients that are negligible relative to the largest.
fn trim(coeffs: &[f64]) -> &[f64] {
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return &coeffs[..0];
    }
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= scale * 1e-14 {
        n -= 1;
    }
    &coeffs[..n]
}

/// Bisection for a root of `p` in `[lo, hi]`, assuming a sign change.
fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = eval(coeffs, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (flo < 0.0) == (fmid < 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots of `p` inside `[lo, hi]`, in increasing order.
///
/// Exact formulas handle degrees one and two; higher degrees recurse on the
/// derivative to isolate monotone pieces first. Repeated roots surface as a
/// single root; that is enough for extremum location.
pub fn roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let p = trim(coeffs);
    match p.len() {
        0 | 1 => Vec::new(),
        2 => {
            let r = -p[0] / p[1];
            if r >= lo && r <= hi {
                vec![r]
            } else {
                Vec::new()
            }
        }
        3 => {
            let (c, b, a) = (p[0], p[1], p[2]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return Vec::new();
            }
            let s = disc.sqrt();
            // The numerically stable pair of quadratic roots.
            let q = -0.5 * (b + b.signum() * s);
            let mut rs = vec![q / a];
            if q != 0.0 {
                rs.push(c / q);
            } else {
                rs.push(0.0);
            }
            rs.retain(|r| *r >= lo && *r <= hi && r.is_finite());
            rs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            rs.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + x.abs()));
            rs
        }
        _ => {
            let crit = roots_in(&derivative(p), lo, hi);
            let mut cuts = Vec::with_capacity(crit.len() + 2);
            cuts.push(lo);
            cuts.extend(crit);
            cuts.push(hi);
            let mut out = Vec::new();
            for w in cuts.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a >= b {
                    continue;
                }
                let (fa, fb) = (eval(p, a), eval(p, b));
                if fa == 0.0 {
                    out.push(a);
                } else if fa.signum() != fb.signum() {
                    out.push(bisect(p, a, b));
                }
            }
            if eval(p, hi) == 0.0 {
                out.push(hi);
            }
            out.sort_by(|x, y| x.partial_cmp(y).unwrap());
            out.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * (1.0 + x.abs()));
            out
        }
    }
}

/// Minimum of `p` over `[lo, hi]`: checked at the ends and at every
/// interior critical point.
pub fn min_on(coeffs: &[f64], lo: f64, hi: f64) -> f64 {
    let mut m = eval(coeffs, lo).min(eval(coeffs, hi));
    for r in roots_in(&derivative(coeffs), lo, hi) {
        m = m.min(eval(coeffs, r));
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_eval() {
        // 1 + 2x + 3x^2 at x = 2 -> 17
        assert_eq!(eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
    }

    #[test]
    fn quadratic_roots() {
        // (x - 0.25)(x - 0.75) = x^2 - x + 0.1875
        let r = roots_in(&[0.1875, -1.0, 1.0], 0.0, 1.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.25).abs() < 1e-12);
        assert!((r[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn quintic_roots() {
        // x(x-0.2)(x-0.4)(x-0.6)(x-0.8): five roots, four in (0,1) plus 0.
        let mut c = vec![1.0];
        for r in [0.0, 0.2, 0.4, 0.6, 0.8] {
            // multiply by (x - r)
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        let roots = roots_in(&c, -0.5, 1.0);
        assert_eq!(roots.len(), 5);
        for (got, want) in roots.iter().zip([0.0, 0.2, 0.4, 0.6, 0.8]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn minimum_of_shifted_parabola() {
        // (x - 0.3)^2 + 0.1 = x^2 - 0.6x + 0.19
        let m = min_on(&[0.19, -0.6, 1.0], 0.0, 1.0);
        assert!((m - 0.1).abs() < 1e-14);
    }

    #[test]
    fn minimum_at_interval_edge() {
        // increasing line on [0,1]: min at 0
        assert_eq!(min_on(&[-1.0, 2.0], 0.0, 1.0), -1.0);
    }
}
