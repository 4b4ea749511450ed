//! Scalar root finding, bracketing and golden-section search, plus an
//! extended-real type for conjugates that take the value `+∞`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{CfmmError, Result};

/// Real number extended with `±∞`.
///
/// Conjugate functions and dual functions leave their effective domain by
/// jumping to an infinite value. Keeping those cases as explicit variants means
/// optimization loops never see a raw `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Saturating addition. `+∞ + −∞` has no meaning and is reported as `None`.
    pub fn checked_add(self, other: ExtReal) -> Option<ExtReal> {
        use ExtReal::*;
        match (self, other) {
            (PosInf, NegInf) | (NegInf, PosInf) => None,
            (PosInf, _) | (_, PosInf) => Some(PosInf),
            (NegInf, _) | (_, NegInf) => Some(NegInf),
            (Finite(a), Finite(b)) => Some(Finite(a + b)),
        }
    }

    pub fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
        }
    }

    /// Multiplication by a nonnegative scalar with the convention `0·∞ = 0`
    /// (epi-multiplication at zero).
    pub fn scale(self, s: f64) -> ExtReal {
        debug_assert!(s >= 0.0);
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(s * v),
            _ if s == 0.0 => ExtReal::Finite(0.0),
            inf => inf,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Equal),
            (NegInf, _) | (_, PosInf) => Some(Less),
            (PosInf, _) | (_, NegInf) => Some(Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "+inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

/// Clamp to the finite range so that root finders never see `±inf`. NaN is
/// passed through and caught by the callers.
pub(crate) fn saturate(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else {
        v.clamp(-f64::MAX, f64::MAX)
    }
}

/// A sign-changing interval `[lo, hi]` with the function values at both ends.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Find a bracket for a nondecreasing function by stepping outward from `x0`.
/// The step doubles on every move.
pub(crate) fn bracket_increasing<F>(mut f: F, x0: f64, step: f64, max_moves: usize) -> Result<Bracket>
where
    F: FnMut(f64) -> f64,
{
    let mut f0 = f(x0);
    if f0.is_nan() {
        return Err(CfmmError::Numerical(format!("NaN while bracketing at {x0}")));
    }
    if f0 == 0.0 {
        return Ok(Bracket { lo: x0, hi: x0, f_lo: 0.0, f_hi: 0.0 });
    }
    let mut x = x0;
    let mut h = step;
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    for _ in 0..max_moves {
        let next = x + dir * h;
        let f_next = f(next);
        if f_next.is_nan() {
            return Err(CfmmError::Numerical(format!("NaN while bracketing at {next}")));
        }
        if (f_next >= 0.0) != (f0 >= 0.0) || f_next == 0.0 {
            return Ok(if dir > 0.0 {
                Bracket { lo: x, hi: next, f_lo: f0, f_hi: f_next }
            } else {
                Bracket { lo: next, hi: x, f_lo: f_next, f_hi: f0 }
            });
        }
        x = next;
        f0 = f_next;
        h *= 2.0;
    }
    Err(CfmmError::Numerical(format!(
        "failed to bracket root from {x0} after {max_moves} moves (last point {x}, value {f0})"
    )))
}

/// Brent's method on a sign-changing bracket. `xtol` is an absolute tolerance
/// on the abscissa; machine-precision relative spacing is always added.
pub(crate) fn brent<F>(mut f: F, br: Bracket, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b, mut fa, mut fb) = (br.lo, br.hi, br.f_lo, br.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return Err(CfmmError::Numerical(format!(
            "root not bracketed: f({a}) = {fa}, f({b}) = {fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(CfmmError::Numerical(format!("NaN during root finding at {b}")));
        }
    }
    Err(CfmmError::Numerical(format!(
        "root finder did not converge in {max_iter} iterations (bracket [{}, {}])",
        b.min(c),
        b.max(c)
    )))
}

/// Result of a golden-section maximization.
#[derive(Debug, Clone, Copy)]
pub struct GoldenMax {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize a unimodal function on `[lo, hi]` by golden-section search.
///
/// Stops when the bracket is narrower than `rel_tol · max(|x|, width_0 · 1e-3)`
/// or the interior values are no longer distinguishable. The endpoints are
/// compared against the interior best at the end, so maxima sitting on the
/// boundary are returned exactly.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64, max_iter: usize) -> Result<GoldenMax>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(CfmmError::Numerical(format!("invalid golden-section bracket [{lo}, {hi}]")));
    }
    let width0 = hi - lo;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut it = 0;
    while it < max_iter {
        let scale = x1.abs().max(x2.abs()).max(width0 * 1e-3);
        if b - a <= rel_tol * scale {
            break;
        }
        if f1.is_nan() || f2.is_nan() {
            return Err(CfmmError::Numerical(format!(
                "NaN in golden-section search on [{a}, {b}]"
            )));
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        it += 1;
    }
    let scale = x1.abs().max(x2.abs()).max(width0 * 1e-3);
    if b - a > rel_tol * scale {
        return Err(CfmmError::Numerical(format!(
            "golden-section search did not converge in {max_iter} iterations: bracket [{a}, {b}], width {}",
            b - a
        )));
    }
    let mut best = if f1 >= f2 { GoldenMax { x: x1, value: f1, iterations: it } } else { GoldenMax { x: x2, value: f2, iterations: it } };
    for end in [lo, hi] {
        let fe = f(end);
        if fe > best.value {
            best = GoldenMax { x: end, value: fe, iterations: it };
        }
    }
    Ok(best)
}
