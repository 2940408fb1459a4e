//! Bisection inversion of strictly decreasing scalar functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether an inversion target fell outside the evaluator's range on the bracket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Clamp {
    #[default]
    None,
    /// Target above `f(lo)`; the result is `lo`.
    Low,
    /// Target below `f(hi)`; the result is `hi`.
    High,
}

impl Clamp {
    pub fn as_str(self) -> &'static str {
        match self {
            Clamp::None => "none",
            Clamp::Low => "low",
            Clamp::High => "high",
        }
    }

    pub fn is_clamped(self) -> bool {
        self != Clamp::None
    }
}

impl std::str::FromStr for Clamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Clamp::None),
            "low" => Ok(Clamp::Low),
            "high" => Ok(Clamp::High),
            other => Err(Error::Parse(format!("unknown clamp flag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub p: f64,
    pub clamped: Clamp,
    pub iterations: u32,
}

const MAX_ITERATIONS: u32 = 200;

/// Finds `p` in `[lo, hi]` with `f(p) = target` for a decreasing `f`.
///
/// Targets outside `[f(hi), f(lo)]` clamp to the nearer bracket end and are
/// flagged. Only the bracket ends are checked for monotonicity.
pub fn invert_monotone_decreasing(
    target: f64,
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Inversion> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !target.is_finite() {
        return Err(Error::Numerical(format!("inversion target is {target}")));
    }
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo.is_finite() && f_hi.is_finite()) {
        return Err(Error::Numerical(format!("evaluator not finite at bracket ends: {f_lo}, {f_hi}")));
    }
    if f_lo < f_hi {
        return Err(Error::Monotonicity { lo, hi, f_lo, f_hi });
    }
    if target == f_lo {
        return Ok(Inversion { p: lo, clamped: Clamp::None, iterations: 0 });
    }
    if target == f_hi {
        return Ok(Inversion { p: hi, clamped: Clamp::None, iterations: 0 });
    }
    if target > f_lo {
        return Ok(Inversion { p: lo, clamped: Clamp::Low, iterations: 0 });
    }
    if target < f_hi {
        return Ok(Inversion { p: hi, clamped: Clamp::High, iterations: 0 });
    }

    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > tol && iterations < MAX_ITERATIONS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let v = f(mid);
        if !v.is_finite() {
            return Err(Error::Numerical(format!("evaluator returned {v} at {mid}")));
        }
        if v > target {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(Inversion { p: 0.5 * (a + b), clamped: Clamp::None, iterations })
}
