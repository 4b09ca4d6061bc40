//! Orbit iteration for the planar map, the folded second-order equation and
//! the first-order map.
//!
//! Iteration runs in `f64` regardless of whether the parameters are exact.
//! [`iterate_first_order_exact`] is a short-horizon rational oracle used to
//! check the float path.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

use crate::folding::{FirstOrderMap, MapCoeffs, SecondOrderEq};
use crate::scalar::{is_singular, Rational};
use crate::system::{PlanarPoint, PlanarSystem};

/// Orbits whose state exceeds this magnitude are reported as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Longest horizon accepted by the exact oracle.
pub const EXACT_STEP_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Stepping from index `n` hit a vanishing denominator.
    ForbiddenSet(usize),
    /// Stepping from index `n` left the divergence bound.
    Diverged(usize),
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => write!(f, "completed"),
            Termination::ForbiddenSet(n) => write!(f, "forbidden set reached at n={n}"),
            Termination::Diverged(n) => write!(f, "diverged after n={n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    /// `points[n]` is the state at index `n`.
    pub points: Vec<PlanarPoint>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarOrbit {
    pub values: Vec<f64>,
    pub termination: Termination,
}

#[inline]
fn escaped(v: f64) -> bool {
    !(v.abs() <= DIVERGENCE_BOUND)
}

pub fn iterate_planar(sys: &PlanarSystem, start: PlanarPoint, n_steps: usize) -> Orbit {
    let k = sys.coeffs();
    let mut points = Vec::with_capacity(n_steps.saturating_add(1).min(1 << 20));
    points.push(start);
    let mut p = start;
    for n in 0..n_steps {
        match k.step(p) {
            Err(_) => return Orbit { points, termination: Termination::ForbiddenSet(n) },
            Ok(next) if escaped(next.x) || escaped(next.y) => {
                return Orbit { points, termination: Termination::Diverged(n) }
            }
            Ok(next) => {
                points.push(next);
                p = next;
            }
        }
    }
    Orbit { points, termination: Termination::Completed }
}

/// Iterates the folded equation from `(x0, x1)`, appending `n_steps` values.
pub fn iterate_second_order(eq: &SecondOrderEq, x0: f64, x1: f64, n_steps: usize) -> ScalarOrbit {
    let k = eq.coeffs();
    let mut values = Vec::with_capacity(n_steps.saturating_add(2).min(1 << 20));
    values.push(x0);
    values.push(x1);
    let (mut prev, mut cur) = (x0, x1);
    for n in 0..n_steps {
        let (num, den) = k.parts(prev, cur);
        if is_singular(num, den) {
            return ScalarOrbit { values, termination: Termination::ForbiddenSet(n) };
        }
        let next = num / den;
        if escaped(next) {
            return ScalarOrbit { values, termination: Termination::Diverged(n) };
        }
        values.push(next);
        prev = cur;
        cur = next;
    }
    ScalarOrbit { values, termination: Termination::Completed }
}

#[inline]
pub(crate) fn first_order_step(k: &MapCoeffs, r: f64) -> Result<f64, Termination> {
    if is_singular(k.s, r) {
        return Err(Termination::ForbiddenSet(0));
    }
    let next = k.apply(r);
    if escaped(next) {
        return Err(Termination::Diverged(0));
    }
    Ok(next)
}

pub(crate) fn at(t: Termination, n: usize) -> Termination {
    match t {
        Termination::ForbiddenSet(_) => Termination::ForbiddenSet(n),
        Termination::Diverged(_) => Termination::Diverged(n),
        Termination::Completed => Termination::Completed,
    }
}

pub fn iterate_first_order(map: &FirstOrderMap, r0: f64, n_steps: usize) -> ScalarOrbit {
    let k = map.coeffs();
    let mut values = Vec::with_capacity(n_steps.saturating_add(1).min(1 << 20));
    values.push(r0);
    let mut r = r0;
    for n in 0..n_steps {
        match first_order_step(&k, r) {
            Ok(next) => {
                values.push(next);
                r = next;
            }
            Err(t) => return ScalarOrbit { values, termination: at(t, n) },
        }
    }
    ScalarOrbit { values, termination: Termination::Completed }
}

/// Summary of a long orbit without storing it.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitStats {
    /// Number of values seen, including `r0`.
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub nonpositive: usize,
    pub last: VecDeque<f64>,
    pub termination: Termination,
}

/// Statistics-only iteration for runs too long to store.
pub fn first_order_stats(map: &FirstOrderMap, r0: f64, n_steps: usize, keep_last: usize) -> OrbitStats {
    let k = map.coeffs();
    let mut stats = OrbitStats {
        count: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        nonpositive: 0,
        last: VecDeque::with_capacity(keep_last + 1),
        termination: Termination::Completed,
    };
    let record = |v: f64, s: &mut OrbitStats| {
        s.count += 1;
        s.min = s.min.min(v);
        s.max = s.max.max(v);
        if v <= 0.0 {
            s.nonpositive += 1;
        }
        if keep_last > 0 {
            if s.last.len() == keep_last {
                s.last.pop_front();
            }
            s.last.push_back(v);
        }
    };
    record(r0, &mut stats);
    let mut r = r0;
    for n in 0..n_steps {
        match first_order_step(&k, r) {
            Ok(next) => {
                record(next, &mut stats);
                r = next;
            }
            Err(t) => {
                stats.termination = at(t, n);
                break;
            }
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExactIterError {
    #[error("map parameters and r0 must all be exact")]
    NotExact,
    #[error("exact iteration is capped at {EXACT_STEP_CAP} steps, {0} requested")]
    HorizonTooLong(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactStop {
    Completed,
    /// Step from index `n` overflowed 128-bit arithmetic.
    Overflow(usize),
    /// `r_n = 0`.
    ForbiddenSet(usize),
}

/// Exact prefix of an orbit; `values[0]` is `r0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOrbit {
    pub values: Vec<Rational>,
    pub stop: ExactStop,
}

/// Rational iteration of `r' = a r + q + s / r`, aborting with the partial
/// sequence on overflow.
pub fn iterate_first_order_exact(
    map: &FirstOrderMap,
    r0: Rational,
    n_steps: usize,
) -> Result<ExactOrbit, ExactIterError> {
    if n_steps > EXACT_STEP_CAP {
        return Err(ExactIterError::HorizonTooLong(n_steps));
    }
    let (Some(a), Some(q), Some(s)) = (map.a.as_rational(), map.q.as_rational(), map.s.as_rational()) else {
        return Err(ExactIterError::NotExact);
    };
    let mut values = vec![r0];
    let mut r = r0;
    for n in 0..n_steps {
        if r.is_zero() {
            return Ok(ExactOrbit { values, stop: ExactStop::ForbiddenSet(n) });
        }
        let next = a
            .checked_mul(&r)
            .and_then(|ar| ar.checked_add(&q))
            .and_then(|t| Some((t, s.checked_div(&r)?)))
            .and_then(|(t, sr)| t.checked_add(&sr));
        match next {
            Some(v) => {
                values.push(v);
                r = v;
            }
            None => return Ok(ExactOrbit { values, stop: ExactStop::Overflow(n) }),
        }
    }
    Ok(ExactOrbit { values, stop: ExactStop::Completed })
}
