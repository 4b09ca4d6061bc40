//! Two-level number tower: exact rationals over `i128` and finite doubles.
//!
//! Exact values stay exact under `+ - * /` and under `sqrt` of perfect
//! squares. Anything that touches an [`Scalar::Approx`] becomes approximate.
//! When exact integer arithmetic would overflow the operation falls back to
//! floating point and marks the result as `degraded`.

use std::cmp::Ordering;
use std::fmt;

use num_integer::{Integer, Roots};
use thiserror::Error;

/// Relative threshold under which a denominator is treated as zero.
///
/// Shared by [`Scalar::div`], the planar step and every orbit iterator.
pub const SINGULARITY_EPS: f64 = 1e-12;

/// Default relative tolerance for approximate comparisons.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// True when `num / den` is too close to a pole to be evaluated.
#[inline]
pub fn is_singular(num: f64, den: f64) -> bool {
    den.abs() < SINGULARITY_EPS * num.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    NegativeSqrt,
    #[error("arithmetic overflow")]
    Overflow,
}

/// Reduced fraction with a positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    /// Builds `num / den` in lowest terms. Returns `None` for a zero
    /// denominator or when normalising the sign overflows.
    pub fn new(num: i128, den: i128) -> Option<Rational> {
        if den == 0 {
            return None;
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = num.checked_neg()?;
            den = den.checked_neg()?;
        }
        Some(Rational { num, den })
    }

    pub fn from_integer(n: i128) -> Rational {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_neg(&self) -> Option<Rational> {
        Some(Rational { num: self.num.checked_neg()?, den: self.den })
    }

    pub fn checked_add(&self, rhs: &Rational) -> Option<Rational> {
        // a/b + c/d = (a*(d/g) + c*(b/g)) / (b/g*d)
        let g = self.den.gcd(&rhs.den);
        let lhs_scale = rhs.den / g;
        let rhs_scale = self.den / g;
        let num = self.num.checked_mul(lhs_scale)?.checked_add(rhs.num.checked_mul(rhs_scale)?)?;
        let den = self.den.checked_mul(lhs_scale)?;
        Rational::new(num, den)
    }

    pub fn checked_sub(&self, rhs: &Rational) -> Option<Rational> {
        self.checked_add(&rhs.checked_neg()?)
    }

    pub fn checked_mul(&self, rhs: &Rational) -> Option<Rational> {
        let g1 = self.num.gcd(&rhs.den);
        let g2 = rhs.num.gcd(&self.den);
        let (g1, g2) = (g1.max(1), g2.max(1));
        let num = (self.num / g1).checked_mul(rhs.num / g2)?;
        let den = (self.den / g2).checked_mul(rhs.den / g1)?;
        Rational::new(num, den)
    }

    /// `None` on overflow; callers check for a zero divisor first.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Rational> {
        if rhs.is_zero() {
            return None;
        }
        let recip = Rational::new(rhs.den, rhs.num)?;
        self.checked_mul(&recip)
    }

    /// Exact square root when numerator and denominator are perfect squares.
    pub fn perfect_sqrt(&self) -> Option<Rational> {
        if self.num < 0 {
            return None;
        }
        let n = self.num.sqrt();
        let d = self.den.sqrt();
        if n * n == self.num && d * d == self.den {
            Some(Rational { num: n, den: d })
        } else {
            None
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        // Cross-multiplication can overflow; fall back to floats for huge values.
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(l), Some(r)) => l.cmp(&r),
            _ => self.to_f64().total_cmp(&other.to_f64()),
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
}

/// A real parameter value: exact rational or finite double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    /// `degraded` is set when the value came from an exact computation that
    /// overflowed, and is inherited by anything computed from it.
    Approx {
        value: f64,
        degraded: bool,
    },
}

impl Scalar {
    pub const ZERO: Scalar = Scalar::Exact(Rational::ZERO);
    pub const ONE: Scalar = Scalar::Exact(Rational::ONE);

    pub fn integer(n: i128) -> Scalar {
        Scalar::Exact(Rational::from_integer(n))
    }

    pub fn ratio(num: i128, den: i128) -> Result<Scalar, ScalarError> {
        Rational::new(num, den).map(Scalar::Exact).ok_or(ScalarError::DivisionByZero)
    }

    /// Wraps a float; non-finite values are rejected.
    pub fn approx(value: f64) -> Result<Scalar, ScalarError> {
        if value.is_finite() {
            Ok(Scalar::Approx { value, degraded: false })
        } else {
            Err(ScalarError::Overflow)
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Approx { value, .. } => *value,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn is_degraded(&self) -> bool {
        matches!(self, Scalar::Approx { degraded: true, .. })
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            Scalar::Exact(r) => Some(*r),
            Scalar::Approx { .. } => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx { value, .. } => *value == 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        if self.to_f64() < 0.0 {
            self.neg().unwrap_or(*self)
        } else {
            *self
        }
    }

    fn inexact(value: f64, degraded: bool) -> Result<Scalar, ScalarError> {
        if value.is_finite() {
            Ok(Scalar::Approx { value, degraded })
        } else {
            Err(ScalarError::Overflow)
        }
    }

    pub fn add(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        scalar_arith(ArithOp::Add, self, rhs)
    }

    pub fn sub(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        scalar_arith(ArithOp::Sub, self, rhs)
    }

    pub fn mul(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        scalar_arith(ArithOp::Mul, self, rhs)
    }

    pub fn div(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        scalar_arith(ArithOp::Div, self, rhs)
    }

    pub fn neg(&self) -> Result<Scalar, ScalarError> {
        scalar_arith(ArithOp::Neg, self, &Scalar::ZERO)
    }

    pub fn sqrt(&self) -> Result<Scalar, ScalarError> {
        scalar_sqrt(self)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::integer(n as i128)
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Exact(r)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Approx { value, .. } => write!(f, "{value}"),
        }
    }
}

/// Applies `op` to two scalars. `rhs` is ignored for [`ArithOp::Neg`].
pub fn scalar_arith(op: ArithOp, lhs: &Scalar, rhs: &Scalar) -> Result<Scalar, ScalarError> {
    if let (Scalar::Exact(l), Scalar::Exact(r)) = (lhs, rhs) {
        let exact = match op {
            ArithOp::Add => l.checked_add(r),
            ArithOp::Sub => l.checked_sub(r),
            ArithOp::Mul => l.checked_mul(r),
            ArithOp::Neg => l.checked_neg(),
            ArithOp::Div => {
                if r.is_zero() {
                    return Err(ScalarError::DivisionByZero);
                }
                l.checked_div(r)
            }
        };
        if let Some(v) = exact {
            return Ok(Scalar::Exact(v));
        }
        // overflow: degrade to floating point
        return float_arith(op, l.to_f64(), r.to_f64(), true);
    }
    let degraded = lhs.is_degraded() || (op != ArithOp::Neg && rhs.is_degraded());
    float_arith(op, lhs.to_f64(), rhs.to_f64(), degraded)
}

fn float_arith(op: ArithOp, l: f64, r: f64, degraded: bool) -> Result<Scalar, ScalarError> {
    let v = match op {
        ArithOp::Add => l + r,
        ArithOp::Sub => l - r,
        ArithOp::Mul => l * r,
        ArithOp::Neg => -l,
        ArithOp::Div => {
            if is_singular(l, r) {
                return Err(ScalarError::DivisionByZero);
            }
            l / r
        }
    };
    Scalar::inexact(v, degraded)
}

pub fn scalar_sqrt(x: &Scalar) -> Result<Scalar, ScalarError> {
    match x {
        Scalar::Exact(r) => {
            if r.numer() < 0 {
                return Err(ScalarError::NegativeSqrt);
            }
            match r.perfect_sqrt() {
                Some(root) => Ok(Scalar::Exact(root)),
                None => Scalar::inexact(r.to_f64().sqrt(), false),
            }
        }
        Scalar::Approx { value, degraded } => {
            if *value < 0.0 {
                return Err(ScalarError::NegativeSqrt);
            }
            Scalar::inexact(value.sqrt(), *degraded)
        }
    }
}

/// `|lhs - rhs| <= rel_tol * max(1, |lhs|, |rhs|)`; exact pairs compare exactly.
pub fn approx_eq(lhs: &Scalar, rhs: &Scalar, rel_tol: f64) -> bool {
    if let (Scalar::Exact(l), Scalar::Exact(r)) = (lhs, rhs) {
        return l == r;
    }
    let (l, r) = (lhs.to_f64(), rhs.to_f64());
    (l - r).abs() <= rel_tol * 1f64.max(l.abs()).max(r.abs())
}

/// Formats a double with 17 significant digits in positional notation,
/// switching to exponent form outside a readable range.
pub fn format_sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    // -0.0 prints as 0
    let x = if x == 0.0 { 0.0 } else { x };
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-6..=20).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}.0", digits, "0".repeat(point as usize - digits.len()))
    } else {
        let (int, frac) = digits.split_at(point as usize);
        format!("{int}.{frac}")
    };
    format!("{sign}{body}")
}
