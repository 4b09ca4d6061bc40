//! The planar semilinear rational system
//!
//! ```text
//! x' = a x + b y + c
//! y' = (a' x + b' y + c') / (a'' x + b'' y + c'')
//! ```
//!
//! together with its non-triviality conditions, the four 2x2 determinants
//! that drive the folding, and the degeneracy test that collapses the folded
//! equation to first order.

use std::fmt;

use crate::scalar::{approx_eq, is_singular, Scalar, ScalarError};

/// Parameter names in canonical order: `a b c a' b' c' a'' b'' c''`.
pub const PARAM_NAMES: [&str; 9] = ["a", "b", "c", "ap", "bp", "cp", "app", "bpp", "cpp"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSystem {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub ap: Scalar,
    pub bp: Scalar,
    pub cp: Scalar,
    pub app: Scalar,
    pub bpp: Scalar,
    pub cpp: Scalar,
}

/// Float copy of the parameters used on hot iteration paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub ap: f64,
    pub bp: f64,
    pub cp: f64,
    pub app: f64,
    pub bpp: f64,
    pub cpp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    /// `b != 0`
    BZero,
    /// `|a'| + |a''| > 0`
    NoXInRatio,
    /// `|a''| + |b''| > 0`
    ConstantDenominator,
    /// `|a'| + |b'| + |c'| > 0`
    ZeroNumerator,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::BZero => "b ≠ 0",
            Violation::NoXInRatio => "|a′|+|a″| > 0",
            Violation::ConstantDenominator => "|a″|+|b″| > 0",
            Violation::ZeroNumerator => "|a′|+|b′|+|c′| > 0",
        };
        write!(f, "non-triviality condition violated: {s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Determinants {
    /// `a' b - a b'`
    pub dab_p: Scalar,
    /// `a'' b - a b''`
    pub dab_pp: Scalar,
    /// `b c' - b' c`
    pub dcb_p: Scalar,
    /// `b c'' - b'' c`
    pub dcb_pp: Scalar,
}

impl Determinants {
    pub fn any_degraded(&self) -> bool {
        [self.dab_p, self.dab_pp, self.dcb_p, self.dcb_pp].iter().any(Scalar::is_degraded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        PlanarPoint { x, y }
    }
}

/// The next iterate is undefined: the ratio's denominator vanishes at `point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForbiddenSet {
    pub point: PlanarPoint,
    pub denominator: f64,
}

/// Outcome of the three equalities `a'b = ab'`, `a''b = ab''`, `b''c = bc''`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyCheck {
    pub holds: bool,
    /// Set when at least one parameter is approximate and the equalities were
    /// tested with a relative tolerance.
    pub tolerance_based: bool,
    pub dab_p_zero: bool,
    pub dab_pp_zero: bool,
    pub dcb_pp_zero: bool,
    pub determinants: Determinants,
}

impl PlanarSystem {
    pub fn from_array(p: [Scalar; 9]) -> Self {
        let [a, b, c, ap, bp, cp, app, bpp, cpp] = p;
        PlanarSystem { a, b, c, ap, bp, cp, app, bpp, cpp }
    }

    pub fn to_array(&self) -> [Scalar; 9] {
        [self.a, self.b, self.c, self.ap, self.bp, self.cp, self.app, self.bpp, self.cpp]
    }

    pub fn is_exact(&self) -> bool {
        self.to_array().iter().all(Scalar::is_exact)
    }

    pub fn coeffs(&self) -> PlanarCoeffs {
        PlanarCoeffs {
            a: self.a.to_f64(),
            b: self.b.to_f64(),
            c: self.c.to_f64(),
            ap: self.ap.to_f64(),
            bp: self.bp.to_f64(),
            cp: self.cp.to_f64(),
            app: self.app.to_f64(),
            bpp: self.bpp.to_f64(),
            cpp: self.cpp.to_f64(),
        }
    }
}

/// Lists every non-triviality condition the system fails.
pub fn validate_system(sys: &PlanarSystem) -> Vec<Violation> {
    let mut out = Vec::new();
    if sys.b.is_zero() {
        out.push(Violation::BZero);
    }
    if sys.ap.is_zero() && sys.app.is_zero() {
        out.push(Violation::NoXInRatio);
    }
    if sys.app.is_zero() && sys.bpp.is_zero() {
        out.push(Violation::ConstantDenominator);
    }
    if sys.ap.is_zero() && sys.bp.is_zero() && sys.cp.is_zero() {
        out.push(Violation::ZeroNumerator);
    }
    out
}

// p q - r s
fn cross(p: &Scalar, q: &Scalar, r: &Scalar, s: &Scalar) -> Result<Scalar, ScalarError> {
    p.mul(q)?.sub(&r.mul(s)?)
}

pub fn determinants(sys: &PlanarSystem) -> Result<Determinants, ScalarError> {
    Ok(Determinants {
        dab_p: cross(&sys.ap, &sys.b, &sys.a, &sys.bp)?,
        dab_pp: cross(&sys.app, &sys.b, &sys.a, &sys.bpp)?,
        dcb_p: cross(&sys.b, &sys.cp, &sys.bp, &sys.c)?,
        dcb_pp: cross(&sys.b, &sys.cpp, &sys.bpp, &sys.c)?,
    })
}

pub fn degeneracy(sys: &PlanarSystem, rel_tol: f64) -> Result<DegeneracyCheck, ScalarError> {
    let determinants = determinants(sys)?;
    let eq = |l: Scalar, r: Scalar| -> Result<bool, ScalarError> { Ok(approx_eq(&l, &r, rel_tol)) };
    let dab_p_zero = eq(sys.ap.mul(&sys.b)?, sys.a.mul(&sys.bp)?)?;
    let dab_pp_zero = eq(sys.app.mul(&sys.b)?, sys.a.mul(&sys.bpp)?)?;
    let dcb_pp_zero = eq(sys.bpp.mul(&sys.c)?, sys.b.mul(&sys.cpp)?)?;
    Ok(DegeneracyCheck {
        holds: dab_p_zero && dab_pp_zero && dcb_pp_zero,
        tolerance_based: !sys.is_exact() || determinants.any_degraded(),
        dab_p_zero,
        dab_pp_zero,
        dcb_pp_zero,
        determinants,
    })
}

/// True iff `D'_ab = D''_ab = D''_cb = 0`: exactly for rational parameters,
/// to `rel_tol` otherwise.
pub fn check_degeneracy(sys: &PlanarSystem, rel_tol: f64) -> bool {
    degeneracy(sys, rel_tol).map(|d| d.holds).unwrap_or(false)
}

impl PlanarCoeffs {
    #[inline]
    pub fn step(&self, p: PlanarPoint) -> Result<PlanarPoint, ForbiddenSet> {
        let num = self.ap * p.x + self.bp * p.y + self.cp;
        let den = self.app * p.x + self.bpp * p.y + self.cpp;
        if is_singular(num, den) {
            return Err(ForbiddenSet { point: p, denominator: den });
        }
        Ok(PlanarPoint { x: self.a * p.x + self.b * p.y + self.c, y: num / den })
    }
}

/// One step of the planar map, in double precision.
pub fn step_planar(sys: &PlanarSystem, p: PlanarPoint) -> Result<PlanarPoint, ForbiddenSet> {
    sys.coeffs().step(p)
}
