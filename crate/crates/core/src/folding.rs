//! Folding of the planar system into a scalar equation.
//!
//! Solving the affine component for `y_n` gives the passive back-map
//! `y_n = (x_{n+1} - a x_n - c) / b`. Substituting it into the ratio
//! component yields a second-order rational recursion in `x` alone:
//!
//! ```text
//!           A2 x1^2 + A11 x1 x0 + A1 x1 + A0 x0 + Ac
//! x2  =  ---------------------------------------------
//!                    B1 x1 + B0 x0 + Bc
//! ```
//!
//! When `D'_ab = D''_ab = D''_cb = 0` the `x0` terms vanish and, with
//! `r_n = x_{n+1}`, the recursion becomes `r' = a r + q + s / r`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::analysis::{classify_regime, RegimeClass};
use crate::scalar::{approx_eq, Scalar, ScalarError};
use crate::system::{degeneracy, determinants, validate_system, DegeneracyCheck, PlanarSystem, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FoldError {
    #[error("system fails non-triviality: {0:?}")]
    InvalidSystem(Vec<Violation>),
    #[error("folded equation has an identically zero denominator")]
    ZeroDenominator,
    #[error(transparent)]
    Arithmetic(#[from] ScalarError),
}

/// Coefficients of the folded second-order equation, plus `(a, b, c)` for the
/// back-map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderEq {
    pub a2: Scalar,
    pub a11: Scalar,
    pub a1: Scalar,
    pub a0: Scalar,
    pub a_const: Scalar,
    pub b1: Scalar,
    pub b0: Scalar,
    pub b_const: Scalar,
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
}

/// Float copy of a [`SecondOrderEq`] for iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderCoeffs {
    pub a2: f64,
    pub a11: f64,
    pub a1: f64,
    pub a0: f64,
    pub a_const: f64,
    pub b1: f64,
    pub b0: f64,
    pub b_const: f64,
}

impl SecondOrderEq {
    /// Rejects coefficient sets whose denominator is identically zero.
    #[allow(clippy::too_many_arguments)]
    pub fn new(numerator: [Scalar; 5], denominator: [Scalar; 3], abc: [Scalar; 3]) -> Result<Self, FoldError> {
        if denominator.iter().all(Scalar::is_zero) {
            return Err(FoldError::ZeroDenominator);
        }
        let [a2, a11, a1, a0, a_const] = numerator;
        let [b1, b0, b_const] = denominator;
        let [a, b, c] = abc;
        Ok(SecondOrderEq { a2, a11, a1, a0, a_const, b1, b0, b_const, a, b, c })
    }

    pub fn coeffs(&self) -> SecondOrderCoeffs {
        SecondOrderCoeffs {
            a2: self.a2.to_f64(),
            a11: self.a11.to_f64(),
            a1: self.a1.to_f64(),
            a0: self.a0.to_f64(),
            a_const: self.a_const.to_f64(),
            b1: self.b1.to_f64(),
            b0: self.b0.to_f64(),
            b_const: self.b_const.to_f64(),
        }
    }

    pub fn is_exact(&self) -> bool {
        [self.a2, self.a11, self.a1, self.a0, self.a_const, self.b1, self.b0, self.b_const].iter().all(Scalar::is_exact)
    }
}

impl SecondOrderCoeffs {
    /// `(numerator, denominator)` of the right-hand side at `(x_n, x_{n+1})`.
    #[inline]
    pub fn parts(&self, x0: f64, x1: f64) -> (f64, f64) {
        let num = self.a2 * x1 * x1 + self.a11 * x1 * x0 + self.a1 * x1 + self.a0 * x0 + self.a_const;
        let den = self.b1 * x1 + self.b0 * x0 + self.b_const;
        (num, den)
    }

    /// `x2 * den - num`, divided by `max(1, |x0|, |x1|, |x2|)^2`.
    pub fn scaled_residual(&self, x0: f64, x1: f64, x2: f64) -> f64 {
        let (num, den) = self.parts(x0, x1);
        let scale = 1f64.max(x0.abs()).max(x1.abs()).max(x2.abs());
        (x2 * den - num).abs() / (scale * scale)
    }
}

impl fmt::Display for SecondOrderEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "A2 = {}", self.a2)?;
        writeln!(f, "A11 = {}", self.a11)?;
        writeln!(f, "A1 = {}", self.a1)?;
        writeln!(f, "A0 = {}", self.a0)?;
        writeln!(f, "Aconst = {}", self.a_const)?;
        writeln!(f, "B1 = {}", self.b1)?;
        writeln!(f, "B0 = {}", self.b0)?;
        write!(f, "Bconst = {}", self.b_const)
    }
}

/// `r' = a r + q + s / r`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderMap {
    pub a: Scalar,
    pub q: Scalar,
    pub s: Scalar,
}

/// Float copy of a [`FirstOrderMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapCoeffs {
    pub a: f64,
    pub q: f64,
    pub s: f64,
}

impl FirstOrderMap {
    pub fn new(a: Scalar, q: Scalar, s: Scalar) -> Self {
        FirstOrderMap { a, q, s }
    }

    /// The `a = s = 1` family studied for chaos, parameterised by `q`.
    pub fn unit(q: f64) -> Self {
        FirstOrderMap { a: Scalar::ONE, q: Scalar::approx(q).expect("finite q"), s: Scalar::ONE }
    }

    pub fn coeffs(&self) -> MapCoeffs {
        MapCoeffs { a: self.a.to_f64(), q: self.q.to_f64(), s: self.s.to_f64() }
    }

    pub fn is_exact(&self) -> bool {
        self.a.is_exact() && self.q.is_exact() && self.s.is_exact()
    }
}

impl MapCoeffs {
    #[inline]
    pub fn apply(&self, r: f64) -> f64 {
        self.a * r + self.q + self.s / r
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        self.a - self.s / (r * r)
    }
}

/// The degeneracy equalities fail; carries the offending determinants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotDegenerate {
    pub check: DegeneracyCheck,
}

impl fmt::Display for NotDegenerate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.check.determinants;
        let mut failed = Vec::new();
        if !self.check.dab_p_zero {
            failed.push(format!("a′b = ab′ fails (D′ab = {})", d.dab_p));
        }
        if !self.check.dab_pp_zero {
            failed.push(format!("a″b = ab″ fails (D″ab = {})", d.dab_pp));
        }
        if !self.check.dcb_pp_zero {
            failed.push(format!("b″c = bc″ fails (D″cb = {})", d.dcb_pp));
        }
        write!(f, "system is not degenerate: {}", failed.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReduceError {
    #[error("{0}")]
    NotDegenerate(Box<NotDegenerate>),
    #[error("b'' = 0: the first-order reduction divides by b''")]
    DivisionByZero,
    #[error(transparent)]
    Arithmetic(ScalarError),
}

impl From<ScalarError> for ReduceError {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::DivisionByZero => ReduceError::DivisionByZero,
            other => ReduceError::Arithmetic(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropositionPart {
    A,
    B,
    C,
    D,
    E,
}

impl fmt::Display for PropositionPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            PropositionPart::A => 'a',
            PropositionPart::B => 'b',
            PropositionPart::C => 'c',
            PropositionPart::D => 'd',
            PropositionPart::E => 'e',
        };
        write!(f, "{c}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropositionReport {
    pub a_is_one: bool,
    pub bpp_equals_b_dcb_p: bool,
    pub q: Scalar,
    pub s: Scalar,
    pub q_negative: bool,
    pub regime: RegimeClass,
    /// Empty unless all three hypotheses (`a = 1`, `b'' = b D'_cb`, `q < 0`) hold.
    pub applicable_parts: BTreeSet<PropositionPart>,
}

impl PropositionReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.a_is_one && self.bpp_equals_b_dcb_p && self.q_negative
    }

    pub fn parts_label(&self) -> String {
        let parts: Vec<String> = self.applicable_parts.iter().map(ToString::to_string).collect();
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join(",")
        }
    }
}

pub fn fold(sys: &PlanarSystem) -> Result<SecondOrderEq, FoldError> {
    let violations = validate_system(sys);
    if !violations.is_empty() {
        return Err(FoldError::InvalidSystem(violations));
    }
    let d = determinants(sys)?;
    let PlanarSystem { a, b, c, bp, bpp, .. } = *sys;
    let a2 = a.mul(&bpp)?;
    let a11 = a.mul(&d.dab_pp)?;
    let a1 = a.mul(&d.dcb_pp)?.add(&b.mul(&bp)?)?.add(&c.mul(&bpp)?)?;
    let a0 = b.mul(&d.dab_p)?.add(&c.mul(&d.dab_pp)?)?;
    let a_const = b.mul(&d.dcb_p)?.add(&c.mul(&d.dcb_pp)?)?;
    SecondOrderEq::new([a2, a11, a1, a0, a_const], [bpp, d.dab_pp, d.dcb_pp], [a, b, c])
}

/// `y_n = (x_{n+1} - a x_n - c) / b`
pub fn back_map_y(eq: &SecondOrderEq, x_n: f64, x_next: f64) -> f64 {
    (x_next - eq.a.to_f64() * x_n - eq.c.to_f64()) / eq.b.to_f64()
}

/// Initial values `(x0, x1)` of the folded equation for the planar start `(x0, y0)`.
pub fn initial_values(sys: &PlanarSystem, x0: f64, y0: f64) -> (f64, f64) {
    let k = sys.coeffs();
    (x0, k.a * x0 + k.b * y0 + k.c)
}

pub fn reduce_first_order(sys: &PlanarSystem, rel_tol: f64) -> Result<FirstOrderMap, ReduceError> {
    if sys.bpp.is_zero() {
        return Err(ReduceError::DivisionByZero);
    }
    let check = degeneracy(sys, rel_tol)?;
    if !check.holds {
        return Err(ReduceError::NotDegenerate(Box::new(NotDegenerate { check })));
    }
    let q = sys.c.add(&sys.b.mul(&sys.bp)?.div(&sys.bpp)?)?;
    let s = sys.b.mul(&check.determinants.dcb_p)?.div(&sys.bpp)?;
    Ok(FirstOrderMap { a: sys.a, q, s })
}

pub fn check_proposition(sys: &PlanarSystem, rel_tol: f64) -> Result<PropositionReport, ReduceError> {
    let map = reduce_first_order(sys, rel_tol)?;
    let d = determinants(sys)?;
    let a_is_one = approx_eq(&sys.a, &Scalar::ONE, rel_tol);
    let bpp_equals_b_dcb_p = approx_eq(&sys.bpp, &sys.b.mul(&d.dcb_p)?, rel_tol);
    let q_negative = map.q.to_f64() < 0.0;
    let regime = classify_regime(map.q.to_f64(), rel_tol);
    let applicable_parts =
        if a_is_one && bpp_equals_b_dcb_p && q_negative { regime.proposition_parts() } else { BTreeSet::new() };
    Ok(PropositionReport { a_is_one, bpp_equals_b_dcb_p, q: map.q, s: map.s, q_negative, regime, applicable_parts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::tests::{modified_40_49, q, type_40_37, type_40_49, z};
    use crate::system::{step_planar, PlanarPoint};
    use PropositionPart::*;

    #[test]
    fn fold_worked_system() {
        let eq = fold(&type_40_49()).unwrap();
        let got = [eq.a2, eq.a11, eq.a1, eq.a0, eq.a_const, eq.b1, eq.b0, eq.b_const];
        assert_eq!(got, [z(6), z(0), z(-9), z(0), z(6), z(6), z(0), z(0)]);
        assert!(eq.is_exact());
    }

    #[test]
    fn fold_without_linear_x_term() {
        let mut sys = type_40_49();
        sys.a = z(0);
        let eq = fold(&sys).unwrap();
        assert!(eq.a2.is_zero() && eq.a11.is_zero());
    }

    #[test]
    fn fold_rejects_invalid_systems() {
        let mut sys = type_40_49();
        sys.b = z(0);
        assert_eq!(fold(&sys), Err(FoldError::InvalidSystem(vec![Violation::BZero])));
        assert_eq!(SecondOrderEq::new([z(1); 5], [z(0); 3], [z(1); 3]), Err(FoldError::ZeroDenominator));
    }

    #[test]
    fn fold_matches_two_planar_steps() {
        // non-degenerate system, checked against direct simulation
        let sys = PlanarSystem::from_array([q(1, 2), z(3), z(-1), z(2), q(-1, 3), z(1), z(1), z(2), q(7, 2)]);
        let eq = fold(&sys).unwrap();
        let k = eq.coeffs();
        let mut p = PlanarPoint::new(0.3, -0.2);
        for _ in 0..20 {
            let p1 = step_planar(&sys, p).unwrap();
            let p2 = step_planar(&sys, p1).unwrap();
            assert!(k.scaled_residual(p.x, p1.x, p2.x) < 1e-12);
            assert!((back_map_y(&eq, p.x, p1.x) - p.y).abs() < 1e-12);
            p = p1;
        }
    }

    #[test]
    fn back_map_cases() {
        let eq = fold(&type_40_49()).unwrap();
        assert_eq!(back_map_y(&eq, 1.0, 0.5), 0.75);
        assert_eq!(back_map_y(&eq, 0.5, 1.0), 1.25);
        let ident = SecondOrderEq::new([z(0); 5], [z(1), z(0), z(0)], [z(0), z(1), z(0)]).unwrap();
        assert_eq!(back_map_y(&ident, 3.0, -7.5), -7.5);
    }

    #[test]
    fn initial_value_transfer() {
        assert_eq!(initial_values(&type_40_49(), 1.0, 0.75), (1.0, 0.5));
        let mut sys = type_40_49();
        sys.c = z(0);
        assert_eq!(initial_values(&sys, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn reductions_of_worked_systems() {
        let m = reduce_first_order(&type_40_49(), 1e-12).unwrap();
        assert_eq!((m.a, m.q, m.s), (z(1), q(-3, 2), z(1)));
        let m = reduce_first_order(&modified_40_49(), 1e-12).unwrap();
        assert_eq!((m.a, m.q, m.s), (z(1), q(-11, 6), z(1)));
        let m = reduce_first_order(&type_40_37(), 1e-12).unwrap();
        assert_eq!((m.a, m.q, m.s), (z(1), q(-9, 5), z(1)));
    }

    #[test]
    fn reduction_errors() {
        let mut sys = type_40_49();
        sys.ap = q(76, 100);
        let e = reduce_first_order(&sys, 1e-12).unwrap_err();
        let ReduceError::NotDegenerate(nd) = e else { panic!("{e:?}") };
        assert_eq!(nd.check.determinants.dab_p, q(1, 50));
        assert!(nd.to_string().contains("a′b = ab′"));
        let mut sys = type_40_49();
        sys.bpp = z(0);
        assert_eq!(reduce_first_order(&sys, 1e-12), Err(ReduceError::DivisionByZero));
    }

    #[test]
    fn proposition_reports() {
        let r = check_proposition(&type_40_49(), 1e-12).unwrap();
        assert!(r.a_is_one && r.bpp_equals_b_dcb_p && r.q_negative);
        assert_eq!(r.applicable_parts, [A, B].into());
        assert_eq!(r.parts_label(), "a,b");
        let r = check_proposition(&modified_40_49(), 1e-12).unwrap();
        assert_eq!(r.applicable_parts, [A, D, E].into());
        let r = check_proposition(&type_40_37(), 1e-12).unwrap();
        assert_eq!(r.applicable_parts, [A, D, E].into());
        // q = c + b b'/b'' = -1 with s = 1: degenerate by construction
        let sys = PlanarSystem::from_array([z(1), z(1), z(-2), z(2), z(2), z(-2), z(2), z(2), z(-4)]);
        let r = check_proposition(&sys, 1e-12).unwrap();
        assert_eq!((r.q, r.s), (z(-1), z(1)));
        assert_eq!(r.applicable_parts, [A].into());
    }

    #[test]
    fn proposition_needs_its_hypotheses() {
        // a = 2 keeps degeneracy (a'b = ab') but breaks a = 1
        let sys = PlanarSystem::from_array([z(2), z(1), z(-2), z(2), z(1), z(1), z(4), z(2), z(-4)]);
        let r = check_proposition(&sys, 1e-12).unwrap();
        assert!(!r.a_is_one);
        assert!(r.applicable_parts.is_empty());
        assert_eq!(r.parts_label(), "none");
    }

    #[test]
    fn exact_s_is_one_when_bpp_matches() {
        let r = check_proposition(&type_40_37(), 1e-12).unwrap();
        assert!(r.bpp_equals_b_dcb_p);
        assert_eq!(r.s, Scalar::ONE);
    }
}
