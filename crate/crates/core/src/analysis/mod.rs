//! Cycles, stability and regimes of the first-order map `r' = a r + q + s/r`.

mod bifurcation;
mod lyapunov;
mod search;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::dynamics::Termination;
use crate::folding::{FirstOrderMap, MapCoeffs, PropositionPart};
use crate::scalar::{approx_eq, format_sig17, Scalar, ScalarError};

pub use bifurcation::{bifurcation_scan, BifurcationConfig, BifurcationRow, R0Policy};
pub use lyapunov::lyapunov;
pub use search::{detect_cycle, find_period_p_points, CycleDetection, PeriodScan};

/// Default interval searched for cycle points.
pub const DEFAULT_INTERVAL: (f64, f64) = (0.05, 5.0);

const SUPERSTABLE_EPS: f64 = 1e-9;
const NEUTRAL_EPS: f64 = 1e-9;
/// Tolerance for confirming the closed-form cycles by direct iteration.
const CLOSED_FORM_CHECK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("q = {0} is outside the regime required here")]
    OutOfRegime(f64),
    #[error("map needs a = s = 1 (got a = {a}, s = {s})")]
    NotUnitMap { a: f64, s: f64 },
    #[error("no real nonzero fixed point")]
    NoFixedPoint,
    #[error("orbit terminated: {0}")]
    OrbitTerminated(Termination),
    #[error("|f'(r)| underflows at step {step} (r = {r})")]
    DerivativeSingular { step: usize, r: f64 },
    #[error("closed-form cycle failed verification (residual {residual:e})")]
    VerificationFailed { residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Arithmetic(#[from] ScalarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Superstable,
    Stable,
    Neutral,
    Unstable,
}

impl Stability {
    pub fn from_multiplier(m: f64) -> Stability {
        let mag = m.abs();
        if mag < SUPERSTABLE_EPS {
            Stability::Superstable
        } else if (mag - 1.0).abs() <= NEUTRAL_EPS {
            Stability::Neutral
        } else if mag < 1.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Superstable => "superstable",
            Stability::Stable => "stable",
            Stability::Neutral => "neutral",
            Stability::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    /// Minimal period.
    pub period: usize,
    pub points: Vec<f64>,
    /// Product of `f'` over the cycle.
    pub multiplier: f64,
    pub stability: Stability,
}

impl CycleReport {
    pub(crate) fn from_points(k: &MapCoeffs, points: Vec<f64>) -> CycleReport {
        let multiplier = points.iter().map(|r| k.derivative(*r)).product();
        CycleReport { period: points.len(), points, multiplier, stability: Stability::from_multiplier(multiplier) }
    }

    /// Largest `|f(points[i]) - points[i+1]|` around the cycle.
    pub fn closure_error(&self, map: &FirstOrderMap) -> f64 {
        let k = map.coeffs();
        let p = self.points.len();
        (0..p).map(|i| (k.apply(self.points[i]) - self.points[(i + 1) % p]).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts: Vec<String> = self.points.iter().map(|v| format_sig17(*v)).collect();
        writeln!(f, "period={}", self.period)?;
        writeln!(f, "points={}", pts.join(","))?;
        writeln!(f, "multiplier={}", format_sig17(self.multiplier))?;
        write!(f, "stability={}", self.stability)
    }
}

/// Regime flags of the `a = s = 1` map as a function of `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegimeClass {
    /// `-2 < q < 0`
    pub bounded_positive: bool,
    /// `-sqrt(5/2) < q < -sqrt(2)`
    pub stable_two_cycle: bool,
    /// `q = -sqrt(3)` to tolerance
    pub period_three: bool,
    /// `-2 < q <= -sqrt(3)`
    pub all_periods: bool,
    /// `-2 < q < -sqrt(3)`
    pub li_yorke_chaos: bool,
}

impl RegimeClass {
    pub fn proposition_parts(&self) -> BTreeSet<PropositionPart> {
        let mut parts = BTreeSet::new();
        for (flag, part) in [
            (self.bounded_positive, PropositionPart::A),
            (self.stable_two_cycle, PropositionPart::B),
            (self.period_three, PropositionPart::C),
            (self.all_periods, PropositionPart::D),
            (self.li_yorke_chaos, PropositionPart::E),
        ] {
            if flag {
                parts.insert(part);
            }
        }
        parts
    }

    pub fn flag_names(&self) -> Vec<&'static str> {
        [
            (self.bounded_positive, "BoundedPositive"),
            (self.stable_two_cycle, "StableTwoCycle"),
            (self.period_three, "PeriodThree"),
            (self.all_periods, "AllPeriods"),
            (self.li_yorke_chaos, "LiYorkeChaos"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

impl fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.flag_names();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

fn sqrt3() -> f64 {
    3f64.sqrt()
}

fn is_minus_sqrt3(q: f64, rel_tol: f64) -> bool {
    (q + sqrt3()).abs() <= rel_tol * 1f64.max(q.abs())
}

pub fn classify_regime(q: f64, rel_tol: f64) -> RegimeClass {
    let (r2, r52, r3) = (2f64.sqrt(), 2.5f64.sqrt(), sqrt3());
    let inside = -2.0 < q && q < 0.0;
    let period_three = is_minus_sqrt3(q, rel_tol);
    RegimeClass {
        bounded_positive: inside,
        stable_two_cycle: -r52 < q && q < -r2,
        period_three,
        all_periods: -2.0 < q && (q <= -r3 || period_three),
        li_yorke_chaos: -2.0 < q && q < -r3 && !period_three,
    }
}

fn require_unit_map(map: &FirstOrderMap, rel_tol: f64) -> Result<(), AnalysisError> {
    if approx_eq(&map.a, &Scalar::ONE, rel_tol) && approx_eq(&map.s, &Scalar::ONE, rel_tol) {
        Ok(())
    } else {
        Err(AnalysisError::NotUnitMap { a: map.a.to_f64(), s: map.s.to_f64() })
    }
}

/// Real nonzero roots of `(a-1) r^2 + q r + s = 0`, each with `f'(r)`.
pub fn fixed_points(map: &FirstOrderMap) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let k = map.coeffs();
    let lead = map.a.sub(&Scalar::ONE)?;
    let mut roots = Vec::new();
    if lead.is_zero() {
        if k.q != 0.0 {
            roots.push(-k.s / k.q);
        }
    } else {
        let a = lead.to_f64();
        let disc = k.q * k.q - 4.0 * a * k.s;
        if disc >= 0.0 {
            // stable quadratic formula
            let sign = if k.q >= 0.0 { 1.0 } else { -1.0 };
            let t = -0.5 * (k.q + sign * disc.sqrt());
            let (r1, r2) = if t != 0.0 { (t / a, k.s / t) } else { (0.0, 0.0) };
            roots.push(r1);
            if disc > 0.0 {
                roots.push(r2);
            }
        }
    }
    roots.retain(|r| *r != 0.0 && r.is_finite());
    roots.sort_by(f64::total_cmp);
    if roots.is_empty() {
        return Err(AnalysisError::NoFixedPoint);
    }
    Ok(roots.into_iter().map(|r| (r, k.derivative(r))).collect())
}

/// Closed-form attracting 2-cycle `{(-q - sqrt(q^2-2))/2, (-q + sqrt(q^2-2))/2}`
/// of the `a = s = 1` map for `-sqrt(5/2) < q < -sqrt(2)`.
pub fn two_cycle(map: &FirstOrderMap, rel_tol: f64) -> Result<CycleReport, AnalysisError> {
    require_unit_map(map, rel_tol)?;
    let qf = map.q.to_f64();
    if !classify_regime(qf, rel_tol).stable_two_cycle {
        return Err(AnalysisError::OutOfRegime(qf));
    }
    // exact when q is rational and q^2 - 2 is a perfect square
    let two = Scalar::integer(2);
    let root = map.q.mul(&map.q)?.sub(&two)?.sqrt()?;
    let minus_q = map.q.neg()?;
    let t1 = minus_q.sub(&root)?.div(&two)?.to_f64();
    let t2 = minus_q.add(&root)?.div(&two)?.to_f64();
    let k = map.coeffs();
    let report = CycleReport::from_points(&k, vec![t1, t2]);
    let residual = report.closure_error(map);
    if residual > CLOSED_FORM_CHECK {
        return Err(AnalysisError::VerificationFailed { residual });
    }
    Ok(report)
}

/// The period-3 orbit through `(2/sqrt(3)) (1 + cos(pi/9))` at `q = -sqrt(3)`.
pub fn three_cycle_seed(map: &FirstOrderMap, rel_tol: f64) -> Result<CycleReport, AnalysisError> {
    require_unit_map(map, rel_tol)?;
    let qf = map.q.to_f64();
    if !is_minus_sqrt3(qf, rel_tol) {
        return Err(AnalysisError::OutOfRegime(qf));
    }
    let k = map.coeffs();
    let r0 = 2.0 / sqrt3() * (1.0 + (std::f64::consts::PI / 9.0).cos());
    let r1 = k.apply(r0);
    let r2 = k.apply(r1);
    let residual = (k.apply(r2) - r0).abs();
    if residual > CLOSED_FORM_CHECK {
        return Err(AnalysisError::VerificationFailed { residual });
    }
    Ok(CycleReport::from_points(&k, vec![r0, r1, r2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::tests::q;

    fn unit_exact(n: i128, d: i128) -> FirstOrderMap {
        FirstOrderMap::new(Scalar::ONE, q(n, d), Scalar::ONE)
    }

    #[test]
    fn stability_classes() {
        assert_eq!(Stability::from_multiplier(0.0), Stability::Superstable);
        assert_eq!(Stability::from_multiplier(-0.5), Stability::Stable);
        assert_eq!(Stability::from_multiplier(1.0 - 1e-12), Stability::Neutral);
        assert_eq!(Stability::from_multiplier(-1.0), Stability::Neutral);
        assert_eq!(Stability::from_multiplier(-2.24), Stability::Unstable);
    }

    #[test]
    fn fixed_point_examples() {
        let fp = fixed_points(&unit_exact(-9, 5)).unwrap();
        assert_eq!(fp.len(), 1);
        assert!((fp[0].0 - 5.0 / 9.0).abs() < 1e-15);
        assert!((fp[0].1 + 2.24).abs() < 1e-12);
        let fp = fixed_points(&unit_exact(-2, 1)).unwrap();
        assert_eq!(fp, vec![(0.5, -3.0)]);
        let m = FirstOrderMap::new(Scalar::integer(2), Scalar::ZERO, Scalar::integer(-1));
        assert_eq!(fixed_points(&m).unwrap(), vec![(-1.0, 3.0), (1.0, 3.0)]);
        let m = FirstOrderMap::new(Scalar::integer(2), Scalar::ZERO, Scalar::ONE);
        assert_eq!(fixed_points(&m), Err(AnalysisError::NoFixedPoint));
        let m = FirstOrderMap::new(Scalar::ONE, Scalar::ZERO, Scalar::ONE);
        assert_eq!(fixed_points(&m), Err(AnalysisError::NoFixedPoint));
    }

    #[test]
    fn fixed_points_satisfy_the_map() {
        for (a, qq, s) in [(3.0, 1.5, -2.0), (0.5, -1.0, 0.25), (-1.0, 2.0, 1.0), (2.0, -7.0, 3.0)] {
            let m =
                FirstOrderMap::new(Scalar::approx(a).unwrap(), Scalar::approx(qq).unwrap(), Scalar::approx(s).unwrap());
            let k = m.coeffs();
            for (r, mult) in fixed_points(&m).unwrap() {
                assert!((k.apply(r) - r).abs() < 1e-12 * r.abs().max(1.0), "{a} {qq} {s}: {r}");
                assert_eq!(mult, k.derivative(r));
            }
        }
    }

    #[test]
    fn superstable_two_cycle() {
        let c = two_cycle(&unit_exact(-3, 2), 1e-12).unwrap();
        assert_eq!(c.points, vec![0.5, 1.0]);
        assert_eq!(c.multiplier, 0.0);
        assert_eq!(c.stability, Stability::Superstable);
    }

    #[test]
    fn stable_two_cycle_off_superstability() {
        let c = two_cycle(&FirstOrderMap::unit(-1.45), 1e-12).unwrap();
        let d = 0.1025f64.sqrt();
        assert!((c.points[0] - (1.45 - d) / 2.0).abs() < 1e-15);
        assert!((c.points[1] - (1.45 + d) / 2.0).abs() < 1e-15);
        assert!(c.multiplier.abs() < 1.0);
        assert_eq!(c.stability, Stability::Stable);
    }

    #[test]
    fn two_cycle_out_of_regime() {
        assert_eq!(two_cycle(&FirstOrderMap::unit(-1.0), 1e-12), Err(AnalysisError::OutOfRegime(-1.0)));
        let m = FirstOrderMap::new(Scalar::integer(2), q(-3, 2), Scalar::ONE);
        assert!(matches!(two_cycle(&m, 1e-12), Err(AnalysisError::NotUnitMap { .. })));
    }

    #[test]
    fn three_cycle_at_minus_sqrt3() {
        let c = three_cycle_seed(&FirstOrderMap::unit(-3f64.sqrt()), 1e-12).unwrap();
        assert_eq!(c.period, 3);
        assert!((c.points[0] - 2.23976411351175).abs() < 1e-12);
        assert!((c.points[1] - 0.9541888941386711).abs() < 1e-12);
        assert!((c.points[2] - 0.2701486074873337).abs() < 1e-12);
        assert!((c.points[0] - c.points[1]).abs() > 1.0);
        // the cycle is born here: multiplier one
        assert!((c.multiplier - 1.0).abs() < 1e-9);
        assert_eq!(three_cycle_seed(&FirstOrderMap::unit(-1.7), 1e-12), Err(AnalysisError::OutOfRegime(-1.7)));
    }

    #[test]
    fn regime_examples() {
        let r = classify_regime(-1.5, 1e-12);
        assert_eq!(r.flag_names(), vec!["BoundedPositive", "StableTwoCycle"]);
        let r = classify_regime(-11.0 / 6.0, 1e-12);
        assert_eq!(r.flag_names(), vec!["BoundedPositive", "AllPeriods", "LiYorkeChaos"]);
        let r = classify_regime(-3f64.sqrt(), 1e-12);
        assert_eq!(r.flag_names(), vec!["BoundedPositive", "PeriodThree", "AllPeriods"]);
        assert_eq!(classify_regime(-2.0, 1e-12).to_string(), "none");
        assert_eq!(classify_regime(-1.0, 1e-12).to_string(), "BoundedPositive");
        // one ulp beyond -sqrt(3) still counts as the period-3 parameter
        let nudged = f64::from_bits((-3f64.sqrt()).to_bits() - 1);
        assert!(nudged > -3f64.sqrt());
        assert!(classify_regime(nudged, 1e-12).all_periods);
    }

    #[test]
    fn report_text_block() {
        let c = two_cycle(&unit_exact(-3, 2), 1e-12).unwrap();
        assert_eq!(
            c.to_string(),
            "period=2\npoints=0.50000000000000000,1.0000000000000000\nmultiplier=0.0000000000000000\nstability=superstable"
        );
    }
}
