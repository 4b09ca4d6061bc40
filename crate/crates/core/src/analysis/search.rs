use rayon::prelude::*;

use super::{AnalysisError, CycleReport};
use crate::dynamics::{first_order_step, Termination};
use crate::folding::{FirstOrderMap, MapCoeffs};

#[derive(Debug, Clone, PartialEq)]
pub enum CycleDetection {
    Periodic(CycleReport),
    /// No period up to the requested maximum was found.
    Aperiodic,
}

/// Numerically detects the attractor reached from `r0`.
///
/// After `transient` burn-in steps, looks for the smallest `p <= max_period`
/// such that `|r_{n+p} - r_n| < tol` holds on `3p` consecutive indices.
pub fn detect_cycle(
    map: &FirstOrderMap,
    r0: f64,
    transient: usize,
    max_period: usize,
    tol: f64,
) -> Result<CycleDetection, AnalysisError> {
    if max_period == 0 {
        return Err(AnalysisError::InvalidArgument("max_period must be at least 1".into()));
    }
    if r0 == 0.0 || !r0.is_finite() {
        return Err(AnalysisError::InvalidArgument("r0 must be finite and nonzero".into()));
    }
    let k = map.coeffs();
    let mut r = r0;
    for n in 0..transient {
        r = first_order_step(&k, r).map_err(|t| AnalysisError::OrbitTerminated(shift(t, n)))?;
    }
    let len = 4 * max_period;
    let mut buf = Vec::with_capacity(len);
    buf.push(r);
    for n in 1..len {
        r = first_order_step(&k, r).map_err(|t| AnalysisError::OrbitTerminated(shift(t, transient + n - 1)))?;
        buf.push(r);
    }
    for p in 1..=max_period {
        let window = 3 * p;
        for start in 0..=(len - window - p) {
            if (start..start + window).all(|n| (buf[n + p] - buf[n]).abs() < tol) {
                let points = buf[start..start + p].to_vec();
                return Ok(CycleDetection::Periodic(CycleReport::from_points(&k, points)));
            }
        }
    }
    Ok(CycleDetection::Aperiodic)
}

fn shift(t: Termination, n: usize) -> Termination {
    match t {
        Termination::ForbiddenSet(_) => Termination::ForbiddenSet(n),
        Termination::Diverged(_) => Termination::Diverged(n),
        Termination::Completed => Termination::Completed,
    }
}

/// Result of a brute-force period-`p` scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodScan {
    /// One report per distinct cycle of minimal period `p`, ordered by its
    /// smallest point.
    pub cycles: Vec<CycleReport>,
    /// Grid cells where `f^p` could not be evaluated.
    pub skipped_cells: Vec<usize>,
}

fn iterate(k: &MapCoeffs, mut r: f64, n: usize) -> Option<f64> {
    for _ in 0..n {
        r = first_order_step(k, r).ok()?;
    }
    Some(r)
}

/// `f^p(r) - r` together with its derivative `(f^p)'(r) - 1`.
fn g_with_slope(k: &MapCoeffs, r: f64, p: usize) -> Option<(f64, f64)> {
    let mut x = r;
    let mut slope = 1.0;
    for _ in 0..p {
        slope *= k.derivative(x);
        x = first_order_step(k, x).ok()?;
    }
    Some((x - r, slope - 1.0))
}

fn g(k: &MapCoeffs, r: f64, p: usize) -> Option<f64> {
    iterate(k, r, p).map(|x| x - r)
}

struct Candidate {
    root: f64,
    /// Bound on the distance to the true root.
    uncertainty: f64,
}

fn bisect(k: &MapCoeffs, p: usize, mut lo: f64, mut hi: f64, mut g_lo: f64, tol: f64) -> Option<Candidate> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(k, mid, p)?;
        if g_mid == 0.0 {
            return Some(Candidate { root: mid, uncertainty: f64::EPSILON * mid.abs() });
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Some(Candidate { root: 0.5 * (lo + hi), uncertainty: hi - lo })
}

/// Minimises `|g|` on `[lo, hi]`; accepts the minimiser as a double root
/// when `|g|` drops to `accept`.
fn tangent_root(k: &MapCoeffs, p: usize, mut lo: f64, mut hi: f64, tol: f64, accept: f64) -> Option<Candidate> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let h = |r: f64| g(k, r, p).map(f64::abs);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut h1, mut h2) = (h(x1)?, h(x2)?);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if h1 <= h2 {
            hi = x2;
            x2 = x1;
            h2 = h1;
            x1 = hi - INV_PHI * (hi - lo);
            h1 = h(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            h1 = h2;
            x2 = lo + INV_PHI * (hi - lo);
            h2 = h(x2)?;
        }
    }
    let (root, depth) = if h1 <= h2 { (x1, h1) } else { (x2, h2) };
    if depth > accept {
        return None;
    }
    // |g| <= accept holds within sqrt(accept / kappa) of the double root
    let step = 1e-4 * root.abs().max(1e-3);
    let curvature = (g(k, root + step, p)? + g(k, root - step, p)? - 2.0 * g(k, root, p)?) / (2.0 * step * step);
    let uncertainty = if curvature.abs() > 0.0 { (accept / curvature.abs()).sqrt() } else { step };
    Some(Candidate { root, uncertainty: uncertainty.max(hi - lo) })
}

/// Newton polish on `f^p(r) - r`; keeps the input when a step does not help.
fn polish(k: &MapCoeffs, p: usize, mut r: f64) -> f64 {
    let Some((mut gr, _)) = g_with_slope(k, r, p) else { return r };
    for _ in 0..4 {
        let Some((_, slope)) = g_with_slope(k, r, p) else { break };
        if slope.abs() < 1e-6 || gr == 0.0 {
            break;
        }
        let next = r - gr / slope;
        match g_with_slope(k, next, p) {
            Some((gn, _)) if gn.abs() < gr.abs() => {
                r = next;
                gr = gn;
            }
            _ => break,
        }
    }
    r
}

/// Orbit points of `root` with propagated position error bounds.
fn orbit_with_errors(k: &MapCoeffs, root: f64, uncertainty: f64, n: usize) -> Option<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(n + 1);
    let (mut x, mut e) = (root, uncertainty);
    out.push((x, e));
    for _ in 0..n {
        e = k.derivative(x).abs() * e + 4.0 * f64::EPSILON * x.abs().max(1.0);
        x = first_order_step(k, x).ok()?;
        out.push((x, e));
    }
    Some(out)
}

/// Brute-force search for cycles of minimal period `p` with points in `[lo, hi]`.
///
/// Scans `f^p(r) - r` on a uniform grid of `grid` points, bisects every sign
/// change to width `tol`, and refines local minima of `|f^p(r) - r|` that
/// reach `10 tol` as double roots. Points whose minimal period is a proper
/// divisor of `p` are dropped and rotations of the same cycle are merged.
pub fn find_period_p_points(
    map: &FirstOrderMap,
    p: usize,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: f64,
) -> Result<PeriodScan, AnalysisError> {
    if !(0.0 < lo && lo < hi) || p == 0 || grid < 2 || !(tol > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need 0 < lo < hi, p >= 1, grid >= 2, tol > 0 (got lo={lo}, hi={hi}, p={p}, grid={grid}, tol={tol})"
        )));
    }
    let k = map.coeffs();
    let step = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid).map(|i| if i + 1 == grid { hi } else { lo + i as f64 * step }).collect();
    let gs: Vec<Option<f64>> = xs.par_iter().map(|&x| g(&k, x, p)).collect();
    let accept = 10.0 * tol;

    let mut skipped_cells = Vec::new();
    let mut candidates = Vec::new();
    for i in 0..grid - 1 {
        match (gs[i], gs[i + 1]) {
            (Some(a), Some(b)) => {
                if a == 0.0 {
                    candidates.push(Candidate { root: xs[i], uncertainty: f64::EPSILON * xs[i] });
                } else if (a < 0.0) != (b < 0.0) && b != 0.0 {
                    if let Some(c) = bisect(&k, p, xs[i], xs[i + 1], a, tol) {
                        candidates.push(c);
                    } else {
                        skipped_cells.push(i);
                    }
                }
            }
            _ => skipped_cells.push(i),
        }
    }
    if let Some(0.0) = gs[grid - 1] {
        candidates.push(Candidate { root: hi, uncertainty: f64::EPSILON * hi });
    }
    for i in 1..grid - 1 {
        let (Some(a), Some(b), Some(c)) = (gs[i - 1], gs[i], gs[i + 1]) else { continue };
        let same_sign = (a < 0.0) == (b < 0.0) && (b < 0.0) == (c < 0.0) && b != 0.0;
        if same_sign && b.abs() <= a.abs() && b.abs() < c.abs() {
            if let Some(cand) = tangent_root(&k, p, xs[i - 1], xs[i + 1], tol, accept) {
                candidates.push(cand);
            }
        }
    }

    let divisors: Vec<usize> = (1..p).filter(|d| p.is_multiple_of(*d)).collect();
    // (points sorted, error bounds) of accepted cycles
    let mut accepted: Vec<(Vec<(f64, f64)>, CycleReport)> = Vec::new();
    for cand in candidates {
        let Some(orbit) = orbit_with_errors(&k, cand.root, cand.uncertainty, p) else { continue };
        let (r, e0) = orbit[0];
        let closes = (orbit[p].0 - r).abs() <= accept + orbit[p].1 + e0;
        if !closes {
            continue;
        }
        let shorter = divisors.iter().any(|&d| (orbit[d].0 - r).abs() <= accept + orbit[d].1 + e0);
        if shorter {
            continue;
        }
        let mut key: Vec<(f64, f64)> = orbit[..p].to_vec();
        key.sort_by(|x, y| x.0.total_cmp(&y.0));
        let duplicate = accepted
            .iter()
            .any(|(other, _)| other.iter().zip(&key).all(|(a, b)| (a.0 - b.0).abs() <= accept + a.1 + b.1));
        if duplicate {
            continue;
        }
        // report the cycle starting from its smallest point
        let start = key[0].0;
        let mut points = Vec::with_capacity(p);
        let mut x = polish(&k, p, start);
        for _ in 0..p {
            points.push(x);
            let Some(next) = iterate(&k, x, 1) else { break };
            x = polish(&k, p, next);
        }
        if points.len() != p {
            continue;
        }
        accepted.push((key, CycleReport::from_points(&k, points)));
    }
    let mut cycles: Vec<CycleReport> = accepted.into_iter().map(|(_, c)| c).collect();
    cycles.sort_by(|a, b| a.points[0].total_cmp(&b.points[0]));
    Ok(PeriodScan { cycles, skipped_cells })
}
