//! The acceptance suite: ten pass/fail checks over the built-in examples and
//! randomized invariants, each with a tolerance and a runtime budget.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    bifurcation_scan, find_period_p_points, two_cycle, BifurcationConfig, R0Policy, DEFAULT_INTERVAL,
};
use crate::csv::write_bifurcation;
use crate::dynamics::{
    first_order_stats, iterate_first_order, iterate_first_order_exact, iterate_planar, ExactStop, Termination,
};
use crate::folding::{back_map_y, fold, reduce_first_order, FirstOrderMap};
use crate::parser::{format_spec, parse_spec, RunSettings, SystemSpec};
use crate::presets::preset;
use crate::scalar::{Rational, Scalar, DEFAULT_REL_TOL};
use crate::system::{check_degeneracy, validate_system, PlanarPoint, PlanarSystem};

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<3} {} {}: {} [{:.3} s of {:.3} s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        )
    }
}

type Check = fn() -> Result<String, String>;

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Duration,
    check: Check,
}

const fn ms(n: u64) -> Duration {
    Duration::from_millis(n)
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: "A1", title: "folding reduction of type (40,49)", budget: ms(1), check: a1 },
    Criterion { id: "A2", title: "two-cycle of type (40,49)", budget: ms(1000), check: a2 },
    Criterion { id: "A3", title: "superstable two-cycle", budget: ms(1), check: a3 },
    Criterion { id: "A4", title: "period 3 at q = -sqrt(3)", budget: ms(1), check: a4 },
    Criterion { id: "A5", title: "cycles of periods 1..8", budget: ms(60_000), check: a5 },
    Criterion { id: "A6", title: "positive bounded orbits", budget: ms(5000), check: a6 },
    Criterion { id: "A7", title: "folding consistency", budget: ms(10_000), check: a7 },
    Criterion { id: "A8", title: "exact oracle agreement", budget: ms(5000), check: a8 },
    Criterion { id: "A9", title: "spec round trip", budget: ms(2000), check: a9 },
    Criterion { id: "A10", title: "bifurcation determinism", budget: ms(30_000), check: a10 },
];

/// Identifiers of every criterion, in run order.
pub fn criterion_ids() -> Vec<&'static str> {
    CRITERIA.iter().map(|c| c.id).collect()
}

fn run(c: &Criterion) -> Outcome {
    let start = Instant::now();
    let result = (c.check)();
    let elapsed = start.elapsed();
    let (ok, mut detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let in_budget = elapsed <= c.budget;
    if ok && !in_budget {
        detail.push_str("; over runtime budget");
    }
    Outcome { id: c.id, title: c.title, passed: ok && in_budget, detail, elapsed, budget: c.budget }
}

/// Runs one criterion by id (`"A1"` to `"A10"`).
pub fn run_criterion(id: &str) -> Option<Outcome> {
    CRITERIA.iter().find(|c| c.id.eq_ignore_ascii_case(id)).map(run)
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(run).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn unit_map_of(name: &str) -> Result<FirstOrderMap, String> {
    let spec = preset(name).ok_or_else(|| format!("missing preset {name}"))?;
    reduce_first_order(&spec.system, DEFAULT_REL_TOL).map_err(|e| format!("{name}: {e}"))
}

fn a1() -> Result<String, String> {
    let sys = preset("type-40-49").ok_or("missing preset")?.system;
    ensure(sys.is_exact(), || "parameters are not exact".into())?;
    ensure(check_degeneracy(&sys, 0.0), || "degeneracy does not hold exactly".into())?;
    let m = reduce_first_order(&sys, 0.0).map_err(|e| e.to_string())?;
    let want = (Scalar::ONE, Scalar::ratio(-3, 2).unwrap(), Scalar::ONE);
    ensure((m.a, m.q, m.s) == want, || format!("got (a, q, s) = ({:?}, {:?}, {:?})", m.a, m.q, m.s))?;
    Ok("(a, q, s) = (1, -3/2, 1) exactly".into())
}

fn a2() -> Result<String, String> {
    let spec = preset("type-40-49").ok_or("missing preset")?;
    let map = reduce_first_order(&spec.system, DEFAULT_REL_TOL).map_err(|e| e.to_string())?;
    let cycle = two_cycle(&map, DEFAULT_REL_TOL).map_err(|e| e.to_string())?;
    ensure(cycle.points == [0.5, 1.0], || format!("closed form gave {:?}", cycle.points))?;

    let targets = [PlanarPoint::new(1.0, 0.75), PlanarPoint::new(0.5, 1.25)];
    let near = |p: &PlanarPoint, t: &PlanarPoint| (p.x - t.x).abs() <= 1e-8 && (p.y - t.y).abs() <= 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let mut worst = 0;
    for trial in 0..50 {
        let x0: f64 = rng.gen_range(-5.0..5.0);
        let x1: f64 = rng.gen_range(0.0..5.0);
        if x1 == 0.0 {
            continue;
        }
        let y0 = (x1 - x0 + 2.0) / 2.0;
        let orbit = iterate_planar(&spec.system, PlanarPoint::new(x0, y0), 10_000);
        let hit = orbit.points.windows(2).position(|w| {
            (near(&w[0], &targets[0]) && near(&w[1], &targets[1]))
                || (near(&w[0], &targets[1]) && near(&w[1], &targets[0]))
        });
        match hit {
            Some(n) => worst = worst.max(n),
            None => return Err(format!("start {trial} ({x0}, {y0}) did not converge ({})", orbit.termination)),
        }
    }
    Ok(format!("closed form {{1/2, 1}}; 50 starts converge within 1e-8 by step {worst}"))
}

fn a3() -> Result<String, String> {
    let map = unit_map_of("type-40-49")?;
    let cycle = two_cycle(&map, DEFAULT_REL_TOL).map_err(|e| e.to_string())?;
    ensure(cycle.multiplier.abs() <= 1e-12, || format!("multiplier {}", cycle.multiplier))?;
    Ok(format!("multiplier {}", crate::scalar::format_sig17(cycle.multiplier)))
}

fn a4() -> Result<String, String> {
    let map = unit_map_of("period-three")?;
    let k = map.coeffs();
    let r0 = 2.0 / 3f64.sqrt() * (1.0 + (std::f64::consts::PI / 9.0).cos());
    let r3 = k.apply(k.apply(k.apply(r0)));
    let closure = (r3 - r0).abs();
    let move1 = (k.apply(r0) - r0).abs();
    ensure(closure <= 1e-9, || format!("|f^3(r0) - r0| = {closure:e}"))?;
    ensure(move1 > 1e-9, || format!("r0 is a fixed point (|f(r0) - r0| = {move1:e})"))?;
    Ok(format!("|f^3(r0) - r0| = {closure:e}, |f(r0) - r0| = {move1:.6}"))
}

fn a5() -> Result<String, String> {
    let mut summary = Vec::new();
    for name in ["modified-40-49", "type-40-37"] {
        let started = Instant::now();
        let map = unit_map_of(name)?;
        let mut counts = Vec::new();
        for p in 1..=8 {
            let scan = find_period_p_points(&map, p, DEFAULT_INTERVAL.0, DEFAULT_INTERVAL.1, 20_000, 1e-13)
                .map_err(|e| format!("{name}, p = {p}: {e}"))?;
            let verified =
                scan.cycles.iter().filter(|c| c.period == p && verified_by_iteration(&map, &c.points, 1e-8)).count();
            ensure(verified > 0, || format!("{name}: no verified cycle of minimal period {p}"))?;
            counts.push(verified.to_string());
        }
        let took = started.elapsed();
        ensure(took <= ms(30_000), || format!("{name}: {:.1} s exceeds 30 s", took.as_secs_f64()))?;
        summary.push(format!("q = {}: [{}]", map.q, counts.join(",")));
    }
    Ok(format!("verified cycles per period 1..8, {}", summary.join("; ")))
}

fn verified_by_iteration(map: &FirstOrderMap, points: &[f64], tol: f64) -> bool {
    let orbit = iterate_first_order(map, points[0], points.len());
    orbit.termination == Termination::Completed
        && (orbit.values[points.len()] - points[0]).abs() <= tol
        && orbit.values[..points.len()].iter().zip(points).all(|(a, b)| (a - b).abs() <= tol)
}

fn a6() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for q in [-1.9, -1.8, -1.7, -1.5, -1.1, -0.5] {
        let map = FirstOrderMap::unit(q);
        for _ in 0..10 {
            let r0 = loop {
                let r: f64 = rng.gen_range(0.0..5.0);
                if r > 0.0 {
                    break r;
                }
            };
            let stats = first_order_stats(&map, r0, 100_000, 0);
            ensure(stats.termination == Termination::Completed, || {
                format!("q = {q}, r0 = {r0}: {}", stats.termination)
            })?;
            ensure(stats.nonpositive == 0, || format!("q = {q}, r0 = {r0}: {} nonpositive values", stats.nonpositive))?;
            hi = hi.max(stats.max);
            lo = lo.min(stats.min);
        }
    }
    Ok(format!("60 orbits of 1e5 steps stay in [{lo:.3e}, {hi:.3}]"))
}

/// Uniform rational `num/den` in `[-5, 5]` with `den` in `1..=12`.
fn random_rational(rng: &mut ChaCha8Rng) -> Scalar {
    let den: i128 = rng.gen_range(1..=12);
    let num: i128 = rng.gen_range(-5 * den..=5 * den);
    Scalar::ratio(num, den).expect("nonzero denominator")
}

fn random_valid_system(rng: &mut ChaCha8Rng) -> PlanarSystem {
    loop {
        let sys = PlanarSystem::from_array(std::array::from_fn(|_| random_rational(rng)));
        if validate_system(&sys).is_empty() {
            return sys;
        }
    }
}

/// Worst folding residual and back-map error over random systems and starts.
pub(crate) fn folding_consistency(seed: u64, systems: usize, steps: usize) -> (f64, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_res, mut worst_y, mut checked) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..systems {
        let sys = random_valid_system(&mut rng);
        let eq = fold(&sys).expect("valid system folds");
        let k = eq.coeffs();
        let start = PlanarPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let orbit = iterate_planar(&sys, start, steps);
        let xs: Vec<f64> = orbit.points.iter().map(|p| p.x).collect();
        for n in 0..xs.len().saturating_sub(2) {
            worst_res = worst_res.max(k.scaled_residual(xs[n], xs[n + 1], xs[n + 2]));
        }
        for n in 0..xs.len().saturating_sub(1) {
            let y = orbit.points[n].y;
            let scale = xs[n].abs().max(xs[n + 1].abs()).max(y.abs()).max(1.0);
            worst_y = worst_y.max((back_map_y(&eq, xs[n], xs[n + 1]) - y).abs() / scale);
            checked += 1;
        }
    }
    (worst_res, worst_y, checked)
}

fn a7() -> Result<String, String> {
    let (res, yerr, checked) = folding_consistency(0xA7, 1000, 50);
    ensure(res < 1e-9 && yerr < 1e-9, || format!("worst scaled residual {res:e}, worst y error {yerr:e}"))?;
    Ok(format!("{checked} steps checked; worst scaled residual {res:e}, worst y error {yerr:e}"))
}

fn a8() -> Result<String, String> {
    const STEPS: usize = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA8);
    let mut worst_rel = 0.0f64;
    let mut shortest = STEPS;
    let mut incomplete = 0;
    for _ in 0..100 {
        let den: i128 = rng.gen_range(2..=1000);
        let num: i128 = -rng.gen_range(1..2 * den);
        let q = Scalar::ratio(num, den).unwrap();
        let map = FirstOrderMap::new(Scalar::ONE, q, Scalar::ONE);
        let r0 = Rational::new(rng.gen_range(1..=100), rng.gen_range(1..=20)).unwrap();
        let exact = iterate_first_order_exact(&map, r0, STEPS).map_err(|e| e.to_string())?;
        let float = iterate_first_order(&map, r0.to_f64(), STEPS);
        for (e, f) in exact.values.iter().zip(&float.values) {
            let e = e.to_f64();
            worst_rel = worst_rel.max((f - e).abs() / e.abs().max(f64::MIN_POSITIVE));
        }
        if exact.stop != ExactStop::Completed {
            incomplete += 1;
            shortest = shortest.min(exact.values.len() - 1);
        }
    }
    let detail = format!(
        "exact oracle reached {STEPS} steps in {} of 100 maps (shortest {shortest} steps); \
         worst relative difference over the compared prefix {worst_rel:e}",
        100 - incomplete
    );
    ensure(incomplete == 0 && worst_rel < 1e-12, || detail.clone())?;
    Ok(detail)
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Scalar {
    match rng.gen_range(0..4) {
        0 => Scalar::integer(rng.gen_range(-1000..=1000)),
        1 => Scalar::ratio(rng.gen_range(-100_000..=100_000), rng.gen_range(1..=100_000)).unwrap(),
        2 => Scalar::approx(rng.gen_range(-5.0..5.0)).unwrap(),
        _ => Scalar::approx(rng.gen_range(-1.0f64..1.0) * 10f64.powi(rng.gen_range(-30..30))).unwrap(),
    }
}

fn random_spec(rng: &mut ChaCha8Rng) -> SystemSpec {
    let system = PlanarSystem::from_array(std::array::from_fn(|_| random_scalar(rng)));
    let initial = rng.gen_bool(0.5).then(|| (random_scalar(rng), random_scalar(rng)));
    let run = rng.gen_bool(0.5).then(|| RunSettings {
        steps: rng.gen_bool(0.5).then(|| rng.gen_range(0..1_000_000)),
        transient: rng.gen_bool(0.5).then(|| rng.gen_range(0..1_000_000)),
        tol: rng.gen_bool(0.5).then(|| 10f64.powi(rng.gen_range(-15..-1)) * rng.gen_range(1.0..10.0)),
        seed: rng.gen_bool(0.5).then(|| rng.gen()),
    });
    SystemSpec { system, initial, run }
}

fn a9() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA9);
    for i in 0..1000 {
        let spec = random_spec(&mut rng);
        let first = format_spec(&spec);
        let parsed = parse_spec(&first).map_err(|e| format!("spec {i}: {e}\n{first}"))?;
        let second = format_spec(&parsed);
        ensure(first == second, || format!("spec {i} differs after a round trip:\n{first}\n--\n{second}"))?;
        ensure(parsed == spec, || format!("spec {i} parsed to a different value:\n{first}"))?;
    }
    Ok("1000 specs format identically after parse".into())
}

/// The bifurcation run used by the determinism check.
pub fn determinism_config(threads: usize) -> BifurcationConfig {
    BifurcationConfig {
        q_lo: -1.95,
        q_hi: -1.42,
        q_steps: 400,
        r0: R0Policy::Random { seed: 20_240_601, count: 2 },
        transient: 300,
        samples: 50,
        threads,
    }
}

fn bifurcation_bytes(threads: usize) -> Result<Vec<u8>, String> {
    let rows = bifurcation_scan(&determinism_config(threads)).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_bifurcation(&mut buf, &rows).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn a10() -> Result<String, String> {
    let runs = [bifurcation_bytes(1)?, bifurcation_bytes(1)?, bifurcation_bytes(4)?, bifurcation_bytes(4)?];
    ensure(runs.iter().all(|r| *r == runs[0]), || "CSV bytes differ between runs".into())?;
    Ok(format!("4 runs (threads 1, 1, 4, 4) give identical {} byte CSVs", runs[0].len()))
}
