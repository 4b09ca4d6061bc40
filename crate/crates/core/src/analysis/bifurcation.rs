use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{AnalysisError, DEFAULT_INTERVAL};
use crate::dynamics::{at, first_order_step, Termination};
use crate::folding::FirstOrderMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum R0Policy {
    Fixed(f64),
    /// `count` starting points per `q`, uniform on the default cycle
    /// interval, drawn from a stream keyed by `(seed, cell index)`.
    Random {
        seed: u64,
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationConfig {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_steps: usize,
    pub r0: R0Policy,
    pub transient: usize,
    pub samples: usize,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationRow {
    pub q: f64,
    /// Post-transient orbit values, in generation order.
    pub samples: Vec<f64>,
    /// Set when an orbit for this `q` stopped early; `samples` is then empty.
    pub termination: Option<Termination>,
}

fn run_cell(cfg: &BifurcationConfig, index: usize, q: f64) -> BifurcationRow {
    let k = FirstOrderMap::unit(q).coeffs();
    let starts: Vec<f64> = match cfg.r0 {
        R0Policy::Fixed(r0) => vec![r0],
        R0Policy::Random { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            (0..count).map(|_| rng.gen_range(DEFAULT_INTERVAL.0..DEFAULT_INTERVAL.1)).collect()
        }
    };
    let mut samples = Vec::with_capacity(starts.len() * cfg.samples);
    for r0 in starts {
        let mut r = r0;
        for n in 0..cfg.transient + cfg.samples {
            match first_order_step(&k, r) {
                Ok(next) => r = next,
                Err(t) => {
                    return BifurcationRow { q, samples: Vec::new(), termination: Some(at(t, n)) };
                }
            }
            if n >= cfg.transient {
                samples.push(r);
            }
        }
    }
    BifurcationRow { q, samples, termination: None }
}

/// Post-transient samples of the `a = s = 1` map on a uniform `q` grid.
///
/// Rows come back in ascending `q` whatever the thread count.
pub fn bifurcation_scan(cfg: &BifurcationConfig) -> Result<Vec<BifurcationRow>, AnalysisError> {
    if cfg.q_steps < 2 || !(cfg.q_lo < cfg.q_hi) || !cfg.q_lo.is_finite() || !cfg.q_hi.is_finite() {
        return Err(AnalysisError::InvalidArgument(format!(
            "need q_lo < q_hi and q_steps >= 2 (got [{}, {}], {})",
            cfg.q_lo, cfg.q_hi, cfg.q_steps
        )));
    }
    if let R0Policy::Fixed(r0) = cfg.r0 {
        if r0 == 0.0 || !r0.is_finite() {
            return Err(AnalysisError::InvalidArgument("r0 must be finite and nonzero".into()));
        }
    }
    let span = cfg.q_hi - cfg.q_lo;
    let last = cfg.q_steps - 1;
    let q_at = |i: usize| if i == last { cfg.q_hi } else { cfg.q_lo + span * i as f64 / last as f64 };
    let scan =
        || -> Vec<BifurcationRow> { (0..cfg.q_steps).into_par_iter().map(|i| run_cell(cfg, i, q_at(i))).collect() };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| AnalysisError::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(scan))
}
