use super::AnalysisError;
use crate::dynamics::{first_order_step, Termination};
use crate::folding::FirstOrderMap;

const MIN_DERIVATIVE: f64 = 1e-300;

/// Mean of `ln |f'(r_k)|` over `n` steps taken after `burn_in` steps from `r0`.
///
/// This is a diagnostic only; a positive value is not a proof of chaos.
pub fn lyapunov(map: &FirstOrderMap, r0: f64, burn_in: usize, n: usize) -> Result<f64, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidArgument("n must be at least 1".into()));
    }
    if r0 == 0.0 || !r0.is_finite() {
        return Err(AnalysisError::InvalidArgument("r0 must be finite and nonzero".into()));
    }
    let k = map.coeffs();
    let terminated = |t: Termination, at: usize| {
        AnalysisError::OrbitTerminated(match t {
            Termination::ForbiddenSet(_) => Termination::ForbiddenSet(at),
            Termination::Diverged(_) => Termination::Diverged(at),
            Termination::Completed => Termination::Completed,
        })
    };
    let mut r = r0;
    for step in 0..burn_in {
        r = first_order_step(&k, r).map_err(|t| terminated(t, step))?;
    }
    let mut sum = 0.0;
    for i in 0..n {
        let d = k.derivative(r).abs();
        if d < MIN_DERIVATIVE {
            return Err(AnalysisError::DerivativeSingular { step: burn_in + i, r });
        }
        sum += d.ln();
        r = first_order_step(&k, r).map_err(|t| terminated(t, burn_in + i))?;
    }
    Ok(sum / n as f64)
}
