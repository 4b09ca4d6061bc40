//! Folding of the planar system
//!
//! ```text
//! x' = a x + b y + c
//! y' = (a' x + b' y + c') / (a'' x + b'' y + c'')
//! ```
//!
//! into scalar difference equations, with orbit, cycle and regime analysis
//! of the resulting first-order map `r' = a r + q + s/r`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod csv;
pub mod dynamics;
pub mod folding;
pub mod parser;
pub mod presets;
pub mod scalar;
pub mod system;

pub use analysis::{
    bifurcation_scan, classify_regime, detect_cycle, find_period_p_points, fixed_points, lyapunov, three_cycle_seed,
    two_cycle, AnalysisError, BifurcationConfig, BifurcationRow, CycleDetection, CycleReport, R0Policy, RegimeClass,
    Stability,
};
pub use dynamics::{iterate_first_order, iterate_planar, iterate_second_order, Orbit, ScalarOrbit, Termination};
pub use folding::{check_proposition, fold, reduce_first_order, FirstOrderMap, PropositionReport, SecondOrderEq};
pub use parser::{format_spec, parse_spec, ParseError, SystemSpec};
pub use scalar::{Rational, Scalar, ScalarError};
pub use system::{check_degeneracy, determinants, validate_system, PlanarPoint, PlanarSystem, Violation};
