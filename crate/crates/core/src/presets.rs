//! Built-in example systems, embedded so they work without the `specs/`
//! directory.

use crate::parser::{parse_spec, SystemSpec};

/// Type (40,49): `q = -3/2`, superstable 2-cycle.
pub const TYPE_40_49: &str = include_str!("../specs/type_40_49.spec");
/// Modified (40,49): `q = -11/6`.
pub const MODIFIED_40_49: &str = include_str!("../specs/modified_40_49.spec");
/// Type (40,37): `q = -9/5`.
pub const TYPE_40_37: &str = include_str!("../specs/type_40_37.spec");
/// `q = -sqrt(3)`, where the reduced map has a 3-cycle.
pub const PERIOD_THREE: &str = include_str!("../specs/period_three.spec");

/// `(name, spec text)` for every preset.
pub const PRESETS: [(&str, &str); 4] = [
    ("type-40-49", TYPE_40_49),
    ("modified-40-49", MODIFIED_40_49),
    ("type-40-37", TYPE_40_37),
    ("period-three", PERIOD_THREE),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a preset. Panics only if an embedded file is malformed.
pub fn preset(name: &str) -> Option<SystemSpec> {
    preset_text(name).map(|t| parse_spec(t).unwrap_or_else(|e| panic!("preset {name}: {e}")))
}
