//! Experiment presets, versioned as JSON documents next to the crate.

use viscowell::config::ProblemConfig;

pub const PRESETS: &[(&str, &str)] = &[
    ("zero", include_str!("../presets/zero.json")),
    ("single-cubic", include_str!("../presets/single-cubic.json")),
    ("decay-m1-expkernel", include_str!("../presets/decay-m1-expkernel.json")),
    ("decay-m3-expkernel", include_str!("../presets/decay-m3-expkernel.json")),
    ("decay-powerlaw-kernel", include_str!("../presets/decay-powerlaw-kernel.json")),
    ("sink-dominant", include_str!("../presets/sink-dominant.json")),
    ("well-invariance", include_str!("../presets/well-invariance.json")),
    ("blowup-negE", include_str!("../presets/blowup-negE.json")),
    ("blowup-posE", include_str!("../presets/blowup-posE.json")),
    ("amplitude-sweep", include_str!("../presets/amplitude-sweep.json")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parsed preset; `None` for unknown names.
pub fn preset(name: &str) -> Option<ProblemConfig> {
    preset_text(name).map(|t| ProblemConfig::from_json(t).expect("bundled presets parse"))
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
