//! The three shipped experiment presets.

/// Preset names accepted by `--preset`.
pub const PRESET_NAMES: [&str; 3] = ["uncooled", "cooled", "distributed-60km"];

/// TOML text of a preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "uncooled" => Some(include_str!("../../presets/uncooled.toml")),
        "cooled" => Some(include_str!("../../presets/cooled.toml")),
        "distributed-60km" => Some(include_str!("../../presets/distributed-60km.toml")),
        _ => None,
    }
}
