//! Named configurations shipped with the crate.

use crate::config::ConfigDoc;
use crate::{Error, Result};

pub const NAMES: [&str; 5] = ["cit", "cia", "fig5-default", "srr", "elc"];

/// Source text of a named preset.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "cit" => Some(include_str!("../presets/cit.conf")),
        "cia" => Some(include_str!("../presets/cia.conf")),
        "fig5-default" => Some(include_str!("../presets/fig5-default.conf")),
        "srr" => Some(include_str!("../presets/srr.conf")),
        "elc" => Some(include_str!("../presets/elc.conf")),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<ConfigDoc> {
    let text = source(name).ok_or_else(|| Error::Config {
        line: 0,
        message: format!("unknown preset `{name}` (known: {})", NAMES.join(", ")),
    })?;
    ConfigDoc::parse(text)
}
