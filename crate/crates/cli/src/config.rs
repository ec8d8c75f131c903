//! Parameter profiles.
//!
//! A profile is a TOML file of `key = value` lines naming [`HmaParams`]
//! fields; absent keys keep the `akb_small` defaults. The three shipped
//! profiles are compiled in and can be named instead of given as paths.

use std::path::Path;

use anyhow::{Context, Result};
use evrp_core::hma::HmaParams;

pub const PROFILES: [(&str, &str); 3] = [
    ("akb_small", include_str!("../../../profiles/akb_small.toml")),
    ("akb_medium", include_str!("../../../profiles/akb_medium.toml")),
    ("jd", include_str!("../../../profiles/jd.toml")),
];

pub fn parse_profile(text: &str) -> Result<HmaParams> {
    Ok(toml::from_str(text)?)
}

/// Resolves a shipped profile name or reads a profile file.
pub fn load_profile(spec: &str) -> Result<HmaParams> {
    if let Some((_, text)) = PROFILES.iter().find(|(name, _)| *name == spec) {
        return parse_profile(text);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading profile {}", path.display()))?;
    parse_profile(&text).with_context(|| format!("parsing profile {}", path.display()))
}

/// Command-line values that take precedence over the profile.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub time_limit: Option<f64>,
    pub g1: Option<usize>,
    pub g2: Option<usize>,
    pub population: Option<usize>,
    pub sr: Option<f64>,
    pub subproblems: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, mut params: HmaParams) -> HmaParams {
        if let Some(v) = self.seed {
            params.seed = v;
        }
        if let Some(v) = self.time_limit {
            params.time_limit = Some(v);
        }
        if let Some(v) = self.g1 {
            params.g1 = v;
        }
        if let Some(v) = self.g2 {
            params.g2 = v;
        }
        if let Some(v) = self.population {
            params.population = v;
        }
        if let Some(v) = self.sr {
            params.sr = v;
        }
        if let Some(v) = self.subproblems {
            params.subproblems = Some(v);
        }
        params
    }
}
