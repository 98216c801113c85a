use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variation {
    /// Starts at the minimum load.
    LV1,
    /// Starts at the mean load.
    LV2,
}

impl FromStr for Variation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LV1" => Ok(Variation::LV1),
            "LV2" => Ok(Variation::LV2),
            _ => Err(Error::Config(format!("unknown load variation `{s}`"))),
        }
    }
}

/// Sinusoidal incoming load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadProfile {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Ticks per sine period.
    pub period: f64,
    pub variation: Variation,
}

impl Default for LoadProfile {
    fn default() -> Self {
        LoadProfile {
            lambda_min: 1000.0,
            lambda_max: 46000.0,
            period: 315.0,
            variation: Variation::LV1,
        }
    }
}

impl LoadProfile {
    pub fn check(&self) -> Result<()> {
        if !(self.lambda_min < self.lambda_max) || self.lambda_min < 0.0 {
            return Err(Error::Config(format!(
                "load range [{}, {}] is empty or negative",
                self.lambda_min, self.lambda_max
            )));
        }
        if !(self.period >= 2.0) {
            return Err(Error::Config(format!("load period must be at least 2 ticks, got {}", self.period)));
        }
        Ok(())
    }

    pub fn with_variation(mut self, variation: Variation) -> Self {
        self.variation = variation;
        self
    }
}

/// Load at (possibly fractional) tick `t`.
pub fn gen_load(profile: &LoadProfile, t: f64) -> f64 {
    let mid = (profile.lambda_min + profile.lambda_max) / 2.0;
    let amp = (profile.lambda_max - profile.lambda_min) / 2.0;
    let phase = match profile.variation {
        Variation::LV1 => -FRAC_PI_2,
        Variation::LV2 => 0.0,
    };
    (mid + amp * (2.0 * PI * t / profile.period + phase).sin()).clamp(profile.lambda_min, profile.lambda_max)
}
