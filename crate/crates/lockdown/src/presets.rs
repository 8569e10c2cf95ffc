//! Literature disease-parameter sets.
//!
//! Each preset fixes the recovery and symptom rates; transmission is left
//! at zero and set later by calibration to an initial growth rate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{DiseaseParams, ModelFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Birge,
    Giordano,
    /// Missing rates filled with `r_a = r_s = gamma` and `alpha_hat = 0.6754`.
    Bertozzi,
}

/// Rates carried by a preset, per day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetRates {
    pub gamma: f64,
    pub r_a: f64,
    pub r_s: f64,
    pub epsilon: f64,
    pub alpha_hat: f64,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Birge, Preset::Giordano, Preset::Bertozzi];

    pub fn rates(self) -> PresetRates {
        match self {
            Preset::Birge => PresetRates {
                gamma: 0.29,
                r_a: 0.29,
                r_s: 0.29,
                epsilon: 0.14,
                alpha_hat: 0.55,
            },
            Preset::Giordano => PresetRates {
                gamma: 0.034,
                r_a: 0.034,
                r_s: 0.017,
                epsilon: 0.125,
                alpha_hat: 0.6754,
            },
            Preset::Bertozzi => PresetRates {
                gamma: 0.2,
                r_a: 0.2,
                r_s: 0.2,
                epsilon: 0.32,
                alpha_hat: 0.6754,
            },
        }
    }

    /// Uncalibrated parameters for `family` at decay rate `alpha`.
    ///
    /// SIS and SIR use `gamma` as the recovery rate; SIR starts from
    /// `beta_a = 1` and is calibrated through `zeta`.
    pub fn params(self, family: ModelFamily, alpha: f64) -> DiseaseParams {
        let r = self.rates();
        match family {
            ModelFamily::Sis => DiseaseParams::sis(1.0, r.gamma, alpha),
            ModelFamily::Sir => DiseaseParams::sir(1.0, r.gamma, alpha),
            ModelFamily::Covid => DiseaseParams::covid(0.0, r.alpha_hat, r.epsilon, r.r_a, r.r_s, alpha),
        }
    }

    /// Decay rate as a fraction of the symptomatic recovery rate.
    pub fn alpha_fraction(self, fraction: f64) -> f64 {
        fraction * self.rates().r_s
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Birge => "birge",
            Preset::Giordano => "giordano",
            Preset::Bertozzi => "bertozzi",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "birge" => Ok(Preset::Birge),
            "giordano" => Ok(Preset::Giordano),
            "bertozzi" => Ok(Preset::Bertozzi),
            other => Err(Error::invalid("params", format!("unknown preset `{other}` (birge, giordano, bertozzi)"))),
        }
    }
}
