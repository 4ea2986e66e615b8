//! Incentive model constants and their configuration file.
//!
//! The defaults are the values derived from the crowdsourced preference
//! survey. They are injected everywhere rather than read from globals so that
//! sensitivity studies can swap them out.
//!
//! The configuration file is TOML (or JSON when the file name ends in
//! `.json`); every key is optional and falls back to the default:
//!
//! ```toml
//! tp_rewards = [0.18, 0.23, 0.26, 0.21]
//! tp_boundaries = ["09:00-11:00", "11:00-13:00", "13:00-15:00", "15:00-17:00"]
//! bl_low_threshold = 20.0
//! bl_high_threshold = 80.0
//! bl_reward_extreme = 1.0
//! bl_reward_mid = 0.5
//! max_energy_distance_m = 4.572
//!
//! [attribute_weights]
//! bl = 0.27
//! re = 0.28
//! st = 0.23
//! tp = 0.22
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{window_string, TimeWindow};

/// 15 feet in meters.
pub const DEFAULT_MAX_ENERGY_DISTANCE_M: f64 = 4.572;

/// Weights of the four reward attributes in the request total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributeWeights {
    /// Battery level.
    pub bl: f64,
    /// Requested energy.
    pub re: f64,
    /// Stay time.
    pub st: f64,
    /// Time of provision.
    pub tp: f64,
}

impl Default for AttributeWeights {
    fn default() -> Self {
        AttributeWeights {
            bl: 0.27,
            re: 0.28,
            st: 0.23,
            tp: 0.22,
        }
    }
}

impl AttributeWeights {
    pub fn sum(&self) -> f64 {
        self.bl + self.re + self.st + self.tp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConstants {
    pub attribute_weights: AttributeWeights,
    /// Time-of-provision periods, contiguous and in clock order.
    #[serde(with = "tp_boundaries_serde")]
    pub tp_boundaries: [TimeWindow; 4],
    /// Reward for a request starting in the matching period.
    pub tp_rewards: [f64; 4],
    /// Battery levels strictly below this earn the extreme reward.
    pub bl_low_threshold: f64,
    /// Battery levels strictly above this earn the extreme reward.
    pub bl_high_threshold: f64,
    pub bl_reward_extreme: f64,
    pub bl_reward_mid: f64,
    /// Maximum provider-to-consumer distance for wireless transfer.
    pub max_energy_distance_m: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        let period = |lo: u16, hi: u16| {
            TimeWindow::from_minutes(lo * 60, hi * 60).expect("default period is well formed")
        };
        ModelConstants {
            attribute_weights: AttributeWeights::default(),
            tp_boundaries: [period(9, 11), period(11, 13), period(13, 15), period(15, 17)],
            tp_rewards: [0.18, 0.23, 0.26, 0.21],
            bl_low_threshold: 20.0,
            bl_high_threshold: 80.0,
            bl_reward_extreme: 1.0,
            bl_reward_mid: 0.5,
            max_energy_distance_m: DEFAULT_MAX_ENERGY_DISTANCE_M,
        }
    }
}

mod tp_boundaries_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Period(#[serde(with = "window_string")] TimeWindow);

    pub fn serialize<S: Serializer>(periods: &[TimeWindow; 4], s: S) -> Result<S::Ok, S::Error> {
        periods.map(Period).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[TimeWindow; 4], D::Error> {
        let periods = <[Period; 4]>::deserialize(d)?;
        Ok(periods.map(|p| p.0))
    }
}

impl ModelConstants {
    /// Loads constants from a TOML or JSON file and validates them.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let constants = if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        constants.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let constants: ModelConstants =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        constants.validate()?;
        Ok(constants)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let constants: ModelConstants =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        constants.validate()?;
        Ok(constants)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("constants always serialize")
    }

    /// Checks structural sanity. Weights and rewards are not required to sum
    /// to one.
    pub fn validate(&self) -> Result<()> {
        let w = &self.attribute_weights;
        let reals = [
            w.bl,
            w.re,
            w.st,
            w.tp,
            self.bl_low_threshold,
            self.bl_high_threshold,
            self.bl_reward_extreme,
            self.bl_reward_mid,
            self.max_energy_distance_m,
        ];
        if reals
            .iter()
            .chain(&self.tp_rewards)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("all constants must be finite".into()));
        }
        if [w.bl, w.re, w.st, w.tp].iter().any(|&v| v < 0.0) {
            return Err(Error::Config("attribute weights must be non-negative".into()));
        }
        if self.bl_low_threshold > self.bl_high_threshold {
            return Err(Error::Config(format!(
                "bl_low_threshold {} exceeds bl_high_threshold {}",
                self.bl_low_threshold, self.bl_high_threshold
            )));
        }
        if self.max_energy_distance_m < 0.0 {
            return Err(Error::Config("max_energy_distance_m must be non-negative".into()));
        }
        for pair in self.tp_boundaries.windows(2) {
            if pair[0].end() != pair[1].start() {
                return Err(Error::Config(format!(
                    "tp_boundaries must be contiguous: {} is followed by {}",
                    pair[0], pair[1]
                )));
            }
        }
        if self.tp_boundaries.iter().any(|p| !p.is_valid()) {
            return Err(Error::Config("tp_boundaries contain an empty period".into()));
        }
        Ok(())
    }
}
