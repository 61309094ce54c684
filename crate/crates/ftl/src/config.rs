// SPDX-License-Identifier: Apache-2.0
//! Run configuration in a `key = value` text format.
//!
//! Every flow reads its model parameters and seeds from a [`RunConfig`].
//! The canonical text form (sorted keys, one per line) is hashed to tag
//! every output file, so two files with the same tag came from the same
//! parameters.

use std::fmt;
use std::path::Path;

use ftl_core::cell::CellParams;
use ftl_core::chain::{Discipline, PlanConfig};
use ftl_core::trainer::{MonteCarloConfig, TrainerConfig, DEFAULT_LAMBDA, DEFAULT_STEP};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{FlowError, Result};

/// Handicap used when training the library.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Handicap {
    /// The largest converging handicap of each function.
    Max,
    Fixed(f64),
}

impl Serialize for Handicap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Max => s.serialize_str("max"),
            Self::Fixed(c) => s.serialize_f64(*c),
        }
    }
}

impl<'de> Deserialize<'de> for Handicap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) if c >= 0.0 => Ok(Self::Fixed(c)),
            Raw::Text(t) if t == "max" => Ok(Self::Max),
            _ => Err(serde::de::Error::custom(
                "handicap must be \"max\" or a non-negative number",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisciplineSetting {
    Bidirectional,
    Erase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Seed of the test population, kept apart from the training seed.
    pub test_seed: u64,
    pub vdd: f64,
    pub gate_drive: f64,
    pub beta: f64,
    pub vt_floor: f64,
    pub pulse_step: f64,
    pub delay_d0: f64,
    pub delay_k: f64,
    pub train_step: f64,
    pub lambda: f64,
    pub train_handicap: Handicap,
    pub sigma_vt: f64,
    pub sigma_beta: f64,
    pub n_mc: usize,
    pub n_test: usize,
    /// Smallest acceptable final functional yield.
    pub min_yield: f64,
    pub pulse_duration_us: f64,
    pub discipline: DisciplineSetting,
    /// Random sequences for equivalence checks beyond the exhaustive limit.
    pub vectors: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = CellParams::new(1);
        Self {
            seed: 1,
            test_seed: 2,
            vdd: p.vdd,
            gate_drive: p.gate_drive,
            beta: p.beta,
            vt_floor: p.vt_floor,
            pulse_step: p.pulse_step,
            delay_d0: p.delay_d0,
            delay_k: p.delay_k,
            train_step: DEFAULT_STEP,
            lambda: DEFAULT_LAMBDA,
            train_handicap: Handicap::Max,
            sigma_vt: 0.03,
            sigma_beta: 0.05,
            n_mc: 2000,
            n_test: 10_000,
            min_yield: 1.0,
            pulse_duration_us: 1.0,
            discipline: DisciplineSetting::Bidirectional,
            vectors: 256,
        }
    }
}

impl RunConfig {
    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(FlowError::Usage(format!("config line {}: expected key = value", i + 1)));
            };
            cfg.set(k.trim(), v.trim())
                .map_err(|e| FlowError::Usage(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| FlowError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let serde_json::Value::Object(mut map) = serde_json::to_value(&*self).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        let slot = map
            .get_mut(key)
            .ok_or_else(|| FlowError::Usage(format!("unknown config key `{key}`")))?;
        *slot = serde_json::from_str(value).unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        let next: Self = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| FlowError::Usage(format!("bad value for `{key}`: {e}")))?;
        next.validate()?;
        *self = next;
        Ok(())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .as_ref()
                .split_once('=')
                .ok_or_else(|| FlowError::Usage(format!("override `{}` is not key=value", o.as_ref())))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.cell_params(1)
            .validate()
            .map_err(|e| FlowError::Usage(e.to_string()))?;
        let positive = [
            ("train_step", self.train_step),
            ("lambda", self.lambda),
            ("pulse_duration_us", self.pulse_duration_us),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| v.is_nan() || *v <= 0.0) {
            return Err(FlowError::Usage(format!("`{k}` must be positive")));
        }
        if self.sigma_vt < 0.0 || self.sigma_beta < 0.0 {
            return Err(FlowError::Usage("sigmas must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.min_yield) {
            return Err(FlowError::Usage("`min_yield` must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn cell_params(&self, arity: usize) -> CellParams {
        CellParams {
            arity,
            vdd: self.vdd,
            gate_drive: self.gate_drive,
            beta: self.beta,
            vt_floor: self.vt_floor,
            pulse_step: self.pulse_step,
            delay_d0: self.delay_d0,
            delay_k: self.delay_k,
        }
    }

    pub fn trainer(&self) -> TrainerConfig {
        TrainerConfig {
            step: self.train_step,
            ..TrainerConfig::default()
        }
    }

    pub fn training_population(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            samples: self.n_mc,
            sigma_vt: self.sigma_vt,
            sigma_beta: self.sigma_beta,
            seed: self.seed,
        }
    }

    pub fn test_population(&self) -> MonteCarloConfig {
        MonteCarloConfig {
            samples: self.n_test,
            sigma_vt: self.sigma_vt,
            sigma_beta: self.sigma_beta,
            seed: self.test_seed,
        }
    }

    pub fn plan(&self) -> PlanConfig {
        let discipline = match self.discipline {
            DisciplineSetting::Bidirectional => Discipline::Bidirectional,
            DisciplineSetting::Erase => Discipline::EraseThenProgram,
        };
        PlanConfig {
            pulse_duration_us: self.pulse_duration_us,
            discipline,
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Canonical text: one `key = value` per line in key order.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let serde_json::Value::Object(map) = serde_json::to_value(self).expect("config serializes") else {
            unreachable!("config is a struct")
        };
        for (k, v) in map {
            match v {
                serde_json::Value::String(s) => writeln!(f, "{k} = {s}")?,
                other => writeln!(f, "{k} = {other}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("train_handicap", "0.02").unwrap();
        cfg.set("discipline", "erase").unwrap();
        let back = RunConfig::parse(&cfg.to_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_ne!(RunConfig::default().hash(), cfg.hash());
    }

    #[test]
    fn comments_and_overrides() {
        let mut cfg = RunConfig::parse("# model\nseed = 9 # training\nsigma_vt=0.02\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.sigma_vt, 0.02);
        cfg.apply_overrides(&["train_handicap=max", "n_mc = 10"]).unwrap();
        assert_eq!(cfg.train_handicap, Handicap::Max);
        assert_eq!(cfg.n_mc, 10);
    }

    #[test]
    fn bad_input_is_a_usage_error() {
        for text in [
            "nope = 1",
            "seed",
            "seed = -1",
            "vt_floor = 2",
            "train_handicap = -0.1",
            "lambda = 0",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(FlowError::Usage(_))), "{text}");
        }
    }
}
