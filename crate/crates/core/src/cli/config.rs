//! The JSON configuration document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adjustment::{solve_rho_d, solve_rho_n};
use crate::error::{Error, Result};
use crate::model::{MarketParams, Severity};
use crate::retention::RetentionFn;

pub const DEFAULT_EPSILON_FRAC: f64 = 0.01;
pub const DEFAULT_BARRIER_MULT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub market: MarketParams,
    pub severity: Severity,
    #[serde(default)]
    pub retention: RetentionSpec,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default)]
    pub study: StudySpec,
}

/// Retention as written in a config; the optimal ones are resolved against the market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RetentionSpec {
    // Empty braces so that extra keys are rejected.
    Full {},
    Proportional {
        q: f64,
    },
    Cap {
        d: f64,
    },
    DiffusionOptimal {},
    MaxAdjust {},
}

impl Default for RetentionSpec {
    fn default() -> Self {
        RetentionSpec::DiffusionOptimal {}
    }
}

impl RetentionSpec {
    /// `max_adjust` uses ρ_n at scale `n`.
    pub fn resolve(&self, p: &MarketParams, s: &Severity, n: f64) -> Result<RetentionFn> {
        let r = match *self {
            RetentionSpec::Full {} => RetentionFn::Full,
            RetentionSpec::Proportional { q } => RetentionFn::Proportional { q },
            RetentionSpec::Cap { d } => RetentionFn::Cap { d },
            RetentionSpec::DiffusionOptimal {} => RetentionFn::diffusion_optimal(solve_rho_d(p, s)?, p),
            RetentionSpec::MaxAdjust {} => RetentionFn::max_adjust(solve_rho_n(n, p, s)?, n, p),
        };
        r.validate()?;
        Ok(r)
    }

    /// Parses `full`, `diffusion_optimal`, `max_adjust`, `proportional=q` or `cap=d`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, arg) = match text.split_once('=') {
            Some((k, a)) => (k, Some(a)),
            None => (text, None),
        };
        let number = |a: Option<&str>| -> Result<f64> {
            a.and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("retention `{text}` needs a numeric parameter")))
        };
        let spec = match kind {
            "full" => RetentionSpec::Full {},
            "diffusion_optimal" => RetentionSpec::DiffusionOptimal {},
            "max_adjust" => RetentionSpec::MaxAdjust {},
            "proportional" => RetentionSpec::Proportional { q: number(arg)? },
            "cap" => RetentionSpec::Cap { d: number(arg)? },
            _ => return Err(Error::InvalidConfig(format!("unknown retention `{text}`"))),
        };
        if arg.is_some() && !matches!(spec, RetentionSpec::Proportional { .. } | RetentionSpec::Cap { .. }) {
            return Err(Error::InvalidConfig(format!("retention `{kind}` takes no parameter")));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    /// ε as a fraction of ρ_D · sup_d E[Z_d].
    #[serde(default = "default_epsilon_frac")]
    pub epsilon_frac: f64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self {
            epsilon_frac: DEFAULT_EPSILON_FRAC,
        }
    }
}

fn default_epsilon_frac() -> f64 {
    DEFAULT_EPSILON_FRAC
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySpec {
    pub n_list: Vec<f64>,
    /// (x, m) pairs.
    pub states: Vec<[f64; 2]>,
    pub paths: u64,
    pub seed: u64,
    pub barrier_mult: f64,
    /// Directory for the CSV and summary files.
    pub outputs: Option<PathBuf>,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            n_list: vec![4.0, 16.0, 64.0, 256.0, 1024.0],
            states: vec![[2.0, 2.0], [3.0, 4.0]],
            paths: 100_000,
            seed: 42,
            barrier_mult: DEFAULT_BARRIER_MULT,
            outputs: None,
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if !(cfg.constants.epsilon_frac > 0.0 && cfg.constants.epsilon_frac < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon_frac must lie in (0, 1), got {}",
                cfg.constants.epsilon_frac
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXP1: &str = r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0}}"#;

    #[test]
    fn minimal_document_takes_defaults() {
        let c = Config::from_json(EXP1).unwrap();
        assert_eq!(c.retention, RetentionSpec::DiffusionOptimal {});
        assert_eq!(c.constants.epsilon_frac, 0.01);
        assert_eq!(c.study.n_list, vec![4.0, 16.0, 64.0, 256.0, 1024.0]);
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        let bad = [
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0},"extra":1}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3,"mu":1},"severity":{"kind":"exponential","rate":1.0}}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0,"shape":2}}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0},"retention":{"kind":"cap","d":1.0,"q":2}}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0},"retention":{"kind":"full","q":2}}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0},"study":{"paths":10,"path":1}}"#,
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0},"constants":{"eps":0.1}}"#,
        ];
        for b in bad {
            assert!(matches!(Config::from_json(b), Err(Error::InvalidConfig(_))), "{b}");
        }
    }

    #[test]
    fn retention_fragments() {
        for (frag, want) in [
            (r#"{"kind":"diffusion_optimal"}"#, RetentionSpec::DiffusionOptimal {}),
            (r#"{"kind":"proportional","q":0.5}"#, RetentionSpec::Proportional { q: 0.5 }),
            (r#"{"kind":"cap","d":1.0}"#, RetentionSpec::Cap { d: 1.0 }),
            (r#"{"kind":"full"}"#, RetentionSpec::Full {}),
            (r#"{"kind":"max_adjust"}"#, RetentionSpec::MaxAdjust {}),
        ] {
            let got: RetentionSpec = serde_json::from_str(frag).unwrap();
            assert_eq!(got, want);
        }
        assert_eq!(RetentionSpec::parse("cap=2").unwrap(), RetentionSpec::Cap { d: 2.0 });
        assert!(RetentionSpec::parse("cap").is_err());
        assert!(RetentionSpec::parse("full=1").is_err());
        assert!(RetentionSpec::parse("stop_loss").is_err());
    }

    #[test]
    fn round_trip() {
        let c = Config::from_json(EXP1).unwrap();
        let back = Config::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
