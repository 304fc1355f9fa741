//! Experiment configuration: file parsing, flag overrides, validation, hashing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use wallsim_core::asymptotics::PearceySpec;
use wallsim_core::correlation::ContourSpec;
use wallsim_core::dynamics::RunConfig;
use wallsim_core::quadrature::QuadratureSpec;
use wallsim_core::scalar::rational_from_f64;
use wallsim_core::{rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Verify,
    Kernel,
    Compare,
    Asymptotics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
    Json,
}

/// `q` as a decimal number or an exact ratio `"a/b"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QValue {
    Number(f64),
    Ratio(String),
}

impl QValue {
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if text.contains('/') {
            let q = QValue::Ratio(text.to_string());
            q.exact()?;
            Ok(q)
        } else {
            text.parse::<f64>().map(QValue::Number).map_err(|_| format!("`{text}` is not a number or a ratio a/b"))
        }
    }

    pub fn exact(&self) -> Result<Rational, String> {
        match self {
            QValue::Number(x) => rational_from_f64(*x).ok_or_else(|| format!("q = {x} is not finite")),
            QValue::Ratio(s) => {
                let (a, b) = s.split_once('/').ok_or_else(|| format!("`{s}` is not a ratio a/b"))?;
                let a: i64 = a.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
                let b: i64 = b.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
                if b == 0 {
                    return Err(format!("zero denominator in `{s}`"));
                }
                Ok(rational(a, b))
            }
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            QValue::Number(x) => *x,
            QValue::Ratio(_) => self.exact().map(|r| wallsim_core::Scalar::to_f64(&r)).unwrap_or(f64::NAN),
        }
    }
}

/// Everything a run depends on apart from subcommand-specific arguments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<QValue>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd_wall_uses_half_time: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pearcey: Option<PearceySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

pub const DEFAULT_SEED: u64 = 20261018;

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())]),
            Some("json") => serde_json::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())]),
            _ => Err(vec![format!("{}: config files must end in .toml or .json", path.display())]),
        }
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(mut self, flags: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(command, q, levels, steps, replicas, seed, odd_wall_uses_half_time, quadrature, contour, pearcey, output, format);
        self
    }

    /// Every violation, not just the first.
    pub fn validate(&self, command: Command, needs_run: bool) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if let Some(c) = self.command {
            if c != command {
                errs.push(format!("config is for `{c:?}` but the subcommand is `{command:?}`").to_lowercase());
            }
        }
        if let Some(q) = &self.q {
            match q.exact() {
                Err(e) => errs.push(e),
                Ok(_) if !(q.value() > 0.0 && q.value() < 1.0) => {
                    errs.push(format!("q must lie in the open interval (0,1), got {}", q.value()))
                }
                Ok(_) => {}
            }
        }
        if needs_run {
            for (name, missing) in [
                ("q", self.q.is_none()),
                ("K", self.levels.is_none()),
                ("steps", self.steps.is_none()),
                ("replicas", self.replicas.is_none()),
                ("seed", self.seed.is_none()),
            ] {
                if missing {
                    errs.push(format!("`{name}` is required"));
                }
            }
        }
        if self.levels == Some(0) {
            errs.push("K must be at least 1".into());
        }
        if self.replicas == Some(0) {
            errs.push("replicas must be at least 1".into());
        }
        if let Some(s) = &self.quadrature {
            if s.nodes == 0 || !(s.tol > 0.0) {
                errs.push("quadrature needs nodes >= 1 and tol > 0".into());
            }
        }
        if let Some(c) = &self.contour {
            if !c.x_nodes.is_power_of_two() || !c.u_nodes.is_power_of_two() || !(c.tol > 0.0) {
                errs.push("contour node counts must be powers of two and tol > 0".into());
            }
            if !(c.radius > 1.0) {
                errs.push(format!("contour radius must exceed 1, got {}", c.radius));
            }
        }
        if let Some(p) = &self.pearcey {
            if !(p.scale > 0.0) || p.nodes == 0 || !(p.y_max > 0.0) || !(p.tol > 0.0) {
                errs.push("pearcey needs scale > 0, nodes >= 1, y_max > 0, tol > 0".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn q_value(&self, default: f64) -> f64 {
        self.q.as_ref().map_or(default, QValue::value)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Run parameters; call only after `validate(_, true)` succeeded.
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            q: self.q_value(f64::NAN),
            levels: self.levels.unwrap_or(0),
            steps: self.steps.unwrap_or(0),
            replicas: self.replicas.unwrap_or(0),
            seed: self.seed(),
            odd_wall_uses_half_time: self.odd_wall_uses_half_time.unwrap_or(true),
        }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.quadrature.unwrap_or_default()
    }

    pub fn contour(&self) -> ContourSpec {
        self.contour.unwrap_or_default()
    }

    pub fn pearcey(&self) -> PearceySpec {
        self.pearcey.unwrap_or_default()
    }
}

/// Hex SHA-256 of the canonical JSON of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configs serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_simulate_config() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"q":0.5,"K":4,"steps":10,"replicas":100,"seed":42}"#).unwrap();
        assert!(c.validate(Command::Simulate, true).is_ok());
        assert_eq!(c.run_config().levels, 4);
    }

    #[test]
    fn violations_are_all_listed() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"q":1.5,"K":0}"#).unwrap();
        let errs = c.validate(Command::Simulate, true).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("(0,1)")));
        assert!(errs.iter().any(|e| e.contains("`steps`")));
        assert!(errs.iter().any(|e| e.contains("K must")));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"qq":0.5}"#).is_err());
    }

    #[test]
    fn flags_win() {
        let file: ExperimentConfig = toml::from_str("q = 0.5\nK = 3").unwrap();
        let flags = ExperimentConfig { q: Some(QValue::Number(0.2)), ..Default::default() };
        let eff = file.overridden_by(flags);
        assert_eq!(eff.q_value(0.0), 0.2);
        assert_eq!(eff.levels, Some(3));
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig {
            command: Some(Command::Kernel),
            q: Some(QValue::Ratio("1/3".into())),
            levels: Some(4),
            contour: Some(ContourSpec::large_t()),
            quadrature: Some(QuadratureSpec::default()),
            pearcey: Some(PearceySpec::default()),
            format: Some(Format::Csv),
            ..Default::default()
        };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn exact_q() {
        assert_eq!(QValue::parse("1/3").unwrap().exact().unwrap(), rational(1, 3));
        assert_eq!(QValue::parse("0.25").unwrap().exact().unwrap(), rational(1, 4));
        assert!(QValue::parse("1/0").is_err());
        assert!(QValue::parse("abc").is_err());
    }
}
