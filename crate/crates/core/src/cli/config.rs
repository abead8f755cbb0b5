use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::oracle::Grid;
use crate::potential::PotentialModel;
use crate::semiclassics::{DEFAULT_FIXING_CONSTANT, DEFAULT_RADIUS_CONSTANT};

/// Potential given either as an expression or as a named builtin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Parameter of builtins that take one (the tilt of `tilted_double_well`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GridPolicy {
    /// Step at most `h^{3/2} / 4`, odd node count.
    #[default]
    Auto,
    /// Fixed number of interior nodes.
    Nodes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_fixing")]
    pub fixing: f64,
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS_CONSTANT
}

fn default_fixing() -> f64 {
    DEFAULT_FIXING_CONSTANT
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { radius: DEFAULT_RADIUS_CONSTANT, fixing: DEFAULT_FIXING_CONSTANT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelOptions {
    pub energy: f64,
    /// Defaults to the action midpoints of the wells on either side of the barrier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylOptions {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_samples() -> usize {
    1 << 20
}

fn default_seed() -> u64 {
    0x5eed
}

impl Default for WeylOptions {
    fn default() -> Self {
        Self { samples: default_samples(), seed: default_seed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub window: (f64, f64),
    pub domain: (f64, f64),
    pub hbar: Vec<f64>,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tunnel: Option<TunnelOptions>,
    #[serde(default)]
    pub weyl: WeylOptions,
}

fn invalid(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", path.display()))
}

impl RunConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<(Self, PotentialModel), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(path, e))?;
        Self::from_str(&text, path)
    }

    pub fn from_str(text: &str, path: &Path) -> Result<(Self, PotentialModel), CliError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| invalid(path, format_args!("line {} column {}: {e}", e.line(), e.column())))?;
        let model = config.validate(path)?;
        Ok((config, model))
    }

    fn validate(&self, path: &Path) -> Result<PotentialModel, CliError> {
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(path, format_args!("window: need Λ1 < Λ2, got ({lo}, {hi})")));
        }
        let (a, b) = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(invalid(path, format_args!("domain: need a < b, got ({a}, {b})")));
        }
        if self.hbar.is_empty() {
            return Err(invalid(path, "hbar: list is empty"));
        }
        if let Some(h) = self.hbar.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(invalid(path, format_args!("hbar: every value must be positive, got {h}")));
        }
        if let GridPolicy::Nodes(n) = self.grid {
            if n < 3 {
                return Err(invalid(path, format_args!("grid.nodes: need at least 3, got {n}")));
            }
        }
        let t = self.tolerances;
        if !(t.radius > 0.0 && t.fixing > 0.0) {
            return Err(invalid(path, "tolerances: radius and fixing must be positive"));
        }
        if self.weyl.samples == 0 {
            return Err(invalid(path, "weyl.samples: must be positive"));
        }
        let p = &self.potential;
        match (&p.expr, &p.builtin) {
            (Some(src), None) => {
                if p.c.is_some() {
                    return Err(invalid(path, "potential.c: only builtins take a parameter"));
                }
                PotentialModel::parse(src)
                    .map_err(|e| invalid(path, format_args!("potential.expr: offset {}: {e}", e.offset())))
            }
            (None, Some(name)) => {
                PotentialModel::builtin(name, p.c).map_err(|e| invalid(path, format_args!("potential.builtin: {e}")))
            }
            _ => Err(invalid(path, "potential: give exactly one of expr and builtin")),
        }
    }

    /// SHA-256 of the canonical serialisation, independent of formatting in the file.
    #[must_use]
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    #[must_use]
    pub fn grid(&self, hbar: f64) -> Grid {
        match self.grid {
            GridPolicy::Auto => Grid::auto(self.domain, hbar),
            GridPolicy::Nodes(n) => Grid::new(self.domain.0, self.domain.1, n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"potential": {"builtin": "harmonic"}, "window": [0.05, 1.05], "domain": [-4, 4], "hbar": [0.1]}"#;

    fn load(text: &str) -> Result<(RunConfig, PotentialModel), CliError> {
        RunConfig::from_str(text, Path::new("test.json"))
    }

    #[test]
    fn defaults_are_filled_in() {
        let (c, _) = load(BASE).unwrap();
        assert_eq!(c.grid, GridPolicy::Auto);
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(c.tunnel.is_none());
    }

    #[test]
    fn hash_ignores_layout() {
        let (a, _) = load(BASE).unwrap();
        let spaced = BASE.replace(", ", ",\n    ");
        let (b, _) = load(&spaced).unwrap();
        assert_eq!(a.hash(), b.hash());
        let (c, _) = load(&BASE.replace("0.1]", "0.05]")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            BASE.replace("[0.05, 1.05]", "[1.05, 0.05]"),
            BASE.replace("[-4, 4]", "[4, -4]"),
            BASE.replace("[0.1]", "[]"),
            BASE.replace("[0.1]", "[-0.1]"),
            BASE.replace(r#"{"builtin": "harmonic"}"#, r#"{"expr": "x^"}"#),
            BASE.replace(r#"{"builtin": "harmonic"}"#, r#"{"builtin": "tilted_double_well"}"#),
            BASE.replace(r#""hbar""#, r#""hbars""#),
            BASE.replace('}', ""),
        ] {
            assert!(matches!(load(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn parse_errors_carry_the_offset() {
        let text = BASE.replace(r#"{"builtin": "harmonic"}"#, r#"{"expr": "x^2 + $"}"#);
        let CliError::Config(msg) = load(&text).unwrap_err() else { panic!() };
        assert!(msg.contains("test.json") && msg.contains("offset 6"), "{msg}");
    }

    #[test]
    fn explicit_grid() {
        let text = format!(r#"{}, "grid": {{"nodes": 101}}}}"#, &BASE[..BASE.len() - 1]);
        let (c, _) = load(&text).unwrap();
        assert_eq!(c.grid(0.1).n, 101);
    }
}
