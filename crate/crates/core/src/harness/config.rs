//! Scenario configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dgm::{ComponentModelParams, Scenario};
use crate::error::{Error, Result};
use crate::impute::MethodSpec;
use crate::missingness::MechanismSpec;

/// A fully resolved scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub n: usize,
    pub scenario: Scenario,
    pub dgm_params: ComponentModelParams,
    pub mechanism: MechanismSpec,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub base_seed: u64,
    pub alpha_level: f64,
    pub covariate_pool_size: usize,
    pub continuity_correction: bool,
}

fn default_n() -> usize {
    1280
}
fn default_reps() -> usize {
    2000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_pool() -> usize {
    198
}
fn yes() -> bool {
    true
}

/// On-disk layout. Component-model parameters come from an inline `[dgm]`
/// table, a `dgm_file` path relative to the config file, or the bundled
/// defaults, in that order of precedence.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    scenario: Scenario,
    #[serde(default = "default_reps")]
    replications: usize,
    #[serde(default)]
    base_seed: u64,
    #[serde(default = "default_alpha")]
    alpha_level: f64,
    #[serde(default = "default_pool")]
    covariate_pool_size: usize,
    #[serde(default = "yes")]
    continuity_correction: bool,
    mechanism: MechanismSpec,
    #[serde(default)]
    methods: Vec<MethodSpec>,
    dgm_file: Option<PathBuf>,
    dgm: Option<ComponentModelParams>,
}

impl ScenarioConfig {
    pub fn new(name: impl Into<String>, scenario: Scenario, mechanism: MechanismSpec, methods: Vec<MethodSpec>) -> Self {
        Self {
            name: name.into(),
            n: default_n(),
            scenario,
            dgm_params: ComponentModelParams::default().with_scenario(scenario),
            mechanism,
            methods,
            replications: default_reps(),
            base_seed: 0,
            alpha_level: default_alpha(),
            covariate_pool_size: default_pool(),
            continuity_correction: true,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent())
    }

    /// Parse a scenario; `base_dir` resolves a relative `dgm_file`.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let dgm = match (file.dgm, file.dgm_file) {
            (Some(_), Some(_)) => return Err(Error::Config("give either [dgm] or dgm_file, not both".into())),
            (Some(d), None) => d,
            (None, Some(p)) => {
                let p = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                };
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                ComponentModelParams::from_toml(&text)?
            }
            (None, None) => ComponentModelParams::default(),
        };
        let config = Self {
            name: file.name,
            n: file.n,
            scenario: file.scenario,
            dgm_params: dgm.with_scenario(file.scenario),
            mechanism: file.mechanism,
            methods: file.methods,
            replications: file.replications,
            base_seed: file.base_seed,
            alpha_level: file.alpha_level,
            covariate_pool_size: file.covariate_pool_size,
            continuity_correction: file.continuity_correction,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 4 {
            return bad(format!("n = {} but at least 4 participants are needed", self.n));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return bad(format!("alpha_level {} outside (0, 1)", self.alpha_level));
        }
        if self.covariate_pool_size == 0 {
            return bad("covariate_pool_size must be positive".into());
        }
        if self.dgm_params.scenario != self.scenario {
            return bad("dgm scenario disagrees with the scenario field".into());
        }
        let wrap = |e: Error| Error::Config(e.to_string());
        self.dgm_params.validate().map_err(wrap)?;
        self.mechanism.validate().map_err(wrap)?;
        let mut labels = std::collections::HashSet::new();
        for m in &self.methods {
            m.validate().map_err(wrap)?;
            if !labels.insert(m.label()) {
                return bad(format!("method {} listed twice", m.label()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impute::{Engine, MethodKind};
    use crate::missingness::MechanismName;

    const SAMPLE: &str = r#"
name = "demo"
scenario = "Null"
replications = 50
base_seed = 7

[mechanism]
name = "MAR_Age"

[[methods]]
kind = "CompleteCase"

[[methods]]
kind = "MIComposite"
engine = "pmm"
donors_k = 10
num_imputations = 20
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ScenarioConfig::from_toml(SAMPLE, None).unwrap();
        assert_eq!(c.n, 1280);
        assert_eq!(c.alpha_level, 0.05);
        assert_eq!(c.replications, 50);
        assert_eq!(c.mechanism.name, MechanismName::MarAge);
        assert_eq!(c.methods.len(), 2);
        assert_eq!(c.methods[1].kind, MethodKind::MiComposite);
        assert_eq!(c.methods[1].engine, Engine::Pmm);
        assert_eq!(c.methods[1].donors_k, 10);
        assert_eq!(c.dgm_params, ComponentModelParams::default());
    }

    #[test]
    fn rejects_bad_values() {
        let small = SAMPLE.replace("replications = 50", "replications = 50\nn = 3");
        assert!(matches!(ScenarioConfig::from_toml(&small, None), Err(Error::Config(_))));
        let alpha = SAMPLE.replace("base_seed = 7", "base_seed = 7\nalpha_level = 1.5");
        assert!(ScenarioConfig::from_toml(&alpha, None).is_err());
        let unknown = SAMPLE.replace("base_seed = 7", "base_seed = 7\nbogus = 1");
        assert!(ScenarioConfig::from_toml(&unknown, None).is_err());
        let dup = format!("{SAMPLE}\n[[methods]]\nkind = \"CompleteCase\"\n");
        assert!(ScenarioConfig::from_toml(&dup, None).is_err());
        let mech = SAMPLE.replace("name = \"MAR_Age\"", "name = \"MAR_Weather\"");
        assert!(ScenarioConfig::from_toml(&mech, None).is_err());
    }

    #[test]
    fn dgm_from_file_and_scenario_override() {
        let dir = tempfile::tempdir().unwrap();
        let params = ComponentModelParams::default().with_treatment_scaled(2.0);
        std::fs::write(dir.path().join("alt.toml"), params.to_toml()).unwrap();
        let text = SAMPLE.replace("scenario = \"Null\"", "scenario = \"Alternative\"\ndgm_file = \"alt.toml\"");
        std::fs::write(dir.path().join("s.toml"), text).unwrap();
        let c = ScenarioConfig::from_path(dir.path().join("s.toml")).unwrap();
        assert_eq!(c.scenario, Scenario::Alternative);
        assert_eq!(c.dgm_params, params.with_scenario(Scenario::Alternative));
        assert!(ScenarioConfig::from_path(dir.path().join("missing.toml")).is_err());
    }
}
