use std::path::Path;

use kawa_core::kmc::{DEFAULT_BUDGET, MIN_RECORDS};
use kawa_core::lattice::{rational_text, Geometry, ModelParams, Rational};
use kawa_core::srw::DEFAULT_EPSILON;
use kawa_core::verify::H1Mode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const PRESETS: [&str; 2] = ["preset-4x3", "preset-4x4"];

/// Largest state count that is enumerated.
pub const ENUMERATION_LIMIT: u128 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LatticeConfig {
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "U", with = "rational_text")]
    pub u: Rational,
    #[serde(with = "rational_text")]
    pub delta1: Rational,
    #[serde(with = "rational_text")]
    pub delta2: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct RunConfig {
    pub beta_grid: Vec<f64>,
    /// Seed of the first β; later β use the following integers.
    pub seeds: u64,
    pub run_count: usize,
    pub budget: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { beta_grid: vec![1.0, 2.0, 4.0], seeds: 1, run_count: 500, budget: DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub landscape: bool,
    pub capacity: bool,
    pub srw: SrwConfig,
    pub simulate: bool,
    pub verify: bool,
    pub h1_mode: H1Mode,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            landscape: true,
            capacity: true,
            srw: SrwConfig::default(),
            simulate: true,
            verify: true,
            h1_mode: H1Mode::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct SrwConfig {
    pub enabled: bool,
    pub m_list: Vec<i32>,
    pub epsilon: f64,
}

impl Default for SrwConfig {
    fn default() -> Self {
        Self { enabled: true, m_list: vec![16, 64, 256], epsilon: DEFAULT_EPSILON }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["json".into(), "csv".into()] }
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let (width, height) = match name {
        "preset-4x3" => (4, 3),
        "preset-4x4" => (4, 4),
        _ => return None,
    };
    let p = ModelParams::preset();
    Some(ExperimentConfig {
        lattice: LatticeConfig { width, height },
        model: ModelConfig { u: p.u, delta1: p.delta1, delta2: p.delta2 },
        run: RunConfig { beta_grid: vec![1.0, 2.0, 4.0, 6.0, 8.0], ..RunConfig::default() },
        analysis: AnalysisConfig::default(),
        output: OutputConfig::default(),
    })
}

/// Reads TOML (dotted keys allowed) or JSON, chosen by extension or a leading `{`.
pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text, path.extension().is_some_and(|e| e == "json"))
}

pub fn parse(text: &str, json: bool) -> Result<ExperimentConfig, CliError> {
    if json || text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    } else {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("malformed config: {e}")))
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.model.u, self.model.delta1, self.model.delta2)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        Geometry::new(self.lattice.width, self.lattice.height).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        let geom = self.geometry()?;
        self.params()?;
        let states = geom.state_count();
        if states > ENUMERATION_LIMIT {
            return Err(CliError::Refused(format!(
                "{}x{} has 3^{} = {states} configurations, above the enumeration limit 2^32 = {ENUMERATION_LIMIT}; \
                 use a box with at most 20 sites",
                self.lattice.width,
                self.lattice.height,
                geom.len()
            )));
        }
        let grid = &self.run.beta_grid;
        if grid.is_empty() {
            return usage("run.betaGrid is empty".into());
        }
        if grid.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return usage("run.betaGrid entries must be positive".into());
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return usage("run.betaGrid must be strictly increasing".into());
        }
        if self.run.run_count < MIN_RECORDS {
            return usage(format!("run.runCount must be at least {MIN_RECORDS}"));
        }
        let srw = &self.analysis.srw;
        if srw.m_list.iter().any(|&m| m < 2) {
            return usage("analysis.srw.mList entries must be at least 2".into());
        }
        if !(0.0..1.0).contains(&srw.epsilon) {
            return usage("analysis.srw.epsilon must lie in [0, 1)".into());
        }
        if let Some(f) = self.output.formats.iter().find(|f| *f != "json" && *f != "csv") {
            return usage(format!("unknown output format {f:?}"));
        }
        Ok(())
    }

    pub fn csv(&self) -> bool {
        self.output.formats.iter().any(|f| f == "csv")
    }

    /// SHA-256 of the canonical JSON form, output settings excluded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        v.as_object_mut().unwrap().remove("output");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_toml_and_json_agree() {
        let toml = r#"
lattice.width = 4
lattice.height = 3
model.U = "1"
model.delta1 = "9/10"
model.delta2 = 1.5
run.betaGrid = [1.0, 2.0]
analysis.srw.mList = [16]
"#;
        let json = r#"{"lattice": {"width": 4, "height": 3}, "model": {"U": 1, "delta1": "0.9", "delta2": "3/2"},
            "run": {"betaGrid": [1.0, 2.0]}, "analysis": {"srw": {"mList": [16]}}}"#;
        let a = parse(toml, false).unwrap();
        let b = parse(json, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.model.delta1, Rational::new(9, 10));
        a.validate().unwrap();
    }

    #[test]
    fn output_directory_does_not_change_the_hash() {
        let a = preset("preset-4x3").unwrap();
        let mut b = a.clone();
        b.output.directory = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.run.seeds = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse("lattice.width = 4\nlattice.colour = 1", false).is_err());
        let mut c = preset("preset-4x3").unwrap();
        c.run.beta_grid = vec![2.0, 1.0];
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        let mut c = preset("preset-4x3").unwrap();
        c.lattice = LatticeConfig { width: 5, height: 5 };
        assert!(matches!(c.validate(), Err(CliError::Refused(m)) if m.contains("847288609443")));
    }
}
