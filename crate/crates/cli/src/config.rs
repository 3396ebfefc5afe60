//! TOML run configuration.
//!
//! ```toml
//! steps = 200000
//! stride = 1000
//! seed = 7
//! runs = 50
//! init = 0.5              # or one value per agent
//!
//! [graph.community]       # or: n + edges, file, complete
//! p1 = 0.75
//! p2 = 0.75
//!
//! [bias]
//! gamma = [2.0, 0.5]      # or: beliefs = [1, 0] with honesty = 2.0
//!
//! [options]
//! window_fraction = 0.1
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use urnsim_core::{BiasProfile, Graph, InitialConditions, SolverOptions};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVec {
    fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Vector(v) if v.len() == n => Ok(v.clone()),
            ScalarOrVec::Vector(v) => Err(CliError::Config(format!(
                "{field}: expected {n} values, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Community {
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Complete {
    pub n: usize,
    #[serde(default)]
    pub self_loops: bool,
}

/// Exactly one source: inline `n` + `edges`, a `file`, `community` or
/// `complete`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `[i, j, w]` with 1-based agents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize, f64)>>,
    /// `.json` or `.toml` with fields `n` and `edges`; relative paths are
    /// resolved against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub community: Option<Community>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complete: Option<Complete>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

/// Either `gamma` per agent, or `beliefs` (0/1) with `honesty >= 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honesty: Option<ScalarOrVec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    pub tol: f64,
    pub eps_lambda: f64,
    pub damping: f64,
    pub max_iter: usize,
    /// Inference window as a fraction of the records, unless `window` is set.
    pub window_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    pub eps_deg: f64,
    pub samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            tol: solver.tol,
            eps_lambda: urnsim_core::spectral::DEFAULT_EPS_LAMBDA,
            damping: solver.damping,
            max_iter: solver.max_iter,
            window_fraction: urnsim_core::inference::DEFAULT_WINDOW_FRACTION,
            window: None,
            eps_deg: urnsim_core::inference::DEFAULT_EPS_DEG,
            samples: 10_000,
        }
    }
}

impl Options {
    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }
}

fn default_steps() -> u64 {
    1000
}

fn one() -> u64 {
    1
}

fn default_init() -> ScalarOrVec {
    ScalarOrVec::Scalar(urnsim_core::dynamics::DEFAULT_B1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphSpec,
    pub bias: BiasSpec,
    #[serde(default = "default_init")]
    pub init: ScalarOrVec,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub stride: u64,
    #[serde(default = "one")]
    pub runs: u64,
    #[serde(default)]
    pub options: Options,
}

/// A config resolved into model objects.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub bias: BiasProfile,
    pub init: InitialConditions,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(CliError::Config("runs: must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(CliError::Config("stride: must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(CliError::Config("steps: must be >= 1".into()));
        }
        let o = &self.options;
        if !(o.tol > 0.0) {
            return Err(CliError::Config("options.tol: must be > 0".into()));
        }
        if !(o.eps_lambda >= 0.0) {
            return Err(CliError::Config("options.eps_lambda: must be >= 0".into()));
        }
        if !(o.window_fraction > 0.0 && o.window_fraction <= 1.0) {
            return Err(CliError::Config(
                "options.window_fraction: must be in (0, 1]".into(),
            ));
        }
        if o.samples == 0 {
            return Err(CliError::Config("options.samples: must be >= 1".into()));
        }
        Ok(())
    }

    /// Builds graph, bias and initial condition. `base` anchors relative
    /// graph file paths.
    pub fn instance(&self, base: &Path) -> Result<Instance> {
        let graph = self.build_graph(base)?;
        let n = graph.n();
        let bias = self.build_bias(n)?;
        let b1 = self.init.expand(n, "init")?;
        let init = InitialConditions::new(b1).map_err(|e| CliError::Config(format!("init: {e}")))?;
        Ok(Instance { graph, bias, init })
    }

    fn build_graph(&self, base: &Path) -> Result<Graph> {
        let g = &self.graph;
        let sources = [
            g.n.is_some() || g.edges.is_some(),
            g.file.is_some(),
            g.community.is_some(),
            g.complete.is_some(),
        ];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(CliError::Config(
                "graph: give exactly one of n + edges, file, community, complete".into(),
            ));
        }
        let field = |what: &str, e: urnsim_core::Error| CliError::Config(format!("graph.{what}: {e}"));
        if let Some(c) = &g.community {
            return Graph::community(c.p1, c.p2).map_err(|e| field("community", e));
        }
        if let Some(c) = &g.complete {
            return Graph::complete(c.n, c.self_loops).map_err(|e| field("complete", e));
        }
        if let Some(file) = &g.file {
            let path = base.join(file);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("graph.file {}: {e}", path.display())))?;
            let parsed: GraphFile = match path.extension().and_then(|e| e.to_str()) {
                Some("json") => serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("graph.file {}: {e}", path.display())))?,
                _ => toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("graph.file {}: {e}", path.display())))?,
            };
            return Graph::build(parsed.n, &parsed.edges).map_err(|e| field("file", e));
        }
        match (g.n, &g.edges) {
            (Some(n), Some(edges)) => Graph::build(n, edges).map_err(|e| field("edges", e)),
            (None, _) => Err(CliError::Config("graph.n: missing".into())),
            (_, None) => Err(CliError::Config("graph.edges: missing".into())),
        }
    }

    fn build_bias(&self, n: usize) -> Result<BiasProfile> {
        let b = &self.bias;
        let profile = match (&b.gamma, &b.beliefs, &b.honesty) {
            (Some(gamma), None, None) => {
                if gamma.len() != n {
                    return Err(CliError::Config(format!(
                        "bias.gamma: expected {n} values, got {}",
                        gamma.len()
                    )));
                }
                BiasProfile::new(gamma.clone())
            }
            (None, Some(beliefs), Some(honesty)) => {
                if beliefs.len() != n {
                    return Err(CliError::Config(format!(
                        "bias.beliefs: expected {n} values, got {}",
                        beliefs.len()
                    )));
                }
                let phi = beliefs
                    .iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(CliError::Config(format!(
                            "bias.beliefs: values must be 0 or 1, got {other}"
                        ))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                BiasProfile::from_beliefs(&phi, &honesty.expand(n, "bias.honesty")?)
            }
            _ => {
                return Err(CliError::Config(
                    "bias: give either gamma, or beliefs together with honesty".into(),
                ))
            }
        };
        profile.map_err(|e| CliError::Config(format!("bias: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const COMMUNITY: &str = r#"
        steps = 1000
        stride = 100
        seed = 3
        [graph.community]
        p1 = 0.75
        p2 = 0.75
        [bias]
        gamma = [2.0, 0.5]
    "#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::parse(COMMUNITY).unwrap();
        assert_eq!(cfg.runs, 1);
        assert_eq!(cfg.init, ScalarOrVec::Scalar(0.5));
        let inst = cfg.instance(Path::new(".")).unwrap();
        assert_eq!(inst.graph.n(), 2);
        assert_eq!(inst.bias.gamma(), &[2.0, 0.5]);
    }

    #[test]
    fn json_echo_round_trips() {
        let cfg = RunConfig::parse(COMMUNITY).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn beliefs_convert() {
        let text = r#"
            [graph]
            n = 3
            edges = [[1, 2, 1.0], [2, 3, 1.0], [3, 1, 1.0]]
            [bias]
            beliefs = [1, 0, 1]
            honesty = 3.0
        "#;
        let inst = RunConfig::parse(text).unwrap().instance(Path::new(".")).unwrap();
        assert_eq!(inst.bias.gamma(), &[3.0, 1.0 / 3.0, 3.0]);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = COMMUNITY.replace("gamma = [2.0, 0.5]", "gamma = [2.0]");
        let err = RunConfig::parse(&bad).unwrap().instance(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("bias.gamma"), "{err}");

        let typo = COMMUNITY.replace("stride", "strid");
        let err = RunConfig::parse(&typo).unwrap_err();
        assert!(err.to_string().contains("strid"), "{err}");

        let zero = COMMUNITY.replace("stride = 100", "stride = 0");
        assert!(RunConfig::parse(&zero).unwrap_err().to_string().contains("stride"));
    }

    #[test]
    fn rejects_two_graph_sources() {
        let text = format!("{COMMUNITY}\n[graph.complete]\nn = 2\n");
        let err = RunConfig::parse(&text).unwrap().instance(Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
