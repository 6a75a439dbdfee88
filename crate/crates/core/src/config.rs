//! Scenario files.
//!
//! A scenario is a TOML document holding the full parameter inventory of a
//! run. Unknown keys are rejected. Graph file paths are resolved relative to
//! the scenario file.
//!
//! ```toml
//! [scenario]
//! name = "full-observation"
//! mode = "full-obs"            # or "partial-obs"
//! seed = 1
//! graph_seed = 2019            # optional, defaults to seed
//!
//! [[state]]
//! kind = "sbm"
//! block_sizes = [25, 25]
//! p_within = 0.3
//! p_between = 0.01
//!
//! [[state]]
//! kind = "file"
//! path = "g2.edges"
//!
//! [sampling]
//! family = "cos-squared"
//! coupling = "iid-rows"
//! candidates = [0, 49]
//!
//! [diffusion]
//! within_mean = 1.0
//! between_mean = 10.0
//! horizon = 1.5
//!
//! [estimator]
//! s = 10
//! m = 10
//! variance_reduction = true
//!
//! [spsa]
//! epsilon = 0.01
//! delta = 0.1
//! theta0 = [1.2]
//! lower = [0.01]
//! upper = [1.5608]
//! n_iterations = 100
//! path_length = 30
//! tolerance = 0.5
//!
//! [observation]                # partial-obs only
//! observed_nodes = [0, 1, 2]
//!
//! [[regime_change]]
//! at_iteration = 200
//! permute_states = [1, 0]
//!
//! [reference]                  # closed-form ground truth, iid-rows only
//! sigma = [[25.2, 23.2], [45.1, 5.8]]
//! oracle_samples = 20000
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Mode {
    #[serde(rename = "full-obs")]
    FullObservation,
    #[serde(rename = "partial-obs")]
    PartialObservation,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(rename = "state")]
    pub states: Vec<StateSpec>,
    pub sampling: SamplingSection,
    pub diffusion: DiffusionSection,
    pub estimator: EstimatorSection,
    pub spsa: SpsaSection,
    #[serde(default)]
    pub observation: Option<ObservationSection>,
    #[serde(default, rename = "regime_change")]
    pub regime_changes: Vec<RegimeChangeSpec>,
    #[serde(default)]
    pub reference: Option<ReferenceSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub graph_seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Sbm {
        block_sizes: Vec<usize>,
        p_within: f64,
        p_between: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub family: String,
    pub coupling: String,
    pub candidates: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    pub within_mean: f64,
    pub between_mean: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub s: usize,
    pub m: usize,
    #[serde(default = "default_true")]
    pub variance_reduction: bool,
}

fn default_true() -> bool {
    true
}

fn default_tolerance() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaSection {
    pub epsilon: f64,
    pub delta: f64,
    pub theta0: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_iterations: usize,
    pub path_length: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSection {
    pub observed_nodes: Vec<usize>,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeChangeSpec {
    pub at_iteration: usize,
    pub permute_states: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// `sigma[g][v]`: influence of candidate `v` on state `g`.
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub oracle_samples: usize,
}

fn invalid(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {message}"))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn graph_seed(&self) -> u64 {
        self.scenario.graph_seed.unwrap_or(self.scenario.seed)
    }

    /// Structural checks with the offending field in every message.
    pub fn validate(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(invalid("state", "at least one graph state is required"));
        }
        for (i, state) in self.states.iter().enumerate() {
            if let StateSpec::Sbm {
                block_sizes,
                p_within,
                p_between,
            } = state
            {
                let field = format!("state[{i}]");
                if block_sizes.iter().sum::<usize>() == 0 {
                    return Err(invalid(&field, "block sizes sum to zero"));
                }
                for p in [p_within, p_between] {
                    if !(0.0..=1.0).contains(p) {
                        return Err(invalid(&field, format!("probability {p} outside [0, 1]")));
                    }
                }
            }
        }

        if self.sampling.family != "cos-squared" {
            return Err(invalid(
                "sampling.family",
                format!("unknown family {:?}", self.sampling.family),
            ));
        }
        if self.sampling.candidates.len() != 2 {
            return Err(invalid(
                "sampling.candidates",
                "cos-squared needs exactly two candidates",
            ));
        }
        match self.sampling.coupling.as_str() {
            "iid-rows" => {
                if self.states.len() != self.sampling.candidates.len() {
                    return Err(invalid(
                        "sampling.coupling",
                        "iid-rows needs as many graph states as candidates",
                    ));
                }
            }
            other => {
                return Err(invalid(
                    "sampling.coupling",
                    format!("unknown coupling {other:?}"),
                ))
            }
        }

        let d = &self.diffusion;
        if !(d.within_mean > 0.0) || !(d.between_mean > 0.0) {
            return Err(invalid("diffusion", "delay means must be positive"));
        }
        if !(d.horizon >= 0.0) {
            return Err(invalid("diffusion.horizon", "must be nonnegative"));
        }

        let e = &self.estimator;
        if e.s < 2 || !e.s.is_multiple_of(2) {
            return Err(invalid("estimator.s", "must be even and at least 2"));
        }
        if e.m < 3 {
            return Err(invalid("estimator.m", "must be at least 3"));
        }

        let s = &self.spsa;
        if !(s.epsilon > 0.0) {
            return Err(invalid("spsa.epsilon", "must be positive"));
        }
        if !(s.delta > 0.0) {
            return Err(invalid("spsa.delta", "must be positive"));
        }
        if s.path_length == 0 {
            return Err(invalid("spsa.path_length", "must be at least 1"));
        }
        if s.theta0.len() != 1 || s.lower.len() != 1 || s.upper.len() != 1 {
            return Err(invalid(
                "spsa",
                "cos-squared family has a one-dimensional parameter",
            ));
        }
        if !(s.lower[0] <= s.theta0[0] && s.theta0[0] <= s.upper[0]) {
            return Err(invalid("spsa.theta0", "outside [lower, upper]"));
        }

        match (self.scenario.mode, &self.observation) {
            (Mode::PartialObservation, None) => {
                return Err(invalid("observation", "required in partial-obs mode"));
            }
            (_, Some(obs)) => {
                if let Some(prior) = &obs.prior {
                    if prior.len() != self.states.len() {
                        return Err(invalid(
                            "observation.prior",
                            "length must equal the number of states",
                        ));
                    }
                }
            }
            _ => {}
        }

        for (i, change) in self.regime_changes.iter().enumerate() {
            let mut sorted = change.permute_states.clone();
            sorted.sort_unstable();
            if sorted != (0..self.states.len()).collect::<Vec<_>>() {
                return Err(invalid(
                    &format!("regime_change[{i}].permute_states"),
                    "must be a permutation of the state indices",
                ));
            }
        }

        if let Some(reference) = &self.reference {
            if reference.sigma.len() != self.states.len()
                || reference
                    .sigma
                    .iter()
                    .any(|row| row.len() != self.sampling.candidates.len())
            {
                return Err(invalid(
                    "reference.sigma",
                    "must be a states x candidates matrix",
                ));
            }
        }
        Ok(())
    }

    /// Resolves relative graph paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for state in &mut self.states {
            if let StateSpec::File { path } = state {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
    }
}
