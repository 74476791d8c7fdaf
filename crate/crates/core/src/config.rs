//! Run configuration, read from TOML.
//!
//! ```toml
//! out = "runs/heat"          # run directory
//! long_epochs = 10000        # epoch budget of --long runs
//!
//! [problem]
//! id = "heat"                # analytical | heat | predator_prey
//! diffusivity = 0.1          # problem options, see each problem
//!
//! [train]
//! epochs = 1500
//! seed = 7
//! probe_every = 100
//! checkpoint_every = 0
//! execution = "parallel"     # or "sequential"
//!
//! [train.batch]              # interior, initial, terminal, boundary
//! [train.weights]            # data, forward, adjoint, optimality, initial,
//!                            # terminal_adjoint, boundary
//! [train.adam]               # lr, beta1, beta2, eps, decay_rate,
//!                            # decay_steps
//! [train.network]            # hidden_width, trunk_layers, control_layers,
//!                            # adjoint_layers
//!
//! [validate]
//! export_nt = 1001           # control export grid
//! export_nx = 1001
//! dns_nx = 1001              # DNS spatial nodes
//! ```
//!
//! Every table is optional except `[problem]`; unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Problem, ProblemSpec};
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub export_nt: usize,
    pub export_nx: usize,
    pub dns_nx: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            export_nt: 1001,
            export_nx: 1001,
            dns_nx: 1001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_long_epochs")]
    pub long_epochs: u64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_long_epochs() -> u64 {
    10_000
}

impl RunConfig {
    /// Parses and validates; `origin` names the source in error messages.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        cfg.validate().map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        RunConfig::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        Problem::from_spec(&self.problem)?;
        self.train.validate()?;
        let v = &self.validate;
        if v.export_nt < 2 || v.export_nx < 2 || v.dns_nx < 3 {
            return Err(Error::Config(
                "validate grids need at least 2 export and 3 DNS nodes".into(),
            ));
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Problem> {
        Problem::from_spec(&self.problem)
    }

    /// Run directory: the configured one, else `runs/<problem id>`.
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let id = match self.problem {
                ProblemSpec::Analytical {} => "analytical",
                ProblemSpec::Heat(_) => "heat",
                ProblemSpec::PredatorPrey(_) => "predator_prey",
            };
            PathBuf::from("runs").join(id)
        })
    }

    /// Overrides the heat diffusivity; other problems reject it.
    pub fn set_diffusivity(&mut self, value: f64) -> Result<()> {
        match &mut self.problem {
            ProblemSpec::Heat(o) => {
                o.diffusivity = value;
                self.validate()
            }
            _ => Err(Error::Config("diffusivity only applies to the heat problem".into())),
        }
    }
}
