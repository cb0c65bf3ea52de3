//! Experiment configuration read from JSON.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{PartitionedSystem, SolverConfig};
use crate::problems::{BurgersConfig, BurgersNld, Dahlquist, InitialCondition, ProductPartition};
use crate::stability::GridSpec;

fn default_ratio() -> f64 {
    4.0
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_reference_factor() -> usize {
    64
}

fn one() -> f64 {
    1.0
}

fn default_n() -> usize {
    300
}

fn default_ic() -> InitialCondition {
    InitialCondition::TwoGaussian
}

/// Test problem and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `F(u, v) = l1 u + l2 v`; nonzero imaginary parts give a complex problem.
    Dahlquist {
        l1: f64,
        l2: f64,
        #[serde(default)]
        l1_im: f64,
        #[serde(default)]
        l2_im: f64,
        #[serde(default = "one")]
        y0: f64,
    },
    /// `y' = -y^2` with `F(u, v) = -u v`.
    Product {
        #[serde(default = "one")]
        y0: f64,
    },
    Burgers {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(default = "default_ic")]
        ic: InitialCondition,
    },
}

pub type BoxedSystem = Box<dyn PartitionedSystem + Send>;

impl ProblemSpec {
    /// Final time used when the config does not give one.
    pub fn default_t_final(&self) -> f64 {
        match self {
            ProblemSpec::Burgers { .. } => BurgersConfig::default().t_final,
            _ => 1.0,
        }
    }

    /// A fresh system instance and its initial state.
    pub fn build(&self, t_final: f64) -> Result<(BoxedSystem, Vec<f64>)> {
        Ok(match *self {
            ProblemSpec::Dahlquist {
                l1,
                l2,
                l1_im,
                l2_im,
                y0,
            } => {
                let d = if l1_im == 0.0 && l2_im == 0.0 {
                    Dahlquist::real(l1, l2, y0)
                } else {
                    Dahlquist::complex(Complex64::new(l1, l1_im), Complex64::new(l2, l2_im), y0.into())
                };
                let y = d.initial_state();
                (Box::new(d), y)
            }
            ProblemSpec::Product { y0 } => {
                let p = ProductPartition::new(y0);
                (Box::new(p), vec![y0])
            }
            ProblemSpec::Burgers { n, ic } => {
                let b = BurgersNld::new(BurgersConfig { n, t_final, ic })?;
                let y = b.initial_state();
                (Box::new(b), y)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    #[serde(default = "StabilityConfig::default_grid")]
    pub grid: GridSpec,
    /// Fixed `z1` values, one slice each, as `[re, im]`.
    #[serde(default = "StabilityConfig::default_z1")]
    pub z1: Vec<[f64; 2]>,
    /// `z2` values at which the stiff limit is reported.
    #[serde(default = "StabilityConfig::default_stiff_z2")]
    pub stiff_z2: Vec<[f64; 2]>,
}

impl StabilityConfig {
    fn default_grid() -> GridSpec {
        GridSpec::new((-4.0, 1.0), (-4.0, 4.0), 301, 301)
    }

    fn default_z1() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [-100.0, 0.0], [-10000.0, 0.0]]
    }

    fn default_stiff_z2() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [-2.0, 0.0], [-10.0, 0.0], [0.0, 4.0], [-1.0, 4.0]]
    }
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            grid: Self::default_grid(),
            z1: Self::default_z1(),
            stiff_z2: Self::default_stiff_z2(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default)]
    pub nsteps: Vec<usize>,
    #[serde(default)]
    pub t0: f64,
    /// Defaults to the problem's own final time.
    #[serde(default)]
    pub t_final: Option<f64>,
    /// Cost of one implicit solve in units of one `F` evaluation.
    #[serde(default = "default_ratio")]
    pub cost_ratio: f64,
    /// Reference runs use `max(nsteps) * reference_factor` steps when no
    /// exact solution is known.
    #[serde(default = "default_reference_factor")]
    pub reference_factor: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::Dahlquist {
                l1: -2.0,
                l2: -1.0,
                l1_im: 0.0,
                l2_im: 0.0,
                y0: 1.0,
            },
            methods: Vec::new(),
            nsteps: vec![20, 40, 80, 160, 320],
            t0: 0.0,
            t_final: None,
            cost_ratio: default_ratio(),
            reference_factor: default_reference_factor(),
            out_dir: default_out(),
            solver: SolverConfig::default(),
            stability: StabilityConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    pub fn t_final(&self) -> f64 {
        self.t_final.unwrap_or_else(|| self.problem.default_t_final())
    }

    /// Checks the fields every study relies on.
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Usage("config lists no methods".into()));
        }
        if self.nsteps.is_empty() {
            return Err(Error::Usage("config lists no step counts".into()));
        }
        if self.nsteps[0] == 0 || self.nsteps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("nsteps must be positive and strictly increasing".into()));
        }
        if !(self.t_final() > self.t0) {
            return Err(Error::Usage("t_final must exceed t0".into()));
        }
        if self.reference_factor < 2 {
            return Err(Error::Usage("reference_factor must be at least 2".into()));
        }
        Ok(())
    }
}
