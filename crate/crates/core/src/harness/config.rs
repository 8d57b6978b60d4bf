use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functional::TestFunction;
use crate::gibbs::DlrWindow;
use crate::potentials::PotentialSpec;
use crate::schrodinger::ZGrid;
use crate::spde::{LatticeGeometry, SpdeConfig, SpdeScheme, WeightSpec};

/// Time-stepping part of the run; weight and boundary come from the
/// enclosing config.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdeSettings {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: SpdeScheme,
    #[serde(default = "one")]
    pub output_every: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub z: ZGrid,
    pub lattice: LatticeGeometry,
}

/// A named check with its tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckSpec {
    GroundState {
        expected_lambda0: Option<f64>,
        tol: f64,
    },
    SpectralGap {
        expected_gap: Option<f64>,
        tol: f64,
    },
    Decay,
    Prox {
        alpha: f64,
        n_pairs: usize,
        tol: f64,
    },
    MoreauSequence {
        n_list: Vec<u32>,
        tol: f64,
    },
    GibbsMarginal {
        t: f64,
        n_points: usize,
        ks_tol: f64,
    },
    GibbsAutocovariance {
        t: f64,
        n_paths: usize,
    },
    Dlr {
        window: DlrWindow,
        n_inner: usize,
        trotter_step: f64,
        tol: f64,
        /// kernel grid; the shared z-grid when absent
        #[serde(default)]
        z: Option<ZGrid>,
    },
    TailBound {
        a: f64,
        t_list: Vec<f64>,
    },
    Coupling {
        n_paths: usize,
    },
    Invariance {
        n_replicas: usize,
        ks_tol: f64,
    },
    MarginalLsi,
    HeatLsi {
        f: TestFunction,
        t_list: Vec<f64>,
        n_replicas: usize,
    },
    GradientEstimate {
        f: TestFunction,
        t_list: Vec<f64>,
        n_replicas: usize,
        eps: f64,
    },
    HeatWeight {
        t_list: Vec<f64>,
        deltas: Vec<f64>,
    },
    Autocorrelation {
        lags: Vec<f64>,
        n_replicas: usize,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GroundState { .. } => "ground_state",
            Self::SpectralGap { .. } => "spectral_gap",
            Self::Decay => "decay",
            Self::Prox { .. } => "prox",
            Self::MoreauSequence { .. } => "moreau_sequence",
            Self::GibbsMarginal { .. } => "gibbs_marginal",
            Self::GibbsAutocovariance { .. } => "gibbs_autocovariance",
            Self::Dlr { .. } => "dlr",
            Self::TailBound { .. } => "tail_bound",
            Self::Coupling { .. } => "coupling",
            Self::Invariance { .. } => "invariance",
            Self::MarginalLsi => "marginal_lsi",
            Self::HeatLsi { .. } => "heat_lsi",
            Self::GradientEstimate { .. } => "gradient_estimate",
            Self::HeatWeight { .. } => "heat_weight",
            Self::Autocorrelation { .. } => "autocorrelation",
        }
    }

    /// Ground state, then kernel, then sampling, then dynamics.
    pub fn stage(&self) -> u8 {
        match self {
            Self::Prox { .. } | Self::HeatWeight { .. } => 0,
            Self::GroundState { .. }
            | Self::SpectralGap { .. }
            | Self::Decay
            | Self::MoreauSequence { .. }
            | Self::TailBound { .. }
            | Self::MarginalLsi => 1,
            Self::GibbsMarginal { .. } | Self::GibbsAutocovariance { .. } | Self::Dlr { .. } => 2,
            Self::Invariance { .. } | Self::Autocorrelation { .. } => 3,
            Self::Coupling { .. } | Self::HeatLsi { .. } | Self::GradientEstimate { .. } => 4,
        }
    }

    fn tolerances(&self) -> Vec<f64> {
        match self {
            Self::GroundState { tol, .. }
            | Self::SpectralGap { tol, .. }
            | Self::Prox { tol, .. }
            | Self::MoreauSequence { tol, .. }
            | Self::Dlr { tol, .. } => vec![*tol],
            Self::GibbsMarginal { ks_tol, .. } | Self::Invariance { ks_tol, .. } => vec![*ks_tol],
            Self::GradientEstimate { eps, .. } => vec![*eps],
            _ => vec![],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub potential: PotentialSpec,
    pub grids: Grids,
    pub weight: WeightSpec,
    pub spde: SpdeSettings,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// `false` zeroes wall-clock fields so manifests compare byte for byte
    #[serde(default = "yes")]
    pub record_timing: bool,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.grids.z.validate()?;
        self.grids.lattice.validate()?;
        self.weight.validate()?;
        self.spde_config().validate(self.grids.lattice.spacing())?;
        for c in &self.checks {
            if let CheckSpec::Dlr { z: Some(z), .. } = c {
                z.validate()?;
            }
            if c.tolerances().iter().any(|t| !(*t > 0.0)) {
                return Err(Error::Config(format!("check {} needs positive tolerances", c.name())));
            }
        }
        Ok(())
    }

    pub fn spde_config(&self) -> SpdeConfig {
        SpdeConfig {
            dt: self.spde.dt,
            t_final: self.spde.t_final,
            drift_mode: self.spde.scheme,
            weight: self.weight,
            boundary: self.grids.lattice.boundary,
            output_every: self.spde.output_every,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with object keys sorted and no whitespace, without the output
    /// directory.
    pub fn canonical_json(&self) -> Result<String> {
        // `Value` maps are ordered by key
        let mut v = serde_json::to_value(self)?;
        if let Some(m) = v.as_object_mut() {
            m.remove("output_dir");
        }
        Ok(serde_json::to_string(&v)?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.canonical_json()?.as_bytes())))
    }
}
