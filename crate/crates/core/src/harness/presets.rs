use serde::{Deserialize, Serialize};

use super::config::{CheckSpec, ExperimentConfig, Grids, SpdeSettings};
use crate::functional::TestFunction;
use crate::gibbs::DlrWindow;
use crate::potentials::{Atom, PotentialSpec};
use crate::schrodinger::ZGrid;
use crate::spde::{Boundary, LatticeGeometry, SpdeScheme, WeightSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "kebab-case")]
pub enum Preset {
    /// `U = z²/2`
    FreeField,
    /// `U = z²/2 + |z|`
    AbsNorm,
    /// `U = z²/2 + cosh z`
    ExpPhi,
    /// `U = z²/2 + 0.3 cos z`
    Trig,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Self::FreeField => "free-field",
            Self::AbsNorm => "abs-norm",
            Self::ExpPhi => "exp-phi",
            Self::Trig => "trig",
        }
    }
}

fn base(name: &str, potential: PotentialSpec, z: ZGrid) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        potential,
        grids: Grids {
            z,
            lattice: LatticeGeometry {
                half_width: 5.0,
                n_sites: 100,
                boundary: Boundary::Neumann,
            },
        },
        weight: WeightSpec::with_rate(0.5).expect("valid weight"),
        spde: SpdeSettings {
            dt: 0.005,
            t_final: 5.0,
            scheme: SpdeScheme::SplitStepProx,
            output_every: 20,
        },
        seed: 0,
        output_dir: None,
        record_timing: true,
        checks: vec![],
    }
}

fn dlr(trotter_step: f64) -> CheckSpec {
    CheckSpec::Dlr {
        window: DlrWindow {
            t1: 0.0,
            t2: 1.0,
            za: 0.3,
            zb: -0.5,
        },
        n_inner: 1,
        trotter_step,
        tol: 1e-3,
        z: Some(ZGrid {
            half_width: 7.0,
            n: 700,
        }),
    }
}

fn prox() -> CheckSpec {
    CheckSpec::Prox {
        alpha: 0.5,
        n_pairs: 10_000,
        tol: 1e-12,
    }
}

fn heat_weight() -> CheckSpec {
    CheckSpec::HeatWeight {
        t_list: vec![0.1, 1.0, 10.0],
        deltas: vec![0.1, 1.0, 10.0],
    }
}

fn heat_lsi(f: TestFunction) -> CheckSpec {
    CheckSpec::HeatLsi {
        f,
        t_list: vec![0.1, 1.0, 5.0],
        n_replicas: 400,
    }
}

/// The curated configuration of a model family.
pub fn preset_config(preset: Preset) -> ExperimentConfig {
    let z = |n| ZGrid {
        half_width: 8.0,
        n,
    };
    match preset {
        Preset::FreeField => ExperimentConfig {
            checks: vec![
                CheckSpec::GroundState {
                    expected_lambda0: Some(0.5),
                    tol: 1e-5,
                },
                CheckSpec::SpectralGap {
                    expected_gap: Some(1.0),
                    tol: 1e-4,
                },
                CheckSpec::Decay,
                prox(),
                heat_weight(),
                CheckSpec::GibbsMarginal {
                    t: 2000.0,
                    n_points: 2000,
                    ks_tol: 0.05,
                },
                CheckSpec::GibbsAutocovariance { t: 1.0, n_paths: 4000 },
                dlr(0.05),
                CheckSpec::MarginalLsi,
                CheckSpec::Invariance {
                    n_replicas: 2000,
                    ks_tol: 0.05,
                },
                CheckSpec::Coupling { n_paths: 4 },
                heat_lsi(TestFunction::Linear { slope: 1.0 }),
                CheckSpec::GradientEstimate {
                    f: TestFunction::Tanh { scale: 1.0 },
                    t_list: vec![0.1, 1.0],
                    n_replicas: 200,
                    eps: 1e-4,
                },
                CheckSpec::Autocorrelation {
                    lags: vec![0.5, 1.0, 1.5, 2.0],
                    n_replicas: 1000,
                },
            ],
            ..base(Preset::FreeField.name(), PotentialSpec::free_field(1.0), z(2048))
        },
        Preset::AbsNorm => ExperimentConfig {
            checks: vec![
                CheckSpec::GroundState {
                    expected_lambda0: None,
                    tol: 1e-8,
                },
                CheckSpec::MoreauSequence {
                    n_list: vec![1, 2, 4, 8, 16, 32, 64, 128, 256],
                    tol: 1e-4,
                },
                prox(),
                dlr(0.01),
                CheckSpec::MarginalLsi,
                CheckSpec::Invariance {
                    n_replicas: 2000,
                    ks_tol: 0.05,
                },
                CheckSpec::Coupling { n_paths: 4 },
            ],
            ..base(Preset::AbsNorm.name(), PotentialSpec::abs_norm(1.0, 1.0), z(2048))
        },
        Preset::ExpPhi => ExperimentConfig {
            checks: vec![
                CheckSpec::GroundState {
                    expected_lambda0: None,
                    tol: 1e-8,
                },
                CheckSpec::Decay,
                CheckSpec::TailBound {
                    a: 1.0,
                    t_list: vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
                },
                CheckSpec::MarginalLsi,
                CheckSpec::Coupling { n_paths: 4 },
            ],
            ..base(Preset::ExpPhi.name(), PotentialSpec::cosh(1.0, 1.0), z(4096))
        },
        Preset::Trig => ExperimentConfig {
            checks: vec![
                CheckSpec::GroundState {
                    expected_lambda0: None,
                    tol: 1e-8,
                },
                CheckSpec::SpectralGap {
                    expected_gap: None,
                    tol: 1e-4,
                },
                CheckSpec::MarginalLsi,
                heat_lsi(TestFunction::Sin { freq: 1.0 }),
            ],
            ..base(
                Preset::Trig.name(),
                PotentialSpec::trigonometric(1.0, 0.0, vec![Atom::scalar(1.0, 0.3)]),
                z(2048),
            )
        },
    }
}
