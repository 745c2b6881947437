//! Seasonal vector-host reaction-diffusion model on a 1D mesh: periodic
//! principal eigenvalues, periodic solutions and regime classification.

pub mod coeffs;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod field;
pub mod grid;
pub mod options;
pub mod periodic;
pub mod problem;
pub mod state;
pub mod stepper;
pub mod tridiag;

pub use coeffs::expr::Expression;
pub use coeffs::{validate_hypothesis, CoefficientSet, ValidationReport, Violation};
pub use error::{Error, Result};
pub use field::{Field, SpaceTimeSamples};
pub use options::SolverOptions;
pub use grid::{assemble_diffusion, BoundarySpec, DiffusionMatrix, Grid};
pub use problem::Problem;
pub use state::{Layout, PeriodicOrbit, StateField};
pub use stepper::{LinearPeriodicSystem, ModelStepper, PeriodStepper, Reaction, Trajectory};
pub use dynamics::{
    classify_regime, sandwich_check, verify_trichotomy, Attractor, AttractorKind, ConvergenceReport, Regime,
    RegimeReport, SandwichReport, Verdict,
};
pub use eigen::EigenResult;
pub use periodic::{EndemicPairResult, EpsChoice, LogisticOrbitResult};
