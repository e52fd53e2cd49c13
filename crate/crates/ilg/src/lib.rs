//! Adaptive iteratively linearized finite elements for the quasilinear
//! diffusion equation `-div( mu(|grad u|^2) grad u ) = g` on the L-shaped
//! domain.
//!
//! The crate provides:
//!
//! - conforming triangular meshes with newest-vertex bisection ([`mesh`]);
//! - a P1 space with Dirichlet elimination, quadrature and hierarchical
//!   prolongation ([`space`]);
//! - sparse SPD assembly and a conjugate gradient solver ([`linalg`]);
//! - the benchmark coefficients and manufactured solutions ([`problems`]);
//! - Zarantonello, Kacanov and damped Newton linearization steps driven by
//!   a shared energy functional ([`schemes`]);
//! - residual a posteriori estimators separating discretization from
//!   linearization error ([`estimators`]);
//! - the adaptive loop combining single linearization steps with Doerfler
//!   marking and bisection ([`adapt`]).
//!
//! A typical run:
//!
//! ```
//! use ilg::{AdaptConfig, EstimatorChoice, ProblemSpec, SchemeConfig, SchemeKind};
//!
//! let problem = ProblemSpec::smooth_benchmark();
//! let scheme = SchemeConfig::new(SchemeKind::Kacanov, &problem, 1.0);
//! let mut config = AdaptConfig::new(scheme, EstimatorChoice::Linear);
//! config.max_elements = 2000; // keep the doctest quick
//! let record = ilg::run_adaptive(&problem, &config).unwrap();
//! assert!(record.levels.last().unwrap().error_h1.unwrap() < 0.5);
//! ```

pub mod adapt;
pub mod estimators;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod schemes;
pub mod space;

pub use adapt::{
    doerfler_mark, run_adaptive, sigma, AdaptConfig, AdaptError, AdaptRunRecord, EstimatorChoice,
    LevelRecord,
};
pub use estimators::{
    estimate_linear, estimate_nonlinear, estimate_nonlinear_simple, residual_flux, riesz_lift,
    EstimatorBreakdown, EstimatorConstants, EstimatorError, FluxField,
};
pub use linalg::{
    assemble_flux_load, assemble_load, assemble_mass, assemble_newton_matrix,
    assemble_weighted_stiffness, solve_spd, solve_spd_with, DenseVector, LinalgError,
    SolveOptions, SparseSpd,
};
pub use mesh::{Mesh, MeshError};
pub use problems::{Diffusion, ExactSolution, Experiment, ProblemSpec};
pub use schemes::{
    admissible_delta_interval, energy, DampingControl, SchemeConfig, SchemeDriver, SchemeError,
    SchemeKind, SchemeState, StepInfo,
};
pub use space::{FeFunction, FeSpace, QuadratureRule, SpaceError};
