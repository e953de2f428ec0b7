//! Robust learning of halfspaces over the Boolean hypercube.
//!
//! The learner finds the influential coordinates from Chow parameters, fits
//! the heavy head coefficients with a matching-loss GLM solved by the
//! ellipsoid method, recovers the regular tail by filtered hinge
//! minimization, tries a sparse LP fit, and keeps whichever candidate has
//! the lowest held-out error. A contamination-robust variant adds spectral
//! outlier removal.

pub mod config;
pub mod cube;
pub mod error;
pub mod glm;
pub mod halfspace;
pub mod hinge;
pub mod influence;
pub mod oracle;
pub mod pipeline;
mod packed;
pub mod rng;
pub mod robust;
pub mod solvers;
pub mod sparse;
pub mod synth;

pub use config::{AppliedParams, Caps, LearnerConfig, Overrides};
pub use cube::{enumerate_cube, CubePoint, LabeledSample, LabeledSet, Provenance, Sign};
pub use error::{Error, Result};
pub use halfspace::{embed, empirical_error, regularity_ratio, restrict, Halfspace};
pub use rng::SeededRng;
pub use synth::{Adversary, EmpiricalSource, NoiseSpec, PlantedSource, SampleSource};
pub use pipeline::{learn, learn_halfspace, learn_halfspace_contaminated, opt_grid_search, Mode, RunReport};
pub use robust::{outlier_remove, FilterReport};
