//! Heterogeneous elliptic operators built from orientation maps, a
//! forward-Euler gradient-flow solver for the associated Poisson problem,
//! discrete Green functions, and a lattice homogenization laboratory.

pub mod config;
pub mod error;
pub mod green;
pub mod grid;
pub mod homogenization;
pub mod imaging;
pub mod io;
pub mod operators;
pub mod orientation;
pub mod solver;
pub mod sparse;

mod rng;

pub use config::{OperatorDescription, OperatorSpec, ThetaSpec};
pub use error::{Error, Result};
pub use green::{
    anisotropy_ratio, green, green_set, level_lines, radial_log_fit, superpose, GreenFunction,
    LevelLine,
};
pub use grid::{
    difference_op, l2_norm, mesh_completion, sobolev_seminorm, GridGeometry, ScalarField,
    StencilVector,
};
pub use homogenization::{
    axis_stencil, h_convergence_experiment, h_convergence_experiment_with, sample_kappa,
    sample_operator, solve_mean_value_dirichlet, transition_functions, validate_mean_value,
    HomogenizationReport, KappaField, TestFunction, TransitionOperator,
};
pub use imaging::{
    load_image, make_simultaneous_contrast, reconstruct_rgb, save_image, RgbImage,
    RgbReconstruction,
};
pub use operators::{
    apply, directional_fourth, directional_second, energy, forward_output, gaussian_smooth,
    laplacian, Branch, CoefficientField, GaussianParams, HeterogeneousOperator,
};
pub use orientation::{
    binary_hv_map, constant_map, pinwheel_map, salt_pepper_map, OrientationMap, PinwheelParams,
};
pub use solver::{default_dt, reconstruct, solve, Boundary, SolveReport, SolverConfig};
