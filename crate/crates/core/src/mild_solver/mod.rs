//! Mild solutions of the incompressible Navier–Stokes equations on a
//! periodic box by Picard iteration of the Duhamel formula.

pub mod norms;
pub mod solver;
pub mod spacetime;

pub use norms::{norm_e_thm1, norm_e_thm2, ENorm};
pub use solver::{
    admissible_horizon, bilinear_ratio, bilinear_term, estimate_bilinear_constant, initial_term,
    picard_solve, random_solenoidal, taylor_green, smallness_check, smallness_check_cached, BilinearStream, Force,
    HorizonCache, Regime, Smallness, SolveStatus, SolverConfig, SolverResult, SolverSummary,
};
pub use spacetime::SpaceTimeField;
