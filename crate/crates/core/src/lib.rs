//! Numerical toolkit for time-reversed discrete symplectic systems
//!
//! ```text
//! z_k = (S_k + λ V_k) z_{k+1},   V_k = -J Ψ_k S_k,
//! ```
//!
//! with a positive semi-definite weight `Ψ_k` satisfying `Ψ_k J Ψ_k = 0`.
//! The crate covers structural validation of the coefficients, solution
//! propagation in both index directions, definiteness via the Gram matrix
//! of a fundamental system, Weyl disks and a boundary-condition approximation
//! of the half-line `M(λ)` function, Green functions with the resolvent-type
//! solution of the nonhomogeneous system, and finite-section diagnostics for
//! the maximal/minimal linear relations.
//!
//! Everything operates on a finite horizon `[0, N]`: coefficients are stored
//! eagerly and every "for all k" statement is checked on that horizon.

pub mod definiteness;
pub mod error;
pub mod linalg;
pub mod propagation;
pub mod relations;
pub mod system;
pub mod weyl;

pub use definiteness::{
    block_sufficient_condition, gram_phi, is_definite, kernel_lambda_independence,
    maximal_rank_interval, Certificate, DefinitenessVerdict, GramMatrix, KernelIndependenceReport,
    MaximalRankInterval,
};
pub use error::{Result, SympError};
pub use linalg::{CMatrix, CVector};
pub use propagation::{
    apply_l, fundamental_identity_residuals, fundamental_matrix, lagrange_residual,
    solve_ivp_nonhom, solve_on_horizon, transfer, wronskian_residual, FundamentalMatrix,
    LagrangeReport, Residual,
};
pub use relations::{
    deficiency_consistency, k_map_range_check, multivalued_witness, preimage_construction,
    DeficiencyReport, KMap, MultivaluedWitness, PreimageReport, RangeReport,
};
pub use system::{
    build_v, from_sturm_liouville, make_j, BlockForm, CoefficientSequence, HypothesisCheck,
    SymplecticSystem, ToleranceConfig, TrajectorySequence, ValidationReport, Violation,
};
pub use weyl::{
    approx_half_line_m, boundary_m, boundary_m_forward, count_square_summable, disk_indicator,
    natural_fundamental, weyl_solution, AlphaMatrix, GreenProperties, GreenTable,
    HalfLineEstimate, MIterate, NaturalFundamental, PairClassification, SolveReport,
    SummabilityEstimate, WeylState,
};

pub use num_complex::Complex64;
