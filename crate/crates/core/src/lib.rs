//! Arithmetic of diagonal degree 2 del Pezzo surfaces
//!
//!     S_a :  a0*x0^4 + a1*x1^4 + a2*x2^4 = w^2   in P(1,1,1,2)
//!
//! with a = (a0, a1, a2) nonzero integers. The library decides everywhere
//! local solubility, evaluates the quaternion class A = (theta, f/x0^2)
//! with theta = -a0*a1*a2 at every place, and classifies the induced
//! invariant maps on local points, feeding a census over coefficient boxes
//! and the frobenian densities that govern how often each behaviour occurs.

pub mod arith;
pub mod brauer;
pub mod counting;
pub mod frobenian;
pub mod hensel;
pub mod local;
pub mod oracle;

pub use arith::{
    factor::{factorize, Factorization},
    hilbert::{hilbert_symbol, invariant_from_symbol},
    padic::{
        is_padic_fourth_power, is_padic_fourth_power_ratio, is_padic_square,
        is_padic_square_ratio, padic_unit_part, padic_unit_part_ratio,
    },
    symbols::kronecker,
    InvariantValue, Place, SquareClass,
};
pub use brauer::{
    classify_invariant_map, classify_invariant_map_by_sampling, evaluate_f, find_quadric_point,
    find_rational_point, has_bm_obstruction, has_bm_obstruction_with, local_invariant,
    normalise_at_p, twist_invariant_shift_check, BrauerError, FValue, InvariantClassification,
    ObstructionDecision, ObstructionStatus, PipelineConfig, Provenance, QuadricPoint,
    QuaternionAlgebra, Verdict,
};
pub use counting::{
    count_grid, count_obstructed, fit_exponents, m_exponent, prefilter, square_class, CountConfig,
    CountError, CountProgress, CountReport, ExponentFit,
};
pub use frobenian::{
    alpha, beta, decade_bounds, gamma_convolution, gamma_identity_check, gamma_indicator, lambda,
    mean_estimate, omega_convolution, omega_identity_check, omega_indicator, partial_sum_lambda,
    FrobenianError, FrobenianSpec, LambdaPartialSum, ScanKind, ScanRow,
};
pub use local::{
    is_everywhere_locally_soluble, is_locally_soluble_generic, is_locally_soluble_search,
    is_really_soluble, sample_local_points, CoefficientTriple, LocalCoords, LocalError,
    LocalPoint,
};
