//! Block substitutions on the integer lattice and the spectral
//! diagnostics attached to them: Fourier-matrix cocycles along
//! skew-product orbits, logarithmic Mahler measures, pair-correlation
//! renormalization and windowed diffraction intensities.
//!
//! The crate is organized around plain immutable values; every
//! operation is a pure function apart from the explicitly stateful
//! directive streams, so concurrent evaluation is safe. All randomness
//! is seeded and flows through the in-repo generator in [`rng`].

pub mod directive;
pub mod error;
pub mod fourier;
pub mod laurent;
pub mod lyapunov;
pub mod mahler;
pub mod matrix;
pub mod patch;
pub mod rng;
pub mod substitution;
pub mod tiling;
mod util;

pub use directive::{skew_step, DirectiveKind, DirectiveSource, SkewOrbitState};
pub use error::{Error, Result};
pub use fourier::{
    block_indicator, c_matrix_from_q, det_identity_residual, fourier_matrix, fourier_matrix_into,
    nonsingular_somewhere, overlap_sets, q_polynomials, BinaryOverlapSets, QPolynomials,
};
pub use laurent::LaurentPolynomial;
pub use lyapunov::{
    cocycle_step_forward, criterion_margin, forward_growth_rate, inverse_cocycle_pair,
    CocycleRunConfig, CocycleState, CriterionReport, ExponentEstimate, ForwardRun, ForwardSample,
    InversePairRun, InversePairSample, Verdict,
};
pub use mahler::{
    mahler_best, mahler_bound_margin, mahler_jensen_1d, mahler_monte_carlo, mahler_quadrature,
    MahlerEstimate, MahlerMethod,
};
pub use matrix::ComplexMatrix;
pub use patch::{substitute, supertile, Patch, DEFAULT_MAX_CELLS};
pub use substitution::{
    compose, is_positive_product, BlockSubstitution, DigitSets, Letter, SubstitutionMatrix,
    ValidationReport,
};
pub use tiling::{
    diffraction_dft_grid, diffraction_intensity, letter_frequencies, pair_correlations,
    pair_correlations_anisotropic, renormalization_residual, DiffractionGrid,
    PairCorrelationTable, DEFAULT_MAX_GRID_POINTS,
};

/// Seed used by every entry point when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;
