//! Direct scattering for piecewise-constant potentials of the 1-D
//! Schrödinger operator `−∂ₓ² + V`, and the large-time soliton train of the
//! KdV equation `u_t − 6uu_x + u_xxx = 0` built from the discrete spectrum.
//!
//! A potential is approximated by blocks of constant depth `−aₙ²`. Each block
//! has closed-form reflection coefficients; they are combined by a
//! recursion that stays bounded where plain transfer-matrix products
//! overflow. Bound states `iκ` and norming constants `c²` are found on the
//! imaginary axis and evolved to `u(x, t) ≈ −2∂ₓ² ln det(I + C)`.
//!
//! Every routine is generic over [`Real`] (`f32` or `f64`).
//!
//! ```
//! use kdv_core::{find_bound_states, BlockPotential64, BoundStateMethod, FindOptions, SeedEstimates};
//!
//! // depth 4, width 4: three bound states
//! let pot = BlockPotential64::single(2.0, 4.0).unwrap();
//! let seeds = SeedEstimates::user(vec![1.9, 1.6, 0.9], &pot);
//! let report = find_bound_states(&pot, &seeds, BoundStateMethod::InvR, &FindOptions::default()).unwrap();
//! assert!((report.kappas[0] - 1.899448036751944).abs() < 1e-12);
//! ```

pub mod discretize;
pub mod error;
pub mod fragmentation;
pub mod kdv;
pub mod oracles;
pub mod real;
pub mod scattering;
pub mod spectrum;

pub use discretize::{
    haar_compress, haar_forward, haar_inverse, to_blocks, Compression, DiscretizationRule,
    HaarCoefficients, SampledPotential,
};
pub use error::{Error, Result};
pub use fragmentation::{
    compose_lambda, exceptional_points, norming_from_residue, pq_propagate, residue_b,
    run_recursion, BlockPotential, PQState, RecursionState, TransitionMatrix,
};
pub use kdv::{evolve, ln_det_i_plus_c, u_asymptotic, u_determinant, SolitonTrain};
pub use real::Real;
pub use scattering::{
    block_bound_states, block_norming_constants, block_scattering, BlockWell, ReflectionPair,
    ScatteringEvaluation,
};
pub use spectrum::{
    find_bound_states, norming_constants, screen_exceptional, spectral_seed, BoundStateMethod,
    BoundStateReport,
    DiscreteSpectrum, FindOptions, NormingMethod, SeedEstimates,
};

pub type BlockWell64 = BlockWell<f64>;
pub type BlockWell32 = BlockWell<f32>;
pub type BlockPotential64 = BlockPotential<f64>;
pub type BlockPotential32 = BlockPotential<f32>;
pub type DiscreteSpectrum64 = DiscreteSpectrum<f64>;
pub type DiscreteSpectrum32 = DiscreteSpectrum<f32>;
pub type SampledPotential64 = SampledPotential<f64>;
pub type SampledPotential32 = SampledPotential<f32>;
pub type SolitonTrain64 = SolitonTrain<f64>;
pub type SolitonTrain32 = SolitonTrain<f32>;
pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;
