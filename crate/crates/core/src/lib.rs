//! Two-sided Ornstein-Uhlenbeck type processes with a unit delay or
//! anticipation, driven by a two-sided Brownian motion with random `W_0`.
//!
//! The delay process solves `dX_s = a (X_{s-1} + b0) ds + dW_s` on the whole
//! real line for `a ∈ (-1, 0)`, stays bounded as `s -> -inf` and satisfies
//! `X_0 = W_0`. The crate builds it on finite grids:
//!
//! * [`fundamental`]: the fundamental solution `r(s; a)` and its decay envelope,
//! * [`path_sampler`]: two-sided Brownian paths on [`grid::GridPath`]s,
//! * [`forward`]: method of steps from an initial segment,
//! * [`left_tail`]: the bounded solution on `(-inf, 0]`,
//! * [`assembly`]: the delay and anticipating processes and their time homogeneity,
//! * [`measure_change`]: the density of the time-shifted law and its Monte Carlo check,
//! * [`harness`]: configuration, window budgeting, output and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod forward;
pub mod fundamental;
pub mod grid;
pub mod harness;
pub mod left_tail;
pub mod measure_change;
pub mod path_sampler;
pub mod quadrature;
pub mod residual;
pub mod stats;

pub use assembly::{
    assemble, assemble_anticipation, assemble_delay, assemble_tilde, compute_b0, homogeneity_check,
    shifted_driver, AssemblyParams, HomogeneityReport, ProcessKind, ProcessRealization,
};
pub use error::{Error, Result};
pub use forward::{
    semigroup_apply, solve_forward, stochastic_convolution, verify_variation_of_constants,
    SegmentFunction,
};
pub use fundamental::{DecayEnvelope, FundamentalSolution};
pub use grid::GridPath;
pub use left_tail::{construct_left, segment_glue_check, series_f, LeftTailParams, LeftTailResult};
pub use measure_change::{
    grad_x0_check, mc_negative_control, mc_shift_identity, rn_density_bm, rn_density_x,
    DensityReport, Functional, FunctionalKind, McParams, SampleKind,
};
pub use path_sampler::{sample_w, set_w0_override, InitialDensity, MeasureModel};

/// Package version followed by `git describe` of the build tree.
pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "+",
    env!("TWOSIDED_OU_GIT_DESCRIBE")
);
