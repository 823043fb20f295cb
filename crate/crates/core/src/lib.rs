//! Numerical toolkit for fractional oscillation norms, cube-based
//! interpolation, dyadic Lipschitz approximation, Muckenhoupt-type weights,
//! and quadrature for homogeneous singular/fractional operators and their
//! iterated commutators.

pub mod approximation;
pub mod cube_interp;
pub mod error;
pub mod grid;
pub mod harness;
pub mod operators;
pub mod oscillation;
pub mod presets;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{cube_average, make_dyadic_family, restrict, Cube, DyadicFamily, GridFunction, GridSpec};
pub use oscillation::{
    bmo_alpha_norm, cmo_profile, lip_alpha_norm, lower_median, meyers_ratio, osc_alpha,
    osc_alpha_inf, OscProfile, OscillationParams,
};
pub use approximation::{
    approx_error, build_vertex_maps, chain_constant, mollify, plan_scales,
    regularity_chain_bound, ApproxPlan, ChainReport, PiecewiseInterpolant, Shell,
};
pub use harness::{
    annulus_upper_decay, build_median_sets, compactness_lower_probe, fk_compactness_probe,
    lower_bound_ratio, median_value, AnnulusDecayReport, CompactnessProbeReport, FkReport,
    LowerBoundReport, MedianConstruction,
};
pub use cube_interp::{
    gradient_bound_check, interpolate, restrict_to_face, vertex_osc, FaceSide, GradientReport,
    WeightedCube,
};
pub use operators::{
    apply_commutator_m, apply_commutator_m_at, apply_commutator_m_on_cells, apply_commutator_vec,
    apply_t, apply_t_at, fractional_maximal, truncate_kernel, weighted_lp_norm,
    weighted_lp_norm_cells, CommutatorSpec, KernelSpec, Omega,
};
pub use presets::{preset_function, preset_kernel, preset_weight};
pub use weights::{
    ap_constant, apq_constant, doubling_check, reverse_holder_check, reverse_holder_threshold,
    weighted_measure, DoublingReport, ReverseHolderReport, WeightSpec,
};
