//! Optimal one-bit private discrete distribution estimation.
//!
//! `n` clients each hold a sample from an unknown distribution on `[v]` and
//! may release a single bit through a privacy mechanism satisfying either
//! `(eps, delta)`-local differential privacy or `gamma`-maximal leakage.
//! This crate builds the schemes that minimize the worst-case mean squared
//! error to first order in `n`, evaluates the matching closed-form
//! trade-off constants, and verifies by exact computation and seeded Monte
//! Carlo that the two coincide.
//!
//! Modules:
//! - [`mechanism`]: stochastic matrices over exact rationals, constraint
//!   checks, the F functional and the extreme-point optimizer.
//! - [`design`]: complete block designs, design-valued mechanisms, dual
//!   pairs and their resolution into shared-randomness form.
//! - [`bounds`]: the closed-form trade-off constants and the regime
//!   threshold.
//! - [`scheme`]: the four optimal shared-randomness schemes with calibrated
//!   unbiased estimators, plus the round-robin plain conversion.
//! - [`sim`]: exact-expectation error analysis and reproducible Monte Carlo
//!   (rayon-parallel under the default `parallel` feature, with an
//!   always-available sequential lane).
//! - [`verify`]: the acceptance suite run by both `cargo test` and the CLI.

pub mod bounds;
pub mod design;
pub mod mechanism;
pub mod rational;
pub mod scheme;
pub mod sim;
pub mod verify;

pub use bounds::{lan_lower_bound, put_ldp, put_ml, zeta, PutQuery};
pub use design::{
    bd_mechanism, complement_pairing, complete_block_design, concat_designs, dual_pair_partition,
    incidence_matrix, resolve, verify_design, BlockDesign, DesignParams, DualPairPartition,
    Resolution,
};
pub use mechanism::{
    check_ldp, check_ml, check_one_bit, extreme_column_families, f_level_zero, f_two_level,
    f_value, sup_f, sup_f_closed_form, ExtremeFamily, FamilyKind, Mechanism, PrivacyConstraint,
};
pub use rational::Rat;
pub use scheme::{
    build_optimal_sr_scheme, calibration_closed_form, calibration_numeric, eta, to_plain_scheme,
    CaseTag, PlainScheme, SchemeDescriptor, SrScheme,
};
pub use sim::{
    exact_mse, mc_mse, mc_mse_sequential, run_trial, set_thread_count, worst_case_scan, Mode,
    SimConfig, SimReport, ThetaSpec,
};
