//! Verification suite behind the `commcalc verify` subcommand.
//!
//! Each check machine-verifies one computational claim end to end at fixed
//! parameters and tolerances (all exact; there are no floating-point
//! comparisons anywhere). Heavy lattices are memoized so overlapping checks
//! share work within one process.

pub mod verify;
