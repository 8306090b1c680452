//! Symbolic commutator calculus in free and free-nilpotent groups.
//!
//! The crate computes with exact integer arithmetic throughout:
//!
//! * [`words`] — freely reduced words in `F_m`, a small expression grammar,
//!   and exact identity checking;
//! * [`magnus`] — truncated noncommutative integer power series and the
//!   Magnus expansion `x_i -> 1 + X_i`;
//! * [`hall`] — Hall bases of basic commutators, Witt counts, leading Lie
//!   parts;
//! * [`nilpotent`] — Hall-basis normal forms in `F_m / gamma_q` via leading
//!   part elimination in the series ring;
//! * [`subgroups`] — sifted pivot lattices for instantiated normal
//!   subgroups (lower central terms, meridian filtrations, Engel and Baer
//!   subgroups), membership, sections and comparisons;
//! * [`milnor`] — mu-bar invariants of link longitude presentations, their
//!   relation to commutator numbers, symmetry checks, counting and
//!   extractability classification;
//! * [`sato_levine`] — the axiomatic generalized Sato-Levine invariant and
//!   the linking-determinant jump calculus.

pub mod hall;
pub mod magnus;
pub mod milnor;
pub mod nilpotent;
pub mod sato_levine;
pub mod subgroups;
pub mod words;
pub mod zmatrix;

pub use hall::{HallBasis, HallOrder};
pub use magnus::{expand, Series};
pub use nilpotent::{ExponentVector, NilpotentContext};
pub use words::Word;
