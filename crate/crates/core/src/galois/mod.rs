//! GF(2) foundations: binary polynomials with a primitivity test, concrete
//! and symbolic LFSRs sharing one clocking convention, and dense bit-packed
//! linear-system solving.

mod lfsr;
mod poly;
mod system;

pub use lfsr::{LinearForm, Lfsr, SymbolicLfsr};
pub use poly::{
    poly_is_primitive, BinaryPolynomial, PolyError, BSEA1_FACTORIZATIONS, BSEA1_POLY_EXPONENTS,
};
pub use system::{gf2_rank, gf2_solve, Gf2System, IncrementalSolver, InsertOutcome, SolveOutcome};
