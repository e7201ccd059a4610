//! BSEA-1 is a combination-generator stream cipher with a deliberate flaw:
//! its 3-input combining function, mutated every step by register-derived
//! patterns, keeps collapsing into affine functions. Each collapse leaks an
//! exact linear equation over the key bits of the regularly clocked
//! registers, and a known-plaintext attacker who guesses the short control
//! register recovers the whole 120-bit key from about 1,800 keystream bits.
//!
//! This crate contains the cipher family, the GF(2) machinery (polynomials,
//! concrete and symbolic LFSRs, linear-system solving), Walsh-spectrum
//! analysis of the combiner, the key-recovery attacks that exploit the
//! backdoor, and the FIPS 140-2 statistical battery the cipher nevertheless
//! passes.

pub mod attacks;
pub mod bits;
pub mod boolfn;
pub mod cipher;
pub mod galois;
pub mod randtests;
