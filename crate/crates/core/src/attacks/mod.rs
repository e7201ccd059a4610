//! Backdoor exploitation. The known-plaintext attack guesses the control
//! register exhaustively, harvests one exact linear equation per affine
//! episode, solves for the 97 remaining key bits, and verifies against the
//! observed keystream. The ciphertext-only machinery trades exactness for
//! volume: biased episodes plus biased plaintext yield noisy per-register
//! equations decoded by enumeration.

mod coa;
mod kpa;

pub use coa::{biased_bits, coa_decode_register, coa_harvest, noisy_confidence, NoisyEquation};
pub use kpa::{
    kpa_attack, kpa_attack_parallel, simulate_r0, CandidateOutcome, CandidateReport, KpaContext,
    KpaReport, KpaResult, KpaWorkspace, R0Simulator,
};

use std::ops::Range;

use thiserror::Error;

use crate::bits::BitVec;
use crate::cipher::CipherParams;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AttackError {
    #[error("plaintext and ciphertext lengths differ ({plaintext} vs {ciphertext})")]
    LengthMismatch { plaintext: usize, ciphertext: usize },
    #[error("keystream sample is empty")]
    EmptySample,
    #[error("search range is empty")]
    EmptySearchRange,
    #[error("search range {lo:#x}..{hi:#x} leaves the valid R0 states 0x1..{max:#x}")]
    RangeOutOfBounds { lo: u64, hi: u64, max: u64 },
    #[error("enumerating a {register_length}-cell register exceeds the 2^{budget_log2} budget")]
    TooLargeToEnumerate {
        register_length: u32,
        budget_log2: u32,
    },
}

/// Recovered keystream bits, the attacker's view of the generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeystreamSample {
    sigma: BitVec,
}

impl KeystreamSample {
    pub fn new(sigma: BitVec) -> Result<Self, AttackError> {
        if sigma.is_empty() {
            return Err(AttackError::EmptySample);
        }
        Ok(Self { sigma })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn bit(&self, t: usize) -> bool {
        self.sigma.get(t)
    }

    pub fn bits(&self) -> &BitVec {
        &self.sigma
    }
}

/// sigma = c XOR p, bit by bit.
pub fn derive_keystream(
    plaintext: &BitVec,
    ciphertext: &BitVec,
) -> Result<KeystreamSample, AttackError> {
    if plaintext.len() != ciphertext.len() {
        return Err(AttackError::LengthMismatch {
            plaintext: plaintext.len(),
            ciphertext: ciphertext.len(),
        });
    }
    let mut sigma = plaintext.clone();
    sigma.xor_assign(ciphertext);
    KeystreamSample::new(sigma)
}

/// Attack tuning. `search_range` is half-open and must stay inside
/// [1, 2^L0): the zero state cannot arise from a valid key.
#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub params: CipherParams,
    pub search_range: Range<u64>,
    /// Cap on how many sample bits the known-plaintext attack consumes.
    pub max_plaintext_bits: usize,
    /// Assumed probability that a plaintext bit is zero (ciphertext-only).
    pub plaintext_zero_bias: f64,
    /// Minimum episode agreement probability worth a noisy equation.
    pub biased_tier_floor: f64,
    /// Rank deficiency enumerated immediately while scanning candidates.
    pub eager_enumeration_cap: u32,
    /// Rank deficiency worth enumerating at all; candidates between the two
    /// caps are revisited, cheapest first, if the scan finds no key.
    pub max_free_dimension: u32,
    /// Ciphertext-only decoding refuses registers beyond this enumeration
    /// budget.
    pub decode_budget_log2: u32,
}

impl AttackConfig {
    pub fn new(params: CipherParams) -> Self {
        let l0 = params.lengths()[0];
        Self {
            search_range: 1..1 << l0,
            params,
            max_plaintext_bits: 1800,
            plaintext_zero_bias: 0.6,
            biased_tier_floor: 0.875,
            eager_enumeration_cap: 16,
            max_free_dimension: 30,
            decode_budget_log2: 26,
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        let max = 1u64 << self.params.lengths()[0];
        let Range { start: lo, end: hi } = self.search_range;
        if lo >= hi {
            return Err(AttackError::EmptySearchRange);
        }
        if lo < 1 || hi > max {
            return Err(AttackError::RangeOutOfBounds { lo, hi, max });
        }
        Ok(())
    }
}
