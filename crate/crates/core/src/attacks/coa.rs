//! Ciphertext-only correlation attack.
//!
//! When the plaintext is merely biased rather than known, an episode whose
//! table agrees with a single-register linear form with probability p still
//! leaks: the ciphertext bit equals the form's prediction with probability
//! p*q + (1-p)*(1-q), where q is the plaintext zero bias. Each driven
//! register collects its own pile of noisy equations, and maximum-likelihood
//! decoding is a straight enumeration of the register's nonzero states
//! scored by how many equations they satisfy.

use rand::Rng;

use super::{AttackConfig, AttackError};
use crate::bits::BitVec;
use crate::boolfn::{classify, BackdoorClass, TruthTable3};
use crate::cipher::CipherParams;
use crate::galois::{LinearForm, SymbolicLfsr};

use super::kpa::R0Simulator;

/// Probability that a ciphertext bit matches an episode prediction that is
/// itself right with probability `p`, under plaintext zero bias `q`.
pub fn noisy_confidence(p: f64, q: f64) -> f64 {
    p * q + (1.0 - p) * (1.0 - q)
}

/// One probabilistic linear constraint on a single driven register.
#[derive(Clone, Debug)]
pub struct NoisyEquation {
    /// Which driven register the form constrains (1, 2, or 3).
    pub register: usize,
    /// Linear form over that register's initial cells.
    pub form: LinearForm,
    /// Predicted value of the form.
    pub rhs: bool,
    /// Probability the prediction is right; always above 1/2.
    pub confidence: f64,
}

/// Replays the control trace from `i0` and turns every sufficiently biased
/// single-register episode into a noisy equation against the ciphertext.
pub fn coa_harvest(ciphertext: &BitVec, i0: u64, cfg: &AttackConfig) -> Vec<NoisyEquation> {
    let params = &cfg.params;
    let q = cfg.plaintext_zero_bias;
    let classes: Vec<BackdoorClass> = (0..=255u8)
        .map(|entry| classify(TruthTable3::new(entry)))
        .collect();

    let mut registers: Vec<SymbolicLfsr> = (1..4)
        .map(|r| SymbolicLfsr::new(&params.polys()[r]))
        .collect();
    let mut sim = R0Simulator::new(params, i0);
    let mut equations = Vec::new();
    for t in 0..ciphertext.len() {
        let (x0, f) = sim.step();
        for register in registers.iter_mut() {
            register.clock();
        }
        let class = &classes[f.table() as usize];
        let (mask, complement, p) = (class.mask(), class.complement(), class.probability());
        if p < cfg.biased_tier_floor || !mask.is_power_of_two() {
            continue;
        }
        let confidence = noisy_confidence(p, q);
        if confidence <= 0.5 {
            continue;
        }
        let register = mask.trailing_zeros() as usize + 1;
        equations.push(NoisyEquation {
            register,
            form: registers[register - 1].cell(0).clone(),
            rhs: ciphertext.get(t) ^ x0 ^ complement,
            confidence,
        });
    }
    equations
}

/// Maximum-likelihood decoding of one driven register: every nonzero state
/// scored by satisfied-equation count, best first, ties broken by state.
pub fn coa_decode_register(
    equations: &[NoisyEquation],
    register: usize,
    params: &CipherParams,
    budget_log2: u32,
) -> Result<Vec<(u64, u32)>, AttackError> {
    let length = params.lengths()[register];
    if length > budget_log2 {
        return Err(AttackError::TooLargeToEnumerate {
            register_length: length,
            budget_log2,
        });
    }
    let masks: Vec<(u64, u32)> = equations
        .iter()
        .filter(|equation| equation.register == register)
        .map(|equation| {
            assert_eq!(
                equation.form.width() as u32,
                length,
                "equation form does not fit register {register}"
            );
            let mask = equation.form.coefficients().words()[0];
            (mask, (equation.rhs ^ equation.form.constant()) as u32)
        })
        .collect();

    let mut scores: Vec<(u64, u32)> = (1..1u64 << length)
        .map(|state| {
            let satisfied = masks
                .iter()
                .map(|&(mask, rhs)| ((mask & state).count_ones() & 1 == rhs) as u32)
                .sum();
            (state, satisfied)
        })
        .collect();
    scores.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scores)
}

/// Plaintext model for the ciphertext-only setting: each bit is zero with
/// probability `zero_bias`.
pub fn biased_bits<R: Rng + ?Sized>(n: usize, zero_bias: f64, rng: &mut R) -> BitVec {
    (0..n).map(|_| rng.gen_bool(1.0 - zero_bias)).collect()
}
