//! The BSEA cipher family: a short control register R0 that clocks itself
//! irregularly and mutates the combining truth table every step, three
//! regularly clocked registers R1..R3 feeding that table, and the keystream
//! bit sigma = f(x1, x2, x3) XOR x0. BSEA-1 is the (23, 29, 31, 37)
//! instance with initial table 0x6B; the half-pattern update rule is the
//! BSEA-2 variant.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{self, BitVec};
use crate::boolfn::TruthTable3;
use crate::galois::{BinaryPolynomial, Lfsr, BSEA1_POLY_EXPONENTS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CipherError {
    #[error("expected 4 feedback polynomials, got {0}")]
    WrongPolynomialCount(usize),
    #[error("R0 needs at least 6 cells for the step and shift fields, got {0}")]
    ControlRegisterTooShort(u32),
    #[error("expected a {expected}-bit key, got {got} bits")]
    WrongKeyLength { expected: usize, got: usize },
    #[error("degenerate key: the R{register} segment is all zero")]
    DegenerateKey { register: usize },
    #[error("bad key encoding")]
    BadKeyEncoding(#[from] bits::BitsError),
    #[error("register {register} state {state:#x} does not fit in {length} cells")]
    StateTooWide {
        register: usize,
        state: u64,
        length: u32,
    },
}

/// How the R0-derived pattern mutates the truth table each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// f ^= pattern (BSEA-1).
    Full,
    /// f ^= (pi << 4) | pi with pi the pattern's low nibble, so both halves
    /// of the table move in lockstep (BSEA-2).
    HalfPattern,
}

/// Configuration of one cipher-family instance: four feedback polynomials,
/// the initial truth table, and the update rule. Serialized as a params
/// file with polynomials as exponent lists and the table as "0xNN".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub struct CipherParams {
    polys: [BinaryPolynomial; 4],
    initial_f: TruthTable3,
    update_rule: UpdateRule,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    polys: Vec<BinaryPolynomial>,
    initial_f: TruthTable3,
    update_rule: UpdateRule,
}

impl TryFrom<ParamsRepr> for CipherParams {
    type Error = CipherError;

    fn try_from(repr: ParamsRepr) -> Result<Self, CipherError> {
        let polys: [BinaryPolynomial; 4] = repr
            .polys
            .try_into()
            .map_err(|v: Vec<_>| CipherError::WrongPolynomialCount(v.len()))?;
        CipherParams::new(polys, repr.initial_f, repr.update_rule)
    }
}

impl From<CipherParams> for ParamsRepr {
    fn from(p: CipherParams) -> ParamsRepr {
        ParamsRepr {
            polys: p.polys.to_vec(),
            initial_f: p.initial_f,
            update_rule: p.update_rule,
        }
    }
}

impl CipherParams {
    /// R0 must expose the fields Algorithm reads as integers: the step
    /// count (cells 0..1) and the pattern shift (cells 3..5), hence at
    /// least 6 cells. The 8-cell pattern window past the shift reads as
    /// zero where it overruns short registers.
    pub fn new(
        polys: [BinaryPolynomial; 4],
        initial_f: TruthTable3,
        update_rule: UpdateRule,
    ) -> Result<Self, CipherError> {
        if polys[0].degree() < 6 {
            return Err(CipherError::ControlRegisterTooShort(polys[0].degree()));
        }
        Ok(Self {
            polys,
            initial_f,
            update_rule,
        })
    }

    /// The standard BSEA-1 instance: lengths (23, 29, 31, 37), the four
    /// published primitive polynomials, initial table 0x6B, full updates.
    pub fn bsea1() -> Self {
        let polys = BSEA1_POLY_EXPONENTS.map(|e| BinaryPolynomial::new(e).unwrap());
        Self::new(polys, TruthTable3::new(0x6B), UpdateRule::Full).unwrap()
    }

    pub fn polys(&self) -> &[BinaryPolynomial; 4] {
        &self.polys
    }

    pub fn lengths(&self) -> [u32; 4] {
        self.polys.each_ref().map(|p| p.degree())
    }

    /// Total key width, the sum of the register lengths (120 for BSEA-1).
    pub fn key_width(&self) -> usize {
        self.lengths().iter().map(|&l| l as usize).sum()
    }

    pub fn initial_f(&self) -> TruthTable3 {
        self.initial_f
    }

    pub fn update_rule(&self) -> UpdateRule {
        self.update_rule
    }
}

/// The key as the bit string fed into the registers: the first L0 bits fill
/// R0, the next L1 fill R1, and so on; within a segment the first bit lands
/// in the register's highest cell. Hex form is most significant character
/// first, so the first hex bit is the first key bit.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    bits: BitVec,
}

impl SecretKey {
    pub fn from_bits(bits: BitVec, params: &CipherParams) -> Result<Self, CipherError> {
        let expected = params.key_width();
        if bits.len() != expected {
            return Err(CipherError::WrongKeyLength {
                expected,
                got: bits.len(),
            });
        }
        let key = Self { bits };
        for (register, &state) in key.register_states(params).iter().enumerate() {
            if state == 0 {
                return Err(CipherError::DegenerateKey { register });
            }
        }
        Ok(key)
    }

    pub fn from_hex(s: &str, params: &CipherParams) -> Result<Self, CipherError> {
        let bits = bits::bits_from_hex(s, params.key_width())?;
        Self::from_bits(bits, params)
    }

    pub fn to_hex(&self) -> String {
        bits::bits_to_hex(&self.bits)
    }

    /// Uniformly random valid key; all-zero segments are redrawn.
    pub fn random<R: Rng + ?Sized>(params: &CipherParams, rng: &mut R) -> Self {
        loop {
            let bits: BitVec = (0..params.key_width()).map(|_| rng.gen::<bool>()).collect();
            if let Ok(key) = Self::from_bits(bits, params) {
                return key;
            }
        }
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    /// Initial register states: segment bit k becomes cell L-1-k.
    pub fn register_states(&self, params: &CipherParams) -> [u64; 4] {
        let mut states = [0u64; 4];
        let mut offset = 0;
        for (i, &length) in params.lengths().iter().enumerate() {
            let length = length as usize;
            for k in 0..length {
                if self.bits.get(offset + k) {
                    states[i] |= 1 << (length - 1 - k);
                }
            }
            offset += length;
        }
        states
    }

    /// Inverse of `register_states`: reassemble the key bit string.
    pub fn from_register_states(
        params: &CipherParams,
        states: [u64; 4],
    ) -> Result<Self, CipherError> {
        let mut bits = BitVec::zeros(params.key_width());
        let mut offset = 0;
        for (i, &length) in params.lengths().iter().enumerate() {
            let length = length as usize;
            if states[i] >> length != 0 {
                return Err(CipherError::StateTooWide {
                    register: i,
                    state: states[i],
                    length: length as u32,
                });
            }
            for k in 0..length {
                bits.set(offset + k, states[i] >> (length - 1 - k) & 1 == 1);
            }
            offset += length;
        }
        Self::from_bits(bits, params)
    }
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SecretKey({})", self.to_hex())
    }
}

/// Everything one step reads and produces, for tracing and cross-checking.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub t: u64,
    /// How many times R0 was clocked this step, in [1, 4].
    pub step_count: u8,
    pub x0: bool,
    pub x1: bool,
    pub x2: bool,
    pub x3: bool,
    /// The truth table after this step's mutation, the one sigma used.
    pub f_before_output: TruthTable3,
    pub sigma: bool,
}

/// Running generator state. The truth table's evolution depends only on
/// (initial table, R0 segment); R1..R3 never touch it.
#[derive(Clone, Debug)]
pub struct CipherState {
    r0: Lfsr,
    r1: Lfsr,
    r2: Lfsr,
    r3: Lfsr,
    f: TruthTable3,
    update_rule: UpdateRule,
    t: u64,
}

/// Split the key into the four registers and arm the generator.
pub fn key_setup(key: &SecretKey, params: &CipherParams) -> Result<CipherState, CipherError> {
    let expected = params.key_width();
    if key.bits.len() != expected {
        return Err(CipherError::WrongKeyLength {
            expected,
            got: key.bits.len(),
        });
    }
    let states = key.register_states(params);
    if let Some(register) = states.iter().position(|&s| s == 0) {
        return Err(CipherError::DegenerateKey { register });
    }
    let [p0, p1, p2, p3] = params.polys();
    Ok(CipherState {
        r0: Lfsr::new(p0, states[0]),
        r1: Lfsr::new(p1, states[1]),
        r2: Lfsr::new(p2, states[2]),
        r3: Lfsr::new(p3, states[3]),
        f: params.initial_f(),
        update_rule: params.update_rule(),
        t: 0,
    })
}

impl CipherState {
    /// One iteration: read the step count S from R0's two low cells plus
    /// one, clock R0 S times, then from the settled R0 read the output cell
    /// x0, the shift tau (cells 3..5) and the 8-cell pattern at tau, mutate
    /// the table, clock R1..R3 once each reading their output cells, and
    /// combine.
    pub fn next_bit(&mut self) -> StepTrace {
        let step_count = ((self.r0.state() & 3) + 1) as u8;
        for _ in 0..step_count {
            self.r0.clock();
        }
        let s0 = self.r0.state();
        let x0 = s0 & 1 == 1;
        let tau = (s0 >> 3 & 7) as u32;
        let pattern = (s0 >> tau & 0xFF) as u8;
        self.f = match self.update_rule {
            UpdateRule::Full => self.f.xored(pattern),
            UpdateRule::HalfPattern => {
                let pi = pattern & 0x0F;
                self.f.xored(pi << 4 | pi)
            }
        };
        self.r1.clock();
        self.r2.clock();
        self.r3.clock();
        let x1 = self.r1.state() & 1 == 1;
        let x2 = self.r2.state() & 1 == 1;
        let x3 = self.r3.state() & 1 == 1;
        let sigma = self.f.evaluate(x1, x2, x3) ^ x0;
        self.t += 1;
        StepTrace {
            t: self.t,
            step_count,
            x0,
            x1,
            x2,
            x3,
            f_before_output: self.f,
            sigma,
        }
    }

    pub fn truth_table(&self) -> TruthTable3 {
        self.f
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// Current packed state of register `i`.
    pub fn register_state(&self, i: usize) -> u64 {
        match i {
            0 => self.r0.state(),
            1 => self.r1.state(),
            2 => self.r2.state(),
            3 => self.r3.state(),
            _ => panic!("register index {i} out of range"),
        }
    }
}

/// The first `n` sigma bits for this key.
pub fn keystream(
    key: &SecretKey,
    params: &CipherParams,
    n: usize,
) -> Result<BitVec, CipherError> {
    let mut state = key_setup(key, params)?;
    Ok((0..n).map(|_| state.next_bit().sigma).collect())
}

/// XOR the keystream onto the input; decryption is the same operation.
pub fn encrypt(
    key: &SecretKey,
    params: &CipherParams,
    input: &BitVec,
) -> Result<BitVec, CipherError> {
    let mut out = keystream(key, params, input.len())?;
    out.xor_assign(input);
    Ok(out)
}

pub fn decrypt(
    key: &SecretKey,
    params: &CipherParams,
    input: &BitVec,
) -> Result<BitVec, CipherError> {
    encrypt(key, params, input)
}

/// Shrunken instance with registers (9, 11, 13, 17): same structure, same
/// backdoor, but driven registers small enough to enumerate one by one.
#[cfg(test)]
pub(crate) fn reduced_params() -> CipherParams {
    let polys = [
        BinaryPolynomial::new(&[9, 4, 0]).unwrap(),
        BinaryPolynomial::new(&[11, 2, 0]).unwrap(),
        BinaryPolynomial::new(&[13, 4, 3, 1, 0]).unwrap(),
        BinaryPolynomial::new(&[17, 3, 0]).unwrap(),
    ];
    CipherParams::new(polys, TruthTable3::new(0x6B), UpdateRule::Full).unwrap()
}
