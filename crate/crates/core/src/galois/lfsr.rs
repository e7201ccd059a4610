//! Fibonacci LFSRs in two flavors sharing one clocking convention: `Lfsr`
//! steps concrete bits, `SymbolicLfsr` steps linear forms over the unknown
//! initial state, and the two stay mirror-exact step for step.
//!
//! Convention: cell 0 is the output cell, `clock` returns the pre-shift
//! cell 0, all cells shift toward index 0, and the feedback bit (the parity
//! of the tapped cells) enters cell L-1.

use crate::bits::BitVec;
use crate::galois::BinaryPolynomial;

/// Concrete LFSR with its state packed into a word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lfsr {
    length: u32,
    taps: u64,
    state: u64,
}

impl Lfsr {
    /// Register of length `poly.degree()`. The all-zero state is legal; it
    /// is simply the fixed point.
    pub fn new(poly: &BinaryPolynomial, state: u64) -> Self {
        let length = poly.degree();
        assert!(
            state < 1 << length,
            "state {state:#x} does not fit in {length} cells"
        );
        Self {
            length,
            taps: poly.tap_mask(),
            state,
        }
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    /// Current state as an integer, cell 0 in bit 0.
    #[inline]
    pub fn state(&self) -> u64 {
        self.state
    }

    /// Advance one step and return the output cell as it was before the
    /// shift.
    #[inline]
    pub fn clock(&mut self) -> bool {
        let out = self.state & 1;
        let feedback = (self.state & self.taps).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | (feedback << (self.length - 1));
        out == 1
    }
}

/// Affine function of a declared unknown space: a coefficient vector plus a
/// constant bit. Register cells never acquire a constant (regular clocking
/// is strictly linear); the constant exists for equation building.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    coefficients: BitVec,
    constant: bool,
}

impl LinearForm {
    pub fn zero(width: usize) -> Self {
        Self {
            coefficients: BitVec::zeros(width),
            constant: false,
        }
    }

    /// The form selecting exactly unknown `index`.
    pub fn unit(width: usize, index: usize) -> Self {
        let mut coefficients = BitVec::zeros(width);
        coefficients.set(index, true);
        Self {
            coefficients,
            constant: false,
        }
    }

    pub fn width(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &BitVec {
        &self.coefficients
    }

    pub fn constant(&self) -> bool {
        self.constant
    }

    pub fn xor_constant(&mut self, bit: bool) {
        self.constant ^= bit;
    }

    pub fn xor_assign(&mut self, other: &LinearForm) {
        self.coefficients.xor_assign(&other.coefficients);
        self.constant ^= other.constant;
    }

    /// Value of the form at a concrete assignment of the unknowns.
    pub fn evaluate(&self, assignment: &BitVec) -> bool {
        self.coefficients.dot(assignment) ^ self.constant
    }
}

/// LFSR whose cells are linear forms over the initial cells of one or more
/// registers, used to express later outputs as equations in the key bits.
#[derive(Clone, Debug)]
pub struct SymbolicLfsr {
    taps: u64,
    cells: Vec<LinearForm>,
}

impl SymbolicLfsr {
    /// Register over its own initial state: at time 0, cell j is the j-th
    /// unit form of an L-wide unknown space.
    pub fn new(poly: &BinaryPolynomial) -> Self {
        let length = poly.degree() as usize;
        Self::embedded(poly, length, 0)
    }

    /// Register embedded in a wider unknown space: cell j starts as unit
    /// form `offset + j`. Lets several registers share one joint space.
    pub fn embedded(poly: &BinaryPolynomial, width: usize, offset: usize) -> Self {
        let length = poly.degree() as usize;
        assert!(offset + length <= width, "register does not fit in space");
        Self {
            taps: poly.tap_mask(),
            cells: (0..length).map(|j| LinearForm::unit(width, offset + j)).collect(),
        }
    }

    pub fn length(&self) -> u32 {
        self.cells.len() as u32
    }

    /// Post-clock cell read, mirroring `Lfsr::state`'s bit j.
    pub fn cell(&self, j: usize) -> &LinearForm {
        &self.cells[j]
    }

    /// Advance one step and return the form of the pre-shift output cell.
    pub fn clock(&mut self) -> LinearForm {
        let mut feedback = LinearForm::zero(self.cells[0].width());
        for (j, cell) in self.cells.iter().enumerate() {
            if self.taps >> j & 1 == 1 {
                feedback.xor_assign(cell);
            }
        }
        let out = self.cells[0].clone();
        let last = self.cells.len() - 1;
        self.cells.rotate_left(1);
        self.cells[last] = feedback;
        out
    }
}
