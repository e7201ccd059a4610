//! Dense GF(2) linear systems over word-packed rows. `IncrementalSolver`
//! keeps an echelon basis as rows arrive, which lets the key search abandon
//! a candidate the moment its equations turn inconsistent; `gf2_solve` is
//! the one-shot interface over a `Gf2System`.

use crate::bits::BitVec;
use crate::galois::LinearForm;

/// A system of affine equations over `unknown_count` GF(2) unknowns.
#[derive(Clone, Debug, Default)]
pub struct Gf2System {
    unknown_count: usize,
    rows: Vec<(BitVec, bool)>,
}

impl Gf2System {
    pub fn new(unknown_count: usize) -> Self {
        Self {
            unknown_count,
            rows: Vec::new(),
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, coefficients: BitVec, rhs: bool) {
        assert_eq!(coefficients.len(), self.unknown_count, "row width mismatch");
        self.rows.push((coefficients, rhs));
    }

    /// Add `form = rhs`, folding the form's constant into the right side.
    pub fn push_form(&mut self, form: &LinearForm, rhs: bool) {
        self.push(form.coefficients().clone(), rhs ^ form.constant());
    }

    pub fn rows(&self) -> &[(BitVec, bool)] {
        &self.rows
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// Full rank and consistent; the assignment satisfies every row.
    Unique(BitVec),
    /// Some combination of rows reduces to 0 = 1.
    Inconsistent,
    /// Consistent but rank-deficient.
    Underdetermined { rank: usize },
}

/// Gaussian elimination over the whole system.
pub fn gf2_solve(s: &Gf2System) -> SolveOutcome {
    let mut solver = IncrementalSolver::new(s.unknown_count());
    for (coefficients, rhs) in s.rows() {
        if solver.insert(coefficients.words(), *rhs) == InsertOutcome::Inconsistent {
            return SolveOutcome::Inconsistent;
        }
    }
    match solver.solution() {
        Some(x) => SolveOutcome::Unique(x),
        None => SolveOutcome::Underdetermined {
            rank: solver.rank(),
        },
    }
}

/// Rank of the coefficient matrix (right-hand sides ignored).
pub fn gf2_rank(s: &Gf2System) -> usize {
    let mut solver = IncrementalSolver::new(s.unknown_count());
    for (coefficients, _) in s.rows() {
        solver.insert(coefficients.words(), false);
    }
    solver.rank()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    /// The row was independent and joined the echelon basis.
    Added,
    /// The row is implied by earlier rows.
    Redundant,
    /// The row contradicts earlier rows (reduces to 0 = 1).
    Inconsistent,
}

const NO_ROW: u32 = u32::MAX;

/// Row-at-a-time Gaussian elimination with reusable storage. Each accepted
/// row is reduced against the current pivots, so stored rows form an echelon
/// basis: a row's leading column is its pivot and is unique.
#[derive(Clone, Debug)]
pub struct IncrementalSolver {
    unknown_count: usize,
    /// Coefficient words per row; stored rows carry one extra rhs word.
    words: usize,
    rows: Vec<u64>,
    pivot_cols: Vec<usize>,
    col_to_row: Vec<u32>,
    scratch: Vec<u64>,
}

impl IncrementalSolver {
    pub fn new(unknown_count: usize) -> Self {
        let words = unknown_count.div_ceil(64);
        Self {
            unknown_count,
            words,
            rows: Vec::new(),
            pivot_cols: Vec::new(),
            col_to_row: vec![NO_ROW; unknown_count],
            scratch: vec![0; words + 1],
        }
    }

    /// Forget all rows but keep allocations, ready for the next candidate.
    pub fn reset(&mut self) {
        self.rows.clear();
        self.pivot_cols.clear();
        self.col_to_row.fill(NO_ROW);
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown_count
    }

    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    pub fn insert_form(&mut self, form: &LinearForm, rhs: bool) -> InsertOutcome {
        assert_eq!(form.width(), self.unknown_count, "row width mismatch");
        self.insert(form.coefficients().words(), rhs ^ form.constant())
    }

    /// Reduce the row against the pivots and either adopt it or report it
    /// redundant or contradictory.
    pub fn insert(&mut self, coefficients: &[u64], rhs: bool) -> InsertOutcome {
        debug_assert_eq!(coefficients.len(), self.words);
        let stride = self.words + 1;
        self.scratch[..self.words].copy_from_slice(coefficients);
        self.scratch[self.words] = rhs as u64;

        while let Some(col) = leading_column(&self.scratch[..self.words]) {
            let row = self.col_to_row[col];
            if row == NO_ROW {
                let base = self.rows.len();
                self.rows.extend_from_slice(&self.scratch);
                debug_assert_eq!(base, self.pivot_cols.len() * stride);
                self.col_to_row[col] = self.pivot_cols.len() as u32;
                self.pivot_cols.push(col);
                return InsertOutcome::Added;
            }
            let base = row as usize * stride;
            for w in 0..stride {
                self.scratch[w] ^= self.rows[base + w];
            }
        }
        if self.scratch[self.words] & 1 == 1 {
            InsertOutcome::Inconsistent
        } else {
            InsertOutcome::Redundant
        }
    }

    /// The unique solution, provided rank equals the unknown count and no
    /// insert ever reported `Inconsistent`.
    pub fn solution(&self) -> Option<BitVec> {
        if self.rank() < self.unknown_count {
            return None;
        }
        let (particular, _) = self.solution_space();
        Some(particular)
    }

    /// Particular solution plus a nullspace basis (one vector per free
    /// column, ascending). Every solution is the particular point XOR a
    /// subset of the basis. Meaningful only while no insert has reported
    /// `Inconsistent`.
    pub fn solution_space(&self) -> (BitVec, Vec<BitVec>) {
        let particular = self.back_substitute(None);
        let basis = (0..self.unknown_count)
            .filter(|&c| self.col_to_row[c] == NO_ROW)
            .map(|c| self.back_substitute(Some(c)))
            .collect();
        (particular, basis)
    }

    /// Assign free columns (all zero, or one forced to 1 for a homogeneous
    /// nullspace vector), then fix pivot columns from the highest down. A
    /// stored row has zeros before its pivot, so once every later column is
    /// assigned, the row determines its pivot bit directly.
    fn back_substitute(&self, forced_free: Option<usize>) -> BitVec {
        let stride = self.words + 1;
        let homogeneous = forced_free.is_some();
        let mut x = BitVec::zeros(self.unknown_count);
        if let Some(c) = forced_free {
            x.set(c, true);
        }
        let mut cols: Vec<usize> = self.pivot_cols.clone();
        cols.sort_unstable();
        for &col in cols.iter().rev() {
            let base = self.col_to_row[col] as usize * stride;
            let row = &self.rows[base..base + self.words];
            let mut acc = 0u64;
            for (w, xw) in row.iter().zip(x.words()) {
                acc ^= w & xw;
            }
            let mut bit = acc.count_ones() & 1 == 1;
            if !homogeneous {
                bit ^= self.rows[base + self.words] & 1 == 1;
            }
            x.set(col, bit);
        }
        x
    }
}

fn leading_column(words: &[u64]) -> Option<usize> {
    for (wi, &w) in words.iter().enumerate() {
        if w != 0 {
            return Some(wi * 64 + w.trailing_zeros() as usize);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn satisfies(rows: &[(BitVec, bool)], assignment: &BitVec) -> bool {
        rows.iter().all(|(c, rhs)| c.dot(assignment) == *rhs)
    }

    fn brute_force_solutions(s: &Gf2System) -> Vec<u64> {
        let n = s.unknown_count();
        (0..1u64 << n)
            .filter(|&a| {
                let v: BitVec = (0..n).map(|j| a >> j & 1 == 1).collect();
                satisfies(s.rows(), &v)
            })
            .collect()
    }

    #[test]
    fn identity_system_reads_back_the_rhs() {
        let mut s = Gf2System::new(8);
        let target = 0b1011_0010u64;
        for i in 0..8 {
            let mut row = BitVec::zeros(8);
            row.set(i, true);
            s.push(row, target >> i & 1 == 1);
        }
        let expected: BitVec = (0..8).map(|i| target >> i & 1 == 1).collect();
        assert_eq!(gf2_solve(&s), SolveOutcome::Unique(expected));
        assert_eq!(gf2_rank(&s), 8);
    }

    #[test]
    fn contradictory_pair_is_inconsistent() {
        let mut s = Gf2System::new(2);
        s.push(BitVec::from_bools(&[true, true]), true);
        s.push(BitVec::from_bools(&[true, true]), false);
        assert_eq!(gf2_solve(&s), SolveOutcome::Inconsistent);
        assert_eq!(gf2_rank(&s), 1);
    }

    #[test]
    fn empty_and_full_rank_counts() {
        assert_eq!(gf2_rank(&Gf2System::new(97)), 0);
        let mut s = Gf2System::new(97);
        for i in 0..97 {
            let mut row = BitVec::zeros(97);
            row.set(i, true);
            s.push(row, false);
        }
        assert_eq!(gf2_rank(&s), 97);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        let mut rng = StdRng::seed_from_u64(42);
        for round in 0..200 {
            let n = rng.gen_range(1..=12);
            let m = rng.gen_range(0..=n + 6);
            let planted: Option<u64> = rng.gen_bool(0.5).then(|| rng.gen::<u64>() & ((1 << n) - 1));
            let mut s = Gf2System::new(n);
            for _ in 0..m {
                let coeffs: BitVec = (0..n).map(|_| rng.gen::<bool>()).collect();
                let rhs = match planted {
                    Some(a) => {
                        let v: BitVec = (0..n).map(|j| a >> j & 1 == 1).collect();
                        coeffs.dot(&v)
                    }
                    None => rng.gen(),
                };
                s.push(coeffs, rhs);
            }

            let solutions = brute_force_solutions(&s);
            match gf2_solve(&s) {
                SolveOutcome::Unique(x) => {
                    assert_eq!(solutions.len(), 1, "round {round}");
                    let v: BitVec = (0..n).map(|j| solutions[0] >> j & 1 == 1).collect();
                    assert_eq!(x, v, "round {round}");
                }
                SolveOutcome::Inconsistent => {
                    assert!(solutions.is_empty(), "round {round}");
                }
                SolveOutcome::Underdetermined { rank } => {
                    assert_eq!(solutions.len(), 1 << (n - rank), "round {round}");
                    assert!(rank < n, "round {round}");
                }
            }
            assert_eq!(gf2_rank(&s), n - brute_force_nullity(&s), "round {round}");
        }
    }

    fn brute_force_nullity(s: &Gf2System) -> usize {
        let n = s.unknown_count();
        let homogeneous = (0..1u64 << n)
            .filter(|&a| {
                let v: BitVec = (0..n).map(|j| a >> j & 1 == 1).collect();
                s.rows().iter().all(|(c, _)| !c.dot(&v))
            })
            .count();
        homogeneous.trailing_zeros() as usize
    }

    #[test]
    fn solution_space_spans_exactly_the_solutions() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(2..=10);
            let planted = rng.gen::<u64>() & ((1 << n) - 1);
            let planted_v: BitVec = (0..n).map(|j| planted >> j & 1 == 1).collect();
            let mut solver = IncrementalSolver::new(n);
            let mut rows = Vec::new();
            for _ in 0..rng.gen_range(0..=n) {
                let coeffs: BitVec = (0..n).map(|_| rng.gen::<bool>()).collect();
                let rhs = coeffs.dot(&planted_v);
                assert_ne!(
                    solver.insert(coeffs.words(), rhs),
                    InsertOutcome::Inconsistent
                );
                rows.push((coeffs, rhs));
            }
            let (particular, basis) = solver.solution_space();
            assert_eq!(basis.len(), n - solver.rank());
            // Enumerate the whole affine space and check each point.
            for subset in 0..1u64 << basis.len() {
                let mut x = particular.clone();
                for (i, b) in basis.iter().enumerate() {
                    if subset >> i & 1 == 1 {
                        x.xor_assign(b);
                    }
                }
                assert!(satisfies(&rows, &x));
            }
        }
    }

    #[test]
    fn reset_reuses_storage() {
        let mut solver = IncrementalSolver::new(4);
        assert_eq!(solver.insert(&[0b0011], true), InsertOutcome::Added);
        assert_eq!(solver.insert(&[0b0011], true), InsertOutcome::Redundant);
        assert_eq!(solver.insert(&[0b0011], false), InsertOutcome::Inconsistent);
        solver.reset();
        assert_eq!(solver.rank(), 0);
        for i in 0..4 {
            assert_eq!(solver.insert(&[1 << i], i % 2 == 0), InsertOutcome::Added);
        }
        let x = solver.solution().unwrap();
        assert_eq!(
            x,
            BitVec::from_bools(&[true, false, true, false])
        );
    }
}
