//! FIPS 140-2 statistical battery: monobit, poker, runs, and longest-run
//! over 20,000-bit blocks, with the standard's revised pass bounds.
//!
//! The battery answers the black-box question only: a backdoored keystream
//! passes it just as happily as a good one.

use serde::Serialize;
use thiserror::Error;

use crate::bits::BitVec;

/// Block size the FIPS 140-2 power-up tests are defined over.
pub const FIPS_BLOCK_BITS: usize = 20_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RandTestError {
    #[error("FIPS 140-2 tests need exactly {expected} bits, got {got}")]
    WrongBlockLength { expected: usize, got: usize },
}

/// One bounded statistic. `lower` and `upper` are the published constants;
/// `within` already applies the standard's reading (strict for monobit and
/// poker, inclusive for the runs table, one-sided for longest run).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Statistic {
    pub label: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestVerdict {
    pub name: String,
    pub pass: bool,
    pub statistics: Vec<Statistic>,
}

fn require_block(bits: &BitVec) -> Result<(), RandTestError> {
    if bits.len() != FIPS_BLOCK_BITS {
        return Err(RandTestError::WrongBlockLength {
            expected: FIPS_BLOCK_BITS,
            got: bits.len(),
        });
    }
    Ok(())
}

/// Pass iff 9,725 < ones < 10,275.
pub fn monobit(bits: &BitVec) -> Result<TestVerdict, RandTestError> {
    require_block(bits)?;
    let ones = bits.count_ones();
    let within = ones > 9725 && ones < 10275;
    Ok(TestVerdict {
        name: "monobit".into(),
        pass: within,
        statistics: vec![Statistic {
            label: "ones".into(),
            value: ones as f64,
            lower: 9725.0,
            upper: 10275.0,
            within,
        }],
    })
}

/// Chi-square over the 5,000 consecutive 4-bit segments; pass iff
/// 2.16 < X < 46.17.
pub fn poker(bits: &BitVec) -> Result<TestVerdict, RandTestError> {
    require_block(bits)?;
    let mut frequencies = [0u64; 16];
    for segment in 0..FIPS_BLOCK_BITS / 4 {
        let mut value = 0usize;
        for offset in 0..4 {
            value = value << 1 | bits.get(segment * 4 + offset) as usize;
        }
        frequencies[value] += 1;
    }
    let sum_of_squares: u64 = frequencies.iter().map(|&f| f * f).sum();
    let statistic = 16.0 / 5000.0 * sum_of_squares as f64 - 5000.0;
    let within = statistic > 2.16 && statistic < 46.17;
    Ok(TestVerdict {
        name: "poker".into(),
        pass: within,
        statistics: vec![Statistic {
            label: "chi-square".into(),
            value: statistic,
            lower: 2.16,
            upper: 46.17,
            within,
        }],
    })
}

/// Runs of each length 1..=5 and 6+, for both bit values, each within its
/// inclusive FIPS interval.
pub fn runs(bits: &BitVec) -> Result<TestVerdict, RandTestError> {
    require_block(bits)?;
    const BOUNDS: [(u64, u64); 6] = [
        (2315, 2685),
        (1114, 1386),
        (527, 723),
        (240, 384),
        (103, 209),
        (103, 209),
    ];
    // counts[value][length - 1], lengths of six and more share a bucket.
    let mut counts = [[0u64; 6]; 2];
    for (value, length) in run_lengths(bits) {
        counts[value as usize][length.min(6) - 1] += 1;
    }
    let mut statistics = Vec::with_capacity(12);
    for value in 0..2 {
        for (index, &(lower, upper)) in BOUNDS.iter().enumerate() {
            let count = counts[value][index];
            let label = if index < 5 {
                format!("runs of {value} length {}", index + 1)
            } else {
                format!("runs of {value} length 6+")
            };
            statistics.push(Statistic {
                label,
                value: count as f64,
                lower: lower as f64,
                upper: upper as f64,
                within: (lower..=upper).contains(&count),
            });
        }
    }
    let pass = statistics.iter().all(|s| s.within);
    Ok(TestVerdict {
        name: "runs".into(),
        pass,
        statistics,
    })
}

/// Pass iff no run of either value reaches 26 bits.
pub fn longest_run(bits: &BitVec) -> Result<TestVerdict, RandTestError> {
    require_block(bits)?;
    let longest = run_lengths(bits)
        .map(|(_, length)| length)
        .max()
        .unwrap_or(0);
    let within = longest < 26;
    Ok(TestVerdict {
        name: "longest-run".into(),
        pass: within,
        statistics: vec![Statistic {
            label: "longest run".into(),
            value: longest as f64,
            lower: 0.0,
            upper: 26.0,
            within,
        }],
    })
}

fn run_lengths(bits: &BitVec) -> impl Iterator<Item = (bool, usize)> + '_ {
    let mut t = 0;
    std::iter::from_fn(move || {
        if t >= bits.len() {
            return None;
        }
        let value = bits.get(t);
        let start = t;
        while t < bits.len() && bits.get(t) == value {
            t += 1;
        }
        Some((value, t - start))
    })
}

/// All four tests on one block, in the order the standard lists them.
pub fn fips_battery(bits: &BitVec) -> Result<Vec<TestVerdict>, RandTestError> {
    Ok(vec![
        monobit(bits)?,
        poker(bits)?,
        runs(bits)?,
        longest_run(bits)?,
    ])
}

pub fn battery_passes(verdicts: &[TestVerdict]) -> bool {
    verdicts.iter().all(|verdict| verdict.pass)
}
