//! Known-plaintext key recovery.
//!
//! R0 runs autonomously, so a guess of its initial state replays the whole
//! control trace: the clock counts, the output correction x0, and every
//! truth table the mutation walk visits. Constant tables give a free
//! consistency check against the observed keystream; a wrong guess survives
//! a constant episode only with probability 1/2, so almost the entire state
//! space dies within a few hundred steps. Affine episodes each yield one
//! exact GF(2) equation in the 97 cells of R1..R3, and ~1800 known bits
//! typically produce enough of them to pin the key outright. Whatever rank
//! is missing gets enumerated and checked against the untouched nonlinear
//! majority of the sample, which kills wrong completions almost instantly.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{AttackConfig, AttackError, KeystreamSample};
use crate::boolfn::{classify, BackdoorClass, TruthTable3};
use crate::cipher::{keystream, CipherParams, SecretKey, UpdateRule};
use crate::galois::{IncrementalSolver, InsertOutcome, SymbolicLfsr};

/// Replays the control register and the truth-table walk from a guessed
/// initial state, without touching R1..R3.
#[derive(Clone, Debug)]
pub struct R0Simulator {
    state: u64,
    taps: u64,
    shift: u32,
    f: u8,
    half_pattern: bool,
}

impl R0Simulator {
    /// Panics if `i0` is zero or too wide for the control register; valid
    /// keys never produce either.
    pub fn new(params: &CipherParams, i0: u64) -> Self {
        let poly = &params.polys()[0];
        assert!(
            i0 != 0 && i0 < 1 << poly.degree(),
            "control state {i0:#x} is not a valid {}-cell register fill",
            poly.degree()
        );
        Self {
            state: i0,
            taps: poly.tap_mask(),
            shift: poly.degree() - 1,
            f: params.initial_f().table(),
            half_pattern: params.update_rule() == UpdateRule::HalfPattern,
        }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn truth_table(&self) -> TruthTable3 {
        TruthTable3::new(self.f)
    }

    /// One keystream step: variable clocking, table mutation, and the
    /// (x0, f) pair entering the output combiner.
    #[inline]
    pub fn step(&mut self) -> (bool, TruthTable3) {
        let mut st = self.state;
        let steps = (st & 3) + 1;
        for _ in 0..steps {
            let feedback = ((st & self.taps).count_ones() & 1) as u64;
            st = st >> 1 | feedback << self.shift;
        }
        self.state = st;
        let tau = (st >> 3 & 7) as u32;
        let pattern = (st >> tau) as u8;
        self.f = if self.half_pattern {
            let nibble = pattern & 0x0F;
            self.f ^ (nibble << 4 | nibble)
        } else {
            self.f ^ pattern
        };
        (st & 1 == 1, TruthTable3::new(self.f))
    }
}

/// The first `n` (x0, f) pairs reachable from the guessed control state.
pub fn simulate_r0(i0: u64, params: &CipherParams, n: usize) -> Vec<(bool, TruthTable3)> {
    let mut sim = R0Simulator::new(params, i0);
    (0..n).map(|_| sim.step()).collect()
}

/// What a keystream step is worth to the attacker, indexed by truth table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Episode {
    /// Nonlinear table; the step only helps during final verification.
    Quiet,
    /// f ignores its inputs: sigma must equal `one` XOR x0.
    Constant { one: bool },
    /// f = <x,mask> XOR complement exactly: one linear equation.
    Affine { mask: u8, complement: bool },
}

fn episode_table() -> [Episode; 256] {
    let mut table = [Episode::Quiet; 256];
    for (entry, slot) in table.iter_mut().enumerate() {
        if let BackdoorClass::Affine { mask, complement } = classify(TruthTable3::new(entry as u8))
        {
            *slot = if mask == 0 {
                Episode::Constant { one: complement }
            } else {
                Episode::Affine { mask, complement }
            };
        }
    }
    table
}

#[derive(Clone, Copy, Debug)]
struct EpisodeRecord {
    t: u32,
    mask: u8,
    rhs: bool,
}

/// Where one candidate ended up.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CandidateOutcome {
    /// A constant episode contradicted the observed keystream.
    DiscardedByConstant,
    /// The harvested equations contradict each other.
    Inconsistent,
    /// Consistent, but the solution space was too large to enumerate.
    Underdetermined { dimension: u32 },
    /// Every completion of the solution space failed keystream verification.
    VerificationFailed,
    /// Unique completion whose regenerated keystream matches the sample.
    VerifiedKey(SecretKey),
}

#[derive(Clone, Debug)]
pub struct CandidateReport {
    pub i0: u64,
    pub equations_harvested: usize,
    pub rank: usize,
    pub outcome: CandidateOutcome,
}

/// Aggregate attack statistics, one per `kpa_attack` call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpaReport {
    pub searched_range: (u64, u64),
    pub sample_bits: usize,
    pub candidates_examined: u64,
    pub candidates_discarded_by_constant: u64,
    pub candidates_inconsistent: u64,
    pub candidates_underdetermined: u64,
    pub candidates_verification_failed: u64,
    pub verified_keys: Vec<String>,
    pub wall_time_seconds: f64,
}

/// Full attack output: the aggregate report plus per-candidate detail for
/// everything that survived the constant filter.
#[derive(Clone, Debug)]
pub struct KpaResult {
    pub candidates: Vec<CandidateReport>,
    pub summary: KpaReport,
}

/// Precomputed per-attack state: the sample, the episode classification of
/// all 256 tables, and the symbolic output of each driven register at every
/// step, as coefficient rows over the joint R1..R3 cell space.
pub struct KpaContext {
    params: CipherParams,
    n: usize,
    sigma: Vec<u64>,
    episodes: [Episode; 256],
    unknowns: usize,
    words: usize,
    lengths: [usize; 3],
    offsets: [usize; 3],
    forms: Vec<u64>,
    eager_cap: u32,
}

/// Reusable scratch so a range scan allocates nothing per candidate.
pub struct KpaWorkspace {
    solver: IncrementalSolver,
    records: Vec<EpisodeRecord>,
    trace: Vec<(u8, bool)>,
    row: Vec<u64>,
    point: Vec<u64>,
}

impl KpaWorkspace {
    pub fn new(ctx: &KpaContext) -> Self {
        Self {
            solver: IncrementalSolver::new(ctx.unknowns),
            records: Vec::with_capacity(ctx.n / 8),
            trace: Vec::with_capacity(ctx.n),
            row: vec![0; ctx.words],
            point: vec![0; ctx.words],
        }
    }
}

impl KpaContext {
    pub fn new(cfg: &AttackConfig, sample: &KeystreamSample) -> Self {
        let n = sample.len().min(cfg.max_plaintext_bits);
        let lengths = [
            cfg.params.lengths()[1] as usize,
            cfg.params.lengths()[2] as usize,
            cfg.params.lengths()[3] as usize,
        ];
        let offsets = [0, lengths[0], lengths[0] + lengths[1]];
        let unknowns: usize = lengths.iter().sum();
        let words = unknowns.div_ceil(64);

        let mut registers: Vec<SymbolicLfsr> = (0..3)
            .map(|r| SymbolicLfsr::embedded(&cfg.params.polys()[r + 1], unknowns, offsets[r]))
            .collect();
        let mut forms = Vec::with_capacity(n * 3 * words);
        for _ in 0..n {
            for register in registers.iter_mut() {
                register.clock();
                forms.extend_from_slice(register.cell(0).coefficients().words());
            }
        }

        Self {
            params: cfg.params.clone(),
            n,
            sigma: sample.bits().words().to_vec(),
            episodes: episode_table(),
            unknowns,
            words,
            lengths,
            offsets,
            forms,
            eager_cap: cfg.eager_enumeration_cap,
        }
    }

    /// Number of sample bits the attack actually consumes.
    pub fn sample_bits(&self) -> usize {
        self.n
    }

    #[inline]
    fn sample_bit(&self, t: usize) -> bool {
        self.sigma[t >> 6] >> (t & 63) & 1 == 1
    }

    #[inline]
    fn form(&self, t: usize, register: usize) -> &[u64] {
        let base = (t * 3 + register) * self.words;
        &self.forms[base..base + self.words]
    }

    /// Runs one candidate through the filter, the solver, and bounded
    /// enumeration of any leftover solution space.
    pub fn examine(&self, i0: u64, ws: &mut KpaWorkspace) -> CandidateReport {
        self.examine_with_cap(i0, ws, self.eager_cap)
    }

    /// `examine` with an explicit rank-deficiency enumeration cap; the
    /// deferred second pass revisits candidates with a larger one.
    pub fn examine_with_cap(&self, i0: u64, ws: &mut KpaWorkspace, cap: u32) -> CandidateReport {
        ws.records.clear();
        let mut sim = R0Simulator::new(&self.params, i0);
        for t in 0..self.n {
            let (x0, f) = sim.step();
            match self.episodes[f.table() as usize] {
                Episode::Quiet => {}
                Episode::Constant { one } => {
                    if self.sample_bit(t) != one ^ x0 {
                        return CandidateReport {
                            i0,
                            equations_harvested: ws.records.len(),
                            rank: 0,
                            outcome: CandidateOutcome::DiscardedByConstant,
                        };
                    }
                }
                Episode::Affine { mask, complement } => ws.records.push(EpisodeRecord {
                    t: t as u32,
                    mask,
                    rhs: self.sample_bit(t) ^ x0 ^ complement,
                }),
            }
        }

        ws.solver.reset();
        for record in &ws.records {
            ws.row.iter_mut().for_each(|w| *w = 0);
            for register in 0..3 {
                if record.mask >> register & 1 == 1 {
                    for (acc, w) in ws.row.iter_mut().zip(self.form(record.t as usize, register))
                    {
                        *acc ^= w;
                    }
                }
            }
            if ws.solver.insert(&ws.row, record.rhs) == InsertOutcome::Inconsistent {
                return CandidateReport {
                    i0,
                    equations_harvested: ws.records.len(),
                    rank: ws.solver.rank(),
                    outcome: CandidateOutcome::Inconsistent,
                };
            }
        }

        let rank = ws.solver.rank();
        let dimension = (self.unknowns - rank) as u32;
        let report = |outcome| CandidateReport {
            i0,
            equations_harvested: ws.records.len(),
            rank,
            outcome,
        };
        if dimension > cap {
            return report(CandidateOutcome::Underdetermined { dimension });
        }

        self.replay_trace(i0, &mut ws.trace);
        let (particular, basis) = ws.solver.solution_space();
        ws.point.copy_from_slice(particular.words());
        // Gray-code walk over the affine solution space: each next index
        // flips exactly one basis vector in the running point.
        for index in 0..1u64 << dimension {
            if index > 0 {
                let flip = basis[index.trailing_zeros() as usize].words();
                for (acc, w) in ws.point.iter_mut().zip(flip) {
                    *acc ^= w;
                }
            }
            if self.verify_fast(&ws.trace, &ws.point) {
                if let Some(key) = self.assemble_and_confirm(i0, &ws.point) {
                    return report(CandidateOutcome::VerifiedKey(key));
                }
            }
        }
        report(CandidateOutcome::VerificationFailed)
    }

    fn replay_trace(&self, i0: u64, trace: &mut Vec<(u8, bool)>) {
        trace.clear();
        let mut sim = R0Simulator::new(&self.params, i0);
        trace.extend((0..self.n).map(|_| {
            let (x0, f) = sim.step();
            (f.table(), x0)
        }));
    }

    /// Checks a proposed R1..R3 fill against every sample bit by evaluating
    /// the symbolic output forms directly; wrong fills die in a couple of
    /// steps on the nonlinear episodes the solver never consumed.
    fn verify_fast(&self, trace: &[(u8, bool)], point: &[u64]) -> bool {
        for (t, &(f, x0)) in trace.iter().enumerate() {
            let mut v = 0u8;
            for register in 0..3 {
                let mut acc = 0u64;
                for (a, b) in self.form(t, register).iter().zip(point) {
                    acc ^= a & b;
                }
                v |= ((acc.count_ones() & 1) as u8) << register;
            }
            if (f >> v & 1 == 1) ^ x0 != self.sample_bit(t) {
                return false;
            }
        }
        true
    }

    /// Promotes a surviving fill to a key and replays the full cipher as an
    /// independent check on the symbolic fast path.
    fn assemble_and_confirm(&self, i0: u64, point: &[u64]) -> Option<SecretKey> {
        let mut states = [i0, 0, 0, 0];
        for register in 0..3 {
            let state = extract_bits(point, self.offsets[register], self.lengths[register]);
            if state == 0 {
                return None;
            }
            states[register + 1] = state;
        }
        let key = SecretKey::from_register_states(&self.params, states).ok()?;
        let regenerated = keystream(&key, &self.params, self.n).expect("key was just validated");
        let matches = (0..self.n).all(|t| regenerated.get(t) == self.sample_bit(t));
        debug_assert!(matches, "symbolic verification disagrees with the cipher");
        matches.then_some(key)
    }
}

fn extract_bits(words: &[u64], offset: usize, length: usize) -> u64 {
    let mut value = 0u64;
    for j in 0..length {
        let bit = offset + j;
        value |= (words[bit >> 6] >> (bit & 63) & 1) << j;
    }
    value
}

struct ScanOutput {
    examined: u64,
    discarded: u64,
    kept: Vec<CandidateReport>,
}

/// Single-threaded convenience wrapper around [`kpa_attack_parallel`].
pub fn kpa_attack(
    sample: &KeystreamSample,
    cfg: &AttackConfig,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<KpaResult, AttackError> {
    kpa_attack_parallel(sample, cfg, 1, progress)
}

/// Scans `cfg.search_range` for control states consistent with the sample
/// and recovers every verifiable key. Candidates whose solution space was
/// too big for the eager cap are revisited, smallest space first, only if
/// the scan itself produces no key.
pub fn kpa_attack_parallel(
    sample: &KeystreamSample,
    cfg: &AttackConfig,
    workers: usize,
    progress: Option<&(dyn Fn(f64) + Sync)>,
) -> Result<KpaResult, AttackError> {
    cfg.validate()?;
    let start = Instant::now();
    let ctx = KpaContext::new(cfg, sample);
    let (lo, hi) = (cfg.search_range.start, cfg.search_range.end);
    let total = hi - lo;
    let workers = workers.max(1).min(total.min(512) as usize);

    const CHUNK: u64 = 1 << 14;
    let cursor = AtomicU64::new(0);
    let done = AtomicU64::new(0);
    let outputs = Mutex::new(Vec::with_capacity(workers));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let mut ws = KpaWorkspace::new(&ctx);
                let mut out = ScanOutput {
                    examined: 0,
                    discarded: 0,
                    kept: Vec::new(),
                };
                loop {
                    let offset = cursor.fetch_add(CHUNK, Ordering::Relaxed);
                    if offset >= total {
                        break;
                    }
                    let chunk_lo = lo + offset;
                    let chunk_hi = hi.min(chunk_lo + CHUNK);
                    for i0 in chunk_lo..chunk_hi {
                        let report = ctx.examine(i0, &mut ws);
                        out.examined += 1;
                        if report.outcome == CandidateOutcome::DiscardedByConstant {
                            out.discarded += 1;
                        } else {
                            out.kept.push(report);
                        }
                    }
                    let finished = done.fetch_add(chunk_hi - chunk_lo, Ordering::Relaxed)
                        + (chunk_hi - chunk_lo);
                    if let Some(callback) = progress {
                        callback(finished as f64 / total as f64);
                    }
                }
                outputs.lock().unwrap().push(out);
            });
        }
    });

    let mut examined = 0;
    let mut discarded = 0;
    let mut kept = Vec::new();
    for out in outputs.into_inner().unwrap() {
        examined += out.examined;
        discarded += out.discarded;
        kept.extend(out.kept);
    }
    kept.sort_unstable_by_key(|report| report.i0);

    // Deferred pass: no key yet, so enumerate the affordable leftover
    // solution spaces, cheapest first. Wrong candidates fail quickly in
    // practice. Distinct control states whose clock bursts merge into one
    // trajectory harvest identical equation systems, so every preimage of
    // the keystream sits in the same dimension tier; once a tier verifies
    // a key, finish that whole tier before stopping so none is missed.
    if !kept
        .iter()
        .any(|r| matches!(r.outcome, CandidateOutcome::VerifiedKey(_)))
    {
        let mut deferred: Vec<(u32, usize)> = kept
            .iter()
            .enumerate()
            .filter_map(|(index, report)| match report.outcome {
                CandidateOutcome::Underdetermined { dimension }
                    if dimension <= cfg.max_free_dimension =>
                {
                    Some((dimension, index))
                }
                _ => None,
            })
            .collect();
        deferred.sort_unstable();
        let mut ws = KpaWorkspace::new(&ctx);
        let mut verified_dimension = None;
        for (dimension, index) in deferred {
            if verified_dimension.is_some_and(|d| dimension > d) {
                break;
            }
            let report = ctx.examine_with_cap(kept[index].i0, &mut ws, cfg.max_free_dimension);
            if matches!(report.outcome, CandidateOutcome::VerifiedKey(_)) {
                verified_dimension = Some(dimension);
            }
            kept[index] = report;
        }
    }

    let mut summary = KpaReport {
        searched_range: (lo, hi),
        sample_bits: ctx.sample_bits(),
        candidates_examined: examined,
        candidates_discarded_by_constant: discarded,
        candidates_inconsistent: 0,
        candidates_underdetermined: 0,
        candidates_verification_failed: 0,
        verified_keys: Vec::new(),
        wall_time_seconds: 0.0,
    };
    for report in &kept {
        match &report.outcome {
            CandidateOutcome::DiscardedByConstant => unreachable!("filtered during the scan"),
            CandidateOutcome::Inconsistent => summary.candidates_inconsistent += 1,
            CandidateOutcome::Underdetermined { .. } => summary.candidates_underdetermined += 1,
            CandidateOutcome::VerificationFailed => summary.candidates_verification_failed += 1,
            CandidateOutcome::VerifiedKey(key) => summary.verified_keys.push(key.to_hex()),
        }
    }
    summary.verified_keys.sort_unstable();
    summary.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(KpaResult {
        candidates: kept,
        summary,
    })
}

impl KpaReport {
    /// Folds another shard of the same logical attack into this one; wall
    /// time keeps the slowest shard since shards run concurrently.
    pub fn merge(&mut self, other: &KpaReport) {
        self.searched_range = (
            self.searched_range.0.min(other.searched_range.0),
            self.searched_range.1.max(other.searched_range.1),
        );
        self.candidates_examined += other.candidates_examined;
        self.candidates_discarded_by_constant += other.candidates_discarded_by_constant;
        self.candidates_inconsistent += other.candidates_inconsistent;
        self.candidates_underdetermined += other.candidates_underdetermined;
        self.candidates_verification_failed += other.candidates_verification_failed;
        self.verified_keys
            .extend(other.verified_keys.iter().cloned());
        self.verified_keys.sort_unstable();
        self.verified_keys.dedup();
        self.wall_time_seconds = self.wall_time_seconds.max(other.wall_time_seconds);
    }
}
