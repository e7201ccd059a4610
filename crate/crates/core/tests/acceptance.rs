//! Release gate for the laboratory: nine end-to-end checks covering the
//! attacks, the backdoor structure, the statistical quality of the cipher,
//! and the structural invariants everything else leans on.
//!
//! Runs as a plain binary (`harness = false`) so that one verdict line per
//! check always reaches the terminal, pass or fail. A failing check panics;
//! the runner catches it, records the reason, and keeps going so a single
//! regression never hides the state of the other eight.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use bsea_core::attacks::{
    biased_bits, coa_decode_register, coa_harvest, derive_keystream, kpa_attack_parallel,
    noisy_confidence, AttackConfig,
};
use bsea_core::bits::BitVec;
use bsea_core::boolfn::{backdoor_set, classify, is_backdoor_member, walsh_transform, TruthTable3};
use bsea_core::cipher::{
    decrypt, encrypt, key_setup, keystream, CipherParams, SecretKey, UpdateRule,
};
use bsea_core::galois::{
    gf2_solve, poly_is_primitive, BinaryPolynomial, Gf2System, IncrementalSolver, Lfsr,
    SolveOutcome, SymbolicLfsr, BSEA1_FACTORIZATIONS,
};
use bsea_core::randtests::{battery_passes, fips_battery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() -> ExitCode {
    let checks: [(&str, fn()); 9] = [
        (
            "known-plaintext attack recovers 20/20 random keys in budget",
            kpa_recovers_every_key,
        ),
        (
            "exactly 16 of the 256 tables are affine (the backdoor set)",
            backdoor_census_is_sixteen,
        ),
        (
            "walsh spectra of the two anchor tables are exact",
            walsh_anchors_are_exact,
        ),
        (
            "equation confidence is exact and empirically calibrated",
            confidence_is_calibrated,
        ),
        (
            "keystream passes the FIPS battery for >= 97/100 keys",
            keystream_passes_the_battery,
        ),
        (
            "all four feedback polynomials are primitive",
            polynomials_are_primitive,
        ),
        (
            "solver agrees with exhaustive search on 200 small systems",
            solver_matches_brute_force,
        ),
        (
            "ciphertext-only decode ranks true states first in >= 18/20 trials",
            coa_ranks_true_states_first,
        ),
        (
            "structural invariants hold with zero failures",
            structural_invariants_hold,
        ),
    ];

    // Substring filters, libtest style: `cargo test --test acceptance -- walsh`.
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|arg| !arg.starts_with('-'))
        .collect();

    let mut selected = 0;
    let mut failed = 0;
    for (label, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        selected += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("acceptance: pass ({elapsed:6.1}s)  {label}"),
            Err(payload) => {
                failed += 1;
                let reason = payload
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| payload.downcast_ref::<&str>().copied())
                    .unwrap_or("panicked without a message");
                println!("acceptance: FAIL ({elapsed:6.1}s)  {label}: {reason}");
            }
        }
    }
    println!("acceptance: {}/{selected} checks passed", selected - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn reduced_params() -> CipherParams {
    let polys = [
        BinaryPolynomial::new(&[9, 4, 0]).unwrap(),
        BinaryPolynomial::new(&[11, 2, 0]).unwrap(),
        BinaryPolynomial::new(&[13, 4, 3, 1, 0]).unwrap(),
        BinaryPolynomial::new(&[17, 3, 0]).unwrap(),
    ];
    CipherParams::new(polys, TruthTable3::new(0x6B), UpdateRule::Full).unwrap()
}

fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitVec {
    (0..n).map(|_| rng.gen()).collect()
}

/// Register state as an assignment of its cell unknowns: bit j is cell j.
fn state_bits(state: u64, width: u32) -> BitVec {
    (0..width).map(|j| state >> j & 1 == 1).collect()
}

/// Twenty random keys, 1800 known-plaintext bits each, full 2^23 scan. The
/// first key runs single-threaded inside a 10-minute budget, the rest with
/// 8 workers inside 2 minutes each. The planted key must be among the
/// verified keys every time (a scan may legitimately also report further
/// control states whose burst clocking merges into the planted trajectory,
/// so the key list is not always a singleton).
fn kpa_recovers_every_key() {
    let params = CipherParams::bsea1();
    let mut rng = ChaCha12Rng::seed_from_u64(2001);
    for trial in 0..20u32 {
        let key = SecretKey::random(&params, &mut rng);
        let plaintext = random_bits(1800, &mut rng);
        let ciphertext = encrypt(&key, &params, &plaintext).unwrap();
        let sample = derive_keystream(&plaintext, &ciphertext).unwrap();

        let cfg = AttackConfig::new(params.clone());
        let (workers, budget) = if trial == 0 { (1, 600.0) } else { (8, 120.0) };
        let start = Instant::now();
        let result = kpa_attack_parallel(&sample, &cfg, workers, None).unwrap();
        let elapsed = start.elapsed().as_secs_f64();

        eprintln!(
            "  kpa {:2}/20: {} worker(s), {:5.1}s, {} verified key(s)",
            trial + 1,
            workers,
            elapsed,
            result.summary.verified_keys.len(),
        );
        assert!(
            result.summary.verified_keys.contains(&key.to_hex()),
            "trial {trial}: planted key not recovered (got {:?})",
            result.summary.verified_keys,
        );
        assert!(
            elapsed <= budget,
            "trial {trial}: {elapsed:.1}s over the {budget:.0}s budget with {workers} worker(s)",
        );
    }
}

fn backdoor_census_is_sixteen() {
    let affine: Vec<u8> = (0..=255u8)
        .filter(|&f| classify(TruthTable3::new(f)).is_affine())
        .collect();
    assert_eq!(affine.len(), 16, "affine census: {}", affine.len());

    let set = backdoor_set();
    assert_eq!(set.len(), 16);
    for &f in set {
        assert!(is_backdoor_member(f));
        assert!(affine.contains(&f.table()));
        assert_eq!(walsh_transform(f).max_abs(), 8);
    }
}

fn walsh_anchors_are_exact() {
    assert_eq!(
        walsh_transform(TruthTable3::new(0x69)).values(),
        &[0, 0, 0, 0, 0, 0, 0, -8],
    );
    assert_eq!(
        walsh_transform(TruthTable3::new(0x07)).values(),
        &[2, -2, -2, 2, -6, -2, -2, 2],
    );
}

/// The two exactness anchors plus a live calibration run: harvest well over
/// 10^5 equations from a ciphertext-only attack on the reduced instance and
/// compare each confidence tier's stated probability against the fraction
/// of its equations the true register states actually satisfy.
fn confidence_is_calibrated() {
    let class = classify(TruthTable3::new(0x07));
    assert_eq!(class.probability(), 0.875);
    let mixed = noisy_confidence(0.875, 0.6);
    assert!(
        (mixed - 0.575).abs() < 1e-15,
        "noisy_confidence(0.875, 0.6) = {mixed}",
    );
    assert!((noisy_confidence(1.0, 0.6) - 0.6).abs() < 1e-15);

    let params = reduced_params();
    let mut rng = ChaCha12Rng::seed_from_u64(2004);
    let key = SecretKey::random(&params, &mut rng);
    let truth = key.register_states(&params);
    let plaintext = biased_bits(700_000, 0.6, &mut rng);
    let ciphertext = encrypt(&key, &params, &plaintext).unwrap();

    let cfg = AttackConfig::new(params.clone());
    let equations = coa_harvest(&ciphertext, truth[0], &cfg);

    // (count, satisfied) per tier: index 0 holds 0.575, index 1 holds 0.6.
    let mut tiers = [(0u64, 0u64); 2];
    for eq in &equations {
        let tier = if (eq.confidence - 0.575).abs() < 1e-12 {
            0
        } else {
            assert!(
                (eq.confidence - 0.6).abs() < 1e-12,
                "unexpected confidence {}",
                eq.confidence,
            );
            1
        };
        let assignment = state_bits(truth[eq.register], params.lengths()[eq.register]);
        tiers[tier].0 += 1;
        tiers[tier].1 += (eq.form.evaluate(&assignment) == eq.rhs) as u64;
    }

    let (n575, hit575) = tiers[0];
    let (n600, hit600) = tiers[1];
    assert!(n575 >= 100_000, "only {n575} equations in the 0.575 tier");
    assert!(n600 >= 1_000, "only {n600} equations in the 0.600 tier");
    let rate575 = hit575 as f64 / n575 as f64;
    let rate600 = hit600 as f64 / n600 as f64;
    eprintln!("  calibration: 0.575 tier {rate575:.4} over {n575}, 0.600 tier {rate600:.4} over {n600}");
    assert!((rate575 - 0.575).abs() <= 0.01, "0.575 tier measured {rate575:.4}");
    assert!((rate600 - 0.6).abs() <= 0.01, "0.600 tier measured {rate600:.4}");
}

fn keystream_passes_the_battery() {
    let params = CipherParams::bsea1();
    let mut rng = ChaCha12Rng::seed_from_u64(2005);
    let mut passed = 0;
    for _ in 0..100 {
        let key = SecretKey::random(&params, &mut rng);
        let sigma = keystream(&key, &params, 20_000).unwrap();
        passed += battery_passes(&fips_battery(&sigma).unwrap()) as u32;
    }
    assert!(passed >= 97, "{passed}/100 keys passed");
    eprintln!("  battery: {passed}/100 keys passed");
}

fn polynomials_are_primitive() {
    let params = CipherParams::bsea1();
    for (poly, factors) in params.polys().iter().zip(BSEA1_FACTORIZATIONS) {
        assert!(
            poly_is_primitive(poly, factors).unwrap(),
            "degree {} polynomial is not primitive",
            poly.degree(),
        );
    }
}

/// Random systems over at most 12 unknowns, checked against enumeration of
/// all assignments: the outcome class, the unique solution when full rank,
/// and the entire affine solution set when rank-deficient.
fn solver_matches_brute_force() {
    let mut rng = ChaCha12Rng::seed_from_u64(2007);
    for trial in 0..200 {
        let unknowns = rng.gen_range(1..=12usize);
        let rows = rng.gen_range(0..=unknowns + 4);
        let mut system = Gf2System::new(unknowns);
        for _ in 0..rows {
            let mut coefficients = BitVec::zeros(unknowns);
            for j in 0..unknowns {
                coefficients.set(j, rng.gen());
            }
            system.push(coefficients, rng.gen());
        }

        let satisfying: Vec<u64> = (0..1u64 << unknowns)
            .filter(|&v| {
                system.rows().iter().all(|(coefficients, rhs)| {
                    let mut parity = false;
                    for j in 0..unknowns {
                        parity ^= coefficients.get(j) && v >> j & 1 == 1;
                    }
                    parity == *rhs
                })
            })
            .collect();

        let to_u64 =
            |b: &BitVec| (0..unknowns).fold(0u64, |acc, j| acc | (b.get(j) as u64) << j);
        match gf2_solve(&system) {
            SolveOutcome::Inconsistent => {
                assert!(satisfying.is_empty(), "trial {trial}: false inconsistency");
            }
            SolveOutcome::Unique(solution) => {
                assert_eq!(satisfying, vec![to_u64(&solution)], "trial {trial}");
            }
            SolveOutcome::Underdetermined { rank } => {
                let mut solver = IncrementalSolver::new(unknowns);
                for (coefficients, rhs) in system.rows() {
                    solver.insert(coefficients.words(), *rhs);
                }
                assert_eq!(solver.rank(), rank);
                let (particular, basis) = solver.solution_space();
                let mut points: Vec<u64> = (0..1u64 << basis.len())
                    .map(|index| {
                        let mut v = to_u64(&particular);
                        for (k, direction) in basis.iter().enumerate() {
                            if index >> k & 1 == 1 {
                                v ^= to_u64(direction);
                            }
                        }
                        v
                    })
                    .collect();
                points.sort_unstable();
                assert_eq!(points, satisfying, "trial {trial}: solution sets differ");
            }
        }
    }
}

/// Reduced instance, 50,000 ciphertext bits of 0.6-biased plaintext, true
/// control state given. Majority decoding must put each true driven-register
/// state in first place in at least 18 of 20 trials, well under the
/// per-trial time budget.
fn coa_ranks_true_states_first() {
    let params = reduced_params();
    let mut rng = ChaCha12Rng::seed_from_u64(2008);
    let mut firsts = [0u32; 3];
    for trial in 0..20u32 {
        let start = Instant::now();
        let key = SecretKey::random(&params, &mut rng);
        let truth = key.register_states(&params);
        let plaintext = biased_bits(50_000, 0.6, &mut rng);
        let ciphertext = encrypt(&key, &params, &plaintext).unwrap();

        let cfg = AttackConfig::new(params.clone());
        let equations = coa_harvest(&ciphertext, truth[0], &cfg);
        for register in 1..4 {
            let ranking =
                coa_decode_register(&equations, register, &params, cfg.decode_budget_log2)
                    .unwrap();
            firsts[register - 1] += (ranking[0].0 == truth[register]) as u32;
        }
        let elapsed = start.elapsed().as_secs_f64();
        assert!(elapsed <= 300.0, "trial {trial}: {elapsed:.1}s over budget");
    }
    eprintln!(
        "  decode rank-first: R1 {}/20, R2 {}/20, R3 {}/20",
        firsts[0], firsts[1], firsts[2],
    );
    for (index, &count) in firsts.iter().enumerate() {
        assert!(
            count >= 18,
            "register {} ranked first in only {count}/20 trials",
            index + 1,
        );
    }
}

/// Four invariants everything else rests on: the truth-table trace depends
/// only on R0, symbolic LFSRs mirror concrete ones, decryption inverts
/// encryption, and a partitioned key-search range finds the same keys as
/// one scan of the union.
fn structural_invariants_hold() {
    let params = CipherParams::bsea1();
    let mut rng = ChaCha12Rng::seed_from_u64(2009);

    // R0-autonomy: same control state, independently random driven
    // registers, identical (step count, x0, truth table) traces.
    let lengths = params.lengths();
    for _ in 0..20 {
        let i0 = rng.gen_range(1..1u64 << lengths[0]);
        let fresh_state = |rng: &mut ChaCha12Rng| {
            let states = [
                i0,
                rng.gen_range(1..1u64 << lengths[1]),
                rng.gen_range(1..1u64 << lengths[2]),
                rng.gen_range(1..1u64 << lengths[3]),
            ];
            key_setup(&SecretKey::from_register_states(&params, states).unwrap(), &params)
                .unwrap()
        };
        let mut first = fresh_state(&mut rng);
        let mut second = fresh_state(&mut rng);
        for _ in 0..250 {
            let a = first.next_bit();
            let b = second.next_bit();
            assert_eq!(a.step_count, b.step_count);
            assert_eq!(a.x0, b.x0);
            assert_eq!(a.f_before_output, b.f_before_output);
        }
    }

    // Mirror property: 10^4 symbolic-versus-concrete output comparisons
    // across both instances' polynomials and random initial states.
    let reduced = reduced_params();
    let pool: Vec<&BinaryPolynomial> =
        params.polys().iter().chain(reduced.polys().iter()).collect();
    for _ in 0..100 {
        let poly = pool[rng.gen_range(0..pool.len())];
        let init = rng.gen_range(1..1u64 << poly.degree());
        let assignment = state_bits(init, poly.degree());
        let mut concrete = Lfsr::new(poly, init);
        let mut symbolic = SymbolicLfsr::new(poly);
        for _ in 0..100 {
            let output = concrete.clock();
            let form = symbolic.clock();
            assert_eq!(form.evaluate(&assignment), output);
        }
    }

    // Round trip: 10^4 random (key, message) pairs, decrypt inverts encrypt.
    for _ in 0..10_000 {
        let key = SecretKey::random(&params, &mut rng);
        let plaintext = random_bits(rng.gen_range(0..=96), &mut rng);
        let ciphertext = encrypt(&key, &params, &plaintext).unwrap();
        assert_eq!(ciphertext.len(), plaintext.len());
        assert_eq!(decrypt(&key, &params, &ciphertext).unwrap(), plaintext);
    }

    // Partition equivalence: scanning two halves of a range separately and
    // merging reports the same verified keys as scanning it whole.
    for _ in 0..3 {
        let key = SecretKey::random(&params, &mut rng);
        let i0 = key.register_states(&params)[0];
        let plaintext = random_bits(1800, &mut rng);
        let ciphertext = encrypt(&key, &params, &plaintext).unwrap();
        let sample = derive_keystream(&plaintext, &ciphertext).unwrap();

        let lo = i0.saturating_sub(2000).max(1);
        let hi = (i0 + 2000).min(1 << lengths[0]);
        let mid = rng.gen_range(lo + 1..hi);
        let scan = |range: std::ops::Range<u64>| {
            let mut cfg = AttackConfig::new(params.clone());
            cfg.search_range = range;
            kpa_attack_parallel(&sample, &cfg, 1, None).unwrap().summary
        };
        let whole = scan(lo..hi);
        let mut merged = scan(lo..mid);
        merged.merge(&scan(mid..hi));
        assert_eq!(merged.verified_keys, whole.verified_keys);
        assert_eq!(merged.candidates_examined, whole.candidates_examined);
        assert_eq!(merged.searched_range, whole.searched_range);
        assert!(whole.verified_keys.contains(&key.to_hex()));
    }
}
