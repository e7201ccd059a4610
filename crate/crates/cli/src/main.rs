//! `bsea`: keystream generation, encryption, truth-table analysis, the
//! known-plaintext and ciphertext-only attacks, and the FIPS 140-2 battery,
//! all driven from flat files so every run is reproducible.
//!
//! Exit codes: 0 success, 1 data or verification failure, 2 usage error,
//! 3 attack completed without finding a key.

use std::io::Write;
use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::{bail, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use bsea_core::attacks::{
    coa_decode_register, coa_harvest, derive_keystream, kpa_attack_parallel, AttackConfig,
    KeystreamSample, KpaReport,
};
use bsea_core::bits::{bits_to_hex, BitVec};
use bsea_core::boolfn::{classify, is_backdoor_member, properties, walsh_transform, TruthTable3};
use bsea_core::cipher::{encrypt, keystream, CipherParams, SecretKey};
use bsea_core::randtests::{battery_passes, fips_battery, TestVerdict, FIPS_BLOCK_BITS};

mod io;

const EXIT_NO_KEY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bsea",
    version,
    about = "BSEA-1 stream cipher laboratory: generate, encrypt, analyze, attack"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random key and print it as hex
    Keygen(KeygenArgs),
    /// Encrypt a file by XOR with the keystream
    Encrypt(CryptArgs),
    /// Decrypt a file (identical to encrypt)
    Decrypt(CryptArgs),
    /// Emit keystream bits
    Keystream(KeystreamArgs),
    /// Walsh spectrum, classification, and backdoor membership of a table
    AnalyzeF(AnalyzeArgs),
    /// Known-plaintext key recovery over a control-state range
    AttackKpa(KpaArgs),
    /// Ciphertext-only per-register correlation decoding
    AttackCoa(CoaArgs),
    /// FIPS 140-2 battery over 20,000-bit blocks
    Fips(FipsArgs),
}

#[derive(Args)]
struct ParamsArg {
    /// JSON parameters file; defaults to the standard BSEA-1 instance
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
}

impl ParamsArg {
    fn load(&self) -> Result<CipherParams> {
        io::load_params(self.params.as_deref())
    }
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct KeySource {
    /// Key as hex digits
    #[arg(long, value_name = "HEX")]
    key: Option<String>,
    /// File holding the hex key
    #[arg(long, value_name = "FILE")]
    key_file: Option<PathBuf>,
}

impl KeySource {
    fn load(&self, params: &CipherParams) -> Result<SecretKey> {
        match (&self.key, &self.key_file) {
            (Some(hex), None) => io::key_from_hex(hex, params),
            (None, Some(path)) => io::key_from_file(path, params),
            _ => unreachable!("clap enforces exactly one key source"),
        }
    }
}

#[derive(Args)]
struct KeygenArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// RNG seed for a reproducible draw; defaults to OS entropy
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the key (hex plus newline) to this file
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CryptArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[command(flatten)]
    key: KeySource,
    /// Bits to process; defaults to the whole input
    #[arg(long)]
    n: Option<usize>,
    /// Input file (raw bytes, bits MSB-first)
    input: PathBuf,
    /// Output file
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BitFormat {
    /// Packed bytes, MSB-first, zero-padded tail
    Raw,
    /// Hex digits, four bits each
    Hexbits,
}

#[derive(Args)]
struct KeystreamArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[command(flatten)]
    key: KeySource,
    /// Number of keystream bits
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = BitFormat::Raw)]
    format: BitFormat,
    /// Output file; stdout when omitted
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("target").required(true).args(["table", "all"]))]
struct AnalyzeArgs {
    /// Truth table as hex, e.g. 0x69
    table: Option<String>,
    /// Scan all 256 truth tables instead
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["plaintext", "keystream"]))]
struct KpaArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Known plaintext bit file, paired with --ciphertext
    #[arg(long, value_name = "FILE", requires = "ciphertext")]
    plaintext: Option<PathBuf>,
    /// Ciphertext bit file matching --plaintext
    #[arg(long, value_name = "FILE", requires = "plaintext")]
    ciphertext: Option<PathBuf>,
    /// Precomputed keystream bit file, alternative to the pair
    #[arg(long, value_name = "FILE")]
    keystream: Option<PathBuf>,
    /// Known bits to consume; defaults to min(available, 1800)
    #[arg(long)]
    n: Option<usize>,
    /// Control-state sub-range lo:hi (half-open); defaults to the full space
    #[arg(long, value_parser = io::parse_range)]
    range: Option<Range<u64>>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the JSON report here
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CoaArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Ciphertext bit file
    #[arg(long, value_name = "FILE")]
    ciphertext: PathBuf,
    /// Control-register initial state, assumed known or enumerated outside
    #[arg(long, value_parser = io::parse_u64)]
    i0: u64,
    /// Plaintext zero-bias q
    #[arg(long, default_value_t = 0.6)]
    bias: f64,
    /// Bits to consume; defaults to the whole file
    #[arg(long)]
    n: Option<usize>,
    /// Candidates printed per register
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Refuse to enumerate registers beyond 2^BUDGET states
    #[arg(long, default_value_t = 26)]
    budget_log2: u32,
    /// Write the JSON report here
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).args(["keystream", "key", "key_file"]))]
struct FipsArgs {
    #[command(flatten)]
    params: ParamsArg,
    /// Keystream bit file; tests every full 20,000-bit block in it
    #[arg(long, value_name = "FILE")]
    keystream: Option<PathBuf>,
    /// Generate blocks from this hex key instead
    #[arg(long, value_name = "HEX")]
    key: Option<String>,
    /// Generate blocks from the key in this file
    #[arg(long, value_name = "FILE")]
    key_file: Option<PathBuf>,
    /// Blocks to generate in the key modes
    #[arg(long, default_value_t = 1)]
    blocks: usize,
    /// Write the JSON report here
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Keygen(args) => cmd_keygen(args),
        Command::Encrypt(args) | Command::Decrypt(args) => cmd_crypt(args),
        Command::Keystream(args) => cmd_keystream(args),
        Command::AnalyzeF(args) => cmd_analyze(args),
        Command::AttackKpa(args) => cmd_attack_kpa(args),
        Command::AttackCoa(args) => cmd_attack_coa(args),
        Command::Fips(args) => cmd_fips(args),
    }
}

fn cmd_keygen(args: &KeygenArgs) -> Result<u8> {
    let params = args.params.load()?;
    let key = match args.seed {
        Some(seed) => SecretKey::random(&params, &mut ChaCha12Rng::seed_from_u64(seed)),
        None => SecretKey::random(&params, &mut rand::thread_rng()),
    };
    let hex = key.to_hex();
    if let Some(path) = &args.output {
        io::write_bytes(path, format!("{hex}\n").as_bytes())?;
    }
    println!("{hex}");
    Ok(0)
}

fn cmd_crypt(args: &CryptArgs) -> Result<u8> {
    let params = args.params.load()?;
    let key = args.key.load(&params)?;
    let bits = io::read_bits(&args.input, args.n)?;
    let out = encrypt(&key, &params, &bits)?;
    io::write_bytes(&args.output, &io::bits_to_bytes(&out))?;
    Ok(0)
}

fn cmd_keystream(args: &KeystreamArgs) -> Result<u8> {
    let params = args.params.load()?;
    let key = args.key.load(&params)?;
    let sigma = keystream(&key, &params, args.n)?;
    match args.format {
        BitFormat::Raw => {
            let bytes = io::bits_to_bytes(&sigma);
            match &args.output {
                Some(path) => io::write_bytes(path, &bytes)?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
        }
        BitFormat::Hexbits => {
            let text = bits_to_hex(&sigma);
            match &args.output {
                Some(path) => io::write_bytes(path, format!("{text}\n").as_bytes())?,
                None => println!("{text}"),
            }
        }
    }
    Ok(0)
}

fn describe_table(f: TruthTable3) {
    let props = properties(f);
    println!("table:           {f}");
    println!("spectrum:        {}", walsh_transform(f));
    println!("classification:  {}", classify(f));
    println!(
        "backdoor member: {}",
        if is_backdoor_member(f) { "yes" } else { "no" }
    );
    println!(
        "balanced:        {}",
        if props.balanced { "yes" } else { "no" }
    );
    println!("nonlinearity:    {}", props.nonlinearity);
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<u8> {
    if let Some(text) = &args.table {
        let f: TruthTable3 = text.parse().map_err(anyhow::Error::msg)?;
        describe_table(f);
        return Ok(0);
    }
    let mut census = [0u32; 3];
    for entry in 0..=255u8 {
        let f = TruthTable3::new(entry);
        let class = classify(f);
        let tier = match class.probability() {
            p if p == 1.0 => 0,
            p if p == 0.875 => 1,
            _ => 2,
        };
        census[tier] += 1;
        println!(
            "{f}  {class}{}",
            if class.is_affine() { "  [backdoor]" } else { "" }
        );
    }
    println!();
    println!("affine (backdoor set):  {}", census[0]);
    println!("agreement 0.875 tier:   {}", census[1]);
    println!("agreement 0.750 tier:   {}", census[2]);
    Ok(0)
}

fn cmd_attack_kpa(args: &KpaArgs) -> Result<u8> {
    let params = args.params.load()?;
    let sample = match (&args.plaintext, &args.ciphertext, &args.keystream) {
        (Some(p), Some(c), None) => {
            let plaintext = io::read_bits(p, args.n)?;
            let ciphertext = io::read_bits(c, args.n)?;
            if plaintext.len() != ciphertext.len() {
                bail!(
                    "plaintext and ciphertext lengths differ ({} vs {} bits); \
                     pass --n to trim both",
                    plaintext.len(),
                    ciphertext.len()
                );
            }
            derive_keystream(&plaintext, &ciphertext)?
        }
        (None, None, Some(ks)) => KeystreamSample::new(io::read_bits(ks, args.n)?)?,
        _ => unreachable!("clap enforces exactly one sample source"),
    };

    let mut cfg = AttackConfig::new(params);
    if let Some(range) = &args.range {
        cfg.search_range = range.clone();
    }
    if let Some(n) = args.n {
        cfg.max_plaintext_bits = n;
    }

    let printed = AtomicU64::new(u64::MAX);
    let progress = |fraction: f64| {
        let bucket = (fraction * 20.0) as u64;
        if printed.swap(bucket, Ordering::Relaxed) != bucket {
            eprintln!("progress: {:5.1}%", fraction * 100.0);
        }
    };
    let result = kpa_attack_parallel(&sample, &cfg, args.workers, Some(&progress))?;

    print_kpa_summary(&result.summary);
    if let Some(path) = &args.report {
        let mut json = serde_json::to_string_pretty(&result.summary)?;
        json.push('\n');
        io::write_bytes(path, json.as_bytes())?;
    }
    Ok(if result.summary.verified_keys.is_empty() {
        EXIT_NO_KEY
    } else {
        0
    })
}

fn print_kpa_summary(summary: &KpaReport) {
    println!(
        "searched range:       {:#x}..{:#x}",
        summary.searched_range.0, summary.searched_range.1
    );
    println!("sample bits:          {}", summary.sample_bits);
    println!("examined:             {}", summary.candidates_examined);
    println!(
        "discarded (constant): {}",
        summary.candidates_discarded_by_constant
    );
    println!("inconsistent:         {}", summary.candidates_inconsistent);
    println!(
        "underdetermined:      {}",
        summary.candidates_underdetermined
    );
    println!(
        "verification failed:  {}",
        summary.candidates_verification_failed
    );
    println!("wall time:            {:.2}s", summary.wall_time_seconds);
    if summary.verified_keys.is_empty() {
        println!("verified keys:        none");
    } else {
        println!("verified keys:        {}", summary.verified_keys.len());
        for key in &summary.verified_keys {
            println!("  {key}");
        }
    }
}

fn cmd_attack_coa(args: &CoaArgs) -> Result<u8> {
    let params = args.params.load()?;
    let ciphertext = io::read_bits(&args.ciphertext, args.n)?;
    let mut cfg = AttackConfig::new(params.clone());
    cfg.plaintext_zero_bias = args.bias;

    let equations = coa_harvest(&ciphertext, args.i0, &cfg);
    println!("ciphertext bits:     {}", ciphertext.len());
    println!("equations harvested: {}", equations.len());

    let mut report_registers = Vec::new();
    for register in 1..4 {
        let count = equations
            .iter()
            .filter(|equation| equation.register == register)
            .count();
        let scores = coa_decode_register(&equations, register, &params, args.budget_log2)?;
        let shown: Vec<_> = scores.iter().take(args.top).collect();
        let cells = params.lengths()[register];
        println!("register {register} ({cells} cells, {count} equations): top candidates");
        let digits = (cells as usize + 3) / 4;
        for (state, score) in &shown {
            println!("  0x{state:0digits$x}  {score}/{count}");
        }
        report_registers.push(serde_json::json!({
            "register": register,
            "cells": params.lengths()[register],
            "equations": count,
            "top": shown
                .iter()
                .map(|(state, score)| serde_json::json!({"state": state, "score": score}))
                .collect::<Vec<_>>(),
        }));
    }

    if let Some(path) = &args.report {
        let report = serde_json::json!({
            "i0": args.i0,
            "ciphertext_bits": ciphertext.len(),
            "zero_bias": args.bias,
            "equations": equations.len(),
            "registers": report_registers,
        });
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        io::write_bytes(path, json.as_bytes())?;
    }
    Ok(0)
}

fn cmd_fips(args: &FipsArgs) -> Result<u8> {
    let params = args.params.load()?;
    let bits = match (&args.keystream, &args.key, &args.key_file) {
        (Some(path), None, None) => io::read_bits(path, None)?,
        (None, key, key_file) => {
            let source = KeySource {
                key: key.clone(),
                key_file: key_file.clone(),
            };
            let key = source.load(&params)?;
            keystream(&key, &params, args.blocks * FIPS_BLOCK_BITS)?
        }
        _ => unreachable!("clap enforces exactly one source"),
    };

    let total = bits.len() / FIPS_BLOCK_BITS;
    if total == 0 {
        bail!(
            "need at least one full {FIPS_BLOCK_BITS}-bit block, got {} bits",
            bits.len()
        );
    }

    let mut passed = 0;
    let mut blocks = Vec::with_capacity(total);
    for index in 0..total {
        let start = index * FIPS_BLOCK_BITS;
        let block: BitVec = (start..start + FIPS_BLOCK_BITS).map(|t| bits.get(t)).collect();
        let verdicts = fips_battery(&block)?;
        let pass = battery_passes(&verdicts);
        passed += pass as usize;
        if !pass {
            let failing: Vec<&str> = verdicts
                .iter()
                .filter(|verdict| !verdict.pass)
                .map(|verdict| verdict.name.as_str())
                .collect();
            println!("block {index}: FAIL ({})", failing.join(", "));
        }
        blocks.push(verdicts);
    }
    println!("blocks passed: {passed}/{total}");

    if let Some(path) = &args.report {
        let report = serde_json::json!({
            "passed": passed,
            "total": total,
            "blocks": blocks
                .iter()
                .map(|verdicts: &Vec<TestVerdict>| serde_json::json!({
                    "pass": battery_passes(verdicts),
                    "tests": verdicts,
                }))
                .collect::<Vec<_>>(),
        });
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        io::write_bytes(path, json.as_bytes())?;
    }
    Ok(if passed == total { 0 } else { 1 })
}
