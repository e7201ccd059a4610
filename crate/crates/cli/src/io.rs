//! File formats: raw MSB-first bit files, 30-hex-char key files, JSON
//! parameter files, and the numeric argument parsers.

use std::fs;
use std::ops::Range;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bsea_core::bits::{bits_from_bytes_msb, bits_to_bytes_msb, BitVec};
use bsea_core::cipher::{CipherParams, SecretKey};

pub fn load_params(path: Option<&Path>) -> Result<CipherParams> {
    let Some(path) = path else {
        return Ok(CipherParams::bsea1());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading parameters from {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing parameters from {}", path.display()))
}

/// Raw bytes, MSB-first within each byte; `n` trims trailing bits.
pub fn read_bits(path: &Path, n: Option<usize>) -> Result<BitVec> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let available = bytes.len() * 8;
    let n = n.unwrap_or(available);
    if n > available {
        bail!(
            "{} holds {available} bits but {n} were requested",
            path.display()
        );
    }
    Ok(bits_from_bytes_msb(&bytes, n))
}

/// Packs MSB-first; a final partial byte is zero-padded.
pub fn bits_to_bytes(bits: &BitVec) -> Vec<u8> {
    bits_to_bytes_msb(bits)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn key_from_hex(hex: &str, params: &CipherParams) -> Result<SecretKey> {
    SecretKey::from_hex(hex.trim(), params).with_context(|| "parsing the key")
}

pub fn key_from_file(path: &Path, params: &CipherParams) -> Result<SecretKey> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading key from {}", path.display()))?;
    SecretKey::from_hex(text.trim(), params)
        .with_context(|| format!("parsing the key in {}", path.display()))
}

/// Decimal, or hexadecimal with an 0x prefix.
pub fn parse_u64(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("`{s}` is not a valid number"))
}

/// Half-open `lo:hi` with either bound in decimal or 0x-hex.
pub fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let Some((lo, hi)) = s.split_once(':') else {
        return Err(format!("`{s}` is not of the form lo:hi"));
    };
    Ok(parse_u64(lo)?..parse_u64(hi)?)
}
