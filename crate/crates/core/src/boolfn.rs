//! 3-input Boolean functions as 8-bit truth tables: evaluation, the
//! Walsh-Hadamard spectrum, classification into exact-affine versus biased
//! approximations, and the 16-member affine set that makes the cipher's
//! combiner exploitable.

use std::fmt;
use std::ops::Index;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Truth table of a Boolean function on (x1, x2, x3): f(v) is bit v of the
/// byte, where v = x1 + 2*x2 + 4*x3.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable3(u8);

impl TruthTable3 {
    pub const fn new(table: u8) -> Self {
        Self(table)
    }

    pub const fn table(&self) -> u8 {
        self.0
    }

    #[inline]
    pub fn evaluate(&self, x1: bool, x2: bool, x3: bool) -> bool {
        let v = x1 as u8 | (x2 as u8) << 1 | (x3 as u8) << 2;
        self.0 >> v & 1 == 1
    }

    /// The table with `pattern` XOR-ed in, the cipher's per-step mutation.
    pub const fn xored(self, pattern: u8) -> Self {
        Self(self.0 ^ pattern)
    }
}

impl fmt::Display for TruthTable3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:02X}", self.0)
    }
}

impl fmt::Debug for TruthTable3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for TruthTable3 {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        u8::from_str_radix(digits, 16)
            .map(Self)
            .map_err(|_| format!("invalid truth table {s:?}, expected 0x00..0xFF"))
    }
}

impl Serialize for TruthTable3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TruthTable3 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Signed correlation spectrum: values[u] is the sum over all 8 inputs of
/// (-1)^(f(x) XOR <x,u>), with u's bit layout matching v's (bit 0 is x1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WalshSpectrum {
    values: [i32; 8],
}

impl WalshSpectrum {
    pub fn values(&self) -> &[i32; 8] {
        &self.values
    }

    pub fn max_abs(&self) -> i32 {
        self.values.iter().map(|v| v.abs()).max().unwrap()
    }
}

impl Index<usize> for WalshSpectrum {
    type Output = i32;

    fn index(&self, u: usize) -> &i32 {
        &self.values[u]
    }
}

impl fmt::Display for WalshSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Fast Walsh-Hadamard butterfly over the function's (-1)^f(x) vector.
pub fn walsh_transform(f: TruthTable3) -> WalshSpectrum {
    let mut a = [0i32; 8];
    for (x, slot) in a.iter_mut().enumerate() {
        *slot = 1 - 2 * (f.table() as i32 >> x & 1);
    }
    let mut h = 1;
    while h < 8 {
        for block in (0..8).step_by(2 * h) {
            for j in block..block + h {
                let (u, v) = (a[j], a[j + h]);
                a[j] = u + v;
                a[j + h] = u - v;
            }
        }
        h *= 2;
    }
    WalshSpectrum { values: a }
}

/// How close the function is to its best linear approximation <x,u> XOR c.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackdoorClass {
    /// f(x) = <x,u> XOR c exactly: a spectrum entry of magnitude 8.
    Affine { mask: u8, complement: bool },
    /// Best approximation holds with probability p < 1.
    Biased {
        mask: u8,
        complement: bool,
        probability: f64,
    },
}

impl BackdoorClass {
    pub fn mask(&self) -> u8 {
        match *self {
            BackdoorClass::Affine { mask, .. } | BackdoorClass::Biased { mask, .. } => mask,
        }
    }

    pub fn complement(&self) -> bool {
        match *self {
            BackdoorClass::Affine { complement, .. }
            | BackdoorClass::Biased { complement, .. } => complement,
        }
    }

    pub fn probability(&self) -> f64 {
        match *self {
            BackdoorClass::Affine { .. } => 1.0,
            BackdoorClass::Biased { probability, .. } => probability,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, BackdoorClass::Affine { .. })
    }
}

impl fmt::Display for BackdoorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BackdoorClass::Affine { mask, complement } => {
                write!(f, "Affine(u={mask}, c={})", complement as u8)
            }
            BackdoorClass::Biased {
                mask,
                complement,
                probability,
            } => write!(
                f,
                "Biased(u={mask}, c={}, p={probability})",
                complement as u8
            ),
        }
    }
}

/// Best linear approximation of `f`: the mask with the largest spectrum
/// magnitude (ties broken toward the smallest mask), its sign as the
/// complement bit, and the agreement probability (1 + |spectrum| / 8) / 2.
pub fn classify(f: TruthTable3) -> BackdoorClass {
    let spectrum = walsh_transform(f);
    let mut best = 0;
    for u in 1..8 {
        if spectrum[u].abs() > spectrum[best].abs() {
            best = u;
        }
    }
    let value = spectrum[best];
    let mask = best as u8;
    let complement = value < 0;
    if value.abs() == 8 {
        BackdoorClass::Affine { mask, complement }
    } else {
        BackdoorClass::Biased {
            mask,
            complement,
            probability: 0.5 * (1.0 + value.abs() as f64 / 8.0),
        }
    }
}

/// The 16 truth tables classified as affine: the linear functions of
/// (x1, x2, x3) and their complements, in ascending table order. These are
/// the backdoor moments of the cipher; whenever the evolving combiner lands
/// on one, a keystream bit turns into an exact linear equation.
pub fn backdoor_set() -> &'static [TruthTable3] {
    static SET: OnceLock<Vec<TruthTable3>> = OnceLock::new();
    SET.get_or_init(|| {
        (0u8..=255)
            .map(TruthTable3::new)
            .filter(|&f| classify(f).is_affine())
            .collect()
    })
}

pub fn is_backdoor_member(f: TruthTable3) -> bool {
    backdoor_set().binary_search(&f).is_ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FunctionProperties {
    /// Equal numbers of 0 and 1 outputs, i.e. spectrum[0] = 0.
    pub balanced: bool,
    /// Hamming distance to the nearest affine function: 4 - max|spectrum|/2.
    pub nonlinearity: u32,
}

pub fn properties(f: TruthTable3) -> FunctionProperties {
    let spectrum = walsh_transform(f);
    FunctionProperties {
        balanced: spectrum[0] == 0,
        nonlinearity: 4 - spectrum.max_abs() as u32 / 2,
    }
}
