//! Correlated bit chain: `n` bits with exactly `d` flips (adjacent pairs
//! with unequal values).
//!
//! A configuration is determined by its first bit and the set of flip
//! positions, so there are `2·C(n−1, d)` of them and the phase space grows as
//! a power of `n` rather than exponentially.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

/// Sum of the bits of a configuration, `M = Σ s_i`.
pub type SumStatistic = usize;

/// Largest number of flip sets `enumerate_exact` will walk.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ChainSpec {
    n: usize,
    d: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    d: usize,
}

impl TryFrom<RawSpec> for ChainSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        ChainSpec::new(raw.n, raw.d)
    }
}

impl ChainSpec {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 || d > n - 1 {
            return Err(Error::InvalidChainSpec { n, d });
        }
        Ok(Self { n, d })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    /// `C(n−1, d)`: number of ways to place the flips.
    pub fn flip_sets(&self) -> BigUint {
        binomial(BigUint::from(self.n - 1), BigUint::from(self.d))
    }

    /// Number of runs of ones and of zeros for a chain starting with `first`.
    fn runs(&self, first: u8) -> (usize, usize) {
        let runs = self.d + 1;
        let starting = runs.div_ceil(2);
        let other = runs / 2;
        if first == 1 {
            (starting, other)
        } else {
            (other, starting)
        }
    }
}

/// Ways to write `total` as an ordered sum of `parts` positive integers.
fn compositions(total: usize, parts: usize) -> BigUint {
    match (total, parts) {
        (0, 0) => BigUint::one(),
        (_, 0) => BigUint::zero(),
        (t, p) if t < p => BigUint::zero(),
        (t, p) => binomial(BigUint::from(t - 1), BigUint::from(p - 1)),
    }
}

/// A valid configuration: `n` bits with exactly `d` flips.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChainState {
    bits: Vec<u8>,
}

impl ChainState {
    pub fn new(spec: &ChainSpec, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != spec.n {
            return Err(Error::InvalidChainState(format!(
                "expected {} bits, got {}",
                spec.n,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidChainState("bits must be 0 or 1".into()));
        }
        let flips = count_flips(&bits);
        if flips != spec.d {
            return Err(Error::InvalidChainState(format!(
                "expected {} flips, found {flips}",
                spec.d
            )));
        }
        Ok(Self { bits })
    }

    /// Parses a `0`/`1` string such as `"0011111100"`.
    pub fn parse(spec: &ChainSpec, text: &str) -> Result<Self> {
        let bits = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidChainState(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(spec, bits)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn flips(&self) -> usize {
        count_flips(&self.bits)
    }
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

fn count_flips(bits: &[u8]) -> usize {
    bits.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn magnetization(state: &ChainState) -> SumStatistic {
    state.bits.iter().map(|&b| b as usize).sum()
}

/// Counts configurations per `M` by walking every (first bit, flip set) pair.
///
/// The returned vector has `n + 1` entries indexed by `M`.
pub fn enumerate_exact(spec: &ChainSpec) -> Result<Vec<u64>> {
    let sets = spec.flip_sets();
    let n_minus_one = spec.n - 1;
    if sets > BigUint::from(ENUMERATION_LIMIT) {
        return Err(Error::TooLarge {
            n_minus_one,
            d: spec.d,
            limit: ENUMERATION_LIMIT,
        });
    }
    let (n, d) = (spec.n, spec.d);
    let mut counts = vec![0u64; n + 1];
    // Flip positions p_1 < … < p_d in 1..n: bit i differs from bit i−1 at each p_k.
    let mut pos: Vec<usize> = (1..=d).collect();
    loop {
        // Ones when starting from 0 are the odd-numbered runs.
        let mut ones = 0;
        let mut k = 0;
        while k < d {
            let end = if k + 1 < d { pos[k + 1] } else { n };
            ones += end - pos[k];
            k += 2;
        }
        counts[ones] += 1;
        counts[n - ones] += 1;

        // Next combination in lexicographic order.
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(counts);
            }
            i -= 1;
            if pos[i] < n_minus_one - (d - 1 - i) {
                pos[i] += 1;
                for j in (i + 1)..d {
                    pos[j] = pos[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exact counts per `M` from run-length compositions; no size limit.
pub fn exact_counts(spec: &ChainSpec) -> Vec<BigUint> {
    (0..=spec.n).map(|m| exact_count(spec, m)).collect()
}

/// Configurations with sum `m`, split by first bit: `(first = 0, first = 1)`.
fn exact_count_by_start(spec: &ChainSpec, m: SumStatistic) -> (BigUint, BigUint) {
    if m > spec.n {
        return (BigUint::zero(), BigUint::zero());
    }
    let by = |first: u8| {
        let (one_runs, zero_runs) = spec.runs(first);
        compositions(m, one_runs) * compositions(spec.n - m, zero_runs)
    };
    (by(0), by(1))
}

pub fn exact_count(spec: &ChainSpec, m: SumStatistic) -> BigUint {
    let (a, b) = exact_count_by_start(spec, m);
    a + b
}

/// `κ(d) = d^{d−2} ⌊d/2⌋! ⌊(d−1)/2⌋!`.
pub fn kappa(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::UnsupportedD(0));
    }
    let factorial = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let df = d as f64;
    Ok(df.powi(d as i32 - 2) * factorial(d / 2) * factorial((d - 1) / 2))
}

/// True the first time a spec is seen, so each spec warns once per process.
fn warn_once(spec: &ChainSpec) -> bool {
    static SEEN: Mutex<BTreeSet<(usize, usize)>> = Mutex::new(BTreeSet::new());
    SEEN.lock().map(|mut s| s.insert((spec.n, spec.d))).unwrap_or(true)
}

/// Large-`n` closed form `(n^{d−1}/κ(d)) (1 − 4(M − n/2)²/n²)^{⌊(d−1)/2⌋}`.
///
/// Only the shape in `M` is meaningful at finite `n`; the prefactor is not
/// normalized to the exact counts. Logs a warning, once per spec, when `n < 10·d`.
pub fn omega_asymptotic<T: Real>(spec: &ChainSpec, m: SumStatistic) -> Result<T> {
    let d = spec.d;
    let k = kappa(d)?;
    if spec.n < 10 * d && warn_once(spec) {
        log::warn!(
            "asymptotic count used outside its regime: n = {} < 10·d = {}",
            spec.n,
            10 * d
        );
    }
    let n = T::from_usize_lossy(spec.n);
    let half = n / T::lit(2.0);
    let dev = T::from_usize_lossy(m) - half;
    let base = (T::one() - T::lit(4.0) * dev * dev / (n * n)).max(T::zero());
    let exponent = ((d - 1) / 2) as i32;
    let shape = if exponent == 0 { T::one() } else { base.powi(exponent) };
    Ok(n.powi(d as i32 - 1) / T::lit(k) * shape)
}

/// Total number of configurations, exact and asymptotic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceVolume {
    /// `2·C(n−1, d)`.
    #[serde(serialize_with = "serialize_biguint")]
    pub exact: BigUint,
    /// `(2/d!)·n^d`.
    pub asymptotic: f64,
}

fn serialize_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

pub fn total_phase_space(spec: &ChainSpec) -> PhaseSpaceVolume {
    let exact = spec.flip_sets() * 2u32;
    let d_factorial = (1..=spec.d).map(|i| i as f64).product::<f64>();
    let asymptotic = 2.0 / d_factorial * (spec.n as f64).powi(spec.d as i32);
    PhaseSpaceVolume { exact, asymptotic }
}

/// Natural log of a big unsigned integer; `-∞` for zero.
pub fn ln_biguint(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Uniform draws among configurations with sum `m`, deterministic per seed.
pub fn sample_states(spec: &ChainSpec, m: SumStatistic, count: usize, seed: u64) -> Result<Vec<ChainState>> {
    let (from_zero, from_one) = exact_count_by_start(spec, m);
    if from_zero.is_zero() && from_one.is_zero() {
        return Err(Error::EmptyStratum(m));
    }
    let p_one = {
        let a = ln_biguint(&from_zero);
        let b = ln_biguint(&from_one);
        // b / (a + b) computed from logs.
        1.0 / (1.0 + (a - b).exp())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let first: u8 = if rng.gen::<f64>() < p_one { 1 } else { 0 };
        let (one_runs, zero_runs) = spec.runs(first);
        let ones = random_composition(&mut rng, m, one_runs);
        let zeros = random_composition(&mut rng, spec.n - m, zero_runs);
        let mut bits = Vec::with_capacity(spec.n);
        let (mut oi, mut zi) = (ones.iter(), zeros.iter());
        for run in 0..=spec.d {
            let bit = if run % 2 == 0 { first } else { 1 - first };
            let len = if bit == 1 { oi.next() } else { zi.next() };
            bits.extend(std::iter::repeat_n(bit, *len.expect("run count matches flips")));
        }
        out.push(ChainState { bits });
    }
    Ok(out)
}

/// Uniformly random composition of `total` into `parts` positive integers.
fn random_composition(rng: &mut impl Rng, total: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    let mut cuts: Vec<usize> = index::sample(rng, total - 1, parts - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut lens = Vec::with_capacity(parts);
    for c in cuts {
        lens.push(c - prev);
        prev = c;
    }
    lens.push(total - prev);
    lens
}
