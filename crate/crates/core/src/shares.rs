//! Commodity-server randomness.
//!
//! A commodity server hands party `i` a random diagonal `R_i` and a scalar
//! `r_i`, where the scalars are additive shares of `phi(R_1 ... R_n)`: all
//! but the last are drawn at random and the last is forced by the sum.

use num_bigint::{BigInt, RandBigInt};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::phi;
use crate::arith::{is_non_negative, Arith};
use crate::error::{Error, Result};
use crate::{decimal, DiagVec, Scalar};

/// Half-open integer interval `[low, high)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    #[serde(with = "decimal")]
    pub low: BigInt,
    #[serde(with = "decimal")]
    pub high: BigInt,
}

impl IntRange {
    pub fn new(low: impl Into<BigInt>, high: impl Into<BigInt>) -> Result<Self> {
        let (low, high) = (low.into(), high.into());
        if low >= high {
            return Err(Error::argument(format!("empty range [{low}, {high})")));
        }
        Ok(IntRange { low, high })
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        *x >= self.low && *x < self.high
    }

    pub fn sample(&self, rng: &mut ChaCha20Rng) -> BigInt {
        rng.gen_bigint_range(&self.low, &self.high)
    }
}

impl std::fmt::Display for IntRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.low, self.high)
    }
}

impl std::str::FromStr for IntRange {
    type Err = Error;

    /// Parses `low..high`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once("..")
            .ok_or_else(|| Error::Parse(format!("expected LOW..HIGH, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("not an integer: {t:?}")))
        };
        IntRange::new(parse(lo)?, parse(hi)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomnessConfig {
    /// Range of the entries of every `R_i`; lower bound must be `>= 0`.
    pub entry_range: IntRange,
    /// Range of the random `r_i` and of `v2`.
    pub scalar_range: IntRange,
    pub seed: u64,
}

impl RandomnessConfig {
    pub fn new(entry_range: IntRange, scalar_range: IntRange, seed: u64) -> Result<Self> {
        if !is_non_negative(&entry_range.low) {
            return Err(Error::argument("entry range must not contain negative values"));
        }
        Ok(RandomnessConfig {
            entry_range,
            scalar_range,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        RandomnessConfig {
            seed,
            ..Self::default()
        }
    }

    pub(crate) fn reseeded(&self, seed: u64) -> Self {
        RandomnessConfig {
            seed,
            ..self.clone()
        }
    }
}

impl Default for RandomnessConfig {
    fn default() -> Self {
        let top = BigInt::from(1u64 << 31);
        RandomnessConfig {
            entry_range: IntRange::new(0, top.clone()).unwrap(),
            scalar_range: IntRange::new(0, top).unwrap(),
            seed: 0,
        }
    }
}

/// Derives an independent child seed from a root seed, a protocol path and a
/// purpose label.
pub fn derive_seed(root: u64, path: &[u32], label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update((path.len() as u32).to_le_bytes());
    for p in path {
        h.update(p.to_le_bytes());
    }
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub(crate) fn rng_for(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// One party's commodity randomness `{R_i, r_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharePair {
    pub r_mat: DiagVec,
    #[serde(with = "decimal")]
    pub r_scalar: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareSet {
    pub pairs: Vec<SharePair>,
    /// `None` when the set was injected rather than generated.
    pub seed: Option<u64>,
}

impl ShareSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn vector_len(&self) -> usize {
        self.pairs[0].r_mat.len()
    }

    pub fn r_mats(&self) -> Vec<&DiagVec> {
        self.pairs.iter().map(|p| &p.r_mat).collect()
    }

    pub fn scalars(&self) -> Vec<&Scalar> {
        self.pairs.iter().map(|p| &p.r_scalar).collect()
    }

    /// `sum_i r_i - phi(R_1, ..., R_n)`, reduced in `arith`. Zero for a valid set.
    pub fn sum_defect(&self, arith: &Arith) -> Result<Scalar> {
        let total = self
            .pairs
            .iter()
            .fold(BigInt::from(0), |acc, p| acc + &p.r_scalar);
        Ok(arith.reduce(total - phi(&self.r_mats())?))
    }

    pub fn validate(&self, parties: usize, m: usize, arith: &Arith) -> Result<()> {
        if self.len() != parties {
            return Err(Error::InvalidShareSet(format!(
                "expected {parties} share pairs, found {}",
                self.len()
            )));
        }
        if let Some(p) = self.pairs.iter().find(|p| p.r_mat.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: p.r_mat.len(),
            });
        }
        let defect = self.sum_defect(arith)?;
        if defect != BigInt::from(0) {
            return Err(Error::InvalidShareSet(format!(
                "scalar shares miss phi of the random matrices by {defect}"
            )));
        }
        Ok(())
    }

    /// Debug/audit export; never written during normal runs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("share set serializes")
    }
}

/// Synthetic party vectors with entries drawn uniformly from `range`,
/// reproducible from `seed`.
pub fn random_vectors(n: usize, m: usize, range: &IntRange, seed: u64) -> Result<Vec<DiagVec>> {
    if n == 0 || m == 0 {
        return Err(Error::argument(format!("need at least one vector of length >= 1, got {n} x {m}")));
    }
    let mut rng = rng_for(derive_seed(seed, &[], "data"));
    (0..n)
        .map(|_| DiagVec::new((0..m).map(|_| range.sample(&mut rng)).collect()))
        .collect()
}

/// Generates `{R_i, r_i}` for `n` parties over plain integers.
pub fn generate_share_set(n: usize, m: usize, cfg: &RandomnessConfig) -> Result<ShareSet> {
    generate_share_set_in(n, m, cfg, &Arith::Plain)
}

/// As [`generate_share_set`], in the given arithmetic. Under a modulus the
/// configured ranges are replaced by `[0, p)`.
pub fn generate_share_set_in(
    n: usize,
    m: usize,
    cfg: &RandomnessConfig,
    arith: &Arith,
) -> Result<ShareSet> {
    if n < 2 {
        return Err(Error::argument(format!("need at least 2 parties, got {n}")));
    }
    if m < 1 {
        return Err(Error::argument("vector length must be at least 1"));
    }
    let (entry_range, scalar_range) = match arith.modulus() {
        None => (cfg.entry_range.clone(), cfg.scalar_range.clone()),
        Some(p) => {
            let full = IntRange::new(0, p.value().clone())?;
            (full.clone(), full)
        }
    };
    let mut rng = rng_for(cfg.seed);
    let mats: Vec<DiagVec> = (0..n)
        .map(|_| (0..m).map(|_| entry_range.sample(&mut rng)).collect())
        .collect();
    let scalars: Vec<Option<Scalar>> = (0..n)
        .map(|i| (i + 1 < n).then(|| scalar_range.sample(&mut rng)))
        .collect();
    let mut set = complete(mats, scalars, arith)?;
    set.seed = Some(cfg.seed);
    Ok(set)
}

/// Builds a share set from fixed matrices and scalars with exactly one
/// scalar left open; the open slot is forced by the sum identity.
pub fn inject_share_set(mats: Vec<DiagVec>, scalars: Vec<Option<Scalar>>) -> Result<ShareSet> {
    complete(mats, scalars, &Arith::Plain)
}

fn complete(mats: Vec<DiagVec>, scalars: Vec<Option<Scalar>>, arith: &Arith) -> Result<ShareSet> {
    if mats.len() != scalars.len() {
        return Err(Error::argument(format!(
            "{} matrices but {} scalar slots",
            mats.len(),
            scalars.len()
        )));
    }
    if mats.len() < 2 {
        return Err(Error::argument("need at least 2 share pairs"));
    }
    let open: Vec<usize> = (0..scalars.len()).filter(|&i| scalars[i].is_none()).collect();
    if open.len() != 1 {
        return Err(Error::argument(format!(
            "exactly one scalar slot must be unset, found {}",
            open.len()
        )));
    }
    let refs: Vec<&DiagVec> = mats.iter().collect();
    let target = phi(&refs)?;
    let known = scalars
        .iter()
        .flatten()
        .fold(BigInt::from(0), |acc, s| acc + s);
    let forced = arith.reduce(target - known);
    let pairs = mats
        .into_iter()
        .zip(scalars)
        .map(|(r_mat, s)| SharePair {
            r_mat,
            r_scalar: s.unwrap_or_else(|| forced.clone()),
        })
        .collect();
    Ok(ShareSet { pairs, seed: None })
}
