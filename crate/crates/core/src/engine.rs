//! Protocol mathematics.
//!
//! The two-party base protocol, the masked u-chain of the n-party protocol,
//! the enumeration of leftover terms and the closed-form cost recurrences.
//! Full protocol runs are driven party by party in [`crate::runtime`];
//! [`n_party_protocol`] runs one without keeping a transcript.
//!
//! Leftovers: after the chain, party `n` holds
//!
//! ```text
//! u_n + v2 = phi(D_1 ... D_n) - sum over B of (|B| - 1) * phi(prod_{i not in B} D_i * prod_{j in B} R_j)
//! ```
//!
//! where `B` ranges over all party subsets with `2 <= |B| <= n - 1`. Every
//! such term is itself a scalar product over `n - |B| + 1` parties: the data
//! owners outside `B` plus the commodity server, who knows the entrywise
//! product of the `R_j`.

use std::ops::AddAssign;

use itertools::Itertools;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{mask, phi};
use crate::arith::Arith;
use crate::error::{Error, Result};
use crate::runtime::{self, CommodityStrategy};
use crate::shares::{RandomnessConfig, ShareSet};
use crate::{DiagVec, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Every leftover is resolved by a genuine smaller protocol run.
    #[default]
    FullRecursive,
    /// Leftovers with a single data owner are resolved by sending that owner
    /// the product of the random matrices.
    Shortcut,
}

impl std::str::FromStr for ExecutionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full-recursive" | "full_recursive" => Ok(ExecutionMode::FullRecursive),
            "shortcut" => Ok(ExecutionMode::Shortcut),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for ExecutionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExecutionMode::FullRecursive => "full",
            ExecutionMode::Shortcut => "shortcut",
        })
    }
}

/// One leftover term of an `n`-party instance. Indices are 0-based
/// positions in the parent's participant list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SubprotocolSpec {
    /// Parties contributing raw data (`A`).
    pub data_indices: Vec<usize>,
    /// Parties contributing their random matrix (`B`).
    pub rand_indices: Vec<usize>,
    /// `|B| - 1`.
    pub multiplicity: u32,
}

impl SubprotocolSpec {
    /// Participants of the resulting sub-run: the data owners plus the
    /// commodity server.
    pub fn party_count(&self) -> usize {
        self.data_indices.len() + 1
    }

    pub fn is_single_data(&self) -> bool {
        self.data_indices.len() == 1
    }
}

/// Every leftover of an `n`-party instance, ordered by `|B|` ascending and
/// then by `A` lexicographically.
pub fn enumerate_subprotocols(n: usize) -> Result<Vec<SubprotocolSpec>> {
    if n < 3 {
        return Err(Error::argument(format!(
            "a {n}-party protocol has no leftover terms (need n >= 3)"
        )));
    }
    let mut specs = Vec::new();
    for x in 2..n {
        for data in (0..n).combinations(n - x) {
            let rand: Vec<usize> = (0..n).filter(|i| !data.contains(i)).collect();
            specs.push(SubprotocolSpec {
                data_indices: data,
                rand_indices: rand,
                multiplicity: (x - 1) as u32,
            });
        }
    }
    Ok(specs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolStats {
    /// Protocol instances run, the root included.
    pub protocols: u64,
    /// Protocol-layer messages: share pairs, masked matrices, chain values
    /// and shortcut products.
    pub messages: u64,
    /// Leftovers resolved by the single-data shortcut.
    pub shortcuts: u64,
    /// Sub-results handed from a finished sub-run to its parent's combining
    /// party. Not part of the per-instance message accounting.
    pub deliveries: u64,
}

impl AddAssign for ProtocolStats {
    fn add_assign(&mut self, o: Self) {
        self.protocols += o.protocols;
        self.messages += o.messages;
        self.shortcuts += o.shortcuts;
        self.deliveries += o.deliveries;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolResult {
    pub value: Scalar,
    pub stats: ProtocolStats,
}

/// Fixed randomness for the root instance, for replaying a known run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootReplay {
    pub shares: ShareSet,
    pub v2: Scalar,
}

/// Everything that parameterizes a protocol run besides the data.
#[derive(Clone, Debug, Default)]
pub struct ProtocolOptions {
    pub mode: ExecutionMode,
    pub strategy: CommodityStrategy,
    pub randomness: RandomnessConfig,
    pub arith: Arith,
    /// Worker threads for resolving sibling subprotocols; `<= 1` runs
    /// everything on the calling thread.
    pub threads: usize,
    /// Cross-check every instance against the plaintext oracle.
    pub verify: bool,
    pub replay: Option<RootReplay>,
}

impl ProtocolOptions {
    pub fn new(mode: ExecutionMode, strategy: CommodityStrategy, randomness: RandomnessConfig) -> Self {
        ProtocolOptions {
            mode,
            strategy,
            randomness,
            ..Default::default()
        }
    }
}

/// First link of the chain, computed by party 1:
/// `phi(Dh_2 ... Dh_n * D_1) + (n - 1) r_1 - v2`.
pub fn chain_start(
    others_masked: &[&DiagVec],
    own_data: &DiagVec,
    own_share: &Scalar,
    v2: &Scalar,
    n: usize,
    arith: &Arith,
) -> Result<Scalar> {
    let mut factors = others_masked.to_vec();
    factors.push(own_data);
    let weight = BigInt::from(n - 1);
    Ok(arith.reduce(phi(&factors)? + weight * own_share - v2))
}

/// Later link, computed by party `i`:
/// `u_{i-1} - phi(prod_{x != i} Dh_x * R_i) + (n - 1) r_i`.
pub fn chain_step(
    prev: &Scalar,
    others_masked: &[&DiagVec],
    own_rand: &DiagVec,
    own_share: &Scalar,
    n: usize,
    arith: &Arith,
) -> Result<Scalar> {
    let mut factors = others_masked.to_vec();
    factors.push(own_rand);
    let weight = BigInt::from(n - 1);
    Ok(arith.reduce(prev.clone() - phi(&factors)? + weight * own_share))
}

/// Runs the chain given everyone's masked matrix and returns `u_1 ... u_n`.
pub fn compute_u_chain(
    masked: &[DiagVec],
    raw_1: &DiagVec,
    r_mats: &[DiagVec],
    r_scalars: &[Scalar],
    v2: &Scalar,
) -> Result<Vec<Scalar>> {
    let n = masked.len();
    if n < 2 || r_mats.len() != n || r_scalars.len() != n {
        return Err(Error::argument(format!(
            "chain needs n >= 2 and one masked matrix, random matrix and share per party \
             (got {n}, {}, {})",
            r_mats.len(),
            r_scalars.len()
        )));
    }
    let arith = Arith::Plain;
    let others = |i: usize| -> Vec<&DiagVec> { (0..n).filter(|&x| x != i).map(|x| &masked[x]).collect() };
    let mut us = Vec::with_capacity(n);
    us.push(chain_start(&others(0), raw_1, &r_scalars[0], v2, n, &arith)?);
    for i in 1..n {
        let next = chain_step(&us[i - 1], &others(i), &r_mats[i], &r_scalars[i], n, &arith)?;
        us.push(next);
    }
    Ok(us)
}

/// The base two-party protocol with Alice holding `a` and `shares.pairs[0]`
/// and Bob holding `b`, `shares.pairs[1]` and `v2`.
pub fn two_party_protocol(
    a: &DiagVec,
    b: &DiagVec,
    shares: &ShareSet,
    v2: &Scalar,
) -> Result<ProtocolResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    shares.validate(2, a.len(), &Arith::Plain)?;
    let (alice, bob) = (&shares.pairs[0], &shares.pairs[1]);
    let a_hat = mask(a, &alice.r_mat)?;
    let b_hat = mask(b, &bob.r_mat)?;
    // Bob
    let u = phi(&[&a_hat, b])? + &bob.r_scalar - v2;
    // Alice
    let v1 = u - phi(&[&alice.r_mat, &b_hat])? + &alice.r_scalar;
    // Bob
    let value = v1 + v2;
    Ok(ProtocolResult {
        value,
        stats: ProtocolStats {
            protocols: 1,
            messages: 6,
            ..Default::default()
        },
    })
}

/// A single-data leftover `phi(D * R_j * ... * R_k)`, evaluated by the data
/// owner once the commodity server has sent it the product of the `R`s.
pub fn solve_single_d_shortcut(d: &DiagVec, r_product: &DiagVec) -> Result<Scalar> {
    phi(&[d, r_product])
}

/// Runs the full protocol on the parties' vectors and returns
/// `phi(D_1 ... D_n)` with its cost.
pub fn n_party_protocol(
    data: &[DiagVec],
    mode: ExecutionMode,
    cfg: &RandomnessConfig,
    strategy: CommodityStrategy,
) -> Result<ProtocolResult> {
    n_party_protocol_with(data, &ProtocolOptions::new(mode, strategy, cfg.clone()))
}

pub fn n_party_protocol_with(data: &[DiagVec], opts: &ProtocolOptions) -> Result<ProtocolResult> {
    runtime::execute(data, opts, false).map(|(result, _)| result)
}

/// Binomial coefficient.
fn choose(n: usize, k: usize) -> BigUint {
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// `f(2) = base`, `f(n) = own(n) + sum_{x=2}^{n-1} C(n, x) f(n - x + 1)`.
fn recurrence(n: usize, base: u64, own: impl Fn(usize) -> BigUint) -> Result<BigUint> {
    if n < 2 {
        return Err(Error::argument(format!("need n >= 2, got {n}")));
    }
    let mut table: Vec<BigUint> = vec![BigUint::zero(); n + 1];
    table[2] = BigUint::from(base);
    for k in 3..=n {
        let mut total = own(k);
        for x in 2..k {
            total += choose(k, x) * &table[k - x + 1];
        }
        table[k] = total;
    }
    Ok(table[n].clone())
}

/// Protocol instances in a fully recursive `n`-party run.
pub fn count_protocols(n: usize) -> Result<BigUint> {
    recurrence(n, 1, |_| BigUint::one())
}

/// Protocol-layer messages in a fully recursive `n`-party run; every
/// `k`-party instance sends `k + k^2`.
pub fn count_messages(n: usize) -> Result<BigUint> {
    recurrence(n, 6, |k| BigUint::from(k + k * k))
}
