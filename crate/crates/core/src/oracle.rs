//! Ground truth that does not go through the protocol.
//!
//! [`plaintext_scalar_product`] evaluates the target value directly.
//! [`symbolic_expand_protocol`] expands the masked u-chain as a formal
//! polynomial in per-party symbols `D_i` and `R_i`. The polynomial shows
//! exactly which mixed terms survive the masking and with what
//! coefficient, which is where the leftover multiplicities come from.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::FromPrimitive;
use serde::Serialize;

use crate::algebra::{Diagonal, Ring};
use crate::error::{Error, Result};
use crate::shares::{inject_share_set, ShareSet};
use crate::{DiagVec, Scalar};

/// `sum_k prod_i data[i][k]`, accumulated vector-by-vector and summed from
/// the last position down (a different order from [`crate::algebra::phi`]).
pub fn plaintext_scalar_product<T: Ring>(data: &[Diagonal<T>]) -> Result<T> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("no vectors".into()))?;
    let m = first.len();
    let mut acc: Vec<T> = first.entries().to_vec();
    for v in &data[1..] {
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: v.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(v.entries()) {
            *a = a.clone() * x;
        }
    }
    Ok(acc.iter().rev().fold(T::zero(), |s, x| s + x))
}

/// What one party contributes to a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Factor {
    /// Raw data `D_i`.
    D,
    /// Commodity randomness `R_i`.
    R,
    Absent,
}

/// A term `coefficient * phi(prod_i factor_i)`; `factors[i]` belongs to party
/// `i` (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormalMonomial {
    pub coefficient: i64,
    pub factors: Vec<Factor>,
}

impl FormalMonomial {
    pub fn r_count(&self) -> usize {
        self.factors.iter().filter(|f| **f == Factor::R).count()
    }

    pub fn d_count(&self) -> usize {
        self.factors.iter().filter(|f| **f == Factor::D).count()
    }

    /// Parties contributing raw data.
    pub fn data_parties(&self) -> Vec<usize> {
        (0..self.factors.len()).filter(|&i| self.factors[i] == Factor::D).collect()
    }

    /// Parties contributing randomness.
    pub fn rand_parties(&self) -> Vec<usize> {
        (0..self.factors.len()).filter(|&i| self.factors[i] == Factor::R).collect()
    }
}

impl fmt::Display for FormalMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self
            .factors
            .iter()
            .enumerate()
            .filter_map(|(i, t)| match t {
                Factor::D => Some(format!("D{}", i + 1)),
                Factor::R => Some(format!("R{}", i + 1)),
                Factor::Absent => None,
            })
            .collect();
        write!(f, "{:+} phi({})", self.coefficient, body.join("*"))
    }
}

/// A formal expression `sum of monomials + share_weight * (r_1 + ... + r_n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    parties: usize,
    terms: BTreeMap<Vec<Factor>, i64>,
    share_weight: i64,
}

/// Symbol in an unexpanded product.
#[derive(Clone, Copy)]
enum Slot {
    D,
    R,
    Masked,
}

impl Expansion {
    fn empty(parties: usize) -> Self {
        Expansion {
            parties,
            terms: BTreeMap::new(),
            share_weight: 0,
        }
    }

    /// Adds `sign * phi(prod slots)` with every masked slot expanded as `D + R`.
    fn add_product(&mut self, sign: i64, slots: &[Slot]) {
        let masked: Vec<usize> = (0..slots.len())
            .filter(|&i| matches!(slots[i], Slot::Masked))
            .collect();
        for pick in 0u32..(1 << masked.len()) {
            let mut factors: Vec<Factor> = slots
                .iter()
                .map(|s| match s {
                    Slot::D => Factor::D,
                    Slot::R => Factor::R,
                    Slot::Masked => Factor::Absent,
                })
                .collect();
            for (bit, &i) in masked.iter().enumerate() {
                factors[i] = if pick >> bit & 1 == 1 { Factor::R } else { Factor::D };
            }
            *self.terms.entry(factors).or_insert(0) += sign;
        }
        self.terms.retain(|_, c| *c != 0);
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    /// Coefficient on `sum_i r_i`.
    pub fn share_weight(&self) -> i64 {
        self.share_weight
    }

    pub fn coefficient(&self, factors: &[Factor]) -> i64 {
        self.terms.get(factors).copied().unwrap_or(0)
    }

    /// Non-zero monomials in canonical order.
    pub fn monomials(&self) -> Vec<FormalMonomial> {
        self.terms
            .iter()
            .map(|(factors, &coefficient)| FormalMonomial {
                coefficient,
                factors: factors.clone(),
            })
            .collect()
    }

    /// The same value with `sum_i r_i` replaced by `phi(R_1 ... R_n)`, which
    /// holds for every valid share set.
    pub fn with_share_identity(&self) -> Expansion {
        let mut out = self.clone();
        let all_r = vec![Factor::R; self.parties];
        *out.terms.entry(all_r).or_insert(0) += self.share_weight;
        out.terms.retain(|_, c| *c != 0);
        out.share_weight = 0;
        out
    }

    /// Mixed monomials (at least one D and one R) with a negative coefficient.
    pub fn leftovers(&self) -> Vec<FormalMonomial> {
        self.monomials()
            .into_iter()
            .filter(|t| t.coefficient < 0 && t.d_count() > 0 && t.r_count() > 0)
            .collect()
    }

    /// Evaluates the monomials (without the share term) on concrete data.
    pub fn evaluate<T: Ring + FromPrimitive>(&self, d: &[Diagonal<T>], r: &[Diagonal<T>]) -> Result<T> {
        if d.len() != self.parties || r.len() != self.parties {
            return Err(Error::InvalidArgument(format!(
                "expansion is over {} parties",
                self.parties
            )));
        }
        let mut total = T::zero();
        for (factors, &c) in &self.terms {
            let picked: Vec<&Diagonal<T>> = factors
                .iter()
                .enumerate()
                .filter_map(|(i, f)| match f {
                    Factor::D => Some(&d[i]),
                    Factor::R => Some(&r[i]),
                    Factor::Absent => None,
                })
                .collect();
            let value = crate::algebra::phi(&picked)?;
            let c = T::from_i64(c).expect("coefficient fits the scalar type");
            total = total + &(value * &c);
        }
        Ok(total)
    }

    /// One term per line, e.g. `-2 phi(D1*R2*R3*R4)`, then the share term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in self.monomials() {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        if self.share_weight != 0 {
            out.push_str(&format!("{:+} (r_1 + ... + r_{})\n", self.share_weight, self.parties));
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc {
            parties: usize,
            share_weight: i64,
            monomials: Vec<FormalMonomial>,
        }
        serde_json::to_string_pretty(&Doc {
            parties: self.parties,
            share_weight: self.share_weight,
            monomials: self.monomials(),
        })
        .expect("expansion serializes")
    }
}

/// Expands `u_n + v2` of the masked chain where each party folds in
/// `share_weight * r_i`:
///
/// ```text
/// u_1 + v2 = phi(D_1 * Dh_2 * ... * Dh_n) + w r_1
/// u_i      = u_{i-1} - phi(R_i * prod_{x != i} Dh_x) + w r_i
/// ```
///
/// with every masked `Dh_x` expanded to `D_x + R_x`.
pub fn symbolic_expand_chain(n: usize, share_weight: i64) -> Result<Expansion> {
    if !(2..=6).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "symbolic expansion supports 2..=6 parties, got {n}"
        )));
    }
    let mut e = Expansion::empty(n);
    let mut first = vec![Slot::Masked; n];
    first[0] = Slot::D;
    e.add_product(1, &first);
    for i in 1..n {
        let mut slots = vec![Slot::Masked; n];
        slots[i] = Slot::R;
        e.add_product(-1, &slots);
    }
    e.share_weight = share_weight;
    Ok(e)
}

/// Expansion of the protocol's chain, which folds in `(n - 1) r_i` per party.
pub fn symbolic_expand_protocol(n: usize) -> Result<Expansion> {
    symbolic_expand_chain(n, n as i64 - 1)
}

/// The published three-party worked example: vectors `A, B, C`, the
/// commodity randomness handed to each party (the last share forced), and
/// the `v2` drawn by party 1. The protocol's answer is 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkedExample {
    pub data: Vec<DiagVec>,
    pub shares: ShareSet,
    pub v2: Scalar,
}

pub fn worked_example() -> WorkedExample {
    let dv = |xs: [i64; 3]| -> DiagVec { xs.into_iter().map(Scalar::from).collect() };
    let shares = inject_share_set(
        vec![dv([172, 243, 136]), dv([274, 356, 180]), dv([341, 357, 69])],
        vec![Some(Scalar::from(8015322)), Some(Scalar::from(10543269)), None],
    )
    .expect("worked example shares are consistent");
    WorkedExample {
        data: vec![dv([1, 1, 1]), dv([0, 1, 1]), dv([1, 0, 1])],
        shares,
        v2: Scalar::from(3),
    }
}
