//! Privacy-preserving scalar product for any number of parties.
//!
//! Each of `n` parties holds a private integer vector of the same length `m`.
//! The protocol computes `sum_k prod_i d_i[k]` without any party revealing its
//! vector. It generalizes a commodity-server based two-party protocol: every
//! vector is treated as a diagonal matrix, masked with commodity randomness,
//! and the terms that the masking leaves behind are resolved by strictly
//! smaller instances of the same protocol.
//!
//! Modules:
//!
//! * [`algebra`]: diagonal arithmetic and `phi`, generic over the scalar ring.
//! * [`shares`]: commodity-server randomness `{R_i, r_i}`.
//! * [`engine`]: protocol mathematics, leftover enumeration, cost recurrences.
//! * [`runtime`]: party-level simulation with mailboxes and transcripts.
//! * [`audit`]: information-flow checks and the collusion attack.
//! * [`oracle`]: plaintext and symbolic ground truth.
//!
//! ```
//! use nsp_core::{engine, DiagVec, RandomnessConfig};
//!
//! let data: Vec<DiagVec> = vec![
//!     [1, 1, 1].into_iter().map(Into::into).collect(),
//!     [0, 1, 1].into_iter().map(Into::into).collect(),
//!     [1, 0, 1].into_iter().map(Into::into).collect(),
//! ];
//! let result = engine::n_party_protocol(
//!     &data,
//!     engine::ExecutionMode::FullRecursive,
//!     &RandomnessConfig::with_seed(7),
//!     nsp_core::runtime::CommodityStrategy::NaivePool,
//! )
//! .unwrap();
//! assert_eq!(result.value, 1.into());
//! assert_eq!(result.stats.protocols, 4);
//! assert_eq!(result.stats.messages, 30);
//! ```

pub mod algebra;
pub mod arith;
pub mod audit;
pub mod engine;
mod error;
pub mod oracle;
pub mod runtime;
pub mod shares;

pub use error::{Error, Result};
pub use shares::{RandomnessConfig, ShareSet, SharePair};

/// Protocol scalar: exact, unbounded.
pub type Scalar = num_bigint::BigInt;

/// Diagonal of a protocol matrix over [`Scalar`].
pub type DiagVec = algebra::Diagonal<Scalar>;

/// Diagonal over machine integers, for fast experiments where overflow is
/// known not to occur.
pub type DiagVecI64 = algebra::Diagonal<i64>;

/// Diagonal over `f64`.
pub type DiagVecF64 = algebra::Diagonal<f64>;

/// Serde adapter writing big integers as decimal strings.
pub mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
