//! Plain integer arithmetic versus arithmetic reduced modulo a prime.
//!
//! By default every protocol value is an unbounded integer. With a modulus
//! configured, all randomness is drawn uniformly from `[0, p)`, every
//! intermediate is reduced into `[0, p)`, and the final value is lifted back
//! to the symmetric range `(-p/2, p/2]`.

use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::{DiagVec, Scalar};

/// A prime modulus, `p >= 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modulus(BigInt);

impl Modulus {
    pub fn new(p: BigInt) -> Result<Self> {
        if p < BigInt::from(3) {
            return Err(Error::InvalidModulus(format!("{p} is smaller than 3")));
        }
        if !is_probable_prime(&p) {
            return Err(Error::InvalidModulus(format!("{p} is not prime")));
        }
        Ok(Modulus(p))
    }

    pub fn value(&self) -> &BigInt {
        &self.0
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Miller-Rabin with the first twenty prime bases. Deterministic below
/// 3.3e24; a false positive above that needs a strong pseudoprime to all
/// twenty bases.
fn is_probable_prime(n: &BigInt) -> bool {
    const BASES: [u32; 20] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    let two = BigInt::from(2);
    if *n < two {
        return false;
    }
    for b in BASES {
        let b = BigInt::from(b);
        if *n == b {
            return true;
        }
        if n.is_multiple_of(&b) {
            return false;
        }
    }
    let n_minus_one: BigInt = n - 1;
    let mut d = n_minus_one.clone();
    let mut s = 0u32;
    while d.is_even() {
        d >>= 1;
        s += 1;
    }
    'bases: for b in BASES {
        let mut x = BigInt::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// The arithmetic domain one protocol run computes in.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Arith {
    #[default]
    Plain,
    Modular(Modulus),
}

impl Arith {
    pub fn modulus(&self) -> Option<&Modulus> {
        match self {
            Arith::Plain => None,
            Arith::Modular(p) => Some(p),
        }
    }

    pub fn reduce(&self, x: Scalar) -> Scalar {
        match self {
            Arith::Plain => x,
            Arith::Modular(p) => x.mod_floor(&p.0),
        }
    }

    pub fn reduce_vec(&self, v: DiagVec) -> DiagVec {
        match self {
            Arith::Plain => v,
            Arith::Modular(p) => v.into_entries().into_iter().map(|x| x.mod_floor(&p.0)).collect(),
        }
    }

    /// Maps a reduced value back to the integers, choosing the representative
    /// of smallest magnitude.
    pub fn lift(&self, x: Scalar) -> Scalar {
        match self {
            Arith::Plain => x,
            Arith::Modular(p) => {
                let r = x.mod_floor(&p.0);
                if (&r << 1) > p.0 {
                    r - &p.0
                } else {
                    r
                }
            }
        }
    }

    pub fn lift_vec(&self, v: DiagVec) -> DiagVec {
        match self {
            Arith::Plain => v,
            _ => v.into_entries().into_iter().map(|x| self.lift(x)).collect(),
        }
    }

    /// Rejects a modulus that cannot represent the result for this data.
    /// Any value of `phi` over the data lies within `+-sum_k prod_i |d_i[k]|`,
    /// so `p` must exceed twice that bound for the symmetric lift to be exact.
    pub fn check_capacity(&self, data: &[DiagVec]) -> Result<()> {
        let Arith::Modular(p) = self else {
            return Ok(());
        };
        let m = data.first().map(|d| d.len()).unwrap_or(0);
        let mut bound = BigInt::zero();
        for k in 0..m {
            let mut term = BigInt::one();
            for d in data {
                term *= d[k].abs();
            }
            bound += term;
        }
        if (bound << 1) >= p.0 {
            return Err(Error::InvalidModulus(format!(
                "modulus {} is too small for the magnitude of this data",
                p.0
            )));
        }
        Ok(())
    }
}

/// `true` when `x` is a non-negative integer (used for range checks).
pub(crate) fn is_non_negative(x: &BigInt) -> bool {
    x.sign() != Sign::Minus
}
