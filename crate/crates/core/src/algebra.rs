//! Diagonal-matrix arithmetic.
//!
//! Every matrix the protocol touches is diagonal, so a matrix is stored as its
//! diagonal only. Products of diagonal matrices become entrywise products and
//! the trace of a product, `phi`, becomes the sum over positions of the
//! entrywise product. Nothing here is quadratic in the vector length.
//!
//! The arithmetic is generic over any commutative ring in the `num-traits`
//! sense. The protocol itself runs on [`crate::Scalar`] (arbitrary-precision
//! integers); the fixed-width and floating instantiations exist for tests and
//! quick experiments.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Scalar types the diagonal algebra can run over.
pub trait Ring:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
{
}

impl<T> Ring for T where
    T: Clone
        + PartialEq
        + fmt::Debug
        + Zero
        + One
        + Neg<Output = T>
        + for<'a> Add<&'a T, Output = T>
        + for<'a> Sub<&'a T, Output = T>
        + for<'a> Mul<&'a T, Output = T>
{
}

/// The diagonal of an `m x m` diagonal matrix, `m >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Diagonal<T> {
    entries: Vec<T>,
}

impl<T> Diagonal<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::argument("a diagonal needs at least one entry"));
        }
        Ok(Diagonal { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.entries.iter()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Diagonal<U> {
        Diagonal {
            entries: self.entries.iter().map(f).collect(),
        }
    }
}

impl<T: Ring> Diagonal<T> {
    pub fn zeros(m: usize) -> Result<Self> {
        Self::new(vec![T::zero(); m])
    }

    /// The identity matrix of size `m`.
    pub fn ones(m: usize) -> Result<Self> {
        Self::new(vec![T::one(); m])
    }

    /// Entry sum, i.e. `phi` of this matrix alone.
    pub fn sum(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, x| acc + x)
    }
}

impl<T> std::ops::Index<usize> for Diagonal<T> {
    type Output = T;
    fn index(&self, k: usize) -> &T {
        &self.entries[k]
    }
}

impl<T> FromIterator<T> for Diagonal<T> {
    /// Panics on an empty iterator.
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Diagonal::new(iter.into_iter().collect()).expect("empty diagonal")
    }
}

fn common_len<T>(xs: &[&Diagonal<T>]) -> Result<usize> {
    let first = xs
        .first()
        .ok_or_else(|| Error::argument("empty matrix sequence"))?;
    let m = first.len();
    for x in &xs[1..] {
        if x.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: x.len(),
            });
        }
    }
    Ok(m)
}

fn check_pair<T>(a: &Diagonal<T>, b: &Diagonal<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Trace of the product of the given diagonal matrices:
/// `sum_k prod_j ms[j][k]`.
pub fn phi<T: Ring>(ms: &[&Diagonal<T>]) -> Result<T> {
    let m = common_len(ms)?;
    let mut total = T::zero();
    for k in 0..m {
        let mut term = ms[0].entries[k].clone();
        for x in &ms[1..] {
            term = term * &x.entries[k];
        }
        total = total + &term;
    }
    Ok(total)
}

/// Entrywise product of the diagonals (the diagonal of the matrix product).
pub fn hadamard<T: Ring>(xs: &[&Diagonal<T>]) -> Result<Diagonal<T>> {
    common_len(xs)?;
    let mut acc = xs[0].clone();
    for x in &xs[1..] {
        for (a, b) in acc.entries.iter_mut().zip(&x.entries) {
            *a = std::mem::replace(a, T::zero()) * b;
        }
    }
    Ok(acc)
}

/// `d + r`, entrywise.
pub fn mask<T: Ring>(d: &Diagonal<T>, r: &Diagonal<T>) -> Result<Diagonal<T>> {
    check_pair(d, r)?;
    Ok(Diagonal {
        entries: d
            .entries
            .iter()
            .zip(&r.entries)
            .map(|(x, y)| x.clone() + y)
            .collect(),
    })
}

/// `masked - r`, entrywise; inverse of [`mask`].
pub fn unmask<T: Ring>(masked: &Diagonal<T>, r: &Diagonal<T>) -> Result<Diagonal<T>> {
    check_pair(masked, r)?;
    Ok(Diagonal {
        entries: masked
            .entries
            .iter()
            .zip(&r.entries)
            .map(|(x, y)| x.clone() - y)
            .collect(),
    })
}

/// Plain dot product; `phi` of two diagonals.
pub fn dot<T: Ring>(a: &Diagonal<T>, b: &Diagonal<T>) -> Result<T> {
    phi(&[a, b])
}

// Serialization of big-integer diagonals: decimal strings so no precision is
// lost in JSON, plain integer cells in CSV.

impl Serialize for Diagonal<BigInt> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for x in &self.entries {
            seq.serialize_element(&x.to_string())?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Diagonal<BigInt> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct DiagVisitor;

        impl<'de> Visitor<'de> for DiagVisitor {
            type Value = Diagonal<BigInt>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-empty array of decimal integer strings")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some(cell) = seq.next_element::<Cell>()? {
                    entries.push(cell.0);
                }
                Diagonal::new(entries).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_seq(DiagVisitor)
    }
}

/// One JSON cell: a decimal string, or a plain integer for convenience.
struct Cell(BigInt);

impl<'de> Deserialize<'de> for Cell {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Str(s) => BigInt::from_str(s.trim())
                .map(Cell)
                .map_err(|_| de::Error::custom(format!("not a decimal integer: {s:?}"))),
            Raw::Int(i) => Ok(Cell(BigInt::from(i))),
        }
    }
}

impl Diagonal<BigInt> {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagonal serializes")
    }

    /// Parses every cell of a CSV document, in row-major order. Blank cells
    /// and blank lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            for cell in line.split(',') {
                let cell = cell.trim();
                if cell.is_empty() {
                    continue;
                }
                let value = BigInt::from_str(cell).map_err(|_| {
                    Error::Parse(format!("line {}: not a decimal integer: {cell:?}", lineno + 1))
                })?;
                entries.push(value);
            }
        }
        Diagonal::new(entries)
    }

    /// One row, comma separated.
    pub fn to_csv(&self) -> String {
        let cells: Vec<String> = self.entries.iter().map(|x| x.to_string()).collect();
        format!("{}\n", cells.join(","))
    }
}

impl<T: fmt::Display> fmt::Display for Diagonal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, x) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}
