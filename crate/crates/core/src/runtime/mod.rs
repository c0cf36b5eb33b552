//! In-process multi-party simulation.
//!
//! Each protocol instance is executed party by party: a party only computes
//! from its own inputs and from messages popped out of its mailbox. Every
//! send is logged to the instance's transcript; sibling subprotocols run
//! independently (optionally on a thread pool) and their logs are merged in
//! subprotocol order, so the transcript does not depend on scheduling.

mod commodity;
mod sim;
mod transcript;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use commodity::{assign_commodity, CommodityRequest, CommodityStrategy};
pub(crate) use sim::execute;
pub use sim::run_simulation;
pub use transcript::{message_counts, Message, MessageKind, MessageTally, Payload, Transcript};

/// A participant. Data owners are numbered `P1..Pn`; dedicated commodity
/// servers `S1, S2, ...`, with `S1` serving the top-level instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Party(u32),
    Server(u32),
}

impl PartyId {
    /// The top-level commodity server.
    pub const MERLIN: PartyId = PartyId::Server(1);

    pub fn is_server(&self) -> bool {
        matches!(self, PartyId::Server(_))
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyId::Party(i) => write!(f, "P{i}"),
            PartyId::Server(i) => write!(f, "S{i}"),
        }
    }
}

impl FromStr for PartyId {
    type Err = Error;

    /// Accepts `P3`, `S1`, a bare number (a data owner), or `merlin`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("merlin") {
            return Ok(PartyId::MERLIN);
        }
        let bad = || Error::Parse(format!("not a party id: {s:?}"));
        let (ctor, digits): (fn(u32) -> PartyId, &str) = match s.chars().next() {
            Some('P') | Some('p') => (PartyId::Party, &s[1..]),
            Some('S') | Some('s') => (PartyId::Server, &s[1..]),
            Some(c) if c.is_ascii_digit() => (PartyId::Party, s),
            _ => return Err(bad()),
        };
        let i: u32 = digits.parse().map_err(|_| bad())?;
        if i == 0 {
            return Err(bad());
        }
        Ok(ctor(i))
    }
}

impl Serialize for PartyId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Position of an instance in the recursion tree: `root`, `root/3`,
/// `root/3/1`, ... Child indices are 1-based in leftover enumeration order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProtocolId(Vec<u32>);

impl ProtocolId {
    pub fn root() -> Self {
        ProtocolId(Vec::new())
    }

    pub fn child(&self, index: u32) -> Self {
        let mut path = self.0.clone();
        path.push(index);
        ProtocolId(path)
    }

    pub fn parent(&self) -> Option<ProtocolId> {
        let (_, init) = self.0.split_last()?;
        Some(ProtocolId(init.to_vec()))
    }

    pub fn path(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Strict ancestor test.
    pub fn is_ancestor_of(&self, other: &ProtocolId) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self) -> impl Iterator<Item = ProtocolId> + '_ {
        (0..self.0.len()).rev().map(|k| ProtocolId(self.0[..k].to_vec()))
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for ProtocolId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split('/');
        if parts.next() != Some("root") {
            return Err(Error::Parse(format!("protocol id must start with root: {s:?}")));
        }
        parts
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad protocol id segment {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(ProtocolId)
    }
}

impl Serialize for ProtocolId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProtocolId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
