use serde::{Deserialize, Serialize};

use super::{PartyId, ProtocolId};
use crate::error::{Error, Result};

/// Who serves as commodity server for subprotocols.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommodityStrategy {
    /// `n - 1` dedicated servers, one per instance size: a `k`-party instance
    /// of an `n`-party run is served by `S(n - k + 1)`.
    #[default]
    NaivePool,
    /// Idle data owners serve, never twice along one recursion chain. The
    /// top-level instance is still served by `S1`.
    PartyReuse,
}

impl std::str::FromStr for CommodityStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive-pool" | "naive_pool" | "pool" => Ok(CommodityStrategy::NaivePool),
            "party-reuse" | "party_reuse" | "reuse" => Ok(CommodityStrategy::PartyReuse),
            _ => Err(Error::Parse(format!("unknown commodity strategy {s:?}"))),
        }
    }
}

impl std::fmt::Display for CommodityStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CommodityStrategy::NaivePool => "naive-pool",
            CommodityStrategy::PartyReuse => "party-reuse",
        })
    }
}

/// A subprotocol in need of a commodity server.
#[derive(Clone, Copy, Debug)]
pub struct CommodityRequest<'a> {
    pub protocol: &'a ProtocolId,
    /// Participants of the subprotocol, all of them data owners there.
    pub data_parties: &'a [PartyId],
    /// Commodity servers of every enclosing instance, outermost first.
    pub chain: &'a [PartyId],
    /// Data owners of the top-level instance.
    pub root_parties: usize,
}

pub fn assign_commodity(strategy: CommodityStrategy, req: &CommodityRequest<'_>) -> Result<PartyId> {
    let eligible = |p: &PartyId| !req.data_parties.contains(p) && !req.chain.contains(p);
    let exhausted = || Error::CommodityExhausted {
        protocol: req.protocol.to_string(),
    };
    match strategy {
        CommodityStrategy::NaivePool => {
            let size = req.data_parties.len();
            if size < 2 || size > req.root_parties {
                return Err(exhausted());
            }
            let server = PartyId::Server((req.root_parties - size + 1) as u32);
            if eligible(&server) {
                Ok(server)
            } else {
                Err(exhausted())
            }
        }
        CommodityStrategy::PartyReuse => (1..=req.root_parties as u32)
            .map(PartyId::Party)
            .find(eligible)
            .ok_or_else(exhausted),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PartyId::{Party, Server};

    #[test]
    fn pool_server_by_size() {
        let id = ProtocolId::root().child(1);
        let req = CommodityRequest {
            protocol: &id,
            data_parties: &[Party(1), PartyId::MERLIN],
            chain: &[PartyId::MERLIN],
            root_parties: 3,
        };
        assert_eq!(assign_commodity(CommodityStrategy::NaivePool, &req).unwrap(), Server(2));
    }

    #[test]
    fn reuse_picks_lowest_idle_party() {
        let id = ProtocolId::root().child(5);
        let req = CommodityRequest {
            protocol: &id,
            data_parties: &[Party(1), Party(2), PartyId::MERLIN],
            chain: &[PartyId::MERLIN],
            root_parties: 4,
        };
        assert_eq!(assign_commodity(CommodityStrategy::PartyReuse, &req).unwrap(), Party(3));
    }

    #[test]
    fn exhaustion_names_the_subprotocol() {
        let id = ProtocolId::root().child(2).child(1);
        let req = CommodityRequest {
            protocol: &id,
            data_parties: &[Party(1), Server(3)],
            chain: &[PartyId::MERLIN, Party(2), Party(3)],
            root_parties: 3,
        };
        let err = assign_commodity(CommodityStrategy::PartyReuse, &req).unwrap_err();
        assert!(err.to_string().contains("root/2/1"), "{err}");
    }

    #[test]
    fn strategy_names() {
        assert_eq!("party-reuse".parse::<CommodityStrategy>().unwrap(), CommodityStrategy::PartyReuse);
        assert_eq!(CommodityStrategy::NaivePool.to_string(), "naive-pool");
        assert!("x".parse::<CommodityStrategy>().is_err());
    }
}
