//! Information-flow checks over transcripts, and the collusion attack.
//!
//! The audit only looks at message metadata (who sent what kind of message to
//! whom, in which instance), so it works on transcripts exported without
//! payloads. Four properties are checked:
//!
//! * role exclusivity: nobody is both commodity server and data owner of the
//!   same instance;
//! * reuse safety: no commodity server serves an instance nested inside one
//!   it already serves;
//! * commodity blindness: a commodity server never receives masked data,
//!   chain values or sub-results of an instance it serves;
//! * shortcut confidentiality: the result of a single-data shortcut never
//!   goes back to the server that sent the random product.
//!
//! The collusion attack needs payloads: a coalition holding both the
//! `{R_i, r_i}` sent to a target and the target's `D_i + R_i` recovers `D_i`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::algebra::unmask;
use crate::arith::{Arith, Modulus};
use crate::error::{Error, Result};
use crate::runtime::{MessageKind, PartyId, ProtocolId, Transcript};
use crate::DiagVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    RoleExclusivity,
    ReuseSafety,
    ShortcutConfidentiality,
    CommodityBlindness,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::RoleExclusivity => "ROLE_EXCLUSIVITY",
            ViolationKind::ReuseSafety => "REUSE_SAFETY",
            ViolationKind::ShortcutConfidentiality => "SHORTCUT_CONFIDENTIALITY",
            ViolationKind::CommodityBlindness => "COMMODITY_BLINDNESS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub protocol: ProtocolId,
    /// Offending message, by position in the transcript.
    pub message_index: usize,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} (message {}): {}", self.kind, self.protocol, self.message_index, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub messages_checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// Distinct violation kinds found.
    pub fn kinds(&self) -> BTreeSet<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Roles seen in one instance.
#[derive(Default)]
struct Roles {
    /// Senders of share pairs: the servers running the instance.
    servers: BTreeMap<PartyId, usize>,
    commodities: BTreeMap<PartyId, usize>,
    owners: BTreeMap<PartyId, usize>,
}

pub fn audit_transcript(t: &Transcript) -> AuditReport {
    let mut roles: BTreeMap<&ProtocolId, Roles> = BTreeMap::new();
    // child id -> sender of its shortcut product
    let mut shortcut_senders: BTreeMap<&ProtocolId, PartyId> = BTreeMap::new();
    for (i, m) in t.iter() {
        let r = roles.entry(&m.protocol).or_default();
        match m.kind {
            MessageKind::SharePair | MessageKind::ShortcutProduct => {
                r.commodities.entry(m.sender).or_insert(i);
                r.owners.entry(m.receiver).or_insert(i);
                if m.kind == MessageKind::SharePair {
                    r.servers.entry(m.sender).or_insert(i);
                } else {
                    shortcut_senders.insert(m.child.as_ref().unwrap_or(&m.protocol), m.sender);
                }
            }
            MessageKind::MaskedMatrix => {
                r.owners.entry(m.sender).or_insert(i);
            }
            _ => {}
        }
    }

    let mut violations = Vec::new();
    for (id, r) in &roles {
        for (party, &first) in &r.commodities {
            if let Some(&owner_at) = r.owners.get(party) {
                violations.push(Violation {
                    kind: ViolationKind::RoleExclusivity,
                    protocol: (*id).clone(),
                    message_index: first.max(owner_at),
                    detail: format!("{party} is both commodity server and data owner"),
                });
            }
        }
        for (party, &first) in &r.servers {
            if let Some(anc) = id.ancestors().find(|a| roles.get(a).is_some_and(|ar| ar.servers.contains_key(party))) {
                violations.push(Violation {
                    kind: ViolationKind::ReuseSafety,
                    protocol: (*id).clone(),
                    message_index: first,
                    detail: format!("{party} already serves enclosing instance {anc}"),
                });
            }
        }
    }

    for (i, m) in t.iter() {
        if let (MessageKind::Subresult, Some(sender)) =
            (m.kind, m.child.as_ref().and_then(|c| shortcut_senders.get(c)))
        {
            if m.receiver == *sender {
                violations.push(Violation {
                    kind: ViolationKind::ShortcutConfidentiality,
                    protocol: m.protocol.clone(),
                    message_index: i,
                    detail: format!("shortcut result returned to {}, which sent the random product", m.receiver),
                });
            }
            continue;
        }
        let watched = matches!(m.kind, MessageKind::MaskedMatrix | MessageKind::UValue | MessageKind::Subresult);
        let serves = roles
            .get(&m.protocol)
            .is_some_and(|r| r.servers.contains_key(&m.receiver));
        if watched && serves {
            violations.push(Violation {
                kind: ViolationKind::CommodityBlindness,
                protocol: m.protocol.clone(),
                message_index: i,
                detail: format!("commodity server {} receives {} from {}", m.receiver, m.kind, m.sender),
            });
        }
    }

    violations.sort_by_key(|v| v.message_index);
    AuditReport {
        messages_checked: t.len(),
        violations,
    }
}

/// Tampering applied to an honest transcript, each breaking one property.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fault {
    /// The first chain value goes to the top-level commodity server.
    ChainValueToServer,
    /// The first shortcut result goes back to the server that sent the
    /// random product. Needs a shortcut-mode transcript with a delivered
    /// shortcut result.
    ShortcutResultToServer,
    /// The top-level commodity server appears as sender of a masked matrix.
    ServerAsDataOwner,
    /// A nested instance (depth >= 2) the top-level server does not take
    /// part in is served by the top-level server instead.
    ServerReusedInDescendant,
}

impl Fault {
    pub const ALL: [Fault; 4] = [
        Fault::ChainValueToServer,
        Fault::ShortcutResultToServer,
        Fault::ServerAsDataOwner,
        Fault::ServerReusedInDescendant,
    ];

    /// The single violation kind the fault should trigger.
    pub fn expected_violation(&self) -> ViolationKind {
        match self {
            Fault::ChainValueToServer => ViolationKind::CommodityBlindness,
            Fault::ShortcutResultToServer => ViolationKind::ShortcutConfidentiality,
            Fault::ServerAsDataOwner => ViolationKind::RoleExclusivity,
            Fault::ServerReusedInDescendant => ViolationKind::ReuseSafety,
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fault::ChainValueToServer => "chain-value-to-server",
            Fault::ShortcutResultToServer => "shortcut-result-to-server",
            Fault::ServerAsDataOwner => "server-as-data-owner",
            Fault::ServerReusedInDescendant => "server-reused-in-descendant",
        })
    }
}

impl std::str::FromStr for Fault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Fault::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fault {s:?}")))
    }
}

/// Applies `fault` in place and returns the indices of the altered messages.
pub fn inject_fault(t: &mut Transcript, fault: Fault) -> Result<Vec<usize>> {
    let root = ProtocolId::root();
    let server = t
        .messages()
        .iter()
        .find(|m| m.kind == MessageKind::SharePair && m.protocol == root)
        .map(|m| m.sender)
        .ok_or_else(|| Error::argument("transcript has no top-level share pairs"))?;
    let missing = || Error::argument(format!("transcript has no message suitable for fault {fault}"));
    let msgs = t.messages_mut();
    let changed = match fault {
        Fault::ChainValueToServer => {
            let i = msgs.iter().position(|m| m.kind == MessageKind::UValue).ok_or_else(missing)?;
            msgs[i].receiver = server;
            vec![i]
        }
        Fault::ShortcutResultToServer => {
            let shortcut_children: BTreeSet<ProtocolId> = msgs
                .iter()
                .filter(|m| m.kind == MessageKind::ShortcutProduct && m.sender == server)
                .filter_map(|m| m.child.clone())
                .collect();
            let i = msgs
                .iter()
                .position(|m| m.kind == MessageKind::Subresult && m.child.as_ref().is_some_and(|c| shortcut_children.contains(c)))
                .ok_or_else(missing)?;
            msgs[i].receiver = server;
            vec![i]
        }
        Fault::ServerAsDataOwner => {
            let i = msgs
                .iter()
                .position(|m| m.kind == MessageKind::MaskedMatrix && m.protocol == root)
                .ok_or_else(missing)?;
            msgs[i].sender = server;
            vec![i]
        }
        Fault::ServerReusedInDescendant => {
            let mut participants: BTreeMap<ProtocolId, BTreeSet<PartyId>> = BTreeMap::new();
            for m in msgs.iter().filter(|m| m.kind == MessageKind::SharePair) {
                participants.entry(m.protocol.clone()).or_default().insert(m.receiver);
            }
            let target = participants
                .iter()
                .find(|(id, ps)| id.depth() >= 2 && !ps.contains(&server))
                .map(|(id, _)| id.clone())
                .ok_or_else(missing)?;
            let idx: Vec<usize> = (0..msgs.len())
                .filter(|&i| msgs[i].kind == MessageKind::SharePair && msgs[i].protocol == target)
                .collect();
            for &i in &idx {
                msgs[i].sender = server;
            }
            idx
        }
    };
    Ok(changed)
}

/// A set of parties pooling everything they sent and received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollusionCoalition {
    parties: BTreeSet<PartyId>,
}

impl CollusionCoalition {
    pub fn new(parties: impl IntoIterator<Item = PartyId>) -> Result<Self> {
        let parties: BTreeSet<PartyId> = parties.into_iter().collect();
        if parties.is_empty() {
            return Err(Error::argument("empty coalition"));
        }
        Ok(CollusionCoalition { parties })
    }

    pub fn parties(&self) -> &BTreeSet<PartyId> {
        &self.parties
    }

    pub fn contains(&self, p: PartyId) -> bool {
        self.parties.contains(&p)
    }

    /// Indices of the messages the coalition has seen.
    pub fn view(&self, t: &Transcript) -> Vec<usize> {
        t.iter()
            .filter(|(_, m)| self.contains(m.sender) || self.contains(m.receiver))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A successful attack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recovery {
    pub target: PartyId,
    pub protocol: ProtocolId,
    /// The target's input to `protocol`.
    pub data: DiagVec,
    pub share_message: usize,
    pub masked_message: usize,
}

/// Tries to recover `target`'s input from what `coalition` saw. Returns
/// `Ok(None)` when the coalition's view is not enough.
pub fn collusion_recover(t: &Transcript, coalition: &CollusionCoalition, target: PartyId) -> Result<Option<Recovery>> {
    if coalition.contains(target) {
        return Err(Error::argument(format!("target {target} is part of the coalition")));
    }
    let arith = match &t.modulus {
        Some(p) => Arith::Modular(Modulus::new(p.clone())?),
        None => Arith::Plain,
    };
    let mut shares: BTreeMap<&ProtocolId, usize> = BTreeMap::new();
    let mut masked: BTreeMap<&ProtocolId, usize> = BTreeMap::new();
    for (i, m) in t.iter() {
        if m.kind == MessageKind::SharePair && m.receiver == target && coalition.contains(m.sender) {
            shares.entry(&m.protocol).or_insert(i);
        }
        if m.kind == MessageKind::MaskedMatrix && m.sender == target && coalition.contains(m.receiver) {
            masked.entry(&m.protocol).or_insert(i);
        }
    }
    let Some((id, s, k)) = shares
        .iter()
        .find_map(|(id, &s)| masked.get(id).map(|&k| ((*id).clone(), s, k)))
    else {
        return Ok(None);
    };
    let msgs = t.messages();
    let elided = || Error::argument("transcript has no payloads; export it with payloads to attack");
    let pair = msgs[s].payload.as_share_pair().ok_or_else(elided)?;
    let hat = msgs[k].payload.as_matrix().ok_or_else(elided)?;
    let data = arith.lift_vec(arith.reduce_vec(unmask(hat, &pair.r_mat)?));
    Ok(Some(Recovery {
        target,
        protocol: id,
        data,
        share_message: s,
        masked_message: k,
    }))
}
