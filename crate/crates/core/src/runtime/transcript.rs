use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{PartyId, ProtocolId};
use crate::error::{Error, Result};
use crate::shares::SharePair;
use crate::{DiagVec, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    /// Commodity server to data owner: `{R_i, r_i}`.
    SharePair,
    /// Data owner to data owner: `D_i + R_i`.
    MaskedMatrix,
    /// A chain value `u_i`, or the final combined value sent to party 1.
    UValue,
    /// A finished subprotocol's value, from its finisher to the parent's
    /// combining party.
    Subresult,
    /// Commodity server to the single data owner of a leftover: the
    /// entrywise product of the random matrices.
    ShortcutProduct,
}

impl MessageKind {
    /// Whether the kind counts toward the per-instance `n + n^2` accounting.
    pub fn is_protocol_layer(&self) -> bool {
        !matches!(self, MessageKind::Subresult)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MessageKind::SharePair => "SHARE_PAIR",
            MessageKind::MaskedMatrix => "MASKED_MATRIX",
            MessageKind::UValue => "U_VALUE",
            MessageKind::Subresult => "SUBRESULT",
            MessageKind::ShortcutProduct => "SHORTCUT_PRODUCT",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    SharePair(SharePair),
    Matrix(DiagVec),
    Value(Scalar),
    /// Content withheld; only its size in scalars is known.
    Elided { size: usize },
}

impl Payload {
    /// Size in scalars.
    pub fn size(&self) -> usize {
        match self {
            Payload::SharePair(p) => p.r_mat.len() + 1,
            Payload::Matrix(m) => m.len(),
            Payload::Value(_) => 1,
            Payload::Elided { size } => *size,
        }
    }

    pub fn as_matrix(&self) -> Option<&DiagVec> {
        match self {
            Payload::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_value(&self) -> Option<&Scalar> {
        match self {
            Payload::Value(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_share_pair(&self) -> Option<&SharePair> {
        match self {
            Payload::SharePair(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub protocol: ProtocolId,
    pub sender: PartyId,
    pub receiver: PartyId,
    pub kind: MessageKind,
    /// For `SUBRESULT` and `SHORTCUT_PRODUCT`: the subprotocol concerned.
    pub child: Option<ProtocolId>,
    pub payload: Payload,
}

/// Append-only log of one run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    /// Set when the run reduced all values modulo a prime.
    pub modulus: Option<BigInt>,
    messages: Vec<Message>,
}

impl Transcript {
    pub fn new(modulus: Option<BigInt>, messages: Vec<Message>) -> Self {
        Transcript { modulus, messages }
    }

    pub fn push(&mut self, m: Message) {
        self.messages.push(m);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Message)> {
        self.messages.iter().enumerate()
    }

    /// Mutable access for fault-injection experiments.
    pub fn messages_mut(&mut self) -> &mut [Message] {
        &mut self.messages
    }

    /// JSON Lines, one message per line. Payloads are reduced to their size
    /// unless `full_payloads` is set.
    pub fn to_jsonl(&self, full_payloads: bool) -> String {
        let mut out = String::new();
        for (index, m) in self.iter() {
            let mut rec = json!({
                "index": index,
                "protocol": m.protocol.to_string(),
                "sender": m.sender.to_string(),
                "receiver": m.receiver.to_string(),
                "kind": m.kind.name(),
                "size": m.payload.size(),
            });
            if let Some(c) = &m.child {
                rec["child"] = json!(c.to_string());
            }
            if full_payloads {
                if let Some(p) = payload_json(&m.payload) {
                    rec["payload"] = p;
                }
            }
            if index == 0 {
                if let Some(p) = &self.modulus {
                    rec["modulus"] = json!(p.to_string());
                }
            }
            out.push_str(&rec.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Record {
            protocol: ProtocolId,
            sender: PartyId,
            receiver: PartyId,
            kind: MessageKind,
            size: usize,
            child: Option<ProtocolId>,
            payload: Option<Value>,
            modulus: Option<String>,
        }
        let mut t = Transcript::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("transcript line {}: {e}", lineno + 1)))?;
            if let Some(p) = rec.modulus {
                t.modulus = Some(p.parse().map_err(|_| Error::Parse(format!("bad modulus {p:?}")))?);
            }
            let payload = match rec.payload {
                None => Payload::Elided { size: rec.size },
                Some(v) => parse_payload(rec.kind, v)?,
            };
            t.push(Message {
                protocol: rec.protocol,
                sender: rec.sender,
                receiver: rec.receiver,
                kind: rec.kind,
                child: rec.child,
                payload,
            });
        }
        Ok(t)
    }
}

fn payload_json(p: &Payload) -> Option<Value> {
    Some(match p {
        Payload::SharePair(pair) => serde_json::to_value(pair).ok()?,
        Payload::Matrix(m) => serde_json::to_value(m).ok()?,
        Payload::Value(v) => json!(v.to_string()),
        Payload::Elided { .. } => return None,
    })
}

fn parse_payload(kind: MessageKind, v: Value) -> Result<Payload> {
    Ok(match kind {
        MessageKind::SharePair => Payload::SharePair(serde_json::from_value(v)?),
        MessageKind::MaskedMatrix | MessageKind::ShortcutProduct => Payload::Matrix(serde_json::from_value(v)?),
        MessageKind::UValue | MessageKind::Subresult => {
            let s: String = serde_json::from_value(v)?;
            Payload::Value(s.parse().map_err(|_| Error::Parse(format!("bad scalar {s:?}")))?)
        }
    })
}

/// Message totals of a transcript.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MessageTally {
    /// Protocol-layer messages per instance.
    pub per_protocol: BTreeMap<ProtocolId, u64>,
    /// Protocol-layer messages overall.
    pub total: u64,
    /// `SUBRESULT` hand-offs between instances.
    pub deliveries: u64,
}

pub fn message_counts(t: &Transcript) -> MessageTally {
    let mut tally = MessageTally::default();
    for m in t.messages() {
        if m.kind.is_protocol_layer() {
            *tally.per_protocol.entry(m.protocol.clone()).or_insert(0) += 1;
            tally.total += 1;
        } else {
            tally.deliveries += 1;
        }
    }
    tally
}
