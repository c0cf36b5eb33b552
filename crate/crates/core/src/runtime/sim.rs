use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use rayon::prelude::*;

use super::commodity::{assign_commodity, CommodityRequest};
use super::transcript::{Message, MessageKind, Payload, Transcript};
use super::{PartyId, ProtocolId};
use crate::algebra::{hadamard, mask};
use crate::arith::Arith;
use crate::engine::{
    chain_start, chain_step, enumerate_subprotocols, solve_single_d_shortcut, ExecutionMode, ProtocolOptions,
    ProtocolResult, ProtocolStats, SubprotocolSpec,
};
use crate::error::{Error, Result};
use crate::oracle::plaintext_scalar_product;
use crate::shares::{derive_seed, generate_share_set_in, rng_for, IntRange, SharePair, ShareSet};
use crate::{DiagVec, Scalar};

/// Runs the protocol on the parties' vectors and records every message.
pub fn run_simulation(data: &[DiagVec], opts: &ProtocolOptions) -> Result<(ProtocolResult, Transcript)> {
    execute(data, opts, true)
}

pub(crate) fn execute(data: &[DiagVec], opts: &ProtocolOptions, record: bool) -> Result<(ProtocolResult, Transcript)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::argument(format!("need at least 2 parties, got {n}")));
    }
    let m = data[0].len();
    if let Some(d) = data.iter().find(|d| d.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: d.len(),
        });
    }
    opts.arith.check_capacity(data)?;
    if let Some(replay) = &opts.replay {
        replay.shares.validate(n, m, &opts.arith)?;
    }

    let sim = Simulator {
        opts,
        root_parties: n,
        record,
        parallel: opts.threads > 1,
    };
    let root = Instance {
        id: ProtocolId::root(),
        participants: data
            .iter()
            .enumerate()
            .map(|(i, d)| Participant {
                id: PartyId::Party(i as u32 + 1),
                input: opts.arith.reduce_vec(d.clone()),
            })
            .collect(),
        commodity: PartyId::MERLIN,
        chain: vec![PartyId::MERLIN],
    };

    let outcome = if sim.parallel {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::argument(format!("thread pool: {e}")))?;
        pool.install(|| sim.run(root))?
    } else {
        sim.run(root)?
    };

    let result = ProtocolResult {
        value: opts.arith.lift(outcome.value),
        stats: outcome.stats,
    };
    let modulus = opts.arith.modulus().map(|p| p.value().clone());
    Ok((result, Transcript::new(modulus, outcome.log)))
}

struct Simulator<'a> {
    opts: &'a ProtocolOptions,
    root_parties: usize,
    record: bool,
    parallel: bool,
}

#[derive(Clone)]
struct Participant {
    id: PartyId,
    /// Raw data, or for a commodity server taking part in a subprotocol, the
    /// entrywise product of the random matrices it handed out.
    input: DiagVec,
}

struct Instance {
    id: ProtocolId,
    participants: Vec<Participant>,
    commodity: PartyId,
    /// Commodity servers from the root down to and including this instance.
    chain: Vec<PartyId>,
}

struct Outcome {
    /// Known to the instance's first participant only.
    value: Scalar,
    stats: ProtocolStats,
    log: Vec<Message>,
}

/// Per-instance message bus: one FIFO mailbox per party.
struct Bus {
    record: bool,
    log: Vec<Message>,
    mailboxes: HashMap<PartyId, VecDeque<Message>>,
    stats: ProtocolStats,
}

impl Bus {
    fn new(record: bool) -> Self {
        Bus {
            record,
            log: Vec::new(),
            mailboxes: HashMap::new(),
            stats: ProtocolStats::default(),
        }
    }

    fn send(&mut self, msg: Message) {
        if msg.kind.is_protocol_layer() {
            self.stats.messages += 1;
        } else {
            self.stats.deliveries += 1;
        }
        if self.record {
            self.log.push(msg.clone());
        }
        self.mailboxes.entry(msg.receiver).or_default().push_back(msg);
    }

    /// Takes the oldest message of `kind` on the channel `from -> me`.
    fn recv(&mut self, me: PartyId, from: PartyId, kind: MessageKind) -> Message {
        let mailbox = self.mailboxes.get_mut(&me).expect("mailbox exists");
        let pos = mailbox
            .iter()
            .position(|m| m.sender == from && m.kind == kind)
            .unwrap_or_else(|| panic!("{me} expected {kind} from {from}"));
        mailbox.remove(pos).expect("message present")
    }
}

fn msg(protocol: &ProtocolId, sender: PartyId, receiver: PartyId, kind: MessageKind, payload: Payload) -> Message {
    Message {
        protocol: protocol.clone(),
        sender,
        receiver,
        kind,
        child: None,
        payload,
    }
}

/// How one leftover was resolved.
enum Resolution {
    Shortcut,
    Child(Result<Outcome>),
}

impl Simulator<'_> {
    fn arith(&self) -> &Arith {
        &self.opts.arith
    }

    fn run(&self, inst: Instance) -> Result<Outcome> {
        let n = inst.participants.len();
        let m = inst.participants[0].input.len();
        let arith = self.arith();
        let id = &inst.id;
        let ids: Vec<PartyId> = inst.participants.iter().map(|p| p.id).collect();
        let mut bus = Bus::new(self.record);

        // Commodity server: randomness for every participant.
        let shares = self.commodity_shares(&inst, n, m)?;
        for (p, pair) in ids.iter().zip(&shares.pairs) {
            bus.send(msg(id, inst.commodity, *p, MessageKind::SharePair, Payload::SharePair(pair.clone())));
        }

        // Data owners: receive {R_i, r_i}, publish D_i + R_i.
        let mut own: Vec<SharePair> = Vec::with_capacity(n);
        for (i, p) in inst.participants.iter().enumerate() {
            let received = bus.recv(p.id, inst.commodity, MessageKind::SharePair);
            let Payload::SharePair(pair) = received.payload else { unreachable!() };
            let masked = arith.reduce_vec(mask(&p.input, &pair.r_mat)?);
            for (j, q) in ids.iter().enumerate() {
                if j != i {
                    bus.send(msg(id, p.id, *q, MessageKind::MaskedMatrix, Payload::Matrix(masked.clone())));
                }
            }
            own.push(pair);
        }
        // received[i][j]: party i's copy of j's masked matrix.
        let mut received: Vec<Vec<Option<DiagVec>>> = vec![vec![None; n]; n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let got = bus.recv(ids[i], ids[j], MessageKind::MaskedMatrix);
                let Payload::Matrix(mat) = got.payload else { unreachable!() };
                received[i][j] = Some(mat);
            }
        }
        let others = |i: usize| -> Vec<&DiagVec> { received[i].iter().flatten().collect() };

        // Party 1 draws v2 and starts the chain.
        let v2 = self.v2(id);
        let mut u = chain_start(&others(0), &inst.participants[0].input, &own[0].r_scalar, &v2, n, arith)?;
        bus.send(msg(id, ids[0], ids[1], MessageKind::UValue, Payload::Value(u.clone())));
        for i in 1..n {
            let got = bus.recv(ids[i], ids[i - 1], MessageKind::UValue);
            let prev = got.payload.as_value().expect("chain value").clone();
            u = chain_step(&prev, &others(i), &own[i].r_mat, &own[i].r_scalar, n, arith)?;
            if i + 1 < n {
                bus.send(msg(id, ids[i], ids[i + 1], MessageKind::UValue, Payload::Value(u.clone())));
            }
        }

        // Party n adds back every leftover.
        let combiner = ids[n - 1];
        let mut combined = u;
        let mut child_stats = ProtocolStats::default();
        if n >= 3 {
            let specs = enumerate_subprotocols(n)?;
            let resolutions = self.resolve_all(&inst, &shares, &specs);
            for (k, (spec, resolution)) in specs.iter().zip(resolutions).enumerate() {
                let child_id = id.child(k as u32 + 1);
                let owner = ids[spec.data_indices[0]];
                let value = match resolution {
                    Resolution::Shortcut => {
                        let product = arith.reduce_vec(hadamard(&rand_mats(&shares, spec))?);
                        let mut sent = msg(
                            &child_id,
                            inst.commodity,
                            owner,
                            MessageKind::ShortcutProduct,
                            Payload::Matrix(product),
                        );
                        sent.child = Some(child_id.clone());
                        bus.send(sent);
                        bus.stats.shortcuts += 1;
                        let got = bus.recv(owner, inst.commodity, MessageKind::ShortcutProduct);
                        let product = got.payload.as_matrix().expect("product");
                        let owner_data = &inst.participants[spec.data_indices[0]].input;
                        arith.reduce(solve_single_d_shortcut(owner_data, product)?)
                    }
                    Resolution::Child(outcome) => {
                        let outcome = outcome?;
                        child_stats += outcome.stats;
                        bus.log.extend(outcome.log);
                        outcome.value
                    }
                };
                let value = if owner == combiner {
                    value
                } else {
                    let mut sent = msg(id, owner, combiner, MessageKind::Subresult, Payload::Value(value));
                    sent.child = Some(child_id.clone());
                    bus.send(sent);
                    let got = bus.recv(combiner, owner, MessageKind::Subresult);
                    got.payload.as_value().expect("sub-result").clone()
                };
                combined = arith.reduce(combined + BigInt::from(spec.multiplicity) * value);
            }
        }

        bus.send(msg(id, combiner, ids[0], MessageKind::UValue, Payload::Value(combined)));
        let got = bus.recv(ids[0], combiner, MessageKind::UValue);
        let value = arith.reduce(got.payload.as_value().expect("final value").clone() + &v2);

        if self.opts.verify {
            let inputs: Vec<DiagVec> = inst.participants.iter().map(|p| p.input.clone()).collect();
            let expected = arith.reduce(plaintext_scalar_product(&inputs)?);
            if expected != value {
                return Err(Error::VerificationFailed {
                    protocol: id.to_string(),
                    expected: expected.to_string(),
                    found: value.to_string(),
                });
            }
        }

        let mut stats = bus.stats;
        stats.protocols += 1;
        stats += child_stats;
        Ok(Outcome {
            value,
            stats,
            log: bus.log,
        })
    }

    fn commodity_shares(&self, inst: &Instance, n: usize, m: usize) -> Result<ShareSet> {
        if inst.id.is_root() {
            if let Some(replay) = &self.opts.replay {
                return Ok(replay.shares.clone());
            }
        }
        let cfg = &self.opts.randomness;
        let seed = derive_seed(cfg.seed, inst.id.path(), "commodity");
        generate_share_set_in(n, m, &cfg.reseeded(seed), self.arith())
    }

    fn v2(&self, id: &ProtocolId) -> Scalar {
        if id.is_root() {
            if let Some(replay) = &self.opts.replay {
                return replay.v2.clone();
            }
        }
        let cfg = &self.opts.randomness;
        let range = match self.arith().modulus() {
            Some(p) => IntRange::new(0, p.value().clone()).expect("modulus >= 3"),
            None => cfg.scalar_range.clone(),
        };
        range.sample(&mut rng_for(derive_seed(cfg.seed, id.path(), "v2")))
    }

    /// Resolves every leftover; genuine sub-runs may run concurrently.
    fn resolve_all(&self, inst: &Instance, shares: &ShareSet, specs: &[SubprotocolSpec]) -> Vec<Resolution> {
        let shortcut = |s: &SubprotocolSpec| self.opts.mode == ExecutionMode::Shortcut && s.is_single_data();
        let job = |(k, spec): (usize, &SubprotocolSpec)| {
            if shortcut(spec) {
                Resolution::Shortcut
            } else {
                Resolution::Child(self.child(inst, shares, spec, k as u32 + 1).and_then(|c| self.run(c)))
            }
        };
        if self.parallel {
            specs.par_iter().enumerate().map(job).collect()
        } else {
            specs.iter().enumerate().map(job).collect()
        }
    }

    /// Builds the sub-run for `spec`: its data owners in parent order, then the
    /// parent's commodity server holding the product of the `R_j`.
    fn child(&self, inst: &Instance, shares: &ShareSet, spec: &SubprotocolSpec, index: u32) -> Result<Instance> {
        let id = inst.id.child(index);
        let mut participants: Vec<Participant> = spec
            .data_indices
            .iter()
            .map(|&a| inst.participants[a].clone())
            .collect();
        participants.push(Participant {
            id: inst.commodity,
            input: self.arith().reduce_vec(hadamard(&rand_mats(shares, spec))?),
        });
        let data_parties: Vec<PartyId> = participants.iter().map(|p| p.id).collect();
        let commodity = assign_commodity(
            self.opts.strategy,
            &CommodityRequest {
                protocol: &id,
                data_parties: &data_parties,
                chain: &inst.chain,
                root_parties: self.root_parties,
            },
        )?;
        let mut chain = inst.chain.clone();
        chain.push(commodity);
        Ok(Instance {
            id,
            participants,
            commodity,
            chain,
        })
    }
}

fn rand_mats<'s>(shares: &'s ShareSet, spec: &SubprotocolSpec) -> Vec<&'s DiagVec> {
    spec.rand_indices.iter().map(|&j| &shares.pairs[j].r_mat).collect()
}
