use std::collections::BTreeSet;

use itertools::Itertools;
use nsp_core::audit::{audit_transcript, collusion_recover, inject_fault, CollusionCoalition, Fault, ViolationKind};
use nsp_core::engine::{ExecutionMode, ProtocolOptions, RootReplay};
use nsp_core::oracle::worked_example;
use nsp_core::runtime::{run_simulation, CommodityStrategy, PartyId, Transcript};
use nsp_core::{DiagVec, RandomnessConfig, Scalar};

use PartyId::{Party, Server};

fn dv(xs: &[i64]) -> DiagVec {
    xs.iter().map(|&x| Scalar::from(x)).collect()
}

fn data(n: usize) -> Vec<DiagVec> {
    (0..n).map(|i| dv(&[i as i64 + 1, -2, 3 * i as i64, 7])).collect()
}

fn run(n: usize, mode: ExecutionMode, strategy: CommodityStrategy) -> Transcript {
    let opts = ProtocolOptions::new(mode, strategy, RandomnessConfig::with_seed(21));
    run_simulation(&data(n), &opts).unwrap().1
}

#[test]
fn honest_runs_audit_clean() {
    for n in 2..=6 {
        for mode in [ExecutionMode::FullRecursive, ExecutionMode::Shortcut] {
            for strategy in [CommodityStrategy::NaivePool, CommodityStrategy::PartyReuse] {
                let t = run(n, mode, strategy);
                let report = audit_transcript(&t);
                assert!(report.is_clean(), "n={n} {mode} {strategy}: {}", report.to_json());
                assert_eq!(report.messages_checked, t.len());
            }
        }
    }
}

#[test]
fn audit_works_without_payloads() {
    let t = run(4, ExecutionMode::Shortcut, CommodityStrategy::PartyReuse);
    let meta = Transcript::from_jsonl(&t.to_jsonl(false)).unwrap();
    assert!(audit_transcript(&meta).is_clean());
}

#[test]
fn each_fault_triggers_only_its_class() {
    for fault in Fault::ALL {
        for strategy in [CommodityStrategy::NaivePool, CommodityStrategy::PartyReuse] {
            let (n, mode) = match fault {
                Fault::ShortcutResultToServer => (3, ExecutionMode::Shortcut),
                Fault::ServerReusedInDescendant => (4, ExecutionMode::FullRecursive),
                _ => (3, ExecutionMode::FullRecursive),
            };
            let mut t = run(n, mode, strategy);
            let changed = inject_fault(&mut t, fault).unwrap();
            assert!(!changed.is_empty());
            let report = audit_transcript(&t);
            assert_eq!(report.kinds(), BTreeSet::from([fault.expected_violation()]), "{fault} {strategy}: {}", report.to_json());
            assert!(report.violations.iter().all(|v| changed.contains(&v.message_index)));
        }
    }
}

#[test]
fn single_shortcut_violation_when_result_returns_to_server() {
    let mut t = run(3, ExecutionMode::Shortcut, CommodityStrategy::NaivePool);
    inject_fault(&mut t, Fault::ShortcutResultToServer).unwrap();
    let report = audit_transcript(&t);
    assert_eq!(report.violations.len(), 1);
    assert_eq!(report.count(ViolationKind::ShortcutConfidentiality), 1);
    assert!(report.to_json().contains("\"SHORTCUT_CONFIDENTIALITY\""));
}

#[test]
fn faults_need_suitable_messages() {
    let mut t = run(3, ExecutionMode::FullRecursive, CommodityStrategy::NaivePool);
    assert!(inject_fault(&mut t, Fault::ShortcutResultToServer).is_err());
    assert!(inject_fault(&mut t, Fault::ServerReusedInDescendant).is_err());
    assert_eq!("server-as-data-owner".parse::<Fault>().unwrap(), Fault::ServerAsDataOwner);
}

#[test]
fn worked_example_attack() {
    let ex = worked_example();
    let opts = ProtocolOptions {
        replay: Some(RootReplay { shares: ex.shares.clone(), v2: ex.v2.clone() }),
        ..Default::default()
    };
    let (_, t) = run_simulation(&ex.data, &opts).unwrap();
    let bob_and_merlin = CollusionCoalition::new([Party(2), PartyId::MERLIN]).unwrap();
    let rec = collusion_recover(&t, &bob_and_merlin, Party(1)).unwrap().unwrap();
    assert_eq!(rec.data, dv(&[1, 1, 1]));
    assert_eq!(t.messages()[rec.masked_message].payload.as_matrix().unwrap(), &dv(&[173, 244, 137]));
    let bob = CollusionCoalition::new([Party(2)]).unwrap();
    assert!(collusion_recover(&t, &bob, Party(1)).unwrap().is_none());
}

#[test]
fn owner_and_server_recover_every_outsider() {
    for n in 3..=5usize {
        for modulus in [false, true] {
            let mut opts = ProtocolOptions::new(
                ExecutionMode::FullRecursive,
                CommodityStrategy::NaivePool,
                RandomnessConfig::with_seed(n as u64),
            );
            if modulus {
                opts.arith = nsp_core::arith::Arith::Modular(nsp_core::arith::Modulus::new(Scalar::from(1_000_000_007)).unwrap());
            }
            let inputs = data(n);
            let (_, t) = run_simulation(&inputs, &opts).unwrap();
            for member in 1..=n as u32 {
                let c = CollusionCoalition::new([Party(member), PartyId::MERLIN]).unwrap();
                for target in (1..=n as u32).filter(|&x| x != member) {
                    let rec = collusion_recover(&t, &c, Party(target)).unwrap().expect("recovery");
                    assert_eq!(rec.data, inputs[target as usize - 1], "n={n} member={member} target={target}");
                    assert!(rec.protocol.is_root());
                }
                assert!(collusion_recover(&t, &c, Party(member)).is_err());
            }
        }
    }
}

#[test]
fn data_owner_coalitions_learn_nothing() {
    for n in 3..=5usize {
        let t = run(n, ExecutionMode::FullRecursive, CommodityStrategy::NaivePool);
        let owners: Vec<PartyId> = (1..=n as u32).map(Party).collect();
        for size in 1..n {
            for members in owners.iter().copied().combinations(size) {
                let c = CollusionCoalition::new(members.clone()).unwrap();
                for &target in owners.iter().filter(|p| !members.contains(p)) {
                    assert!(collusion_recover(&t, &c, target).unwrap().is_none(), "n={n} {members:?} -> {target}");
                }
            }
        }
    }
}

#[test]
fn sub_run_servers_are_also_attack_vectors() {
    // A four-party run: S2 serves the three-party sub-runs, in which P1's
    // masked vector reaches P2.
    let inputs = data(4);
    let opts = ProtocolOptions::new(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, RandomnessConfig::with_seed(4));
    let (_, t) = run_simulation(&inputs, &opts).unwrap();
    let c = CollusionCoalition::new([Party(2), Server(2)]).unwrap();
    let rec = collusion_recover(&t, &c, Party(1)).unwrap().unwrap();
    assert_eq!(rec.data, inputs[0]);
    assert!(!rec.protocol.is_root());

    // Under party reuse the sub-run server is a data owner.
    let opts = ProtocolOptions::new(ExecutionMode::FullRecursive, CommodityStrategy::PartyReuse, RandomnessConfig::with_seed(4));
    let (_, t) = run_simulation(&inputs, &opts).unwrap();
    let owners_only = CollusionCoalition::new([Party(2), Party(3)]).unwrap();
    let rec = collusion_recover(&t, &owners_only, Party(1)).unwrap().unwrap();
    assert_eq!(rec.data, inputs[0]);
}

#[test]
fn coalition_view_and_elided_payloads() {
    let t = run(3, ExecutionMode::FullRecursive, CommodityStrategy::NaivePool);
    let c = CollusionCoalition::new([Party(2), PartyId::MERLIN]).unwrap();
    let view = c.view(&t);
    assert!(view.iter().all(|&i| {
        let m = &t.messages()[i];
        c.contains(m.sender) || c.contains(m.receiver)
    }));
    let meta = Transcript::from_jsonl(&t.to_jsonl(false)).unwrap();
    assert!(collusion_recover(&meta, &c, Party(1)).is_err());
    assert!(CollusionCoalition::new([]).is_err());
}
