use nsp_core::arith::{Arith, Modulus};
use nsp_core::engine::{
    count_messages, count_protocols, n_party_protocol_with, ExecutionMode, ProtocolOptions, RootReplay,
};
use nsp_core::oracle::{plaintext_scalar_product, worked_example};
use nsp_core::runtime::{message_counts, run_simulation, CommodityStrategy, MessageKind, PartyId, ProtocolId};
use nsp_core::{DiagVec, Error, RandomnessConfig, Scalar};
use proptest::prelude::*;

const MERSENNE_61: u64 = (1 << 61) - 1;

fn options(mode: ExecutionMode, strategy: CommodityStrategy, seed: u64, modulus: bool) -> ProtocolOptions {
    let mut o = ProtocolOptions::new(mode, strategy, RandomnessConfig::with_seed(seed));
    if modulus {
        o.arith = Arith::Modular(Modulus::new(Scalar::from(MERSENNE_61)).unwrap());
    }
    o
}

fn dv(xs: &[i64]) -> DiagVec {
    xs.iter().map(|&x| Scalar::from(x)).collect()
}

fn data_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Vec<DiagVec>> {
    (2..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        proptest::collection::vec(proptest::collection::vec(-20i64..20, m).prop_map(|v| dv(&v)), n)
    })
}

fn mode_strategy() -> impl Strategy<Value = ExecutionMode> {
    prop_oneof![Just(ExecutionMode::FullRecursive), Just(ExecutionMode::Shortcut)]
}

fn strategy_strategy() -> impl Strategy<Value = CommodityStrategy> {
    prop_oneof![Just(CommodityStrategy::NaivePool), Just(CommodityStrategy::PartyReuse)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn protocol_equals_plaintext(
        data in data_strategy(5, 40),
        mode in mode_strategy(),
        strategy in strategy_strategy(),
        modulus in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut o = options(mode, strategy, seed, modulus);
        o.verify = true;
        let r = n_party_protocol_with(&data, &o).unwrap();
        prop_assert_eq!(r.value, plaintext_scalar_product(&data).unwrap());
    }

    #[test]
    fn transcript_and_stats_agree(data in data_strategy(4, 6), mode in mode_strategy(), seed in any::<u64>()) {
        let (r, t) = run_simulation(&data, &options(mode, CommodityStrategy::NaivePool, seed, false)).unwrap();
        let tally = message_counts(&t);
        prop_assert_eq!(tally.total, r.stats.messages);
        prop_assert_eq!(tally.deliveries, r.stats.deliveries);
        let instances = t.messages().iter().filter(|m| m.kind == MessageKind::SharePair).map(|m| &m.protocol).collect::<std::collections::BTreeSet<_>>();
        prop_assert_eq!(instances.len() as u64, r.stats.protocols);
    }
}

#[test]
fn six_parties_both_modes_and_strategies() {
    let data: Vec<DiagVec> = (0..6).map(|i| dv(&[1, i - 2, 3, -1, 2])).collect();
    for mode in [ExecutionMode::FullRecursive, ExecutionMode::Shortcut] {
        for strategy in [CommodityStrategy::NaivePool, CommodityStrategy::PartyReuse] {
            for modulus in [false, true] {
                let r = n_party_protocol_with(&data, &options(mode, strategy, 11, modulus)).unwrap();
                assert_eq!(r.value, plaintext_scalar_product(&data).unwrap(), "{mode} {strategy} {modulus}");
            }
        }
    }
}

#[test]
fn worked_example_replay() {
    let ex = worked_example();
    for mode in [ExecutionMode::FullRecursive, ExecutionMode::Shortcut] {
        let mut o = options(mode, CommodityStrategy::NaivePool, 0, false);
        o.replay = Some(RootReplay {
            shares: ex.shares.clone(),
            v2: ex.v2.clone(),
        });
        let (r, t) = run_simulation(&ex.data, &o).unwrap();
        assert_eq!(r.value, Scalar::from(1));
        let root_values: Vec<(PartyId, PartyId, Scalar)> = t
            .messages()
            .iter()
            .filter(|m| m.protocol.is_root() && matches!(m.kind, MessageKind::UValue | MessageKind::Subresult))
            .map(|m| (m.sender, m.receiver, m.payload.as_value().unwrap().clone()))
            .collect();
        use PartyId::Party;
        assert_eq!(
            root_values,
            vec![
                (Party(1), Party(2), Scalar::from(16264468)),
                (Party(2), Party(3), Scalar::from(-11597126)),
                (Party(1), Party(3), Scalar::from(232946)),
                (Party(2), Party(3), Scalar::from(96135)),
                (Party(3), Party(1), Scalar::from(-2)),
            ],
            "{mode}"
        );
    }
}

#[test]
fn executed_counts_match_recurrence() {
    for n in 2..=6usize {
        let data: Vec<DiagVec> = (0..n).map(|_| dv(&[1, 0, 1])).collect();
        let r = n_party_protocol_with(&data, &options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 2, false)).unwrap();
        assert_eq!(r.stats.protocols, u64::try_from(count_protocols(n).unwrap()).unwrap(), "n={n}");
        assert_eq!(r.stats.messages, u64::try_from(count_messages(n).unwrap()).unwrap(), "n={n}");
        assert_eq!(r.stats.shortcuts, 0);
    }
}

#[test]
fn shortcut_mode_removes_single_data_instances() {
    let data: Vec<DiagVec> = (0..4).map(|_| dv(&[1, 1])).collect();
    let full = n_party_protocol_with(&data, &options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 2, false)).unwrap();
    let short = n_party_protocol_with(&data, &options(ExecutionMode::Shortcut, CommodityStrategy::NaivePool, 2, false)).unwrap();
    assert_eq!(full.value, short.value);
    assert!(short.stats.protocols < full.stats.protocols);
    assert!(short.stats.messages < full.stats.messages);
    assert!(short.stats.shortcuts > 0);
}

#[test]
fn party_reuse_never_exhausts() {
    for n in 3..=6usize {
        let data: Vec<DiagVec> = (0..n).map(|i| dv(&[i as i64 + 1, 1])).collect();
        for mode in [ExecutionMode::FullRecursive, ExecutionMode::Shortcut] {
            let (r, t) = run_simulation(&data, &options(mode, CommodityStrategy::PartyReuse, 5, false)).unwrap();
            assert_eq!(r.value, plaintext_scalar_product(&data).unwrap());
            let servers: Vec<PartyId> = t
                .messages()
                .iter()
                .filter(|m| m.kind == MessageKind::SharePair && !m.protocol.is_root())
                .map(|m| m.sender)
                .collect();
            assert!(servers.iter().all(|p| !p.is_server()), "n={n}: only data owners serve sub-runs");
        }
    }
}

#[test]
fn naive_pool_uses_one_server_per_size() {
    let data: Vec<DiagVec> = (0..5).map(|_| dv(&[1])).collect();
    let (_, t) = run_simulation(&data, &options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 1, false)).unwrap();
    let mut seen = std::collections::BTreeMap::new();
    for m in t.messages().iter().filter(|m| m.kind == MessageKind::SharePair) {
        let size = t.messages().iter().filter(|x| x.kind == MessageKind::SharePair && x.protocol == m.protocol).count();
        seen.entry(size).or_insert_with(std::collections::BTreeSet::new).insert(m.sender);
    }
    for (size, servers) in seen {
        assert_eq!(servers.into_iter().collect::<Vec<_>>(), vec![PartyId::Server((5 - size + 1) as u32)]);
    }
}

#[test]
fn identical_seeds_give_identical_transcripts() {
    let data: Vec<DiagVec> = (0..5).map(|i| dv(&[i, 2, -3, 4])).collect();
    for strategy in [CommodityStrategy::NaivePool, CommodityStrategy::PartyReuse] {
        let o = options(ExecutionMode::FullRecursive, strategy, 99, false);
        let (r1, t1) = run_simulation(&data, &o).unwrap();
        let (r2, t2) = run_simulation(&data, &o).unwrap();
        let mut threaded = o.clone();
        threaded.threads = 4;
        let (r3, t3) = run_simulation(&data, &threaded).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1, r3);
        assert_eq!(t1.to_jsonl(true), t2.to_jsonl(true));
        assert_eq!(t1.to_jsonl(true), t3.to_jsonl(true));
        let other = options(ExecutionMode::FullRecursive, strategy, 100, false);
        let (_, t4) = run_simulation(&data, &other).unwrap();
        assert_ne!(t1.to_jsonl(true), t4.to_jsonl(true));
    }
}

#[test]
fn transcript_jsonl_round_trip() {
    let data: Vec<DiagVec> = (0..3).map(|i| dv(&[i, 5])).collect();
    let (_, t) = run_simulation(&data, &options(ExecutionMode::Shortcut, CommodityStrategy::NaivePool, 1, true)).unwrap();
    let back = nsp_core::runtime::Transcript::from_jsonl(&t.to_jsonl(true)).unwrap();
    assert_eq!(back, t);
    let meta = nsp_core::runtime::Transcript::from_jsonl(&t.to_jsonl(false)).unwrap();
    assert_eq!(meta.len(), t.len());
    assert_eq!(message_counts(&meta), message_counts(&t));
}

#[test]
fn modulus_is_checked() {
    assert!(matches!(Modulus::new(Scalar::from(91)), Err(Error::InvalidModulus(_))));
    let mut o = options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 0, false);
    o.arith = Arith::Modular(Modulus::new(Scalar::from(101)).unwrap());
    let data = vec![dv(&[10, 10]), dv(&[10, 10])];
    assert!(matches!(n_party_protocol_with(&data, &o), Err(Error::InvalidModulus(_))));
    let small = vec![dv(&[3, -4]), dv(&[5, 6])];
    assert_eq!(n_party_protocol_with(&small, &o).unwrap().value, Scalar::from(-9));
}

#[test]
fn rejects_bad_inputs() {
    let o = options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 0, false);
    assert!(matches!(n_party_protocol_with(&[dv(&[1])], &o), Err(Error::InvalidArgument(_))));
    assert!(matches!(
        n_party_protocol_with(&[dv(&[1, 2]), dv(&[1])], &o),
        Err(Error::DimensionMismatch { .. })
    ));
    let ex = worked_example();
    let mut bad = o.clone();
    let mut shares = ex.shares.clone();
    shares.pairs[2].r_scalar += 1;
    bad.replay = Some(RootReplay { shares, v2: ex.v2.clone() });
    assert!(matches!(n_party_protocol_with(&ex.data, &bad), Err(Error::InvalidShareSet(_))));
}

#[test]
fn sub_run_ids_follow_enumeration() {
    let data: Vec<DiagVec> = (0..4).map(|_| dv(&[1])).collect();
    let (_, t) = run_simulation(&data, &options(ExecutionMode::FullRecursive, CommodityStrategy::NaivePool, 1, false)).unwrap();
    let tally = message_counts(&t);
    // two random factors leave three-party runs, three leave two-party runs
    assert_eq!(tally.per_protocol[&ProtocolId::root()], 20);
    for k in 1..=6 {
        assert_eq!(tally.per_protocol[&ProtocolId::root().child(k)], 12, "root/{k}");
    }
    for k in 7..=10 {
        assert_eq!(tally.per_protocol[&ProtocolId::root().child(k)], 6, "root/{k}");
    }
}

#[test]
fn two_party_base_protocol_on_random_instances() {
    use nsp_core::engine::two_party_protocol;
    use nsp_core::shares::{generate_share_set, random_vectors, IntRange};
    let range = IntRange::new(-1000, 1000).unwrap();
    for i in 0..1000u64 {
        let m = 1 + (i * 7919 % 1000) as usize;
        let data = random_vectors(2, m, &range, i).unwrap();
        let shares = generate_share_set(2, m, &RandomnessConfig::with_seed(i)).unwrap();
        let r = two_party_protocol(&data[0], &data[1], &shares, &Scalar::from(i * 31)).unwrap();
        assert_eq!(r.value, plaintext_scalar_product(&data).unwrap(), "instance {i}");
    }
}

#[test]
fn chain_plus_weighted_leftovers_is_the_product() {
    use nsp_core::algebra::{hadamard, mask, phi};
    use nsp_core::engine::{compute_u_chain, enumerate_subprotocols};
    use nsp_core::shares::{generate_share_set, random_vectors, IntRange};
    for n in 3..=5usize {
        let data = random_vectors(n, 9, &IntRange::new(-9, 10).unwrap(), n as u64).unwrap();
        let shares = generate_share_set(n, 9, &RandomnessConfig::with_seed(n as u64)).unwrap();
        let r_mats: Vec<DiagVec> = shares.r_mats().into_iter().cloned().collect();
        let masked: Vec<DiagVec> = data.iter().zip(&r_mats).map(|(d, r)| mask(d, r).unwrap()).collect();
        let scalars: Vec<Scalar> = shares.scalars().into_iter().cloned().collect();
        let v2 = Scalar::from(12345);
        let us = compute_u_chain(&masked, &data[0], &r_mats, &scalars, &v2).unwrap();
        let mut total = &us[n - 1] + &v2;
        for spec in enumerate_subprotocols(n).unwrap() {
            let mut factors: Vec<&DiagVec> = spec.data_indices.iter().map(|&a| &data[a]).collect();
            let rs: Vec<&DiagVec> = spec.rand_indices.iter().map(|&b| &r_mats[b]).collect();
            let product = hadamard(&rs).unwrap();
            factors.push(&product);
            total += Scalar::from(spec.multiplicity) * phi(&factors).unwrap();
        }
        assert_eq!(total, plaintext_scalar_product(&data).unwrap(), "n={n}");
    }
}
