use nsp_core::algebra::{hadamard, mask, phi, unmask, Diagonal};
use nsp_core::oracle::plaintext_scalar_product;
use nsp_core::{DiagVec, DiagVecF64, DiagVecI64, Scalar};
use proptest::prelude::*;

fn vectors(n: usize, m: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(-1000i64..1000, m), n)
}

fn big(xs: &[i64]) -> DiagVec {
    xs.iter().map(|&x| Scalar::from(x)).collect()
}

fn phi_of(vs: &[DiagVec]) -> Scalar {
    let refs: Vec<&DiagVec> = vs.iter().collect();
    phi(&refs).unwrap()
}

fn instance() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (2usize..6, 1usize..30).prop_flat_map(|(n, m)| vectors(n, m))
}

proptest! {
    #[test]
    fn phi_matches_entrywise_sum(vs in instance()) {
        let expected: i128 = (0..vs[0].len())
            .map(|k| vs.iter().map(|v| v[k] as i128).product::<i128>())
            .sum();
        let bigs: Vec<DiagVec> = vs.iter().map(|v| big(v)).collect();
        prop_assert_eq!(phi_of(&bigs), Scalar::from(expected));
        prop_assert_eq!(plaintext_scalar_product(&bigs).unwrap(), Scalar::from(expected));
    }

    #[test]
    fn phi_is_permutation_invariant(vs in instance(), rot in 0usize..6) {
        let bigs: Vec<DiagVec> = vs.iter().map(|v| big(v)).collect();
        let mut shuffled = bigs.clone();
        shuffled.reverse();
        let k = rot % shuffled.len();
        shuffled.rotate_left(k);
        prop_assert_eq!(phi_of(&bigs), phi_of(&shuffled));
        prop_assert_eq!(plaintext_scalar_product(&bigs).unwrap(), plaintext_scalar_product(&shuffled).unwrap());
    }

    #[test]
    fn phi_is_multilinear(
        (vs, extra) in (2usize..5, 1usize..20).prop_flat_map(|(n, m)| (vectors(n, m), proptest::collection::vec(-1000i64..1000, m))),
        a in -50i64..50,
        b in -50i64..50,
    ) {
        let bigs: Vec<DiagVec> = vs.iter().map(|v| big(v)).collect();
        let x = &bigs[0];
        let y = big(&extra);
        let combo: DiagVec = x.iter().zip(y.iter()).map(|(p, q)| p * a + q * b).collect();
        let with = |first: DiagVec| {
            let mut v = bigs.clone();
            v[0] = first;
            plaintext_scalar_product(&v).unwrap()
        };
        let lhs = with(combo);
        let rhs = with(x.clone()) * a + with(y) * b;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn mask_then_unmask_is_identity(vs in vectors(2, 12)) {
        let (d, r) = (big(&vs[0]), big(&vs[1]));
        prop_assert_eq!(unmask(&mask(&d, &r).unwrap(), &r).unwrap(), d);
    }

    #[test]
    fn hadamard_then_sum_is_phi(vs in instance()) {
        let bigs: Vec<DiagVec> = vs.iter().map(|v| big(v)).collect();
        let refs: Vec<&DiagVec> = bigs.iter().collect();
        prop_assert_eq!(hadamard(&refs).unwrap().sum(), phi(&refs).unwrap());
    }

    #[test]
    fn csv_and_json_round_trip(v in proptest::collection::vec(any::<i64>(), 1..40), scale in 0u32..4) {
        let d: DiagVec = v.iter().map(|&x| Scalar::from(x) * Scalar::from(10).pow(scale * 10)).collect();
        prop_assert_eq!(DiagVec::from_csv(&d.to_csv()).unwrap(), d.clone());
        prop_assert_eq!(DiagVec::from_json(&d.to_json()).unwrap(), d);
    }
}

#[test]
fn generic_over_machine_scalars() {
    let a: DiagVecI64 = Diagonal::new(vec![1, 2, 3]).unwrap();
    let b: DiagVecI64 = Diagonal::new(vec![4, 5, 6]).unwrap();
    assert_eq!(phi(&[&a, &b]).unwrap(), 32);
    let x: DiagVecF64 = Diagonal::new(vec![0.5, 1.5]).unwrap();
    let y: DiagVecF64 = Diagonal::new(vec![2.0, 2.0]).unwrap();
    assert_eq!(plaintext_scalar_product(&[x, y]).unwrap(), 4.0);
}

#[test]
fn five_binary_vectors_count_common_ones() {
    let vs: Vec<Vec<i64>> = (0..5)
        .map(|i| (0..20).map(|k| ((k * (i + 3) + i) % 3 != 0) as i64).collect())
        .collect();
    let count = (0..20).filter(|&k| vs.iter().all(|v| v[k] == 1)).count();
    let bigs: Vec<DiagVec> = vs.iter().map(|v| big(v)).collect();
    assert_eq!(plaintext_scalar_product(&bigs).unwrap(), Scalar::from(count));
}

#[test]
fn rejects_mismatched_lengths() {
    assert!(phi(&[&big(&[1, 2]), &big(&[1])]).is_err());
    assert!(plaintext_scalar_product(&[big(&[1, 2]), big(&[1])]).is_err());
    assert!(DiagVec::new(vec![]).is_err());
}
