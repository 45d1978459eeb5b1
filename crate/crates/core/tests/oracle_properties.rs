use evotree::graph::PaperNode;
use evotree::oracle::{MockOracle, Oracle, OracleSession};
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[a-z]{1,8}( [a-z]{1,8}){0,5}"
}

proptest! {
    #[test]
    fn mock_is_pure(seed in any::<u64>(), a in text(), b in text()) {
        let one = MockOracle::new(seed);
        let two = MockOracle::new(seed);
        let pa = PaperNode::new("a", a.clone(), 2000);
        let pb = PaperNode::new("b", b.clone(), 2001);
        prop_assert_eq!(one.priority(&a, &b).unwrap(), two.priority(&a, &b).unwrap());
        prop_assert_eq!(one.importance(&pa, &b).unwrap(), two.importance(&pa, &b).unwrap());
        prop_assert_eq!(
            one.continuation(std::slice::from_ref(&pa), &pb).unwrap(),
            two.continuation(std::slice::from_ref(&pa), &pb).unwrap()
        );
        prop_assert_eq!(one.nli(&a, &b).unwrap(), two.nli(&a, &b).unwrap());
        prop_assert_eq!(one.verify(&a, &b, "ctx").unwrap(), two.verify(&a, &b, "ctx").unwrap());
    }

    #[test]
    fn scores_in_unit_range(seed in any::<u64>(), a in text(), b in text()) {
        let o = OracleSession::unbounded(MockOracle::new(seed));
        let pa = PaperNode::new("a", a.clone(), 2000);
        let pb = PaperNode::new("b", b.clone(), 2001);
        for v in [
            o.priority(&a, &b).unwrap(),
            o.importance(&pa, &b).unwrap(),
            o.continuation(std::slice::from_ref(&pa), &pb).unwrap(),
            o.similarity(&a, &b).unwrap(),
            o.nli(&a, &b).unwrap().probability,
            o.verify(&a, &b, "ctx").unwrap().score,
        ] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn similarity_symmetric_and_reflexive(seed in any::<u64>(), a in text(), b in text()) {
        let o = OracleSession::unbounded(MockOracle::new(seed));
        prop_assert_eq!(o.similarity(&a, &b).unwrap(), o.similarity(&b, &a).unwrap());
        prop_assert_eq!(o.similarity(&a, &a).unwrap(), 1.0);
    }
}
