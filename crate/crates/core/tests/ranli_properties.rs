mod common;

use evotree::corpus::Corpus;
use evotree::graph::NliLabel;
use evotree::oracle::{Fixtures, LinkKind, MockOracle, NliFixture, VerifyFixture};
use evotree::ranli::{attribution_score, verify_facts, FactRecord, RanliConfig};
use proptest::prelude::*;

fn oracle(label: NliLabel, p: f64, llm: f64) -> MockOracle {
    let mut f = Fixtures::default();
    f.nli.push(NliFixture {
        premise: None,
        hypothesis: "claim".into(),
        label,
        probability: p,
    });
    f.verify.push(VerifyFixture {
        claim: "claim".into(),
        evidence: None,
        score: llm,
        kind: LinkKind::Paraphrase,
    });
    MockOracle::with_fixtures(0, f)
}

fn label() -> impl Strategy<Value = NliLabel> {
    prop_oneof![
        Just(NliLabel::Entailment),
        Just(NliLabel::Neutral),
        Just(NliLabel::Contradiction)
    ]
}

proptest! {
    #[test]
    fn score_in_unit_range(l in label(), p in 0.0..=1.0f64, llm in 0.0..=1.0f64, alpha in 0.0..=1.0f64, strict: bool) {
        let config = RanliConfig { alpha, strict_formula: strict, ..RanliConfig::default() };
        let r = attribution_score("parent", "claim", &[], &config, &oracle(l, p, llm)).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.r_attr));
        prop_assert_eq!(r.accepted, r.r_attr >= config.attr_threshold && l != NliLabel::Contradiction);
    }

    #[test]
    fn monotone_in_entailment_probability(p in 0.0..1.0f64, dp in 0.0..1.0f64, llm in 0.0..=1.0f64, strict: bool) {
        let q = (p + dp).min(1.0);
        let config = RanliConfig { strict_formula: strict, ..RanliConfig::default() };
        let lo = attribution_score("parent", "claim", &[], &config, &oracle(NliLabel::Entailment, p, llm)).unwrap();
        let hi = attribution_score("parent", "claim", &[], &config, &oracle(NliLabel::Entailment, q, llm)).unwrap();
        prop_assert!(hi.r_attr >= lo.r_attr);
    }

    #[test]
    fn alpha_extremes(l in label(), p in 0.0..=1.0f64, llm in 0.0..=1.0f64) {
        let one = RanliConfig { alpha: 1.0, strict_formula: true, ..RanliConfig::default() };
        let r = attribution_score("parent", "claim", &[], &one, &oracle(l, p, llm)).unwrap();
        prop_assert_eq!(r.r_attr, r.nli_score);
        let zero = RanliConfig { alpha: 0.0, strict_formula: true, ..RanliConfig::default() };
        let r = attribution_score("parent", "claim", &[], &zero, &oracle(l, p, llm)).unwrap();
        prop_assert_eq!(r.r_attr, llm);
    }

    #[test]
    fn missing_rate_bookkeeping(present in prop::collection::vec(any::<bool>(), 1..40)) {
        let papers = (0..present.len()).map(|i| common::scored(&format!("d{i}"), &format!("doc {i}"), 2000, 0.5));
        let corpus = Corpus::from_papers(papers);
        let facts: Vec<FactRecord> = present
            .iter()
            .enumerate()
            .map(|(i, &here)| FactRecord {
                claim: format!("claim {i}"),
                doc_id: if here { format!("d{i}") } else { format!("gone{i}") },
                evidence: None,
            })
            .collect();
        let (results, summary) = verify_facts(&facts, &corpus, &RanliConfig::default(), &MockOracle::new(1)).unwrap();
        let missing = present.iter().filter(|p| !**p).count();
        prop_assert_eq!(results.len(), facts.len());
        prop_assert_eq!(summary.total, facts.len());
        prop_assert_eq!(summary.missing, missing);
        prop_assert_eq!(summary.missing_rate, missing as f64 / facts.len() as f64);
    }
}
