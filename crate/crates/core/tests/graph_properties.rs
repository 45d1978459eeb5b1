use evotree::graph::{EvolutionEdge, GraphError, PaperNode, RelationKind, TheTree};
use evotree::importance::combined_importance;
use proptest::prelude::*;

fn build(years: &[i32], edges: &[(usize, usize, u8, f64)]) -> (TheTree, usize) {
    let mut tree = TheTree::new("prop");
    for (i, y) in years.iter().enumerate() {
        let node = PaperNode::new(format!("n{i}"), format!("title {i}"), *y)
            .with_importance(combined_importance(0.5, (i % 3) as f64 / 2.0, 0.3).unwrap());
        tree.add_node(node).unwrap();
    }
    let mut rejected = 0;
    for &(s, t, k, a) in edges {
        let (s, t) = (s % years.len(), t % years.len());
        let kind = RelationKind::ALL[k as usize % 3];
        match tree.add_edge(
            EvolutionEdge::new(format!("n{s}"), format!("n{t}"), kind).with_attribution(a),
        ) {
            Ok(_) => {}
            Err(GraphError::AchronologicalEdge { .. } | GraphError::CycleIntroduced(..)) => {
                rejected += 1
            }
            Err(e) => panic!("{e}"),
        }
    }
    (tree, rejected)
}

type Structure = (Vec<i32>, Vec<(usize, usize, u8, f64)>);

fn structure() -> impl Strategy<Value = Structure> {
    (
        prop::collection::vec(1990..2000i32, 1..12),
        prop::collection::vec((0..12usize, 0..12usize, 0..3u8, 0.0..=1.0f64), 0..40),
    )
}

proptest! {
    #[test]
    fn accepted_trees_validate((years, edges) in structure()) {
        let (tree, _) = build(&years, &edges);
        prop_assert!(tree.validate().is_valid());
        for e in tree.edges() {
            prop_assert!(tree.node(&e.source).unwrap().year <= tree.node(&e.target).unwrap().year);
        }
        let order = tree.topological_order();
        prop_assert!(order.is_ok());
        let order = order.unwrap();
        let pos = |id: &str| order.iter().position(|x| x == id).unwrap();
        for e in tree.edges().iter().filter(|e| e.kind.is_reasoning()) {
            prop_assert!(pos(&e.source) < pos(&e.target));
        }
    }

    #[test]
    fn round_trip_is_identity((years, edges) in structure()) {
        let (tree, _) = build(&years, &edges);
        let back = TheTree::from_json(&tree.to_json()).unwrap();
        prop_assert_eq!(back.to_document(), tree.to_document());
        prop_assert_eq!(back.to_json(), tree.to_json());
    }

    #[test]
    fn achronological_edges_never_enter(a in 1990..2020i32, b in 1990..2020i32) {
        let (tree, _) = build(&[a, b], &[(0, 1, 2, 0.5)]);
        prop_assert_eq!(tree.edges().len(), usize::from(a <= b));
    }
}
