use cake_core::exec::{random_profile, run};
use cake_core::fixtures::*;
use cake_core::ir::{stats, BcNode, BcTree, ExtNode, GccMode, GccNode, Protocol};
use cake_core::library::{gen_cut_and_choose, gen_selfridge_conway_bc, gen_selfridge_conway_gcc};
use cake_core::transform::*;
use cake_core::valuation::random_valuation;
use cake_core::{Allocation, TransformError, Valuation};

fn vals(n: usize, seed: u64) -> Vec<Valuation> {
    (0..n)
        .map(|i| random_valuation(seed * 7 + i as u64, 1 + (seed as usize + i) % 4).unwrap())
        .collect()
}

fn alloc(
    p: &Protocol,
    profile: &[std::sync::Arc<dyn cake_core::exec::Strategy>],
    vs: &[Valuation],
) -> Allocation {
    run(p, profile, vs).unwrap().1.canonical()
}

fn assert_same_play(src: &Protocol, dst: &Protocol, t: &Transporter, seed: u64) {
    let n = src.agents();
    for round in 0..3 {
        let vs = vals(n, seed * 3 + round);
        let profile = random_profile(n, seed * 11 + round);
        let moved = t.transport_profile(&profile);
        assert_eq!(
            alloc(src, &profile, &vs),
            alloc(dst, &moved, &vs),
            "seed {seed} round {round}"
        );
    }
}

fn choose_has_cut_below(t: &BcTree) -> bool {
    fn below(t: &BcTree, id: cake_core::NodeId, under: bool) -> bool {
        let node = t.node(id);
        if under && node.is_cut() {
            return true;
        }
        let under = under || matches!(node, BcNode::Choose { .. });
        node.children().into_iter().any(|c| below(t, c, under))
    }
    below(t, t.root, false)
}

#[test]
fn dag_to_tree_keeps_allocations() {
    for seed in 0..100 {
        let d = random_bc_dag(seed, 3, 25);
        let conv = dag_to_tree(&d).unwrap();
        let out = Protocol::Bc(conv.output.clone());
        assert!(out.validate().is_valid());
        assert_same_play(&Protocol::Dag(d), &out, &conv.transporter, seed);
    }
}

#[test]
fn dag_to_tree_on_a_tree_is_identity() {
    let t = random_bc_tree(5, 2, 20);
    let conv = dag_to_tree(&t.clone().into_dag()).unwrap();
    assert!(Protocol::Bc(conv.output).structurally_eq(&Protocol::Bc(t)));
}

#[test]
fn extended_to_bc_keeps_allocations() {
    for seed in 0..100 {
        let t = random_ext_tree(seed, 3, 20);
        let conv = extended_to_bc(&t).unwrap();
        let out = Protocol::Bc(conv.output.clone());
        assert!(out.validate().is_valid(), "{}", out.validate().summary());
        assert_same_play(&Protocol::Ext(t), &out, &conv.transporter, seed);
    }
}

#[test]
fn unrestricted_chain_blows_up_factorially() {
    let three = extended_to_bc(&unrestricted_cut_chain(3)).unwrap().output;
    let s = stats(&Protocol::Bc(three.clone()));
    assert_eq!(s.cuts + s.chooses, 12);
    let bottom = three
        .nodes
        .iter()
        .filter(|n| matches!(n, BcNode::Cut { child, .. } if matches!(three.node(*child), BcNode::Leaf { .. })))
        .count();
    assert_eq!(bottom, 6);
    let mut fact = 1;
    for n in 2..=6 {
        fact *= n;
        let input = Protocol::Ext(unrestricted_cut_chain(n));
        let out = extended_to_bc(&unrestricted_cut_chain(n)).unwrap().output;
        let leaves = stats(&Protocol::Bc(out.clone())).leaves;
        assert_eq!(leaves, fact, "n = {n}");
        let bound = conversion_cost("extended_to_bc", &input).unwrap();
        assert_eq!(bound, out.nodes.len() as u128, "n = {n}");
    }
}

#[test]
fn cuts_before_choices_ext_properties() {
    for seed in 0..100 {
        let t = random_ext_tree(seed, 3, 40);
        let conv = cuts_before_choices_ext(&t).unwrap();
        let out = &conv.output;
        assert_eq!(out.nodes.len(), t.nodes.len());
        let parents = out.parents();
        for (i, n) in out.nodes.iter().enumerate() {
            if n.is_cut() {
                let mut up = parents[i];
                while let Some(p) = up {
                    assert!(
                        !matches!(out.node(p), ExtNode::Choose { .. }),
                        "seed {seed}"
                    );
                    up = parents[p.index()];
                }
            }
        }
        let again = cuts_before_choices_ext(out).unwrap().output;
        assert!(Protocol::Ext(again).structurally_eq(&Protocol::Ext(out.clone())));
        assert_same_play(
            &Protocol::Ext(t),
            &Protocol::Ext(out.clone()),
            &conv.transporter,
            seed,
        );
    }
}

#[test]
fn intermediate_form_holds() {
    let sc = gen_selfridge_conway_bc();
    let Protocol::Bc(t) = &sc.protocol else {
        unreachable!()
    };
    assert!(!is_intermediate_form(t));
    // hoisting every trim cut leaves their mutual order open, far past the budget
    assert!(matches!(
        bc_intermediate_form_with_budget(t, 200_000),
        Err(TransformError::Budget { .. })
    ));
    let (bc, _) = gen_cut_and_choose();
    let Protocol::Bc(cc) = &bc.protocol else {
        unreachable!()
    };
    let (out, _) = bc_intermediate_form(cc).unwrap();
    assert!(is_intermediate_form(&out));
    let out = bc_intermediate_form(&cut_after_choice(3)).unwrap().0;
    assert!(is_intermediate_form(&out));
    assert!(Protocol::Bc(out).validate().is_valid());
    let mut done = 0;
    for seed in 0..100 {
        let t = random_bc_tree(seed, 3, 20);
        let out = match bc_intermediate_form_with_budget(&t, 100_000) {
            Ok((out, _)) => out,
            Err(TransformError::Budget { .. }) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        done += 1;
        assert!(is_intermediate_form(&out), "seed {seed}");
        let bound = conversion_cost("bc_intermediate_form", &Protocol::Bc(t)).unwrap();
        assert!(bound >= out.nodes.len() as u128, "seed {seed}");
    }
    assert!(done >= 80, "only {done} trees fit the budget");
}

#[test]
fn cuts_before_choices_bc_properties() {
    for seed in 0..100 {
        let t = random_bc_tree(seed, 2, 12);
        let conv = match cuts_before_choices_bc_with_budget(&t, 20_000) {
            Ok(c) => c,
            Err(TransformError::Budget { .. }) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        let out = &conv.output;
        assert!(Protocol::Bc(out.clone()).validate().is_valid());
        assert!(!choose_has_cut_below(out), "seed {seed}");
        assert!(is_cuts_before_choices(out));
        let bound = conversion_cost("cuts_before_choices_bc", &Protocol::Bc(t.clone())).unwrap();
        assert!(bound >= out.nodes.len() as u128, "seed {seed}");
        let again = cuts_before_choices_bc(out).unwrap().output;
        assert!(Protocol::Bc(again).structurally_eq(&Protocol::Bc(out.clone())));
        assert_same_play(
            &Protocol::Bc(t),
            &Protocol::Bc(out.clone()),
            &conv.transporter,
            seed,
        );
    }
}

#[test]
fn hoisting_after_a_choice_builds_a_long_chain() {
    for m in 2..=4 {
        let out = cuts_before_choices_bc(&cut_after_choice(m)).unwrap().output;
        let mut id = out.root;
        let mut chain = 0;
        while let BcNode::Cut { child, .. } = out.node(id) {
            chain += 1;
            id = *child;
        }
        assert_eq!(chain, 2 * m - 1, "m = {m}");
        assert!(!choose_has_cut_below(&out));
    }
}

#[test]
fn cut_and_choose_unfolds_to_two_leaves() {
    let (_, gcc) = gen_cut_and_choose();
    let Protocol::Gcc(g) = &gcc.protocol else {
        unreachable!()
    };
    let (t, _) = gcc_to_bc(g).unwrap();
    let s = stats(&Protocol::Bc(t.clone()));
    assert_eq!(s.leaves, 2);
    let chooser = t
        .nodes
        .iter()
        .find_map(|n| match n {
            BcNode::Choose { agent, children } => Some((*agent, children.len())),
            _ => None,
        })
        .unwrap();
    assert_eq!(chooser, (2, 2));
}

#[test]
fn gcc_to_bc_outputs_validate() {
    let Protocol::Gcc(sc) = gen_selfridge_conway_gcc().protocol else {
        unreachable!()
    };
    let mut inputs = vec![sc];
    inputs.extend((0..100).map(|seed| random_gcc_tree(seed, 3, 15)));
    for g in inputs {
        let (t, _) = gcc_to_bc(&g).unwrap();
        assert!(Protocol::Bc(t.clone()).validate().is_valid());
        let bound = conversion_cost("gcc_to_bc", &Protocol::Gcc(g)).unwrap();
        assert!(bound >= t.nodes.len() as u128);
    }
}

#[test]
fn bc_to_gcc_structure() {
    let (bc, _) = gen_cut_and_choose();
    let Protocol::Bc(t) = &bc.protocol else {
        unreachable!()
    };
    let g = bc_to_gcc(t).unwrap();
    assert_eq!(g.mode, GccMode::Extensive);
    let mut id = g.root;
    let mut preamble = 0;
    while let GccNode::Cut { pieces, child, .. } = g.node(id) {
        if pieces[0].left != cake_core::CutRef::Origin {
            break;
        }
        preamble += 1;
        id = *child;
    }
    // a_1, a_2, b_1, then agent 1's cut of the BC protocol lands on [a_2, 1]
    assert_eq!(preamble, 3);
    let multi: Vec<usize> = g
        .nodes
        .iter()
        .filter_map(|n| match n {
            GccNode::Choose { pieces, .. } if pieces.len() > 1 => Some(pieces.len()),
            _ => None,
        })
        .collect();
    assert_eq!(multi, vec![2]);
    for seed in 0..100 {
        let t = random_bc_tree(seed, 3, 20);
        let g = bc_to_gcc(&t).unwrap();
        let p = Protocol::Gcc(g.clone());
        assert!(
            p.validate().is_valid(),
            "seed {seed}: {}",
            p.validate().summary()
        );
        let bound = conversion_cost("bc_to_gcc", &Protocol::Bc(t)).unwrap();
        assert!(bound >= g.nodes.len() as u128, "seed {seed}");
    }
}

#[test]
fn cost_rejects_unknown_ops_and_wrong_models() {
    let t = Protocol::Bc(BcTree::trivial(2));
    assert!(matches!(
        conversion_cost("nope", &t),
        Err(TransformError::UnknownOp(_))
    ));
    assert!(matches!(
        conversion_cost("gcc_to_bc", &t),
        Err(TransformError::Invalid(_))
    ));
}

#[test]
fn ext_costs_bound_actual_sizes() {
    for seed in 0..100 {
        let t = random_ext_tree(seed, 3, 20);
        let p = Protocol::Ext(t.clone());
        let out = extended_to_bc(&t).unwrap().output;
        assert!(conversion_cost("extended_to_bc", &p).unwrap() >= out.nodes.len() as u128);
        assert_eq!(
            conversion_cost("cuts_before_choices_ext", &p).unwrap(),
            t.nodes.len() as u128
        );
        let d = random_bc_dag(seed, 3, 25);
        let out = dag_to_tree(&d).unwrap().output;
        assert!(
            conversion_cost("dag_to_tree", &Protocol::Dag(d)).unwrap() >= out.nodes.len() as u128
        );
    }
}
