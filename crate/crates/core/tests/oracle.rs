mod common;

use cake_core::ir::{BcBuilder, Protocol};
use cake_core::library::{gen_cut_and_choose, gen_dubins_spanier, Model};
use cake_core::oracle::*;
use cake_core::valuation::random_valuation;
use cake_core::{frac, OracleError, Valuation};

fn all_to(agent: usize, n: usize) -> Protocol {
    let mut b = BcBuilder::new();
    let leaf = b.leaf(vec![agent]);
    Protocol::Bc(b.finish(n, leaf))
}

fn halves() -> Protocol {
    let mut b = BcBuilder::new();
    let leaf = b.leaf(vec![1, 2]);
    let cut = b.cut(1, 1, leaf);
    Protocol::Bc(b.finish(2, cut))
}

fn uniform(n: usize) -> Vec<Valuation> {
    vec![Valuation::uniform(); n]
}

#[test]
fn grid_examples() {
    let g = build_grid(&uniform(2), 2).unwrap();
    assert_eq!(g.points(), &[frac(0, 1), frac(1, 2), frac(1, 1)]);
    let g = build_grid(&uniform(2), 3).unwrap();
    assert_eq!(
        g.points(),
        &[frac(0, 1), frac(1, 3), frac(1, 2), frac(2, 3), frac(1, 1)]
    );
    let v = Valuation::new(
        vec![frac(0, 1), frac(1, 4), frac(1, 1)],
        vec![frac(2, 1), frac(2, 3)],
    )
    .unwrap();
    let g = build_grid(std::slice::from_ref(&v), 2).unwrap();
    assert!(g.points().contains(&frac(1, 4)));
    assert!(g.contains_breakpoints(&[v]));
    assert!(build_grid(&uniform(1), 1).is_err());
}

#[test]
fn trivial_protocol_queries() {
    let g = build_grid(&uniform(2), 2).unwrap();
    let u = uniform(2);
    let p = all_to(1, 2);
    let q = BoundsQuery::new(1, [(2, frac(0, 1))]).unwrap();
    assert!(can_guarantee(&p, &q, &g, &u).unwrap());
    let q = BoundsQuery::new(2, [(1, frac(1, 2))]).unwrap();
    assert!(!can_guarantee(&p, &q, &g, &u).unwrap());
    assert_eq!(guarantee_value(&p, 1, &g, &u).unwrap(), frac(1, 1));
    assert_eq!(guarantee_pair_envy(&p, 2, 1, &g, &u).unwrap(), frac(1, 1));
    let u3 = uniform(3);
    let g3 = build_grid(&u3, 2).unwrap();
    assert_eq!(
        guarantee_total_envy(&all_to(1, 3), 2, &g3, &u3).unwrap(),
        frac(1, 1)
    );
    // the cutter secures equal halves; the other agent is at the cutter's mercy
    let h = halves();
    assert_eq!(guarantee_pair_envy(&h, 1, 2, &g, &u).unwrap(), frac(0, 1));
    assert_eq!(guarantee_pair_envy(&h, 2, 1, &g, &u).unwrap(), frac(1, 1));
    assert!(BoundsQuery::new(1, [(1, frac(0, 1))]).is_err());
    assert!(BoundsQuery::new(1, [(2, frac(3, 2))]).is_err());
}

#[test]
fn cut_and_choose_guarantees() {
    let (bc, gcc) = gen_cut_and_choose();
    for seed in 0..10 {
        let vals: Vec<Valuation> = (0..2)
            .map(|i| random_valuation(seed * 2 + i, 2).unwrap())
            .collect();
        let g = build_grid(&vals, 2).unwrap();
        let q = BoundsQuery::new(2, [(1, frac(0, 1))]).unwrap();
        assert!(can_guarantee(&bc.protocol, &q, &g, &vals).unwrap());
        assert!(can_guarantee(&gcc.protocol, &q, &g, &vals).unwrap());
    }
    let u = uniform(2);
    let g = build_grid(&u, 2).unwrap();
    assert_eq!(
        guarantee_value(&bc.protocol, 1, &g, &u).unwrap(),
        frac(1, 2)
    );
    assert_eq!(
        guarantee_value(&bc.protocol, 2, &g, &u).unwrap(),
        frac(1, 2)
    );
    assert_eq!(
        guarantee_total_envy(&bc.protocol, 1, &g, &u).unwrap(),
        frac(0, 1)
    );
}

#[test]
fn dubins_spanier_three_is_proportional_on_a_third_grid() {
    let p = gen_dubins_spanier(3, Model::Gcc).unwrap().protocol;
    let u = uniform(3);
    let g = build_grid(&u, 3)
        .unwrap()
        .with_points([frac(5, 6)])
        .unwrap();
    for i in 1..=3 {
        assert!(
            guarantee_value(&p, i, &g, &u).unwrap() >= frac(1, 3),
            "agent {i}"
        );
    }
}

#[test]
fn check_equiv_examples() {
    let (bc, gcc) = gen_cut_and_choose();
    let u = uniform(2);
    let g = build_grid(&u, 4).unwrap();
    let o = Oracle::new(&g, &u);
    for notion in [
        Notion::Value,
        Notion::Total,
        Notion::Pairwise,
        Notion::Strong,
    ] {
        let r = check_equiv(&bc.protocol, &bc.protocol, notion, &o, 8).unwrap();
        assert!(r.equivalent);
        let r = check_equiv(&bc.protocol, &gcc.protocol, notion, &o, 8).unwrap();
        assert!(r.equivalent, "{}", r.to_json());
    }
    let r = check_equiv(&all_to(1, 2), &all_to(2, 2), Notion::Value, &o, 0).unwrap();
    assert!(!r.equivalent);
    assert_eq!(r.disagreements.len(), 2);
    assert!(r.to_json().contains("\"notion\": \"VALUE\""));
    assert!(check_equiv(&all_to(1, 2), &all_to(1, 3), Notion::Value, &o, 0).is_err());
}

#[test]
fn budget_overrun_is_inconclusive() {
    let p = gen_dubins_spanier(3, Model::Gcc).unwrap().protocol;
    let u = uniform(3);
    let g = build_grid(&u, 4).unwrap();
    let o = Oracle::new(&g, &u).with_budget(10);
    assert!(matches!(
        o.guarantee_value(&p, 1),
        Err(OracleError::Inconclusive { budget: 10 })
    ));
}

#[test]
fn weaker_bounds_stay_guaranteeable() {
    let (bc, _) = gen_cut_and_choose();
    let vals: Vec<Valuation> = (0..2)
        .map(|i| random_valuation(40 + i, 3).unwrap())
        .collect();
    let g = build_grid(&vals, 3).unwrap();
    let levels = [frac(0, 1), frac(1, 4), frac(1, 2), frac(1, 1)];
    for agent in 1..=2 {
        let other = 3 - agent;
        let answers: Vec<bool> = levels
            .iter()
            .map(|m| {
                let q = BoundsQuery::new(agent, [(other, m.clone())]).unwrap();
                can_guarantee(&bc.protocol, &q, &g, &vals).unwrap()
            })
            .collect();
        assert!(answers.windows(2).all(|w| !w[0] || w[1]), "{answers:?}");
    }
}

#[test]
fn backward_induction_matches_brute_force() {
    common::check_against_brute_force(20);
}
