#![allow(dead_code)]

use cake_core::dsl::parse;
use cake_core::exec::Machine;
use cake_core::fixtures::*;
use cake_core::ir::Protocol;
use cake_core::oracle::{
    actions, bound_samples, can_guarantee, guarantee_value, BoundsQuery, Grid,
};
use cake_core::transform::bc_to_gcc;
use cake_core::valuation::{cross_values, random_valuation};
use cake_core::{frac, Allocation, Fraction, Valuation};
use proptest::prelude::*;

/// Every pure strategy of `agent`, each given as the outcomes it allows.
pub fn strategies(m: &Machine<'_>, agent: usize, grid: &Grid) -> Vec<Vec<Allocation>> {
    let Some(d) = m.decision() else {
        return vec![vec![m.allocation().unwrap().clone()]];
    };
    let subs: Vec<Vec<Vec<Allocation>>> = actions(&d.kind, grid)
        .iter()
        .map(|a| {
            let mut next = m.clone();
            next.apply(a).unwrap();
            strategies(&next, agent, grid)
        })
        .collect();
    if d.agent == agent {
        return subs.into_iter().flatten().collect();
    }
    let mut acc: Vec<Vec<Allocation>> = vec![Vec::new()];
    for s in subs {
        acc = acc
            .iter()
            .flat_map(|a| {
                s.iter().map(move |b| {
                    let mut u = a.clone();
                    u.extend(b.iter().cloned());
                    u
                })
            })
            .collect();
    }
    acc
}

pub fn brute_value(p: &Protocol, agent: usize, grid: &Grid, vals: &[Valuation]) -> Fraction {
    let m = Machine::new(p).unwrap();
    strategies(&m, agent, grid)
        .iter()
        .map(|outs| {
            outs.iter()
                .map(|a| cross_values(a, vals).unwrap()[agent - 1][agent - 1].clone())
                .min()
                .unwrap()
        })
        .max()
        .unwrap()
}

pub fn brute_bounds(p: &Protocol, q: &BoundsQuery, grid: &Grid, vals: &[Valuation]) -> bool {
    let m = Machine::new(p).unwrap();
    let i = q.agent;
    strategies(&m, i, grid).iter().any(|outs| {
        outs.iter().all(|a| {
            let c = cross_values(a, vals).unwrap();
            q.bounds
                .iter()
                .all(|(j, b)| (&c[i - 1][j - 1] - &c[i - 1][i - 1]) <= *b)
        })
    })
}

pub fn decision_points(p: &Protocol) -> usize {
    let s = cake_core::ir::stats(p);
    s.cuts + s.chooses
}

/// Random protocol of any model, cycling through the models by seed.
pub fn random_protocol(seed: u64) -> Protocol {
    match seed % 5 {
        0 => Protocol::Bc(random_bc_tree(seed, 3, 25)),
        1 => Protocol::Dag(random_bc_dag(seed, 3, 25)),
        2 => Protocol::Ext(random_ext_tree(seed, 3, 25)),
        3 => Protocol::Gcc(random_gcc_tree(seed, 3, 25)),
        _ => Protocol::Gcc(bc_to_gcc(&random_bc_tree(seed, 2, 10)).unwrap()),
    }
}

/// Parses `text`; on failure every diagnostic must carry a span inside it.
pub fn check_spans(text: &str) {
    if let Err(errs) = parse(text) {
        assert!(!errs.is_empty());
        for d in errs {
            assert!(
                d.span.start <= d.span.end && d.span.end <= text.len(),
                "{d:?}"
            );
            assert!(d.span.line >= 1 && d.span.column >= 1);
            let _ = d.render(text);
        }
    }
}

/// Piecewise-constant valuations with up to five pieces on a 1/60 lattice.
pub fn arb_valuation() -> impl Strategy<Value = Valuation> {
    (
        proptest::collection::btree_set(1i64..60, 0..5),
        proptest::collection::vec(0i64..20, 6),
    )
        .prop_filter_map("needs positive mass", |(cuts, weights)| {
            let mut bps = vec![0i64];
            bps.extend(cuts);
            bps.push(60);
            let w = &weights[..bps.len() - 1];
            let mass: i64 = w
                .iter()
                .zip(bps.windows(2))
                .map(|(d, s)| d * (s[1] - s[0]))
                .sum();
            if mass == 0 {
                return None;
            }
            let breakpoints = bps.iter().map(|b| Fraction::new(*b, 60)).collect();
            let densities = w.iter().map(|d| Fraction::new(d * 60, mass)).collect();
            Valuation::new(breakpoints, densities).ok()
        })
}

/// A point of the cake on a 1/120 lattice.
pub fn arb_point() -> impl Strategy<Value = Fraction> {
    (0i64..=120).prop_map(|k| Fraction::new(k, 120))
}

/// A value fraction in [0, 1].
pub fn arb_lambda() -> impl Strategy<Value = Fraction> {
    (1i64..=24).prop_flat_map(|q| (0..=q).prop_map(move |p| Fraction::new(p, q)))
}

/// Compares the oracle with exhaustive strategy enumeration on `count`
/// random protocols with at most 8 decision points.
pub fn check_against_brute_force(count: usize) {
    let mut checked = 0;
    let mut seed = 0;
    while checked < count {
        seed += 1;
        let p = match seed % 3 {
            0 => Protocol::Bc(random_bc_tree(seed, 2, 9)),
            1 => Protocol::Ext(random_ext_tree(seed, 2, 9)),
            _ => Protocol::Gcc(random_gcc_tree(seed, 2, 6)),
        };
        if decision_points(&p) > 8 {
            continue;
        }
        let vals: Vec<Valuation> = (0..2)
            .map(|i| random_valuation(seed * 5 + i, 2).unwrap())
            .collect();
        let g = Grid::new(
            vals.iter()
                .flat_map(|v| v.breakpoints().to_vec())
                .chain([frac(1, 2)]),
        )
        .unwrap();
        for agent in 1..=2 {
            let fast = guarantee_value(&p, agent, &g, &vals).unwrap();
            assert_eq!(fast, brute_value(&p, agent, &g, &vals), "seed {seed}");
            for q in bound_samples(2, agent, 4, seed) {
                let fast = can_guarantee(&p, &q, &g, &vals).unwrap();
                assert_eq!(fast, brute_bounds(&p, &q, &g, &vals), "seed {seed} {q:?}");
            }
        }
        checked += 1;
    }
}
