mod common;

use cake_core::dsl::{parse, parse_unchecked, print};
use cake_core::ir::Protocol;
use cake_core::library::*;
use common::{check_spans, random_protocol};
use proptest::prelude::*;

const CUT_AND_CHOOSE: &str = "
; agent 1 cuts, agent 2 picks a side
(bc :agents 2
  (cut :agent 1 :piece 1
    (choose :agent 2
      (leaf (1 -> 2) (2 -> 1))
      (leaf (1 -> 1) (2 -> 2)))))
";

fn generators() -> Vec<Protocol> {
    let (bc, gcc) = gen_cut_and_choose();
    let mut all = vec![
        bc.protocol,
        gcc.protocol,
        gen_selfridge_conway_bc().protocol,
        gen_selfridge_conway_gcc().protocol,
    ];
    for n in 2..=4 {
        all.push(gen_dubins_spanier(n, Model::Gcc).unwrap().protocol);
        all.push(gen_dubins_spanier(n, Model::ExtBc).unwrap().protocol);
    }
    for n in [2, 4] {
        all.push(gen_even_paz(n, Model::Gcc).unwrap().protocol);
        all.push(gen_even_paz(n, Model::ExtBc).unwrap().protocol);
    }
    all
}

#[test]
fn trivial_protocol_is_one_line() {
    let p = parse("(bc :agents 1 (leaf (1 -> 1)))").unwrap();
    assert_eq!(print(&p), "(bc :agents 1 (leaf (1 -> 1)))\n");
}

#[test]
fn cut_and_choose_source_matches_generator() {
    let p = parse(CUT_AND_CHOOSE).unwrap();
    assert!(p.structurally_eq(&gen_cut_and_choose().0.protocol));
}

#[test]
fn unbalanced_parenthesis_is_located() {
    let text = "(bc :agents 1\n  (leaf (1 -> 1))";
    let errs = parse(text).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(
        (errs[0].span.line, errs[0].span.column, errs[0].span.start),
        (1, 1, 0)
    );
    let text = "(bc :agents 1 (leaf (1 -> 1))))";
    let errs = parse(text).unwrap_err();
    assert_eq!(errs.len(), 1);
    assert_eq!(errs[0].span.start, text.len() - 1);
    assert!(errs[0].render(text).contains('^'));
}

#[test]
fn validation_errors_point_at_nodes() {
    let text = "(bc :agents 2\n  (cut :agent 3 :piece 1\n    (leaf (1 -> 1) (2 -> 2))))";
    let errs = parse(text).unwrap_err();
    assert!(
        errs.iter().any(|d| d.span.line == 2 && d.span.column == 3),
        "{errs:?}"
    );
    assert!(parse_unchecked(text).is_ok());
}

#[test]
fn labels_resolve_and_duplicates_fail() {
    let ok = "(extbc :agents 2 (cut :agent 1 :id a :left origin :right end
        (cut :agent 2 :id b :left a :right end (leaf (origin a -> 1) (a b -> 2) (b end -> 1)))))";
    assert!(matches!(parse(ok).unwrap(), Protocol::Ext(_)));
    let dup = ok.replace(":id b", ":id a");
    assert!(parse(&dup).unwrap_err()[0].message.contains("duplicate"));
    let unknown = ok.replace(":left a", ":left zz");
    assert!(parse(&unknown).unwrap_err()[0]
        .message
        .contains("unknown id"));
}

#[test]
fn dag_sharing_survives_round_trip() {
    let text = "(dag :agents 2 (choose :agent 1 (leaf :id x (1 -> 2)) (ref x)))";
    let p = parse(text).unwrap();
    let Protocol::Dag(d) = &p else { panic!() };
    assert_eq!(d.nodes.len(), 2);
    assert!(parse(&print(&p)).unwrap().structurally_eq(&p));
}

#[test]
fn generators_round_trip() {
    for p in generators() {
        let text = print(&p);
        let back = parse(&text).unwrap_or_else(|e| panic!("{}: {:?}", p.model(), e));
        assert!(back.structurally_eq(&p), "{}", p.model());
        assert_eq!(print(&back), text);
    }
}

#[test]
fn random_protocols_round_trip() {
    for seed in 0..500 {
        let p = random_protocol(seed);
        let text = print(&p);
        let back = parse(&text).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{text}"));
        assert!(back.structurally_eq(&p), "seed {seed}");
        assert_eq!(print(&back), text, "seed {seed}");
    }
}

#[test]
fn deep_nesting_is_rejected_cleanly() {
    let text = "(".repeat(100_000);
    assert!(parse(&text).is_err());
    let mut deep = String::from("(bc :agents 1 ");
    for _ in 0..5000 {
        deep.push_str("(choose :agent 1 ");
    }
    deep.push_str("(leaf (1 -> 1))");
    deep.push_str(&")".repeat(5001));
    assert!(parse(&deep).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn mutated_sources_never_panic(
        seed in 0u64..60,
        edits in proptest::collection::vec((any::<prop::sample::Index>(), 0u8..4, any::<char>()), 1..6),
    ) {
        let mut chars: Vec<char> = print(&random_protocol(seed)).chars().collect();
        for (at, kind, c) in edits {
            if chars.is_empty() {
                break;
            }
            let i = at.index(chars.len());
            match kind {
                0 => { chars.remove(i); }
                1 => chars.insert(i, c),
                2 => chars[i] = c,
                _ => chars.insert(i, ['(', ')', ':', '9', ' '][i % 5]),
            }
        }
        check_spans(&chars.iter().collect::<String>());
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        check_spans(&text);
    }

    #[test]
    fn token_soup_never_panics(
        toks in proptest::collection::vec(
            prop::sample::select(vec![
                "(", ")", "bc", "dag", "extbc", "gcc", "cut", "choose", "leaf", "gcc-cut",
                "gcc-choose", "if", "else", "ref", ":agents", ":agent", ":piece", ":id",
                ":left", ":right", ":mode", "->", "origin", "end", "a", "0", "1", "2",
                "99999999999999999999", "<", "chose", "cut-in", "and", "or", "not",
            ]),
            0..60,
        )
    ) {
        check_spans(&toks.join(" "));
    }
}

#[test]
fn self_reference_is_a_diagnostic() {
    let text = "(dag :agents 1 (choose :agent 1 :id x (ref x)))";
    assert!(!parse(text).unwrap_err().is_empty());
    let text = "(gcc :agents 1 (gcc-cut :agent 1 :id c (origin c) (if ((chose c 1) (leaf)) (else (leaf)))))";
    check_spans(text);
}
