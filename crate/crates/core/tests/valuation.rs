mod common;

use cake_core::valuation::{envy, random_valuation};
use cake_core::{frac, Allocation, Fraction, Interval, Valuation};
use common::{arb_lambda, arb_point, arb_valuation};
use proptest::prelude::*;

fn sorted(a: Fraction, b: Fraction) -> (Fraction, Fraction) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

proptest! {
    #[test]
    fn whole_cake_is_worth_one(v in arb_valuation()) {
        prop_assert_eq!(v.eval(&frac(0, 1), &frac(1, 1)).unwrap(), frac(1, 1));
    }

    #[test]
    fn mark_lands_inside_and_is_leftmost(v in arb_valuation(), a in arb_point(), b in arb_point(), l in arb_lambda()) {
        let (a, b) = sorted(a, b);
        let m = v.mark(&a, &b, &l).unwrap();
        prop_assert!(a <= m && m <= b);
        let target = &l * &v.eval(&a, &b).unwrap();
        prop_assert_eq!(v.eval(&a, &m).unwrap(), target.clone());
        // any point strictly left of the mark falls short
        if m > a {
            let left = (&a + &m) * Fraction::new(1, 2);
            prop_assert!(v.eval(&a, &left).unwrap() < target);
        }
    }

    #[test]
    fn pieces_add_up(v in arb_valuation(), a in arb_point(), b in arb_point()) {
        let (a, b) = sorted(a, b);
        let parts = [
            Interval::new(frac(0, 1), a.clone()),
            Interval::new(a.clone(), b.clone()),
            Interval::new(b, frac(1, 1)),
        ];
        prop_assert_eq!(v.value_of(&parts), frac(1, 1));
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let half = frac(1, 2);
    assert!(Valuation::new(vec![frac(0, 1), frac(1, 1)], vec![frac(2, 1)]).is_err());
    assert!(Valuation::new(vec![frac(0, 1), half.clone()], vec![frac(2, 1)]).is_err());
    assert!(Valuation::new(
        vec![frac(0, 1), half.clone(), frac(1, 1)],
        vec![frac(-1, 1), frac(3, 1)]
    )
    .is_err());
    let u = Valuation::uniform();
    assert!(u.eval(&half, &frac(1, 4)).is_err());
    assert!(u.eval(&frac(0, 1), &frac(3, 2)).is_err());
    assert!(u.mark(&frac(0, 1), &frac(1, 1), &frac(3, 2)).is_err());
}

#[test]
fn envy_of_a_split() {
    let lean_left = Valuation::new(
        vec![frac(0, 1), frac(1, 2), frac(1, 1)],
        vec![frac(3, 2), frac(1, 2)],
    )
    .unwrap();
    let mut a = Allocation::empty(2);
    a.give(1, Interval::new(frac(1, 2), frac(1, 1)));
    a.give(2, Interval::new(frac(0, 1), frac(1, 2)));
    let m = envy(&a, &[lean_left, Valuation::uniform()]).unwrap();
    assert_eq!(m.get(1, 2), &frac(1, 2));
    assert_eq!(m.get(2, 1), &frac(0, 1));
    assert!(!m.is_envy_free());
}

#[test]
fn random_valuations_are_seeded() {
    for seed in 0..50 {
        let v = random_valuation(seed, 4).unwrap();
        assert_eq!(v, random_valuation(seed, 4).unwrap());
        assert_eq!(v.eval(&frac(0, 1), &frac(1, 1)).unwrap(), frac(1, 1));
    }
}
