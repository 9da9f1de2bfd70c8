//! Piecewise-constant valuations on the unit cake, allocations and envy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::fraction::Fraction;

/// A closed interval `[lo, hi]` of the cake. `lo == hi` is the empty piece.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Fraction,
    pub hi: Fraction,
}

impl Interval {
    pub fn new(lo: Fraction, hi: Fraction) -> Self {
        Interval { lo, hi }
    }

    pub fn unit() -> Self {
        Interval::new(Fraction::zero(), Fraction::one())
    }

    pub fn is_empty(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Fraction) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn length(&self) -> Fraction {
        &self.hi - &self.lo
    }
}

#[derive(Serialize, Deserialize)]
struct RawValuation {
    breakpoints: Vec<Fraction>,
    densities: Vec<Fraction>,
}

/// Density that is constant on each segment `[breakpoints[k], breakpoints[k+1]]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawValuation", into = "RawValuation")]
pub struct Valuation {
    breakpoints: Vec<Fraction>,
    densities: Vec<Fraction>,
}

impl TryFrom<RawValuation> for Valuation {
    type Error = DomainError;
    fn try_from(raw: RawValuation) -> Result<Self, Self::Error> {
        Valuation::new(raw.breakpoints, raw.densities)
    }
}

impl From<Valuation> for RawValuation {
    fn from(v: Valuation) -> Self {
        RawValuation {
            breakpoints: v.breakpoints,
            densities: v.densities,
        }
    }
}

fn check_interval(a: &Fraction, b: &Fraction) -> Result<(), DomainError> {
    if a.is_negative() || a > b || b > &Fraction::one() {
        return Err(DomainError::BadInterval {
            a: a.to_string(),
            b: b.to_string(),
        });
    }
    Ok(())
}

impl Valuation {
    pub fn new(breakpoints: Vec<Fraction>, densities: Vec<Fraction>) -> Result<Self, DomainError> {
        let bad = |m: &str| Err(DomainError::InvalidValuation(m.to_string()));
        if breakpoints.len() < 2 || densities.len() + 1 != breakpoints.len() {
            return bad("need n+1 breakpoints for n densities, n >= 1");
        }
        if !breakpoints[0].is_zero() || breakpoints[breakpoints.len() - 1] != Fraction::one() {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must be strictly increasing");
        }
        if densities.iter().any(Fraction::is_negative) {
            return bad("densities must be non-negative");
        }
        let total: Fraction = densities
            .iter()
            .zip(breakpoints.windows(2))
            .map(|(d, w)| d * (&w[1] - &w[0]))
            .sum();
        if total != Fraction::one() {
            return Err(DomainError::InvalidValuation(format!(
                "total value is {total}, expected 1"
            )));
        }
        Ok(Valuation {
            breakpoints,
            densities,
        })
    }

    pub fn uniform() -> Self {
        Valuation {
            breakpoints: vec![Fraction::zero(), Fraction::one()],
            densities: vec![Fraction::one()],
        }
    }

    pub fn breakpoints(&self) -> &[Fraction] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Fraction] {
        &self.densities
    }

    fn segments(&self) -> impl Iterator<Item = (&Fraction, &Fraction, &Fraction)> {
        self.breakpoints
            .windows(2)
            .zip(&self.densities)
            .map(|(w, d)| (&w[0], &w[1], d))
    }

    /// Value of `[a, b]`.
    pub fn eval(&self, a: &Fraction, b: &Fraction) -> Result<Fraction, DomainError> {
        check_interval(a, b)?;
        Ok(self.eval_unchecked(a, b))
    }

    fn eval_unchecked(&self, a: &Fraction, b: &Fraction) -> Fraction {
        let mut total = Fraction::zero();
        for (lo, hi, d) in self.segments() {
            if hi <= a {
                continue;
            }
            if lo >= b {
                break;
            }
            let s = lo.clone().max(a.clone());
            let e = hi.clone().min(b.clone());
            total += &(d * (e - s));
        }
        total
    }

    pub fn eval_interval(&self, iv: &Interval) -> Result<Fraction, DomainError> {
        self.eval(&iv.lo, &iv.hi)
    }

    /// Leftmost `c` in `[a, b]` with `eval(a, c) = lambda * eval(a, b)`.
    pub fn mark(
        &self,
        a: &Fraction,
        b: &Fraction,
        lambda: &Fraction,
    ) -> Result<Fraction, DomainError> {
        check_interval(a, b)?;
        if !lambda.in_unit_interval() {
            return Err(DomainError::BadLambda(lambda.to_string()));
        }
        let target = lambda * self.eval_unchecked(a, b);
        if target.is_zero() {
            return Ok(a.clone());
        }
        let mut acc = Fraction::zero();
        for (lo, hi, d) in self.segments() {
            if hi <= a {
                continue;
            }
            if lo >= b {
                break;
            }
            if d.is_zero() {
                continue;
            }
            let s = lo.clone().max(a.clone());
            let e = hi.clone().min(b.clone());
            let val = d * (&e - &s);
            if &acc + &val >= target {
                return Ok(s + (&target - &acc) / d);
            }
            acc += &val;
        }
        Ok(b.clone())
    }

    /// Value of a finite union of intervals.
    pub fn value_of(&self, piece: &[Interval]) -> Fraction {
        piece
            .iter()
            .map(|iv| self.eval_unchecked(&iv.lo, &iv.hi))
            .sum()
    }
}

/// Deterministic random valuation with `segments` pieces.
///
/// Breakpoints sit on a 1/100 (or 1/1000 for more than 99 segments) lattice and
/// densities are normalised so every denominator stays at or below 10^4.
pub fn random_valuation(seed: u64, segments: usize) -> Result<Valuation, DomainError> {
    if segments < 1 {
        return Err(DomainError::Invalid("segments must be >= 1".into()));
    }
    if segments == 1 {
        return Ok(Valuation::uniform());
    }
    let lattice: i64 = if segments <= 99 { 100 } else { 1000 };
    if segments as i64 > lattice - 1 {
        return Err(DomainError::Invalid(format!(
            "at most {} segments supported",
            lattice - 1
        )));
    }
    let weight_cap = 10_000 / lattice - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<i64> =
        rand::seq::index::sample(&mut rng, (lattice - 1) as usize, segments - 1)
            .into_iter()
            .map(|i| i as i64 + 1)
            .collect();
    cuts.sort_unstable();
    let mut points = vec![0];
    points.extend(cuts);
    points.push(lattice);
    let widths: Vec<i64> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let mut weights: Vec<i64> = (0..segments)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0
            } else {
                rng.gen_range(1..=weight_cap)
            }
        })
        .collect();
    if weights.iter().all(|&w| w == 0) {
        weights[0] = 1;
    }
    let mass: i64 = weights.iter().zip(&widths).map(|(t, w)| t * w).sum();
    let breakpoints = points.iter().map(|&p| Fraction::new(p, lattice)).collect();
    let densities = weights
        .iter()
        .map(|&t| Fraction::new(t * lattice, mass))
        .collect();
    Valuation::new(breakpoints, densities)
}

/// Pieces of cake for agents `1..=n` (stored at index `agent - 1`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    pub pieces: Vec<Vec<Interval>>,
}

impl Allocation {
    pub fn empty(agents: usize) -> Self {
        Allocation {
            pieces: vec![Vec::new(); agents],
        }
    }

    pub fn agents(&self) -> usize {
        self.pieces.len()
    }

    pub fn give(&mut self, agent: usize, iv: Interval) {
        self.pieces[agent - 1].push(iv);
        self.pieces[agent - 1].sort();
    }

    pub fn piece(&self, agent: usize) -> &[Interval] {
        &self.pieces[agent - 1]
    }

    /// Same cake, with each agent's piece sorted, empty intervals dropped and
    /// abutting intervals merged. Two allocations give every agent the same
    /// cake exactly when their canonical forms are equal.
    pub fn canonical(&self) -> Allocation {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut ivs: Vec<Interval> =
                    p.iter().filter(|iv| !iv.is_empty()).cloned().collect();
                ivs.sort();
                let mut merged: Vec<Interval> = Vec::new();
                for iv in ivs {
                    match merged.last_mut() {
                        Some(last) if last.hi >= iv.lo => {
                            if iv.hi > last.hi {
                                last.hi = iv.hi;
                            }
                        }
                        _ => merged.push(iv),
                    }
                }
                merged
            })
            .collect();
        Allocation { pieces }
    }

    /// Checks full coverage of `[0, 1]` with pairwise-disjoint interiors.
    pub fn check(&self) -> Result<(), DomainError> {
        let mut all: Vec<&Interval> = Vec::new();
        for p in &self.pieces {
            for iv in p {
                if iv.lo.is_negative() || iv.lo > iv.hi || iv.hi > Fraction::one() {
                    return Err(DomainError::Invalid(format!(
                        "bad interval [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
                if !iv.is_empty() {
                    all.push(iv);
                }
            }
        }
        all.sort();
        let mut cursor = Fraction::zero();
        for iv in all {
            if iv.lo != cursor {
                return Err(DomainError::Invalid(format!(
                    "allocation has a gap or overlap at {cursor}"
                )));
            }
            cursor = iv.hi.clone();
        }
        if cursor != Fraction::one() {
            return Err(DomainError::Invalid(format!(
                "cake after {cursor} is unallocated"
            )));
        }
        Ok(())
    }
}

/// Pairwise envy; entry `[i][j]` is agent `i+1`'s envy toward agent `j+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvyMatrix(pub Vec<Vec<Fraction>>);

impl EnvyMatrix {
    pub fn get(&self, i: usize, j: usize) -> &Fraction {
        &self.0[i - 1][j - 1]
    }

    pub fn is_envy_free(&self) -> bool {
        self.0.iter().flatten().all(Fraction::is_zero)
    }
}

/// `V_i(X_j)` for every agent pair.
pub fn cross_values(
    alloc: &Allocation,
    vals: &[Valuation],
) -> Result<Vec<Vec<Fraction>>, DomainError> {
    if alloc.agents() != vals.len() {
        return Err(DomainError::AgentMismatch {
            expected: alloc.agents(),
            got: vals.len(),
        });
    }
    Ok(vals
        .iter()
        .map(|v| alloc.pieces.iter().map(|p| v.value_of(p)).collect())
        .collect())
}

pub fn envy(alloc: &Allocation, vals: &[Valuation]) -> Result<EnvyMatrix, DomainError> {
    let cross = cross_values(alloc, vals)?;
    let n = vals.len();
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = &cross[i][j] - &cross[i][i];
                    if d.is_negative() {
                        Fraction::zero()
                    } else {
                        d
                    }
                })
                .collect()
        })
        .collect();
    Ok(EnvyMatrix(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraction::frac;

    fn half_heavy() -> Valuation {
        Valuation::new(
            vec![frac(0, 1), frac(1, 2), frac(1, 1)],
            vec![frac(2, 1), frac(0, 1)],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let u = Valuation::uniform();
        assert_eq!(u.eval(&frac(0, 1), &frac(1, 1)).unwrap(), Fraction::one());
        assert_eq!(u.eval(&frac(1, 3), &frac(1, 3)).unwrap(), Fraction::zero());
        assert_eq!(
            half_heavy().eval(&frac(1, 4), &frac(3, 4)).unwrap(),
            frac(1, 2)
        );
    }

    #[test]
    fn eval_rejects_bad_ranges() {
        let u = Valuation::uniform();
        assert!(u.eval(&frac(1, 2), &frac(1, 4)).is_err());
        assert!(u.eval(&frac(-1, 2), &frac(1, 4)).is_err());
        assert!(u.eval(&frac(0, 1), &frac(3, 2)).is_err());
    }

    #[test]
    fn mark_examples() {
        let u = Valuation::uniform();
        assert_eq!(
            u.mark(&frac(0, 1), &frac(1, 1), &frac(1, 2)).unwrap(),
            frac(1, 2)
        );
        assert_eq!(
            u.mark(&frac(1, 5), &frac(3, 5), &frac(0, 1)).unwrap(),
            frac(1, 5)
        );
        let v = half_heavy();
        let c = v.mark(&frac(0, 1), &frac(1, 1), &frac(1, 2)).unwrap();
        assert_eq!(c, frac(1, 4));
        assert_eq!(v.eval(&frac(0, 1), &c).unwrap(), frac(1, 2));
        // leftmost point on the zero plateau
        assert_eq!(
            v.mark(&frac(0, 1), &frac(1, 1), &frac(1, 1)).unwrap(),
            frac(1, 2)
        );
        assert!(v.mark(&frac(0, 1), &frac(1, 1), &frac(3, 2)).is_err());
    }

    #[test]
    fn rejects_invalid_valuations() {
        assert!(Valuation::new(vec![frac(0, 1), frac(1, 1)], vec![frac(1, 2)]).is_err());
        assert!(Valuation::new(
            vec![frac(0, 1), frac(1, 2), frac(1, 1)],
            vec![frac(3, 1), frac(-1, 1)]
        )
        .is_err());
        assert!(Valuation::new(
            vec![frac(0, 1), frac(1, 1), frac(1, 1)],
            vec![frac(1, 1), frac(0, 1)]
        )
        .is_err());
    }

    #[test]
    fn random_valuations() {
        assert_eq!(random_valuation(3, 1).unwrap(), Valuation::uniform());
        assert_eq!(
            random_valuation(9, 5).unwrap(),
            random_valuation(9, 5).unwrap()
        );
        let v = random_valuation(7, 4).unwrap();
        assert_eq!(v.eval(&frac(0, 1), &frac(1, 1)).unwrap(), Fraction::one());
        assert_eq!(v.densities().len(), 4);
        let cap = num_bigint::BigInt::from(10_000);
        for s in 0..50 {
            let v = random_valuation(s, 1 + (s as usize % 12)).unwrap();
            assert!(v
                .breakpoints()
                .iter()
                .chain(v.densities())
                .all(|f| f.denom() <= &cap));
        }
        assert!(random_valuation(1, 0).is_err());
    }

    #[test]
    fn envy_examples() {
        let vals = vec![Valuation::uniform(), Valuation::uniform()];
        let mut halves = Allocation::empty(2);
        halves.give(1, Interval::new(frac(0, 1), frac(1, 2)));
        halves.give(2, Interval::new(frac(1, 2), frac(1, 1)));
        assert!(envy(&halves, &vals).unwrap().is_envy_free());

        let mut all = Allocation::empty(2);
        all.give(1, Interval::unit());
        let e = envy(&all, &vals).unwrap();
        assert_eq!(e.get(2, 1), &Fraction::one());
        assert_eq!(e.get(1, 2), &Fraction::zero());
        assert!(envy(&all, &vals[..1]).is_err());
    }

    #[test]
    fn allocation_checks() {
        let mut a = Allocation::empty(2);
        a.give(1, Interval::new(frac(0, 1), frac(1, 3)));
        a.give(2, Interval::new(frac(1, 3), frac(1, 3)));
        a.give(2, Interval::new(frac(1, 3), frac(1, 1)));
        assert!(a.check().is_ok());
        let mut gap = Allocation::empty(2);
        gap.give(1, Interval::new(frac(0, 1), frac(1, 3)));
        gap.give(2, Interval::new(frac(1, 2), frac(1, 1)));
        assert!(gap.check().is_err());
        let mut c = Allocation::empty(1);
        c.give(1, Interval::new(frac(1, 2), frac(1, 1)));
        c.give(1, Interval::new(frac(0, 1), frac(1, 2)));
        c.give(1, Interval::new(frac(1, 2), frac(1, 2)));
        assert_eq!(c.canonical().pieces[0], vec![Interval::unit()]);
    }
}
