//! Guarantees an agent can secure against everyone else, with all cuts
//! restricted to a finite grid of positions.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{DomainError, OracleError};
use crate::exec::{Action, DecisionKind, Machine, StateKey};
use crate::fraction::Fraction;
use crate::ir::Protocol;
use crate::valuation::{cross_values, Allocation, Valuation};

/// Default cap on evaluated game states.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Sorted candidate cut positions, always containing 0 and 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Grid {
    points: Vec<Fraction>,
}

impl Grid {
    pub fn new(points: impl IntoIterator<Item = Fraction>) -> Result<Grid, DomainError> {
        let mut points: Vec<Fraction> = points.into_iter().collect();
        if let Some(p) = points.iter().find(|p| !p.in_unit_interval()) {
            return Err(DomainError::Invalid(format!(
                "grid point {p} outside [0, 1]"
            )));
        }
        points.push(Fraction::zero());
        points.push(Fraction::one());
        points.sort();
        points.dedup();
        Ok(Grid { points })
    }

    pub fn points(&self) -> &[Fraction] {
        &self.points
    }

    /// The grid with `extra` points added.
    pub fn with_points(
        &self,
        extra: impl IntoIterator<Item = Fraction>,
    ) -> Result<Grid, DomainError> {
        Grid::new(self.points.iter().cloned().chain(extra))
    }

    /// Grid points inside `[lo, hi]`, or `lo` alone if there are none.
    pub fn within(&self, lo: &Fraction, hi: &Fraction) -> Vec<Fraction> {
        let start = self.points.partition_point(|p| p < lo);
        let end = self.points.partition_point(|p| p <= hi);
        if start >= end {
            vec![lo.clone()]
        } else {
            self.points[start..end].to_vec()
        }
    }

    /// Whether every breakpoint of every valuation is a grid point.
    pub fn contains_breakpoints(&self, vals: &[Valuation]) -> bool {
        vals.iter()
            .flat_map(|v| v.breakpoints())
            .all(|b| self.points.binary_search(b).is_ok())
    }
}

/// 0, 1, every breakpoint, and every `p/q`-mark (`q <= cap`) of every agent
/// inside each pair of adjacent points of that set.
pub fn build_grid(vals: &[Valuation], cap: u32) -> Result<Grid, DomainError> {
    if cap < 2 {
        return Err(DomainError::Invalid(format!(
            "denominator cap {cap} is below 2"
        )));
    }
    let base = Grid::new(vals.iter().flat_map(|v| v.breakpoints().iter().cloned()))?;
    let mut extra = Vec::new();
    for w in base.points.windows(2) {
        for v in vals {
            for q in 2..=cap as i64 {
                for p in 1..q {
                    extra.push(v.mark(&w[0], &w[1], &Fraction::new(p, q))?);
                }
            }
        }
    }
    base.with_points(extra)
}

/// Envy bounds `M_j` agent `agent` wants to hold simultaneously.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsQuery {
    pub agent: usize,
    pub bounds: BTreeMap<usize, Fraction>,
}

impl BoundsQuery {
    pub fn new(
        agent: usize,
        bounds: impl IntoIterator<Item = (usize, Fraction)>,
    ) -> Result<Self, DomainError> {
        let bounds: BTreeMap<usize, Fraction> = bounds.into_iter().collect();
        if bounds.contains_key(&agent) {
            return Err(DomainError::Invalid(format!(
                "agent {agent} cannot bound envy toward itself"
            )));
        }
        if let Some((j, m)) = bounds.iter().find(|(_, m)| !m.in_unit_interval()) {
            return Err(DomainError::Invalid(format!(
                "bound {m} for agent {j} is outside [0, 1]"
            )));
        }
        Ok(BoundsQuery { agent, bounds })
    }
}

#[derive(Clone, Debug)]
enum Goal {
    Bounds(BTreeMap<usize, Fraction>),
    Value,
    PairEnvy(usize),
    TotalEnvy,
}

/// Backward induction over the grid-restricted game. The query agent
/// maximises a score at its own decisions; one adversary controlling every
/// other agent minimises it.
pub struct Oracle<'a> {
    pub grid: &'a Grid,
    pub vals: &'a [Valuation],
    pub budget: u64,
}

struct Search<'a> {
    grid: &'a Grid,
    vals: &'a [Valuation],
    agent: usize,
    goal: Goal,
    budget: u64,
    evaluated: u64,
    memo: HashMap<(StateKey, Allocation), Fraction>,
}

impl Search<'_> {
    fn score(&self, alloc: &Allocation) -> Result<Fraction, OracleError> {
        let cross = cross_values(alloc, self.vals)?;
        let row = &cross[self.agent - 1];
        let mine = &row[self.agent - 1];
        let envy = |j: usize| (&row[j - 1] - mine).max(Fraction::zero());
        Ok(match &self.goal {
            Goal::Bounds(b) => {
                if b.iter().all(|(j, m)| envy(*j) <= *m) {
                    Fraction::one()
                } else {
                    Fraction::zero()
                }
            }
            Goal::Value => mine.clone(),
            Goal::PairEnvy(j) => -envy(*j),
            Goal::TotalEnvy => -(1..=self.vals.len())
                .filter(|j| *j != self.agent)
                .map(envy)
                .sum::<Fraction>(),
        })
    }

    /// Bounds scores are 0 or 1, so a winning move ends the search at a node.
    fn settled(&self, best: Option<&Fraction>, maximise: bool) -> bool {
        match (&self.goal, best) {
            (Goal::Bounds(_), Some(b)) => b.is_zero() != maximise,
            _ => false,
        }
    }

    fn solve(&mut self, m: &Machine<'_>) -> Result<Fraction, OracleError> {
        let Some(d) = m.decision() else {
            let alloc = m.allocation().expect("finished machine has an allocation");
            return self.score(alloc);
        };
        let key = (m.state_key(), m.allocation_so_far().canonical());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        self.evaluated += 1;
        if self.evaluated > self.budget {
            return Err(OracleError::Inconclusive {
                budget: self.budget,
            });
        }
        let maximise = d.agent == self.agent;
        let mut best: Option<Fraction> = None;
        for action in actions(&d.kind, self.grid) {
            let mut next = m.clone();
            next.apply(&action)?;
            let v = self.solve(&next)?;
            best = Some(match best {
                None => v,
                Some(b) if maximise => b.max(v),
                Some(b) => b.min(v),
            });
            if self.settled(best.as_ref(), maximise) {
                break;
            }
        }
        let best = best.expect("every decision has an action");
        self.memo.insert(key, best.clone());
        Ok(best)
    }
}

/// Every grid-restricted action at a decision.
pub fn actions(kind: &DecisionKind, grid: &Grid) -> Vec<Action> {
    match kind {
        DecisionKind::Cut { options } => options
            .iter()
            .enumerate()
            .flat_map(|(piece, iv)| {
                grid.within(&iv.lo, &iv.hi)
                    .into_iter()
                    .map(move |at| Action::Cut { piece, at })
            })
            .collect(),
        DecisionKind::Branch { count } => {
            (0..*count).map(|child| Action::Branch { child }).collect()
        }
        DecisionKind::Pick { options } => (0..options.len())
            .map(|piece| Action::Pick { piece })
            .collect(),
    }
}

impl<'a> Oracle<'a> {
    pub fn new(grid: &'a Grid, vals: &'a [Valuation]) -> Self {
        Oracle {
            grid,
            vals,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    fn run(&self, p: &Protocol, agent: usize, goal: Goal) -> Result<Fraction, OracleError> {
        let n = p.agents();
        if self.vals.len() != n {
            return Err(DomainError::AgentMismatch {
                expected: n,
                got: self.vals.len(),
            }
            .into());
        }
        if agent == 0 || agent > n {
            return Err(DomainError::Invalid(format!("agent {agent} outside 1..={n}")).into());
        }
        let mut s = Search {
            grid: self.grid,
            vals: self.vals,
            agent,
            goal,
            budget: self.budget,
            evaluated: 0,
            memo: HashMap::new(),
        };
        s.solve(&Machine::new(p)?)
    }

    pub fn can_guarantee(&self, p: &Protocol, q: &BoundsQuery) -> Result<bool, OracleError> {
        if let Some(j) = q.bounds.keys().find(|j| **j == 0 || **j > p.agents()) {
            return Err(DomainError::Invalid(format!("bound for unknown agent {j}")).into());
        }
        let v = self.run(p, q.agent, Goal::Bounds(q.bounds.clone()))?;
        Ok(v == Fraction::one())
    }

    pub fn guarantee_value(&self, p: &Protocol, agent: usize) -> Result<Fraction, OracleError> {
        self.run(p, agent, Goal::Value)
    }

    pub fn guarantee_pair_envy(
        &self,
        p: &Protocol,
        i: usize,
        j: usize,
    ) -> Result<Fraction, OracleError> {
        if j == i || j == 0 || j > p.agents() {
            return Err(DomainError::Invalid(format!("no envy pair ({i}, {j})")).into());
        }
        Ok(-self.run(p, i, Goal::PairEnvy(j))?)
    }

    pub fn guarantee_total_envy(
        &self,
        p: &Protocol,
        agent: usize,
    ) -> Result<Fraction, OracleError> {
        Ok(-self.run(p, agent, Goal::TotalEnvy)?)
    }
}

pub fn can_guarantee(
    p: &Protocol,
    q: &BoundsQuery,
    grid: &Grid,
    vals: &[Valuation],
) -> Result<bool, OracleError> {
    Oracle::new(grid, vals).can_guarantee(p, q)
}

pub fn guarantee_value(
    p: &Protocol,
    agent: usize,
    grid: &Grid,
    vals: &[Valuation],
) -> Result<Fraction, OracleError> {
    Oracle::new(grid, vals).guarantee_value(p, agent)
}

pub fn guarantee_pair_envy(
    p: &Protocol,
    i: usize,
    j: usize,
    grid: &Grid,
    vals: &[Valuation],
) -> Result<Fraction, OracleError> {
    Oracle::new(grid, vals).guarantee_pair_envy(p, i, j)
}

pub fn guarantee_total_envy(
    p: &Protocol,
    agent: usize,
    grid: &Grid,
    vals: &[Valuation],
) -> Result<Fraction, OracleError> {
    Oracle::new(grid, vals).guarantee_total_envy(p, agent)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Notion {
    Value,
    Total,
    Pairwise,
    Strong,
}

impl std::str::FromStr for Notion {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "value" => Ok(Notion::Value),
            "total" => Ok(Notion::Total),
            "pairwise" => Ok(Notion::Pairwise),
            "strong" => Ok(Notion::Strong),
            _ => Err(DomainError::Invalid(format!("unknown notion `{s}`"))),
        }
    }
}

/// One query answered on both protocols.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub query: Query,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    Value { agent: usize },
    TotalEnvy { agent: usize },
    PairEnvy { agent: usize, other: usize },
    Bounds(BoundsQuery),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub notion: Notion,
    pub equivalent: bool,
    pub grid: Vec<Fraction>,
    pub checked: usize,
    /// Every query the two protocols answer differently.
    pub disagreements: Vec<Comparison>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Bound vectors for agent `agent` of `n`: every vector over
/// `{0, 1/4, 1/2, 1}` plus `random` seeded vectors.
pub fn bound_samples(n: usize, agent: usize, random: usize, seed: u64) -> Vec<BoundsQuery> {
    let others: Vec<usize> = (1..=n).filter(|j| *j != agent).collect();
    let levels = [frac4(0), frac4(1), frac4(2), frac4(4)];
    let mut out = Vec::new();
    let total = levels.len().pow(others.len() as u32);
    for mut code in 0..total {
        let mut bounds = Vec::new();
        for j in &others {
            bounds.push((*j, levels[code % levels.len()].clone()));
            code /= levels.len();
        }
        out.push(BoundsQuery::new(agent, bounds).expect("bounds in range"));
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ (agent as u64).wrapping_mul(0x9e37_79b9));
    for _ in 0..random {
        let bounds = others
            .iter()
            .map(|j| {
                let q = r.gen_range(1..=12i64);
                (*j, Fraction::new(r.gen_range(0..=q), q))
            })
            .collect::<Vec<_>>();
        out.push(BoundsQuery::new(agent, bounds).expect("bounds in range"));
    }
    out
}

fn frac4(k: i64) -> Fraction {
    Fraction::new(k, 4)
}

/// Compares two protocols under one equivalence notion on a fixed grid.
/// `random_bounds` is the number of seeded random bound vectors per agent
/// added to the lattice for `Strong`.
pub fn check_equiv(
    p1: &Protocol,
    p2: &Protocol,
    notion: Notion,
    oracle: &Oracle<'_>,
    random_bounds: usize,
) -> Result<Report, OracleError> {
    let n = p1.agents();
    if p2.agents() != n {
        return Err(DomainError::AgentMismatch {
            expected: n,
            got: p2.agents(),
        }
        .into());
    }
    let mut queries = Vec::new();
    for i in 1..=n {
        match notion {
            Notion::Value => queries.push(Query::Value { agent: i }),
            Notion::Total => queries.push(Query::TotalEnvy { agent: i }),
            Notion::Pairwise => queries.extend(
                (1..=n)
                    .filter(|j| *j != i)
                    .map(|j| Query::PairEnvy { agent: i, other: j }),
            ),
            Notion::Strong => queries.extend(
                bound_samples(n, i, random_bounds, 0)
                    .into_iter()
                    .map(Query::Bounds),
            ),
        }
    }
    let answer = |p: &Protocol, q: &Query| -> Result<String, OracleError> {
        Ok(match q {
            Query::Value { agent } => oracle.guarantee_value(p, *agent)?.to_string(),
            Query::TotalEnvy { agent } => oracle.guarantee_total_envy(p, *agent)?.to_string(),
            Query::PairEnvy { agent, other } => {
                oracle.guarantee_pair_envy(p, *agent, *other)?.to_string()
            }
            Query::Bounds(b) => oracle.can_guarantee(p, b)?.to_string(),
        })
    };
    let mut disagreements = Vec::new();
    for q in &queries {
        let left = answer(p1, q)?;
        let right = answer(p2, q)?;
        if left != right {
            disagreements.push(Comparison {
                query: q.clone(),
                left,
                right,
            });
        }
    }
    Ok(Report {
        notion,
        equivalent: disagreements.is_empty(),
        grid: oracle.grid.points().to_vec(),
        checked: queries.len(),
        disagreements,
    })
}
