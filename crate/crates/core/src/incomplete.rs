//! Expected-utility tables for bargaining under uncertainty about the
//! opponent's weights, the acceptance rule, Bayesian belief updates, and the
//! uniqueness predicates C3, C4 and C5.
//!
//! Tables are built by backward recursion over a window `start..=deadline`.
//! At each period only one agent offers (by [`TurnOrder`]), so a period table
//! stores the offerer's values `EU(i, j, t)` for offerer type `i` assuming
//! receiver type `j`, its optimal choices, the packages behind them, and the
//! receiver's continuation values `EU(e, t)`.
//!
//! The asymmetric settings need no separate code path: the fully informed
//! agent simply holds a point-mass belief on its opponent's true type, which
//! collapses its expectation onto that type.

use crate::complete::TurnOrder;
use crate::error::{Error, Result};
use crate::scenario::{dot, pie_vector, Agent, BeliefState, Package, TypeSpace, TOLERANCE};
use crate::tradeoff::{enumerate_optimal_packages, select_by_expected_utility, tie_groups, TradeoffProblem};

/// Weights, discounts and turn order of one negotiation over an issue set.
#[derive(Clone, Debug, PartialEq)]
pub struct BargainingGame {
    /// r x k effective weights, shared by both agents' type spaces.
    pub weights: Vec<Vec<f64>>,
    pub discounts: Vec<f64>,
    pub deadline: usize,
    pub turns: TurnOrder,
    pub enumeration_cap: usize,
}

impl BargainingGame {
    pub fn type_count(&self) -> usize {
        self.weights.len()
    }

    pub fn utility(&self, agent: Agent, type_index: usize, pkg: &Package) -> f64 {
        if pkg.t > self.deadline {
            return 0.0;
        }
        dot(&self.weights[type_index], pkg.share(agent))
    }
}

/// One period of the tables.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodTable {
    pub t: usize,
    pub offerer: Agent,
    /// `offer_value[i][j]`: offerer of type `i`, offering the package tailored to receiver type `j`.
    pub offer_value: Vec<Vec<f64>>,
    /// Optimal choice of assumed receiver type for each offerer type.
    pub choice: Vec<usize>,
    /// `packages[i][j]`: the package an offerer of type `i` makes assuming receiver type `j`.
    pub packages: Vec<Vec<Package>>,
    /// Number of distinct packages solving the tradeoff for `(i, j)`.
    pub optimal_count: Vec<Vec<usize>>,
    /// Number of those packages left tied after expected-utility selection.
    pub selected_count: Vec<Vec<usize>>,
    /// Receiver's continuation value for each receiver type.
    pub receiver_value: Vec<f64>,
}

impl PeriodTable {
    pub fn receiver(&self) -> Agent {
        self.offerer.opponent()
    }

    /// The equilibrium offer of an offerer of type `i`.
    pub fn offer(&self, i: usize) -> &Package {
        &self.packages[i][self.choice[i]]
    }
}

/// Expected-utility tables over a time window.
#[derive(Clone, Debug, PartialEq)]
pub struct EuTables {
    pub start: usize,
    pub deadline: usize,
    pub periods: Vec<PeriodTable>,
}

impl EuTables {
    pub fn period(&self, t: usize) -> &PeriodTable {
        &self.periods[t - self.start]
    }

    /// EUA(i, j, t) or EUB(i, j, t), depending on who offers at `t`.
    pub fn offer_value(&self, i: usize, j: usize, t: usize) -> f64 {
        self.period(t).offer_value[i][j]
    }

    /// OPTA(i, t) or OPTB(i, t).
    pub fn choice(&self, i: usize, t: usize) -> usize {
        self.period(t).choice[i]
    }

    /// EUA(e, t) or EUB(e, t): what a receiver of type `e` expects by rejecting at `t`.
    pub fn receiver_value(&self, e: usize, t: usize) -> f64 {
        self.period(t).receiver_value[e]
    }

    /// Value of agent `agent` of type `i` when it is the receiver at `t`; zero
    /// outside the window or past the deadline.
    pub fn value_as_receiver(&self, agent: Agent, i: usize, t: usize) -> f64 {
        if t < self.start || t > self.deadline {
            return 0.0;
        }
        let period = self.period(t);
        if period.receiver() == agent {
            period.receiver_value[i]
        } else {
            0.0
        }
    }
}

/// The deadline slice: the offerer takes every pie and the receiver expects nothing.
pub fn terminal_eu(weights: &[Vec<f64>], deadline: usize, discounts: &[f64], offerer: Agent) -> PeriodTable {
    let r = weights.len();
    let pie = pie_vector(discounts, deadline);
    let offer_value: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| vec![dot(w, &pie); r])
        .collect();
    let package = Package::from_kept(offerer, deadline, &pie, &pie);
    PeriodTable {
        t: deadline,
        offerer,
        offer_value,
        choice: vec![0; r],
        packages: vec![vec![package; r]; r],
        optimal_count: vec![vec![1; r]; r],
        selected_count: vec![vec![1; r]; r],
        receiver_value: vec![0.0; r],
    }
}

/// Beliefs held by each agent about its opponent.
#[derive(Clone, Debug, PartialEq)]
pub struct Beliefs {
    /// a's belief over b's types.
    pub of_a: BeliefState,
    /// b's belief over a's types.
    pub of_b: BeliefState,
}

impl Beliefs {
    /// Belief held by `agent` about its opponent.
    pub fn held_by(&self, agent: Agent) -> &BeliefState {
        match agent {
            Agent::A => &self.of_a,
            Agent::B => &self.of_b,
        }
    }

    pub fn held_by_mut(&mut self, agent: Agent) -> &mut BeliefState {
        match agent {
            Agent::A => &mut self.of_a,
            Agent::B => &mut self.of_b,
        }
    }
}

/// Fills the tables for `start..=deadline` under the given beliefs.
pub fn compute_eu_tables(game: &BargainingGame, start: usize, beliefs: &Beliefs) -> Result<EuTables> {
    let n = game.deadline;
    assert!(start >= 1 && start <= n, "window start {start} outside 1..={n}");
    let r = game.type_count();

    let mut periods: Vec<PeriodTable> = Vec::with_capacity(n + 1 - start);
    let terminal = {
        let mut table = terminal_eu(&game.weights, n, &game.discounts, game.turns.offerer(n));
        table.choice = best_choices(&table.offer_value, beliefs.held_by(table.offerer));
        table
    };
    periods.push(terminal);

    for t in (start..n).rev() {
        let offerer = game.turns.offerer(t);
        let receiver = offerer.opponent();
        let next = periods.last().expect("later period present");
        debug_assert_eq!(next.offerer, receiver);

        // The receiver at t offers at t + 1: its value is its best offer there.
        let receiver_value: Vec<f64> = (0..r)
            .map(|e| next.offer_value[e][next.choice[e]])
            .collect();
        // If the offer at t is rejected the offerer becomes the receiver at t + 1.
        let fallback: Vec<f64> = next.receiver_value.clone();

        let belief = beliefs.held_by(offerer);
        let support = belief.support();
        let pie = pie_vector(&game.discounts, t);

        let mut offer_value = vec![vec![0.0; r]; r];
        let mut packages = Vec::with_capacity(r);
        let mut optimal_count = vec![vec![0; r]; r];
        let mut selected_count = vec![vec![0; r]; r];
        for i in 0..r {
            let mut row = Vec::with_capacity(r);
            for j in 0..r {
                let problem = TradeoffProblem::new(&game.weights[i], &game.weights[j], &pie, receiver_value[j]);
                let ties = tie_groups(&problem.own, &problem.opp);
                let candidates: Vec<Package> = enumerate_optimal_packages(&problem, &ties, game.enumeration_cap)?
                    .iter()
                    .map(|kept| Package::from_kept(offerer, t, kept, &pie))
                    .collect();
                let selection = select_by_expected_utility(&candidates, |pkg| {
                    let own = game.utility(offerer, i, pkg);
                    support
                        .iter()
                        .map(|&e| {
                            let accepted = game.utility(receiver, e, pkg) >= receiver_value[e] - TOLERANCE;
                            belief.probability(e) * if accepted { own } else { fallback[i] }
                        })
                        .sum()
                });
                offer_value[i][j] = selection.value;
                optimal_count[i][j] = candidates.len();
                selected_count[i][j] = selection.tied;
                row.push(selection.package);
            }
            packages.push(row);
        }

        let choice = best_choices(&offer_value, belief);
        periods.push(PeriodTable {
            t,
            offerer,
            offer_value,
            choice,
            packages,
            optimal_count,
            selected_count,
            receiver_value,
        });
    }
    periods.reverse();
    Ok(EuTables {
        start,
        deadline: n,
        periods,
    })
}

/// Argmax over the believed support; ties go to the lowest type index.
fn best_choices(offer_value: &[Vec<f64>], belief: &BeliefState) -> Vec<usize> {
    let support = belief.support();
    offer_value
        .iter()
        .map(|row| {
            let mut best = support[0];
            for &j in &support[1..] {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Receiver of type `e` accepts iff the offer is worth at least its continuation value.
pub fn acceptance_decision(game: &BargainingGame, e: usize, offer: &Package, tables: &EuTables) -> bool {
    let period = tables.period(offer.t);
    game.utility(period.receiver(), e, offer) >= period.receiver_value[e] - TOLERANCE
}

/// Offerer learns that the assumed type it targeted is not the receiver's type.
pub fn update_beliefs_offerer(beliefs: &BeliefState, rejected_choice: usize) -> Option<BeliefState> {
    beliefs.without(rejected_choice)
}

/// Receiver keeps the offerer types whose equilibrium offer at `t` equals the observed one.
pub fn update_beliefs_receiver(beliefs: &BeliefState, observed: &Package, tables: &EuTables) -> Option<BeliefState> {
    let period = tables.period(observed.t);
    let keep: Vec<usize> = beliefs
        .support()
        .into_iter()
        .filter(|&i| period.offer(i).approx_eq(observed))
        .collect();
    beliefs.restricted_to(&keep)
}

/// Lenient fallback for an update that empties the support: uniform over the old support.
pub fn lenient_update(previous: &BeliefState) -> BeliefState {
    let support = previous.support();
    let uniform = BeliefState::uniform(previous.type_count());
    uniform.restricted_to(&support).unwrap_or(uniform)
}

pub(crate) fn strict_failure(t: usize, agent: Agent) -> Error {
    Error::EmptySupport { t, agent: agent.label() }
}

/// Some pair of distinct types has equal weight ratios on two distinct issues.
pub fn condition_c3(types: &TypeSpace, issues: &[usize]) -> bool {
    let k = types.weight_matrix();
    let r = k.len();
    (0..r).any(|i| {
        (0..r).filter(|&j| j != i).any(|j| {
            issues.iter().enumerate().any(|(p, &c)| {
                issues[p + 1..]
                    .iter()
                    .any(|&d| k[i][c] * k[j][d] == k[i][d] * k[j][c])
            })
        })
    })
}

/// Every tradeoff between distinct types leaves a single package after expected-utility selection.
pub fn condition_c4(tables: &EuTables) -> bool {
    tables.periods.iter().all(|period| {
        period.selected_count.iter().enumerate().all(|(i, row)| {
            row.iter().enumerate().all(|(j, &count)| i == j || count == 1)
        })
    })
}

/// `not C3 or C4` holds on every part. `per_part` carries (C3, C4) for each part.
pub fn condition_c5(per_part: &[(bool, bool)]) -> bool {
    per_part.iter().all(|&(c3, c4)| !c3 || c4)
}
