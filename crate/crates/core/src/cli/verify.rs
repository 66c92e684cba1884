//! Cross-checks of the exact engine against the brute-force oracles.

use std::fmt;

use crate::complete::{backward_induction_ci, is_pareto_optimal, TurnOrder};
use crate::error::Result;
use crate::incomplete::{compute_eu_tables, BargainingGame};
use crate::oracle::{
    brute_force_equilibrium_ci, brute_force_opt_choice, brute_force_pareto, brute_force_tradeoff,
    equilibrium_gap_bound, grid_slack, tradeoff_gap_bound, vertex_tradeoff, GridSpec,
};
use crate::procedures::{initial_beliefs, run_package_deal, SimulationOptions};
use crate::scenario::{pie_vector, Agent, Scenario};
use crate::tradeoff::{solve_tradeoff, TradeoffProblem};

const EXACT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check {
            name,
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
        }
    }

    fn skip(name: &'static str, detail: impl Into<String>) -> Self {
        Check {
            name,
            status: CheckStatus::Skip,
            detail: detail.into(),
        }
    }
}

/// Every applicable oracle check for one scenario.
pub fn verify_scenario(scenario: &Scenario, grid: GridSpec, options: &SimulationOptions) -> Result<Vec<Check>> {
    Ok(vec![
        check_tradeoffs(scenario, grid)?,
        check_equilibrium(scenario, grid)?,
        check_pareto(scenario, grid, options)?,
        check_opt_choices(scenario, options)?,
    ])
}

/// Each period's tradeoff of the true-type bundle against the grid and vertex oracles.
pub fn check_tradeoffs(scenario: &Scenario, grid: GridSpec) -> Result<Check> {
    const NAME: &str = "tradeoff";
    let m = scenario.issue_count();
    if m > 4 {
        return Ok(Check::skip(NAME, format!("{m} issues exceed the grid budget")));
    }
    let wa = scenario.true_weights(Agent::A);
    let wb = scenario.true_weights(Agent::B);
    let turns = TurnOrder::new(scenario.first_mover());
    let eq = backward_induction_ci(wa, wb, scenario.discounts(), scenario.deadline(), 1, turns)?;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for period in eq.periods.iter().filter(|p| p.t < scenario.deadline()) {
        let (own, opp, target) = match period.offerer {
            Agent::A => (wa, wb, period.continuation_b),
            Agent::B => (wb, wa, period.continuation_a),
        };
        let pie = pie_vector(scenario.discounts(), period.t);
        let problem = TradeoffProblem::new(own, opp, &pie, target);
        let exact = problem.own_utility(&solve_tradeoff(&problem)?);
        let vertices = vertex_tradeoff(own, opp, &pie, target);
        let vertex_best = vertices
            .iter()
            .map(|k| own.iter().zip(k).map(|(w, x)| w * x).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        if (vertex_best - exact).abs() > EXACT {
            failures.push(format!("t = {}: vertex optimum {vertex_best} vs {exact}", period.t));
        }
        let found = brute_force_tradeoff(own, opp, &pie, target, grid, grid_slack(opp, grid))?;
        let gap = (found.objective - exact).abs();
        worst = worst.max(gap);
        let bound = tradeoff_gap_bound(own, opp, grid);
        if gap > bound {
            failures.push(format!("t = {}: grid optimum {} vs {exact}, bound {bound}", period.t, found.objective));
        }
    }
    Ok(Check::new(
        NAME,
        failures.is_empty(),
        if failures.is_empty() {
            format!("largest grid gap {worst:.3e}")
        } else {
            failures.join("; ")
        },
    ))
}

/// Backward induction against grid backward induction for the true-type pair.
pub fn check_equilibrium(scenario: &Scenario, grid: GridSpec) -> Result<Check> {
    const NAME: &str = "equilibrium";
    let (m, n) = (scenario.issue_count(), scenario.deadline());
    if m > 3 || n > 3 {
        return Ok(Check::skip(NAME, format!("m = {m}, n = {n} exceed the grid budget")));
    }
    let wa = scenario.true_weights(Agent::A);
    let wb = scenario.true_weights(Agent::B);
    if wa.iter().chain(wb).any(|&w| w <= 0.0) {
        return Ok(Check::skip(NAME, "signed weights: offers are equality-constrained, the grid search is not"));
    }
    let eq = backward_induction_ci(wa, wb, scenario.discounts(), n, 1, TurnOrder::new(scenario.first_mover()))?;
    let (ga, gb) = brute_force_equilibrium_ci(wa, wb, scenario.discounts(), n, scenario.first_mover(), grid)?;
    let bound = equilibrium_gap_bound(wa, wb, n, grid);
    let gap = (ga - eq.utility_a).abs().max((gb - eq.utility_b).abs());
    Ok(Check::new(
        NAME,
        gap <= bound,
        format!("exact ({:.6}, {:.6}), grid ({ga:.6}, {gb:.6}), gap {gap:.3e}, bound {bound:.3e}", eq.utility_a, eq.utility_b),
    ))
}

/// The package-deal outcome judged by the LP check and by grid enumeration.
/// The grid can miss a domination finer than its resolution, so only an
/// LP-optimal package that the grid finds dominated counts as a mismatch.
pub fn check_pareto(scenario: &Scenario, grid: GridSpec, options: &SimulationOptions) -> Result<Check> {
    const NAME: &str = "pareto";
    let m = scenario.issue_count();
    if m > 4 {
        return Ok(Check::skip(NAME, format!("{m} issues exceed the grid budget")));
    }
    let outcome = run_package_deal(scenario, options)?;
    let pkg = outcome.partitions[0].package.as_ref().expect("package deal always settles");
    let wa = scenario.true_weights(Agent::A);
    let wb = scenario.true_weights(Agent::B);
    let lp = is_pareto_optimal(pkg, wa, wb)?;
    let enumerated = brute_force_pareto(pkg, wa, wb, grid)?;
    Ok(Check::new(
        NAME,
        !(lp && !enumerated),
        format!("LP {lp}, grid {enumerated}"),
    ))
}

/// Optimal choices of the tables against direct expectation, under the initial beliefs.
pub fn check_opt_choices(scenario: &Scenario, options: &SimulationOptions) -> Result<Check> {
    const NAME: &str = "opt-choice";
    if scenario.setting().is_complete() {
        return Ok(Check::skip(NAME, "complete information has no type choice"));
    }
    let r = scenario.effective_types().type_count();
    let n = scenario.deadline();
    if r > 3 || n > 4 {
        return Ok(Check::skip(NAME, format!("r = {r}, n = {n} exceed the oracle budget")));
    }
    let weights = scenario.effective_types().weight_matrix().to_vec();
    let game = BargainingGame {
        weights: weights.clone(),
        discounts: scenario.discounts().to_vec(),
        deadline: n,
        turns: TurnOrder::new(scenario.first_mover()),
        enumeration_cap: options.enumeration_cap,
    };
    let beliefs = initial_beliefs(scenario);
    let tables = compute_eu_tables(&game, 1, &beliefs)?;
    let oracle = brute_force_opt_choice(
        &weights,
        scenario.discounts(),
        n,
        scenario.first_mover(),
        beliefs.of_a.probabilities(),
        beliefs.of_b.probabilities(),
    )?;
    let mut failures = Vec::new();
    for t in 1..=n {
        let period = tables.period(t);
        let support = beliefs.held_by(period.offerer).support();
        for i in 0..r {
            let expected = &oracle.values[t - 1][i];
            for &j in &support {
                if (period.offer_value[i][j] - expected[j]).abs() > EXACT {
                    failures.push(format!("t = {t}, ({}, {}): {} vs {}", i + 1, j + 1, period.offer_value[i][j], expected[j]));
                }
            }
            let best = support.iter().map(|&j| expected[j]).fold(f64::NEG_INFINITY, f64::max);
            let chosen = period.choice[i];
            if expected[chosen] < best - EXACT {
                failures.push(format!("t = {t}, type {}: choice {} is not an argmax", i + 1, chosen + 1));
            }
        }
    }
    Ok(Check::new(
        NAME,
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} periods x {r} types agree", n)
        } else {
            failures.join("; ")
        },
    ))
}
