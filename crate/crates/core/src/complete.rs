//! Complete-information equilibrium: single-issue closed form, multi-issue
//! backward induction, uniqueness predicates and the Pareto check.

use crate::error::Result;
use crate::scenario::{dot, pie_vector, Agent, Package, TOLERANCE};
use crate::tradeoff::{solve_tradeoff, TradeoffProblem};

/// First mover's share of a unit pie at t = 1 in single-issue bargaining.
pub fn single_issue_equilibrium(deadline: usize, discount: f64) -> f64 {
    (0..deadline)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * discount.powi(j as i32)
        })
        .sum()
}

/// Who offers when. `first_mover` offers at `anchor`, `anchor + 2`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TurnOrder {
    pub first_mover: Agent,
    pub anchor: usize,
}

impl TurnOrder {
    pub fn new(first_mover: Agent) -> Self {
        TurnOrder {
            first_mover,
            anchor: 1,
        }
    }

    pub fn anchored(first_mover: Agent, anchor: usize) -> Self {
        TurnOrder {
            first_mover,
            anchor,
        }
    }

    pub fn offerer(&self, t: usize) -> Agent {
        if t.abs_diff(self.anchor).is_multiple_of(2) {
            self.first_mover
        } else {
            self.first_mover.opponent()
        }
    }
}

/// Equilibrium offer for one period, with the continuation values the
/// receiver compares it against.
#[derive(Clone, Debug, PartialEq)]
pub struct CiPeriod {
    pub t: usize,
    pub offerer: Agent,
    pub package: Package,
    /// UA(t): a's utility from the next period's equilibrium package (0 at the deadline).
    pub continuation_a: f64,
    /// UB(t), likewise for b.
    pub continuation_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CiEquilibrium {
    pub start: usize,
    /// Periods `start..=deadline`, in time order.
    pub periods: Vec<CiPeriod>,
    /// `None` when the window starts after the deadline.
    pub agreement: Option<usize>,
    pub utility_a: f64,
    pub utility_b: f64,
}

impl CiEquilibrium {
    pub fn period(&self, t: usize) -> Option<&CiPeriod> {
        self.periods.iter().find(|p| p.t == t)
    }
}

/// Backward induction over `start..=deadline` with both weight vectors known.
pub fn backward_induction_ci(
    weights_a: &[f64],
    weights_b: &[f64],
    discounts: &[f64],
    deadline: usize,
    start: usize,
    turns: TurnOrder,
) -> Result<CiEquilibrium> {
    if start > deadline {
        return Ok(CiEquilibrium {
            start,
            periods: Vec::new(),
            agreement: None,
            utility_a: 0.0,
            utility_b: 0.0,
        });
    }

    let mut periods = Vec::with_capacity(deadline + 1 - start);
    // Utilities of the package one period ahead (UA(t), UB(t)); zero past the deadline.
    let (mut next_a, mut next_b) = (0.0, 0.0);
    for t in (start..=deadline).rev() {
        let pie = pie_vector(discounts, t);
        let offerer = turns.offerer(t);
        let (own, opp, target) = match offerer {
            Agent::A => (weights_a, weights_b, next_b),
            Agent::B => (weights_b, weights_a, next_a),
        };
        let kept = if t == deadline {
            pie.clone()
        } else {
            solve_tradeoff(&TradeoffProblem::new(own, opp, &pie, target))?
        };
        let package = Package::from_kept(offerer, t, &kept, &pie);
        periods.push(CiPeriod {
            t,
            offerer,
            package: package.clone(),
            continuation_a: next_a,
            continuation_b: next_b,
        });
        next_a = dot(weights_a, &package.x);
        next_b = dot(weights_b, &package.y);
    }
    periods.reverse();
    Ok(CiEquilibrium {
        start,
        periods,
        agreement: Some(start),
        utility_a: next_a,
        utility_b: next_b,
    })
}

/// Two distinct issues in `issues` share the exchange ratio `k_a / k_b`.
pub fn condition_c1(weights_a: &[f64], weights_b: &[f64], issues: &[usize]) -> bool {
    issues.iter().enumerate().any(|(p, &i)| {
        issues[p + 1..]
            .iter()
            .any(|&j| weights_a[i] * weights_b[j] == weights_a[j] * weights_b[i])
    })
}

/// C1 fails on every part of the partition.
pub fn condition_c2(weights_a: &[f64], weights_b: &[f64], parts: &[Vec<usize>]) -> bool {
    parts
        .iter()
        .all(|part| !condition_c1(weights_a, weights_b, part))
}

/// Best utility `own` can reach while the opponent gets at least `floor`, on pies `pie`.
fn best_with_floor(own: &[f64], opp: &[f64], pie: &[f64], floor: f64) -> Result<f64> {
    // Unconstrained optimum for `own`, breaking zero-weight issues toward the opponent.
    let free: Vec<f64> = own
        .iter()
        .zip(opp)
        .zip(pie)
        .map(|((&w, &o), &p)| if w > 0.0 || (w == 0.0 && o <= 0.0) { p } else { 0.0 })
        .collect();
    let problem = TradeoffProblem::new(own, opp, pie, floor);
    if problem.opponent_utility(&free) >= floor {
        return Ok(problem.own_utility(&free));
    }
    let keep = solve_tradeoff(&problem)?;
    Ok(problem.own_utility(&keep))
}

/// Whether the utility pair `(utility_a, utility_b)` lies on the Pareto frontier of
/// the pies `pie`.
pub fn utility_pair_is_pareto(
    utility_a: f64,
    utility_b: f64,
    weights_a: &[f64],
    weights_b: &[f64],
    pie: &[f64],
) -> Result<bool> {
    let slack = TOLERANCE * (1.0 + utility_a.abs().max(utility_b.abs()));
    let best_a = best_with_floor(weights_a, weights_b, pie, utility_b.min(max_utility(weights_b, pie)))?;
    let best_b = best_with_floor(weights_b, weights_a, pie, utility_a.min(max_utility(weights_a, pie)))?;
    Ok(best_a <= utility_a + slack && best_b <= utility_b + slack)
}

fn max_utility(weights: &[f64], pie: &[f64]) -> f64 {
    weights.iter().zip(pie).map(|(w, p)| (w * p).max(0.0)).sum()
}

/// No package at the same time makes one agent better off without hurting the other.
pub fn is_pareto_optimal(pkg: &Package, weights_a: &[f64], weights_b: &[f64]) -> Result<bool> {
    let pie: Vec<f64> = pkg.x.iter().zip(&pkg.y).map(|(x, y)| x + y).collect();
    utility_pair_is_pareto(
        dot(weights_a, &pkg.x),
        dot(weights_b, &pkg.y),
        weights_a,
        weights_b,
        &pie,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_issue_closed_form() {
        assert_eq!(single_issue_equilibrium(1, 0.5), 1.0);
        assert_eq!(single_issue_equilibrium(2, 0.5), 0.5);
        assert_eq!(single_issue_equilibrium(3, 0.5), 0.75);
    }

    #[test]
    fn bundle_example_as_one_part() {
        let eq = backward_induction_ci(
            &[1.0, 2.0, 3.0],
            &[1.0, 0.5, 0.25],
            &[0.5; 3],
            2,
            1,
            TurnOrder::new(Agent::A),
        )
        .unwrap();
        assert_eq!(eq.agreement, Some(1));
        assert!((eq.utility_a - 5.125).abs() < 1e-12);
        assert!((eq.utility_b - 0.875).abs() < 1e-12);
    }

    #[test]
    fn first_mover_asymmetry() {
        let run = |first| {
            backward_induction_ci(&[1.0, 2.0], &[2.0, 1.0], &[0.5; 2], 2, 1, TurnOrder::new(first))
                .unwrap()
        };
        let a_first = run(Agent::A);
        assert!((a_first.utility_a - 2.25).abs() < 1e-12);
        assert!((a_first.utility_b - 1.5).abs() < 1e-12);
        let b_first = run(Agent::B);
        assert!((b_first.utility_a - 1.5).abs() < 1e-12);
        assert!((b_first.utility_b - 2.25).abs() < 1e-12);
    }

    #[test]
    fn single_issue_matches_closed_form() {
        for n in 1..8 {
            for &d in &[0.3, 0.5, 0.9, 1.0] {
                let eq = backward_induction_ci(&[1.0], &[1.0], &[d], n, 1, TurnOrder::new(Agent::A))
                    .unwrap();
                assert!((eq.utility_a - single_issue_equilibrium(n, d)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn window_past_deadline_is_conflict() {
        let eq =
            backward_induction_ci(&[1.0], &[1.0], &[0.5], 2, 3, TurnOrder::new(Agent::A)).unwrap();
        assert_eq!(eq.agreement, None);
        assert_eq!((eq.utility_a, eq.utility_b), (0.0, 0.0));
    }

    #[test]
    fn turn_order_parity() {
        let global = TurnOrder::new(Agent::A);
        assert_eq!(global.offerer(1), Agent::A);
        assert_eq!(global.offerer(2), Agent::B);
        let reset = TurnOrder::anchored(Agent::A, 2);
        assert_eq!(reset.offerer(2), Agent::A);
        assert_eq!(reset.offerer(3), Agent::B);
    }

    #[test]
    fn uniqueness_predicates() {
        assert!(condition_c1(&[1.0, 2.0], &[2.0, 4.0], &[0, 1]));
        assert!(!condition_c1(&[1.0, 2.0], &[2.0, 1.0], &[0, 1]));
        assert!(!condition_c1(&[1.0], &[2.0], &[0]));

        assert!(!condition_c2(&[1.0, 2.0], &[2.0, 4.0], &[vec![0, 1]]));
        assert!(condition_c2(&[1.0, 2.0], &[2.0, 4.0], &[vec![0], vec![1]]));
        let wa = [1.0, 2.0, 3.0];
        let wb = [2.0, 4.0, 1.0];
        assert!(!condition_c2(&wa, &wb, &[vec![0, 1], vec![2]]));
        assert!(condition_c2(&wa, &wb, &[vec![0, 2], vec![1]]));
    }

    #[test]
    fn pareto_examples() {
        let wa = [1.0, 2.0, 3.0];
        let wb = [1.0, 0.5, 0.25];
        let bundle = Package {
            t: 1,
            x: vec![0.125, 1.0, 1.0],
            y: vec![0.875, 0.0, 0.0],
        };
        assert!(is_pareto_optimal(&bundle, &wa, &wb).unwrap());
        let split = Package {
            t: 1,
            x: vec![0.25, 1.0, 0.5],
            y: vec![0.75, 0.0, 0.5],
        };
        assert!(!is_pareto_optimal(&split, &wa, &wb).unwrap());
        let all_a = Package {
            t: 1,
            x: vec![1.0; 3],
            y: vec![0.0; 3],
        };
        assert!(is_pareto_optimal(&all_a, &wa, &wb).unwrap());
    }

    #[test]
    fn pareto_with_signed_weights_uses_inequality() {
        // Giving the issue to b helps both: a dislikes it.
        let half = Package {
            t: 1,
            x: vec![0.5],
            y: vec![0.5],
        };
        assert!(!is_pareto_optimal(&half, &[-1.0], &[1.0]).unwrap());
        let all_b = Package {
            t: 1,
            x: vec![0.0],
            y: vec![1.0],
        };
        assert!(is_pareto_optimal(&all_b, &[-1.0], &[1.0]).unwrap());
    }
}
