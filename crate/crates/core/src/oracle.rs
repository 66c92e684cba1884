//! Brute-force verifiers for tiny instances.
//!
//! Nothing here calls the tradeoff solver, the backward induction or the
//! table recursion. Allocations are enumerated on a grid, or, where an exact
//! answer is needed, over the vertices of the tradeoff polytope.

use std::collections::HashMap;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::scenario::{Agent, Package};

const MAX_GRID_ISSUES: usize = 4;
const MAX_ORACLE_DEADLINE: usize = 4;
const MAX_ORACLE_TYPES: usize = 3;
/// Improvements smaller than this do not count as domination.
const STRICT_IMPROVEMENT: f64 = 1e-6;
const EXACT: f64 = 1e-9;

/// Grid of share values `0, step, 2 step, ...` up to each pie, plus the pie itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub step: f64,
}

impl GridSpec {
    pub fn new(step: f64) -> Result<Self> {
        if step > 0.0 && step.is_finite() {
            Ok(GridSpec { step })
        } else {
            Err(Error::NotPositive { field: "grid step" })
        }
    }

    pub fn points(&self, pie: f64) -> Vec<f64> {
        let count = (pie / self.step + 1e-12).floor() as usize;
        let mut points: Vec<f64> = (0..=count).map(|k| (k as f64 * self.step).min(pie)).collect();
        if pie - points[count] > 1e-12 {
            points.push(pie);
        }
        points
    }

    fn allocations(&self, pie: &[f64]) -> impl Iterator<Item = Vec<f64>> {
        pie.iter()
            .map(|&p| self.points(p))
            .multi_cartesian_product()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn complement(pie: &[f64], keep: &[f64]) -> Vec<f64> {
    pie.iter().zip(keep).map(|(p, k)| p - k).collect()
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Best allocation found on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridOptimum {
    pub keep: Vec<f64>,
    pub objective: f64,
    /// Slack allowed on the opponent's utility.
    pub tolerance: f64,
}

/// Slack on the opponent's utility that every exact optimum can meet after
/// rounding to the grid: `max|opp| * m * step`.
pub fn grid_slack(opp: &[f64], grid: GridSpec) -> f64 {
    max_abs(opp) * opp.len() as f64 * grid.step
}

/// Grid search for the tradeoff: maximise `own . keep` with the opponent's
/// utility equal to `target` within `tolerance`.
pub fn brute_force_tradeoff(
    own: &[f64],
    opp: &[f64],
    pie: &[f64],
    target: f64,
    grid: GridSpec,
    tolerance: f64,
) -> Result<GridOptimum> {
    let m = own.len();
    if m > MAX_GRID_ISSUES {
        return Err(Error::Budget(format!("{m} issues, at most {MAX_GRID_ISSUES}")));
    }
    let mut best: Option<GridOptimum> = None;
    for keep in grid.allocations(pie) {
        let given = dot(opp, &complement(pie, &keep));
        if (given - target).abs() > tolerance {
            continue;
        }
        let objective = dot(own, &keep);
        if best.as_ref().is_none_or(|b| objective > b.objective) {
            best = Some(GridOptimum {
                keep,
                objective,
                tolerance,
            });
        }
    }
    best.ok_or(Error::NoFeasibleGridPoint { step: grid.step })
}

/// Worst-case gap between the grid optimum and the exact tradeoff optimum.
///
/// Rounding the exact optimum down to the grid loses at most `sum|own| * step`;
/// the relaxed constraint can gain at most the steepest exchange rate times the slack.
pub fn tradeoff_gap_bound(own: &[f64], opp: &[f64], grid: GridSpec) -> f64 {
    own.iter().map(|w| w.abs()).sum::<f64>() * grid.step + steepest_rate(own, opp) * grid_slack(opp, grid)
}

fn steepest_rate(own: &[f64], opp: &[f64]) -> f64 {
    own.iter()
        .zip(opp)
        .filter(|(_, o)| **o != 0.0)
        .fold(1.0, |m, (w, o)| m.max((w / o).abs()))
}

/// Exact tradeoff optima by vertex enumeration: every optimal basic solution
/// has at most one issue split, so try each split issue with every keep/give
/// pattern on the rest. Returns all optimal allocations (deduplicated).
pub fn vertex_tradeoff(own: &[f64], opp: &[f64], pie: &[f64], target: f64) -> Vec<Vec<f64>> {
    let m = own.len();
    let mut feasible: Vec<(f64, Vec<f64>)> = Vec::new();
    for pattern in (0..m).map(|_| [false, true]).multi_cartesian_product() {
        // pattern[c] == true: the offerer keeps issue c whole.
        let base: Vec<f64> = (0..m).map(|c| if pattern[c] { pie[c] } else { 0.0 }).collect();
        let given = dot(opp, &complement(pie, &base));
        if (given - target).abs() <= EXACT {
            feasible.push((dot(own, &base), base.clone()));
        }
        for f in 0..m {
            if opp[f] == 0.0 {
                continue;
            }
            // Opponent utility from the other issues, then solve for issue f.
            let rest: f64 = (0..m).filter(|&c| c != f).map(|c| opp[c] * (pie[c] - base[c])).sum();
            let keep_f = pie[f] - (target - rest) / opp[f];
            if keep_f < -EXACT || keep_f > pie[f] + EXACT {
                continue;
            }
            let mut keep = base.clone();
            keep[f] = keep_f.clamp(0.0, pie[f]);
            feasible.push((dot(own, &keep), keep));
        }
    }
    let best = feasible.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
    let mut optima: Vec<Vec<f64>> = Vec::new();
    for (value, keep) in feasible {
        if value >= best - EXACT && !optima.iter().any(|k| k.iter().zip(&keep).all(|(p, q)| (p - q).abs() <= EXACT)) {
            optima.push(keep);
        }
    }
    optima
}

/// Grid backward induction with both weight vectors known. Returns the
/// utilities of the first-period offer, which the receiver accepts.
pub fn brute_force_equilibrium_ci(
    weights_a: &[f64],
    weights_b: &[f64],
    discounts: &[f64],
    deadline: usize,
    first_mover: Agent,
    grid: GridSpec,
) -> Result<(f64, f64)> {
    let m = discounts.len();
    if m > 3 || deadline > 3 {
        return Err(Error::Budget(format!("m = {m}, n = {deadline}; at most 3 each")));
    }
    let offerer_at = |t: usize| if t % 2 == 1 { first_mover } else { first_mover.opponent() };
    let (mut next_a, mut next_b) = (0.0, 0.0);
    for t in (1..=deadline).rev() {
        let pie: Vec<f64> = discounts.iter().map(|d| d.powi(t as i32 - 1)).collect();
        let offerer = offerer_at(t);
        let (own, opp, continuation) = match offerer {
            Agent::A => (weights_a, weights_b, next_b),
            Agent::B => (weights_b, weights_a, next_a),
        };
        let mut best: Option<(f64, f64)> = None;
        for keep in grid.allocations(&pie) {
            let mine = dot(own, &keep);
            let theirs = dot(opp, &complement(&pie, &keep));
            if t < deadline && theirs < continuation - 1e-12 {
                continue;
            }
            let better = match best {
                None => true,
                Some((v, w)) => mine > v + 1e-12 || ((mine - v).abs() <= 1e-12 && theirs < w),
            };
            if better {
                best = Some((mine, theirs));
            }
        }
        let (mine, theirs) = best.ok_or(Error::NoFeasibleGridPoint { step: grid.step })?;
        (next_a, next_b) = match offerer {
            Agent::A => (mine, theirs),
            Agent::B => (theirs, mine),
        };
    }
    Ok((next_a, next_b))
}

/// Bound on how far grid backward induction can drift from the exact
/// equilibrium: each period adds one rounding loss, and the offerer's error
/// can be amplified by the steepest exchange rate of the period after.
pub fn equilibrium_gap_bound(weights_a: &[f64], weights_b: &[f64], deadline: usize, grid: GridSpec) -> f64 {
    let per_period = weights_a
        .iter()
        .map(|w| w.abs())
        .sum::<f64>()
        .max(weights_b.iter().map(|w| w.abs()).sum())
        * grid.step;
    let rate = steepest_rate(weights_a, weights_b).max(steepest_rate(weights_b, weights_a));
    (0..deadline).map(|k| per_period * rate.powi(k as i32)).sum()
}

/// True unless some grid package gives both agents at least as much and one
/// of them strictly more.
pub fn brute_force_pareto(pkg: &Package, weights_a: &[f64], weights_b: &[f64], grid: GridSpec) -> Result<bool> {
    let m = pkg.x.len();
    if m > MAX_GRID_ISSUES {
        return Err(Error::Budget(format!("{m} issues, at most {MAX_GRID_ISSUES}")));
    }
    let pie: Vec<f64> = pkg.x.iter().zip(&pkg.y).map(|(x, y)| x + y).collect();
    let ua = dot(weights_a, &pkg.x);
    let ub = dot(weights_b, &pkg.y);
    let dominated = grid.allocations(&pie).any(|x| {
        let va = dot(weights_a, &x);
        let vb = dot(weights_b, &complement(&pie, &x));
        va >= ua && vb >= ub && (va > ua + STRICT_IMPROVEMENT || vb > ub + STRICT_IMPROVEMENT)
    });
    Ok(!dominated)
}

/// Optimal-choice tables found by direct evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct OptChoices {
    /// `values[t - 1][i][j]`: expected utility of the offerer at `t`, type `i`, targeting `j`.
    pub values: Vec<Vec<Vec<f64>>>,
    /// `choices[t - 1][i]`.
    pub choices: Vec<Vec<usize>>,
}

struct OptSearch<'a> {
    weights: &'a [Vec<f64>],
    discounts: &'a [f64],
    deadline: usize,
    first_mover: Agent,
    belief_a: &'a [f64],
    belief_b: &'a [f64],
    memo: HashMap<(usize, usize, usize), f64>,
}

impl OptSearch<'_> {
    fn offerer(&self, t: usize) -> Agent {
        if t % 2 == 1 {
            self.first_mover
        } else {
            self.first_mover.opponent()
        }
    }

    fn belief(&self, agent: Agent) -> &[f64] {
        match agent {
            Agent::A => self.belief_a,
            Agent::B => self.belief_b,
        }
    }

    /// Best expected utility of the offerer of type `i` at `t`.
    fn best(&mut self, i: usize, t: usize) -> f64 {
        let r = self.weights.len();
        let support: Vec<usize> = (0..r).filter(|&j| self.belief(self.offerer(t))[j] > 0.0).collect();
        support.into_iter().map(|j| self.value(i, j, t)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// What a type-`e` receiver at `t` gets by rejecting.
    fn continuation(&mut self, e: usize, t: usize) -> f64 {
        if t >= self.deadline {
            0.0
        } else {
            self.best(e, t + 1)
        }
    }

    fn value(&mut self, i: usize, j: usize, t: usize) -> f64 {
        if let Some(&v) = self.memo.get(&(i, j, t)) {
            return v;
        }
        let pie: Vec<f64> = self.discounts.iter().map(|d| d.powi(t as i32 - 1)).collect();
        let weights = self.weights;
        let own = &weights[i];
        let v = if t == self.deadline {
            dot(own, &pie)
        } else {
            let offerer = self.offerer(t);
            let r = self.weights.len();
            let thresholds: Vec<f64> = (0..r).map(|e| self.continuation(e, t)).collect();
            // A rejected offerer is the receiver at t + 1.
            let fallback = self.continuation(i, t + 1);
            let belief: Vec<f64> = self.belief(offerer).to_vec();
            let expected = |keep: &[f64]| -> f64 {
                let given = complement(&pie, keep);
                (0..r)
                    .filter(|&e| belief[e] > 0.0)
                    .map(|e| {
                        let accepted = dot(&weights[e], &given) >= thresholds[e] - EXACT;
                        belief[e] * if accepted { dot(own, keep) } else { fallback }
                    })
                    .sum()
            };
            vertex_tradeoff(own, &weights[j], &pie, thresholds[j])
                .iter()
                .map(|keep| expected(keep))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        self.memo.insert((i, j, t), v);
        v
    }
}

/// Evaluates every assumed-type choice for every period and offerer type by
/// direct expectation over the opponent's types, under fixed beliefs.
/// `belief_a` is a's distribution over b's types and `belief_b` b's over a's.
pub fn brute_force_opt_choice(
    weights: &[Vec<f64>],
    discounts: &[f64],
    deadline: usize,
    first_mover: Agent,
    belief_a: &[f64],
    belief_b: &[f64],
) -> Result<OptChoices> {
    let r = weights.len();
    if r > MAX_ORACLE_TYPES || deadline > MAX_ORACLE_DEADLINE {
        return Err(Error::Budget(format!(
            "r = {r}, n = {deadline}; at most {MAX_ORACLE_TYPES} types and {MAX_ORACLE_DEADLINE} periods"
        )));
    }
    let mut search = OptSearch {
        weights,
        discounts,
        deadline,
        first_mover,
        belief_a,
        belief_b,
        memo: HashMap::new(),
    };
    let mut values = Vec::with_capacity(deadline);
    let mut choices = Vec::with_capacity(deadline);
    for t in 1..=deadline {
        let offerer = search.offerer(t);
        let support: Vec<usize> = (0..r).filter(|&j| search.belief(offerer)[j] > 0.0).collect();
        let table: Vec<Vec<f64>> = (0..r).map(|i| (0..r).map(|j| search.value(i, j, t)).collect()).collect();
        let picks = table
            .iter()
            .map(|row| {
                support
                    .iter()
                    .copied()
                    .fold(support[0], |best, j| if row[j] > row[best] { j } else { best })
            })
            .collect();
        values.push(table);
        choices.push(picks);
    }
    Ok(OptChoices { values, choices })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points_include_pie() {
        let g = GridSpec::new(0.3).unwrap();
        assert_eq!(g.points(1.0), vec![0.0, 0.3, 0.6, 0.8999999999999999, 1.0]);
        assert_eq!(GridSpec::new(0.25).unwrap().points(0.5), vec![0.0, 0.25, 0.5]);
        assert!(GridSpec::new(0.0).is_err());
    }

    #[test]
    fn bundle_tradeoff_on_eighths() {
        let g = GridSpec::new(0.125).unwrap();
        let best = brute_force_tradeoff(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.25], &[1.0; 3], 0.875, g, 1e-9).unwrap();
        assert_eq!(best.keep, vec![0.125, 1.0, 1.0]);
        assert_eq!(best.objective, 5.125);
        // The grid slack lets b fall short of 0.875 by up to 0.375.
        let loose = brute_force_tradeoff(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.25], &[1.0; 3], 0.875, g, grid_slack(&[1.0, 0.5, 0.25], g)).unwrap();
        assert_eq!(loose.keep, vec![0.5, 1.0, 1.0]);
        assert!(loose.objective - 5.125 <= tradeoff_gap_bound(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.25], g));
    }

    #[test]
    fn zero_target_keeps_everything() {
        let g = GridSpec::new(0.1).unwrap();
        let best = brute_force_tradeoff(&[1.0, 2.0], &[3.0, 1.0], &[1.0, 1.0], 0.0, g, 1e-9).unwrap();
        assert_eq!(best.keep, vec![1.0, 1.0]);
    }

    #[test]
    fn unreachable_target() {
        let g = GridSpec::new(0.1).unwrap();
        assert!(matches!(
            brute_force_tradeoff(&[1.0], &[1.0], &[1.0], 5.0, g, grid_slack(&[1.0], g)),
            Err(Error::NoFeasibleGridPoint { .. })
        ));
    }

    #[test]
    fn vertex_enumeration_finds_both_tied_packages() {
        let optima = vertex_tradeoff(&[1.0, 2.0], &[2.0, 4.0], &[1.0, 1.0], 3.0);
        assert_eq!(optima.len(), 2);
    }

    #[test]
    fn grid_equilibrium_examples() {
        let g = GridSpec::new(0.1).unwrap();
        let (a, _) = brute_force_equilibrium_ci(&[1.0], &[1.0], &[0.5], 2, Agent::A, g).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
        let (a, b) = brute_force_equilibrium_ci(&[1.0], &[1.0], &[0.5], 1, Agent::A, g).unwrap();
        assert_eq!((a, b), (1.0, 0.0));
        let g = GridSpec::new(0.125).unwrap();
        let (a, b) =
            brute_force_equilibrium_ci(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.25], &[0.5; 3], 2, Agent::A, g).unwrap();
        assert!((a - 5.125).abs() < 1e-12 && (b - 0.875).abs() < 1e-12);
    }

    #[test]
    fn pareto_by_enumeration() {
        let g = GridSpec::new(0.05).unwrap();
        let wa = [1.0, 2.0, 3.0];
        let wb = [1.0, 0.5, 0.25];
        let split = Package {
            t: 1,
            x: vec![0.25, 1.0, 0.5],
            y: vec![0.75, 0.0, 0.5],
        };
        assert!(!brute_force_pareto(&split, &wa, &wb, g).unwrap());
        let all_a = Package {
            t: 1,
            x: vec![1.0; 3],
            y: vec![0.0; 3],
        };
        assert!(brute_force_pareto(&all_a, &wa, &wb, g).unwrap());
    }

    #[test]
    fn two_type_choice() {
        let k = vec![vec![1.0, 2.0], vec![5.0, 1.0]];
        let opt = brute_force_opt_choice(&k, &[0.5, 0.5], 2, Agent::A, &[0.1, 0.9], &[0.5, 0.5]).unwrap();
        assert_eq!(opt.choices[0][0], 1);
        assert!((opt.values[0][0][1] - 2.16).abs() < 1e-12);
        assert!((opt.values[0][0][0] - 1.5).abs() < 1e-12);

        let single = brute_force_opt_choice(&[vec![1.0, 2.0]], &[0.5, 0.5], 3, Agent::B, &[1.0], &[1.0]).unwrap();
        assert!(single.choices.iter().all(|c| c == &vec![0]));
    }
}
