//! Exact solver for the one-constraint bounded tradeoff program.
//!
//! The offering agent keeps `keep[c]` of each pie and must leave the opponent
//! exactly `target` cumulative utility:
//!
//! ```text
//! maximise   sum_c own[c] * keep[c]
//! subject to sum_c opp[c] * (pie[c] - keep[c]) = target
//!            0 <= keep[c] <= pie[c]
//! ```
//!
//! This is a fractional knapsack. Sweeping the multiplier of the equality
//! constraint over the critical ratios `own[c] / opp[c]` in increasing order
//! and handing over issues one at a time gives an optimum with at most one
//! interior coordinate, for weights of either sign.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::scenario::{Package, TOLERANCE};

/// Default bound on the number of tie orderings explored per problem (7!).
pub const DEFAULT_ENUMERATION_CAP: usize = 5040;

#[derive(Clone, Debug, PartialEq)]
pub struct TradeoffProblem {
    pub own: Vec<f64>,
    pub opp: Vec<f64>,
    pub pie: Vec<f64>,
    pub target: f64,
}

impl TradeoffProblem {
    pub fn new(own: &[f64], opp: &[f64], pie: &[f64], target: f64) -> Self {
        debug_assert_eq!(own.len(), opp.len());
        debug_assert_eq!(own.len(), pie.len());
        TradeoffProblem {
            own: own.to_vec(),
            opp: opp.to_vec(),
            pie: pie.to_vec(),
            target,
        }
    }

    /// Range of opponent utilities any allocation can produce.
    pub fn achievable(&self) -> (f64, f64) {
        self.opp
            .iter()
            .zip(&self.pie)
            .fold((0.0, 0.0), |(lo, hi), (o, p)| {
                (lo + (o * p).min(0.0), hi + (o * p).max(0.0))
            })
    }

    pub fn own_utility(&self, keep: &[f64]) -> f64 {
        self.own.iter().zip(keep).map(|(w, k)| w * k).sum()
    }

    pub fn opponent_utility(&self, keep: &[f64]) -> f64 {
        self.opp
            .iter()
            .zip(keep)
            .zip(&self.pie)
            .map(|((w, k), p)| w * (p - k))
            .sum()
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.achievable();
        1.0 + lo.abs().max(hi.abs())
    }
}

/// Issues sharing an exchange ratio, found by exact cross-multiplication.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieGroupAnalysis {
    /// Groups of two or more issues with identical `own/opp` ratio.
    pub groups: Vec<Vec<usize>>,
    /// Number of give-away orderings, the product of the group sizes' factorials.
    pub multiplicity: u128,
}

impl TieGroupAnalysis {
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

/// Ratio classes among issues with nonzero opponent weight, in increasing ratio order.
fn ratio_classes(own: &[f64], opp: &[f64]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for c in (0..own.len()).filter(|&c| opp[c] != 0.0) {
        match classes
            .iter_mut()
            .find(|class| same_ratio(own, opp, class[0], c))
        {
            Some(class) => class.push(c),
            None => classes.push(vec![c]),
        }
    }
    classes.sort_by(|p, q| {
        let rp = own[p[0]] / opp[p[0]];
        let rq = own[q[0]] / opp[q[0]];
        rp.total_cmp(&rq)
    });
    classes
}

fn same_ratio(own: &[f64], opp: &[f64], c: usize, d: usize) -> bool {
    own[c] * opp[d] == own[d] * opp[c]
}

pub fn tie_groups(own: &[f64], opp: &[f64]) -> TieGroupAnalysis {
    let groups: Vec<Vec<usize>> = ratio_classes(own, opp)
        .into_iter()
        .filter(|class| class.len() > 1)
        .collect();
    let multiplicity = groups
        .iter()
        .map(|g| (1..=g.len() as u128).product::<u128>())
        .product();
    TieGroupAnalysis {
        groups,
        multiplicity,
    }
}

/// Hands issues over in the given class order; `orders[k]` lists the issues of class `k`.
fn allocate(p: &TradeoffProblem, orders: &[Vec<usize>]) -> Result<Vec<f64>> {
    let (low, high) = p.achievable();
    let slack = TOLERANCE * p.scale();
    if !(p.target >= low - slack && p.target <= high + slack) {
        return Err(Error::InfeasibleTarget {
            target: p.target,
            low,
            high,
        });
    }

    let mut keep = p.pie.clone();
    for ((k, &own), &opp) in keep.iter_mut().zip(&p.own).zip(&p.opp) {
        // Negative-weight issues start on the opponent's side; zero-weight ones go by own sign.
        if opp < 0.0 || (opp == 0.0 && own < 0.0) {
            *k = 0.0;
        }
    }

    let mut need = p.target - low;
    let stop = 1e-12 * p.scale();
    'classes: for order in orders {
        for &c in order {
            if need <= stop {
                break 'classes;
            }
            let span = p.opp[c].abs() * p.pie[c];
            let mut fraction = need / span;
            if fraction >= 1.0 - 1e-12 {
                fraction = 1.0;
            }
            let handed = fraction * p.pie[c];
            keep[c] = if p.opp[c] > 0.0 {
                p.pie[c] - handed
            } else {
                handed
            };
            need -= fraction * span;
        }
    }
    for (k, pie) in keep.iter_mut().zip(&p.pie) {
        *k = k.clamp(0.0, *pie);
    }
    Ok(keep)
}

/// Optimal kept shares for the offering agent; ties inside a ratio class go by issue index.
pub fn solve_tradeoff(p: &TradeoffProblem) -> Result<Vec<f64>> {
    let classes = ratio_classes(&p.own, &p.opp);
    allocate(p, &classes)
}

/// All distinct optimal allocations reachable by reordering issues within tie groups.
pub fn enumerate_optimal_packages(
    p: &TradeoffProblem,
    ties: &TieGroupAnalysis,
    cap: usize,
) -> Result<Vec<Vec<f64>>> {
    if ties.multiplicity > cap as u128 {
        return Err(Error::EnumerationCap {
            required: ties.multiplicity,
            cap,
        });
    }
    let classes = ratio_classes(&p.own, &p.opp);
    if ties.groups.is_empty() {
        return Ok(vec![allocate(p, &classes)?]);
    }

    let per_class: Vec<Vec<Vec<usize>>> = classes
        .iter()
        .map(|class| {
            if class.len() == 1 {
                vec![class.clone()]
            } else {
                class.iter().copied().permutations(class.len()).collect()
            }
        })
        .collect();

    let mut out: Vec<Vec<f64>> = Vec::new();
    for orders in per_class.into_iter().multi_cartesian_product() {
        let keep = allocate(p, &orders)?;
        let duplicate = out
            .iter()
            .any(|k| k.iter().zip(&keep).all(|(u, v)| (u - v).abs() <= 1e-12));
        if !duplicate {
            out.push(keep);
        }
    }
    Ok(out)
}

/// Result of picking among equally good tradeoff packages.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub package: Package,
    pub value: f64,
    /// How many candidates attain the maximum value (within tolerance).
    pub tied: usize,
}

/// Picks the candidate with the highest evaluator value; remaining ties go to the
/// lexicographically smallest a-share vector.
pub fn select_by_expected_utility<F>(candidates: &[Package], mut evaluate: F) -> Selection
where
    F: FnMut(&Package) -> f64,
{
    assert!(!candidates.is_empty(), "no candidate packages");
    let values: Vec<f64> = candidates.iter().map(&mut evaluate).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..candidates.len())
        .filter(|&k| values[k] >= best - TOLERANCE)
        .collect();
    let chosen = *winners
        .iter()
        .min_by(|&&p, &&q| lexicographic(&candidates[p].x, &candidates[q].x))
        .expect("at least one winner");
    Selection {
        package: candidates[chosen].clone(),
        value: values[chosen],
        tied: winners.len(),
    }
}

fn lexicographic(p: &[f64], q: &[f64]) -> std::cmp::Ordering {
    p.iter()
        .zip(q)
        .map(|(u, v)| u.total_cmp(v))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Agent;

    fn close(p: &[f64], q: &[f64]) -> bool {
        p.iter().zip(q).all(|(u, v)| (u - v).abs() < 1e-12)
    }

    #[test]
    fn bundle_example_as_one_part() {
        let p = TradeoffProblem::new(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.25], &[1.0; 3], 0.875);
        let keep = solve_tradeoff(&p).unwrap();
        assert!(close(&keep, &[0.125, 1.0, 1.0]));
        assert!((p.own_utility(&keep) - 5.125).abs() < 1e-12);
    }

    #[test]
    fn zero_target_keeps_everything() {
        let p = TradeoffProblem::new(&[1.0, 2.0], &[3.0, 4.0], &[0.5, 0.5], 0.0);
        assert_eq!(solve_tradeoff(&p).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn offer_targeting_second_type() {
        let p = TradeoffProblem::new(&[1.0, 2.0], &[5.0, 1.0], &[1.0, 1.0], 3.0);
        let keep = solve_tradeoff(&p).unwrap();
        assert!(close(&keep, &[0.4, 1.0]));
        assert!((p.own_utility(&keep) - 2.4).abs() < 1e-12);
    }

    #[test]
    fn infeasible_target_is_an_error() {
        let p = TradeoffProblem::new(&[1.0], &[1.0], &[0.5], 0.75);
        assert!(matches!(
            solve_tradeoff(&p),
            Err(Error::InfeasibleTarget { .. })
        ));
    }

    #[test]
    fn zero_opponent_weight_goes_by_own_sign() {
        let p = TradeoffProblem::new(&[2.0, -1.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 1.0], &[1.0; 4], 0.5);
        let keep = solve_tradeoff(&p).unwrap();
        assert!(close(&keep, &[1.0, 0.0, 1.0, 0.5]));
    }

    #[test]
    fn tie_group_examples() {
        let t = tie_groups(&[5.0, 6.0, 7.0, 8.0], &[9.0, 6.0, 7.0, 8.0]);
        assert_eq!(t.groups, vec![vec![1, 2, 3]]);
        assert_eq!(t.multiplicity, 6);

        let t = tie_groups(&[1.0, 2.0], &[5.0, 1.0]);
        assert_eq!(t.group_count(), 0);
        assert_eq!(t.multiplicity, 1);

        let t = tie_groups(&[3.0], &[2.0]);
        assert_eq!(t.group_count(), 0);
        assert_eq!(t.multiplicity, 1);
    }

    #[test]
    fn tied_ratio_alternatives() {
        let p = TradeoffProblem::new(&[1.0, 2.0], &[2.0, 4.0], &[1.0, 1.0], 3.0);
        let ties = tie_groups(&p.own, &p.opp);
        let mut all = enumerate_optimal_packages(&p, &ties, DEFAULT_ENUMERATION_CAP).unwrap();
        all.sort_by(|u, v| lexicographic(u, v));
        assert_eq!(all.len(), 2);
        assert!(close(&all[0], &[0.0, 0.75]));
        assert!(close(&all[1], &[1.0, 0.25]));
        for keep in &all {
            assert!((p.own_utility(keep) - 1.5).abs() < 1e-12);
            assert!((p.opponent_utility(keep) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn untied_problem_enumerates_one_package() {
        let p = TradeoffProblem::new(&[1.0, 2.0], &[5.0, 1.0], &[1.0, 1.0], 3.0);
        let ties = tie_groups(&p.own, &p.opp);
        let all = enumerate_optimal_packages(&p, &ties, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let w = vec![1.0; 8];
        let p = TradeoffProblem::new(&w, &w, &w, 4.0);
        let ties = tie_groups(&p.own, &p.opp);
        assert_eq!(ties.multiplicity, 40320);
        assert_eq!(
            enumerate_optimal_packages(&p, &ties, DEFAULT_ENUMERATION_CAP).unwrap_err(),
            Error::EnumerationCap {
                required: 40320,
                cap: 5040
            }
        );
    }

    #[test]
    fn selection_prefers_value_then_lexicographic_order() {
        let pie = [1.0, 1.0];
        let first = Package::from_kept(Agent::A, 1, &[0.0, 0.75], &pie);
        let second = Package::from_kept(Agent::A, 1, &[1.0, 0.25], &pie);
        let pick = select_by_expected_utility(std::slice::from_ref(&first), |_| 0.0);
        assert_eq!(pick.package, first);

        let values = [1.5, 2.16];
        let cands = vec![first.clone(), second.clone()];
        let pick = select_by_expected_utility(&cands, |p| if p == &first { values[0] } else { values[1] });
        assert_eq!(pick.package, second);
        assert_eq!(pick.tied, 1);

        let pick = select_by_expected_utility(&[second, first.clone()], |_| 1.0);
        assert_eq!(pick.package, first);
        assert_eq!(pick.tied, 2);
    }
}
