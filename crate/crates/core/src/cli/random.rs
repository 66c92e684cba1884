//! Seeded random scenarios for sweeps and property runs.
//!
//! Draws: m in 1..=5, n in 1..=6, r in 1..=3, discounts in [0.3, 1.0],
//! weights in [0.1, 10] (or [-5, 10] under interdependence, used directly as
//! signed effective weights), priors as normalized uniform draws, and a
//! random ordered partition.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::scenario::{validate_scenario, Agent, RawScenario, Scenario, Setting};

/// Ranges the generator draws from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ranges {
    pub max_issues: usize,
    pub max_deadline: usize,
    pub max_types: usize,
}

impl Default for Ranges {
    fn default() -> Self {
        Ranges {
            max_issues: 5,
            max_deadline: 6,
            max_types: 3,
        }
    }
}

fn distribution<R: Rng>(rng: &mut R, r: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..r).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|p| p / total).collect()
}

/// Ordered split of `0..m` into non-empty parts.
pub fn random_partition<R: Rng>(rng: &mut R, m: usize) -> Vec<Vec<usize>> {
    let mut issues: Vec<usize> = (0..m).collect();
    issues.shuffle(rng);
    let parts = rng.gen_range(1..=m);
    let mut cuts: Vec<usize> = (1..m).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut from = 0;
    for cut in cuts.into_iter().chain(std::iter::once(m)) {
        let mut part = issues[from..cut].to_vec();
        part.sort_unstable();
        out.push(part);
        from = cut;
    }
    out
}

pub fn random_scenario<R: Rng>(rng: &mut R, setting: Setting, ranges: Ranges) -> Scenario {
    let m = rng.gen_range(1..=ranges.max_issues);
    let n = rng.gen_range(1..=ranges.max_deadline);
    let r = rng.gen_range(1..=ranges.max_types);
    let discounts = (0..m).map(|_| rng.gen_range(0.3..=1.0)).collect();
    let weights = (0..r)
        .map(|_| {
            (0..m)
                .map(|_| {
                    if setting.is_interdependent() {
                        rng.gen_range(-5.0..=10.0)
                    } else {
                        rng.gen_range(0.1..=10.0)
                    }
                })
                .collect()
        })
        .collect();
    let prior_a = distribution(rng, r);
    let prior_b = distribution(rng, r);
    let true_type_a = rng.gen_range(0..r);
    let true_type_b = rng.gen_range(0..r);
    let first_mover = if rng.gen_bool(0.5) { Agent::A } else { Agent::B };
    let partition = Some(random_partition(rng, m));
    validate_scenario(RawScenario {
        deadline: n,
        discounts,
        setting,
        first_mover,
        weights,
        prior_a,
        prior_b,
        true_type_a,
        true_type_b,
        partition,
        interdependence: None,
    })
    .expect("generator draws satisfy every scenario invariant")
}
