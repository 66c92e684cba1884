//! Domain types for a bilateral multi-issue bargaining instance.
//!
//! All issue and type indices are 0-based in the API; the scenario file format
//! and error messages use 1-based indices.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Global comparison tolerance for shares and utilities.
pub const TOLERANCE: f64 = 1e-9;

/// Probability vectors within this distance of summing to one are renormalized.
const PROBABILITY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Agent {
    A,
    B,
}

impl Agent {
    pub fn opponent(self) -> Agent {
        match self {
            Agent::A => Agent::B,
            Agent::B => Agent::A,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Agent::A => "a",
            Agent::B => "b",
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Agent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "a" | "A" => Ok(Agent::A),
            "b" | "B" => Ok(Agent::B),
            other => Err(format!("unknown agent `{other}`, expected `a` or `b`")),
        }
    }
}

/// Information setting of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Complete information.
    Ci,
    /// Symmetric uncertainty, independent issues.
    SuI,
    /// Asymmetric uncertainty (a knows b's type), independent issues.
    AuI,
    /// Symmetric uncertainty, interdependent issues.
    SuD,
    /// Asymmetric uncertainty, interdependent issues.
    AuD,
}

impl Setting {
    pub const ALL: [Setting; 5] = [
        Setting::Ci,
        Setting::SuI,
        Setting::AuI,
        Setting::SuD,
        Setting::AuD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Ci => "CI",
            Setting::SuI => "SU_I",
            Setting::AuI => "AU_I",
            Setting::SuD => "SU_D",
            Setting::AuD => "AU_D",
        }
    }

    pub fn is_complete(self) -> bool {
        self == Setting::Ci
    }

    pub fn is_asymmetric(self) -> bool {
        matches!(self, Setting::AuI | Setting::AuD)
    }

    pub fn is_interdependent(self) -> bool {
        matches!(self, Setting::SuD | Setting::AuD)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        Setting::ALL
            .into_iter()
            .find(|setting| setting.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown setting `{s}`, expected one of CI, SU_I, AU_I, SU_D, AU_D")
            })
    }
}

/// The r possible weight vectors shared by both agents, plus the priors over them.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeSpace {
    weights: Vec<Vec<f64>>,
    prior_a: Vec<f64>,
    prior_b: Vec<f64>,
}

impl TypeSpace {
    /// Builds a type space, renormalizing priors that sum to one within 1e-9.
    pub fn new(weights: Vec<Vec<f64>>, prior_a: Vec<f64>, prior_b: Vec<f64>) -> Result<Self> {
        let r = weights.len();
        if r == 0 {
            return Err(Error::NotPositive { field: "r" });
        }
        let m = weights[0].len();
        for (i, row) in weights.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Shape {
                    field: "K",
                    expected: m,
                    found: row.len(),
                });
            }
            if let Some(c) = row.iter().position(|w| !w.is_finite()) {
                return Err(Error::NonFiniteWeight {
                    type_index: i + 1,
                    issue: c + 1,
                });
            }
        }
        let prior_a = normalize_distribution("Pa", prior_a, r)?;
        let prior_b = normalize_distribution("Pb", prior_b, r)?;
        Ok(TypeSpace {
            weights,
            prior_a,
            prior_b,
        })
    }

    pub fn type_count(&self) -> usize {
        self.weights.len()
    }

    pub fn issue_count(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self, type_index: usize) -> &[f64] {
        &self.weights[type_index]
    }

    pub fn weight_matrix(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Prior over the types of `agent` (Pa for a, Pb for b).
    pub fn prior(&self, agent: Agent) -> &[f64] {
        match agent {
            Agent::A => &self.prior_a,
            Agent::B => &self.prior_b,
        }
    }

    /// Keeps only the given issue columns.
    pub fn restrict(&self, issues: &[usize]) -> TypeSpace {
        TypeSpace {
            weights: self
                .weights
                .iter()
                .map(|row| issues.iter().map(|&c| row[c]).collect())
                .collect(),
            prior_a: self.prior_a.clone(),
            prior_b: self.prior_b.clone(),
        }
    }
}

fn normalize_distribution(field: &'static str, probs: Vec<f64>, r: usize) -> Result<Vec<f64>> {
    if probs.len() != r {
        return Err(Error::Shape {
            field,
            expected: r,
            found: probs.len(),
        });
    }
    if let Some((index, &value)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::InvalidProbability {
            field,
            index: index + 1,
            value,
        });
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_SLACK {
        return Err(Error::ProbabilitySum { field, sum });
    }
    // Dividing an already normalized vector would only shuffle the last bits.
    if (sum - 1.0).abs() <= 8.0 * f64::EPSILON {
        return Ok(probs);
    }
    Ok(probs.into_iter().map(|p| p / sum).collect())
}

/// Ordered, disjoint, covering split of the issues; the order is the sequential agenda.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(parts: Vec<Vec<usize>>, issue_count: usize) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::NotPositive {
                field: "partition count",
            });
        }
        let mut seen = vec![false; issue_count];
        for (p, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::PartitionEmptyPart { part: p + 1 });
            }
            for &c in part {
                if c >= issue_count {
                    return Err(Error::PartitionOutOfRange {
                        issue: c + 1,
                        m: issue_count,
                    });
                }
                if seen[c] {
                    return Err(Error::PartitionOverlap { issue: c + 1 });
                }
                seen[c] = true;
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::PartitionMissing { issue: c + 1 });
        }
        Ok(Partition { parts })
    }

    /// The package-deal partition: every issue in one bundle.
    pub fn single(issue_count: usize) -> Self {
        Partition {
            parts: vec![(0..issue_count).collect()],
        }
    }

    pub fn singletons(issue_count: usize) -> Self {
        Partition {
            parts: (0..issue_count).map(|c| vec![c]).collect(),
        }
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }
}

/// An offer at time `t`: `x` holds a's shares and `y` holds b's shares.
#[derive(Clone, Debug, PartialEq)]
pub struct Package {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Package {
    /// Builds the package in which `offerer` keeps `kept` out of each pie.
    pub fn from_kept(offerer: Agent, t: usize, kept: &[f64], pie: &[f64]) -> Package {
        let rest: Vec<f64> = kept
            .iter()
            .zip(pie)
            .map(|(k, p)| (p - k).max(0.0))
            .collect();
        match offerer {
            Agent::A => Package {
                t,
                x: kept.to_vec(),
                y: rest,
            },
            Agent::B => Package {
                t,
                x: rest,
                y: kept.to_vec(),
            },
        }
    }

    pub fn share(&self, agent: Agent) -> &[f64] {
        match agent {
            Agent::A => &self.x,
            Agent::B => &self.y,
        }
    }

    /// True when every share is nonnegative and each issue splits its pie exactly.
    pub fn is_valid(&self, discounts: &[f64]) -> bool {
        self.x.len() == discounts.len()
            && self.y.len() == discounts.len()
            && self
                .x
                .iter()
                .zip(&self.y)
                .zip(discounts)
                .all(|((x, y), d)| {
                    *x >= -TOLERANCE
                        && *y >= -TOLERANCE
                        && (x + y - pie_size(*d, self.t)).abs() <= TOLERANCE
                })
    }

    /// Componentwise match within the global tolerance.
    pub fn approx_eq(&self, other: &Package) -> bool {
        self.t == other.t
            && self.x.len() == other.x.len()
            && self
                .x
                .iter()
                .zip(&other.x)
                .chain(self.y.iter().zip(&other.y))
                .all(|(p, q)| (p - q).abs() <= TOLERANCE)
    }
}

/// Support and posterior over the opponent's types, stored densely over all r types.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState {
    probs: Vec<f64>,
}

impl BeliefState {
    pub fn from_prior(prior: &[f64]) -> Self {
        BeliefState {
            probs: prior.to_vec(),
        }
    }

    pub fn point_mass(type_count: usize, type_index: usize) -> Self {
        let mut probs = vec![0.0; type_count];
        probs[type_index] = 1.0;
        BeliefState { probs }
    }

    pub fn uniform(type_count: usize) -> Self {
        BeliefState {
            probs: vec![1.0 / type_count as f64; type_count],
        }
    }

    pub fn type_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probability(&self, type_index: usize) -> f64 {
        self.probs[type_index]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn contains(&self, type_index: usize) -> bool {
        self.probs[type_index] > 0.0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.contains(i)).collect()
    }

    /// Bayes' rule restricted to `keep`; `None` when no probability mass survives.
    pub fn restricted_to(&self, keep: &[usize]) -> Option<BeliefState> {
        let mut probs = vec![0.0; self.probs.len()];
        for &i in keep {
            probs[i] = self.probs[i];
        }
        let mass: f64 = probs.iter().sum();
        if mass <= 0.0 {
            return None;
        }
        probs.iter_mut().for_each(|p| *p /= mass);
        Some(BeliefState { probs })
    }

    pub fn without(&self, type_index: usize) -> Option<BeliefState> {
        let keep: Vec<usize> = self
            .support()
            .into_iter()
            .filter(|&i| i != type_index)
            .collect();
        self.restricted_to(&keep)
    }
}

/// Per-type issue-by-issue interdependence coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Interdependence {
    pub chi: Vec<Vec<Vec<f64>>>,
}

/// Unvalidated scenario, as read from a file or built by hand.
#[derive(Clone, Debug, PartialEq)]
pub struct RawScenario {
    pub deadline: usize,
    pub discounts: Vec<f64>,
    pub setting: Setting,
    pub first_mover: Agent,
    pub weights: Vec<Vec<f64>>,
    pub prior_a: Vec<f64>,
    pub prior_b: Vec<f64>,
    pub true_type_a: usize,
    pub true_type_b: usize,
    pub partition: Option<Vec<Vec<usize>>>,
    pub interdependence: Option<Interdependence>,
}

/// A validated bargaining instance. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    raw: RawScenario,
    types: TypeSpace,
    effective: TypeSpace,
    partition: Partition,
}

impl Scenario {
    pub fn issue_count(&self) -> usize {
        self.raw.discounts.len()
    }

    pub fn deadline(&self) -> usize {
        self.raw.deadline
    }

    pub fn discounts(&self) -> &[f64] {
        &self.raw.discounts
    }

    pub fn setting(&self) -> Setting {
        self.raw.setting
    }

    pub fn first_mover(&self) -> Agent {
        self.raw.first_mover
    }

    /// The type space as written (K, not K-bar).
    pub fn types(&self) -> &TypeSpace {
        &self.types
    }

    /// Weights that enter cumulative utilities: K-bar when interdependence is given, K otherwise.
    pub fn effective_types(&self) -> &TypeSpace {
        &self.effective
    }

    pub fn true_type(&self, agent: Agent) -> usize {
        match agent {
            Agent::A => self.raw.true_type_a,
            Agent::B => self.raw.true_type_b,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn interdependence(&self) -> Option<&Interdependence> {
        self.raw.interdependence.as_ref()
    }

    /// Effective weights of `agent` under its true type.
    pub fn true_weights(&self, agent: Agent) -> &[f64] {
        self.effective.weights(self.true_type(agent))
    }

    pub fn raw(&self) -> &RawScenario {
        &self.raw
    }

    /// Same scenario with different true types.
    pub fn with_true_types(&self, type_a: usize, type_b: usize) -> Result<Scenario> {
        let mut raw = self.raw.clone();
        raw.true_type_a = type_a;
        raw.true_type_b = type_b;
        validate_scenario(raw)
    }

    pub fn with_first_mover(&self, first_mover: Agent) -> Scenario {
        let mut out = self.clone();
        out.raw.first_mover = first_mover;
        out
    }

    pub fn with_partition(&self, parts: Vec<Vec<usize>>) -> Result<Scenario> {
        let mut raw = self.raw.clone();
        raw.partition = Some(parts);
        validate_scenario(raw)
    }
}

/// Checks every scenario invariant and builds the effective weight matrix.
pub fn validate_scenario(raw: RawScenario) -> Result<Scenario> {
    if raw.deadline == 0 {
        return Err(Error::NotPositive { field: "deadline" });
    }
    let m = raw.discounts.len();
    if m == 0 {
        return Err(Error::NotPositive { field: "issues" });
    }
    for (c, &d) in raw.discounts.iter().enumerate() {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::DiscountOutOfRange {
                issue: c + 1,
                value: d,
            });
        }
    }
    let types = TypeSpace::new(
        raw.weights.clone(),
        raw.prior_a.clone(),
        raw.prior_b.clone(),
    )?;
    if types.issue_count() != m {
        return Err(Error::Shape {
            field: "K",
            expected: m,
            found: types.issue_count(),
        });
    }
    let r = types.type_count();
    for (field, value) in [("true_a", raw.true_type_a), ("true_b", raw.true_type_b)] {
        if value >= r {
            return Err(Error::TypeIndexOutOfRange {
                field,
                value: value + 1,
                r,
            });
        }
    }

    let effective = match (&raw.interdependence, raw.setting.is_interdependent()) {
        (Some(_), false) => {
            return Err(Error::Interdependence(format!(
                "coefficients given but setting {} has independent issues",
                raw.setting
            )))
        }
        (Some(inter), true) => {
            if inter.chi.len() != r {
                return Err(Error::Interdependence(format!(
                    "expected {r} matrices (one per type), found {}",
                    inter.chi.len()
                )));
            }
            let mut rows = Vec::with_capacity(r);
            for (i, chi) in inter.chi.iter().enumerate() {
                if chi.len() != m || chi.iter().any(|row| row.len() != m) {
                    return Err(Error::Interdependence(format!(
                        "matrix for type {} must be {m} x {m}",
                        i + 1
                    )));
                }
                if chi.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::Interdependence(format!(
                        "matrix for type {} has non-finite entries",
                        i + 1
                    )));
                }
                rows.push(effective_weight_row(types.weights(i), chi));
            }
            TypeSpace::new(rows, types.prior_a.clone(), types.prior_b.clone())?
        }
        (None, _) => types.clone(),
    };

    if !raw.setting.is_interdependent() {
        for (i, row) in types.weight_matrix().iter().enumerate() {
            if let Some(c) = row.iter().position(|&w| w <= 0.0) {
                return Err(Error::NonPositiveWeight {
                    type_index: i + 1,
                    issue: c + 1,
                    value: row[c],
                    setting: raw.setting.name(),
                });
            }
        }
    }

    let partition = match &raw.partition {
        Some(parts) => Partition::new(parts.clone(), m)?,
        None => Partition::single(m),
    };

    let mut raw = raw;
    raw.prior_a = types.prior(Agent::A).to_vec();
    raw.prior_b = types.prior(Agent::B).to_vec();
    Ok(Scenario {
        raw,
        types,
        effective,
        partition,
    })
}

/// Size of one pie at time `t` (1-based): `discount^(t-1)`.
pub fn pie_size(discount: f64, t: usize) -> f64 {
    discount.powi(t as i32 - 1)
}

pub fn pie_vector(discounts: &[f64], t: usize) -> Vec<f64> {
    discounts.iter().map(|&d| pie_size(d, t)).collect()
}

/// Cumulative utility of `agent` with weights `weights` for `pkg`; zero after the deadline.
pub fn cumulative_utility(agent: Agent, weights: &[f64], pkg: &Package, deadline: usize) -> f64 {
    if pkg.t > deadline {
        return 0.0;
    }
    dot(weights, pkg.share(agent))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn effective_weight_row(weights: &[f64], chi: &[Vec<f64>]) -> Vec<f64> {
    let m = weights.len();
    (0..m)
        .map(|c| {
            let row_sum: f64 = chi[c].iter().sum();
            let col_sum: f64 = chi.iter().map(|row| row[c]).sum();
            weights[c] + (row_sum - col_sum)
        })
        .collect()
}

/// Folds pairwise interdependence into signed linear weights.
///
/// Row `i` of the result satisfies, for every share vector `x`,
/// `sum_c out[i][c] * x[c] == sum_c (K[i][c] * x[c] + sum_j chi[i][c][j] * (x[c] - x[j]))`.
pub fn effective_weights(weights: &[Vec<f64>], chi: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    weights
        .iter()
        .zip(chi)
        .map(|(row, chi)| effective_weight_row(row, chi))
        .collect()
}
