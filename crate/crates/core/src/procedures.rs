//! Package-deal, simultaneous and sequential procedures, simulated along the
//! equilibrium path with the agents' true types.
//!
//! Under complete information each issue set settles at its start period by
//! backward induction. Under uncertainty the offerer recomputes the
//! expected-utility tables every period from the current beliefs, offers the
//! package for its optimal assumed type, and both sides update after a
//! rejection.

use std::fmt;

use crate::complete::{backward_induction_ci, condition_c1, condition_c2, utility_pair_is_pareto, TurnOrder};
use crate::error::Result;
use crate::incomplete::{
    acceptance_decision, compute_eu_tables, condition_c3, condition_c4, condition_c5, lenient_update,
    strict_failure, update_beliefs_offerer, update_beliefs_receiver, BargainingGame, Beliefs,
};
use crate::scenario::{dot, pie_vector, Agent, BeliefState, Package, Scenario, TOLERANCE};
use crate::tradeoff::DEFAULT_ENUMERATION_CAP;

/// How offer turns are assigned to partitions that start after t = 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parity {
    /// The first mover offers at every odd period.
    #[default]
    Global,
    /// The first mover offers first in every partition.
    PartitionReset,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Global => "global",
            Parity::PartitionReset => "reset",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Abort when an update leaves an empty support; otherwise fall back to uniform.
    pub strict: bool,
    pub parity: Parity,
    /// Carry beliefs from one sequential partition into the next.
    pub carry_beliefs: bool,
    pub enumeration_cap: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            strict: true,
            parity: Parity::Global,
            carry_beliefs: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    Accept,
    Reject,
}

/// One offer and the answer it got.
#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry {
    pub t: usize,
    pub offerer: Agent,
    /// Receiver type the offer was tailored to.
    pub assumed_type: usize,
    pub offer: Package,
    /// Receiver's true-type utility of the offer.
    pub receiver_utility: f64,
    /// What the receiver expected by rejecting.
    pub receiver_continuation: f64,
    pub response: Response,
}

impl TranscriptEntry {
    /// Re-applies the acceptance rule to the recorded numbers.
    pub fn replay(&self) -> Response {
        if self.receiver_utility >= self.receiver_continuation - TOLERANCE {
            Response::Accept
        } else {
            Response::Reject
        }
    }
}

/// Earliest and latest agreement periods for a window opening at `start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgreementBounds {
    pub earliest: usize,
    pub latest: usize,
    /// `start + min(2r - 1, n)` before clamping to the deadline.
    pub latest_unclamped: usize,
}

pub fn agreement_time_bounds(r: usize, deadline: usize, start: usize) -> AgreementBounds {
    let latest = if r <= 1 {
        start
    } else {
        (start + 2 * r - 2).min(deadline)
    };
    AgreementBounds {
        earliest: start,
        latest,
        latest_unclamped: start + (2 * r - 1).min(deadline),
    }
}

/// Outcome of negotiating one issue set.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOutcome {
    /// 0-based issue indices.
    pub issues: Vec<usize>,
    pub start: usize,
    pub bounds: AgreementBounds,
    pub agreement: Option<usize>,
    /// Shares over `issues` only.
    pub package: Option<Package>,
    pub utility_a: f64,
    pub utility_b: f64,
    pub transcript: Vec<TranscriptEntry>,
}

impl PartitionOutcome {
    fn conflict(issues: Vec<usize>, start: usize, r: usize, deadline: usize) -> Self {
        PartitionOutcome {
            issues,
            start,
            bounds: AgreementBounds {
                earliest: start,
                latest: start,
                latest_unclamped: start + (2 * r - 1).min(deadline),
            },
            agreement: None,
            package: None,
            utility_a: 0.0,
            utility_b: 0.0,
            transcript: Vec::new(),
        }
    }

    pub fn utility(&self, agent: Agent) -> f64 {
        match agent {
            Agent::A => self.utility_a,
            Agent::B => self.utility_b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    PackageDeal,
    Simultaneous,
    Sequential,
}

impl Procedure {
    pub const ALL: [Procedure; 3] = [Procedure::PackageDeal, Procedure::Simultaneous, Procedure::Sequential];

    pub fn name(self) -> &'static str {
        match self {
            Procedure::PackageDeal => "package",
            Procedure::Simultaneous => "simultaneous",
            Procedure::Sequential => "sequential",
        }
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegotiationOutcome {
    pub procedure: Procedure,
    pub partitions: Vec<PartitionOutcome>,
    pub utility_a: f64,
    pub utility_b: f64,
}

impl NegotiationOutcome {
    fn new(procedure: Procedure, partitions: Vec<PartitionOutcome>) -> Self {
        let utility_a = partitions.iter().map(|p| p.utility_a).sum();
        let utility_b = partitions.iter().map(|p| p.utility_b).sum();
        NegotiationOutcome {
            procedure,
            partitions,
            utility_a,
            utility_b,
        }
    }

    pub fn utility(&self, agent: Agent) -> f64 {
        match agent {
            Agent::A => self.utility_a,
            Agent::B => self.utility_b,
        }
    }

    pub fn agreement_times(&self) -> Vec<Option<usize>> {
        self.partitions.iter().map(|p| p.agreement).collect()
    }
}

fn restrict(values: &[f64], issues: &[usize]) -> Vec<f64> {
    issues.iter().map(|&c| values[c]).collect()
}

/// Beliefs both agents hold before any offer is made.
pub fn initial_beliefs(scenario: &Scenario) -> Beliefs {
    let types = scenario.effective_types();
    let r = types.type_count();
    let of_a = if scenario.setting().is_asymmetric() {
        BeliefState::point_mass(r, scenario.true_type(Agent::B))
    } else {
        BeliefState::from_prior(types.prior(Agent::B))
    };
    Beliefs {
        of_a,
        of_b: BeliefState::from_prior(types.prior(Agent::A)),
    }
}

/// Type count that governs agreement bounds; complete information behaves as r = 1.
pub fn effective_type_count(scenario: &Scenario) -> usize {
    if scenario.setting().is_complete() {
        1
    } else {
        scenario.effective_types().type_count()
    }
}

fn game_for(scenario: &Scenario, issues: &[usize], turns: TurnOrder, options: &SimulationOptions) -> BargainingGame {
    BargainingGame {
        weights: scenario
            .effective_types()
            .weight_matrix()
            .iter()
            .map(|row| restrict(row, issues))
            .collect(),
        discounts: restrict(scenario.discounts(), issues),
        deadline: scenario.deadline(),
        turns,
        enumeration_cap: options.enumeration_cap,
    }
}

fn turns_for(scenario: &Scenario, start: usize, options: &SimulationOptions) -> TurnOrder {
    match options.parity {
        Parity::Global => TurnOrder::new(scenario.first_mover()),
        Parity::PartitionReset => TurnOrder::anchored(scenario.first_mover(), start),
    }
}

/// Plays out the negotiation over `issues` from `start`; returns the outcome
/// and the beliefs held when it ended.
pub fn negotiate(
    scenario: &Scenario,
    issues: &[usize],
    start: usize,
    turns: TurnOrder,
    beliefs: Beliefs,
    options: &SimulationOptions,
) -> Result<(PartitionOutcome, Beliefs)> {
    let n = scenario.deadline();
    let r = effective_type_count(scenario);
    if start > n {
        return Ok((PartitionOutcome::conflict(issues.to_vec(), start, r, n), beliefs));
    }
    let bounds = agreement_time_bounds(r, n, start);
    if scenario.setting().is_complete() {
        let outcome = negotiate_complete(scenario, issues, start, turns, bounds)?;
        return Ok((outcome, beliefs));
    }

    let game = game_for(scenario, issues, turns, options);
    let true_a = scenario.true_type(Agent::A);
    let true_b = scenario.true_type(Agent::B);
    let true_type = |agent: Agent| match agent {
        Agent::A => true_a,
        Agent::B => true_b,
    };

    let mut beliefs = beliefs;
    let mut transcript = Vec::new();
    for t in start..=n {
        let tables = compute_eu_tables(&game, t, &beliefs)?;
        let period = tables.period(t);
        let offerer = period.offerer;
        let receiver = offerer.opponent();
        let i = true_type(offerer);
        let e = true_type(receiver);
        let offer = period.offer(i).clone();
        let accepted = acceptance_decision(&game, e, &offer, &tables);
        transcript.push(TranscriptEntry {
            t,
            offerer,
            assumed_type: period.choice[i],
            offer: offer.clone(),
            receiver_utility: game.utility(receiver, e, &offer),
            receiver_continuation: period.receiver_value[e],
            response: if accepted { Response::Accept } else { Response::Reject },
        });
        if accepted {
            let outcome = PartitionOutcome {
                issues: issues.to_vec(),
                start,
                bounds,
                agreement: Some(t),
                utility_a: game.utility(Agent::A, true_a, &offer),
                utility_b: game.utility(Agent::B, true_b, &offer),
                package: Some(offer),
                transcript,
            };
            return Ok((outcome, beliefs));
        }

        let offerer_view = beliefs.held_by(offerer);
        let updated = match update_beliefs_offerer(offerer_view, period.choice[i]) {
            Some(b) => b,
            None if options.strict => return Err(strict_failure(t, offerer)),
            None => lenient_update(offerer_view),
        };
        let receiver_view = beliefs.held_by(receiver);
        let inferred = match update_beliefs_receiver(receiver_view, &offer, &tables) {
            Some(b) => b,
            None if options.strict => return Err(strict_failure(t, receiver)),
            None => lenient_update(receiver_view),
        };
        *beliefs.held_by_mut(offerer) = updated;
        *beliefs.held_by_mut(receiver) = inferred;
    }
    unreachable!("the offer at the deadline is always accepted")
}

fn negotiate_complete(
    scenario: &Scenario,
    issues: &[usize],
    start: usize,
    turns: TurnOrder,
    bounds: AgreementBounds,
) -> Result<PartitionOutcome> {
    let wa = restrict(scenario.true_weights(Agent::A), issues);
    let wb = restrict(scenario.true_weights(Agent::B), issues);
    let discounts = restrict(scenario.discounts(), issues);
    let eq = backward_induction_ci(&wa, &wb, &discounts, scenario.deadline(), start, turns)?;
    let first = eq.period(start).expect("window is non-empty");
    let receiver = first.offerer.opponent();
    let (receiver_utility, receiver_continuation) = match receiver {
        Agent::A => (eq.utility_a, first.continuation_a),
        Agent::B => (eq.utility_b, first.continuation_b),
    };
    let entry = TranscriptEntry {
        t: start,
        offerer: first.offerer,
        assumed_type: scenario.true_type(receiver),
        offer: first.package.clone(),
        receiver_utility,
        receiver_continuation,
        response: Response::Accept,
    };
    Ok(PartitionOutcome {
        issues: issues.to_vec(),
        start,
        bounds,
        agreement: eq.agreement,
        package: Some(first.package.clone()),
        utility_a: eq.utility_a,
        utility_b: eq.utility_b,
        transcript: vec![entry],
    })
}

/// All issues bundled into one negotiation from t = 1.
pub fn run_package_deal(scenario: &Scenario, options: &SimulationOptions) -> Result<NegotiationOutcome> {
    let issues: Vec<usize> = (0..scenario.issue_count()).collect();
    let turns = turns_for(scenario, 1, options);
    let (outcome, _) = negotiate(scenario, &issues, 1, turns, initial_beliefs(scenario), options)?;
    Ok(NegotiationOutcome::new(Procedure::PackageDeal, vec![outcome]))
}

/// Every partition negotiated independently from t = 1.
pub fn run_simultaneous(scenario: &Scenario, options: &SimulationOptions) -> Result<NegotiationOutcome> {
    let turns = turns_for(scenario, 1, options);
    let partitions = scenario
        .partition()
        .parts()
        .iter()
        .map(|part| negotiate(scenario, part, 1, turns, initial_beliefs(scenario), options).map(|(o, _)| o))
        .collect::<Result<Vec<_>>>()?;
    Ok(NegotiationOutcome::new(Procedure::Simultaneous, partitions))
}

/// Partitions in agenda order; each opens the period after the previous one settles.
pub fn run_sequential(scenario: &Scenario, options: &SimulationOptions) -> Result<NegotiationOutcome> {
    let mut partitions = Vec::with_capacity(scenario.partition().len());
    let mut start = 1;
    let mut carried = initial_beliefs(scenario);
    for part in scenario.partition().parts() {
        let beliefs = if options.carry_beliefs {
            carried.clone()
        } else {
            initial_beliefs(scenario)
        };
        let turns = turns_for(scenario, start, options);
        let (outcome, after) = negotiate(scenario, part, start, turns, beliefs, options)?;
        start = outcome.agreement.map_or(start, |t| t) + 1;
        carried = after;
        partitions.push(outcome);
    }
    Ok(NegotiationOutcome::new(Procedure::Sequential, partitions))
}

pub fn run_procedure(procedure: Procedure, scenario: &Scenario, options: &SimulationOptions) -> Result<NegotiationOutcome> {
    match procedure {
        Procedure::PackageDeal => run_package_deal(scenario, options),
        Procedure::Simultaneous => run_simultaneous(scenario, options),
        Procedure::Sequential => run_sequential(scenario, options),
    }
}

/// Ex-ante utilities: the procedure's realized utilities averaged over every
/// pair of true types, weighted by the priors. Complete information has a
/// single pair, so the realized utilities are returned.
pub fn expected_utilities(procedure: Procedure, scenario: &Scenario, options: &SimulationOptions) -> Result<(f64, f64)> {
    if scenario.setting().is_complete() {
        let outcome = run_procedure(procedure, scenario, options)?;
        return Ok((outcome.utility_a, outcome.utility_b));
    }
    let types = scenario.effective_types();
    let (pa, pb) = (types.prior(Agent::A), types.prior(Agent::B));
    let mut total = (0.0, 0.0);
    for (i, &p) in pa.iter().enumerate().filter(|(_, &p)| p > 0.0) {
        for (e, &q) in pb.iter().enumerate().filter(|(_, &q)| q > 0.0) {
            let outcome = run_procedure(procedure, &scenario.with_true_types(i, e)?, options)?;
            total.0 += p * q * outcome.utility_a;
            total.1 += p * q * outcome.utility_b;
        }
    }
    Ok(total)
}

/// Whether the outcome's utility pair lies on the frontier of the pies
/// available at its earliest agreement period, under the true-type weights.
pub fn outcome_is_pareto(scenario: &Scenario, outcome: &NegotiationOutcome) -> Result<bool> {
    let Some(t) = outcome.partitions.iter().filter_map(|p| p.agreement).min() else {
        return Ok(false);
    };
    let pie = pie_vector(scenario.discounts(), t);
    utility_pair_is_pareto(
        outcome.utility_a,
        outcome.utility_b,
        scenario.true_weights(Agent::A),
        scenario.true_weights(Agent::B),
        &pie,
    )
}

/// Utilities and verdicts for one procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcedureReport {
    pub outcome: NegotiationOutcome,
    pub expected_a: f64,
    pub expected_b: f64,
    pub pareto: bool,
}

impl ProcedureReport {
    pub fn expected(&self, agent: Agent) -> f64 {
        match agent {
            Agent::A => self.expected_a,
            Agent::B => self.expected_b,
        }
    }
}

/// Uniqueness verdicts; `None` where a predicate does not apply to the setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct UniquenessVerdicts {
    pub c1: Option<bool>,
    pub c2: Option<bool>,
    pub c3: Option<bool>,
    pub c4: Option<bool>,
    pub c5: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub parity: Parity,
    pub package: ProcedureReport,
    pub simultaneous: ProcedureReport,
    pub sequential: ProcedureReport,
    /// Per agent (a, b): package deal at least as good as simultaneous.
    pub package_dominates_simultaneous: (bool, bool),
    /// Per agent (a, b): simultaneous at least as good as sequential.
    pub simultaneous_dominates_sequential: (bool, bool),
    pub uniqueness: UniquenessVerdicts,
}

impl ComparisonReport {
    pub fn report(&self, procedure: Procedure) -> &ProcedureReport {
        match procedure {
            Procedure::PackageDeal => &self.package,
            Procedure::Simultaneous => &self.simultaneous,
            Procedure::Sequential => &self.sequential,
        }
    }

    pub fn dominance_holds(&self) -> bool {
        let (p, q) = self.package_dominates_simultaneous;
        let (s, u) = self.simultaneous_dominates_sequential;
        p && q && s && u
    }
}

fn procedure_report(procedure: Procedure, scenario: &Scenario, options: &SimulationOptions) -> Result<ProcedureReport> {
    let outcome = run_procedure(procedure, scenario, options)?;
    let (expected_a, expected_b) = expected_utilities(procedure, scenario, options)?;
    let pareto = outcome_is_pareto(scenario, &outcome)?;
    Ok(ProcedureReport {
        outcome,
        expected_a,
        expected_b,
        pareto,
    })
}

/// Evaluates the uniqueness predicates that apply to the scenario's setting.
pub fn uniqueness_verdicts(scenario: &Scenario, options: &SimulationOptions) -> Result<UniquenessVerdicts> {
    let all: Vec<usize> = (0..scenario.issue_count()).collect();
    if scenario.setting().is_complete() {
        let wa = scenario.true_weights(Agent::A);
        let wb = scenario.true_weights(Agent::B);
        return Ok(UniquenessVerdicts {
            c1: Some(condition_c1(wa, wb, &all)),
            c2: Some(condition_c2(wa, wb, scenario.partition().parts())),
            ..UniquenessVerdicts::default()
        });
    }
    let types = scenario.effective_types();
    let c4_on = |issues: &[usize]| -> Result<bool> {
        let game = game_for(scenario, issues, turns_for(scenario, 1, options), options);
        let tables = compute_eu_tables(&game, 1, &initial_beliefs(scenario))?;
        Ok(condition_c4(&tables))
    };
    let per_part = scenario
        .partition()
        .parts()
        .iter()
        .map(|part| Ok((condition_c3(types, part), c4_on(part)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(UniquenessVerdicts {
        c3: Some(condition_c3(types, &all)),
        c4: Some(c4_on(&all)?),
        c5: Some(condition_c5(&per_part)),
        ..UniquenessVerdicts::default()
    })
}

/// Runs all three procedures with the same first mover and compares them.
pub fn compare_procedures(scenario: &Scenario, options: &SimulationOptions) -> Result<ComparisonReport> {
    let package = procedure_report(Procedure::PackageDeal, scenario, options)?;
    let simultaneous = procedure_report(Procedure::Simultaneous, scenario, options)?;
    let sequential = procedure_report(Procedure::Sequential, scenario, options)?;
    let at_least = |p: &ProcedureReport, q: &ProcedureReport, agent: Agent| p.expected(agent) >= q.expected(agent) - TOLERANCE;
    Ok(ComparisonReport {
        parity: options.parity,
        package_dominates_simultaneous: (
            at_least(&package, &simultaneous, Agent::A),
            at_least(&package, &simultaneous, Agent::B),
        ),
        simultaneous_dominates_sequential: (
            at_least(&simultaneous, &sequential, Agent::A),
            at_least(&simultaneous, &sequential, Agent::B),
        ),
        uniqueness: uniqueness_verdicts(scenario, options)?,
        package,
        simultaneous,
        sequential,
    })
}

/// Utility of `agent`'s true type for a partition package, recomputed from its shares.
pub fn recompute_utility(scenario: &Scenario, agent: Agent, outcome: &PartitionOutcome) -> f64 {
    match &outcome.package {
        Some(pkg) if pkg.t <= scenario.deadline() => {
            dot(&restrict(scenario.true_weights(agent), &outcome.issues), pkg.share(agent))
        }
        _ => 0.0,
    }
}
