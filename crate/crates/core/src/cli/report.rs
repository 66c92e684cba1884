//! Text rendering and CSV rows.

use std::fmt::Write as _;
use std::io;

use crate::complete::CiEquilibrium;
use crate::incomplete::EuTables;
use crate::procedures::{ComparisonReport, NegotiationOutcome, Procedure, Response};
use crate::scenario::{Agent, Package, Scenario};

pub const CSV_HEADER: [&str; 14] = [
    "scenario_id",
    "procedure",
    "agent",
    "utility",
    "expected_utility",
    "agreement_times",
    "pareto",
    "c1",
    "c2",
    "c3",
    "c4",
    "c5",
    "first_mover",
    "seed",
];

fn verdict(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "true",
        Some(false) => "false",
        None => "n/a",
    }
}

/// Agreement periods joined by `;`, with `none` for a partition that never opened.
pub fn agreement_times(outcome: &NegotiationOutcome) -> String {
    outcome
        .agreement_times()
        .iter()
        .map(|t| t.map_or("none".to_string(), |t| t.to_string()))
        .collect::<Vec<_>>()
        .join(";")
}

/// One CSV line: one procedure, one agent.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub scenario_id: usize,
    pub procedure: Procedure,
    pub agent: Agent,
    pub utility: f64,
    pub expected_utility: f64,
    pub agreement_times: String,
    pub pareto: Option<bool>,
    pub c1: Option<bool>,
    pub c2: Option<bool>,
    pub c3: Option<bool>,
    pub c4: Option<bool>,
    pub c5: Option<bool>,
    pub first_mover: Agent,
    pub seed: u64,
}

impl ResultRow {
    pub fn record(&self) -> [String; 14] {
        [
            self.scenario_id.to_string(),
            self.procedure.to_string(),
            self.agent.to_string(),
            self.utility.to_string(),
            self.expected_utility.to_string(),
            self.agreement_times.clone(),
            verdict(self.pareto).to_string(),
            verdict(self.c1).to_string(),
            verdict(self.c2).to_string(),
            verdict(self.c3).to_string(),
            verdict(self.c4).to_string(),
            verdict(self.c5).to_string(),
            self.first_mover.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Six rows per comparison: three procedures times two agents.
pub fn comparison_rows(scenario_id: usize, scenario: &Scenario, report: &ComparisonReport, seed: u64) -> Vec<ResultRow> {
    let mut rows = Vec::with_capacity(6);
    for procedure in Procedure::ALL {
        let r = report.report(procedure);
        for agent in [Agent::A, Agent::B] {
            rows.push(ResultRow {
                scenario_id,
                procedure,
                agent,
                utility: r.outcome.utility(agent),
                expected_utility: r.expected(agent),
                agreement_times: agreement_times(&r.outcome),
                pareto: Some(r.pareto),
                c1: report.uniqueness.c1,
                c2: report.uniqueness.c2,
                c3: report.uniqueness.c3,
                c4: report.uniqueness.c4,
                c5: report.uniqueness.c5,
                first_mover: scenario.first_mover(),
                seed,
            });
        }
    }
    rows
}

pub fn write_csv<W: io::Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.record())?;
    }
    writer.flush()?;
    Ok(())
}

fn shares(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn package_line(pkg: &Package) -> String {
    format!("a {} | b {}", shares(&pkg.x), shares(&pkg.y))
}

pub fn render_ci(eq: &CiEquilibrium) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "complete-information equilibrium from t = {}", eq.start);
    for p in &eq.periods {
        let _ = writeln!(
            out,
            "  t = {}  {} offers  {}  UA = {:.6}  UB = {:.6}",
            p.t,
            p.offerer,
            package_line(&p.package),
            p.continuation_a,
            p.continuation_b
        );
    }
    match eq.agreement {
        Some(t) => {
            let _ = writeln!(out, "agreement at t = {t}: a = {:.9}, b = {:.9}", eq.utility_a, eq.utility_b);
        }
        None => {
            let _ = writeln!(out, "window opens after the deadline: no agreement");
        }
    }
    out
}

pub fn render_tables(tables: &EuTables) -> String {
    let mut out = String::new();
    for period in &tables.periods {
        let receiver = period.receiver();
        let _ = writeln!(out, "t = {}  offerer {}", period.t, period.offerer);
        for (i, row) in period.offer_value.iter().enumerate() {
            let values: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(
                out,
                "  type {}: EU{}(.,j) = [{}]  choice {}  offer {}",
                i + 1,
                period.offerer.label().to_uppercase(),
                values.join(", "),
                period.choice[i] + 1,
                package_line(period.offer(i))
            );
        }
        let values: Vec<String> = period.receiver_value.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(out, "  receiver {} continuation: [{}]", receiver, values.join(", "));
    }
    out
}

pub fn render_outcome(outcome: &NegotiationOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "procedure: {}", outcome.procedure);
    for (k, part) in outcome.partitions.iter().enumerate() {
        let issues: Vec<String> = part.issues.iter().map(|c| (c + 1).to_string()).collect();
        let _ = writeln!(
            out,
            "partition {} (issues {}), start {}, bounds [{}, {}] (unclamped {})",
            k + 1,
            issues.join(","),
            part.start,
            part.bounds.earliest,
            part.bounds.latest,
            part.bounds.latest_unclamped
        );
        for entry in &part.transcript {
            let response = match entry.response {
                Response::Accept => "accept",
                Response::Reject => "reject",
            };
            let _ = writeln!(
                out,
                "  t = {}  {} offers (assumes type {})  {}  -> {} ({:.6} vs {:.6})",
                entry.t,
                entry.offerer,
                entry.assumed_type + 1,
                package_line(&entry.offer),
                response,
                entry.receiver_utility,
                entry.receiver_continuation
            );
        }
        match part.agreement {
            Some(t) => {
                let _ = writeln!(out, "  agreement at t = {t}: a = {:.9}, b = {:.9}", part.utility_a, part.utility_b);
            }
            None => {
                let _ = writeln!(out, "  no agreement (opens after the deadline)");
            }
        }
    }
    let _ = writeln!(out, "total: a = {:.9}, b = {:.9}", outcome.utility_a, outcome.utility_b);
    out
}

pub fn render_comparison(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "turn parity: {}", report.parity.name());
    let _ = writeln!(
        out,
        "{:<13} {:>14} {:>14} {:>14} {:>14}  {:<10} pareto",
        "procedure", "a", "b", "E[a]", "E[b]", "agreement"
    );
    for procedure in Procedure::ALL {
        let r = report.report(procedure);
        let _ = writeln!(
            out,
            "{:<13} {:>14.9} {:>14.9} {:>14.9} {:>14.9}  {:<10} {}",
            procedure.name(),
            r.outcome.utility_a,
            r.outcome.utility_b,
            r.expected_a,
            r.expected_b,
            agreement_times(&r.outcome),
            r.pareto
        );
    }
    let (pa, pb) = report.package_dominates_simultaneous;
    let (sa, sb) = report.simultaneous_dominates_sequential;
    let _ = writeln!(out, "package >= simultaneous: a {pa}, b {pb}");
    let _ = writeln!(out, "simultaneous >= sequential: a {sa}, b {sb}");
    let u = &report.uniqueness;
    let _ = writeln!(
        out,
        "C1 {}  C2 {}  C3 {}  C4 {}  C5 {}",
        verdict(u.c1),
        verdict(u.c2),
        verdict(u.c3),
        verdict(u.c4),
        verdict(u.c5)
    );
    out
}
