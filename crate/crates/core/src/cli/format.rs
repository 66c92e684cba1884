//! Sectioned key-value scenario files.
//!
//! ```text
//! [scenario]
//! issues = 3
//! deadline = 2
//! discounts = 0.5, 0.5, 0.5
//! setting = SU_I
//! first_mover = a
//!
//! [types]
//! r = 2
//! K = 1, 2, 3; 1, 0.5, 0.25
//! Pa = 0.5, 0.5
//! Pb = 0.5, 0.5
//! true_a = 1
//! true_b = 2
//!
//! [agenda]
//! partitions = 1, 2 | 3
//! parity = global
//! beliefs = reset
//!
//! [interdependence]
//! chi_type1 = 0, 1, 0; 0, 0, 0; 0, 0, 0
//! ```
//!
//! Issue and type indices are 1-based. Under CI the `[types]` section may be
//! replaced by `weights_a` and `weights_b` in `[scenario]`. A single discount
//! applies to every issue. `#` starts a comment.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::procedures::{Parity, SimulationOptions};
use crate::scenario::{validate_scenario, Agent, Interdependence, RawScenario, Scenario, Setting};

/// A parsed file: the scenario plus the agenda options that are not part of it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub parity: Parity,
    pub carry_beliefs: bool,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioFile {
            scenario,
            parity: Parity::Global,
            carry_beliefs: false,
        }
    }

    /// Simulation options with this file's agenda settings applied.
    pub fn options(&self, strict: bool) -> SimulationOptions {
        SimulationOptions {
            strict,
            parity: self.parity,
            carry_beliefs: self.carry_beliefs,
            ..SimulationOptions::default()
        }
    }

    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let raw = s.raw();
        let mut out = String::new();
        let _ = writeln!(out, "[scenario]");
        let _ = writeln!(out, "issues = {}", s.issue_count());
        let _ = writeln!(out, "deadline = {}", s.deadline());
        let _ = writeln!(out, "discounts = {}", join(s.discounts()));
        let _ = writeln!(out, "setting = {}", s.setting());
        let _ = writeln!(out, "first_mover = {}", s.first_mover());
        let _ = writeln!(out);
        let _ = writeln!(out, "[types]");
        let _ = writeln!(out, "r = {}", raw.weights.len());
        let _ = writeln!(out, "K = {}", join_rows(&raw.weights));
        let _ = writeln!(out, "Pa = {}", join(&raw.prior_a));
        let _ = writeln!(out, "Pb = {}", join(&raw.prior_b));
        let _ = writeln!(out, "true_a = {}", raw.true_type_a + 1);
        let _ = writeln!(out, "true_b = {}", raw.true_type_b + 1);
        let _ = writeln!(out);
        let _ = writeln!(out, "[agenda]");
        let parts: Vec<String> = s
            .partition()
            .parts()
            .iter()
            .map(|part| part.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(", "))
            .collect();
        let _ = writeln!(out, "partitions = {}", parts.join(" | "));
        let _ = writeln!(out, "parity = {}", self.parity.name());
        let _ = writeln!(out, "beliefs = {}", if self.carry_beliefs { "carry" } else { "reset" });
        if let Some(inter) = s.interdependence() {
            let _ = writeln!(out);
            let _ = writeln!(out, "[interdependence]");
            for (k, chi) in inter.chi.iter().enumerate() {
                let _ = writeln!(out, "chi_type{} = {}", k + 1, join_rows(chi));
            }
        }
        out
    }
}

/// Text form of a scenario with default agenda options.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    ScenarioFile::new(scenario.clone()).to_text()
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

fn join_rows(rows: &[Vec<f64>]) -> String {
    rows.iter().map(|row| join(row)).collect::<Vec<_>>().join("; ")
}

/// A value with the position where it starts.
#[derive(Clone, Debug)]
struct Located<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Located<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    /// Splits on `sep`, keeping track of each piece's column and trimming it.
    fn split(&self, sep: char) -> Vec<Located<'a>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for piece in self.text.split(sep) {
            let lead = piece.len() - piece.trim_start().len();
            out.push(Located {
                text: piece.trim(),
                line: self.line,
                column: self.column + offset + lead,
            });
            offset += piece.len() + sep.len_utf8();
        }
        out
    }

    fn number(&self) -> Result<f64> {
        self.text
            .parse::<f64>()
            .map_err(|_| self.error(format!("malformed number `{}`", self.text)))
    }

    fn count(&self) -> Result<usize> {
        self.text
            .parse::<usize>()
            .map_err(|_| self.error(format!("expected a non-negative integer, found `{}`", self.text)))
    }

    fn numbers(&self) -> Result<Vec<f64>> {
        self.split(',').iter().map(Located::number).collect()
    }

    fn rows(&self) -> Result<Vec<Vec<f64>>> {
        self.split(';').iter().map(Located::numbers).collect()
    }

    /// 1-based index in `1..=limit`, returned 0-based.
    fn index(&self) -> Result<usize> {
        match self.count()? {
            0 => Err(self.error("indices start at 1")),
            k => Ok(k - 1),
        }
    }
}

const SECTIONS: [(&str, &[&str]); 3] = [
    (
        "scenario",
        &["issues", "deadline", "discounts", "setting", "first_mover", "weights_a", "weights_b"],
    ),
    ("types", &["r", "K", "Pa", "Pb", "true_a", "true_b"]),
    ("agenda", &["partitions", "parity", "beliefs"]),
];

struct Document<'a> {
    values: HashMap<(String, String), Located<'a>>,
    headers: HashMap<String, (usize, usize)>,
}

impl<'a> Document<'a> {
    fn get(&self, section: &str, key: &str) -> Option<&Located<'a>> {
        self.values.get(&(section.to_string(), key.to_string()))
    }

    fn require(&self, section: &str, key: &str) -> Result<&Located<'a>> {
        self.get(section, key).ok_or_else(|| {
            let (line, column) = self.headers.get(section).copied().unwrap_or((1, 1));
            let message = if self.headers.contains_key(section) {
                format!("missing key `{key}` in [{section}]")
            } else {
                format!("missing section [{section}] (needs `{key}`)")
            };
            Error::Parse { line, column, message }
        })
    }

    fn has_section(&self, section: &str) -> bool {
        self.headers.contains_key(section)
    }

    /// Position of the value that a validation error refers to.
    fn locate(&self, err: &Error) -> (usize, usize) {
        let (section, key) = match err {
            Error::ProbabilitySum { field, .. } | Error::InvalidProbability { field, .. } => ("types", *field),
            Error::Shape { field, .. } | Error::NotPositive { field } | Error::TypeIndexOutOfRange { field, .. } => {
                match *field {
                    "deadline" | "issues" | "discounts" => ("scenario", *field),
                    "partition count" => ("agenda", "partitions"),
                    other => ("types", other),
                }
            }
            Error::DiscountOutOfRange { .. } => ("scenario", "discounts"),
            Error::NonPositiveWeight { .. } | Error::NonFiniteWeight { .. } => ("types", "K"),
            Error::PartitionOverlap { .. }
            | Error::PartitionMissing { .. }
            | Error::PartitionOutOfRange { .. }
            | Error::PartitionEmptyPart { .. } => ("agenda", "partitions"),
            Error::Interdependence(_) => return self.headers.get("interdependence").copied().unwrap_or((1, 1)),
            _ => return (1, 1),
        };
        if let Some(v) = self.get(section, key) {
            return (v.line, v.column);
        }
        // CI files may give the weights in [scenario].
        if key == "K" {
            if let Some(v) = self.get("scenario", "weights_a") {
                return (v.line, v.column);
            }
        }
        self.headers.get(section).copied().unwrap_or((1, 1))
    }
}

fn tokenize(text: &str) -> Result<Document<'_>> {
    let mut values = HashMap::new();
    let mut headers = HashMap::new();
    let mut section: Option<String> = None;
    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw_line.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                line,
                column: indent + 1,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim().to_string();
            let known = name == "interdependence" || SECTIONS.iter().any(|(s, _)| *s == name);
            if !known {
                return Err(Error::Parse {
                    line,
                    column: indent + 1,
                    message: format!("unknown section [{name}]; expected scenario, types, agenda or interdependence"),
                });
            }
            if headers.insert(name.clone(), (line, indent + 1)).is_some() {
                return Err(Error::Parse {
                    line,
                    column: indent + 1,
                    message: format!("section [{name}] appears twice"),
                });
            }
            section = Some(name);
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(Error::Parse {
                line,
                column: indent + 1,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim();
        let Some(current) = &section else {
            return Err(Error::Parse {
                line,
                column: indent + 1,
                message: format!("key `{key}` outside any section"),
            });
        };
        let allowed = if current == "interdependence" {
            key.strip_prefix("chi_type").is_some_and(|k| k.parse::<usize>().is_ok_and(|k| k >= 1))
        } else {
            SECTIONS
                .iter()
                .find(|(s, _)| s == current)
                .is_some_and(|(_, keys)| keys.contains(&key))
        };
        if !allowed {
            return Err(Error::Parse {
                line,
                column: indent + 1,
                message: format!("unknown key `{key}` in [{current}]"),
            });
        }
        let value = &content[eq + 1..];
        let lead = value.len() - value.trim_start().len();
        let located = Located {
            text: value.trim(),
            line,
            column: eq + 2 + lead,
        };
        if values.insert((current.clone(), key.to_string()), located).is_some() {
            return Err(Error::Parse {
                line,
                column: indent + 1,
                message: format!("duplicate key `{key}` in [{current}]"),
            });
        }
    }
    Ok(Document { values, headers })
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let doc = tokenize(text)?;

    let issues_at = doc.require("scenario", "issues")?;
    let issues = issues_at.count()?;
    let deadline = doc.require("scenario", "deadline")?.count()?;
    let discounts_at = doc.require("scenario", "discounts")?;
    let mut discounts = discounts_at.numbers()?;
    if discounts.len() == 1 && issues > 1 {
        discounts = vec![discounts[0]; issues];
    }
    if discounts.len() != issues {
        return Err(discounts_at.error(format!("expected {issues} discounts, found {}", discounts.len())));
    }
    let setting_at = doc.require("scenario", "setting")?;
    let setting: Setting = setting_at.text.parse().map_err(|e: String| setting_at.error(e))?;
    let mover_at = doc.require("scenario", "first_mover")?;
    let first_mover: Agent = mover_at.text.parse().map_err(|e: String| mover_at.error(e))?;

    let shortcut = doc.get("scenario", "weights_a").is_some() || doc.get("scenario", "weights_b").is_some();
    let (weights, prior_a, prior_b, true_type_a, true_type_b) = if shortcut {
        if !setting.is_complete() {
            let at = doc.get("scenario", "weights_a").or(doc.get("scenario", "weights_b")).expect("present");
            return Err(at.error(format!("weights_a/weights_b are only allowed under CI, not {setting}")));
        }
        if doc.has_section("types") {
            let (line, column) = doc.headers["types"];
            return Err(Error::Parse {
                line,
                column,
                message: "give either weights_a/weights_b or a [types] section, not both".into(),
            });
        }
        let wa = doc.require("scenario", "weights_a")?.numbers()?;
        let wb = doc.require("scenario", "weights_b")?.numbers()?;
        (vec![wa, wb], vec![1.0, 0.0], vec![0.0, 1.0], 0, 1)
    } else {
        let r_at = doc.require("types", "r")?;
        let r = r_at.count()?;
        let k_at = doc.require("types", "K")?;
        let weights = k_at.rows()?;
        if weights.len() != r {
            return Err(k_at.error(format!("expected {r} weight rows, found {}", weights.len())));
        }
        for (row, piece) in weights.iter().zip(k_at.split(';')) {
            if row.len() != issues {
                return Err(piece.error(format!("expected {issues} weights per row, found {}", row.len())));
            }
        }
        let prior_a = doc.require("types", "Pa")?.numbers()?;
        let prior_b = doc.require("types", "Pb")?.numbers()?;
        let true_a = doc.require("types", "true_a")?.index()?;
        let true_b = doc.require("types", "true_b")?.index()?;
        (weights, prior_a, prior_b, true_a, true_b)
    };

    let mut parity = Parity::Global;
    let mut carry_beliefs = false;
    let mut partition = None;
    if let Some(at) = doc.get("agenda", "partitions") {
        let parts = at
            .split('|')
            .iter()
            .map(|part| {
                if part.text.is_empty() {
                    return Ok(Vec::new());
                }
                part.split(',').iter().map(Located::index).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        partition = Some(parts);
    }
    if let Some(at) = doc.get("agenda", "parity") {
        parity = match at.text {
            "global" => Parity::Global,
            "reset" => Parity::PartitionReset,
            other => return Err(at.error(format!("unknown parity `{other}`, expected global or reset"))),
        };
    }
    if let Some(at) = doc.get("agenda", "beliefs") {
        carry_beliefs = match at.text {
            "reset" => false,
            "carry" => true,
            other => return Err(at.error(format!("unknown belief policy `{other}`, expected reset or carry"))),
        };
    }

    let interdependence = if doc.has_section("interdependence") {
        let r = weights.len();
        let mut chi = Vec::with_capacity(r);
        for k in 1..=r {
            chi.push(doc.require("interdependence", &format!("chi_type{k}"))?.rows()?);
        }
        if let Some(extra) = doc
            .values
            .iter()
            .find(|((s, key), _)| s == "interdependence" && key["chi_type".len()..].parse::<usize>().is_ok_and(|k| k > r))
        {
            return Err(extra.1.error(format!("{} given but there are only {r} types", extra.0 .1)));
        }
        Some(Interdependence { chi })
    } else {
        None
    };

    let raw = RawScenario {
        deadline,
        discounts,
        setting,
        first_mover,
        weights,
        prior_a,
        prior_b,
        true_type_a,
        true_type_b,
        partition,
        interdependence,
    };
    let scenario = validate_scenario(raw).map_err(|err| {
        let (line, column) = doc.locate(&err);
        Error::Parse {
            line,
            column,
            message: err.to_string(),
        }
    })?;
    Ok(ScenarioFile {
        scenario,
        parity,
        carry_beliefs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BUNDLE_EXAMPLE: &str = "\
[scenario]
issues = 3
deadline = 2
discounts = 0.5, 0.5, 0.5
setting = CI
first_mover = a
weights_a = 1, 2, 3
weights_b = 1, 0.5, 0.25

[agenda]
partitions = 1, 2 | 3
";

    fn parse_error(text: &str) -> (usize, usize, String) {
        match parse_scenario(text) {
            Err(Error::Parse { line, column, message }) => (line, column, message),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn bundle_example_file() {
        let file = parse_scenario(BUNDLE_EXAMPLE).unwrap();
        assert_eq!(file.scenario.issue_count(), 3);
        assert_eq!(file.scenario.deadline(), 2);
        assert_eq!(file.scenario.partition().parts(), &[vec![0, 1], vec![2]]);
        assert_eq!(file.scenario.true_weights(Agent::B), &[1.0, 0.5, 0.25]);
    }

    #[test]
    fn unknown_setting_lists_valid_ones() {
        let text = BUNDLE_EXAMPLE.replace("setting = CI", "setting = XX");
        let (line, column, message) = parse_error(&text);
        assert_eq!((line, column), (5, 11));
        for name in ["CI", "SU_I", "AU_I", "SU_D", "AU_D"] {
            assert!(message.contains(name), "{message}");
        }
    }

    #[test]
    fn missing_types_section() {
        let text = "[scenario]\nissues = 2\ndeadline = 2\ndiscounts = 0.5\nsetting = SU_I\nfirst_mover = b\n";
        let (_, _, message) = parse_error(text);
        assert!(message.contains("[types]"), "{message}");
    }

    #[test]
    fn malformed_number_points_at_token() {
        let text = BUNDLE_EXAMPLE.replace("weights_b = 1, 0.5, 0.25", "weights_b = 1, 0.5x, 0.25");
        let (line, column, message) = parse_error(&text);
        assert_eq!((line, column), (8, 16));
        assert!(message.contains("0.5x"));
    }

    #[test]
    fn unknown_key() {
        let text = BUNDLE_EXAMPLE.replace("deadline = 2", "deadlin = 2");
        let (line, _, message) = parse_error(&text);
        assert_eq!(line, 3);
        assert!(message.contains("deadlin"));
    }

    #[test]
    fn validation_errors_carry_location() {
        let text = BUNDLE_EXAMPLE.replace("partitions = 1, 2 | 3", "partitions = 1, 2 | 2, 3");
        let (line, column, message) = parse_error(&text);
        assert_eq!((line, column), (11, 14));
        assert!(message.contains("overlap on issue 2"));

        let text = "[scenario]\nissues = 2\ndeadline = 2\ndiscounts = 0.5\nsetting = SU_I\nfirst_mover = a\n\
                    [types]\nr = 2\nK = 1, 2; 5, 1\nPa = 0.5, 0.5\nPb = 0.5, 0.4\ntrue_a = 1\ntrue_b = 1\n";
        let (line, _, message) = parse_error(text);
        assert_eq!(line, 11);
        assert!(message.contains("0.9"));
    }

    #[test]
    fn round_trip_with_interdependence() {
        let text = "\
[scenario]
issues = 2
deadline = 3
discounts = 0.9, 0.6
setting = AU_D
first_mover = b

[types]
r = 2
K = 1, 2; 3, -1.5
Pa = 0.25, 0.75
Pb = 0.5, 0.5
true_a = 2
true_b = 1

[agenda]
partitions = 2 | 1
parity = reset
beliefs = carry

[interdependence]
chi_type1 = 0, 0.5; 0, 0
chi_type2 = 0, 0; 0.25, 0
";
        let file = parse_scenario(text).unwrap();
        assert_eq!(file.parity, Parity::PartitionReset);
        assert!(file.carry_beliefs);
        let again = parse_scenario(&file.to_text()).unwrap();
        assert_eq!(again, file);
    }
}
