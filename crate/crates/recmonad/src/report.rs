//! Structured reports with deterministic text and JSON-lines renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::monad_props::CheckOutcome;
use crate::presentation::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Verified,
    Refuted,
    Unknown,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Verified => "verified",
            Outcome::Refuted => "refuted",
            Outcome::Unknown => "unknown",
        }
    }

    pub fn of(holds: bool) -> Self {
        if holds {
            Outcome::Verified
        } else {
            Outcome::Refuted
        }
    }
}

/// A witness term printed in the presentation grammar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub name: String,
    pub term: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub check: String,
    pub outcome: Outcome,
    /// The outcome the run aims for, when it is not `verified`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Outcome>,
    pub bounds: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<NamedTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Record {
    pub fn new(check: impl Into<String>, outcome: Outcome) -> Self {
        Record {
            check: check.into(),
            outcome,
            expected: None,
            bounds: BTreeMap::new(),
            witness: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// A claim that holds (`verified`) or fails (`refuted`).
    pub fn claim(check: impl Into<String>, holds: bool) -> Self {
        Record::new(check, Outcome::of(holds))
    }

    pub fn from_outcome(check: impl Into<String>, o: &CheckOutcome) -> Self {
        match o {
            CheckOutcome::Verified(b) => Record {
                bounds: b.clone(),
                ..Record::new(check, Outcome::Verified)
            },
            CheckOutcome::Unknown(b) => Record {
                bounds: b.clone(),
                ..Record::new(check, Outcome::Unknown)
            },
            CheckOutcome::Refuted(w) => {
                let mut r = Record::new(check, Outcome::Refuted);
                r.notes.push(w.summary.clone());
                r.notes.extend(w.evidence.iter().cloned());
                for (k, t) in &w.terms {
                    r = r.term(k, t);
                }
                r
            }
        }
    }

    pub fn expect(mut self, e: Outcome) -> Self {
        self.expected = (e != Outcome::Verified).then_some(e);
        self
    }

    pub fn bound(mut self, k: &str, v: usize) -> Self {
        self.bounds.insert(k.to_string(), v);
        self
    }

    pub fn term(mut self, name: &str, t: &Term) -> Self {
        self.witness.push(NamedTerm {
            name: name.to_string(),
            term: t.to_string(),
        });
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    pub fn as_expected(&self) -> bool {
        self.outcome == self.expected.unwrap_or(Outcome::Verified)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub millis: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub title: String,
    pub records: Vec<Record>,
    /// Wall-clock timings; never part of the deterministic rendering.
    pub timings: Vec<Timing>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Jsonl,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn time(&mut self, label: impl Into<String>, elapsed: std::time::Duration) {
        self.timings.push(Timing {
            label: label.into(),
            millis: elapsed.as_secs_f64() * 1e3,
        });
    }

    pub fn all_as_expected(&self) -> bool {
        self.records.iter().all(Record::as_expected)
    }

    /// Deterministic bytes; timings are appended only on request.
    pub fn render(&self, format: Format, timings: bool) -> String {
        let mut out = String::new();
        match format {
            Format::Text => {
                let _ = writeln!(out, "# {}", self.title);
                for r in &self.records {
                    let mut line = format!("{}: {}", r.check, r.outcome.label());
                    if let Some(e) = r.expected {
                        let _ = write!(line, " (expected {})", e.label());
                    }
                    if !r.bounds.is_empty() {
                        let b: Vec<String> = r.bounds.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        let _ = write!(line, " [{}]", b.join(" "));
                    }
                    let _ = writeln!(out, "{line}");
                    for w in &r.witness {
                        let _ = writeln!(out, "  {} = {}", w.name, w.term);
                    }
                    for n in &r.notes {
                        let _ = writeln!(out, "  note: {n}");
                    }
                }
                let met = self.records.iter().filter(|r| r.as_expected()).count();
                let _ = writeln!(out, "{} checks, {} as expected", self.records.len(), met);
                if timings && !self.timings.is_empty() {
                    let _ = writeln!(out, "## timings");
                    for t in &self.timings {
                        let _ = writeln!(out, "{}: {:.1} ms", t.label, t.millis);
                    }
                }
            }
            Format::Jsonl => {
                for r in &self.records {
                    out.push_str(&serde_json::to_string(r).expect("records serialize"));
                    out.push('\n');
                }
                if timings {
                    for t in &self.timings {
                        out.push_str(&serde_json::to_string(t).expect("timings serialize"));
                        out.push('\n');
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monad_props::Witness;

    #[test]
    fn empty_report() {
        let r = Report::new("empty");
        assert_eq!(r.render(Format::Text, false), "# empty\n0 checks, 0 as expected\n");
        assert_eq!(r.render(Format::Jsonl, false), "");
    }

    #[test]
    fn verified_record_is_one_json_line() {
        let mut r = Report::new("one");
        let o = CheckOutcome::Verified([("bound".to_string(), 6)].into());
        r.push(Record::from_outcome("powerset", &o));
        let text = r.render(Format::Jsonl, false);
        assert_eq!(text, "{\"check\":\"powerset\",\"outcome\":\"verified\",\"bounds\":{\"bound\":6}}\n");
        let back: Record = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(back, r.records[0]);
    }

    #[test]
    fn witness_terms_reparse() {
        let p = crate::case_studies::fixtures::theory("group").unwrap();
        let t = p.parse_term("(dot a (inv b))").unwrap();
        let o = CheckOutcome::Refuted(Witness {
            summary: "s".into(),
            terms: vec![("r".into(), t.clone())],
            evidence: vec![],
        });
        let r = Record::from_outcome("wpb", &o).expect(Outcome::Refuted);
        assert!(r.as_expected());
        assert_eq!(p.parse_term(&r.witness[0].term).unwrap(), t);
    }
}
