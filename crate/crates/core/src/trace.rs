//! Reduction traces, cycle detection, serialization and replay.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::convert::RuleSet;
use crate::kernel::Kernel;
use crate::parser::{parse_term, ParseError, Scope};
use crate::reduce::{StepKind, Strategy};
use crate::syntax::{alpha_eq, canonical_key, pretty, CanonicalKey, Name, Term};
use crate::typecheck::{Context, GlobalEnv};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub kind: StepKind,
    pub term: Term,
    pub key: CanonicalKey,
}

/// A repetition on one reduction spine: the snapshots at `first_index` and
/// `first_index + period` are α-equivalent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleReport {
    pub first_index: usize,
    pub period: usize,
    pub witness: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    NormalForm,
    FuelExhausted,
    CycleDetected(CycleReport),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::NormalForm => "NormalForm",
            Status::FuelExhausted => "FuelExhausted",
            Status::CycleDetected(_) => "CycleDetected",
        }
    }

    pub fn cycle(&self) -> Option<&CycleReport> {
        match self {
            Status::CycleDetected(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::CycleDetected(r) => write!(f, "CycleDetected first={} period={}", r.first_index, r.period),
            other => f.write_str(other.name()),
        }
    }
}

/// Remembers every snapshot of a spine by canonical key. Keys only select
/// candidates; a cycle is reported after an α-equivalence check.
#[derive(Default, Debug)]
pub struct CycleDetector {
    seen: HashMap<CanonicalKey, Vec<(usize, Term)>>,
}

impl CycleDetector {
    pub fn observe(&mut self, index: usize, term: &Term) -> Option<CycleReport> {
        self.observe_keyed(canonical_key(term), index, term)
    }

    /// Like [`observe`](Self::observe) with a caller-supplied key.
    pub fn observe_keyed(&mut self, key: CanonicalKey, index: usize, term: &Term) -> Option<CycleReport> {
        let bucket = self.seen.entry(key).or_default();
        if let Some((first, witness)) = bucket.iter().find(|(_, w)| alpha_eq(w, term)) {
            return Some(CycleReport { first_index: *first, period: index - first, witness: witness.clone() });
        }
        bucket.push((index, term.clone()));
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: Term,
    pub initial_key: CanonicalKey,
    pub steps: Vec<TraceStep>,
    pub strategy: Strategy,
    pub status: Status,
    /// Display names of the free variables.
    pub names: Vec<Name>,
}

#[derive(Serialize, Deserialize)]
struct StepRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pragma: Option<usize>,
    index: usize,
    kind: String,
    term: String,
    key: String,
}

#[derive(Serialize, Deserialize)]
struct StatusRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pragma: Option<usize>,
    strategy: String,
    status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    first: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    period: Option<usize>,
}

impl Trace {
    pub fn new(initial: Term, steps: Vec<TraceStep>, strategy: Strategy, status: Status, names: Vec<Name>) -> Trace {
        let initial_key = canonical_key(&initial);
        Trace { initial, initial_key, steps, strategy, status, names }
    }

    /// Snapshot `i`; index 0 is the initial term.
    pub fn term_at(&self, i: usize) -> Option<&Term> {
        match i {
            0 => Some(&self.initial),
            _ => self.steps.get(i - 1).map(|s| &s.term),
        }
    }

    pub fn final_term(&self) -> &Term {
        self.steps.last().map_or(&self.initial, |s| &s.term)
    }

    pub fn snapshots(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.term))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("0 Init {}\n", pretty(&self.initial, &self.names));
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!("{} {} {}\n", i + 1, s.kind, pretty(&s.term, &self.names)));
        }
        out.push_str(&format!("STATUS {}\n", self.status));
        out
    }

    /// One JSON object per snapshot followed by a status object.
    pub fn to_json_lines(&self, pragma: Option<usize>) -> Vec<String> {
        let step = |index: usize, kind: String, term: &Term, key: CanonicalKey| StepRecord {
            pragma,
            index,
            kind,
            term: pretty(term, &self.names),
            key: key.to_string(),
        };
        let mut records = vec![step(0, "Init".into(), &self.initial, self.initial_key)];
        for (i, s) in self.steps.iter().enumerate() {
            records.push(step(i + 1, s.kind.to_string(), &s.term, s.key));
        }
        let mut lines: Vec<String> =
            records.iter().map(|r| serde_json::to_string(r).expect("serializable")).collect();
        let cycle = self.status.cycle();
        let status = StatusRecord {
            pragma,
            strategy: self.strategy.to_string(),
            status: self.status.name().into(),
            first: cycle.map(|c| c.first_index),
            period: cycle.map(|c| c.period),
        };
        lines.push(serde_json::to_string(&status).expect("serializable"));
        lines
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {error}")]
    Term { line: usize, error: ParseError },
    #[error("line {line}: expected index {expected}, found {found}")]
    Index { line: usize, expected: usize, found: usize },
    #[error("line {line}: key {found} does not match the term (expected {expected})")]
    Key { line: usize, expected: CanonicalKey, found: String },
    #[error("line {line}: recorded step does not match the reducer ({reason})")]
    Step { line: usize, reason: String },
    #[error("line {line}: recorded status is not justified ({reason})")]
    Status { line: usize, reason: String },
    #[error("trace ended without a status record")]
    Truncated,
}

/// Summary of one replayed trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replayed {
    pub pragma: Option<usize>,
    pub steps: usize,
    pub status: String,
}

/// Re-parses JSON trace lines and checks them against the reducer: every
/// key matches its term, every step is the one the reducer takes, and the
/// final status holds. Several traces may follow each other.
pub fn replay_json(
    env: &GlobalEnv,
    ctx: &Context,
    text: &str,
    rules: RuleSet,
) -> Result<Vec<Replayed>, ReplayError> {
    let scope = Scope::new(ctx.names(), env.names().cloned());
    let mut done = Vec::new();
    let mut terms: Vec<Term> = Vec::new();
    let mut pending: Vec<(usize, StepKind, Term)> = Vec::new();
    for (n, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let line = n + 1;
        let value: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| ReplayError::Json { line, message: e.to_string() })?;
        let json = |e: serde_json::Error| ReplayError::Json { line, message: e.to_string() };
        if value.get("status").is_some() {
            let record: StatusRecord = serde_json::from_value(value).map_err(json)?;
            let strategy: Strategy =
                record.strategy.parse().map_err(|message| ReplayError::Json { line, message })?;
            if terms.is_empty() {
                return Err(ReplayError::Status { line, reason: "no snapshots".into() });
            }
            validate_steps(env, ctx, rules, strategy, &terms, &pending)?;
            validate_status(env, ctx, rules, strategy, &terms, &record, line)?;
            done.push(Replayed { pragma: record.pragma, steps: terms.len() - 1, status: record.status });
            terms.clear();
            pending.clear();
            continue;
        }
        let record: StepRecord = serde_json::from_value(value).map_err(json)?;
        if record.index != terms.len() {
            return Err(ReplayError::Index { line, expected: terms.len(), found: record.index });
        }
        let term = parse_term(&record.term, &scope).map_err(|error| ReplayError::Term { line, error })?;
        let key = canonical_key(&term);
        if record.key != key.to_string() {
            return Err(ReplayError::Key { line, expected: key, found: record.key });
        }
        if record.index > 0 {
            let kind = record.kind.parse().map_err(|message| ReplayError::Json { line, message })?;
            pending.push((line, kind, term.clone()));
        } else if record.kind != "Init" {
            return Err(ReplayError::Step { line, reason: "first record must be Init".into() });
        }
        terms.push(term);
    }
    if !terms.is_empty() {
        return Err(ReplayError::Truncated);
    }
    Ok(done)
}

fn next_step(
    env: &GlobalEnv,
    ctx: &Context,
    rules: RuleSet,
    strategy: Strategy,
    t: &Term,
    line: usize,
) -> Result<Option<(Term, StepKind)>, ReplayError> {
    let mut kernel = Kernel::new(env, rules);
    let r = match strategy {
        Strategy::Whnf => kernel.head_step(ctx, t, true),
        Strategy::Normalize => kernel.step(ctx, t),
    };
    r.map_err(|e| ReplayError::Step { line, reason: e.to_string() })
}

fn validate_steps(
    env: &GlobalEnv,
    ctx: &Context,
    rules: RuleSet,
    strategy: Strategy,
    terms: &[Term],
    pending: &[(usize, StepKind, Term)],
) -> Result<(), ReplayError> {
    for (i, (line, kind, term)) in pending.iter().enumerate() {
        let line = *line;
        match next_step(env, ctx, rules, strategy, &terms[i], line)? {
            Some((next, k)) if &k == kind && alpha_eq(&next, term) => {}
            Some((_, k)) if &k != kind => {
                return Err(ReplayError::Step { line, reason: format!("reducer fired {k}, trace says {kind}") });
            }
            Some(_) => return Err(ReplayError::Step { line, reason: "different result term".into() }),
            None => return Err(ReplayError::Step { line, reason: "reducer is stuck".into() }),
        }
    }
    Ok(())
}

fn validate_status(
    env: &GlobalEnv,
    ctx: &Context,
    rules: RuleSet,
    strategy: Strategy,
    terms: &[Term],
    record: &StatusRecord,
    line: usize,
) -> Result<(), ReplayError> {
    let bad = |reason: &str| Err(ReplayError::Status { line, reason: reason.into() });
    let last = terms.len() - 1;
    match record.status.as_str() {
        "NormalForm" => match next_step(env, ctx, rules, strategy, &terms[last], line)? {
            None => Ok(()),
            Some(_) => bad("last term still reduces"),
        },
        "CycleDetected" => match (record.first, record.period) {
            (Some(first), Some(period)) if period > 0 && first + period == last => {
                if alpha_eq(&terms[first], &terms[last]) {
                    Ok(())
                } else {
                    bad("cycle endpoints differ")
                }
            }
            _ => bad("cycle bounds do not match the trace"),
        },
        "FuelExhausted" => Ok(()),
        _ => bad("unknown status"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Sort;

    #[test]
    fn detector_reports_first_repeat() {
        let mut d = CycleDetector::default();
        let a = Term::global("a");
        let b = Term::global("b");
        assert!(d.observe(0, &a).is_none());
        assert!(d.observe(1, &b).is_none());
        let r = d.observe(2, &a).unwrap();
        assert_eq!((r.first_index, r.period), (0, 2));
        assert_eq!(r.witness, a);
    }

    #[test]
    fn key_collisions_fall_back_to_alpha_equivalence() {
        let mut d = CycleDetector::default();
        let key = CanonicalKey(7);
        let a = Term::global("a");
        let b = Term::global("b");
        assert!(d.observe_keyed(key, 0, &a).is_none());
        assert!(d.observe_keyed(key, 1, &b).is_none());
        let r = d.observe_keyed(key, 2, &b).unwrap();
        assert_eq!((r.first_index, r.period), (1, 1));
    }

    #[test]
    fn status_display() {
        let r = CycleReport { first_index: 1, period: 6, witness: Term::sort(Sort::Prop) };
        assert_eq!(Status::CycleDetected(r).to_string(), "CycleDetected first=1 period=6");
        assert_eq!(Status::NormalForm.to_string(), "NormalForm");
    }

    #[test]
    fn text_and_json_shapes() {
        let t = Trace::new(Term::prop(), vec![], Strategy::Whnf, Status::NormalForm, vec![]);
        assert_eq!(t.to_text(), "0 Init Prop\nSTATUS NormalForm\n");
        let lines = t.to_json_lines(Some(3));
        assert_eq!(lines.len(), 2);
        let v: serde_json::Value = serde_json::from_str(&lines[0]).unwrap();
        assert_eq!(v["pragma"], 3);
        assert_eq!(v["kind"], "Init");
        assert_eq!(v["key"].as_str().unwrap().len(), 16);
        let s: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
        assert_eq!(s["status"], "NormalForm");
        assert!(s.get("period").is_none());
    }

    #[test]
    fn replay_rejects_tampering() {
        let env = GlobalEnv::default();
        let ctx = Context::default();
        let t = Trace::new(Term::prop(), vec![], Strategy::Normalize, Status::NormalForm, vec![]);
        let good = t.to_json_lines(None).join("\n");
        assert_eq!(replay_json(&env, &ctx, &good, RuleSet::default()).unwrap().len(), 1);
        let bad_key = good.replacen(&t.initial_key.to_string(), "0000000000000000", 1);
        assert!(matches!(replay_json(&env, &ctx, &bad_key, RuleSet::default()), Err(ReplayError::Key { .. })));
        let first = t.to_json_lines(None)[0].clone();
        assert!(matches!(replay_json(&env, &ctx, &first, RuleSet::default()), Err(ReplayError::Truncated)));
    }
}
