//! The embedded example programs and their recorded outcome tables.
//!
//! Table lines read `<case> <ruleset> <strategy> <decl> <outcome>`, where
//! `<ruleset>` is a [`RuleSet::label`] or `*`, `<strategy>` is `whnf`, `nf`
//! or `*`, `<decl>` is the zero-based declaration index of the pragma, and
//! `<outcome>` is a reduction status, `: <type>` for `#check`, or
//! `error <message>` when elaboration stops at that declaration.

use std::fmt;

use crate::convert::RuleSet;
use crate::parser::{parse_program, ParseError, Program};
use crate::reduce::Strategy;
use crate::syntax::pretty;
use crate::typecheck::{elaborate, ElabError, ElabOptions, Elaboration, PragmaOutcome};

pub const CASE_NAMES: [&str; 6] = [
    "counterexample1",
    "counterexample2",
    "counterexample2-propext",
    "girard-j",
    "sanity-church",
    "sanity-casts",
];

const SOURCES: [(&str, &str, &str); 6] = [
    (
        "counterexample1",
        include_str!("../examples/counterexample1.itt"),
        include_str!("../expected/counterexample1.txt"),
    ),
    (
        "counterexample2",
        include_str!("../examples/counterexample2.itt"),
        include_str!("../expected/counterexample2.txt"),
    ),
    (
        "counterexample2-propext",
        include_str!("../examples/counterexample2-propext.itt"),
        include_str!("../expected/counterexample2-propext.txt"),
    ),
    ("girard-j", include_str!("../examples/girard-j.itt"), include_str!("../expected/girard-j.txt")),
    (
        "sanity-church",
        include_str!("../examples/sanity-church.itt"),
        include_str!("../expected/sanity-church.txt"),
    ),
    (
        "sanity-casts",
        include_str!("../examples/sanity-casts.itt"),
        include_str!("../expected/sanity-casts.txt"),
    ),
];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown example `{0}`; known examples: {known}", known = CASE_NAMES.join(", "))]
    UnknownCase(String),
    #[error("outcome table for `{case}`, line {line}: {message}")]
    BadTable { case: String, line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    /// A ruleset label, or `*`.
    pub ruleset: String,
    /// `None` matches both strategies.
    pub strategy: Option<Strategy>,
    pub decl: usize,
    pub outcome: String,
}

impl Expectation {
    fn matches(&self, label: &str, strategy: Strategy) -> bool {
        (self.ruleset == "*" || self.ruleset == label) && self.strategy.is_none_or(|s| s == strategy)
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strategy = self.strategy.map_or("*".to_owned(), |s| s.to_string());
        write!(f, "{} {} {} {}", self.ruleset, strategy, self.decl, self.outcome)
    }
}

#[derive(Clone, Debug)]
pub struct ExampleCase {
    pub name: &'static str,
    pub source: &'static str,
    pub expectations: Vec<Expectation>,
    /// Rules the program needs to elaborate.
    pub rules: RuleSet,
}

pub fn load_example(name: &str) -> Result<ExampleCase, CorpusError> {
    let (name, source, table) =
        SOURCES.iter().find(|(n, _, _)| *n == name).ok_or_else(|| CorpusError::UnknownCase(name.to_owned()))?;
    let rules = match *name {
        "girard-j" => RuleSet { j_rule: true, ..RuleSet::default() },
        _ => RuleSet::default(),
    };
    Ok(ExampleCase { name, source, expectations: parse_table(name, table)?, rules })
}

pub fn all_examples() -> Vec<ExampleCase> {
    CASE_NAMES.iter().map(|n| load_example(n).expect("embedded example")).collect()
}

fn parse_table(case: &str, table: &str) -> Result<Vec<Expectation>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in table.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| CorpusError::BadTable {
            case: case.to_owned(),
            line: line_no,
            message: message.to_owned(),
        };
        let fields: Vec<&str> = line.splitn(5, ' ').collect();
        let [name, ruleset, strategy, decl, outcome] = fields[..] else {
            return Err(bad("expected five fields"));
        };
        if name != case {
            return Err(bad("case name does not match the file"));
        }
        let strategy = match strategy {
            "*" => None,
            s => Some(s.parse().map_err(|e: String| bad(&e))?),
        };
        let decl = decl.parse().map_err(|_| bad("declaration index is not a number"))?;
        out.push(Expectation { ruleset: ruleset.to_owned(), strategy, decl, outcome: outcome.to_owned() });
    }
    Ok(out)
}

impl ExampleCase {
    pub fn program(&self) -> Result<Program, ParseError> {
        parse_program(self.source)
    }

    pub fn elaborate(&self, options: &ElabOptions) -> Result<Elaboration, ElabError> {
        let program = self.program().expect("embedded example parses");
        elaborate(&program, options)
    }

    /// Elaborates under the case's own rules without running reductions.
    pub fn elaborate_unreduced(&self) -> Elaboration {
        let options = ElabOptions { rules: self.rules, run_reductions: false, ..ElabOptions::default() };
        self.elaborate(&options).expect("embedded example elaborates")
    }

    /// Declaration index of every pragma, in order.
    pub fn pragma_indices(&self) -> Vec<usize> {
        let program = self.program().expect("embedded example parses");
        program.declarations.iter().enumerate().filter(|(_, d)| d.is_pragma()).map(|(i, _)| i).collect()
    }

    /// Outcome text for each pragma under `rules` and `strategy`.
    pub fn outcomes(&self, rules: RuleSet, strategy: Strategy) -> Vec<(usize, String)> {
        let options = ElabOptions { rules, strategy, run_reductions: true };
        match self.elaborate(&options) {
            Err(e) => vec![(e.index, format!("error {}", e.kind))],
            Ok(elab) => elab.outcomes.iter().map(|o| (o.decl(), outcome_text(o))).collect(),
        }
    }

    pub fn expected(&self, label: &str, strategy: Strategy) -> Vec<&Expectation> {
        self.expectations.iter().filter(|e| e.matches(label, strategy)).collect()
    }
}

pub fn outcome_text(outcome: &PragmaOutcome) -> String {
    match outcome {
        PragmaOutcome::Check { ty, ctx, .. } => format!(": {}", pretty(ty, &ctx.names())),
        PragmaOutcome::Reduce { trace: Some(trace), .. } => trace.status.to_string(),
        PragmaOutcome::Reduce { ty, ctx, trace: None, .. } => format!(": {}", pretty(ty, &ctx.names())),
    }
}

/// Rule changes requested on top of each case's own rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuleOverrides {
    pub cast_rule: Option<bool>,
    pub eqrec_rule: Option<bool>,
    pub j_rule: Option<bool>,
    pub proof_irrelevance: Option<bool>,
    pub fuel: Option<u64>,
}

impl RuleOverrides {
    pub fn apply(&self, base: RuleSet) -> RuleSet {
        RuleSet {
            cast_rule: self.cast_rule.unwrap_or(base.cast_rule),
            eqrec_rule: self.eqrec_rule.unwrap_or(base.eqrec_rule),
            j_rule: self.j_rule.unwrap_or(base.j_rule),
            proof_irrelevance: self.proof_irrelevance.unwrap_or(base.proof_irrelevance),
            fuel: self.fuel.unwrap_or(base.fuel),
            ..base
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Nothing recorded for this ruleset and strategy.
    Skip,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub case: &'static str,
    pub ruleset: String,
    pub strategy: Strategy,
    pub decl: usize,
    pub expected: Option<String>,
    pub actual: Option<String>,
    pub verdict: Verdict,
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        write!(f, "{tag} {} {} {} {}", self.case, self.ruleset, self.strategy, self.decl)?;
        match (&self.expected, &self.actual, self.verdict) {
            (_, Some(actual), Verdict::Pass) => write!(f, " {actual}"),
            (Some(expected), Some(actual), _) => write!(f, " expected `{expected}`, got `{actual}`"),
            (Some(expected), None, _) => write!(f, " expected `{expected}`, pragma produced nothing"),
            (None, Some(actual), _) => write!(f, " {actual} (no expectation recorded)"),
            (None, None, _) => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub entries: Vec<Entry>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == verdict).count()
    }

    pub fn to_text(&self) -> String {
        let mut out: String = self.entries.iter().map(|e| format!("{e}\n")).collect();
        out.push_str(&format!(
            "{} passed, {} failed, {} skipped\n",
            self.count(Verdict::Pass),
            self.count(Verdict::Fail),
            self.count(Verdict::Skip)
        ));
        out
    }
}

/// Runs one case under both strategies and compares with its table.
pub fn run_case(case: &ExampleCase, overrides: &RuleOverrides) -> Report {
    let rules = overrides.apply(case.rules);
    let label = rules.label();
    let mut entries = Vec::new();
    for strategy in [Strategy::Whnf, Strategy::Normalize] {
        let actual = case.outcomes(rules, strategy);
        let expected = case.expected(&label, strategy);
        let entry = |decl, expected: Option<String>, actual: Option<String>, verdict| Entry {
            case: case.name,
            ruleset: label.clone(),
            strategy,
            decl,
            expected,
            actual,
            verdict,
        };
        for (decl, got) in &actual {
            let want = expected.iter().find(|e| e.decl == *decl).map(|e| e.outcome.clone());
            let verdict = match &want {
                None => Verdict::Skip,
                Some(w) if w == got => Verdict::Pass,
                Some(_) => Verdict::Fail,
            };
            entries.push(entry(*decl, want, Some(got.clone()), verdict));
        }
        for e in expected.iter().filter(|e| !actual.iter().any(|(d, _)| *d == e.decl)) {
            entries.push(entry(e.decl, Some(e.outcome.clone()), None, Verdict::Fail));
        }
    }
    Report { entries }
}

pub fn run_all(overrides: &RuleOverrides) -> Report {
    let mut report = Report::default();
    for case in all_examples() {
        report.entries.extend(run_case(&case, overrides).entries);
    }
    report
}

/// Every combination of the switchable rules, default first.
pub fn recorded_rulesets() -> Vec<RuleSet> {
    let mut out = Vec::new();
    for bits in 0..16u8 {
        out.push(RuleSet {
            cast_rule: bits & 1 == 0,
            eqrec_rule: bits & 2 == 0,
            j_rule: bits & 4 != 0,
            proof_irrelevance: bits & 8 == 0,
            ..RuleSet::default()
        });
    }
    out
}

/// Regenerates a case's outcome table from the current implementation.
pub fn record_table(case: &ExampleCase) -> String {
    let mut out = format!("# outcomes for {}\n# regenerate with: cargo run --example record_expected\n", case.name);
    for rules in recorded_rulesets() {
        let label = rules.label();
        let whnf = case.outcomes(rules, Strategy::Whnf);
        let nf = case.outcomes(rules, Strategy::Normalize);
        if whnf == nf {
            for (decl, outcome) in &whnf {
                out.push_str(&format!("{} {label} * {decl} {outcome}\n", case.name));
            }
        } else {
            for (strategy, rows) in [(Strategy::Whnf, &whnf), (Strategy::Normalize, &nf)] {
                for (decl, outcome) in rows {
                    out.push_str(&format!("{} {label} {strategy} {decl} {outcome}\n", case.name));
                }
            }
        }
    }
    out
}
