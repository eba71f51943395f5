//! Helpers shared by the integration tests.
#![allow(dead_code)]

use itt::convert::RuleSet;
use itt::corpus::{all_examples, ExampleCase, RuleOverrides};
use itt::kernel::Kernel;
use itt::parser::{parse_term, Scope};
use itt::reduce::Strategy as Order;
use itt::syntax::{Name, Sort, Term};
use itt::trace::Trace;
use itt::typecheck::{Context, ElabOptions, GlobalEnv, PragmaOutcome};
use proptest::prelude::*;

/// One reduction recorded while elaborating a corpus case.
pub struct CorpusTrace {
    pub case: &'static str,
    pub decl: usize,
    pub rules: RuleSet,
    pub env: GlobalEnv,
    pub ctx: Context,
    pub trace: Trace,
}

/// Rule variations exercised by the trace-level properties.
pub fn trace_rulesets(case: &ExampleCase) -> Vec<RuleSet> {
    let off = Some(false);
    [
        RuleOverrides::default(),
        RuleOverrides { cast_rule: off, ..RuleOverrides::default() },
        RuleOverrides { cast_rule: off, eqrec_rule: off, ..RuleOverrides::default() },
        RuleOverrides { proof_irrelevance: off, ..RuleOverrides::default() },
    ]
    .iter()
    .map(|o| o.apply(case.rules))
    .collect()
}

pub fn corpus_traces() -> Vec<CorpusTrace> {
    let mut out = Vec::new();
    for case in all_examples() {
        for rules in trace_rulesets(&case) {
            for strategy in [Order::Whnf, Order::Normalize] {
                let elab = case
                    .elaborate(&ElabOptions { rules, strategy, run_reductions: true })
                    .unwrap_or_else(|e| panic!("{} under {}: {e}", case.name, rules.label()));
                for o in elab.outcomes {
                    if let PragmaOutcome::Reduce { decl, ctx, trace: Some(trace), .. } = o {
                        out.push(CorpusTrace { case: case.name, decl, rules, env: elab.env.clone(), ctx, trace });
                    }
                }
            }
        }
    }
    out
}

/// Every term written in a corpus file: declared types, bodies and pragma
/// terms, with the context they live in.
pub fn corpus_terms() -> Vec<(&'static str, GlobalEnv, Context, Term)> {
    let mut out = Vec::new();
    for case in all_examples() {
        let elab = case.elaborate_unreduced();
        for (_, entry) in elab.env.iter() {
            out.push((case.name, elab.env.clone(), Context::default(), entry.ty.clone()));
            if let Some(body) = &entry.body {
                out.push((case.name, elab.env.clone(), Context::default(), body.clone()));
            }
        }
        for o in &elab.outcomes {
            out.push((case.name, elab.env.clone(), o.ctx().clone(), o.term().clone()));
            out.push((case.name, elab.env.clone(), o.ctx().clone(), o.ty().clone()));
        }
    }
    out
}

pub fn parse_in(env: &GlobalEnv, ctx: &Context, src: &str) -> Term {
    parse_term(src, &Scope::new(ctx.names(), env.names().cloned())).unwrap_or_else(|e| panic!("{src}: {e}"))
}

/// Does the inferred type survive every recorded step? Returns the first
/// offending snapshot index.
pub fn subject_reduction(t: &CorpusTrace) -> Result<(), String> {
    let mut kernel = Kernel::new(&t.env, t.rules);
    let ty0 = kernel.infer(&t.ctx, &t.trace.initial).map_err(|e| format!("initial term: {e}"))?;
    for (i, snap) in t.trace.snapshots().enumerate().skip(1) {
        let mut kernel = Kernel::new(&t.env, t.rules);
        let ty = kernel.infer(&t.ctx, snap).map_err(|e| format!("snapshot {i}: {e}"))?;
        let mut kernel = Kernel::new(&t.env, t.rules);
        if !kernel.convert(&t.ctx, &ty0, &ty, None).map_err(|e| format!("snapshot {i}: {e}"))? {
            return Err(format!("snapshot {i}: type changed"));
        }
    }
    Ok(())
}

pub fn arb_name() -> impl Strategy<Value = Name> {
    prop::sample::select(vec!["x", "y", "a", "v0", "h"]).prop_map(|s| Name::new(s).unwrap())
}

/// Random well-formed (not necessarily well-typed) terms over the globals
/// `a`, `b`, `c` and up to four free variables.
pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0usize..4).prop_map(Term::var),
        Just(Term::prop()),
        Just(Term::sort(Sort::Type)),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::global),
    ];
    leaf.prop_recursive(4, 40, 6, |inner| {
        prop_oneof![
            (arb_name(), inner.clone(), inner.clone()).prop_map(|(n, a, b)| Term::pi(n, a, b)),
            (arb_name(), inner.clone(), inner.clone()).prop_map(|(n, a, b)| Term::lam(n, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(f, a)| Term::app(f, a)),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(t, a, b)| Term::eq(t, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(t, a)| Term::refl(t, a)),
            prop::collection::vec(inner.clone(), 6)
                .prop_map(|v| Term::eq_rec(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone(), v[4].clone(), v[5].clone())),
            prop::collection::vec(inner.clone(), 4)
                .prop_map(|v| Term::cast(v[0].clone(), v[1].clone(), v[2].clone(), v[3].clone())),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, x)| Term::j(a, b, x)),
        ]
    })
}

/// Display names for `t`'s free variables, innermost last.
pub fn free_names(t: &Term) -> Vec<Name> {
    (0..t.free_depth()).rev().map(|i| Name::new(&format!("v{i}")).unwrap()).collect()
}

pub fn arb_globals_scope(names: Vec<Name>) -> Scope {
    Scope::new(names, ["a", "b", "c"].iter().map(|g| Name::new(g).unwrap()))
}
