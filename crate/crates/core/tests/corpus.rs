mod common;

use common::{corpus_terms, corpus_traces, parse_in, subject_reduction};
use itt::convert::RuleSet;
use itt::corpus::{all_examples, run_all, RuleOverrides};
use itt::kernel::Kernel;
use itt::reduce::Strategy;
use itt::syntax::{alpha_eq, pretty, Name, Term};
use itt::trace::{replay_json, Status};
use itt::typecheck::{Context, GlobalEnv, PragmaOutcome};

#[test]
fn recorded_tables_hold_for_every_recorded_ruleset() {
    for rules in itt::corpus::recorded_rulesets() {
        let o = RuleOverrides {
            cast_rule: Some(rules.cast_rule),
            eqrec_rule: Some(rules.eqrec_rule),
            j_rule: Some(rules.j_rule),
            proof_irrelevance: Some(rules.proof_irrelevance),
            fuel: None,
        };
        let report = run_all(&o);
        assert!(report.passed(), "{}", report.to_text());
        assert_eq!(report.count(itt::corpus::Verdict::Skip), 0, "{}", report.to_text());
    }
}

#[test]
fn traces_preserve_types() {
    for t in corpus_traces() {
        if let Err(e) = subject_reduction(&t) {
            panic!("{} decl {} under {} {}: {e}", t.case, t.decl, t.rules.label(), t.trace.strategy);
        }
    }
}

#[test]
fn json_traces_replay() {
    for t in corpus_traces() {
        let text = t.trace.to_json_lines(Some(t.decl)).join("\n");
        let replayed = replay_json(&t.env, &t.ctx, &text, t.rules)
            .unwrap_or_else(|e| panic!("{} decl {} {}: {e}", t.case, t.decl, t.rules.label()));
        assert_eq!(replayed.len(), 1);
        assert_eq!(replayed[0].steps, t.trace.steps.len());
    }
}

#[test]
fn normal_forms_do_not_step() {
    for t in corpus_traces().into_iter().filter(|t| t.trace.status == Status::NormalForm) {
        let mut k = Kernel::new(&t.env, t.rules);
        let last = t.trace.final_term();
        let next = match t.trace.strategy {
            Strategy::Whnf => k.head_step(&t.ctx, last, true).unwrap(),
            Strategy::Normalize => k.step(&t.ctx, last).unwrap(),
        };
        assert!(next.is_none(), "{} decl {}", t.case, t.decl);
    }
}

#[test]
fn cycle_witnesses_come_back() {
    let mut cycles = 0;
    for t in corpus_traces() {
        let Status::CycleDetected(report) = &t.trace.status else { continue };
        cycles += 1;
        let mut cur = report.witness.clone();
        for _ in 0..report.period {
            let mut k = Kernel::new(&t.env, t.rules);
            let next = match t.trace.strategy {
                Strategy::Whnf => k.head_step(&t.ctx, &cur, true).unwrap(),
                Strategy::Normalize => k.step(&t.ctx, &cur).unwrap(),
            };
            cur = next.expect("witness keeps reducing").0;
        }
        assert!(alpha_eq(&cur, &report.witness), "{} decl {}", t.case, t.decl);
        assert!(t.trace.steps.len() <= 50);
    }
    assert!(cycles > 0);
}

#[test]
fn every_corpus_term_round_trips() {
    let mut count = 0;
    for (case, env, ctx, term) in corpus_terms() {
        let text = pretty(&term, &ctx.names());
        assert!(alpha_eq(&parse_in(&env, &ctx, &text), &term), "{case}: {text}");
        count += 1;
    }
    for t in corpus_traces() {
        for snap in t.trace.snapshots() {
            let text = pretty(snap, &t.ctx.names());
            assert!(alpha_eq(&parse_in(&t.env, &t.ctx, &text), snap), "{}: {text}", t.case);
        }
    }
    assert!(count > 50);
}

#[test]
fn without_the_elimination_rules_everything_normalizes() {
    for case in all_examples() {
        let elab = case.elaborate_unreduced();
        for o in &elab.outcomes {
            let PragmaOutcome::Reduce { term, ctx, .. } = o else { continue };
            for strategy in [Strategy::Whnf, Strategy::Normalize] {
                for rules in [RuleSet::pure(), RuleSet { proof_irrelevance: false, ..RuleSet::pure() }] {
                    let trace = Kernel::new(&elab.env, rules).reduce(ctx, term, strategy);
                    assert_eq!(trace.status, Status::NormalForm, "{} decl {} {strategy}", case.name, o.decl());
                }
            }
        }
    }
}

#[test]
fn irrelevance_off_keeps_the_loops() {
    for name in ["counterexample1", "counterexample2", "counterexample2-propext"] {
        let case = itt::corpus::load_example(name).unwrap();
        let rules = RuleSet { proof_irrelevance: false, ..RuleSet::default() };
        let outcomes = case.outcomes(rules, Strategy::Normalize);
        assert!(outcomes.iter().any(|(_, o)| o.starts_with("CycleDetected")), "{name}");
    }
}

/// Closed terms of a case worth comparing: every global, its body, and the
/// normal forms reached under the pure rules.
fn comparison_pool(env: &GlobalEnv, ctx: &Context, extra: &[Term]) -> Vec<Term> {
    let mut pool: Vec<Term> = env.names().map(|n| Term::Global(n.clone())).collect();
    pool.extend(env.iter().filter_map(|(_, e)| e.body.clone()));
    for t in extra {
        let trace = Kernel::new(env, RuleSet::pure()).normalize(ctx, t);
        pool.push(trace.final_term().clone());
    }
    pool
}

#[test]
fn conversion_is_an_equivalence_and_monotone() {
    for case in all_examples() {
        let elab = case.elaborate_unreduced();
        let terms: Vec<Term> = elab.outcomes.iter().map(|o| o.term().clone()).collect();
        let pool = comparison_pool(&elab.env, &elab.ctx, &terms);
        let conv = |rules: RuleSet, a: &Term, b: &Term| Kernel::new(&elab.env, RuleSet { fuel: 2_000, ..rules }).convert(&elab.ctx, a, b, None).ok();
        let full = RuleSet { j_rule: case.rules.j_rule, ..RuleSet::default() };
        let mut table = vec![vec![None; pool.len()]; pool.len()];
        for (i, a) in pool.iter().enumerate() {
            assert_ne!(conv(full, a, a), Some(false), "{}: reflexivity", case.name);
            for (j, b) in pool.iter().enumerate() {
                table[i][j] = conv(full, a, b);
                if let (Some(x), Some(y)) = (table[i][j], conv(full, b, a)) {
                    assert_eq!(x, y, "{}: symmetry of {} and {}", case.name, i, j);
                }
                let pure = conv(RuleSet::pure(), a, b);
                if let (Some(p), Some(f)) = (pure, table[i][j]) {
                    assert!(!p || f, "{}: disabling rules made {i} ~ {j}", case.name);
                }
            }
        }
        for i in 0..pool.len() {
            for j in 0..pool.len() {
                for k in 0..pool.len() {
                    if table[i][j] == Some(true) && table[j][k] == Some(true) {
                        assert_ne!(table[i][k], Some(false), "{}: transitivity {i} {j} {k}", case.name);
                    }
                }
            }
        }
    }
}

#[test]
fn conversion_is_a_congruence_on_spot_checks() {
    let case = itt::corpus::load_example("sanity-church").unwrap();
    let elab = case.elaborate_unreduced();
    let (env, ctx) = (&elab.env, &elab.ctx);
    let a = parse_in(env, ctx, "pow two two");
    let b = parse_in(env, ctx, "fun (A : Prop), fun (f : A -> A), fun (x : A), f (f (f (f x)))");
    let nat = Term::global("Nat");
    let mut k = Kernel::new(env, RuleSet::default());
    assert!(k.convert(ctx, &a, &b, Some(&nat)).unwrap());
    let w = Name::new("w").unwrap();
    let contexts: Vec<Box<dyn Fn(Term) -> Term>> = vec![
        Box::new(|t| Term::app(Term::lam(Name::new("y").unwrap(), Term::global("Nat"), Term::var(0)), t)),
        Box::new(move |t| Term::lam(w.clone(), Term::prop(), itt::syntax::shift(&t, 0, 1))),
        Box::new(|t| Term::apps(t, [Term::global("Nat")])),
        Box::new(|t| Term::apps(Term::global("pow"), [t, Term::global("two")])),
    ];
    for c in &contexts {
        let mut k = Kernel::new(env, RuleSet::default());
        assert!(k.convert(ctx, &c(a.clone()), &c(b.clone()), None).unwrap());
    }
}
