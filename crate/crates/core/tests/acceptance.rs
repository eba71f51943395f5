//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{corpus_terms, corpus_traces, parse_in, subject_reduction};
use itt::convert::RuleSet;
use itt::corpus::load_example;
use itt::kernel::Kernel;
use itt::reduce::{StepKind, Strategy};
use itt::syntax::{alpha_eq, pretty, Name, Term};
use itt::trace::{replay_json, Status, Trace};
use itt::typecheck::{Elaboration, PragmaOutcome, TypeError};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn trace_at(elab: &Elaboration, decl: usize) -> Result<&Trace, String> {
    elab.outcomes
        .iter()
        .find_map(|o| match o {
            PragmaOutcome::Reduce { decl: d, trace: Some(t), .. } if *d == decl => Some(t),
            _ => None,
        })
        .ok_or_else(|| format!("no trace for declaration {decl}"))
}

fn elab(name: &str, rules: RuleSet, strategy: Strategy) -> Result<Elaboration, String> {
    let case = load_example(name).map_err(|e| e.to_string())?;
    case.elaborate(&itt::typecheck::ElabOptions { rules, strategy, run_reductions: true }).map_err(|e| e.to_string())
}

fn cast_fidelity() -> Check {
    let base = load_example("counterexample1").map_err(|e| e.to_string())?.elaborate_unreduced();
    let (env, ctx) = (&base.env, &base.ctx);
    let eq = parse_in(env, ctx, "Eq Prop Top Top");
    let proofs = [
        "refl Prop Top",
        "h Top Top",
        "h (Neg Bot) Top",
        "Eq_rec Prop (fun (a : Prop), Eq Prop Top a) Top Top (refl Prop Top) (h Top Top)",
    ];
    let delta = Term::global("delta");
    for p in proofs {
        let proof = parse_in(env, ctx, p);
        Kernel::new(env, RuleSet::default()).check(ctx, &proof, &eq).map_err(|e| format!("{p}: {e}"))?;
        let c = Term::cast(Term::global("Top"), Term::global("Top"), proof, delta.clone());
        let got = Kernel::new(env, RuleSet::default()).step(ctx, &c).map_err(|e| e.to_string())?;
        ensure(got == Some((delta.clone(), StepKind::CastFire)), format!("cast over {p} did not step to delta"))?;
    }
    let wider = ctx.with(Name::new("q").unwrap(), eq);
    let c = Term::cast(Term::global("Top"), Term::global("Top"), Term::var(0), delta.clone());
    let got = Kernel::new(env, RuleSet::default()).step(&wider, &c).map_err(|e| e.to_string())?;
    ensure(got == Some((delta, StepKind::CastFire)), "cast over a fresh variable did not step to delta")?;
    Ok(format!("{} proofs and a fresh variable all step to delta", proofs.len()))
}

fn first_cycle() -> Check {
    let e = elab("counterexample1", RuleSet::default(), Strategy::Normalize)?;
    let t = trace_at(&e, 9)?;
    let Status::CycleDetected(r) = &t.status else { return Err(format!("status {}", t.status)) };
    ensure(t.steps.len() <= 50, format!("{} steps", t.steps.len()))?;
    for shown in ["delta (omega h)", "omega h Top (omega h)", "cast Top Top (h Top Top) delta (omega h)"] {
        let want = parse_in(&e.env, &e.ctx, shown);
        ensure(t.snapshots().any(|s| alpha_eq(s, &want)), format!("`{shown}` not on the cycle"))?;
    }
    Ok(format!("CycleDetected first={} period={} after {} steps", r.first_index, r.period, t.steps.len()))
}

fn second_cycle_whnf() -> Check {
    let case = load_example("counterexample2").map_err(|e| e.to_string())?;
    let e = case.elaborate_unreduced();
    ensure(e.ctx.is_empty(), "Omega is not closed")?;
    let t = Kernel::new(&e.env, RuleSet::default()).whnf(&e.ctx, &Term::global("Omega"));
    let Status::CycleDetected(r) = &t.status else { return Err(format!("status {}", t.status)) };
    ensure(t.steps.len() <= 50, format!("{} steps", t.steps.len()))?;
    Ok(format!("whnf Omega: CycleDetected first={} period={}", r.first_index, r.period))
}

fn restored() -> Check {
    let mut seen = Vec::new();
    for (name, decls) in [("counterexample1", vec![7, 9]), ("counterexample2", vec![7])] {
        for rules in [RuleSet { cast_rule: false, ..RuleSet::default() }, RuleSet::pure()] {
            let e = elab(name, rules, Strategy::Normalize)?;
            for d in &decls {
                let t = trace_at(&e, *d)?;
                ensure(t.status == Status::NormalForm, format!("{name} decl {d}: {}", t.status))?;
                let nf = t.final_term();
                let mut body = nf;
                while let Term::Lam { body: b, .. } = body {
                    body = b;
                }
                ensure(matches!(body.spine().0, Term::Cast { .. }), format!("{name} decl {d}: head is not a cast"))?;
                let next = Kernel::new(&e.env, rules).step(&e.ctx, nf).map_err(|e| e.to_string())?;
                ensure(next.is_none(), format!("{name} decl {d}: normal form still steps"))?;
            }
            seen.push(rules.label());
        }
    }
    seen.sort();
    seen.dedup();
    Ok(format!("NormalForm with a stuck cast under {}", seen.join(", ")))
}

fn typing_fidelity() -> Check {
    let displays: [(&str, &[(&str, &str)]); 2] = [
        (
            "counterexample1",
            &[
                ("Bot", "Prop"),
                ("Neg", "Prop -> Prop"),
                ("Top", "Prop"),
                ("delta", "Top"),
                ("omega", "Neg (forall (A : Prop), forall (B : Prop), Eq Prop A B)"),
                ("Omega", "Neg (forall (A : Prop), forall (B : Prop), Eq Prop A B)"),
            ],
        ),
        (
            "counterexample2",
            &[
                ("id", "Top -> Top"),
                ("delta", "Top -> Top"),
                ("omega", "Top"),
                ("Omega", "Top"),
            ],
        ),
    ];
    let mut n = 0;
    for (case, sigs) in displays {
        let e = load_example(case).map_err(|e| e.to_string())?.elaborate_unreduced();
        let none = itt::typecheck::Context::default();
        for (name, shown) in sigs {
            let want = parse_in(&e.env, &none, shown);
            let entry = e.env.lookup(name).ok_or(format!("{case}: {name} missing"))?;
            let body = entry.body.as_ref().ok_or(format!("{case}: {name} has no body"))?;
            let got = Kernel::new(&e.env, RuleSet::default()).infer(&none, body).map_err(|e| format!("{name}: {e}"))?;
            let same = Kernel::new(&e.env, RuleSet::default()).convert(&none, &got, &want, None).map_err(|e| e.to_string())?;
            ensure(same, format!("{case}: {name} : {}", pretty(&got, &[])))?;
            n += 1;
        }
    }
    Ok(format!("{n} displayed signatures match"))
}

fn j_variant() -> Check {
    let e = load_example("girard-j").map_err(|e| e.to_string())?.elaborate_unreduced();
    let on = RuleSet { j_rule: true, ..RuleSet::default() };
    let fire = parse_in(&e.env, &e.ctx, "J Top Top delta");
    let got = Kernel::new(&e.env, on).step(&e.ctx, &fire).map_err(|e| e.to_string())?;
    ensure(got == Some((Term::global("delta"), StepKind::JFire)), "J Top Top delta did not step to delta")?;
    let stuck = parse_in(&e.env, &e.ctx, "J Top Bot delta");
    let got = Kernel::new(&e.env, on).head_step(&e.ctx, &stuck, true).map_err(|e| e.to_string())?;
    ensure(got.is_none(), "J Top Bot delta fired")?;
    let off = Kernel::new(&e.env, RuleSet::default()).infer(&e.ctx, &fire);
    ensure(matches!(off, Err(TypeError::JDisabled)), "J accepted without the rule")?;
    Ok("J Top Top delta steps once to delta; J Top Bot delta is stuck".into())
}

fn self_consistency() -> Check {
    let traces = corpus_traces();
    for t in &traces {
        subject_reduction(t).map_err(|e| format!("{} decl {}: {e}", t.case, t.decl))?;
        let text = t.trace.to_json_lines(Some(t.decl)).join("\n");
        replay_json(&t.env, &t.ctx, &text, t.rules).map_err(|e| format!("{} decl {}: {e}", t.case, t.decl))?;
    }
    let terms = corpus_terms();
    for (case, env, ctx, term) in &terms {
        let text = pretty(term, &ctx.names());
        ensure(alpha_eq(&parse_in(env, ctx, &text), term), format!("{case}: `{text}` does not round-trip"))?;
    }
    Ok(format!("{} traces typed and replayed, {} terms round-trip", traces.len(), terms.len()))
}

fn church() -> Check {
    let e = elab("sanity-church", RuleSet::default(), Strategy::Normalize)?;
    let t = trace_at(&e, 4)?;
    ensure(t.status == Status::NormalForm, format!("status {}", t.status))?;
    let four = parse_in(&e.env, &e.ctx, "fun (A : Prop), fun (f : A -> A), fun (x : A), f (f (f (f x)))");
    ensure(alpha_eq(t.final_term(), &four), format!("got {}", pretty(t.final_term(), &[])))?;
    Ok(format!("pow two two normalizes to four in {} steps", t.steps.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("cast rule fidelity", cast_fidelity),
        ("first counterexample cycles under nf", first_cycle),
        ("second counterexample cycles under whnf", second_cycle_whnf),
        ("normalization restored without cast", restored),
        ("displayed signatures type-check", typing_fidelity),
        ("J variant", j_variant),
        ("kernel self-consistency", self_consistency),
        ("Church numeral 2^2 normalizes to 4", church),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {ms} ms)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({why}; {ms} ms)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
