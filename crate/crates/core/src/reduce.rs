//! Small-step reduction: head steps, leftmost-outermost steps, and the
//! traced weak-head and strong normalization drivers.
//!
//! Definitions unfold only on demand: at the head of a spine (when weak-head
//! form is required) or during strong normalization. Cycle detection runs on
//! each head-reduction spine separately; a repeated term on one spine is a
//! proof of divergence because stepping is deterministic.

use std::fmt;
use std::str::FromStr;

use crate::kernel::{FuelExhausted, Kernel};
use crate::syntax::{canonical_key, subst, Name, Sort, Term};
use crate::trace::{CycleDetector, CycleReport, Status, Trace, TraceStep};
use crate::typecheck::Context;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Head steps only.
    Whnf,
    /// Head steps, then recursively under binders and into arguments.
    Normalize,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Whnf => "whnf",
            Strategy::Normalize => "nf",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whnf" => Ok(Strategy::Whnf),
            "nf" => Ok(Strategy::Normalize),
            other => Err(format!("unknown strategy `{other}` (expected `whnf` or `nf`)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    Beta,
    Delta(Name),
    CastFire,
    EqRecFire,
    JFire,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepKind::Beta => f.write_str("Beta"),
            StepKind::Delta(n) => write!(f, "Delta({n})"),
            StepKind::CastFire => f.write_str("CastFire"),
            StepKind::EqRecFire => f.write_str("EqRecFire"),
            StepKind::JFire => f.write_str("JFire"),
        }
    }
}

impl FromStr for StepKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Beta" => Ok(StepKind::Beta),
            "CastFire" => Ok(StepKind::CastFire),
            "EqRecFire" => Ok(StepKind::EqRecFire),
            "JFire" => Ok(StepKind::JFire),
            _ => s
                .strip_prefix("Delta(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|n| Name::new(n).ok())
                .map(StepKind::Delta)
                .ok_or_else(|| format!("unknown step kind `{s}`")),
        }
    }
}

fn reapply(head: Term, args: &[&Term]) -> Term {
    Term::apps(head, args.iter().map(|a| (*a).clone()))
}

enum Halt {
    Fuel,
    Cycle(CycleReport),
}

impl<'e> Kernel<'e> {
    /// Contracts the redex at the head of `t`'s spine, if there is one.
    /// Side conditions are decided by conversion; a failed side condition
    /// leaves the term stuck.
    pub fn head_step(
        &mut self,
        ctx: &Context,
        t: &Term,
        allow_delta: bool,
    ) -> Result<Option<(Term, StepKind)>, FuelExhausted> {
        let (head, args) = t.spine();
        let prop = Term::Sort(Sort::Prop);
        let fired = match head {
            Term::Lam { body, .. } if self.rules.beta && !args.is_empty() => {
                Some((reapply(subst(body, 0, args[0]), &args[1..]), StepKind::Beta))
            }
            Term::Global(n) if allow_delta && self.rules.delta => {
                let body = self.env.get(n).and_then(|e| e.body.clone());
                body.map(|b| (reapply(b, &args), StepKind::Delta(n.clone())))
            }
            Term::Cast { src, dst, val, .. } if self.rules.cast_rule => self
                .convert(ctx, src, dst, Some(&prop))?
                .then(|| (reapply((**val).clone(), &args), StepKind::CastFire)),
            Term::EqRec { ty, lhs, rhs, base, .. } if self.rules.eqrec_rule => self
                .convert(ctx, lhs, rhs, Some(ty))?
                .then(|| (reapply((**base).clone(), &args), StepKind::EqRecFire)),
            Term::J { src, dst, val } if self.rules.j_rule => self
                .convert(ctx, src, dst, Some(&prop))?
                .then(|| (reapply((**val).clone(), &args), StepKind::JFire)),
            _ => None,
        };
        if fired.is_some() {
            self.tick()?;
        }
        Ok(fired)
    }

    /// Head-reduces without unfolding definitions at the head.
    pub(crate) fn whnf_core(&mut self, ctx: &Context, t: &Term) -> Result<Term, FuelExhausted> {
        let mut t = t.clone();
        while let Some((next, _)) = self.head_step(ctx, &t, false)? {
            t = next;
        }
        Ok(t)
    }

    /// Untraced weak-head normal form, unfolding head definitions.
    pub fn whnf_term(&mut self, ctx: &Context, t: &Term) -> Result<Term, FuelExhausted> {
        let mut t = t.clone();
        while let Some((next, _)) = self.head_step(ctx, &t, true)? {
            t = next;
        }
        Ok(t)
    }

    /// Replaces a definition at the head of the spine by its body.
    pub(crate) fn unfold_head(&self, t: &Term) -> Option<Term> {
        if !self.rules.delta {
            return None;
        }
        let (head, args) = t.spine();
        match head {
            Term::Global(n) => self.env.get(n)?.body.clone().map(|b| reapply(b, &args)),
            _ => None,
        }
    }

    fn child_context(ctx: &Context, node: &Term, index: usize, kids: &[Term]) -> Option<Context> {
        match node.binder_name() {
            Some(name) if index == 1 => Some(ctx.with(name.clone(), kids[0].clone())),
            _ => None,
        }
    }

    /// One leftmost-outermost step, or `None` if `t` is normal with respect
    /// to the enabled rules.
    pub fn step(&mut self, ctx: &Context, t: &Term) -> Result<Option<(Term, StepKind)>, FuelExhausted> {
        if let Some(fired) = self.head_step(ctx, t, true)? {
            return Ok(Some(fired));
        }
        let kids = t.children();
        for (i, kid) in kids.iter().enumerate() {
            let inner = Self::child_context(ctx, t, i, &kids);
            if let Some((next, kind)) = self.step(inner.as_ref().unwrap_or(ctx), kid)? {
                let mut kids = kids.clone();
                kids[i] = next;
                return Ok(Some((t.with_children(kids), kind)));
            }
        }
        Ok(None)
    }

    /// Traced weak-head reduction.
    pub fn whnf(&mut self, ctx: &Context, t: &Term) -> Trace {
        self.traced(ctx, t, Strategy::Whnf)
    }

    /// Traced strong normalization.
    pub fn normalize(&mut self, ctx: &Context, t: &Term) -> Trace {
        self.traced(ctx, t, Strategy::Normalize)
    }

    pub fn reduce(&mut self, ctx: &Context, t: &Term, strategy: Strategy) -> Trace {
        self.traced(ctx, t, strategy)
    }

    fn traced(&mut self, ctx: &Context, t: &Term, strategy: Strategy) -> Trace {
        let mut run = Run { kernel: self, initial: t.clone(), steps: Vec::new(), strategy };
        let identity = |x: &Term| x.clone();
        let status = match run.spine(ctx, t.clone(), &identity) {
            Ok(_) => Status::NormalForm,
            Err(Halt::Fuel) => Status::FuelExhausted,
            Err(Halt::Cycle(report)) => Status::CycleDetected(report),
        };
        Trace::new(t.clone(), run.steps, strategy, status, ctx.names())
    }
}

/// State of one traced reduction. Every recorded snapshot is the whole term;
/// `frame` rebuilds it around the subterm currently being reduced.
struct Run<'k, 'e> {
    kernel: &'k mut Kernel<'e>,
    initial: Term,
    steps: Vec<TraceStep>,
    strategy: Strategy,
}

impl Run<'_, '_> {
    fn current(&self) -> (usize, Term) {
        match self.steps.last() {
            Some(s) => (self.steps.len(), s.term.clone()),
            None => (0, self.initial.clone()),
        }
    }

    fn spine(&mut self, ctx: &Context, t: Term, frame: &dyn Fn(&Term) -> Term) -> Result<Term, Halt> {
        let mut detector = CycleDetector::default();
        let (index, snapshot) = self.current();
        detector.observe(index, &snapshot);
        let mut cur = t;
        loop {
            match self.kernel.head_step(ctx, &cur, true) {
                Err(_) => return Err(Halt::Fuel),
                Ok(None) => break,
                Ok(Some((next, kind))) => {
                    let full = frame(&next);
                    let key = canonical_key(&full);
                    let index = self.steps.len() + 1;
                    self.steps.push(TraceStep { kind, term: full.clone(), key });
                    if let Some(report) = detector.observe_keyed(key, index, &full) {
                        return Err(Halt::Cycle(report));
                    }
                    cur = next;
                }
            }
        }
        if self.strategy == Strategy::Whnf {
            return Ok(cur);
        }
        let mut kids = cur.children();
        for i in 0..kids.len() {
            let inner = Kernel::child_context(ctx, &cur, i, &kids);
            let kid = kids[i].clone();
            let done = {
                let (parts, node) = (&kids, &cur);
                let sub = move |x: &Term| {
                    let mut k = parts.clone();
                    k[i] = x.clone();
                    frame(&node.with_children(k))
                };
                self.spine(inner.as_ref().unwrap_or(ctx), kid, &sub)?
            };
            kids[i] = done;
        }
        Ok(cur.with_children(kids))
    }
}
