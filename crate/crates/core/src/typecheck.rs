//! Bidirectional type checking for the three-sort PTS with impredicative
//! `Prop`, the typing rules of the primitive forms, and elaboration of whole
//! programs into a global environment.

use indexmap::IndexMap;

use crate::convert::RuleSet;
use crate::kernel::{FuelExhausted, Kernel};
use crate::parser::{Declaration, Program, Scope};
use crate::reduce::Strategy;
use crate::trace::Trace;
use crate::syntax::{pretty, shift, subst, Name, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    Definition,
    Axiom,
}

#[derive(Clone, Debug)]
pub struct GlobalEntry {
    pub ty: Term,
    /// `None` for axioms, which never reduce.
    pub body: Option<Term>,
    pub kind: EntryKind,
}

/// Elaborated globals in declaration order. Every entry is closed.
#[derive(Clone, Debug, Default)]
pub struct GlobalEnv {
    entries: IndexMap<Name, GlobalEntry>,
}

impl GlobalEnv {
    pub fn get(&self, name: &Name) -> Option<&GlobalEntry> {
        self.entries.get(name)
    }

    pub fn lookup(&self, name: &str) -> Option<&GlobalEntry> {
        Name::new(name).ok().and_then(|n| self.entries.get(&n))
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &GlobalEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn insert(&mut self, name: Name, entry: GlobalEntry) {
        self.entries.insert(name, entry);
    }
}

#[derive(Clone, Debug)]
pub struct Binding {
    pub name: Name,
    pub ty: Term,
}

/// Local telescope, innermost binding last.
#[derive(Clone, Debug, Default)]
pub struct Context {
    entries: Vec<Binding>,
}

impl Context {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The context extended with one more binding.
    pub fn with(&self, name: Name, ty: Term) -> Context {
        let mut entries = self.entries.clone();
        entries.push(Binding { name, ty });
        Context { entries }
    }

    pub fn push(&mut self, name: Name, ty: Term) {
        self.entries.push(Binding { name, ty });
    }

    /// Type of `Var(index)`, shifted into the full context.
    pub fn lookup(&self, index: usize) -> Option<Term> {
        let n = self.entries.len();
        (index < n).then(|| shift(&self.entries[n - 1 - index].ty, 0, index as isize + 1))
    }

    pub fn names(&self) -> Vec<Name> {
        self.entries.iter().map(|b| b.name.clone()).collect()
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.entries
    }
}

/// Axioms `Prop : Type : Kind` and the Π-formation rules.
pub struct PtsRules;

impl PtsRules {
    pub const AXIOMS: [(Sort, Sort); 2] = [(Sort::Prop, Sort::Type), (Sort::Type, Sort::Kind)];

    /// `(Type, Prop, Prop)` is the impredicative one. Nothing lands in `Kind`.
    pub const PRODUCTS: [(Sort, Sort, Sort); 4] = [
        (Sort::Prop, Sort::Prop, Sort::Prop),
        (Sort::Type, Sort::Prop, Sort::Prop),
        (Sort::Prop, Sort::Type, Sort::Type),
        (Sort::Type, Sort::Type, Sort::Type),
    ];

    pub fn axiom(s: Sort) -> Option<Sort> {
        Self::AXIOMS.iter().find(|(a, _)| *a == s).map(|&(_, b)| b)
    }

    pub fn product(s1: Sort, s2: Sort) -> Option<Sort> {
        Self::PRODUCTS.iter().find(|(a, b, _)| (*a, *b) == (s1, s2)).map(|&(_, _, c)| c)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound variable #{0}")]
    UnboundVariable(usize),
    #[error("unknown global `{0}`")]
    UnknownGlobal(String),
    #[error("`Kind` has no type")]
    KindHasNoType,
    #[error("no product rule for ({0}, {1})")]
    NoProductRule(Sort, Sort),
    #[error("`{term}` is not a type; it has type `{ty}`")]
    NotAType { term: String, ty: String },
    #[error("`{term}` is applied but its type `{ty}` is not a product")]
    NotAFunction { term: String, ty: String },
    #[error("type mismatch for `{term}`: expected `{expected}`, found `{actual}`")]
    Mismatch { term: String, expected: String, actual: String },
    #[error("the carrier of an equality must have type `Type`; `{term}` has type `{ty}`")]
    CarrierNotInType { term: String, ty: String },
    #[error("the motive `{term}` of `Eq_rec` must have type `{carrier} -> Type` or `{carrier} -> Prop`, found `{ty}`")]
    BadMotive { term: String, carrier: String, ty: String },
    #[error("`J` is disabled; enable the J rule to use it")]
    JDisabled,
    #[error(transparent)]
    Fuel(#[from] FuelExhausted),
}

impl TypeError {
    pub fn fuel(&self) -> Option<FuelExhausted> {
        match self {
            TypeError::Fuel(f) => Some(*f),
            _ => None,
        }
    }
}

impl<'e> Kernel<'e> {
    fn show(&self, ctx: &Context, t: &Term) -> String {
        pretty(t, &ctx.names())
    }

    /// Infers the type of `t` in `ctx`.
    pub fn infer(&mut self, ctx: &Context, t: &Term) -> Result<Term, TypeError> {
        self.tick()?;
        match t {
            Term::Var(i) => ctx.lookup(*i).ok_or(TypeError::UnboundVariable(*i)),
            Term::Sort(s) => PtsRules::axiom(*s).map(Term::Sort).ok_or(TypeError::KindHasNoType),
            Term::Global(n) => {
                self.env.get(n).map(|e| e.ty.clone()).ok_or_else(|| TypeError::UnknownGlobal(n.to_string()))
            }
            Term::Pi { name, domain, codomain } => {
                let s1 = self.sort_of(ctx, domain)?;
                let s2 = self.sort_of(&ctx.with(name.clone(), (**domain).clone()), codomain)?;
                PtsRules::product(s1, s2).map(Term::Sort).ok_or(TypeError::NoProductRule(s1, s2))
            }
            Term::Lam { name, domain, body } => {
                let s1 = self.sort_of(ctx, domain)?;
                let inner = ctx.with(name.clone(), (**domain).clone());
                let body_ty = self.infer(&inner, body)?;
                let s2 = self.sort_of(&inner, &body_ty)?;
                if PtsRules::product(s1, s2).is_none() {
                    return Err(TypeError::NoProductRule(s1, s2));
                }
                Ok(Term::pi(name.clone(), (**domain).clone(), body_ty))
            }
            Term::App(f, a) => {
                let fty = self.infer(ctx, f)?;
                match self.whnf_term(ctx, &fty)? {
                    Term::Pi { domain, codomain, .. } => {
                        self.check(ctx, a, &domain)?;
                        Ok(subst(&codomain, 0, a))
                    }
                    other => Err(TypeError::NotAFunction { term: self.show(ctx, f), ty: self.show(ctx, &other) }),
                }
            }
            Term::Eq { ty, lhs, rhs } => {
                self.carrier(ctx, ty)?;
                self.check(ctx, lhs, ty)?;
                self.check(ctx, rhs, ty)?;
                Ok(Term::prop())
            }
            Term::Refl { ty, val } => {
                self.carrier(ctx, ty)?;
                self.check(ctx, val, ty)?;
                Ok(Term::Eq { ty: ty.clone(), lhs: val.clone(), rhs: val.clone() })
            }
            Term::EqRec { ty, motive, lhs, rhs, base, proof } => {
                self.carrier(ctx, ty)?;
                self.motive(ctx, ty, motive)?;
                self.check(ctx, lhs, ty)?;
                self.check(ctx, rhs, ty)?;
                self.check(ctx, base, &Term::App(motive.clone(), lhs.clone()))?;
                self.check(ctx, proof, &Term::Eq { ty: ty.clone(), lhs: lhs.clone(), rhs: rhs.clone() })?;
                Ok(Term::App(motive.clone(), rhs.clone()))
            }
            Term::Cast { src, dst, proof, val } => {
                let prop = Term::prop();
                self.check(ctx, src, &prop)?;
                self.check(ctx, dst, &prop)?;
                self.check(ctx, proof, &Term::eq(prop, (**src).clone(), (**dst).clone()))?;
                self.check(ctx, val, src)?;
                Ok((**dst).clone())
            }
            Term::J { src, dst, val } => {
                if !self.rules.j_rule {
                    return Err(TypeError::JDisabled);
                }
                let prop = Term::prop();
                self.check(ctx, src, &prop)?;
                self.check(ctx, dst, &prop)?;
                self.check(ctx, val, src)?;
                Ok((**dst).clone())
            }
        }
    }

    /// Checks `t` against `expected` up to conversion.
    pub fn check(&mut self, ctx: &Context, t: &Term, expected: &Term) -> Result<(), TypeError> {
        let actual = self.infer(ctx, t)?;
        if self.convert(ctx, &actual, expected, None)? {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                term: self.show(ctx, t),
                expected: self.show(ctx, expected),
                actual: self.show(ctx, &actual),
            })
        }
    }

    /// The sort a type lives in.
    pub fn sort_of(&mut self, ctx: &Context, t: &Term) -> Result<Sort, TypeError> {
        let ty = self.infer(ctx, t)?;
        match self.whnf_term(ctx, &ty)? {
            Term::Sort(s) => Ok(s),
            other => Err(TypeError::NotAType { term: self.show(ctx, t), ty: self.show(ctx, &other) }),
        }
    }

    fn carrier(&mut self, ctx: &Context, ty: &Term) -> Result<(), TypeError> {
        let tt = self.infer(ctx, ty)?;
        match self.whnf_term(ctx, &tt)? {
            Term::Sort(Sort::Type) => Ok(()),
            other => Err(TypeError::CarrierNotInType { term: self.show(ctx, ty), ty: self.show(ctx, &other) }),
        }
    }

    fn motive(&mut self, ctx: &Context, carrier: &Term, motive: &Term) -> Result<(), TypeError> {
        let mty = self.infer(ctx, motive)?;
        let bad = |k: &Self, shown: &Term| TypeError::BadMotive {
            term: k.show(ctx, motive),
            carrier: k.show(ctx, carrier),
            ty: k.show(ctx, shown),
        };
        match self.whnf_term(ctx, &mty)? {
            Term::Pi { name, domain, codomain } => {
                if !self.convert(ctx, &domain, carrier, None)? {
                    return Err(bad(self, &mty));
                }
                match self.whnf_term(&ctx.with(name, (*domain).clone()), &codomain)? {
                    Term::Sort(Sort::Prop | Sort::Type) => Ok(()),
                    _ => Err(bad(self, &mty)),
                }
            }
            _ => Err(bad(self, &mty)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ElabOptions {
    pub rules: RuleSet,
    /// Strategy for `#reduce` pragmas that do not name one.
    pub strategy: Strategy,
    /// When false, `#reduce` terms are type checked but not reduced.
    pub run_reductions: bool,
}

impl Default for ElabOptions {
    fn default() -> ElabOptions {
        ElabOptions { rules: RuleSet::default(), strategy: Strategy::Normalize, run_reductions: true }
    }
}

#[derive(Clone, Debug)]
pub enum PragmaOutcome {
    Check { decl: usize, term: Term, ty: Term, ctx: Context },
    Reduce { decl: usize, term: Term, ty: Term, ctx: Context, trace: Option<Trace> },
}

impl PragmaOutcome {
    /// Hypotheses in scope at the pragma.
    pub fn ctx(&self) -> &Context {
        match self {
            PragmaOutcome::Check { ctx, .. } | PragmaOutcome::Reduce { ctx, .. } => ctx,
        }
    }

    /// Zero-based index of the pragma among all declarations.
    pub fn decl(&self) -> usize {
        match self {
            PragmaOutcome::Check { decl, .. } | PragmaOutcome::Reduce { decl, .. } => *decl,
        }
    }

    pub fn names(&self) -> Vec<Name> {
        self.ctx().names()
    }

    pub fn ty(&self) -> &Term {
        match self {
            PragmaOutcome::Check { ty, .. } | PragmaOutcome::Reduce { ty, .. } => ty,
        }
    }

    pub fn term(&self) -> &Term {
        match self {
            PragmaOutcome::Check { term, .. } | PragmaOutcome::Reduce { term, .. } => term,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Elaboration {
    pub env: GlobalEnv,
    /// Hypotheses introduced by `assume`, in order.
    pub ctx: Context,
    pub outcomes: Vec<PragmaOutcome>,
}

impl Elaboration {
    /// Parsing scope for terms written against the final environment.
    pub fn scope(&self) -> Scope {
        Scope::new(self.ctx.names(), self.env.names().cloned())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ElabErrorKind {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("global declarations may not depend on hypotheses")]
    DependsOnHypothesis,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("declaration {index}{}: {kind}", name.as_ref().map(|n| format!(" `{n}`")).unwrap_or_default())]
pub struct ElabError {
    /// Zero-based position of the failing declaration.
    pub index: usize,
    pub name: Option<Name>,
    pub kind: ElabErrorKind,
}

impl ElabError {
    pub fn fuel(&self) -> Option<FuelExhausted> {
        match &self.kind {
            ElabErrorKind::Type(t) => t.fuel(),
            _ => None,
        }
    }
}

/// Processes declarations in order. Each declaration gets a fresh step
/// budget of `options.rules.fuel`.
pub fn elaborate(program: &Program, options: &ElabOptions) -> Result<Elaboration, ElabError> {
    let mut env = GlobalEnv::default();
    let mut ctx = Context::default();
    let mut outcomes = Vec::new();
    for (index, decl) in program.declarations.iter().enumerate() {
        let fail = |kind: ElabErrorKind| ElabError { index, name: decl.name().cloned(), kind };
        let mut kernel = Kernel::new(&env, options.rules);
        match decl {
            Declaration::Def { name, ty, body } => {
                let ty = match ty {
                    Some(ty) => {
                        kernel.sort_of(&ctx, ty).map_err(|e| fail(e.into()))?;
                        kernel.check(&ctx, body, ty).map_err(|e| fail(e.into()))?;
                        ty.clone()
                    }
                    None => {
                        let ty = kernel.infer(&ctx, body).map_err(|e| fail(e.into()))?;
                        kernel.sort_of(&ctx, &ty).map_err(|e| fail(e.into()))?;
                        ty
                    }
                };
                if !ty.is_closed() || !body.is_closed() {
                    return Err(fail(ElabErrorKind::DependsOnHypothesis));
                }
                let entry = GlobalEntry { ty, body: Some(body.clone()), kind: EntryKind::Definition };
                env.insert(name.clone(), entry);
            }
            Declaration::Axiom { name, ty } => {
                kernel.sort_of(&ctx, ty).map_err(|e| fail(e.into()))?;
                if !ty.is_closed() {
                    return Err(fail(ElabErrorKind::DependsOnHypothesis));
                }
                env.insert(name.clone(), GlobalEntry { ty: ty.clone(), body: None, kind: EntryKind::Axiom });
            }
            Declaration::Assume { name, ty } => {
                kernel.sort_of(&ctx, ty).map_err(|e| fail(e.into()))?;
                ctx.push(name.clone(), ty.clone());
            }
            Declaration::Check { term } => {
                let ty = kernel.infer(&ctx, term).map_err(|e| fail(e.into()))?;
                outcomes.push(PragmaOutcome::Check { decl: index, term: term.clone(), ty, ctx: ctx.clone() });
            }
            Declaration::Reduce { term, strategy } => {
                let ty = kernel.infer(&ctx, term).map_err(|e| fail(e.into()))?;
                let trace = options.run_reductions.then(|| {
                    let mut reducer = Kernel::new(&env, options.rules);
                    reducer.reduce(&ctx, term, strategy.unwrap_or(options.strategy))
                });
                outcomes.push(PragmaOutcome::Reduce { decl: index, term: term.clone(), ty, ctx: ctx.clone(), trace });
            }
        }
    }
    Ok(Elaboration { env, ctx, outcomes })
}
