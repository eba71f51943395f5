//! Definitional equality.
//!
//! Weak-head reduce both sides without unfolding definitions, compare, and
//! unfold a definition only when the heads disagree. Where the common type of
//! two terms is known and is a proposition, proof irrelevance answers `true`
//! without looking at the terms. Types are tracked through application
//! arguments (against the head's Π domains), through the fields of the
//! primitive forms, and through λ bodies when the λ's type is known; all other
//! positions compare structurally. There is no η.

use crate::kernel::{FuelExhausted, Kernel, DEFAULT_FUEL};
use crate::syntax::{subst, Sort, Term};
use crate::typecheck::Context;

/// Which reduction and conversion rules are active, plus the step budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub beta: bool,
    pub delta: bool,
    /// `cast A B e x ▷ x` when `A ≡ B`.
    pub cast_rule: bool,
    /// `Eq_rec T P a b x e ▷ x` when `a ≡ b`.
    pub eqrec_rule: bool,
    /// `J A B x ▷ x` when `A ≡ B`; also gates typing of `J`.
    pub j_rule: bool,
    pub proof_irrelevance: bool,
    pub fuel: u64,
}

impl Default for RuleSet {
    fn default() -> RuleSet {
        RuleSet {
            beta: true,
            delta: true,
            cast_rule: true,
            eqrec_rule: true,
            j_rule: false,
            proof_irrelevance: true,
            fuel: DEFAULT_FUEL,
        }
    }
}

impl RuleSet {
    /// Only β and δ: the irrelevant-elimination rules are all off.
    pub fn pure() -> RuleSet {
        RuleSet { cast_rule: false, eqrec_rule: false, j_rule: false, ..RuleSet::default() }
    }

    /// Stable short name, e.g. `default` or `no-cast+no-eqrec`. Fuel is not
    /// part of the label.
    pub fn label(&self) -> String {
        let d = RuleSet::default();
        let mut parts = Vec::new();
        if self.beta != d.beta {
            parts.push("no-beta");
        }
        if self.delta != d.delta {
            parts.push("no-delta");
        }
        if self.cast_rule != d.cast_rule {
            parts.push("no-cast");
        }
        if self.eqrec_rule != d.eqrec_rule {
            parts.push("no-eqrec");
        }
        if self.j_rule != d.j_rule {
            parts.push("j");
        }
        if self.proof_irrelevance != d.proof_irrelevance {
            parts.push("no-irrelevance");
        }
        if parts.is_empty() {
            "default".to_owned()
        } else {
            parts.join("+")
        }
    }
}

impl<'e> Kernel<'e> {
    /// Is `ty` a proposition, i.e. does its type reduce to `Prop`?
    /// Ill-typed input counts as "no"; only fuel exhaustion is an error.
    pub fn is_proposition(&mut self, ctx: &Context, ty: &Term) -> Result<bool, FuelExhausted> {
        match self.infer(ctx, ty) {
            Ok(sort) => Ok(matches!(self.whnf_term(ctx, &sort)?, Term::Sort(Sort::Prop))),
            Err(e) => match e.fuel() {
                Some(f) => Err(f),
                None => Ok(false),
            },
        }
    }

    /// Decides `a ≡ b`, optionally at a known common type.
    pub fn convert(&mut self, ctx: &Context, a: &Term, b: &Term, ty: Option<&Term>) -> Result<bool, FuelExhausted> {
        self.tick()?;
        if a == b {
            return Ok(true);
        }
        if let Some(ty) = ty {
            if self.rules.proof_irrelevance && self.is_proposition(ctx, ty)? {
                return Ok(true);
            }
        }
        let mut a = self.whnf_core(ctx, a)?;
        let mut b = self.whnf_core(ctx, b)?;
        loop {
            if a == b {
                return Ok(true);
            }
            if let (Term::Global(m), Term::Global(n)) = (a.spine().0, b.spine().0) {
                if m == n && self.is_definition(m) && self.compare_spines(ctx, &a, &b)? {
                    return Ok(true);
                }
            }
            match (self.unfold_head(&a), self.unfold_head(&b)) {
                (None, None) => return self.compare_whnf(ctx, &a, &b, ty),
                (ua, ub) => {
                    if let Some(ua) = ua {
                        self.tick()?;
                        a = self.whnf_core(ctx, &ua)?;
                    }
                    if let Some(ub) = ub {
                        self.tick()?;
                        b = self.whnf_core(ctx, &ub)?;
                    }
                }
            }
        }
    }

    fn is_definition(&self, name: &crate::syntax::Name) -> bool {
        self.rules.delta && self.env.get(name).is_some_and(|e| e.body.is_some())
    }

    /// Both sides are head-stable with nothing left to unfold.
    fn compare_whnf(&mut self, ctx: &Context, a: &Term, b: &Term, ty: Option<&Term>) -> Result<bool, FuelExhausted> {
        match (a, b) {
            (Term::Sort(s), Term::Sort(t)) => Ok(s == t),
            (
                Term::Pi { name, domain: d1, codomain: c1 },
                Term::Pi { domain: d2, codomain: c2, .. },
            ) => {
                if !self.convert(ctx, d1, d2, None)? {
                    return Ok(false);
                }
                self.convert(&ctx.with(name.clone(), (**d1).clone()), c1, c2, None)
            }
            (Term::Lam { name, domain: d1, body: b1 }, Term::Lam { domain: d2, body: b2, .. }) => {
                if !self.convert(ctx, d1, d2, None)? {
                    return Ok(false);
                }
                let body_ty = match ty {
                    Some(ty) => match self.whnf_term(ctx, ty)? {
                        Term::Pi { codomain, .. } => Some((*codomain).clone()),
                        _ => None,
                    },
                    None => None,
                };
                self.convert(&ctx.with(name.clone(), (**d1).clone()), b1, b2, body_ty.as_ref())
            }
            (Term::Sort(_) | Term::Pi { .. } | Term::Lam { .. }, _)
            | (_, Term::Sort(_) | Term::Pi { .. } | Term::Lam { .. }) => Ok(false),
            _ => self.compare_spines(ctx, a, b),
        }
    }

    /// Compares two application spines head-to-head and argument-by-argument,
    /// using the head's type to find each argument's type.
    fn compare_spines(&mut self, ctx: &Context, a: &Term, b: &Term) -> Result<bool, FuelExhausted> {
        let (h1, args1) = a.spine();
        let (h2, args2) = b.spine();
        if args1.len() != args2.len() || !self.compare_heads(ctx, h1, h2)? {
            return Ok(false);
        }
        let mut head_ty = self.head_type(ctx, h1);
        for (x, y) in args1.into_iter().zip(args2) {
            let (dom, cod) = match head_ty.take() {
                Some(t) => match self.whnf_term(ctx, &t)? {
                    Term::Pi { domain, codomain, .. } => (Some((*domain).clone()), Some((*codomain).clone())),
                    _ => (None, None),
                },
                None => (None, None),
            };
            if !self.convert(ctx, x, y, dom.as_ref())? {
                return Ok(false);
            }
            head_ty = cod.map(|c| subst(&c, 0, x));
        }
        Ok(true)
    }

    fn compare_heads(&mut self, ctx: &Context, a: &Term, b: &Term) -> Result<bool, FuelExhausted> {
        let prop = Term::Sort(Sort::Prop);
        match (a, b) {
            (Term::Var(i), Term::Var(j)) => Ok(i == j),
            (Term::Global(m), Term::Global(n)) => Ok(m == n),
            (Term::Eq { ty, lhs: a1, rhs: b1 }, Term::Eq { ty: t2, lhs: a2, rhs: b2 }) => Ok(self
                .convert(ctx, ty, t2, None)?
                && self.convert(ctx, a1, a2, Some(ty))?
                && self.convert(ctx, b1, b2, Some(ty))?),
            (Term::Refl { ty, val: v1 }, Term::Refl { ty: t2, val: v2 }) => {
                Ok(self.convert(ctx, ty, t2, None)? && self.convert(ctx, v1, v2, Some(ty))?)
            }
            (
                Term::EqRec { ty, motive: p1, lhs: a1, rhs: b1, base: x1, proof: e1 },
                Term::EqRec { ty: t2, motive: p2, lhs: a2, rhs: b2, base: x2, proof: e2 },
            ) => {
                let base_ty = Term::App(p1.clone(), a1.clone());
                let eq_ty = Term::Eq { ty: ty.clone(), lhs: a1.clone(), rhs: b1.clone() };
                Ok(self.convert(ctx, ty, t2, None)?
                    && self.convert(ctx, p1, p2, None)?
                    && self.convert(ctx, a1, a2, Some(ty))?
                    && self.convert(ctx, b1, b2, Some(ty))?
                    && self.convert(ctx, x1, x2, Some(&base_ty))?
                    && self.convert(ctx, e1, e2, Some(&eq_ty))?)
            }
            (
                Term::Cast { src: a1, dst: b1, proof: e1, val: x1 },
                Term::Cast { src: a2, dst: b2, proof: e2, val: x2 },
            ) => {
                let eq_ty = Term::Eq { ty: std::sync::Arc::new(prop.clone()), lhs: a1.clone(), rhs: b1.clone() };
                Ok(self.convert(ctx, a1, a2, Some(&prop))?
                    && self.convert(ctx, b1, b2, Some(&prop))?
                    && self.convert(ctx, e1, e2, Some(&eq_ty))?
                    && self.convert(ctx, x1, x2, Some(a1))?)
            }
            (Term::J { src: a1, dst: b1, val: x1 }, Term::J { src: a2, dst: b2, val: x2 }) => {
                Ok(self.convert(ctx, a1, a2, Some(&prop))?
                    && self.convert(ctx, b1, b2, Some(&prop))?
                    && self.convert(ctx, x1, x2, Some(a1))?)
            }
            (Term::Sort(_), Term::Sort(_)) | (Term::Pi { .. }, Term::Pi { .. }) | (Term::Lam { .. }, Term::Lam { .. }) => {
                self.compare_whnf(ctx, a, b, None)
            }
            _ => Ok(false),
        }
    }

    /// Type of a rigid spine head, when it can be read off without inference.
    fn head_type(&self, ctx: &Context, head: &Term) -> Option<Term> {
        match head {
            Term::Var(i) => ctx.lookup(*i),
            Term::Global(n) => self.env.get(n).map(|e| e.ty.clone()),
            Term::Cast { dst, .. } | Term::J { dst, .. } => Some((**dst).clone()),
            Term::EqRec { motive, rhs, .. } => Some(Term::App(motive.clone(), rhs.clone())),
            Term::Refl { ty, val } => Some(Term::Eq { ty: ty.clone(), lhs: val.clone(), rhs: val.clone() }),
            _ => None,
        }
    }
}
