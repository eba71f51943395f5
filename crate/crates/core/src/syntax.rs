//! Core terms: de Bruijn indices, shifting, substitution, α-equality,
//! canonical keys and pretty printing.

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use sha2::{Digest, Sha256};

/// The three sorts. `Prop : Type : Kind`; there is no cumulativity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Prop,
    Type,
    Kind,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Prop => "Prop",
            Sort::Type => "Type",
            Sort::Kind => "Kind",
        })
    }
}

/// Words reserved by the surface grammar; never valid as names.
pub const KEYWORDS: &[&str] = &[
    "forall", "fun", "Prop", "Type", "Eq", "refl", "Eq_rec", "cast", "J", "def", "axiom", "assume",
];

/// Identifier used for globals and for displaying binders. Never part of a
/// term's identity.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a valid identifier")]
pub struct InvalidName(pub String);

impl Name {
    pub fn new(s: &str) -> Result<Name, InvalidName> {
        if is_identifier(s) {
            Ok(Name(Arc::from(s)))
        } else {
            Err(InvalidName(s.to_owned()))
        }
    }

    /// Name given to the binder of a non-dependent arrow.
    pub fn anonymous() -> Name {
        Name(Arc::from("_"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c == '_' || (c.is_alphabetic() && c != 'λ')
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '\'' || (c.is_alphanumeric() && c != 'λ')
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if is_ident_start(c) => {}
        _ => return false,
    }
    chars.all(is_ident_continue) && !KEYWORDS.contains(&s)
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Rc = Arc<Term>;

/// Core syntax. Binders carry a display name only; equality and hashing
/// ignore it.
#[derive(Clone, Debug)]
pub enum Term {
    Var(usize),
    Sort(Sort),
    Pi { name: Name, domain: Rc, codomain: Rc },
    Lam { name: Name, domain: Rc, body: Rc },
    App(Rc, Rc),
    Global(Name),
    Eq { ty: Rc, lhs: Rc, rhs: Rc },
    Refl { ty: Rc, val: Rc },
    EqRec { ty: Rc, motive: Rc, lhs: Rc, rhs: Rc, base: Rc, proof: Rc },
    Cast { src: Rc, dst: Rc, proof: Rc, val: Rc },
    J { src: Rc, dst: Rc, val: Rc },
}

// Constructors. They take owned terms so builders read naturally.
impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }
    pub fn sort(s: Sort) -> Term {
        Term::Sort(s)
    }
    pub fn prop() -> Term {
        Term::Sort(Sort::Prop)
    }
    pub fn global(name: &str) -> Term {
        Term::Global(Name::new(name).expect("valid global name"))
    }
    pub fn pi(name: Name, domain: Term, codomain: Term) -> Term {
        Term::Pi { name, domain: Arc::new(domain), codomain: Arc::new(codomain) }
    }
    /// Non-dependent product; `codomain` is taken in the outer scope.
    pub fn arrow(domain: Term, codomain: Term) -> Term {
        Term::pi(Name::anonymous(), domain, shift(&codomain, 0, 1))
    }
    pub fn lam(name: Name, domain: Term, body: Term) -> Term {
        Term::Lam { name, domain: Arc::new(domain), body: Arc::new(body) }
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }
    pub fn eq(ty: Term, lhs: Term, rhs: Term) -> Term {
        Term::Eq { ty: Arc::new(ty), lhs: Arc::new(lhs), rhs: Arc::new(rhs) }
    }
    pub fn refl(ty: Term, val: Term) -> Term {
        Term::Refl { ty: Arc::new(ty), val: Arc::new(val) }
    }
    pub fn eq_rec(ty: Term, motive: Term, lhs: Term, rhs: Term, base: Term, proof: Term) -> Term {
        Term::EqRec {
            ty: Arc::new(ty),
            motive: Arc::new(motive),
            lhs: Arc::new(lhs),
            rhs: Arc::new(rhs),
            base: Arc::new(base),
            proof: Arc::new(proof),
        }
    }
    pub fn cast(src: Term, dst: Term, proof: Term, val: Term) -> Term {
        Term::Cast { src: Arc::new(src), dst: Arc::new(dst), proof: Arc::new(proof), val: Arc::new(val) }
    }
    pub fn j(src: Term, dst: Term, val: Term) -> Term {
        Term::J { src: Arc::new(src), dst: Arc::new(dst), val: Arc::new(val) }
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Term::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Immediate subterms in left-to-right order.
    pub fn children(&self) -> Vec<Term> {
        let c = |t: &Rc| (**t).clone();
        match self {
            Term::Var(_) | Term::Sort(_) | Term::Global(_) => Vec::new(),
            Term::Pi { domain, codomain, .. } => vec![c(domain), c(codomain)],
            Term::Lam { domain, body, .. } => vec![c(domain), c(body)],
            Term::App(f, a) => vec![c(f), c(a)],
            Term::Eq { ty, lhs, rhs } => vec![c(ty), c(lhs), c(rhs)],
            Term::Refl { ty, val } => vec![c(ty), c(val)],
            Term::EqRec { ty, motive, lhs, rhs, base, proof } => {
                vec![c(ty), c(motive), c(lhs), c(rhs), c(base), c(proof)]
            }
            Term::Cast { src, dst, proof, val } => vec![c(src), c(dst), c(proof), c(val)],
            Term::J { src, dst, val } => vec![c(src), c(dst), c(val)],
        }
    }

    /// Rebuilds this node with new children (same arity as `children`).
    pub fn with_children(&self, kids: Vec<Term>) -> Term {
        let mut it = kids.into_iter().map(Arc::new);
        let mut next = || it.next().expect("child count matches node arity");
        match self {
            Term::Var(_) | Term::Sort(_) | Term::Global(_) => self.clone(),
            Term::Pi { name, .. } => Term::Pi { name: name.clone(), domain: next(), codomain: next() },
            Term::Lam { name, .. } => Term::Lam { name: name.clone(), domain: next(), body: next() },
            Term::App(..) => Term::App(next(), next()),
            Term::Eq { .. } => Term::Eq { ty: next(), lhs: next(), rhs: next() },
            Term::Refl { .. } => Term::Refl { ty: next(), val: next() },
            Term::EqRec { .. } => Term::EqRec {
                ty: next(),
                motive: next(),
                lhs: next(),
                rhs: next(),
                base: next(),
                proof: next(),
            },
            Term::Cast { .. } => Term::Cast { src: next(), dst: next(), proof: next(), val: next() },
            Term::J { .. } => Term::J { src: next(), dst: next(), val: next() },
        }
    }

    /// For binder nodes, the display name of the variable bound in child 1.
    pub fn binder_name(&self) -> Option<&Name> {
        match self {
            Term::Pi { name, .. } | Term::Lam { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            Term::Eq { .. } | Term::Refl { .. } | Term::EqRec { .. } | Term::Cast { .. } | Term::J { .. }
        )
    }

    /// Does `Var(index)` occur free (relative to this term's scope)?
    pub fn has_var(&self, index: usize) -> bool {
        match self {
            Term::Var(i) => *i == index,
            Term::Sort(_) | Term::Global(_) => false,
            Term::Pi { domain, codomain: body, .. } | Term::Lam { domain, body, .. } => {
                domain.has_var(index) || body.has_var(index + 1)
            }
            other => other.children().iter().any(|c| c.has_var(index)),
        }
    }

    /// Number of free variables needed to scope this term (max free index + 1).
    pub fn free_depth(&self) -> usize {
        fn go(t: &Term, depth: usize) -> usize {
            match t {
                Term::Var(i) => (i + 1).saturating_sub(depth),
                Term::Sort(_) | Term::Global(_) => 0,
                Term::Pi { domain, codomain: body, .. } | Term::Lam { domain, body, .. } => {
                    go(domain, depth).max(go(body, depth + 1))
                }
                other => other.children().iter().map(|c| go(c, depth)).max().unwrap_or(0),
            }
        }
        go(self, 0)
    }

    pub fn is_closed(&self) -> bool {
        self.free_depth() == 0
    }

    pub fn globals(&self, out: &mut HashSet<Name>) {
        if let Term::Global(n) = self {
            out.insert(n.clone());
        }
        for c in self.children() {
            c.globals(out);
        }
    }
}

/// Adjusts free indices `>= cutoff` by `amount`.
///
/// Panics if an index would become negative: that only happens when the
/// caller violated scoping.
pub fn shift(t: &Term, cutoff: usize, amount: isize) -> Term {
    if amount == 0 {
        return t.clone();
    }
    match t {
        Term::Var(i) if *i >= cutoff => {
            let moved = *i as isize + amount;
            assert!(moved >= 0, "de Bruijn index underflow shifting Var({i}) by {amount}");
            Term::Var(moved as usize)
        }
        Term::Var(_) | Term::Sort(_) | Term::Global(_) => t.clone(),
        Term::Pi { name, domain, codomain } => Term::Pi {
            name: name.clone(),
            domain: Arc::new(shift(domain, cutoff, amount)),
            codomain: Arc::new(shift(codomain, cutoff + 1, amount)),
        },
        Term::Lam { name, domain, body } => Term::Lam {
            name: name.clone(),
            domain: Arc::new(shift(domain, cutoff, amount)),
            body: Arc::new(shift(body, cutoff + 1, amount)),
        },
        other => other.with_children(other.children().iter().map(|c| shift(c, cutoff, amount)).collect()),
    }
}

/// Replaces `Var(target)` with `value` and closes the gap left by the
/// removed variable. `value` lives in the context without `target`.
pub fn subst(t: &Term, target: usize, value: &Term) -> Term {
    fn go(t: &Term, target: usize, value: &Term, depth: usize) -> Term {
        match t {
            Term::Var(i) => {
                let hole = target + depth;
                match (*i).cmp(&hole) {
                    std::cmp::Ordering::Equal => shift(value, 0, depth as isize),
                    std::cmp::Ordering::Greater => Term::Var(i - 1),
                    std::cmp::Ordering::Less => t.clone(),
                }
            }
            Term::Sort(_) | Term::Global(_) => t.clone(),
            Term::Pi { name, domain, codomain } => Term::Pi {
                name: name.clone(),
                domain: Arc::new(go(domain, target, value, depth)),
                codomain: Arc::new(go(codomain, target, value, depth + 1)),
            },
            Term::Lam { name, domain, body } => Term::Lam {
                name: name.clone(),
                domain: Arc::new(go(domain, target, value, depth)),
                body: Arc::new(go(body, target, value, depth + 1)),
            },
            other => other.with_children(other.children().iter().map(|c| go(c, target, value, depth)).collect()),
        }
    }
    go(t, target, value, 0)
}

/// Structural equality up to binder names, which for de Bruijn terms is
/// α-equivalence.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    use Term::*;
    match (a, b) {
        (Var(i), Var(j)) => i == j,
        (Sort(s), Sort(t)) => s == t,
        (Global(m), Global(n)) => m == n,
        (Pi { domain: d1, codomain: c1, .. }, Pi { domain: d2, codomain: c2, .. })
        | (Lam { domain: d1, body: c1, .. }, Lam { domain: d2, body: c2, .. }) => {
            alpha_eq(d1, d2) && alpha_eq(c1, c2)
        }
        (App(f1, a1), App(f2, a2)) => alpha_eq(f1, f2) && alpha_eq(a1, a2),
        (Eq { .. }, Eq { .. })
        | (Refl { .. }, Refl { .. })
        | (EqRec { .. }, EqRec { .. })
        | (Cast { .. }, Cast { .. })
        | (J { .. }, J { .. }) => a.children().iter().zip(b.children().iter()).all(|(x, y)| alpha_eq(x, y)),
        _ => false,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        alpha_eq(self, other)
    }
}

impl Eq for Term {}

impl Term {
    fn tag(&self) -> u8 {
        match self {
            Term::Var(_) => 0,
            Term::Sort(_) => 1,
            Term::Pi { .. } => 2,
            Term::Lam { .. } => 3,
            Term::App(..) => 4,
            Term::Global(_) => 5,
            Term::Eq { .. } => 6,
            Term::Refl { .. } => 7,
            Term::EqRec { .. } => 8,
            Term::Cast { .. } => 9,
            Term::J { .. } => 10,
        }
    }

    /// Name-free prefix encoding; injective on α-classes.
    fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.tag());
        match self {
            Term::Var(i) => out.extend_from_slice(&(*i as u64).to_le_bytes()),
            Term::Sort(s) => out.push(*s as u8),
            Term::Global(n) => {
                out.extend_from_slice(&(n.as_str().len() as u64).to_le_bytes());
                out.extend_from_slice(n.as_str().as_bytes());
            }
            other => {
                for c in other.children() {
                    c.encode(out);
                }
            }
        }
    }
}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut bytes = Vec::new();
        self.encode(&mut bytes);
        state.write(&bytes);
    }
}

/// 64-bit digest of a term's α-class, taken from SHA-256 of its name-free
/// encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub u64);

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for CanonicalKey {
    type Err = std::num::ParseIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(CanonicalKey)
    }
}

pub fn canonical_key(t: &Term) -> CanonicalKey {
    let mut bytes = Vec::new();
    t.encode(&mut bytes);
    let digest = Sha256::digest(&bytes);
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    CanonicalKey(u64::from_be_bytes(first))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Term,
    App,
    Atom,
}

/// Prints `t` in surface syntax. `names` are the display names of the free
/// variables, innermost last. Binders are renamed when their name would
/// capture a free variable or global occurring in their scope.
pub fn pretty(t: &Term, names: &[Name]) -> String {
    let mut env: Vec<String> = names.iter().map(|n| n.to_string()).collect();
    let mut out = String::new();
    write_term(&mut out, t, &mut env, Prec::Term);
    out
}

fn free_names(t: &Term, depth: usize, env: &[String], out: &mut HashSet<String>) {
    match t {
        Term::Var(i) if *i >= depth => {
            let j = i - depth;
            if j < env.len() {
                out.insert(env[env.len() - 1 - j].clone());
            }
        }
        Term::Var(_) | Term::Sort(_) => {}
        Term::Global(n) => {
            out.insert(n.to_string());
        }
        Term::Pi { domain, codomain: body, .. } | Term::Lam { domain, body, .. } => {
            free_names(domain, depth, env, out);
            free_names(body, depth + 1, env, out);
        }
        other => {
            for c in other.children() {
                free_names(&c, depth, env, out);
            }
        }
    }
}

/// Picks a display name for a binder whose scope is `body`.
fn binder_display(name: &Name, body: &Term, env: &[String]) -> String {
    let mut used = HashSet::new();
    free_names(body, 1, env, &mut used);
    let base = name.as_str();
    if !used.contains(base) {
        return base.to_owned();
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|cand| !used.contains(cand) && !KEYWORDS.contains(&cand.as_str()))
        .expect("unbounded supply of names")
}

fn write_term(out: &mut String, t: &Term, env: &mut Vec<String>, prec: Prec) {
    match t {
        Term::Var(i) => {
            if *i < env.len() {
                out.push_str(&env[env.len() - 1 - i]);
            } else {
                out.push_str(&format!("?{i}"));
            }
        }
        Term::Sort(s) => out.push_str(&s.to_string()),
        Term::Global(n) => out.push_str(n.as_str()),
        Term::Pi { domain, codomain, .. } if !codomain.has_var(0) => {
            paren(out, prec > Prec::Term, |out| {
                write_term(out, domain, env, Prec::App);
                out.push_str(" -> ");
                env.push("_".into());
                write_term(out, codomain, env, Prec::Term);
                env.pop();
            });
        }
        Term::Pi { name, domain, codomain: body } | Term::Lam { name, domain, body } => {
            let keyword = if matches!(t, Term::Pi { .. }) { "forall" } else { "fun" };
            paren(out, prec > Prec::Term, |out| {
                let shown = binder_display(name, body, env);
                out.push_str(&format!("{keyword} ({shown} : "));
                write_term(out, domain, env, Prec::Term);
                out.push_str("), ");
                env.push(shown);
                write_term(out, body, env, Prec::Term);
                env.pop();
            });
        }
        Term::App(..) => {
            let (head, args) = t.spine();
            paren(out, prec == Prec::Atom, |out| {
                if head.is_primitive() {
                    write_primitive(out, head, env);
                } else {
                    write_term(out, head, env, Prec::Atom);
                }
                for a in args {
                    out.push(' ');
                    write_term(out, a, env, Prec::Atom);
                }
            });
        }
        _ => paren(out, prec == Prec::Atom, |out| write_primitive(out, t, env)),
    }
}

fn write_primitive(out: &mut String, t: &Term, env: &mut Vec<String>) {
    let keyword = match t {
        Term::Eq { .. } => "Eq",
        Term::Refl { .. } => "refl",
        Term::EqRec { .. } => "Eq_rec",
        Term::Cast { .. } => "cast",
        Term::J { .. } => "J",
        _ => unreachable!("not a primitive form"),
    };
    out.push_str(keyword);
    for c in t.children() {
        out.push(' ');
        write_term(out, &c, env, Prec::Atom);
    }
}

fn paren(out: &mut String, wrap: bool, body: impl FnOnce(&mut String)) {
    if wrap {
        out.push('(');
    }
    body(out);
    if wrap {
        out.push(')');
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self, &[]))
    }
}
