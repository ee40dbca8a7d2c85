//! Patterns, open terms and rewrite rules, with match counting, match
//! enumeration and rule application.
//!
//! A match selects occurrences of the content that instantiate the pattern's
//! simple patterns. Occurrences of equal elements are distinct reactants, so
//! pattern `2 a` against five `a` atoms has C(5,2) matches; selections that
//! differ only in the order in which interchangeable pattern slots were
//! assigned are identified. Interchangeable means: equal atoms, or
//! compartment patterns that are equal once variable names are erased.
//!
//! Enumeration order is defined by [`nth_match`]: `enumerate_matches` is
//! simply `nth_match` over `0..count_matches`, which keeps indexed selection
//! during simulation consistent with the enumeration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::multiset::Multiset;
use crate::term::{write_multiset, Atom, Compartment, Label, SimpleTerm, Term, Wrap, WrapAtom};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarSort {
    /// Bound to a multiset of wrap atoms.
    Wrap,
    /// Bound to a term.
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: VarSort,
}

impl Var {
    pub fn wrap(name: &str) -> Self {
        Self { name: name.into(), sort: VarSort::Wrap }
    }

    pub fn content(name: &str) -> Self {
        Self { name: name.into(), sort: VarSort::Content }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error("variable {0} occurs more than once in the pattern")]
    NonLinear(String),
    #[error("variable {0} of the result does not occur in the pattern")]
    UnboundResultVariable(String),
    #[error("unbound variable {0} during instantiation")]
    Unbound(String),
    #[error("rate {0} must be a finite nonnegative number")]
    InvalidRate(f64),
    #[error("stale match: the selected occurrences are not present at the site")]
    StaleMatch,
    #[error("site path does not lead to a compartment")]
    BadSite,
    #[error("site compartment has label {found}, rule expects {expected}")]
    LabelMismatch { expected: String, found: String },
}

// ---------------------------------------------------------------------------
// Patterns and open terms
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompartmentPattern {
    pub label: Label,
    pub wrap: Wrap,
    pub wrap_var: Var,
    pub content: Pattern,
    pub content_var: Var,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimplePattern {
    Atom(Atom),
    Compartment(Box<CompartmentPattern>),
}

/// A multiset of simple patterns. At the top of a rule the remainder
/// variable is implicit and not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern(pub Multiset<SimplePattern>);

impl Pattern {
    pub fn empty() -> Self {
        Self(Multiset::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every variable occurrence, in canonical order (duplicates kept).
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        for (p, n) in self.0.iter() {
            if let SimplePattern::Compartment(c) = p {
                for _ in 0..n {
                    out.push(c.wrap_var.clone());
                    c.content.collect_vars(out);
                    out.push(c.content_var.clone());
                }
            }
        }
    }

    /// Checks that no variable name occurs twice.
    pub fn check_linear(&self) -> Result<(), MatchError> {
        let mut seen = BTreeSet::new();
        for v in self.variables() {
            if !seen.insert(v.name.clone()) {
                return Err(MatchError::NonLinear(v.to_string()));
            }
        }
        Ok(())
    }

    /// Whether the pattern consists of atoms only.
    pub fn is_flat(&self) -> bool {
        self.0.iter().all(|(p, _)| matches!(p, SimplePattern::Atom(_)))
    }

    /// The ground term `σ(p)` is the pattern with no variables; only defined
    /// for flat patterns.
    pub fn as_flat_term(&self) -> Option<Term> {
        self.0
            .iter()
            .map(|(p, n)| match p {
                SimplePattern::Atom(a) => Some((SimpleTerm::Atom(a.clone()), n)),
                SimplePattern::Compartment(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WrapOpen {
    Atom(WrapAtom),
    Var(Var),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompartmentOpen {
    pub label: Label,
    pub wrap: Multiset<WrapOpen>,
    pub content: OpenTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimpleOpen {
    Atom(Atom),
    Compartment(Box<CompartmentOpen>),
    Var(Var),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpenTerm(pub Multiset<SimpleOpen>);

impl OpenTerm {
    pub fn empty() -> Self {
        Self(Multiset::new())
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        for (o, _) in self.0.iter() {
            match o {
                SimpleOpen::Atom(_) => {}
                SimpleOpen::Var(v) => out.push(v.clone()),
                SimpleOpen::Compartment(c) => {
                    for (w, _) in c.wrap.iter() {
                        if let WrapOpen::Var(v) = w {
                            out.push(v.clone());
                        }
                    }
                    c.content.collect_vars(out);
                }
            }
        }
    }
}

impl From<&Term> for OpenTerm {
    fn from(t: &Term) -> Self {
        OpenTerm(t.0.map(|s| match s {
            SimpleTerm::Atom(a) => SimpleOpen::Atom(a.clone()),
            SimpleTerm::Compartment(c) => SimpleOpen::Compartment(Box::new(CompartmentOpen {
                label: c.label.clone(),
                wrap: c.wrap.map(|w| WrapOpen::Atom(w.clone())),
                content: OpenTerm::from(&c.content),
            })),
        }))
    }
}

impl fmt::Display for CompartmentPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{{}}} ", self.label)?;
        if !self.wrap.is_empty() {
            write_multiset(f, &self.wrap, &mut true)?;
            f.write_str(" ")?;
        }
        write!(f, "{} | ", self.wrap_var)?;
        if !self.content.is_empty() {
            write_multiset(f, &self.content.0, &mut true)?;
            f.write_str(" ")?;
        }
        write!(f, "{})", self.content_var)
    }
}

impl fmt::Display for SimplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplePattern::Atom(a) => a.fmt(f),
            SimplePattern::Compartment(c) => c.fmt(f),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("\\e");
        }
        write_multiset(f, &self.0, &mut true)
    }
}

impl fmt::Display for WrapOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WrapOpen::Atom(a) => a.fmt(f),
            WrapOpen::Var(v) => v.fmt(f),
        }
    }
}

impl fmt::Display for CompartmentOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{{}}}", self.label)?;
        if !self.wrap.is_empty() {
            f.write_str(" ")?;
            write_multiset(f, &self.wrap, &mut true)?;
        }
        write!(f, " | {})", self.content)
    }
}

impl fmt::Display for SimpleOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleOpen::Atom(a) => a.fmt(f),
            SimpleOpen::Compartment(c) => c.fmt(f),
            SimpleOpen::Var(v) => v.fmt(f),
        }
    }
}

impl fmt::Display for OpenTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("\\e");
        }
        write_multiset(f, &self.0, &mut true)
    }
}

// ---------------------------------------------------------------------------
// Substitutions and matches
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution {
    pub wraps: BTreeMap<Arc<str>, Wrap>,
    pub contents: BTreeMap<Arc<str>, Term>,
}

impl Substitution {
    pub fn wrap(&self, name: &str) -> Option<&Wrap> {
        self.wraps.get(name)
    }

    pub fn content(&self, name: &str) -> Option<&Term> {
        self.contents.get(name)
    }

    fn absorb(&mut self, other: Substitution) {
        self.wraps.extend(other.wraps);
        self.contents.extend(other.contents);
    }
}

/// Occurrence selection inside one multiset: one pick per pattern slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Selection {
    pub picks: Vec<Pick>,
}

/// Occurrence `copy` of distinct element `element`, plus the nested
/// selection when the slot is a compartment pattern.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pick {
    pub element: usize,
    pub copy: usize,
    pub inner: Option<Box<InnerPick>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InnerPick {
    /// `(distinct wrap element, copy)` for each wrap atom of the pattern.
    pub wrap: Vec<(usize, usize)>,
    pub content: Selection,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Match {
    pub substitution: Substitution,
    pub selection: Selection,
}

impl Selection {
    /// Occurrences consumed per distinct element index.
    fn consumed(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for p in &self.picks {
            *out.entry(p.element).or_insert(0) += 1;
        }
        out
    }
}

/// `content` minus the occurrences counted in `consumed` (by element index).
fn remove_consumed(content: &Term, consumed: &BTreeMap<usize, usize>) -> Option<Term> {
    for (&j, &k) in consumed {
        match content.get(j) {
            Some((_, n)) if n >= k => {}
            _ => return None,
        }
    }
    Some(
        content.iter().enumerate().map(|(j, (s, n))| (s.clone(), n - consumed.get(&j).copied().unwrap_or(0))).collect(),
    )
}

// ---------------------------------------------------------------------------
// Match plans
// ---------------------------------------------------------------------------

/// Precompiled form of a [`Pattern`]: interchangeable slots grouped together.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPlan {
    groups: Vec<Group>,
}

#[derive(Debug, Clone, PartialEq)]
struct Group {
    shape: Shape,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Atom(Atom),
    Compartment { label: Label, wrap: Wrap, content: MatchPlan },
}

/// Per-slot variable naming of a compartment pattern. Atom slots carry none.
#[derive(Debug, Clone, PartialEq)]
struct Slot {
    vars: Option<(Var, Var)>,
    content: Option<MatchPlan>,
}

fn erase_vars(p: &SimplePattern) -> SimplePattern {
    match p {
        SimplePattern::Atom(a) => SimplePattern::Atom(a.clone()),
        SimplePattern::Compartment(c) => {
            let anon = |sort| Var { name: "".into(), sort };
            SimplePattern::Compartment(Box::new(CompartmentPattern {
                label: c.label.clone(),
                wrap: c.wrap.clone(),
                wrap_var: anon(VarSort::Wrap),
                content: Pattern(c.content.0.map(erase_vars)),
                content_var: anon(VarSort::Content),
            }))
        }
    }
}

impl MatchPlan {
    pub fn new(pattern: &Pattern) -> Result<Self, MatchError> {
        pattern.check_linear()?;
        Ok(Self::build(pattern))
    }

    fn build(pattern: &Pattern) -> Self {
        let mut by_shape: BTreeMap<SimplePattern, Vec<(&SimplePattern, usize)>> = BTreeMap::new();
        for (p, n) in pattern.0.iter() {
            by_shape.entry(erase_vars(p)).or_default().push((p, n));
        }
        let groups = by_shape
            .into_values()
            .map(|members| {
                let (first, _) = members[0];
                let shape = match first {
                    SimplePattern::Atom(a) => Shape::Atom(a.clone()),
                    SimplePattern::Compartment(c) => Shape::Compartment {
                        label: c.label.clone(),
                        wrap: c.wrap.clone(),
                        content: MatchPlan::build(&c.content),
                    },
                };
                let mut slots = Vec::new();
                for (p, n) in members {
                    for _ in 0..n {
                        slots.push(match p {
                            SimplePattern::Atom(_) => Slot { vars: None, content: None },
                            SimplePattern::Compartment(c) => Slot {
                                vars: Some((c.wrap_var.clone(), c.content_var.clone())),
                                content: Some(MatchPlan::build(&c.content)),
                            },
                        });
                    }
                }
                Group { shape, slots }
            })
            .collect();
        Self { groups }
    }

    fn is_flat(&self) -> bool {
        self.groups.iter().all(|g| matches!(g.shape, Shape::Atom(_)))
    }

    /// Number of matches of the plan's pattern in `content`.
    pub fn count(&self, content: &Term) -> u64 {
        if self.is_flat() {
            return self.count_flat(content);
        }
        let candidates = self.candidates(content);
        if candidates.iter().any(|c| c.is_empty()) {
            return 0;
        }
        let mut remaining: Vec<usize> = content.iter().map(|(_, n)| n).collect();
        count_groups(self, &candidates, 0, &mut remaining)
    }

    /// Product over species of C(available, required).
    fn count_flat(&self, content: &Term) -> u64 {
        let mut total = 1u64;
        for g in &self.groups {
            let Shape::Atom(a) = &g.shape else { unreachable!() };
            let have = content.multiplicity(&SimpleTerm::Atom(a.clone()));
            total = mul(total, binomial(have as u64, g.slots.len() as u64));
            if total == 0 {
                break;
            }
        }
        total
    }

    /// For each group, the elements it can match with their nested weights.
    fn candidates(&self, content: &Term) -> Vec<Vec<(usize, u64)>> {
        self.groups
            .iter()
            .map(|g| {
                content
                    .iter()
                    .enumerate()
                    .filter_map(|(j, (s, _))| {
                        let w = g.shape.weight(s);
                        (w > 0).then_some((j, w))
                    })
                    .collect()
            })
            .collect()
    }
}

impl Shape {
    /// Number of ways one slot of this shape matches element `s`.
    fn weight(&self, s: &SimpleTerm) -> u64 {
        match (self, s) {
            (Shape::Atom(a), SimpleTerm::Atom(b)) => u64::from(a == b),
            (Shape::Compartment { label, wrap, content }, SimpleTerm::Compartment(c)) => {
                if *label != c.label {
                    return 0;
                }
                let w = wrap_count(wrap, &c.wrap);
                if w == 0 {
                    return 0;
                }
                mul(w, content.count(&c.content))
            }
            _ => 0,
        }
    }
}

fn wrap_count(required: &Wrap, wrap: &Wrap) -> u64 {
    required.iter().fold(1u64, |acc, (a, m)| mul(acc, binomial(wrap.multiplicity(a) as u64, m as u64)))
}

fn mul(a: u64, b: u64) -> u64 {
    a.checked_mul(b).expect("match count overflows u64")
}

fn add(a: u64, b: u64) -> u64 {
    a.checked_add(b).expect("match count overflows u64")
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    u64::try_from(acc).expect("binomial overflows u64")
}

/// Calls `f` with every way of distributing `m` slots over the candidates
/// (bounded by what remains of each element), in lexicographic order of the
/// per-candidate counts with the first candidate taking the most.
fn for_each_distribution(
    cands: &[(usize, u64)],
    remaining: &[usize],
    m: usize,
    ks: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let i = ks.len();
    if i == cands.len() {
        return if m == 0 { f(ks) } else { true };
    }
    let cap = m.min(remaining[cands[i].0]);
    for k in (0..=cap).rev() {
        ks.push(k);
        let go_on = for_each_distribution(cands, remaining, m - k, ks, f);
        ks.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// Ways of placing the slots of one group according to `ks`:
/// `prod C(r_j, k_j) * w_j^k_j`.
fn placement_ways(cands: &[(usize, u64)], remaining: &[usize], ks: &[usize]) -> u64 {
    cands
        .iter()
        .zip(ks)
        .fold(1u64, |acc, (&(j, w), &k)| mul(acc, mul(binomial(remaining[j] as u64, k as u64), pow(w, k))))
}

fn pow(w: u64, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, _| mul(acc, w))
}

fn count_groups(plan: &MatchPlan, candidates: &[Vec<(usize, u64)>], g: usize, remaining: &mut Vec<usize>) -> u64 {
    if g == plan.groups.len() {
        return 1;
    }
    let cands = &candidates[g];
    let m = plan.groups[g].slots.len();
    if m == 1 && g + 1 == plan.groups.len() {
        return cands.iter().fold(0, |acc, &(j, w)| add(acc, mul(remaining[j] as u64, w)));
    }
    let mut total = 0u64;
    let snapshot = remaining.clone();
    for_each_distribution(cands, &snapshot, m, &mut Vec::new(), &mut |ks| {
        let ways = placement_ways(cands, &snapshot, ks);
        if ways > 0 {
            for (&(j, _), &k) in cands.iter().zip(ks) {
                remaining[j] -= k;
            }
            let rest = count_groups(plan, candidates, g + 1, remaining);
            for (&(j, _), &k) in cands.iter().zip(ks) {
                remaining[j] += k;
            }
            total = add(total, mul(ways, rest));
        }
        true
    });
    total
}

/// Lexicographic unranking of a `k`-subset of `0..n`.
fn unrank_combination(n: usize, k: usize, mut index: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for left in (1..=k).rev() {
        loop {
            let block = binomial((n - next - 1) as u64, (left - 1) as u64);
            if index < block {
                out.push(next);
                next += 1;
                break;
            }
            index -= block;
            next += 1;
        }
    }
    out
}

/// The `k` free copies of element `j`, i.e. those not already picked.
fn free_copies(total: usize, used: &[usize], chosen_rel: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(chosen_rel.len());
    let mut rel = 0usize;
    let mut want = chosen_rel.iter().peekable();
    for copy in 0..total {
        if used.contains(&copy) {
            continue;
        }
        match want.peek() {
            Some(&&r) if r == rel => {
                out.push(copy);
                want.next();
            }
            Some(_) => {}
            None => break,
        }
        rel += 1;
    }
    out
}

fn nth_in_plan(plan: &MatchPlan, content: &Term, index: u64) -> Option<Match> {
    let candidates = plan.candidates(content);
    let mut remaining: Vec<usize> = content.iter().map(|(_, n)| n).collect();
    let mut used: Vec<Vec<usize>> = vec![Vec::new(); remaining.len()];
    let mut selection = Selection::default();
    let mut substitution = Substitution::default();
    let mut index = index;

    for (g, group) in plan.groups.iter().enumerate() {
        let cands = &candidates[g];
        let m = group.slots.len();
        let snapshot = remaining.clone();
        let mut chosen: Option<(Vec<usize>, u64, u64)> = None;
        let mut offset = index;
        for_each_distribution(cands, &snapshot, m, &mut Vec::new(), &mut |ks| {
            let ways = placement_ways(cands, &snapshot, ks);
            if ways == 0 {
                return true;
            }
            let mut after = snapshot.clone();
            for (&(j, _), &k) in cands.iter().zip(ks) {
                after[j] -= k;
            }
            let rest = count_groups(plan, &candidates, g + 1, &mut after);
            let block = mul(ways, rest);
            if offset < block {
                chosen = Some((ks.to_vec(), offset / rest, rest));
                false
            } else {
                offset -= block;
                true
            }
        });
        let (ks, placement_index, rest) = chosen?;
        index = offset % rest;

        // Decompose the placement index, first candidate most significant.
        let radices: Vec<u64> =
            cands.iter().zip(&ks).map(|(&(j, w), &k)| mul(binomial(snapshot[j] as u64, k as u64), pow(w, k))).collect();
        let mut digits = vec![0u64; radices.len()];
        let mut p = placement_index;
        for i in (0..radices.len()).rev() {
            digits[i] = p % radices[i];
            p /= radices[i];
        }

        let mut slot_iter = group.slots.iter();
        for (i, (&(j, w), &k)) in cands.iter().zip(&ks).enumerate() {
            if k == 0 {
                continue;
            }
            let nested_radix = pow(w, k);
            let comb_index = digits[i] / nested_radix;
            let mut nested_digits = digits[i] % nested_radix;
            let rel = unrank_combination(snapshot[j], k, comb_index);
            let (element, total) = content.get(j).expect("candidate index in range");
            let copies = free_copies(total, &used[j], &rel);
            let mut per_copy = vec![0u64; k];
            for c in (0..k).rev() {
                per_copy[c] = nested_digits % w;
                nested_digits /= w;
            }
            for (copy, nested) in copies.into_iter().zip(per_copy) {
                let slot = slot_iter.next().expect("slot per chosen occurrence");
                let inner = match (&group.shape, element) {
                    (Shape::Atom(_), _) => None,
                    (Shape::Compartment { wrap, .. }, SimpleTerm::Compartment(c)) => {
                        let (inner, sub) = nested_match(wrap, slot, c, nested)?;
                        substitution.absorb(sub);
                        Some(Box::new(inner))
                    }
                    _ => return None,
                };
                used[j].push(copy);
                selection.picks.push(Pick { element: j, copy, inner });
            }
            remaining[j] -= k;
        }
    }
    Some(Match { substitution, selection })
}

fn nested_match(required: &Wrap, slot: &Slot, comp: &Compartment, index: u64) -> Option<(InnerPick, Substitution)> {
    let (wrap_var, content_var) = slot.vars.as_ref()?;
    let plan = slot.content.as_ref()?;
    let content_count = plan.count(&comp.content);
    if content_count == 0 {
        return None;
    }
    let mut wrap_index = index / content_count;
    let content_index = index % content_count;

    // Wrap selections: one combination per required wrap atom, last atom
    // least significant.
    let req: Vec<(&WrapAtom, usize)> = required.iter().collect();
    let mut wrap_pick_rev = Vec::new();
    for &(a, m) in req.iter().rev() {
        let have = comp.wrap.multiplicity(a);
        let radix = binomial(have as u64, m as u64);
        let digit = wrap_index % radix;
        wrap_index /= radix;
        let element = comp.wrap.iter().position(|(w, _)| w == a)?;
        let copies = unrank_combination(have, m, digit);
        wrap_pick_rev.push(copies.into_iter().map(|c| (element, c)).collect::<Vec<_>>());
    }
    let wrap_pick: Vec<(usize, usize)> = wrap_pick_rev.into_iter().rev().flatten().collect();

    let inner = nth_in_plan(plan, &comp.content, content_index)?;
    let remainder = remove_consumed(&comp.content, &inner.selection.consumed())?;
    let wrap_rest = comp.wrap.difference(required)?;

    let mut sub = inner.substitution;
    sub.wraps.insert(wrap_var.name.clone(), wrap_rest);
    sub.contents.insert(content_var.name.clone(), remainder);
    Some((InnerPick { wrap: wrap_pick, content: inner.selection }, sub))
}

// ---------------------------------------------------------------------------
// Public matching API
// ---------------------------------------------------------------------------

pub fn count_matches(pattern: &Pattern, content: &Term) -> Result<u64, MatchError> {
    Ok(MatchPlan::new(pattern)?.count(content))
}

/// The match at position `index` of the canonical enumeration, or `None`
/// when `index >= count_matches`.
pub fn nth_match(plan: &MatchPlan, content: &Term, index: u64) -> Option<Match> {
    if index >= plan.count(content) {
        return None;
    }
    nth_in_plan(plan, content, index)
}

pub fn enumerate_matches(pattern: &Pattern, content: &Term) -> Result<Vec<Match>, MatchError> {
    let plan = MatchPlan::new(pattern)?;
    let n = plan.count(content);
    Ok((0..n).map(|i| nth_in_plan(&plan, content, i).expect("index below count")).collect())
}

pub fn instantiate(open: &OpenTerm, sub: &Substitution) -> Result<Term, MatchError> {
    let mut out = Term::empty();
    for (o, n) in open.0.iter() {
        match o {
            SimpleOpen::Atom(a) => out.insert(SimpleTerm::Atom(a.clone()), n),
            SimpleOpen::Var(v) => {
                let t = sub.content(&v.name).ok_or_else(|| MatchError::Unbound(v.to_string()))?;
                for _ in 0..n {
                    out.extend(t.clone());
                }
            }
            SimpleOpen::Compartment(c) => {
                let mut wrap = Wrap::new();
                for (w, k) in c.wrap.iter() {
                    match w {
                        WrapOpen::Atom(a) => wrap.insert(a.clone(), k),
                        WrapOpen::Var(v) => {
                            let bound = sub.wrap(&v.name).ok_or_else(|| MatchError::Unbound(v.to_string()))?;
                            for _ in 0..k {
                                wrap.extend(bound.clone());
                            }
                        }
                    }
                }
                let content = instantiate(&c.content, sub)?;
                out.insert(SimpleTerm::Compartment(Box::new(Compartment { label: c.label.clone(), wrap, content })), n);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rules, sites and rewriting
// ---------------------------------------------------------------------------

/// `label: pattern [rate] result`, with the implicit remainder variable.
#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub label: Label,
    pub pattern: Pattern,
    pub result: OpenTerm,
    pub rate: f64,
    plan: MatchPlan,
}

impl PartialEq for RewriteRule {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.pattern == other.pattern
            && self.result == other.result
            && self.rate.to_bits() == other.rate.to_bits()
    }
}

impl RewriteRule {
    pub fn new(label: Label, pattern: Pattern, result: OpenTerm, rate: f64) -> Result<Self, MatchError> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(MatchError::InvalidRate(rate));
        }
        let plan = MatchPlan::new(&pattern)?;
        let bound: BTreeSet<Var> = pattern.variables().into_iter().collect();
        for v in result.variables() {
            if !bound.contains(&v) {
                return Err(MatchError::UnboundResultVariable(v.to_string()));
            }
        }
        Ok(Self { label, pattern, result, rate, plan })
    }

    pub fn plan(&self) -> &MatchPlan {
        &self.plan
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}} {} [{}] {}", self.label, self.pattern, self.rate, self.result)
    }
}

/// One step of a site path: occurrence `copy` of distinct element `element`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathStep {
    pub element: usize,
    pub copy: usize,
}

/// Path from the root compartment; empty means the root itself.
pub type SitePath = Vec<PathStep>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub rule: usize,
    pub path: SitePath,
    pub count: u64,
}

/// Every compartment of the system (root first, then preorder), as
/// `(path, label, content)`. `system` is the content of the root.
pub fn compartments(system: &Term) -> Vec<(SitePath, &Label, &Term)> {
    fn walk<'a>(content: &'a Term, path: &mut SitePath, out: &mut Vec<(SitePath, &'a Label, &'a Term)>) {
        for (j, (s, n)) in content.iter().enumerate() {
            if let SimpleTerm::Compartment(c) = s {
                for copy in 0..n {
                    path.push(PathStep { element: j, copy });
                    out.push((path.clone(), &c.label, &c.content));
                    walk(&c.content, path, out);
                    path.pop();
                }
            }
        }
    }
    static TOP: std::sync::OnceLock<Label> = std::sync::OnceLock::new();
    let mut out = vec![(Vec::new(), TOP.get_or_init(Label::top), system)];
    walk(system, &mut Vec::new(), &mut out);
    out
}

/// Every `(rule, compartment)` pair with a positive match count, ordered by
/// rule index then site path.
pub fn collect_sites(rules: &[RewriteRule], system: &Term) -> Vec<Site> {
    let comps = compartments(system);
    let mut out = Vec::new();
    for (r, rule) in rules.iter().enumerate() {
        for (path, label, content) in &comps {
            if **label != rule.label {
                continue;
            }
            let count = rule.plan.count(content);
            if count > 0 {
                out.push(Site { rule: r, path: path.clone(), count });
            }
        }
    }
    out
}

/// Rewrites the content found at `path` with `f`, rebuilding the enclosing
/// compartments. Returns the label of the site with the new system.
fn rewrite_at(
    content: &Term,
    path: &[PathStep],
    f: &mut dyn FnMut(&Label, &Term) -> Result<Term, MatchError>,
    label: &Label,
) -> Result<Term, MatchError> {
    let Some((step, rest)) = path.split_first() else {
        return f(label, content);
    };
    let (s, n) = content.get(step.element).ok_or(MatchError::BadSite)?;
    let SimpleTerm::Compartment(c) = s else {
        return Err(MatchError::BadSite);
    };
    if step.copy >= n {
        return Err(MatchError::BadSite);
    }
    let inner = rewrite_at(&c.content, rest, f, &c.label)?;
    let mut out = content.clone();
    out.0.remove_at(step.element, 1);
    out.insert(
        SimpleTerm::Compartment(Box::new(Compartment { label: c.label.clone(), wrap: c.wrap.clone(), content: inner })),
        1,
    );
    Ok(out)
}

/// Applies `rule` with match `m` at `site`, returning the new system.
pub fn apply_rewrite(system: &Term, rule: &RewriteRule, site: &[PathStep], m: &Match) -> Result<Term, MatchError> {
    rewrite_at(
        system,
        site,
        &mut |label, content| {
            if *label != rule.label {
                return Err(MatchError::LabelMismatch { expected: rule.label.to_string(), found: label.to_string() });
            }
            let mut out = remove_consumed(content, &m.selection.consumed()).ok_or(MatchError::StaleMatch)?;
            out.extend(instantiate(&rule.result, &m.substitution)?);
            Ok(out)
        },
        &Label::top(),
    )
}

/// Content of the compartment at `path`.
pub fn content_at<'a>(system: &'a Term, path: &[PathStep]) -> Option<&'a Term> {
    let mut cur = system;
    for step in path {
        let (s, n) = cur.get(step.element)?;
        if step.copy >= n {
            return None;
        }
        cur = &s.as_compartment()?.content;
    }
    Some(cur)
}
