//! Ground CWC terms: atoms, labels, coordinates, wraps and compartments.
//!
//! A term is a multiset of simple terms; a simple term is either an atom or
//! a compartment `(wrap | content)^label`. Every multiset is kept in canonical
//! sorted form, so derived equality is multiset equality at every nesting
//! level and the text rendering is injective.

use std::fmt;
use std::sync::Arc;

use crate::multiset::Multiset;

/// Name reserved for the root compartment label.
pub const TOP_LABEL: &str = "top";

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("coordinate {0},{1} must have row and column >= 1")]
    InvalidCoordinate(u32, u32),
}

/// An atomic element such as a molecule species.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(Arc<str>);

impl Atom {
    pub fn new(name: &str) -> Result<Self, TermError> {
        if is_identifier(name) {
            Ok(Self(name.into()))
        } else {
            Err(TermError::InvalidIdentifier(name.to_owned()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A compartment type. Whether a label is spatial is a property of the
/// model it appears in; the only label with built-in meaning is `top`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Ordinary,
    Spatial,
    Top,
}

impl Label {
    pub fn new(name: &str) -> Result<Self, TermError> {
        if is_identifier(name) {
            Ok(Self(name.into()))
        } else {
            Err(TermError::InvalidIdentifier(name.to_owned()))
        }
    }

    pub fn top() -> Self {
        Self(TOP_LABEL.into())
    }

    pub fn is_top(&self) -> bool {
        &*self.0 == TOP_LABEL
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A grid position, 1-based. Ordering is row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coordinate {
    pub row: u32,
    pub col: u32,
}

impl Coordinate {
    pub fn new(row: u32, col: u32) -> Result<Self, TermError> {
        if row == 0 || col == 0 {
            return Err(TermError::InvalidCoordinate(row, col));
        }
        Ok(Self { row, col })
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

/// An element of a compartment wrap. Coordinates sort before atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WrapAtom {
    Coord(Coordinate),
    Atom(Atom),
}

impl fmt::Display for WrapAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WrapAtom::Coord(c) => c.fmt(f),
            WrapAtom::Atom(a) => a.fmt(f),
        }
    }
}

pub type Wrap = Multiset<WrapAtom>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Compartment {
    pub label: Label,
    pub wrap: Wrap,
    pub content: Term,
}

impl Compartment {
    pub fn coordinate(&self) -> Option<Coordinate> {
        self.wrap.iter().find_map(|(w, _)| match w {
            WrapAtom::Coord(c) => Some(*c),
            WrapAtom::Atom(_) => None,
        })
    }
}

/// Atoms sort before compartments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimpleTerm {
    Atom(Atom),
    Compartment(Box<Compartment>),
}

impl SimpleTerm {
    pub fn as_compartment(&self) -> Option<&Compartment> {
        match self {
            SimpleTerm::Compartment(c) => Some(c),
            SimpleTerm::Atom(_) => None,
        }
    }
}

impl From<Atom> for SimpleTerm {
    fn from(a: Atom) -> Self {
        SimpleTerm::Atom(a)
    }
}

impl From<Compartment> for SimpleTerm {
    fn from(c: Compartment) -> Self {
        SimpleTerm::Compartment(Box::new(c))
    }
}

/// A multiset of simple terms; the empty term is written `\e`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term(pub Multiset<SimpleTerm>);

impl Term {
    pub fn empty() -> Self {
        Self(Multiset::new())
    }

    /// Parses the canonical text syntax (ground mode).
    pub fn parse(text: &str) -> Result<Self, crate::surface::Diagnostics> {
        crate::surface::parse_ground_term(text)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of top-level occurrences.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn multiplicity(&self, s: &SimpleTerm) -> usize {
        self.0.multiplicity(s)
    }

    pub fn insert(&mut self, s: SimpleTerm, count: usize) {
        self.0.insert(s, count)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&SimpleTerm, usize)> + Clone {
        self.0.iter()
    }

    pub fn get(&self, index: usize) -> Option<(&SimpleTerm, usize)> {
        self.0.get(index)
    }

    pub fn extend(&mut self, other: Term) {
        self.0.extend(other.0)
    }

    /// Re-sorts every nested multiset. Terms built through the public API
    /// are already canonical, so this is the identity on them.
    pub fn canonical(&self) -> Term {
        Term(
            self.0
                .iter()
                .map(|(s, n)| {
                    let s = match s {
                        SimpleTerm::Atom(a) => SimpleTerm::Atom(a.clone()),
                        SimpleTerm::Compartment(c) => SimpleTerm::Compartment(Box::new(Compartment {
                            label: c.label.clone(),
                            wrap: c.wrap.iter().map(|(w, k)| (w.clone(), k)).collect(),
                            content: c.content.canonical(),
                        })),
                    };
                    (s, n)
                })
                .collect(),
        )
    }
}

impl FromIterator<(SimpleTerm, usize)> for Term {
    fn from_iter<I: IntoIterator<Item = (SimpleTerm, usize)>>(iter: I) -> Self {
        Term(iter.into_iter().collect())
    }
}

/// Number of occurrences of `s` in `t`.
pub fn multiplicity(t: &Term, s: &SimpleTerm) -> usize {
    t.multiplicity(s)
}

/// Multiset equality, recursively.
pub fn terms_equal(a: &Term, b: &Term) -> bool {
    a == b
}

pub fn render_term(t: &Term) -> String {
    t.to_string()
}

pub(crate) fn write_multiset<T: Ord + fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    items: &Multiset<T>,
    first: &mut bool,
) -> fmt::Result {
    for (item, n) in items.iter() {
        if !*first {
            f.write_str(" ")?;
        }
        *first = false;
        if n > 1 {
            write!(f, "{n} ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for Compartment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{{}}}", self.label)?;
        if !self.wrap.is_empty() {
            f.write_str(" ")?;
            write_multiset(f, &self.wrap, &mut true)?;
        }
        write!(f, " | {})", self.content)
    }
}

impl fmt::Display for SimpleTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleTerm::Atom(a) => a.fmt(f),
            SimpleTerm::Compartment(c) => c.fmt(f),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("\\e");
        }
        write_multiset(f, &self.0, &mut true)
    }
}
