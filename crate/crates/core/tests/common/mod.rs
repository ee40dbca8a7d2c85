//! Shared test support: random terms and patterns, and a brute-force match
//! counter that tries every injective assignment of pattern slots to term
//! occurrences.

#![allow(dead_code)]

use std::collections::BTreeMap;

use cwc_core::matcher::{Pattern, SimplePattern};
use cwc_core::term::{SimpleTerm, Term, Wrap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ATOMS: [&str; 3] = ["a", "b", "c"];
const WRAP_ATOMS: [&str; 2] = ["u", "w"];
const LABELS: [&str; 2] = ["l", "m"];

pub struct Gen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 }
    }

    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[self.rng.random_range(0..xs.len())]
    }

    fn wrap_text(&mut self, max: usize) -> Vec<String> {
        (0..self.rng.random_range(0..=max)).map(|_| self.pick(&WRAP_ATOMS).to_owned()).collect()
    }

    /// Up to `width` top-level elements, at most `depth` levels of
    /// compartments. Elements are sometimes repeated verbatim so that equal
    /// compartments occur several times.
    pub fn term_items(&mut self, depth: u32, width: usize) -> Vec<String> {
        let n = self.rng.random_range(0..=width);
        let mut items: Vec<String> = Vec::new();
        while items.len() < n {
            if let Some(last) = items.last() {
                if self.rng.random_bool(0.25) {
                    items.push(last.clone());
                    continue;
                }
            }
            if depth == 0 || self.rng.random_bool(0.6) {
                items.push(self.pick(&ATOMS).to_owned());
            } else {
                let label = self.pick(&LABELS);
                let wrap = self.wrap_text(3).join(" ");
                let content = self.term_text(depth - 1, 3);
                items.push(format!("({{{label}}} {wrap} | {content})"));
            }
        }
        items
    }

    pub fn term_text(&mut self, depth: u32, width: usize) -> String {
        let items = self.term_items(depth, width);
        if items.is_empty() {
            "\\e".into()
        } else {
            items.join(" ")
        }
    }

    pub fn term(&mut self, depth: u32, width: usize) -> Term {
        let text = self.term_text(depth, width);
        Term::parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"))
    }

    fn compartment_pattern(&mut self, depth: u32) -> String {
        let label = self.pick(&LABELS);
        let wrap = self.wrap_text(1).join(" ");
        let content = self.pattern_items(depth.saturating_sub(1), 2).join(" ");
        self.fresh += 1;
        let i = self.fresh;
        format!("({{{label}}} {wrap} $x{i} | {content} $X{i})")
    }

    /// Gives every variable of `text` a fresh number.
    fn rename_vars(&mut self, text: &str) -> String {
        let mut out = String::new();
        let mut renamed: BTreeMap<String, usize> = BTreeMap::new();
        let mut chars = text.chars().peekable();
        while let Some(ch) = chars.next() {
            out.push(ch);
            if ch != '$' {
                continue;
            }
            let sort = chars.next().expect("variable sort");
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let n = *renamed.entry(digits).or_insert_with(|| {
                self.fresh += 1;
                self.fresh
            });
            out.push(sort);
            out.push_str(&n.to_string());
        }
        out
    }

    fn pattern_items(&mut self, depth: u32, width: usize) -> Vec<String> {
        let n = self.rng.random_range(0..=width);
        let mut items = Vec::new();
        while items.len() < n {
            if depth == 0 || self.rng.random_bool(0.55) {
                items.push(self.pick(&ATOMS).to_owned());
            } else {
                let p = self.compartment_pattern(depth);
                // An interchangeable copy with its own variables.
                if items.len() + 1 < n && self.rng.random_bool(0.3) {
                    let copy = self.rename_vars(&p);
                    items.push(copy);
                }
                items.push(p);
            }
        }
        items
    }

    /// Pattern text selecting part of `t`: some occurrences, part of each
    /// selected wrap and, recursively, part of each selected content. Copies
    /// of an element share one shape so interchangeable slots are common.
    fn cut_items(&mut self, t: &Term, max: usize) -> Vec<String> {
        let mut items = Vec::new();
        for (s, n) in t.iter() {
            let take = self.rng.random_range(0..=n).min(max.saturating_sub(items.len()));
            if take == 0 {
                continue;
            }
            match s {
                SimpleTerm::Atom(a) => items.extend(std::iter::repeat_n(a.to_string(), take)),
                SimpleTerm::Compartment(c) => {
                    let wrap: Vec<String> = expand(c.wrap.iter())
                        .into_iter()
                        .filter(|_| self.rng.random_bool(0.5))
                        .map(|w| w.to_string())
                        .collect();
                    let content = self.cut_items(&c.content, 2).join(" ");
                    self.fresh += 1;
                    let i = self.fresh;
                    let shape = format!("({{{}}} {} $x{i} | {content} $X{i})", c.label, wrap.join(" "));
                    for _ in 1..take {
                        let copy = self.rename_vars(&shape);
                        items.push(copy);
                    }
                    items.push(shape);
                }
            }
        }
        items
    }

    /// A nonempty pattern cut from `t`, or a random one when `t` offers
    /// nothing to cut.
    pub fn pattern_in(&mut self, t: &Term, depth: u32) -> Pattern {
        let items = self.cut_items(t, 3);
        if items.is_empty() {
            return self.pattern(depth);
        }
        let text = items.join(" ");
        cwc_core::surface::parse_pattern(&text).unwrap_or_else(|e| panic!("{text}: {e}"))
    }

    /// A nonempty top-level pattern with up to three simple patterns.
    pub fn pattern(&mut self, depth: u32) -> Pattern {
        loop {
            let items = self.pattern_items(depth, 3);
            if items.is_empty() {
                continue;
            }
            let text = items.join(" ");
            return cwc_core::surface::parse_pattern(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        }
    }
}

/// Pattern text with variable names removed; equal keys mean the two
/// simple patterns are interchangeable.
fn erased(p: &SimplePattern) -> String {
    match p {
        SimplePattern::Atom(a) => a.to_string(),
        SimplePattern::Compartment(c) => {
            let mut inner: Vec<String> = expand(c.content.0.iter()).into_iter().map(erased).collect();
            inner.sort();
            format!("({} {:?} | {})", c.label, c.wrap, inner.join(" "))
        }
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn expand<T: Clone>(items: impl Iterator<Item = (T, usize)>) -> Vec<T> {
    items.flat_map(|(x, n)| std::iter::repeat_n(x, n)).collect()
}

/// Counts injective maps from `slots` into `occs` weighted by `w`.
fn assignments<S, O>(slots: &[S], occs: &[O], used: &mut Vec<bool>, w: &dyn Fn(&S, &O) -> u128) -> u128 {
    let Some((first, rest)) = slots.split_first() else {
        return 1;
    };
    let mut total = 0;
    for j in 0..occs.len() {
        if used[j] {
            continue;
        }
        let k = w(first, &occs[j]);
        if k == 0 {
            continue;
        }
        used[j] = true;
        total += k * assignments(rest, occs, used, w);
        used[j] = false;
    }
    total
}

fn wrap_count(pattern: &Wrap, wrap: &Wrap) -> u128 {
    let slots = expand(pattern.iter());
    let occs = expand(wrap.iter());
    let ordered = assignments(&slots, &occs, &mut vec![false; occs.len()], &|a, b| u128::from(a == b));
    let sym: u128 = pattern.iter().map(|(_, n)| factorial(n)).product();
    ordered / sym
}

fn simple_count(p: &SimplePattern, t: &SimpleTerm) -> u128 {
    match (p, t) {
        (SimplePattern::Atom(a), SimpleTerm::Atom(b)) => u128::from(a == b),
        (SimplePattern::Compartment(cp), SimpleTerm::Compartment(c)) => {
            if cp.label != c.label {
                return 0;
            }
            let w = wrap_count(&cp.wrap, &c.wrap);
            if w == 0 {
                return 0;
            }
            w * brute_force_count(&cp.content, &c.content)
        }
        _ => 0,
    }
}

/// Number of distinct matches of `pattern` in `content`: ordered
/// assignments of slots to distinct occurrences, divided by the orderings of
/// interchangeable slots.
pub fn brute_force_count(pattern: &Pattern, content: &Term) -> u128 {
    let slots = expand(pattern.0.iter());
    let occs = expand(content.iter());
    let ordered = assignments(&slots, &occs, &mut vec![false; occs.len()], &|s, o| simple_count(s, o));
    let mut classes: BTreeMap<String, usize> = BTreeMap::new();
    for s in &slots {
        *classes.entry(erased(s)).or_default() += 1;
    }
    let sym: u128 = classes.values().map(|&n| factorial(n)).product();
    assert_eq!(ordered % sym, 0, "ordered assignments not divisible by slot symmetry");
    ordered / sym
}
