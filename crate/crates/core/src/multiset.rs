//! Canonical multisets: sorted `(element, multiplicity)` sequences.

use std::fmt;

/// A finite multiset stored as a strictly sorted run of distinct elements
/// paired with their (nonzero) multiplicities.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T> {
    items: Vec<(T, usize)>,
}

impl<T> Default for Multiset<T> {
    fn default() -> Self {
        Self { items: Vec::new() }
    }
}

impl<T: fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.items.iter().map(|(k, v)| (k, v))).finish()
    }
}

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Self { items: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of distinct elements.
    pub fn distinct(&self) -> usize {
        self.items.len()
    }

    /// Total number of occurrences.
    pub fn len(&self) -> usize {
        self.items.iter().map(|(_, n)| n).sum()
    }

    pub fn multiplicity(&self, item: &T) -> usize {
        match self.items.binary_search_by(|(k, _)| k.cmp(item)) {
            Ok(i) => self.items[i].1,
            Err(_) => 0,
        }
    }

    pub fn insert(&mut self, item: T, count: usize) {
        if count == 0 {
            return;
        }
        match self.items.binary_search_by(|(k, _)| k.cmp(&item)) {
            Ok(i) => self.items[i].1 += count,
            Err(i) => self.items.insert(i, (item, count)),
        }
    }

    /// Removes `count` occurrences of `item`. Returns `false` (leaving the
    /// multiset untouched) when fewer than `count` are present.
    pub fn remove(&mut self, item: &T, count: usize) -> bool {
        if count == 0 {
            return true;
        }
        match self.items.binary_search_by(|(k, _)| k.cmp(item)) {
            Ok(i) if self.items[i].1 >= count => {
                self.items[i].1 -= count;
                if self.items[i].1 == 0 {
                    self.items.remove(i);
                }
                true
            }
            _ => false,
        }
    }

    /// Removes `count` occurrences of the element at distinct-index `index`.
    pub fn remove_at(&mut self, index: usize, count: usize) -> bool {
        match self.items.get_mut(index) {
            Some(entry) if entry.1 >= count => {
                entry.1 -= count;
                if entry.1 == 0 {
                    self.items.remove(index);
                }
                true
            }
            _ => false,
        }
    }

    pub fn get(&self, index: usize) -> Option<(&T, usize)> {
        self.items.get(index).map(|(k, n)| (k, *n))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&T, usize)> + Clone {
        self.items.iter().map(|(k, n)| (k, *n))
    }

    pub fn extend(&mut self, other: Multiset<T>) {
        for (item, n) in other.items {
            self.insert(item, n);
        }
    }

    /// Whether every element of `self` occurs in `other` at least as often.
    pub fn is_submultiset_of(&self, other: &Self) -> bool {
        self.items.iter().all(|(k, n)| other.multiplicity(k) >= *n)
    }

    /// `self - other`, or `None` when `other` is not contained in `self`.
    pub fn difference(&self, other: &Self) -> Option<Self>
    where
        T: Clone,
    {
        let mut out = self.clone();
        for (k, n) in other.iter() {
            if !out.remove(k, n) {
                return None;
            }
        }
        Some(out)
    }

    pub fn map<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        self.items.iter().map(|(k, n)| (f(k), *n)).collect()
    }

    pub fn into_vec(self) -> Vec<(T, usize)> {
        self.items
    }
}

impl<T: Ord> FromIterator<(T, usize)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, usize)>>(iter: I) -> Self {
        let mut items: Vec<(T, usize)> = iter.into_iter().filter(|(_, n)| *n > 0).collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(T, usize)> = Vec::with_capacity(items.len());
        for (k, n) in items {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += n,
                _ => merged.push((k, n)),
            }
        }
        Self { items: merged }
    }
}

impl<T: Ord> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        iter.into_iter().map(|t| (t, 1)).collect()
    }
}
