//! Dense potential tables over discrete scopes.
//!
//! Entries are row-major over the scope, last variable fastest, which matches
//! the layout of a [`ConditionalTable`](crate::network::ConditionalTable)
//! viewed over `[parents..., node]`.

use crate::error::{InferenceError, Result};
use crate::network::NodeId;
use crate::scalar::Probability;

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable<T> {
    scope: Vec<NodeId>,
    cards: Vec<usize>,
    entries: Vec<T>,
}

impl<T: Probability> PotentialTable<T> {
    pub fn new(scope: Vec<NodeId>, cards: Vec<usize>, entries: Vec<T>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(InferenceError::Internal("scope and cardinalities differ in length".into()));
        }
        let size: usize = cards.iter().product();
        if entries.len() != size {
            return Err(InferenceError::Internal(format!(
                "potential over {} states given {} entries",
                size,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !(*v >= T::zero())) {
            return Err(InferenceError::Internal("potential entries must be nonnegative".into()));
        }
        Ok(Self { scope, cards, entries })
    }

    pub fn ones(scope: Vec<NodeId>, cards: Vec<usize>) -> Self {
        let size = cards.iter().product();
        Self {
            scope,
            cards,
            entries: vec![T::one(); size],
        }
    }

    /// A scope-free potential holding a single value.
    pub fn scalar(value: T) -> Self {
        Self {
            scope: Vec::new(),
            cards: Vec::new(),
            entries: vec![value],
        }
    }

    pub fn scope(&self) -> &[NodeId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> T {
        self.entries.iter().copied().sum()
    }

    /// Value index of scope position `pos` at entry `index`.
    pub fn value_at(&self, index: usize, pos: usize) -> usize {
        let stride: usize = self.cards[pos + 1..].iter().product();
        (index / stride) % self.cards[pos]
    }

    /// Marginal onto `sub`, which must be a subset of the scope (any order).
    pub fn marginalize_onto(&self, sub: &[NodeId]) -> Result<PotentialTable<T>> {
        let mut sub_cards = Vec::with_capacity(sub.len());
        for node in sub {
            let pos = self
                .scope
                .iter()
                .position(|s| s == node)
                .ok_or_else(|| InferenceError::Internal(format!("{node} is not in the potential scope")))?;
            sub_cards.push(self.cards[pos]);
        }
        let map = index_map(&self.scope, &self.cards, sub, &sub_cards);
        let mut out = vec![T::zero(); sub_cards.iter().product()];
        for (v, &j) in self.entries.iter().zip(&map) {
            out[j] = out[j] + *v;
        }
        Ok(PotentialTable {
            scope: sub.to_vec(),
            cards: sub_cards,
            entries: out,
        })
    }
}

/// For each entry of a row-major table over `scope`, the index of the
/// matching entry in a row-major table over `sub`.
///
/// Nodes of `sub` missing from `scope` are fixed at value 0.
pub fn index_map(scope: &[NodeId], cards: &[usize], sub: &[NodeId], sub_cards: &[usize]) -> Vec<usize> {
    let mut sub_strides = vec![0usize; sub.len()];
    let mut acc = 1;
    for k in (0..sub.len()).rev() {
        sub_strides[k] = acc;
        acc *= sub_cards[k];
    }
    let strides: Vec<usize> = scope
        .iter()
        .map(|n| sub.iter().position(|s| s == n).map_or(0, |k| sub_strides[k]))
        .collect();

    let size: usize = cards.iter().product();
    let mut out = Vec::with_capacity(size);
    let mut digits = vec![0usize; scope.len()];
    let mut idx = 0usize;
    for _ in 0..size {
        out.push(idx);
        let mut k = scope.len();
        while k > 0 {
            k -= 1;
            digits[k] += 1;
            idx += strides[k];
            if digits[k] < cards[k] {
                break;
            }
            idx -= strides[k] * digits[k];
            digits[k] = 0;
        }
    }
    out
}
