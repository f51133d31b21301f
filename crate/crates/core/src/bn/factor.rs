//! Dense discrete factors used as variable-elimination intermediates.
//!
//! Values are stored row-major over the scope: the last scope variable
//! varies fastest, matching the CPT row convention with the child appended
//! after its parents.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    /// Builds a factor; panics if `values` does not match the scope size.
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(
            scope.len(),
            cards.len(),
            "scope/cardinality length mismatch"
        );
        let size: usize = cards.iter().product();
        assert_eq!(
            size,
            values.len(),
            "factor value count does not match scope"
        );
        Self {
            scope,
            cards,
            values,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(Vec::new(), Vec::new(), vec![value])
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    fn strides(cards: &[usize]) -> Vec<usize> {
        let mut strides = vec![0; cards.len()];
        let mut acc = 1;
        for i in (0..cards.len()).rev() {
            strides[i] = acc;
            acc *= cards[i];
        }
        strides
    }

    /// Pointwise product over the union of both scopes (self's order first).
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.scope.iter().zip(&other.cards) {
            if !scope.contains(v) {
                scope.push(*v);
                cards.push(*c);
            }
        }
        // Stride of each result variable inside each operand (0 if absent).
        let a_strides = Self::strides(&self.cards);
        let b_strides = Self::strides(&other.cards);
        let stride_in = |own: &[usize], st: &[usize], v: usize| {
            own.iter().position(|x| *x == v).map_or(0, |p| st[p])
        };
        let sa: Vec<usize> = scope
            .iter()
            .map(|&v| stride_in(&self.scope, &a_strides, v))
            .collect();
        let sb: Vec<usize> = scope
            .iter()
            .map(|&v| stride_in(&other.scope, &b_strides, v))
            .collect();

        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut assignment = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // Odometer increment, last variable fastest.
            for d in (0..scope.len()).rev() {
                assignment[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if assignment[d] < cards[d] {
                    break;
                }
                ia -= sa[d] * cards[d];
                ib -= sb[d] * cards[d];
                assignment[d] = 0;
            }
        }
        Factor {
            scope,
            cards,
            values,
        }
    }

    /// Sums `var` out of the factor. No-op if `var` is not in scope.
    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|v| *v == var) else {
            return self.clone();
        };
        let strides = Self::strides(&self.cards);
        let card = self.cards[pos];
        let stride = strides[pos];
        let outer = self.values.len() / (card * stride);
        let mut values = vec![0.0; outer * stride];
        for o in 0..outer {
            for k in 0..card {
                let base = o * card * stride + k * stride;
                for i in 0..stride {
                    values[o * stride + i] += self.values[base + i];
                }
            }
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor {
            scope,
            cards,
            values,
        }
    }

    /// Restricts `var` to `state` and drops it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.scope.iter().position(|v| *v == var) else {
            return self.clone();
        };
        let strides = Self::strides(&self.cards);
        let card = self.cards[pos];
        let stride = strides[pos];
        let outer = self.values.len() / (card * stride);
        let mut values = Vec::with_capacity(outer * stride);
        for o in 0..outer {
            let base = o * card * stride + state * stride;
            values.extend_from_slice(&self.values[base..base + stride]);
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Factor {
            scope,
            cards,
            values,
        }
    }

    /// Reorders the scope to `order` (must be a permutation of the scope).
    pub fn permuted(&self, order: &[usize]) -> Factor {
        assert_eq!(order.len(), self.scope.len());
        if order == self.scope.as_slice() {
            return self.clone();
        }
        let old_strides = Self::strides(&self.cards);
        let pos: Vec<usize> = order
            .iter()
            .map(|v| {
                self.scope
                    .iter()
                    .position(|x| x == v)
                    .expect("order is not a permutation of scope")
            })
            .collect();
        let cards: Vec<usize> = pos.iter().map(|&p| self.cards[p]).collect();
        let st: Vec<usize> = pos.iter().map(|&p| old_strides[p]).collect();
        let mut values = Vec::with_capacity(self.values.len());
        let mut assignment = vec![0usize; order.len()];
        let mut idx = 0usize;
        for _ in 0..self.values.len() {
            values.push(self.values[idx]);
            for d in (0..order.len()).rev() {
                assignment[d] += 1;
                idx += st[d];
                if assignment[d] < cards[d] {
                    break;
                }
                idx -= st[d] * cards[d];
                assignment[d] = 0;
            }
        }
        Factor {
            scope: order.to_vec(),
            cards,
            values,
        }
    }
}
