//! Least-squares regression trees grown best-first up to a leaf budget.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node<T> {
    Leaf {
        value: T,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Real> RegressionTree<T> {
    pub fn leaf(value: T) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Structural check: child links in range, every node reachable once.
    pub fn is_well_formed(&self, n_features: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if i >= self.nodes.len() || seen[i] {
                return false;
            }
            seen[i] = true;
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = &self.nodes[i]
            {
                if *feature >= n_features || !threshold.is_finite() {
                    return false;
                }
                stack.push(*left);
                stack.push(*right);
            }
        }
        !self.nodes.is_empty() && seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    feature: usize,
    threshold: T,
    gain: T,
}

/// Column-major view of the training matrix with each column's row order
/// sorted once up front.
pub(crate) struct SortedColumns<'a, T> {
    rows: &'a [Vec<T>],
    order: Vec<Vec<usize>>,
}

impl<'a, T: Real> SortedColumns<'a, T> {
    pub(crate) fn new(rows: &'a [Vec<T>], n_features: usize) -> Self {
        let order = (0..n_features)
            .map(|f| {
                let mut idx: Vec<usize> = (0..rows.len()).collect();
                idx.sort_by(|&a, &b| rows[a][f].partial_cmp(&rows[b][f]).unwrap().then(a.cmp(&b)));
                idx
            })
            .collect();
        SortedColumns { rows, order }
    }

    fn n_features(&self) -> usize {
        self.order.len()
    }
}

/// Exhaustive search over (feature, midpoint threshold). Ties in gain keep
/// the lowest feature index, then the lowest threshold.
// Negated comparisons also reject NaN.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn best_split<T: Real>(
    cols: &SortedColumns<'_, T>,
    residuals: &[T],
    in_node: &[bool],
    min_leaf: usize,
) -> Option<Candidate<T>> {
    let mut n = 0usize;
    let mut total = T::zero();
    for (i, &inside) in in_node.iter().enumerate() {
        if inside {
            n += 1;
            total = total + residuals[i];
        }
    }
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    let n_t = T::from_usize_lossy(n);
    let parent = total * total / n_t;
    let two = T::one() + T::one();

    let mut best: Option<Candidate<T>> = None;
    let mut members: Vec<usize> = Vec::with_capacity(n);
    for f in 0..cols.n_features() {
        members.clear();
        members.extend(cols.order[f].iter().copied().filter(|&i| in_node[i]));
        let mut left_sum = T::zero();
        for k in 0..n - 1 {
            let i = members[k];
            left_sum = left_sum + residuals[i];
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let a = cols.rows[i][f];
            let b = cols.rows[members[k + 1]][f];
            if !(a < b) {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / T::from_usize_lossy(nl)
                + right_sum * right_sum / T::from_usize_lossy(nr)
                - parent;
            if !(gain > T::zero()) {
                continue;
            }
            if best.is_none_or(|c| gain > c.gain) {
                let mut threshold = (a + b) / two;
                // Adjacent floats: the midpoint can round up to `b`.
                if !(threshold < b) {
                    threshold = a;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

struct OpenLeaf<T> {
    node: usize,
    members: Vec<bool>,
    split: Option<Candidate<T>>,
}

fn mean_of<T: Real>(residuals: &[T], members: &[bool]) -> T {
    let mut n = 0usize;
    let mut s = T::zero();
    for (i, &m) in members.iter().enumerate() {
        if m {
            n += 1;
            s = s + residuals[i];
        }
    }
    if n == 0 {
        T::zero()
    } else {
        s / T::from_usize_lossy(n)
    }
}

/// Fits a tree with at most `max_leaves` leaves to `residuals`. Returns
/// `None` when no split reduces the squared error.
pub(crate) fn fit_tree<T: Real>(
    cols: &SortedColumns<'_, T>,
    residuals: &[T],
    max_leaves: usize,
    min_leaf: usize,
) -> Option<RegressionTree<T>> {
    let all = vec![true; residuals.len()];
    let root_split = best_split(cols, residuals, &all, min_leaf)?;
    let mut nodes = vec![Node::Leaf { value: T::zero() }];
    let mut open = vec![OpenLeaf {
        node: 0,
        members: all,
        split: Some(root_split),
    }];

    let mut n_leaves = 1;
    while n_leaves < max_leaves {
        // Largest gain first; earliest-created leaf on ties.
        let mut pick: Option<usize> = None;
        for (j, leaf) in open.iter().enumerate() {
            if let Some(c) = leaf.split {
                if pick.is_none_or(|p| c.gain > open[p].split.unwrap().gain) {
                    pick = Some(j);
                }
            }
        }
        let Some(j) = pick else { break };
        let leaf = open.remove(j);
        let c = leaf.split.unwrap();
        let mut left_members = vec![false; residuals.len()];
        let mut right_members = vec![false; residuals.len()];
        for (i, &m) in leaf.members.iter().enumerate() {
            if m {
                if cols.rows[i][c.feature] <= c.threshold {
                    left_members[i] = true;
                } else {
                    right_members[i] = true;
                }
            }
        }
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: T::zero() });
        nodes.push(Node::Leaf { value: T::zero() });
        nodes[leaf.node] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        };
        n_leaves += 1;
        for (node, members) in [(left, left_members), (right, right_members)] {
            let split = if n_leaves < max_leaves {
                best_split(cols, residuals, &members, min_leaf)
            } else {
                None
            };
            open.push(OpenLeaf {
                node,
                members,
                split,
            });
        }
    }

    for leaf in &open {
        nodes[leaf.node] = Node::Leaf {
            value: mean_of(residuals, &leaf.members),
        };
    }
    Some(RegressionTree { nodes })
}
