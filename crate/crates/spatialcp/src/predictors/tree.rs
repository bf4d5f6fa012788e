//! Axis-aligned binary regression trees grown by variance reduction.
//!
//! Splits are placed at midpoints of sorted unique feature values and ties
//! are broken by lowest feature index, then lowest threshold, so a fit is
//! a pure function of (data, parameters, rng stream).

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::features::DesignMatrix;

/// Flattened tree node. Leaves have `left == -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: u32,
    pub threshold: f64,
    pub left: i32,
    pub right: i32,
    pub value: f64,
}

impl TreeNode {
    fn leaf(value: f64) -> Self {
        Self {
            feature: 0,
            threshold: 0.0,
            left: -1,
            right: -1,
            value,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.left < 0
    }
}

/// A fitted regression tree stored as a flat node array (root at index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Index of the leaf node the row is routed to.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0usize;
        loop {
            let node = &self.nodes[at];
            if node.is_leaf() {
                return at;
            }
            at = if row[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Number of features considered per split; `>= p` means all.
    pub mtry: usize,
}

/// Grow a tree on the rows named by `indices` (with multiplicity, so a
/// bootstrap sample is just a repeated index list). `rng` is consumed only
/// when `mtry < p`.
pub(crate) fn grow_tree(
    x: &DesignMatrix,
    targets: &[f64],
    indices: Vec<usize>,
    params: TreeParams,
    rng: &mut ChaCha12Rng,
) -> Tree {
    let mut nodes = Vec::new();
    build_node(x, targets, indices, &params, rng, 0, &mut nodes);
    Tree { nodes }
}

fn build_node(
    x: &DesignMatrix,
    targets: &[f64],
    indices: Vec<usize>,
    params: &TreeParams,
    rng: &mut ChaCha12Rng,
    depth: usize,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let n = indices.len();
    let sum: f64 = indices.iter().map(|&i| targets[i]).sum();
    let mean = sum / n as f64;

    let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
    if depth_reached || n < 2 * params.min_leaf {
        nodes.push(TreeNode::leaf(mean));
        return nodes.len() - 1;
    }

    let sum2: f64 = indices.iter().map(|&i| targets[i] * targets[i]).sum();
    let node_sse = (sum2 - sum * sum / n as f64).max(0.0);
    let split = best_split(x, targets, &indices, params, rng, node_sse);

    let Some((feature, threshold)) = split else {
        nodes.push(TreeNode::leaf(mean));
        return nodes.len() - 1;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| x.get(i, feature) <= threshold);

    let here = nodes.len();
    nodes.push(TreeNode {
        feature: feature as u32,
        threshold,
        left: 0,
        right: 0,
        value: mean,
    });
    let left = build_node(x, targets, left_idx, params, rng, depth + 1, nodes);
    let right = build_node(x, targets, right_idx, params, rng, depth + 1, nodes);
    nodes[here].left = left as i32;
    nodes[here].right = right as i32;
    here
}

/// Best (feature, threshold) by summed child SSE; `None` when no split
/// improves on the node. Candidate features are scanned in ascending index
/// order and thresholds in ascending value order, and only strict
/// improvements replace the incumbent, which fixes the tie-break.
fn best_split(
    x: &DesignMatrix,
    targets: &[f64],
    indices: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha12Rng,
    node_sse: f64,
) -> Option<(usize, f64)> {
    if node_sse <= 0.0 {
        return None;
    }
    let p = x.n_cols();
    let features: Vec<usize> = if params.mtry < p {
        let mut sampled: Vec<usize> = rand::seq::index::sample(rng, p, params.mtry).into_vec();
        sampled.sort_unstable();
        sampled
    } else {
        (0..p).collect()
    };

    let n = indices.len();
    let mut best: Option<(usize, f64, f64)> = None; // (feature, threshold, child_sse)
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

    for &feature in &features {
        pairs.clear();
        pairs.extend(indices.iter().map(|&i| (x.get(i, feature), targets[i])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let total: f64 = pairs.iter().map(|(_, y)| y).sum();
        let total2: f64 = pairs.iter().map(|(_, y)| y * y).sum();
        let mut left_sum = 0.0;
        let mut left_sum2 = 0.0;
        for k in 1..n {
            let (v_prev, y_prev) = pairs[k - 1];
            left_sum += y_prev;
            left_sum2 += y_prev * y_prev;
            if k < params.min_leaf || n - k < params.min_leaf {
                continue;
            }
            let v_next = pairs[k].0;
            if v_prev >= v_next {
                continue;
            }
            let nl = k as f64;
            let nr = (n - k) as f64;
            let sse_left = left_sum2 - left_sum * left_sum / nl;
            let right_sum = total - left_sum;
            let sse_right = (total2 - left_sum2) - right_sum * right_sum / nr;
            let child_sse = sse_left.max(0.0) + sse_right.max(0.0);
            if best.as_ref().is_none_or(|&(_, _, b)| child_sse < b) {
                let mut threshold = 0.5 * (v_prev + v_next);
                // Keep the boundary strictly between the two values even
                // when their midpoint rounds onto one of them.
                if !(threshold > v_prev && threshold < v_next) {
                    threshold = v_prev;
                }
                best = Some((feature, threshold, child_sse));
            }
        }
    }

    best.and_then(|(f, t, child_sse)| (child_sse < node_sse).then_some((f, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(0)
    }

    fn params(min_leaf: usize, max_depth: Option<usize>) -> TreeParams {
        TreeParams {
            min_leaf,
            max_depth,
            mtry: usize::MAX,
        }
    }

    #[test]
    fn constant_target_yields_single_leaf() {
        let x = DesignMatrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y = vec![5.0; 10];
        let tree = grow_tree(&x, &y, (0..10).collect(), params(1, None), &mut rng());
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict_row(&[123.0]), 5.0);
    }

    #[test]
    fn perfectly_separable_step_is_recovered() {
        let x = DesignMatrix::from_rows(&(0..20).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 3.0 }).collect();
        let tree = grow_tree(&x, &y, (0..20).collect(), params(1, None), &mut rng());
        assert_eq!(tree.predict_row(&[2.0]), 1.0);
        assert_eq!(tree.predict_row(&[15.0]), 3.0);
        // Root splits at the midpoint between 9 and 10.
        assert_eq!(tree.nodes[0].threshold, 9.5);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // Both features separate the response equally well.
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..8).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let tree = grow_tree(&x, &y, (0..8).collect(), params(1, None), &mut rng());
        assert_eq!(tree.nodes[0].feature, 0);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x = DesignMatrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let tree = grow_tree(&x, &y, (0..10).collect(), params(3, None), &mut rng());
        let leaf_sizes: Vec<usize> = (0..10)
            .map(|i| tree.leaf_index(&[i as f64]))
            .fold(std::collections::BTreeMap::new(), |mut acc, leaf| {
                *acc.entry(leaf).or_insert(0) += 1;
                acc
            })
            .into_values()
            .collect();
        assert!(leaf_sizes.iter().all(|&s| s >= 3));
    }

    #[test]
    fn max_depth_limits_growth() {
        let x = DesignMatrix::from_rows(&(0..64).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let tree = grow_tree(&x, &y, (0..64).collect(), params(1, Some(2)), &mut rng());
        assert!(tree.n_leaves() <= 4);
    }
}
