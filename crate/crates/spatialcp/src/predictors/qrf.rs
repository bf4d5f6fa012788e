//! Quantile regression forests: leaves remember which training responses
//! were routed to them, and predictions are weighted sample quantiles with
//! weights averaged over trees (one over leaf size when sharing a leaf).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DesignMatrix;
use crate::predictors::ensemble::{grow_forest_trees, RandomForestParams};
use crate::predictors::tree::Tree;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QrfParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl QrfParams {
    pub fn new(seed: u64) -> Self {
        // Tail quantiles need well-populated leaves; small leaves leave the
        // weighted ECDF too concentrated around each test point.
        Self { n_trees: 500, min_leaf: 40, seed }
    }
}

/// A forest whose leaves store the indices of every training response
/// routed there; all training rows appear in exactly one leaf per tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileForest {
    pub trees: Vec<Tree>,
    /// Per tree: leaf node index -> training row indices.
    leaf_members: Vec<Vec<(u32, Vec<u32>)>>,
    /// Training responses, in training order.
    responses: Vec<f64>,
    /// Training order sorted by response value.
    sorted_order: Vec<u32>,
    n_features: usize,
}

impl QuantileForest {
    fn leaf_lookup(&self, tree_index: usize, leaf: usize) -> Option<&[u32]> {
        let members = &self.leaf_members[tree_index];
        members
            .binary_search_by_key(&(leaf as u32), |(l, _)| *l)
            .ok()
            .map(|pos| members[pos].1.as_slice())
    }

    /// Meinshausen weights of one instance over the training responses.
    pub fn response_weights(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut weights = vec![0.0; self.responses.len()];
        for (t, tree) in self.trees.iter().enumerate() {
            let leaf = tree.leaf_index(row);
            if let Some(members) = self.leaf_lookup(t, leaf) {
                let share = 1.0 / members.len() as f64;
                for &i in members {
                    weights[i as usize] += share;
                }
            }
        }
        let m = self.trees.len() as f64;
        for w in &mut weights {
            *w /= m;
        }
        Ok(weights)
    }

    /// Weighted tau-quantile of the training responses: the smallest
    /// response whose cumulative weight reaches tau.
    pub fn predict_quantile(&self, row: &[f64], tau: f64) -> Result<f64> {
        Ok(self.predict_quantiles(row, &[tau])?[0])
    }

    /// Several quantile levels from one weight computation.
    pub fn predict_quantiles(&self, row: &[f64], taus: &[f64]) -> Result<Vec<f64>> {
        if taus.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidLevel);
        }
        let weights = self.response_weights(row)?;
        let mut out = Vec::with_capacity(taus.len());
        for &tau in taus {
            let mut cum = 0.0;
            let mut value = self.responses[self.sorted_order[self.sorted_order.len() - 1] as usize];
            for &i in &self.sorted_order {
                cum += weights[i as usize];
                // Tolerance keeps exact grid levels like k/n from falling
                // to the next order statistic through summation rounding.
                if cum >= tau - 1e-12 {
                    value = self.responses[i as usize];
                    break;
                }
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// Grow a quantile forest. Trees are grown exactly like regression-forest
/// trees (bootstrap plus feature subsampling), then every training row is
/// routed down every tree to populate the leaves.
pub fn fit_qrf(x: &DesignMatrix, y: &[f64], params: QrfParams) -> Result<QuantileForest> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    if x.n_rows() == 0 {
        return Err(Error::TooFewSamples { needed: 1, have: 0 });
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("a quantile forest needs at least one tree".into()));
    }

    let forest_params = RandomForestParams {
        n_trees: params.n_trees,
        mtry: None,
        min_leaf: params.min_leaf,
        bootstrap: true,
        max_depth: None,
        seed: params.seed,
    };
    let trees = grow_forest_trees(x, y, &forest_params);

    let leaf_members: Vec<Vec<(u32, Vec<u32>)>> = trees
        .par_iter()
        .map(|tree| {
            let mut map: std::collections::BTreeMap<u32, Vec<u32>> = std::collections::BTreeMap::new();
            for i in 0..x.n_rows() {
                let leaf = tree.leaf_index(x.row(i)) as u32;
                map.entry(leaf).or_default().push(i as u32);
            }
            map.into_iter().collect()
        })
        .collect();

    let mut sorted_order: Vec<u32> = (0..y.len() as u32).collect();
    sorted_order.sort_by(|&a, &b| y[a as usize].partial_cmp(&y[b as usize]).unwrap());

    Ok(QuantileForest {
        trees,
        leaf_members,
        responses: y.to_vec(),
        sorted_order,
        n_features: x.n_cols(),
    })
}
