//! Random forests and least-squares gradient boosting on CART trees,
//! plus the forest proximity kernel used for feature-space weighting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DesignMatrix;
use crate::predictors::tree::{grow_tree, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosted,
}

/// A bag of regression trees. Random forests average tree outputs;
/// gradient-boosted ensembles sum them scaled by the learning rate on top
/// of a constant base score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub kind: EnsembleKind,
    pub trees: Vec<Tree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub n_features: usize,
}

impl TreeEnsemble {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self.kind {
            EnsembleKind::RandomForest => {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                sum / self.trees.len() as f64
            }
            EnsembleKind::GradientBoosted => {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                self.base_score + self.learning_rate * sum
            }
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.n_cols(),
            });
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means ceil(p / 3).
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl RandomForestParams {
    pub fn new(seed: u64) -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 5,
            bootstrap: true,
            max_depth: None,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl GbtParams {
    pub fn new(seed: u64) -> Self {
        Self {
            n_trees: 1000,
            max_depth: 4,
            learning_rate: 0.03,
            seed,
        }
    }
}

/// SplitMix64 step; used to derive independent per-tree seeds from a master
/// seed so parallel and serial fits agree.
pub(crate) fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn bootstrap_indices(n: usize, rng: &mut ChaCha12Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub(crate) fn default_mtry(p: usize) -> usize {
    p.div_ceil(3)
}

/// Grow the forest trees; shared between the regression forest and the
/// quantile forest. Trees are fitted in parallel with per-tree rng streams.
pub(crate) fn grow_forest_trees(
    x: &DesignMatrix,
    y: &[f64],
    params: &RandomForestParams,
) -> Vec<Tree> {
    let tree_params = TreeParams {
        min_leaf: params.min_leaf,
        max_depth: params.max_depth,
        mtry: params.mtry.unwrap_or_else(|| default_mtry(x.n_cols())),
    };
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(params.seed, t as u64));
            let indices = if params.bootstrap {
                bootstrap_indices(x.n_rows(), &mut rng)
            } else {
                (0..x.n_rows()).collect()
            };
            grow_tree(x, y, indices, tree_params, &mut rng)
        })
        .collect()
}

pub fn fit_random_forest(
    x: &DesignMatrix,
    y: &[f64],
    params: RandomForestParams,
) -> Result<TreeEnsemble> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    if x.n_rows() < 2 * params.min_leaf {
        return Err(Error::TooFewSamples {
            needed: 2 * params.min_leaf,
            have: x.n_rows(),
        });
    }
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("a random forest needs at least one tree".into()));
    }
    Ok(TreeEnsemble {
        kind: EnsembleKind::RandomForest,
        trees: grow_forest_trees(x, y, &params),
        learning_rate: 1.0,
        base_score: 0.0,
        n_features: x.n_cols(),
    })
}

/// Stagewise least-squares boosting: every tree fits the current residuals
/// and contributes `learning_rate` times its output.
pub fn fit_gbt(x: &DesignMatrix, y: &[f64], params: GbtParams) -> Result<TreeEnsemble> {
    if y.len() != x.n_rows() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: y.len() });
    }
    if x.n_rows() < 10 {
        return Err(Error::TooFewSamples { needed: 10, have: x.n_rows() });
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::InvalidParameter("learning rate must be in (0, 1]".into()));
    }

    let n = x.n_rows();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut residuals: Vec<f64> = y.iter().map(|v| v - base_score).collect();
    let tree_params = TreeParams {
        min_leaf: 1,
        max_depth: Some(params.max_depth),
        mtry: usize::MAX,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let all: Vec<usize> = (0..n).collect();

    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let tree = grow_tree(x, &residuals, all.clone(), tree_params, &mut rng);
        for (i, r) in residuals.iter_mut().enumerate() {
            *r -= params.learning_rate * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        kind: EnsembleKind::GradientBoosted,
        trees,
        learning_rate: params.learning_rate,
        base_score,
        n_features: x.n_cols(),
    })
}

/// Forest proximity of one instance to each calibration row: the fraction
/// of trees in which the two land in the same leaf.
pub fn rf_proximity(forest: &TreeEnsemble, row: &[f64], x_calib: &DesignMatrix) -> Result<Vec<f64>> {
    if x_calib.n_cols() != forest.n_features || row.len() != forest.n_features {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features,
            got: x_calib.n_cols(),
        });
    }
    let n = x_calib.n_rows();
    let mut counts = vec![0u32; n];
    for tree in &forest.trees {
        let target_leaf = tree.leaf_index(row);
        for i in 0..n {
            if tree.leaf_index(x_calib.row(i)) == target_leaf {
                counts[i] += 1;
            }
        }
    }
    let m = forest.trees.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / m).collect())
}

/// Precomputed leaf assignments of the calibration rows, grouped per leaf,
/// so repeated proximity queries cost O(trees x mean leaf size).
#[derive(Debug, Clone)]
pub struct ProximityKernel {
    forest: TreeEnsemble,
    /// Per tree: leaf node index -> calibration row indices in that leaf.
    buckets: Vec<std::collections::HashMap<usize, Vec<u32>>>,
    n_calib: usize,
}

impl ProximityKernel {
    pub fn new(forest: TreeEnsemble, x_calib: &DesignMatrix) -> Result<Self> {
        if x_calib.n_cols() != forest.n_features {
            return Err(Error::DimensionMismatch {
                expected: forest.n_features,
                got: x_calib.n_cols(),
            });
        }
        let n_calib = x_calib.n_rows();
        let buckets = forest
            .trees
            .par_iter()
            .map(|tree| {
                let mut map: std::collections::HashMap<usize, Vec<u32>> = std::collections::HashMap::new();
                for i in 0..n_calib {
                    map.entry(tree.leaf_index(x_calib.row(i))).or_default().push(i as u32);
                }
                map
            })
            .collect();
        Ok(Self { forest, buckets, n_calib })
    }

    pub fn weights(&self, row: &[f64]) -> Vec<f64> {
        let mut counts = vec![0u32; self.n_calib];
        for (tree, buckets) in self.forest.trees.iter().zip(&self.buckets) {
            if let Some(members) = buckets.get(&tree.leaf_index(row)) {
                for &i in members {
                    counts[i as usize] += 1;
                }
            }
        }
        let m = self.forest.trees.len() as f64;
        counts.into_iter().map(|c| c as f64 / m).collect()
    }

    pub fn forest(&self) -> &TreeEnsemble {
        &self.forest
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy_quadratic(n: usize, seed: u64) -> (DesignMatrix, Vec<f64>) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] * r[0] + rng.random_range(-0.2..0.2))
            .collect();
        (DesignMatrix::from_rows(&rows).unwrap(), y)
    }

    fn mse(pred: &[f64], y: &[f64]) -> f64 {
        pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
    }

    #[test]
    fn forest_beats_mean_predictor_on_nonlinear_target() {
        let (x, y) = noisy_quadratic(500, 1);
        let mut params = RandomForestParams::new(7);
        params.n_trees = 100;
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let pred = forest.predict(&x).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let baseline: Vec<f64> = vec![mean; y.len()];
        assert!(mse(&pred, &y) < mse(&baseline, &y) * 0.5);
    }

    #[test]
    fn degenerate_forest_reproduces_single_tree() {
        let (x, y) = noisy_quadratic(120, 2);
        let params = RandomForestParams {
            n_trees: 1,
            mtry: Some(x.n_cols()),
            min_leaf: 1,
            bootstrap: false,
            max_depth: None,
            seed: 3,
        };
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let tree = grow_tree(
            &x,
            &y,
            (0..x.n_rows()).collect(),
            TreeParams { min_leaf: 1, max_depth: None, mtry: usize::MAX },
            &mut rng,
        );
        for i in 0..x.n_rows() {
            assert_eq!(forest.predict_row(x.row(i)), tree.predict_row(x.row(i)));
        }
    }

    #[test]
    fn same_seed_gives_identical_forests() {
        let (x, y) = noisy_quadratic(200, 4);
        let mut params = RandomForestParams::new(11);
        params.n_trees = 20;
        let a = fit_random_forest(&x, &y, params).unwrap();
        let b = fit_random_forest(&x, &y, params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forest_mean_is_stable_under_tree_reordering() {
        let (x, y) = noisy_quadratic(150, 5);
        let mut params = RandomForestParams::new(2);
        params.n_trees = 30;
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let mut reversed = forest.clone();
        reversed.trees.reverse();
        for i in 0..20 {
            let a = forest.predict_row(x.row(i));
            let b = reversed.predict_row(x.row(i));
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gbt_training_mse_is_monotone_and_shrinks() {
        let (x, y) = noisy_quadratic(300, 6);
        let params = GbtParams { n_trees: 80, max_depth: 3, learning_rate: 0.1, seed: 0 };
        let model = fit_gbt(&x, &y, params).unwrap();

        // Loss curve recomputed stage by stage.
        let mut pred = vec![model.base_score; y.len()];
        let mut last = mse(&pred, &y);
        for tree in &model.trees {
            for (i, p) in pred.iter_mut().enumerate() {
                *p += model.learning_rate * tree.predict_row(x.row(i));
            }
            let current = mse(&pred, &y);
            assert!(current <= last + 1e-12);
            last = current;
        }
    }

    #[test]
    fn gbt_overfits_noiseless_data_at_unit_rate() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..64).map(|i| ((i / 8) % 2) as f64).collect();
        let params = GbtParams { n_trees: 50, max_depth: 6, learning_rate: 1.0, seed: 0 };
        let model = fit_gbt(&x, &y, params).unwrap();
        let pred = model.predict(&x).unwrap();
        assert!(mse(&pred, &y) < 1e-20);
    }

    #[test]
    fn gbt_with_no_trees_is_the_mean() {
        let (x, y) = noisy_quadratic(50, 7);
        let params = GbtParams { n_trees: 0, max_depth: 4, learning_rate: 0.03, seed: 0 };
        let model = fit_gbt(&x, &y, params).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(model.predict_row(x.row(0)), mean);
    }

    #[test]
    fn gbt_definitional_sum() {
        // Two stumps each outputting 1, base 1.0, rate 0.03 -> 1.06.
        let leaf = Tree {
            nodes: vec![crate::predictors::tree::TreeNode {
                feature: 0,
                threshold: 0.0,
                left: -1,
                right: -1,
                value: 1.0,
            }],
        };
        let model = TreeEnsemble {
            kind: EnsembleKind::GradientBoosted,
            trees: vec![leaf.clone(), leaf],
            learning_rate: 0.03,
            base_score: 1.0,
            n_features: 1,
        };
        assert!((model.predict_row(&[0.3]) - 1.06).abs() < 1e-12);
    }

    #[test]
    fn proximity_is_one_for_identical_features_and_bounded() {
        let (x, y) = noisy_quadratic(80, 8);
        let params = RandomForestParams {
            n_trees: 25,
            mtry: None,
            min_leaf: 2,
            bootstrap: true,
            max_depth: Some(6),
            seed: 5,
        };
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let w = rf_proximity(&forest, x.row(17), &x).unwrap();
        assert_eq!(w[17], 1.0);
        assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn single_tree_proximity_matches_leaf_membership_oracle() {
        let (x, y) = noisy_quadratic(60, 9);
        let params = RandomForestParams {
            n_trees: 1,
            mtry: None,
            min_leaf: 3,
            bootstrap: true,
            max_depth: Some(4),
            seed: 13,
        };
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let probe = x.row(5);
        let w = rf_proximity(&forest, probe, &x).unwrap();

        // Oracle: walk the flattened node array directly.
        fn walk(tree: &Tree, row: &[f64]) -> usize {
            let mut at = 0;
            while !tree.nodes[at].is_leaf() {
                let n = &tree.nodes[at];
                at = if row[n.feature as usize] <= n.threshold {
                    n.left as usize
                } else {
                    n.right as usize
                };
            }
            at
        }
        let target = walk(&forest.trees[0], probe);
        for i in 0..x.n_rows() {
            let expected = if walk(&forest.trees[0], x.row(i)) == target { 1.0 } else { 0.0 };
            assert_eq!(w[i], expected);
        }
    }

    #[test]
    fn kernel_agrees_with_direct_proximity() {
        let (x, y) = noisy_quadratic(100, 10);
        let params = RandomForestParams {
            n_trees: 15,
            mtry: None,
            min_leaf: 2,
            bootstrap: true,
            max_depth: Some(6),
            seed: 21,
        };
        let forest = fit_random_forest(&x, &y, params).unwrap();
        let kernel = ProximityKernel::new(forest.clone(), &x).unwrap();
        for i in [0, 7, 42] {
            let direct = rf_proximity(&forest, x.row(i), &x).unwrap();
            let cached = kernel.weights(x.row(i));
            assert_eq!(direct, cached);
        }
    }
}
