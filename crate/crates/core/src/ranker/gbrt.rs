//! Stagewise least-squares boosting (MART) over regression trees.
//!
//! `F_0` is the mean label; each stage fits a tree to the residuals
//! `y - F(x)` and adds it scaled by the learning rate.

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Manifest};
use super::tree::{fit_tree, RegressionTree, SortedColumns};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbrtConfig {
    pub n_trees: usize,
    pub n_leaves: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Recorded with the model; split search is exhaustive and uses no
    /// randomness.
    pub seed: u64,
}

impl Default for GbrtConfig {
    fn default() -> Self {
        GbrtConfig {
            n_trees: 50,
            n_leaves: 2,
            learning_rate: 0.1,
            min_leaf: 1,
            seed: 0,
        }
    }
}

impl GbrtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_leaves < 2 {
            return Err(Error::Config(format!(
                "trees need at least 2 leaves, got {}",
                self.n_leaves
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.min_leaf == 0 {
            return Err(Error::Config("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel<T> {
    pub trees: Vec<RegressionTree<T>>,
    pub learning_rate: T,
    pub base_score: T,
    pub manifest: Manifest,
    /// Training MSE after the base score and after every stage.
    pub training_mse: Vec<T>,
    pub config: GbrtConfig,
}

impl<T: Real> GbrtModel<T> {
    /// Model with no trees: predicts `base_score` everywhere.
    pub fn constant(base_score: T, manifest: Manifest) -> Self {
        GbrtModel {
            trees: Vec::new(),
            learning_rate: T::from_f64_lossy(GbrtConfig::default().learning_rate),
            base_score,
            manifest,
            training_mse: Vec::new(),
            config: GbrtConfig::default(),
        }
    }

    pub fn final_training_mse(&self) -> Option<T> {
        self.training_mse.last().copied()
    }

    fn score_raw(&self, x: &[T]) -> T {
        let mut f = self.base_score;
        for tree in &self.trees {
            f = f + self.learning_rate * tree.predict(x);
        }
        f
    }

    pub fn predict(&self, fv: &FeatureVector<T>) -> Result<T> {
        self.predict_slice(&fv.values)
    }

    pub fn predict_slice(&self, x: &[T]) -> Result<T> {
        if x.len() != self.manifest.len() {
            return Err(Error::Contract(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.manifest.len()
            )));
        }
        Ok(self.score_raw(x))
    }

    pub fn is_well_formed(&self) -> bool {
        self.trees
            .iter()
            .all(|t| t.is_well_formed(self.manifest.len()))
    }
}

fn mse<T: Real>(y: &[T], f: &[T]) -> T {
    let sse = y
        .iter()
        .zip(f)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    sse / T::from_usize_lossy(y.len())
}

/// Mean computed as an offset from the first value, so a constant column
/// averages to exactly that constant.
fn exact_mean<T: Real>(y: &[T]) -> T {
    let first = y[0];
    let offset = y.iter().fold(T::zero(), |acc, &v| acc + (v - first));
    first + offset / T::from_usize_lossy(y.len())
}

pub fn fit<T: Real>(
    rows: &[FeatureVector<T>],
    labels: &[T],
    manifest: Manifest,
    config: &GbrtConfig,
) -> Result<GbrtModel<T>> {
    config.validate()?;
    if rows.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} feature rows but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    if rows.len() < 2 {
        return Err(Error::Contract("fitting needs at least 2 rows".into()));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != manifest.len()) {
        return Err(Error::Contract(format!(
            "row {bad} has {} values, manifest has {}",
            rows[bad].len(),
            manifest.len()
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::Contract("labels must be finite".into()));
    }

    let x: Vec<Vec<T>> = rows.iter().map(|r| r.values.clone()).collect();
    let cols = SortedColumns::new(&x, manifest.len());
    let lr = T::from_f64_lossy(config.learning_rate);
    let base = exact_mean(labels);

    let mut f = vec![base; labels.len()];
    let mut history = vec![mse(labels, &f)];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut residuals = vec![T::zero(); labels.len()];
    for _ in 0..config.n_trees {
        for ((r, &y), &fi) in residuals.iter_mut().zip(labels).zip(&f) {
            *r = y - fi;
        }
        let Some(tree) = fit_tree(&cols, &residuals, config.n_leaves, config.min_leaf) else {
            break;
        };
        let next: Vec<T> = f
            .iter()
            .zip(&x)
            .map(|(&fi, xi)| fi + lr * tree.predict(xi))
            .collect();
        let next_mse = mse(labels, &next);
        // A stage can only fail to lower the error through rounding once
        // the residual means are ~0; stop there.
        if next_mse > *history.last().unwrap() {
            break;
        }
        f = next;
        history.push(next_mse);
        trees.push(tree);
    }

    Ok(GbrtModel {
        trees,
        learning_rate: lr,
        base_score: base,
        manifest,
        training_mse: history,
        config: *config,
    })
}
