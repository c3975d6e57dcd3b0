//! Linear SVM trained with a seeded Pegasos subgradient schedule.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    /// Regularization constant used in training.
    pub c: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::Config(format!(
                "feature length {} does not match model dimension {}",
                x.len(),
                self.w.len()
            )));
        }
        Ok(dot(&self.w, x) + self.b)
    }

    /// `+1` for a non-negative decision value, `-1` otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { c: 10.0, epochs: 30, seed: crate::seed::derive_seed(crate::seed::DEFAULT_SEED, "svm") }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Regularized hinge objective `lambda/2 |w|^2 + mean(hinge)` with the bias
/// treated as an extra weight on a constant feature.
pub fn svm_objective(m: &SvmModel, features: &[Vec<f64>], labels: &[i8]) -> f64 {
    let lambda = 1.0 / (m.c * features.len() as f64);
    let reg = 0.5 * lambda * (dot(&m.w, &m.w) + m.b * m.b);
    let loss: f64 =
        features.iter().zip(labels).map(|(x, &y)| (1.0 - f64::from(y) * (dot(&m.w, x) + m.b)).max(0.0)).sum();
    reg + loss / features.len() as f64
}

pub fn svm_train(features: &[Vec<f64>], labels: &[i8], c: f64, epochs: usize, seed: u64) -> Result<SvmModel> {
    svm_train_with_history(features, labels, c, epochs, seed).map(|(m, _)| m)
}

/// Trains and also returns the objective of the current iterate after each epoch.
pub fn svm_train_with_history(
    features: &[Vec<f64>],
    labels: &[i8],
    c: f64,
    epochs: usize,
    seed: u64,
) -> Result<(SvmModel, Vec<f64>)> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::Training(format!("{} features vs {} labels", features.len(), labels.len())));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Training("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Training("both classes must be present".into()));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::Training("feature vectors differ in length".into()));
    }
    if !(c > 0.0) || epochs == 0 {
        return Err(Error::Training(format!("need c > 0 and epochs > 0, got c = {c}, epochs = {epochs}")));
    }
    let n = features.len();
    let lambda = 1.0 / (c * n as f64);
    // last slot is the bias weight
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let total = epochs * n;
    let average_from = total / 2;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = crate::seed::rng(seed);
    let mut history = Vec::with_capacity(epochs);
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &features[i];
            let y = f64::from(labels[i]);
            let margin = y * (dot(&w[..d], x) + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w[..d].iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[d] += eta * y;
            }
            if t > average_from {
                averaged += 1;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += v;
                }
            }
        }
        let current = SvmModel { w: w[..d].to_vec(), b: w[d], c };
        history.push(svm_objective(&current, features, labels));
    }
    let k = averaged.max(1) as f64;
    let b = avg[d] / k;
    avg.truncate(d);
    avg.iter_mut().for_each(|v| *v /= k);
    Ok((SvmModel { w: avg, b, c }, history))
}

/// Mean and standard deviation of fold accuracies.
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub mean: f64,
    pub std: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Repeated stratified k-fold cross-validation.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[i8],
    folds: usize,
    repeats: usize,
    cfg: &SvmConfig,
) -> Result<CvReport> {
    if folds < 2 || repeats == 0 {
        return Err(Error::Argument(format!("need folds >= 2 and repeats >= 1, got {folds}, {repeats}")));
    }
    if features.len() != labels.len() {
        return Err(Error::Training(format!("{} features vs {} labels", features.len(), labels.len())));
    }
    let mut rng = crate::seed::rng(crate::seed::derive_seed(cfg.seed, "cv"));
    let mut accs = Vec::with_capacity(folds * repeats);
    for rep in 0..repeats {
        let mut assign = vec![0usize; labels.len()];
        for class in [1i8, -1] {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            idx.shuffle(&mut rng);
            for (k, i) in idx.into_iter().enumerate() {
                assign[i] = k % folds;
            }
        }
        for fold in 0..folds {
            let (mut tr_x, mut tr_y, mut te) = (Vec::new(), Vec::new(), Vec::new());
            for i in 0..labels.len() {
                if assign[i] == fold {
                    te.push(i);
                } else {
                    tr_x.push(features[i].clone());
                    tr_y.push(labels[i]);
                }
            }
            if te.is_empty() {
                continue;
            }
            let seed = crate::seed::derive_seed(cfg.seed, &format!("cv-{rep}-{fold}"));
            let m = svm_train(&tr_x, &tr_y, cfg.c, cfg.epochs, seed)?;
            let mut correct = 0usize;
            for &i in &te {
                if m.predict(&features[i])? == labels[i] {
                    correct += 1;
                }
            }
            accs.push(correct as f64 / te.len() as f64);
        }
    }
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let var = if accs.len() > 1 { accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(CvReport { mean, std: var.sqrt(), fold_accuracies: accs })
}
