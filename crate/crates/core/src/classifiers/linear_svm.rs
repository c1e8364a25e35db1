//! Linear SVM trained by primal stochastic subgradient descent (Pegasos).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::datasets::Label;
use crate::features::SparseVec;
use crate::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearSvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        LinearSvmParams { lambda: 1e-3, epochs: 50, seed: 0 }
    }
}

impl LinearModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &SparseVec) -> Result<Label, ClassifierError> {
        if x.dim != self.weights.len() {
            return Err(ClassifierError::DimensionMismatch { expected: self.weights.len(), got: x.dim });
        }
        Ok(Label::from_sign(self.decision(x)))
    }

    /// (λ/2)(‖w‖² + b²) + mean hinge loss.
    pub fn objective(&self, xs: &[SparseVec], ys: &[Label]) -> f64 {
        objective(&self.weights, self.bias, self.lambda, xs, ys)
    }
}

fn objective(w: &[f64], b: f64, lambda: f64, xs: &[SparseVec], ys: &[Label]) -> f64 {
    let reg = 0.5 * lambda * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let hinge: f64 = xs.iter().zip(ys).map(|(x, y)| (1.0 - y.sign() * (x.dot(w) + b)).max(0.0)).sum();
    reg + hinge / xs.len().max(1) as f64
}

/// Pegasos with step 1/(λt) on hinge loss + (λ/2)‖w‖². The bias is an
/// extra constant-1 feature and is regularized with the weights. Examples
/// are reshuffled each epoch from `seed`; the returned weights are the
/// average of the iterates over the second half of all steps.
pub fn train_linear_svm(
    xs: &[SparseVec],
    ys: &[Label],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearModel, ClassifierError> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(ClassifierError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if xs.is_empty() {
        return Err(ClassifierError::EmptyData);
    }
    if xs.len() != ys.len() {
        return Err(ClassifierError::LengthMismatch { rows: xs.len(), labels: ys.len() });
    }
    let dim = xs[0].dim;
    if let Some(x) = xs.iter().find(|x| x.dim != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, got: x.dim });
    }
    // w is stored as scale * v so the shrink step is O(1)
    let mut v = vec![0.0; dim];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut avg = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut avg_n = 0usize;
    let total = epochs * xs.len();
    let start_avg = total / 2;

    let mut rng = seeded_rng(seed, 0x5C);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &xs[i];
            let y = ys[i].sign();
            let margin = y * scale * (x.dot(&v) + vb);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                vb = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for &(k, val) in &x.entries {
                    v[k] += step * val;
                }
                vb += step;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                vb *= scale;
                scale = 1.0;
            }
            if t > start_avg {
                for (a, w) in avg.iter_mut().zip(&v) {
                    *a += scale * w;
                }
                avg_b += scale * vb;
                avg_n += 1;
            }
        }
    }
    if avg_n == 0 {
        return Ok(LinearModel { weights: vec![0.0; dim], bias: 0.0, lambda });
    }
    let n = avg_n as f64;
    Ok(LinearModel { weights: avg.into_iter().map(|a| a / n).collect(), bias: avg_b / n, lambda })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_separable() {
        let xs = vec![SparseVec::from_dense(&[1.0]), SparseVec::from_dense(&[-1.0])];
        let ys = vec![Label::Attested, Label::Unattested];
        let m = train_linear_svm(&xs, &ys, 0.01, 100, 1).unwrap();
        assert_eq!(m.predict(&xs[0]).unwrap(), Label::Attested);
        assert_eq!(m.predict(&xs[1]).unwrap(), Label::Unattested);
    }

    #[test]
    fn objective_improves_on_zero() {
        let xs: Vec<SparseVec> = (0..40).map(|i| SparseVec::from_dense(&[(i as f64 - 20.0) / 10.0, 1.0])).collect();
        let ys: Vec<Label> = (0..40).map(|i| if i % 3 == 0 || i > 25 { Label::Attested } else { Label::Unattested }).collect();
        let m = train_linear_svm(&xs, &ys, 0.1, 30, 4).unwrap();
        let zero = LinearModel { weights: vec![0.0; 2], bias: 0.0, lambda: 0.1 };
        assert!(m.objective(&xs, &ys) <= zero.objective(&xs, &ys));
    }

    #[test]
    fn rejects_bad_lambda() {
        let xs = vec![SparseVec::from_dense(&[1.0])];
        assert!(matches!(
            train_linear_svm(&xs, &[Label::Attested], 0.0, 1, 0),
            Err(ClassifierError::InvalidParameter(_))
        ));
    }

    #[test]
    fn seeded_determinism() {
        let xs: Vec<SparseVec> = (0..30).map(|i| SparseVec::from_dense(&[(i % 7) as f64, (i % 5) as f64])).collect();
        let ys: Vec<Label> = (0..30).map(|i| if i % 2 == 0 { Label::Attested } else { Label::Unattested }).collect();
        assert_eq!(train_linear_svm(&xs, &ys, 0.05, 5, 9).unwrap(), train_linear_svm(&xs, &ys, 0.05, 5, 9).unwrap());
    }
}
