//! RBF-kernel SVM solved by SMO with second-order working-set selection.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::datasets::Label;
use crate::features::SparseVec;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfParams {
    pub c: f64,
    /// Defaults to 1 / number of features.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Defaults to max(10⁶, 100·N).
    pub max_iter: Option<usize>,
    pub cache_mb: usize,
}

impl Default for RbfParams {
    fn default() -> Self {
        RbfParams { c: 1.0, gamma: None, tol: 1e-3, max_iter: None, cache_mb: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub support: Vec<SparseVec>,
    /// αᵢyᵢ for each support vector.
    pub coef: Vec<f64>,
    pub gamma: f64,
    pub bias: f64,
    pub c: f64,
    pub n_features: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Largest KKT violation at exit.
    pub kkt_gap: f64,
}

impl KernelModel {
    pub fn decision(&self, x: &SparseVec) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| c * (-self.gamma * s.squared_distance(x)).exp())
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: &SparseVec) -> Result<Label, ClassifierError> {
        if x.dim != self.n_features {
            return Err(ClassifierError::DimensionMismatch { expected: self.n_features, got: x.dim });
        }
        Ok(Label::from_sign(self.decision(x)))
    }
}

struct KernelRows<'a> {
    xs: &'a [SparseVec],
    dense: Vec<f64>,
    dim: usize,
    sq: Vec<f64>,
    gamma: f64,
    cache: HashMap<usize, (Rc<[f64]>, u64)>,
    capacity: usize,
    tick: u64,
}

impl<'a> KernelRows<'a> {
    fn new(xs: &'a [SparseVec], gamma: f64, cache_mb: usize) -> Self {
        let dim = xs[0].dim;
        let mut dense = vec![0.0; xs.len() * dim];
        for (r, x) in xs.iter().enumerate() {
            for &(k, v) in &x.entries {
                dense[r * dim + k] = v;
            }
        }
        let row_bytes = 8 * xs.len().max(1);
        let capacity = ((cache_mb << 20) / row_bytes).max(2);
        KernelRows {
            xs,
            dense,
            dim,
            sq: xs.iter().map(SparseVec::squared_norm).collect(),
            gamma,
            cache: HashMap::new(),
            capacity,
            tick: 0,
        }
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.tick += 1;
        if let Some((row, used)) = self.cache.get_mut(&i) {
            *used = self.tick;
            return Rc::clone(row);
        }
        if self.cache.len() >= self.capacity {
            let oldest = *self.cache.iter().min_by_key(|(_, (_, used))| *used).expect("non-empty").0;
            self.cache.remove(&oldest);
        }
        let xi = &self.xs[i];
        let n = self.xs.len();
        let row: Rc<[f64]> = (0..n)
            .map(|j| {
                let base = j * self.dim;
                let dot: f64 = xi.entries.iter().map(|&(k, v)| v * self.dense[base + k]).sum();
                let d2 = (self.sq[i] + self.sq[j] - 2.0 * dot).max(0.0);
                (-self.gamma * d2).exp()
            })
            .collect();
        self.cache.insert(i, (Rc::clone(&row), self.tick));
        row
    }
}

/// Solves the C-SVC dual with K(u, v) = exp(−γ‖u − v‖²) until the maximal
/// KKT violation drops below `tol`. Hitting the iteration cap is reported
/// through `converged = false`, not as an error.
pub fn train_rbf_svm(xs: &[SparseVec], ys: &[Label], params: &RbfParams) -> Result<KernelModel, ClassifierError> {
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
    if params.c.is_nan() || params.c <= 0.0 {
        return Err(ClassifierError::InvalidParameter(format!("C must be positive, got {}", params.c)));
    }
    let gamma = params.gamma.unwrap_or(1.0 / dim.max(1) as f64);
    if gamma.is_nan() || gamma < 0.0 {
        return Err(ClassifierError::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
    }
    let n = xs.len();
    let c = params.c;
    let y: Vec<f64> = ys.iter().map(|l| l.sign()).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut kernel = KernelRows::new(xs, gamma, params.cache_mb);
    let max_iter = params.max_iter.unwrap_or((100 * n).max(1_000_000));
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            gap = 0.0;
            break;
        };
        let ki = kernel.row(i);
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            let grad_diff = gmax + v;
            if grad_diff > 0.0 {
                let quad = 2.0 - 2.0 * ki[t];
                let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    j_sel = Some(t);
                }
            }
        }
        gap = gmax + gmax2;
        let Some(j) = j_sel.filter(|_| gap >= params.tol) else {
            converged = true;
            break;
        };
        iterations += 1;
        let kj = kernel.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let mut quad = 2.0 + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = 2.0 - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:.2e}");
    }

    // offset from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb, mut free_sum, mut n_free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support.push(xs[t].clone());
            coef.push(alpha[t] * y[t]);
        }
    }
    Ok(KernelModel { support, coef, gamma, bias: -rho, c, n_features: dim, converged, iterations, kkt_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(n_per: usize) -> (Vec<SparseVec>, Vec<Label>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..n_per {
            let jitter = (k as f64 / n_per as f64 - 0.5) * 0.4;
            for (cx, cy) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                xs.push(SparseVec::from_dense(&[cx + jitter, cy - jitter]));
                ys.push(if cx * cy > 0.0 { Label::Attested } else { Label::Unattested });
            }
        }
        (xs, ys)
    }

    #[test]
    fn learns_xor() {
        let (xs, ys) = xor(25);
        let m = train_rbf_svm(&xs, &ys, &RbfParams { gamma: Some(1.0), ..RbfParams::default() }).unwrap();
        assert!(m.converged);
        let correct = xs.iter().zip(&ys).filter(|(x, y)| m.predict(x).unwrap() == **y).count();
        assert!(correct as f64 / xs.len() as f64 >= 0.95);
    }

    #[test]
    fn dual_feasibility() {
        let (xs, ys) = xor(10);
        let m = train_rbf_svm(&xs, &ys, &RbfParams { c: 0.5, gamma: Some(0.5), ..RbfParams::default() }).unwrap();
        assert!(m.coef.iter().all(|a| a.abs() <= 0.5 + 1e-9));
        assert!(m.coef.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let (xs, ys) = xor(2);
        assert!(train_rbf_svm(&xs, &ys, &RbfParams { c: 0.0, ..RbfParams::default() }).is_err());
        assert!(matches!(train_rbf_svm(&[], &[], &RbfParams::default()), Err(ClassifierError::EmptyData)));
    }
}
