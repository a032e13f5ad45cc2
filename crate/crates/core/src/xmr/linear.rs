//! L2-regularized binary logistic regression solved by truncated Newton
//! (conjugate-gradient inner solves with Armijo backtracking).
//!
//! Objective: `0.5 * |w|^2 + C * sum_i ln(1 + exp(-y_i * w.x_i))`, where the
//! last coordinate of `w` is a bias multiplied by a constant feature of 1.

use std::collections::HashMap;

use crate::sparse::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub regularization: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            regularization: 1.0,
            grad_tol: 1e-4,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Weights in the problem's local coordinates; last entry is the bias.
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Instances of one tree node re-indexed into a compact local feature space.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    /// Local index to global feature index.
    pub features: Vec<u32>,
    rows: Vec<(Vec<u32>, Vec<f64>)>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(-t))` without overflow.
fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

impl LocalProblem {
    pub fn new(instances: &[&SparseVec]) -> Self {
        let mut features: Vec<u32> = instances.iter().flat_map(|x| x.indices.iter().copied()).collect();
        features.sort_unstable();
        features.dedup();
        let local: HashMap<u32, u32> = features
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, i as u32))
            .collect();
        let rows = instances
            .iter()
            .map(|x| {
                (
                    x.indices.iter().map(|f| local[f]).collect(),
                    x.values.clone(),
                )
            })
            .collect();
        LocalProblem { features, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Dimension including the bias coordinate.
    fn dim(&self) -> usize {
        self.features.len() + 1
    }

    fn margin(&self, w: &[f64], i: usize) -> f64 {
        let (idx, val) = &self.rows[i];
        let bias = w[self.features.len()];
        idx.iter().zip(val).map(|(&j, &v)| w[j as usize] * v).sum::<f64>() + bias
    }

    fn add_row(&self, out: &mut [f64], i: usize, scale: f64) {
        let (idx, val) = &self.rows[i];
        for (&j, &v) in idx.iter().zip(val) {
            out[j as usize] += scale * v;
        }
        out[self.features.len()] += scale;
    }

    fn objective(&self, w: &[f64], y: &[f64], c: f64) -> f64 {
        let reg = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        let loss: f64 = (0..self.len()).map(|i| log1p_exp_neg(y[i] * self.margin(w, i))).sum();
        reg + c * loss
    }

    /// Trains one binary model; `positive[i]` marks the positive instances.
    pub fn solve(&self, positive: &[bool], cfg: &SolverConfig) -> Solution {
        let n = self.len();
        let d = self.dim();
        let c = cfg.regularization;
        let y: Vec<f64> = positive.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
        let mut w = vec![0.0; d];
        let mut f = self.objective(&w, &y, c);
        let mut grad = vec![0.0; d];
        let mut curvature = vec![0.0; n];
        let mut grad_norm = f64::INFINITY;

        for iter in 0..=cfg.max_iter {
            grad.copy_from_slice(&w);
            for i in 0..n {
                let z = self.margin(&w, i);
                let s = sigmoid(y[i] * z);
                self.add_row(&mut grad, i, c * (s - 1.0) * y[i]);
                curvature[i] = c * s * (1.0 - s);
            }
            grad_norm = norm(&grad);
            if grad_norm <= cfg.grad_tol {
                return Solution {
                    weights: w,
                    iterations: iter,
                    grad_norm,
                    converged: true,
                };
            }
            if iter == cfg.max_iter {
                break;
            }

            let step = self.conjugate_gradient(&grad, &curvature, grad_norm);
            let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
            let mut alpha = 1.0;
            let mut accepted = false;
            let mut trial = vec![0.0; d];
            for _ in 0..40 {
                for k in 0..d {
                    trial[k] = w[k] + alpha * step[k];
                }
                let ft = self.objective(&trial, &y, c);
                if ft <= f + 1e-4 * alpha * slope {
                    w.copy_from_slice(&trial);
                    f = ft;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Solution {
            weights: w,
            iterations: cfg.max_iter,
            grad_norm,
            converged: false,
        }
    }

    /// Approximately solves `(I + X' D X) s = -g`.
    fn conjugate_gradient(&self, grad: &[f64], curvature: &[f64], grad_norm: f64) -> Vec<f64> {
        let d = grad.len();
        let tol = (0.1 * grad_norm).min(grad_norm.sqrt() * grad_norm);
        let mut s = vec![0.0; d];
        let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let mut hp = vec![0.0; d];
        for _ in 0..d.min(250) {
            if rr.sqrt() <= tol {
                break;
            }
            hp.copy_from_slice(&p);
            for (i, &dcurv) in curvature.iter().enumerate() {
                let xp = self.margin(&p, i);
                self.add_row(&mut hp, i, dcurv * xp);
            }
            let php: f64 = p.iter().zip(&hp).map(|(a, b)| a * b).sum();
            let a = rr / php;
            for k in 0..d {
                s[k] += a * p[k];
                r[k] -= a * hp[k];
            }
            let rr_next: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_next / rr;
            rr = rr_next;
            for k in 0..d {
                p[k] = r[k] + beta * p[k];
            }
        }
        s
    }

    /// Maps local weights back to global feature indexes; the bias goes to `bias_index`.
    pub fn to_global(&self, weights: &[f64], bias_index: u32) -> SparseVec {
        let mut pairs: Vec<(u32, f64)> = self
            .features
            .iter()
            .zip(weights)
            .map(|(&f, &w)| (f, w))
            .collect();
        pairs.push((bias_index, weights[self.features.len()]));
        SparseVec::from_pairs(pairs)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
