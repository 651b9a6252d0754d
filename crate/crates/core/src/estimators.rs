//! Mean-plus-variance robust measures and their mini-batch estimates.
//!
//! For a batch of `n` responses at one design the estimate is
//!
//! ```text
//! R  = mean(f)   + lambda * var(f)          f = c_d
//! C_j = mean(G_j) + lambda * var(G_j)       G_j = max(0, g_j)^2
//! J  = R + sum_j kappa_j C_j
//! ```
//!
//! with the unbiased sample variance. The gradient is the exact derivative of
//! `J` on the frozen batch, which for `n = 1` reduces to the single-sample
//! stochastic gradient `grad f + sum_j kappa_j grad G_j`.

use serde::{Deserialize, Serialize};

use crate::aero::AeroResponse;
use crate::error::{Error, Result};
use crate::geometry::DesignVector;
use crate::uncertainty::UncertainInput;

/// Lift, upper volume bound, lower volume bound.
pub const N_CONSTRAINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustConfig {
    pub lambda: f64,
    pub kappa: [f64; N_CONSTRAINTS],
    pub c_l_star: f64,
    pub vol_tol: f64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self { lambda: 0.0, kappa: [1.0; N_CONSTRAINTS], c_l_star: 0.375, vol_tol: 1e-3 }
    }
}

impl RobustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.kappa.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::Config(format!("kappa must be >= 0, got {:?}", self.kappa)));
        }
        if !(self.c_l_star > 0.0) {
            return Err(Error::Config(format!("c_l_star must be > 0, got {}", self.c_l_star)));
        }
        if !(self.vol_tol >= 0.0) {
            return Err(Error::Config(format!("vol_tol must be >= 0, got {}", self.vol_tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintValues {
    pub g: [f64; N_CONSTRAINTS],
    pub grad: [Vec<f64>; N_CONSTRAINTS],
}

/// Constraints in `g <= 0` form: relative lift deficit and the volume
/// equality split into two one-sided bounds.
pub fn constraint_values(
    response: &AeroResponse,
    area_ratio: f64,
    area_ratio_grad: &[f64],
    cfg: &RobustConfig,
) -> ConstraintValues {
    let g_lift = (cfg.c_l_star - response.c_l) / cfg.c_l_star;
    let grad_lift = response.grad_c_l.iter().map(|d| -d / cfg.c_l_star).collect();
    let g_up = (area_ratio - 1.0) - cfg.vol_tol;
    let g_down = (1.0 - area_ratio) - cfg.vol_tol;
    ConstraintValues {
        g: [g_lift, g_up, g_down],
        grad: [grad_lift, area_ratio_grad.to_vec(), area_ratio_grad.iter().map(|d| -d).collect()],
    }
}

/// `G = max(0, g)^2`, `grad G = 2 max(0, g) grad g`.
pub fn violation_transform(g: f64, grad_g: &[f64]) -> (f64, Vec<f64>) {
    let v = g.max(0.0);
    (v * v, grad_g.iter().map(|d| 2.0 * v * d).collect())
}

/// Mean and unbiased variance; variance is 0 for a single value.
pub fn sample_mean_variance(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("mean/variance of an empty sample".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, ss / (n - 1.0)))
}

/// `mean + lambda * var` of a sample together with its gradient.
fn robust_moment(values: &[f64], grads: &[Vec<f64>], lambda: f64) -> (f64, f64, Vec<f64>) {
    let n = values.len();
    let dim = grads[0].len();
    let (mean, var) = sample_mean_variance(values).expect("nonempty batch");
    let mut grad_mean = vec![0.0; dim];
    for g in grads {
        for (a, b) in grad_mean.iter_mut().zip(g) {
            *a += b / n as f64;
        }
    }
    let mut grad = grad_mean.clone();
    if n > 1 && lambda != 0.0 {
        let scale = 2.0 * lambda / (n as f64 - 1.0);
        for (v, g) in values.iter().zip(grads) {
            let dev = v - mean;
            for ((out, gi), gm) in grad.iter_mut().zip(g).zip(&grad_mean) {
                *out += scale * dev * (gi - gm);
            }
        }
    }
    (mean, var, grad)
}

/// Responses of one design at the `n` inputs drawn for an iteration.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub entries: Vec<(UncertainInput, AeroResponse)>,
    pub design: DesignVector,
    pub area_ratio: f64,
    pub area_ratio_grad: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StochasticEstimate {
    pub objective_value: f64,
    pub gradient: Vec<f64>,
    pub mean_cd: f64,
    pub mean_cl: f64,
    pub var_cd: f64,
    /// Batch mean of `max(0, g_j)` per constraint.
    pub mean_violation: [f64; N_CONSTRAINTS],
}

pub fn estimate(batch: &SampleBatch, cfg: &RobustConfig) -> Result<StochasticEstimate> {
    if batch.entries.is_empty() {
        return Err(Error::InvalidArgument("empty sample batch".into()));
    }
    for (i, (_, r)) in batch.entries.iter().enumerate() {
        if !r.is_finite() {
            return Err(Error::NonFiniteResponse {
                sample: i,
                what: format!("c_d = {}, c_l = {}", r.c_d, r.c_l),
            });
        }
    }
    let n = batch.entries.len();
    let cd: Vec<f64> = batch.entries.iter().map(|(_, r)| r.c_d).collect();
    let cd_grad: Vec<Vec<f64>> = batch.entries.iter().map(|(_, r)| r.grad_c_d.clone()).collect();

    let mut big_g: [Vec<f64>; N_CONSTRAINTS] = Default::default();
    let mut big_g_grad: [Vec<Vec<f64>>; N_CONSTRAINTS] = Default::default();
    let mut mean_violation = [0.0; N_CONSTRAINTS];
    for (_, r) in &batch.entries {
        let cv = constraint_values(r, batch.area_ratio, &batch.area_ratio_grad, cfg);
        for j in 0..N_CONSTRAINTS {
            let (g, dg) = violation_transform(cv.g[j], &cv.grad[j]);
            big_g[j].push(g);
            big_g_grad[j].push(dg);
            mean_violation[j] += cv.g[j].max(0.0) / n as f64;
        }
    }

    let (mean_cd, var_cd, mut gradient) = robust_moment(&cd, &cd_grad, cfg.lambda);
    let mut objective_value = mean_cd + cfg.lambda * var_cd;
    for j in 0..N_CONSTRAINTS {
        let (m, v, g) = robust_moment(&big_g[j], &big_g_grad[j], cfg.lambda);
        objective_value += cfg.kappa[j] * (m + cfg.lambda * v);
        for (out, gj) in gradient.iter_mut().zip(&g) {
            *out += cfg.kappa[j] * gj;
        }
    }
    let mean_cl = batch.entries.iter().map(|(_, r)| r.c_l).sum::<f64>() / n as f64;
    Ok(StochasticEstimate { objective_value, gradient, mean_cd, mean_cl, var_cd, mean_violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(c_l: f64, c_d: f64, grad_c_l: Vec<f64>, grad_c_d: Vec<f64>) -> AeroResponse {
        AeroResponse { c_l, c_d, grad_c_l, grad_c_d }
    }

    fn batch(entries: Vec<AeroResponse>) -> SampleBatch {
        let dim = entries[0].grad_c_d.len();
        SampleBatch {
            entries: entries
                .into_iter()
                .map(|r| (crate::uncertainty::dsp_input(), r))
                .collect(),
            design: DesignVector::from_flat(&vec![0.0; dim]),
            area_ratio: 1.0,
            area_ratio_grad: vec![0.0; dim],
        }
    }

    #[test]
    fn lift_constraint_values() {
        let cfg = RobustConfig::default();
        let at = response(0.375, 0.01, vec![1.0, 2.0], vec![0.0, 0.0]);
        let cv = constraint_values(&at, 1.0, &[0.5, 0.0], &cfg);
        assert_eq!(cv.g[0], 0.0);
        assert_eq!(cv.grad[0], vec![-1.0 / 0.375, -2.0 / 0.375]);
        let above = response(0.40, 0.01, vec![0.0, 0.0], vec![0.0, 0.0]);
        let cv = constraint_values(&above, 1.0, &[0.5, 0.0], &cfg);
        assert!((cv.g[0] + 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(cv.g[1], -1e-3);
        assert_eq!(cv.g[2], -1e-3);
        assert_eq!(cv.grad[1], vec![0.5, 0.0]);
        assert_eq!(cv.grad[2], vec![-0.5, 0.0]);
    }

    #[test]
    fn transform_cases() {
        assert_eq!(violation_transform(-0.5, &[3.0]), (0.0, vec![0.0]));
        let (g, d) = violation_transform(0.2, &[1.0, 0.0]);
        assert!((g - 0.04).abs() < 1e-16);
        assert!((d[0] - 0.4).abs() < 1e-16 && d[1] == 0.0);
        assert_eq!(violation_transform(0.0, &[1.0]), (0.0, vec![0.0]));
        // continuity across g = 0
        let (gp, dp) = violation_transform(1e-9, &[1.0]);
        assert!(gp < 1e-17 && dp[0] < 1e-8);
    }

    #[test]
    fn mean_variance_cases() {
        assert_eq!(sample_mean_variance(&[1.0, 2.0, 3.0]).unwrap(), (2.0, 1.0));
        let (m, v) = sample_mean_variance(&[0.75, 0.75, 0.75]).unwrap();
        assert_eq!((m, v), (0.75, 0.0));
        assert_eq!(sample_mean_variance(&[5.0]).unwrap(), (5.0, 0.0));
        assert!(sample_mean_variance(&[]).is_err());
    }

    #[test]
    fn single_sample_recovers_plain_gradient() {
        let r = response(0.5, 0.012, vec![0.1, 0.2, 0.3], vec![1e-3, -2e-3, 4e-4]);
        let cfg = RobustConfig { lambda: 0.0, ..Default::default() };
        let est = estimate(&batch(vec![r.clone()]), &cfg).unwrap();
        assert_eq!(est.gradient, r.grad_c_d);
        assert_eq!(est.objective_value, 0.012);
        // variance terms vanish for n = 1 whatever lambda is
        let cfg = RobustConfig { lambda: 100.0, ..Default::default() };
        assert_eq!(estimate(&batch(vec![r.clone()]), &cfg).unwrap().gradient, r.grad_c_d);
    }

    #[test]
    fn zero_lambda_averages_per_sample_gradients() {
        let rs = vec![
            response(0.30, 0.010, vec![0.1, 0.0], vec![1.0, 2.0]),
            response(0.50, 0.014, vec![0.2, 0.1], vec![3.0, -1.0]),
            response(0.35, 0.011, vec![0.0, 0.3], vec![-2.0, 0.5]),
        ];
        let cfg = RobustConfig::default();
        let est = estimate(&batch(rs.clone()), &cfg).unwrap();
        let mut expect = vec![0.0; 2];
        for r in &rs {
            let cv = constraint_values(r, 1.0, &[0.0, 0.0], &cfg);
            let mut h = r.grad_c_d.clone();
            for j in 0..N_CONSTRAINTS {
                let (_, dg) = violation_transform(cv.g[j], &cv.grad[j]);
                for (a, b) in h.iter_mut().zip(dg) {
                    *a += cfg.kappa[j] * b;
                }
            }
            for (e, hi) in expect.iter_mut().zip(h) {
                *e += hi / 3.0;
            }
        }
        for (a, b) in est.gradient.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(est.mean_violation[0] > 0.0);
    }

    #[test]
    fn non_finite_response_names_sample() {
        let rs = vec![
            response(0.3, 0.01, vec![0.0], vec![0.0]),
            response(0.3, f64::NAN, vec![0.0], vec![0.0]),
        ];
        match estimate(&batch(rs), &RobustConfig::default()) {
            Err(Error::NonFiniteResponse { sample, .. }) => assert_eq!(sample, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
