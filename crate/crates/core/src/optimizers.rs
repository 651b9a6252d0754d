//! Plain SGD and AdaGrad updates and the fixed-budget optimization loop.

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::aero::{AeroResponse, Evaluator};
use crate::error::{Error, Result};
use crate::estimators::{estimate, RobustConfig, SampleBatch, N_CONSTRAINTS};
use crate::geometry::{DesignBounds, DesignVector};
use crate::uncertainty::{dsp_input, sample_batch, InputDistribution, RngStream, UncertainInput};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_ETA: f64 = 0.02;
pub const MAX_PULLBACKS: usize = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sgd,
    #[default]
    AdaGrad,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub theta: Vec<f64>,
    /// Running sum of squared gradients (AdaGrad only).
    pub accumulator: Vec<f64>,
    /// 1-based index of the next iteration.
    pub k: usize,
    pub eta: f64,
    pub epsilon: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl OptimizerState {
    pub fn new(theta: Vec<f64>, eta: f64, epsilon: f64, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(theta.len(), lower.len());
        assert_eq!(theta.len(), upper.len());
        let accumulator = vec![0.0; theta.len()];
        Self { theta, accumulator, k: 1, eta, epsilon, lower, upper }
    }

    pub fn unbounded(theta: Vec<f64>, eta: f64, epsilon: f64) -> Self {
        let n = theta.len();
        Self::new(theta, eta, epsilon, vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n])
    }

    fn check(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.theta.len() {
            return Err(Error::InvalidArgument(format!(
                "gradient length {} != design length {}",
                h.len(),
                self.theta.len()
            )));
        }
        if h.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { iteration: self.k });
        }
        Ok(())
    }

    fn clamp(&mut self) {
        for ((t, lo), hi) in self.theta.iter_mut().zip(&self.lower).zip(&self.upper) {
            *t = t.clamp(*lo, *hi);
        }
    }

    /// `theta <- clamp(theta - eta h)`
    pub fn sgd_step(&mut self, h: &[f64]) -> Result<()> {
        self.check(h)?;
        for (t, g) in self.theta.iter_mut().zip(h) {
            *t -= self.eta * g;
        }
        self.clamp();
        self.k += 1;
        Ok(())
    }

    /// `a_j += h_j^2`, `theta_j <- clamp(theta_j - eta h_j / (sqrt(a_j) + sqrt(eps)))`
    pub fn adagrad_step(&mut self, h: &[f64]) -> Result<()> {
        self.check(h)?;
        let sqrt_eps = self.epsilon.sqrt();
        for ((t, a), g) in self.theta.iter_mut().zip(self.accumulator.iter_mut()).zip(h) {
            *a += g * g;
            *t -= self.eta * g / (a.sqrt() + sqrt_eps);
        }
        self.clamp();
        self.k += 1;
        Ok(())
    }

    pub fn step(&mut self, algorithm: Algorithm, h: &[f64]) -> Result<()> {
        match algorithm {
            Algorithm::Sgd => self.sgd_step(h),
            Algorithm::AdaGrad => self.adagrad_step(h),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One fixed operating point and model.
    Dsp,
    /// Random inputs, lambda = 0.
    Average,
    /// Random inputs, lambda > 0.
    Robust,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dsp" => Ok(Self::Dsp),
            "average" => Ok(Self::Average),
            "robust" => Ok(Self::Robust),
            other => Err(format!("unknown mode '{other}' (expected dsp, average or robust)")),
        }
    }
}

/// Supplies the uncertain inputs for one iteration.
pub trait BatchSource: Sync {
    fn batch(&self, iteration: usize) -> Vec<UncertainInput>;
    fn batch_size(&self) -> usize;
}

/// The single-point operating condition, once per iteration.
pub struct DspSource;

impl BatchSource for DspSource {
    fn batch(&self, _iteration: usize) -> Vec<UncertainInput> {
        vec![dsp_input()]
    }

    fn batch_size(&self) -> usize {
        1
    }
}

pub struct RandomSource {
    pub stream: RngStream,
    pub distribution: InputDistribution,
    pub n: usize,
}

impl BatchSource for RandomSource {
    fn batch(&self, iteration: usize) -> Vec<UncertainInput> {
        sample_batch(&self.stream, &self.distribution, iteration as u64, self.n)
    }

    fn batch_size(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub algorithm: Algorithm,
    pub robust: RobustConfig,
    pub eta: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub bounds: DesignBounds,
    pub initial: DesignVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub normalized_cost: usize,
    pub mean_cd: f64,
    pub mean_cl: f64,
    pub objective: f64,
    pub mean_violation: [f64; N_CONSTRAINTS],
    /// Design at which the batch was evaluated.
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<IterationRecord>,
    pub final_design: DesignVector,
    pub state: OptimizerState,
}

pub fn evaluate_batch<E: Evaluator + ?Sized>(
    evaluator: &E,
    design: &DesignVector,
    inputs: &[UncertainInput],
    pool: Option<&ThreadPool>,
) -> Result<SampleBatch> {
    let eval = || -> Result<Vec<AeroResponse>> {
        inputs.par_iter().map(|xi| evaluator.evaluate(design, xi)).collect()
    };
    let responses = match pool {
        Some(p) => p.install(eval)?,
        None => eval()?,
    };
    let (area_ratio, area_ratio_grad) = evaluator.area_ratio(design)?;
    Ok(SampleBatch {
        entries: inputs.iter().copied().zip(responses).collect(),
        design: design.clone(),
        area_ratio,
        area_ratio_grad,
    })
}

/// Fixed-budget loop: draw this iteration's inputs, evaluate, estimate, step.
///
/// If the current design is degenerate it is pulled halfway back toward the
/// previous iterate, at most [`MAX_PULLBACKS`] times. `on_record` sees each
/// record as soon as it exists.
pub fn run<E, S, F>(
    settings: &RunSettings,
    evaluator: &E,
    source: &S,
    pool: Option<&ThreadPool>,
    mut on_record: F,
) -> Result<RunOutput>
where
    E: Evaluator + ?Sized,
    S: BatchSource + ?Sized,
    F: FnMut(&IterationRecord) -> Result<()>,
{
    settings.robust.validate()?;
    let n_theta = evaluator.n_theta();
    if settings.initial.len() != n_theta {
        return Err(Error::InvalidArgument(format!(
            "initial design has {} entries, evaluator expects {n_theta}",
            settings.initial.len()
        )));
    }
    let (lo, hi) = settings.bounds.flattened(n_theta - 1);
    let mut state =
        OptimizerState::new(settings.initial.to_flat(), settings.eta, settings.epsilon, lo, hi);
    state.clamp();
    let n = source.batch_size();
    let mut previous = state.theta.clone();
    let mut records = Vec::with_capacity(settings.iterations);

    for k in 1..=settings.iterations {
        let abort = |e: Error| Error::Aborted { iteration: k, source: Box::new(e) };
        let inputs = source.batch(k);
        let mut pullbacks = 0;
        let batch = loop {
            let design = DesignVector::from_flat(&state.theta);
            match evaluate_batch(evaluator, &design, &inputs, pool) {
                Ok(b) => break b,
                Err(Error::DegenerateGeometry { .. }) if pullbacks < MAX_PULLBACKS => {
                    pullbacks += 1;
                    for (t, p) in state.theta.iter_mut().zip(&previous) {
                        *t = 0.5 * (*t + p);
                    }
                }
                Err(Error::DegenerateGeometry { .. }) => {
                    return Err(Error::RetriesExhausted { iteration: k, retries: pullbacks })
                }
                Err(e) => return Err(abort(e)),
            }
        };
        let est = estimate(&batch, &settings.robust).map_err(abort)?;
        let record = IterationRecord {
            k,
            normalized_cost: k * n,
            mean_cd: est.mean_cd,
            mean_cl: est.mean_cl,
            objective: est.objective_value,
            mean_violation: est.mean_violation,
            theta: state.theta.clone(),
        };
        on_record(&record)?;
        records.push(record);
        previous = state.theta.clone();
        state.step(settings.algorithm, &est.gradient).map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::NonFiniteGradient { iteration: k },
            e => abort(e),
        })?;
    }
    let final_design = DesignVector::from_flat(&state.theta);
    Ok(RunOutput { records, final_design, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_arithmetic_and_fixed_point() {
        let mut s = OptimizerState::unbounded(vec![1.0, 1.0], 0.1, DEFAULT_EPSILON);
        s.sgd_step(&[2.0, -4.0]).unwrap();
        assert!((s.theta[0] - 0.8).abs() < 1e-15 && (s.theta[1] - 1.4).abs() < 1e-15);
        assert_eq!(s.k, 2);
        let before = s.theta.clone();
        s.sgd_step(&[0.0, 0.0]).unwrap();
        assert_eq!(s.theta, before);
    }

    #[test]
    fn steps_clamp_to_bounds() {
        let mut s = OptimizerState::new(vec![0.0, 0.0], 1.0, DEFAULT_EPSILON, vec![-0.5, -0.5], vec![0.5, 0.5]);
        s.sgd_step(&[10.0, -10.0]).unwrap();
        assert_eq!(s.theta, vec![-0.5, 0.5]);
        let mut s = OptimizerState::new(vec![0.0], 1.0, DEFAULT_EPSILON, vec![-0.25], vec![0.25]);
        s.adagrad_step(&[-3.0]).unwrap();
        assert_eq!(s.theta, vec![0.25]);
    }

    #[test]
    fn adagrad_first_step() {
        let mut s = OptimizerState::unbounded(vec![0.0, 0.0], 0.1, DEFAULT_EPSILON);
        s.adagrad_step(&[3.0, -4.0]).unwrap();
        assert_eq!(s.accumulator, vec![9.0, 16.0]);
        assert!((s.theta[0] + 0.1 * 3.0 / (3.0 + 1e-4)).abs() < 1e-15);
        assert!((s.theta[1] - 0.1 * 4.0 / (4.0 + 1e-4)).abs() < 1e-15);
        assert!((s.theta[0] + 0.0999967).abs() < 1e-7);
        assert!((s.theta[1] - 0.0999975).abs() < 1e-7);
    }

    #[test]
    fn adagrad_zero_component_untouched() {
        let mut s = OptimizerState::unbounded(vec![1.0, 2.0], 0.1, DEFAULT_EPSILON);
        s.adagrad_step(&[0.5, 0.0]).unwrap();
        assert_eq!(s.theta[1], 2.0);
        assert_eq!(s.accumulator[1], 0.0);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut s = OptimizerState::unbounded(vec![0.0], 0.1, DEFAULT_EPSILON);
        s.k = 7;
        assert!(matches!(s.adagrad_step(&[f64::NAN]), Err(Error::NonFiniteGradient { iteration: 7 })));
        assert!(matches!(s.sgd_step(&[f64::INFINITY]), Err(Error::NonFiniteGradient { .. })));
        assert!(s.sgd_step(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("dsp".parse::<Mode>().unwrap(), Mode::Dsp);
        assert!("minimax".parse::<Mode>().is_err());
    }
}
