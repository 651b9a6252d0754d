#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_sgd::aero::{Evaluator, SurrogateEvaluator};
use robust_sgd::geometry::DesignVector;
use robust_sgd::uncertainty::UncertainInput;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random valid design with displacements in `[-amp, amp]`.
pub fn random_design(ev: &SurrogateEvaluator, rng: &mut ChaCha8Rng, amp: f64) -> DesignVector {
    loop {
        let d = DesignVector {
            ffd_dy: (0..ev.n_free()).map(|_| rng.gen_range(-amp..amp)).collect(),
            alpha_deg: rng.gen_range(-2.0..8.0),
        };
        if ev.shape(&d).is_ok() {
            return d;
        }
    }
}

pub fn random_input(rng: &mut ChaCha8Rng) -> UncertainInput {
    UncertainInput { re_c: rng.gen_range(1.0e6..1.0e7), model_id: rng.gen_range(1..=5) }
}

pub fn perturbed(d: &DesignVector, i: usize, h: f64) -> DesignVector {
    let mut t = d.to_flat();
    t[i] += h;
    DesignVector::from_flat(&t)
}

/// Central difference of `f` along flattened component `i`.
pub fn central_diff<F: Fn(&DesignVector) -> f64>(f: F, d: &DesignVector, i: usize, h: f64) -> f64 {
    (f(&perturbed(d, i, h)) - f(&perturbed(d, i, -h))) / (2.0 * h)
}

/// `|a - b| <= max(rel |b|, floor)`
pub fn close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= (rel * b.abs()).max(floor)
}

/// Composite Simpson rule on `[a, b]` with `m` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Population expectation of `g` over Re ~ U[1e6, 1e7] and 5 equally likely
/// models, by quadrature in Re.
pub fn population_mean<F: Fn(&UncertainInput) -> Vec<f64>>(g: F, dim: usize) -> Vec<f64> {
    let m = 400;
    let (a, b) = (1.0e6, 1.0e7);
    let h = (b - a) / m as f64;
    let mut out = vec![0.0; dim];
    for model in 1..=5u8 {
        for k in 0..=m {
            let w = if k == 0 || k == m { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            let v = g(&UncertainInput { re_c: a + k as f64 * h, model_id: model });
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x * h / 3.0 / (b - a) / 5.0;
            }
        }
    }
    out
}

pub fn default_evaluator() -> SurrogateEvaluator {
    SurrogateEvaluator::with_defaults().unwrap()
}

pub fn eval_all(ev: &SurrogateEvaluator, d: &DesignVector, xs: &[UncertainInput]) -> Vec<robust_sgd::aero::AeroResponse> {
    xs.iter().map(|x| ev.evaluate(d, x).unwrap()).collect()
}
