//! Reproducible draws of the uncertain inputs (chord Reynolds number and
//! aerodynamic model index).
//!
//! Every draw is keyed by `(seed, iteration, sample)`: the seed fixes a
//! ChaCha key, the iteration selects the stream and the sample index selects
//! a fixed block of the keystream. A draw therefore never depends on how many
//! other draws happened before it or on which thread computed it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RE_MIN: f64 = 1.0e6;
pub const RE_MAX: f64 = 1.0e7;
pub const N_MODELS: u8 = 5;

/// Keystream words reserved per sample; a draw uses four.
const WORDS_PER_SAMPLE: u128 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertainInput {
    pub re_c: f64,
    /// 1-based index into the model catalog.
    pub model_id: u8,
}

impl UncertainInput {
    pub fn validate(&self, n_models: u8) -> Result<()> {
        if !(RE_MIN..=RE_MAX).contains(&self.re_c) {
            return Err(Error::ReynoldsOutOfRange(self.re_c));
        }
        if self.model_id == 0 || self.model_id > n_models {
            return Err(Error::InvalidArgument(format!(
                "model_id {} outside 1..={n_models}",
                self.model_id
            )));
        }
        Ok(())
    }
}

/// Operating point of the deterministic single-point design: Re = 5e6 with
/// model 1.
pub fn dsp_input() -> UncertainInput {
    UncertainInput { re_c: 5.0e6, model_id: 1 }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReSampling {
    #[default]
    Uniform,
    LogUniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDistribution {
    pub re_min: f64,
    pub re_max: f64,
    pub re_sampling: ReSampling,
    pub n_models: u8,
}

impl Default for InputDistribution {
    fn default() -> Self {
        Self { re_min: RE_MIN, re_max: RE_MAX, re_sampling: ReSampling::Uniform, n_models: N_MODELS }
    }
}

impl InputDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(RE_MIN <= self.re_min && self.re_min < self.re_max && self.re_max <= RE_MAX) {
            return Err(Error::Config(format!(
                "Re bounds [{}, {}] must be increasing and within [1e6, 1e7]",
                self.re_min, self.re_max
            )));
        }
        if self.n_models == 0 {
            return Err(Error::Config("n_models must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn generator(&self, iteration: u64, sample: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration);
        rng.set_word_pos(sample as u128 * WORDS_PER_SAMPLE);
        rng
    }

    pub fn draw(&self, dist: &InputDistribution, iteration: u64, sample: u64) -> UncertainInput {
        let mut rng = self.generator(iteration, sample);
        let u_re: f64 = rng.gen();
        let u_model: f64 = rng.gen();
        let re_c = match dist.re_sampling {
            ReSampling::Uniform => dist.re_min + u_re * (dist.re_max - dist.re_min),
            ReSampling::LogUniform => {
                let (a, b) = (dist.re_min.ln(), dist.re_max.ln());
                (a + u_re * (b - a)).exp().clamp(dist.re_min, dist.re_max)
            }
        };
        let model_id = 1 + ((u_model * dist.n_models as f64) as u8).min(dist.n_models - 1);
        UncertainInput { re_c, model_id }
    }
}

/// `n` independent draws for one optimizer iteration.
pub fn sample_batch(
    stream: &RngStream,
    dist: &InputDistribution,
    iteration: u64,
    n: usize,
) -> Vec<UncertainInput> {
    (0..n as u64).map(|i| stream.draw(dist, iteration, i)).collect()
}
