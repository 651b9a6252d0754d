//! Campaign runner, parameter-space study and comparison tables.

pub mod campaign;
pub mod compare;
pub mod config;
pub mod study;

use rayon::ThreadPool;

use crate::error::{Error, Result};

pub use campaign::{run_campaign, CampaignOutcome, DesignFile};
pub use compare::{compare_designs, ComparisonRow};
pub use config::{CampaignConfig, Overrides};
pub use study::{parameter_space_study, StudyReport, StudyResult, StudyStats};

/// Env var selecting the worker count for batch evaluation.
pub const WORKERS_ENV: &str = "ROBUST_SGD_WORKERS";

/// 17 significant digits, enough for an exact round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("not a number: '{s}'")))
}

/// Pool sized from [`WORKERS_ENV`]; `None` uses rayon's global pool.
pub fn worker_pool() -> Result<Option<ThreadPool>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{WORKERS_ENV} = '{v}' is not a count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(Some(pool))
        }
        Err(_) => Ok(None),
    }
}

/// Process exit code for an error: 2 for configuration problems, 3 for
/// numerical aborts, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) => 2,
        Error::Aborted { .. }
        | Error::RetriesExhausted { .. }
        | Error::NonFiniteGradient { .. }
        | Error::NonFiniteResponse { .. }
        | Error::DegenerateGeometry { .. }
        | Error::ReynoldsOutOfRange(_) => 3,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn formatted_numbers_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            prop_assert_eq!(parse_f64(&fmt_f64(x)).unwrap().to_bits(), x.to_bits());
        }
    }
}
