use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::fmt_f64;
use crate::aero::{CountingEvaluator, GeometrySettings, SurrogateEvaluator};
use crate::error::{Error, Result};
use crate::geometry::{DesignVector, LatticeBox};
use crate::optimizers::{self, BatchSource, DspSource, IterationRecord, Mode, RandomSource, RunSettings};
use crate::uncertainty::RngStream;

pub const HISTORY_FILE: &str = "history.csv";
pub const DESIGN_FILE: &str = "design.json";
pub const CONFIG_ECHO_FILE: &str = "config.json";
pub const SHAPE_FILE: &str = "shape.dat";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.txt";

pub const HISTORY_COLUMNS: [&str; 8] = [
    "iteration",
    "normalized_cost",
    "mean_cd",
    "mean_cl",
    "objective",
    "g_lift_violation",
    "g_vol_violation",
    "alpha_deg",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub nx: usize,
    pub ny: usize,
    pub margin: f64,
    #[serde(rename = "box")]
    pub bbox: LatticeBox,
    pub locked_columns: Vec<usize>,
    pub n_free: usize,
}

/// Contents of `design.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub ffd_dy: Vec<f64>,
    pub alpha_deg: f64,
    pub lattice: LatticeInfo,
    pub n_per_surface: usize,
    pub n_quad: usize,
}

impl DesignFile {
    pub fn new(design: &DesignVector, evaluator: &SurrogateEvaluator, geometry: &GeometrySettings) -> Self {
        let lat = evaluator.lattice();
        Self {
            ffd_dy: design.ffd_dy.clone(),
            alpha_deg: design.alpha_deg,
            lattice: LatticeInfo {
                nx: lat.nx(),
                ny: lat.ny(),
                margin: geometry.margin,
                bbox: lat.bbox(),
                locked_columns: lat.locked_columns().to_vec(),
                n_free: lat.n_free(),
            },
            n_per_surface: geometry.n_per_surface,
            n_quad: geometry.n_quad,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn design(&self) -> DesignVector {
        DesignVector { ffd_dy: self.ffd_dy.clone(), alpha_deg: self.alpha_deg }
    }

    pub fn geometry(&self) -> GeometrySettings {
        GeometrySettings {
            n_per_surface: self.n_per_surface,
            nx: self.lattice.nx,
            ny: self.lattice.ny,
            margin: self.lattice.margin,
            n_quad: self.n_quad,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub records: Vec<IterationRecord>,
    pub final_design: DesignVector,
    /// Number of aerodynamic evaluations performed.
    pub evaluations: u64,
}

fn history_row(r: &IterationRecord) -> Vec<String> {
    let vol = r.mean_violation[1] + r.mean_violation[2];
    vec![
        r.k.to_string(),
        r.normalized_cost.to_string(),
        fmt_f64(r.mean_cd),
        fmt_f64(r.mean_cl),
        fmt_f64(r.objective),
        fmt_f64(r.mean_violation[0]),
        fmt_f64(vol),
        fmt_f64(*r.theta.last().expect("non-empty design")),
    ]
}

/// Runs one optimization campaign and writes its artifacts under
/// `config.out_dir`. History rows are flushed as they are produced.
pub fn run_campaign(config: &CampaignConfig, pool: Option<&ThreadPool>) -> Result<CampaignOutcome> {
    let config = config.clone().resolve()?;
    let out = &config.out_dir;
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_ECHO_FILE), serde_json::to_string_pretty(&config)? + "\n")?;

    let geometry = config.geometry();
    let evaluator = CountingEvaluator::new(SurrogateEvaluator::new(&geometry, config.catalog())?);
    let n_free = evaluator.inner().n_free();
    let settings = RunSettings {
        algorithm: config.algorithm,
        robust: config.robust(),
        eta: config.eta,
        epsilon: config.epsilon,
        iterations: config.iterations(),
        bounds: config.bounds(),
        initial: DesignVector::baseline(n_free),
    };
    let random = RandomSource {
        stream: RngStream::new(config.seed),
        distribution: config.distribution(),
        n: config.n,
    };
    let source: &dyn BatchSource = match config.mode {
        Mode::Dsp => &DspSource,
        Mode::Average | Mode::Robust => &random,
    };

    let mut history = csv::Writer::from_writer(File::create(out.join(HISTORY_FILE))?);
    history.write_record(HISTORY_COLUMNS)?;
    history.flush()?;
    let result = optimizers::run(&settings, &evaluator, source, pool, |r| {
        history.write_record(history_row(r))?;
        history.flush()?;
        Ok(())
    });
    drop(history);

    let output = match result {
        Ok(o) => o,
        Err(e) => {
            let iteration = match &e {
                Error::Aborted { iteration, .. }
                | Error::RetriesExhausted { iteration, .. }
                | Error::NonFiniteGradient { iteration } => Some(*iteration),
                _ => None,
            };
            let mut diag = File::create(out.join(DIAGNOSTICS_FILE))?;
            if let Some(k) = iteration {
                writeln!(diag, "failed_iteration: {k}")?;
            }
            writeln!(diag, "error: {e}")?;
            return Err(e);
        }
    };

    let design_file = DesignFile::new(&output.final_design, evaluator.inner(), &geometry);
    fs::write(out.join(DESIGN_FILE), serde_json::to_string_pretty(&design_file)? + "\n")?;
    let shape = evaluator.inner().shape(&output.final_design)?;
    let mut dat = BufWriter::new(File::create(out.join(SHAPE_FILE))?);
    shape.write_dat(&mut dat)?;
    dat.flush()?;

    Ok(CampaignOutcome {
        records: output.records,
        final_design: output.final_design,
        evaluations: evaluator.count(),
    })
}

/// Evaluator matching the geometry stored in a design file.
pub fn evaluator_for(file: &DesignFile, config: &CampaignConfig) -> Result<SurrogateEvaluator> {
    let ev = SurrogateEvaluator::new(&file.geometry(), config.catalog())?;
    if ev.n_free() != file.ffd_dy.len() {
        return Err(Error::Config(format!(
            "design has {} displacements but its lattice has {} free nodes",
            file.ffd_dy.len(),
            ev.n_free()
        )));
    }
    Ok(ev)
}
