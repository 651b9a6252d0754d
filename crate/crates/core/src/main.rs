use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use robust_sgd::harness::campaign::{evaluator_for, DESIGN_FILE};
use robust_sgd::harness::compare::{render_table, write_comparison_csv, COMPARISON_FILE};
use robust_sgd::harness::study::{
    read_summary_csv, write_study_csv, write_summary_csv, STUDY_FILE, SUMMARY_FILE,
};
use robust_sgd::harness::{
    compare_designs, exit_code, parameter_space_study, run_campaign, worker_pool, CampaignConfig,
    DesignFile, Overrides,
};
use robust_sgd::optimizers::Mode;
use robust_sgd::{Error, Result};

#[derive(Parser)]
#[command(name = "robust-sgd", version, about = "Stochastic-gradient robust airfoil design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization campaign
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Evaluate saved designs on a common set of random inputs
    Study {
        /// design.json files or campaign output directories
        #[arg(required = true)]
        designs: Vec<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// One label per design; defaults to the campaign directory name
        #[arg(long = "label")]
        labels: Vec<String>,
        #[arg(long)]
        study_samples: Option<usize>,
        #[arg(long)]
        study_seed: Option<u64>,
    },
    /// Build the comparison table from a study summary
    Compare {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<CampaignConfig> {
    match path {
        Some(p) => CampaignConfig::load(p),
        None => Ok(CampaignConfig::default()),
    }
}

fn design_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(DESIGN_FILE)
    } else {
        p.to_path_buf()
    }
}

fn default_label(p: &Path) -> String {
    let dir = if p.is_dir() { Some(p) } else { p.parent() };
    dir.and_then(|d| d.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn execute(cli: Cli) -> Result<()> {
    let pool = worker_pool()?;
    match cli.command {
        Command::Run { config, seed, out, mode, lambda, n, eta, iters } => {
            let mut cfg = load_config(config.as_deref())?;
            cfg.apply(&Overrides { seed, out_dir: out, mode, lambda, n, eta, iterations: iters });
            let outcome = run_campaign(&cfg, pool.as_ref())?;
            let last = outcome.records.last().expect("at least one iteration");
            println!(
                "{} iterations, {} evaluations; final mean c_d {:.4e}, mean c_l {:.4}, alpha {:.3} deg -> {}",
                outcome.records.len(),
                outcome.evaluations,
                last.mean_cd,
                last.mean_cl,
                outcome.final_design.alpha_deg,
                cfg.out_dir.display()
            );
        }
        Command::Study { designs, config, out, labels, study_samples, study_seed } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(m) = study_samples {
                cfg.study_samples = m;
            }
            if let Some(s) = study_seed {
                cfg.study_seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let cfg = cfg.resolve()?;
            if !labels.is_empty() && labels.len() != designs.len() {
                return Err(Error::Config(format!(
                    "{} labels given for {} designs",
                    labels.len(),
                    designs.len()
                )));
            }
            let files: Vec<DesignFile> =
                designs.iter().map(|p| DesignFile::load(&design_path(p))).collect::<Result<_>>()?;
            if files.iter().any(|f| f.geometry() != files[0].geometry()) {
                return Err(Error::Config("designs were built on different lattices".into()));
            }
            let evaluator = evaluator_for(&files[0], &cfg)?;
            let named: Vec<_> = files
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let label = labels.get(i).cloned().unwrap_or_else(|| default_label(&designs[i]));
                    (label, f.design())
                })
                .collect();
            let report = parameter_space_study(
                &evaluator,
                &named,
                &cfg.distribution(),
                cfg.study_seed,
                cfg.study_samples,
                pool.as_ref(),
            )?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            write_study_csv(&report, &cfg.out_dir.join(STUDY_FILE))?;
            write_summary_csv(&report.results, &cfg.out_dir.join(SUMMARY_FILE))?;
            for r in &report.results {
                match &r.stats {
                    Ok(s) => println!(
                        "{:<16} E[cd] {:.4e}  CV[cd] {:.4}  E[cl] {:.4}  margin {:.4}",
                        r.label, s.e_cd, s.cv_cd, s.e_cl, s.lift_margin
                    ),
                    Err(reason) => println!("{:<16} flagged: {reason}", r.label),
                }
            }
        }
        Command::Compare { summary, out } => {
            let results = read_summary_csv(&summary)?;
            let usable: Vec<_> =
                results.into_iter().filter_map(|r| r.stats.ok().map(|s| (r.label, s))).collect();
            let rows = compare_designs(&usable)?;
            print!("{}", render_table(&rows));
            let dir = out.unwrap_or_else(|| summary.parent().map(Path::to_path_buf).unwrap_or_default());
            std::fs::create_dir_all(&dir)?;
            write_comparison_csv(&rows, &dir.join(COMPARISON_FILE))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
