use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use badac::config::{Algorithm, ExperimentConfig, ExperimentKind, Scale};
use badac::engine::rank_anomalies;
use badac::error::{BadacError, Result};
use badac::harness::{
    class_models, compute_metrics, load_dataset, run_experiment, save_dataset, save_metadata, timing_report,
    MetricsReport, RunOptions,
};
use badac::simulators::generate_dataset;

#[derive(Parser)]
#[command(name = "badac", version, about = "Bayesian anomaly detection and classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write train.csv, test.csv and metadata.json.
    Simulate(Common),
    /// Run an experiment and write the report, instance tables and plot data.
    Run(Common),
    /// Recompute summary metrics from the instance tables of a finished run.
    Metrics {
        /// Directory holding report.json and the instance tables.
        #[arg(long, default_value = "badac-out")]
        out: PathBuf,
    },
    /// Rank test instances from most to least anomalous.
    Rank {
        #[command(flatten)]
        common: Common,
        /// Directory with train.csv and test.csv from `simulate`; simulates
        /// from the config when absent.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Report wall-clock time per algorithm.
    Timing(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment kind when no config file is given.
    #[arg(long, default_value = "gaussian", value_parser = parse_kind)]
    kind: ExperimentKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "badac-out")]
    out: PathBuf,
    /// Sets both train and test counts: desk = 2000, paper = 15000.
    #[arg(long)]
    scale: Option<Scale>,
    /// Comma-separated list of badac, badac_template, knn.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown experiment kind `{s}`"))
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(self.kind),
        };
        if let Some(scale) = self.scale {
            cfg = cfg.with_scale(scale);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(algs) = &self.algorithms {
            cfg.algorithms = algs.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { threads: self.threads }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "skipped".into(), |x| format!("{x:.4}"))
}

fn print_summary(report: &MetricsReport) {
    println!(
        "{} experiment, seed {}, {} train / {} test ({} outliers)",
        report.config.kind, report.config.seed, report.config.n_train, report.n_test, report.n_outliers
    );
    println!("{:<16}{:>10}{:>10}{:>10}{:>10}{:>12}", "algorithm", "AUC", "RWS", "MCC", "accuracy", "seconds");
    for r in &report.results {
        let m = &r.metrics;
        println!(
            "{:<16}{:>10}{:>10}{:>10.4}{:>10}{:>12.3}",
            r.algorithm.as_str(),
            fmt_opt(m.auc),
            fmt_opt(m.rws),
            m.mcc,
            fmt_opt(m.accuracy),
            r.timing.total_seconds
        );
    }
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let data = generate_dataset(&cfg)?;
    std::fs::create_dir_all(&common.out)?;
    save_dataset(&data.train, &common.out.join("train.csv"))?;
    save_dataset(&data.test, &common.out.join("test.csv"))?;
    save_metadata(&data.provenance, &common.out.join("metadata.json"))?;
    println!("wrote {} train and {} test instances to {}", data.train.len(), data.test.len(), common.out.display());
    Ok(())
}

fn run(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let run = run_experiment(&cfg, common.options())?;
    run.report.write_artifacts(&common.out)?;
    print_summary(&run.report);
    Ok(())
}

fn metrics(out: &Path) -> Result<()> {
    let report = MetricsReport::load(out)?;
    let mut mismatched = Vec::new();
    for r in &report.results {
        let table = r.table.as_ref().expect("load attaches tables");
        let again = compute_metrics(table, report.config.rws_n, report.config.calibration_bins)?;
        if again != r.metrics {
            mismatched.push(r.algorithm.as_str());
        }
        println!("{}", serde_json::to_string(&serde_json::json!({
            "algorithm": r.algorithm,
            "auc": again.auc,
            "rws": again.rws,
            "mcc": again.mcc,
            "accuracy": again.accuracy,
            "accuracy_macro": again.accuracy_macro,
        }))?);
    }
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(BadacError::Data(format!("recomputed metrics differ from the report for {}", mismatched.join(", "))))
    }
}

fn rank(common: &Common, data: Option<&Path>) -> Result<()> {
    let (train, test) = match data {
        Some(dir) => (load_dataset(&dir.join("train.csv"))?, load_dataset(&dir.join("test.csv"))?),
        None => {
            let d = generate_dataset(&common.config()?)?;
            (d.train, d.test)
        }
    };
    let models = class_models(&train)?;
    let (models, _) = badac::engine::normalize_priors(models, None)?;
    let ranked = rank_anomalies(test.instances(), &models)?;
    std::fs::create_dir_all(&common.out)?;
    let path = common.out.join("ranking.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record(["rank", "instance_id", "anomaly_score", "class_label"])?;
    for (rank, (i, score)) in ranked.iter().enumerate() {
        let label = test.instances()[*i].label().map(|l| l.to_string()).unwrap_or_default();
        w.write_record([(rank + 1).to_string(), i.to_string(), score.to_string(), label])?;
    }
    w.flush()?;
    println!("wrote {} ranked instances to {}", ranked.len(), path.display());
    Ok(())
}

fn timing(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let report = timing_report(&cfg, common.options())?;
    std::fs::create_dir_all(&common.out)?;
    write_json(&common.out.join("timing.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Run(c) => run(c),
        Command::Metrics { out } => metrics(out),
        Command::Rank { common, data } => rank(common, data.as_deref()),
        Command::Timing(c) => timing(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
