use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hypersac::harness::{
    emit_ablation, emit_metrics, run_ablation, run_random_search, run_sac_hpo, RunConfig, RunReport, Variant,
};
use hypersac::nn::gradcheck::{run_suite, GradCheckConfig};
use hypersac::objectives::ObjectiveSpec;
use hypersac::Error;

const SEED_ENV: &str = "HYPERSAC_SEED";

#[derive(Parser)]
#[command(name = "hypersac", version, about = "Hyper-parameter optimization with soft actor-critic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tune with the SAC agent.
    Optimize(RunArgs),
    /// Uniform random search with the same evaluation budget.
    RandomSearch(RunArgs),
    /// Run every configured variant on every seed.
    Ablate(RunArgs),
    /// Check analytic gradients against finite differences.
    GradCheck,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// sphere, rastrigin-like, synthetic-regression,
    /// synthetic-classification, csv:PATH or csv-binary:PATH.
    #[arg(long)]
    objective: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    /// File values, then the seed variable, then flags.
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{raw}`")))?;
            cfg.seeds = vec![seed];
        }
        if let Some(v) = &self.variant {
            cfg.variant = v.parse()?;
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(o) = &self.objective {
            cfg.objective = o.parse::<ObjectiveSpec>()?;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(r: &RunReport) {
    let best = r.best_loss.map_or("-".to_string(), |b| format!("{b:.6}"));
    println!(
        "{} seed {}: best loss {best}, final avg reward {:.4}, evaluations {}",
        r.label,
        r.seed,
        r.final_avg_reward().unwrap_or(0.0),
        r.evaluations
    );
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Optimize(args) => {
            let cfg = args.resolve()?;
            let reports = cfg
                .seeds
                .iter()
                .map(|&s| run_sac_hpo(&cfg, cfg.variant, s))
                .collect::<Result<Vec<_>, _>>()?;
            reports.iter().for_each(print_report);
            emit_metrics(&reports, &cfg.output_dir)?;
        }
        Command::RandomSearch(args) => {
            let cfg = args.resolve()?;
            let reports = cfg
                .seeds
                .iter()
                .map(|&s| run_random_search(&cfg, s))
                .collect::<Result<Vec<_>, _>>()?;
            reports.iter().for_each(print_report);
            emit_metrics(&reports, &cfg.output_dir)?;
        }
        Command::Ablate(args) => {
            let mut cfg = args.resolve()?;
            if let Some(v) = &args.variant {
                // A single --variant is compared against plain SAC.
                let v: Variant = v.parse()?;
                cfg.ablation_variants = vec![v, Variant::Base];
            }
            let report = run_ablation(&cfg)?;
            report.runs.iter().for_each(print_report);
            emit_ablation(&report, &cfg.output_dir)?;
        }
        Command::GradCheck => {
            let report = run_suite(&GradCheckConfig::default())?;
            for c in &report.cases {
                println!(
                    "{:<28} {} checked {:>5}, kinks skipped {:>3}, max rel error {:.2e}",
                    c.name,
                    if c.passed() { "ok  " } else { "FAIL" },
                    c.checked,
                    c.skipped_kinks,
                    c.max_rel_error
                );
            }
            println!("{:.1}s", report.seconds);
            if !report.passed() {
                let failed: Vec<&str> = report.cases.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
                return Err(Error::GradientCheck(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
