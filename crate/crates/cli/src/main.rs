//! `cellfree` — command-line front end for the cell-free mmWave massive
//! MIMO simulator.
//!
//! Subcommands:
//! - `drop`: run a single network drop with a verbose summary and optional
//!   per-link / expectation / trace dumps;
//! - `campaign`: run a Monte Carlo campaign, optionally sweeping one config
//!   key over a list of values, writing per-drop CSV, aggregate JSON and CDF
//!   CSV files;
//! - `validate`: run the built-in invariant suite.
//!
//! `CELLFREE_OUT_DIR` and `CELLFREE_THREADS` override the output directory
//! and parallelism; all other settings come from the config file and flags.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use cellfree_core::config::{parse_toml_literal, set_by_key_path};
use cellfree_core::harness::{
    run_campaign, run_drop_detailed, write_cdf_csv, write_drops_csv, write_expectations_csv,
    write_links_csv, write_trace_csv, SweepSpec,
};
use cellfree_core::parallel::Parallelism;
use cellfree_core::{SimConfig, SimError};

#[derive(Parser)]
#[command(
    name = "cellfree",
    version,
    about = "Cell-free mmWave massive MIMO system simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the campaign master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (env: CELLFREE_OUT_DIR).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parallelism: `serial`, `auto`, or a thread count
    /// (env: CELLFREE_THREADS).
    #[arg(long, default_value = "auto")]
    threads: String,
    /// Config overrides as `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one drop and print a verbose summary.
    Drop {
        #[command(flatten)]
        common: CommonArgs,
        /// Write per-link large-scale records to <out>/links.csv.
        #[arg(long)]
        dump_links: bool,
        /// Write the expectation matrices to <out>/expectations.csv.
        #[arg(long)]
        dump_expectations: bool,
    },
    /// Run a Monte Carlo campaign, optionally sweeping one config key.
    Campaign {
        #[command(flatten)]
        common: CommonArgs,
        /// Drops per sweep point (default: monte_carlo.drops from config).
        #[arg(long)]
        drops: Option<usize>,
        /// Config key to sweep, e.g. `network.ms_count`.
        #[arg(long)]
        sweep_key: Option<String>,
        /// Comma-separated sweep values, e.g. `10,20,30` or `rpa,brpa,dcpa`.
        #[arg(long)]
        sweep_values: Option<String>,
    },
    /// Run the built-in invariant suite.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<SimConfig, SimError> {
    let mut config = match &common.config {
        Some(path) => SimConfig::from_path(path)?,
        None => SimConfig::default(),
    };
    if !common.overrides.is_empty() {
        let mut tree = config.to_toml_value()?;
        for item in &common.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| SimError::Config(format!("override `{item}` is not KEY=VALUE")))?;
            set_by_key_path(&mut tree, key.trim(), parse_toml_literal(value.trim()))?;
        }
        config = SimConfig::from_toml_value(tree)?;
    }
    if let Some(seed) = common.seed {
        config.monte_carlo.seed = seed;
    }
    Ok(config)
}

fn resolve_parallelism(common: &CommonArgs) -> Result<Parallelism, SimError> {
    let spec = std::env::var("CELLFREE_THREADS").unwrap_or_else(|_| common.threads.clone());
    Parallelism::parse(&spec)
        .ok_or_else(|| SimError::Config(format!("cannot parse parallelism `{spec}`")))
}

fn resolve_out_dir(common: &CommonArgs) -> PathBuf {
    std::env::var("CELLFREE_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| common.out.clone())
}

fn cmd_drop(common: CommonArgs, dump_links: bool, dump_expectations: bool) -> Result<(), SimError> {
    let config = load_config(&common)?;
    let parallelism = resolve_parallelism(&common)?;
    let out_dir = resolve_out_dir(&common);
    std::fs::create_dir_all(&out_dir)?;

    let seed = config.monte_carlo.seed;
    let detail = run_drop_detailed(&config, 0, seed, parallelism)?;
    let r = &detail.result;
    println!("drop seed {seed}");
    match &r.failed {
        Some(reason) => println!("  FAILED: {reason}"),
        None => {
            println!(
                "  dl: min-rate {:>9.4} bit/s/Hz  status {:<10} iters {:>3}  fronthaul max {:.3}",
                r.dl_min_rate, r.dl_status, r.dl_iterations, r.dl_fronthaul_max
            );
            println!(
                "  ul: min-rate {:>9.4} bit/s/Hz  status {:<10} iters {:>3}  fronthaul max {:.3}",
                r.ul_min_rate, r.ul_status, r.ul_iterations, r.ul_fronthaul_max
            );
            println!("  pilot assignment: {}", r.pilot_assignment);
            println!("  discarded realizations: {}", r.discarded_realizations);
            println!("  elapsed: {:.1} ms", r.timing_ms);
        }
    }

    if let (Some(dl), Some(ul)) = (&detail.dl, &detail.ul) {
        let path = out_dir.join("trace.csv");
        write_trace_csv(dl, ul, std::fs::File::create(&path)?)?;
        println!("  wrote {}", path.display());
    }
    if dump_links {
        if let Some(ctx) = &detail.context {
            let path = out_dir.join("links.csv");
            write_links_csv(ctx, std::fs::File::create(&path)?)?;
            println!("  wrote {}", path.display());
        }
    }
    if dump_expectations {
        if let Some(exp) = &detail.expectations {
            let path = out_dir.join("expectations.csv");
            write_expectations_csv(exp, std::fs::File::create(&path)?)?;
            println!("  wrote {}", path.display());
        }
    }
    Ok(())
}

fn cmd_campaign(
    common: CommonArgs,
    drops: Option<usize>,
    sweep_key: Option<String>,
    sweep_values: Option<String>,
) -> Result<(), SimError> {
    let config = load_config(&common)?;
    let parallelism = resolve_parallelism(&common)?;
    let out_dir = resolve_out_dir(&common);
    std::fs::create_dir_all(&out_dir)?;

    let sweep = match (sweep_key, sweep_values) {
        (Some(key), Some(values)) => Some(SweepSpec {
            key,
            values: values
                .split(',')
                .map(|v| parse_toml_literal(v.trim()))
                .collect(),
        }),
        (None, None) => None,
        _ => {
            return Err(SimError::Config(
                "--sweep-key and --sweep-values must be given together".into(),
            ))
        }
    };

    let n_drops = drops.unwrap_or(config.monte_carlo.drops);
    let report = run_campaign(&config, sweep.as_ref(), n_drops, parallelism)?;

    for point in &report.points {
        let a = &point.aggregates;
        let label = if point.sweep_value.is_empty() {
            "base".to_string()
        } else {
            format!(
                "{}={}",
                report.sweep_key.as_deref().unwrap_or(""),
                point.sweep_value
            )
        };
        println!(
            "{label}: {} drops ({} failed) | dl {:.4} ± {:.4} (median {:.4}, 95%-likely {:.4}) | \
             ul {:.4} ± {:.4} (median {:.4}, 95%-likely {:.4})",
            a.completed + a.failed,
            a.failed,
            a.dl_mean,
            a.dl_std_err,
            a.dl_median,
            a.dl_likely95,
            a.ul_mean,
            a.ul_std_err,
            a.ul_median,
            a.ul_likely95,
        );
    }

    let drops_path = out_dir.join("drops.csv");
    write_drops_csv(&report, std::fs::File::create(&drops_path)?)?;
    let cdf_path = out_dir.join("cdf.csv");
    write_cdf_csv(&report, std::fs::File::create(&cdf_path)?)?;
    let json_path = out_dir.join("report.json");
    std::fs::write(&json_path, report.to_json_string()?)?;
    println!(
        "wrote {}, {}, {}",
        drops_path.display(),
        cdf_path.display(),
        json_path.display()
    );
    Ok(())
}

fn cmd_validate(common: CommonArgs) -> Result<bool, SimError> {
    let config = load_config(&common)?;
    let checks = cellfree_core::validate::run_all(&config);
    let mut all_ok = true;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<28} {}", c.name, c.detail);
        all_ok &= c.passed;
    }
    Ok(all_ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Drop {
            common,
            dump_links,
            dump_expectations,
        } => cmd_drop(common, dump_links, dump_expectations).map(|_| true),
        Command::Campaign {
            common,
            drops,
            sweep_key,
            sweep_values,
        } => cmd_campaign(common, drops, sweep_key, sweep_values).map(|_| true),
        Command::Validate { common } => cmd_validate(common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
