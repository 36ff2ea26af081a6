//! `ucmec`: sweep runner, scenario replay and config checker.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ucmec::baselines::{run_scheme, SchemeId};
use ucmec::config::Config;
use ucmec::experiment::{emit_plots, load_scenario, run_plan, ExperimentPlan, SweepAxis};
use ucmec::scenario::generate_scenario;

#[derive(Parser)]
#[command(name = "ucmec", version, about = "UC-MEC energy optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme on every seed and sweep value, then write CSV and plot files.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// num_users, num_aps, block_size (bits) or penalty_q.
        #[arg(long)]
        sweep: SweepAxis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "PROPOSED,SO,BCDO,OO,RO")]
        schemes: Vec<SchemeId>,
        /// Number of seeds, starting at --first-seed.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run schemes on a scenario dump written by `run`.
    Replay {
        #[arg(long)]
        scenario: PathBuf,
        /// Optional config whose [admm] section is used.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "PROPOSED")]
        schemes: Vec<SchemeId>,
        /// Also print the per-pair evaluation table.
        #[arg(long)]
        detail: bool,
    },
    /// Parse and check a config file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn threads() -> Result<Option<usize>, String> {
    match std::env::var("UCMEC_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("UCMEC_THREADS must be a positive integer, got `{v}`")),
        },
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            config,
            sweep,
            mut values,
            schemes,
            seeds,
            first_seed,
            out,
        } => {
            values.sort_by(f64::total_cmp);
            let plan = ExperimentPlan {
                config_path: config,
                axis: sweep,
                values,
                schemes,
                seeds: (first_seed..first_seed + seeds).collect(),
                out_dir: out,
                threads: threads()?,
            };
            let report = run_plan(&plan).map_err(|e| e.to_string())?;
            let plots = emit_plots(&plan.out_dir).map_err(|e| e.to_string())?;
            for a in &report.aggregate {
                println!(
                    "{:<8} {}={:<10} runs={:<3} late={:<3} errors={:<3} D^a={:.4e} s  E^a={:.4e} J",
                    a.scheme, plan.axis, a.value, a.runs, a.late, a.errors, a.mean[2], a.mean[5]
                );
            }
            println!(
                "wrote {} files to {}",
                report.files.len() + plots.len(),
                plan.out_dir.display()
            );
            for r in report.rows.iter().filter(|r| r.status.is_error()) {
                eprintln!("{} {}={} seed {}: {}", r.scheme, plan.axis, r.value, r.seed, r.status.token());
            }
            Ok(if report.errors() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Replay {
            scenario,
            config,
            schemes,
            detail,
        } => {
            let s = load_scenario(&scenario).map_err(|e| e.to_string())?;
            let admm = match config {
                Some(p) => Config::from_path(&p).map_err(|e| e.to_string())?.admm,
                None => Config::default().admm,
            };
            let mut failed = false;
            for id in schemes {
                match run_scheme(id, &s, &admm) {
                    Ok(o) => {
                        let e = &o.evaluation;
                        println!(
                            "{id}: D^o={:.6e} D^c={:.6e} D^a={:.6e} E^o={:.6e} E^c={:.6e} E^a={:.6e} iterations={}{}",
                            e.delay.mean_offload(),
                            e.delay.consensus,
                            e.delay.total(),
                            e.energy.offloading(),
                            e.energy.consensus_total(),
                            e.energy.total,
                            o.iterations,
                            if o.feasible { "" } else { " late" }
                        );
                        if detail {
                            print!("{}", e.to_csv());
                        }
                    }
                    Err(e) => {
                        failed = true;
                        eprintln!("{id}: {e}");
                    }
                }
            }
            Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Validate { config } => {
            let c = Config::from_path(&config).map_err(|e| e.to_string())?;
            c.system.validate_consensus().map_err(|e| e.to_string())?;
            generate_scenario(&c.system, c.system.rng_seed).map_err(|e| e.to_string())?;
            println!(
                "ok: M={} N={} X={} L^b={} bits, q={}",
                c.system.num_aps, c.system.num_users, c.system.antennas_per_ap, c.system.block_size, c.admm.penalty_q
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
