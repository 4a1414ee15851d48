use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jparse_bench::{
    cmd_check_stability, cmd_gamma, cmd_run, render_run_table, render_stability, CliError, Format, RunSpec,
};
use jparse_core::resolvers::ResolverConfig;

#[derive(Parser)]
#[command(name = "jparse-bench", version, about = "Run resolver comparisons and controller checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario once per resolver and write logs plus a summary JSON.
    Run {
        /// Builtin scenario name or scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Resolver as `name:key=value,...`, repeatable. Names: pinv,
        /// dls (lambda), adls (lambda0, w0), edls (sigma_minus, sigma_plus,
        /// beta), jparse (gamma, a). Example: `jparse:gamma=0.1`.
        #[arg(long = "resolver", value_parser = parse_resolver)]
        resolvers: Vec<ResolverConfig>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also write the resolved scenario JSON here.
        #[arg(long)]
        dump_scenario: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a uniform gain against both discrete stability bounds. Exits 0
    /// iff the simple bound k*dt <= 2 holds.
    CheckStability {
        #[arg(long)]
        k: f64,
        /// Task dimension.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        json: bool,
    },
    /// Smallest threshold that keeps joint speeds under `qdot_max` for task
    /// speeds up to `v_max`.
    Gamma {
        #[arg(long)]
        v_max: f64,
        #[arg(long)]
        qdot_max: f64,
        /// Builtin model or model file used for the sigma_max floor;
        /// defaults to a floor of 1.
        #[arg(long)]
        model: Option<String>,
    },
}

fn parse_resolver(s: &str) -> Result<ResolverConfig, String> {
    s.parse().map_err(|e: jparse_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            resolvers,
            out,
            format,
            dump_scenario,
            seed,
        } => {
            let outcome = cmd_run(&RunSpec {
                scenario,
                resolvers,
                out,
                format,
                dump_scenario,
                seed,
            })?;
            print!("{}", render_run_table(&outcome));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::CheckStability { k, m, dt, json } => {
            let r = cmd_check_stability(k, m, dt)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            } else {
                print!("{}", render_stability(&r, m, dt));
            }
            Ok(if r.passes_simple { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Gamma { v_max, qdot_max, model } => {
            let g = cmd_gamma(v_max, qdot_max, model.as_deref())?;
            let source = g.model.as_deref().unwrap_or("default");
            println!("gamma >= {} (sigma_max floor {} from {source})", g.gamma, g.sigma_max_floor);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
