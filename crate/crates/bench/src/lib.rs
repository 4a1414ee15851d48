//! Library side of the `jparse-bench` binary: scenario runs with atomic
//! output, the discrete stability check and threshold selection.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use jparse_core::controller::{stability_report, ControllerGains, StabilityReport};
use jparse_core::kinematics::load_model;
use jparse_core::resolvers::{gamma_lower_bound, ResolverConfig};
use jparse_core::simulator::{
    builtin_scenario, run_scenario, summarize, table1_resolvers, LogRow, Scenario, SummaryStats, TrajectoryLog,
    BUILTIN_SCENARIOS,
};
use serde::{Deserialize, Serialize};

/// `sigma_max` floor used by the threshold bound when no model is given:
/// a unit revolute twist always contributes at least 1.
pub const DEFAULT_SIGMA_MAX_FLOOR: f64 = 1.0;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unusable input files. Exit code 2.
    Usage(anyhow::Error),
    /// A check did not pass or a run failed. Exit code 1.
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Failure(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    /// Builtin scenario name or path to a scenario JSON file.
    pub scenario: String,
    /// Empty means the scenario's own resolver, or the full comparison set
    /// for `table1_sweep`.
    pub resolvers: Vec<ResolverConfig>,
    pub out: PathBuf,
    pub format: Format,
    pub dump_scenario: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Log layout used by `--format json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct JsonLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolverSummary {
    pub resolver: String,
    pub file: String,
    pub summary: SummaryStats,
}

/// Contents of `<scenario>_summary.json`. Every number is recomputable
/// from the log files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub runs: Vec<ResolverSummary>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub summary_path: PathBuf,
    /// Peak `|q_dot|` over the speed bound, per run, when the resolver has one.
    pub speed_ratios: Vec<Option<f64>>,
}

pub fn load_scenario(name_or_path: &str) -> CliResult<Scenario> {
    if BUILTIN_SCENARIOS.contains(&name_or_path) {
        return builtin_scenario(name_or_path).map_err(|e| CliError::Usage(e.into()));
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(CliError::Usage(anyhow!(
            "`{name_or_path}` is neither a builtin scenario ({}) nor an existing file",
            BUILTIN_SCENARIOS.join(", ")
        )));
    }
    Scenario::load(path)
        .with_context(|| format!("loading scenario {}", path.display()))
        .map_err(CliError::Usage)
}

/// Resolver set for a run, in output order.
pub fn resolvers_for(spec: &RunSpec, scenario: &Scenario) -> CliResult<Vec<ResolverConfig>> {
    let list = if !spec.resolvers.is_empty() {
        spec.resolvers.clone()
    } else if scenario.name == "table1_sweep" {
        table1_resolvers()
    } else {
        vec![scenario.resolver]
    };
    for (i, r) in list.iter().enumerate() {
        r.validate().map_err(|e| CliError::Usage(anyhow!("resolver `{r}`: {e}")))?;
        if list[..i].contains(r) {
            return Err(CliError::Usage(anyhow!("resolver `{r}` given twice")));
        }
    }
    Ok(list)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn encode_log(log: &TrajectoryLog, format: Format) -> anyhow::Result<Vec<u8>> {
    Ok(match format {
        Format::Csv => log.to_csv_string()?.into_bytes(),
        Format::Json => serde_json::to_vec_pretty(&JsonLog {
            dt: log.dt,
            rows: log.rows.clone(),
        })?,
    })
}

pub fn decode_log(bytes: &[u8], format: Format) -> anyhow::Result<TrajectoryLog> {
    Ok(match format {
        Format::Csv => TrajectoryLog::from_csv(bytes)?,
        Format::Json => {
            let j: JsonLog = serde_json::from_slice(bytes)?;
            TrajectoryLog {
                dt: j.dt,
                rows: j.rows,
                max_speed_ratio: None,
            }
        }
    })
}

pub fn log_file_name(scenario: &str, resolver: &ResolverConfig, format: Format) -> String {
    format!("{scenario}_{}.{}", resolver.label(), format.extension())
}

pub fn cmd_run(spec: &RunSpec) -> CliResult<RunOutcome> {
    let mut scenario = load_scenario(&spec.scenario)?;
    if let Some(seed) = spec.seed {
        scenario.seed = seed;
    }
    let resolvers = resolvers_for(spec, &scenario)?;
    let model = load_model(&scenario.model).map_err(|e| CliError::Usage(anyhow!("model `{}`: {e}", scenario.model)))?;
    scenario
        .with_resolver(resolvers[0])
        .validate(&model)
        .map_err(|e| CliError::Usage(anyhow!("scenario `{}`: {e}", scenario.name)))?;

    fs::create_dir_all(&spec.out)
        .with_context(|| format!("creating output directory {}", spec.out.display()))
        .map_err(CliError::Failure)?;

    if let Some(path) = &spec.dump_scenario {
        let dumped = if resolvers.len() == 1 {
            scenario.with_resolver(resolvers[0])
        } else {
            scenario.clone()
        };
        let json = dumped.to_json_string().map_err(|e| CliError::Failure(e.into()))?;
        write_atomic(path, json.as_bytes()).map_err(CliError::Failure)?;
    }

    let results: Vec<anyhow::Result<(TrajectoryLog, SummaryStats)>> = std::thread::scope(|s| {
        let handles: Vec<_> = resolvers
            .iter()
            .map(|r| {
                let run = scenario.with_resolver(*r);
                s.spawn(move || -> anyhow::Result<(TrajectoryLog, SummaryStats)> {
                    let log = run_scenario(&run).with_context(|| format!("resolver `{}`", run.resolver))?;
                    let summary = summarize(&log).with_context(|| format!("resolver `{}`", run.resolver))?;
                    Ok((log, summary))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("resolver thread panicked"))))
            .collect()
    });

    let mut runs = Vec::with_capacity(resolvers.len());
    let mut speed_ratios = Vec::with_capacity(resolvers.len());
    for (r, res) in resolvers.iter().zip(results) {
        let (log, summary) = res.map_err(CliError::Failure)?;
        let file = log_file_name(&scenario.name, r, spec.format);
        let bytes = encode_log(&log, spec.format).map_err(CliError::Failure)?;
        write_atomic(&spec.out.join(&file), &bytes).map_err(CliError::Failure)?;
        speed_ratios.push(log.max_speed_ratio);
        runs.push(ResolverSummary {
            resolver: r.to_string(),
            file,
            summary,
        });
    }

    let summary = RunSummary {
        scenario: scenario.name.clone(),
        runs,
    };
    let summary_path = spec.out.join(format!("{}_summary.json", scenario.name));
    let json = serde_json::to_vec_pretty(&summary).map_err(|e| CliError::Failure(e.into()))?;
    write_atomic(&summary_path, &json).map_err(CliError::Failure)?;
    Ok(RunOutcome {
        summary,
        summary_path,
        speed_ratios,
    })
}

pub fn render_run_table(outcome: &RunOutcome) -> String {
    let mut s = format!(
        "{:<44} {:>12} {:>12} {:>12} {:>10}\n",
        "resolver", "final_pos", "peak_|qd|", "min_inv_cond", "speed/bnd"
    );
    for (r, ratio) in outcome.summary.runs.iter().zip(&outcome.speed_ratios) {
        let ratio = ratio.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        s.push_str(&format!(
            "{:<44} {:>12.4e} {:>12.4} {:>12.4e} {:>10}\n",
            r.resolver, r.summary.final_pos_err, r.summary.peak_qdot_norm, r.summary.min_inv_cond, ratio
        ));
    }
    s.push_str(&format!("summary: {}\n", outcome.summary_path.display()));
    s
}

pub fn cmd_check_stability(k: f64, m: usize, dt: f64) -> CliResult<StabilityReport> {
    if !(k.is_finite() && k > 0.0 && dt.is_finite() && dt > 0.0) || m == 0 {
        return Err(CliError::Usage(anyhow!("k and dt must be positive numbers and m >= 1")));
    }
    Ok(stability_report(&ControllerGains::uniform(m, k, dt), m, None, None))
}

pub fn render_stability(r: &StabilityReport, m: usize, dt: f64) -> String {
    let verdict = |b: bool| if b { "PASS" } else { "FAIL" };
    format!(
        "k*dt = {}\nsimple bound:       k*dt <= {} -> {} (k <= {})\nconservative bound: k*dt <= 2/(m(m-1)+1) = {:.6} (m = {m}) -> {} (k <= {:.4})\n",
        r.k_dt,
        r.simple_bound,
        verdict(r.passes_simple),
        r.simple_bound / dt,
        r.conservative_bound,
        verdict(r.passes_conservative),
        r.conservative_bound / dt,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaBound {
    pub gamma: f64,
    pub sigma_max_floor: f64,
    /// Model the floor came from, or `None` for the default.
    pub model: Option<String>,
}

pub fn cmd_gamma(v_max: f64, qdot_max: f64, model: Option<&str>) -> CliResult<GammaBound> {
    let floor = match model {
        Some(m) => load_model(m)
            .and_then(|m| m.sigma_max_floor())
            .map_err(|e| CliError::Usage(anyhow!("model `{m}`: {e}")))?,
        None => DEFAULT_SIGMA_MAX_FLOOR,
    };
    let gamma = gamma_lower_bound(v_max, qdot_max, floor).map_err(|e| match e {
        jparse_core::Error::InfeasibleGamma { required } => CliError::Failure(anyhow!(
            "infeasible: the bound needs gamma >= {required}, but gamma must not exceed 1. \
             Raise qdot_max or lower v_max (sigma_max floor {floor})."
        )),
        other => CliError::Usage(other.into()),
    })?;
    Ok(GammaBound {
        gamma,
        sigma_max_floor: floor,
        model: model.map(String::from),
    })
}
