use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use carbonsched::registry::{builtin, load_pool, BuiltinPool, ModelPool};
use carbonsched::selector::{BoundsWindow, MappingDirection};
use carbonsched::simulator::{self, PolicySpec, SimError, SimulationConfig, SimulationReport, HEURISTIC};
use carbonsched::traces::{load_carbon_feed_json, load_carbon_trace, load_request_trace, CarbonTrace, GapPolicy, RequestTrace};
use serde::Deserialize;

use crate::args::{ReportFormat, SimulateArgs};
use crate::format::sig4;
use crate::CliError;

/// `simulate` settings read from a TOML file. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    carbon: Option<PathBuf>,
    requests: Option<PathBuf>,
    pool: Option<PathBuf>,
    pool_builtin: Option<String>,
    mapping: Option<String>,
    window: Option<toml::Value>,
    baseline: Option<String>,
    #[serde(default)]
    fixed: Vec<String>,
    gap: Option<String>,
    out: Option<PathBuf>,
    format: Option<ReportFormat>,
}

impl SimulateFile {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::config)?;
        let mut file: SimulateFile =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display())).map_err(CliError::config)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut file.carbon, &mut file.requests, &mut file.pool, &mut file.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }
}

/// Flags override file values.
fn merge(mut args: SimulateArgs) -> Result<SimulateArgs, CliError> {
    let Some(path) = args.config.clone() else { return Ok(args) };
    let file = SimulateFile::load(&path)?;
    let window = match file.window {
        None => None,
        Some(toml::Value::String(s)) => Some(s),
        Some(toml::Value::Integer(h)) => Some(h.to_string()),
        Some(other) => return Err(CliError::config(anyhow!("window: expected `whole` or hours, found {other}"))),
    };
    if args.pool.is_none() && args.pool_builtin.is_none() {
        args.pool = file.pool;
        args.pool_builtin = file.pool_builtin;
    }
    args.carbon = args.carbon.or(file.carbon);
    args.requests = args.requests.or(file.requests);
    args.mapping = args.mapping.or(file.mapping);
    args.window = args.window.or(window);
    args.baseline = args.baseline.or(file.baseline);
    if args.fixed.is_empty() {
        args.fixed = file.fixed;
    }
    args.gap = args.gap.or(file.gap);
    args.out = args.out.or(file.out);
    args.format = args.format.or(file.format);
    Ok(args)
}

pub fn parse_window(s: &str) -> Result<BoundsWindow, CliError> {
    match s {
        "whole" | "whole_trace" => Ok(BoundsWindow::WholeTrace),
        hours => {
            let h: u32 = hours
                .trim_end_matches('h')
                .parse()
                .map_err(|_| CliError::config(anyhow!("window `{s}`: expected `whole` or a number of hours")))?;
            BoundsWindow::trailing(h).map_err(|e| CliError::config(anyhow!("window `{s}`: {e}")))
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::data)
}

pub fn load_pool_arg(path: Option<&Path>, name: Option<&str>) -> Result<(ModelPool, String), CliError> {
    match (path, name) {
        (Some(path), _) => {
            let pool = load_pool(&read(path)?).with_context(|| path.display().to_string()).map_err(CliError::data)?;
            Ok((pool, path.display().to_string()))
        }
        (None, name) => {
            let name = name.unwrap_or("resnet");
            let which: BuiltinPool = name.parse().map_err(|e: String| CliError::config(anyhow!(e)))?;
            Ok((builtin(which), format!("builtin:{name}")))
        }
    }
}

pub fn load_carbon(path: &Path) -> Result<CarbonTrace, CliError> {
    let text = read(path)?;
    let is_json = matches!(path.extension().and_then(|e| e.to_str()), Some("json" | "jsonl"));
    let trace = if is_json { load_carbon_feed_json(&text) } else { load_carbon_trace(&text) };
    trace.with_context(|| path.display().to_string()).map_err(CliError::data)
}

pub fn load_requests(path: &Path) -> Result<RequestTrace, CliError> {
    load_request_trace(&read(path)?).with_context(|| path.display().to_string()).map_err(CliError::data)
}

fn build_config(args: &SimulateArgs) -> Result<SimulationConfig, CliError> {
    let (pool, source) = load_pool_arg(args.pool.as_deref(), args.pool_builtin.as_deref())?;
    let mut config = SimulationConfig::with_defaults(pool, source);
    if let Some(m) = &args.mapping {
        config.mapping = m.parse::<MappingDirection>().map_err(|e| CliError::config(anyhow!(e)))?;
    }
    if let Some(w) = &args.window {
        config.window = parse_window(w)?;
    }
    if let Some(g) = &args.gap {
        config.gap_policy = g.parse::<GapPolicy>().map_err(|e| CliError::config(anyhow!(e)))?;
    }
    if !args.fixed.is_empty() {
        config.policies = std::iter::once(PolicySpec::Heuristic).chain(args.fixed.iter().cloned().map(PolicySpec::Fixed)).collect();
    }
    if let Some(b) = &args.baseline {
        config.baseline = b.clone();
    }
    if !config.policies.iter().any(|p| p.name() == config.baseline) && config.baseline != HEURISTIC {
        config.policies.push(PolicySpec::Fixed(config.baseline.clone()));
    }
    for p in &config.policies {
        if let PolicySpec::Fixed(name) = p {
            if config.pool.get(name).is_none() {
                return Err(CliError::config(anyhow!("fixed policy `{name}` is not in pool {}", config.pool_source)));
            }
        }
    }
    Ok(config)
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Align(_) | SimError::Emissions(_) => CliError::data(e),
        _ => CliError::config(e),
    }
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let args = merge(args)?;
    let config = build_config(&args)?;
    let carbon_path = args.carbon.as_deref().ok_or_else(|| CliError::config(anyhow!("--carbon is required")))?;
    let requests_path = args.requests.as_deref().ok_or_else(|| CliError::config(anyhow!("--requests is required")))?;
    let carbon = load_carbon(carbon_path)?;
    let requests = load_requests(requests_path)?;

    let report = simulator::run(&config, &carbon, &requests).map_err(sim_error)?;
    let format = args.format.unwrap_or(ReportFormat::Json);
    let out = args.out.clone().unwrap_or_else(|| match format {
        ReportFormat::Json => PathBuf::from("report.json"),
        ReportFormat::Csv => PathBuf::from("report.csv"),
    });
    let body = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    };
    fs::write(&out, body).with_context(|| format!("writing {}", out.display())).map_err(CliError::data)?;
    print!("{}", summary_table(&report));
    println!("report: {}", out.display());
    Ok(())
}

/// Human-readable overview; figures are rounded and the report file holds
/// the exact values.
pub fn summary_table(report: &SimulationReport) -> String {
    let baseline = &report.config.baseline;
    let mut out = format!(
        "{} aligned steps, mapping {}, window {}, baseline {baseline}\n",
        report.steps, report.config.mapping, report.config.window
    );
    out.push_str(&format!(
        "{:<12} {:>12} {:>12} {:>14} {:>12}\n",
        "policy", "requests", "carbon_g", "error_pct", "cee"
    ));
    for s in &report.summaries {
        let cee = report
            .comparisons
            .iter()
            .find(|c| c.candidate == s.policy)
            .map(|c| c.cee.map_or_else(|| "undefined".to_string(), sig4))
            .unwrap_or_else(|| "-".to_string());
        out.push_str(&format!(
            "{:<12} {:>12} {:>12} {:>14} {:>12}\n",
            s.policy,
            s.total_requests,
            sig4(s.total_carbon_g),
            sig4(s.blended_error_pct),
            cee
        ));
    }
    out.push_str("(values rounded to 4 significant digits; the report file is authoritative)\n");
    out
}
