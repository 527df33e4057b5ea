//! Batch front end: run scenarios, enumerate attacks, audit traces and run
//! the bit-coordination experiments.
//!
//! Exit codes: 0 success, 1 usage or I/O failure, 2 scenario could not be
//! read or parsed, 3 simulation aborted, 4 attack space over the cap.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::json;
use smoney::coordination::{
    coordinate_bit, concealment_audit, security_sweep, stream_rng, CheatStrategy, CoordinationSetup, NoiseModel,
    SweepReport, DEFAULT_GRID,
};
use smoney::scenarios::{bundled, parse_scenario, Scenario};
use smoney::scheme::{token_value, Statement, ValidityStatus};
use smoney::sim::{attack, audit, run, IssuerStrategy, SimError, Trace, UserStrategy};
use smoney::SignallingModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_CAP: i32 = 4;

/// Version tag carried by every machine-format report.
pub const REPORT_SCHEMA: &str = "smoney-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Simulate honest agents and print the verdicts.
    Run,
    /// Enumerate user attacks and count spacelike double acceptances.
    Attack,
    /// Bit-coordination soundness, cheating and concealment experiments.
    Commit,
    /// Run honestly and audit the trace for duplication and issuer fraud.
    Audit,
    /// Summarise a scenario, or list the bundled ones.
    Describe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "smoney", version, about = "Token schemes on space-time networks")]
pub struct RunConfig {
    pub command: Command,
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replace the signalling model: flat, surface[:R] or interior[:R].
    #[arg(long)]
    pub model: Option<String>,
    /// Trace file for `run`; report copy for the other commands.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// States per bit for `commit`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Trials per grid point for `commit`.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Largest attack space `attack` will enumerate.
    #[arg(long, default_value_t = 1 << 20)]
    pub cap: u128,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            scenario: None,
            seed: 0,
            model: None,
            out: None,
            format: Format::Text,
            grid: Vec::new(),
            trials: 10_000,
            cap: 1 << 20,
        }
    }

    pub fn with_scenario(mut self, scenario: impl Into<String>) -> Self {
        self.scenario = Some(scenario.into());
        self
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = if matches!(e, SimError::CapExceeded { .. }) { EXIT_CAP } else { EXIT_ABORT };
        Failure::new(code, e.to_string())
    }
}

/// Runs one command, writing the report to `out` and diagnostics to `err`.
pub fn execute(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match config.command {
        Command::Run => cmd_run(config),
        Command::Attack => cmd_attack(config),
        Command::Commit => cmd_commit(config),
        Command::Audit => cmd_audit(config),
        Command::Describe => cmd_describe(config),
    };
    let report = match result {
        Ok(report) => report,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            return f.code;
        }
    };
    if let Err(e) = out.write_all(report.as_bytes()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_OTHER;
    }
    if config.command != Command::Run {
        if let Some(path) = &config.out {
            if let Err(e) = std::fs::write(path, &report) {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return EXIT_OTHER;
            }
        }
    }
    EXIT_OK
}

fn parse_model(text: &str) -> Result<SignallingModel, Failure> {
    let (name, radius) = match text.split_once(':') {
        Some((n, r)) => (n, r.parse::<f64>().map_err(|_| Failure::new(EXIT_OTHER, format!("bad radius in `{text}`")))?),
        None => (text, 1.0),
    };
    match name {
        "flat" => Ok(SignallingModel::Flat),
        "surface" | "sphere-surface" => Ok(SignallingModel::surface(radius)),
        "interior" | "sphere-interior" => Ok(SignallingModel::interior(radius)),
        _ => Err(Failure::new(EXIT_OTHER, format!("unknown model `{text}`"))),
    }
}

fn load_scenario(config: &RunConfig) -> Result<Scenario, Failure> {
    let Some(name) = &config.scenario else {
        return Err(Failure::new(EXIT_OTHER, "--scenario is required"));
    };
    let path = Path::new(name);
    let mut scenario = if !path.exists() {
        bundled()
            .into_iter()
            .find(|s| s.name == *name)
            .ok_or_else(|| Failure::new(EXIT_PARSE, format!("{name}: no such file or bundled scenario")))?
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_PARSE, format!("{name}: {e}")))?;
        parse_scenario(&text).map_err(|errors| {
            let lines: Vec<String> = errors.iter().map(|e| format!("{name}: {e}")).collect();
            Failure::new(EXIT_PARSE, lines.join("\n"))
        })?
    };
    if let Some(model) = &config.model {
        scenario.network = scenario.network.clone().with_model(parse_model(model)?);
        let problems = scenario.problems();
        if !problems.is_empty() {
            return Err(Failure::new(EXIT_PARSE, format!("{name} under model {model}: {}", problems.join("; "))));
        }
    }
    Ok(scenario)
}

/// `3.141593 (π)` for simple multiples of π, plain decimals otherwise.
fn format_time(t: f64) -> String {
    let quarters = t / PI * 4.0;
    let k = quarters.round();
    if t != 0.0 && (quarters - k).abs() < 1e-9 {
        let (num, den) = match k as i64 {
            q if q % 4 == 0 => (q / 4, 1),
            q if q % 2 == 0 => (q / 2, 2),
            q => (q, 4),
        };
        let num = if num == 1 { String::new() } else { num.to_string() };
        let den = if den == 1 { String::new() } else { format!("/{den}") };
        return format!("{t:.6} ({num}π{den})");
    }
    format!("{t:.6}")
}

fn status_name(status: ValidityStatus) -> &'static str {
    match status {
        ValidityStatus::Valid => "Valid",
        ValidityStatus::PotentialOnly => "PotentialOnly",
        ValidityStatus::Invalid => "Invalid",
    }
}

fn honest_trace(scenario: &Scenario, seed: u64) -> Result<Trace, Failure> {
    Ok(run(scenario, &UserStrategy::Honest, &IssuerStrategy::Honest, seed)?)
}

fn cmd_run(config: &RunConfig) -> Result<String, Failure> {
    let scenario = load_scenario(config)?;
    let trace = honest_trace(&scenario, config.seed)?;
    if let Some(path) = &config.out {
        std::fs::write(path, trace.to_jsonl()).map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))?;
    }
    let value = scenario.scheme.value_fn.map(|_| {
        let statements: Vec<Statement> =
            scenario.nature_inputs.iter().map(|(p, payload)| Statement::user(p.clone(), payload.clone())).collect();
        token_value(&scenario.scheme, &statements)
    });
    let value = value.transpose().map_err(|e| Failure::new(EXIT_ABORT, e.to_string()))?;

    let verdicts: Vec<_> = trace.verdicts().collect();
    let mut text = String::new();
    match config.format {
        Format::Text => {
            let _ = writeln!(text, "scenario {} ({}), seed {}", scenario.name, scenario.scheme.kind.name(), config.seed);
            for (event, status, accepted) in &verdicts {
                let outcome = if *accepted { "accepted" } else { "rejected" };
                let _ = writeln!(text, "{} at {}, t={}, {outcome}", status_name(*status), event.at, format_time(event.time));
            }
            if !verdicts.iter().any(|(_, s, _)| *s == ValidityStatus::Valid) {
                let _ = writeln!(text, "no valid presentation point");
            }
            if let Some(v) = value {
                let _ = writeln!(text, "token value {v}");
            }
        }
        Format::Machine => {
            let rows: Vec<_> = verdicts
                .iter()
                .map(|(e, s, a)| json!({ "at": e.at, "t": e.time, "status": s, "accepted": a }))
                .collect();
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": "run",
                "scenario": scenario.name,
                "seed": config.seed,
                "verdicts": rows,
                "token_value": value.map(|v| v.to_string()),
            });
            let _ = writeln!(text, "{report}");
        }
    }
    Ok(text)
}

fn cmd_attack(config: &RunConfig) -> Result<String, Failure> {
    let scenario = load_scenario(config)?;
    let report = attack(&scenario, config.cap, config.seed)?;
    let mut text = String::new();
    match config.format {
        Format::Text => {
            let _ = writeln!(text, "scenario {} ({})", report.scenario, report.scheme);
            let _ = writeln!(text, "{} violations / {} strategies", report.violations, report.strategies);
            let _ = writeln!(text, "{} strategies accepted somewhere", report.accepted_runs);
            if let Some((index, pairs)) = &report.first_violation {
                let pairs: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}+{b}")).collect();
                let _ = writeln!(text, "first violation: strategy {index}, accepted at {}", pairs.join(" "));
            }
        }
        Format::Machine => {
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": "attack",
                "scenario": report.scenario,
                "scheme": report.scheme,
                "strategies": report.strategies,
                "accepted_runs": report.accepted_runs,
                "violations": report.violations,
                "first_violation": report.first_violation,
            });
            let _ = writeln!(text, "{report}");
        }
    }
    Ok(text)
}

fn cmd_audit(config: &RunConfig) -> Result<String, Failure> {
    let scenario = load_scenario(config)?;
    let trace = honest_trace(&scenario, config.seed)?;
    let report = audit(&trace, &scenario)?;
    let mut text = String::new();
    match config.format {
        Format::Text => {
            let list = |ids: &[smoney::PointId]| {
                if ids.is_empty() {
                    "none".to_string()
                } else {
                    ids.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
                }
            };
            let _ = writeln!(text, "scenario {}, seed {}", scenario.name, config.seed);
            let _ = writeln!(text, "accepted at: {}", list(&report.accepted));
            let pairs: Vec<String> = report.duplicates.iter().map(|(a, b)| format!("{a}+{b}")).collect();
            let _ = writeln!(text, "spacelike double acceptances: {}", if pairs.is_empty() { "none".into() } else { pairs.join(" ") });
            let _ = writeln!(text, "issuer fraud: {}", if report.issuer_fraud { "yes" } else { "no" });
            let _ = writeln!(text, "consistency failures at: {}", list(&report.consistency_failures));
        }
        Format::Machine => {
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": "audit",
                "scenario": scenario.name,
                "seed": config.seed,
                "accepted": report.accepted,
                "duplicates": report.duplicates,
                "issuer_fraud": report.issuer_fraud,
                "consistency_failures": report.consistency_failures,
            });
            let _ = writeln!(text, "{report}");
        }
    }
    Ok(text)
}

#[derive(Serialize)]
struct HonestRow {
    n: usize,
    trials: u64,
    accepted: u64,
    rate: f64,
}

/// Noiseless honest coordinations per grid point.
const HONEST_TRIALS: u64 = 1000;

fn cmd_commit(config: &RunConfig) -> Result<String, Failure> {
    let grid: Vec<usize> = if config.grid.is_empty() { DEFAULT_GRID.to_vec() } else { config.grid.clone() };
    if grid.contains(&0) {
        return Err(Failure::new(EXIT_OTHER, "grid entries must be at least 1"));
    }
    let noise = NoiseModel::noiseless();
    let setup = CoordinationSetup::flat(2);
    let coordination = |e| Failure::new(EXIT_ABORT, format!("{e}"));

    let mut honest = Vec::new();
    let mut samples = Vec::new();
    for &n in &grid {
        let trials = HONEST_TRIALS.min(config.trials.max(1));
        let mut accepted = 0;
        for k in 0..trials {
            let bit = k % 2 == 1;
            let t = coordinate_bit(bit, n, &setup, &noise, &mut stream_rng(config.seed, 0xC0, (n as u64) << 32 | k))
                .map_err(coordination)?;
            accepted += t.accepted_everywhere() as u64;
            samples.push((bit, t.messages));
        }
        honest.push(HonestRow { n, trials, accepted, rate: accepted as f64 / trials as f64 });
    }
    let concealment = concealment_audit(&samples);

    let sweeps: Vec<SweepReport> = CheatStrategy::ALL
        .iter()
        .map(|&s| security_sweep(s, &grid, config.trials, config.seed, &noise))
        .collect::<Result<_, _>>()
        .map_err(coordination)?;

    let mut text = String::new();
    match config.format {
        Format::Text => {
            let _ = writeln!(text, "honest coordination (noiseless, {} unveil points, {} pair)", setup.unveil_points.len(), setup.pair_count());
            let _ = writeln!(text, "{:>4} {:>8} {:>10}", "N", "trials", "acceptance");
            for row in &honest {
                let _ = writeln!(text, "{:>4} {:>8} {:>10.6}", row.n, row.trials, row.rate);
            }
            let _ = writeln!(text, "concealment: {concealment:.6} bits before unveiling");
            for sweep in &sweeps {
                let _ = writeln!(text);
                let _ = writeln!(text, "strategy {}", sweep.strategy);
                let _ = writeln!(text, "{:>4} {:>10} {:>10} {:>12} {:>12} {:>12}", "N", "trials", "violations", "eps", "ci_low", "ci_high");
                for r in &sweep.rows {
                    let _ = writeln!(
                        text,
                        "{:>4} {:>10} {:>10} {:>12.4e} {:>12.4e} {:>12.4e}",
                        r.n, r.trials, r.violations, r.eps_hat, r.ci_low, r.ci_high
                    );
                }
                match (&sweep.fit, sweep.below_resolution) {
                    (_, true) => {
                        let _ = writeln!(text, "no violations observed: below resolution");
                    }
                    (Some(fit), _) => {
                        let _ = writeln!(text, "fit ln eps = {:.4} - {:.4} N, r2 {:.4}", fit.intercept, fit.rate, fit.r_squared);
                    }
                    (None, _) => {
                        let _ = writeln!(text, "too few nonzero estimates to fit");
                    }
                }
            }
        }
        Format::Machine => {
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": "commit",
                "seed": config.seed,
                "grid": grid,
                "trials": config.trials,
                "honest": honest,
                "concealment_bits": concealment,
                "sweeps": sweeps,
            });
            let _ = writeln!(text, "{report}");
        }
    }
    Ok(text)
}

fn cmd_describe(config: &RunConfig) -> Result<String, Failure> {
    let mut text = String::new();
    if config.scenario.is_none() {
        for s in bundled() {
            let _ = writeln!(text, "{:<18} {}", s.name, s.description);
        }
        return Ok(text);
    }
    let s = load_scenario(config)?;
    let net = &s.network;
    let causal = |e: smoney::CausalError| Failure::new(EXIT_ABORT, e.to_string());
    let spacelike: Vec<String> = net.spacelike_pairs().map_err(causal)?.iter().filter(|(a, b)| net.is_presentation(a.as_str()) && net.is_presentation(b.as_str())).map(|(a, b)| format!("{a}~{b}")).collect();
    match config.format {
        Format::Text => {
            let _ = writeln!(text, "{}: {}", s.name, s.description);
            let _ = writeln!(text, "model: {}", net.model().name());
            let _ = writeln!(text, "scheme: {} with {} predicate", s.scheme.kind.name(), s.scheme.predicate.name());
            for p in net.points() {
                let role = match (net.is_input(p.id.as_str()), net.is_presentation(p.id.as_str())) {
                    (true, true) => "input, presentation",
                    (true, false) => "input",
                    (false, true) => "presentation",
                    _ => "",
                };
                let _ = writeln!(text, "  {:<6} t={:<24} {role}", p.id, format_time(p.t));
            }
            let _ = writeln!(text, "spacelike presentation pairs: {}", if spacelike.is_empty() { "none".into() } else { spacelike.join(" ") });
            let _ = writeln!(text, "user inputs: {}", s.nature_inputs.len());
        }
        Format::Machine => {
            let points: Vec<_> = net.points().iter().map(|p| json!({ "id": p.id, "t": p.t })).collect();
            let report = json!({
                "schema": REPORT_SCHEMA,
                "command": "describe",
                "scenario": s.name,
                "model": net.model().name(),
                "kind": s.scheme.kind.name(),
                "predicate": s.scheme.predicate.name(),
                "points": points,
                "inputs": net.input_points(),
                "presentations": net.presentation_points(),
                "spacelike_presentations": spacelike,
            });
            let _ = writeln!(text, "{report}");
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_name_simple_multiples_of_pi() {
        assert_eq!(format_time(PI), "3.141593 (π)");
        assert_eq!(format_time(PI / 2.0), "1.570796 (π/2)");
        assert_eq!(format_time(1.5 * PI), "4.712389 (3π/2)");
        assert_eq!(format_time(0.0), "0.000000");
        assert_eq!(format_time(2.0), "2.000000");
    }

    #[test]
    fn models_parse_with_optional_radius() {
        assert_eq!(parse_model("surface:3").ok(), Some(SignallingModel::surface(3.0)));
        assert_eq!(parse_model("interior").ok(), Some(SignallingModel::interior(1.0)));
        assert!(parse_model("torus").is_err());
        assert!(parse_model("surface:x").is_err());
    }
}
