use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use roomaudit::assess::evaluate_scene;
use roomaudit::evaluate::{batch_evaluate, load_ground_truth, BatchConfig, DEFAULT_MATCH_RADIUS};
use roomaudit::perceive::{perceive, PerceptionConfig, ScanLog};
use roomaudit::report::{findings_csv, render_floorplan, SvgStyle};
use roomaudit::rulespec::{
    builtin_rule_pack, parse_rule_spec, serialize_rule_spec, validate_rule_set, Community, RuleSet, Severity,
};
use roomaudit::scene::{load_scene, save_scene};
use roomaudit::simulate::{simulate_with_config, NoiseCalibration, ScanConfig, ScanFactors, DEFAULT_FRAME_RATE};

const EXIT_FINDINGS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Audit indoor scenes for accessibility issues.
///
/// Exit status: 0 success, 1 findings present (assess), 2 input error,
/// 3 internal error.
#[derive(Parser, Debug)]
#[command(name = "roomaudit", version)]
struct Cli {
    /// JSON file with defaults for `calibration` (path), `match_radius`,
    /// `dedupe_radius` and `frame_rate`. Explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and check a rule file; prints diagnostics to stderr.
    Validate {
        /// Rule file in the JSON rule language.
        rules: PathBuf,
    },
    /// Evaluate a scene against the rules and write a findings report.
    Assess {
        /// Scene JSON file.
        scene: PathBuf,
        /// Rule file; defaults to the built-in pack.
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
        /// With --rules: `replace` uses only the file, `extend` adds its rules
        /// to the built-in pack, overriding rules with the same id.
        #[arg(long, value_enum, default_value_t = RulesMode::Replace)]
        rules_mode: RulesMode,
        /// Community to audit for; repeat for several. Defaults to all.
        #[arg(long = "community", value_name = "NAME")]
        communities: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; stdout when omitted.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Simulate a scan of a scene and write the scan log.
    Simulate {
        /// Ground-truth scene JSON file.
        scene: PathBuf,
        /// Comma-separated factor levels, e.g. `partial,messy,fast`. Omitted
        /// axes use well-lit, clean, medium.
        #[arg(long, default_value = "")]
        factors: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON calibration overrides merged over the shipped defaults.
        #[arg(long, value_name = "FILE")]
        calib: Option<PathBuf>,
        /// Camera frames per second.
        #[arg(long)]
        frame_rate: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Rebuild a scene from a scan log.
    Perceive {
        /// Scan log JSON file.
        scanlog: PathBuf,
        /// Merge radius in meters for duplicate detections.
        #[arg(long)]
        dedupe_radius: Option<f64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run seeded scans per condition and score them against ground truth.
    Evaluate {
        /// Ground-truth scene JSON file.
        scene: PathBuf,
        /// Annotated cases JSON file.
        ground_truth: PathBuf,
        /// Conditions file: a JSON array of factor objects, or one
        /// comma-separated condition per line. Defaults to the six study
        /// conditions.
        #[arg(long, value_name = "FILE")]
        conditions: Option<PathBuf>,
        /// Scans per condition.
        #[arg(long, default_value_t = 5)]
        scans: usize,
        /// Seed of the first scan of every condition.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON calibration overrides merged over the shipped defaults.
        #[arg(long, value_name = "FILE")]
        calib: Option<PathBuf>,
        /// Use the noise-free calibration instead of --calib.
        #[arg(long, conflicts_with = "calib")]
        perfect: bool,
        /// Largest distance in meters between a finding and its case.
        #[arg(long)]
        match_radius: Option<f64>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print the built-in rule pack in the JSON rule language.
    DumpRules {
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RulesMode {
    Replace,
    Extend,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    calibration: Option<PathBuf>,
    match_radius: Option<f64>,
    dedupe_radius: Option<f64>,
    frame_rate: Option<f64>,
}

/// An error plus the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait InputResult<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> InputResult<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: EXIT_INPUT, error: e.into() })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).input()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())).input(),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = read(path)?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid config", path.display())).input()
}

fn load_rules(path: &Path) -> Result<RuleSet, Failure> {
    let rs = parse_rule_spec(&read(path)?).with_context(|| path.display().to_string()).input()?;
    let diags = validate_rule_set(&rs);
    for d in &diags {
        eprintln!("{}: {d}", path.display());
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        return Err(Failure { code: EXIT_INPUT, error: anyhow!("{}: rule file has errors", path.display()) });
    }
    Ok(rs)
}

fn load_calibration(path: Option<&Path>) -> Result<NoiseCalibration, Failure> {
    match path {
        None => Ok(NoiseCalibration::default()),
        Some(p) => NoiseCalibration::from_json(&read(p)?).with_context(|| p.display().to_string()).input(),
    }
}

fn parse_communities(names: &[String]) -> Result<BTreeSet<Community>, Failure> {
    if names.is_empty() {
        return Ok(Community::all());
    }
    names
        .iter()
        .map(|n| Community::parse(n).ok_or_else(|| anyhow!("unknown community `{n}`")))
        .collect::<anyhow::Result<_>>()
        .input()
}

fn parse_conditions(text: &str) -> anyhow::Result<Vec<ScanFactors>> {
    let conditions: Vec<ScanFactors> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<ScanFactors>())
            .collect::<Result<_, _>>()?
    };
    if conditions.is_empty() {
        bail!("no conditions listed");
    }
    Ok(conditions)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Validate { rules } => {
            let text = read(&rules)?;
            let rs = parse_rule_spec(&text).with_context(|| rules.display().to_string()).input()?;
            let diags = validate_rule_set(&rs);
            for d in &diags {
                eprintln!("{}: {d}", rules.display());
            }
            if diags.iter().any(|d| d.severity == Severity::Error) {
                return Ok(EXIT_INPUT);
            }
            eprintln!("{}: {} rule(s) ok", rules.display(), rs.len());
            Ok(0)
        }
        Command::Assess { scene, rules, rules_mode, communities, format, out } => {
            let s = load_scene(&read(&scene)?).with_context(|| scene.display().to_string()).input()?;
            let rs = match (rules, rules_mode) {
                (None, _) => builtin_rule_pack(),
                (Some(p), RulesMode::Replace) => load_rules(&p)?,
                (Some(p), RulesMode::Extend) => builtin_rule_pack().extended_with(&load_rules(&p)?),
            };
            let selected = parse_communities(&communities)?;
            let a = evaluate_scene(&rs, &s, &selected);
            let text = match format {
                Format::Json => with_newline(a.to_json()),
                Format::Csv => findings_csv(&a),
                Format::Svg => render_floorplan(&s, &a, &SvgStyle::default()),
            };
            emit(out.as_deref(), &text)?;
            eprintln!("{} finding(s)", a.findings.len());
            Ok(if a.findings.is_empty() { 0 } else { EXIT_FINDINGS })
        }
        Command::Simulate { scene, factors, seed, calib, frame_rate, out } => {
            let s = load_scene(&read(&scene)?).with_context(|| scene.display().to_string()).input()?;
            let factors: ScanFactors = factors.parse().input()?;
            let calib_path = calib.or(cfg.calibration);
            let calibration = match calib_path {
                None => None,
                Some(p) => {
                    let v: serde_json::Value = serde_json::from_str(&read(&p)?)
                        .with_context(|| p.display().to_string())
                        .input()?;
                    Some(v)
                }
            };
            let sc = ScanConfig {
                factors,
                seed,
                frame_rate: frame_rate.or(cfg.frame_rate).unwrap_or(DEFAULT_FRAME_RATE),
                calibration,
            };
            let log = simulate_with_config(&s, &sc).input()?;
            emit(out.as_deref(), &with_newline(log.to_json()))?;
            Ok(0)
        }
        Command::Perceive { scanlog, dedupe_radius, out } => {
            let log = ScanLog::from_json(&read(&scanlog)?).with_context(|| scanlog.display().to_string()).input()?;
            let mut pc = PerceptionConfig::default();
            if let Some(r) = dedupe_radius.or(cfg.dedupe_radius) {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Failure { code: EXIT_INPUT, error: anyhow!("dedupe radius must be non-negative") });
                }
                pc.fusion.dedupe_radius = r;
            }
            let perceived = perceive(&log, &pc);
            emit(out.as_deref(), &with_newline(save_scene(&perceived)))?;
            Ok(0)
        }
        Command::Evaluate {
            scene,
            ground_truth,
            conditions,
            scans,
            seed,
            calib,
            perfect,
            match_radius,
            format,
            out,
        } => {
            let s = load_scene(&read(&scene)?).with_context(|| scene.display().to_string()).input()?;
            let gt = load_ground_truth(&read(&ground_truth)?)
                .with_context(|| ground_truth.display().to_string())
                .input()?;
            let conditions = match conditions {
                None => ScanFactors::study_conditions().to_vec(),
                Some(p) => parse_conditions(&read(&p)?).with_context(|| p.display().to_string()).input()?,
            };
            let calibration = if perfect {
                NoiseCalibration::perfect()
            } else {
                load_calibration(calib.or(cfg.calibration).as_deref())?
            };
            let mut bc = BatchConfig {
                scans_per_condition: scans,
                base_seed: seed,
                match_radius: match_radius.or(cfg.match_radius).unwrap_or(DEFAULT_MATCH_RADIUS),
                ..Default::default()
            };
            if let Some(r) = cfg.dedupe_radius {
                bc.perception.fusion.dedupe_radius = r;
            }
            let results = batch_evaluate(&s, &gt, &builtin_rule_pack(), &conditions, &calibration, &bc).input()?;
            let text = match format {
                TableFormat::Csv => results.to_csv(),
                TableFormat::Json => with_newline(results.to_json()),
            };
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::DumpRules { out } => {
            emit(out.as_deref(), &with_newline(serialize_rule_spec(&builtin_rule_pack())))?;
            Ok(0)
        }
    }
}

/// The error chain on one line, skipping causes already quoted by their
/// parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(f)) => {
            eprintln!("error: {}", describe(&f.error));
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
