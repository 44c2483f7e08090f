//! Run configuration: command-line flags, an optional `key = value` file and
//! built-in defaults, merged in that order of precedence.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use lindblad_atom::params::uniform_grid;
use lindblad_atom::{GeneratorKind, SimParams};

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ShortTime,
    LongTime,
    Benchmark,
    Validity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ShortTime => "short_time",
            Experiment::LongTime => "long_time",
            Experiment::Benchmark => "benchmark",
            Experiment::Validity => "validity",
        }
    }

    /// Default `(t_max, samples)`.
    fn default_grid(self) -> (f64, usize) {
        match self {
            Experiment::ShortTime => (2.0, 401),
            Experiment::LongTime | Experiment::Benchmark | Experiment::Validity => (8.0, 801),
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Experiment::ShortTime, Experiment::LongTime, Experiment::Benchmark, Experiment::Validity]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment '{s}' (short_time, long_time, benchmark, validity)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (csv, json)")),
        }
    }
}

/// One equation or all five.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationChoice {
    One(GeneratorKind),
    All,
}

impl EquationChoice {
    pub fn kinds(self) -> Vec<GeneratorKind> {
        match self {
            EquationChoice::One(k) => vec![k],
            EquationChoice::All => GeneratorKind::ALL.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EquationChoice::One(k) => k.name(),
            EquationChoice::All => "all",
        }
    }
}

impl FromStr for EquationChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "all" {
            return Ok(EquationChoice::All);
        }
        s.parse::<GeneratorKind>()
            .map(EquationChoice::One)
            .map_err(|_| format!("unknown equation '{s}' (full, standard, sophisticated, secular, dressed, all)"))
    }
}

/// Command-line flags. Every field is optional so that unset flags fall
/// through to the config file and then to the defaults.
#[derive(Debug, Clone, Default, Parser)]
#[command(name = "atom-me", version, about = "Integrate master equations for an atom in a far-detuned standing wave")]
pub struct Args {
    /// full, standard, sophisticated, secular, dressed or all [default: all]
    #[arg(long)]
    pub equation: Option<EquationChoice>,
    /// short_time, long_time, benchmark or validity [default: short_time]
    #[arg(long)]
    pub experiment: Option<Experiment>,
    /// Detuning δ [default: 1e4]
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Peak Rabi frequency [default: 2e3]
    #[arg(long, allow_negative_numbers = true)]
    pub omega_max: Option<f64>,
    /// Spontaneous emission rate [default: 200]
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Momentum cutoff in units of ħk [default: 25]
    #[arg(long, allow_negative_numbers = true)]
    pub n_max: Option<usize>,
    /// Final time [default: 2 for short_time, 8 otherwise]
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    /// Number of equally spaced samples including t = 0 [default: 401 or 801]
    #[arg(long, allow_negative_numbers = true)]
    pub samples: Option<usize>,
    /// Relative tolerance [default: 1e-8]
    #[arg(long, allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    /// Absolute tolerance [default: 1e-10]
    #[arg(long, allow_negative_numbers = true)]
    pub atol: Option<f64>,
    /// Output directory [default: results]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json [default: csv]
    #[arg(long)]
    pub format: Option<Format>,
    /// File of `key = value` lines using the long flag names as keys
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub equation: EquationChoice,
    pub experiment: Experiment,
    pub delta: f64,
    pub omega_max: f64,
    pub gamma: f64,
    pub n_max: usize,
    pub t_max: f64,
    pub samples: usize,
    pub rtol: f64,
    pub atol: f64,
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn params(&self) -> SimParams {
        SimParams {
            delta: self.delta,
            omega_max: self.omega_max,
            gamma: self.gamma,
            n_max: self.n_max,
            t_samples: uniform_grid(self.t_max, self.samples),
            rtol: self.rtol,
            atol: self.atol,
            ..SimParams::default()
        }
    }

    /// Every resolved value as `key = value` lines; readable back with `--config`.
    pub fn header(&self) -> String {
        let rows = [
            ("equation", self.equation.name().to_string()),
            ("experiment", self.experiment.name().to_string()),
            ("delta", format!("{:e}", self.delta)),
            ("omega-max", format!("{:e}", self.omega_max)),
            ("gamma", format!("{:e}", self.gamma)),
            ("n-max", self.n_max.to_string()),
            ("t-max", format!("{:e}", self.t_max)),
            ("samples", self.samples.to_string()),
            ("rtol", format!("{:e}", self.rtol)),
            ("atol", format!("{:e}", self.atol)),
            ("out", self.out.display().to_string()),
            ("format", self.format.extension().to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Reads a config file into the same optional fields the flags use.
pub fn read_config_file(path: &Path) -> Result<Args, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<Args, UsageError> {
    fn value<T: FromStr>(key: &str, raw: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        raw.parse::<T>()
            .map(Some)
            .map_err(|e| UsageError(format!("invalid value '{raw}' for '{key}' in config file: {e}")))
    }

    let mut args = Args::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(UsageError(format!("config line {}: expected 'key = value'", lineno + 1)));
        };
        let (key, raw) = (key.trim(), raw.trim());
        match key {
            "equation" => args.equation = value(key, raw)?,
            "experiment" => args.experiment = value(key, raw)?,
            "delta" => args.delta = value(key, raw)?,
            "omega-max" => args.omega_max = value(key, raw)?,
            "gamma" => args.gamma = value(key, raw)?,
            "n-max" => args.n_max = value(key, raw)?,
            "t-max" => args.t_max = value(key, raw)?,
            "samples" => args.samples = value(key, raw)?,
            "rtol" => args.rtol = value(key, raw)?,
            "atol" => args.atol = value(key, raw)?,
            "out" => args.out = Some(PathBuf::from(raw)),
            "format" => args.format = value(key, raw)?,
            _ => return Err(UsageError(format!("config line {}: unknown key '{key}'", lineno + 1))),
        }
    }
    Ok(args)
}

/// Merges flags over the config file over defaults and validates the result.
pub fn parse_config(args: Args) -> Result<RunConfig, UsageError> {
    let file = match &args.config {
        Some(path) => read_config_file(path)?,
        None => Args::default(),
    };
    let defaults = SimParams::default();
    let experiment = args.experiment.or(file.experiment).unwrap_or(Experiment::ShortTime);
    let (t_max, samples) = experiment.default_grid();
    let cfg = RunConfig {
        equation: args.equation.or(file.equation).unwrap_or(EquationChoice::All),
        experiment,
        delta: args.delta.or(file.delta).unwrap_or(defaults.delta),
        omega_max: args.omega_max.or(file.omega_max).unwrap_or(defaults.omega_max),
        gamma: args.gamma.or(file.gamma).unwrap_or(defaults.gamma),
        n_max: args.n_max.or(file.n_max).unwrap_or(defaults.n_max),
        t_max: args.t_max.or(file.t_max).unwrap_or(t_max),
        samples: args.samples.or(file.samples).unwrap_or(samples),
        rtol: args.rtol.or(file.rtol).unwrap_or(defaults.rtol),
        atol: args.atol.or(file.atol).unwrap_or(defaults.atol),
        out: args.out.or(file.out).unwrap_or_else(|| PathBuf::from("results")),
        format: args.format.or(file.format).unwrap_or(Format::Csv),
    };
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(UsageError(format!("--t-max must be positive, got {}", cfg.t_max)));
    }
    if cfg.samples < 2 {
        return Err(UsageError(format!("--samples must be at least 2, got {}", cfg.samples)));
    }
    if cfg.n_max < 1 {
        return Err(UsageError("--n-max must be at least 1".into()));
    }
    cfg.params().validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Result<RunConfig, UsageError> {
        let args = Args::try_parse_from(std::iter::once("atom-me").chain(argv.iter().copied())).unwrap();
        parse_config(args)
    }

    #[test]
    fn no_arguments_gives_defaults() {
        let cfg = parse(&[]).unwrap();
        assert_eq!(cfg.experiment, Experiment::ShortTime);
        assert_eq!(cfg.equation, EquationChoice::All);
        assert_eq!((cfg.delta, cfg.omega_max, cfg.gamma, cfg.n_max), (1e4, 2e3, 200.0, 25));
        assert_eq!((cfg.t_max, cfg.samples), (2.0, 401));
        assert_eq!(cfg.params().t_samples.len(), 401);
    }

    #[test]
    fn experiment_sets_grid_defaults() {
        let cfg = parse(&["--experiment", "long_time"]).unwrap();
        assert_eq!((cfg.t_max, cfg.samples), (8.0, 801));
        let cfg = parse(&["--experiment", "benchmark"]).unwrap();
        assert_eq!((cfg.t_max, cfg.samples), (8.0, 801));
        let cfg = parse(&["--experiment", "validity", "--t-max", "3"]).unwrap();
        assert_eq!((cfg.t_max, cfg.samples), (3.0, 801));
    }

    #[test]
    fn small_ladder() {
        let cfg = parse(&["--n-max", "2", "--equation", "standard"]).unwrap();
        assert_eq!(cfg.n_max, 2);
        assert_eq!(cfg.equation.kinds(), vec![GeneratorKind::StandardAdiabatic]);
    }

    #[test]
    fn regime_violations_are_usage_errors() {
        assert!(parse(&["--gamma", "-1"]).is_err());
        assert!(parse(&["--omega-max", "2e4"]).is_err());
        assert!(parse(&["--samples", "1"]).is_err());
        assert!(parse(&["--rtol", "0"]).is_err());
    }

    #[test]
    fn bad_tokens_rejected_by_the_parser() {
        let args = ["atom-me", "--equation", "exact"];
        assert!(Args::try_parse_from(args).is_err());
        assert!(Args::try_parse_from(["atom-me", "--delta", "ten"]).is_err());
    }

    #[test]
    fn config_text_and_precedence() {
        let file = parse_config_text("# comment\ndelta = 2e4\n gamma=100 \nexperiment = benchmark\n").unwrap();
        assert_eq!(file.delta, Some(2e4));
        assert_eq!(file.gamma, Some(100.0));
        let args = Args { gamma: Some(150.0), ..Args::default() };
        let merged = Args { delta: args.delta.or(file.delta), gamma: args.gamma.or(file.gamma), ..Args::default() };
        assert_eq!((merged.delta, merged.gamma), (Some(2e4), Some(150.0)));
        assert!(parse_config_text("delta 5").is_err());
        assert!(parse_config_text("speed = 5").is_err());
        let err = parse_config_text("n-max = many").unwrap_err();
        assert!(err.0.contains("n-max"));
    }

    #[test]
    fn header_round_trips() {
        let cfg = parse(&["--n-max", "3", "--delta", "5e3", "--format", "json"]).unwrap();
        let back = parse_config_text(&cfg.header()).unwrap();
        assert_eq!(parse_config(back).unwrap(), cfg);
    }
}
