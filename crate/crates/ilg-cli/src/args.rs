//! Command-line surface and configuration resolution.
//!
//! Precedence: explicit flags > key=value config file > built-in defaults.
//! The built-in defaults follow the experiment setup: Zarantonello step
//! weights 0.85 / 0.5 / 0.4 per experiment, kappa 1/2, vartheta 2,
//! Doerfler parameter 1/2, element cap 100000.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ilg::{Experiment, SchemeKind};

#[derive(Debug)]
pub enum ArgsError {
    Usage(clap::Error),
    Config(String),
}

impl fmt::Display for ArgsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgsError::Usage(e) => write!(f, "{e}"),
            ArgsError::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl std::error::Error for ArgsError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Smooth,
    Singular,
    #[value(name = "singular-increasing")]
    SingularIncreasing,
}

impl ExperimentArg {
    pub fn to_experiment(self) -> Experiment {
        match self {
            ExperimentArg::Smooth => Experiment::Smooth,
            ExperimentArg::Singular => Experiment::Singular,
            ExperimentArg::SingularIncreasing => Experiment::SingularIncreasing,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentArg::Smooth => "smooth",
            ExperimentArg::Singular => "singular",
            ExperimentArg::SingularIncreasing => "singular-increasing",
        }
    }

    /// Empirically near-optimal Zarantonello step weight per experiment.
    pub fn default_delta(self) -> f64 {
        match self {
            ExperimentArg::Smooth => 0.85,
            ExperimentArg::Singular => 0.5,
            ExperimentArg::SingularIncreasing => 0.4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Zarantonello,
    Kacanov,
    Newton,
}

impl SchemeArg {
    pub fn to_kind(self) -> SchemeKind {
        match self {
            SchemeArg::Zarantonello => SchemeKind::Zarantonello,
            SchemeArg::Kacanov => SchemeKind::Kacanov,
            SchemeArg::Newton => SchemeKind::Newton,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeArg::Zarantonello => "zarantonello",
            SchemeArg::Kacanov => "kacanov",
            SchemeArg::Newton => "newton",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Linear,
    Nonlinear,
}

impl EstimatorArg {
    pub fn to_choice(self) -> ilg::EstimatorChoice {
        match self {
            EstimatorArg::Linear => ilg::EstimatorChoice::Linear,
            EstimatorArg::Nonlinear => ilg::EstimatorChoice::Nonlinear,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorArg::Linear => "linear",
            EstimatorArg::Nonlinear => "nonlinear",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ilg",
    about = "Adaptive iteratively linearized FEM experiments on the L-shaped domain",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a single experiment and write CSV + SVG outputs.
    Run(RunArgs),
    /// Run the full experiment x scheme x estimator grid (18 runs).
    Matrix(MatrixArgs),
    /// Fast internal consistency checks.
    Selftest,
}

#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// Benchmark problem.
    #[arg(long, value_enum)]
    pub experiment: Option<ExperimentArg>,
    /// Linearization scheme.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// A posteriori estimator driving the adaptivity.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Zarantonello step weight, or initial Newton damping.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Newton energy-decrease threshold.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Newton damping correction factor.
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Estimator comparison factor of the interplay loop.
    #[arg(long)]
    pub vartheta: Option<f64>,
    /// Doerfler bulk parameter.
    #[arg(long)]
    pub theta_doerfler: Option<f64>,
    /// Stop when the element count exceeds this.
    #[arg(long)]
    pub max_elements: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reserved; the numerics are deterministic and ignore it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also dump the final mesh in plain-text format.
    #[arg(long, default_value_t = false)]
    pub dump_mesh: bool,
    /// Key=value file supplying defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct MatrixArgs {
    #[arg(long)]
    pub max_elements: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Fully resolved configuration of a single run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub experiment: ExperimentArg,
    pub scheme: SchemeArg,
    pub estimator: EstimatorArg,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub vartheta: f64,
    pub theta_doerfler: f64,
    pub max_elements: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub dump_mesh: bool,
}

impl RunSpec {
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}",
            self.experiment.name(),
            self.scheme.name(),
            self.estimator.name()
        )
    }
}

/// Parses an argv (without the binary name) into a resolved command.
pub fn parse_args<I, S>(argv: I) -> Result<ResolvedCommand, ArgsError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut full = vec!["ilg".to_string()];
    full.extend(argv.into_iter().map(Into::into));
    let cli = Cli::try_parse_from(full).map_err(ArgsError::Usage)?;
    resolve(cli.command)
}

#[derive(Debug)]
pub enum ResolvedCommand {
    Run(RunSpec),
    Matrix { max_elements: usize, out: PathBuf },
    Selftest,
}

pub fn resolve(command: Command) -> Result<ResolvedCommand, ArgsError> {
    match command {
        Command::Run(args) => Ok(ResolvedCommand::Run(resolve_run(args)?)),
        Command::Matrix(args) => {
            let file = args
                .config
                .as_deref()
                .map(read_config)
                .transpose()?
                .unwrap_or_default();
            Ok(ResolvedCommand::Matrix {
                max_elements: args
                    .max_elements
                    .or(lookup(&file, "max-elements")?)
                    .unwrap_or(100_000),
                out: args
                    .out
                    .or_else(|| file.get("out").map(PathBuf::from))
                    .unwrap_or_else(|| PathBuf::from("out")),
            })
        }
        Command::Selftest => Ok(ResolvedCommand::Selftest),
    }
}

fn resolve_run(args: RunArgs) -> Result<RunSpec, ArgsError> {
    let file = args
        .config
        .as_deref()
        .map(read_config)
        .transpose()?
        .unwrap_or_default();

    let experiment = args
        .experiment
        .or(lookup_enum(&file, "experiment")?)
        .unwrap_or(ExperimentArg::Smooth);
    let scheme = args
        .scheme
        .or(lookup_enum(&file, "scheme")?)
        .unwrap_or(SchemeArg::Kacanov);
    let estimator = args
        .estimator
        .or(lookup_enum(&file, "estimator")?)
        .unwrap_or(EstimatorArg::Linear);

    let default_delta = match scheme {
        // The Newton controller predicts from delta0 = 1 throughout.
        SchemeArg::Newton => 1.0,
        _ => experiment.default_delta(),
    };

    let spec = RunSpec {
        experiment,
        scheme,
        estimator,
        delta: args.delta.or(lookup(&file, "delta")?).unwrap_or(default_delta),
        epsilon: args.epsilon.or(lookup(&file, "epsilon")?).unwrap_or(1e-6),
        kappa: args.kappa.or(lookup(&file, "kappa")?).unwrap_or(0.5),
        vartheta: args.vartheta.or(lookup(&file, "vartheta")?).unwrap_or(2.0),
        theta_doerfler: args
            .theta_doerfler
            .or(lookup(&file, "theta-doerfler")?)
            .unwrap_or(0.5),
        max_elements: args
            .max_elements
            .or(lookup(&file, "max-elements")?)
            .unwrap_or(100_000),
        out: args
            .out
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out")),
        seed: args.seed.or(lookup(&file, "seed")?).unwrap_or(0),
        dump_mesh: args.dump_mesh || lookup(&file, "dump-mesh")?.unwrap_or(false),
    };

    if !(spec.delta > 0.0) {
        return Err(ArgsError::Config(format!(
            "delta must be positive, got {}",
            spec.delta
        )));
    }
    if !(spec.kappa > 0.0 && spec.kappa < 1.0) {
        return Err(ArgsError::Config(format!(
            "kappa must lie in (0, 1), got {}",
            spec.kappa
        )));
    }
    if !(spec.theta_doerfler > 0.0 && spec.theta_doerfler <= 1.0) {
        return Err(ArgsError::Config(format!(
            "theta-doerfler must lie in (0, 1], got {}",
            spec.theta_doerfler
        )));
    }
    if !(spec.vartheta > 0.0) {
        return Err(ArgsError::Config(format!(
            "vartheta must be positive, got {}",
            spec.vartheta
        )));
    }
    if !(spec.epsilon > 0.0) {
        return Err(ArgsError::Config(format!(
            "epsilon must be positive, got {}",
            spec.epsilon
        )));
    }
    Ok(spec)
}

fn read_config(path: &Path) -> Result<HashMap<String, String>, ArgsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ArgsError::Config(format!("{}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ArgsError::Config(format!(
                "{}:{}: expected key=value, got {raw:?}",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn lookup<T: std::str::FromStr>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ArgsError>
where
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|raw| {
            raw.parse::<T>()
                .map_err(|e| ArgsError::Config(format!("{key}: {e}")))
        })
        .transpose()
}

fn lookup_enum<T: ValueEnum>(
    map: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, ArgsError> {
    map.get(key)
        .map(|raw| {
            T::from_str(raw, true).map_err(|e| ArgsError::Config(format!("{key}: {e}")))
        })
        .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in_for_kacanov_run() {
        let cmd = parse_args(["run", "--experiment", "smooth", "--scheme", "kacanov"]).unwrap();
        let ResolvedCommand::Run(spec) = cmd else {
            panic!("expected run");
        };
        assert_eq!(spec.experiment, ExperimentArg::Smooth);
        assert_eq!(spec.scheme, SchemeArg::Kacanov);
        assert_eq!(spec.estimator, EstimatorArg::Linear);
        assert_eq!(spec.delta, 0.85);
        assert_eq!(spec.kappa, 0.5);
        assert_eq!(spec.vartheta, 2.0);
        assert_eq!(spec.theta_doerfler, 0.5);
        assert_eq!(spec.max_elements, 100_000);
    }

    #[test]
    fn per_experiment_delta_defaults() {
        let cmd = parse_args(["run", "--experiment", "singular", "--scheme", "zarantonello"])
            .unwrap();
        let ResolvedCommand::Run(spec) = cmd else {
            panic!("expected run");
        };
        assert_eq!(spec.delta, 0.5);

        let cmd = parse_args([
            "run",
            "--experiment",
            "singular-increasing",
            "--scheme",
            "zarantonello",
        ])
        .unwrap();
        let ResolvedCommand::Run(spec) = cmd else {
            panic!("expected run");
        };
        assert_eq!(spec.delta, 0.4);

        let cmd =
            parse_args(["run", "--experiment", "singular", "--scheme", "newton"]).unwrap();
        let ResolvedCommand::Run(spec) = cmd else {
            panic!("expected run");
        };
        assert_eq!(spec.delta, 1.0);
    }

    #[test]
    fn bogus_scheme_is_a_usage_error() {
        let err = parse_args(["run", "--scheme", "bogus"]).unwrap_err();
        assert!(matches!(err, ArgsError::Usage(_)));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("ilg-args-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(
            &path,
            "# experiment setup\nexperiment = singular\ndelta = 0.25\nmax-elements = 500\n",
        )
        .unwrap();
        let cmd = parse_args([
            "run",
            "--config",
            path.to_str().unwrap(),
            "--delta",
            "0.75",
        ])
        .unwrap();
        let ResolvedCommand::Run(spec) = cmd else {
            panic!("expected run");
        };
        assert_eq!(spec.experiment, ExperimentArg::Singular); // from config
        assert_eq!(spec.delta, 0.75); // flag wins
        assert_eq!(spec.max_elements, 500); // from config
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn invalid_numeric_ranges_are_rejected() {
        assert!(parse_args(["run", "--kappa", "1.5"]).is_err());
        assert!(parse_args(["run", "--theta-doerfler", "0"]).is_err());
        assert!(parse_args(["run", "--delta", "-1"]).is_err());
    }
}
