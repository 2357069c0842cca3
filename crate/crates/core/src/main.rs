use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use centered_dmd::dmd::{
    centered_dmd_with, companion_dmd, exact_dmd_with, frequency_subtracted_dmd_with, split_snapshots, DmdModel,
    DmdOptions,
};
use centered_dmd::experiment::{run_experiment, Experiment, ExperimentConfig};
use centered_dmd::io::{load_matrix, save_matrix};
use centered_dmd::{Complex64, DmdError, RealMatrix};

const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "cdmd", version, about = "Dynamic mode decomposition with centering and frequency subtraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Snapshot matrix file (`rows cols` header, one row per line).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Truncation rank; defaults to the numerical rank of X1.
    #[arg(long)]
    rank: Option<usize>,
    /// Relative singular value cutoff used when no rank is given.
    #[arg(long)]
    tol: Option<f64>,
    /// Random seed (experiments only; the fits themselves are deterministic).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; results are always printed to stdout as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact DMD of the snapshot matrix.
    Dmd(Common),
    /// DMD of the mean-subtracted snapshots, with bias and fixed point.
    CenteredDmd(Common),
    /// Companion-matrix DMD.
    Companion(Common),
    /// DMD after projecting out known eigenvalues.
    FreqSub {
        #[command(flatten)]
        common: Common,
        /// Eigenvalue to remove, as `re,im`; repeat for several.
        #[arg(long = "lambda", value_parser = parse_complex, required = true, allow_hyphen_values = true)]
        lambdas: Vec<Complex64>,
    },
    /// Run a named experiment and write CSV panels plus summary.json.
    Experiment {
        /// Experiment name; may instead come from --config.
        name: Option<String>,
        #[command(flatten)]
        common: Common,
        /// JSON file with `experiment`, `seed`, `overrides` and `output_dir`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parameter override `key=value`; repeatable.
        #[arg(long = "set", value_parser = parse_key_value)]
        set: Vec<(String, String)>,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let re: f64 = re.trim().parse().map_err(|_| format!("bad real part `{re}`"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part `{im}`"))?;
    Ok(Complex64::new(re, im))
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected `key=value`, got `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn exit_code(err: &DmdError) -> u8 {
    match err {
        DmdError::NoConvergence(_) | DmdError::IntegrationOverflow { .. } => EXIT_ASSERTION,
        _ => EXIT_USAGE,
    }
}

fn complex_list(values: &[Complex64]) -> Value {
    Value::Array(values.iter().map(|z| json!({ "re": z.re, "im": z.im })).collect())
}

fn options(c: &Common) -> DmdOptions {
    let mut opts = DmdOptions::with_rank(c.rank);
    if let Some(tol) = c.tol {
        opts.rank_tol = tol;
    }
    opts
}

fn read_input(c: &Common) -> Result<RealMatrix, DmdError> {
    match &c.input {
        Some(path) => load_matrix(path),
        None => Err(DmdError::InvalidInput("--input is required".into())),
    }
}

fn write_model(dir: &Path, model: &DmdModel) -> Result<(), DmdError> {
    let mut w = String::from("re,im,amplitude_re,amplitude_im\n");
    for (z, a) in model.eigenvalues.iter().zip(&model.amplitudes) {
        w.push_str(&format!("{},{},{},{}\n", z.re, z.im, a.re, a.im));
    }
    fs::write(dir.join("eigenvalues.csv"), w)?;
    save_matrix(&model.modes.map(|z| z.re), dir.join("modes_re.txt"))?;
    save_matrix(&model.modes.map(|z| z.im), dir.join("modes_im.txt"))?;
    Ok(())
}

fn model_json(model: &DmdModel) -> BTreeMap<&'static str, Value> {
    BTreeMap::from([
        ("method", json!(model.method.as_str())),
        ("rank_used", json!(model.rank_used)),
        ("eigenvalues", complex_list(&model.eigenvalues)),
        ("amplitudes", complex_list(&model.amplitudes)),
    ])
}

fn finish(out: Option<&Path>, summary: &BTreeMap<&'static str, Value>) -> Result<(), DmdError> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| DmdError::Io(std::io::Error::other(e)))?;
    if let Some(dir) = out {
        fs::write(dir.join("summary.json"), format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn prepare(out: Option<&Path>) -> Result<(), DmdError> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn run_fit(command: &Command) -> Result<(), DmdError> {
    match command {
        Command::Dmd(c) => {
            let pair = split_snapshots(&read_input(c)?)?;
            let model = exact_dmd_with(&pair, &options(c))?;
            let out = c.out.as_deref();
            prepare(out)?;
            if let Some(dir) = out {
                write_model(dir, &model)?;
            }
            finish(out, &model_json(&model))
        }
        Command::CenteredDmd(c) => {
            let pair = split_snapshots(&read_input(c)?)?;
            let model = centered_dmd_with(&pair, &options(c))?;
            let out = c.out.as_deref();
            prepare(out)?;
            if let Some(dir) = out {
                write_model(dir, &model.base)?;
                save_matrix(&RealMatrix::from_column_slice(model.bias.len(), 1, model.bias.as_slice()), dir.join("bias.txt"))?;
                if let Some(fp) = &model.fixed_point {
                    save_matrix(&RealMatrix::from_column_slice(fp.len(), 1, fp.as_slice()), dir.join("fixed_point.txt"))?;
                }
            }
            let mut summary = model_json(&model.base);
            summary.insert("bias", json!(model.bias.as_slice()));
            summary.insert("fixed_point", json!(model.fixed_point.as_ref().map(|v| v.as_slice().to_vec())));
            finish(out, &summary)
        }
        Command::Companion(c) => {
            let x = read_input(c)?;
            let model = companion_dmd(&x)?;
            let out = c.out.as_deref();
            prepare(out)?;
            if let Some(dir) = out {
                save_matrix(&model.matrix(), dir.join("companion.txt"))?;
            }
            let summary = BTreeMap::from([
                ("method", json!("companion")),
                ("coefficients", json!(model.coefficients.as_slice())),
                ("eigenvalues", complex_list(&model.eigenvalues)),
                ("residual_norm", json!(model.residual_norm)),
            ]);
            finish(out, &summary)
        }
        Command::FreqSub { common: c, lambdas } => {
            let pair = split_snapshots(&read_input(c)?)?;
            let model = frequency_subtracted_dmd_with(&pair, lambdas, &options(c))?;
            let out = c.out.as_deref();
            prepare(out)?;
            if let Some(dir) = out {
                write_model(dir, &model.base)?;
                save_matrix(&model.forcing.map(|z| z.re), dir.join("forcing_re.txt"))?;
                save_matrix(&model.forcing.map(|z| z.im), dir.join("forcing_im.txt"))?;
            }
            let mut summary = model_json(&model.base);
            summary.insert("fixed_lambdas", complex_list(&model.fixed_lambdas));
            finish(out, &summary)
        }
        Command::Experiment { .. } => unreachable!("experiments are dispatched separately"),
    }
}

fn experiment_config(
    name: Option<&str>,
    c: &Common,
    config: Option<&Path>,
    set: &[(String, String)],
) -> Result<ExperimentConfig, DmdError> {
    let mut cfg = match config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&fs::read_to_string(path)?)
            .map_err(|e| DmdError::ParseError(format!("{}: {e}", path.display())))?,
        None => {
            let name = name.ok_or_else(|| DmdError::InvalidInput("an experiment name or --config is required".into()))?;
            ExperimentConfig::new(name.parse::<Experiment>()?, 0, "out")
        }
    };
    if let (Some(name), Some(_)) = (name, config) {
        cfg.experiment = name.parse()?;
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if let Some(input) = &c.input {
        cfg.overrides.insert("input".into(), input.display().to_string());
    }
    if let Some(rank) = c.rank {
        cfg.overrides.insert("rank".into(), rank.to_string());
    }
    if let Some(tol) = c.tol {
        cfg.overrides.insert("tol".into(), tol.to_string());
    }
    for (k, v) in set {
        cfg.overrides.insert(k.clone(), v.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Experiment { name, common, config, set } = &cli.command {
        let cfg = match experiment_config(name.as_deref(), common, config.as_deref(), set) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        };
        return match run_experiment(&cfg) {
            Ok(summary) => {
                match serde_json::to_string_pretty(&summary) {
                    Ok(text) => println!("{text}"),
                    Err(e) => eprintln!("error: {e}"),
                }
                for a in summary.assertions.iter().filter(|a| !a.passed) {
                    eprintln!("assertion failed: {} = {:e} (required {} {:e})", a.name, a.value, a.relation, a.threshold);
                }
                if summary.passed { ExitCode::SUCCESS } else { ExitCode::from(EXIT_ASSERTION) }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code(&e))
            }
        };
    }
    match run_fit(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
