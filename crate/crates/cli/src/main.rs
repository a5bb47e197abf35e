use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conley_core::algebra::{lefschetz_numbers, leray_reduce, GradedMatrix, MatrixJson};
use conley_core::cubical::{CubePair, PairJson};
use conley_core::homology::relative_homology;
use conley_core::pipeline::{
    builtin, dump_layers, lefschetz_strings, load_state, parse_field, run_full, save_state, verify_loaded, LerayReport,
    PipelineError, RunConfig, RunOptions, BUILTINS,
};
use serde_json::{json, Value};

const EXIT_REFINE: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(
    name = "conley",
    version,
    about = "Homological Conley index of Poincare maps of rotating flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on a built-in system or a JSON config.
    Run(RunArgs),
    /// Re-check a saved bundle without evaluating the flow.
    Verify {
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List the built-in systems, or print the config of one.
    Examples { name: Option<String> },
    /// Relative homology of a cube pair given as JSON.
    Homology {
        pair: PathBuf,
        #[arg(long, default_value = "Q")]
        field: String,
    },
    /// Leray reduction of a graded matrix given as a JSON list of blocks.
    Leray {
        matrix: PathBuf,
        #[arg(long, default_value = "Q")]
        field: String,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "config")]
    builtin: Option<String>,
    /// JSON file holding a full config.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    name: Option<String>,
    /// Vector field as a JSON array of expressions.
    #[arg(long)]
    field: Option<String>,
    #[arg(long)]
    angular_axis: Option<usize>,
    /// Bounds `LO,HI` of a non-angular axis; repeat once per axis.
    #[arg(long, value_parser = parse_bounds)]
    region: Vec<(f64, f64)>,
    #[arg(long)]
    scale: Option<u32>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    coefficients: Option<String>,
    #[arg(long)]
    substeps: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    lipschitz_bound: Option<f64>,
    #[arg(long)]
    cross_check: Option<bool>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    exit_collar: Option<u32>,
    #[arg(long)]
    allow_partial: bool,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save a verification bundle.
    #[arg(long)]
    save: Option<PathBuf>,
    /// Write N and L in the layered text format.
    #[arg(long)]
    dump_cubes: Option<PathBuf>,
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected LO,HI")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok((p(lo)?, p(hi)?))
}

/// Failure carrying its exit code.
struct Failure(u8, anyhow::Error);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        Failure(e.exit_code() as u8, e.into())
    }
}

fn config_error(e: anyhow::Error) -> Failure {
    Failure(EXIT_CONFIG, e)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_error)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(config_error)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            println!("{}", text.trim_end());
            Ok(())
        }
    }
}

fn resolve_config(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut c = if let Some(path) = &a.config {
        serde_json::from_str::<RunConfig>(&read(path)?)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(config_error)?
    } else if let Some(name) = &a.builtin {
        builtin(name).ok_or_else(|| config_error(anyhow!("unknown built-in {name:?}; try `conley examples`")))?
    } else {
        if a.field.is_none() || a.region.is_empty() || a.angular_axis.is_none() {
            return Err(config_error(anyhow!(
                "give --builtin, --config, or all of --field, --region and --angular-axis"
            )));
        }
        let mut c = builtin(BUILTINS[0]).expect("built-in");
        c.name = "custom".into();
        c
    };
    if let Some(v) = &a.name {
        c.name = v.clone();
    }
    if let Some(f) = &a.field {
        c.field = serde_json::from_str::<Vec<Value>>(f)
            .context("--field must be a JSON array of expressions")
            .map_err(config_error)?;
    }
    if !a.region.is_empty() {
        c.region = a.region.clone();
    }
    macro_rules! set {
        ($($f:ident),*) => {$(if let Some(v) = &a.$f { c.$f = v.clone(); })*};
    }
    set!(
        angular_axis,
        scale,
        h,
        coefficients,
        substeps,
        eps,
        lipschitz_bound,
        cross_check,
        n_max,
        exit_collar
    );
    c.allow_partial |= a.allow_partial;
    Ok(c)
}

fn cmd_run(a: &RunArgs) -> Result<u8, Failure> {
    let config = resolve_config(a)?;
    let art = run_full(&config, &RunOptions::from_env())?;
    let report = &art.report;
    let text = match a.format {
        Format::Json => report.to_json_pretty(),
        Format::Text => report.render_text(),
    };
    emit(a.out.as_deref(), &text)?;
    if let Some(path) = &a.dump_cubes {
        write(path, &dump_layers(&art.built.pair))?;
    }
    if let Some(p) = &report.partial {
        eprintln!("partial run: [{}] {}", p.stage, p.message);
        return Ok(EXIT_REFINE);
    }
    if let Some(path) = &a.save {
        let b = art
            .bundle()
            .ok_or_else(|| Failure(EXIT_MISMATCH, anyhow!("run produced no witness to save")))?;
        save_state(path, &b).map_err(PipelineError::from)?;
    }
    Ok(0)
}

fn cmd_verify(path: &Path, format: Format) -> Result<u8, Failure> {
    let b = load_state(path).map_err(PipelineError::from)?;
    let v = verify_loaded(&b);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&v).expect("verification serializes"),
        Format::Text if v.pass => format!("PASS {}", path.display()),
        Format::Text => {
            let mut s = format!("FAIL {}\n", path.display());
            for f in &v.failures {
                s.push_str(&format!("  {f}\n"));
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(if v.pass { 0 } else { EXIT_MISMATCH })
}

fn cmd_examples(name: Option<&str>) -> Result<u8, Failure> {
    match name {
        None => {
            for n in BUILTINS {
                println!("{n}");
            }
        }
        Some(n) => {
            let c = builtin(n).ok_or_else(|| config_error(anyhow!("unknown built-in {n:?}")))?;
            println!("{}", serde_json::to_string_pretty(&c).expect("config serializes"));
        }
    }
    Ok(0)
}

fn cmd_homology(path: &Path, field: &str) -> Result<u8, Failure> {
    let field = parse_field(field)?;
    let j: PairJson = serde_json::from_str(&read(path)?)
        .context("parsing the pair")
        .map_err(config_error)?;
    let pair = CubePair::from_json(&j)
        .and_then(|p| p.validate().map(|_| p))
        .map_err(|e| config_error(e.into()))?;
    let h = relative_homology(&pair, field);
    let dims: BTreeMap<usize, usize> = h.dims().into_iter().filter(|(_, n)| *n > 0).collect();
    emit(
        None,
        &serde_json::to_string_pretty(&json!({ "field": field.name(), "dims": dims })).expect("json"),
    )?;
    Ok(0)
}

fn cmd_leray(path: &Path, field: &str, n_max: u32) -> Result<u8, Failure> {
    let field = parse_field(field)?;
    let blocks: Vec<MatrixJson> = serde_json::from_str(&read(path)?)
        .context("parsing the matrix")
        .map_err(config_error)?;
    let m = GradedMatrix::from_json(field, &blocks).map_err(|e| config_error(e.into()))?;
    let l = leray_reduce(&m).map_err(|e| config_error(e.into()))?;
    let lefschetz = lefschetz_numbers(&l, n_max).ok().map(|n| lefschetz_strings(&n));
    let out = json!({ "leray": LerayReport::new(&l), "lefschetz": lefschetz });
    emit(None, &serde_json::to_string_pretty(&out).expect("json"))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => e.exit(),
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify { bundle, format } => cmd_verify(bundle, *format),
        Command::Examples { name } => cmd_examples(name.as_deref()),
        Command::Homology { pair, field } => cmd_homology(pair, field),
        Command::Leray { matrix, field, n_max } => cmd_leray(matrix, field, *n_max),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
