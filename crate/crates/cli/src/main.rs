use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loewner::analysis::{error_sweep, model_error, response_csv, response_table, sweep_csv};
use loewner::data::{log_grid, read_dataset, sample_frequency_response};
use loewner::pipeline::{assemble, fit};
use loewner::{
    generate_modal_system, svd_pencil, DescriptorSystem, LoewnerError, ModalSpec, OrderPolicy,
    PartitionScheme, ReducedModel, ReductionOptions, Shift,
};
use thiserror::Error;

mod range;

use range::{parse_orders, parse_pair};

#[derive(Debug, Error)]
enum CliError {
    #[error("invalid arguments:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Core(#[from] LoewnerError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(e) if e.is_io() => 3,
            CliError::Write { .. } => 3,
            CliError::Core(_) => 4,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Loewner-framework model order reduction from frequency-response data.
#[derive(Debug, Parser)]
#[command(name = "loewner", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic lightly damped modal system.
    Generate(GenerateArgs),
    /// Sample a system's frequency response on a log-spaced grid.
    Sample(SampleArgs),
    /// Build the Loewner pencil and emit a reduced model.
    Reduce(ReduceArgs),
    /// Error of the reduced model as a function of its order.
    Sweep(SweepArgs),
    /// Compare a model against data: response table and error.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Number of second-order modes (state dimension is twice this).
    #[arg(long, default_value_t = 135)]
    modes: usize,
    #[arg(long, default_value_t = 3)]
    inputs: usize,
    #[arg(long, default_value_t = 3)]
    outputs: usize,
    #[arg(long, env = "LOEWNER_SEED", default_value_t = 0)]
    seed: u64,
    /// Modal frequency range `min:max` in rad/s.
    #[arg(long, default_value = "0.5:50")]
    omega: String,
    /// Damping-ratio range `min:max`.
    #[arg(long, default_value = "0.05:0.2")]
    damping: String,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// Number of frequencies.
    #[arg(long, default_value_t = 400)]
    freqs: usize,
    /// Frequency band `min:max` in rad/s, log-spaced.
    #[arg(long, default_value = "0.1:100")]
    omega: String,
    /// Keep a single channel `out,in` (0-based).
    #[arg(long)]
    node: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PencilArgs {
    /// Dataset file (SISO CSV or MIMO JSON).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "interleave")]
    partition: PartitionScheme,
    /// Emit a real-valued model.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    real: bool,
    /// Pencil shift `x`: auto, a, bi or a+bi.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    shift: Shift,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[command(flatten)]
    pencil: PencilArgs,
    /// Explicit reduced order.
    #[arg(long, conflicts_with = "tol")]
    r: Option<usize>,
    /// Relative singular-value threshold for the order.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, short)]
    output: PathBuf,
    /// Singular-value CSV; defaults to `<output stem>_sv.csv`.
    #[arg(long)]
    sv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    pencil: PencilArgs,
    /// Orders as `a:b:step`, `a:b` or a comma list.
    #[arg(long, default_value = "10:200:10")]
    orders: String,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Response comparison CSV.
    #[arg(long, short)]
    output: PathBuf,
    /// Optional JSON error report.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes()).map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

fn check(problems: Vec<String>) -> CliResult<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(problems))
    }
}

fn generate(args: &GenerateArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    let omega = parse_pair(&args.omega).map_err(|e| problems.push(format!("--omega: {e}")));
    let damping = parse_pair(&args.damping).map_err(|e| problems.push(format!("--damping: {e}")));
    if args.modes == 0 {
        problems.push("--modes must be at least 1".into());
    }
    if args.inputs == 0 || args.outputs == 0 {
        problems.push("--inputs and --outputs must be at least 1".into());
    }
    let spec = match (omega, damping) {
        (Ok(omega), Ok(damping)) => {
            let spec = ModalSpec {
                modes: args.modes.max(1),
                omega,
                damping,
                inputs: args.inputs.max(1),
                outputs: args.outputs.max(1),
                seed: args.seed,
            };
            if let Err(e) = spec.validate() {
                problems.push(e.to_string());
            }
            Some(spec)
        }
        _ => None,
    };
    check(problems)?;
    let sys = generate_modal_system(&spec.expect("validated"))?;
    write_atomic(&args.output, &sys.to_json()?)?;
    eprintln!(
        "wrote {} (n = {}, m = {}, p = {}, seed = {})",
        args.output.display(),
        sys.states(),
        args.inputs,
        args.outputs,
        args.seed
    );
    Ok(())
}

fn sample(args: &SampleArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    let band = parse_pair(&args.omega).map_err(|e| problems.push(format!("--omega: {e}")));
    let node = args
        .node
        .as_deref()
        .map(parse_node)
        .transpose()
        .map_err(|e| problems.push(format!("--node: {e}")));
    let grid = band.ok().map(|(lo, hi)| log_grid(lo, hi, args.freqs));
    if let Some(Err(e)) = &grid {
        problems.push(format!("--omega: {e}"));
    }
    check(problems)?;
    let grid = grid.expect("validated")?;

    let sys = DescriptorSystem::read(&args.system)?;
    let ds = match node.expect("validated") {
        Some((q, r)) => sample_frequency_response(&sys.channel(q, r)?, &grid)?,
        None => sample_frequency_response(&sys, &grid)?,
    };
    write_atomic(&args.output, &ds.to_file_string()?)?;
    eprintln!(
        "wrote {} ({} samples, {}x{})",
        args.output.display(),
        ds.len(),
        ds.outputs(),
        ds.inputs()
    );
    Ok(())
}

fn parse_node(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| format!("expected `out,in`, got `{text}`"))?;
    let idx = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad index `{s}`"))
    };
    Ok((idx(a)?, idx(b)?))
}

fn options(args: &PencilArgs, order: OrderPolicy, problems: &mut Vec<String>) -> ReductionOptions {
    if let Shift::Value(x) = args.shift {
        if args.real && x.im != 0.0 {
            problems.push(format!(
                "--shift {x} is complex; --real true needs a real shift"
            ));
        }
    }
    ReductionOptions {
        scheme: args.partition,
        conjugate_close: true,
        real: args.real,
        shift: args.shift,
        order,
    }
}

fn reduce(args: &ReduceArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    let order = match (args.r, args.tol) {
        (Some(0), _) => {
            problems.push("--r must be at least 1".into());
            OrderPolicy::Explicit(1)
        }
        (Some(r), _) => OrderPolicy::Explicit(r),
        (None, Some(tol)) => {
            if !(tol > 0.0 && tol < 1.0) {
                problems.push(format!("--tol {tol} must lie in (0, 1)"));
            }
            OrderPolicy::Tolerance(tol)
        }
        (None, None) => OrderPolicy::Tolerance(loewner::pencil::DEFAULT_RANK_TOL),
    };
    let opts = options(&args.pencil, order, &mut problems);
    check(problems)?;

    let ds = read_dataset(&args.pencil.data)?;
    let red = fit(&ds, &opts)?;
    let sv_path = args.sv.clone().unwrap_or_else(|| {
        let stem = args
            .output
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("model");
        args.output.with_file_name(format!("{stem}_sv.csv"))
    });
    write_atomic(&args.output, &red.model.to_json()?)?;
    write_atomic(&sv_path, &red.svd.to_csv_string())?;

    let (res1, res2) = red.pencil.residuals();
    eprintln!(
        "order {} of {} (shift {}), Sylvester residuals {res1:.3e} / {res2:.3e}",
        red.model.order(),
        red.pencil.max_order(),
        Shift::Value(red.svd.shift),
    );
    if let Ok(poles) = red.model.poles() {
        let unstable = poles.iter().filter(|p| p.re >= 0.0).count();
        if unstable > 0 {
            eprintln!("warning: reduced model has {unstable} unstable poles");
        }
    }
    eprintln!("wrote {} and {}", args.output.display(), sv_path.display());
    Ok(())
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    let orders = parse_orders(&args.orders).unwrap_or_else(|e| {
        problems.push(format!("--orders: {e}"));
        Vec::new()
    });
    let opts = options(&args.pencil, OrderPolicy::Explicit(1), &mut problems);
    check(problems)?;

    let ds = read_dataset(&args.pencil.data)?;
    let pencil = assemble(&ds, &opts)?;
    let svd = svd_pencil(&pencil, opts.shift);
    let entries = error_sweep(&pencil, &svd, &ds, &orders);
    for e in &entries {
        if let Err(reason) = &e.outcome {
            eprintln!("skipped r = {}: {reason}", e.r);
        }
    }
    write_atomic(&args.output, &sweep_csv(&entries))?;
    eprintln!("wrote {} ({} orders)", args.output.display(), entries.len());
    Ok(())
}

fn report(args: &ReportArgs) -> CliResult<()> {
    let ds = read_dataset(&args.data)?;
    let model = ReducedModel::read(&args.model)?;
    let rep = model_error(&ds, &model)?;
    let rows = response_table(&ds, &model)?;
    write_atomic(&args.output, &response_csv(&rows, ds.is_siso()))?;
    if let Some(path) = &args.json {
        write_atomic(path, &rep.to_json()?)?;
    }
    println!("epsilon = {}", loewner::data::fmt_f64(rep.epsilon));
    println!(
        "worst per-frequency error = {}",
        loewner::data::fmt_f64(rep.worst)
    );
    for note in &rep.notes {
        println!("{note}");
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Sample(a) => sample(a),
        Command::Reduce(a) => reduce(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
