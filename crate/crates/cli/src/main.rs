use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkahler_cli::commands::{
    cmd_check, cmd_curvature, cmd_darboux, cmd_flow, cmd_isometry_recover, cmd_isometry_verify, cmd_scan_bound,
    DarbouxArgs, FlowField, IsometryArgs, Outcome, ScanArgs,
};
use pkahler_cli::config::{parse_floats, parse_tolerance, DEFAULT_SAMPLES, DEFAULT_SEED};
use pkahler_cli::{CliError, Grid, OutputFormat, ProfileChoice, RunConfig};
use pkahler_core::AmbientPoint;

#[derive(Parser, Debug)]
#[command(name = "pkahler", version, about = "Numerical checks for the pseudo-Kähler family g_f on H² × C")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Profile family.
    #[arg(long, global = true, value_enum, env = "PKAHLER_PROFILE", default_value = "linear")]
    profile: ProfileKind,
    /// Slope parameter k > 0 of the builtin profiles.
    #[arg(long, global = true, env = "PKAHLER_K", default_value_t = 1.0, allow_hyphen_values = true)]
    k: f64,
    /// Table file (columns t, f, f', f'', f''') used with `--profile table`.
    #[arg(long, global = true, env = "PKAHLER_TABLE")]
    table: Option<PathBuf>,
    /// Seed for random sample points.
    #[arg(long, global = true, env = "PKAHLER_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Number of random sample points.
    #[arg(long, global = true, env = "PKAHLER_SAMPLES", default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Output file; stdout when absent.
    #[arg(long, global = true, env = "PKAHLER_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, env = "PKAHLER_FORMAT", default_value = "auto")]
    format: FormatKind,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tolerance)]
    tolerances: Vec<(String, f64)>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProfileKind {
    Linear,
    Quadratic,
    Table,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatKind {
    Auto,
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum HamiltonianKind {
    H1,
    H2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the invariant suite and print a JSON report.
    Check,
    /// Closed-form and numeric curvature along the normal-form slice (i, u).
    Curvature {
        #[arg(long, default_value = "0:3:13")]
        u_grid: Grid,
    },
    /// Section defects and Darboux residuals over a base grid.
    Darboux {
        #[arg(long, default_value = "-3:-0.3:10", allow_hyphen_values = true)]
        b1_range: Grid,
        #[arg(long, default_value = "-4:4:10", allow_hyphen_values = true)]
        b2_range: Grid,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        b1_ref: f64,
    },
    /// RK4 trajectory of a Hamiltonian field.
    Flow {
        #[arg(long, value_enum)]
        hamiltonian: HamiltonianKind,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        time: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        /// Starting point x,y,u,v.
        #[arg(long, value_parser = parse_floats::<4>, allow_hyphen_values = true)]
        start: [f64; 4],
    },
    /// Verify or recover an isometry element.
    Isometry {
        #[command(subcommand)]
        action: IsometryAction,
    },
    /// Scan the linear-profile scalar curvature for the bound scal < 1.
    ScanBound {
        #[arg(long, default_value = "0.1:5:50")]
        u_grid: Grid,
        #[arg(long, default_value = "0.5:2:4")]
        y_grid: Grid,
        #[arg(long, default_value = "-1:1:5", allow_hyphen_values = true)]
        x_grid: Grid,
    },
}

#[derive(Args, Debug)]
struct ElementArgs {
    /// Matrix entries a,b,c,d.
    #[arg(long, value_parser = parse_floats::<4>, allow_hyphen_values = true, default_value = "1,0,0,1")]
    moebius: [f64; 4],
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    #[arg(long)]
    flip1: bool,
    #[arg(long)]
    flip2: bool,
}

#[derive(Subcommand, Debug)]
enum IsometryAction {
    /// Pullback residuals of the metric and the symplectic form.
    Verify(ElementArgs),
    /// Recover the parameters of the element from its action alone.
    Recover(ElementArgs),
}

impl From<ElementArgs> for IsometryArgs {
    fn from(e: ElementArgs) -> Self {
        IsometryArgs { moebius: e.moebius, theta: e.theta, flip1: e.flip1, flip2: e.flip2 }
    }
}

fn config(g: &Global) -> Result<RunConfig, CliError> {
    let profile = match g.profile {
        ProfileKind::Linear => ProfileChoice::Linear,
        ProfileKind::Quadratic => ProfileChoice::Quadratic,
        ProfileKind::Table => ProfileChoice::Table(
            g.table.clone().ok_or_else(|| CliError::Usage("--profile table requires --table <path>".into()))?,
        ),
    };
    if g.samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    Ok(RunConfig {
        profile,
        k: g.k,
        seed: g.seed,
        samples: g.samples,
        out: g.out.clone(),
        format: match g.format {
            FormatKind::Auto => OutputFormat::Auto,
            FormatKind::Csv => OutputFormat::Csv,
            FormatKind::Json => OutputFormat::Json,
        },
        tolerances: g.tolerances.iter().cloned().collect(),
    })
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = config(&cli.global)?;
    let profile = cfg.build_profile()?;
    let mut format = cfg.format;
    let outcome: Outcome = match cli.command {
        Command::Check => {
            if format == OutputFormat::Auto {
                format = OutputFormat::Json;
            }
            cmd_check(&cfg, &profile)?
        }
        Command::Curvature { u_grid } => cmd_curvature(&profile, &u_grid)?,
        Command::Darboux { b1_range, b2_range, b1_ref } => {
            cmd_darboux(&profile, &DarbouxArgs { b1: b1_range, b2: b2_range, b1_ref })?
        }
        Command::Flow { hamiltonian, time, steps, start } => {
            let field = match hamiltonian {
                HamiltonianKind::H1 => FlowField::H1,
                HamiltonianKind::H2 => FlowField::H2,
            };
            let [x, y, u, v] = start;
            cmd_flow(&profile, field, &AmbientPoint::new(x, y, u, v)?, time, steps)?
        }
        Command::Isometry { action } => match action {
            IsometryAction::Verify(e) => cmd_isometry_verify(&cfg, &profile, &e.into())?,
            IsometryAction::Recover(e) => cmd_isometry_recover(&e.into())?,
        },
        Command::ScanBound { u_grid, y_grid, x_grid } => {
            cmd_scan_bound(cfg.k, &ScanArgs { u: u_grid, y: y_grid, x: x_grid })?
        }
    };
    let text = outcome.document.render(format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("pkahler: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
