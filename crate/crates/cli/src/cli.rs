use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use qflow_core::cylinder::BoundaryKind;

use crate::cache::Cache;
use crate::commands::{self, Emitted, ModeSolveSpec, SweepWhat};
use crate::config::{parse_config, RunConfig};
use crate::error::{usage, CliError, CliResult};
use crate::grid::parse_eps_grid;

pub const CACHE_ENV: &str = "QFLOW_CACHE";

#[derive(Debug, Parser)]
#[command(name = "qflow", version, about = "Delaunay orbits, mode operators and flat-model gluing runs")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print every default and exit.
    #[arg(long, global = true)]
    pub explain: bool,
    /// Dimension, at least 5.
    #[arg(long, global = true)]
    pub n: Option<u32>,
    /// One value, or a comma-separated grid for `sweep`.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// RK4 step in t.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Bisection tolerance on q.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Highest degree for mode tables.
    #[arg(long = "lmax", global = true)]
    pub l_max: Option<u32>,
    /// Gluing radius r = alpha^(2/(n-4) - delta0), alpha from the orbit.
    #[arg(long, global = true)]
    pub delta0: Option<f64>,
    /// Bound exponent for xi0, xi2 (m - delta1).
    #[arg(long, global = true)]
    pub delta1: Option<f64>,
    /// Bound exponent for high-mode data (1 - delta2).
    #[arg(long, global = true)]
    pub delta2: Option<f64>,
    /// Schedule exponent; must exceed delta2.
    #[arg(long, global = true)]
    pub m: Option<f64>,
    /// Starting value of b.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Write `<command>.json` / `.csv` here instead of stdout.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON-lines solution cache (default: $QFLOW_CACHE).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bc {
    Navier,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Delaunay,
    Glue,
    Ratio,
}

#[derive(Debug, clap::Args)]
pub struct ModeArgs {
    #[arg(long, default_value_t = 2)]
    pub l: u32,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = Bc::Navier)]
    pub bc: Bc,
    /// Grid intervals (default: step 0.01).
    #[arg(long)]
    pub steps: Option<usize>,
}

impl ModeArgs {
    fn spec(&self) -> ModeSolveSpec {
        let bc = match self.bc {
            Bc::Navier => BoundaryKind::NavierBothEnds,
            Bc::Terminal => BoundaryKind::TerminalClamped,
        };
        ModeSolveSpec { l: self.l, t_end: self.t_end, delta: self.delta, bc, steps: self.steps }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension constants.
    Params,
    /// Shoot one Delaunay orbit.
    Delaunay {
        /// Add the verification block.
        #[arg(long)]
        check: bool,
        /// CSV of the sampled period.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Eigenvalues, multiplicities, indicial roots and D_l per degree.
    Modes,
    /// Navier-to-Neumann matrices for degrees 2..=lmax.
    N2n {
        #[arg(long, default_value_t = 1.0)]
        r: f64,
    },
    /// Weighted a priori ratio of one cylinder mode problem.
    Modesolve {
        #[command(flatten)]
        mode: ModeArgs,
        /// CSV of (t, f, w).
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Full flat-model matching run.
    Glue,
    /// CSV over an eps grid.
    Sweep {
        #[arg(long, value_enum)]
        what: What,
        #[command(flatten)]
        mode: ModeArgs,
    },
    /// Run the acceptance suite; optionally check documents first.
    Verify {
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
}

/// Exit code and the two output streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(e) = &cli.eps {
        let grid = parse_eps_grid(e)?;
        cfg.eps = (grid.len() == 1).then(|| grid[0]);
        cfg.eps_grid = Some(grid);
    }
    macro_rules! take {
        ($($src:ident => $dst:expr),*) => {
            $(if let Some(v) = cli.$src { $dst = v; })*
        };
    }
    take!(step => cfg.step, tol => cfg.tol, l_max => cfg.l_max, delta0 => cfg.schedule.delta0,
          delta1 => cfg.schedule.delta1, delta2 => cfg.schedule.delta2, m => cfg.schedule.m, b => cfg.schedule.b);
    if cli.out_dir.is_some() {
        cfg.out_dir = cli.out_dir.clone();
    }
    if cli.cache.is_some() {
        cfg.cache = cli.cache.clone();
    } else if cfg.cache.is_none() {
        cfg.cache = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<Option<Emitted>> {
    if cli.explain {
        return Ok(None);
    }
    let cmd = match &cli.command {
        Some(c) => c,
        None => return usage("no subcommand given (try --help)"),
    };
    let cfg = resolve_config(cli)?;
    let cache = cfg.cache.as_ref().map(Cache::new);
    let cache = cache.as_ref();
    if !matches!(cmd, Command::Sweep { .. }) && cfg.eps_grid.as_ref().is_some_and(|g| g.len() > 1) {
        return usage("a list of eps values is only accepted by `sweep`");
    }
    let out = match cmd {
        Command::Params => commands::cmd_params(&cfg)?,
        Command::Delaunay { check, trajectory } => commands::cmd_delaunay(&cfg, cache, *check, trajectory.as_deref())?,
        Command::Modes => commands::cmd_modes(&cfg)?,
        Command::N2n { r } => commands::cmd_n2n(&cfg, *r)?,
        Command::Modesolve { mode, profile } => commands::cmd_modesolve(&cfg, cache, &mode.spec(), profile.as_deref())?,
        Command::Glue => commands::cmd_glue(&cfg, cache)?,
        Command::Sweep { what, mode } => {
            let what = match what {
                What::Delaunay => SweepWhat::Delaunay,
                What::Glue => SweepWhat::Glue,
                What::Ratio => SweepWhat::Ratio,
            };
            commands::cmd_sweep(&cfg, cache, what, &mode.spec())?
        }
        Command::Verify { inputs } => commands::cmd_verify(inputs)?,
    };
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{}.{}", out.kind, out.ext));
        std::fs::write(&path, &out.body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(Some(Emitted { body: format!("{}\n", path.display()), ..out }));
    }
    Ok(Some(out))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.exit_code() {
                0 => Outcome { code: 0, stdout: text, stderr: String::new() },
                _ => Outcome { code: 2, stdout: String::new(), stderr: text },
            };
        }
    };
    match dispatch(&cli) {
        Ok(None) => Outcome { code: 0, stdout: RunConfig::explain(), stderr: String::new() },
        Ok(Some(out)) => Outcome {
            code: if out.failed { 3 } else { 0 },
            stdout: out.body,
            stderr: if out.failed { "some checks failed\n".into() } else { String::new() },
        },
        Err(e) => Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}
