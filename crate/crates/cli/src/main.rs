use burgers_core::config::{load, parse_override, Command, Value};
use burgers_core::LabError;
use burgers_lab::{execute, exit_code, EXIT_CONFIG};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

/// Singular Burgers vortex laboratory.
///
/// Settings come from built-in defaults, then the `--config` file, then
/// `--set` overrides, then the named flags; later sources win.
#[derive(Parser, Debug)]
#[command(name = "burgers-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for data-parallel work and sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory (key `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set grid.n=128`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Strain strength (key `strain.mu`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    mu: Option<String>,

    /// Circulation (key `strain.alpha`).
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,

    /// Initial data: preset name or dump path (key `initial.data`).
    #[arg(long, global = true)]
    preset: Option<String>,

    /// RNG seed recorded in the manifest (key `seed`).
    #[arg(long, global = true)]
    seed: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Sample a preset or re-export a dump as CSV plus binary.
    Fields,
    /// Navier-Stokes residual of the singular Burgers vortex.
    Residual,
    /// Eigenvalue sweep of the horizontal and vertical operators.
    Spectrum,
    /// Planar perturbation dynamics in self-similar variables.
    Evolve2d,
    /// Full 3D perturbation dynamics.
    Evolve3d,
    /// The acceptance suite.
    Accept,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Fields => Command::Fields,
            Cmd::Residual => Command::Residual,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Evolve2d => Command::Evolve2d,
            Cmd::Evolve3d => Command::Evolve3d,
            Cmd::Accept => Command::Accept,
        }
    }
}

fn overrides(cli: &Cli) -> Result<Vec<(String, Value)>, LabError> {
    let mut out = Vec::new();
    for s in &cli.set {
        out.push(parse_override(s)?);
    }
    let named = [
        ("strain.mu", cli.mu.clone()),
        ("strain.alpha", cli.alpha.clone()),
        ("initial.data", cli.preset.clone()),
        ("seed", cli.seed.clone()),
        ("out", cli.out.as_ref().map(|p| format!("{:?}", p.display().to_string()))),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            out.push(parse_override(&format!("{key}={v}"))?);
        }
    }
    Ok(out)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            std::process::exit(EXIT_CONFIG);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("thread pool already set");
    }
    let cfg = overrides(&cli).and_then(|o| load(cli.command.into(), cli.config.as_deref(), &o));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_CONFIG);
        }
    };
    let result = execute(&cfg);
    match &result {
        Ok(o) => {
            for p in &o.outputs {
                println!("wrote {}", p.display());
            }
            if !o.passed {
                eprintln!("check failed; see {}", cfg.out.join("manifest.json").display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
