//! Batch front end: `bell-strength <command> [flags]`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bell_strength::report::{
    emit_plot_data, execute, parse_config, write_atomic, Provenance, RunConfig, VERSION,
};
use clap::{Args, Parser, Subcommand};

/// Statistical strength and minimum detection efficiency of photon-pair
/// tests of local realism.
///
/// Every flag can also be given as `key = value` in a --config file (flag
/// names with `_` for `-`); flags win over the file.
#[derive(Parser)]
#[command(name = "bell-strength", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Cmd>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// S at fixed settings and efficiency.
    Strength,
    /// Settings that maximize S at a given efficiency.
    Optimize,
    /// Smallest efficiency with S > 0.
    EtaMin,
    /// Smallest efficiency with S ≥ --target-s.
    EtaForStrength,
    /// eta-min or eta-for-strength over a --grid of θ or γ values.
    Trace,
    /// Monte-Carlo trials against the closest local-realistic model.
    Simulate,
    /// CHSH values of the outcome table.
    Chsh,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Strength => "strength",
            Cmd::Optimize => "optimize",
            Cmd::EtaMin => "eta-min",
            Cmd::EtaForStrength => "eta-for-strength",
            Cmd::Trace => "trace",
            Cmd::Simulate => "simulate",
            Cmd::Chsh => "chsh",
        }
    }
}

#[derive(Args)]
struct Flags {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// unbalanced or pseudo.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Unbalanced-state angle, degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Pseudo-Bell mixing angle, degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Pseudo-Bell phase, degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// counter or detector.
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Detection efficiency in [0, 1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Polar angles A_1,A_2,B_1,B_2 in degrees.
    #[arg(long, global = true, allow_hyphen_values = true)]
    settings: Option<String>,
    /// Azimuths matching --settings (needs --no-planar).
    #[arg(long, global = true, allow_hyphen_values = true)]
    azimuths: Option<String>,
    /// Strength target in bits.
    #[arg(long, global = true, allow_hyphen_values = true)]
    target_s: Option<String>,
    /// Comma-separated θ or γ values for trace.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Monte-Carlo sample size.
    #[arg(long, global = true)]
    trials: Option<String>,
    #[arg(long, global = true)]
    restarts: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Restrict settings to the (x, z) plane (default).
    #[arg(long, global = true, overrides_with = "no_planar")]
    planar: bool,
    /// Search over all Bloch directions.
    #[arg(long, global = true)]
    no_planar: bool,
    #[arg(long, global = true)]
    eta_resolution: Option<String>,
    #[arg(long, global = true)]
    angle_tol: Option<String>,
    #[arg(long, global = true)]
    max_evals: Option<String>,
    /// Table destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Plot data destination for trace, eta-min and eta-for-strength.
    #[arg(long, global = true)]
    plot: Option<String>,
    /// appendix-table or delimited-values.
    #[arg(long, global = true)]
    format: Option<String>,
}

impl Flags {
    fn overrides(&self, command: Option<Cmd>) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        if let Some(c) = command {
            pairs.push(("command".to_string(), c.name().to_string()));
        }
        let values = [
            ("family", &self.family),
            ("theta", &self.theta),
            ("gamma", &self.gamma),
            ("phi", &self.phi),
            ("kind", &self.kind),
            ("eta", &self.eta),
            ("settings", &self.settings),
            ("azimuths", &self.azimuths),
            ("target_s", &self.target_s),
            ("grid", &self.grid),
            ("trials", &self.trials),
            ("restarts", &self.restarts),
            ("seed", &self.seed),
            ("eta_resolution", &self.eta_resolution),
            ("angle_tol", &self.angle_tol),
            ("max_evals", &self.max_evals),
            ("out", &self.out),
            ("plot", &self.plot),
            ("format", &self.format),
        ];
        for (key, value) in values {
            if let Some(v) = value {
                pairs.push((key.to_string(), v.clone()));
            }
        }
        if self.planar {
            pairs.push(("planar".into(), "true".into()));
        }
        if self.no_planar {
            pairs.push(("planar".into(), "false".into()));
        }
        pairs
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let text = match &cli.flags.config {
        Some(path) => {
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?
        }
        None => String::new(),
    };
    let config =
        parse_config(&text, &cli.flags.overrides(cli.command)).map_err(|e| e.to_string())?;
    Ok(config)
}

fn run(config: &RunConfig) -> bell_strength::Result<()> {
    let output = execute(config)?;
    let provenance = Provenance {
        config_hash: config.hash(),
        version: VERSION.to_string(),
    };
    let mut text = output.table.render(config.format);
    text.push_str(&provenance.comment());
    text.push('\n');
    match &config.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    if let (Some(path), Some(trace)) = (&config.plot, &output.trace) {
        let mut data = Vec::new();
        emit_plot_data(trace, &provenance, &mut data)?;
        write_atomic(path, &data)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    if config.plot.is_some()
        && !matches!(
            config.command.name(),
            "trace" | "eta-min" | "eta-for-strength"
        )
    {
        eprintln!("error: config key `plot`: only boundary commands produce plot data");
        return ExitCode::from(2);
    }
    if cli.flags.dump_config {
        print!("{}", config.dump());
        return ExitCode::SUCCESS;
    }
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
