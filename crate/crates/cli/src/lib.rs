//! Command-line front end: config resolution, dispatch and exit codes.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use memthermo::io::Config;
use memthermo::presets::DeviceLevel;
use memthermo::thermal::PlantPreset;
use memthermo::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PROTOCOL: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Parser)]
#[command(name = "memthermo", version, about = "Thermal memristor experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` config file; a previous manifest works too.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Plant preset (packaged, on-wafer) or device level (pristine, L1..L4).
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Scrambled temperature cycle of one device.
    Cycle,
    /// The same cycle for every level preset.
    Levels,
    /// Non-switching IV curves.
    Iv,
    /// Thermionic parameter extraction from IV curves.
    Signature,
    /// Heat, stimulate, retention and reset at each test temperature.
    Hsr,
    /// Train fraction over amplitude and temperature.
    Nullcline,
    /// Resistance to temperature inversion with read noise.
    Thermometer,
    /// Settled spike rate against input load.
    Baseline,
    /// Neuron response to an input pattern.
    Homeostasis,
    /// Feedforward gain and barrier fits.
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Cycle => "cycle",
            Command::Levels => "levels",
            Command::Iv => "iv",
            Command::Signature => "signature",
            Command::Hsr => "hsr",
            Command::Nullcline => "nullcline",
            Command::Thermometer => "thermometer",
            Command::Baseline => "baseline",
            Command::Homeostasis => "homeostasis",
            Command::Calibrate => "calibrate",
        }
    }
}

fn exit_code(err: &Error) -> (i32, &'static str) {
    match err {
        Error::Config { .. } | Error::InvalidInput(_) => (EXIT_CONFIG, "config"),
        Error::Io(_) => (EXIT_IO, "io"),
        Error::Calibration(_)
        | Error::Extraction { .. }
        | Error::Reset { .. }
        | Error::OutOfRange { .. }
        | Error::Protocol(_) => (EXIT_PROTOCOL, "protocol"),
    }
}

fn report(kind: &str, msg: &str) {
    let msg = msg
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ");
    eprintln!("error kind={kind} msg=\"{msg}\"");
}

fn resolve(cli: &Cli, env: &[(String, String)]) -> Result<Config, Error> {
    let mut config = Config::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    config.apply_env(env.iter().cloned())?;
    if let Some(seed) = cli.seed {
        config.set("run.seed", &seed.to_string())?;
    }
    if let Some(preset) = &cli.preset {
        if preset.parse::<PlantPreset>().is_ok() {
            config.set("plant.preset", preset)?;
        } else if preset.parse::<DeviceLevel>().is_ok() {
            config.set("device.level", preset)?;
        } else {
            return Err(Error::Config {
                key: "--preset".into(),
                reason: format!("'{preset}' is neither a plant preset nor a device level"),
            });
        }
    }
    config.set("run.experiment", cli.command.name())?;
    config.set("run.version", env!("CARGO_PKG_VERSION"))?;
    Ok(config)
}

fn execute(cli: &Cli, env: &[(String, String)]) -> Result<(), Error> {
    let config = resolve(cli, env)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Error::Io(format!("{}: {e}", cli.out.display())))?;
    commands::run(cli.command, &config, &cli.out)?;
    write_manifest(&config, &cli.out)
}

fn write_manifest(config: &Config, out: &Path) -> Result<(), Error> {
    let path = out.join(MANIFEST);
    std::fs::write(&path, config.to_text())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs the CLI with explicit arguments and environment; returns the exit code.
pub fn run_with_env<I, T>(args: I, env: &[(String, String)]) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            report("config", text.lines().next().unwrap_or("bad arguments"));
            return EXIT_CONFIG;
        }
    };
    match execute(&cli, env) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            report(kind, &err.to_string());
            code
        }
    }
}

/// Runs the CLI against the process environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env: Vec<(String, String)> = std::env::vars().collect();
    run_with_env(args, &env)
}
