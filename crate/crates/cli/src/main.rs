use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use tempfile::NamedTempFile;
use vqtherm_core::scenario::{error_exit_code, run_scenario, Format, Mode, Overrides, RawConfig, RawSweep};
use vqtherm_core::Error;

/// Scenario runner for three-qubit virtual-temperature thermal machines.
#[derive(Debug, Parser)]
#[command(name = "vqtherm", version)]
struct Cli {
    /// classify, stationary, evolve, sweep, engine, breakeven or validate
    #[arg(value_parser = parse_mode)]
    mode: Mode,
    /// TOML scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Swept temperature (T1 or T2)
    #[arg(long)]
    param: Option<String>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "E1")]
    e1: Option<f64>,
    #[arg(long = "E2")]
    e2: Option<f64>,
    #[arg(long = "T1")]
    t1: Option<f64>,
    #[arg(long = "T2")]
    t2: Option<f64>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            e1: self.e1,
            e2: self.e2,
            t1: self.t1,
            t2: self.t2,
            g: self.g,
            p: self.p,
            sweep: RawSweep {
                param: self.param.clone(),
                from: self.from,
                to: self.to,
                steps: self.steps,
            },
            out: self.out.clone(),
            format: self.format,
        }
    }
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<i32, (i32, String)> {
    let fail = |e: Error| (error_exit_code(&e), e.to_string());
    let mut raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| (2, format!("cannot read {}: {e}", path.display())))?;
            RawConfig::from_toml_str(&text)
                .map_err(|e| (2, format!("{}: {e}", path.display())))?
        }
        None => RawConfig::default(),
    };
    raw.apply(&cli.overrides());
    let cfg = raw.resolve(Some(cli.mode)).map_err(fail)?;
    let out = run_scenario(&cfg).map_err(fail)?;
    let text = out.render(cfg.output.format);
    match &cfg.output.path {
        Some(path) => write_atomic(path, &text)
            .map_err(|e| (2, format!("cannot write {}: {e}", path.display())))?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| (2, format!("cannot write to stdout: {e}")))?,
    }
    Ok(out.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("vqtherm: {msg}");
            code
        }
    };
    ExitCode::from(code as u8)
}
