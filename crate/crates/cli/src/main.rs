use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dcslab::config::RunConfig;
use dcslab::suites::run_command;
use dcslab::Error;

#[derive(Parser)]
#[command(name = "dcslab", version, about = "Monte Carlo and exact checks for random dense countable sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file with `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the main sample count of the suite.
    #[arg(long, global = true)]
    replicas: Option<usize>,

    #[arg(long, global = true)]
    out_dir: Option<String>,

    /// Print summary.json to stdout instead of the text summary.
    #[arg(long, global = true)]
    json: bool,

    /// Any config key, e.g. `--set height=20`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Minimizer enumeration and the arcsine law.
    Minima,
    /// Bridge argmin/minimum densities and tail profiles.
    Density,
    /// Poisson strip racing extraction.
    Coupling,
    /// Exact max-mass / min-cover duality on finite instances.
    Duality,
    /// Rational shift joining of uniform and exponential densities.
    Rational,
    /// All suites at reduced size.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Minima => "minima",
            Command::Density => "density",
            Command::Coupling => "coupling",
            Command::Duality => "duality",
            Command::Rational => "rational",
            Command::Selftest => "selftest",
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read '{path}': {e}")))?;
        cfg.apply_text(&text)?;
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = Some(r);
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let cfg = build_config(cli)?;
    let out = run_command(cli.command.name(), &cfg)?;
    let root = Path::new(&cfg.out_dir);
    let files = out.files();
    for (rel, content) in &files {
        let path = root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| Error::Config(format!("cannot create '{}': {e}", parent.display())))?;
        }
        std::fs::write(&path, content).map_err(|e| Error::Config(format!("cannot write '{}': {e}", path.display())))?;
    }
    if cli.json {
        print!("{}", files.last().map(|f| f.1.as_str()).unwrap_or(""));
    } else {
        print!("{}", out.text_summary());
        println!("outputs written to {}", root.display());
    }
    Ok(out.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("dcslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
