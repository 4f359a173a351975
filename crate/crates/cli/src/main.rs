use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mh_cli::fixtures::REGISTRY;
use mh_cli::{execute, run_suite, tables_csv, write_report, Scenario};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "mh", version, about = "Run (m,h)-set scenarios and write reproducible reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run every scenario in a directory.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Fixture registry.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand)]
enum FixtureAction {
    List {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Args)]
struct Opts {
    /// Overrides the seed of every scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scenarios and their data-parallel loops.
    #[arg(long, env = "MH_WORKERS")]
    workers: Option<usize>,
    /// Directory for reports, metadata and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn run_one(file: PathBuf, opts: Opts) -> Result<i32> {
    let s = Scenario::load(&file)?;
    let t0 = Instant::now();
    let r = mhsets::par::with_workers(opts.workers, || execute(&s, opts.seed))?;
    let secs = t0.elapsed().as_secs_f64();
    if let Some(dir) = &opts.out {
        write_report(dir, &r, secs, opts.workers)?;
    }
    match opts.format {
        Format::Json => print!("{}", r.to_json()),
        Format::Csv => print!("{}", tables_csv(&r)),
    }
    Ok(r.status.exit_code())
}

fn suite(dir: PathBuf, opts: Opts) -> Result<i32> {
    let t0 = Instant::now();
    let s = mhsets::par::with_workers(opts.workers, || run_suite(&dir, opts.seed))?;
    if let Some(out) = &opts.out {
        for e in &s.entries {
            if let Some(r) = &e.report {
                write_report(out, r, e.seconds, opts.workers)?;
            }
        }
        std::fs::write(out.join("suite.json"), s.to_json())?;
        std::fs::write(
            out.join("suite.meta.json"),
            mh_cli::metadata("suite", t0.elapsed().as_secs_f64(), opts.workers),
        )?;
    }
    for e in &s.entries {
        if let Some(err) = &e.error {
            eprintln!("{}: {err}", e.file);
        }
    }
    match opts.format {
        Format::Json => print!("{}", s.to_json()),
        Format::Csv => print!("{}", s.to_csv()),
    }
    Ok(s.exit_code())
}

fn fixtures(format: Format) -> Result<i32> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(REGISTRY)?),
        Format::Csv => {
            println!("category,name,params,description");
            for e in REGISTRY {
                println!("{},{},\"{}\",\"{}\"", e.category, e.name, e.params, e.description);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { file, opts } => run_one(file, opts),
        Command::Suite { dir, opts } => suite(dir, opts),
        Command::Fixtures { action: FixtureAction::List { format } } => fixtures(format),
    };
    match res {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
