//! Command-line front end: single scenario runs, named experiment suites,
//! and closed-form overhead tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rrsim::baselines::{asymptotic_costs, OverheadModel};
use rrsim::harness::csv::{num, Table};
use rrsim::harness::scenario::{Mode, ProtocolKind};
use rrsim::harness::suites::{run_suite, SUITE_NAMES};
use rrsim::{ScenarioConfig, Sim};

#[derive(Parser)]
#[command(
    name = "rrsim",
    about = "Deterministic simulator for rendezvous-based storage and service discovery",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and print its metrics report.
    Run(RunArgs),
    /// Run a named experiment suite (or `all`) and write its CSV tables.
    Suite(SuiteArgs),
    /// Print closed-form total/hotspot overhead tables for every scheme.
    Calc(CalcArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (line-oriented `key = value`; defaults when omitted).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the master seed (workload and protocol randomness).
    #[arg(long)]
    seed: Option<u64>,
    /// Override the topology seed (placement, mobility, failures, error).
    #[arg(long)]
    topology_seed: Option<u64>,
    /// Override the fidelity mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Override the protocol under test.
    #[arg(long, value_enum)]
    protocol: Option<ProtoArg>,
    /// Also write the report to `<out-dir>/metrics.txt`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite name, or `all` to run every suite.
    name: String,
    /// Directory for the CSV tables (default `results/`).
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CalcArgs {
    /// Insertions per node over the run.
    #[arg(long, default_value_t = 10.0)]
    insertions: f64,
    /// Lookups per node over the run.
    #[arg(long, default_value_t = 100.0)]
    lookups: f64,
    /// Region count for the rendezvous-regions scheme.
    #[arg(long, default_value_t = 16.0)]
    regions: f64,
    /// Servers per region for the rendezvous-regions scheme.
    #[arg(long, default_value_t = 3.0)]
    servers: f64,
    /// Write the table to `<out-dir>/calc.csv` instead of stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Detailed,
    HighLevel,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtoArg {
    Rr,
    Ght,
    GhtStar,
    Flooding,
    Centralized,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Suite(a) => cmd_suite(a),
        Cmd::Calc(a) => cmd_calc(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode, String> {
    let mut cfg = match &a.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            ScenarioConfig::parse(&text).map_err(|errs| errs.join("\n"))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.topology_seed {
        cfg.topology.seed = s;
    }
    if let Some(m) = a.mode {
        cfg.mode = match m {
            ModeArg::Detailed => Mode::Detailed,
            ModeArg::HighLevel => Mode::HighLevel,
        };
    }
    if let Some(p) = a.protocol {
        cfg.protocol = match p {
            ProtoArg::Rr => ProtocolKind::Rr,
            ProtoArg::Ght => ProtocolKind::Ght,
            ProtoArg::GhtStar => ProtocolKind::GhtStar,
            ProtoArg::Flooding => ProtocolKind::Flooding,
            ProtoArg::Centralized => ProtocolKind::Centralized,
        };
    }
    let mut sim = Sim::new(cfg).map_err(|e| e.to_string())?;
    let report = sim.run().map_err(|e| e.to_string())?;
    let text = report.to_text();
    print!("{text}");
    if let Some(dir) = a.out_dir {
        std::fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join("metrics.txt");
        std::fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_suite(a: SuiteArgs) -> Result<ExitCode, String> {
    let names: Vec<&str> = if a.name == "all" {
        SUITE_NAMES.to_vec()
    } else {
        vec![a.name.as_str()]
    };
    let mut all_passed = true;
    for name in names {
        let outcome = run_suite(name)?;
        let paths = outcome
            .write_tables(&a.out_dir)
            .map_err(|e| format!("writing tables for `{name}`: {e}"))?;
        print!("{}", outcome.summary());
        for p in paths {
            println!("  wrote {}", p.display());
        }
        all_passed &= outcome.passed();
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_calc(a: CalcArgs) -> Result<ExitCode, String> {
    const SCHEMES: [ProtocolKind; 5] = [
        ProtocolKind::Rr,
        ProtocolKind::Ght,
        ProtocolKind::GhtStar,
        ProtocolKind::Flooding,
        ProtocolKind::Centralized,
    ];
    let mut table = Table::new(&["scheme", "n", "total", "hotspot", "fallback"]);
    for &n in &[100.0, 1_000.0, 10_000.0, 100_000.0, 1_000_000.0] {
        let model = OverheadModel {
            n,
            insertions: a.insertions,
            lookups: a.lookups,
            regions: a.regions,
            servers: a.servers,
        };
        for &scheme in &SCHEMES {
            let c = asymptotic_costs(&model, scheme)?;
            table.row(&[
                scheme.name().to_string(),
                format!("{n:.0}"),
                num(c.total),
                num(c.hotspot),
                c.flagged.to_string(),
            ]);
        }
    }
    match a.out_dir {
        Some(dir) => {
            let path = dir.join("calc.csv");
            table.write(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(ExitCode::SUCCESS)
}
