use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fogfed::scenario::{self, suites, ScenarioConfig};
use fogfed::sim::aggregate;

#[derive(Parser)]
#[command(name = "fogfed", version, about = "Fog federation workflow partitioning and allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario sweep and write one CSV row per run.
    Simulate {
        /// Scenario JSON file, or the name of a built-in suite.
        #[arg(long)]
        config: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Maximum concurrent runs (defaults to the number of cores).
        #[arg(long, env = "FOGFED_PARALLEL")]
        parallel: Option<usize>,
        /// Write allocation decisions as JSON lines next to the CSV.
        #[arg(long)]
        trace: bool,
        /// Override the repetition count.
        #[arg(long)]
        repetitions: Option<u32>,
    },
    /// Aggregate a simulation CSV into per-cell means, 95% intervals and
    /// pairwise method differences.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// Optional CSV output of the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiment suites.
    Suites {
        /// Print the full JSON of one suite.
        #[arg(long)]
        show: Option<String>,
    },
}

fn load_config(arg: &str) -> Result<ScenarioConfig> {
    if suites::NAMES.contains(&arg) {
        return Ok(suites::get(arg)?);
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("reading config {arg}"))?;
    ScenarioConfig::from_json(&text).with_context(|| format!("invalid config {arg}"))
}

fn trace_path(out: &std::path::Path) -> PathBuf {
    let mut p = out.as_os_str().to_owned();
    p.push(".trace.jsonl");
    PathBuf::from(p)
}

fn simulate(config: &str, out: PathBuf, parallel: Option<usize>, trace: bool, reps: Option<u32>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(r) = reps {
        if r == 0 {
            bail!("--repetitions must be at least 1");
        }
        cfg.repetitions = r;
    }
    let threads = parallel.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let output = scenario::run_scenario(&cfg, threads, trace)?;
    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    scenario::write_csv(&output.reports, BufWriter::new(file))?;
    if trace {
        let path = trace_path(&out);
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        for (run, t) in output.traces.iter().enumerate() {
            for rec in &t.plans {
                let line = serde_json::json!({ "run": run, "request": rec.request_id, "plan": rec.plan });
                writeln!(w, "{line}")?;
            }
            for d in &t.decisions {
                let line = serde_json::json!({ "run": run, "decision": d });
                writeln!(w, "{line}")?;
            }
        }
        w.flush()?;
    }
    eprintln!("wrote {} runs to {}", output.reports.len(), out.display());
    Ok(())
}

fn report(input: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let reports = scenario::read_csv(file).with_context(|| format!("parsing {}", input.display()))?;
    let cells = aggregate(&reports)?;
    let deltas = scenario::method_deltas(&reports)?;
    print!("{}", scenario::render_report(&cells, &deltas));
    if let Some(out) = out {
        let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
        scenario::write_summary_csv(&cells, &deltas, BufWriter::new(file))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { config, out, parallel, trace, repetitions } => {
            simulate(&config, out, parallel, trace, repetitions)
        }
        Command::Report { input, out } => report(input, out),
        Command::Suites { show } => {
            match show {
                Some(name) => println!("{}", suites::get(&name)?.to_json()),
                None => print!("{}", suites::listing()),
            }
            Ok(())
        }
    }
}
