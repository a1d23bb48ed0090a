use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hybridtime::characterization::{characterize_with_tolerance, MeasuredDelays, DEFAULT_TOLERANCE};
use hybridtime::metrics::{compare, compare_signals};
use hybridtime::netlist::{DelayModel, Netlist, ParamsRef};
use hybridtime::simulator::{run, sweep, SimConfig, SweepConfig, SweepPoint};
use hybridtime::stimuli::{generate_stimuli, StimulusSpec, DEFAULT_FLOOR};
use hybridtime::time::parse_time;
use hybridtime::trace::{read_traces, write_traces, Trace};
use serde::Serialize;

mod errors;
mod selftest;

use errors::exit_code;

#[derive(Parser)]
#[command(name = "hybridtime", version, about = "Hybrid delay model simulator for 2-input NOR/NAND circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit gate parameters to six measured MIS delays
    Characterize(CharacterizeArgs),
    /// Simulate a netlist under given input traces
    Simulate(SimulateArgs),
    /// Generate random input traces
    Stimuli(StimuliArgs),
    /// Compare two sets of digital traces
    Compare(CompareArgs),
    /// Monte Carlo sweep over stimulus settings
    Sweep(SweepArgs),
    /// Run the built-in reference checks
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct CharacterizeArgs {
    #[arg(long)]
    measured: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative tolerance of the verification pass
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Vcd,
    Csv,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Vcd => "vcd",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Input traces (.csv or .vcd)
    #[arg(long)]
    stimuli: PathBuf,
    /// Simulation end; defaults to 1 ns after the last stimulus edge
    #[arg(long, value_parser = parse_time)]
    t_end: Option<f64>,
    #[arg(long)]
    out_dir: PathBuf,
    /// Use these parameters for every gate
    #[arg(long)]
    params: Option<PathBuf>,
    /// Use this delay model for every gate
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_enum, default_value = "vcd")]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hybrid,
    Pure,
    Inertial,
}

impl From<ModelArg> for DelayModel {
    fn from(m: ModelArg) -> DelayModel {
        match m {
            ModelArg::Hybrid => DelayModel::Hybrid,
            ModelArg::Pure => DelayModel::Pure,
            ModelArg::Inertial => DelayModel::Inertial,
        }
    }
}

#[derive(Args)]
struct StimuliArgs {
    /// Take the input names from this netlist
    #[arg(long, conflicts_with = "inputs", required_unless_present = "inputs")]
    netlist: Option<PathBuf>,
    /// Comma-separated input names
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<String>,
    #[arg(long, value_parser = parse_time)]
    mu: f64,
    #[arg(long, value_parser = parse_time)]
    sigma: f64,
    /// Transitions per input
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_time, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    /// Output file (.csv or .vcd)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    cand: PathBuf,
    /// Report file; stdout when omitted
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    include_glitches: bool,
    /// Compare only this net
    #[arg(long)]
    net: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    netlist: PathBuf,
    /// Comma-separated mean gaps
    #[arg(long, value_delimiter = ',', value_parser = parse_time, required = true)]
    mu: Vec<f64>,
    /// Comma-separated gap deviations
    #[arg(long, value_delimiter = ',', value_parser = parse_time, required = true)]
    sigma: Vec<f64>,
    #[arg(long)]
    n: usize,
    /// Runs per (mu, sigma) point
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_time, default_value_t = DEFAULT_FLOOR)]
    floor: f64,
    /// Also simulate every run with this model and report the deviation
    #[arg(long, value_enum)]
    compare_with: Option<ModelArg>,
    #[arg(long)]
    include_glitches: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Report file; stdout when omitted
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYBRIDTIME_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Characterize(a) => cmd_characterize(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Stimuli(a) => cmd_stimuli(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest(a) => selftest::run(a.tolerance),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!(errors::Usage(format!("--{name} must be positive, got {v:e}")));
    }
    Ok(())
}

fn cmd_characterize(a: CharacterizeArgs) -> Result<()> {
    positive("tolerance", a.tolerance)?;
    let text = fs::read_to_string(&a.measured).with_context(|| format!("reading {}", a.measured.display()))?;
    let m: MeasuredDelays =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.measured.display()))?;
    let p = characterize_with_tolerance(&m, a.tolerance)?;
    write_json(&p, a.out.as_deref())
}

fn load_netlist(path: &Path) -> Result<Netlist> {
    Ok(Netlist::from_file(path)?)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    if let Some(t) = a.t_end {
        positive("t-end", t)?;
    }
    let mut netlist = load_netlist(&a.netlist)?;
    if let Some(path) = &a.params {
        let p = hybridtime::netlist::load_params(path)?;
        let mut doc = netlist.doc().clone();
        for g in &mut doc.gates {
            g.params = ParamsRef::Inline(p);
        }
        netlist = Netlist::from_doc(doc, Path::new("."))?;
    }
    if let Some(m) = a.model {
        netlist = netlist.with_model(m.into())?;
    }
    let stimuli = read_traces(&a.stimuli)?;
    let t_end = a.t_end.unwrap_or_else(|| {
        stimuli.iter().filter_map(|t| t.transitions.last()).map(|t| t.time).fold(0.0, f64::max) + 1e-9
    });
    let res = run(&netlist, &stimuli, &SimConfig::until(t_end))?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let traces: Vec<Trace> = res.traces.into_values().collect();
    write_traces(&a.out_dir.join(format!("traces.{}", a.format.ext())), &traces)?;
    write_json(&res.stats, Some(&a.out_dir.join("stats.json")))?;
    log::info!("{} events, {} real outputs", res.stats.events_processed, res.stats.real_outputs);
    Ok(())
}

fn cmd_stimuli(a: StimuliArgs) -> Result<()> {
    let inputs = match &a.netlist {
        Some(path) => load_netlist(path)?.input_names(),
        None => a.inputs.clone(),
    };
    if inputs.is_empty() {
        bail!(errors::Usage("no inputs given".into()));
    }
    let spec = StimulusSpec { mu: a.mu, sigma: a.sigma, n: a.n, seed: a.seed, floor: a.floor };
    let stim = generate_stimuli(&spec, &inputs).map_err(|e| errors::Usage(e.to_string()))?;
    write_traces(&a.out, &stim.traces)?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let reference = read_traces(&a.reference)?;
    let candidate = read_traces(&a.cand)?;
    let mut reports = Vec::new();
    // two single-signal files are compared whatever their net names
    if let ([r], [c]) = (reference.as_slice(), candidate.as_slice()) {
        if a.net.is_none() {
            reports.push(compare_signals(r, c, a.include_glitches)?);
            return write_json(&reports, a.report.as_deref());
        }
    }
    for r in &reference {
        if a.net.as_ref().is_some_and(|n| *n != r.net) {
            continue;
        }
        match candidate.iter().find(|c| c.net == r.net) {
            Some(c) => reports.push(compare(r, c, a.include_glitches)?),
            None => log::warn!("net {:?} missing from {}", r.net, a.cand.display()),
        }
    }
    if reports.is_empty() {
        bail!(errors::Data("the two trace files share no net".into()));
    }
    write_json(&reports, a.report.as_deref())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    if a.runs == 0 || a.n == 0 {
        bail!(errors::Usage("--runs and --n must be at least 1".into()));
    }
    if a.jobs == Some(0) {
        bail!(errors::Usage("--jobs must be at least 1".into()));
    }
    let netlist = load_netlist(&a.netlist)?;
    let points =
        a.mu.iter().flat_map(|&mu| a.sigma.iter().map(move |&sigma| SweepPoint { mu, sigma })).collect();
    let cfg = SweepConfig {
        points,
        runs_per_point: a.runs,
        n: a.n,
        base_seed: a.seed,
        floor: a.floor,
        compare_with: a.compare_with.map(Into::into),
        include_glitches: a.include_glitches,
        jobs: a.jobs,
        ..SweepConfig::default()
    };
    let report = sweep(&netlist, &cfg)?;
    let failed = report.runs.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} of {} runs failed", report.runs.len());
    }
    write_json(&report, a.report.as_deref())
}
