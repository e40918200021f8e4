use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relaybf::channel::trial_seed;
use relaybf::harness::{
    emit_csv, linear_to_db, run_experiment, run_feasibility, run_trial, summarize, Axis, ExperimentSpec,
    ScenarioConfig, SchemeSelection, TrialRecord, TrialStatus, DEFAULT_TRIALS,
};
use relaybf::{Error, Result};

#[derive(Parser)]
#[command(name = "relaybf", version, about = "Joint beamforming and power allocation for MIMO relay broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Feasibility test on one channel draw.
    Feasibility(Common),
    /// Feasibility test followed by sum-power minimization on one channel draw.
    /// Exits with 1 when a scheme cannot meet the targets.
    Minimize(Common),
    /// Monte Carlo sweep over one scenario parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// sinr_target, distance_ratio, users, power_cap or hops.
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Eigen-channel scheme with and without subchannel pairing on the same draws.
    Pairing {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_axis, default_value = "sinr_target")]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Eigen-channel relay chains with relays spread evenly over the configured length.
    Multihop {
        #[command(flatten)]
        common: Common,
        /// Hop counts; 1 is a direct broadcast.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        values: Vec<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// af, svd or both (default both; svd for pairing and multihop).
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeSelection>,
    /// Channel draws per point (default 200; single-draw commands take 1).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Subchannel pairing for the eigen-channel scheme.
    #[arg(long, value_enum)]
    pairing: Option<Toggle>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

fn parse_axis(s: &str) -> Result<Axis> {
    s.parse()
}

fn parse_scheme(s: &str) -> Result<SchemeSelection> {
    s.parse()
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::load(&self.config)
    }

    fn pairing(&self) -> bool {
        self.pairing != Some(Toggle::Off)
    }

    fn spec(&self, config: ScenarioConfig, scheme: SchemeSelection, axis: Axis, values: Vec<f64>) -> ExperimentSpec {
        ExperimentSpec {
            scheme,
            axis,
            values,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            config,
            seed: self.seed,
            pairing: self.pairing(),
            out: self.out.clone(),
        }
    }

    /// Scheme for commands that only run the eigen-channel design.
    fn svd_only(&self, command: &str) -> Result<SchemeSelection> {
        match self.scheme {
            None | Some(SchemeSelection::Svd) => Ok(SchemeSelection::Svd),
            Some(_) => Err(Error::Config(format!("{command} runs the svd scheme only"))),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Feasibility(c) => single(&c, false),
        Command::Minimize(c) => single(&c, true),
        Command::Sweep { common, axis, values } => {
            let spec = common.spec(common.load()?, common.scheme.unwrap_or(SchemeSelection::Both), axis, values);
            let records = run_experiment(&spec)?;
            print_summary(axis, &records);
            Ok(ExitCode::SUCCESS)
        }
        Command::Pairing { common, axis, values } => pairing(&common, axis, values),
        Command::Multihop { common, values } => {
            let spec = common.spec(common.load()?, common.svd_only("multihop")?, Axis::Hops, values);
            let records = run_experiment(&spec)?;
            print_summary(Axis::Hops, &records);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn single(c: &Common, minimize: bool) -> Result<ExitCode> {
    if c.trials.is_some_and(|t| t != 1) {
        return Err(Error::Config("single-draw commands take --trials 1".into()));
    }
    let config = c.load()?;
    let scheme = c.scheme.unwrap_or(SchemeSelection::Both);
    if config.hops != 2 && scheme != SchemeSelection::Svd {
        return Err(Error::Config("the af scheme needs hops = 2".into()));
    }
    let seed = trial_seed(c.seed, 0);
    let records = if minimize {
        run_trial(&config, scheme.schemes(), c.pairing(), 0.0, 0, seed)
    } else {
        run_feasibility(&config, scheme.schemes(), c.pairing(), 0.0, 0, seed)
    };
    if let Some(out) = &c.out {
        emit_csv(&records, out)?;
    }
    let gamma_db: Vec<String> = config.scenario.gamma.iter().map(|g| format!("{:.2}", linear_to_db(*g))).collect();
    println!("draw seed {seed}, targets {} dB", gamma_db.join(" "));
    for r in &records {
        print_record(r);
    }
    if let Some(r) = records.iter().find(|r| r.status == TrialStatus::Error) {
        return Err(Error::Config(format!("{} scheme failed on this draw", r.scheme)));
    }
    if minimize && records.iter().any(|r| !r.passed) {
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_record(r: &TrialRecord) {
    println!("{}: {}", r.scheme, r.status);
    println!("  t {:.6}  balanced level {:.6}", r.t, r.balanced_level);
    println!("  p_b {:.6} W  p_r {:.6} W  sum {:.6} W", r.p_b, r.p_r, r.sum_power);
    let sinr: Vec<String> = r.sinr.iter().map(|s| format!("{:.3}", linear_to_db(*s))).collect();
    println!("  sinr {} dB", sinr.join(" "));
    println!("  outer iterations {} + {}, inner {}", r.feas_outer, r.min_outer, r.inner_iters);
}

fn print_summary(axis: Axis, records: &[TrialRecord]) {
    println!("{:>14} {:>6} {:>10} {:>7} {:>14} {:>12} {:>9}", axis.to_string(), "scheme", "feasible", "paired", "sum_power", "level", "iters");
    for s in summarize(records) {
        println!(
            "{:>14} {:>6} {:>10} {:>7} {:>14.6} {:>12.6} {:>9.3}",
            s.axis,
            s.scheme,
            format!("{}/{}", s.passed, s.trials),
            s.paired,
            s.mean_sum_power,
            s.mean_balanced_level,
            s.avg_iterations
        );
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

fn pairing(c: &Common, axis: Axis, values: Vec<f64>) -> Result<ExitCode> {
    if c.pairing.is_some() {
        return Err(Error::Config("pairing runs both settings; drop --pairing".into()));
    }
    let scheme = c.svd_only("pairing")?;
    let mut spec = c.spec(c.load()?, scheme, axis, values);
    let mut runs = Vec::new();
    for (on, suffix) in [(true, "paired"), (false, "unpaired")] {
        spec.pairing = on;
        spec.out = c.out.as_deref().map(|p| with_suffix(p, suffix));
        runs.push(run_experiment(&spec)?);
    }
    println!("{:>14} {:>10} {:>10} {:>7} {:>14} {:>14}", axis.to_string(), "paired", "unpaired", "both", "paired_power", "unpaired_power");
    for (point_on, point_off) in runs[0].chunk_by(|a, b| a.axis == b.axis).zip(runs[1].chunk_by(|a, b| a.axis == b.axis)) {
        let both: Vec<(&TrialRecord, &TrialRecord)> =
            point_on.iter().zip(point_off).filter(|(a, b)| a.passed && b.passed).collect();
        let mean = |f: fn(&(&TrialRecord, &TrialRecord)) -> f64| {
            if both.is_empty() {
                f64::NAN
            } else {
                both.iter().map(f).sum::<f64>() / both.len() as f64
            }
        };
        println!(
            "{:>14} {:>10} {:>10} {:>7} {:>14.6} {:>14.6}",
            point_on[0].axis,
            format!("{}/{}", point_on.iter().filter(|r| r.passed).count(), point_on.len()),
            format!("{}/{}", point_off.iter().filter(|r| r.passed).count(), point_off.len()),
            both.len(),
            mean(|(a, _)| a.sum_power),
            mean(|(_, b)| b.sum_power)
        );
    }
    Ok(ExitCode::SUCCESS)
}
