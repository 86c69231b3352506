use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mcopt_bench::quality::trajectory_quality_report;
use mcopt_bench::{
    csvio, run_training, run_trajectory, HarnessError, Layout, Result, Summary, TrainSettings,
    TrajectorySettings,
};
use mcopt_bench::{path_metrics, repeat_experiment};
use mcopt_core::{
    make_synthetic, Activation, Centralization, Dataset, InitScheme, MlpSpec, OptimizerConfig,
    RectifierScale, ToyPoint, Variant,
};

/// Optimizer experiments on a 2-D landscape and a small MLP classifier.
#[derive(Parser, Debug)]
#[command(name = "mcopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate an optimizer on the two-well landscape and log every iterate.
    Trajectory(TrajectoryArgs),
    /// Train the MLP and log per-epoch loss and accuracy.
    Train(TrainArgs),
}

#[derive(Args, Debug)]
struct OptimArgs {
    /// sgd, sgdm, adam, radam or adabelief
    #[arg(long, default_value = "adam")]
    optimizer: String,
    /// none, gc or mc
    #[arg(long, default_value = "none")]
    centralize: String,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,
    /// SGDM momentum coefficient
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    /// Skip moment centralization for tensors with fewer elements
    #[arg(long, default_value_t = 2)]
    mc_min_elements: usize,
    /// RAdam rectifier variance factor: step-power (1 - beta2^t) or constant (1 - beta2)
    #[arg(long, default_value = "step-power")]
    rectifier: String,
}

impl OptimArgs {
    fn config(&self, lr: f64) -> Result<OptimizerConfig> {
        let variant: Variant = self.optimizer.parse()?;
        let centralization: Centralization = self.centralize.parse()?;
        let scale = match self.rectifier.as_str() {
            "step-power" => RectifierScale::StepPower,
            "constant" => RectifierScale::Constant,
            other => return Err(HarnessError::Config(format!("unknown rectifier `{other}`"))),
        };
        let cfg = OptimizerConfig::new(variant)
            .with_centralization(centralization)
            .with_lr(lr)
            .with_betas(self.beta1, self.beta2)
            .with_epsilon(self.eps)
            .with_momentum(self.momentum)
            .with_mc_min_elements(self.mc_min_elements)
            .with_rectifier_scale(scale);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Start point as `x,y`
    #[arg(long, default_value = "2,2", allow_hyphen_values = true)]
    start: String,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Stop once the gradient norm falls below this
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// split: x and y are separate scalar parameters; joint: one 2-vector
    #[arg(long, default_value = "split")]
    layout: String,
    /// Comma-separated seeds; each draws a random start in [-3, 3]^2
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Compare runs with and without moment centralization from random starts
    #[arg(long)]
    pair_mc: bool,
    /// With --pair-mc: number of random starts
    #[arg(long, default_value_t = 20)]
    starts: usize,
    /// With --pair-mc: seed for the random starts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    optim: OptimArgs,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated seeds for repeated runs
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// CSV path, or `synthetic`
    #[arg(long, default_value = "synthetic")]
    dataset: String,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    per_class: usize,
    #[arg(long, default_value_t = 0.15)]
    spread: f64,
    /// Hidden layer widths, comma separated
    #[arg(long, value_delimiter = ',', default_value = "16")]
    hidden: Vec<usize>,
    /// relu or tanh
    #[arg(long, default_value = "relu")]
    activation: String,
    /// Use unscaled standard-normal weight initialization
    #[arg(long)]
    standard_normal_init: bool,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<ToyPoint> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse(), y.parse()) {
            (Ok(x), Ok(y)) => Ok(ToyPoint::new(x, y)),
            _ => Err(HarnessError::Config(format!("bad start point `{s}`"))),
        },
        _ => Err(HarnessError::Config(format!(
            "start point must be `x,y`, got `{s}`"
        ))),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// `report.csv` -> `report.seed7.csv`
fn seeded_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}.seed{seed}"),
    };
    path.with_file_name(name)
}

/// The summary goes to stdout when the CSV went to a file, otherwise to stderr.
fn print_summary(summary: &Summary, csv_to_file: bool) {
    if csv_to_file {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
}

fn trajectory(args: TrajectoryArgs) -> Result<()> {
    let config = args.optim.config(args.lr)?;
    let settings = TrajectorySettings {
        layout: args.layout.parse::<Layout>()?,
        max_iters: args.max_iters,
        converge_tol: args.tol,
        ..Default::default()
    };
    let to_file = args.out.is_some();

    if args.pair_mc {
        let report = trajectory_quality_report(&config, args.starts, args.seed, &settings)?;
        report.write_csv(open_out(args.out.as_deref())?)?;
        let (base, mc) = report.median_path_length();
        let (base_turn, mc_turn) = report.median_turning_sum();
        let msg = format!(
            "median path_length: none {base:.4}, mc {mc:.4}; median turning_sum: none {base_turn:.4}, mc {mc_turn:.4}"
        );
        if to_file {
            println!("{msg}");
        } else {
            eprintln!("{msg}");
        }
        return Ok(());
    }

    if args.seeds.is_empty() {
        let start = parse_point(&args.start)?;
        let run = run_trajectory(&config, start, &settings)?;
        csvio::write_trajectory(&run.trajectory, open_out(args.out.as_deref())?)?;
        let last = run.trajectory.last().expect("non-empty trajectory");
        let status = match run.iterations_to_converge() {
            Some(n) => format!("converged after {n} iterations"),
            None => "not converged".to_string(),
        };
        let metrics = path_metrics(&run).ok();
        let msg = format!(
            "{}: {status}; end ({:.6}, {:.6}) f={:.6} grad_norm={:.3e}{}",
            config.label(),
            last.x,
            last.y,
            last.f,
            last.grad_norm,
            metrics.map_or(String::new(), |m| format!(
                "; path_length={:.4} turning_sum={:.4}",
                m.path_length, m.turning_sum
            ))
        );
        if to_file {
            println!("{msg}");
        } else {
            eprintln!("{msg}");
        }
        return Ok(());
    }

    let mut divergence = None;
    let summary = repeat_experiment(&args.seeds, |seed| {
        let start = mcopt_bench::quality::random_starts(1, seed)[0];
        let run = run_trajectory(&config, start, &settings).inspect_err(|e| {
            if e.exit_code() == 3 {
                divergence = Some(e.to_string());
            }
        })?;
        if let Some(path) = &args.out {
            csvio::write_trajectory(&run.trajectory, open_out(Some(&seeded_path(path, seed)))?)?;
        }
        Ok::<_, HarnessError>(run.trajectory.last().map_or(f64::NAN, |r| r.f))
    });
    print_summary(&summary, true);
    finish_repeats(&summary, divergence)
}

fn finish_repeats(summary: &Summary, divergence: Option<String>) -> Result<()> {
    if summary.n_ok() > 0 {
        return Ok(());
    }
    let reason = summary
        .failures
        .first()
        .map_or("no runs".to_string(), |f| f.1.clone());
    Err(match divergence {
        Some(d) => HarnessError::Divergence {
            stage: "run",
            index: 0,
            reason: d,
        },
        None => HarnessError::Config(reason),
    })
}

fn load_dataset(args: &TrainArgs, seed: u64) -> Result<Dataset> {
    if args.dataset == "synthetic" {
        Ok(make_synthetic(
            args.classes,
            args.per_class,
            args.spread,
            seed,
        )?)
    } else {
        Ok(Dataset::load_csv(&args.dataset)?)
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let config = args.optim.config(args.lr)?;
    let activation = match args.activation.as_str() {
        "relu" => Activation::Relu,
        "tanh" => Activation::Tanh,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown activation `{other}`"
            )))
        }
    };
    let init = if args.standard_normal_init {
        InitScheme::StandardNormal
    } else {
        InitScheme::ScaledNormal
    };
    let seeds = if args.seeds.is_empty() {
        vec![args.seed]
    } else {
        args.seeds.clone()
    };

    let run_one = |seed: u64| -> Result<mcopt_bench::TrainReport> {
        let data = load_dataset(&args, seed)?;
        let mut widths = vec![data.dim()];
        widths.extend(&args.hidden);
        widths.push(data.classes());
        let spec = MlpSpec::new(widths, activation, seed)?;
        let settings = TrainSettings {
            epochs: args.epochs,
            batch_size: args.batch_size,
            seed,
            test_fraction: args.test_fraction,
            init,
        };
        run_training(&data, &spec, &config, &settings)
    };

    if seeds.len() == 1 {
        let report = run_one(seeds[0])?;
        csvio::write_report(&report.records, open_out(args.out.as_deref())?)?;
        let acc = report
            .final_record()
            .map_or(f64::NAN, |r| 100.0 * r.test_acc);
        print_summary(&Summary::from_values(vec![acc]), args.out.is_some());
        return Ok(());
    }

    let mut divergence = None;
    let summary = repeat_experiment(&seeds, |seed| {
        let report = run_one(seed).inspect_err(|e| {
            if e.exit_code() == 3 {
                divergence = Some(e.to_string());
            }
        })?;
        if let Some(path) = &args.out {
            csvio::write_report(&report.records, open_out(Some(&seeded_path(path, seed)))?)?;
        }
        Ok::<_, HarnessError>(
            report
                .final_record()
                .map_or(f64::NAN, |r| 100.0 * r.test_acc),
        )
    });
    print_summary(&summary, true);
    finish_repeats(&summary, divergence)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Trajectory(args) => trajectory(args),
        Command::Train(args) => train(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("-1.5, 2").unwrap(), ToyPoint::new(-1.5, 2.0));
        assert!(parse_point("1").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn seeded_paths() {
        assert_eq!(
            seeded_path(Path::new("out/r.csv"), 3),
            PathBuf::from("out/r.seed3.csv")
        );
        assert_eq!(seeded_path(Path::new("r"), 3), PathBuf::from("r.seed3"));
    }

    #[test]
    fn cli_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
