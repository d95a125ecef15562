use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qot_core::datagen::{generate_dataset, GenConfig};
use qot_core::evalharness::{
    emit_report, evaluate, ingest_measurements, record_case_id, sweep_cases, write_case_listing,
    EtaPredictor, OracleModel, SweepConfig, SweepReference,
};
use qot_core::linkmodel::{read_jsonl, validate_plan};
use qot_core::neural::{train, write_loss_log, MlpModel, Preset, TrainConfig};
use qot_core::physics::{
    eta_closed_form_parts, eta_numerical, linear_noise, optimal_power, penalties_for, NoiseBudget,
    DEFAULT_NF_DB,
};
use qot_core::{ChannelPlan, LabeledRecord, Link, Scenario};

#[derive(Parser)]
#[command(name = "qot", version, about = "Nonlinear-noise oracle and neural QoT estimation for WDM links")]
struct Cli {
    /// Overrides the seed of the subcommand's config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for generation and evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress progress output; summary lines are still printed.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled JSONL dataset.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network on a labeled dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        arch: Arch,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        /// Per-epoch loss CSV.
        #[arg(long)]
        loss_log: Option<PathBuf>,
    },
    /// Predict eta and SNR for scenarios (bare or labeled JSONL).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NF_DB)]
        nf_db: f64,
    },
    /// ΔSNR of a model against dataset labels.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
    },
    /// Channel-plan sweep against the oracle or measured SNRs.
    Sweep {
        /// Model file, or `oracle` for the closed-form model.
        #[arg(long)]
        model: String,
        #[arg(long)]
        sweep_config: PathBuf,
        #[arg(long)]
        measurements: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the physics model for one link and plan.
    Oracle {
        #[arg(long)]
        link: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Also integrate numerically with this many points per dimension.
        #[arg(long)]
        numerical: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_NF_DB)]
        nf_db: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    Ann,
    Snn,
}

impl From<Arch> for Preset {
    fn from(a: Arch) -> Self {
        match a {
            Arch::Ann => Preset::Ann,
            Arch::Snn => Preset::Snn,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Test,
    All,
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

fn data(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Generate { config, out } => cmd_generate(cli, config, out),
        Command::Train {
            data,
            arch,
            out,
            epochs,
            loss_log,
        } => cmd_train(cli, data, (*arch).into(), out, *epochs, loss_log.as_deref()),
        Command::Predict {
            model,
            scenario,
            out,
            nf_db,
        } => cmd_predict(cli, model, scenario, out, *nf_db),
        Command::Evaluate {
            model,
            data,
            out,
            split,
        } => cmd_evaluate(model, data, out, *split),
        Command::Sweep {
            model,
            sweep_config,
            measurements,
            out,
        } => cmd_sweep(cli, model, sweep_config, measurements.as_deref(), out),
        Command::Oracle {
            link,
            plan,
            numerical,
            nf_db,
        } => cmd_oracle(link, plan, *numerical, *nf_db),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(data)
}

fn read_records(path: &Path) -> Result<Vec<LabeledRecord>, Failure> {
    let f = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(data)?;
    read_jsonl(BufReader::new(f))
        .with_context(|| format!("reading {}", path.display()))
        .map_err(data)
}

fn load_model(path: &Path) -> Result<MlpModel, Failure> {
    MlpModel::load_path(path)
        .with_context(|| format!("loading model {}", path.display()))
        .map_err(usage)
}

fn cmd_generate(cli: &Cli, config_path: &Path, out: &Path) -> CmdResult {
    let mut config = GenConfig::from_path(config_path)
        .with_context(|| format!("config {}", config_path.display()))
        .map_err(usage)?;
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    config.validate().map_err(usage)?;
    let start = Instant::now();
    let n = generate_dataset(&config, create(out)?, None).map_err(data)?;
    println!(
        "generated {n} records into {} in {:.2} s",
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_train(
    cli: &Cli,
    data_path: &Path,
    preset: Preset,
    out: &Path,
    epochs: Option<usize>,
    loss_log: Option<&Path>,
) -> CmdResult {
    let mut config = TrainConfig::default();
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(e) = epochs {
        config.epochs = e;
    }
    config.validate().map_err(usage)?;
    let records = read_records(data_path)?;
    let start = Instant::now();
    let quiet = cli.quiet;
    let (model, log) = train(&records, preset, &config, |e| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  lr {:.0e}  train {:.6}  val {:.6}",
                e.epoch, e.lr, e.train_loss, e.val_loss
            );
        }
    })
    .map_err(data)?;
    model.save(create(out)?).map_err(data)?;
    if let Some(path) = loss_log {
        write_loss_log(create(path)?, &log).map_err(data)?;
    }
    let last = log.last().expect("at least one epoch");
    println!(
        "trained {} ({} parameters) in {:.1} s: train loss {:.6}, val loss {:.6}",
        model.metadata.model_id,
        model.network.parameter_count(),
        start.elapsed().as_secs_f64(),
        last.train_loss,
        last.val_loss
    );
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScenarioLine {
    Labeled(LabeledRecord),
    Bare(Scenario),
}

impl ScenarioLine {
    fn into_scenario(self) -> Scenario {
        match self {
            ScenarioLine::Labeled(r) => r.scenario,
            ScenarioLine::Bare(s) => s,
        }
    }
}

fn cmd_predict(cli: &Cli, model_path: &Path, input: &Path, out: &Path, nf_db: f64) -> CmdResult {
    let model = load_model(model_path)?;
    let f = File::open(input)
        .with_context(|| format!("cannot open {}", input.display()))
        .map_err(data)?;
    let scenarios: Vec<Scenario> = read_jsonl::<ScenarioLine>(BufReader::new(f))
        .with_context(|| format!("reading {}", input.display()))
        .map_err(data)?
        .into_iter()
        .map(ScenarioLine::into_scenario)
        .collect();

    let start = Instant::now();
    let etas = model.predict_etas(&scenarios).map_err(data)?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut w = create(out)?;
    let mut write = || -> anyhow::Result<()> {
        writeln!(w, "scenario_id,eta,snr_db")?;
        for (i, (s, eta)) in scenarios.iter().zip(&etas).enumerate() {
            let budget = NoiseBudget {
                sigma2: linear_noise(&s.link, s.plan.cut(), nf_db),
                eta: *eta,
                penalties_db: penalties_for(&s.plan),
            };
            let snr = budget.snr_db(s.plan.cut().launch_power)?;
            writeln!(w, "{i},{eta},{snr}")?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(data)?;
    let n = scenarios.len();
    if !cli.quiet && n > 0 {
        eprintln!("{:.3} us per case", elapsed * 1e6 / n as f64);
    }
    println!("predicted {n} scenarios in {elapsed:.4} s");
    Ok(())
}

fn cmd_evaluate(model_path: &Path, data_path: &Path, out: &Path, split: SplitArg) -> CmdResult {
    let model = load_model(model_path)?;
    let records = read_records(data_path)?;
    let indices: Vec<usize> = match split {
        SplitArg::All => (0..records.len()).collect(),
        SplitArg::Test => {
            let fp = qot_core::neural::dataset_fingerprint(&records);
            if fp != model.metadata.dataset_fingerprint {
                return Err(data(anyhow!(
                    "{} is not the dataset this model was trained on; use --split all",
                    data_path.display()
                )));
            }
            model.split().test
        }
    };
    let report = evaluate(
        &model,
        indices.iter().map(|&i| (record_case_id(i), &records[i])),
    )
    .map_err(data)?;
    emit_report(&report, out).map_err(data)?;
    println!(
        "{} cases: mean ΔSNR {:.4} dB, max ΔSNR {:.4} dB",
        report.n_cases, report.mean_delta_db, report.max_delta_db
    );
    Ok(())
}

fn cmd_sweep(
    cli: &Cli,
    model_arg: &str,
    config_path: &Path,
    measurements: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let config = SweepConfig::from_path(config_path).map_err(usage)?;
    let cases = config.cases().map_err(usage)?;
    let model: Box<dyn EtaPredictor> = if model_arg == "oracle" {
        Box::new(OracleModel)
    } else {
        Box::new(load_model(Path::new(model_arg))?)
    };
    let table = match measurements {
        Some(p) => {
            let f = File::open(p)
                .with_context(|| format!("cannot open {}", p.display()))
                .map_err(data)?;
            Some(
                ingest_measurements(f)
                    .with_context(|| format!("reading {}", p.display()))
                    .map_err(data)?,
            )
        }
        None => None,
    };
    let reference = match &table {
        Some(t) => SweepReference::Measurements(t),
        None => SweepReference::Oracle,
    };
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(data)?;
    write_case_listing(&cases, create(&out.join("cases.csv"))?).map_err(data)?;
    if !cli.quiet {
        eprintln!("{} cases from {}", cases.len(), config.name);
    }
    let report = sweep_cases(&cases, config.nf_db, model.as_ref(), reference).map_err(data)?;
    emit_report(&report, out).map_err(data)?;
    println!(
        "{} cases vs {}: mean ΔSNR {:.4} dB, max ΔSNR {:.4} dB",
        report.n_cases, report.reference, report.mean_delta_db, report.max_delta_db
    );
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let f = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(usage)?;
    serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn cmd_oracle(link_path: &Path, plan_path: &Path, numerical: Option<usize>, nf_db: f64) -> CmdResult {
    let link: Link = read_json(link_path)?;
    let mut plan: ChannelPlan = read_json(plan_path)?;
    let violations = validate_plan(&plan);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(usage(anyhow!("{} plan violation(s)", violations.len())));
    }
    plan.canonicalize();
    for w in link.range_warnings() {
        eprintln!("warning: {w}");
    }
    let parts = eta_closed_form_parts(&link, &plan).map_err(data)?;
    let eta = parts.total();
    let cut = plan.cut();
    let budget = NoiseBudget {
        sigma2: linear_noise(&link, cut, nf_db),
        eta,
        penalties_db: penalties_for(&plan),
    };
    println!("eta_closed_form {eta:.9e}");
    println!("eta_sci {:.9e}", parts.sci);
    println!("eta_xci {:.9e}", parts.xci);
    println!("sigma2_w {:.9e}", budget.sigma2);
    println!("penalties_db {:.9}", budget.penalties_db);
    println!(
        "snr_db {:.9}",
        budget.snr_db(cut.launch_power).map_err(data)?
    );
    if eta > 0.0 {
        println!(
            "optimal_power_dbm {:.9}",
            optimal_power(budget.sigma2, eta).map_err(data)?
        );
    }
    if let Some(points) = numerical {
        let num = eta_numerical(&link, &plan, points).map_err(usage)?;
        println!("eta_numerical {num:.9e}");
        println!("gap_db {:.9}", 10.0 * (eta / num).log10());
    }
    Ok(())
}
