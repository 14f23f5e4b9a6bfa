//! The `bns` command line: argument parsing, config resolution and the six
//! subcommands. Each command writes machine-readable files into the output
//! directory and prints its main JSON result to stdout.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{resolve_seed, Config};
use crate::error::{Error, Result};
use crate::features::{
    load_csv, realized_volatility_series, rv_return_pct, summary_stats, LabeledDataset, PriceSeries,
};
use crate::hedging::{self, MarketState};
use crate::model::{ensemble_summary, simulate_paths, synth_series};
use crate::pipeline::{compare_hedging, evaluate_dataset, run_experiment, Approach, ExperimentOutput};
use crate::varswap;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bns", version, about = "Refined BN-S simulation, variance swaps, hedging and theta extraction")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config file; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed. Beats the config's `seed`, which beats BNS_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a config key, e.g. `--set model.lambda=2.0`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory; beats the config's `out_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate paths and summarize an ensemble.
    Simulate,
    /// Variance swap price, optionally checked by Monte Carlo.
    Price {
        /// Also run the Monte Carlo estimate.
        #[arg(long)]
        mc: bool,
    },
    /// Hedge ratio at inception and hedging-error statistics per strategy.
    Hedge,
    /// Summary statistics and labeled dataset for a price series.
    Features {
        /// `date,price` CSV; beats `data.input`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train classifiers on a labeled dataset CSV.
    Train {
        /// Dataset with header `origin_index,f1..fw,theta`.
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Label, split, train, report and compare hedging for one series.
    Experiment {
        /// `date,price` CSV; beats `data.input`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Exit code for an error: 2 parse, 3 validation, 4 runtime.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => EXIT_PARSE,
        Error::Domain(_)
        | Error::InvalidParameter { .. }
        | Error::InsufficientPaths { .. }
        | Error::Validation { .. }
        | Error::SeriesTooShort { .. }
        | Error::Overlap(_)
        | Error::ShapeMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::EmptyModelSet => EXIT_VALIDATION,
        Error::QuadratureFailure { .. } | Error::Io(_) => EXIT_RUNTIME,
    }
}

/// Fully resolved run settings.
pub struct Context {
    pub config: Config,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn resolve(global: &GlobalArgs) -> Result<Self> {
        let config = match &global.config {
            Some(p) => Config::from_json(&fs::read_to_string(p)?)?,
            None => Config::default(),
        }
        .with_overrides(&global.overrides)?;
        config.validate()?;
        let env = std::env::var("BNS_SEED").ok();
        let seed = resolve_seed(global.seed, config.seed, env.as_deref())?;
        let out = global.out.clone().unwrap_or_else(|| config.out_dir.clone());
        Ok(Context { config, seed, out })
    }

    fn path(&self, name: &str) -> Result<PathBuf> {
        let p = self.out.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name)?, text)?;
        Ok(())
    }

    fn create(&self, name: &str) -> Result<fs::File> {
        Ok(fs::File::create(self.path(name)?)?)
    }

    fn series(&self, input: Option<&Path>) -> Result<(PriceSeries, bool)> {
        match input.or(self.config.data.input.as_deref()) {
            Some(p) => Ok((load_csv(p)?, false)),
            None => {
                let c = &self.config;
                let s = synth_series(&c.model, &c.subordinators, c.data.synthetic_days, self.seed, c.data.synthetic_start)?;
                Ok((s, true))
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(Error::invalid("threads", "must be >= 1"));
        }
        // fails only if a pool already exists, e.g. when called twice in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context::resolve(&cli.global)?;
    let result = match cli.command {
        Command::Simulate => cmd_simulate(&ctx)?,
        Command::Price { mc } => cmd_price(&ctx, mc)?,
        Command::Hedge => cmd_hedge(&ctx)?,
        Command::Features { input } => cmd_features(&ctx, input.as_deref())?,
        Command::Train { dataset } => cmd_train(&ctx, &dataset)?,
        Command::Experiment { input } => cmd_experiment(&ctx, input.as_deref())?,
    };
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn warn_intensity(c: &Config) {
    if let Some(w) = c.subordinators.intensity_warning() {
        eprintln!("warning: {w}");
    }
}

pub fn cmd_simulate(ctx: &Context) -> Result<serde_json::Value> {
    let c = &ctx.config;
    warn_intensity(c);
    let sim = &c.simulate;
    let paths = simulate_paths(&c.model, &c.subordinators, sim.n_steps, sim.write_paths, ctx.seed)?;
    for (i, p) in paths.iter().enumerate() {
        p.write_csv(ctx.create(&format!("paths/path_{i:04}.csv"))?)?;
    }
    let summary = ensemble_summary(&c.model, &c.subordinators, sim.n_steps, sim.n_paths, ctx.seed)?;
    ctx.write_json("ensemble.json", &summary)?;
    Ok(serde_json::to_value(summary)?)
}

pub fn cmd_price(ctx: &Context, mc: bool) -> Result<serde_json::Value> {
    let c = &ctx.config;
    warn_intensity(c);
    let price = varswap::price(&c.model, &c.subordinators, &c.contract, 0.0, c.model.sigma0_sq, 0.0)?;
    let fair = varswap::fair_strike(&c.model, &c.subordinators)?;
    let mut out = json!({
        "closed_form_price": price,
        "fair_strike": fair,
        "contract": c.contract,
    });
    if mc || c.price.monte_carlo {
        let est = varswap::monte_carlo_price(
            &c.model,
            &c.subordinators,
            &c.contract,
            crate::model::PathState::initial(&c.model),
            c.price.n_steps,
            c.price.n_paths,
            ctx.seed,
        )?;
        out["monte_carlo"] = json!({
            "price": est.mean,
            "std_error": est.std_error,
            "n_paths": est.n,
            "n_steps": c.price.n_steps,
            "seed": ctx.seed,
            "z_score": est.z_score(price),
        });
    }
    ctx.write_json("price.json", &out)?;
    Ok(out)
}

pub fn cmd_hedge(ctx: &Context) -> Result<serde_json::Value> {
    let c = &ctx.config;
    warn_intensity(c);
    let setup = c.hedge_setup();
    setup.validate()?;
    let start = MarketState {
        t: 0.0,
        s: c.model.s0,
        y: c.stable.y0,
        sigma_sq: c.model.sigma0_sq,
        v: 0.0,
    };
    let snapshot = hedging::snapshot(&setup, &start)?;
    let h = &c.hedge;
    let strategies = h
        .strategies
        .iter()
        .map(|&s| hedging::simulate_hedge(&setup, h.n_steps, h.n_paths, ctx.seed, s))
        .collect::<Result<Vec<_>>>()?;
    let mut out = json!({ "snapshot": snapshot, "strategies": strategies });
    if !h.compare_thetas.is_empty() {
        out["comparison"] = serde_json::to_value(compare_hedging(&setup, &h.compare_thetas, h.n_steps, h.n_paths, ctx.seed)?)?;
    }
    ctx.write_json("hedge.json", &out)?;
    Ok(out)
}

fn label(ctx: &Context, series: &PriceSeries) -> Result<LabeledDataset> {
    ctx.config.experiment.label(series)
}

pub fn cmd_features(ctx: &Context, input: Option<&Path>) -> Result<serde_json::Value> {
    let (series, synthetic) = ctx.series(input)?;
    if synthetic {
        series.write_csv(ctx.create("series.csv")?)?;
    }
    let stats = summary_stats(&series);
    let dataset = label(ctx, &series)?;
    dataset.write_csv(ctx.create("dataset.csv")?)?;

    let spec = &ctx.config.experiment;
    let mut zero_base_days = Vec::new();
    if spec.approach == Approach::Volatility {
        let rv = realized_volatility_series(&series, spec.volatility.window)?;
        zero_base_days = rv_return_pct(&rv)?.iter().filter(|r| r.zero_base).map(|r| r.day).collect();
    }
    let flags = json!({
        "zero_base_rv_days": zero_base_days,
        "synthetic_series": synthetic,
    });
    ctx.write_json("flags.json", &flags)?;
    let out = json!({
        "n_prices": series.len(),
        "summary": stats,
        "rows": dataset.len(),
        "window": dataset.window_w,
        "positive_fraction": dataset.positive_fraction(),
        "flags": flags,
    });
    ctx.write_json("summary.json", &out)?;
    Ok(out)
}

fn write_outcomes(ctx: &Context, out: &ExperimentOutput) -> Result<()> {
    out.table().write_csv(ctx.create("report.csv")?)?;
    let reports: Vec<_> = out
        .outcomes
        .iter()
        .map(|o| json!({ "model": o.kind.label(), "report": o.report, "macro_f1": o.macro_f1 }))
        .collect();
    ctx.write_json("report.json", &reports)?;
    for o in &out.outcomes {
        ctx.write_json(&format!("models/{}.json", o.kind.label().to_lowercase()), &o.model)?;
    }
    let mut w = csv::Writer::from_writer(ctx.create("predictions.csv")?);
    let mut header = vec!["origin_index".to_string()];
    for o in &out.outcomes {
        let name = o.kind.label().to_lowercase();
        header.push(format!("{name}_probability"));
        header.push(format!("{name}_theta"));
    }
    w.write_record(&header)?;
    for (r, origin) in out.test_origins.iter().enumerate() {
        let mut rec = vec![origin.to_string()];
        for o in &out.outcomes {
            rec.push(o.probabilities[r].to_string());
            rec.push(o.predictions[r].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn outcome_summary(out: &ExperimentOutput) -> serde_json::Value {
    json!({
        "train_rows": out.train_rows,
        "test_rows": out.test_rows,
        "purged_rows": out.purged_rows,
        "best_model": out.best_model.label(),
        "predicted_theta": out.predicted_theta,
        "models": out.outcomes.iter().map(|o| json!({
            "model": o.kind.label(),
            "macro_f1": o.macro_f1,
            "positive_fraction": o.positive_fraction,
        })).collect::<Vec<_>>(),
    })
}

pub fn cmd_train(ctx: &Context, dataset: &Path) -> Result<serde_json::Value> {
    let data = LabeledDataset::read_csv(fs::File::open(dataset)?)?;
    let out = evaluate_dataset(&ctx.config.experiment, &data)?;
    write_outcomes(ctx, &out)?;
    let summary = outcome_summary(&out);
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}

pub fn cmd_experiment(ctx: &Context, input: Option<&Path>) -> Result<serde_json::Value> {
    let (series, synthetic) = ctx.series(input)?;
    if synthetic {
        series.write_csv(ctx.create("series.csv")?)?;
    }
    let c = &ctx.config;
    let out = run_experiment(&c.experiment, &series)?;
    write_outcomes(ctx, &out)?;
    let mut summary = outcome_summary(&out);
    summary["seed"] = json!(ctx.seed);
    summary["synthetic_series"] = json!(synthetic);
    if c.experiment_hedge.enabled {
        // the predicted theta is treated as the world's; the comparison asks
        // how much hedging with theta = 0 instead would cost
        let world = c.hedge_setup().with_theta(out.predicted_theta);
        let h = &c.experiment_hedge;
        let mut thetas = vec![0.0];
        if out.predicted_theta != 0.0 {
            thetas.push(out.predicted_theta);
        }
        summary["hedging"] = serde_json::to_value(compare_hedging(&world, &thetas, h.n_steps, h.n_paths, ctx.seed)?)?;
    }
    ctx.write_json("summary.json", &summary)?;
    Ok(summary)
}
