//! The `loadcast` command.
//!
//! Every invocation writes into a fresh `<command>-<timestamp>` directory
//! under the output root: `--output`, else the config's `output_dir`, else
//! `$LOADCAST_OUTPUT_ROOT`, else `./loadcast-runs`. Each run leaves a
//! `report.json` holding the resolved configuration and the command's
//! results, plus tidy CSV files for plotting.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ExperimentConfig, OUTPUT_ROOT_ENV};
use crate::error::{Error, Result};
use crate::experiments::{
    cost_benefit, evaluate, rotation_robustness, run_configuration, step1_input_length_sweep,
    step2_calendar_comparison, step3_panel, step3_temperature_conditions, step4_generalise, sweep_all, synth_generate,
    Forecast,
};
use crate::features::{make_split_with_scaler, SplitTag};
use crate::ingest::{write_file, write_load_csv, write_temp_csv, StationData};
use crate::neural::{load_checkpoint, predict, save_checkpoint, Checkpoint};
use crate::stats::{best_conditions, classify_group, cqv, daily_profile, mean};

#[derive(Debug, Parser)]
#[command(name = "loadcast", version, about = "Multi-factor recurrent short-term load forecasting")]
pub struct Cli {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config value, e.g. `--set train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output root; a timestamped run directory is created inside it.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Increase log verbosity.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse, gap-fill and align station data; write daily profiles.
    Ingest,
    /// Lead sweeps, best conditions and group per station.
    Sweep,
    /// Train one model per station and save checkpoints.
    Train,
    /// Evaluate a saved checkpoint on the test seasons.
    Evaluate,
    /// Input-length and cell-type comparison.
    Step1,
    /// Day-label scheme comparison.
    Step2,
    /// Temperature-condition comparison.
    Step3,
    /// Multi-station generalisation table.
    Step4,
    /// Train/test season rotation.
    Robustness,
    /// Annual saving from a MAPE reduction.
    CostBenefit,
    /// Generate synthetic stations.
    Synth,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Sweep => "sweep",
            Command::Train => "train",
            Command::Evaluate => "evaluate",
            Command::Step1 => "step1",
            Command::Step2 => "step2",
            Command::Step3 => "step3",
            Command::Step4 => "step4",
            Command::Robustness => "robustness",
            Command::CostBenefit => "cost-benefit",
            Command::Synth => "synth",
        }
    }
}

/// Files written by one run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_file(&path, contents)?;
        self.files.push(name.to_string());
        Ok(path)
    }

    fn checkpoint(&mut self, name: &str, ck: &Checkpoint) -> Result<PathBuf> {
        let path = self.dir.join(name);
        save_checkpoint(&path, ck)?;
        self.files.push(name.to_string());
        Ok(path)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: serde_json::Value,
    report: T,
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Json { context: "encoding report".into(), source: e })
}

/// Create `<root>/<command>-<timestamp>[-k]`, never reusing a directory.
fn fresh_dir(root: &Path, command: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(format!("creating {}", root.display()), e))?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    for k in 0.. {
        let name = if k == 0 { format!("{command}-{stamp}") } else { format!("{command}-{stamp}-{k}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(format!("creating {}", dir.display()), e)),
        }
    }
    unreachable!()
}

fn output_root(flag: Option<&Path>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("loadcast-runs"))
}

/// Load the configuration and execute one command.
pub fn run(
    command: Command,
    config_path: Option<&Path>,
    overrides: &[String],
    output: Option<&Path>,
) -> Result<RunArtifacts> {
    let cfg = match config_path {
        Some(p) => ExperimentConfig::load(p, overrides)?,
        None => ExperimentConfig::from_toml_str("", Path::new("."), overrides)?,
    };
    // Load inputs before creating the run directory so bad data leaves no trace.
    let stations = match command {
        Command::CostBenefit | Command::Synth => vec![],
        _ => cfg.load_stations()?,
    };
    let dir = fresh_dir(&output_root(output, &cfg), command.name())?;
    log::info!("writing to {}", dir.display());
    let mut out = Output { dir, files: vec![] };
    let report = execute(command, &cfg, &stations, &mut out)?;
    let envelope = Envelope { command: command.name(), config: cfg.to_json_value(), report };
    out.write("report.json", &json(&envelope)?)?;
    Ok(RunArtifacts { dir: out.dir, files: out.files })
}

fn execute(command: Command, cfg: &ExperimentConfig, stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    match command {
        Command::Synth => synth(cfg, out),
        Command::Ingest => ingest(cfg, stations, out),
        Command::Sweep => sweep(stations, out),
        Command::Train => train(cfg, stations, out),
        Command::Evaluate => evaluate_checkpoint(cfg, stations, out),
        Command::Step1 => {
            let setup = cfg.run_setup()?;
            let mut reports = Vec::new();
            for s in stations {
                let r = step1_input_length_sweep(&s.load, &s.temp, &setup, &cfg.step1.lengths, &cfg.step1.cell_kinds)?;
                out.write(&format!("{}_step1.csv", s.meta.station_id), &r.to_csv())?;
                reports.push(station_entry(s, &r));
            }
            Ok(value(&reports))
        }
        Command::Step2 => {
            let setup = cfg.run_setup()?;
            let mut reports = Vec::new();
            for s in stations {
                let r = step2_calendar_comparison(&s.load, &s.temp, &setup, &cfg.step2.schemes)?;
                out.write(&format!("{}_step2.csv", s.meta.station_id), &r.to_csv())?;
                out.write(&format!("{}_step2_kde.csv", s.meta.station_id), &r.kde_csv())?;
                reports.push(station_entry(s, &r));
            }
            Ok(value(&reports))
        }
        Command::Step3 => step3(cfg, stations, out),
        Command::Step4 => {
            let r = step4_generalise(stations, &cfg.run_setup()?)?;
            out.write("step4_table.csv", &r.to_csv())?;
            Ok(value(&r))
        }
        Command::Robustness => {
            let setup = cfg.run_setup()?;
            let plans = cfg.rotation_plans()?;
            let mut reports = Vec::new();
            for s in stations {
                let r = rotation_robustness(&s.load, &s.temp, &setup, &plans)?;
                out.write(&format!("{}_robustness.csv", s.meta.station_id), &r.to_csv())?;
                reports.push(station_entry(s, &r));
            }
            Ok(value(&reports))
        }
        Command::CostBenefit => {
            let input = cfg
                .cost_benefit
                .as_ref()
                .ok_or_else(|| Error::config("cost_benefit", "section is required for this command"))?;
            let r = cost_benefit(input)?;
            out.write(
                "cost_benefit.csv",
                &format!("energy_reduction_twh,saving,saving_millions\n{},{},{}\n", r.energy_reduction_twh, r.saving, r.saving_millions),
            )?;
            println!("annual saving: {:.2} million ({} TWh)", r.saving_millions, r.energy_reduction_twh);
            Ok(value(&r))
        }
    }
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("reports are serialisable")
}

fn station_entry<T: Serialize>(s: &StationData, report: &T) -> serde_json::Value {
    serde_json::json!({ "station": s.meta.station_id, "result": report })
}

fn synth(cfg: &ExperimentConfig, out: &mut Output) -> Result<serde_json::Value> {
    let specs = if cfg.synth_stations.is_empty() { vec![cfg.synth.clone()] } else { cfg.synth_stations.clone() };
    let mut truths = Vec::new();
    let mut toml = String::new();
    for spec in &specs {
        let g = synth_generate(spec)?;
        let id = &spec.station_id;
        let load = format!("{id}_load.csv");
        let temp = format!("{id}_temp.csv");
        write_load_csv(&out.dir.join(&load), &g.load)?;
        write_temp_csv(&out.dir.join(&temp), &g.temp)?;
        out.files.extend([load.clone(), temp.clone()]);
        out.write(&format!("{id}_truth.json"), &json(&g.truth)?)?;
        let _ = writeln!(toml, "[[stations]]\nid = \"{id}\"\nload = \"{load}\"\ntemp = \"{temp}\"\n");
        truths.push(g.truth);
    }
    out.write("stations.toml", &toml)?;
    Ok(value(&truths))
}

fn ingest(cfg: &ExperimentConfig, stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    let mut rows = Vec::new();
    for s in stations {
        let id = &s.meta.station_id;
        write_load_csv(&out.dir.join(format!("{id}_load.csv")), &s.load)?;
        write_temp_csv(&out.dir.join(format!("{id}_temp.csv")), &s.temp)?;
        out.files.extend([format!("{id}_load.csv"), format!("{id}_temp.csv")]);
        let values = s.load.values();
        let profile = daily_profile(&s.load.times(), &values, &cfg.calendar).ok();
        if let Some(p) = &profile {
            out.write(&format!("{id}_profile.csv"), &p.to_csv())?;
        }
        rows.push(serde_json::json!({
            "station": id,
            "points": s.load.len(),
            "gaps": s.load.gaps.len(),
            "first": s.load.points.first().map(|p| p.0),
            "last": s.load.points.last().map(|p| p.0),
            "load_mean_mw": mean(&values),
            "load_cqv": cqv(&values).ok(),
            "temp_mean_c": mean(&s.temp.values()),
        }));
    }
    Ok(serde_json::Value::Array(rows))
}

fn sweep(stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    let mut rows = Vec::new();
    for s in stations {
        let id = &s.meta.station_id;
        let sweeps = sweep_all(&s.load, &s.temp)?;
        for sw in &sweeps {
            out.write(&format!("{id}_sweep_{}.csv", sw.kind.name()), &sw.to_csv())?;
        }
        let best = best_conditions(&sweeps)?;
        rows.push(serde_json::json!({
            "station": id,
            "samples": sweeps[0].samples,
            "group": classify_group(&best),
            "best_rho_condition": best.best_rho_condition(),
            "best_conditions": best,
        }));
    }
    Ok(serde_json::Value::Array(rows))
}

fn train(cfg: &ExperimentConfig, stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    let setup = cfg.run_setup()?;
    let mut rows = Vec::new();
    for s in stations {
        let id = &s.meta.station_id;
        let mut run = run_configuration(&s.load, &s.temp, &setup, &setup.window, id.clone())?;
        let model = run.trained.take().expect("fresh run carries its model");
        out.write(&format!("{id}_forecast.csv"), &run.forecast.to_csv())?;
        out.checkpoint(
            &format!("{id}_model.json"),
            &Checkpoint { model: model.clone(), window: Some(setup.window.clone()), calendar: Some(setup.calendar.clone()) },
        )?;
        rows.push(serde_json::json!({ "station": id, "run": run, "loss_trace": model.loss_trace }));
    }
    Ok(serde_json::Value::Array(rows))
}

fn evaluate_checkpoint(cfg: &ExperimentConfig, stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    let path = cfg
        .evaluate
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::config("evaluate.checkpoint", "a checkpoint path is required"))?;
    let ck = load_checkpoint(path)?;
    let window = ck.window.clone().unwrap_or_else(|| cfg.window_spec());
    let calendar = ck.calendar.clone().unwrap_or_else(|| cfg.calendar.clone());
    let (_, test_seasons) = cfg.seasons()?;
    let exclusion = cfg.exclusion()?;
    let mut rows = Vec::new();
    for s in stations {
        let id = &s.meta.station_id;
        let data = make_split_with_scaler(&s.load, &s.temp, &window, &calendar, &test_seasons, &ck.model.scaler, SplitTag::Test)?;
        let forecast = Forecast { times: data.target_times(), actual: data.targets_mw.clone(), predicted: predict(&ck.model, &data)? };
        let metrics = evaluate(&forecast.times, &forecast.actual, &forecast.predicted, None)?;
        let excluding = exclusion.map(|w| evaluate(&forecast.times, &forecast.actual, &forecast.predicted, Some(w))).transpose()?;
        out.write(&format!("{id}_forecast.csv"), &forecast.to_csv())?;
        out.write(&format!("{id}_error_profile.csv"), &metrics.profile_csv())?;
        println!("{id}: MAPE {:.3}%  MSE {:.4} MW²", metrics.mape, metrics.mse);
        rows.push(serde_json::json!({
            "station": id,
            "checkpoint_window": window,
            "metrics": metrics,
            "metrics_excluding": excluding,
        }));
    }
    Ok(serde_json::Value::Array(rows))
}

fn step3(cfg: &ExperimentConfig, stations: &[StationData], out: &mut Output) -> Result<serde_json::Value> {
    let setup = cfg.run_setup()?;
    let mut rows = Vec::new();
    for s in stations {
        let id = &s.meta.station_id;
        let best = best_conditions(&sweep_all(&s.load, &s.temp)?)?;
        let panel = cfg.step3.conditions.clone().unwrap_or_else(|| step3_panel(&best));
        let mut r = step3_temperature_conditions(&s.load, &s.temp, &setup, &panel, Some(&best))?;
        out.write(&format!("{id}_step3.csv"), &r.to_csv())?;
        out.write(&format!("{id}_step3_profile.csv"), &r.profile_csv())?;
        let keep = r.rows.iter().position(|x| x.roles.iter().any(|role| role == "best_rho"))
            .or_else(|| r.rows.iter().position(|x| x.label == r.best_label));
        if let Some(i) = keep {
            let run = &mut r.runs[i];
            let model = run.trained.take().expect("fresh run carries its model");
            out.checkpoint(
                &format!("{id}_step3_model.json"),
                &Checkpoint { model, window: Some(run.window.clone()), calendar: Some(setup.calendar.clone()) },
            )?;
        }
        rows.push(station_entry(s, &r));
    }
    Ok(serde_json::Value::Array(rows))
}

/// Parse arguments, run, and map the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli.command, cli.config.as_deref(), &cli.overrides, cli.output.as_deref()) {
        Ok(a) => {
            println!("{}", a.dir.display());
            0
        }
        Err(e) => {
            eprintln!("loadcast {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
