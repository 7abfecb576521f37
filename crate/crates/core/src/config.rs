//! Experiment configuration.
//!
//! A single TOML file drives every command. All sections are optional:
//!
//! ```toml
//! output_dir = "runs"            # default: $LOADCAST_OUTPUT_ROOT, then ./loadcast-runs
//!
//! [[stations]]
//! id = "dn01"
//! load = "data/dn01_load.csv"    # timestamp,load_mw
//! temp = "data/dn01_temp.csv"    # timestamp,temp_c; or temp_grid = "grid.txt"
//! lat = -37.8
//! lon = 144.9
//! factors = { poverty = 0.12 }
//!
//! [window]
//! n_points = 32
//! scheme = "eight_type"          # none | three_type | eight_type
//! stride = 1
//! conditions = [{ kind = "instantaneous", lead_hours = 5.0 }]
//!
//! [calendar]
//! holidays = ["2016-01-26"]
//! week_start = "mon"
//!
//! [model]
//! cell_kind = "gru"
//! layer_sizes = [64, 64, 64]
//! dense_sizes = [16, 1]
//! seed = 0
//!
//! [train]                        # epochs, batch_size, learning_rate, beta1, beta2,
//! epochs = 100                   # epsilon, gradient_clip_norm, shuffle_seed
//!
//! [split]
//! train = ["15-16", "16-17", "17-18"]
//! test = ["18-19", "19-20"]      # or preset = "Test 1"
//!
//! [evaluate]
//! checkpoint = "runs/train-.../model.json"
//! exclude = ["22:30", "01:30"]
//!
//! [step1]  lengths = [4, 8, 16, 32, 48], cell_kinds = ["gru", "lstm"]
//! [step2]  schemes = ["none", "three_type", "eight_type"]
//! [step3]  conditions = [...]    # default: none, simultaneous, best leads from the sweep
//! [robustness] presets = ["Original", "Test 1"], plans = [{ name, train, test }]
//! [cost_benefit] annual_consumption_twh, mape_baseline, mape_method, tariff_per_kwh, round_sig_figs
//! [synth]  any generator field; [[synth_stations]] generates several stations
//! ```
//!
//! Overrides use dotted paths with numeric array indices, for example
//! `train.epochs=5` or `stations.0.load="other.csv"`. Relative paths are
//! taken from the config file's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{CostBenefitInput, RotationPlan, RunSetup, SynthSpec};
use crate::features::{CalendarConfig, ConditionKind, DayLabelScheme, Season, SplitTag, TemperatureCondition, WindowSpec};
use crate::ingest::{load_station, StationData, StationMeta, TempSource};
use crate::neural::{CellKind, ModelConfig, TrainConfig};
use crate::time::TimeOfDayWindow;

pub const OUTPUT_ROOT_ENV: &str = "LOADCAST_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationEntry {
    pub id: String,
    pub load: PathBuf,
    #[serde(default)]
    pub temp: Option<PathBuf>,
    #[serde(default)]
    pub temp_grid: Option<PathBuf>,
    #[serde(default)]
    pub lat: f64,
    #[serde(default)]
    pub lon: f64,
    #[serde(default)]
    pub factors: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub n_points: usize,
    pub scheme: DayLabelScheme,
    pub stride: usize,
    pub conditions: Vec<TemperatureCondition>,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection { n_points: 32, scheme: DayLabelScheme::EightType, stride: 1, conditions: vec![] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub cell_kind: CellKind,
    pub layer_sizes: Vec<usize>,
    pub dense_sizes: Vec<usize>,
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::new(CellKind::Gru, 1);
        ModelSection { cell_kind: m.cell_kind, layer_sizes: m.layer_sizes, dense_sizes: m.dense_sizes, seed: m.seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: Vec<Season>,
    pub test: Vec<Season>,
    /// A rotation preset name; replaces `train` and `test`.
    pub preset: Option<String>,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train: (2015..2018).map(Season::new).collect(),
            test: (2018..2020).map(Season::new).collect(),
            preset: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub checkpoint: Option<PathBuf>,
    /// `[start, end)` as `hh:mm` strings; the secondary metrics leave it out.
    pub exclude: Option<[String; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Step1Section {
    pub lengths: Vec<usize>,
    pub cell_kinds: Vec<CellKind>,
}

impl Default for Step1Section {
    fn default() -> Self {
        Step1Section { lengths: vec![4, 8, 16, 32, 48], cell_kinds: vec![CellKind::Gru, CellKind::Lstm] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Step2Section {
    pub schemes: Vec<DayLabelScheme>,
}

impl Default for Step2Section {
    fn default() -> Self {
        Step2Section { schemes: vec![DayLabelScheme::None, DayLabelScheme::ThreeType, DayLabelScheme::EightType] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Step3Section {
    pub conditions: Option<Vec<TemperatureCondition>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub name: String,
    pub train: Vec<Season>,
    pub test: Vec<Season>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSection {
    pub presets: Vec<String>,
    pub plans: Vec<PlanEntry>,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection { presets: RotationPlan::presets().into_iter().map(|p| p.name).collect(), plans: vec![] }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: Option<PathBuf>,
    pub stations: Vec<StationEntry>,
    pub window: WindowSection,
    pub calendar: CalendarConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub split: SplitSection,
    pub evaluate: EvaluateSection,
    pub step1: Step1Section,
    pub step2: Step2Section,
    pub step3: Step3Section,
    pub robustness: RobustnessSection,
    pub cost_benefit: Option<CostBenefitInput>,
    pub synth: SynthSpec,
    pub synth_stations: Vec<SynthSpec>,
}

fn parse_scalar(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply one `dotted.path=value` assignment. Values are TOML literals;
/// anything that does not parse as one is taken as a bare string.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like `key.path=value`"))?;
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty key in override path"));
    }
    let value = parse_scalar(raw.trim());
    let mut slot: &mut toml::Value = root
        .entry(keys[0])
        .or_insert_with(|| if keys.len() > 1 { toml::Value::Table(Default::default()) } else { value.clone() });
    for (depth, key) in keys.iter().enumerate().skip(1) {
        let last = depth + 1 == keys.len();
        let prefix = keys[..depth].join(".");
        slot = match slot {
            toml::Value::Table(t) => t.entry(*key).or_insert_with(|| {
                if last { value.clone() } else { toml::Value::Table(Default::default()) }
            }),
            toml::Value::Array(a) => {
                let i: usize = key.parse().map_err(|_| Error::config(&prefix, format!("`{key}` is not an array index")))?;
                let len = a.len();
                a.get_mut(i).ok_or_else(|| Error::config(&prefix, format!("index {i} out of range (length {len})")))?
            }
            _ => return Err(Error::config(&prefix, "is not a table or array")),
        };
    }
    *slot = value;
    Ok(())
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl ExperimentConfig {
    /// Parse, apply overrides, resolve relative paths and validate.
    pub fn from_toml_str(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::config("<file>", e.to_string().trim().to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            let msg = msg.split("\nin `").next().unwrap_or_default().trim().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, msg)
        })?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base, overrides)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &mut self.output_dir {
            resolve(base, p);
        }
        for s in &mut self.stations {
            resolve(base, &mut s.load);
            for p in [&mut s.temp, &mut s.temp_grid].into_iter().flatten() {
                resolve(base, p);
            }
        }
        if let Some(p) = &mut self.evaluate.checkpoint {
            resolve(base, p);
        }
    }

    /// Semantic checks; every failure names the offending field.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for (i, s) in self.stations.iter().enumerate() {
            let at = |f: &str| format!("stations.{i}.{f}");
            if s.id.trim().is_empty() {
                return Err(Error::config(at("id"), "must not be empty"));
            }
            if !ids.insert(&s.id) {
                return Err(Error::config(at("id"), format!("duplicate station id `{}`", s.id)));
            }
            match (&s.temp, &s.temp_grid) {
                (Some(_), Some(_)) => return Err(Error::config(at("temp"), "give either `temp` or `temp_grid`, not both")),
                (None, None) => return Err(Error::config(at("temp"), "a `temp` or `temp_grid` path is required")),
                _ => {}
            }
            if !(-90.0..=90.0).contains(&s.lat) || !(-180.0..=180.0).contains(&s.lon) {
                return Err(Error::config(at("lat"), format!("({}, {}) is not a coordinate", s.lat, s.lon)));
            }
        }
        for (i, c) in self.window.conditions.iter().enumerate() {
            c.validate().map_err(|m| Error::config(format!("window.conditions.{i}"), m))?;
        }
        if self.window.stride == 0 {
            return Err(Error::config("window.stride", "must be at least 1"));
        }
        self.window_spec().validate().map_err(|m| Error::config("window", m))?;
        self.model_config(1).validate().map_err(|m| Error::config("model", m))?;
        self.train.validate().map_err(|(f, m)| Error::config(format!("train.{f}"), m))?;
        self.seasons()?;
        self.exclusion()?;
        if self.step1.lengths.is_empty() || self.step1.lengths.contains(&0) {
            return Err(Error::config("step1.lengths", "needs lengths of at least 1"));
        }
        if self.step1.cell_kinds.is_empty() {
            return Err(Error::config("step1.cell_kinds", "must not be empty"));
        }
        if self.step2.schemes.is_empty() {
            return Err(Error::config("step2.schemes", "must not be empty"));
        }
        if let Some(conds) = &self.step3.conditions {
            for (i, c) in conds.iter().enumerate() {
                c.validate().map_err(|m| Error::config(format!("step3.conditions.{i}"), m))?;
            }
            for kind in [ConditionKind::None, ConditionKind::Simultaneous] {
                if !conds.iter().any(|c| c.kind == kind) {
                    return Err(Error::config("step3.conditions", format!("must include `{}`", kind.name())));
                }
            }
        }
        self.rotation_plans()?;
        if let Some(cb) = &self.cost_benefit {
            if cb.mape_baseline < cb.mape_method {
                return Err(Error::config("cost_benefit.mape_baseline", "must not be below mape_method"));
            }
        }
        self.synth.validate().map_err(|(f, m)| Error::config(format!("synth.{f}"), m))?;
        for (i, s) in self.synth_stations.iter().enumerate() {
            s.validate().map_err(|(f, m)| Error::config(format!("synth_stations.{i}.{f}"), m))?;
        }
        Ok(())
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec::new(self.window.n_points, self.window.scheme, &self.window.conditions).with_stride(self.window.stride)
    }

    pub fn model_config(&self, input_dim: usize) -> ModelConfig {
        ModelConfig {
            cell_kind: self.model.cell_kind,
            layer_sizes: self.model.layer_sizes.clone(),
            dense_sizes: self.model.dense_sizes.clone(),
            input_dim,
            seed: self.model.seed,
        }
    }

    /// Train and test seasons.
    pub fn seasons(&self) -> Result<(BTreeSet<Season>, BTreeSet<Season>)> {
        let (train, test): (BTreeSet<Season>, BTreeSet<Season>) = match &self.split.preset {
            Some(name) => {
                let plan = RotationPlan::preset(name)
                    .ok_or_else(|| Error::config("split.preset", format!("unknown preset `{name}`")))?;
                (plan.train_seasons(), plan.test_seasons())
            }
            None => (self.split.train.iter().copied().collect(), self.split.test.iter().copied().collect()),
        };
        if train.is_empty() {
            return Err(Error::config("split.train", "needs at least one season"));
        }
        if test.is_empty() {
            return Err(Error::config("split.test", "needs at least one season"));
        }
        if let Some(s) = train.intersection(&test).next() {
            return Err(Error::config("split.test", format!("season {s} is also a training season")));
        }
        Ok((train, test))
    }

    pub fn exclusion(&self) -> Result<Option<TimeOfDayWindow>> {
        self.evaluate
            .exclude
            .as_ref()
            .map(|[a, b]| {
                TimeOfDayWindow::parse(a, b)
                    .ok_or_else(|| Error::config("evaluate.exclude", format!("bad time of day in [{a}, {b}]")))
            })
            .transpose()
    }

    pub fn rotation_plans(&self) -> Result<Vec<RotationPlan>> {
        let mut plans = Vec::new();
        for (i, name) in self.robustness.presets.iter().enumerate() {
            plans.push(
                RotationPlan::preset(name)
                    .ok_or_else(|| Error::config(format!("robustness.presets.{i}"), format!("unknown preset `{name}`")))?,
            );
        }
        for (i, p) in self.robustness.plans.iter().enumerate() {
            let assignments: Vec<(Season, SplitTag)> = p
                .train
                .iter()
                .map(|&s| (s, SplitTag::Train))
                .chain(p.test.iter().map(|&s| (s, SplitTag::Test)))
                .collect();
            let plan = RotationPlan::new(&p.name, &assignments);
            plan.validate().map_err(|m| Error::config(format!("robustness.plans.{i}"), m))?;
            plans.push(plan);
        }
        if plans.is_empty() {
            return Err(Error::config("robustness", "needs at least one preset or plan"));
        }
        Ok(plans)
    }

    /// Shared settings for the study harnesses.
    pub fn run_setup(&self) -> Result<RunSetup> {
        let window = self.window_spec();
        let (train_seasons, test_seasons) = self.seasons()?;
        Ok(RunSetup {
            model: self.model_config(window.feature_rows()),
            window,
            calendar: self.calendar.clone(),
            train: self.train.clone(),
            train_seasons,
            test_seasons,
            exclusion: self.exclusion()?,
        })
    }

    /// Parse and align every configured station.
    pub fn load_stations(&self) -> Result<Vec<StationData>> {
        if self.stations.is_empty() {
            return Err(Error::config("stations", "no stations configured"));
        }
        self.stations
            .iter()
            .map(|s| {
                let meta = StationMeta {
                    station_id: s.id.clone(),
                    lat: s.lat,
                    lon: s.lon,
                    region_factors: s.factors.clone(),
                };
                let source = match (&s.temp, &s.temp_grid) {
                    (Some(p), _) => TempSource::PointCsv(p.clone()),
                    (_, Some(p)) => TempSource::Grid(p.clone()),
                    _ => unreachable!("validated"),
                };
                load_station(meta, &s.load, &source)
            })
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is serialisable")
    }
}
