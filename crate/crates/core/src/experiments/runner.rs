//! Train-and-evaluate for one configuration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricsReport};
use crate::error::{Error, Result};
use crate::features::{make_dataset, CalendarConfig, DayLabelScheme, Season, WindowSpec};
use crate::ingest::{LoadSeries, TempSeries};
use crate::neural::{predict, train, CellKind, ModelConfig, TrainConfig, TrainedModel};
use crate::time::{Instant, TimeOfDayWindow};

/// Everything shared by the configurations a study compares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSetup {
    /// Base window; studies replace the field they vary.
    pub window: WindowSpec,
    pub calendar: CalendarConfig,
    /// Base model; `input_dim` is set from the window.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub train_seasons: BTreeSet<Season>,
    pub test_seasons: BTreeSet<Season>,
    /// Time-of-day span left out of the secondary metrics.
    pub exclusion: Option<TimeOfDayWindow>,
}

impl RunSetup {
    /// A small GRU and short training, sized for synthetic runs that finish
    /// in seconds. Trains on 15-16 to 17-18 and tests on 18-19 and 19-20.
    pub fn desk(seed: u64) -> Self {
        let window = WindowSpec::new(16, DayLabelScheme::EightType, &[]).with_stride(4);
        RunSetup {
            model: ModelConfig {
                layer_sizes: vec![16],
                dense_sizes: vec![8, 1],
                ..ModelConfig::new(CellKind::Gru, window.feature_rows()).with_seed(seed)
            },
            window,
            calendar: CalendarConfig::default(),
            train: TrainConfig { epochs: 10, batch_size: 32, learning_rate: 3e-3, shuffle_seed: seed, ..Default::default() },
            train_seasons: (2015..2018).map(Season::new).collect(),
            test_seasons: (2018..2020).map(Season::new).collect(),
            exclusion: None,
        }
    }

    /// Model configuration for windows shaped like `window`.
    pub fn model_for(&self, window: &WindowSpec) -> ModelConfig {
        ModelConfig { input_dim: window.feature_rows(), ..self.model.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Forecast {
    pub times: Vec<Instant>,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl Forecast {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp,actual_mw,predicted_mw\n");
        for ((t, a), p) in self.times.iter().zip(&self.actual).zip(&self.predicted) {
            out.push_str(&format!("{t},{a},{p}\n"));
        }
        out
    }

    /// Signed percentage errors, `100 · (ŷ − y) / y`.
    pub fn signed_pct_errors(&self) -> Vec<f64> {
        self.actual.iter().zip(&self.predicted).map(|(a, p)| 100.0 * (p - a) / a).collect()
    }
}

/// Result of one trained configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub label: String,
    pub window: WindowSpec,
    pub model: ModelConfig,
    pub shuffle_seed: u64,
    pub train_windows: usize,
    pub test_windows: usize,
    pub final_train_loss: Option<f64>,
    pub metrics: MetricsReport,
    /// Metrics with the setup's exclusion window removed.
    pub metrics_excluding: Option<MetricsReport>,
    #[serde(skip)]
    pub forecast: Forecast,
    #[serde(skip)]
    pub trained: Option<TrainedModel>,
}

/// Train from scratch on the setup's training seasons and evaluate on its
/// test seasons.
pub fn run_configuration(
    load: &LoadSeries,
    temp: &TempSeries,
    setup: &RunSetup,
    window: &WindowSpec,
    label: impl Into<String>,
) -> Result<RunOutcome> {
    let label = label.into();
    window.validate().map_err(|m| Error::config("window", m))?;
    let model_cfg = setup.model_for(window);
    let (train_set, test_set) =
        make_dataset(load, temp, window, &setup.calendar, &setup.train_seasons, &setup.test_seasons)?;
    log::info!("{label}: {} train / {} test windows", train_set.len(), test_set.len());
    let model = train(&train_set, &setup.train, &model_cfg)?;
    let forecast = Forecast {
        times: test_set.target_times(),
        actual: test_set.targets_mw.clone(),
        predicted: predict(&model, &test_set)?,
    };
    let metrics = evaluate(&forecast.times, &forecast.actual, &forecast.predicted, None)?;
    let metrics_excluding = setup
        .exclusion
        .map(|w| evaluate(&forecast.times, &forecast.actual, &forecast.predicted, Some(w)))
        .transpose()?;
    Ok(RunOutcome {
        label,
        window: window.clone(),
        model: model_cfg,
        shuffle_seed: setup.train.shuffle_seed,
        train_windows: train_set.len(),
        test_windows: test_set.len(),
        final_train_loss: model.loss_trace.last().copied(),
        metrics,
        metrics_excluding,
        forecast,
        trained: Some(model),
    })
}

/// Every compared run must share the setup's seeds.
pub(crate) fn check_seeds<'a>(setup: &RunSetup, runs: impl IntoIterator<Item = &'a RunOutcome>) -> Result<()> {
    for r in runs {
        if r.model.seed != setup.model.seed || r.shuffle_seed != setup.train.shuffle_seed {
            return Err(Error::Invalid(format!("run `{}` did not use the shared seeds", r.label)));
        }
    }
    Ok(())
}
