//! Fixed-length feature encoding of a scenario and z-score normalization.
//!
//! Layout (36 values):
//!
//! | index | feature |
//! |-------|---------|
//! | 0..=6 | span count, length mean/min/max/variance, mean cumulative length, mean alpha |
//! | 7..=9 | CUT launch power (dBm), symbol rate (GBd), offset from band center (GHz) |
//! | 10..=11 | channel count, spectral occupancy |
//! | 12..=23 | (symbol rate, power, signed distance) of the 2nd-left, 1st-left, 1st-right, 2nd-right neighbors |
//! | 24..=33 | channel counts in ten 150 GHz windows tiling `[f_cut - 750, f_cut + 750)` GHz |
//! | 34 | RMS launch power of all other channels (dBm) |
//! | 35 | `10 log10 sum_j P_j^2 / abs(df_j)` over all other channels, P in mW, df in GHz |
//!
//! Missing neighbors are encoded as rate 0, power -60 dBm and +-500 GHz. A CUT
//! alone in the band gets -60 for both grid power terms.
//!
//! Networks see [`model_input`]: the same vector with span count and the span
//! length statistics on a log scale, which spreads short links out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linkmodel::{neighbor_channels, offset_ghz, Link, Scenario, C_BAND_CENTER_THZ};

pub const N_FEATURES: usize = 36;
pub const NEIGHBORS_PER_SIDE: usize = 2;
pub const N_WINDOWS: usize = 10;
pub const WINDOW_GHZ: f64 = 150.0;

pub const IDX_N_SPANS: usize = 0;
pub const IDX_LEN_MEAN: usize = 1;
pub const IDX_LEN_MIN: usize = 2;
pub const IDX_LEN_MAX: usize = 3;
pub const IDX_LEN_VAR: usize = 4;
pub const IDX_CUMSUM_MEAN: usize = 5;
pub const IDX_ALPHA_MEAN: usize = 6;
pub const IDX_CUT_POWER: usize = 7;
pub const IDX_CUT_RATE: usize = 8;
pub const IDX_CUT_OFFSET: usize = 9;
pub const IDX_CHANNEL_COUNT: usize = 10;
pub const IDX_OCCUPANCY: usize = 11;
pub const IDX_NEIGHBORS: usize = 12;
pub const IDX_WINDOWS: usize = IDX_NEIGHBORS + 3 * 2 * NEIGHBORS_PER_SIDE;
pub const IDX_GRID_RMS_POWER: usize = IDX_WINDOWS + N_WINDOWS;
pub const IDX_GRID_LOAD: usize = IDX_GRID_RMS_POWER + 1;

pub const ABSENT_RATE: f64 = 0.0;
pub const ABSENT_POWER_DBM: f64 = -60.0;
pub const ABSENT_DISTANCE_GHZ: f64 = 500.0;
pub const ABSENT_LOAD_DB: f64 = -60.0;

const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("need at least 2 records to fit normalization, got {0}")]
    TooFewRecords(usize),
    #[error("features and targets differ in length ({features} vs {targets})")]
    LengthMismatch { features: usize, targets: usize },
    #[error("target eta must be positive and finite, got {0}")]
    BadTarget(f64),
}

/// Raw (unnormalized) model input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn window_counts(&self) -> &[f64] {
        &self.0[IDX_WINDOWS..IDX_WINDOWS + N_WINDOWS]
    }
}

/// Mean of the running sums of `xs`.
pub fn cumsum_mean(xs: &[f64]) -> f64 {
    let mut running = 0.0;
    let mut total = 0.0;
    for x in xs {
        running += x;
        total += running;
    }
    total / xs.len() as f64
}

fn link_features(link: &Link, out: &mut [f64]) {
    let lengths: Vec<f64> = link.spans().iter().map(|s| s.length).collect();
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    out[IDX_N_SPANS] = n;
    out[IDX_LEN_MEAN] = mean;
    out[IDX_LEN_MIN] = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    out[IDX_LEN_MAX] = lengths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out[IDX_LEN_VAR] = var;
    out[IDX_CUMSUM_MEAN] = cumsum_mean(&lengths);
    out[IDX_ALPHA_MEAN] = link.spans().iter().map(|s| s.alpha).sum::<f64>() / n;
}

pub fn extract(scenario: &Scenario) -> FeatureVector {
    let mut f = [0.0; N_FEATURES];
    link_features(&scenario.link, &mut f);

    let plan = scenario.plan.canonical();
    let cut = plan.cut();
    f[IDX_CUT_POWER] = cut.launch_power;
    f[IDX_CUT_RATE] = cut.symbol_rate;
    f[IDX_CUT_OFFSET] = offset_ghz(C_BAND_CENTER_THZ, cut.center_frequency);
    f[IDX_CHANNEL_COUNT] = plan.len() as f64;
    f[IDX_OCCUPANCY] = plan.occupancy();

    let layout = neighbor_channels(&plan, NEIGHBORS_PER_SIDE).layout(NEIGHBORS_PER_SIDE);
    for (slot, neighbor) in layout.iter().enumerate() {
        let base = IDX_NEIGHBORS + 3 * slot;
        let side = if slot < NEIGHBORS_PER_SIDE { -1.0 } else { 1.0 };
        let values = match neighbor {
            Some(c) => [
                c.symbol_rate,
                c.launch_power,
                offset_ghz(cut.center_frequency, c.center_frequency),
            ],
            None => [ABSENT_RATE, ABSENT_POWER_DBM, side * ABSENT_DISTANCE_GHZ],
        };
        f[base..base + 3].copy_from_slice(&values);
    }

    let half_span = WINDOW_GHZ * N_WINDOWS as f64 / 2.0;
    for c in &plan.channels {
        let d = offset_ghz(cut.center_frequency, c.center_frequency) + half_span;
        if d >= 0.0 {
            let w = (d / WINDOW_GHZ).floor() as usize;
            if w < N_WINDOWS {
                f[IDX_WINDOWS + w] += 1.0;
            }
        }
    }

    let mut sum_sq = 0.0;
    let mut load = 0.0;
    for (i, c) in plan.channels.iter().enumerate() {
        if i != plan.cut_index {
            let p_mw = 10f64.powf(c.launch_power / 10.0);
            sum_sq += p_mw * p_mw;
            load += p_mw * p_mw / offset_ghz(cut.center_frequency, c.center_frequency).abs();
        }
    }
    let others = plan.len() - 1;
    if others == 0 {
        f[IDX_GRID_RMS_POWER] = ABSENT_POWER_DBM;
        f[IDX_GRID_LOAD] = ABSENT_LOAD_DB;
    } else {
        f[IDX_GRID_RMS_POWER] = 5.0 * (sum_sq / others as f64).log10();
        f[IDX_GRID_LOAD] = 10.0 * load.log10();
    }
    FeatureVector(f)
}

/// Columns replaced by their natural log in [`log_scale`]; the length
/// variance uses `ln(1 + var)`.
pub const LOG_SCALED: [usize; 5] = [IDX_N_SPANS, IDX_LEN_MEAN, IDX_LEN_MIN, IDX_LEN_MAX, IDX_CUMSUM_MEAN];

pub fn log_scale(v: &FeatureVector) -> FeatureVector {
    let mut out = *v;
    for k in LOG_SCALED {
        out.0[k] = v.0[k].ln();
    }
    out.0[IDX_LEN_VAR] = v.0[IDX_LEN_VAR].ln_1p();
    out
}

/// Raw features with link statistics log-scaled, ready for normalization.
pub fn model_input(scenario: &Scenario) -> FeatureVector {
    log_scale(&extract(scenario))
}

/// Z-score statistics of the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// Mean of log10(eta) over the training split.
    pub target_mean: f64,
    /// Standard deviation of log10(eta) over the training split.
    pub target_std: f64,
}

/// Mean and population standard deviation. Sub-floor deviations become 1 so
/// constant columns are centered but not scaled.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mut mean = values.clone().sum::<f64>() / n;
    mean += values.clone().map(|v| v - mean).sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std < STD_FLOOR { 1.0 } else { std })
}

impl NormStats {
    pub fn fit(features: &[FeatureVector], etas: &[f64]) -> Result<Self, FeatureError> {
        if features.len() != etas.len() {
            return Err(FeatureError::LengthMismatch {
                features: features.len(),
                targets: etas.len(),
            });
        }
        if features.len() < 2 {
            return Err(FeatureError::TooFewRecords(features.len()));
        }
        if let Some(bad) = etas.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(FeatureError::BadTarget(*bad));
        }
        let mut feature_mean = Vec::with_capacity(N_FEATURES);
        let mut feature_std = Vec::with_capacity(N_FEATURES);
        for k in 0..N_FEATURES {
            let (m, s) = mean_std(features.iter().map(|f| f.0[k]));
            feature_mean.push(m);
            feature_std.push(s);
        }
        let (target_mean, target_std) = mean_std(etas.iter().map(|e| e.log10()));
        Ok(Self {
            feature_mean,
            feature_std,
            target_mean,
            target_std,
        })
    }

    pub fn normalize(&self, v: &FeatureVector) -> [f64; N_FEATURES] {
        let mut out = [0.0; N_FEATURES];
        self.normalize_into(v, &mut out);
        out
    }

    pub fn normalize_into(&self, v: &FeatureVector, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate().take(N_FEATURES) {
            *o = (v.0[k] - self.feature_mean[k]) / self.feature_std[k];
        }
    }

    /// eta (1/W^2) to z-scored log10 units.
    pub fn normalize_target(&self, eta: f64) -> f64 {
        (eta.log10() - self.target_mean) / self.target_std
    }

    /// Inverse of [`normalize_target`](Self::normalize_target).
    pub fn denormalize_target(&self, y: f64) -> f64 {
        10f64.powf(y * self.target_std + self.target_mean)
    }
}
